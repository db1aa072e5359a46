#![allow(dead_code)]

use proptest::prelude::*;
use weakval_core::qcore::{Operator, OperatorKind, PureState, C64};
use weakval_core::weakval::PrePostSelection;

pub fn state(dim: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-zero", |v| {
            v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
        })
        .prop_map(|v| {
            PureState::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
                .unwrap()
                .normalize()
                .unwrap()
        })
}

pub fn qubit() -> impl Strategy<Value = PureState> {
    state(2)
}

/// Random hermitian operator of dimension `dim` with entries in [-2, 2].
pub fn hermitian(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), dim * dim).prop_map(move |v| {
        let m: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let op = Operator::new(dim, m, OperatorKind::General).unwrap();
        op.add(&op.adjoint())
            .unwrap()
            .scale_real(0.5)
            .with_kind(OperatorKind::Hermitian)
    })
}

/// Pre/post-selection pairs kept away from orthogonality.
pub fn selection() -> impl Strategy<Value = PrePostSelection> {
    (qubit(), qubit())
        .prop_filter("non-orthogonal", |(i, f)| {
            f.inner(i).unwrap().norm_sqr() > 1e-3
        })
        .prop_map(|(i, f)| PrePostSelection::new(i, f).unwrap())
}
