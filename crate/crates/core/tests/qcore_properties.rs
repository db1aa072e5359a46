mod common;

use proptest::prelude::*;
use weakval_core::qcore::{
    apply, exp_hermitian, partial_trace_system, project, tensor, DensityMatrix, Operator, Subsystem,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unitaries_preserve_norm(h in common::hermitian(4), s in common::state(4), t in -3.0f64..3.0) {
        let u = exp_hermitian(&h, t).unwrap();
        prop_assert!((apply(&u, &s).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_then_project_returns_pointer(a in common::qubit(), b in common::qubit()) {
        let p = project(&tensor(&a, &b).unwrap(), &a, Subsystem::System).unwrap();
        prop_assert!((p.probability - 1.0).abs() < 1e-12);
        let r = p.residual.unwrap();
        prop_assert!((r.overlap(&b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_traces_to_system(a in common::qubit(), b in common::qubit()) {
        let rho = partial_trace_system(&tensor(&a, &b).unwrap()).unwrap();
        prop_assert!(rho.max_abs_diff(&DensityMatrix::pure(&a).unwrap()) < 1e-12);
    }

    #[test]
    fn exp_group_property(h in common::hermitian(4), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
        let lhs = exp_hermitian(&h, s1).unwrap().matmul(&exp_hermitian(&h, s2).unwrap()).unwrap();
        let rhs = exp_hermitian(&h, s1 + s2).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn exp_group_property_qubit(h in common::hermitian(2), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
        let lhs = exp_hermitian(&h, s1).unwrap().matmul(&exp_hermitian(&h, s2).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&exp_hermitian(&h, s1 + s2).unwrap()) < 1e-10);
    }

    #[test]
    fn expectation_of_projector_is_overlap(a in common::qubit(), b in common::qubit()) {
        let e = weakval_core::qcore::expectation(&Operator::projector(&a).unwrap(), &b).unwrap();
        prop_assert!((e - a.overlap(&b).unwrap().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn pauli_algebra() {
    let (x, y, z) = (
        Operator::pauli_x(),
        Operator::pauli_y(),
        Operator::pauli_z(),
    );
    let id = Operator::identity(2).unwrap();
    for p in [&x, &y, &z] {
        assert!(p.matmul(p).unwrap().max_abs_diff(&id) < 1e-12);
    }
    let iz = z.scale(weakval_core::qcore::C64::new(0.0, 1.0));
    assert!(x.matmul(&y).unwrap().max_abs_diff(&iz) < 1e-12);
}
