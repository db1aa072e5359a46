use std::f64::consts::PI;

use proptest::prelude::*;
use weakval_core::optics::{
    build_chain, effective_gate, hwp, ket_diag, ket_h, ket_l, ket_linear, ket_r, ket_v,
    pointer_local_phase, qwp, Path, Pol, TwoPhotonAmplitudes, TABLE_ROWS,
};
use weakval_core::qcore::{exp_hermitian, C64};
use weakval_core::weakval::{cphase, hamiltonian_cphase};

const PHIS: [f64; 4] = [0.0, 0.18 * PI, PI / 2.0, PI];

/// Rows of the component table for the `|VH⟩` and `|VV⟩` inputs, as
/// (pointer path, pointer polarization, signal polarization).
fn table_column(signal: [C64; 2]) -> Vec<TwoPhotonAmplitudes> {
    let vv = signal == ket_v();
    let up = |p: [C64; 2]| TwoPhotonAmplitudes::product(Path::Upper, p, signal);
    let out = |p: [C64; 2]| TwoPhotonAmplitudes::product(Path::Output, p, signal);
    vec![
        up(ket_v()),
        up(ket_linear(PI / 3.0)),
        up(if vv { ket_diag(-1.0) } else { ket_diag(1.0) }),
        up(if vv { ket_l() } else { ket_r() }),
        up(if vv { ket_r() } else { ket_l() }),
        out(ket_h()),
        out(ket_v()),
    ]
}

#[test]
fn component_table_is_reproduced() {
    for phi in PHIS {
        for balanced in [false, true] {
            let chain = build_chain(phi, balanced).unwrap();
            for (signal, pol) in [(ket_h(), Pol::H), (ket_v(), Pol::V)] {
                let trace =
                    chain.table_trace(&TwoPhotonAmplitudes::basis(Path::Input, Pol::V, pol));
                let names: Vec<&str> = trace.iter().map(|r| r.name).collect();
                assert_eq!(names, TABLE_ROWS);
                for (row, want) in trace.iter().zip(table_column(signal)) {
                    let ov = row.state.overlap_modulus(&want);
                    assert!(
                        ov >= 1.0 - 1e-10,
                        "phi {phi} {:?} row {}: {ov}",
                        pol,
                        row.name
                    );
                }
            }
        }
    }
}

#[test]
fn columns_pick_up_opposite_phases() {
    let phi = 0.18 * PI;
    let chain = build_chain(phi, true).unwrap();
    let input = TwoPhotonAmplitudes::product(Path::Input, ket_v(), ket_diag(1.0));
    let out = chain.output(&input);
    let vh = out.amp(Path::Output, Pol::V, Pol::H);
    let vv = out.amp(Path::Output, Pol::V, Pol::V);
    assert!((vh.norm() - vv.norm()).abs() < 1e-12);
    let rel = vv / vh;
    assert!((rel - C64::from_polar(1.0, phi)).norm() < 1e-12);
}

#[test]
fn balanced_gate_is_local_phase_times_cphase() {
    for phi in PHIS {
        let g = effective_gate(&build_chain(phi, true).unwrap()).unwrap();
        let target = pointer_local_phase(phi).matmul(&cphase(phi)).unwrap();
        assert!(g.gate().phase_aligned_distance(&target).unwrap() < 1e-12);
        assert!(g.gate().max_abs_diff(&target) < 1e-12);
        assert!((g.success_probability - 1.0 / 12.0).abs() < 1e-12);

        // the local phase is the pointer's free evolution, so the chain is the interaction alone
        let ham = hamiltonian_cphase(phi);
        assert!(
            pointer_local_phase(phi).max_abs_diff(&exp_hermitian(&ham.h0, 1.0).unwrap()) < 1e-12
        );
        assert!(
            g.gate()
                .max_abs_diff(&exp_hermitian(&ham.h1, -1.0).unwrap())
                < 1e-12
        );
    }
}

#[test]
fn csign_at_pi() {
    let g = effective_gate(&build_chain(PI, true).unwrap())
        .unwrap()
        .gate();
    let d = pointer_local_phase(PI);
    let undone = d.adjoint().matmul(&g).unwrap();
    assert!(undone.max_abs_diff(&cphase(PI)) < 1e-12);
    assert!((undone.get(3, 3).re + 1.0).abs() < 1e-12);
}

#[test]
fn zero_phase_is_identity() {
    let g = effective_gate(&build_chain(0.0, true).unwrap())
        .unwrap()
        .gate();
    let id = weakval_core::qcore::Operator::identity(4).unwrap();
    assert!(g.phase_aligned_distance(&id).unwrap() < 1e-12);
}

#[test]
fn unbalanced_chain_reports_imbalance() {
    let chain = build_chain(0.18 * PI, false).unwrap();
    let g = effective_gate(&chain).unwrap();
    assert!(!g.balanced);
    let spread = g.basis_amplitudes.iter().copied().fold(0.0, f64::max)
        - g.basis_amplitudes.iter().copied().fold(1.0, f64::min);
    assert!(spread > 0.5);
}

fn pol() -> impl Strategy<Value = [C64; 2]> {
    (0.0f64..PI, 0.0f64..2.0 * PI)
        .prop_map(|(t, p)| [C64::new(t.cos(), 0.0), C64::from_polar(t.sin(), p)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn wave_plates_are_unitary(theta in -PI..PI) {
        prop_assert!(hwp(theta).operator().unitary_deviation() < 1e-12);
        prop_assert!(qwp(theta).operator().unitary_deviation() < 1e-12);
    }

    #[test]
    fn success_amplitude_never_grows(
        phi in 0.0f64..PI,
        balanced in any::<bool>(),
        pointer in pol(),
        signal in pol(),
    ) {
        let chain = build_chain(phi, balanced).unwrap();
        let input = TwoPhotonAmplitudes::product(Path::Input, pointer, signal);
        let mut previous = input.success_amplitude();
        for row in chain.evaluate(&input) {
            let a = row.state.success_amplitude();
            prop_assert!(a <= previous + 1e-12, "{} raised {} to {}", row.name, previous, a);
            previous = a;
        }
    }
}
