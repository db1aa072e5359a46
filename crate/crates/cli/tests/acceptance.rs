//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use weakval_core::analysis::{
    compare_regimes, default_grid, linspace, sweep, RegimeCouplings, SweepConfig,
};
use weakval_core::montecarlo::derive_seed;
use weakval_core::optics::{
    build_chain, effective_gate, ket_diag, ket_h, ket_l, ket_linear, ket_r, ket_v,
    pointer_local_phase, Path, Pol, TwoPhotonAmplitudes,
};
use weakval_core::protocols::{run_erasure_regime, run_weak_regime, FeedForward, Regime};
use weakval_core::qcore::{Operator, PureState, C64};
use weakval_core::weakval::{
    b_operator, cphase, gate_observable, theory_curve, weak_value, PrePostSelection,
};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Uniform draw in [0, 1) from the `i`-th output of a fixed stream.
fn uniform(stream: u64, i: u64) -> f64 {
    (derive_seed(stream, i) >> 11) as f64 / (1u64 << 53) as f64
}

fn random_qubit(stream: u64, i: u64) -> PureState {
    let v: Vec<C64> = (0..2)
        .map(|k| {
            C64::new(
                2.0 * uniform(stream, 4 * i + 2 * k) - 1.0,
                2.0 * uniform(stream, 4 * i + 2 * k + 1) - 1.0,
            )
        })
        .collect();
    PureState::new(v).unwrap().normalize().unwrap()
}

fn theory_identity() -> Outcome {
    let a = gate_observable();
    let grid = linspace(0.0, 0.7 * PI, 50).unwrap();
    let mut worst = 0.0f64;
    for &g in &grid {
        let sel = PrePostSelection::from_gamma(g).unwrap();
        let w = weak_value(&a, &sel).unwrap();
        worst = worst.max((w - C64::new(theory_curve(g).unwrap(), 0.0)).norm());
    }
    outcome(
        worst < 1e-12,
        format!("50 points, max |diff| = {worst:.3e} (tol 1e-12)"),
    )
}

fn fidelity_reproduction() -> Outcome {
    let (phi, gamma) = (0.18 * PI, PI / 4.0);
    let sel = PrePostSelection::from_gamma(gamma).unwrap();
    let f = run_weak_regime(&sel, phi).unwrap().system_fidelity;
    let oracle = 1.0 - 0.25 * (2.0 * gamma).sin().powi(2) * (1.0 - phi.cos());
    let ok = (f - 0.961).abs() <= 0.001 && (f - oracle).abs() < 1e-12;
    outcome(
        ok,
        format!("fidelity {f:.6}, oracle {oracle:.6} (target 0.961 +/- 0.001)"),
    )
}

fn small_coupling_equivalence() -> Outcome {
    let grid = default_grid();
    let mut parts = Vec::new();
    let mut ok = grid.len() == 20;
    for regime in Regime::ALL {
        let cfg = SweepConfig::new(regime, 0.01).unwrap();
        let res = sweep(&cfg, &grid, None, 0).unwrap();
        let err = res.max_abs_error();
        ok &= err < 1e-3 && res.points.iter().all(|p| p.valid);
        parts.push(format!("{} {err:.3e}", regime.label()));
    }
    outcome(ok, format!("max abs error {} (tol 1e-3)", parts.join(", ")))
}

fn regime_curves() -> Outcome {
    let grid = default_grid();
    let couplings = RegimeCouplings::default();
    let (mut within, mut total) = (0usize, 0usize);
    for rep in 0..100u64 {
        let report = compare_regimes(
            &grid,
            &couplings,
            FeedForward::TrueOperator,
            Some(3000),
            rep,
        )
        .unwrap();
        for s in &report.sweeps {
            for p in s.valid_points() {
                let se = p.stderr.expect("sampled run carries standard errors");
                total += 1;
                if (p.estimated_aw - p.exact_aw).abs() <= 5.0 * se {
                    within += 1;
                }
            }
        }
    }
    let frac = within as f64 / total as f64;
    outcome(
        total > 0 && frac >= 0.99,
        format!(
            "{within}/{total} valid points within 5 s.e. ({:.2}%, need >= 99%)",
            100.0 * frac
        ),
    )
}

fn effective_coupling_gap() -> Outcome {
    let nominal = 2f64.sqrt() * (6f64.to_radians()).sin();
    let cfg = SweepConfig::new(Regime::InsensitivePointer, nominal).unwrap();
    let res = sweep(&cfg, &default_grid(), None, 0).unwrap();
    let k = res.fitted_coupling;
    outcome(
        (0.20..=0.22).contains(&k),
        format!("nominal delta {nominal:.4} fits to {k:.6} (need [0.20, 0.22])"),
    )
}

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

fn optics_equivalence() -> Outcome {
    let (mut dist, mut prob_dev, mut min_overlap, mut rows) = (0.0f64, 0.0f64, 1.0f64, 0usize);
    let mut prob = 0.0;
    for phi in [0.0, 0.18 * PI, PI / 2.0, PI] {
        let chain = build_chain(phi, true).unwrap();
        let eff = effective_gate(&chain).unwrap();
        let target = pointer_local_phase(phi).matmul(&cphase(phi)).unwrap();
        dist = dist.max(eff.gate().phase_aligned_distance(&target).unwrap());
        prob = eff.success_probability;
        prob_dev = prob_dev.max((eff.success_probability - 1.0 / 6.0).abs());
        rows = 0;
        for (signal, pol) in [(ket_h(), Pol::H), (ket_v(), Pol::V)] {
            let trace = chain.table_trace(&TwoPhotonAmplitudes::basis(Path::Input, Pol::V, pol));
            for (row, want) in trace.iter().zip(table_column(signal)) {
                min_overlap = min_overlap.min(row.state.overlap_modulus(&want));
                rows += 1;
            }
        }
    }
    let gate_ok = dist < 1e-12;
    let prob_ok = prob_dev < 1e-12;
    let rows_ok = rows == 14 && min_overlap >= 1.0 - 1e-10;
    outcome(
        gate_ok && prob_ok && rows_ok,
        format!(
            "gate distance {dist:.3e} [{}]; success probability {prob:.6} vs 1/6 [{}]; \
             {rows} table rows, min overlap {min_overlap:.12} [{}]",
            tag(gate_ok),
            tag(prob_ok),
            tag(rows_ok)
        ),
    )
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fail"
    }
}

fn erasure_disturbance() -> Outcome {
    let gammas: Vec<f64> = (0..20).map(|i| PI * uniform(11, i)).collect();
    let mut worst_zero = 0.0f64;
    let mut bound_ok = true;
    let mut worst_margin = f64::INFINITY;
    for &g in &gammas {
        let sel = PrePostSelection::from_gamma(g).unwrap();
        let f0 = run_erasure_regime(&sel, 0.0, FeedForward::TrueOperator)
            .unwrap()
            .system_fidelity;
        worst_zero = worst_zero.max((f0 - 1.0).abs());
        for delta in [0.02, 0.05, 0.08, 0.21] {
            let f = run_erasure_regime(&sel, delta, FeedForward::TrueOperator)
                .unwrap()
                .system_fidelity;
            let margin = f - (1.0 - 4.0 * delta * delta);
            worst_margin = worst_margin.min(margin);
            bound_ok &= margin >= 0.0;
        }
    }
    outcome(
        worst_zero < 1e-12 && bound_ok,
        format!(
            "delta=0 max |F-1| = {worst_zero:.3e}; min margin over 1-4delta^2 = {worst_margin:.3e}"
        ),
    )
}

fn b_operator_identity() -> Outcome {
    let z = Operator::pauli_z();
    let id = Operator::identity(2).unwrap();
    let (mut worst, mut n, mut i) = (0.0f64, 0, 0u64);
    while n < 100 {
        let (psi_i, psi_f) = (random_qubit(23, 2 * i), random_qubit(23, 2 * i + 1));
        i += 1;
        if psi_f.inner(&psi_i).unwrap().norm_sqr() < 1e-3 {
            continue;
        }
        let sel = PrePostSelection::new(psi_i, psi_f).unwrap();
        let abar = weak_value(&z, &sel).unwrap();
        let b = b_operator(&sel, &PureState::zero(), &PureState::one()).unwrap();
        let one = C64::new(1.0, 0.0);
        let want = id.scale(one + abar).add(&z.scale(one - abar)).unwrap();
        worst = worst.max(b.scale_real(2.0).max_abs_diff(&want));
        n += 1;
    }
    outcome(
        worst < 1e-10,
        format!("100 selections, max |diff| = {worst:.3e} (tol 1e-10)"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_weakval"))
            .args(["compare", "--seed", "2015", "--out"])
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        (status.success(), std::fs::read(&path).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    outcome(
        ok_a && ok_b && !a.is_empty() && a == b,
        format!(
            "two compare runs, {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Option<f64>, Check); 9] = [
        ("theory-curve identity", Some(0.1), theory_identity),
        ("fidelity reproduction", Some(0.1), fidelity_reproduction),
        (
            "small-coupling equivalence",
            Some(1.0),
            small_coupling_equivalence,
        ),
        ("regime curves under sampling", Some(30.0), regime_curves),
        ("effective-coupling gap", Some(1.0), effective_coupling_gap),
        ("optics equivalence", Some(0.1), optics_equivalence),
        ("erasure disturbance", Some(0.5), erasure_disturbance),
        ("B-operator identity", Some(0.5), b_operator_identity),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (n, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_budget = budget.is_none_or(|b| elapsed <= Duration::from_secs_f64(b));
        let ok = out.ok && in_budget;
        if !ok {
            failed += 1;
        }
        let budget = budget.map_or("none".to_string(), |b| format!("{b} s"));
        println!(
            "{} criterion {}: {name}: {}; runtime {:.3} s (budget {budget})",
            if ok { "PASS" } else { "FAIL" },
            n + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
