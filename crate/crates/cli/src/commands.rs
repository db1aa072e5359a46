use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use weakval_core::analysis::{
    self, compare_regimes, fit_effective_coupling, AnalysisError, RegimeCouplings, SweepConfig,
    SweepPoint, SweepResult,
};
use weakval_core::optics::{
    build_chain, effective_gate, Path as OpticalPath, Pol, TwoPhotonAmplitudes, POL_LABELS,
};
use weakval_core::protocols::{self, Regime};
use weakval_core::qcore::{Operator, C64};
use weakval_core::weakval::{cphase, theory_curve, CouplingConstant};

use crate::table::{fmt_num, parse_csv, Cell, Table};
use crate::{CliError, CompareArgs, FitArgs, OpticsArgs, OpticsFormat, RunArgs, SweepArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const SWEEP_COLUMNS: [&str; 7] = [
    "gamma",
    "exact_aw",
    "estimated_aw",
    "stderr",
    "p_postselect",
    "system_fidelity",
    "valid",
];

fn runtime(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::InvalidGrid(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn default_coupling(regime: Regime) -> f64 {
    RegimeCouplings::default().get(regime)
}

fn check_coupling(regime: Regime, value: f64) -> Result<(), CliError> {
    CouplingConstant::new(value, regime.coupling_kind())
        .map(|_| ())
        .map_err(|e| CliError::Config(format!("{regime} coupling: {e}")))
}

fn shots(run: &RunArgs) -> Option<u64> {
    (run.shots > 0).then_some(run.shots)
}

fn header_meta(t: &mut Table, command: &str) {
    t.meta("tool", Cell::Text("weakval".into()));
    t.meta("version", Cell::Text(VERSION.into()));
    t.meta("command", Cell::Text(command.into()));
}

fn point_cells(p: &SweepPoint) -> Vec<Cell> {
    vec![
        Cell::Num(p.gamma),
        Cell::num_or_empty(p.exact_aw),
        Cell::num_or_empty(p.estimated_aw),
        Cell::opt(p.stderr),
        Cell::num_or_empty(p.p_postselect),
        Cell::num_or_empty(p.system_fidelity),
        Cell::Bool(p.valid),
    ]
}

pub fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let coupling = a.coupling.unwrap_or_else(|| default_coupling(a.regime));
    check_coupling(a.regime, coupling)?;
    let grid = a.gamma.points().map_err(CliError::Config)?;
    let config = SweepConfig::new(a.regime, coupling)
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_feedforward(a.run.feedforward);
    let res = analysis::sweep(&config, &grid, shots(&a.run), a.run.seed).map_err(runtime)?;

    let mut t = Table::new(&SWEEP_COLUMNS);
    header_meta(&mut t, "sweep");
    sweep_meta(&mut t, &res, "");
    t.meta("feedforward", Cell::Text(a.run.feedforward.to_string()));
    t.meta("seed", Cell::Int(a.run.seed));
    t.meta("shots", Cell::Int(a.run.shots));
    for p in &res.points {
        t.push(point_cells(p));
    }
    emit(
        &t.render(a.run.format).map_err(CliError::Runtime)?,
        a.run.out.as_deref(),
    )
}

fn sweep_meta(t: &mut Table, res: &SweepResult, suffix: &str) {
    if suffix.is_empty() {
        t.meta("regime", Cell::Text(res.regime().label().into()));
    }
    t.meta(
        format!("coupling_nominal{suffix}"),
        Cell::Num(res.config.coupling.value()),
    );
    t.meta(
        format!("coupling_fitted{suffix}"),
        Cell::Num(res.fitted_coupling),
    );
    t.meta(format!("fit_residual{suffix}"), Cell::Num(res.fit_residual));
}

pub fn compare(a: CompareArgs) -> Result<(), CliError> {
    let spec = match a.gamma.as_slice() {
        [] => crate::parse::grid("0.05pi:0.6pi:20").map_err(CliError::Config)?,
        [first, rest @ ..] => {
            if rest.iter().any(|g| g != first) {
                return Err(CliError::Config(
                    "all regimes must share one gamma grid".into(),
                ));
            }
            *first
        }
    };
    let grid = spec.points().map_err(CliError::Config)?;
    let couplings = RegimeCouplings {
        weak_phi: a.weak_coupling,
        insensitive_delta: a.insensitive_coupling,
        erasure_delta: a.erasure_coupling,
    };
    for regime in Regime::ALL {
        check_coupling(regime, couplings.get(regime))?;
    }
    let report = compare_regimes(
        &grid,
        &couplings,
        a.run.feedforward,
        shots(&a.run),
        a.run.seed,
    )
    .map_err(runtime)?;

    let mut columns = vec!["regime"];
    columns.extend(SWEEP_COLUMNS);
    let mut t = Table::new(&columns);
    header_meta(&mut t, "compare");
    t.meta("feedforward", Cell::Text(a.run.feedforward.to_string()));
    t.meta("seed", Cell::Int(a.run.seed));
    t.meta("shots", Cell::Int(a.run.shots));
    for s in &report.sweeps {
        sweep_meta(&mut t, s, &format!("_{}", s.regime().label()));
    }
    t.meta("consistency", Cell::Bool(report.consistent));
    t.meta(
        "consistency_fraction",
        Cell::Num(report.consistency_fraction),
    );
    t.meta("max_pairwise_delta", Cell::Num(report.max_pairwise_delta()));
    for s in &report.sweeps {
        for p in &s.points {
            let mut row = vec![Cell::Text(s.regime().label().into())];
            row.extend(point_cells(p));
            t.push(row);
        }
    }
    emit(
        &t.render(a.run.format).map_err(CliError::Runtime)?,
        a.run.out.as_deref(),
    )?;
    eprintln!(
        "consistency={} fraction={} max_pairwise_delta={}",
        report.consistent,
        fmt_num(report.consistency_fraction),
        fmt_num(report.max_pairwise_delta())
    );
    Ok(())
}

fn fmt_c(z: C64) -> String {
    // values that print as zero must not carry a sign
    let clean = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
    let z = C64::new(clean(z.re), clean(z.im));
    format!("{:+.6}{:+.6}i", z.re, z.im)
}

fn matrix_rows(op: &Operator) -> Vec<String> {
    (0..op.dim())
        .map(|i| {
            (0..op.dim())
                .map(|j| fmt_c(op.get(i, j)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn path_label(p: OpticalPath) -> &'static str {
    match p {
        OpticalPath::Input => "input",
        OpticalPath::Lower => "lower",
        OpticalPath::Upper => "upper",
        OpticalPath::Output => "output",
    }
}

/// Non-zero amplitudes as `amp|PS,path>` terms, pointer polarization first.
fn describe_state(s: &TwoPhotonAmplitudes) -> String {
    let mut terms = Vec::new();
    for path in OpticalPath::ALL {
        for (k, label) in s.on_path(path).iter().zip(POL_LABELS) {
            if k.norm() > 1e-12 {
                terms.push(format!("({})|{label},{}>", fmt_c(*k), path_label(path)));
            }
        }
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn optics(a: OpticsArgs) -> Result<(), CliError> {
    let chain = build_chain(a.phi, !a.no_balance).map_err(|e| CliError::Config(e.to_string()))?;
    let eff = effective_gate(&chain).map_err(|e| CliError::Runtime(e.to_string()))?;
    let gate = eff.gate();
    let target = weakval_core::optics::pointer_local_phase(a.phi)
        .matmul(&cphase(a.phi))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let dist_local = gate
        .phase_aligned_distance(&target)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let dist_bare = gate
        .phase_aligned_distance(&cphase(a.phi))
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let traces: Vec<(&str, Vec<(String, String)>)> = [("VH", Pol::H), ("VV", Pol::V)]
        .into_iter()
        .map(|(label, signal)| {
            let rows = chain
                .table_trace(&TwoPhotonAmplitudes::basis(
                    OpticalPath::Input,
                    Pol::V,
                    signal,
                ))
                .into_iter()
                .map(|r| (r.name.to_string(), describe_state(&r.state)))
                .collect();
            (label, rows)
        })
        .collect();

    let text = match a.format {
        OpticsFormat::Text => {
            let mut s = String::new();
            s.push_str(&format!(
                "# tool=weakval\n# version={VERSION}\n# command=optics\n"
            ));
            s.push_str(&format!(
                "# phi={}\n# balanced={}\n",
                fmt_num(a.phi),
                chain.balanced()
            ));
            s.push_str(&format!(
                "# success_probability={}\n",
                fmt_num(eff.success_probability)
            ));
            for (label, amp) in POL_LABELS.iter().zip(eff.basis_amplitudes) {
                s.push_str(&format!("# basis_amplitude_{label}={}\n", fmt_num(amp)));
            }
            s.push_str(&format!(
                "# distance_local_phase_cphase={}\n",
                fmt_num(dist_local)
            ));
            s.push_str(&format!("# distance_cphase={}\n", fmt_num(dist_bare)));
            s.push_str("[chain]\n");
            s.push_str(&chain.listing());
            for (label, rows) in &traces {
                s.push_str(&format!("[trace {label}]\n"));
                for (name, state) in rows {
                    s.push_str(&format!("{name}\t{state}\n"));
                }
            }
            s.push_str("[gate]\n");
            for row in matrix_rows(&gate) {
                s.push_str(&row);
                s.push('\n');
            }
            s.push_str("[cphase]\n");
            for row in matrix_rows(&cphase(a.phi)) {
                s.push_str(&row);
                s.push('\n');
            }
            s
        }
        OpticsFormat::Json => {
            let amps: Map<String, Value> = POL_LABELS
                .iter()
                .zip(eff.basis_amplitudes)
                .map(|(l, v)| (l.to_string(), num(v)))
                .collect();
            let trace: Map<String, Value> = traces
                .iter()
                .map(|(label, rows)| {
                    let rows: Vec<Value> = rows
                        .iter()
                        .map(|(n, s)| json!({"component": n, "state": s}))
                        .collect();
                    (label.to_string(), Value::Array(rows))
                })
                .collect();
            let v = json!({
                "tool": "weakval",
                "version": VERSION,
                "command": "optics",
                "phi": num(a.phi),
                "balanced": chain.balanced(),
                "success_probability": num(eff.success_probability),
                "basis_amplitudes": amps,
                "distance_local_phase_cphase": num(dist_local),
                "distance_cphase": num(dist_bare),
                "chain": chain.listing().lines().collect::<Vec<_>>(),
                "trace": trace,
                "gate": matrix_rows(&gate),
                "cphase": matrix_rows(&cphase(a.phi)),
            });
            let mut s = serde_json::to_string_pretty(&v).expect("serializable");
            s.push('\n');
            s
        }
    };
    emit(&text, a.out.as_deref())
}

fn num(v: f64) -> Value {
    fmt_num(v)
        .parse::<f64>()
        .map(Value::from)
        .unwrap_or(Value::Null)
}

fn cell_f64(cell: &str, line: usize, column: &str) -> Result<f64, CliError> {
    crate::parse::angle(cell).map_err(|_| {
        CliError::Config(format!(
            "line {line}: column {column}: invalid number '{cell}'"
        ))
    })
}

pub fn fit(a: FitArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", a.input.display())))?;
    let table = parse_csv(&text).map_err(CliError::Config)?;
    let regime = match (a.regime, table.meta("regime")) {
        (Some(r), _) => r,
        (None, Some(label)) => label.parse().map_err(CliError::Config)?,
        (None, None) => {
            return Err(CliError::Config(
                "regime not given and not found in the input metadata".into(),
            ))
        }
    };
    let gamma_col = table
        .column("gamma")
        .ok_or_else(|| CliError::Config("input has no gamma column".into()))?;
    let valid_col = table.column("valid");

    // raw statistics directly, or reconstructed from sweep estimates and their fitted coupling
    enum Source {
        Raw(usize),
        Estimate(usize, f64),
    }
    let source = if let Some(c) = table.column("raw_stat") {
        Source::Raw(c)
    } else if let (Some(c), Some(k)) = (table.column("estimated_aw"), table.meta("coupling_fitted"))
    {
        let k = k
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("invalid coupling_fitted metadata '{k}'")))?;
        Source::Estimate(c, k)
    } else {
        return Err(CliError::Config(
            "input needs a raw_stat column, or estimated_aw with coupling_fitted metadata".into(),
        ));
    };

    let mut points = Vec::new();
    for (line, row) in &table.rows {
        if row.len() != table.header.len() {
            return Err(CliError::Config(format!(
                "line {line}: expected {} fields, found {}",
                table.header.len(),
                row.len()
            )));
        }
        if let Some(vc) = valid_col {
            match row[vc].as_str() {
                "true" => {}
                "false" => continue,
                other => {
                    return Err(CliError::Config(format!(
                        "line {line}: column valid: invalid value '{other}'"
                    )))
                }
            }
        }
        let gamma = cell_f64(&row[gamma_col], *line, "gamma")?;
        let raw = match source {
            Source::Raw(c) => cell_f64(&row[c], *line, "raw_stat")?,
            Source::Estimate(c, k) => {
                protocols::forward_raw(regime, cell_f64(&row[c], *line, "estimated_aw")?, k)
            }
        };
        points.push((gamma, raw));
    }

    let fit = fit_effective_coupling(&points, regime).map_err(runtime)?;
    let mut t = Table::new(&["gamma", "raw_stat", "estimated_aw", "exact_aw"]);
    header_meta(&mut t, "fit");
    t.meta("regime", Cell::Text(regime.label().into()));
    t.meta("coupling_fitted", Cell::Num(fit.coupling));
    t.meta("fit_residual", Cell::Num(fit.residual));
    t.meta("points", Cell::Int(fit.points as u64));
    for &(g, raw) in &points {
        let est = protocols::invert_raw(regime, raw, fit.coupling).unwrap_or(f64::NAN);
        t.push(vec![
            Cell::Num(g),
            Cell::Num(raw),
            Cell::num_or_empty(est),
            Cell::num_or_empty(theory_curve(g).unwrap_or(f64::NAN)),
        ]);
    }
    emit(
        &t.render(a.format).map_err(CliError::Runtime)?,
        a.out.as_deref(),
    )?;
    eprintln!(
        "coupling_fitted={} fit_residual={}",
        fmt_num(fit.coupling),
        fmt_num(fit.residual)
    );
    Ok(())
}
