//! γ-sweeps, effective-coupling fits and cross-regime comparison.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::montecarlo::{self, MeasurementRecord, SamplingError};
use crate::protocols::{self, FeedForward, ProtocolError, Regime, RegimeConfig};
use crate::weakval::{theory_curve, CouplingConstant, PrePostSelection, WeakValueError};

/// Points whose post-selection probability falls below this are marked invalid
/// and left out of the fit.
pub const MIN_FIT_PROBABILITY: f64 = 1e-4;
/// Relative width at which the golden-section search stops.
pub const FIT_REL_TOL: f64 = 1e-10;
pub const FIT_BRACKET: (f64, f64) = (1e-9, 10.0);
pub const DEFAULT_GRID_START: f64 = 0.05 * PI;
pub const DEFAULT_GRID_STOP: f64 = 0.6 * PI;
pub const DEFAULT_GRID_POINTS: usize = 20;
/// Pairwise differences are consistent within this many combined standard errors.
pub const CONSISTENCY_SIGMAS: f64 = 3.0;
/// Fraction of pairwise checks that must pass for a comparison to be consistent.
pub const CONSISTENCY_FRACTION: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid gamma grid: {0}")]
    InvalidGrid(String),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    WeakValue(#[from] WeakValueError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// `count` equispaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(AnalysisError::InvalidGrid(
            "grid needs at least one point".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    let grid: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
    validate_grid(&grid)?;
    Ok(grid)
}

pub fn default_grid() -> Vec<f64> {
    linspace(DEFAULT_GRID_START, DEFAULT_GRID_STOP, DEFAULT_GRID_POINTS).expect("default grid")
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty grid".into()));
    }
    for &g in grid {
        if !g.is_finite() || !(0.0..=PI).contains(&g) {
            return Err(AnalysisError::InvalidGrid(format!(
                "gamma {g} outside [0, pi]"
            )));
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidGrid(
            "gamma values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub coupling: f64,
    /// Root-mean-square deviation of the inverted estimates from the theory curve.
    pub residual: f64,
    pub points: usize,
}

fn fit_targets(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter(|(_, raw)| raw.is_finite())
        .filter_map(|&(g, raw)| theory_curve(g).ok().map(|t| (raw, t)))
        .collect()
}

/// Sum of squared deviations between inverted estimates and the theory curve.
pub fn fit_objective(points: &[(f64, f64)], regime: Regime, coupling: f64) -> Result<f64> {
    let mut total = 0.0;
    for (raw, t) in fit_targets(points) {
        let a = protocols::invert_raw(regime, raw, coupling)?;
        total += (a - t) * (a - t);
    }
    Ok(total)
}

/// Least-squares effective coupling by golden-section search over
/// [`FIT_BRACKET`]. `points` holds `(γ, raw pointer expectation)` pairs;
/// divergent γ values are skipped.
pub fn fit_effective_coupling(points: &[(f64, f64)], regime: Regime) -> Result<FitResult> {
    let n = fit_targets(points).len();
    if n < 3 {
        return Err(AnalysisError::FitFailure(format!(
            "{n} valid points, need at least 3"
        )));
    }
    let f = |k: f64| -> Result<f64> {
        let v = fit_objective(points, regime, k)
            .map_err(|e| AnalysisError::FitFailure(e.to_string()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(AnalysisError::FitFailure(format!(
                "objective not finite at coupling {k}"
            )))
        }
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo, hi) = FIT_BRACKET;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > FIT_REL_TOL * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let k = 0.5 * (a + b);
    if k <= lo * (1.0 + 1e-6) || k >= hi * (1.0 - 1e-6) {
        return Err(AnalysisError::FitFailure(format!(
            "optimum at bracket edge ({k})"
        )));
    }
    let residual = (f(k)? / n as f64).sqrt();
    Ok(FitResult {
        coupling: k,
        residual,
        points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub regime: Regime,
    pub coupling: CouplingConstant,
    pub feedforward: FeedForward,
}

impl SweepConfig {
    pub fn new(regime: Regime, coupling: f64) -> Result<Self> {
        let coupling = CouplingConstant::new(coupling, regime.coupling_kind())?;
        Ok(Self {
            regime,
            coupling,
            feedforward: FeedForward::default(),
        })
    }

    pub fn with_feedforward(mut self, feedforward: FeedForward) -> Self {
        self.feedforward = feedforward;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub gamma: f64,
    /// Theory-curve value; NaN at a divergent post-selection.
    pub exact_aw: f64,
    /// Estimate with the fitted coupling; NaN when the point is invalid.
    pub estimated_aw: f64,
    /// Propagated standard error; `None` in exact mode.
    pub stderr: Option<f64>,
    pub raw_stat: f64,
    pub raw_stderr: Option<f64>,
    pub p_postselect: f64,
    pub system_fidelity: f64,
    pub valid: bool,
    pub record: Option<MeasurementRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// `None` in exact mode.
    pub shots: Option<u64>,
    pub master_seed: u64,
    pub points: Vec<SweepPoint>,
    pub fitted_coupling: f64,
    pub fit_residual: f64,
}

impl SweepResult {
    pub fn regime(&self) -> Regime {
        self.config.regime
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    pub fn valid_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.valid)
    }

    /// Largest `|estimate − theory|` over valid points.
    pub fn max_abs_error(&self) -> f64 {
        self.valid_points()
            .map(|p| (p.estimated_aw - p.exact_aw).abs())
            .fold(0.0, f64::max)
    }
}

fn run_point(
    config: &SweepConfig,
    gamma: f64,
    shots: Option<u64>,
    seed: u64,
) -> Result<SweepPoint> {
    let sel = PrePostSelection::from_gamma(gamma)?;
    let rc = RegimeConfig::new(config.regime, sel, config.coupling, config.feedforward)?;
    let stats = protocols::run(&rc)?;
    let exact_aw = theory_curve(gamma).unwrap_or(f64::NAN);
    let valid = stats.valid && stats.p_postselect >= MIN_FIT_PROBABILITY;
    let mut point = SweepPoint {
        gamma,
        exact_aw,
        estimated_aw: f64::NAN,
        stderr: None,
        raw_stat: config.regime.raw_stat(&stats),
        raw_stderr: None,
        p_postselect: stats.p_postselect,
        system_fidelity: stats.system_fidelity,
        valid,
        record: None,
    };
    if let (Some(n), true) = (shots, valid) {
        let (record, empirical) = montecarlo::sample_pointer_stats(&stats, n, seed)?;
        let est = match config.regime {
            Regime::Erasure => empirical.exp_z,
            _ => empirical.exp_x,
        }
        .expect("record covers the regime's measurement basis");
        point.raw_stat = est.value;
        point.raw_stderr = Some(est.stderr);
        point.record = Some(record);
    }
    Ok(point)
}

/// Runs one regime over `grid`, fits the effective coupling to the valid
/// points and inverts every valid point with it. With `shots` set, each
/// point's pointer statistics are sampled from the stream
/// `derive_seed(master_seed, index)`.
pub fn sweep(
    config: &SweepConfig,
    grid: &[f64],
    shots: Option<u64>,
    master_seed: u64,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    if shots == Some(0) {
        return Err(SamplingError::ZeroShots.into());
    }
    let mut points = grid
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            run_point(
                config,
                g,
                shots,
                montecarlo::derive_seed(master_seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.valid)
        .map(|p| (p.gamma, p.raw_stat))
        .collect();
    let fit = fit_effective_coupling(&data, config.regime)?;
    for p in points.iter_mut().filter(|p| p.valid) {
        p.estimated_aw = protocols::invert_raw(config.regime, p.raw_stat, fit.coupling)?;
        p.stderr = p
            .raw_stderr
            .map(|se| protocols::propagate_stderr(config.regime, p.raw_stat, se, fit.coupling));
    }
    Ok(SweepResult {
        config: *config,
        shots,
        master_seed,
        points,
        fitted_coupling: fit.coupling,
        fit_residual: fit.residual,
    })
}

/// Nominal couplings of the three regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeCouplings {
    pub weak_phi: f64,
    pub insensitive_delta: f64,
    pub erasure_delta: f64,
}

impl Default for RegimeCouplings {
    fn default() -> Self {
        Self {
            weak_phi: 0.18 * PI,
            insensitive_delta: 0.21,
            erasure_delta: 0.08,
        }
    }
}

impl RegimeCouplings {
    pub fn get(&self, regime: Regime) -> f64 {
        match regime {
            Regime::WeakInteraction => self.weak_phi,
            Regime::InsensitivePointer => self.insensitive_delta,
            Regime::Erasure => self.erasure_delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseComparison {
    pub first: Regime,
    pub second: Regime,
    pub max_abs_delta: f64,
    pub checks: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Sweeps in [`Regime::ALL`] order.
    pub sweeps: Vec<SweepResult>,
    pub pairs: Vec<PairwiseComparison>,
    pub consistency_fraction: f64,
    /// At least [`CONSISTENCY_FRACTION`] of the pairwise differences lie within
    /// [`CONSISTENCY_SIGMAS`] combined standard errors. In exact mode the
    /// standard errors are zero, so only identical estimates pass.
    pub consistent: bool,
}

impl ComparisonReport {
    pub fn max_pairwise_delta(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.max_abs_delta)
            .fold(0.0, f64::max)
    }

    pub fn sweep(&self, regime: Regime) -> &SweepResult {
        self.sweeps
            .iter()
            .find(|s| s.regime() == regime)
            .expect("all regimes present")
    }
}

/// Sweeps all three regimes on a common grid. Regime `r` (in [`Regime::ALL`]
/// order) draws from master seed `derive_seed(master_seed, r)`.
pub fn compare_regimes(
    grid: &[f64],
    couplings: &RegimeCouplings,
    feedforward: FeedForward,
    shots: Option<u64>,
    master_seed: u64,
) -> Result<ComparisonReport> {
    let sweeps = Regime::ALL
        .iter()
        .enumerate()
        .map(|(r, &regime)| {
            let config =
                SweepConfig::new(regime, couplings.get(regime))?.with_feedforward(feedforward);
            sweep(
                &config,
                grid,
                shots,
                montecarlo::derive_seed(master_seed, r as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::new();
    for i in 0..sweeps.len() {
        for j in i + 1..sweeps.len() {
            let mut pair = PairwiseComparison {
                first: sweeps[i].regime(),
                second: sweeps[j].regime(),
                max_abs_delta: 0.0,
                checks: 0,
                passed: 0,
            };
            for (a, b) in sweeps[i].points.iter().zip(&sweeps[j].points) {
                if !(a.valid && b.valid) {
                    continue;
                }
                let delta = (a.estimated_aw - b.estimated_aw).abs();
                let se = a.stderr.unwrap_or(0.0).hypot(b.stderr.unwrap_or(0.0));
                pair.max_abs_delta = pair.max_abs_delta.max(delta);
                pair.checks += 1;
                if delta <= CONSISTENCY_SIGMAS * se {
                    pair.passed += 1;
                }
            }
            pairs.push(pair);
        }
    }
    let checks: usize = pairs.iter().map(|p| p.checks).sum();
    let passed: usize = pairs.iter().map(|p| p.passed).sum();
    let consistency_fraction = if checks == 0 {
        0.0
    } else {
        passed as f64 / checks as f64
    };
    Ok(ComparisonReport {
        sweeps,
        pairs,
        consistency_fraction,
        consistent: checks > 0 && consistency_fraction >= CONSISTENCY_FRACTION,
    })
}
