//! Randomized phase-transition sweeps.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with the master seed and the stream id is `(delta_index << 32) | trial`.
//! Cells are therefore independent, individually re-runnable, and two specs
//! that differ only in `m` or the amplitude law share their supports.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::model::{
    forward_measure, forward_multi, min_separation, LowPassData, MultiSpikeTrain, ProblemConfig, SpikeTrain, C64,
};
use crate::recovery::{
    check_exact_recovery, check_exact_recovery_multi, check_exact_spikes, demix, recover_gtv, recover_tv,
    RecoveryOptions, RecoveryTolerance,
};
use crate::sdp::ProblemKind;

/// Rejection attempts before switching to stick breaking.
const REJECTION_ATTEMPTS: usize = 200;

/// Uniform support of `count` points on the circle with wrap-around
/// separation at least `delta_min`, returned sorted.
///
/// Tries plain rejection first. Dense packings fall back to stick breaking:
/// a uniform rotation plus Dirichlet gaps over the slack `1 - count * delta_min`,
/// which samples the same conditional law exactly.
pub fn random_support<R: Rng + ?Sized>(count: usize, delta_min: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(delta_min >= 0.0) || count as f64 * delta_min >= 1.0 {
        return Err(Error::InfeasiblePacking { count, delta: delta_min });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    for _ in 0..REJECTION_ATTEMPTS {
        let mut v: Vec<f64> = (0..count).map(|_| rng.gen::<f64>()).collect();
        v.sort_by(f64::total_cmp);
        if min_separation(&v).at_least(delta_min) {
            return Ok(v);
        }
    }
    Ok(stick_breaking(count, delta_min, rng))
}

fn stick_breaking<R: Rng + ?Sized>(count: usize, delta_min: f64, rng: &mut R) -> Vec<f64> {
    let slack = 1.0 - count as f64 * delta_min;
    // Cutting the slack at count-1 uniform points of [0, slack] gives
    // Dirichlet(1,...,1) gaps after the first (rotation-fixed) point.
    let mut cuts: Vec<f64> = (0..count - 1).map(|_| rng.gen::<f64>() * slack).collect();
    cuts.sort_by(f64::total_cmp);
    let origin = rng.gen::<f64>();
    let mut out: Vec<f64> = std::iter::once(0.0)
        .chain(cuts.iter().enumerate().map(|(i, c)| c + (i + 1) as f64 * delta_min))
        .map(|t| (origin + t).rem_euclid(1.0))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Amplitude law for the planted signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeLaw {
    /// Unit modulus with uniform phase; gTV uses standard complex normal entries.
    UnitPhase,
    /// Random signs `+-1`; gTV uses real standard normal entries.
    RealSign,
}

impl AmplitudeLaw {
    pub fn label(&self) -> &'static str {
        match self {
            Self::UnitPhase => "unit-phase",
            Self::RealSign => "real-sign",
        }
    }

    fn sign<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        match self {
            Self::UnitPhase => C64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>()),
            Self::RealSign => C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0),
        }
    }

    fn gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let mut g = || -> f64 { StandardNormal.sample(rng) };
        match self {
            Self::UnitPhase => C64::new(g(), g()) * std::f64::consts::FRAC_1_SQRT_2,
            Self::RealSign => C64::new(g(), 0.0),
        }
    }
}

/// Number of line-spectra spikes per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpikeCount {
    Fixed(usize),
    /// `floor(f_c * fill / delta)` where `delta` is in `lambda_c` units.
    Fill(f64),
}

impl SpikeCount {
    pub fn resolve(&self, f_cut: usize, delta: f64) -> usize {
        match *self {
            Self::Fixed(k) => k,
            Self::Fill(fill) => (f_cut as f64 * fill / delta).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub kind: ProblemKind,
    pub f_cut: usize,
    /// Minimum separations in `lambda_c` units.
    pub delta_grid: Vec<f64>,
    pub spikes: SpikeCount,
    /// Sparse corruptions per trial (demixing only).
    pub corruptions: usize,
    /// Signals per trial (group TV only).
    pub signals: usize,
    pub eta: f64,
    pub trials: usize,
    pub seed: u64,
    pub amplitudes: AmplitudeLaw,
    pub options: RecoveryOptions,
}

impl TrialSpec {
    pub fn new(kind: ProblemKind, f_cut: usize, delta_grid: Vec<f64>) -> Self {
        Self {
            kind,
            f_cut,
            delta_grid,
            spikes: SpikeCount::Fill(0.5),
            corruptions: 0,
            signals: 1,
            eta: 1.0,
            trials: 10,
            seed: 0,
            amplitudes: AmplitudeLaw::UnitPhase,
            options: RecoveryOptions::standard(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ProblemConfig::new(self.f_cut)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("separations must be positive, got {d}")));
        }
        if self.signals == 0 {
            return Err(Error::Config("signals must be at least 1".into()));
        }
        if self.kind == ProblemKind::Demix && !(self.eta > 0.0) {
            return Err(Error::Config("eta must be positive".into()));
        }
        if self.corruptions > 2 * self.f_cut + 1 {
            return Err(Error::Config("more corruptions than measurements".into()));
        }
        self.options.solver.validate()
    }

    /// Generator for one trial of the cell at `delta_index`.
    pub fn trial_rng(&self, delta_index: usize, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((delta_index as u64) << 32) | trial as u64);
        rng
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub iterations: usize,
    /// `|dual objective - primal norm of the estimate| / primal norm`.
    pub gap: f64,
    /// Set when the pipeline returned an error; counts as a failure.
    pub error: Option<String>,
}

/// Plant, recover and score one trial.
pub fn run_trial(spec: &TrialSpec, delta_index: usize, trial: usize) -> Result<TrialOutcome> {
    let cfg = ProblemConfig::new(spec.f_cut)?;
    let delta = spec.delta_grid[delta_index];
    let count = spec.spikes.resolve(spec.f_cut, delta);
    let mut rng = spec.trial_rng(delta_index, trial);
    let support = random_support(count, delta * cfg.lambda_c(), &mut rng)?;
    let tol = RecoveryTolerance::standard(cfg);
    let law = spec.amplitudes;
    let outcome = match spec.kind {
        ProblemKind::Tv => {
            let amps = (0..count).map(|_| law.sign(&mut rng)).collect();
            let truth = SpikeTrain::new(support, amps)?;
            recover_tv(&forward_measure(&truth, cfg), &spec.options).map(|r| TrialOutcome {
                success: check_exact_recovery(&truth, &r.estimate, tol.tol_t, tol.tol_a),
                iterations: r.dual.residuals.iterations,
                gap: relative_gap(r.dual.objective, r.estimate.tv_norm()),
                error: None,
            })
        }
        ProblemKind::Demix => {
            let amps = (0..count).map(|_| law.sign(&mut rng)).collect();
            let truth = SpikeTrain::new(support, amps)?;
            let n = cfg.n();
            let mut spikes = vec![C64::new(0.0, 0.0); n];
            for l in sample(&mut rng, n, spec.corruptions).into_vec() {
                spikes[l] = law.sign(&mut rng);
            }
            let y: Vec<C64> = forward_measure(&truth, cfg)
                .coeffs()
                .iter()
                .zip(&spikes)
                .map(|(a, b)| a + b)
                .collect();
            demix(&LowPassData::new(cfg, y)?, spec.eta, &spec.options).map(|r| {
                let l1: f64 = r.spikes.iter().map(|s| s.norm()).sum();
                TrialOutcome {
                    success: check_exact_recovery(&truth, &r.spectra, tol.tol_t, tol.tol_a)
                        && check_exact_spikes(&spikes, &r.spikes, tol.tol_a),
                    iterations: r.dual.residuals.iterations,
                    gap: relative_gap(r.dual.objective, r.spectra.tv_norm() + spec.eta * l1),
                    error: None,
                }
            })
        }
        ProblemKind::Gtv => {
            let amps = DMatrix::from_fn(count, spec.signals, |_, _| law.gaussian(&mut rng));
            let truth = MultiSpikeTrain::new(support, amps)?;
            recover_gtv(&forward_multi(&truth, cfg), &spec.options).map(|r| TrialOutcome {
                success: check_exact_recovery_multi(&truth, &r.estimate, tol.tol_t, tol.tol_a),
                iterations: r.dual.residuals.iterations,
                gap: relative_gap(r.dual.objective, r.estimate.gtv_norm()),
                error: None,
            })
        }
    };
    Ok(outcome.unwrap_or_else(|e| TrialOutcome {
        success: false,
        iterations: 0,
        gap: f64::NAN,
        error: Some(e.to_string()),
    }))
}

fn relative_gap(dual: f64, primal: f64) -> f64 {
    if primal == 0.0 {
        dual.abs()
    } else {
        (dual - primal).abs() / primal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub kind: ProblemKind,
    pub f_cut: usize,
    pub delta_over_lambda: f64,
    pub signals: usize,
    pub spikes: usize,
    pub corruptions: usize,
    pub fraction: f64,
    pub mean_iters: f64,
    /// Mean relative duality gap over trials that produced an estimate.
    pub mean_gap: f64,
    pub failed_trials: usize,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub spec: TrialSpec,
    pub rows: Vec<PhaseRow>,
}

pub const CSV_HEADER: &str = "kind,fc,delta_over_lambda,m,nT,nS,fraction,mean_iters,mean_gap";

impl PhaseTable {
    /// CSV with a `#` metadata line (ignored by gnuplot) and one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# format_version={} seed={} trials={} amplitudes={}\n{CSV_HEADER}\n",
            crate::io::FORMAT_VERSION,
            self.spec.seed,
            self.spec.trials,
            self.spec.amplitudes.label()
        );
        for r in &self.rows {
            let kind = match r.kind {
                ProblemKind::Tv => "TV",
                ProblemKind::Demix => "DEMIX",
                ProblemKind::Gtv => "GTV",
            };
            let _ = writeln!(
                out,
                "{kind},{},{},{},{},{},{},{},{}",
                r.f_cut,
                fmt17(r.delta_over_lambda),
                r.signals,
                r.spikes,
                r.corruptions,
                fmt17(r.fraction),
                fmt17(r.mean_iters),
                fmt17(r.mean_gap)
            );
        }
        out
    }
}

/// Run every trial of every cell in parallel; aggregation follows cell order.
pub fn run_phase(spec: &TrialSpec) -> Result<PhaseTable> {
    spec.validate()?;
    let cfg = ProblemConfig::new(spec.f_cut)?;
    for &d in &spec.delta_grid {
        let count = spec.spikes.resolve(spec.f_cut, d);
        if count as f64 * d * cfg.lambda_c() >= 1.0 {
            return Err(Error::InfeasiblePacking {
                count,
                delta: d * cfg.lambda_c(),
            });
        }
    }
    let jobs: Vec<(usize, usize)> = (0..spec.delta_grid.len())
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(i, t)| run_trial(spec, i, t))
        .collect::<Result<_>>()?;
    let rows = outcomes
        .chunks(spec.trials)
        .zip(&spec.delta_grid)
        .map(|(cell, &d)| {
            let n = cell.len() as f64;
            let ok: Vec<&TrialOutcome> = cell.iter().filter(|o| o.error.is_none()).collect();
            PhaseRow {
                kind: spec.kind,
                f_cut: spec.f_cut,
                delta_over_lambda: d,
                signals: spec.signals,
                spikes: spec.spikes.resolve(spec.f_cut, d),
                corruptions: spec.corruptions,
                fraction: cell.iter().filter(|o| o.success).count() as f64 / n,
                mean_iters: cell.iter().map(|o| o.iterations as f64).sum::<f64>() / n,
                mean_gap: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|o| o.gap).sum::<f64>() / ok.len() as f64
                },
                failed_trials: cell.len() - ok.len(),
                outcomes: cell.to_vec(),
            }
        })
        .collect();
    Ok(PhaseTable {
        spec: spec.clone(),
        rows,
    })
}
