//! Decoding primal estimates from dual solutions: support location from the
//! support-locating polynomial, least-squares amplitudes, the TV, demixing
//! and joint pipelines, and a-posteriori certificate checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    forward_measure, forward_multi, wrap_distance, wrap_position, LowPassData, MultiLowPassData, MultiSpikeTrain,
    ProblemConfig, SpikeTrain, TrigPoly, C64,
};
use crate::sdp::{solve_warm, DualSolution, SdpProblem, SolverOptions};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;
const POLISH_MAX_ITERS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatorOptions {
    /// Uniform grid size for the peak search; `None` picks `max(16 n, 1024)`.
    pub grid_size: Option<usize>,
    /// Minimum locator value: `|P|` for one signal, `sum_k |P_k|^2` otherwise.
    pub threshold: f64,
    /// Peaks closer than this many `lambda_c` are merged.
    pub merge_radius: f64,
    /// Abort when more than this fraction of the grid exceeds the threshold.
    pub max_fraction: f64,
    /// Drop recovered amplitudes below this fraction of the largest one.
    pub prune_relative: f64,
    /// Refine decoded positions by Gauss-Newton on the data residual.
    #[serde(default = "default_polish")]
    pub polish: bool,
}

fn default_polish() -> bool {
    true
}

impl Default for LocatorOptions {
    fn default() -> Self {
        Self {
            grid_size: None,
            threshold: 1.0 - 1e-4,
            merge_radius: 0.05,
            max_fraction: 0.05,
            prune_relative: 1e-6,
            polish: true,
        }
    }
}

impl LocatorOptions {
    pub fn grid_for(&self, cfg: ProblemConfig) -> usize {
        self.grid_size.unwrap_or_else(|| (16 * cfg.n()).max(1024))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    pub solver: SolverOptions,
    pub locator: LocatorOptions,
    /// Spike indices are kept when `|c_l| >= (1 - spike_delta) eta`.
    #[serde(default = "default_spike_delta")]
    pub spike_delta: f64,
}

fn default_spike_delta() -> f64 {
    1e-3
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self::standard()
    }
}

impl RecoveryOptions {
    pub fn new(solver: SolverOptions, locator: LocatorOptions) -> Self {
        Self {
            solver,
            locator,
            spike_delta: default_spike_delta(),
        }
    }

    pub fn standard() -> Self {
        Self::new(SolverOptions::default(), LocatorOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub locations: Vec<f64>,
    pub locator_values: Vec<f64>,
    pub threshold: f64,
}

/// `sum_k |P_k(t)|^2` and its first two derivatives.
fn locator_with_derivatives(polys: &[TrigPoly], t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for p in polys {
        let [v, d1, d2] = p.eval_with_derivatives(t);
        out[0] += v.norm_sqr();
        out[1] += 2.0 * (v.conj() * d1).re;
        out[2] += 2.0 * (d1.norm_sqr() + (v.conj() * d2).re);
    }
    out
}

fn locator_value(polys: &[TrigPoly], t: f64) -> f64 {
    polys.iter().map(|p| p.eval(t).norm_sqr()).sum()
}

/// Safeguarded Newton on the derivative inside `[t - h, t + h]`, falling back
/// to bisection; returns the grid point when the bracket has no sign change.
fn refine_peak(polys: &[TrigPoly], t: f64, h: f64) -> f64 {
    let (mut a, mut b) = (t - h, t + h);
    let ga = locator_with_derivatives(polys, a)[1];
    let gb = locator_with_derivatives(polys, b)[1];
    if !(ga >= 0.0 && gb <= 0.0) {
        return t;
    }
    let mut x = t;
    for _ in 0..NEWTON_MAX_ITERS {
        let [_, g, gp] = locator_with_derivatives(polys, x);
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - g / gp;
        let next = if gp < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step < NEWTON_TOL || b - a < NEWTON_TOL {
            break;
        }
    }
    x
}

fn merge_peaks(mut peaks: Vec<(f64, f64)>, radius: f64) -> Vec<(f64, f64)> {
    peaks.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in peaks {
        match out.last_mut() {
            Some(last) if wrap_distance(last.0, p.0) <= radius => {
                if p.1 > last.1 {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    if out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if wrap_distance(first.0, last.0) <= radius {
            if last.1 > first.1 {
                out[0] = last;
            }
            out.pop();
            out.sort_by(|p, q| p.0.total_cmp(&q.0));
        }
    }
    out
}

/// Peaks of `sum_k |P_k|^2` above the threshold. For a single polynomial the
/// reported values and the threshold refer to `|P|`.
pub fn locate_support(polys: &[TrigPoly], cfg: ProblemConfig, opts: &LocatorOptions) -> Result<SupportEstimate> {
    let single = polys.len() == 1;
    let to_value = |f: f64| if single { f.max(0.0).sqrt() } else { f };
    let grid = opts.grid_for(cfg);
    let h = 1.0 / grid as f64;
    let samples: Vec<f64> = (0..grid).map(|g| locator_value(polys, g as f64 * h)).collect();
    let above = samples.iter().filter(|&&f| to_value(f) >= opts.threshold).count();
    let fraction = above as f64 / grid as f64;
    if fraction > opts.max_fraction {
        return Err(Error::Uninformative(100.0 * fraction));
    }
    let mut peaks = Vec::new();
    for g in 0..grid {
        let prev = samples[(g + grid - 1) % grid];
        let next = samples[(g + 1) % grid];
        let cur = samples[g];
        if cur >= prev && cur > next {
            let t = wrap_position(refine_peak(polys, g as f64 * h, h));
            let v = to_value(locator_value(polys, t).max(cur));
            if v >= opts.threshold {
                peaks.push((t, v));
            }
        }
    }
    let merged = merge_peaks(peaks, opts.merge_radius * cfg.lambda_c());
    Ok(SupportEstimate {
        locations: merged.iter().map(|p| p.0).collect(),
        locator_values: merged.iter().map(|p| p.1).collect(),
        threshold: opts.threshold,
    })
}

/// Support of a TV or demixing dual solution from `|F_n^* c|` of the solver iterate.
pub fn locate_support_tv(sol: &DualSolution, cfg: ProblemConfig, opts: &LocatorOptions) -> Result<SupportEstimate> {
    locate_support(&sol.locator_polynomials()[..1], cfg, opts)
}

/// Measurement matrix `F_T`, `n x |T|`, entries `exp(-i 2 pi k t_j)`.
pub fn measurement_matrix(support: &[f64], cfg: ProblemConfig) -> DMatrix<C64> {
    let f = cfg.f_cut() as i64;
    DMatrix::from_fn(cfg.n(), support.len(), |i, j| {
        C64::from_polar(1.0, -2.0 * PI * (i as i64 - f) as f64 * support[j])
    })
}

/// Least squares through the SVD; refuses numerically rank-deficient systems.
fn least_squares(a: DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    if cols > rows {
        return Err(Error::RankDeficient {
            rows,
            cols,
            cond: f64::INFINITY,
        });
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(cond < 1e12) {
        return Err(Error::RankDeficient { rows, cols, cond });
    }
    svd.solve(b, 0.0).map_err(|_| Error::RankDeficient { rows, cols, cond })
}

/// `[F_T I_S]`: measurement columns followed by unit columns at `spikes`.
fn design_matrix(support: &[f64], spikes: &[usize], cfg: ProblemConfig) -> DMatrix<C64> {
    let ft = measurement_matrix(support, cfg);
    DMatrix::from_fn(cfg.n(), support.len() + spikes.len(), |i, j| {
        if j < support.len() {
            ft[(i, j)]
        } else if spikes[j - support.len()] == i {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn residual_sq(support: &[f64], spikes: &[usize], y: &DMatrix<C64>, cfg: ProblemConfig) -> Option<f64> {
    let a = design_matrix(support, spikes, cfg);
    let x = least_squares(a.clone(), y).ok()?;
    Some((y - a * x).norm_squared())
}

/// Variable-projection Gauss-Newton on the positions: amplitudes are
/// eliminated by least squares and each step solves the linearized problem
/// for the position offsets (Kaufman's Jacobian). Steps are capped at
/// `max_step` and halved until the residual decreases; the input is
/// returned unchanged when nothing improves.
pub fn polish_positions(
    support: &[f64],
    spikes: &[usize],
    y: &DMatrix<C64>,
    cfg: ProblemConfig,
    max_step: f64,
) -> Vec<f64> {
    let mut t = support.to_vec();
    let Some(mut cost) = residual_sq(&t, spikes, y, cfg) else {
        return t;
    };
    let floor = 1e-30 * y.norm_squared();
    let (n, m, k) = (cfg.n(), y.ncols(), support.len());
    let f = cfg.f_cut() as f64;
    for _ in 0..POLISH_MAX_ITERS {
        if k == 0 || cost <= floor {
            break;
        }
        let a = design_matrix(&t, spikes, cfg);
        let Ok(x) = least_squares(a.clone(), y) else {
            break;
        };
        let r = y - &a * &x;
        let u = a.clone().svd(true, false).u.expect("left singular vectors");
        // Real Jacobian of vec(r) with respect to t, projected off range(A).
        let mut jac = DMatrix::<f64>::zeros(2 * n * m, k);
        for j in 0..k {
            let d = DMatrix::from_fn(n, m, |i, c| {
                let freq = i as f64 - f;
                -C64::new(0.0, -2.0 * PI * freq) * a[(i, j)] * x[(j, c)]
            });
            let d = &d - &u * (u.adjoint() * &d);
            for (idx, v) in d.iter().enumerate() {
                jac[(2 * idx, j)] = v.re;
                jac[(2 * idx + 1, j)] = v.im;
            }
        }
        let rhs = DVector::from_iterator(2 * n * m, r.iter().flat_map(|v| [-v.re, -v.im]));
        let Ok(step) = jac.svd(true, true).solve(&rhs, 1e-14) else {
            break;
        };
        let biggest = step.amax();
        let mut scale = if biggest > max_step { max_step / biggest } else { 1.0 };
        let mut accepted = false;
        for _ in 0..10 {
            let trial: Vec<f64> = t.iter().zip(step.iter()).map(|(p, d)| wrap_position(p + scale * d)).collect();
            if let Some(c) = residual_sq(&trial, spikes, y, cfg) {
                if c < cost {
                    t = trial;
                    cost = c;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || scale * biggest < 1e-15 {
            break;
        }
    }
    t
}

/// Least-squares amplitudes for `y = F_T a`.
pub fn estimate_amplitudes(support: &[f64], y: &LowPassData) -> Result<Vec<C64>> {
    let cfg = y.config();
    let b = DMatrix::from_column_slice(cfg.n(), 1, y.coeffs());
    let sol = least_squares(measurement_matrix(support, cfg), &b)?;
    Ok(sol.column(0).iter().copied().collect())
}

fn residual_norm(y: &[C64], fitted: &[C64]) -> f64 {
    y.iter().zip(fitted).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// Fit amplitudes, drop negligible ones and refit on the survivors.
fn fit_pruned(support: &[f64], y: &LowPassData, prune: f64) -> Result<SpikeTrain> {
    let amps = estimate_amplitudes(support, y)?;
    let top = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..amps.len()).filter(|&j| amps[j].norm() > prune * top).collect();
    if keep.len() == amps.len() {
        return SpikeTrain::new(support.to_vec(), amps);
    }
    let kept: Vec<f64> = keep.iter().map(|&j| support[j]).collect();
    let amps = estimate_amplitudes(&kept, y)?;
    SpikeTrain::new(kept, amps)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TvRecovery {
    pub estimate: SpikeTrain,
    pub support: SupportEstimate,
    pub dual: DualSolution,
    /// `||y - F x_hat||`.
    pub residual: f64,
}

/// Solve the TV dual, locate the support, fit amplitudes.
pub fn recover_tv(y: &LowPassData, opts: &RecoveryOptions) -> Result<TvRecovery> {
    recover_tv_warm(y, opts, None)
}

pub fn recover_tv_warm(y: &LowPassData, opts: &RecoveryOptions, warm: Option<&DualSolution>) -> Result<TvRecovery> {
    let cfg = y.config();
    let dual = solve_warm(&SdpProblem::tv(y), &opts.solver, warm)?;
    let support = locate_support_tv(&dual, cfg, &opts.locator)?;
    let mut estimate = fit_pruned(&support.locations, y, opts.locator.prune_relative)?;
    if opts.locator.polish && !estimate.is_empty() {
        let data = DMatrix::from_column_slice(cfg.n(), 1, y.coeffs());
        let locs = polish_positions(estimate.support(), &[], &data, cfg, opts.locator.merge_radius * cfg.lambda_c());
        estimate = SpikeTrain::new(locs.clone(), estimate_amplitudes(&locs, y)?)?;
    }
    let residual = residual_norm(y.coeffs(), forward_measure(&estimate, cfg).coeffs());
    Ok(TvRecovery {
        estimate,
        support,
        dual,
        residual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemixResult {
    pub spectra: SpikeTrain,
    /// Dense spike vector, indexed like the data (`k` ascending).
    pub spikes: Vec<C64>,
    /// Indices `l` with `|c_l| >= (1 - delta) eta`.
    pub spike_support: Vec<usize>,
    pub support: SupportEstimate,
    pub dual: DualSolution,
    /// `||y - F x_hat - s_hat||`.
    pub residual: f64,
}

/// Separate line spectra from sparse spikes in the data.
pub fn demix(y: &LowPassData, eta: f64, opts: &RecoveryOptions) -> Result<DemixResult> {
    let cfg = y.config();
    let n = cfg.n();
    let dual = solve_warm(&SdpProblem::demix(y, eta)?, &opts.solver, None)?;
    let c = dual.iterate_coefficients();
    let spike_support: Vec<usize> = (0..n).filter(|&l| c[l].norm() >= (1.0 - opts.spike_delta) * eta).collect();
    let support = locate_support_tv(&dual, cfg, &opts.locator)?;
    let data = DMatrix::from_column_slice(n, 1, y.coeffs());
    let fit = |t: &[f64], s: &[usize]| -> Result<DMatrix<C64>> {
        if t.len() + s.len() > n {
            return Err(Error::RankDeficient {
                rows: n,
                cols: t.len() + s.len(),
                cond: f64::INFINITY,
            });
        }
        least_squares(design_matrix(t, s, cfg), &data)
    };
    let mut locs = support.locations.clone();
    let mut coef = fit(&locs, &spike_support)?;
    let top = coef.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let prune = opts.locator.prune_relative * top;
    let mut spikes_idx = spike_support.clone();
    if coef.iter().any(|a| a.norm() <= prune) {
        let t_len = locs.len();
        locs = (0..t_len).filter(|&j| coef[(j, 0)].norm() > prune).map(|j| locs[j]).collect();
        spikes_idx = (0..spike_support.len())
            .filter(|&j| coef[(t_len + j, 0)].norm() > prune)
            .map(|j| spike_support[j])
            .collect();
        coef = fit(&locs, &spikes_idx)?;
    }
    if opts.locator.polish && !locs.is_empty() {
        locs = polish_positions(&locs, &spikes_idx, &data, cfg, opts.locator.merge_radius * cfg.lambda_c());
        coef = fit(&locs, &spikes_idx)?;
    }
    let spectra = SpikeTrain::new(locs.clone(), coef.rows(0, locs.len()).iter().copied().collect())?;
    let mut spikes = vec![C64::new(0.0, 0.0); n];
    for (j, &l) in spikes_idx.iter().enumerate() {
        spikes[l] = coef[(locs.len() + j, 0)];
    }
    let model: Vec<C64> = forward_measure(&spectra, cfg)
        .coeffs()
        .iter()
        .zip(&spikes)
        .map(|(a, b)| a + b)
        .collect();
    Ok(DemixResult {
        residual: residual_norm(y.coeffs(), &model),
        spectra,
        spikes,
        spike_support: spikes_idx,
        support,
        dual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtvRecovery {
    pub estimate: MultiSpikeTrain,
    pub support: SupportEstimate,
    pub dual: DualSolution,
    pub residual: f64,
}

/// Common support from `sum_k |(F_n^* C_k)(t)|^2`, then per-signal least squares.
pub fn recover_gtv(y: &MultiLowPassData, opts: &RecoveryOptions) -> Result<GtvRecovery> {
    let cfg = y.config();
    let dual = solve_warm(&SdpProblem::gtv(y), &opts.solver, None)?;
    let support = locate_support(&dual.locator_polynomials(), cfg, &opts.locator)?;
    let ft = measurement_matrix(&support.locations, cfg);
    let mut amps = least_squares(ft, y.data())?;
    let norms: Vec<f64> = amps.row_iter().map(|r| r.norm()).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..norms.len())
        .filter(|&j| norms[j] > opts.locator.prune_relative * top)
        .collect();
    let mut locs = support.locations.clone();
    if keep.len() < norms.len() {
        locs = keep.iter().map(|&j| locs[j]).collect();
        amps = least_squares(measurement_matrix(&locs, cfg), y.data())?;
    }
    if opts.locator.polish && !locs.is_empty() {
        locs = polish_positions(&locs, &[], y.data(), cfg, opts.locator.merge_radius * cfg.lambda_c());
        amps = least_squares(measurement_matrix(&locs, cfg), y.data())?;
    }
    let estimate = MultiSpikeTrain::new(locs, amps)?;
    let fitted = forward_multi(&estimate, cfg);
    let residual = (y.data() - fitted.data()).norm();
    Ok(GtvRecovery {
        estimate,
        support,
        dual,
        residual,
    })
}

/// Default exact-recovery tolerances: positions within `1e-3 lambda_c`,
/// amplitudes within `1e-3` relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTolerance {
    pub tol_t: f64,
    pub tol_a: f64,
}

impl RecoveryTolerance {
    pub fn standard(cfg: ProblemConfig) -> Self {
        Self {
            tol_t: 1e-3 * cfg.lambda_c(),
            tol_a: 1e-3,
        }
    }
}

/// Bijection from truth positions to estimate positions within `tol_t`.
pub fn match_supports(truth: &[f64], estimate: &[f64], tol_t: f64) -> Option<Vec<usize>> {
    if truth.len() != estimate.len() {
        return None;
    }
    let mut used = vec![false; estimate.len()];
    let mut map = Vec::with_capacity(truth.len());
    for &t in truth {
        let best = (0..estimate.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| wrap_distance(t, estimate[a]).total_cmp(&wrap_distance(t, estimate[b])))?;
        if wrap_distance(t, estimate[best]) > tol_t {
            return None;
        }
        used[best] = true;
        map.push(best);
    }
    Some(map)
}

pub fn check_exact_recovery(truth: &SpikeTrain, estimate: &SpikeTrain, tol_t: f64, tol_a: f64) -> bool {
    match match_supports(truth.support(), estimate.support(), tol_t) {
        Some(map) => truth
            .amplitudes()
            .iter()
            .zip(&map)
            .all(|(a, &j)| (estimate.amplitudes()[j] - a).norm() <= tol_a * a.norm()),
        None => false,
    }
}

/// Row-wise version for several signals: `||A_hat_j - A_j|| <= tol_a ||A_j||`.
pub fn check_exact_recovery_multi(truth: &MultiSpikeTrain, estimate: &MultiSpikeTrain, tol_t: f64, tol_a: f64) -> bool {
    if truth.signals() != estimate.signals() {
        return false;
    }
    match match_supports(truth.support(), estimate.support(), tol_t) {
        Some(map) => map.iter().enumerate().all(|(j, &e)| {
            let a = truth.amplitudes().row(j);
            (estimate.amplitudes().row(e) - a).norm() <= tol_a * a.norm()
        }),
        None => false,
    }
}

/// Spike vectors agree entrywise within `tol_a` relative to the true entry;
/// entries that are zero in the truth must stay below `tol_a` times the
/// largest true entry.
pub fn check_exact_spikes(truth: &[C64], estimate: &[C64], tol_a: f64) -> bool {
    if truth.len() != estimate.len() {
        return false;
    }
    let top = truth.iter().map(|a| a.norm()).fold(0.0, f64::max);
    truth.iter().zip(estimate).all(|(a, b)| {
        let scale = if *a == C64::new(0.0, 0.0) { top } else { a.norm() };
        (a - b).norm() <= tol_a * scale
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    /// Allowed error in the interpolation conditions.
    pub interpolation: f64,
    /// Points closer than this many `lambda_c` to the support are excluded
    /// from the strict off-support bound (they still must not exceed `1 + interpolation`).
    pub exclusion: f64,
    /// Required gap below 1 away from the support.
    pub strict_margin: f64,
    /// Off-support coefficients must satisfy `|c_l| <= (1 - coefficient_margin) eta`.
    pub coefficient_margin: f64,
    pub grid_size: usize,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            interpolation: 1e-3,
            exclusion: 0.1,
            strict_margin: 1e-6,
            coefficient_margin: 1e-3,
            grid_size: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub interpolation_error: f64,
    /// Largest locator value away from the support.
    pub max_off_support: f64,
    /// Largest locator value anywhere on the grid.
    pub max_anywhere: f64,
    /// Largest `|c_l - eta e^{i psi_l}|` over spike indices, divided by `eta`.
    pub coefficient_error: f64,
    /// Largest `|c_l| / eta` over non-spike indices.
    pub max_off_coefficients: f64,
    pub counts_ok: bool,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Scan `sum_k |Q_k|^2` on a grid: maximum away from the support and overall.
fn scan_off_support(polys: &[TrigPoly], support: &[f64], exclusion: f64, grid: usize) -> (f64, f64) {
    let mut off = 0.0f64;
    let mut all = 0.0f64;
    for g in 0..grid {
        let t = g as f64 / grid as f64;
        let v = locator_value(polys, t);
        all = all.max(v);
        if support.iter().all(|&s| wrap_distance(s, t) > exclusion) {
            off = off.max(v);
        }
    }
    (off, all)
}

fn unit(a: C64) -> C64 {
    a / a.norm()
}

/// Conditions making `(x, s)` the unique demixing solution: `F_n^* c`
/// interpolates the signs of `x` on its support and is below 1 elsewhere,
/// `c` equals `eta` times the spike signs on their support and is smaller
/// elsewhere, and `|T| + |S| <= n`.
pub fn check_demix_certificate(
    x: &SpikeTrain,
    spikes: &[C64],
    c: &[C64],
    eta: f64,
    cfg: ProblemConfig,
    tol: &CertificateTolerances,
) -> Result<CertificateCheck> {
    let n = cfg.n();
    if spikes.len() != n || c.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: if spikes.len() != n { spikes.len() } else { c.len() },
        });
    }
    let poly = TrigPoly::new(c.to_vec())?;
    let interpolation_error = x
        .support()
        .iter()
        .zip(x.amplitudes())
        .map(|(&t, &a)| (poly.eval(t) - unit(a)).norm())
        .fold(0.0, f64::max);
    let (off, all) = scan_off_support(
        std::slice::from_ref(&poly),
        x.support(),
        tol.exclusion * cfg.lambda_c(),
        tol.grid_size,
    );
    let (max_off_support, max_anywhere) = (off.sqrt(), all.sqrt());
    let on_s: Vec<usize> = (0..n).filter(|&l| spikes[l] != C64::new(0.0, 0.0)).collect();
    let coefficient_error = on_s
        .iter()
        .map(|&l| (c[l] - unit(spikes[l]) * eta).norm() / eta)
        .fold(0.0, f64::max);
    let max_off_coefficients = (0..n)
        .filter(|l| !on_s.contains(l))
        .map(|l| c[l].norm() / eta)
        .fold(0.0, f64::max);
    let counts_ok = x.len() + on_s.len() <= n;

    let mut failures = Vec::new();
    if !(interpolation_error <= tol.interpolation) {
        failures.push(format!("interpolation error {interpolation_error:.3e} on the line-spectra support"));
    }
    if !(max_off_support < 1.0 - tol.strict_margin) || !(max_anywhere <= 1.0 + tol.interpolation) {
        failures.push(format!(
            "polynomial modulus {max_off_support:.9} off the support (max {max_anywhere:.9})"
        ));
    }
    if !(coefficient_error <= tol.interpolation) {
        failures.push(format!("spike coefficients deviate from eta signs by {coefficient_error:.3e}"));
    }
    if !(max_off_coefficients <= 1.0 - tol.coefficient_margin) {
        failures.push(format!("off-spike coefficient reaches {max_off_coefficients:.6} eta"));
    }
    if !counts_ok {
        failures.push(format!("|T| + |S| = {} exceeds n = {n}", x.len() + on_s.len()));
    }
    Ok(CertificateCheck {
        interpolation_error,
        max_off_support,
        max_anywhere,
        coefficient_error,
        max_off_coefficients,
        counts_ok,
        pass: failures.is_empty(),
        failures,
    })
}

/// Conditions making `X` the unique group-TV solution: `Q_k = F_n^* C_k`
/// interpolates `A_jk / ||A_j:||` on the support and `sum_k |Q_k|^2 < 1`
/// elsewhere. With one signal these are the single-measure certificate
/// conditions.
pub fn check_gtv_certificate(
    x: &MultiSpikeTrain,
    c: &DMatrix<C64>,
    cfg: ProblemConfig,
    tol: &CertificateTolerances,
) -> Result<CertificateCheck> {
    if c.nrows() != cfg.n() || c.ncols() != x.signals() {
        return Err(Error::Shape(format!(
            "dual matrix is {}x{}, expected {}x{}",
            c.nrows(),
            c.ncols(),
            cfg.n(),
            x.signals()
        )));
    }
    let polys: Vec<TrigPoly> = (0..c.ncols())
        .map(|k| TrigPoly::new(c.column(k).iter().copied().collect()))
        .collect::<Result<_>>()?;
    let mut interpolation_error = 0.0f64;
    for (j, &t) in x.support().iter().enumerate() {
        let row = x.amplitudes().row(j);
        let norm = row.norm();
        for (k, p) in polys.iter().enumerate() {
            interpolation_error = interpolation_error.max((p.eval(t) - row[k] / norm).norm());
        }
    }
    let (max_off_support, max_anywhere) =
        scan_off_support(&polys, x.support(), tol.exclusion * cfg.lambda_c(), tol.grid_size);
    let counts_ok = x.len() <= cfg.n();
    let mut failures = Vec::new();
    if !(interpolation_error <= tol.interpolation) {
        failures.push(format!("interpolation error {interpolation_error:.3e} on the support"));
    }
    if !(max_off_support < 1.0 - tol.strict_margin) || !(max_anywhere <= 1.0 + tol.interpolation) {
        failures.push(format!(
            "locator {max_off_support:.9} off the support (max {max_anywhere:.9})"
        ));
    }
    if !counts_ok {
        failures.push(format!("|T| = {} exceeds n = {}", x.len(), cfg.n()));
    }
    Ok(CertificateCheck {
        interpolation_error,
        max_off_support,
        max_anywhere,
        coefficient_error: 0.0,
        max_off_coefficients: 0.0,
        counts_ok,
        pass: failures.is_empty(),
        failures,
    })
}

/// Residual orthogonality `||F_T^* (y - F_T a)||` of a least-squares fit.
pub fn normal_equation_residual(support: &[f64], y: &LowPassData, amplitudes: &[C64]) -> f64 {
    let ft = measurement_matrix(support, y.config());
    let a = DVector::from_column_slice(amplitudes);
    let r = DVector::from_column_slice(y.coeffs()) - &ft * a;
    (ft.adjoint() * r).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exact_recovery_checks() {
        let truth = SpikeTrain::new(vec![0.1, 0.5], vec![c(1.0, 0.0), c(0.0, -2.0)]).unwrap();
        assert!(check_exact_recovery(&truth, &truth, 1e-4, 1e-3));
        let moved = SpikeTrain::new(vec![0.1 + 5e-5, 0.5 - 5e-5], truth.amplitudes().to_vec()).unwrap();
        assert!(check_exact_recovery(&truth, &moved, 1e-4, 1e-3));
        let extra = SpikeTrain::new(vec![0.1, 0.3, 0.5], vec![c(1.0, 0.0), c(1e-2, 0.0), c(0.0, -2.0)]).unwrap();
        assert!(!check_exact_recovery(&truth, &extra, 1e-4, 1e-3));
    }

    #[test]
    fn single_spike_amplitude_at_origin() {
        let cfg = ProblemConfig::new(3).unwrap();
        let y = LowPassData::new(cfg, vec![c(0.5, 0.25); 7]).unwrap();
        let a = estimate_amplitudes(&[0.0], &y).unwrap();
        assert!((a[0] - c(0.5, 0.25)).norm() < 1e-14);
    }

    #[test]
    fn merging_wraps_around() {
        let peaks = vec![(0.001, 0.9), (0.999, 0.95), (0.5, 1.0)];
        let merged = merge_peaks(peaks, 0.01);
        assert_eq!(merged.len(), 2);
        assert!(merged.iter().any(|p| p.0 == 0.999));
    }

    #[test]
    fn coincident_support_is_rank_deficient() {
        let cfg = ProblemConfig::new(3).unwrap();
        let y = LowPassData::zeros(cfg);
        assert!(matches!(
            estimate_amplitudes(&[0.2, 0.2 + 1e-15], &y),
            Err(Error::RankDeficient { .. })
        ));
    }
}
