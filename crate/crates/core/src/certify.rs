//! Support-independent certification that the interpolating certificate has
//! modulus below one away from the support, for every support whose minimum
//! separation is at least `tau_min / f_c`.
//!
//! All quantities are in scaled units (positions in multiples of `1/f_c`,
//! derivatives of order `l` divided by `f_c^l`), where the bounds depend on
//! the weights, `tau_min` and `f_min` only.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::KernelBounds;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, DEFAULT_GAMMA};
use crate::kernel_sum::KernelSumTable;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub gamma: Vec<f64>,
    pub f_min: f64,
    pub tau_min: f64,
    pub eps: f64,
    /// End of the region handled by the curvature argument.
    pub near_radius: f64,
    /// End of the region where the curvature bound must be negative.
    pub concavity_radius: f64,
    /// Right end of the grid on which the curvature curve is reported.
    pub near_grid_end: f64,
    /// Keep every `curve_stride`-th grid value in the serialized curves.
    pub curve_stride: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA.to_vec(),
            f_min: 1e3,
            tau_min: 1.26,
            eps: 1e-6,
            near_radius: 0.288316,
            concavity_radius: 0.110497,
            near_grid_end: 0.3,
            curve_stride: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    /// The bound chain breaks down before any regime can be examined.
    Fail,
    /// A regime bound does not stay below one on the configured grid.
    Inconclusive,
}

/// Bounds on the interpolation system and on the certificate coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaConstants {
    /// `2 H_l(0)` for `l = 0, 1, 2`: bounds on `||I - D0||`, `||D1||`, `||D2 - diag||`.
    pub two_h: [f64; 3],
    pub d2_inv_bound: f64,
    pub schur_bound: f64,
    pub schur_inv_bound: f64,
    pub alpha_upper: f64,
    pub alpha_real_lower: f64,
    pub alpha_imag_upper: f64,
    pub beta_upper: f64,
    /// Residual tail constants `C_0..C_3`.
    pub tail_constants: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub f2: f64,
    pub f_inf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearRegime {
    pub f2_origin: f64,
    /// First cell start `j eps` (j >= 1) where the curvature bound is not negative.
    pub f2_negative_end: f64,
    pub concavity_holds: bool,
    /// `max_k F_k^inf - 1` over `2 <= k <= near_radius / eps`. The bound is
    /// exactly 1 at `k = 1`, where concavity takes over.
    pub max_f_inf_minus_one: f64,
    pub margin: f64,
    /// `1 - F_k^inf` at the last cell of the regime.
    pub endpoint_margin: f64,
    /// `1 - sqrt(1 - endpoint_margin)`: modulus margin at the regime end.
    pub modulus_margin: f64,
    /// First grid point `k >= 2` where `F_k^inf >= 1`, if any within the grid.
    pub first_crossing: Option<f64>,
    pub near_branch_cells: usize,
    pub curve: Vec<CurvePoint>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MidRegime {
    pub max: f64,
    pub margin: f64,
    pub argmax: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarRegime {
    pub max: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub format_version: u32,
    pub config: CertifyConfig,
    pub constants: Option<LemmaConstants>,
    pub near: Option<NearRegime>,
    pub mid: Option<MidRegime>,
    pub far: Option<FarRegime>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Upper bounds on the three products making up half of `(|q|^2)''`.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureTerms {
    pub real: f64,
    pub imag: f64,
    pub slope: f64,
    pub concave_branch: bool,
}

/// Shared state of one certification run.
pub struct CertContext {
    pub cfg: CertifyConfig,
    pub bounds: KernelBounds,
    pub table: KernelSumTable,
    pub constants: LemmaConstants,
}

/// Nearest lattice index when `x / eps` is within rounding of an integer.
fn lattice_index(x: f64, eps: f64) -> i64 {
    let r = x / eps;
    if (r - r.round()).abs() < 1e-6 {
        r.round() as i64
    } else {
        r.floor() as i64
    }
}

fn lattice_ceil(x: f64, eps: f64) -> i64 {
    let r = x / eps;
    if (r - r.round()).abs() < 1e-6 {
        r.round() as i64
    } else {
        r.ceil() as i64
    }
}

/// Scaled kernel spec at the reference frequency.
pub fn scaled_spec(cfg: &CertifyConfig) -> Result<KernelSpec> {
    KernelSpec::new(cfg.gamma.clone(), cfg.f_min, cfg.f_min)
}

/// Constants chain from `H_l(0)`: Neumann-series bounds on `D2^{-1}`, on the
/// Schur complement and on the coefficients.
pub fn lemma_constants(spec: &KernelSpec, table: &KernelSumTable) -> Result<LemmaConstants> {
    let two_h = [
        2.0 * table.at_index(0, 0),
        2.0 * table.at_index(1, 0),
        2.0 * table.at_index(2, 0),
    ];
    let sum_sq: f64 = spec.gamma().iter().map(|g| g * g).sum();
    // |K''(0)| / f_c^2 >= 4 pi^2 / 3 * sum gamma^2
    let diag = 4.0 * PI * PI / 3.0 * sum_sq;
    let d2_room = diag - two_h[2];
    if !(d2_room > 0.0) {
        return Err(Error::NotInvertible(two_h[2] / diag));
    }
    let d2_inv_bound = 1.0 / d2_room;
    let schur_bound = two_h[0] + two_h[1] * two_h[1] * d2_inv_bound;
    if !(schur_bound < 1.0) {
        return Err(Error::NotInvertible(schur_bound));
    }
    let schur_inv_bound = 1.0 / (1.0 - schur_bound);
    let tail_constants = std::array::from_fn(|l| {
        crate::bounds::tail_constant(spec, l, table.tau_min()).unwrap_or(f64::NAN)
            / spec.f_cut().powi(l as i32)
    });
    Ok(LemmaConstants {
        two_h,
        d2_inv_bound,
        schur_bound,
        schur_inv_bound,
        alpha_upper: schur_inv_bound,
        alpha_real_lower: 1.0 - schur_inv_bound * schur_bound,
        alpha_imag_upper: schur_inv_bound * schur_bound,
        beta_upper: d2_inv_bound * two_h[1] * schur_inv_bound,
        tail_constants,
    })
}

impl CertContext {
    pub fn new(cfg: CertifyConfig) -> Result<Self> {
        if !(cfg.eps > 0.0) || !(cfg.tau_min > 0.0) {
            return Err(Error::Config("eps and tau_min must be positive".into()));
        }
        if !(cfg.concavity_radius <= cfg.near_radius
            && cfg.near_radius <= cfg.near_grid_end
            && cfg.near_grid_end <= cfg.tau_min / 2.0)
        {
            return Err(Error::Config(format!(
                "regime endpoints must satisfy concavity <= near <= grid end <= tau_min/2, got {} {} {} {}",
                cfg.concavity_radius,
                cfg.near_radius,
                cfg.near_grid_end,
                cfg.tau_min / 2.0
            )));
        }
        let spec = scaled_spec(&cfg)?;
        let table = KernelSumTable::build(&spec, cfg.tau_min, cfg.eps, cfg.tau_min / 2.0 + cfg.eps)?;
        let constants = lemma_constants(&spec, &table)?;
        Ok(Self {
            bounds: KernelBounds::new(&spec),
            cfg,
            table,
            constants,
        })
    }

    /// `H_l(-(j+1) eps) + H_l((j+1) eps)`.
    fn h_pair(&self, order: usize, j: i64) -> f64 {
        self.table.at_index(order, -(j + 1)) + self.table.at_index(order, j + 1)
    }

    /// Products bounding `q_R q_R''`, `q_I q_I''` and `|q'|^2` on cell
    /// `[j eps, (j+1) eps]`.
    pub fn curvature_terms(&self, j: i64) -> CurvatureTerms {
        let eps = self.cfg.eps;
        let c = &self.constants;
        let (au, arl, aiu, bu) = (c.alpha_upper, c.alpha_real_lower, c.alpha_imag_upper, c.beta_upper);
        let tau = j as f64 * eps;
        let near = self.bounds.near_all(tau);
        let binf = self.bounds.inf_all(tau, eps);
        let hs: [f64; 4] = std::array::from_fn(|l| self.h_pair(l, j));
        let g = |l: usize, a1: f64, a2: f64| a1 * binf[l] + a2 * hs[l];

        let j0rl = arl * (near[0].0 - 2.0 * PI * eps) - au * hs[0] - g(1, bu, bu);
        let j0r = g(0, au, au) + g(1, bu, bu);
        let j0i = g(0, aiu, au) + g(1, bu, bu);
        let j1 = g(1, au, au) + g(2, bu, bu);
        let j2r = g(2, au, au) + g(3, bu, bu);
        let j2i = g(2, aiu, au) + g(3, bu, bu);
        let imag = j2i * j0i;
        let slope = j1 * j1;

        let top = near[2].1 + (2.0 * PI).powi(3) * eps;
        if top < 0.0 && j0rl > 0.0 {
            // Re(alpha_0) K'' <= alpha_R^L sup K'' since K'' < 0 on the cell.
            let j2r_near = arl * top + au * hs[2] + g(3, bu, bu);
            // q_R is positive and lies in [J0RL, J0R], so the product with an
            // upper bound on q_R'' peaks at the end matching its sign.
            let qr = if j2r_near < 0.0 { j0rl } else { j0r };
            return CurvatureTerms { real: j2r_near * qr, imag, slope, concave_branch: true };
        }
        CurvatureTerms { real: j2r * j0r, imag, slope, concave_branch: false }
    }

    /// Curvature bound `F_{2,j}` on cell `[j eps, (j+1) eps]`; the flag reports
    /// whether the concave branch was used.
    pub fn curvature_bound(&self, j: i64) -> (f64, bool) {
        let t = self.curvature_terms(j);
        (2.0 * (t.real + t.imag + t.slope), t.concave_branch)
    }

    /// Modulus bound on cell `[j eps, (j+1) eps]` from the triangle inequality.
    pub fn modulus_bound(&self, j: i64) -> f64 {
        let eps = self.cfg.eps;
        let c = &self.constants;
        let binf = self.bounds.inf_all(j as f64 * eps, eps);
        c.alpha_upper * (binf[0] + self.h_pair(0, j)) + c.beta_upper * (binf[1] + self.h_pair(1, j))
    }
}

pub fn certify_near(ctx: &CertContext) -> NearRegime {
    let eps = ctx.cfg.eps;
    let last = lattice_ceil(ctx.cfg.near_grid_end, eps);
    let cells: Vec<(f64, bool)> = (0..=last).into_par_iter().map(|j| ctx.curvature_bound(j)).collect();
    let f2: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let near_branch_cells = cells.iter().filter(|c| c.1).count();

    // F_k^inf - 1 = eps^2 (S_k + max(D_k, 0)), D_j = sum_{l<j} F_{2,l} + (F_{2,j})_+,
    // S_k = sum_{j<k} D_j.
    let k_end = lattice_index(ctx.cfg.near_radius, eps);
    let mut prefix = 0.0;
    let mut s = 0.0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut first_crossing = None;
    let mut endpoint = f64::NAN;
    let mut curve = Vec::new();
    for (k, &f2k) in f2.iter().enumerate() {
        let d = prefix + f2k.max(0.0);
        let excess = eps * eps * (s + d.max(0.0));
        if k >= 2 && (k as i64) <= k_end {
            max_excess = max_excess.max(excess);
        }
        if k as i64 == k_end {
            endpoint = excess;
        }
        if k >= 2 && first_crossing.is_none() && excess >= 0.0 {
            first_crossing = Some(k as f64 * eps);
        }
        if k % ctx.cfg.curve_stride.max(1) == 0 {
            curve.push(CurvePoint {
                tau: k as f64 * eps,
                f2: f2k,
                f_inf: 1.0 + excess,
            });
        }
        s += d;
        prefix += f2k;
    }

    let conc_end = lattice_index(ctx.cfg.concavity_radius, eps);
    let first_nonneg = (1..f2.len()).find(|&j| f2[j] >= 0.0);
    let f2_negative_end = first_nonneg.map_or(f2.len() as f64 * eps, |j| j as f64 * eps);
    let concavity_holds = f2[0] < 0.0 && first_nonneg.map_or(true, |j| j as i64 >= conc_end);
    let ok = max_excess < 0.0 && concavity_holds;
    NearRegime {
        f2_origin: f2[0],
        f2_negative_end,
        concavity_holds,
        max_f_inf_minus_one: max_excess,
        margin: -max_excess,
        endpoint_margin: -endpoint,
        modulus_margin: 1.0 - (1.0 + endpoint).max(0.0).sqrt(),
        first_crossing,
        near_branch_cells,
        curve,
        verdict: if ok { Verdict::Pass } else { Verdict::Inconclusive },
    }
}

pub fn certify_mid(ctx: &CertContext) -> MidRegime {
    let eps = ctx.cfg.eps;
    let start = lattice_index(ctx.cfg.near_radius, eps);
    let end = lattice_ceil(ctx.cfg.tau_min / 2.0, eps) - 1;
    let vals: Vec<f64> = (start..=end).into_par_iter().map(|j| ctx.modulus_bound(j)).collect();
    let (mut max, mut arg) = (f64::NEG_INFINITY, start);
    for (i, &v) in vals.iter().enumerate() {
        if v > max {
            max = v;
            arg = start + i as i64;
        }
    }
    MidRegime {
        max,
        margin: 1.0 - max,
        argmax: arg as f64 * eps,
        verdict: if max < 1.0 { Verdict::Pass } else { Verdict::Inconclusive },
    }
}

pub fn certify_far(ctx: &CertContext) -> FarRegime {
    let eps = ctx.cfg.eps;
    let tm = ctx.cfg.tau_min;
    let lo = lattice_index(tm / 2.0, eps);
    let hi = lattice_ceil(2.0 * tm, eps);
    let grid_max = (lo..=hi)
        .into_par_iter()
        .map(|m| {
            let b = ctx.bounds.inf_all(m as f64 * eps, eps);
            [b[0], b[1]]
        })
        .reduce(|| [0.0, 0.0], |a, b| [a[0].max(b[0]), a[1].max(b[1])]);
    let tail = ctx.bounds.tail_all(2.0 * tm);
    let h = |l: usize| {
        ctx.table.scaled(l, tm / 2.0).unwrap_or(f64::INFINITY) + ctx.table.at_index(l, 0)
    };
    let c = &ctx.constants;
    let max = c.alpha_upper * (grid_max[0].max(tail[0]) + h(0))
        + c.beta_upper * (grid_max[1].max(tail[1]) + h(1));
    FarRegime {
        max,
        margin: 1.0 - max,
        verdict: if max < 1.0 { Verdict::Pass } else { Verdict::Inconclusive },
    }
}

fn standard_notes(cfg: &CertifyConfig) -> Vec<String> {
    vec![
        format!("units: positions in multiples of 1/f_c, order-l quantities divided by f_c^l (f_min = {})", cfg.f_min),
        "breakpoint ties (tau equal to tau_3) take the near branch".into(),
        "gaps wider than the minimum separation beyond 2 tau_min rely on monotonicity of H_l".into(),
        "grid covers use the enclosing eps-lattice, a superset of the nominal intervals".into(),
    ]
}

/// Full pipeline: constants, then the three regimes.
pub fn run_certification(cfg: CertifyConfig) -> Result<CertificateReport> {
    let mut notes = standard_notes(&cfg);
    let ctx = match CertContext::new(cfg.clone()) {
        Ok(ctx) => ctx,
        Err(Error::NotInvertible(v)) => {
            notes.push(format!("constant stage failed: Neumann bound {v} is not below 1"));
            return Ok(CertificateReport {
                format_version: REPORT_FORMAT_VERSION,
                config: cfg,
                constants: None,
                near: None,
                mid: None,
                far: None,
                verdict: Verdict::Fail,
                notes,
            });
        }
        Err(e) => return Err(e),
    };
    let near = certify_near(&ctx);
    let mid = certify_mid(&ctx);
    let far = certify_far(&ctx);
    let verdict = if [near.verdict, mid.verdict, far.verdict].iter().all(|v| *v == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(CertificateReport {
        format_version: REPORT_FORMAT_VERSION,
        config: ctx.cfg.clone(),
        constants: Some(ctx.constants.clone()),
        near: Some(near),
        mid: Some(mid),
        far: Some(far),
        verdict,
        notes,
    })
}
