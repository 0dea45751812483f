//! The interpolation kernel `K_gamma(t) = prod_j K(gamma_j f_c, t)`: a product of
//! Dirichlet kernels whose bandwidths sum to the cut-off frequency.

use serde::{Deserialize, Serialize};

use crate::dirichlet::dirichlet_all;
use crate::error::{Error, Result};

/// Published kernel weights.
pub const DEFAULT_GAMMA: [f64; 3] = [0.247, 0.339, 0.414];
/// Reference lower bound on the cut-off frequency used by every bound formula.
pub const DEFAULT_F_MIN: f64 = 1e3;

/// Near/far switch points of the per-factor bounds, keyed by weight.
const PUBLISHED_BREAKPOINTS: [(f64, f64, f64); 3] = [
    // (gamma, tau_0, tau_3)
    (0.247, 0.9112, 0.4614),
    (0.339, 0.6615, 0.2346),
    (0.414, 0.5401, 0.3051),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakpoints {
    /// Switch between the near and far order-0 bounds, one per weight.
    pub tau0: Vec<f64>,
    /// Switch between the near and far third-derivative h-functions.
    pub tau3: Vec<f64>,
}

impl BoundBreakpoints {
    /// Breakpoints for weights that appear in the published table.
    pub fn published(gamma: &[f64]) -> Option<Self> {
        let mut tau0 = Vec::with_capacity(gamma.len());
        let mut tau3 = Vec::with_capacity(gamma.len());
        for &g in gamma {
            let (_, t0, t3) = PUBLISHED_BREAKPOINTS
                .iter()
                .find(|(pg, _, _)| (pg - g).abs() < 1e-12)?;
            tau0.push(*t0);
            tau3.push(*t3);
        }
        Some(Self { tau0, tau3 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    gamma: Vec<f64>,
    f_cut: f64,
    f_min: f64,
    breakpoints: BoundBreakpoints,
}

impl KernelSpec {
    /// Kernel with published weights and breakpoints.
    pub fn default_for(f_cut: f64) -> Result<Self> {
        Self::new(DEFAULT_GAMMA.to_vec(), f_cut, DEFAULT_F_MIN)
    }

    /// Kernel whose weights must all appear in the published breakpoint table.
    pub fn new(gamma: Vec<f64>, f_cut: f64, f_min: f64) -> Result<Self> {
        let breakpoints = BoundBreakpoints::published(&gamma).ok_or_else(|| {
            Error::Config(format!(
                "no published breakpoints for gamma = {gamma:?}; supply them explicitly"
            ))
        })?;
        Self::with_breakpoints(gamma, f_cut, f_min, breakpoints)
    }

    pub fn with_breakpoints(
        gamma: Vec<f64>,
        f_cut: f64,
        f_min: f64,
        breakpoints: BoundBreakpoints,
    ) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Config("at least one kernel factor is required".into()));
        }
        if gamma.len() > crate::bounds::MAX_FACTORS {
            return Err(Error::Config(format!(
                "at most {} kernel factors are supported",
                crate::bounds::MAX_FACTORS
            )));
        }
        if gamma.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Config(format!("kernel weights must be positive: {gamma:?}")));
        }
        let total: f64 = gamma.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("kernel weights sum to {total}, not 1")));
        }
        if !(f_min > 0.0) || !(f_cut >= f_min) {
            return Err(Error::Config(format!(
                "cut-off {f_cut} must be at least the reference frequency {f_min} > 0"
            )));
        }
        if breakpoints.tau0.len() != gamma.len() || breakpoints.tau3.len() != gamma.len() {
            return Err(Error::Config("one breakpoint pair per kernel weight is required".into()));
        }
        if breakpoints.tau0.iter().chain(&breakpoints.tau3).any(|&t| !(t > 0.0)) {
            return Err(Error::Config("breakpoints must be positive".into()));
        }
        // Side conditions assumed by the third-derivative bound near the origin.
        for &g in &gamma {
            if g < 1.0 / (32.0 * f_min) || g < 1.0 / (2.0 * f_min * f_min) {
                return Err(Error::Config(format!(
                    "weight {g} is too small for the bound derivation at f_min = {f_min}"
                )));
            }
        }
        Ok(Self {
            gamma,
            f_cut,
            f_min,
            breakpoints,
        })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn f_cut(&self) -> f64 {
        self.f_cut
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn breakpoints(&self) -> &BoundBreakpoints {
        &self.breakpoints
    }

    /// Same weights and reference frequency at another cut-off.
    pub fn at_cutoff(&self, f_cut: f64) -> Result<Self> {
        Self::with_breakpoints(self.gamma.clone(), f_cut, self.f_min, self.breakpoints.clone())
    }

    pub fn gamma_product(&self) -> f64 {
        self.gamma.iter().product()
    }
}

/// Order vectors `o` with `sum o = order` and their multinomial weights
/// `order! / prod o_i!`: the terms of the Leibniz rule for a product of `p`
/// factors.
pub fn leibniz_terms(p: usize, order: usize) -> Vec<(f64, Vec<usize>)> {
    fn rec(p: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for o in 0..=left {
            cur.push(o);
            rec(p, left - o, cur, out);
            cur.pop();
        }
    }
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    let mut vecs = Vec::new();
    rec(p, order, &mut Vec::with_capacity(p), &mut vecs);
    vecs.into_iter()
        .map(|o| {
            let w = fact(order) / o.iter().map(|&k| fact(k)).product::<f64>();
            (w, o)
        })
        .collect()
}

/// Combine per-factor derivatives `[K_i, K_i', K_i'', K_i''']` into the
/// derivatives of their product.
pub fn leibniz_combine(factors: &[[f64; 4]]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (order, slot) in out.iter_mut().enumerate() {
        *slot = leibniz_terms(factors.len(), order)
            .iter()
            .map(|(w, o)| w * o.iter().zip(factors).map(|(&k, d)| d[k]).product::<f64>())
            .sum();
    }
    out
}

/// `K_gamma` and its first three derivatives at `t`.
pub fn kgamma_all(spec: &KernelSpec, t: f64) -> [f64; 4] {
    let factors: Vec<[f64; 4]> = spec
        .gamma
        .iter()
        .map(|&g| dirichlet_all(g * spec.f_cut, t))
        .collect();
    let mut out = leibniz_combine(&factors);
    if t == 0.0 {
        out[1] = 0.0;
        out[3] = 0.0;
    }
    out
}

pub fn kgamma_eval(spec: &KernelSpec, t: f64, order: usize) -> Result<f64> {
    if order > 3 {
        return Err(Error::Order(order));
    }
    Ok(kgamma_all(spec, t)[order])
}
