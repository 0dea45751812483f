//! Rigorous bounds on the interpolation kernel and its derivatives.
//!
//! Every bound is evaluated in scaled form: positions are `tau = f_c t` and
//! derivative bounds of order `l` are divided by `f_c^l`. In this form the
//! bounds depend only on the weights, `tau` and `f_min`. The public wrappers
//! multiply the explicit `f_c^l` factor back in.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{leibniz_terms, KernelSpec};

/// Largest scaled position at which the tail bounds are validated.
pub const TAIL_RANGE: f64 = 450.0;
/// Smallest scaled position at which the coarse cubic tail bound holds.
pub const COARSE_TAIL_START: f64 = 80.0;
/// Number of near spikes that get the fine tail treatment in the tail constant.
pub const TAIL_TERMS: usize = 400;

pub(crate) const MAX_FACTORS: usize = 8;

/// Lower and upper bounds on one Dirichlet factor and its first three scaled
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorBounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

/// `1 - sin(x)/x` without cancellation for small `x`.
fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 0.3 {
        let x2 = x * x;
        x2 * (1.0 / 6.0
            - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362_880.0 - x2 / 39_916_800.0))))
    } else {
        1.0 - x.sin() / x
    }
}

/// Bounds on `K(gamma f_c, tau / f_c)` and its derivatives for `tau >= 0`.
fn factor_bounds_nonneg(gamma: f64, f_min: f64, tau0: f64, tau3: f64, tau: f64) -> FactorBounds {
    if tau == 0.0 {
        let c = 4.0 * PI * PI * gamma / 3.0;
        return FactorBounds {
            lower: [1.0, 0.0, -c * (gamma + 1.0 / f_min), 0.0],
            upper: [1.0, 0.0, -c * gamma, 0.0],
        };
    }
    let x = 2.0 * PI * gamma * tau;
    let (s, c) = x.sin_cos();
    let sinc = s / x;
    let oms = one_minus_sinc(x);
    let omc = 2.0 * (0.5 * x).sin().powi(2);
    let q2 = PI * PI * tau * tau / (2.0 * f_min * f_min);
    let q6 = q2 / 3.0;
    let gf = gamma * f_min;
    let pi2g2 = 4.0 * PI * PI * gamma * gamma;

    // Order 0, with 1 - B kept separately so differences with cos stay accurate.
    let (b0u, b0l, om_u, om_l) = if tau <= tau0 {
        let x2 = x * x;
        let a = x2 / 6.0;
        let b = x2 * x2 / 120.0;
        let c6 = x2 * x2 * x2 / 5040.0;
        let d = x2 * x2 * x2 * x2 / 362_880.0;
        let e = 1.0 / (2.0 * gf);
        let kp = |n: f64| (n * e.ln_1p()).exp_m1(); // (1+e)^n - 1
        let base = 1.0 - a + b - c6;

        let den_u = base * (1.0 - q6);
        let num_u = base + b * kp(4.0) + d * (1.0 + kp(8.0));
        let gap_u = -base * q6 - b * kp(4.0) - d * (1.0 + kp(8.0)); // den - num
        let r_u = num_u / den_u;
        let om_u = oms + sinc * gap_u / den_u;

        let den_l = base + d;
        let num_l = 1.0 - a * (1.0 + kp(2.0)) + b - c6 * (1.0 + kp(6.0));
        let gap_l = a * kp(2.0) + c6 * kp(6.0) + d;
        let r_l = num_l / den_l;
        let om_l = oms + sinc * gap_l / den_l;
        (r_u * sinc, r_l * sinc, om_u, om_l)
    } else {
        let ind = |cond: bool| if cond { 1.0 } else { 0.0 };
        let u = sinc * (1.0 - ind(s < 0.0) * q2) / (1.0 + ind(s < 0.0) / (2.0 * gf))
            + ind(c >= 0.0) * c / (1.0 + 2.0 * gf);
        let l = sinc * (1.0 - ind(s >= 0.0) * q2) / (1.0 + ind(s >= 0.0) / (2.0 * gf))
            + ind(c < 0.0) * c / (1.0 + 2.0 * gf);
        (u, l, 1.0 - u, 1.0 - l)
    };

    // c - B0L and B0U - c
    let c_minus_l = om_l - omc;
    let u_minus_c = omc - om_u;
    let l_minus_c = omc - om_l;

    let b1u = c_minus_l / tau * (1.0 - if c_minus_l <= 0.0 { q2 } else { 0.0 })
        - if s < 0.0 { PI * s / f_min } else { 0.0 };
    let b1l = -u_minus_c / tau * (1.0 - if u_minus_c <= 0.0 { q2 } else { 0.0 })
        - if s >= 0.0 { PI * s / f_min } else { 0.0 };

    let h2u = 4.0 * PI * PI * gamma / f_min * (om_l - oms - if s < 0.0 { q2 * sinc } else { 0.0 });
    let h2l = 4.0 * PI * PI * gamma / f_min * (om_u - oms - if s >= 0.0 { q2 * sinc } else { 0.0 });
    let fu = 1.0 - if u_minus_c <= 0.0 { q2 } else { 0.0 };
    let fl = 1.0 - if l_minus_c > 0.0 { q2 } else { 0.0 };
    let b2u = 2.0 * u_minus_c / (tau * tau) * fu * fu - pi2g2 * b0l + h2u.max(0.0);
    let b2l = 2.0 * l_minus_c / (tau * tau) * fl * fl - pi2g2 * b0u + h2l.min(0.0);

    let (h3u, h3l) = if tau <= tau3 {
        let scale = 4.0 * PI * PI * gamma / f_min;
        let h3a_u = scale * (oms - om_u + if s > 0.0 { q2 * sinc } else { 0.0 });
        let h3a_l = scale * (oms - om_l + if s < 0.0 { q2 * sinc } else { 0.0 });
        let g4 = (PI * gamma).powi(4);
        let g6 = (PI * gamma).powi(6);
        let t2 = tau * tau;
        let h3b_u = (31.3 * g4 * t2 - 16.0 * g6 * t2 * t2 * (1.0 + 2.0 / gf)) * (1.0 - q2).powi(2)
            / (15.0 * (2.0 + 1.0 / gf));
        let h3b_l = 2.0 * g4 * t2 * (8.17 + 20.0 / gf) / (15.0 * (1.0 - q6).powi(2));
        (h3a_u.max(0.0) - h3b_u, h3a_l.min(0.0) - h3b_l)
    } else {
        let u = b1u / tau * (1.0 - if b1u < 0.0 { q2 } else { 0.0 }) - b2l;
        let l = b1l / tau * (1.0 - if b1l > 0.0 { q2 } else { 0.0 }) - b2u;
        (u, l)
    };
    let corr = 1.0 / gf - 1.0 / (2.0 * gf * gf);
    let b3u = -pi2g2 * b1l * (1.0 + if b1l < 0.0 { corr } else { 0.0 })
        + 2.0 * h3u / tau * (1.0 - if h3u < 0.0 { q2 } else { 0.0 });
    let b3l = -pi2g2 * b1u * (1.0 + if b1u >= 0.0 { corr } else { 0.0 })
        + 2.0 * h3l / tau * (1.0 - if h3l > 0.0 { q2 } else { 0.0 });

    FactorBounds {
        lower: [b0l, b1l, b2l, b3l],
        upper: [b0u, b1u, b2u, b3u],
    }
}

/// Bounds on one factor at a signed scaled position.
pub fn factor_bounds(gamma: f64, f_min: f64, tau0: f64, tau3: f64, tau: f64) -> FactorBounds {
    let mut fb = factor_bounds_nonneg(gamma, f_min, tau0, tau3, tau.abs());
    if tau < 0.0 {
        for l in [1, 3] {
            let (lo, hi) = (fb.lower[l], fb.upper[l]);
            fb.lower[l] = -hi;
            fb.upper[l] = -lo;
        }
    }
    fb
}

/// Magnitude bounds `b_0 .. b_3` on one factor, valid and decreasing for
/// `0 < tau <= 450`.
fn factor_tail(gamma: f64, f_min: f64, tau: f64) -> [f64; 4] {
    let shrink = 1.0 - PI * PI * tau * tau / (6.0 * f_min * f_min);
    let widen = 1.0 + 1.0 / (gamma * f_min);
    let b0 = 1.0 / (2.0 * PI * gamma * tau * shrink);
    let b1 = (1.0 + b0) / (tau * shrink);
    let pi2g2 = 4.0 * PI * PI * gamma * gamma;
    let b2 = pi2g2 * b0 * widen + 2.0 * b1 / tau;
    let b3 = pi2g2 * b1 * widen + 2.0 / tau * (b2 + b1 / tau);
    [b0, b1, b2, b3]
}

/// Precomputed evaluator for the assembled kernel bounds of one spec.
#[derive(Debug, Clone)]
pub struct KernelBounds {
    gamma: Vec<f64>,
    f_min: f64,
    tau0: Vec<f64>,
    tau3: Vec<f64>,
    /// Leibniz terms `(weight, order vector)` for each derivative order.
    terms: [Vec<(f64, Vec<usize>)>; 4],
}

impl KernelBounds {
    pub fn new(spec: &KernelSpec) -> Self {
        let p = spec.p();
        Self {
            gamma: spec.gamma().to_vec(),
            f_min: spec.f_min(),
            tau0: spec.breakpoints().tau0.clone(),
            tau3: spec.breakpoints().tau3.clone(),
            terms: [
                leibniz_terms(p, 0),
                leibniz_terms(p, 1),
                leibniz_terms(p, 2),
                leibniz_terms(p, 3),
            ],
        }
    }

    fn factors(&self, tau: f64) -> [FactorBounds; MAX_FACTORS] {
        let mut out = [FactorBounds {
            lower: [0.0; 4],
            upper: [0.0; 4],
        }; MAX_FACTORS];
        for (i, &g) in self.gamma.iter().enumerate() {
            out[i] = factor_bounds(g, self.f_min, self.tau0[i], self.tau3[i], tau);
        }
        out
    }

    /// Scaled `(lower, upper)` bounds for all four orders. The maximum over
    /// endpoint strings of a product of independent factors is exactly the
    /// interval product, which is how each Leibniz term is evaluated.
    pub fn near_all(&self, tau: f64) -> [(f64, f64); 4] {
        let f = self.factors(tau);
        let mut out = [(0.0, 0.0); 4];
        for (order, slot) in out.iter_mut().enumerate() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (w, o) in &self.terms[order] {
                let (mut a, mut b) = (1.0, 1.0);
                for (i, &k) in o.iter().enumerate() {
                    let (c, d) = (f[i].lower[k], f[i].upper[k]);
                    let (p1, p2, p3, p4) = (a * c, a * d, b * c, b * d);
                    a = p1.min(p2).min(p3).min(p4);
                    b = p1.max(p2).max(p3).max(p4);
                }
                lo += w * a;
                hi += w * b;
            }
            *slot = (lo, hi);
        }
        out
    }

    /// Scaled uniform magnitude bounds on `[tau - eps, tau + eps]`.
    pub fn inf_all(&self, tau: f64, eps: f64) -> [f64; 4] {
        let near = self.near_all(tau);
        let mut out = [0.0; 4];
        let mut dev = 2.0 * PI * eps;
        for (slot, (lo, hi)) in out.iter_mut().zip(near) {
            *slot = lo.abs().max(hi.abs()) + dev;
            dev *= 2.0 * PI;
        }
        out
    }

    /// Scaled tail bounds without the range check.
    pub fn tail_all(&self, tau: f64) -> [f64; 4] {
        let tau = tau.abs();
        let mut f = [[0.0; 4]; MAX_FACTORS];
        for (i, &g) in self.gamma.iter().enumerate() {
            f[i] = factor_tail(g, self.f_min, tau);
        }
        let mut out = [0.0; 4];
        for (order, slot) in out.iter_mut().enumerate() {
            *slot = self.terms[order]
                .iter()
                .map(|(w, o)| w * o.iter().enumerate().map(|(i, &k)| f[i][k]).product::<f64>())
                .sum();
        }
        out
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > 3 {
        Err(Error::Order(order))
    } else {
        Ok(())
    }
}

/// Lower and upper bounds on `K_gamma^(l)(tau / f_c)`, including the `f_c^l`
/// factor.
pub fn bounds_near(spec: &KernelSpec, tau: f64, order: usize) -> Result<(f64, f64)> {
    check_order(order)?;
    if !(tau.abs() <= TAIL_RANGE) {
        return Err(Error::OutOfRange(format!(
            "scaled position {tau} is outside the validated range [-{TAIL_RANGE}, {TAIL_RANGE}]"
        )));
    }
    let (lo, hi) = KernelBounds::new(spec).near_all(tau)[order];
    let scale = spec.f_cut().powi(order as i32);
    Ok((lo * scale, hi * scale))
}

/// Bound on `|K_gamma^(l)(t)|` valid for every `t` with `|f_c t - tau| <= eps`.
pub fn bound_inf(spec: &KernelSpec, tau: f64, eps: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !(eps >= 0.0) {
        return Err(Error::OutOfRange(format!("grid half-width {eps} must be non-negative")));
    }
    if !(tau.abs() <= TAIL_RANGE) {
        return Err(Error::OutOfRange(format!("scaled position {tau} is outside [-450, 450]")));
    }
    Ok(KernelBounds::new(spec).inf_all(tau, eps)[order] * spec.f_cut().powi(order as i32))
}

/// Decreasing magnitude bound `b_{gamma,l}(tau)` for `0 < tau <= 450`.
pub fn tail_bound(spec: &KernelSpec, tau: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !(tau > 0.0 && tau <= TAIL_RANGE) {
        return Err(Error::OutOfRange(format!(
            "tail bound needs 0 < tau <= {TAIL_RANGE}, got {tau}"
        )));
    }
    Ok(KernelBounds::new(spec).tail_all(tau)[order] * spec.f_cut().powi(order as i32))
}

/// Scaled coarse bound `(2 pi)^l / prod gamma * (1.1 / (4 tau))^p`.
fn coarse_scaled(gamma_product: f64, p: usize, tau: f64, order: usize) -> f64 {
    (2.0 * PI).powi(order as i32) / gamma_product * (1.1 / (4.0 * tau)).powi(p as i32)
}

/// Cubic-decay bound on `|K_gamma^(l)(t)|` for `80 / f_c <= |t| <= 1/2`.
pub fn tail_bound_coarse(spec: &KernelSpec, t: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    let tau = spec.f_cut() * t.abs();
    if !(tau >= COARSE_TAIL_START && t.abs() <= 0.5) {
        return Err(Error::OutOfRange(format!(
            "coarse tail bound needs {COARSE_TAIL_START}/f_c <= |t| <= 1/2, got t = {t}"
        )));
    }
    Ok(coarse_scaled(spec.gamma_product(), spec.p(), tau, order) * spec.f_cut().powi(order as i32))
}

/// One sample of the kernel, its sandwich bounds and its decreasing tail
/// bound, all scaled by `f_c^{-l}` at `f_c = f_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub order: usize,
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub tail: f64,
}

/// Samples `tau = 0, step, ..., <= tau_max` for every order, for plotting.
pub fn envelope_rows(spec: &KernelSpec, tau_max: f64, step: f64) -> Result<Vec<EnvelopeRow>> {
    if !(step > 0.0) || !(tau_max >= 0.0 && tau_max <= TAIL_RANGE) {
        return Err(Error::OutOfRange(format!(
            "need step > 0 and 0 <= tau_max <= {TAIL_RANGE}, got step {step}, tau_max {tau_max}"
        )));
    }
    let spec = spec.at_cutoff(spec.f_min())?;
    let kb = KernelBounds::new(&spec);
    let count = (tau_max / step + 1e-9).floor() as usize;
    let mut rows = Vec::with_capacity(4 * (count + 1));
    for order in 0..4 {
        let scale = spec.f_cut().powi(order as i32);
        for i in 0..=count {
            let tau = i as f64 * step;
            let (lower, upper) = kb.near_all(tau)[order];
            let value = crate::kernel::kgamma_all(&spec, tau / spec.f_cut())[order] / scale;
            let tail = if tau > 0.0 { kb.tail_all(tau)[order] } else { f64::NAN };
            rows.push(EnvelopeRow {
                order,
                tau,
                lower,
                upper,
                value,
                tail,
            });
        }
    }
    Ok(rows)
}

/// Riemann zeta function for real `s > 1` by Euler-Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta is only implemented for s > 1");
    const N: usize = 20;
    // B_2k / (2k)!
    const BERN: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
        -3617.0 / 10_670_622_842_880_000.0,
    ];
    let n = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, b) in BERN.iter().enumerate() {
        if k > 0 {
            let m = 2.0 * k as f64;
            rising *= (s + m - 1.0) * (s + m);
            power /= n * n;
        }
        tail += b * rising * power;
    }
    head + tail
}

/// Residual tail constant `C_l` for spikes beyond the 400th neighbour,
/// including the `f_c^l` factor.
pub fn tail_constant(spec: &KernelSpec, order: usize, tau_min: f64) -> Result<f64> {
    check_order(order)?;
    Ok(tail_constant_scaled(spec.gamma_product(), spec.p(), order, tau_min)
        * spec.f_cut().powi(order as i32))
}

pub(crate) fn tail_constant_scaled(gamma_product: f64, p: usize, order: usize, tau_min: f64) -> f64 {
    let partial: f64 = (1..=TAIL_TERMS).map(|k| (k as f64).powi(-(p as i32))).sum();
    let residual = riemann_zeta(p as f64) - partial;
    coarse_scaled(gamma_product, p, tau_min, order) * residual
}
