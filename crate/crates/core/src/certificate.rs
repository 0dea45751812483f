//! Dual certificate for a concrete support: the low-pass polynomial
//! `q(t) = sum_j alpha_j K_gamma(t - t_j) + beta_j K_gamma'(t - t_j)` that
//! interpolates a sign pattern with vanishing derivative on the support.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kgamma_all, KernelSpec};
use crate::model::{min_separation, wrap_offset, SignPattern, C64};

/// Kernel matrices `(D_l)_{jk} = K_gamma^(l)(t_j - t_k)` for `l = 0, 1, 2`.
#[derive(Debug, Clone)]
pub struct InterpolationSystem {
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateCoefficients {
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Build the kernel matrices, checking the separation `tau_min / f_c`.
pub fn build_system(support: &[f64], spec: &KernelSpec, tau_min: f64) -> Result<InterpolationSystem> {
    let required = tau_min / spec.f_cut();
    if let Some(found) = min_separation(support).finite() {
        if found < required * (1.0 - 1e-12) {
            return Err(Error::Separation { found, required });
        }
    }
    let s = support.len();
    let mut d0 = DMatrix::identity(s, s);
    let mut d1 = DMatrix::zeros(s, s);
    let mut d2 = DMatrix::zeros(s, s);
    let origin = kgamma_all(spec, 0.0);
    for j in 0..s {
        d2[(j, j)] = origin[2];
        for k in (j + 1)..s {
            let k_all = kgamma_all(spec, wrap_offset(support[j], support[k]));
            d0[(j, k)] = k_all[0];
            d0[(k, j)] = k_all[0];
            d1[(j, k)] = k_all[1];
            d1[(k, j)] = -k_all[1];
            d2[(j, k)] = k_all[2];
            d2[(k, j)] = k_all[2];
        }
    }
    Ok(InterpolationSystem { d0, d1, d2 })
}

fn solve_real(m: &DMatrix<f64>, rhs: &[C64]) -> Result<Vec<C64>> {
    let lu = m.clone().lu();
    let re = DVector::from_iterator(rhs.len(), rhs.iter().map(|v| v.re));
    let im = DVector::from_iterator(rhs.len(), rhs.iter().map(|v| v.im));
    let (xr, xi) = match (lu.solve(&re), lu.solve(&im)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::RankDeficient {
                rows: m.nrows(),
                cols: m.ncols(),
                cond: f64::INFINITY,
            })
        }
    };
    Ok(xr.iter().zip(xi.iter()).map(|(&a, &b)| C64::new(a, b)).collect())
}

fn mat_vec(m: &DMatrix<f64>, x: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| x[j] * m[(i, j)]).sum())
        .collect()
}

/// Solve `[D0 D1; D1 D2] [alpha; beta] = [v; 0]` through the Schur complement
/// `C = D0 - D1 D2^{-1} D1`, refusing when `||I - C||_inf >= 1`.
pub fn solve_coefficients(system: &InterpolationSystem, v: &SignPattern) -> Result<CertificateCoefficients> {
    let s = system.d0.nrows();
    if v.len() != s {
        return Err(Error::LengthMismatch {
            expected: s,
            got: v.len(),
        });
    }
    let d2_lu = system.d2.clone().lu();
    let d2_inv_d1 = d2_lu.solve(&system.d1).ok_or(Error::RankDeficient {
        rows: s,
        cols: s,
        cond: f64::INFINITY,
    })?;
    let schur = &system.d0 - &system.d1 * &d2_inv_d1;
    let gap = norm_inf(&(DMatrix::identity(s, s) - &schur));
    if !(gap < 1.0) {
        return Err(Error::NotInvertible(gap));
    }
    let alpha = solve_real(&schur, v.values())?;
    let beta: Vec<C64> = mat_vec(&d2_inv_d1, &alpha).into_iter().map(|b| -b).collect();
    Ok(CertificateCoefficients { alpha, beta })
}

/// `q`, `q'` or `q''` at `t`.
pub fn eval_certificate(
    coeffs: &CertificateCoefficients,
    support: &[f64],
    spec: &KernelSpec,
    t: f64,
    order: usize,
) -> Result<C64> {
    if order > 2 {
        return Err(Error::Order(order));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (j, &tj) in support.iter().enumerate() {
        let k = kgamma_all(spec, wrap_offset(t, tj));
        acc += coeffs.alpha[j] * k[order] + coeffs.beta[j] * k[order + 1];
    }
    Ok(acc)
}

/// Direct checks of one certificate on a concrete support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceCheck {
    pub interpolation_residual: f64,
    pub derivative_residual: f64,
    /// Largest `|q|` sampled away from the support.
    pub max_off_support: f64,
    /// Largest and smallest ratio `(1 - |q(t)|) / (f_c (t - t_j))^2` near the
    /// support; these are measured values of the quadratic-decay constants.
    pub quadratic_upper: f64,
    pub quadratic_lower: f64,
}

/// Sample the certificate on `samples_per_gap` points between consecutive
/// support points. Points within `exclusion / f_c` of the support are used for
/// the quadratic-decay ratios instead of the off-support maximum.
pub fn check_instance(
    coeffs: &CertificateCoefficients,
    support: &[f64],
    v: &SignPattern,
    spec: &KernelSpec,
    samples_per_gap: usize,
    exclusion: f64,
) -> Result<InstanceCheck> {
    let fc = spec.f_cut();
    let mut interp: f64 = 0.0;
    let mut deriv: f64 = 0.0;
    for (j, &tj) in support.iter().enumerate() {
        interp = interp.max((eval_certificate(coeffs, support, spec, tj, 0)? - v.values()[j]).norm());
        deriv = deriv.max(eval_certificate(coeffs, support, spec, tj, 1)?.norm());
    }
    let mut sorted: Vec<f64> = support.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut max_off: f64 = 0.0;
    let mut q_hi: f64 = 0.0;
    let mut q_lo = f64::INFINITY;
    for (i, &a) in sorted.iter().enumerate() {
        let b = if i + 1 < sorted.len() { sorted[i + 1] } else { sorted[0] + 1.0 };
        for s in 1..samples_per_gap {
            let t = a + (b - a) * s as f64 / samples_per_gap as f64;
            let q = eval_certificate(coeffs, support, spec, t, 0)?.norm();
            let d = (t - a).min(b - t) * fc;
            if d <= exclusion {
                let r = (1.0 - q) / (d * d);
                q_hi = q_hi.max(r);
                q_lo = q_lo.min(r);
            } else {
                max_off = max_off.max(q);
            }
        }
    }
    Ok(InstanceCheck {
        interpolation_residual: interp,
        derivative_residual: deriv,
        max_off_support: max_off,
        quadratic_upper: q_hi,
        quadratic_lower: q_lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> KernelSpec {
        KernelSpec::default_for(1e3).unwrap()
    }

    #[test]
    fn single_spike() {
        let sys = build_system(&[0.3], &spec(), 1.26).unwrap();
        assert_eq!(sys.d0[(0, 0)], 1.0);
        assert_eq!(sys.d1[(0, 0)], 0.0);
        assert_eq!(sys.d2[(0, 0)], kgamma_all(&spec(), 0.0)[2]);
        let v = SignPattern::from_phases(&[0.0]);
        let c = solve_coefficients(&sys, &v).unwrap();
        assert_eq!(c.alpha[0], C64::new(1.0, 0.0));
        assert_eq!(c.beta[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn two_spike_signs() {
        let s = spec();
        let d = 2.0e-3;
        let support = [0.1, 0.1 + d];
        let sys = build_system(&support, &s, 1.26).unwrap();
        let k = kgamma_all(&s, support[0] - support[1]);
        assert_eq!(sys.d1[(0, 1)], k[1]);
        assert_eq!(sys.d1[(1, 0)], -k[1]);
        assert_eq!(sys.d0[(0, 1)], sys.d0[(1, 0)]);
    }

    #[test]
    fn rejects_close_support() {
        assert!(matches!(
            build_system(&[0.1, 0.1005], &spec(), 1.26),
            Err(Error::Separation { .. })
        ));
    }

    #[test]
    fn interpolates_and_flattens() {
        let s = spec();
        let support: Vec<f64> = (0..8).map(|j| 0.05 + j as f64 * 1.4e-3).collect();
        let v = SignPattern::from_phases(&[0.3, -1.0, 2.0, 0.0, 1.1, -2.5, 0.7, 3.0]);
        let sys = build_system(&support, &s, 1.26).unwrap();
        let c = solve_coefficients(&sys, &v).unwrap();
        for (j, &t) in support.iter().enumerate() {
            let q = eval_certificate(&c, &support, &s, t, 0).unwrap();
            assert!((q - v.values()[j]).norm() < 1e-10);
            assert!(eval_certificate(&c, &support, &s, t, 1).unwrap().norm() < 1e-10 * 1e3);
        }
    }
}
