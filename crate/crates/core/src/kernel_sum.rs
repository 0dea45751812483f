//! Bound `H_l` on the summed kernel contributions of all spikes other than
//! the nearest one, for supports obeying a minimum separation.
//!
//! Values are computed on the lattice `tau = k eps` for every order at once.
//! Each near spike `j = 1..=20` contributes the maximum of the uniform bound
//! over a lattice cover of `[j tau_min - tau, (j+4) tau_min]`, or the tail
//! bound at `(j+4) tau_min` if larger. Spikes 21..=400 use the tail bound at
//! `(j - 1/2) tau_min` and the remainder uses the coarse cubic bound.

use rayon::prelude::*;

use crate::bounds::{tail_constant_scaled, KernelBounds};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

const NEAR_SPIKES: usize = 20;
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct KernelSumTable {
    eps: f64,
    tau_min: f64,
    f_cut: f64,
    /// `pos[l][k]` holds scaled `H_l(k eps)`, `neg[l][k]` holds `H_l(-k eps)`.
    pos: [Vec<f64>; 4],
    neg: [Vec<f64>; 4],
    far: [f64; 4],
}

impl KernelSumTable {
    /// Table covering every lattice point with `|tau| <= tau_max`.
    pub fn build(spec: &KernelSpec, tau_min: f64, eps: f64, tau_max: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("grid step {eps} must be positive")));
        }
        if !(tau_min > 0.0) {
            return Err(Error::Config(format!("separation {tau_min} must be positive")));
        }
        if !(tau_max >= 0.0 && tau_max <= tau_min / 2.0 + 2.0 * eps) {
            return Err(Error::OutOfRange(format!(
                "kernel sums are only defined for |tau| <= tau_min/2 + eps, got {tau_max}"
            )));
        }
        let kb = KernelBounds::new(spec);
        let kmax = (tau_max / eps).ceil() as i64 + 1;
        let len = kmax as usize + 1;
        let mut pos: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; len]);
        let mut neg: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; len]);

        for j in 1..=NEAR_SPIKES {
            let jf = j as f64;
            let floor_start = (jf * tau_min / eps).floor() as i64;
            let end = ((jf + 4.0) * tau_min / eps).ceil() as i64;
            let tail = kb.tail_all((jf + 4.0) * tau_min);
            let lo = floor_start - kmax;
            let mut run = [0.0f64; 4];
            let mut m_hi = end;
            while m_hi >= lo {
                let m_lo = (m_hi - CHUNK as i64 + 1).max(lo);
                let vals: Vec<[f64; 4]> = (0..=(m_hi - m_lo))
                    .into_par_iter()
                    .map(|off| kb.inf_all((m_hi - off) as f64 * eps, eps))
                    .collect();
                for (off, v) in vals.iter().enumerate() {
                    let m = m_hi - off as i64;
                    for l in 0..4 {
                        run[l] = run[l].max(v[l]);
                    }
                    let d = m - floor_start;
                    if d <= 0 && -d <= kmax {
                        let k = (-d) as usize;
                        for l in 0..4 {
                            pos[l][k] += run[l].max(tail[l]);
                        }
                    }
                    if d >= 0 && d <= kmax {
                        let k = d as usize;
                        for l in 0..4 {
                            neg[l][k] += run[l].max(tail[l]);
                        }
                    }
                }
                m_hi = m_lo - 1;
            }
        }

        let far = far_constants(&kb, spec, tau_min);
        for l in 0..4 {
            for v in pos[l].iter_mut().chain(neg[l].iter_mut()) {
                *v += far[l];
            }
        }
        Ok(Self {
            eps,
            tau_min,
            f_cut: spec.f_cut(),
            pos,
            neg,
            far,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    /// Largest lattice index available.
    pub fn max_index(&self) -> usize {
        self.pos[0].len() - 1
    }

    /// Scaled `H_l(k eps)` for a signed lattice index.
    pub fn at_index(&self, order: usize, k: i64) -> f64 {
        if k >= 0 {
            self.pos[order][k as usize]
        } else {
            self.neg[order][(-k) as usize]
        }
    }

    /// Scaled `H_l(tau)`, rounded to the neighbouring lattice point whose value
    /// dominates: `H_l` grows with `tau` because the covered interval widens.
    pub fn scaled(&self, order: usize, tau: f64) -> Result<f64> {
        if order > 3 {
            return Err(Error::Order(order));
        }
        let k = if tau >= 0.0 {
            (tau / self.eps).ceil() as i64
        } else {
            -((-tau / self.eps).floor() as i64)
        };
        if k.unsigned_abs() as usize > self.max_index() {
            return Err(Error::OutOfRange(format!("tau = {tau} is outside the table")));
        }
        Ok(self.at_index(order, k))
    }

    /// `H_l(tau)` including the `f_c^l` factor.
    pub fn value(&self, order: usize, tau: f64) -> Result<f64> {
        Ok(self.scaled(order, tau)? * self.f_cut.powi(order as i32))
    }

    /// Scaled contribution of spikes beyond the 20th: fine tail terms plus `C_l`.
    pub fn far_constant(&self, order: usize) -> f64 {
        self.far[order]
    }
}

/// Scaled `sum_{j=21}^{J} b((j - 1/2) tau_min) + C_l` with `J <= 400`.
/// Terms whose distance exceeds half the circle (`f_min / 2` in scaled units)
/// belong to spikes that cannot exist and are skipped; for larger separations
/// they would also leave the range where the tail bound is meaningful.
fn far_constants(kb: &KernelBounds, spec: &KernelSpec, tau_min: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    let half_circle = 0.5 * spec.f_min();
    for j in (NEAR_SPIKES + 1)..=crate::bounds::TAIL_TERMS {
        if (j as f64 - 0.5) * tau_min > half_circle {
            break;
        }
        let b = kb.tail_all((j as f64 - 0.5) * tau_min);
        for l in 0..4 {
            out[l] += b[l];
        }
    }
    for (l, v) in out.iter_mut().enumerate() {
        *v += tail_constant_scaled(spec.gamma_product(), spec.p(), l, tau_min);
    }
    out
}

/// `H_l(tau)` for a single position, including the `f_c^l` factor.
pub fn kernel_sum_bound(
    spec: &KernelSpec,
    tau: f64,
    eps: f64,
    order: usize,
    tau_min: f64,
) -> Result<f64> {
    if order > 3 {
        return Err(Error::Order(order));
    }
    if !(tau.abs() <= tau_min / 2.0 + eps) {
        return Err(Error::OutOfRange(format!(
            "kernel sums need |tau| <= tau_min/2 + eps, got {tau}"
        )));
    }
    KernelSumTable::build(spec, tau_min, eps, tau.abs())?.value(order, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_and_increasing_in_tau() {
        let spec = KernelSpec::default_for(1e3).unwrap();
        let t = KernelSumTable::build(&spec, 1.26, 1e-3, 0.63).unwrap();
        for l in 0..4 {
            let mut prev = 0.0;
            for k in 0..=630 {
                let v = t.at_index(l, k);
                assert!(v.is_finite() && v > 0.0);
                assert!(v >= prev);
                prev = v;
                assert!(t.at_index(l, -k) <= t.at_index(l, 0));
            }
        }
    }

    #[test]
    fn scales_with_cutoff() {
        let a = KernelSpec::default_for(1e3).unwrap();
        let b = KernelSpec::default_for(2e3).unwrap();
        let ta = KernelSumTable::build(&a, 1.26, 1e-3, 0.0).unwrap();
        let tb = KernelSumTable::build(&b, 1.26, 1e-3, 0.0).unwrap();
        for l in 0..4 {
            let ratio = tb.value(l, 0.0).unwrap() / ta.value(l, 0.0).unwrap();
            assert!((ratio - 2f64.powi(l as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_positions_beyond_half_separation() {
        let spec = KernelSpec::default_for(1e3).unwrap();
        assert!(kernel_sum_bound(&spec, 0.7, 1e-3, 0, 1.26).is_err());
        assert!(kernel_sum_bound(&spec, 0.1, 1e-3, 4, 1.26).is_err());
    }
}
