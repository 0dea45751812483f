//! Signal and measurement model: atomic measures on the unit circle and the
//! low-pass Fourier operator that observes them.
//!
//! Fourier coefficients are always indexed `k = -f_c ..= f_c` and stored in
//! ascending order, so entry `i` of a coefficient vector corresponds to
//! frequency `i as i64 - f_c`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Cut-off frequency and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemConfig {
    f_cut: usize,
}

impl ProblemConfig {
    pub fn new(f_cut: usize) -> Result<Self> {
        if f_cut == 0 {
            return Err(Error::Config("cut-off frequency must be positive".into()));
        }
        Ok(Self { f_cut })
    }

    /// Accepts a real cut-off and rejects anything that is not a positive integer.
    pub fn from_real(f_cut: f64) -> Result<Self> {
        if !f_cut.is_finite() || f_cut.fract() != 0.0 || f_cut < 1.0 {
            return Err(Error::Config(format!(
                "cut-off frequency must be a positive integer, got {f_cut}"
            )));
        }
        Self::new(f_cut as usize)
    }

    pub fn f_cut(&self) -> usize {
        self.f_cut
    }

    /// Number of measurements, `2 f_c + 1`.
    pub fn n(&self) -> usize {
        2 * self.f_cut + 1
    }

    /// Resolution unit `1 / f_c`.
    pub fn lambda_c(&self) -> f64 {
        1.0 / self.f_cut as f64
    }

    /// Frequency attached to storage index `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        i as i64 - self.f_cut as i64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let f = self.f_cut as i64;
        -f..=f
    }
}

/// Wrap a real position onto `[0, 1)`.
pub fn wrap_position(t: f64) -> f64 {
    let w = t.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Wrap-around distance between two positions on the unit circle.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Signed offset `t - center` mapped onto `(-1/2, 1/2]`.
pub fn wrap_offset(t: f64, center: f64) -> f64 {
    let raw = t - center;
    if raw > -0.5 && raw <= 0.5 {
        return raw;
    }
    let d = raw.rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Minimum wrap-around separation of a support set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// Fewer than two points: no pair to measure.
    Infinite,
    Finite(f64),
}

impl Separation {
    pub fn at_least(&self, threshold: f64) -> bool {
        match *self {
            Separation::Infinite => true,
            Separation::Finite(d) => d >= threshold,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Separation::Infinite => None,
            Separation::Finite(d) => Some(d),
        }
    }
}

pub fn min_separation(support: &[f64]) -> Separation {
    if support.len() < 2 {
        return Separation::Infinite;
    }
    let mut sorted: Vec<f64> = support.iter().map(|&t| wrap_position(t)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut best = wrap_distance(sorted[0], sorted[sorted.len() - 1]);
    for w in sorted.windows(2) {
        best = best.min(wrap_distance(w[0], w[1]));
    }
    Separation::Finite(best)
}

/// Atomic measure `sum_j a_j delta_{t_j}` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::SpikeTrainFile", into = "crate::io::SpikeTrainFile")]
pub struct SpikeTrain {
    support: Vec<f64>,
    amplitudes: Vec<C64>,
}

impl SpikeTrain {
    pub fn new(support: Vec<f64>, amplitudes: Vec<C64>) -> Result<Self> {
        if support.len() != amplitudes.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: amplitudes.len(),
            });
        }
        if let Some(t) = support.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::OutOfRange(format!("support position {t} not in [0,1)")));
        }
        if let Separation::Finite(d) = min_separation(&support) {
            if d == 0.0 {
                return Err(Error::Config("support positions must be distinct".into()));
            }
        }
        Ok(Self { support, amplitudes })
    }

    pub fn empty() -> Self {
        Self {
            support: Vec::new(),
            amplitudes: Vec::new(),
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Total-variation norm of an atomic measure, `sum_j |a_j|`.
    pub fn tv_norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            support: self.support.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Spikes ordered by position.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.support[a].total_cmp(&self.support[b]));
        Self {
            support: idx.iter().map(|&i| self.support[i]).collect(),
            amplitudes: idx.iter().map(|&i| self.amplitudes[i]).collect(),
        }
    }
}

/// Vector of the `n = 2 f_c + 1` lowest Fourier coefficients, `k` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassData {
    config: ProblemConfig,
    coeffs: Vec<C64>,
}

impl LowPassData {
    pub fn new(config: ProblemConfig, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != config.n() {
            return Err(Error::LengthMismatch {
                expected: config.n(),
                got: coeffs.len(),
            });
        }
        Ok(Self { config, coeffs })
    }

    pub fn zeros(config: ProblemConfig) -> Self {
        Self {
            config,
            coeffs: vec![C64::new(0.0, 0.0); config.n()],
        }
    }

    pub fn config(&self) -> ProblemConfig {
        self.config
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient at frequency `k`.
    pub fn at(&self, k: i64) -> C64 {
        self.coeffs[(k + self.config.f_cut() as i64) as usize]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }
}

/// Multi-signal data: an `n x m` matrix whose columns are low-pass data vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLowPassData {
    config: ProblemConfig,
    data: DMatrix<C64>,
}

impl MultiLowPassData {
    pub fn new(config: ProblemConfig, data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != config.n() {
            return Err(Error::LengthMismatch {
                expected: config.n(),
                got: data.nrows(),
            });
        }
        if data.ncols() == 0 {
            return Err(Error::Shape("multi-signal data needs at least one column".into()));
        }
        Ok(Self { config, data })
    }

    pub fn from_single(y: &LowPassData) -> Self {
        Self {
            config: y.config(),
            data: DMatrix::from_column_slice(y.coeffs().len(), 1, y.coeffs()),
        }
    }

    pub fn config(&self) -> ProblemConfig {
        self.config
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn signals(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, k: usize) -> LowPassData {
        LowPassData {
            config: self.config,
            coeffs: self.data.column(k).iter().copied().collect(),
        }
    }
}

/// Several measures sharing one support; row `j` of `amplitudes` holds the
/// amplitudes of source `j` across the signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::MultiSpikeTrainFile", into = "crate::io::MultiSpikeTrainFile")]
pub struct MultiSpikeTrain {
    support: Vec<f64>,
    amplitudes: DMatrix<C64>,
}

impl MultiSpikeTrain {
    pub fn new(support: Vec<f64>, amplitudes: DMatrix<C64>) -> Result<Self> {
        if amplitudes.nrows() != support.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: amplitudes.nrows(),
            });
        }
        if amplitudes.ncols() == 0 {
            return Err(Error::Shape("at least one signal is required".into()));
        }
        if let Some(j) = (0..support.len())
            .find(|&j| amplitudes.row(j).iter().all(|a| *a == C64::new(0.0, 0.0)))
        {
            return Err(Error::Config(format!("source {j} is zero in every signal")));
        }
        // Reuse the single-signal validation for the positions.
        SpikeTrain::new(support.clone(), vec![C64::new(1.0, 0.0); support.len()])?;
        Ok(Self { support, amplitudes })
    }

    /// One-signal train with the same support and amplitudes.
    pub fn from_single(x: &SpikeTrain) -> Self {
        Self {
            support: x.support.clone(),
            amplitudes: DMatrix::from_column_slice(x.len(), 1, &x.amplitudes),
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn signals(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Group total-variation norm, `sum_j ||A_{j:}||_2`.
    pub fn gtv_norm(&self) -> f64 {
        (0..self.len()).map(|j| self.amplitudes.row(j).norm()).sum()
    }

    pub fn signal(&self, k: usize) -> SpikeTrain {
        SpikeTrain {
            support: self.support.clone(),
            amplitudes: self.amplitudes.column(k).iter().copied().collect(),
        }
    }
}

/// Unit-modulus sign vector attached to a support.
#[derive(Debug, Clone, PartialEq)]
pub struct SignPattern(Vec<C64>);

impl SignPattern {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Config(format!("sign value {v} does not have unit modulus")));
        }
        Ok(Self(values))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self(phases.iter().map(|&p| C64::from_polar(1.0, p)).collect())
    }

    /// Phases of the amplitudes of a spike train.
    pub fn of(x: &SpikeTrain) -> Self {
        Self(x.amplitudes().iter().map(|a| a / a.norm()).collect())
    }

    pub fn values(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `y(k) = sum_j a_j exp(-i 2 pi k t_j)` for `k = -f_c ..= f_c`.
pub fn forward_measure(x: &SpikeTrain, config: ProblemConfig) -> LowPassData {
    let f = config.f_cut() as i64;
    let mut coeffs = vec![C64::new(0.0, 0.0); config.n()];
    let mid = f as usize;
    for (&t, &a) in x.support().iter().zip(x.amplitudes()) {
        // Powers of exp(-i 2 pi t) for k >= 0, mirrored by conjugation so real
        // amplitudes give exactly conjugate-symmetric data. Re-seed
        // occasionally to keep rounding from accumulating.
        let step = C64::from_polar(1.0, -2.0 * PI * t);
        let mut z = C64::new(1.0, 0.0);
        for k in 0..=mid {
            if k % 16 == 0 {
                z = C64::from_polar(1.0, -2.0 * PI * k as f64 * t);
            }
            coeffs[mid + k] += a * z;
            if k > 0 {
                coeffs[mid - k] += a * z.conj();
            }
            z *= step;
        }
    }
    LowPassData { config, coeffs }
}

pub fn forward_multi(x: &MultiSpikeTrain, config: ProblemConfig) -> MultiLowPassData {
    let mut data = DMatrix::zeros(config.n(), x.signals());
    for k in 0..x.signals() {
        let y = forward_measure(&x.signal(k), config);
        data.column_mut(k).copy_from_slice(y.coeffs());
    }
    MultiLowPassData { config, data }
}

/// Trigonometric polynomial `P(t) = sum_{|k| <= f} c_k exp(i 2 pi k t)` with
/// coefficients stored in ascending frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    coeffs: Vec<C64>,
}

impl TrigPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Shape(format!(
                "trigonometric polynomial needs an odd coefficient count, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn f_cut(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Value and first two derivatives in `t`.
    pub fn eval_with_derivatives(&self, t: f64) -> [C64; 3] {
        let f = self.f_cut() as i64;
        let z = C64::from_polar(1.0, 2.0 * PI * t);
        // Horner on sum_m c_m z^m (m = k + f), then shift by z^{-f}.
        let mut p0 = C64::new(0.0, 0.0);
        let mut p1 = C64::new(0.0, 0.0);
        let mut p2 = C64::new(0.0, 0.0);
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            let k = (i as i64 - f) as f64;
            p0 = p0 * z + c;
            p1 = p1 * z + c * k;
            p2 = p2 * z + c * (k * k);
        }
        let shift = C64::from_polar(1.0, -2.0 * PI * f as f64 * t);
        let w = 2.0 * PI;
        [
            p0 * shift,
            p1 * shift * C64::new(0.0, w),
            p2 * shift * (-w * w),
        ]
    }

    pub fn eval(&self, t: f64) -> C64 {
        let f = self.f_cut() as i64;
        let z = C64::from_polar(1.0, 2.0 * PI * t);
        let mut p = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        p * C64::from_polar(1.0, -2.0 * PI * f as f64 * t)
    }
}

/// `(F_n^* c)(t) = sum_{|k| <= f_c} c_k exp(i 2 pi k t)`.
pub fn adjoint_poly_eval(c: &[C64], t: f64, config: ProblemConfig) -> Result<C64> {
    if c.len() != config.n() {
        return Err(Error::LengthMismatch {
            expected: config.n(),
            got: c.len(),
        });
    }
    Ok(TrigPoly { coeffs: c.to_vec() }.eval(t))
}

/// Real pairing `<y, c> = Re(y^* c)` used throughout the dual problems.
pub fn real_inner(y: &[C64], c: &[C64]) -> f64 {
    y.iter().zip(c).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Sums of the superdiagonals: component `d` is `sum_i M[i, i + d]`.
pub fn toeplitz_adjoint(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "toeplitz adjoint needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    Ok((0..n)
        .map(|d| (0..n - d).map(|i| m[(i, i + d)]).sum())
        .collect())
}

/// Upper-triangular Toeplitz lift `T(u)[i, i + d] = u_d`, the exact adjoint of
/// [`toeplitz_adjoint`] under the Frobenius inner product `tr(A^* B)`.
pub fn toeplitz_lift(u: &[C64]) -> DMatrix<C64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| if j >= i { u[j - i] } else { C64::new(0.0, 0.0) })
}

/// Hermitian Toeplitz matrix with first row `u` (`u_0` taken as real).
pub fn hermitian_toeplitz(u: &[C64]) -> DMatrix<C64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| {
        if j > i {
            u[j - i]
        } else if j < i {
            u[i - j].conj()
        } else {
            C64::new(u[0].re, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn config_rejects_non_integer_cutoff() {
        assert!(ProblemConfig::from_real(10.5).is_err());
        assert!(ProblemConfig::from_real(0.0).is_err());
        let cfg = ProblemConfig::from_real(10.0).unwrap();
        assert_eq!(cfg.n(), 21);
        assert_eq!(cfg.lambda_c() * cfg.f_cut() as f64, 1.0);
    }

    #[test]
    fn forward_of_half_spike() {
        let cfg = ProblemConfig::new(1).unwrap();
        let x = SpikeTrain::new(vec![0.5], vec![c(1.0, 0.0)]).unwrap();
        let y = forward_measure(&x, cfg);
        let expect = [-1.0, 1.0, -1.0];
        for (got, want) in y.coeffs().iter().zip(expect) {
            assert!((got - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn forward_of_empty_train_is_zero() {
        let cfg = ProblemConfig::new(4).unwrap();
        let y = forward_measure(&SpikeTrain::empty(), cfg);
        assert!(y.coeffs().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn adjoint_simple_cases() {
        let cfg = ProblemConfig::new(3).unwrap();
        let mut e = vec![c(0.0, 0.0); 7];
        e[3] = c(1.0, 0.0);
        for t in [0.0, 0.13, 0.77] {
            assert!((adjoint_poly_eval(&e, t, cfg).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        }
        let ones = vec![c(1.0, 0.0); 7];
        assert!((adjoint_poly_eval(&ones, 0.0, cfg).unwrap() - c(7.0, 0.0)).norm() < 1e-13);
        assert!(adjoint_poly_eval(&ones[..6], 0.0, cfg).is_err());
    }

    #[test]
    fn min_separation_examples() {
        assert_eq!(min_separation(&[0.0, 0.75]), Separation::Finite(0.25));
        let d = min_separation(&[0.1, 0.2, 0.9]).finite().unwrap();
        assert!((d - 0.1).abs() < 1e-15);
        assert_eq!(min_separation(&[0.42]), Separation::Infinite);
        assert!(Separation::Infinite.at_least(1e9));
    }

    #[test]
    fn toeplitz_adjoint_examples() {
        let id = DMatrix::<C64>::identity(3, 3);
        assert_eq!(toeplitz_adjoint(&id).unwrap(), vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let ones = DMatrix::from_element(3, 3, c(1.0, 0.0));
        assert_eq!(
            toeplitz_adjoint(&ones).unwrap(),
            vec![c(3.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]
        );
        assert!(toeplitz_adjoint(&DMatrix::<C64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn spike_train_validation() {
        assert!(SpikeTrain::new(vec![0.1, 0.1], vec![c(1.0, 0.0); 2]).is_err());
        assert!(SpikeTrain::new(vec![1.0], vec![c(1.0, 0.0)]).is_err());
        assert!(SpikeTrain::new(vec![0.1], vec![]).is_err());
        assert!(SignPattern::new(vec![c(0.5, 0.0)]).is_err());
        let rows = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(MultiSpikeTrain::new(vec![0.1, 0.4], rows).is_err());
    }

    #[test]
    fn trig_poly_derivatives_match_finite_differences() {
        let coeffs: Vec<C64> = (0..9).map(|i| c((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let p = TrigPoly::new(coeffs).unwrap();
        let t = 0.3;
        let h = 1e-6;
        let [_, d1, d2] = p.eval_with_derivatives(t);
        let fd1 = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
        let fd2 = (p.eval(t + h) - 2.0 * p.eval(t) + p.eval(t - h)) / (h * h);
        assert!((d1 - fd1).norm() / d1.norm() < 1e-7);
        assert!((d2 - fd2).norm() / d2.norm() < 1e-3);
    }
}
