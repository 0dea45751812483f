//! Semidefinite duals of the TV, demixing and group-TV programs.
//!
//! All three share the variable `W = [Lambda C; C^* I_m]` with `W` PSD and
//! `T^*(Lambda) = e_1`; demixing adds `|c_k| <= eta`. ADMM alternates between
//! the affine set (closed form) and the PSD cone (eigendecomposition).

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, Mat, MatRef, Par};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::cmatrix;
use crate::model::{toeplitz_adjoint, LowPassData, MultiLowPassData, ProblemConfig, TrigPoly, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProblemKind {
    Tv,
    Demix,
    Gtv,
}

/// One of the three dual programs together with its data.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    kind: ProblemKind,
    data: DMatrix<C64>,
    eta: Option<f64>,
    config: ProblemConfig,
}

impl SdpProblem {
    pub fn tv(y: &LowPassData) -> Self {
        Self {
            kind: ProblemKind::Tv,
            data: DMatrix::from_column_slice(y.coeffs().len(), 1, y.coeffs()),
            eta: None,
            config: y.config(),
        }
    }

    pub fn demix(y: &LowPassData, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            eta: Some(eta),
            kind: ProblemKind::Demix,
            ..Self::tv(y)
        })
    }

    pub fn gtv(y: &MultiLowPassData) -> Self {
        Self {
            kind: ProblemKind::Gtv,
            data: y.data().clone(),
            eta: None,
            config: y.config(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn config(&self) -> ProblemConfig {
        self.config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rho: f64,
    pub max_iters: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub over_relaxation: f64,
    /// Rebalance `rho` when the primal and dual residuals drift apart.
    pub adaptive_rho: bool,
    /// Record one [`TraceRow`] per iteration.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 50_000,
            tol_abs: 1e-7,
            tol_rel: 1e-6,
            over_relaxation: 1.8,
            adaptive_rho: true,
            trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.tol_abs > 0.0) || !(self.tol_rel > 0.0) {
            return Err(Error::Config("rho and tolerances must be positive".into()));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(Error::Config(format!(
                "over-relaxation must lie in (0, 2), got {}",
                self.over_relaxation
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub iterations: usize,
    pub converged: bool,
    /// `||W - Z||_F` at the returned iterate.
    pub primal: f64,
    pub dual: f64,
    /// Smallest eigenvalue of the returned block matrix.
    pub min_eigenvalue: f64,
    /// `||T^*(Lambda) - e_1||_inf`.
    pub toeplitz: f64,
    /// Largest `|c_k| - eta` (demixing only, zero otherwise).
    pub box_violation: f64,
    /// Diagonal shift applied to make the returned iterate exactly feasible.
    pub feasibility_shift: f64,
    pub final_rho: f64,
}

/// Solver state kept for warm starts.
#[derive(Debug, Clone)]
pub struct WarmState {
    z: Mat<C64>,
    u: Mat<C64>,
    rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualSolution {
    pub kind: ProblemKind,
    /// Dual coefficients, `n x m` (one column for TV and demixing).
    #[serde(with = "cmatrix")]
    pub c: DMatrix<C64>,
    #[serde(with = "cmatrix")]
    pub lambda: DMatrix<C64>,
    /// `Re tr(Y^* C)`.
    pub objective: f64,
    pub residuals: Residuals,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub warm: Option<WarmState>,
}

impl DualSolution {
    /// Column `k` of the dual coefficients.
    pub fn column(&self, k: usize) -> Vec<C64> {
        self.c.column(k).iter().copied().collect()
    }

    /// `(F_n^* c_k)` for every column.
    pub fn polynomials(&self) -> Vec<TrigPoly> {
        polys_of(&self.c)
    }

    /// Dual coefficients of the solver iterate, before feasibility
    /// restoration shrank them by `1 / sqrt(1 + n s)`.
    pub fn iterate_coefficients(&self) -> DMatrix<C64> {
        let n = self.lambda.nrows() as f64;
        &self.c * C64::new((1.0 + n * self.residuals.feasibility_shift).sqrt(), 0.0)
    }

    /// Polynomials of the solver iterate. Support location uses these: on the
    /// support they reach 1 up to the solver tolerance, while the restored
    /// ones can sit below the locator threshold by the restoration factor.
    pub fn locator_polynomials(&self) -> Vec<TrigPoly> {
        polys_of(&self.iterate_coefficients())
    }
}

fn polys_of(c: &DMatrix<C64>) -> Vec<TrigPoly> {
    c.column_iter()
        .map(|col| TrigPoly::new(col.iter().copied().collect()).expect("odd coefficient count"))
        .collect()
}

/// Eigendecomposition workspace for repeated projections of one size.
struct EigenWorkspace {
    s: Diag<C64>,
    u: Mat<C64>,
    buf: MemBuffer,
}

impl EigenWorkspace {
    fn new(n: usize) -> Self {
        let req = self_adjoint_evd_scratch::<C64>(n, ComputeEigenvectors::Yes, Par::Seq, Default::default());
        Self {
            s: Diag::zeros(n),
            u: Mat::zeros(n, n),
            buf: MemBuffer::new(req),
        }
    }

    fn decompose(&mut self, a: MatRef<'_, C64>) -> Result<()> {
        self_adjoint_evd(
            a,
            self.s.as_mut(),
            Some(self.u.as_mut()),
            Par::Seq,
            MemStack::new(&mut self.buf),
            Default::default(),
        )
        .map_err(|_| Error::Eigen)
    }

    fn eigenvalue(&self, i: usize) -> f64 {
        self.s.as_ref().column_vector()[i].re
    }

    /// Overwrite `a` (Hermitian) with its PSD projection; returns the smallest
    /// eigenvalue of the input.
    fn project(&mut self, a: &mut Mat<C64>) -> Result<f64> {
        let n = a.nrows();
        self.decompose(a.as_ref())?;
        let vals: Vec<f64> = (0..n).map(|i| self.eigenvalue(i)).collect();
        let negative = vals.iter().filter(|v| **v < 0.0).count();
        let min = vals.first().copied().unwrap_or(0.0);
        if negative == 0 {
            return Ok(min);
        }
        // Rebuild from whichever spectral part has lower rank.
        let keep_positive = n - negative < negative;
        let idx: Vec<usize> = (0..n).filter(|&i| (vals[i] > 0.0) == keep_positive && vals[i] != 0.0).collect();
        let mut b = Mat::<C64>::zeros(n, idx.len());
        for (col, &i) in idx.iter().enumerate() {
            let w = vals[i].abs().sqrt();
            for r in 0..n {
                b[(r, col)] = self.u[(r, i)] * w;
            }
        }
        if keep_positive {
            matmul(a.as_mut(), Accum::Replace, b.as_ref(), b.adjoint(), ONE, Par::Seq);
        } else {
            // Removing lambda u u^* with lambda < 0 adds |lambda| u u^*.
            matmul(a.as_mut(), Accum::Add, b.as_ref(), b.adjoint(), ONE, Par::Seq);
        }
        hermitize(a);
        Ok(min)
    }
}

fn hermitize(a: &mut Mat<C64>) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

fn to_faer(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_nalgebra(m: MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn frob(m: &Mat<C64>) -> f64 {
    m.norm_l2()
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues.
pub fn psd_project(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("psd projection needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let mut a = to_faer(m);
    hermitize(&mut a);
    EigenWorkspace::new(a.nrows()).project(&mut a)?;
    Ok(to_nalgebra(a.as_ref()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("eigenvalues need a square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let mut a = to_faer(m);
    hermitize(&mut a);
    let mut ws = EigenWorkspace::new(a.nrows());
    ws.decompose(a.as_ref())?;
    Ok(ws.eigenvalue(0))
}

/// Projection onto the affine part: Hermitian `Lambda` with `T^*(Lambda) = e_1`,
/// lower-right block `I_m`, `C` moved along the objective gradient and, for
/// demixing, clipped to the disc of radius `eta`.
fn affine_step(v: &Mat<C64>, out: &mut Mat<C64>, n: usize, gradient: &Mat<C64>, rho: f64, eta: Option<f64>) {
    let size = v.nrows();
    for i in 0..size {
        for j in 0..size {
            out[(i, j)] = v[(i, j)];
        }
    }
    hermitize(out);
    for d in 0..n {
        let mut sum = ZERO;
        for i in 0..n - d {
            sum += out[(i, i + d)];
        }
        let target = if d == 0 { ONE } else { ZERO };
        let shift = (sum - target) / (n - d) as f64;
        for i in 0..n - d {
            let val = out[(i, i + d)] - shift;
            out[(i, i + d)] = val;
            out[(i + d, i)] = val.conj();
        }
        if d == 0 {
            for i in 0..n {
                out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
            }
        }
    }
    for i in 0..n {
        for k in 0..size - n {
            let mut c = out[(i, n + k)] + gradient[(i, k)] / (2.0 * rho);
            if let Some(eta) = eta {
                let r = c.norm();
                if r > eta {
                    c *= eta / r;
                }
            }
            out[(i, n + k)] = c;
            out[(n + k, i)] = c.conj();
        }
    }
    for a in n..size {
        for b in n..size {
            out[(a, b)] = if a == b { ONE } else { ZERO };
        }
    }
}

fn objective_of(data: &DMatrix<C64>, w: &Mat<C64>, n: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..data.ncols() {
        for i in 0..n {
            acc += (data[(i, k)].conj() * w[(i, n + k)]).re;
        }
    }
    acc
}

fn initial_block(n: usize, m: usize) -> Mat<C64> {
    Mat::from_fn(n + m, n + m, |i, j| {
        if i != j {
            ZERO
        } else if i < n {
            C64::new(1.0 / n as f64, 0.0)
        } else {
            ONE
        }
    })
}

/// Move an approximately feasible `(Lambda, C)` into the feasible set.
///
/// With the lower-right block fixed to `I`, the LMI holds iff
/// `Lambda - C C^* >= 0`. Adding `s I` with `s` the deficit and rescaling by
/// `1 + n s` keeps `T^*(Lambda) = e_1`, so the result is exactly feasible up to
/// rounding and its objective is a valid lower bound. Returns the shift `s`.
fn restore_feasibility(lambda: &mut DMatrix<C64>, c: &mut DMatrix<C64>) -> Result<f64> {
    let n = lambda.nrows();
    let schur = &*lambda - &*c * c.adjoint();
    let deficit = (-min_eigenvalue(&schur)?).max(0.0);
    if deficit == 0.0 {
        return Ok(0.0);
    }
    // A hair above the deficit so rounding in the check cannot flip the sign.
    let shift = deficit * (1.0 + 1e-9) + f64::EPSILON;
    let scale = 1.0 + n as f64 * shift;
    for i in 0..n {
        lambda[(i, i)] += C64::new(shift, 0.0);
    }
    *lambda /= C64::new(scale, 0.0);
    *c /= C64::new(scale.sqrt(), 0.0);
    Ok(shift)
}

fn package(problem: &SdpProblem, w: &Mat<C64>, residuals: Residuals, trace: Vec<TraceRow>, warm: Option<WarmState>) -> Result<DualSolution> {
    let n = problem.config.n();
    let m = problem.data.ncols();
    let mut lambda = to_nalgebra(w.as_ref().submatrix(0, 0, n, n));
    let mut c = to_nalgebra(w.as_ref().submatrix(0, n, n, m));
    let feasibility_shift = restore_feasibility(&mut lambda, &mut c)?;
    let tz = toeplitz_adjoint(&lambda)?;
    let toeplitz = tz
        .iter()
        .enumerate()
        .map(|(d, v)| (v - if d == 0 { ONE } else { ZERO }).norm())
        .fold(0.0, f64::max);
    let box_violation = problem
        .eta
        .map_or(0.0, |eta| c.iter().map(|v| v.norm() - eta).fold(0.0, f64::max));
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&lambda);
    block.view_mut((0, n), (n, m)).copy_from(&c);
    block.view_mut((n, 0), (m, n)).copy_from(&c.adjoint());
    block.view_mut((n, n), (m, m)).fill_with_identity();
    let objective = (problem.data.adjoint() * &c).trace().re;
    Ok(DualSolution {
        kind: problem.kind,
        objective,
        residuals: Residuals {
            min_eigenvalue: min_eigenvalue(&block)?,
            toeplitz,
            box_violation,
            feasibility_shift,
            ..residuals
        },
        c,
        lambda,
        trace,
        warm,
    })
}

pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<DualSolution> {
    solve_warm(problem, opts, None)
}

/// ADMM with over-relaxation and residual balancing. Runs that hit the
/// iteration limit return the iterate with the smallest residual and
/// `converged = false`.
pub fn solve_warm(problem: &SdpProblem, opts: &SolverOptions, warm: Option<&DualSolution>) -> Result<DualSolution> {
    opts.validate()?;
    let n = problem.config.n();
    let m = problem.data.ncols();
    let size = n + m;
    let scale = problem.data.norm();
    let blank = Residuals {
        iterations: 0,
        converged: true,
        primal: 0.0,
        dual: 0.0,
        min_eigenvalue: 0.0,
        toeplitz: 0.0,
        box_violation: 0.0,
        feasibility_shift: 0.0,
        final_rho: opts.rho,
    };
    if scale == 0.0 {
        return package(problem, &initial_block(n, m), blank, Vec::new(), None);
    }
    // The feasible set does not depend on the data, so normalising it only
    // changes the step geometry, not the maximiser.
    let gradient = Mat::from_fn(n, m, |i, k| problem.data[(i, k)] / scale);

    let state = warm.and_then(|w| w.warm.as_ref()).filter(|s| s.z.nrows() == size);
    let (mut z, mut u, mut rho) = match state {
        Some(s) => (s.z.clone(), s.u.clone(), s.rho),
        None => (initial_block(n, m), Mat::zeros(size, size), opts.rho),
    };
    let alpha = opts.over_relaxation;
    let mut ws = EigenWorkspace::new(size);
    let mut w = Mat::<C64>::zeros(size, size);
    let mut v = Mat::<C64>::zeros(size, size);
    let mut z_old = Mat::<C64>::zeros(size, size);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Mat<C64>, f64, f64)> = None;
    let root = size as f64;

    for iter in 1..=opts.max_iters {
        for i in 0..size {
            for j in 0..size {
                v[(i, j)] = z[(i, j)] - u[(i, j)];
            }
        }
        affine_step(&v, &mut w, n, &gradient, rho, problem.eta);
        for i in 0..size {
            for j in 0..size {
                z_old[(i, j)] = z[(i, j)];
                let relaxed = w[(i, j)] * alpha + z[(i, j)] * (1.0 - alpha);
                v[(i, j)] = relaxed;
                z[(i, j)] = relaxed + u[(i, j)];
            }
        }
        ws.project(&mut z)?;
        let mut primal = 0.0;
        let mut change = 0.0;
        for i in 0..size {
            for j in 0..size {
                u[(i, j)] += v[(i, j)] - z[(i, j)];
                primal += (w[(i, j)] - z[(i, j)]).norm_sqr();
                change += (z[(i, j)] - z_old[(i, j)]).norm_sqr();
            }
        }
        let primal = primal.sqrt();
        let dual = rho * change.sqrt();
        let eps_pri = opts.tol_abs * root + opts.tol_rel * frob(&w).max(frob(&z));
        let eps_dual = opts.tol_abs * root + opts.tol_rel * rho * frob(&u);
        if opts.trace {
            trace.push(TraceRow {
                iter,
                primal_res: primal,
                dual_res: dual,
                objective: objective_of(&problem.data, &w, n),
            });
        }
        let score = (primal / eps_pri).max(dual / eps_dual);
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, w.clone(), primal, dual));
        }
        if primal <= eps_pri && dual <= eps_dual {
            let residuals = Residuals {
                iterations: iter,
                primal,
                dual,
                final_rho: rho,
                ..blank
            };
            return package(problem, &w, residuals, trace, Some(WarmState { z, u, rho }));
        }
        if opts.adaptive_rho && iter % 10 == 0 {
            let factor = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                for i in 0..size {
                    for j in 0..size {
                        u[(i, j)] /= factor;
                    }
                }
            }
        }
    }
    let (_, w_best, primal, dual) = best.expect("at least one iteration");
    let residuals = Residuals {
        iterations: opts.max_iters,
        converged: false,
        primal,
        dual,
        final_rho: rho,
        ..blank
    };
    package(problem, &w_best, residuals, trace, Some(WarmState { z, u, rho }))
}

/// Result of checking the bounded-polynomial characterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedPolyCheck {
    pub min_eigenvalue: f64,
    pub toeplitz_residual: f64,
    /// PSD within `tol * max(1, ||Lambda||)` and Toeplitz residual within `tol`.
    pub lmi_feasible: bool,
    /// Largest sampled `sum_k |(F_n^* C_k)(t)|^2`.
    pub max_value: f64,
    pub argmax: f64,
}

/// Check the LMI `[Lambda C; C^* I] >= 0`, `T^*(Lambda) = e_1` and sample the
/// squared polynomial modulus on `grid_size` uniform points.
pub fn verify_bounded_polynomial(
    c: &DMatrix<C64>,
    lambda: &DMatrix<C64>,
    grid_size: usize,
    tol: f64,
) -> Result<BoundedPolyCheck> {
    let n = lambda.nrows();
    if lambda.ncols() != n || c.nrows() != n || n % 2 == 0 {
        return Err(Error::Shape(format!(
            "need an odd square Lambda and matching C, got {}x{} and {}x{}",
            lambda.nrows(),
            lambda.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    if grid_size == 0 {
        return Err(Error::Config("grid size must be positive".into()));
    }
    let m = c.ncols();
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(lambda);
    block.view_mut((0, n), (n, m)).copy_from(c);
    block.view_mut((n, 0), (m, n)).copy_from(&c.adjoint());
    block.view_mut((n, n), (m, m)).fill_with_identity();
    let min_eig = min_eigenvalue(&block)?;
    let tz = toeplitz_adjoint(lambda)?;
    let toeplitz_residual = tz
        .iter()
        .enumerate()
        .map(|(d, v)| (v - if d == 0 { ONE } else { ZERO }).norm())
        .fold(0.0, f64::max);
    let lambda_norm = lambda.norm();
    let polys: Vec<TrigPoly> = (0..m)
        .map(|k| TrigPoly::new(c.column(k).iter().copied().collect()))
        .collect::<Result<_>>()?;
    let (mut max_value, mut argmax) = (f64::NEG_INFINITY, 0.0);
    for g in 0..grid_size {
        let t = g as f64 / grid_size as f64;
        let val: f64 = polys.iter().map(|p| p.eval(t).norm_sqr()).sum();
        if val > max_value {
            max_value = val;
            argmax = t;
        }
    }
    Ok(BoundedPolyCheck {
        min_eigenvalue: min_eig,
        toeplitz_residual,
        lmi_feasible: min_eig >= -tol * lambda_norm.max(1.0) && toeplitz_residual <= tol,
        max_value,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_measure, SpikeTrain};

    #[test]
    fn projection_clips_negative_eigenvalues() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE]));
        let p = psd_project(&m).unwrap();
        assert!((p[(0, 0)] - ONE).norm() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);
        assert!(p[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_dual() {
        let cfg = ProblemConfig::new(4).unwrap();
        let sol = solve(&SdpProblem::tv(&LowPassData::zeros(cfg)), &SolverOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.c.iter().all(|v| *v == ZERO));
        assert!(sol.residuals.converged);
    }

    #[test]
    fn single_spike_objective_is_its_mass() {
        let cfg = ProblemConfig::new(6).unwrap();
        let x = SpikeTrain::new(vec![0.37], vec![ONE]).unwrap();
        let sol = solve(&SdpProblem::tv(&forward_measure(&x, cfg)), &SolverOptions::default()).unwrap();
        assert!(sol.residuals.converged);
        assert!((sol.objective - 1.0).abs() < 1e-4, "{}", sol.objective);
    }

    #[test]
    fn bounded_polynomial_examples() {
        let n = 7;
        let lambda = DMatrix::<C64>::identity(n, n) / C64::new(n as f64, 0.0);
        let zero = DMatrix::<C64>::zeros(n, 1);
        let chk = verify_bounded_polynomial(&zero, &lambda, 64, 1e-12).unwrap();
        assert!(chk.lmi_feasible);
        assert_eq!(chk.max_value, 0.0);

        let mut c = DMatrix::<C64>::zeros(n, 1);
        c[(n / 2, 0)] = ONE;
        let lambda = &c * c.adjoint();
        let chk = verify_bounded_polynomial(&c, &lambda, 64, 1e-12).unwrap();
        assert!(chk.lmi_feasible);
        assert!((chk.max_value - 1.0).abs() < 1e-14);
    }
}
