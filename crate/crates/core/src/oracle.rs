//! Grid-discretized counterparts of the three programs, solved by
//! Douglas-Rachford splitting. Used as an independent cross-check of the
//! semidefinite pipelines.
//!
//! With a grid of `N >= n` points the grid matrix satisfies
//! `F_G F_G^* = N I`, so projecting onto `{F_G x (+ s) = y}` is closed form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::cmatrix;
use crate::model::{LowPassData, MultiLowPassData, ProblemConfig, C64};
use crate::sdp::ProblemKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Grid size; `None` uses `16 n`.
    pub grid_size: Option<usize>,
    pub max_iters: usize,
    /// Stop when the split iterates agree to this relative accuracy.
    pub tol: f64,
    /// Grid values below this fraction of the largest row norm are not support.
    pub support_relative: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid_size: None,
            max_iters: 200_000,
            tol: 1e-11,
            support_relative: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSolution {
    pub kind: ProblemKind,
    pub grid_size: usize,
    /// Grid amplitudes, one row per grid point `g / grid_size`.
    #[serde(with = "cmatrix")]
    pub grid_amplitudes: DMatrix<C64>,
    /// Sparse-corruption estimate (demixing only; empty otherwise).
    pub spikes: Vec<C64>,
    /// Grid positions carrying mass.
    pub support: Vec<f64>,
    /// Measurement indices carrying corruption mass (demixing only).
    pub spike_support: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Grid matrix `F_G`, `n x N`, entries `exp(-i 2 pi k g / N)`.
pub fn grid_matrix(cfg: ProblemConfig, grid: usize) -> DMatrix<C64> {
    let f = cfg.f_cut() as i64;
    DMatrix::from_fn(cfg.n(), grid, |i, g| {
        // Reduce the phase index exactly before scaling to keep entries accurate.
        let p = ((i as i64 - f) * g as i64).rem_euclid(grid as i64);
        C64::from_polar(1.0, -2.0 * PI * p as f64 / grid as f64)
    })
}

fn shrink_rows(x: &mut DMatrix<C64>, rows: std::ops::Range<usize>, level: f64) {
    for r in rows {
        let norm = x.row(r).norm();
        let scale = if norm > level { 1.0 - level / norm } else { 0.0 };
        x.row_mut(r).scale_mut(scale);
    }
}

fn row_norms(x: &DMatrix<C64>, rows: std::ops::Range<usize>) -> Vec<f64> {
    rows.map(|r| x.row(r).norm()).collect()
}

struct Program {
    kind: ProblemKind,
    grid: usize,
    eta: f64,
    fg: DMatrix<C64>,
    y: DMatrix<C64>,
}

impl Program {
    fn n(&self) -> usize {
        self.fg.nrows()
    }

    fn vars(&self) -> usize {
        match self.kind {
            ProblemKind::Demix => self.grid + self.n(),
            _ => self.grid,
        }
    }

    fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = &self.fg * x.rows(0, self.grid);
        if self.kind == ProblemKind::Demix {
            out += x.rows(self.grid, self.n());
        }
        out
    }

    fn project(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let r = self.apply(x) - &self.y;
        let gram = match self.kind {
            ProblemKind::Demix => (self.grid + 1) as f64,
            _ => self.grid as f64,
        };
        let mut out = x.clone();
        let back = self.fg.adjoint() * &r;
        out.rows_mut(0, self.grid).zip_apply(&back, |a, b| *a -= b / gram);
        if self.kind == ProblemKind::Demix {
            let n = self.n();
            out.rows_mut(self.grid, n).zip_apply(&r, |a, b| *a -= b / gram);
        }
        out
    }

    fn prox(&self, x: &mut DMatrix<C64>, step: f64) {
        shrink_rows(x, 0..self.grid, step);
        if self.kind == ProblemKind::Demix {
            shrink_rows(x, self.grid..self.grid + self.n(), step * self.eta);
        }
    }

    fn objective(&self, x: &DMatrix<C64>) -> f64 {
        let grid: f64 = row_norms(x, 0..self.grid).iter().sum();
        match self.kind {
            ProblemKind::Demix => grid + self.eta * row_norms(x, self.grid..self.vars()).iter().sum::<f64>(),
            _ => grid,
        }
    }
}

fn solve(prog: Program, opts: &OracleOptions) -> OracleSolution {
    let scale = prog.y.norm();
    let m = prog.y.ncols();
    if scale == 0.0 {
        return package(prog, DMatrix::zeros(0, m), 0, true, opts);
    }
    // Minimum-norm feasible point; its typical entry size sets the step.
    let x0 = prog.project(&DMatrix::zeros(prog.vars(), m));
    let step = 0.1 * row_norms(&x0, 0..prog.vars()).iter().copied().fold(0.0, f64::max);
    let mut z = x0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        iterations = it;
        let xp = prog.project(&z);
        let mut xf = &xp * C64::new(2.0, 0.0) - &z;
        prog.prox(&mut xf, step);
        let diff = &xf - &xp;
        z += &diff;
        if it % 10 == 0 && diff.norm() <= opts.tol * xp.norm().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let x = prog.project(&z);
    package(prog, x, iterations, converged, opts)
}

fn package(prog: Program, x: DMatrix<C64>, iterations: usize, converged: bool, opts: &OracleOptions) -> OracleSolution {
    let (grid, n, m) = (prog.grid, prog.n(), prog.y.ncols());
    let x = if x.nrows() == 0 {
        DMatrix::zeros(prog.vars(), m)
    } else {
        x
    };
    let norms = row_norms(&x, 0..prog.vars());
    let top = norms.iter().copied().fold(0.0, f64::max);
    let cut = opts.support_relative * top;
    let support = (0..grid)
        .filter(|&g| top > 0.0 && norms[g] > cut)
        .map(|g| g as f64 / grid as f64)
        .collect();
    let (spikes, spike_support) = if prog.kind == ProblemKind::Demix {
        (
            x.rows(grid, n).column(0).iter().copied().collect(),
            (0..n).filter(|&l| top > 0.0 && norms[grid + l] > cut).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    OracleSolution {
        kind: prog.kind,
        grid_size: grid,
        objective: prog.objective(&x),
        grid_amplitudes: x.rows(0, grid).into_owned(),
        spikes,
        support,
        spike_support,
        iterations,
        converged,
    }
}

fn build(kind: ProblemKind, cfg: ProblemConfig, y: DMatrix<C64>, eta: f64, opts: &OracleOptions) -> Result<Program> {
    let grid = opts.grid_size.unwrap_or(16 * cfg.n());
    if grid < 4 * cfg.n() {
        return Err(Error::Config(format!(
            "oracle grid {grid} is below 4 n = {}",
            4 * cfg.n()
        )));
    }
    if opts.max_iters == 0 || !(opts.tol > 0.0) {
        return Err(Error::Config("oracle needs positive iterations and tolerance".into()));
    }
    Ok(Program {
        kind,
        grid,
        eta,
        fg: grid_matrix(cfg, grid),
        y,
    })
}

/// Minimum `l1` norm on the grid subject to `F_G x = y`.
pub fn grid_oracle_tv(y: &LowPassData, opts: &OracleOptions) -> Result<OracleSolution> {
    let cfg = y.config();
    let data = DMatrix::from_column_slice(cfg.n(), 1, y.coeffs());
    Ok(solve(build(ProblemKind::Tv, cfg, data, 1.0, opts)?, opts))
}

/// Minimum `||x||_1 + eta ||s||_1` subject to `F_G x + s = y`.
pub fn grid_oracle_demix(y: &LowPassData, eta: f64, opts: &OracleOptions) -> Result<OracleSolution> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("eta must be positive, got {eta}")));
    }
    let cfg = y.config();
    let data = DMatrix::from_column_slice(cfg.n(), 1, y.coeffs());
    Ok(solve(build(ProblemKind::Demix, cfg, data, eta, opts)?, opts))
}

/// Minimum sum of row norms on the grid subject to `F_G X = Y`.
pub fn grid_oracle_gtv(y: &MultiLowPassData, opts: &OracleOptions) -> Result<OracleSolution> {
    let cfg = y.config();
    Ok(solve(build(ProblemKind::Gtv, cfg, y.data().clone(), 1.0, opts)?, opts))
}
