//! Nuclear-norm matrix completion with a slack variable.
//!
//! Solves
//!
//! ```text
//! min ||X||_*   s.t.   Y = X + E,   P_obs(E) = 0
//! ```
//!
//! with an inexact augmented Lagrange multiplier (IALM) iteration. Each step
//! soft-thresholds the singular values of `Y - E + L/mu`, re-projects the
//! slack onto the unobserved entries and takes a dual ascent step on `L`.
//! The penalty `mu` grows by `rho` only once the iterate has settled at the
//! current penalty (`mu * ||X_k - X_{k-1}||_F / ||Y||_F < growth_tol`).
//! Growing it unconditionally makes the iteration freeze on a feasible but
//! non-minimal point, which is easy to hit on small matrices.
//!
//! The SVD work is done on a thin factorization: for a tall `m` the
//! R factor of its QR decomposition carries the same singular values and
//! right singular vectors, so thresholding reduces to `m * V diag(f) V^T`
//! with an `n x n` SVD.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().iter().sum())
}

/// Singular value soft-thresholding, the proximal operator of `tau * ||.||_*`.
///
/// Returns `U diag(max(s - tau, 0)) V^T`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    ensure_finite(m)?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("threshold must be >= 0, got {tau}")));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    Ok(Shrunk::of(m, tau).matrix)
}

fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// Output of one thresholding step.
struct Shrunk {
    matrix: DMatrix<f64>,
    /// Largest singular value of the input.
    sigma_max: f64,
}

/// Singular values and right singular vectors of a matrix with at least as
/// many rows as columns.
struct RightSvd {
    singular_values: Vec<f64>,
    v_t: DMatrix<f64>,
}

impl RightSvd {
    fn of_tall(m: &DMatrix<f64>) -> Self {
        debug_assert!(m.nrows() >= m.ncols());
        let r = m.clone().qr().r();
        let svd = SVD::new(r, false, true);
        RightSvd {
            singular_values: svd.singular_values.iter().copied().collect(),
            v_t: svd.v_t.expect("v_t requested"),
        }
    }

    fn sigma_max(&self) -> f64 {
        self.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// `m * V diag(max(s - tau, 0) / s) V^T`, which equals the thresholded
    /// matrix without forming U.
    fn shrink(&self, m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
        let n = m.ncols();
        let mut scaled_v = self.v_t.transpose();
        for (k, &s) in self.singular_values.iter().enumerate() {
            let factor = if s > tau { (s - tau) / s } else { 0.0 };
            scaled_v.column_mut(k).scale_mut(factor);
        }
        let w = &scaled_v * &self.v_t;
        debug_assert_eq!(w.nrows(), n);
        m * w
    }
}

impl Shrunk {
    fn of(m: &DMatrix<f64>, tau: f64) -> Self {
        if m.nrows() >= m.ncols() {
            let svd = RightSvd::of_tall(m);
            Shrunk {
                matrix: svd.shrink(m, tau),
                sigma_max: svd.sigma_max(),
            }
        } else {
            let t = m.transpose();
            let svd = RightSvd::of_tall(&t);
            Shrunk {
                matrix: svd.shrink(&t, tau).transpose(),
                sigma_max: svd.sigma_max(),
            }
        }
    }
}

/// A completion instance: the data matrix and which of its entries are known.
///
/// Unobserved entries of `y` are stored as zero; whatever the caller put there
/// is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionProblem {
    y: DMatrix<f64>,
    observed: Vec<bool>,
    num_observed: usize,
}

impl CompletionProblem {
    /// Builds a problem from a list of observed `(row, col)` positions.
    pub fn new(
        y: DMatrix<f64>,
        observed: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let (rows, cols) = y.shape();
        let mut mask = vec![false; rows * cols];
        for (i, j) in observed {
            if i >= rows || j >= cols {
                return Err(Error::InvalidInput(format!(
                    "observed entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            let idx = j * rows + i;
            if mask[idx] {
                return Err(Error::InvalidInput(format!(
                    "observed entry ({i}, {j}) listed twice"
                )));
            }
            mask[idx] = true;
        }
        Self::from_mask(y, mask)
    }

    /// Builds a problem from a column-major observation mask.
    pub fn from_mask(mut y: DMatrix<f64>, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                actual: observed.len(),
            });
        }
        ensure_finite(&y)?;
        for (v, &o) in y.iter_mut().zip(&observed) {
            if !o {
                *v = 0.0;
            }
        }
        let num_observed = observed.iter().filter(|&&o| o).count();
        Ok(CompletionProblem {
            y,
            observed,
            num_observed,
        })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[col * self.y.nrows() + row]
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn num_observed(&self) -> usize {
        self.num_observed
    }

    /// Observed positions in column-major order.
    pub fn observed_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let rows = self.y.nrows();
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(idx, _)| (idx % rows, idx / rows))
    }
}

/// IALM parameters. `mu0 = None` selects `1.25 / sigma_max(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub mu0: Option<f64>,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Penalty growth and stopping both wait until the scaled iterate change
    /// drops below this.
    pub growth_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            mu0: None,
            rho: 1.5,
            tol: 1e-7,
            max_iter: 100,
            growth_tol: 1e-3,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(Error::Config(format!("mu0 must be positive, got {mu0}")));
            }
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be > 1, got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.growth_tol > 0.0) {
            return Err(Error::Config(format!("growth_tol must be positive, got {}", self.growth_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    /// Recovered low-rank matrix.
    pub x: DMatrix<f64>,
    /// Slack; zero on every observed entry.
    pub e: DMatrix<f64>,
    pub iterations: usize,
    /// Final `||Y - X - E||_F / ||Y||_F`.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
}

impl CompletionResult {
    /// Column `j` of the recovered matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j).iter().copied().collect()
    }
}

/// Runs IALM on `problem`.
///
/// Hitting `max_iter` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn complete(problem: &CompletionProblem, params: &SolverParams) -> Result<CompletionResult> {
    params.validate()?;
    let (rows, cols) = problem.shape();
    if problem.num_observed == 0 {
        return Err(Error::DegenerateProblem("no observed entries".into()));
    }
    if let Some(j) = (0..cols).find(|&j| (0..rows).all(|i| !problem.is_observed(i, j))) {
        return Err(Error::DegenerateProblem(format!("column {j} has no observed entry")));
    }

    let d = &problem.y;
    let mask = &problem.observed;

    if problem.num_observed == d.len() {
        return Ok(CompletionResult {
            x: d.clone(),
            e: DMatrix::zeros(rows, cols),
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    let norm_d = d.norm();
    if norm_d == 0.0 {
        // Every observed entry is zero; the zero matrix is the minimizer.
        return Ok(CompletionResult {
            x: DMatrix::zeros(rows, cols),
            e: DMatrix::zeros(rows, cols),
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    // Dual variable. It stays zero off the observed set.
    let mut dual = DMatrix::<f64>::zeros(rows, cols);
    let mut e = DMatrix::<f64>::zeros(rows, cols);
    let mut x;
    let mut mu = 0.0;
    let mut history = Vec::with_capacity(params.max_iter);
    let mut converged = false;
    let mut work = d.clone();
    let mut x_prev = DMatrix::<f64>::zeros(rows, cols);

    for iter in 0..params.max_iter {
        if iter == 0 {
            // work = D; its top singular value seeds mu when not given.
            let svd = if rows >= cols {
                RightSvd::of_tall(&work)
            } else {
                RightSvd::of_tall(&work.transpose())
            };
            mu = params.mu0.unwrap_or_else(|| 1.25 / svd.sigma_max());
            x = if rows >= cols {
                svd.shrink(&work, 1.0 / mu)
            } else {
                svd.shrink(&work.transpose(), 1.0 / mu).transpose()
            };
        } else {
            let inv_mu = 1.0 / mu;
            let (ds, es, ls) = (d.as_slice(), e.as_slice(), dual.as_slice());
            for (idx, w) in work.as_mut_slice().iter_mut().enumerate() {
                *w = ds[idx] - es[idx] + inv_mu * ls[idx];
            }
            x = Shrunk::of(&work, inv_mu).matrix;
        }

        // E = P_unobs(D - X + L/mu) = -X off the observed set; residual lives on it.
        let mut res_sq = 0.0;
        let (ds, xs) = (d.as_slice(), x.as_slice());
        let (es, ls) = (e.as_mut_slice(), dual.as_mut_slice());
        for idx in 0..ds.len() {
            if mask[idx] {
                es[idx] = 0.0;
                let r = ds[idx] - xs[idx];
                ls[idx] += mu * r;
                res_sq += r * r;
            } else {
                es[idx] = -xs[idx];
            }
        }
        let residual = res_sq.sqrt() / norm_d;
        history.push(residual);

        let mut step_sq = 0.0;
        for (p, &v) in x_prev.as_mut_slice().iter_mut().zip(xs) {
            step_sq += (v - *p) * (v - *p);
            *p = v;
        }
        let settled = mu * step_sq.sqrt() / norm_d < params.growth_tol;
        if settled {
            mu *= params.rho;
        }

        if residual <= params.tol && settled {
            converged = true;
            return Ok(CompletionResult {
                x,
                e,
                iterations: iter + 1,
                residual,
                converged,
                residual_history: history,
            });
        }
        if iter + 1 == params.max_iter {
            return Ok(CompletionResult {
                x,
                e,
                iterations: iter + 1,
                residual,
                converged,
                residual_history: history,
            });
        }
    }
    unreachable!("max_iter >= 1 is validated")
}

/// Largest singular value, via the same thin factorization the solver uses.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(Shrunk::of(m, f64::INFINITY).sigma_max)
}
