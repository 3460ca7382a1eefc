//! Small dense linear algebra and the shared Newton solver.
//!
//! Configuration dimensions here are tiny (one or two coordinates in the
//! built-in scenarios), so everything goes through plain LU factorizations.
//! What matters is uniform failure behaviour: a matrix that cannot be trusted
//! raises [`Error::Regularity`] with an infinity-norm condition estimate, and
//! an iteration that stalls raises [`Error::Convergence`] carrying its last
//! residual.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fd;

/// Condition-number ceiling for matrices the physics requires to be
/// invertible (velocity Hessians, Newton Jacobians). Past roughly 1e12 an LU
/// solve in double precision has no trustworthy digits left for the residual
/// tolerances used here.
pub const MAX_CONDITION: f64 = 1e12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Matrix infinity norm (maximum absolute row sum).
pub fn mat_inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum())
        .fold(0.0, f64::max)
}

/// Infinity-norm condition number, `inf` when the matrix does not factor.
pub fn cond_inf(m: &DMatrix<f64>) -> f64 {
    match m.clone().lu().try_inverse() {
        Some(inv) => mat_inf_norm(m) * mat_inf_norm(&inv),
        None => f64::INFINITY,
    }
}

/// Solve `m x = rhs` by LU.
pub fn solve(m: &DMatrix<f64>, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    let lu = m.clone().lu();
    match lu.solve(&DVector::from_column_slice(rhs)) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x.as_slice().to_vec()),
        _ => Err(Error::Regularity {
            context: context.to_string(),
            cond: cond_inf(m),
        }),
    }
}

/// Solve `m^T x = rhs` by LU. Used where a covector is pulled back through a
/// Jacobian, i.e. for terms of the form `J^{-T} f`.
pub fn solve_transpose(m: &DMatrix<f64>, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    solve(&m.transpose(), rhs, context)
}

/// Solve `m x = rhs`, rejecting matrices whose infinity-norm condition number
/// exceeds [`MAX_CONDITION`] even when they technically factor.
pub fn solve_conditioned(m: &DMatrix<f64>, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    let cond = cond_inf(m);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Regularity {
            context: context.to_string(),
            cond,
        });
    }
    solve(m, rhs, context)
}

/// How a Newton-based stepper seeds its iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessPolicy {
    /// Linear extrapolation from the two most recent configurations
    /// (`2 q - q_prev`). Exact for uniform motion, good for small steps.
    Extrapolate,
    /// Reuse the most recent configuration unchanged.
    Hold,
}

/// Shared Newton-solver settings.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Infinity-norm residual target.
    pub tolerance: f64,
    /// Iteration budget before giving up with a convergence error.
    pub max_iterations: usize,
    /// Multiplier on the central-difference step used for the solver's
    /// Jacobians (1.0 keeps the crate-wide rule from [`crate::fd::step`]).
    pub fd_step_scale: f64,
    /// Initial-guess policy for trajectory stepping.
    pub guess: GuessPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-12,
            max_iterations: 50,
            fd_step_scale: 1.0,
            guess: GuessPolicy::Extrapolate,
        }
    }
}

/// Newton iteration with central-difference Jacobians.
///
/// Runs until the residual's infinity norm drops to `cfg.tolerance`,
/// erroring out on a singular Jacobian, a non-finite residual, or an
/// exhausted iteration budget.
pub fn newton_solve(
    residual: impl Fn(&[f64]) -> Vec<f64>,
    guess: &[f64],
    cfg: &SolverConfig,
    context: &str,
) -> Result<Vec<f64>> {
    let n = guess.len();
    let mut x = guess.to_vec();
    for _ in 0..cfg.max_iterations {
        let r = residual(&x);
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::non_finite(context));
        }
        if inf_norm(&r) <= cfg.tolerance {
            return Ok(x);
        }
        let jac = fd::jacobian_scaled(&residual, &x, n, cfg.fd_step_scale);
        let dx = solve(&jac, &r, context)?;
        for i in 0..n {
            x[i] -= dx[i];
        }
    }
    let last = residual(&x);
    if inf_norm(&last) <= cfg.tolerance {
        return Ok(x);
    }
    Err(Error::Convergence {
        context: context.to_string(),
        iterations: cfg.max_iterations,
        residual: inf_norm(&last),
    })
}
