//! Continuous mechanical systems with external forces.
//!
//! A system is a Lagrangian `L(q, v)` plus an external force covector
//! `f(q, v)`. When the force comes from a Rayleigh potential `R(q, v)` it is
//! `f = -dR/dv`, and the energy `E = v . dL/dv - L` decays along solutions at
//! the rate `-v . dR/dv`. Trajectories satisfy the forced Euler-Lagrange
//! equations, which this module exposes in explicit second-order form for the
//! reference integrators; the variational stepping itself lives in
//! [`crate::discrete`].
//!
//! Derivatives of `L` default to central differences; systems that know their
//! gradients and velocity Hessians in closed form can attach them, which both
//! sharpens and speeds up everything downstream (the test suite cross-checks
//! attached providers against finite differences).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{self, SolverConfig};

pub type ScalarField = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type VectorField = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixField = Box<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

/// External force derived from a Rayleigh potential: `-dR/dv` at `(q, v)`.
///
/// Errors with [`Error::NonFinite`] when the gradient fails to evaluate to
/// finite numbers.
pub fn rayleigh_force(
    r: impl Fn(&[f64], &[f64]) -> f64,
    q: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let mut g = fd::grad_checked(|x| r(q, x), v, "Rayleigh force gradient")?;
    for gi in &mut g {
        *gi = -*gi;
    }
    Ok(g)
}

/// Lagrangian system with an optional external or Rayleigh force.
pub struct ForcedLagrangianSystem {
    dim: usize,
    lagrangian: ScalarField,
    force: Option<VectorField>,
    rayleigh: Option<ScalarField>,
    rayleigh_grad_v: Option<VectorField>,
    grad_q_fn: Option<VectorField>,
    grad_v_fn: Option<VectorField>,
    hess_vv_fn: Option<MatrixField>,
    hess_vq_fn: Option<MatrixField>,
}

impl ForcedLagrangianSystem {
    pub fn new(
        dim: usize,
        lagrangian: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ForcedLagrangianSystem {
            dim,
            lagrangian: Box::new(lagrangian),
            force: None,
            rayleigh: None,
            rayleigh_grad_v: None,
            grad_q_fn: None,
            grad_v_fn: None,
            hess_vv_fn: None,
            hess_vq_fn: None,
        }
    }

    /// Attach an explicit external force covector.
    pub fn with_force(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.force = Some(Box::new(f));
        self
    }

    /// Attach a Rayleigh potential. The force becomes `-dR/dv`, evaluated
    /// from [`with_rayleigh_grad`](Self::with_rayleigh_grad) when attached
    /// and by central differences otherwise.
    pub fn with_rayleigh(
        mut self,
        r: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.rayleigh = Some(Box::new(r));
        self
    }

    /// Analytic velocity gradient of the Rayleigh potential.
    pub fn with_rayleigh_grad(
        mut self,
        g: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.rayleigh_grad_v = Some(Box::new(g));
        self
    }

    /// Analytic position and velocity gradients of the Lagrangian.
    pub fn with_gradients(
        mut self,
        dq: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        dv: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad_q_fn = Some(Box::new(dq));
        self.grad_v_fn = Some(Box::new(dv));
        self
    }

    /// Analytic second derivatives in the velocity slot: `w` is the velocity
    /// Hessian `d2L/dv2`, `m` the mixed block `d(dL/dv)/dq`.
    pub fn with_velocity_hessians(
        mut self,
        w: impl Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        m: impl Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess_vv_fn = Some(Box::new(w));
        self.hess_vq_fn = Some(Box::new(m));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lagrangian(&self, q: &[f64], v: &[f64]) -> f64 {
        (self.lagrangian)(q, v)
    }

    pub fn rayleigh(&self, q: &[f64], v: &[f64]) -> Option<f64> {
        self.rayleigh.as_ref().map(|r| r(q, v))
    }

    pub fn has_rayleigh(&self) -> bool {
        self.rayleigh.is_some()
    }

    /// Whether any force source is attached (explicit, analytic Rayleigh
    /// gradient, or Rayleigh potential).
    pub fn has_force(&self) -> bool {
        self.force.is_some() || self.rayleigh_grad_v.is_some() || self.rayleigh.is_some()
    }

    /// External force covector at `(q, v)`: the explicit force when one was
    /// attached, `-dR/dv` when a Rayleigh potential was, zero otherwise.
    pub fn force(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        if let Some(f) = &self.force {
            return f(q, v);
        }
        if let Some(g) = &self.rayleigh_grad_v {
            return g(q, v).into_iter().map(|x| -x).collect();
        }
        if let Some(r) = &self.rayleigh {
            let mut g = fd::grad2(|a, b| r(a, b), q, v);
            for gi in &mut g {
                *gi = -*gi;
            }
            return g;
        }
        vec![0.0; self.dim]
    }

    /// Velocity gradient of the Rayleigh potential, analytic when attached,
    /// central-difference otherwise; `None` without a potential.
    pub fn rayleigh_grad(&self, q: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        if let Some(g) = &self.rayleigh_grad_v {
            return Some(g(q, v));
        }
        self.rayleigh
            .as_ref()
            .map(|r| fd::grad2(|a, b| r(a, b), q, v))
    }

    /// Position gradient of the Lagrangian, analytic or central-difference.
    pub fn grad_q(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match &self.grad_q_fn {
            Some(g) => g(q, v),
            None => fd::grad1(|a, b| (self.lagrangian)(a, b), q, v),
        }
    }

    /// Velocity gradient of the Lagrangian, analytic or central-difference.
    pub fn grad_v(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match &self.grad_v_fn {
            Some(g) => g(q, v),
            None => fd::grad2(|a, b| (self.lagrangian)(a, b), q, v),
        }
    }

    /// Velocity Hessian `d2L/dv2`.
    ///
    /// Without an analytic provider this differentiates the velocity
    /// gradient when that gradient is analytic, and otherwise falls back to
    /// direct second differences of the Lagrangian itself; nesting two
    /// finite differences would be orders of magnitude less accurate.
    pub fn hess_vv(&self, q: &[f64], v: &[f64]) -> DMatrix<f64> {
        match (&self.hess_vv_fn, &self.grad_v_fn) {
            (Some(w), _) => w(q, v),
            (None, Some(g)) => fd::jac2(|a, b| g(a, b), q, v, self.dim),
            (None, None) => fd::hessian2(|a, b| (self.lagrangian)(a, b), q, v),
        }
    }

    /// Mixed block `d(dL/dv)/dq`, with the same fallback strategy as
    /// [`Self::hess_vv`].
    pub fn hess_vq(&self, q: &[f64], v: &[f64]) -> DMatrix<f64> {
        match (&self.hess_vq_fn, &self.grad_v_fn) {
            (Some(m), _) => m(q, v),
            (None, Some(g)) => fd::jac1(|a, b| g(a, b), q, v, self.dim),
            (None, None) => fd::cross21(|a, b| (self.lagrangian)(a, b), q, v),
        }
    }

    /// Energy `E = v . dL/dv - L`.
    pub fn energy(&self, q: &[f64], v: &[f64]) -> f64 {
        linalg::dot(v, &self.grad_v(q, v)) - self.lagrangian(q, v)
    }

    /// Continuous Legendre transform `(q, v) -> (q, p)` with `p = dL/dv`.
    pub fn legendre(&self, q: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (q.to_vec(), self.grad_v(q, v))
    }

    /// Invert the Legendre transform at fixed `q`: find `v` with
    /// `dL/dv(q, v) = p`. Newton from `v = 0`, which lands in one step for
    /// any Lagrangian quadratic in velocity.
    pub fn legendre_inverse(&self, q: &[f64], p: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
        let residual = |v: &[f64]| {
            let g = self.grad_v(q, v);
            g.iter().zip(p).map(|(gi, pi)| gi - pi).collect()
        };
        linalg::newton_solve(residual, &vec![0.0; self.dim], cfg, "continuous Legendre inverse")
    }

    /// Acceleration from the forced Euler-Lagrange equations:
    /// solves `W qdd = dL/dq - (d(dL/dv)/dq) v + f` with `W = d2L/dv2`.
    ///
    /// Errors with [`Error::Regularity`] when `W` is singular or its
    /// condition estimate exceeds [`linalg::MAX_CONDITION`].
    pub fn forced_el_rhs(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let w = self.hess_vv(q, v);
        let m = self.hess_vq(q, v);
        let dq = self.grad_q(q, v);
        let f = self.force(q, v);
        let mut rhs = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mv: f64 = (0..self.dim).map(|j| m[(i, j)] * v[j]).sum();
            rhs[i] = dq[i] + f[i] - mv;
        }
        if !rhs.iter().all(|x| x.is_finite()) {
            return Err(Error::non_finite("forced Euler-Lagrange right-hand side"));
        }
        linalg::solve_conditioned(&w, &rhs, "velocity Hessian in forced_el_rhs")
    }
}

/// Hamiltonian system with an optional force covector `beta(q, p)`.
pub struct ForcedHamiltonianSystem {
    dim: usize,
    hamiltonian: ScalarField,
    beta: Option<VectorField>,
    grad_q_fn: Option<VectorField>,
    grad_p_fn: Option<VectorField>,
}

impl ForcedHamiltonianSystem {
    pub fn new(
        dim: usize,
        hamiltonian: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ForcedHamiltonianSystem {
            dim,
            hamiltonian: Box::new(hamiltonian),
            beta: None,
            grad_q_fn: None,
            grad_p_fn: None,
        }
    }

    pub fn with_beta(
        mut self,
        beta: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.beta = Some(Box::new(beta));
        self
    }

    pub fn with_gradients(
        mut self,
        dq: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        dp: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad_q_fn = Some(Box::new(dq));
        self.grad_p_fn = Some(Box::new(dp));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self, q: &[f64], p: &[f64]) -> f64 {
        (self.hamiltonian)(q, p)
    }

    pub fn beta(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        match &self.beta {
            Some(b) => b(q, p),
            None => vec![0.0; self.dim],
        }
    }

    /// Forced Hamilton equations: `(dq/dt, dp/dt) = (dH/dp, -(dH/dq + beta))`.
    pub fn forced_hamilton_rhs(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dq = match &self.grad_p_fn {
            Some(g) => g(q, p),
            None => fd::grad2(|a, b| (self.hamiltonian)(a, b), q, p),
        };
        let hq = match &self.grad_q_fn {
            Some(g) => g(q, p),
            None => fd::grad1(|a, b| (self.hamiltonian)(a, b), q, p),
        };
        let beta = self.beta(q, p);
        let dp = hq.iter().zip(&beta).map(|(h, b)| -(h + b)).collect();
        (dq, dp)
    }
}
