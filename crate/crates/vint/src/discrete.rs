//! Discrete forced mechanics: the stepping core.
//!
//! A discrete system replaces the Lagrangian by a two-point function
//! `L_d(q0, q1)` and the force by two covector legs `f^-(q0, q1)` and
//! `f^+(q0, q1)`. A configuration sequence `{q_k}` is a trajectory when every
//! interior point satisfies the discrete Euler-Lagrange equation
//!
//! ```text
//! D2 L_d(q_{k-1}, q_k) + D1 L_d(q_k, q_{k+1})
//!   + f^+(q_{k-1}, q_k) + f^-(q_k, q_{k+1}) = 0,
//! ```
//!
//! which is a root-finding problem in `q_{k+1}`, not an ODE step. The two
//! forced discrete Legendre transforms attach momenta to a pair,
//!
//! ```text
//! p^+(q0, q1) =  D2 L_d(q0, q1) + f^+(q0, q1)      (momentum at q1)
//! p^-(q0, q1) = -D1 L_d(q0, q1) - f^-(q0, q1)      (momentum at q0)
//! ```
//!
//! and the Euler-Lagrange equation is exactly momentum matching:
//! `p^+(q_{k-1}, q_k) = p^-(q_k, q_{k+1})`. Composing one transform with the
//! inverse of the other gives the phase-space flow `(q, p) -> (q', p')` and
//! the configuration-pair flow.
//!
//! When both force legs come from one scalar `R_d(q0, q1)` via
//! `f^+ = -D2 R_d`, `f^- = +D1 R_d`, the system is called Rayleigh; then the
//! momenta are plain slot-gradients of the modified functions
//! `L_d -+ R_d`, and everything forced can be phrased unforced in terms of
//! those. The cross-derivative identity `D1 f^+ + D2 f^- = 0` is the
//! computable fingerprint of that structure and
//! [`DiscreteForcedSystem::check_rayleigh_condition`] measures it.
//!
//! Right and left discrete Hamiltonians are Legendre duals of `L_d` in one
//! slot; their equations of motion are evaluated here as residuals on phase
//! quadruples `(q_j, p_j, q_{j+1}, p_{j+1})`, vanishing exactly on flow data.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuous::ForcedLagrangianSystem;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::fd;
use crate::linalg;
pub use crate::linalg::{GuessPolicy, SolverConfig};

pub type PairScalar = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PairVector = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Which discrete Legendre transform or discrete Hamiltonian a call refers
/// to: `Plus` is the right leg (momentum at the later configuration), `Minus`
/// the left leg (momentum at the earlier one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// Discrete mechanical system with force legs and optional Rayleigh
/// structure.
pub struct DiscreteForcedSystem {
    dim: usize,
    h: f64,
    l_d: PairScalar,
    f_plus_fn: Option<PairVector>,
    f_minus_fn: Option<PairVector>,
    r_d: Option<PairScalar>,
    r_grad1: Option<PairVector>,
    r_grad2: Option<PairVector>,
    d1_fn: Option<PairVector>,
    d2_fn: Option<PairVector>,
    mass: Option<DMatrix<f64>>,
}

impl std::fmt::Debug for DiscreteForcedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteForcedSystem")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("explicit_forces", &self.f_plus_fn.is_some())
            .field("rayleigh", &self.r_d.is_some())
            .finish_non_exhaustive()
    }
}

impl DiscreteForcedSystem {
    pub fn new(
        dim: usize,
        h: f64,
        l_d: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DiscreteForcedSystem {
            dim,
            h,
            l_d: Box::new(l_d),
            f_plus_fn: None,
            f_minus_fn: None,
            r_d: None,
            r_grad1: None,
            r_grad2: None,
            d1_fn: None,
            d2_fn: None,
            mass: None,
        }
    }

    /// Attach explicit force legs. These take precedence over legs derived
    /// from a Rayleigh potential.
    pub fn with_forces(
        mut self,
        f_plus: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        f_minus: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.f_plus_fn = Some(Box::new(f_plus));
        self.f_minus_fn = Some(Box::new(f_minus));
        self
    }

    /// Attach a discrete Rayleigh potential. Unless explicit forces are also
    /// attached, the legs become `f^+ = -D2 R_d` and `f^- = +D1 R_d`,
    /// evaluated from [`with_rayleigh_partials`](Self::with_rayleigh_partials)
    /// when given and by central differences otherwise. The modified
    /// functions `L_d -+ R_d` become available through
    /// [`modified_lagrangian`](Self::modified_lagrangian) and
    /// [`del_residual_modified`](Self::del_residual_modified).
    pub fn with_rayleigh(
        mut self,
        r_d: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.r_d = Some(Box::new(r_d));
        self
    }

    /// Analytic slot gradients of the Rayleigh potential.
    pub fn with_rayleigh_partials(
        mut self,
        d1: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        d2: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.r_grad1 = Some(Box::new(d1));
        self.r_grad2 = Some(Box::new(d2));
        self
    }

    /// Analytic slot gradients of the discrete Lagrangian.
    pub fn with_lagrangian_partials(
        mut self,
        d1: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        d2: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.d1_fn = Some(Box::new(d1));
        self.d2_fn = Some(Box::new(d2));
        self
    }

    /// Constant mass matrix, used only to seed Legendre-inversion Newton
    /// solves with `q +- h M^{-1} p`; correctness never depends on it.
    pub fn with_mass_matrix(mut self, mass: DMatrix<f64>) -> Self {
        self.mass = Some(mass);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn lagrangian(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.l_d)(a, b)
    }

    pub fn rayleigh(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        self.r_d.as_ref().map(|r| r(a, b))
    }

    pub fn has_rayleigh(&self) -> bool {
        self.r_d.is_some()
    }

    /// First-slot gradient of `L_d`, analytic or central-difference.
    pub fn d1_lagrangian(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match &self.d1_fn {
            Some(d) => d(a, b),
            None => fd::grad1(|x, y| (self.l_d)(x, y), a, b),
        }
    }

    /// Second-slot gradient of `L_d`, analytic or central-difference.
    pub fn d2_lagrangian(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match &self.d2_fn {
            Some(d) => d(a, b),
            None => fd::grad2(|x, y| (self.l_d)(x, y), a, b),
        }
    }

    pub(crate) fn d1_rayleigh(&self, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
        if let Some(g) = &self.r_grad1 {
            return Some(g(a, b));
        }
        self.r_d.as_ref().map(|r| fd::grad1(|x, y| r(x, y), a, b))
    }

    pub(crate) fn d2_rayleigh(&self, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
        if let Some(g) = &self.r_grad2 {
            return Some(g(a, b));
        }
        self.r_d.as_ref().map(|r| fd::grad2(|x, y| r(x, y), a, b))
    }

    /// Plus force leg: explicit when attached, else `-D2 R_d`, else zero.
    pub fn force_plus(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        if let Some(f) = &self.f_plus_fn {
            return f(a, b);
        }
        match self.d2_rayleigh(a, b) {
            Some(g) => neg(&g),
            None => vec![0.0; self.dim],
        }
    }

    /// Minus force leg: explicit when attached, else `+D1 R_d`, else zero.
    pub fn force_minus(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        if let Some(f) = &self.f_minus_fn {
            return f(a, b);
        }
        match self.d1_rayleigh(a, b) {
            Some(g) => g,
            None => vec![0.0; self.dim],
        }
    }

    /// Modified function `L_d + R_d` (`Side::Plus`) or `L_d - R_d`
    /// (`Side::Minus`). Errors when no Rayleigh potential is attached.
    pub fn modified_lagrangian(&self, side: Side, a: &[f64], b: &[f64]) -> Result<f64> {
        let r = self
            .rayleigh(a, b)
            .ok_or_else(|| Error::contract("modified Lagrangians need a Rayleigh potential"))?;
        Ok(match side {
            Side::Plus => self.lagrangian(a, b) + r,
            Side::Minus => self.lagrangian(a, b) - r,
        })
    }

    /// Momentum covector of the right (plus) discrete Legendre transform:
    /// the momentum attached at `b`.
    pub fn momentum_plus(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        add(&self.d2_lagrangian(a, b), &self.force_plus(a, b))
    }

    /// Momentum covector of the left (minus) discrete Legendre transform:
    /// the momentum attached at `a`.
    pub fn momentum_minus(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        neg(&add(&self.d1_lagrangian(a, b), &self.force_minus(a, b)))
    }

    /// Right forced discrete Legendre transform `(q0, q1) -> (q1, p^+)`.
    pub fn legendre_plus(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (b.to_vec(), self.momentum_plus(a, b))
    }

    /// Left forced discrete Legendre transform `(q0, q1) -> (q0, p^-)`.
    pub fn legendre_minus(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (a.to_vec(), self.momentum_minus(a, b))
    }

    /// Discrete Euler-Lagrange residual at the middle point of a triple.
    pub fn del_residual(&self, prev: &[f64], q: &[f64], next: &[f64]) -> Vec<f64> {
        let mut r = add(&self.d2_lagrangian(prev, q), &self.d1_lagrangian(q, next));
        r = add(&r, &self.force_plus(prev, q));
        add(&r, &self.force_minus(q, next))
    }

    /// The same residual phrased through the modified functions of a Rayleigh
    /// system: `D2 (L_d - R_d)(prev, q) + D1 (L_d + R_d)(q, next)`. Agrees
    /// with [`del_residual`](Self::del_residual) to rounding; exists as an
    /// independently computed cross-check. Errors without a Rayleigh
    /// potential.
    pub fn del_residual_modified(&self, prev: &[f64], q: &[f64], next: &[f64]) -> Result<Vec<f64>> {
        if !self.has_rayleigh() {
            return Err(Error::contract(
                "modified-form residual needs a Rayleigh potential",
            ));
        }
        let d2_minus = match (&self.d2_fn, &self.r_grad2) {
            (Some(dl), Some(dr)) => sub(&dl(prev, q), &dr(prev, q)),
            _ => {
                let r = self.r_d.as_ref().unwrap();
                fd::grad2(|x, y| (self.l_d)(x, y) - r(x, y), prev, q)
            }
        };
        let d1_plus = match (&self.d1_fn, &self.r_grad1) {
            (Some(dl), Some(dr)) => add(&dl(q, next), &dr(q, next)),
            _ => {
                let r = self.r_d.as_ref().unwrap();
                fd::grad1(|x, y| (self.l_d)(x, y) + r(x, y), q, next)
            }
        };
        Ok(add(&d2_minus, &d1_plus))
    }

    /// Advance a configuration pair by one step: Newton solve of the discrete
    /// Euler-Lagrange equation for the next configuration.
    pub fn del_step(&self, prev: &[f64], q: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
        let guess = match cfg.guess {
            GuessPolicy::Extrapolate => {
                (0..self.dim).map(|i| 2.0 * q[i] - prev[i]).collect::<Vec<_>>()
            }
            GuessPolicy::Hold => q.to_vec(),
        };
        linalg::newton_solve(
            |x| self.del_residual(prev, q, x),
            &guess,
            cfg,
            "del_step",
        )
    }

    /// Newton guess for Legendre inversions: `base +- h M^{-1} p` when a mass
    /// matrix is attached and factors, else `base`.
    fn inversion_guess(&self, base: &[f64], p: &[f64], sign: f64) -> Vec<f64> {
        if let Some(m) = &self.mass {
            if let Ok(v) = linalg::solve(m, p, "inversion guess") {
                return (0..self.dim)
                    .map(|i| base[i] + sign * self.h * v[i])
                    .collect();
            }
        }
        base.to_vec()
    }

    /// Invert the left transform in its second slot: find `q1` with
    /// `p^-(q0, q1) = p0`. This is the inverse of the map
    /// `(q0, q1) -> (q0, p^-)` and the workhorse of both flows.
    pub fn legendre_minus_inverse(
        &self,
        q0: &[f64],
        p0: &[f64],
        cfg: &SolverConfig,
    ) -> Result<Vec<f64>> {
        let guess = self.inversion_guess(q0, p0, 1.0);
        linalg::newton_solve(
            |x| sub(&self.momentum_minus(q0, x), p0),
            &guess,
            cfg,
            "legendre_minus_inverse",
        )
    }

    /// Invert the right transform in its first slot: find `q0` with
    /// `p^+(q0, q1) = p1`. This is the inverse of the map
    /// `(q0, q1) -> (q1, p^+)` and steps trajectories backward.
    pub fn legendre_plus_inverse(
        &self,
        q1: &[f64],
        p1: &[f64],
        cfg: &SolverConfig,
    ) -> Result<Vec<f64>> {
        let guess = self.inversion_guess(q1, p1, -1.0);
        linalg::newton_solve(
            |x| sub(&self.momentum_plus(x, q1), p1),
            &guess,
            cfg,
            "legendre_plus_inverse",
        )
    }

    /// Phase-space flow `(q_j, p_j) -> (q_{j+1}, p_{j+1})`: invert the left
    /// transform to find the next configuration, then read the new momentum
    /// off the right transform.
    pub fn hamiltonian_flow(
        &self,
        q: &[f64],
        p: &[f64],
        cfg: &SolverConfig,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let q1 = self.legendre_minus_inverse(q, p, cfg)?;
        let p1 = self.momentum_plus(q, &q1);
        Ok((q1, p1))
    }

    /// Configuration-pair flow `(q_{j-1}, q_j) -> (q_j, q_{j+1})`: push the
    /// pair to its right momentum and invert the left transform there.
    /// Agrees with [`del_step`](Self::del_step) by momentum matching.
    pub fn lagrangian_flow(
        &self,
        prev: &[f64],
        q: &[f64],
        cfg: &SolverConfig,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.momentum_plus(prev, q);
        let q_next = self.legendre_minus_inverse(q, &p, cfg)?;
        Ok((q.to_vec(), q_next))
    }

    /// Shared recovery step for the discrete Hamiltonians: solve a momentum
    /// relation for the configuration missing from the Hamiltonian's
    /// arguments.
    fn recover_config(
        &self,
        side: Side,
        known: &[f64],
        p: &[f64],
        cfg: &SolverConfig,
        context: &str,
    ) -> Result<Vec<f64>> {
        match side {
            // Right Hamiltonian knows q_j; find q_{j+1} with p^+(q_j, .) = p.
            Side::Plus => linalg::newton_solve(
                |x| sub(&self.momentum_plus(known, x), p),
                &self.inversion_guess(known, p, 1.0),
                cfg,
                context,
            ),
            // Left Hamiltonian knows q_{j+1}; find q_j with p^-(. , q_{j+1}) = p.
            Side::Minus => linalg::newton_solve(
                |x| sub(&self.momentum_minus(x, known), p),
                &self.inversion_guess(known, p, -1.0),
                cfg,
                context,
            ),
        }
    }

    /// Right discrete Hamiltonian `H^+(q_j, p_{j+1}) = p_{j+1} . q1 - L_d(q_j, q1)`
    /// or left discrete Hamiltonian `H^-(q_{j+1}, p_j) = -p_j . q0 - L_d(q0, q_{j+1})`,
    /// where the missing configuration is recovered by inverting the matching
    /// forced Legendre transform.
    ///
    /// Degenerate systems whose momentum does not determine the missing
    /// configuration (constant `L_d`, zero forces) fail inside the recovery
    /// with a regularity error.
    pub fn discrete_hamiltonian(
        &self,
        side: Side,
        q: &[f64],
        p: &[f64],
        cfg: &SolverConfig,
    ) -> Result<f64> {
        match side {
            Side::Plus => {
                let q1 = self.recover_config(side, q, p, cfg, "right discrete Hamiltonian")?;
                Ok(linalg::dot(p, &q1) - self.lagrangian(q, &q1))
            }
            Side::Minus => {
                let q0 = self.recover_config(side, q, p, cfg, "left discrete Hamiltonian")?;
                Ok(-linalg::dot(p, &q0) - self.lagrangian(&q0, q))
            }
        }
    }

    pub(crate) fn eval_plus(&self, q_j: &[f64], p_next: &[f64], cfg: &SolverConfig) -> Result<PlusEval> {
        let q1 = self.recover_config(Side::Plus, q_j, p_next, cfg, "right discrete Hamiltonian")?;
        // Jacobian of the recovered momentum in its own configuration,
        // d p^+(q_j, .) / d q1. With a Rayleigh potential this is the second
        // slot Hessian of L_d - R_d; the forces already are the potential's
        // slot gradients, so differentiating the assembled momentum computes
        // exactly that.
        let jac = fd::jac2(|a, b| self.momentum_plus(a, b), q_j, &q1, self.dim);
        let f_plus = self.force_plus(q_j, &q1);
        let f_minus = self.force_minus(q_j, &q1);
        // Full gradient of H^+ in the momentum slot: the recovered
        // configuration plus the implicit correction J^{-T} f^+ from the
        // recovery's dependence on p.
        let corr = linalg::solve_transpose(&jac, &f_plus, "plus-side momentum Jacobian")?;
        let d2h_full = add(&q1, &corr);
        // Gradient of H^+ in the configuration slot at frozen recovery:
        // -D1 L_d(q_j, q1).
        let d1h_plain = neg(&self.d1_lagrangian(q_j, &q1));
        Ok(PlusEval {
            q1,
            jac,
            d2h_full,
            d1h_plain,
            f_plus,
            f_minus,
        })
    }

    pub(crate) fn eval_minus(&self, q_next: &[f64], p_j: &[f64], cfg: &SolverConfig) -> Result<MinusEval> {
        let q0 = self.recover_config(Side::Minus, q_next, p_j, cfg, "left discrete Hamiltonian")?;
        // d p^-(. , q_next) / d q0, the left analogue of the plus-side
        // Jacobian (minus the first-slot Hessian of L_d + R_d when Rayleigh).
        let jac = fd::jac1(|a, b| self.momentum_minus(a, b), &q0, q_next, self.dim);
        let f_minus = self.force_minus(&q0, q_next);
        let f_plus = self.force_plus(&q0, q_next);
        let corr = linalg::solve_transpose(&jac, &f_minus, "minus-side momentum Jacobian")?;
        let d2h_full = add(&neg(&q0), &corr);
        let d1h_plain = neg(&self.d2_lagrangian(&q0, q_next));
        Ok(MinusEval {
            q0,
            jac,
            d2h_full,
            d1h_plain,
            f_plus,
            f_minus,
        })
    }

    /// Residuals of the discrete Hamilton equations on a phase quadruple.
    ///
    /// For `Side::Plus` (right equations, driven by `H^+(q_j, p_{j+1})`) the
    /// pair is
    ///
    /// ```text
    /// a = J^T (q_{j+1} - D2 H^+) + f^+        J = d p^+(q_j, .) / d q
    /// b = D1 H^+ - f^- - p_j
    /// ```
    ///
    /// with `D2 H^+` the full momentum-slot gradient (recovery correction
    /// included), `D1 H^+` the configuration-slot gradient at frozen
    /// recovery, and both force legs evaluated on `(q_j, q1)` with `q1` the
    /// recovered configuration. For `Side::Minus` (left equations, driven by
    /// `H^-(q_{j+1}, p_j)`) the analogous pair is
    ///
    /// ```text
    /// a = J^T (q_j + D2 H^-) - f^-            J = d p^-(., q_{j+1}) / d q
    /// b = -D1 H^- + f^+ - p_{j+1}
    /// ```
    ///
    /// Covectors multiply Jacobians as `J^T v` (column convention). With an
    /// asymmetric `J` the untransposed product does not vanish on flow data;
    /// the tests pin this down on a two-dimensional system whose force has a
    /// position-velocity cross derivative.
    ///
    /// Both residuals vanish identically (to solver tolerance) on quadruples
    /// generated by [`hamiltonian_flow`](Self::hamiltonian_flow).
    pub fn hamilton_eq_residuals(
        &self,
        side: Side,
        q_j: &[f64],
        p_j: &[f64],
        q_next: &[f64],
        p_next: &[f64],
        cfg: &SolverConfig,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        match side {
            Side::Plus => {
                let ev = self.eval_plus(q_j, p_next, cfg)?;
                let diff = sub(q_next, &ev.d2h_full);
                let jt = ev.jac.transpose();
                let mut a = vec![0.0; self.dim];
                for i in 0..self.dim {
                    a[i] = (0..self.dim).map(|k| jt[(i, k)] * diff[k]).sum::<f64>() + ev.f_plus[i];
                }
                let b = sub(&sub(&ev.d1h_plain, &ev.f_minus), p_j);
                Ok((a, b))
            }
            Side::Minus => {
                let ev = self.eval_minus(q_next, p_j, cfg)?;
                let s = add(q_j, &ev.d2h_full);
                let jt = ev.jac.transpose();
                let mut a = vec![0.0; self.dim];
                for i in 0..self.dim {
                    a[i] = (0..self.dim).map(|k| jt[(i, k)] * s[k]).sum::<f64>() - ev.f_minus[i];
                }
                let b = sub(&add(&neg(&ev.d1h_plain), &ev.f_plus), p_next);
                Ok((a, b))
            }
        }
    }

    /// Sample the cross-derivative identity `D1 f^+ + D2 f^- = 0` satisfied
    /// by any force pair whose legs are slot gradients of a single two-point
    /// potential. Pairs are drawn uniformly from the box `[lo, hi]^dim` for
    /// each configuration, with a fixed seed; the residual per pair is the
    /// largest absolute entry of the summed Jacobians.
    pub fn check_rayleigh_condition(
        &self,
        lo: &[f64],
        hi: &[f64],
        samples: usize,
        seed: u64,
        mode: ExecMode,
    ) -> RayleighConditionReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..self.dim)
                    .map(|i| rng.gen_range(lo[i]..=hi[i]))
                    .collect()
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            pairs.push((a, b));
        }
        let residuals = exec::map_items(mode, &pairs, |(a, b)| {
            let d1fp = fd::jac1(|x, y| self.force_plus(x, y), a, b, self.dim);
            let d2fm = fd::jac2(|x, y| self.force_minus(x, y), a, b, self.dim);
            let total = d1fp + d2fm;
            total.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
        });
        let (mut max_residual, mut worst) = (0.0, 0usize);
        for (i, r) in residuals.iter().enumerate() {
            if *r >= max_residual {
                max_residual = *r;
                worst = i;
            }
        }
        RayleighConditionReport {
            max_residual,
            worst_pair: pairs.get(worst).cloned().unwrap_or_default(),
            samples,
        }
    }

    /// Run a discrete trajectory of `steps` steps (so `steps + 1` stored
    /// configurations), seeding the first pair according to `init`.
    ///
    /// Momenta are filled from the right transform of each preceding pair,
    /// `p_k = p^+(q_{k-1}, q_k)`, with `p_0` from the left transform of the
    /// first pair; on a trajectory the interior values are side-independent
    /// by momentum matching. The per-point Euler-Lagrange residual norms are
    /// recorded as diagnostics.
    pub fn run_trajectory(
        &self,
        init: TrajectoryInit<'_>,
        steps: usize,
        cfg: &SolverConfig,
    ) -> Result<DiscreteTrajectory> {
        if steps == 0 {
            return Err(Error::contract("run_trajectory needs at least one step"));
        }
        let (q0, q1) = match init {
            TrajectoryInit::Pair { q0, q1 } => (q0, q1),
            TrajectoryInit::PhaseSpace { q0, p0 } => {
                let q1 = self.legendre_minus_inverse(&q0, &p0, cfg)?;
                (q0, q1)
            }
            TrajectoryInit::Velocity { q0, v0, system } => {
                let p0 = system.grad_v(&q0, &v0);
                let q1 = self.legendre_minus_inverse(&q0, &p0, cfg)?;
                (q0, q1)
            }
        };
        let mut configs = Vec::with_capacity(steps + 1);
        configs.push(q0);
        configs.push(q1);
        while configs.len() < steps + 1 {
            let k = configs.len();
            let next = self
                .del_step(&configs[k - 2], &configs[k - 1], cfg)
                .map_err(|e| match e {
                    Error::Convergence {
                        context,
                        iterations,
                        residual,
                    } => Error::Convergence {
                        context: format!("{context} at trajectory step {k}"),
                        iterations,
                        residual,
                    },
                    other => other,
                })?;
            if !next.iter().all(|x| x.is_finite()) {
                return Err(Error::Divergence { step: k });
            }
            configs.push(next);
        }
        let mut momenta = Vec::with_capacity(configs.len());
        momenta.push(self.momentum_minus(&configs[0], &configs[1]));
        for k in 1..configs.len() {
            momenta.push(self.momentum_plus(&configs[k - 1], &configs[k]));
        }
        let del_residuals = (1..configs.len().saturating_sub(1))
            .map(|k| {
                linalg::inf_norm(&self.del_residual(
                    &configs[k - 1],
                    &configs[k],
                    &configs[k + 1],
                ))
            })
            .collect();
        Ok(DiscreteTrajectory {
            h: self.h,
            configs,
            momenta,
            del_residuals,
        })
    }
}

pub(crate) struct PlusEval {
    /// Recovered later configuration.
    #[allow(dead_code)]
    pub q1: Vec<f64>,
    pub jac: DMatrix<f64>,
    pub d2h_full: Vec<f64>,
    pub d1h_plain: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
}

pub(crate) struct MinusEval {
    /// Recovered earlier configuration.
    #[allow(dead_code)]
    pub q0: Vec<f64>,
    pub jac: DMatrix<f64>,
    pub d2h_full: Vec<f64>,
    pub d1h_plain: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
}

/// Result of [`DiscreteForcedSystem::check_rayleigh_condition`].
#[derive(Debug, Clone)]
pub struct RayleighConditionReport {
    /// Largest residual over all sampled pairs.
    pub max_residual: f64,
    /// The pair attaining it.
    pub worst_pair: (Vec<f64>, Vec<f64>),
    /// Number of pairs sampled.
    pub samples: usize,
}

/// How [`DiscreteForcedSystem::run_trajectory`] obtains its seed pair.
pub enum TrajectoryInit<'a> {
    /// Both initial configurations given directly.
    Pair { q0: Vec<f64>, q1: Vec<f64> },
    /// Initial configuration and momentum; the second configuration comes
    /// from inverting the left Legendre transform.
    PhaseSpace { q0: Vec<f64>, p0: Vec<f64> },
    /// Initial configuration and velocity; the momentum is the continuous
    /// Legendre transform of the paired system, then as `PhaseSpace`.
    Velocity {
        q0: Vec<f64>,
        v0: Vec<f64>,
        system: &'a ForcedLagrangianSystem,
    },
}

/// Discrete trajectory with attached momenta and diagnostics.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory {
    pub h: f64,
    /// Configurations `q_0 .. q_N`.
    pub configs: Vec<Vec<f64>>,
    /// Momenta `p_0 .. p_N` (see [`DiscreteForcedSystem::run_trajectory`]).
    pub momenta: Vec<Vec<f64>>,
    /// Infinity norms of the Euler-Lagrange residual at interior points
    /// `q_1 .. q_{N-1}`.
    pub del_residuals: Vec<f64>,
}

impl DiscreteTrajectory {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.configs.len()).map(|k| k as f64 * self.h).collect()
    }

    pub fn max_del_residual(&self) -> f64 {
        self.del_residuals.iter().fold(0.0, |m, x| m.max(*x))
    }
}

/// Configuration function with its gradient, for gauge transformations.
#[derive(Clone)]
pub struct GaugeFunction {
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl GaugeFunction {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        GaugeFunction {
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }

    pub fn zero() -> Self {
        GaugeFunction::new(|_| 0.0, |q| vec![0.0; q.len()])
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    pub fn grad(&self, q: &[f64]) -> Vec<f64> {
        (self.grad)(q)
    }
}

/// Boundary-term change of a Rayleigh system that leaves its trajectories
/// untouched: for configuration functions `psi`, `phi0`, `phi1`,
///
/// ```text
/// L_d~(a, b) = L_d(a, b) + psi(a) + phi1(b) + phi0(a) - psi(b)
/// R_d~(a, b) = R_d(a, b) + psi(a) + phi1(b) - phi0(a) + psi(b)
/// ```
///
/// The force legs shift by exact gradients
/// (`f^+~ = f^+ - phi1' - psi'` at `b`, `f^-~ = f^- + psi' - phi0'` at `a`)
/// and the extra terms cancel identically in the Euler-Lagrange residual, so
/// the transformed system has the same `del_step` roots as the original, not
/// merely nearby ones.
///
/// Errors when `sys` has no Rayleigh potential: the transformation reshuffles
/// weight between `L_d` and `R_d`, so it needs an `R_d` to act on.
pub fn gauge_transform(
    sys: &Arc<DiscreteForcedSystem>,
    psi: GaugeFunction,
    phi0: GaugeFunction,
    phi1: GaugeFunction,
) -> Result<DiscreteForcedSystem> {
    if !sys.has_rayleigh() {
        return Err(Error::contract(
            "gauge transformation needs a Rayleigh potential",
        ));
    }
    let dim = sys.dim();
    let h = sys.step_size();

    let (s1, s2, s3) = (sys.clone(), sys.clone(), sys.clone());
    let (s4, s5, s6) = (sys.clone(), sys.clone(), sys.clone());
    let (psi_l, psi_r, psi_d1, psi_d2) = (psi.clone(), psi.clone(), psi.clone(), psi.clone());
    let (psi_fp, psi_fm) = (psi.clone(), psi);
    let (phi0_l, phi0_r, phi0_d1, phi0_fm) = (phi0.clone(), phi0.clone(), phi0.clone(), phi0);
    let (phi1_l, phi1_r, phi1_d2, phi1_fp) = (phi1.clone(), phi1.clone(), phi1.clone(), phi1);

    let mut out = DiscreteForcedSystem::new(dim, h, move |a: &[f64], b: &[f64]| {
        s1.lagrangian(a, b) + psi_l.value(a) + phi1_l.value(b) + phi0_l.value(a) - psi_l.value(b)
    })
    .with_rayleigh(move |a: &[f64], b: &[f64]| {
        s2.rayleigh(a, b).unwrap() + psi_r.value(a) + phi1_r.value(b) - phi0_r.value(a)
            + psi_r.value(b)
    })
    .with_lagrangian_partials(
        move |a: &[f64], b: &[f64]| {
            let mut g = s3.d1_lagrangian(a, b);
            let gp = psi_d1.grad(a);
            let g0 = phi0_d1.grad(a);
            for i in 0..g.len() {
                g[i] += gp[i] + g0[i];
            }
            g
        },
        move |a: &[f64], b: &[f64]| {
            let mut g = s4.d2_lagrangian(a, b);
            let g1 = phi1_d2.grad(b);
            let gp = psi_d2.grad(b);
            for i in 0..g.len() {
                g[i] += g1[i] - gp[i];
            }
            g
        },
    )
    .with_forces(
        move |a: &[f64], b: &[f64]| {
            let mut f = s5.force_plus(a, b);
            let g1 = phi1_fp.grad(b);
            let gp = psi_fp.grad(b);
            for i in 0..f.len() {
                f[i] -= g1[i] + gp[i];
            }
            f
        },
        move |a: &[f64], b: &[f64]| {
            let mut f = s6.force_minus(a, b);
            let gp = psi_fm.grad(a);
            let g0 = phi0_fm.grad(a);
            for i in 0..f.len() {
                f[i] += gp[i] - g0[i];
            }
            f
        },
    );
    if let Some(m) = &sys.mass {
        out = out.with_mass_matrix(m.clone());
    }
    Ok(out)
}
