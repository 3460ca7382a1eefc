//! Generating families for the discrete flow: action sums indexed by step,
//! the momentum maps they induce, and residual checks of the two
//! Hamilton-Jacobi difference equations.
//!
//! An [`ActionFamily`] is a step-indexed family of scalar functions `S^k` on
//! configuration space with known gradients. For a reference trajectory
//! `{q_k}` of a forced system, two families are canonical
//! ([`TrajectoryActionFamily`] carries both):
//!
//! * **past-pinned**: `S^k(q) = sum_{i<k-1} L_d(q_i, q_{i+1}) + L_d(q_{k-1}, q)`,
//!   whose gradient is `D2 L_d(q_{k-1}, q)`;
//! * **future-pinned**: `S^k(q) = sum_{i<k+1} L_d(q_i, q_{i+1}) - L_d(q, q_{k+1})`
//!   with the `i = k` term taken on the reference, so the gradient is
//!   `-D1 L_d(q, q_{k+1})`.
//!
//! Combining a family's gradient with one force leg gives the two momentum
//! maps on pairs,
//!
//! ```text
//! gamma^+(a, b) = DS^{k+1}(b) + f^+(a, b)     (past family)
//! gamma^-(a, b) = DS^k(a)     - f^-(a, b)     (future family)
//! ```
//!
//! which reproduce `p^+` and `p^-` on reference pairs. Forcing enters with
//! opposite legs on the two sides, which is why one family cannot serve both
//! equations: the right-equation residual
//!
//! ```text
//! S^{k+1}(b) - S^k(a) - gamma^+ . b + H^+(a, gamma^+)
//! ```
//!
//! vanishes along the reference for the past family, and the left-equation
//! residual
//!
//! ```text
//! S^{k+1}(b) - S^k(a) + gamma^- . a + H^-(b, gamma^-)
//! ```
//!
//! for the future family; swapping families leaves force-sized residue.
//! [`hj_verify`] walks a reference trajectory and reports both residuals,
//! the phase-space equation residuals on the induced `(q, p)` quadruples,
//! and the configuration-space Euler-Lagrange residual, in that order of
//! failure attribution: a corrupted family shows up in the first two while
//! the configuration check stays clean, which localizes the fault.
//!
//! For Rayleigh systems the two maps assemble from a single two-point
//! generating function `G(a, b) = S^k(a) + S^{k+1}(b) - R_d(a, b)` (future
//! family in the first slot, past in the second): `gamma^- = D1 G` and
//! `gamma^+ = D2 G`. [`rayleigh_generating_partials`] exposes that assembly.

use std::sync::Arc;

use crate::discrete::{DiscreteForcedSystem, DiscreteTrajectory, Side, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;

type IndexedScalar = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;
type IndexedVector = Arc<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>;

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Step-indexed family of scalar configuration functions with gradients,
/// valid on a contiguous index range.
#[derive(Clone)]
pub struct ActionFamily {
    lo: usize,
    hi: usize,
    value_fn: IndexedScalar,
    deriv_fn: IndexedVector,
}

impl std::fmt::Debug for ActionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActionFamily")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl ActionFamily {
    pub fn new(
        lo: usize,
        hi: usize,
        value: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(usize, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            lo,
            hi,
            value_fn: Arc::new(value),
            deriv_fn: Arc::new(deriv),
        }
    }

    /// Inclusive index range on which the family is defined.
    pub fn indices(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, k: usize) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn value(&self, k: usize, q: &[f64]) -> f64 {
        (self.value_fn)(k, q)
    }

    pub fn deriv(&self, k: usize, q: &[f64]) -> Vec<f64> {
        (self.deriv_fn)(k, q)
    }

    /// Fault injection: add `eps * |q|^2` to every member (and `2 eps q` to
    /// every gradient). Downstream residuals acquire a slope linear in
    /// `eps`, which the verification tests use to confirm detection.
    pub fn perturbed(&self, eps: f64) -> Self {
        let value = self.value_fn.clone();
        let deriv = self.deriv_fn.clone();
        Self {
            lo: self.lo,
            hi: self.hi,
            value_fn: Arc::new(move |k, q: &[f64]| {
                value(k, q) + eps * q.iter().map(|x| x * x).sum::<f64>()
            }),
            deriv_fn: Arc::new(move |k, q: &[f64]| {
                let mut d = deriv(k, q);
                for (di, qi) in d.iter_mut().zip(q) {
                    *di += 2.0 * eps * qi;
                }
                d
            }),
        }
    }
}

/// The two canonical action families of one reference trajectory, sharing
/// the cumulative action sums.
pub struct TrajectoryActionFamily {
    sys: Arc<DiscreteForcedSystem>,
    configs: Arc<Vec<Vec<f64>>>,
    /// `cum[k]` is the action of the first `k` reference pairs.
    cum: Arc<Vec<f64>>,
    reference: DiscreteTrajectory,
    bump: f64,
}

impl TrajectoryActionFamily {
    /// Build both families from a stored trajectory of the system. Needs at
    /// least one pair.
    pub fn new(sys: Arc<DiscreteForcedSystem>, reference: DiscreteTrajectory) -> Result<Self> {
        if reference.configs.len() < 2 {
            return Err(Error::contract(
                "a trajectory action family needs at least two configurations",
            ));
        }
        let mut cum = vec![0.0];
        for pair in reference.configs.windows(2) {
            let last = *cum.last().expect("cum starts nonempty");
            cum.push(last + sys.lagrangian(&pair[0], &pair[1]));
        }
        Ok(Self {
            sys,
            configs: Arc::new(reference.configs.clone()),
            cum: Arc::new(cum),
            reference,
            bump: 0.0,
        })
    }

    pub fn reference(&self) -> &DiscreteTrajectory {
        &self.reference
    }

    /// Number of reference pairs (`N` for configurations `q_0 .. q_N`).
    pub fn pairs(&self) -> usize {
        self.reference.configs.len() - 1
    }

    /// Copy with both families perturbed as in [`ActionFamily::perturbed`].
    pub fn perturbed(&self, eps: f64) -> Self {
        Self {
            sys: self.sys.clone(),
            configs: self.configs.clone(),
            cum: self.cum.clone(),
            reference: self.reference.clone(),
            bump: self.bump + eps,
        }
    }

    /// Past-pinned family, defined for `k` in `1 ..= N`.
    pub fn past(&self) -> ActionFamily {
        let sys = self.sys.clone();
        let configs = self.configs.clone();
        let cum = self.cum.clone();
        let sys_d = self.sys.clone();
        let configs_d = self.configs.clone();
        let fam = ActionFamily::new(
            1,
            self.pairs(),
            move |k, q: &[f64]| cum[k - 1] + sys.lagrangian(&configs[k - 1], q),
            move |k, q: &[f64]| sys_d.d2_lagrangian(&configs_d[k - 1], q),
        );
        if self.bump != 0.0 {
            fam.perturbed(self.bump)
        } else {
            fam
        }
    }

    /// Future-pinned family, defined for `k` in `0 ..= N - 1`.
    pub fn future(&self) -> ActionFamily {
        let sys = self.sys.clone();
        let configs = self.configs.clone();
        let cum = self.cum.clone();
        let sys_d = self.sys.clone();
        let configs_d = self.configs.clone();
        let fam = ActionFamily::new(
            0,
            self.pairs() - 1,
            move |k, q: &[f64]| cum[k + 1] - sys.lagrangian(q, &configs[k + 1]),
            move |k, q: &[f64]| {
                sys_d
                    .d1_lagrangian(q, &configs_d[k + 1])
                    .into_iter()
                    .map(|x| -x)
                    .collect()
            },
        );
        if self.bump != 0.0 {
            fam.perturbed(self.bump)
        } else {
            fam
        }
    }
}

fn need_indices(family: &ActionFamily, ks: &[usize], what: &str) -> Result<()> {
    for k in ks {
        if !family.contains(*k) {
            return Err(Error::contract(format!(
                "{what}: index {k} outside the family range {:?}",
                family.indices()
            )));
        }
    }
    Ok(())
}

/// Right momentum map of a family on the pair `(a, b)` at step `k`:
/// `DS^{k+1}(b) + f^+(a, b)`. Equals `p^+(a, b)` on reference pairs of the
/// past-pinned family.
pub fn gamma_plus(
    sys: &DiscreteForcedSystem,
    family: &ActionFamily,
    k: usize,
    a: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    need_indices(family, &[k + 1], "gamma_plus")?;
    Ok(add(&family.deriv(k + 1, b), &sys.force_plus(a, b)))
}

/// Left momentum map of a family on the pair `(a, b)` at step `k`:
/// `DS^k(a) - f^-(a, b)`. Equals `p^-(a, b)` on reference pairs of the
/// future-pinned family.
pub fn gamma_minus(
    sys: &DiscreteForcedSystem,
    family: &ActionFamily,
    k: usize,
    a: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    need_indices(family, &[k], "gamma_minus")?;
    Ok(sub(&family.deriv(k, a), &sys.force_minus(a, b)))
}

/// Residual of one Hamilton-Jacobi difference equation at step `k` on the
/// pair `(a, b)`. `Side::Plus` evaluates the right equation (meaningful for
/// past-pinned families), `Side::Minus` the left one (future-pinned).
/// Vanishes on reference pairs of the matching family up to the tolerance of
/// the Hamiltonian's internal inversion.
pub fn hj_residual(
    sys: &DiscreteForcedSystem,
    family: &ActionFamily,
    side: Side,
    k: usize,
    a: &[f64],
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    need_indices(family, &[k, k + 1], "hj_residual")?;
    let jump = family.value(k + 1, b) - family.value(k, a);
    match side {
        Side::Plus => {
            let g = gamma_plus(sys, family, k, a, b)?;
            let h = sys.discrete_hamiltonian(Side::Plus, a, &g, cfg)?;
            Ok(jump - linalg::dot(&g, b) + h)
        }
        Side::Minus => {
            let g = gamma_minus(sys, family, k, a, b)?;
            let h = sys.discrete_hamiltonian(Side::Minus, b, &g, cfg)?;
            Ok(jump + linalg::dot(&g, a) + h)
        }
    }
}

/// Slot gradients `(D1 G, D2 G)` of the Rayleigh generating function
/// `G(a, b) = S_future^k(a) + S_past^{k+1}(b) - R_d(a, b)`. By construction
/// `D1 G = gamma^-` and `D2 G = gamma^+` whenever the system's force legs
/// are the slot gradients of `R_d`. Errors without a Rayleigh potential.
pub fn rayleigh_generating_partials(
    sys: &DiscreteForcedSystem,
    future: &ActionFamily,
    past: &ActionFamily,
    k: usize,
    a: &[f64],
    b: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    need_indices(future, &[k], "rayleigh_generating_partials")?;
    need_indices(past, &[k + 1], "rayleigh_generating_partials")?;
    let (d1r, d2r) = match (sys.d1_rayleigh(a, b), sys.d2_rayleigh(a, b)) {
        (Some(d1), Some(d2)) => (d1, d2),
        _ => {
            return Err(Error::contract(
                "rayleigh_generating_partials needs a Rayleigh potential",
            ))
        }
    };
    Ok((
        sub(&future.deriv(k, a), &d1r),
        sub(&past.deriv(k + 1, b), &d2r),
    ))
}

/// How [`hj_flow`] advances a pair to the next phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HjFlowVariant {
    /// Read the new momentum directly off the past family's right map.
    ViaGammaPlus,
    /// Recover the old momentum from the future family's left map, then run
    /// the phase-space flow.
    ViaGammaMinus,
    /// Solve the left Hamilton equation implicitly for the next
    /// configuration, seeding the (nested) Newton iteration with the
    /// [`Self::ViaGammaPlus`] answer.
    ImplicitMinus,
}

/// Advance the pair `(a, b) ~ (q_k, q_{k+1})` to `(q_{k+1}, p_{k+1})` using
/// the trajectory families. All variants agree on reference pairs.
pub fn hj_flow(
    sys: &DiscreteForcedSystem,
    tfam: &TrajectoryActionFamily,
    k: usize,
    a: &[f64],
    b: &[f64],
    variant: HjFlowVariant,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match variant {
        HjFlowVariant::ViaGammaPlus => {
            let p = gamma_plus(sys, &tfam.past(), k, a, b)?;
            Ok((b.to_vec(), p))
        }
        HjFlowVariant::ViaGammaMinus => {
            let p = gamma_minus(sys, &tfam.future(), k, a, b)?;
            sys.hamiltonian_flow(a, &p, cfg)
        }
        HjFlowVariant::ImplicitMinus => {
            let p = gamma_minus(sys, &tfam.future(), k, a, b)?;
            // The left equation in residual form: the configuration
            // recovered from the candidate must be q_k itself. Inner solver
            // failures surface as non-finite residuals, which the outer
            // Newton reports as divergence.
            let nan = vec![f64::NAN; sys.dim()];
            let residual = |x: &[f64]| -> Vec<f64> {
                match sys.eval_minus(x, &p, cfg) {
                    Ok(ev) => {
                        match linalg::solve_transpose(&ev.jac, &ev.f_minus, "implicit left step")
                        {
                            Ok(jtf) => sub(&add(a, &ev.d2h_full), &jtf),
                            Err(_) => nan.clone(),
                        }
                    }
                    Err(_) => nan.clone(),
                }
            };
            let next = linalg::newton_solve(residual, b, cfg, "implicit left flow step")?;
            let p_next = sys.momentum_plus(a, &next);
            Ok((next, p_next))
        }
    }
}

/// Step a pair backward: recover `p_k` from the future family's left map and
/// invert the right transform, returning `(q_{k-1}, p_{k-1})`.
pub fn backward_flow(
    sys: &DiscreteForcedSystem,
    future: &ActionFamily,
    k: usize,
    a: &[f64],
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = gamma_minus(sys, future, k, a, b)?;
    let prev = sys.legendre_plus_inverse(a, &p, cfg)?;
    let p_prev = sys.momentum_minus(&prev, a);
    Ok((prev, p_prev))
}

/// One step of a verification walk.
#[derive(Debug, Clone)]
pub struct HjVerifyRow {
    pub k: usize,
    /// Right Hamilton-Jacobi residual of the past family on pair `k`; zero
    /// on the first pair, where the past family has no `S^0`.
    pub hj_plus: f64,
    /// Left Hamilton-Jacobi residual of the future family on pair `k`; zero
    /// on the last pair, where the future family has no `S^N`.
    pub hj_minus: f64,
    /// Largest phase-space equation residual entry on the quadruple at `k`.
    pub hamilton: f64,
    /// Euler-Lagrange residual norm at the interior point `q_k` (zero for
    /// `k = 0`, where no centered residual exists).
    pub del: f64,
}

/// Which verification layer failed; ordered by attribution priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HjCheck {
    HjResidual,
    HamiltonResidual,
    DelAgreement,
}

/// Full verification report of [`hj_verify`].
#[derive(Debug, Clone)]
pub struct HjVerifyReport {
    pub rows: Vec<HjVerifyRow>,
    pub max_hj_residual: f64,
    pub max_hamilton_residual: f64,
    pub max_del_residual: f64,
    /// Layers exceeding the tolerance, ordered family faults first: a
    /// corrupted action family trips the first two layers while the
    /// configuration-only third stays clean.
    pub failures: Vec<HjCheck>,
}

/// Walk every pair of the reference trajectory and evaluate all three
/// verification layers: the two Hamilton-Jacobi residuals, the phase-space
/// equation residuals on the family-induced momenta, and the
/// configuration-space Euler-Lagrange residual.
pub fn hj_verify(
    sys: &DiscreteForcedSystem,
    tfam: &TrajectoryActionFamily,
    tolerance: f64,
    cfg: &SolverConfig,
) -> Result<HjVerifyReport> {
    let past = tfam.past();
    let future = tfam.future();
    let configs = &tfam.reference().configs;
    let n = configs.len() - 1;

    // Family-induced momenta: the left map at each pair, closed by the
    // right map on the final one.
    let mut momenta = Vec::with_capacity(n + 1);
    for k in 0..n {
        momenta.push(gamma_minus(sys, &future, k, &configs[k], &configs[k + 1])?);
    }
    momenta.push(gamma_plus(
        sys,
        &past,
        n - 1,
        &configs[n - 1],
        &configs[n],
    )?);

    let mut rows = Vec::with_capacity(n);
    let mut report = HjVerifyReport {
        rows: Vec::new(),
        max_hj_residual: 0.0,
        max_hamilton_residual: 0.0,
        max_del_residual: 0.0,
        failures: Vec::new(),
    };
    for k in 0..n {
        let (a, b) = (&configs[k], &configs[k + 1]);
        let hj_plus = if k >= 1 {
            hj_residual(sys, &past, Side::Plus, k, a, b, cfg)?.abs()
        } else {
            0.0
        };
        let hj_minus = if k + 1 < n {
            hj_residual(sys, &future, Side::Minus, k, a, b, cfg)?.abs()
        } else {
            0.0
        };

        let mut hamilton = 0.0_f64;
        for side in [Side::Plus, Side::Minus] {
            let (ra, rb) = sys.hamilton_eq_residuals(side, a, &momenta[k], b, &momenta[k + 1], cfg)?;
            hamilton = hamilton.max(linalg::inf_norm(&ra)).max(linalg::inf_norm(&rb));
        }

        let del = if k > 0 {
            linalg::inf_norm(&sys.del_residual(&configs[k - 1], a, b))
        } else {
            0.0
        };

        report.max_hj_residual = report.max_hj_residual.max(hj_plus).max(hj_minus);
        report.max_hamilton_residual = report.max_hamilton_residual.max(hamilton);
        report.max_del_residual = report.max_del_residual.max(del);
        rows.push(HjVerifyRow {
            k,
            hj_plus,
            hj_minus,
            hamilton,
            del,
        });
    }
    report.rows = rows;
    if report.max_hj_residual > tolerance {
        report.failures.push(HjCheck::HjResidual);
    }
    if report.max_hamilton_residual > tolerance {
        report.failures.push(HjCheck::HamiltonResidual);
    }
    if report.max_del_residual > tolerance {
        report.failures.push(HjCheck::DelAgreement);
    }
    Ok(report)
}
