//! Momentum maps and symmetry diagnostics for discrete forced systems.
//!
//! A vector field `xi` on configuration space lifts diagonally to pairs,
//! `X(q0, q1) = (xi(q0), xi(q1))`, and pairs with the two discrete momenta to
//! give the momentum map values
//!
//! ```text
//! J^+(q0, q1) = < p^+(q0, q1), xi(q1) >
//! J^-(q0, q1) = < p^-(q0, q1), xi(q0) >
//! ```
//!
//! Expanding the momenta shows the pointwise identity
//!
//! ```text
//! J^+ - J^- = (D1 L_d . xi(q0) + D2 L_d . xi(q1))
//!           + (f^- . xi(q0) + f^+ . xi(q1)),
//! ```
//!
//! so `J` is conserved along trajectories (where momentum matching makes
//! `J^+` of one pair equal `J^-` of the next) exactly when the lifted field
//! kills the discrete Lagrangian *and* the force legs annihilate it. The
//! first summand is [`lifted_lagrangian_rate`], the second [`force_pairing`],
//! and [`noether_residual`] checks the identity itself.
//!
//! Treating the two force legs as a single one-form `F = (f^-, f^+)` on the
//! pair space, the fields that satisfy both `<F, X> = 0` and the contraction
//! `i_X dF = 0` are closed under the Lie bracket: for two such fields, the
//! Cartan formula gives `L_X F = i_X dF + d(i_X F) = 0`, hence
//! `i_[X,Y] F = L_X (i_Y F) - i_Y (L_X F) = 0` and likewise for `dF`. Since
//! the bracket of diagonal lifts is the diagonal lift of the bracket, the
//! closure can be verified downstairs on configuration space;
//! [`subalgebra_check`] samples both membership conditions for a family of
//! generators and for the pairwise brackets of the members that pass.
//!
//! Sign convention: [`lie_bracket`] computes `[xi, eta] = Deta.xi - Dxi.eta`.
//! Both membership conditions are linear in the field, so the bracket sign
//! does not affect any pass/fail outcome here.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discrete::{DiscreteForcedSystem, DiscreteTrajectory, Side};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::fd;
use crate::linalg;

type Field = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A labeled vector field on configuration space.
#[derive(Clone)]
pub struct SymmetryGenerator {
    label: String,
    field: Field,
}

impl std::fmt::Debug for SymmetryGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetryGenerator")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl SymmetryGenerator {
    pub fn new(
        label: impl Into<String>,
        field: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            field: Arc::new(field),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluate the field at a configuration.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        (self.field)(q)
    }
}

/// Momentum map value of one discrete Legendre transform on a pair:
/// the plus side pairs `p^+` with the field at `q1`, the minus side pairs
/// `p^-` with the field at `q0`.
pub fn momentum_map(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    side: Side,
    a: &[f64],
    b: &[f64],
) -> f64 {
    match side {
        Side::Plus => linalg::dot(&sys.momentum_plus(a, b), &gen.apply(b)),
        Side::Minus => linalg::dot(&sys.momentum_minus(a, b), &gen.apply(a)),
    }
}

/// Momentum map along a stored trajectory: `J_k = < p_k, xi(q_k) >`.
pub fn momentum_series(traj: &DiscreteTrajectory, gen: &SymmetryGenerator) -> Vec<f64> {
    traj.configs
        .iter()
        .zip(&traj.momenta)
        .map(|(q, p)| linalg::dot(p, &gen.apply(q)))
        .collect()
}

/// Largest deviation of the momentum map from its initial value along a
/// trajectory.
pub fn momentum_drift(traj: &DiscreteTrajectory, gen: &SymmetryGenerator) -> f64 {
    let series = momentum_series(traj, gen);
    let first = series.first().copied().unwrap_or(0.0);
    series
        .iter()
        .fold(0.0_f64, |m, j| m.max((j - first).abs()))
}

/// Derivative of the discrete Lagrangian along the diagonally lifted field:
/// `D1 L_d . xi(q0) + D2 L_d . xi(q1)`. Zero at every pair means the
/// one-parameter group generated by `xi` leaves `L_d` invariant.
pub fn lifted_lagrangian_rate(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    a: &[f64],
    b: &[f64],
) -> f64 {
    linalg::dot(&sys.d1_lagrangian(a, b), &gen.apply(a))
        + linalg::dot(&sys.d2_lagrangian(a, b), &gen.apply(b))
}

/// Pairing of the force legs with the diagonally lifted field:
/// `f^- . xi(q0) + f^+ . xi(q1)`.
pub fn force_pairing(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    a: &[f64],
    b: &[f64],
) -> f64 {
    linalg::dot(&sys.force_minus(a, b), &gen.apply(a))
        + linalg::dot(&sys.force_plus(a, b), &gen.apply(b))
}

/// For a system carrying a two-point Rayleigh potential, the force pairing
/// rewrites as the derivative of `R_d` along the *hatted* lift
/// `(xi(q0), -xi(q1))`:
///
/// ```text
/// f^- . xi(q0) + f^+ . xi(q1) = D1 R_d . xi(q0) - D2 R_d . xi(q1).
/// ```
///
/// Errors with [`Error::Contract`] when no Rayleigh potential is attached.
pub fn rayleigh_hat_pairing(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    a: &[f64],
    b: &[f64],
) -> Result<f64> {
    let (d1, d2) = match (sys.d1_rayleigh(a, b), sys.d2_rayleigh(a, b)) {
        (Some(d1), Some(d2)) => (d1, d2),
        _ => {
            return Err(Error::contract(
                "rayleigh_hat_pairing needs a Rayleigh potential",
            ))
        }
    };
    Ok(linalg::dot(&d1, &gen.apply(a)) - linalg::dot(&d2, &gen.apply(b)))
}

/// Residual of the pointwise identity
/// `J^+ - J^- = lifted_lagrangian_rate + force_pairing`; zero up to the
/// accuracy of the slot derivatives for *every* system and field.
pub fn noether_residual(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    a: &[f64],
    b: &[f64],
) -> f64 {
    let jump = momentum_map(sys, gen, Side::Plus, a, b)
        - momentum_map(sys, gen, Side::Minus, a, b);
    jump - lifted_lagrangian_rate(sys, gen, a, b) - force_pairing(sys, gen, a, b)
}

/// Lie bracket of two fields, `[xi, eta] = Deta.xi - Dxi.eta`, with the
/// Jacobians taken by central differences at each evaluation point.
pub fn lie_bracket(xi: &SymmetryGenerator, eta: &SymmetryGenerator) -> SymmetryGenerator {
    let label = format!("[{}, {}]", xi.label, eta.label);
    let xi_f = xi.field.clone();
    let eta_f = eta.field.clone();
    SymmetryGenerator::new(label, move |q: &[f64]| {
        let n = q.len();
        let d_eta = fd::jacobian(|x| eta_f(x), q, n);
        let d_xi = fd::jacobian(|x| xi_f(x), q, n);
        let xi_q = xi_f(q);
        let eta_q = eta_f(q);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| d_eta[(i, j)] * xi_q[j] - d_xi[(i, j)] * eta_q[j])
                    .sum()
            })
            .collect()
    })
}

/// Contraction `i_X dF` of the exterior derivative of the force one-form
/// `F = (f^-, f^+)` with the diagonal lift of the field, evaluated at the
/// pair `(a, b)` and returned as a length-`2 dim` covector.
pub fn force_curl_contraction(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    a: &[f64],
    b: &[f64],
) -> Vec<f64> {
    let n = sys.dim();
    let z: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let force = |z: &[f64]| -> Vec<f64> {
        let (qa, qb) = z.split_at(n);
        let mut out = sys.force_minus(qa, qb);
        out.extend(sys.force_plus(qa, qb));
        out
    };
    // jac[(B, A)] = dF_B / dz_A, so (dF)_{AB} = jac[(B, A)] - jac[(A, B)].
    let jac = fd::jacobian(force, &z, 2 * n);
    let mut x = gen.apply(a);
    x.extend(gen.apply(b));
    (0..2 * n)
        .map(|bb| {
            (0..2 * n)
                .map(|aa| x[aa] * (jac[(bb, aa)] - jac[(aa, bb)]))
                .sum()
        })
        .collect()
}

/// Sampled membership diagnostics for one field.
#[derive(Debug, Clone)]
pub struct GeneratorCheck {
    pub label: String,
    /// Largest `|f^- . xi(q0) + f^+ . xi(q1)|` over the sampled pairs.
    pub max_force_pairing: f64,
    /// Largest infinity norm of `i_X dF` over the sampled pairs.
    pub max_contraction: f64,
    /// Pair attaining the larger of the two maxima.
    pub worst_pair: (Vec<f64>, Vec<f64>),
}

impl GeneratorCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_force_pairing <= tolerance && self.max_contraction <= tolerance
    }
}

/// Result of [`subalgebra_check`]: per-generator diagnostics plus the same
/// diagnostics for every pairwise bracket of the generators that passed.
#[derive(Debug, Clone)]
pub struct SubalgebraReport {
    pub tolerance: f64,
    pub generators: Vec<GeneratorCheck>,
    /// One entry per unordered pair of passing generators, in input order.
    pub brackets: Vec<GeneratorCheck>,
}

impl SubalgebraReport {
    /// True when every generator and every checked bracket is inside the
    /// tolerance.
    pub fn closed(&self) -> bool {
        self.generators
            .iter()
            .chain(&self.brackets)
            .all(|g| g.passes(self.tolerance))
    }
}

fn sample_pairs(
    dim: usize,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut draw = || -> Vec<f64> {
            (0..dim).map(|i| rng.gen_range(lo[i]..=hi[i])).collect()
        };
        let a = draw();
        let b = draw();
        pairs.push((a, b));
    }
    pairs
}

fn check_generator(
    sys: &DiscreteForcedSystem,
    gen: &SymmetryGenerator,
    pairs: &[(Vec<f64>, Vec<f64>)],
    mode: ExecMode,
) -> GeneratorCheck {
    let rows = exec::map_items(mode, pairs, |(a, b)| {
        let pairing = force_pairing(sys, gen, a, b).abs();
        let contraction = linalg::inf_norm(&force_curl_contraction(sys, gen, a, b));
        (pairing, contraction)
    });
    let mut check = GeneratorCheck {
        label: gen.label.clone(),
        max_force_pairing: 0.0,
        max_contraction: 0.0,
        worst_pair: pairs.first().cloned().unwrap_or_default(),
    };
    let mut worst = 0.0;
    for ((pairing, contraction), pair) in rows.iter().zip(pairs) {
        check.max_force_pairing = check.max_force_pairing.max(*pairing);
        check.max_contraction = check.max_contraction.max(*contraction);
        if pairing.max(*contraction) >= worst {
            worst = pairing.max(*contraction);
            check.worst_pair = pair.clone();
        }
    }
    check
}

/// Sample both membership conditions (`<F, X> = 0` and `i_X dF = 0`) for each
/// generator on random pairs from the box `[lo, hi]^dim x [lo, hi]^dim`,
/// then re-check every pairwise Lie bracket of the generators that passed.
///
/// The contraction uses finite-difference Jacobians of the force legs, so
/// with explicit or analytically differentiated legs the resolution is about
/// `1e-7`; tolerances below that are not meaningful here.
pub fn subalgebra_check(
    sys: &DiscreteForcedSystem,
    generators: &[SymmetryGenerator],
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    seed: u64,
    tolerance: f64,
    mode: ExecMode,
) -> SubalgebraReport {
    let pairs = sample_pairs(sys.dim(), lo, hi, samples, seed);
    let checks: Vec<GeneratorCheck> = generators
        .iter()
        .map(|g| check_generator(sys, g, &pairs, mode))
        .collect();
    let mut brackets = Vec::new();
    for i in 0..generators.len() {
        if !checks[i].passes(tolerance) {
            continue;
        }
        for j in (i + 1)..generators.len() {
            if !checks[j].passes(tolerance) {
                continue;
            }
            let bracket = lie_bracket(&generators[i], &generators[j]);
            brackets.push(check_generator(sys, &bracket, &pairs, mode));
        }
    }
    SubalgebraReport {
        tolerance,
        generators: checks,
        brackets,
    }
}
