//! Builders turning a continuous forced system into a discrete one, plus a
//! slow trajectory-based oracle for what the ideal discretization would be.
//!
//! Two constructions are provided. [`midpoint`] is the general-purpose
//! second-order rule: it evaluates the Lagrangian at the chord midpoint with
//! the chord velocity and splits the force evenly between the two legs. For
//! the linearly damped harmonic oscillator, [`exact_damped_oscillator`]
//! builds the discretization whose trajectories sample the continuous
//! solution with no error at all, which makes it the reference system for
//! convergence and structure tests.
//!
//! [`exact_discrete_numeric`] computes, for any system and any configuration
//! pair, the boundary-value action integral and force-leg integrals by
//! shooting plus quadrature. It is slow and meant as an independent check on
//! closed forms, not for stepping.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuous::ForcedLagrangianSystem;
use crate::discrete::DiscreteForcedSystem;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::fd;
use crate::integrate::{self, ContinuousTrajectory};
use crate::linalg::{self, SolverConfig};

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn chord(a: &[f64], b: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let mid = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let vel = b.iter().zip(a).map(|(y, x)| (y - x) / h).collect();
    (mid, vel)
}

/// Whether the attached Rayleigh potential is a pure velocity function whose
/// negative velocity gradient is also the system's force, probed at a
/// handful of fixed pseudorandom states. Only then does the midpoint rule
/// carry a discrete Rayleigh potential whose slot gradients reproduce the
/// force legs.
fn rayleigh_generates_force(sys: &ForcedLagrangianSystem) -> bool {
    if !sys.has_rayleigh() {
        return false;
    }
    let n = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    for _ in 0..4 {
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.2..1.2)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.2..1.2)).collect();
        let gq = fd::grad1(|a, b| sys.rayleigh(a, b).unwrap(), &q, &v);
        if linalg::inf_norm(&gq) > 1e-9 {
            return false;
        }
        let gv = sys.rayleigh_grad(&q, &v).unwrap();
        let f = sys.force(&q, &v);
        for i in 0..n {
            if (f[i] + gv[i]).abs() > 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Midpoint discretization with step `h`:
///
/// ```text
/// L_d(a, b) = h L((a + b)/2, (b - a)/h)
/// f^-(a, b) = f^+(a, b) = (h/2) f_L((a + b)/2, (b - a)/h)
/// ```
///
/// Slot gradients of `L_d` are assembled from the continuous gradients, so
/// their accuracy follows whatever the continuous system provides. When the
/// continuous force comes from a velocity-only Rayleigh potential `R`, the
/// scaled potential
///
/// ```text
/// R_d(a, b) = (h^2/2) R((a + b)/2, (b - a)/h)
/// ```
///
/// is attached as well; its slot gradients are `-+(h/2) dR/dv`, which are
/// exactly the force legs above, so the discrete system is Rayleigh with
/// legs and potential in agreement. A position-dependent `R` would break
/// that agreement and is left as plain explicit forces.
pub fn midpoint(sys: &Arc<ForcedLagrangianSystem>, h: f64) -> Result<DiscreteForcedSystem> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::contract("midpoint rule needs a positive finite step"));
    }
    let n = sys.dim();

    let s = sys.clone();
    let l_d = move |a: &[f64], b: &[f64]| {
        let (mid, vel) = chord(a, b, h);
        h * s.lagrangian(&mid, &vel)
    };
    let s1 = sys.clone();
    let d1 = move |a: &[f64], b: &[f64]| {
        let (mid, vel) = chord(a, b, h);
        let gq = s1.grad_q(&mid, &vel);
        let gv = s1.grad_v(&mid, &vel);
        (0..gq.len()).map(|i| 0.5 * h * gq[i] - gv[i]).collect::<Vec<_>>()
    };
    let s2 = sys.clone();
    let d2 = move |a: &[f64], b: &[f64]| {
        let (mid, vel) = chord(a, b, h);
        let gq = s2.grad_q(&mid, &vel);
        let gv = s2.grad_v(&mid, &vel);
        (0..gq.len()).map(|i| 0.5 * h * gq[i] + gv[i]).collect::<Vec<_>>()
    };

    let mut out = DiscreteForcedSystem::new(n, h, l_d).with_lagrangian_partials(d1, d2);

    if sys.has_force() {
        let leg = |s: Arc<ForcedLagrangianSystem>| {
            move |a: &[f64], b: &[f64]| {
                let (mid, vel) = chord(a, b, h);
                s.force(&mid, &vel)
                    .into_iter()
                    .map(|x| 0.5 * h * x)
                    .collect::<Vec<_>>()
            }
        };
        out = out.with_forces(leg(sys.clone()), leg(sys.clone()));
    }

    if rayleigh_generates_force(sys) {
        let sr = sys.clone();
        out = out.with_rayleigh(move |a: &[f64], b: &[f64]| {
            let (mid, vel) = chord(a, b, h);
            0.5 * h * h * sr.rayleigh(&mid, &vel).unwrap()
        });
        let part = |s: Arc<ForcedLagrangianSystem>, sign: f64| {
            move |a: &[f64], b: &[f64]| {
                let (mid, vel) = chord(a, b, h);
                s.rayleigh_grad(&mid, &vel)
                    .unwrap()
                    .into_iter()
                    .map(|x| sign * 0.5 * h * x)
                    .collect::<Vec<_>>()
            }
        };
        out = out.with_rayleigh_partials(part(sys.clone(), -1.0), part(sys.clone(), 1.0));
    }

    let zeros = vec![0.0; n];
    let mass = sys.hess_vv(&zeros, &zeros);
    if mass.iter().all(|x| x.is_finite()) {
        out = out.with_mass_matrix(mass);
    }
    Ok(out)
}

/// Exact discretization of `L = (m/2) v^2 - (k/2) q^2` with drag coefficient
/// `r` (force `-r v`), underdamped regime, step `h`: stepping this system
/// reproduces the continuous solution at the grid points to rounding.
///
/// With `al = r/(2m)`, `om = sqrt(4km - r^2)/(2m)` and `C = m om / (2 sin(om h))`,
///
/// ```text
/// L_d(q0, q1) = C [ (q0^2 + q1^2) cos(om h) - 2 q0 q1 cosh(al h) ]
/// f^+(q0, q1) = (r/2) (be q0 - q1)        be = (om/al) sinh(al h) / sin(om h)
/// f^-(q0, q1) = (r/2) (q0 - be q1)
/// R_d(q0, q1) = (r/4) (q0^2 + q1^2) - (r/2) be q0 q1
/// ```
///
/// and the force legs are the slot gradients of `R_d`. For `r = 0` the
/// damping block is dropped entirely and the plain exact oscillator
/// discretization remains.
///
/// Steps with `sin(om h)` near zero (half-period resonance) are rejected, as
/// is any parameter set that is not strictly underdamped.
pub fn exact_damped_oscillator(
    m: f64,
    k: f64,
    r: f64,
    h: f64,
) -> Result<DiscreteForcedSystem> {
    if !(m > 0.0 && m.is_finite()) || !(k > 0.0 && k.is_finite()) {
        return Err(Error::contract("oscillator needs positive mass and stiffness"));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::contract("drag coefficient must be nonnegative"));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::contract("step size must be positive and finite"));
    }
    let disc = 4.0 * k * m - r * r;
    if disc <= 0.0 {
        return Err(Error::contract(
            "exact discretization covers only the underdamped regime (r^2 < 4 k m)",
        ));
    }
    let al = r / (2.0 * m);
    let om = disc.sqrt() / (2.0 * m);
    let sin_oh = (om * h).sin();
    if sin_oh.abs() < 1e-12 {
        return Err(Error::contract(
            "step size resonates with the oscillator half-period",
        ));
    }
    let cos_oh = (om * h).cos();
    let cosh_ah = (al * h).cosh();
    let c = m * om / (2.0 * sin_oh);

    let l_d = move |a: &[f64], b: &[f64]| {
        c * ((a[0] * a[0] + b[0] * b[0]) * cos_oh - 2.0 * a[0] * b[0] * cosh_ah)
    };
    let d1 = move |a: &[f64], b: &[f64]| vec![2.0 * c * (a[0] * cos_oh - b[0] * cosh_ah)];
    let d2 = move |a: &[f64], b: &[f64]| vec![2.0 * c * (b[0] * cos_oh - a[0] * cosh_ah)];

    let mut out = DiscreteForcedSystem::new(1, h, l_d)
        .with_lagrangian_partials(d1, d2)
        .with_mass_matrix(DMatrix::from_element(1, 1, m));

    if r >= 1e-12 {
        let be = (om / al) * (al * h).sinh() / sin_oh;
        out = out
            .with_forces(
                move |a: &[f64], b: &[f64]| vec![0.5 * r * (be * a[0] - b[0])],
                move |a: &[f64], b: &[f64]| vec![0.5 * r * (a[0] - be * b[0])],
            )
            .with_rayleigh(move |a: &[f64], b: &[f64]| {
                0.25 * r * (a[0] * a[0] + b[0] * b[0]) - 0.5 * r * be * a[0] * b[0]
            })
            .with_rayleigh_partials(
                move |a: &[f64], b: &[f64]| vec![0.5 * r * (a[0] - be * b[0])],
                move |a: &[f64], b: &[f64]| vec![0.5 * r * (b[0] - be * a[0])],
            );
    }
    Ok(out)
}

/// Closed-form solution `t -> (q, qdot)` of the underdamped oscillator
/// `m qdd + r qd + k q = 0` from `(q0, v0)`.
pub fn damped_oscillator_solution(
    m: f64,
    k: f64,
    r: f64,
    q0: f64,
    v0: f64,
) -> Result<impl Fn(f64) -> (f64, f64)> {
    if !(m > 0.0) || !(k > 0.0) || !(r >= 0.0) {
        return Err(Error::contract("oscillator needs m > 0, k > 0, r >= 0"));
    }
    let disc = 4.0 * k * m - r * r;
    if disc <= 0.0 {
        return Err(Error::contract(
            "closed-form solution covers only the underdamped regime",
        ));
    }
    let al = r / (2.0 * m);
    let om = disc.sqrt() / (2.0 * m);
    let c1 = q0;
    let c2 = (v0 + al * q0) / om;
    Ok(move |t: f64| {
        let e = (-al * t).exp();
        let (s, co) = (om * t).sin_cos();
        let q = e * (c1 * co + c2 * s);
        let qd = e * ((om * c2 - al * c1) * co - (om * c1 + al * c2) * s);
        (q, qd)
    })
}

const ORACLE_SUBSTEPS: usize = 1024;
const ORACLE_SHOOT_TOL: f64 = 1e-13;
const ORACLE_QUAD_TOL: f64 = 1e-10;

/// Boundary-value quantities of one configuration pair, computed by shooting
/// and quadrature: see [`exact_discrete_numeric`].
#[derive(Debug, Clone)]
pub struct ExactDiscreteSample {
    /// Action integral of the connecting trajectory.
    pub l_d: f64,
    /// Force integral weighted by the endpoint sensitivity `dq(t)/dq1`.
    pub f_plus: Vec<f64>,
    /// Force integral weighted by the endpoint sensitivity `dq(t)/dq0`.
    pub f_minus: Vec<f64>,
}

/// Composite Simpson quadrature over uniformly gridded values, refining the
/// panel count from 64 up to the full grid until two successive refinements
/// agree.
fn simpson_refine(values: &[f64], span: f64) -> f64 {
    let n = values.len() - 1;
    let eval = |panels: usize| -> f64 {
        let stride = n / panels;
        let dt = span / panels as f64;
        let mut s = values[0] + values[n];
        for j in 1..panels {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            s += w * values[j * stride];
        }
        s * dt / 3.0
    };
    let mut panels = 64.min(n);
    let mut prev = eval(panels);
    while panels < n {
        panels *= 2;
        let next = eval(panels);
        if (next - prev).abs() < ORACLE_QUAD_TOL {
            return next;
        }
        prev = next;
    }
    prev
}

fn solve_boundary_trajectory(
    sys: &ForcedLagrangianSystem,
    q_start: &[f64],
    q_end: &[f64],
    h: f64,
    v_guess: &[f64],
) -> Result<(Vec<f64>, ContinuousTrajectory)> {
    let n = sys.dim();
    let cfg = SolverConfig {
        tolerance: ORACLE_SHOOT_TOL,
        max_iterations: 60,
        ..SolverConfig::default()
    };
    let v0 = linalg::newton_solve(
        |v: &[f64]| match integrate::integrate_dense(sys, q_start, v, h, ORACLE_SUBSTEPS) {
            Ok(t) => sub(t.positions.last().unwrap(), q_end),
            Err(_) => vec![f64::NAN; n],
        },
        v_guess,
        &cfg,
        "boundary-value shooting",
    )?;
    let traj = integrate::integrate_dense(sys, q_start, &v0, h, ORACLE_SUBSTEPS)?;
    Ok((v0, traj))
}

/// Compute the ideal discretization of `sys` at one pair `(q0, q1)` by brute
/// force: solve the two-point boundary value problem of the forced equations
/// of motion over `[0, h]`, integrate the Lagrangian along it for `l_d`, and
/// integrate the force against the trajectory's sensitivity to each boundary
/// configuration for the two legs. Sensitivities come from re-solved
/// boundary problems at symmetrically perturbed endpoints.
///
/// Accuracy is dominated by the sensitivity differencing and lands around
/// `1e-9` for well-scaled problems, making this a sound referee for
/// closed-form discretizations at tolerances of `1e-8` and looser.
pub fn exact_discrete_numeric(
    sys: &ForcedLagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
) -> Result<ExactDiscreteSample> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::contract("oracle needs a positive finite step"));
    }
    let n = sys.dim();
    let chord_guess: Vec<f64> = (0..n).map(|i| (q1[i] - q0[i]) / h).collect();
    let (v0, base) = solve_boundary_trajectory(sys, q0, q1, h, &chord_guess)?;

    let l_values: Vec<f64> = base
        .positions
        .iter()
        .zip(&base.velocities)
        .map(|(q, v)| sys.lagrangian(q, v))
        .collect();
    let l_d = simpson_refine(&l_values, h);

    let forces: Vec<Vec<f64>> = base
        .positions
        .iter()
        .zip(&base.velocities)
        .map(|(q, v)| sys.force(q, v))
        .collect();

    let leg = |perturb_start: bool| -> Result<Vec<f64>> {
        let anchor = if perturb_start { q0 } else { q1 };
        let mut out = vec![0.0; n];
        for j in 0..n {
            let eps = 1e-4 * (1.0 + anchor[j].abs());
            let mut hi = anchor.to_vec();
            let mut lo = anchor.to_vec();
            hi[j] += eps;
            lo[j] -= eps;
            let (tp, tm) = if perturb_start {
                (
                    solve_boundary_trajectory(sys, &hi, q1, h, &v0)?.1,
                    solve_boundary_trajectory(sys, &lo, q1, h, &v0)?.1,
                )
            } else {
                (
                    solve_boundary_trajectory(sys, q0, &hi, h, &v0)?.1,
                    solve_boundary_trajectory(sys, q0, &lo, h, &v0)?.1,
                )
            };
            let integrand: Vec<f64> = (0..base.positions.len())
                .map(|t| {
                    (0..n)
                        .map(|i| {
                            let sens = (tp.positions[t][i] - tm.positions[t][i]) / (2.0 * eps);
                            forces[t][i] * sens
                        })
                        .sum()
                })
                .collect();
            out[j] = simpson_refine(&integrand, h);
        }
        Ok(out)
    };

    let f_minus = leg(true)?;
    let f_plus = leg(false)?;
    Ok(ExactDiscreteSample {
        l_d,
        f_plus,
        f_minus,
    })
}

/// One sampled pair of [`rayleigh_conjecture_probe`].
#[derive(Debug, Clone)]
pub struct ConjectureProbeRow {
    pub q0: Vec<f64>,
    pub q1: Vec<f64>,
    /// Largest entry of `D1 f^+ + D2 f^-` for the oracle legs, NaN on failure.
    pub residual: f64,
    /// `"ok"` or the failure message.
    pub status: String,
}

/// Result of [`rayleigh_conjecture_probe`].
#[derive(Debug, Clone)]
pub struct ConjectureProbeReport {
    pub rows: Vec<ConjectureProbeRow>,
    /// Largest residual over the successful rows.
    pub max_residual: f64,
    /// Number of rows whose oracle solve failed.
    pub failures: usize,
}

/// Measure, at sampled configuration pairs, how far the ideal force legs of
/// [`exact_discrete_numeric`] are from being slot gradients of a single
/// two-point potential: the reported residual per pair is the largest entry
/// of `D1 f^+ + D2 f^-`, computed by differencing the oracle at perturbed
/// pairs. A residual at rounding scale is evidence (not proof) that the
/// ideal discretization of the system is Rayleigh; failures of individual
/// rows are recorded rather than aborting the sweep.
///
/// This is expensive: each row re-solves the boundary problem dozens of
/// times. Keep `samples` small.
pub fn rayleigh_conjecture_probe(
    sys: &ForcedLagrangianSystem,
    h: f64,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    seed: u64,
    mode: ExecMode,
) -> ConjectureProbeReport {
    let n = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut draw = || -> Vec<f64> {
            (0..n).map(|i| rng.gen_range(lo[i]..=hi[i])).collect()
        };
        let a = draw();
        let b = draw();
        pairs.push((a, b));
    }

    let rows = exec::map_items(mode, &pairs, |(q0, q1)| {
        let compute = || -> Result<f64> {
            let mut total: DMatrix<f64> = DMatrix::zeros(n, n);
            for j in 0..n {
                let eps = 1e-2 * (1.0 + q0[j].abs());
                let mut hi_q = q0.clone();
                let mut lo_q = q0.clone();
                hi_q[j] += eps;
                lo_q[j] -= eps;
                let fp = exact_discrete_numeric(sys, &hi_q, q1, h)?.f_plus;
                let fm = exact_discrete_numeric(sys, &lo_q, q1, h)?.f_plus;
                for i in 0..n {
                    total[(i, j)] += (fp[i] - fm[i]) / (2.0 * eps);
                }
            }
            for j in 0..n {
                let eps = 1e-2 * (1.0 + q1[j].abs());
                let mut hi_q = q1.clone();
                let mut lo_q = q1.clone();
                hi_q[j] += eps;
                lo_q[j] -= eps;
                let fp = exact_discrete_numeric(sys, q0, &hi_q, h)?.f_minus;
                let fm = exact_discrete_numeric(sys, q0, &lo_q, h)?.f_minus;
                for i in 0..n {
                    total[(i, j)] += (fp[i] - fm[i]) / (2.0 * eps);
                }
            }
            Ok(total.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
        };
        match compute() {
            Ok(residual) => ConjectureProbeRow {
                q0: q0.clone(),
                q1: q1.clone(),
                residual,
                status: "ok".to_string(),
            },
            Err(e) => ConjectureProbeRow {
                q0: q0.clone(),
                q1: q1.clone(),
                residual: f64::NAN,
                status: e.to_string(),
            },
        }
    });

    let mut max_residual = 0.0_f64;
    let mut failures = 0;
    for row in &rows {
        if row.residual.is_finite() {
            max_residual = max_residual.max(row.residual);
        } else {
            failures += 1;
        }
    }
    ConjectureProbeReport {
        rows,
        max_residual,
        failures,
    }
}
