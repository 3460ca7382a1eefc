//! Reference ODE integrators for error comparisons.
//!
//! These advance the forced Euler-Lagrange equations in first-order form
//! `(q, v)' = (v, a(q, v))` with `a` from
//! [`ForcedLagrangianSystem::forced_el_rhs`]. They exist to measure the
//! variational steppers against something familiar: explicit Euler as the
//! crude baseline, classical RK4 as the standard fourth-order method, and a
//! "benchmark" mode that runs RK4 with a fine substep per output interval and
//! serves as ground truth where no closed-form solution is available.

use crate::continuous::ForcedLagrangianSystem;
use crate::error::{Error, Result};

/// Substeps per output interval in benchmark mode. At typical scenario step
/// sizes this puts the benchmark's global error many orders below the methods
/// under study.
pub const BENCHMARK_SUBSTEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMethod {
    Euler,
    Rk4,
}

/// Continuous-side trajectory sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct ContinuousTrajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl ContinuousTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Energy `E(q_k, v_k)` at every stored sample.
    pub fn energy_series(&self, sys: &ForcedLagrangianSystem) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.velocities)
            .map(|(q, v)| sys.energy(q, v))
            .collect()
    }
}

fn rhs(sys: &ForcedLagrangianSystem, q: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = sys.forced_el_rhs(q, v)?;
    Ok((v.to_vec(), a))
}

fn euler_step(sys: &ForcedLagrangianSystem, q: &mut [f64], v: &mut [f64], h: f64) -> Result<()> {
    let (dq, dv) = rhs(sys, q, v)?;
    for i in 0..q.len() {
        q[i] += h * dq[i];
        v[i] += h * dv[i];
    }
    Ok(())
}

fn rk4_step(sys: &ForcedLagrangianSystem, q: &mut [f64], v: &mut [f64], h: f64) -> Result<()> {
    let n = q.len();
    let shift = |q0: &[f64], d: &[f64], s: f64| -> Vec<f64> {
        (0..n).map(|i| q0[i] + s * d[i]).collect()
    };
    let (k1q, k1v) = rhs(sys, q, v)?;
    let (k2q, k2v) = rhs(
        sys,
        &shift(q, &k1q, 0.5 * h),
        &shift(v, &k1v, 0.5 * h),
    )?;
    let (k3q, k3v) = rhs(
        sys,
        &shift(q, &k2q, 0.5 * h),
        &shift(v, &k2v, 0.5 * h),
    )?;
    let (k4q, k4v) = rhs(sys, &shift(q, &k3q, h), &shift(v, &k3v, h))?;
    for i in 0..n {
        q[i] += h / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
        v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
    Ok(())
}

fn run(
    sys: &ForcedLagrangianSystem,
    q0: &[f64],
    v0: &[f64],
    h: f64,
    steps: usize,
    substeps: usize,
    method: RefMethod,
) -> Result<ContinuousTrajectory> {
    let mut q = q0.to_vec();
    let mut v = v0.to_vec();
    let mut out = ContinuousTrajectory {
        h,
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
    };
    out.times.push(0.0);
    out.positions.push(q.clone());
    out.velocities.push(v.clone());
    // Past this magnitude a failing force evaluation means the trajectory
    // blew up, not that the model is broken: polynomial terms overflow to
    // infinity long before the state itself stops being finite.
    const BLOWUP_NORM: f64 = 1e10;
    let dt = h / substeps as f64;
    for k in 0..steps {
        for _ in 0..substeps {
            let res = match method {
                RefMethod::Euler => euler_step(sys, &mut q, &mut v, dt),
                RefMethod::Rk4 => rk4_step(sys, &mut q, &mut v, dt),
            };
            if let Err(e) = res {
                let huge = q
                    .iter()
                    .chain(v.iter())
                    .any(|x| !x.is_finite() || x.abs() > BLOWUP_NORM);
                return Err(if huge { Error::Divergence { step: k + 1 } } else { e });
            }
        }
        if !q.iter().chain(v.iter()).all(|x| x.is_finite()) {
            return Err(Error::Divergence { step: k + 1 });
        }
        out.times.push((k + 1) as f64 * h);
        out.positions.push(q.clone());
        out.velocities.push(v.clone());
    }
    Ok(out)
}

/// Integrate with the requested method at step `h` for `steps` steps.
pub fn integrate(
    sys: &ForcedLagrangianSystem,
    q0: &[f64],
    v0: &[f64],
    h: f64,
    steps: usize,
    method: RefMethod,
) -> Result<ContinuousTrajectory> {
    run(sys, q0, v0, h, steps, 1, method)
}

/// Ground-truth trajectory: RK4 with [`BENCHMARK_SUBSTEPS`] substeps per
/// stored interval.
pub fn benchmark(
    sys: &ForcedLagrangianSystem,
    q0: &[f64],
    v0: &[f64],
    h: f64,
    steps: usize,
) -> Result<ContinuousTrajectory> {
    run(sys, q0, v0, h, steps, BENCHMARK_SUBSTEPS, RefMethod::Rk4)
}

/// RK4 trajectory stored at every substep, for quadrature over a single
/// interval `[0, t_end]`.
pub fn integrate_dense(
    sys: &ForcedLagrangianSystem,
    q0: &[f64],
    v0: &[f64],
    t_end: f64,
    substeps: usize,
) -> Result<ContinuousTrajectory> {
    run(sys, q0, v0, t_end / substeps as f64, substeps, 1, RefMethod::Rk4)
}
