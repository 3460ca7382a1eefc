//! Variational integrators for mechanical systems with external forces.
//!
//! The crate works on two levels. The continuous level describes a mechanical
//! system by a Lagrangian `L(q, v)` together with an external force, which may
//! derive from a Rayleigh potential `R(q, v)` as `f = -dR/dv`. The discrete
//! level replaces `L` by a two-point function `L_d(q0, q1)` and the force by a
//! pair of one-form legs `(f_d^-, f_d^+)`; trajectories then satisfy the
//! discrete Euler-Lagrange equations and are advanced by Newton solves rather
//! than by an ODE stepper.
//!
//! On top of the stepping core the crate provides:
//!
//! * discretizations: the midpoint rule for arbitrary systems, a closed-form
//!   exact discretization for the linearly damped harmonic oscillator, and a
//!   quadrature/shooting oracle that evaluates the exact discrete Lagrangian
//!   and forces numerically for any system ([`discretize`]);
//! * discrete momentum maps, a forced Noether residual, and a check that
//!   classifies symmetry generators by whether the discrete force respects
//!   them ([`symmetry`]);
//! * a discrete Hamilton-Jacobi layer built from action families along a
//!   reference trajectory, with residual evaluation, flow reconstruction and
//!   a self-check report ([`hj`]);
//! * reference integrators (Euler, RK4, and a fine-substep benchmark) for
//!   error comparisons ([`integrate`]);
//! * a registry of ready-made scenarios and CSV/JSON reporting used by the
//!   command line tool ([`scenarios`], [`report`]).
//!
//! Vectors are plain `&[f64]`/`Vec<f64>`; matrices use [`nalgebra`]
//! internally. Sampling loops that sweep many independent states can run on a
//! thread pool when the `parallel` feature (on by default) is enabled; see
//! [`exec`].

pub mod continuous;
pub mod discrete;
pub mod discretize;
pub mod error;
pub mod exec;
pub mod fd;
pub mod hj;
pub mod integrate;
pub mod linalg;
pub mod report;
pub mod scenarios;
pub mod symmetry;

pub use continuous::{ForcedHamiltonianSystem, ForcedLagrangianSystem};
pub use discrete::{DiscreteForcedSystem, DiscreteTrajectory, Side, SolverConfig, TrajectoryInit};
pub use error::{Error, Result};
