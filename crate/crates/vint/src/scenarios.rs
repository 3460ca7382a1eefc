//! Built-in scenario registry: named mechanical systems with defaults,
//! parameter validation, and everything the command-line tools need to run
//! and cross-check them.
//!
//! Four scenarios ship:
//!
//! * `damped-oscillator`: one linear degree of freedom with viscous drag.
//!   The only scenario with a closed-form solution and an exact
//!   discretization, so it anchors most convergence and correctness checks.
//! * `marsden-west`: a planar particle in the quartic double-bowl potential
//!   `|q|^2 (|q|^2 - 1)^2` with weak isotropic drag. The initial state sits
//!   on the energy level `11/40`, entering near the potential's circular
//!   ridge. Long runs separate integrators by how well they track the slow
//!   energy decay.
//! * `polar-rayleigh`: the same kind of planar mechanics written in polar
//!   coordinates, with drag acting on the radial velocity only. The angular
//!   shift field is a symmetry of both the Lagrangian and the dissipation,
//!   so its momentum map is conserved to solver precision while the radial
//!   motion damps out.
//! * `free-2d`: a free planar particle with the antisymmetric difference
//!   force `f^- = -c (q1 - q0)`, `f^+ = c (q1 - q0)` attached directly to
//!   the discrete system. The legs cancel in the Euler-Lagrange equation,
//!   so trajectories stay straight lines, but the momenta feel the force;
//!   the full Euclidean generator set (two translations and the rotation)
//!   passes both symmetry-membership conditions here, which makes this the
//!   bracket-closure showcase.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuous::ForcedLagrangianSystem;
use crate::discrete::{DiscreteForcedSystem, DiscreteTrajectory, SolverConfig, TrajectoryInit};
use crate::discretize;
use crate::error::{Error, Result};
use crate::integrate::{self, ContinuousTrajectory, RefMethod};
use crate::symmetry::SymmetryGenerator;

/// Integration methods a run can request. `Midpoint` and `Exact` step the
/// discrete system; the rest integrate the continuous equations (`Benchmark`
/// is highly substepped fourth-order, used as ground truth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Midpoint,
    Exact,
    Rk4,
    Euler,
    Benchmark,
}

impl Method {
    pub fn is_discrete(self) -> bool {
        matches!(self, Method::Midpoint | Method::Exact)
    }

    pub fn all() -> [Method; 5] {
        [
            Method::Midpoint,
            Method::Exact,
            Method::Rk4,
            Method::Euler,
            Method::Benchmark,
        ]
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Midpoint => "midpoint",
            Method::Exact => "exact",
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
            Method::Benchmark => "benchmark",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Method::Midpoint),
            "exact" => Ok(Method::Exact),
            "rk4" => Ok(Method::Rk4),
            "euler" => Ok(Method::Euler),
            "benchmark" => Ok(Method::Benchmark),
            other => Err(Error::contract(format!(
                "unknown method '{other}' (expected midpoint, exact, rk4, euler, or benchmark)"
            ))),
        }
    }
}

fn default_seed() -> u64 {
    7
}

fn default_methods() -> Vec<Method> {
    vec![Method::Midpoint]
}

/// Complete description of one run: scenario, numerical knobs, initial
/// state, and requested methods. Serializes to the JSON accepted by the
/// command-line `--config` flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub h: f64,
    pub steps: usize,
    pub q0: Vec<f64>,
    pub v0: Vec<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
}

/// Static facts about a scenario, for listings.
#[derive(Debug, Clone)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub dim: usize,
    pub summary: &'static str,
    /// Adjustable parameters with their defaults.
    pub params: &'static [(&'static str, f64)],
    pub methods: &'static [Method],
    pub has_closed_form: bool,
    pub generators: &'static [&'static str],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    DampedOscillator,
    MarsdenWest,
    PolarRayleigh,
    Free2d,
}

impl Kind {
    fn parse(name: &str) -> Result<Kind> {
        match name {
            "damped-oscillator" => Ok(Kind::DampedOscillator),
            "marsden-west" => Ok(Kind::MarsdenWest),
            "polar-rayleigh" => Ok(Kind::PolarRayleigh),
            "free-2d" => Ok(Kind::Free2d),
            other => Err(Error::contract(format!(
                "unknown scenario '{other}' (known: {})",
                scenario_names().join(", ")
            ))),
        }
    }

    fn info(self) -> ScenarioInfo {
        match self {
            Kind::DampedOscillator => ScenarioInfo {
                name: "damped-oscillator",
                dim: 1,
                summary: "linear oscillator with viscous drag; closed form and exact \
                          discretization available",
                params: &[("m", 1.0), ("k", 1.0), ("r", 0.1)],
                methods: &[
                    Method::Midpoint,
                    Method::Exact,
                    Method::Rk4,
                    Method::Euler,
                    Method::Benchmark,
                ],
                has_closed_form: true,
                generators: &[],
            },
            Kind::MarsdenWest => ScenarioInfo {
                name: "marsden-west",
                dim: 2,
                summary: "planar particle in the quartic double-bowl potential with weak \
                          isotropic drag, started on the energy level 11/40",
                params: &[("damping", 1e-3)],
                methods: &[
                    Method::Midpoint,
                    Method::Rk4,
                    Method::Euler,
                    Method::Benchmark,
                ],
                has_closed_form: false,
                generators: &["rot"],
            },
            Kind::PolarRayleigh => ScenarioInfo {
                name: "polar-rayleigh",
                dim: 2,
                summary: "planar mechanics in polar coordinates with radial-only drag; \
                          the angular momentum map is conserved exactly",
                params: &[("c", 0.1)],
                methods: &[
                    Method::Midpoint,
                    Method::Rk4,
                    Method::Euler,
                    Method::Benchmark,
                ],
                has_closed_form: false,
                generators: &["dtheta"],
            },
            Kind::Free2d => ScenarioInfo {
                name: "free-2d",
                dim: 2,
                summary: "free planar particle with an antisymmetric difference force that \
                          cancels in the flow; every Euclidean generator passes both \
                          symmetry-membership conditions",
                params: &[("c", 0.05)],
                methods: &[
                    Method::Midpoint,
                    Method::Rk4,
                    Method::Euler,
                    Method::Benchmark,
                ],
                has_closed_form: false,
                generators: &["e0", "e1", "rot"],
            },
        }
    }

    fn default_config(self) -> RunConfig {
        let info = self.info();
        let (h, steps, q0, v0) = match self {
            Kind::DampedOscillator => (0.1, 100, vec![1.0], vec![0.0]),
            Kind::MarsdenWest => {
                let y0 = marsden_west_y0();
                (0.1, 200, vec![0.0, y0], vec![0.5, 0.0])
            }
            Kind::PolarRayleigh => (0.1, 200, vec![1.2, 0.0], vec![0.1, 0.4]),
            Kind::Free2d => (0.1, 50, vec![0.0, 0.0], vec![0.3, -0.2]),
        };
        RunConfig {
            scenario: info.name.to_string(),
            h,
            steps,
            q0,
            v0,
            params: info.params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed: default_seed(),
            methods: default_methods(),
        }
    }
}

/// Names of all built-in scenarios.
pub fn scenario_names() -> Vec<&'static str> {
    vec![
        "damped-oscillator",
        "marsden-west",
        "polar-rayleigh",
        "free-2d",
    ]
}

/// Listing entry for one scenario.
pub fn describe(name: &str) -> Result<ScenarioInfo> {
    Ok(Kind::parse(name)?.info())
}

/// Default run configuration of a scenario.
pub fn default_config(name: &str) -> Result<RunConfig> {
    Ok(Kind::parse(name)?.default_config())
}

/// Height of the `marsden-west` starting point: the root of
/// `y^2 (y^2 - 1)^2 = 0.15` with `y > 1`, so that together with the kinetic
/// energy `1/8` the total comes out at `11/40`. The cubic in `u = y^2` is
/// solved by Newton; it has no root below `u = 1` (the local maximum of
/// `u (u - 1)^2` on `[0, 1]` is `4/27 < 0.15`).
fn marsden_west_y0() -> f64 {
    let mut u = 1.4_f64;
    for _ in 0..60 {
        let g = u * (u - 1.0) * (u - 1.0) - 0.15;
        let dg = (u - 1.0) * (3.0 * u - 1.0);
        let next = u - g / dg;
        if (next - u).abs() < 1e-15 {
            u = next;
            break;
        }
        u = next;
    }
    u.sqrt()
}

/// One result of [`ScenarioInstance::run_method`].
#[derive(Debug, Clone)]
pub enum MethodRun {
    Discrete(DiscreteTrajectory),
    Continuous(ContinuousTrajectory),
}

type ClosedForm = Box<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// A validated, buildable scenario run: continuous system with full analytic
/// derivative attachments, symmetry generators, and (when available) the
/// closed-form solution for the configured initial state.
pub struct ScenarioInstance {
    config: RunConfig,
    kind: Kind,
    continuous: Arc<ForcedLagrangianSystem>,
    generators: Vec<SymmetryGenerator>,
    closed_form: Option<ClosedForm>,
}

impl ScenarioInstance {
    /// Validate a configuration and assemble the systems. Rejects unknown
    /// scenarios and parameters, dimension mismatches, and non-positive or
    /// non-finite step sizes, all as [`Error::Contract`].
    pub fn build(config: RunConfig) -> Result<Self> {
        let kind = Kind::parse(&config.scenario)?;
        let info = kind.info();
        if !(config.h.is_finite() && config.h > 0.0) {
            return Err(Error::contract("step size must be positive and finite"));
        }
        if config.steps == 0 {
            return Err(Error::contract("a run needs at least one step"));
        }
        if config.q0.len() != info.dim || config.v0.len() != info.dim {
            return Err(Error::contract(format!(
                "scenario '{}' has {} degrees of freedom, got q0 of length {} and v0 of length {}",
                info.name,
                info.dim,
                config.q0.len(),
                config.v0.len()
            )));
        }
        for key in config.params.keys() {
            if !info.params.iter().any(|(name, _)| name == key) {
                return Err(Error::contract(format!(
                    "scenario '{}' has no parameter '{key}' (available: {})",
                    info.name,
                    info.params
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        }
        for method in &config.methods {
            if !info.methods.contains(method) {
                return Err(Error::contract(format!(
                    "scenario '{}' does not support method '{method}'",
                    info.name
                )));
            }
        }
        let param = |name: &str| -> f64 {
            config.params.get(name).copied().unwrap_or_else(|| {
                info.params
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, v)| *v)
                    .expect("defaults cover every declared parameter")
            })
        };

        let (continuous, generators, closed_form) = match kind {
            Kind::DampedOscillator => {
                let (m, k, r) = (param("m"), param("k"), param("r"));
                if !(m > 0.0 && k > 0.0 && r >= 0.0) {
                    return Err(Error::contract(
                        "damped-oscillator needs m > 0, k > 0, r >= 0",
                    ));
                }
                let sys = ForcedLagrangianSystem::new(1, move |q, v| {
                    0.5 * m * v[0] * v[0] - 0.5 * k * q[0] * q[0]
                })
                .with_gradients(
                    move |q: &[f64], _: &[f64]| vec![-k * q[0]],
                    move |_: &[f64], v: &[f64]| vec![m * v[0]],
                )
                .with_velocity_hessians(
                    move |_: &[f64], _: &[f64]| nalgebra::DMatrix::from_element(1, 1, m),
                    |_: &[f64], _: &[f64]| nalgebra::DMatrix::zeros(1, 1),
                )
                .with_rayleigh(move |_, v| 0.5 * r * v[0] * v[0])
                .with_rayleigh_grad(move |_: &[f64], v: &[f64]| vec![r * v[0]]);
                let sol = discretize::damped_oscillator_solution(
                    m,
                    k,
                    r,
                    config.q0[0],
                    config.v0[0],
                )?;
                let closed: ClosedForm = Box::new(move |t| {
                    let (q, v) = sol(t);
                    (vec![q], vec![v])
                });
                (sys, Vec::new(), Some(closed))
            }
            Kind::MarsdenWest => {
                let kd = param("damping");
                if kd < 0.0 {
                    return Err(Error::contract("marsden-west damping must be nonnegative"));
                }
                let sys = ForcedLagrangianSystem::new(2, |q, v| {
                    let u = q[0] * q[0] + q[1] * q[1];
                    0.5 * (v[0] * v[0] + v[1] * v[1]) - u * (u - 1.0) * (u - 1.0)
                })
                .with_gradients(
                    |q: &[f64], _: &[f64]| {
                        let u = q[0] * q[0] + q[1] * q[1];
                        let dv = (u - 1.0) * (3.0 * u - 1.0);
                        vec![-2.0 * dv * q[0], -2.0 * dv * q[1]]
                    },
                    |_: &[f64], v: &[f64]| v.to_vec(),
                )
                .with_velocity_hessians(
                    |_: &[f64], _: &[f64]| nalgebra::DMatrix::identity(2, 2),
                    |_: &[f64], _: &[f64]| nalgebra::DMatrix::zeros(2, 2),
                )
                .with_rayleigh(move |_, v| 0.5 * kd * (v[0] * v[0] + v[1] * v[1]))
                .with_rayleigh_grad(move |_: &[f64], v: &[f64]| vec![kd * v[0], kd * v[1]]);
                let rot = SymmetryGenerator::new("rot", |q: &[f64]| vec![-q[1], q[0]]);
                (sys, vec![rot], None)
            }
            Kind::PolarRayleigh => {
                let c = param("c");
                if c < 0.0 {
                    return Err(Error::contract("polar-rayleigh drag must be nonnegative"));
                }
                let sys = ForcedLagrangianSystem::new(2, |q, v| {
                    let r2 = q[0] * q[0];
                    let pot = r2 * (r2 - 1.0) * (r2 - 1.0);
                    0.5 * (v[0] * v[0] + r2 * v[1] * v[1]) - pot
                })
                .with_gradients(
                    |q: &[f64], v: &[f64]| {
                        let r = q[0];
                        let r2 = r * r;
                        let dpot = 2.0 * r * (r2 - 1.0) * (3.0 * r2 - 1.0);
                        vec![r * v[1] * v[1] - dpot, 0.0]
                    },
                    |q: &[f64], v: &[f64]| vec![v[0], q[0] * q[0] * v[1]],
                )
                .with_velocity_hessians(
                    |q: &[f64], _: &[f64]| {
                        nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, q[0] * q[0]])
                    },
                    |q: &[f64], v: &[f64]| {
                        nalgebra::DMatrix::from_row_slice(
                            2,
                            2,
                            &[0.0, 0.0, 2.0 * q[0] * v[1], 0.0],
                        )
                    },
                )
                .with_rayleigh(move |_, v| 0.5 * c * v[0] * v[0])
                .with_rayleigh_grad(move |_: &[f64], v: &[f64]| vec![c * v[0], 0.0]);
                let dtheta = SymmetryGenerator::new("dtheta", |_: &[f64]| vec![0.0, 1.0]);
                (sys, vec![dtheta], None)
            }
            Kind::Free2d => {
                let sys = ForcedLagrangianSystem::new(2, |_, v| {
                    0.5 * (v[0] * v[0] + v[1] * v[1])
                })
                .with_gradients(
                    |_: &[f64], _: &[f64]| vec![0.0, 0.0],
                    |_: &[f64], v: &[f64]| v.to_vec(),
                )
                .with_velocity_hessians(
                    |_: &[f64], _: &[f64]| nalgebra::DMatrix::identity(2, 2),
                    |_: &[f64], _: &[f64]| nalgebra::DMatrix::zeros(2, 2),
                );
                let gens = vec![
                    SymmetryGenerator::new("e0", |q: &[f64]| {
                        let mut v = vec![0.0; q.len()];
                        v[0] = 1.0;
                        v
                    }),
                    SymmetryGenerator::new("e1", |q: &[f64]| {
                        let mut v = vec![0.0; q.len()];
                        v[1] = 1.0;
                        v
                    }),
                    SymmetryGenerator::new("rot", |q: &[f64]| vec![-q[1], q[0]]),
                ];
                (sys, gens, None)
            }
        };

        Ok(Self {
            config,
            kind,
            continuous: Arc::new(continuous),
            generators,
            closed_form,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn info(&self) -> ScenarioInfo {
        self.kind.info()
    }

    pub fn continuous(&self) -> &Arc<ForcedLagrangianSystem> {
        &self.continuous
    }

    pub fn generators(&self) -> &[SymmetryGenerator] {
        &self.generators
    }

    /// Closed-form `t -> (q, v)` for the configured initial state, when the
    /// scenario has one.
    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    fn param(&self, name: &str) -> f64 {
        self.config.params.get(name).copied().unwrap_or_else(|| {
            self.kind
                .info()
                .params
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .expect("defaults cover every declared parameter")
        })
    }

    /// Build the discrete system for a discrete method.
    pub fn discrete(&self, method: Method) -> Result<Arc<DiscreteForcedSystem>> {
        let h = self.config.h;
        match method {
            Method::Midpoint => match self.kind {
                Kind::Free2d => {
                    let c = self.param("c");
                    let l_d = move |a: &[f64], b: &[f64]| {
                        (0..2)
                            .map(|i| (b[i] - a[i]) * (b[i] - a[i]))
                            .sum::<f64>()
                            / (2.0 * h)
                    };
                    let sys = DiscreteForcedSystem::new(2, h, l_d)
                        .with_forces(
                            move |a: &[f64], b: &[f64]| {
                                (0..2).map(|i| c * (b[i] - a[i])).collect()
                            },
                            move |a: &[f64], b: &[f64]| {
                                (0..2).map(|i| -c * (b[i] - a[i])).collect()
                            },
                        )
                        .with_lagrangian_partials(
                            move |a: &[f64], b: &[f64]| {
                                (0..2).map(|i| -(b[i] - a[i]) / h).collect()
                            },
                            move |a: &[f64], b: &[f64]| {
                                (0..2).map(|i| (b[i] - a[i]) / h).collect()
                            },
                        );
                    Ok(Arc::new(sys))
                }
                _ => Ok(Arc::new(discretize::midpoint(&self.continuous, h)?)),
            },
            Method::Exact => match self.kind {
                Kind::DampedOscillator => Ok(Arc::new(discretize::exact_damped_oscillator(
                    self.param("m"),
                    self.param("k"),
                    self.param("r"),
                    h,
                )?)),
                _ => Err(Error::contract(format!(
                    "scenario '{}' has no exact discretization",
                    self.config.scenario
                ))),
            },
            other => Err(Error::contract(format!(
                "method '{other}' is not a discrete method"
            ))),
        }
    }

    /// Initial momentum of the configured state under the continuous
    /// Legendre transform.
    pub fn initial_momentum(&self) -> Vec<f64> {
        self.continuous.grad_v(&self.config.q0, &self.config.v0)
    }

    /// Run one method for the configured number of steps.
    pub fn run_method(&self, method: Method, solver: &SolverConfig) -> Result<MethodRun> {
        let c = &self.config;
        match method {
            Method::Midpoint | Method::Exact => {
                let sys = self.discrete(method)?;
                let traj = sys.run_trajectory(
                    TrajectoryInit::Velocity {
                        q0: c.q0.clone(),
                        v0: c.v0.clone(),
                        system: &self.continuous,
                    },
                    c.steps,
                    solver,
                )?;
                Ok(MethodRun::Discrete(traj))
            }
            Method::Rk4 => Ok(MethodRun::Continuous(integrate::integrate(
                &self.continuous,
                &c.q0,
                &c.v0,
                c.h,
                c.steps,
                RefMethod::Rk4,
            )?)),
            Method::Euler => Ok(MethodRun::Continuous(integrate::integrate(
                &self.continuous,
                &c.q0,
                &c.v0,
                c.h,
                c.steps,
                RefMethod::Euler,
            )?)),
            Method::Benchmark => Ok(MethodRun::Continuous(integrate::benchmark(
                &self.continuous,
                &c.q0,
                &c.v0,
                c.h,
                c.steps,
            )?)),
        }
    }

    /// Energy along a discrete trajectory, recovering velocities from the
    /// stored momenta through the continuous Legendre inverse.
    pub fn discrete_energy_series(
        &self,
        traj: &DiscreteTrajectory,
        solver: &SolverConfig,
    ) -> Result<Vec<f64>> {
        traj.configs
            .iter()
            .zip(&traj.momenta)
            .map(|(q, p)| {
                let v = self.continuous.legendre_inverse(q, p, solver)?;
                Ok(self.continuous.energy(q, &v))
            })
            .collect()
    }
}
