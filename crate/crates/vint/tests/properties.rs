//! Randomized structural invariants of the discrete mechanics layer:
//! momentum matching, flow conjugacy, gauge invariance, Rayleigh
//! identities, and closed-form agreement, each exercised over sampled
//! parameters and states rather than a single fixture.

use std::sync::Arc;

use proptest::prelude::*;
use vint::discrete::{gauge_transform, GaugeFunction};
use vint::discretize;
use vint::exec::ExecMode;
use vint::hj::{self, TrajectoryActionFamily};
use vint::linalg::inf_norm;
use vint::{
    DiscreteForcedSystem, ForcedLagrangianSystem, SolverConfig, TrajectoryInit,
};

/// Midpoint discretization of a linear oscillator with viscous drag, with
/// every derivative supplied analytically so Newton residuals reach solver
/// tolerance.
fn midpoint_osc(m: f64, k: f64, r: f64, h: f64) -> Arc<DiscreteForcedSystem> {
    let sys = continuous_osc(m, k, r);
    Arc::new(discretize::midpoint(&Arc::new(sys), h).unwrap())
}

fn continuous_osc(m: f64, k: f64, r: f64) -> ForcedLagrangianSystem {
    let base = ForcedLagrangianSystem::new(1, move |q, v| {
        0.5 * m * v[0] * v[0] - 0.5 * k * q[0] * q[0]
    })
    .with_gradients(
        move |q: &[f64], _: &[f64]| vec![-k * q[0]],
        move |_: &[f64], v: &[f64]| vec![m * v[0]],
    )
    .with_velocity_hessians(
        move |_: &[f64], _: &[f64]| nalgebra::DMatrix::from_element(1, 1, m),
        |_: &[f64], _: &[f64]| nalgebra::DMatrix::zeros(1, 1),
    );
    if r > 0.0 {
        base.with_rayleigh(move |_, v| 0.5 * r * v[0] * v[0])
            .with_rayleigh_grad(move |_: &[f64], v: &[f64]| vec![r * v[0]])
    } else {
        base
    }
}

fn osc_params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.5..2.0f64, 0.5..2.0f64, 0.05..0.8f64, 0.05..0.2f64)
}

fn state1() -> impl Strategy<Value = (f64, f64)> {
    (-1.5..1.5f64, -1.5..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// A configuration satisfies the three-point equation of motion exactly
    /// when the outgoing momentum of the first pair equals the incoming
    /// momentum of the second.
    #[test]
    fn del_roots_match_momenta((m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = midpoint_osc(m, k, r, h);
        let cfg = SolverConfig::default();
        let q0 = vec![a];
        let q1 = vec![b];
        let q2 = sys.del_step(&q0, &q1, &cfg).unwrap();
        let p_out = sys.momentum_plus(&q0, &q1);
        let p_in = sys.momentum_minus(&q1, &q2);
        prop_assert!((p_out[0] - p_in[0]).abs() < 1e-9);
    }

    /// Both one-sided momentum maps invert back to the configuration they
    /// came from.
    #[test]
    fn legendre_inverses_round_trip((m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = midpoint_osc(m, k, r, h);
        let cfg = SolverConfig::default();
        let q0 = vec![a];
        let q1 = vec![b];
        let p_minus = sys.momentum_minus(&q0, &q1);
        let back = sys.legendre_minus_inverse(&q0, &p_minus, &cfg).unwrap();
        prop_assert!((back[0] - q1[0]).abs() < 1e-9);
        let p_plus = sys.momentum_plus(&q0, &q1);
        let front = sys.legendre_plus_inverse(&q1, &p_plus, &cfg).unwrap();
        prop_assert!((front[0] - q0[0]).abs() < 1e-9);
    }

    /// Stepping in phase space and stepping on configuration pairs are the
    /// same map seen through the momentum maps.
    #[test]
    fn flows_are_conjugate((m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = midpoint_osc(m, k, r, h);
        let cfg = SolverConfig::default();
        let q0 = vec![a];
        let q1 = vec![b];
        let p1 = sys.momentum_plus(&q0, &q1);
        let (q2_h, p2) = sys.hamiltonian_flow(&q1, &p1, &cfg).unwrap();
        let (_, q2_l) = sys.lagrangian_flow(&q0, &q1, &cfg).unwrap();
        prop_assert!((q2_h[0] - q2_l[0]).abs() < 1e-9);
        prop_assert!((p2[0] - sys.momentum_plus(&q1, &q2_h)[0]).abs() < 1e-12);
    }

    /// The residual written through the drag-modified two-point functions
    /// agrees with the plain force-legs form to rounding.
    #[test]
    fn modified_residual_equals_plain((m, k, r, h) in osc_params(),
                                      (a, b) in state1(), c in -1.5..1.5f64) {
        let sys = midpoint_osc(m, k, r, h);
        let plain = sys.del_residual(&[a], &[b], &[c]);
        let modified = sys.del_residual_modified(&[a], &[b], &[c]).unwrap();
        prop_assert!((plain[0] - modified[0]).abs() < 1e-12);
    }

    /// Force legs produced by a drag potential are slot gradients of one
    /// two-point function, so the mixed-derivative residual sits at
    /// rounding scale.
    #[test]
    fn rayleigh_condition_holds_for_drag_legs((m, k, r, h) in osc_params(), seed in 0..u64::MAX) {
        let sys = midpoint_osc(m, k, r, h);
        let report = sys.check_rayleigh_condition(&[-2.0], &[2.0], 8, seed, ExecMode::Sequential);
        prop_assert!(report.max_residual < 1e-8,
                     "residual {} at {:?}", report.max_residual, report.worst_pair);
    }

    /// Adding slot offsets to the two-point Lagrangian and the matching
    /// shift to the drag potential leaves the equation of motion's root
    /// unchanged.
    #[test]
    fn gauge_shift_preserves_del_roots((m, k, r, h) in osc_params(),
                                       (a, b) in state1(),
                                       (c1, c2) in (-0.5..0.5f64, -0.5..0.5f64)) {
        let sys = midpoint_osc(m, k, r, h);
        let psi = GaugeFunction::new(move |q: &[f64]| c1 * q[0] * q[0],
                                     move |q: &[f64]| vec![2.0 * c1 * q[0]]);
        let phi0 = GaugeFunction::new(move |q: &[f64]| c2 * q[0].sin(),
                                      move |q: &[f64]| vec![c2 * q[0].cos()]);
        let phi1 = GaugeFunction::new(move |q: &[f64]| -0.3 * c2 * q[0],
                                      move |_: &[f64]| vec![-0.3 * c2]);
        let shifted = gauge_transform(&sys, psi, phi0, phi1).unwrap();
        let cfg = SolverConfig::default();
        let root = sys.del_step(&[a], &[b], &cfg).unwrap();
        let root_shifted = shifted.del_step(&[a], &[b], &cfg).unwrap();
        prop_assert!((root[0] - root_shifted[0]).abs() < 1e-10);
    }

    /// With the drag coefficient at zero the forced system is the plain
    /// variational one: identical roots and momenta.
    #[test]
    fn zero_drag_reduces_to_variational((m, k, _r, h) in osc_params(), (a, b) in state1()) {
        let forced = midpoint_osc(m, k, 0.0, h);
        let plain = Arc::new(
            discretize::midpoint(&Arc::new(continuous_osc(m, k, 0.0)), h).unwrap(),
        );
        let cfg = SolverConfig::default();
        let rf = forced.del_step(&[a], &[b], &cfg).unwrap();
        let rp = plain.del_step(&[a], &[b], &cfg).unwrap();
        prop_assert!((rf[0] - rp[0]).abs() < 1e-12);
        prop_assert!((forced.momentum_plus(&[a], &[b])[0]
                      - plain.momentum_plus(&[a], &[b])[0]).abs() < 1e-12);
    }

    /// A trajectory over N steps stores N+1 configurations and momenta,
    /// repeats bit-for-bit, and its stored momenta match both one-sided
    /// maps at every interior node.
    #[test]
    fn trajectories_are_sized_matched_and_deterministic(
        (m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = midpoint_osc(m, k, r, h);
        let cfg = SolverConfig::default();
        let steps = 12;
        let init = || TrajectoryInit::Pair { q0: vec![a], q1: vec![a + 0.01 * b] };
        let t1 = sys.run_trajectory(init(), steps, &cfg).unwrap();
        let t2 = sys.run_trajectory(init(), steps, &cfg).unwrap();
        prop_assert_eq!(t1.configs.len(), steps + 1);
        prop_assert_eq!(t1.momenta.len(), steps + 1);
        prop_assert_eq!(&t1.configs, &t2.configs);
        prop_assert_eq!(&t1.momenta, &t2.momenta);
        for k in 1..steps {
            let plus = sys.momentum_plus(&t1.configs[k - 1], &t1.configs[k]);
            let minus = sys.momentum_minus(&t1.configs[k], &t1.configs[k + 1]);
            prop_assert!((t1.momenta[k][0] - plus[0]).abs() < 1e-12);
            prop_assert!((minus[0] - plus[0]).abs() < 1e-9);
        }
    }

    /// The exact discretization reproduces the closed-form damped motion
    /// at the grid points for any admissible parameter draw.
    #[test]
    fn exact_discretization_samples_the_closed_form(
        (m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = discretize::exact_damped_oscillator(m, k, r, h).unwrap();
        let sol = discretize::damped_oscillator_solution(m, k, r, a, b).unwrap();
        let cfg = SolverConfig::default();
        let (q0, _) = sol(0.0);
        let (q1, _) = sol(h);
        let traj = sys
            .run_trajectory(TrajectoryInit::Pair { q0: vec![q0], q1: vec![q1] }, 15, &cfg)
            .unwrap();
        for (j, q) in traj.configs.iter().enumerate() {
            let (q_ref, _) = sol(j as f64 * h);
            prop_assert!((q[0] - q_ref).abs() < 1e-8,
                         "step {j}: {} vs {}", q[0], q_ref);
        }
    }

    /// Along an exactly-sampled damped motion the oscillator energy never
    /// increases from one grid point to the next.
    #[test]
    fn exact_flow_energy_is_non_increasing((m, k, r, h) in osc_params(), (a, b) in state1()) {
        let sys = discretize::exact_damped_oscillator(m, k, r, h).unwrap();
        let sol = discretize::damped_oscillator_solution(m, k, r, a, b).unwrap();
        let cfg = SolverConfig::default();
        let (q1, _) = sol(h);
        let traj = sys
            .run_trajectory(TrajectoryInit::Pair { q0: vec![a], q1: vec![q1] }, 20, &cfg)
            .unwrap();
        let energy = |q: &[f64], p: &[f64]| 0.5 * p[0] * p[0] / m + 0.5 * k * q[0] * q[0];
        let mut prev = energy(&traj.configs[0], &traj.momenta[0]);
        for j in 1..traj.configs.len() {
            let e = energy(&traj.configs[j], &traj.momenta[j]);
            prop_assert!(e <= prev + 1e-12 * (1.0 + prev.abs()),
                         "energy rose from {prev} to {e} at step {j}");
            prev = e;
        }
    }

    /// Sustained drag empties the midpoint integrator's energy reservoir
    /// over a longer horizon even though single steps may wobble.
    #[test]
    fn midpoint_energy_decays_over_long_runs((m, k) in (0.5..2.0f64, 0.5..2.0f64),
                                             (a, b) in state1()) {
        prop_assume!(a.abs() + b.abs() > 0.2);
        let r = 0.4;
        let h = 0.1;
        let sys = midpoint_osc(m, k, r, h);
        let continuous = continuous_osc(m, k, r);
        let cfg = SolverConfig::default();
        let traj = sys
            .run_trajectory(
                TrajectoryInit::Velocity { q0: vec![a], v0: vec![b], system: &continuous },
                60,
                &cfg,
            )
            .unwrap();
        let energy = |q: &[f64], p: &[f64]| 0.5 * p[0] * p[0] / m + 0.5 * k * q[0] * q[0];
        let e0 = energy(&traj.configs[0], &traj.momenta[0]);
        let e_end = energy(
            traj.configs.last().unwrap(),
            traj.momenta.last().unwrap(),
        );
        prop_assert!(e_end < 0.9 * e0, "energy {e0} only fell to {e_end}");
    }

    /// Action families accumulated along a trajectory hand back the stored
    /// momenta through both generating-function slot derivatives.
    #[test]
    fn action_family_gammas_reproduce_momenta((m, k, r, h) in osc_params(),
                                              (a, b) in state1()) {
        let sys = midpoint_osc(m, k, r, h);
        let cfg = SolverConfig::default();
        let traj = sys
            .run_trajectory(
                TrajectoryInit::Pair { q0: vec![a], q1: vec![a + 0.05 * b] },
                10,
                &cfg,
            )
            .unwrap();
        let momenta = traj.momenta.clone();
        let configs = traj.configs.clone();
        let tfam = TrajectoryActionFamily::new(sys.clone(), traj).unwrap();
        let past = tfam.past();
        let future = tfam.future();
        for k in 0..configs.len() - 1 {
            let (aq, bq) = (&configs[k], &configs[k + 1]);
            let gp = hj::gamma_plus(&sys, &past, k, aq, bq).unwrap();
            let gm = hj::gamma_minus(&sys, &future, k, aq, bq).unwrap();
            let dp: Vec<f64> = gp.iter().zip(&momenta[k + 1]).map(|(x, y)| x - y).collect();
            let dm: Vec<f64> = gm.iter().zip(&momenta[k]).map(|(x, y)| x - y).collect();
            prop_assert!(inf_norm(&dp) < 1e-8, "gamma_plus off by {} at {k}", inf_norm(&dp));
            prop_assert!(inf_norm(&dm) < 1e-8, "gamma_minus off by {} at {k}", inf_norm(&dm));
        }
    }
}
