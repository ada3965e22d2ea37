//! Full and reduced propagation: field consistency, conservation, volume.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use suslov::dynamics::{
    dense_reduced_eval, divergence_residual, energy_full, energy_reduced, full_rhs,
    integrate_full, integrate_reduced, reduced_rhs, relative_drift, FullState, IntegrateOptions,
    ReducedState, Trajectory,
};
use suslov::integrable::PotentialSpec;
use suslov::liealg::{InertiaSpec, Rotation};
use suslov::{sampling, Error};

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn inertia123() -> InertiaSpec<f64> {
    InertiaSpec::physical(&[1.0, 2.0, 3.0]).unwrap()
}

/// One representative of every potential variant, sized for dimension n.
fn all_potentials(n: usize) -> Vec<PotentialSpec<f64>> {
    let c = DVector::from_fn(n - 1, |i, _| 1.0 - 0.3 * i as f64);
    let b = DVector::from_fn(n, |i, _| (n - i) as f64 + 1.0);
    vec![
        PotentialSpec::Zero,
        PotentialSpec::Kharlamova { c: c.clone() },
        PotentialSpec::KlebshTisserand { b: b.clone() },
        PotentialSpec::Combined { c, b },
        PotentialSpec::LagrangeTop { epsilon: 1.3 },
    ]
}

#[test]
fn free_body_keeps_omega_bitwise_constant() {
    // With v ≡ 0 the angular velocity equation is ẇ = 0 — every RK4 stage
    // returns zero for the w block, so w never changes even in floats.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s0 = sampling::random_full_state::<f64>(3, 1.0, &mut rng);
    let w0 = s0.omega().clone();
    let traj = integrate_full(
        &s0,
        &inertia123(),
        &PotentialSpec::Zero,
        1e-2,
        200,
        &IntegrateOptions::default(),
    )
    .unwrap();
    for s in &traj.states {
        assert_eq!(s.omega(), &w0);
    }
}

#[test]
fn rest_frame_torque_is_the_scaled_linear_pull() {
    // At g = Id the body vertical is Eₙ, so the torque reduces to the linear
    // coefficients and the frame is momentarily stationary when w = 0.
    let inertia = inertia123();
    let c = dv(&[2.0, -1.0]);
    let pot = PotentialSpec::Kharlamova { c: c.clone() };
    let s = FullState::new(Rotation::identity(3), dv(&[0.0, 0.0])).unwrap();
    let (gdot, wdot) = full_rhs(&s, &inertia, &pot);
    assert_eq!(gdot, DMatrix::zeros(3, 3));
    assert!((wdot - dv(&[2.0 / 4.0, -1.0 / 5.0])).amax() < 1e-15);
}

#[test]
fn one_step_flow_matches_the_vector_field() {
    // (φ_h(s) − s)/h agrees with the right-hand side to O(h).
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 4;
    let inertia = InertiaSpec::physical(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let opts = IntegrateOptions {
        record_every: 1,
        reproject: false,
    };
    let h = 1e-6;
    for pot in all_potentials(n) {
        let s0 = sampling::random_full_state::<f64>(n, 1.0, &mut rng);
        let traj = integrate_full(&s0, &inertia, &pot, h, 1, &opts).unwrap();
        let (gdot, wdot) = full_rhs(&s0, &inertia, &pot);
        let g_fd = (traj.states[1].rotation().as_matrix() - s0.rotation().as_matrix()) / h;
        let w_fd = (traj.states[1].omega() - s0.omega()) / h;
        assert!((g_fd - gdot).amax() < 1e-5, "{}", pot.label());
        assert!((w_fd - wdot).amax() < 1e-5, "{}", pot.label());
    }
}

#[test]
fn full_and_reduced_fields_agree_under_projection() {
    // q̇ is the last row of ġ and ṗ = −J ẇ, for every potential and many
    // random states.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3usize, 4, 5] {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        for pot in all_potentials(n) {
            for _ in 0..20 {
                let s = sampling::random_full_state::<f64>(n, 1.0, &mut rng);
                let r = s.to_reduced(&inertia);
                let (gdot, wdot) = full_rhs(&s, &inertia, &pot);
                let (qdot, pdot) = reduced_rhs(&r, &inertia, &pot);
                let q_from_full = gdot.row(n - 1).transpose();
                let p_from_full = -inertia.apply_metric(&wdot);
                assert!((qdot - q_from_full).amax() < 1e-12, "{}", pot.label());
                assert!((pdot - p_from_full).amax() < 1e-12, "{}", pot.label());
            }
        }
    }
}

#[test]
fn energies_agree_across_the_momentum_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 4;
    let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
    for pot in all_potentials(n) {
        for _ in 0..25 {
            let s = sampling::random_full_state::<f64>(n, 1.5, &mut rng);
            let r = s.to_reduced(&inertia);
            let ef = energy_full(&s, &inertia, &pot);
            let er = energy_reduced(&r, &inertia, &pot);
            assert!((ef - er).abs() < 1e-12 * (1.0 + ef.abs()), "{}", pot.label());
        }
    }
}

#[test]
fn zero_steps_returns_the_initial_sample_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inertia = inertia123();
    let pot = PotentialSpec::Zero;
    let sf = sampling::random_full_state::<f64>(3, 1.0, &mut rng);
    let tf = integrate_full(&sf, &inertia, &pot, 0.1, 0, &IntegrateOptions::default()).unwrap();
    assert_eq!(tf.len(), 1);
    assert_eq!(tf.times, vec![0.0]);
    let sr = sampling::random_reduced_state::<f64>(3, 1.0, &mut rng);
    let tr = integrate_reduced(&sr, &inertia, &pot, 0.1, 0, &IntegrateOptions::default()).unwrap();
    assert_eq!(tr.len(), 1);
    assert_eq!(tr.states[0].q_full(), sr.q_full());
}

#[test]
fn phase_volume_divergence_vanishes_identically() {
    // In the (𝐪, w) variables each diagonal partial of the field is
    // structurally independent of its own variable, so even the central
    // finite difference is exactly zero.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [3usize, 4] {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        for pot in all_potentials(n) {
            for _ in 0..25 {
                let s = sampling::random_reduced_state::<f64>(n, 1.0, &mut rng);
                let w = DVector::from_fn(n - 1, |_, _| sampling::gaussian(&mut rng));
                let div = divergence_residual(s.q_full(), &w, &inertia, &pot);
                assert_eq!(div, 0.0, "{}", pot.label());
            }
        }
    }
}

#[test]
fn energy_is_conserved_along_both_propagators() {
    let inertia = InertiaSpec::physical(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let pot = PotentialSpec::Combined {
        c: dv(&[1.0, 0.7, 0.4]),
        b: dv(&[5.0, 4.0, 3.0, 1.0]),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s0 = sampling::random_full_state::<f64>(4, 1.0, &mut rng);
    let opts = IntegrateOptions {
        record_every: 20,
        reproject: true,
    };
    let tf = integrate_full(&s0, &inertia, &pot, 1e-3, 10_000, &opts).unwrap();
    assert!(relative_drift(&tf.monitors.energy) < 1e-8);
    let r0 = s0.to_reduced(&inertia);
    let tr = integrate_reduced(&r0, &inertia, &pot, 1e-3, 10_000, &opts).unwrap();
    assert!(relative_drift(&tr.monitors.energy) < 1e-8);
}

#[test]
fn monitors_track_frame_quality() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s0 = sampling::random_full_state::<f64>(3, 1.0, &mut rng);
    let with = integrate_full(
        &s0,
        &inertia,
        &pot,
        1e-3,
        1000,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let worst = with
        .monitors
        .frame_defect
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    assert!(worst < 1e-12, "reprojected defect {worst}");
    let without = integrate_full(
        &s0,
        &inertia,
        &pot,
        1e-3,
        1000,
        &IntegrateOptions {
            record_every: 1,
            reproject: false,
        },
    )
    .unwrap();
    let worst_raw = without
        .monitors
        .frame_defect
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    assert!(worst_raw < 1e-9, "raw defect {worst_raw}");

    // Reduced runs renormalize 𝐪, so |‖𝐪‖ − 1| stays at roundoff.
    let r0 = s0.to_reduced(&inertia);
    let tr = integrate_reduced(&r0, &inertia, &pot, 1e-3, 1000, &IntegrateOptions::default())
        .unwrap();
    let worst_r = tr
        .monitors
        .frame_defect
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    assert!(worst_r < 1e-14);
}

#[test]
fn first_integral_monitors_appear_exactly_when_defined() {
    let inertia = inertia123();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s0 = sampling::random_reduced_state::<f64>(3, 1.0, &mut rng);
    let quad = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let t = integrate_reduced(&s0, &inertia, &quad, 1e-3, 100, &IntegrateOptions::default())
        .unwrap();
    let fs = t.monitors.integrals.expect("quadratic family has integrals");
    assert_eq!(fs.len(), t.times.len());
    assert_eq!(fs[0].len(), 2);

    let heavy = PotentialSpec::LagrangeTop { epsilon: 1.0 };
    let t = integrate_reduced(&s0, &inertia, &heavy, 1e-3, 10, &IntegrateOptions::default())
        .unwrap();
    assert!(t.monitors.integrals.is_none());
}

#[test]
fn dense_evaluation_reproduces_samples_and_interpolates_between_them() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s0 = sampling::random_reduced_state::<f64>(3, 1.0, &mut rng);
    let coarse = integrate_reduced(&s0, &inertia, &pot, 1e-2, 100, &IntegrateOptions::default())
        .unwrap();
    let fine = integrate_reduced(&s0, &inertia, &pot, 5e-3, 200, &IntegrateOptions::default())
        .unwrap();
    // At the recorded times the interpolant returns the samples themselves.
    for k in [0usize, 37, 100] {
        let (q, p) = dense_reduced_eval(&coarse, &inertia, &pot, coarse.times[k]);
        assert!((q - coarse.states[k].q_full()).amax() < 1e-13);
        assert!((p - coarse.states[k].p()).amax() < 1e-13);
    }
    // Between samples it matches a twice-finer integration to Hermite order.
    for k in [3usize, 50, 98] {
        let t = coarse.times[k] + 5e-3;
        let (q, p) = dense_reduced_eval(&coarse, &inertia, &pot, t);
        let qf = fine.states[2 * k + 1].q_full();
        let pf = fine.states[2 * k + 1].p();
        assert!((q - qf).amax() < 1e-8);
        assert!((p - pf).amax() < 1e-8);
    }
    // Out-of-range times clamp to the ends instead of extrapolating.
    let (q_end, _) = dense_reduced_eval(&coarse, &inertia, &pot, 10.0);
    assert!((q_end - coarse.states[100].q_full()).amax() < 1e-13);
}

#[test]
fn blowup_is_reported_not_propagated() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[500.0, 300.0, 1.0]),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s0 = sampling::random_reduced_state::<f64>(3, 1.0, &mut rng);
    let err = integrate_reduced(&s0, &inertia, &pot, 1e3, 400, &IntegrateOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. }), "{err}");
}

#[test]
fn relative_drift_edge_cases() {
    assert_eq!(relative_drift::<f64>(&[]), 0.0);
    assert_eq!(relative_drift(&[2.5, 2.5, 2.5]), 0.0);
    let d: f64 = relative_drift(&[1.0, 1.0 + 1e-6, 1.0 - 2e-7]);
    assert!((d - 1e-6).abs() < 1e-12);
    // Zero-level series fall back to the floor instead of dividing by zero.
    let z: f64 = relative_drift(&[0.0, 1e-31]);
    assert!((z - 0.1).abs() < 1e-12);
}

#[test]
fn state_constructors_validate() {
    assert!(matches!(
        FullState::new(Rotation::identity(3), dv(&[1.0])).unwrap_err(),
        Error::DimensionMismatch { .. }
    ));
    assert!(matches!(
        ReducedState::new(DVector::zeros(3), dv(&[0.0, 0.0])).unwrap_err(),
        Error::ZeroVector { .. }
    ));
    // 𝐪 is normalized on construction.
    let s = ReducedState::new(dv(&[3.0, 0.0, 4.0]), dv(&[1.0, 2.0])).unwrap();
    assert!((s.q_full() - dv(&[0.6, 0.0, 0.8])).amax() < 1e-15);
    assert_eq!(s.q_n(), 0.8);
    assert_eq!(s.q_head(), dv(&[0.6, 0.0]));
}

#[test]
fn single_precision_runs_conserve_energy_coarsely() {
    let inertia = InertiaSpec::<f32>::physical(&[1.0, 2.0, 3.0]).unwrap();
    let pot = PotentialSpec::KlebshTisserand {
        b: DVector::from_column_slice(&[5.0_f32, 3.0, 1.0]),
    };
    let q = DVector::from_column_slice(&[0.6_f32, 0.0, 0.8]);
    let p = DVector::from_column_slice(&[0.3_f32, -0.2]);
    let s0 = ReducedState::new(q, p).unwrap();
    let t: Trajectory<f32, _> =
        integrate_reduced(&s0, &inertia, &pot, 1e-3, 2000, &IntegrateOptions::default()).unwrap();
    assert!(relative_drift(&t.monitors.energy) < 1e-3);
}
