//! Chart transforms, symmetry rank, Hamiltonization, time rescaling, and the
//! preserved measure.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use suslov::dynamics::{
    dense_reduced_eval, energy_reduced, integrate_reduced, reduced_rhs, relative_drift,
    IntegrateOptions, ReducedState,
};
use suslov::integrable::PotentialSpec;
use suslov::liealg::{InertiaSpec, Rotation};
use suslov::reduction::{
    attach_tau, el1_rhs, el2_energy, el2_rhs, h_pm, hamiltonize, integrate_el2, lambda_crossings,
    span_rank, time_reparametrize, to_chart, unweighted_divergence_el1, v_sigma, v_sigma_grad,
    weighted_divergence_residual, Chart, El2Method, Hemisphere, MeasureDensity, TauTrajectory,
};
use suslov::{sampling, Error};

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn inertia123() -> InertiaSpec<f64> {
    InertiaSpec::physical(&[1.0, 2.0, 3.0]).unwrap()
}

fn all_potentials(n: usize) -> Vec<PotentialSpec<f64>> {
    let c = DVector::from_fn(n - 1, |i, _| 0.8 - 0.3 * i as f64);
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
fn symmetry_span_has_full_rank_at_generic_frames() {
    assert_eq!(span_rank(&Rotation::<f64>::identity(3)), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [3usize, 4, 5] {
        let full = n * (n - 1) / 2;
        for _ in 0..20 {
            let g = sampling::random_rotation_generic::<f64>(n, 0.1, &mut rng);
            assert_eq!(span_rank(&g), full, "n={n}");
        }
    }
}

#[test]
fn symmetry_span_drops_rank_exactly_on_the_degenerate_set() {
    // Where the body vertical lies in the equator the span loses exactly
    // n − 2 dimensions — never more, never fewer.
    let quarter = Rotation::<f64>::from_matrix(DMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
    ))
    .unwrap();
    assert_eq!(quarter.as_matrix()[(2, 2)], 0.0);
    assert_eq!(span_rank(&quarter), 2);

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for n in [3usize, 4, 5] {
        let full = n * (n - 1) / 2;
        for _ in 0..20 {
            let g = sampling::random_rotation_on_degenerate_set::<f64>(n, &mut rng);
            assert_eq!(g.as_matrix()[(n - 1, n - 1)], 0.0);
            assert_eq!(span_rank(&g), full - (n - 2), "n={n}");
        }
    }
}

#[test]
fn charting_at_the_poles_and_on_the_equator() {
    let north = ReducedState::new(dv(&[0.0, 0.0, 1.0]), dv(&[0.4, -0.2])).unwrap();
    let c = to_chart(&north).unwrap();
    assert_eq!(c.sigma, Hemisphere::Plus);
    assert_eq!(c.q, dv(&[0.0, 0.0]));
    assert_eq!(c.p_pre, dv(&[0.4, -0.2]));
    assert_eq!(c.q_n(), 1.0);

    let south = ReducedState::new(dv(&[0.0, 0.0, -1.0]), dv(&[0.4, -0.2])).unwrap();
    let c = to_chart(&south).unwrap();
    assert_eq!(c.sigma, Hemisphere::Minus);
    assert_eq!(c.p_pre, dv(&[-0.4, 0.2]));

    let equator = ReducedState::new(dv(&[1.0, 0.0, 0.0]), dv(&[0.0, 0.0])).unwrap();
    assert!(matches!(
        to_chart(&equator).unwrap_err(),
        Error::OnBoundary { .. }
    ));
}

#[test]
fn chart_roundtrips_match_the_sphere_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in [3usize, 4, 5] {
        for _ in 0..30 {
            let s = sampling::random_interior_state::<f64>(n, 0.05, 1.0, &mut rng);
            let c = to_chart(&s).unwrap();
            assert_eq!(c.sigma, Hemisphere::of(s.q_n()));
            let back = c.to_reduced();
            assert!((back.q_full() - s.q_full()).amax() < 1e-13);
            assert!((back.p() - s.p()).amax() < 1e-13);
        }
    }
}

#[test]
fn hamiltonized_charts_reject_the_closed_ball_boundary() {
    let ok = Chart::from_hamiltonized(Hemisphere::Plus, dv(&[0.3, 0.4]), dv(&[0.1, 0.2]));
    assert!(ok.is_ok());
    let err = Chart::from_hamiltonized(Hemisphere::Plus, dv(&[0.8, 0.6]), dv(&[0.1, 0.2]));
    assert!(matches!(err.unwrap_err(), Error::OnBoundary { .. }));
    // And the reconstructed P = p / qₙ matches the construction.
    let c = Chart::from_hamiltonized(Hemisphere::Minus, dv(&[0.3, 0.0]), dv(&[0.2, -0.1])).unwrap();
    let qn = -(1.0_f64 - 0.09).sqrt();
    assert!((c.q_n() - qn).abs() < 1e-15);
    assert!((c.p_pre.clone() - dv(&[0.2 / qn, -0.1 / qn])).amax() < 1e-15);
}

#[test]
fn hemisphere_sign_conventions() {
    assert_eq!(Hemisphere::of(0.3), Hemisphere::Plus);
    assert_eq!(Hemisphere::of(0.0), Hemisphere::Plus);
    assert_eq!(Hemisphere::of(-2.0), Hemisphere::Minus);
    assert_eq!(Hemisphere::Plus.sign::<f64>(), 1.0);
    assert_eq!(Hemisphere::Minus.sign::<f64>(), -1.0);
}

#[test]
fn charted_potential_agrees_with_the_sphere_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for n in [3usize, 4] {
        for pot in all_potentials(n) {
            for _ in 0..10 {
                let c = sampling::random_interior_chart::<f64>(n, 0.8, 1.0, &mut rng);
                let s = c.to_reduced();
                let direct = pot.value(s.q_full());
                let charted = v_sigma(&c.q, c.sigma, &pot);
                assert!(
                    (direct - charted).abs() < 1e-13 * (1.0 + direct.abs()),
                    "{} {:?}",
                    pot.label(),
                    c.sigma
                );
            }
        }
    }
}

#[test]
fn charted_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let h = 1e-6;
    for n in [3usize, 4] {
        for pot in all_potentials(n) {
            for sigma in [Hemisphere::Plus, Hemisphere::Minus] {
                let c = sampling::random_interior_chart::<f64>(n, 0.5, 1.0, &mut rng);
                let q = c.q.clone();
                let grad = v_sigma_grad(&q, sigma, &pot);
                for k in 0..n - 1 {
                    let mut qp = q.clone();
                    let mut qm = q.clone();
                    qp[k] += h;
                    qm[k] -= h;
                    let fd =
                        (v_sigma(&qp, sigma, &pot) - v_sigma(&qm, sigma, &pot)) / (2.0 * h);
                    assert!(
                        (fd - grad[k]).abs() < 1e-7,
                        "{} k={k} fd={fd} grad={}",
                        pot.label(),
                        grad[k]
                    );
                }
            }
        }
    }
}

#[test]
fn chart_hamiltonian_equals_reduced_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for n in [3usize, 4] {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        for pot in all_potentials(n) {
            for _ in 0..15 {
                let c = sampling::random_interior_chart::<f64>(n, 0.8, 1.0, &mut rng);
                let e_chart = h_pm(&c, &inertia, &pot);
                let e_sphere = energy_reduced(&c.to_reduced(), &inertia, &pot);
                assert!(
                    (e_chart - e_sphere).abs() < 1e-12 * (1.0 + e_sphere.abs()),
                    "{}",
                    pot.label()
                );
            }
        }
    }
}

#[test]
fn chart_field_is_the_pushforward_of_the_reduced_field() {
    // q̇ agrees directly; Ṗ = ṗ/qₙ − p q̇ₙ/qₙ² by the quotient rule.
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for n in [3usize, 4, 5] {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        for pot in all_potentials(n) {
            for _ in 0..20 {
                let s = sampling::random_interior_state::<f64>(n, 0.2, 1.0, &mut rng);
                let c = to_chart(&s).unwrap();
                let (qdot_c, pdot_c) = el1_rhs(&c, &inertia, &pot);
                let (qdot_s, pdot_s) = reduced_rhs(&s, &inertia, &pot);
                let qn = s.q_n();
                let qn_dot = qdot_s[n - 1];
                for i in 0..n - 1 {
                    assert!((qdot_c[i] - qdot_s[i]).abs() < 1e-10, "{}", pot.label());
                    let expect = pdot_s[i] / qn - s.p()[i] * qn_dot / (qn * qn);
                    assert!((pdot_c[i] - expect).abs() < 1e-10, "{}", pot.label());
                }
            }
        }
    }
}

#[test]
fn chart_field_at_the_pole_is_purely_kinetic() {
    // At q = 0 every polynomial-family gradient contribution cancels and the
    // geodesic terms vanish exactly.
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let c = Chart::from_hamiltonized(Hemisphere::Plus, dv(&[0.0, 0.0]), dv(&[0.4, -1.0])).unwrap();
    let (qdot, pdot) = el1_rhs(&c, &inertia, &pot);
    assert_eq!(pdot, dv(&[0.0, 0.0]));
    assert!((qdot - dv(&[0.4 / 4.0, -1.0 / 5.0])).amax() < 1e-15);
}

#[test]
fn rescaled_flow_of_the_free_body_is_straight_lines() {
    let inertia = inertia123();
    let q0 = dv(&[0.1, -0.2]);
    let p0 = dv(&[0.4, 0.25]);
    let traj = integrate_el2(
        &q0,
        &p0,
        Hemisphere::Plus,
        &inertia,
        &PotentialSpec::Zero,
        1e-2,
        100,
        1,
        El2Method::Rk4,
    )
    .unwrap();
    let ap = inertia.apply_inverse_metric(&p0);
    for (k, tau) in traj.taus.iter().enumerate() {
        let expect = &q0 + &ap * *tau;
        assert!((traj.qs[k].clone() - expect).amax() < 1e-13);
        assert_eq!(traj.ps[k], p0);
    }
}

#[test]
fn rescaled_flow_under_linear_pull_is_a_parabola() {
    // p(τ) = p₀ − Cτ and q(τ) = q₀ + A(p₀τ − Cτ²/2): a degree-two solution
    // that the one-step method reproduces to roundoff.
    let inertia = inertia123();
    let c_coef = dv(&[2.0, -1.0]);
    let pot = PotentialSpec::Kharlamova { c: c_coef.clone() };
    let q0 = dv(&[0.05, -0.1]);
    let p0 = dv(&[0.3, 0.2]);
    for sigma in [Hemisphere::Plus, Hemisphere::Minus] {
        let traj = integrate_el2(
            &q0, &p0, sigma, &inertia, &pot, 1e-2, 150, 1, El2Method::Rk4,
        )
        .unwrap();
        for (k, tau) in traj.taus.iter().enumerate() {
            let p_expect = &p0 - &c_coef * *tau;
            let impulse = &p0 * *tau - &c_coef * (tau * tau / 2.0);
            let q_expect = &q0 + inertia.apply_inverse_metric(&impulse);
            assert!((traj.ps[k].clone() - p_expect).amax() < 1e-10);
            assert!((traj.qs[k].clone() - q_expect).amax() < 1e-10);
        }
    }
}

#[test]
fn rescaled_energy_is_conserved_by_both_methods() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let q0 = dv(&[0.3, -0.1]);
    let p0 = dv(&[0.2, 0.5]);
    let rk = integrate_el2(
        &q0,
        &p0,
        Hemisphere::Plus,
        &inertia,
        &pot,
        1e-3,
        20_000,
        20,
        El2Method::Rk4,
    )
    .unwrap();
    assert!(relative_drift(&rk.energies) < 1e-10);

    let lf = integrate_el2(
        &q0,
        &p0,
        Hemisphere::Plus,
        &inertia,
        &pot,
        1e-3,
        20_000,
        20,
        El2Method::Leapfrog,
    )
    .unwrap();
    let drift_h = relative_drift(&lf.energies);
    assert!(drift_h < 1e-4, "leapfrog drift {drift_h}");

    // Leapfrog is second order: halving the step shrinks the energy error
    // by about four.
    let lf2 = integrate_el2(
        &q0,
        &p0,
        Hemisphere::Plus,
        &inertia,
        &pot,
        5e-4,
        40_000,
        40,
        El2Method::Leapfrog,
    )
    .unwrap();
    let ratio = drift_h / relative_drift(&lf2.energies);
    assert!((2.5..6.0).contains(&ratio), "order ratio {ratio}");
}

#[test]
fn el2_field_and_energy_formulas() {
    let inertia = inertia123();
    let pot = PotentialSpec::Combined {
        c: dv(&[1.0, -0.5]),
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let q = dv(&[0.2, -0.3]);
    let p = dv(&[0.4, 0.1]);
    let (qd, pd) = el2_rhs(&q, &p, Hemisphere::Plus, &inertia, &pot);
    assert!((qd - dv(&[0.1, 0.02])).amax() < 1e-15);
    // −∇V: linear part (1, −0.5) plus (Bᵢ−B₃)qᵢ = (4·0.2, 2·(−0.3)).
    assert!((pd - dv(&[-(1.0 + 0.8), -(-0.5 - 0.6)])).amax() < 1e-15);
    let e = el2_energy(&q, &p, Hemisphere::Plus, &inertia, &pot);
    let kinetic = 0.5 * (0.4 * 0.4 / 4.0 + 0.1 * 0.1 / 5.0);
    let potential = (1.0 * 0.2 + -0.5 * -0.3)
        + 0.5 * (4.0 * 0.04 + 2.0 * 0.09)
        + 0.5 * 1.0;
    assert!((e - (kinetic + potential)).abs() < 1e-15);
}

#[test]
fn time_recovery_is_linear_when_the_orbit_sits_at_the_pole() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let q0 = dv(&[0.0, 0.0]);
    let p0 = dv(&[0.0, 0.0]);
    for sigma in [Hemisphere::Plus, Hemisphere::Minus] {
        let traj = integrate_el2(&q0, &p0, sigma, &inertia, &pot, 1e-2, 50, 1, El2Method::Rk4)
            .unwrap();
        let ts = time_reparametrize(&traj, 3.0).unwrap();
        for (k, tau) in traj.taus.iter().enumerate() {
            let expect = 3.0 + sigma.sign::<f64>() * tau;
            assert!((ts[k] - expect).abs() < 1e-13);
        }
    }
}

#[test]
fn time_recovery_rejects_boundary_touching_orbits() {
    let traj = TauTrajectory {
        sigma: Hemisphere::Plus,
        taus: vec![0.0, 0.1, 0.2],
        qs: vec![dv(&[0.1, 0.0]), dv(&[0.5, 0.5]), dv(&[0.8, 0.6])],
        ps: vec![dv(&[0.0, 0.0]); 3],
        energies: vec![0.0; 3],
    };
    let err = time_reparametrize(&traj, 0.0).unwrap_err();
    assert!(matches!(err, Error::SingularIntegrand { index: 2, .. }), "{err}");
}

#[test]
fn time_runs_backward_on_the_southern_chart() {
    let inertia = inertia123();
    let pot = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let traj = integrate_el2(
        &dv(&[0.3, 0.1]),
        &dv(&[0.2, -0.1]),
        Hemisphere::Minus,
        &inertia,
        &pot,
        1e-2,
        100,
        1,
        El2Method::Rk4,
    )
    .unwrap();
    let ts = time_reparametrize(&traj, 0.0).unwrap();
    for k in 1..ts.len() {
        assert!(ts[k] < ts[k - 1], "t must decrease with τ on σ = −");
    }
}

#[test]
fn rescaled_time_attaches_consistently_to_sphere_runs() {
    // A frozen state (zero potential, zero momentum) has constant qₙ, so
    // τ(t) = qₙ·t exactly under the quadrature.
    let s0 = ReducedState::new(dv(&[0.6, 0.0, 0.8]), dv(&[0.0, 0.0])).unwrap();
    let inertia = inertia123();
    let mut traj = integrate_reduced(
        &s0,
        &inertia,
        &PotentialSpec::Zero,
        1e-2,
        100,
        &IntegrateOptions::default(),
    )
    .unwrap();
    attach_tau(&mut traj);
    let taus = traj.taus.as_ref().unwrap();
    for (k, t) in traj.times.iter().enumerate() {
        assert!((taus[k] - 0.8 * t).abs() < 1e-13);
    }
}

#[test]
fn rescaled_and_original_time_descriptions_agree() {
    // Integrate the same orbit as EL2 in τ and as the reduced system in t;
    // mapping τ ↦ t and dense-evaluating the t-run must land on the τ-run.
    let inertia = inertia123();
    let pot = PotentialSpec::Combined {
        c: dv(&[0.4, -0.2]),
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let s0 = ReducedState::new(dv(&[0.25, -0.35, 0.85]), dv(&[0.3, 0.22])).unwrap();
    let c0 = to_chart(&s0).unwrap();
    let (q0, p0) = hamiltonize(&c0);
    let tau_traj = integrate_el2(
        &q0,
        &p0,
        c0.sigma,
        &inertia,
        &pot,
        1e-3,
        2_000,
        1,
        El2Method::Rk4,
    )
    .unwrap();
    let ts = time_reparametrize(&tau_traj, 0.0).unwrap();

    let t_traj = integrate_reduced(&s0, &inertia, &pot, 1e-3, 4_000, &IntegrateOptions::default())
        .unwrap();
    let t_max = *t_traj.times.last().unwrap();
    let mut worst = 0.0_f64;
    let mut compared = 0usize;
    for (k, &t) in ts.iter().enumerate() {
        if !(0.0..=t_max).contains(&t) {
            continue;
        }
        let (q_full, p) = dense_reduced_eval(&t_traj, &inertia, &pot, t);
        // Interior window only: the comparison needs the chart to stay valid.
        if q_full[2].abs() < 0.1 {
            continue;
        }
        compared += 1;
        for i in 0..2 {
            worst = worst.max((q_full[i] - tau_traj.qs[k][i]).abs());
            worst = worst.max((p[i] - tau_traj.ps[k][i]).abs());
        }
    }
    assert!(compared > 500, "window too small: {compared}");
    assert!(worst < 1e-6, "descriptions diverge: {worst}");
}

#[test]
fn measure_density_matches_the_chart_codimension() {
    assert_eq!(MeasureDensity::for_dim(3).exponent, 1);
    assert_eq!(MeasureDensity::for_dim(4).exponent, 2);
    assert_eq!(MeasureDensity::for_dim(2).exponent, 0);
    assert_eq!(MeasureDensity::for_dim(3).eval(-0.5_f64), -0.5);
    assert_eq!(MeasureDensity::for_dim(4).eval(-0.5_f64), 0.25);
    assert_eq!(MeasureDensity::for_dim(2).eval(-0.5_f64), 1.0);
}

#[test]
fn multiplier_weighted_chart_divergence_vanishes() {
    // The chart flow compresses phase volume, but the qₙ^{n−2}-weighted
    // volume is preserved: weighted divergence at roundoff, raw divergence
    // visibly nonzero.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [3usize, 4] {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        for pot in all_potentials(n) {
            let mut max_unweighted = 0.0_f64;
            for _ in 0..15 {
                let c = sampling::random_interior_chart::<f64>(n, 0.6, 1.0, &mut rng);
                let w = weighted_divergence_residual(&c, &inertia, &pot);
                assert!(w < 1e-6, "{} n={n} w={w}", pot.label());
                max_unweighted = max_unweighted.max(unweighted_divergence_el1(&c, &inertia, &pot));
            }
            assert!(
                max_unweighted > 1e-3,
                "{} n={n}: raw divergence suspiciously small ({max_unweighted}) — \
                 the weighted check would be vacuous",
                pot.label()
            );
        }
    }
}

#[test]
fn equator_crossings_are_located_to_tolerance() {
    let inertia = inertia123();
    let pot = PotentialSpec::Zero;
    // Start near the equator moving across it: q̇ₙ(0) = −(Ap, q) < 0 and the
    // free orbit precesses with period 2π/|Ap| ≈ 8.4, so a window of length 6
    // contains both the downward and the upward crossing.
    let s0 = ReducedState::new(dv(&[0.995, 0.0, 0.0998]), dv(&[3.0, 0.2])).unwrap();
    let traj = integrate_reduced(&s0, &inertia, &pot, 1e-2, 600, &IntegrateOptions::default())
        .unwrap();
    let crossings = lambda_crossings(&traj, &inertia, &pot);
    assert!(!crossings.is_empty(), "orbit should cross the equator");
    for &t in &crossings {
        let (q_full, _) = dense_reduced_eval(&traj, &inertia, &pot, t);
        assert!(
            q_full[2].abs() < 1e-6,
            "crossing at t={t} has q_n={}",
            q_full[2]
        );
    }

    // A confined orbit reports none: oscillator actions small enough that
    // the level set stays inside one hemisphere.
    let confined = ReducedState::new(dv(&[0.1, 0.05, 0.99]), dv(&[0.05, -0.04])).unwrap();
    let pot_kt = PotentialSpec::KlebshTisserand {
        b: dv(&[5.0, 3.0, 1.0]),
    };
    let traj = integrate_reduced(
        &confined,
        &inertia,
        &pot_kt,
        1e-2,
        2_000,
        &IntegrateOptions::default(),
    )
    .unwrap();
    assert!(lambda_crossings(&traj, &inertia, &pot_kt).is_empty());
    let min_qn = traj
        .monitors
        .q_n
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(min_qn > 0.5, "orbit was not actually confined: {min_qn}");
}
