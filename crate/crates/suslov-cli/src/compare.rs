//! Cross-checking the three descriptions of one motion: the frame system on
//! SO(n), the reduced sphere system in original time, and the Hamiltonized
//! rescaled-time system replayed back into original time.

use std::path::Path;

use nalgebra::DVector;
use serde_json::json;
use suslov::dynamics::{
    dense_reduced_eval, integrate_full, integrate_reduced, FullState, IntegrateOptions,
    ReducedState,
};
use suslov::reduction::{integrate_el2, time_reparametrize, to_chart, El2Method, Hemisphere};
use suslov::{Error, InertiaSpec, PotentialSpec};

use crate::config::{BuiltInitial, RunConfig};
use crate::Failure;

/// Discrepancies above this are a comparison failure (exit code 1).
pub const AGREEMENT_TOL: f64 = 1e-6;

/// Don't chart or compare closer to the equator than this.
pub const WINDOW_MIN_QN: f64 = 0.1;

/// A rescaled-time trajectory mapped back into original time: for each
/// retained sample, the time t, the sphere point, its momenta, and qₙ.
pub struct Replay {
    pub sigma: Hemisphere,
    pub times: Vec<f64>,
    pub q_full: Vec<DVector<f64>>,
    pub p: Vec<DVector<f64>>,
    pub q_n: Vec<f64>,
}

/// Integrates the Hamiltonized system from the chart image of `s0` and
/// reparametrizes the samples back to original time t (t = 0 at the start).
///
/// On the lower hemisphere forward time means backward rescaled time, so the
/// flow is run through its mirror: with (Q, P)(s) = (q, −p)(−s) the mirrored
/// variables satisfy the same equations, and times/momenta are reflected
/// back afterwards.  If the τ-run reaches the ball boundary, the replay is
/// truncated at the last sample before it.
pub fn hamiltonized_replay(
    s0: &ReducedState<f64>,
    inertia: &InertiaSpec<f64>,
    pot: &PotentialSpec<f64>,
    dtau: f64,
    steps: usize,
) -> Result<Replay, String> {
    let chart = to_chart(s0).map_err(|e| format!("cannot chart the initial state: {e}"))?;
    let mirrored = chart.sigma == Hemisphere::Minus;
    let p_start = if mirrored { -chart.p.clone() } else { chart.p.clone() };
    let mut traj = integrate_el2(
        &chart.q,
        &p_start,
        chart.sigma,
        inertia,
        pot,
        dtau,
        steps,
        1,
        El2Method::Rk4,
    )
    .map_err(|e| format!("rescaled-time integration failed: {e}"))?;

    // The quadrature back to t fails on samples at the ball boundary; the
    // replay simply ends before the first such sample.
    let ts = loop {
        match time_reparametrize(&traj, 0.0) {
            Ok(ts) => break ts,
            Err(Error::SingularIntegrand { index, .. }) if index >= 2 => {
                traj.taus.truncate(index);
                traj.qs.truncate(index);
                traj.ps.truncate(index);
                traj.energies.truncate(index);
            }
            Err(e) => return Err(format!("cannot recover original time: {e}")),
        }
    };

    let sign: f64 = chart.sigma.sign();
    let count = traj.taus.len();
    let mut times = Vec::with_capacity(count);
    let mut q_full = Vec::with_capacity(count);
    let mut p = Vec::with_capacity(count);
    let mut q_n = Vec::with_capacity(count);
    for (k, &tk) in ts.iter().enumerate() {
        let q = &traj.qs[k];
        let qq = q.dot(q);
        let qn = sign * (1.0 - qq).sqrt();
        let m = q.len();
        times.push(if mirrored { -tk } else { tk });
        q_full.push(DVector::from_fn(m + 1, |i, _| if i < m { q[i] } else { qn }));
        p.push(if mirrored { -&traj.ps[k] } else { traj.ps[k].clone() });
        q_n.push(qn);
    }
    Ok(Replay {
        sigma: chart.sigma,
        times,
        q_full,
        p,
        q_n,
    })
}

/// The `compare` command: run all three propagators from matched initial
/// data and report the sup-norm discrepancies.
pub fn run(config_path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config_path).map_err(Failure::Config)?;
    let inertia = cfg.build_inertia().map_err(Failure::Config)?;
    let pot = cfg.build_potential().map_err(Failure::Config)?;
    let (full0, reduced0) = match cfg.build_initial().map_err(Failure::Config)? {
        BuiltInitial::Full(s) => {
            let r = s.to_reduced(&inertia);
            (s, r)
        }
        BuiltInitial::Reduced(r) => {
            let f = FullState::from_reduced(&r, &inertia)
                .map_err(|e| Failure::Config(format!("initial: {e}")))?;
            (f, r)
        }
    };
    if reduced0.q_n().abs() <= WINDOW_MIN_QN {
        return Err(Failure::Config(format!(
            "initial state lies on or too close to the equator Lambda: |q_n| = {:.6e} (need > {WINDOW_MIN_QN})",
            reduced0.q_n().abs()
        )));
    }

    let dt = cfg.integrator.dt;
    let steps = cfg.integrator.steps;
    let opts = IntegrateOptions {
        record_every: cfg.integrator.record_every,
        reproject: cfg.integrator.reproject,
    };
    let full = integrate_full(&full0, &inertia, &pot, dt, steps, &opts)
        .map_err(|e| Failure::Check(format!("frame run failed: {e}")))?;
    let reduced = integrate_reduced(&reduced0, &inertia, &pot, dt, steps, &opts)
        .map_err(|e| Failure::Check(format!("sphere run failed: {e}")))?;

    // Frame vs sphere: the frame's Poisson vector must trace 𝐪(t).
    let mut sup_full = 0.0_f64;
    for k in 0..full.len() {
        let e_n = full.states[k].rotation().poisson_vector();
        sup_full = sup_full.max((e_n - reduced.states[k].q_full()).norm());
    }

    // Rescaled-time replay vs sphere, on the window where |q_n| stays
    // charted.
    let window_end = (0..reduced.len())
        .find(|&k| reduced.monitors.q_n[k].abs() <= WINDOW_MIN_QN)
        .map(|k| reduced.times[k.saturating_sub(1)])
        .unwrap_or(*reduced.times.last().expect("nonempty run"));
    let replay = hamiltonized_replay(&reduced0, &inertia, &pot, dt, steps)
        .map_err(Failure::Check)?;
    let mut sup_ham = 0.0_f64;
    let mut compared = 0usize;
    for (k, &t) in replay.times.iter().enumerate() {
        if !(0.0..=window_end).contains(&t) || replay.q_n[k].abs() <= WINDOW_MIN_QN {
            continue;
        }
        let (q_ref, p_ref) = dense_reduced_eval(&reduced, &inertia, &pot, t);
        sup_ham = sup_ham.max((&replay.q_full[k] - q_ref).amax());
        sup_ham = sup_ham.max((&replay.p[k] - p_ref).amax());
        compared += 1;
    }

    let pass_full = sup_full < AGREEMENT_TOL;
    let pass_ham = sup_ham < AGREEMENT_TOL && compared > 0;
    let report = json!({
        "command": "compare",
        "config": cfg,
        "window": {
            "min_abs_q_n": WINDOW_MIN_QN,
            "t_end": window_end,
            "replay_samples_compared": compared,
        },
        "full_vs_reduced": {
            "sup_poisson_vector_error": sup_full,
            "tol": AGREEMENT_TOL,
            "pass": pass_full,
        },
        "hamiltonized_vs_reduced": {
            "sup_state_error": sup_ham,
            "tol": AGREEMENT_TOL,
            "pass": pass_ham,
            "hemisphere": match replay.sigma {
                Hemisphere::Plus => "plus",
                Hemisphere::Minus => "minus",
            },
        },
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(path) = &cfg.outputs.report_json {
        std::fs::write(path, text.as_bytes())
            .map_err(|e| Failure::Config(format!("cannot write {path}: {e}")))?;
    }

    if pass_full && pass_ham {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "propagators disagree: full_vs_reduced={sup_full:.6e}, hamiltonized_vs_reduced={sup_ham:.6e} (tol {AGREEMENT_TOL:e})"
        )))
    }
}
