//! The `simulate` command: one configured run, with CSV/JSON/SVG artifacts.

use std::fs;
use std::path::Path;

use serde_json::json;
use suslov::dynamics::{
    integrate_full, integrate_reduced, relative_drift, IntegrateOptions, Monitors, ReducedState,
    Trajectory,
};
use suslov::integrable::sigma_residual;
use suslov::reduction::{attach_tau, lambda_crossings};
use suslov::{InertiaSpec, PotentialSpec};

use crate::config::{BuiltInitial, RunConfig};
use crate::csvio::TrajectoryTable;
use crate::svg::{line_plot, Series};
use crate::Failure;

pub fn run(config_path: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config_path).map_err(Failure::Config)?;
    let inertia = cfg.build_inertia().map_err(Failure::Config)?;
    let pot = cfg.build_potential().map_err(Failure::Config)?;
    let initial = cfg.build_initial().map_err(Failure::Config)?;
    let opts = IntegrateOptions {
        record_every: cfg.integrator.record_every,
        reproject: cfg.integrator.reproject,
    };
    let dt = cfg.integrator.dt;
    let steps = cfg.integrator.steps;

    // Integrate, then view the run through the sphere system: the table and
    // the equator-crossing search both work on (𝐪, p) samples.
    let (kind, table, reduced_view) = match initial {
        BuiltInitial::Full(s0) => {
            let mut traj = integrate_full(&s0, &inertia, &pot, dt, steps, &opts)
                .map_err(|e| Failure::Check(format!("run failed: {e}")))?;
            attach_tau(&mut traj);
            let table = TrajectoryTable::from_full(&traj, &inertia);
            let states: Vec<ReducedState<f64>> =
                traj.states.iter().map(|s| s.to_reduced(&inertia)).collect();
            let view = Trajectory {
                times: traj.times.clone(),
                taus: traj.taus.clone(),
                monitors: Monitors {
                    energy: traj.monitors.energy.clone(),
                    q_n: traj.monitors.q_n.clone(),
                    frame_defect: traj.monitors.frame_defect.clone(),
                    integrals: traj.monitors.integrals.clone(),
                },
                states,
            };
            ("full", table, view)
        }
        BuiltInitial::Reduced(s0) => {
            let mut traj = integrate_reduced(&s0, &inertia, &pot, dt, steps, &opts)
                .map_err(|e| Failure::Check(format!("run failed: {e}")))?;
            attach_tau(&mut traj);
            let table = TrajectoryTable::from_reduced(&traj, &inertia);
            ("reduced", table, traj)
        }
    };

    let report = build_report(&cfg, kind, &inertia, &pot, &reduced_view);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");

    write_artifacts(&cfg, &table, &reduced_view, &text)?;
    Ok(())
}

fn build_report(
    cfg: &RunConfig,
    kind: &str,
    inertia: &InertiaSpec<f64>,
    pot: &PotentialSpec<f64>,
    view: &Trajectory<f64, ReducedState<f64>>,
) -> serde_json::Value {
    let m = &view.monitors;
    let fi_report = m.integrals.as_ref().map(|series| {
        let count = series.first().map_or(0, |f| f.len());
        let drifts: Vec<f64> = (0..count)
            .map(|i| {
                let vals: Vec<f64> = series.iter().map(|f| f[i]).collect();
                relative_drift(&vals)
            })
            .collect();
        json!({
            "initial": series.first().map(|f| f.iter().copied().collect::<Vec<f64>>()),
            "relative_drift": drifts,
        })
    });
    let crossings = lambda_crossings(view, inertia, pot);
    let s0 = &view.states[0];
    let (r1, r2, r3) = sigma_residual(s0.q_full(), s0.p(), inertia, pot);
    json!({
        "command": "simulate",
        "config": cfg,
        "run": {
            "kind": kind,
            "samples": view.len(),
            "t_final": view.times.last(),
            "tau_final": view.taus.as_ref().and_then(|t| t.last()),
        },
        "energy": {
            "initial": m.energy.first(),
            "final": m.energy.last(),
            "relative_drift": relative_drift(&m.energy),
        },
        "first_integrals": fi_report,
        "frame_defect_max": m.frame_defect.iter().cloned().fold(0.0_f64, f64::max),
        "lambda_crossings": crossings,
        "sigma_proximity": { "r1": r1, "r2": r2, "r3": r3 },
    })
}

fn write_artifacts(
    cfg: &RunConfig,
    table: &TrajectoryTable,
    view: &Trajectory<f64, ReducedState<f64>>,
    report: &str,
) -> Result<(), Failure> {
    let write = |path: &str, bytes: &[u8]| -> Result<(), Failure> {
        fs::write(path, bytes).map_err(|e| Failure::Config(format!("cannot write {path}: {e}")))
    };
    if let Some(path) = &cfg.outputs.trajectory_csv {
        crate::csvio::write_csv_file(Path::new(path), table).map_err(Failure::Config)?;
    }
    if let Some(path) = &cfg.outputs.monitors_csv {
        write(path, monitors_csv(view).as_bytes())?;
    }
    if let Some(path) = &cfg.outputs.report_json {
        write(path, report.as_bytes())?;
    }
    if let Some(path) = &cfg.outputs.plot_svg {
        write(path, plot(table).as_bytes())?;
    }
    Ok(())
}

/// A compact diagnostics table: time, energy, distance from the equator,
/// and the constraint defect of the carrier (frame or sphere).
fn monitors_csv(view: &Trajectory<f64, ReducedState<f64>>) -> String {
    let m = &view.monitors;
    let mut out = String::from("t,energy,q_n,frame_defect\n");
    for k in 0..view.len() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            view.times[k], m.energy[k], m.q_n[k], m.frame_defect[k]
        ));
    }
    out
}

fn plot(table: &TrajectoryTable) -> String {
    let n = table.n;
    let ts: Vec<f64> = table.rows.iter().map(|r| r[0].unwrap_or(f64::NAN)).collect();
    let series: Vec<Series> = (0..n)
        .map(|i| Series {
            label: format!("q_{}", i + 1),
            ys: table.rows.iter().map(|r| r[2 + i].unwrap_or(f64::NAN)).collect(),
        })
        .collect();
    line_plot("sphere coordinates along the run", "t", &ts, &series)
}
