//! The `scan` command: tabulate the topology classifier over a grid of
//! actions.  Rows are evaluated independently (optionally in parallel) and
//! written in deterministic row-major order, last axis fastest.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Deserialize;
use suslov::integrable::{classify_topology, kappa_vector};
use suslov::{InertiaSpec, PotentialSpec};

use crate::classify::tag_string;
use crate::Failure;

/// Grid specification: one list of sample values per action axis.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub inertia: Vec<f64>,
    pub b: Vec<f64>,
    pub c_axes: Vec<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-9
}

pub fn run(grid_path: &Path, out: Option<&Path>, serial: bool) -> Result<(), Failure> {
    let text = std::fs::read_to_string(grid_path)
        .map_err(|e| Failure::Config(format!("cannot read grid {}: {e}", grid_path.display())))?;
    let grid: GridSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("invalid grid: {e}")))?;

    let n = grid.inertia.len();
    if n < 3 {
        return Err(Failure::Config(format!(
            "inertia: need at least 3 moments, got {n}"
        )));
    }
    if grid.b.len() != n {
        return Err(Failure::Config(format!(
            "b: expected {n} coefficients to match inertia, got {}",
            grid.b.len()
        )));
    }
    if grid.c_axes.len() != n - 1 {
        return Err(Failure::Config(format!(
            "c_axes: expected {} axes, got {}",
            n - 1,
            grid.c_axes.len()
        )));
    }
    for (i, axis) in grid.c_axes.iter().enumerate() {
        if axis.is_empty() {
            return Err(Failure::Config(format!("c_axes[{i}]: axis is empty")));
        }
        if axis.iter().any(|x| !x.is_finite()) {
            return Err(Failure::Config(format!(
                "c_axes[{i}]: every value must be finite"
            )));
        }
    }

    let spec = InertiaSpec::physical(&grid.inertia)
        .map_err(|e| Failure::Config(format!("inertia: {e}")))?;
    let pot = PotentialSpec::KlebshTisserand {
        b: DVector::from_column_slice(&grid.b),
    };
    let kappa = kappa_vector(&spec, &pot)
        .map_err(|e| Failure::Config(format!("cannot form the strengths: {e}")))?;
    for (i, k) in kappa.iter().enumerate() {
        if !(*k > 0.0) {
            return Err(Failure::Config(format!(
                "kappa_{} = {k} must be positive: each b_i (i < n) must exceed b_n",
                i + 1
            )));
        }
    }
    let kappa_slice: Vec<f64> = kappa.iter().copied().collect();

    let m = n - 1;
    let total: usize = grid.c_axes.iter().map(|a| a.len()).product();
    // Decode a flat index into one grid point, last axis fastest.
    let point = |mut idx: usize| -> Vec<f64> {
        let mut c = vec![0.0; m];
        for axis in (0..m).rev() {
            let len = grid.c_axes[axis].len();
            c[axis] = grid.c_axes[axis][idx % len];
            idx /= len;
        }
        c
    };
    let row = |idx: usize| -> (Vec<f64>, String) {
        let c = point(idx);
        let tag = tag_string(&classify_topology(&c, &kappa_slice, grid.tol));
        (c, tag)
    };
    let rows: Vec<(Vec<f64>, String)> = if serial {
        (0..total).map(row).collect()
    } else {
        (0..total).into_par_iter().map(row).collect()
    };

    let mut csv_out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_out);
        let mut head: Vec<String> = (1..=m).map(|i| format!("c_{i}")).collect();
        head.push("tag".to_string());
        w.write_record(&head)
            .map_err(|e| Failure::Config(format!("cannot write CSV header: {e}")))?;
        for (c, tag) in &rows {
            let mut record: Vec<String> = c.iter().map(|x| format!("{x:.16e}")).collect();
            record.push(tag.clone());
            w.write_record(&record)
                .map_err(|e| Failure::Config(format!("cannot write CSV row: {e}")))?;
        }
        w.flush()
            .map_err(|e| Failure::Config(format!("cannot flush CSV: {e}")))?;
    }
    match out {
        Some(path) => std::fs::write(path, &csv_out)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&csv_out)
            .map_err(|e| Failure::Config(format!("cannot write to stdout: {e}")))?,
    }
    Ok(())
}
