//! Trajectory tables and their CSV serialization.
//!
//! One fixed column layout serves both propagators:
//!
//! ```text
//! t, tau, q_1..q_n, omega_1n..omega_{n-1}n, p_1..p_{n-1}, energy, f_1..f_{n-1}
//! ```
//!
//! Cells a run cannot fill (τ before it is attached, the fᵢ when the
//! inertia/potential pair carries no quadratic first-integral family) are
//! written empty and read back as `None`.  Numbers are written with 17
//! significant digits, which round-trips `f64` exactly.

use std::io;
use std::path::Path;

use suslov::dynamics::{FullState, ReducedState, Trajectory};
use suslov::InertiaSpec;

/// An in-memory trajectory table with the fixed column layout for
/// dimension `n`.  `rows[k][col]` is `None` for an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub n: usize,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Column names for dimension `n`, in on-disk order.
pub fn header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "tau".to_string()];
    for i in 1..=n {
        cols.push(format!("q_{i}"));
    }
    for i in 1..n {
        cols.push(format!("omega_{i}n"));
    }
    for i in 1..n {
        cols.push(format!("p_{i}"));
    }
    cols.push("energy".to_string());
    for i in 1..n {
        cols.push(format!("f_{i}"));
    }
    cols
}

/// Number of columns for dimension `n`.
pub fn width(n: usize) -> usize {
    4 * n
}

impl TrajectoryTable {
    /// Rows from a reduced-system run.  The frame-rate columns hold
    /// ω = −J⁻¹p; the fᵢ come from the run's monitors when present.
    pub fn from_reduced(
        traj: &Trajectory<f64, ReducedState<f64>>,
        inertia: &InertiaSpec<f64>,
    ) -> Self {
        let n = inertia.dim();
        let rows = (0..traj.len())
            .map(|k| {
                let s = &traj.states[k];
                let omega = -inertia.apply_inverse_metric(s.p());
                let mut row: Vec<Option<f64>> = Vec::with_capacity(width(n));
                row.push(Some(traj.times[k]));
                row.push(traj.taus.as_ref().map(|taus| taus[k]));
                for i in 0..n {
                    row.push(Some(s.q_full()[i]));
                }
                for i in 0..n - 1 {
                    row.push(Some(omega[i]));
                }
                for i in 0..n - 1 {
                    row.push(Some(s.p()[i]));
                }
                row.push(Some(traj.monitors.energy[k]));
                for i in 0..n - 1 {
                    row.push(traj.monitors.integrals.as_ref().map(|f| f[k][i]));
                }
                row
            })
            .collect();
        Self { n, rows }
    }

    /// Rows from a full-system run.  𝐪 is the frame's Poisson vector and
    /// the momenta are p = −Jω.
    pub fn from_full(traj: &Trajectory<f64, FullState<f64>>, inertia: &InertiaSpec<f64>) -> Self {
        let n = inertia.dim();
        let rows = (0..traj.len())
            .map(|k| {
                let s = &traj.states[k];
                let q = s.rotation().poisson_vector();
                let p = -inertia.apply_metric(s.omega());
                let mut row: Vec<Option<f64>> = Vec::with_capacity(width(n));
                row.push(Some(traj.times[k]));
                row.push(traj.taus.as_ref().map(|taus| taus[k]));
                for i in 0..n {
                    row.push(Some(q[i]));
                }
                for i in 0..n - 1 {
                    row.push(Some(s.omega()[i]));
                }
                for i in 0..n - 1 {
                    row.push(Some(p[i]));
                }
                row.push(Some(traj.monitors.energy[k]));
                for i in 0..n - 1 {
                    row.push(traj.monitors.integrals.as_ref().map(|f| f[k][i]));
                }
                row
            })
            .collect();
        Self { n, rows }
    }
}

/// Writes a table as RFC-4180 CSV ('.' decimal separator, header row first).
pub fn write_csv<W: io::Write>(out: W, table: &TrajectoryTable) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(table.n))
        .map_err(|e| format!("cannot write CSV header: {e}"))?;
    for row in &table.rows {
        let record: Vec<String> = row
            .iter()
            .map(|cell| match cell {
                Some(x) => format!("{x:.16e}"),
                None => String::new(),
            })
            .collect();
        w.write_record(&record)
            .map_err(|e| format!("cannot write CSV row: {e}"))?;
    }
    w.flush().map_err(|e| format!("cannot flush CSV: {e}"))
}

/// Writes a table to a file path.
pub fn write_csv_file(path: &Path, table: &TrajectoryTable) -> Result<(), String> {
    let file = std::fs::File::create(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    write_csv(io::BufWriter::new(file), table)
}

/// Reads a table back, inferring `n` from the header and insisting the
/// header matches the fixed layout exactly.
pub fn read_csv<R: io::Read>(input: R) -> Result<TrajectoryTable, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head = r
        .headers()
        .map_err(|e| format!("cannot read CSV header: {e}"))?
        .clone();
    let cols = head.len();
    if cols % 4 != 0 || cols < 12 {
        return Err(format!(
            "unexpected column count {cols}: the layout has 4n columns, n >= 3"
        ));
    }
    let n = cols / 4;
    let expected = header(n);
    for (k, name) in head.iter().enumerate() {
        if name != expected[k] {
            return Err(format!(
                "unexpected column {k}: got {name:?}, expected {:?}",
                expected[k]
            ));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| format!("cannot read CSV row {line}: {e}"))?;
        if record.len() != cols {
            return Err(format!(
                "row {line}: expected {cols} cells, got {}",
                record.len()
            ));
        }
        let mut row = Vec::with_capacity(cols);
        for (k, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                row.push(None);
            } else {
                let x: f64 = cell
                    .parse()
                    .map_err(|e| format!("row {line}, column {k}: bad number {cell:?}: {e}"))?;
                row.push(Some(x));
            }
        }
        rows.push(row);
    }
    Ok(TrajectoryTable { n, rows })
}

/// Reads a table from a file path.
pub fn read_csv_file(path: &Path) -> Result<TrajectoryTable, String> {
    let file = std::fs::File::open(path)
        .map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    read_csv(io::BufReader::new(file))
}
