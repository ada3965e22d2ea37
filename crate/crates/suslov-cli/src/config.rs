//! JSON run configuration: parsing, validation, and construction of the
//! library objects a run needs.
//!
//! A configuration is a single JSON document.  Matrices are nested arrays
//! (row-major); the frame accepts the shorthand `"identity"`.  Every
//! validation error names the offending field so a bad file can be fixed
//! without reading source code.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use suslov::dynamics::{FullState, ReducedState};
use suslov::{InertiaSpec, PotentialSpec, Rotation};

/// A complete description of one integration run.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Ambient dimension n ≥ 3 of the rotating frame.
    pub n: usize,
    pub inertia: InertiaConfig,
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    /// Reserved for seeded extensions; echoed into reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Inertia: either principal moments or an explicit pair of SPD blocks
/// (the constrained-span block `j` and the symmetry block `k`).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InertiaConfig {
    Physical(Vec<f64>),
    Block { j: Vec<Vec<f64>>, k: Vec<Vec<f64>> },
}

/// Potential selection, mirroring the library's built-in family.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Kharlamova { c: Vec<f64> },
    KlebshTisserand { b: Vec<f64> },
    Combined { c: Vec<f64>, b: Vec<f64> },
    LagrangeTop { epsilon: f64 },
}

/// Initial data: a full frame state or a point of the reduced sphere system.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Full { g: FrameConfig, omega: Vec<f64> },
    Reduced { q: Vec<f64>, p: Vec<f64> },
}

/// The starting frame: `"identity"` or an explicit n×n rotation matrix.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum FrameConfig {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_true")]
    pub reproject: bool,
}

fn default_record_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// Output artifacts; absent entries are simply not written.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitors_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_svg: Option<String>,
}

/// The initial state after construction, tagged by which system it feeds.
pub enum BuiltInitial {
    Full(FullState<f64>),
    Reduced(ReducedState<f64>),
}

impl RunConfig {
    /// Reads and fully validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks with field-named messages.  Numeric/PD validation
    /// is delegated to the constructors in [`Self::build_inertia`] etc.
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 3 {
            return Err(format!("n: must be at least 3 (got {})", self.n));
        }
        if !(self.integrator.dt > 0.0 && self.integrator.dt.is_finite()) {
            return Err(format!(
                "integrator.dt: must be a positive finite number (got {})",
                self.integrator.dt
            ));
        }
        if self.integrator.steps == 0 {
            return Err("integrator.steps: must be at least 1".to_string());
        }
        if self.integrator.record_every == 0 {
            return Err("integrator.record_every: must be at least 1".to_string());
        }
        let n = self.n;
        match &self.inertia {
            InertiaConfig::Physical(m) if m.len() != n => {
                return Err(format!(
                    "inertia.physical: expected {} moments, got {}",
                    n,
                    m.len()
                ));
            }
            InertiaConfig::Block { j, k } => {
                let d = n - 1;
                let s = (n - 1) * (n - 2) / 2;
                if j.len() != d || j.iter().any(|row| row.len() != d) {
                    return Err(format!("inertia.block.j: expected a {d}x{d} matrix"));
                }
                if k.len() != s || k.iter().any(|row| row.len() != s) {
                    return Err(format!("inertia.block.k: expected a {s}x{s} matrix"));
                }
            }
            _ => {}
        }
        match &self.potential {
            PotentialConfig::Kharlamova { c } if c.len() != n - 1 => {
                return Err(format!(
                    "potential.c: expected {} coefficients, got {}",
                    n - 1,
                    c.len()
                ));
            }
            PotentialConfig::KlebshTisserand { b } if b.len() != n => {
                return Err(format!(
                    "potential.b: expected {} coefficients, got {}",
                    n,
                    b.len()
                ));
            }
            PotentialConfig::Combined { c, b } => {
                if c.len() != n - 1 {
                    return Err(format!(
                        "potential.c: expected {} coefficients, got {}",
                        n - 1,
                        c.len()
                    ));
                }
                if b.len() != n {
                    return Err(format!(
                        "potential.b: expected {} coefficients, got {}",
                        n,
                        b.len()
                    ));
                }
            }
            _ => {}
        }
        match &self.initial {
            InitialConfig::Full { g, omega } => {
                if omega.len() != n - 1 {
                    return Err(format!(
                        "initial.omega: expected {} coefficients, got {}",
                        n - 1,
                        omega.len()
                    ));
                }
                match g {
                    FrameConfig::Named(name) if name != "identity" => {
                        return Err(format!(
                            "initial.g: unknown frame name {name:?} (only \"identity\" is recognized)"
                        ));
                    }
                    FrameConfig::Matrix(rows)
                        if rows.len() != n || rows.iter().any(|row| row.len() != n) =>
                    {
                        return Err(format!("initial.g: expected a {n}x{n} matrix"));
                    }
                    _ => {}
                }
            }
            InitialConfig::Reduced { q, p } => {
                if q.len() != n {
                    return Err(format!("initial.q: expected {} components, got {}", n, q.len()));
                }
                if p.len() != n - 1 {
                    return Err(format!(
                        "initial.p: expected {} components, got {}",
                        n - 1,
                        p.len()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn build_inertia(&self) -> Result<InertiaSpec<f64>, String> {
        match &self.inertia {
            InertiaConfig::Physical(m) => {
                InertiaSpec::physical(m).map_err(|e| format!("inertia.physical: {e}"))
            }
            InertiaConfig::Block { j, k } => {
                let jm = DMatrix::from_fn(j.len(), j.len(), |r, c| j[r][c]);
                let km = DMatrix::from_fn(k.len(), k.len(), |r, c| k[r][c]);
                InertiaSpec::block(jm, km).map_err(|e| format!("inertia.block: {e}"))
            }
        }
    }

    pub fn build_potential(&self) -> Result<PotentialSpec<f64>, String> {
        let pot = match &self.potential {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Kharlamova { c } => PotentialSpec::Kharlamova {
                c: DVector::from_column_slice(c),
            },
            PotentialConfig::KlebshTisserand { b } => PotentialSpec::KlebshTisserand {
                b: DVector::from_column_slice(b),
            },
            PotentialConfig::Combined { c, b } => PotentialSpec::Combined {
                c: DVector::from_column_slice(c),
                b: DVector::from_column_slice(b),
            },
            PotentialConfig::LagrangeTop { epsilon } => {
                PotentialSpec::LagrangeTop { epsilon: *epsilon }
            }
        };
        pot.validate_dim(self.n).map_err(|e| format!("potential: {e}"))?;
        Ok(pot)
    }

    pub fn build_initial(&self) -> Result<BuiltInitial, String> {
        match &self.initial {
            InitialConfig::Full { g, omega } => {
                let rot = match g {
                    FrameConfig::Named(_) => Rotation::identity(self.n),
                    FrameConfig::Matrix(rows) => {
                        let m = DMatrix::from_fn(self.n, self.n, |r, c| rows[r][c]);
                        Rotation::from_matrix(m).map_err(|e| format!("initial.g: {e}"))?
                    }
                };
                let w = DVector::from_column_slice(omega);
                FullState::new(rot, w)
                    .map(BuiltInitial::Full)
                    .map_err(|e| format!("initial: {e}"))
            }
            InitialConfig::Reduced { q, p } => ReducedState::new(
                DVector::from_column_slice(q),
                DVector::from_column_slice(p),
            )
            .map(BuiltInitial::Reduced)
            .map_err(|e| format!("initial: {e}")),
        }
    }
}
