//! The `classify` command: decide the topology of a common level set
//! {fᵢ = cᵢ} from principal moments, quadratic coefficients, and actions.

use std::path::Path;

use nalgebra::DVector;
use serde_json::json;
use suslov::integrable::{
    classify_topology, kappa_vector, ActionBand, TopologyClass, TopologyTag,
};
use suslov::{InertiaSpec, PotentialSpec};

use crate::Failure;

pub fn run(
    inertia: &[f64],
    b: &[f64],
    c: &[f64],
    tol: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let n = inertia.len();
    if n < 3 {
        return Err(Failure::Config(format!(
            "--inertia: need at least 3 moments, got {n}"
        )));
    }
    if b.len() != n {
        return Err(Failure::Config(format!(
            "--b: expected {n} coefficients to match --inertia, got {}",
            b.len()
        )));
    }
    if c.len() != n - 1 {
        return Err(Failure::Config(format!(
            "--c: expected {} actions, got {}",
            n - 1,
            c.len()
        )));
    }
    let spec = InertiaSpec::physical(inertia)
        .map_err(|e| Failure::Config(format!("--inertia: {e}")))?;
    let pot = PotentialSpec::KlebshTisserand {
        b: DVector::from_column_slice(b),
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
    let class = classify_topology(c, &kappa_slice, tol);
    let report = json!({
        "command": "classify",
        "c": c,
        "kappa": kappa_slice,
        "tol": tol,
        "tag": tag_json(&class.tag),
        "note": tag_note(&class.tag),
        "ratios": class.ratios,
        "ratio_sum": class.ratio_sum,
        "bands": class.bands.iter().map(|b| band_str(b)).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text.as_bytes())
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn band_str(b: &ActionBand) -> &'static str {
    match b {
        ActionBand::Zero => "zero",
        ActionBand::Interior => "interior",
        ActionBand::Above => "above",
        ActionBand::Tie => "tie",
    }
}

pub fn tag_json(tag: &TopologyTag) -> serde_json::Value {
    match tag {
        TopologyTag::InteriorTori { dim } => json!({"kind": "interior_tori", "dim": dim}),
        TopologyTag::HandledSurface => json!({"kind": "handled_surface"}),
        TopologyTag::SpheresDisjoint { count } => {
            json!({"kind": "spheres_disjoint", "count": count})
        }
        TopologyTag::CylinderTori { torus_dim } => {
            json!({"kind": "cylinder_tori", "torus_dim": torus_dim})
        }
        TopologyTag::Degenerate { reason } => json!({"kind": "degenerate", "reason": reason}),
    }
}

/// A human-readable description of the manifold the tag names.
pub fn tag_note(tag: &TopologyTag) -> String {
    match tag {
        TopologyTag::InteriorTori { dim } => format!(
            "a disjoint pair of {dim}-dimensional tori, one in each hemisphere"
        ),
        TopologyTag::HandledSurface => {
            "a connected sphere with handles (genus five when the ball is three-dimensional)"
                .to_string()
        }
        TopologyTag::SpheresDisjoint { count } => {
            format!("a disjoint union of {count} spheres")
        }
        TopologyTag::CylinderTori { torus_dim } => format!(
            "two {torus_dim}-dimensional tori, assembled from cylinders crossing the equator"
        ),
        TopologyTag::Degenerate { reason } => {
            format!("a bifurcation value or an uncovered pattern: {reason}")
        }
    }
}

/// Compact single-cell form of a tag, used by the `scan` CSV.
pub fn tag_string(class: &TopologyClass<f64>) -> String {
    match &class.tag {
        TopologyTag::InteriorTori { dim } => format!("interior_tori(dim={dim})"),
        TopologyTag::HandledSurface => "handled_surface".to_string(),
        TopologyTag::SpheresDisjoint { count } => format!("spheres_disjoint(count={count})"),
        TopologyTag::CylinderTori { torus_dim } => {
            format!("cylinder_tori(torus_dim={torus_dim})")
        }
        TopologyTag::Degenerate { reason } => format!("degenerate({reason})"),
    }
}
