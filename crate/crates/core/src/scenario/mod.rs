//! Scenario documents: a TOML schema binding a mesh (built-in generator or
//! external file), material parameters, prescribed-displacement histories,
//! probes, reactions, and sweep/output requests into one runnable job.

mod builtin;

pub use builtin::{gen_full_cycle, gen_mixed_mode, gen_opening_mode};

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::fem::{
    DirichletHistory, Mesh, ProbeDef, ProbeKind, ReactionDef, SolverConfig,
};
use crate::material::{MaterialParams, ParamsError};
use crate::path::{PathError, PiecewiseLinear};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("mesh: {0}")]
    Mesh(#[from] crate::fem::MeshError),
    #[error("material: {0}")]
    Material(#[from] ParamsError),
    #[error("history: {0}")]
    History(#[from] PathError),
    #[error("unknown builtin mesh {0:?}")]
    UnknownBuiltin(String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Template shapes for the prescribed-displacement amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// One ramp to `u`: amplitudes `[u]`.
    Monotonic,
    /// Ramp, unload to zero, reramp higher, unload, final reramp:
    /// amplitudes `[u1, u2, u3]`.
    TwoUnload,
    /// Two tension excursions each unloaded through zero into the same
    /// compressive hold, closing back at zero: amplitudes `[u1, uc, u2]`.
    FullReversal,
}

#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub amplitudes: Vec<f64>,
}

impl ProtocolSpec {
    /// The amplitude value sequence the template expands to.
    pub fn values(&self) -> Result<Vec<f64>, ScenarioError> {
        let a = &self.amplitudes;
        if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("protocol amplitudes must be positive"));
        }
        let need = |n: usize| -> Result<(), ScenarioError> {
            if a.len() == n {
                Ok(())
            } else {
                Err(invalid(format!(
                    "protocol kind needs {n} amplitudes, got {}",
                    a.len()
                )))
            }
        };
        Ok(match self.kind {
            ProtocolKind::Monotonic => {
                need(1)?;
                vec![0.0, a[0]]
            }
            ProtocolKind::TwoUnload => {
                need(3)?;
                vec![0.0, a[0], 0.0, a[1], 0.0, a[2]]
            }
            ProtocolKind::FullReversal => {
                need(3)?;
                vec![0.0, a[0], -a[1], a[2], -a[1], 0.0]
            }
        })
    }

    pub fn amplitude(&self) -> Result<PiecewiseLinear, ScenarioError> {
        Ok(PiecewiseLinear::through_values(&self.values()?)?)
    }
}

/// A set driven by the scenario protocol: the prescribed value is the
/// protocol amplitude times `sign`, so 0 holds the set fixed.
#[derive(Debug, Clone)]
pub struct DrivenSet {
    pub set: String,
    pub comp: usize,
    pub sign: f64,
}

/// Average of a named reaction over a cross-section area, reported as a
/// stress alongside the raw reaction.
#[derive(Debug, Clone)]
pub struct AverageStress {
    pub reaction: String,
    pub area: f64,
}

/// Everything a built-in generator defines: mesh with named sets, the sets
/// the protocol drives, probes, reactions, and benchmark defaults.
#[derive(Debug)]
pub struct Generated {
    pub mesh: Mesh,
    pub drives: Vec<DrivenSet>,
    pub probes: Vec<ProbeDef>,
    pub reactions: Vec<ReactionDef>,
    pub params: MaterialParams,
    pub sweep: Vec<f64>,
    pub protocol: ProtocolSpec,
    pub solver: SolverConfig,
    pub average_stress: Option<AverageStress>,
}

/// A fully resolved scenario, ready to run once a critical-damage value is
/// picked from `sweep`.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub sweep: Vec<f64>,
    pub bcs: Vec<DirichletHistory>,
    pub probes: Vec<ProbeDef>,
    pub reactions: Vec<ReactionDef>,
    pub solver: SolverConfig,
    /// Schedule indices at which field dumps are requested; empty means
    /// only the final state.
    pub field_steps: Vec<usize>,
    pub average_stress: Option<AverageStress>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    mesh: MeshDoc,
    material: Option<MaterialOverlay>,
    sweep_critical_damage: Option<Vec<f64>>,
    protocol: Option<ProtocolDoc>,
    solver: Option<SolverDoc>,
    output: Option<OutputDoc>,
    #[serde(default)]
    dirichlet: Vec<DirichletDoc>,
    #[serde(default)]
    probes: Vec<ProbeDoc>,
    #[serde(default)]
    reactions: Vec<ReactionDoc>,
    report: Option<ReportDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    builtin: Option<String>,
    path: Option<String>,
    refinement: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialOverlay {
    young: Option<f64>,
    poisson: Option<f64>,
    yield_stress: Option<f64>,
    plastic_damage_rate: Option<f64>,
    crack_damage_rate: Option<f64>,
    critical_damage: Option<f64>,
}

impl MaterialOverlay {
    fn over(&self, base: &MaterialParams) -> Result<MaterialParams, ParamsError> {
        MaterialParams::new(
            self.young.unwrap_or(base.young()),
            self.poisson.unwrap_or(base.poisson()),
            self.yield_stress.unwrap_or(base.yield_stress()),
            self.plastic_damage_rate
                .unwrap_or(base.plastic_damage_rate()),
            self.crack_damage_rate.unwrap_or(base.crack_damage_rate()),
            self.critical_damage.unwrap_or(base.critical_damage()),
        )
    }

    fn complete(&self) -> Result<MaterialParams, ScenarioError> {
        let req = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| invalid(format!("material.{name} is required with an external mesh")))
        };
        Ok(MaterialParams::new(
            req(self.young, "young")?,
            req(self.poisson, "poisson")?,
            req(self.yield_stress, "yield_stress")?,
            req(self.plastic_damage_rate, "plastic_damage_rate")?,
            req(self.crack_damage_rate, "crack_damage_rate")?,
            self.critical_damage.unwrap_or(1.0),
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolDoc {
    kind: ProtocolKind,
    amplitudes: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverDoc {
    steps: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    cut: Option<f64>,
    max_cuts: Option<usize>,
}

impl SolverDoc {
    fn over(&self, base: &SolverConfig) -> SolverConfig {
        SolverConfig {
            steps: self.steps.unwrap_or(base.steps),
            tol: self.tol.unwrap_or(base.tol),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            cut: self.cut.unwrap_or(base.cut),
            max_cuts: self.max_cuts.unwrap_or(base.max_cuts),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    field_steps: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirichletDoc {
    set: String,
    comp: usize,
    knots: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeDoc {
    name: String,
    kind: String,
    set_a: String,
    set_b: String,
    comp: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionDoc {
    name: String,
    set: String,
    comp: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportDoc {
    average_stress_reaction: String,
    average_stress_area: f64,
}

fn single_node(mesh: &Mesh, set: &str) -> Result<usize, ScenarioError> {
    let nodes = mesh.set(set)?;
    if nodes.len() != 1 {
        return Err(invalid(format!(
            "set {set:?} must contain exactly one node for a node-pair probe, has {}",
            nodes.len()
        )));
    }
    Ok(nodes[0])
}

fn resolve_probe(doc: &ProbeDoc, mesh: &Mesh) -> Result<ProbeDef, ScenarioError> {
    if doc.comp > 1 {
        return Err(invalid(format!("probe {:?}: component {} out of range", doc.name, doc.comp)));
    }
    let kind = match doc.kind.as_str() {
        "node_pair_abs" => ProbeKind::NodePairAbs {
            a: single_node(mesh, &doc.set_a)?,
            b: single_node(mesh, &doc.set_b)?,
            comp: doc.comp,
        },
        "line_avg_diff" => {
            mesh.set(&doc.set_a)?;
            mesh.set(&doc.set_b)?;
            ProbeKind::LineAvgDiff {
                set_a: doc.set_a.clone(),
                set_b: doc.set_b.clone(),
                comp: doc.comp,
            }
        }
        other => {
            return Err(invalid(format!(
                "probe {:?}: unknown kind {other:?}",
                doc.name
            )))
        }
    };
    Ok(ProbeDef {
        name: doc.name.clone(),
        kind,
    })
}

fn scaled(base: &PiecewiseLinear, sign: f64) -> PiecewiseLinear {
    if sign == 0.0 {
        return PiecewiseLinear::zero();
    }
    PiecewiseLinear::new(base.knots().iter().map(|&(t, v)| (t, v * sign)).collect())
        .expect("scaling keeps knot times")
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_doc_str(&text, base)
    }

    pub fn from_doc_str(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = toml::from_str(text)?;
        resolve(doc, base_dir)
    }
}

fn resolve(doc: ScenarioDoc, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    if doc.name.is_empty() {
        return Err(invalid("scenario name must not be empty"));
    }
    let scenario = match (&doc.mesh.builtin, &doc.mesh.path) {
        (Some(builtin), None) => resolve_builtin(&doc, builtin)?,
        (None, Some(rel)) => resolve_external(&doc, &base_dir.join(rel))?,
        _ => {
            return Err(invalid(
                "mesh needs exactly one of `builtin` or `path`",
            ))
        }
    };
    for v in &scenario.sweep {
        if !(*v > 0.0 && *v <= 1.0) {
            return Err(invalid(format!(
                "sweep value {v} outside (0, 1]"
            )));
        }
    }
    if scenario.sweep.is_empty() {
        return Err(invalid("sweep must not be empty"));
    }
    if let Some(avg) = &scenario.average_stress {
        if !(avg.area > 0.0) || !avg.area.is_finite() {
            return Err(invalid("average-stress area must be positive"));
        }
        if !scenario.reactions.iter().any(|r| r.name == avg.reaction) {
            return Err(invalid(format!(
                "average-stress reaction {:?} is not defined",
                avg.reaction
            )));
        }
    }
    Ok(scenario)
}

fn resolve_builtin(doc: &ScenarioDoc, builtin: &str) -> Result<Scenario, ScenarioError> {
    let refinement = doc.mesh.refinement.unwrap_or(2);
    let gen = match builtin {
        "opening_mode" => gen_opening_mode(refinement)?,
        "mixed_mode" => gen_mixed_mode(refinement)?,
        "full_cycle" => gen_full_cycle(refinement)?,
        other => return Err(ScenarioError::UnknownBuiltin(other.to_string())),
    };
    if !doc.dirichlet.is_empty() {
        return Err(invalid(
            "dirichlet entries cannot be combined with a builtin mesh; use [protocol]",
        ));
    }
    let params = match &doc.material {
        Some(overlay) => overlay.over(&gen.params)?,
        None => gen.params,
    };
    let protocol = match &doc.protocol {
        Some(p) => ProtocolSpec {
            kind: p.kind,
            amplitudes: p.amplitudes.clone(),
        },
        None => gen.protocol,
    };
    let amplitude = protocol.amplitude()?;
    let bcs = gen
        .drives
        .iter()
        .map(|d| DirichletHistory {
            set: d.set.clone(),
            comp: d.comp,
            amplitude: scaled(&amplitude, d.sign),
        })
        .collect();
    let mut probes = gen.probes;
    for p in &doc.probes {
        probes.push(resolve_probe(p, &gen.mesh)?);
    }
    let mut reactions = gen.reactions;
    for r in &doc.reactions {
        gen.mesh.set(&r.set)?;
        reactions.push(ReactionDef {
            name: r.name.clone(),
            set: r.set.clone(),
            comp: r.comp,
        });
    }
    Ok(Scenario {
        name: doc.name.clone(),
        mesh: gen.mesh,
        params,
        sweep: doc
            .sweep_critical_damage
            .clone()
            .unwrap_or(gen.sweep),
        bcs,
        probes,
        reactions,
        solver: doc
            .solver
            .as_ref()
            .map(|s| s.over(&gen.solver))
            .unwrap_or(gen.solver),
        field_steps: doc
            .output
            .as_ref()
            .map(|o| o.field_steps.clone())
            .unwrap_or_default(),
        average_stress: match &doc.report {
            Some(r) => Some(AverageStress {
                reaction: r.average_stress_reaction.clone(),
                area: r.average_stress_area,
            }),
            None => gen.average_stress,
        },
    })
}

fn resolve_external(doc: &ScenarioDoc, mesh_path: &Path) -> Result<Scenario, ScenarioError> {
    if doc.mesh.refinement.is_some() {
        return Err(invalid("refinement applies only to builtin meshes"));
    }
    if doc.protocol.is_some() {
        return Err(invalid(
            "external meshes take explicit dirichlet knots, not a protocol",
        ));
    }
    let text = std::fs::read_to_string(mesh_path).map_err(|source| ScenarioError::Io {
        path: mesh_path.display().to_string(),
        source,
    })?;
    let mesh = Mesh::from_text(&text)?;
    let params = doc
        .material
        .as_ref()
        .unwrap_or(&MaterialOverlay::default())
        .complete()?;
    if doc.dirichlet.is_empty() {
        return Err(invalid("an external mesh needs at least one dirichlet entry"));
    }
    let bcs = doc
        .dirichlet
        .iter()
        .map(|d| -> Result<DirichletHistory, ScenarioError> {
            mesh.set(&d.set)?;
            Ok(DirichletHistory {
                set: d.set.clone(),
                comp: d.comp,
                amplitude: PiecewiseLinear::new(
                    d.knots.iter().map(|&[t, v]| (t, v)).collect(),
                )?,
            })
        })
        .collect::<Result<_, _>>()?;
    let probes = doc
        .probes
        .iter()
        .map(|p| resolve_probe(p, &mesh))
        .collect::<Result<_, _>>()?;
    let reactions = doc
        .reactions
        .iter()
        .map(|r| -> Result<ReactionDef, ScenarioError> {
            mesh.set(&r.set)?;
            Ok(ReactionDef {
                name: r.name.clone(),
                set: r.set.clone(),
                comp: r.comp,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Scenario {
        name: doc.name.clone(),
        sweep: doc
            .sweep_critical_damage
            .clone()
            .unwrap_or_else(|| vec![params.critical_damage()]),
        mesh,
        params,
        bcs,
        probes,
        reactions,
        solver: doc
            .solver
            .as_ref()
            .map(|s| s.over(&SolverConfig::default()))
            .unwrap_or_default(),
        field_steps: doc
            .output
            .as_ref()
            .map(|o| o.field_steps.clone())
            .unwrap_or_default(),
        average_stress: doc.report.as_ref().map(|r| AverageStress {
            reaction: r.average_stress_reaction.clone(),
            area: r.average_stress_area,
        }),
    })
}
