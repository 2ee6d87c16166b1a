//! Displacement-controlled Newton solver over prescribed-displacement
//! histories, with transactional quadrature-state commits and step cutting.

use std::collections::BTreeSet;

use thiserror::Error;

use super::band::{reverse_cuthill_mckee, BandMatrix};
use super::element::{
    add_gp_force, add_gp_stiffness, element_geometry, gp_strain, ElementGeom, MAX_ELEM_NODES,
};
use super::mesh::{Mesh, MeshError};
use crate::material::{
    tangent_numeric, update_stress, MaterialParams, MaterialState, Regime, UpdateError,
};
use crate::path::PiecewiseLinear;
use crate::tensor::SymTensor2;

/// Diagonal floor, relative to Young's modulus, added where the material
/// tangent has a zero row (frozen-stress crack regime). Assembly only; the
/// residual always uses the true stress, so converged solutions are
/// unaffected.
pub const TANGENT_FLOOR_REL: f64 = 1.0e-6;

/// Rows below this fraction of Young's modulus count as zero for the floor.
const ZERO_ROW_REL: f64 = 1.0e-12;

/// Floor on the convergence reference, as a fraction of the largest
/// first-iteration residual seen over the run so far. A step whose own
/// initial imbalance is far below the run's force scale (a relaxed or
/// just-unloaded structure) would otherwise chase a purely relative
/// criterion down into round-off; such a step counts as converged once its
/// residual is negligible against the forces the run actually carried.
const RUN_SCALE_FLOOR: f64 = 1.0e-2;

/// Number of line-search failures (no candidate decreased the residual)
/// after which the attempt switches from the consistent tangent to the
/// damaged elastic secant as its iteration matrix.
const SECANT_AFTER_REJECTS: usize = 2;

/// Secondary acceptance threshold, relative to the convergence reference,
/// for an attempt whose residual has stopped improving. Crack formation in
/// a brittle parameter range releases more energy than the neighborhood can
/// absorb within one displacement step (snap-back): no equilibrium exists on
/// the local branch and the residual bottoms out at a small nonzero floor
/// regardless of step cutting. Such a state is committed, flagged `relaxed`,
/// once [`STALL_PATIENCE`] iterations bring no improvement, and the next
/// step re-equilibrates past the transition.
pub const STALL_ACCEPT_REL: f64 = 5.0e-3;

/// Iterations without a 1% residual improvement before an attempt counts as
/// stalled.
const STALL_PATIENCE: usize = 6;

/// Lower bound on the secant stiffness scale so fully damaged points keep
/// an invertible contribution.
const SECANT_STIFFNESS_MIN: f64 = 1.0e-3;

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("node {node} dof {comp} is constrained twice")]
    DuplicateConstraint { node: usize, comp: usize },
    #[error("node set {0:?} is empty")]
    EmptySet(String),
    #[error("displacement component must be 0 (x) or 1 (y), got {0}")]
    BadComponent(usize),
    #[error("no constrained dofs; the problem has rigid-body modes")]
    NoConstraints,
    #[error("config: {0}")]
    BadConfig(&'static str),
    #[error(
        "constitutive update failed at element {element} gauss point {gp}, time {time}: {source}"
    )]
    Constitutive {
        element: usize,
        gp: usize,
        time: f64,
        source: UpdateError,
    },
    #[error("no convergence at time {time} after exhausting step cuts: {detail}")]
    NonConvergence { time: f64, detail: String },
    #[error("output sink: {0}")]
    Sink(String),
}

/// Prescribed displacement on one component of a node set, as a function of
/// pseudo-time.
#[derive(Debug, Clone)]
pub struct DirichletHistory {
    pub set: String,
    pub comp: usize,
    pub amplitude: PiecewiseLinear,
}

/// Drives a linear combination of free displacement dofs through a prescribed
/// history, balanced by an unknown point load on another free dof.
///
/// The combination `sum(coeff_i * u[dof_i])` tracks `amplitude`, while the
/// load enters the free equations as `P * load_sign` at `load_dof`, with the
/// scalar `P` solved alongside the displacements (one bordered row,
/// eliminated with a second back-substitution per iteration). Driving a
/// relative opening this way keeps a softening structure on its equilibrium
/// branch where the load-point response snaps back and a nodal prescribed
/// displacement would find no equilibrium at all.
#[derive(Debug, Clone)]
pub struct IndirectDrive {
    /// Global dof and coefficient of each combination term.
    pub terms: Vec<(usize, f64)>,
    /// Global dof that carries the unknown load.
    pub load_dof: usize,
    pub load_sign: f64,
    pub amplitude: PiecewiseLinear,
}

#[derive(Debug, Clone)]
pub enum ProbeKind {
    /// Absolute relative displacement of a node pair in one component.
    NodePairAbs { a: usize, b: usize, comp: usize },
    /// Difference of set-averaged displacements, signed.
    LineAvgDiff {
        set_a: String,
        set_b: String,
        comp: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ProbeDef {
    pub name: String,
    pub kind: ProbeKind,
}

/// Sum of internal forces over a node set in one component.
#[derive(Debug, Clone)]
pub struct ReactionDef {
    pub name: String,
    pub set: String,
    pub comp: usize,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub cut: f64,
    pub max_cuts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steps: 20,
            tol: 1.0e-6,
            max_iter: 25,
            cut: 0.5,
            max_cuts: 8,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), FemError> {
        if self.steps == 0 {
            return Err(FemError::BadConfig("steps must be positive"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(FemError::BadConfig("tolerance must lie in (0, 1)"));
        }
        if self.max_iter == 0 {
            return Err(FemError::BadConfig("max_iter must be positive"));
        }
        if !(self.cut > 0.0 && self.cut < 1.0) {
            return Err(FemError::BadConfig("cut factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Committed response at one integration point.
#[derive(Debug, Clone, Copy)]
pub struct GpRecord {
    pub state: MaterialState,
    pub stress: SymTensor2,
    pub effective: SymTensor2,
    pub damage: f64,
}

impl GpRecord {
    pub(crate) fn virgin() -> Self {
        GpRecord {
            state: MaterialState::virgin(),
            stress: SymTensor2::ZERO,
            effective: SymTensor2::ZERO,
            damage: 0.0,
        }
    }
}

/// Per-element, per-Gauss-point material history. States mutate only when a
/// step commits.
#[derive(Debug, Clone)]
pub struct QuadStore {
    pub gps: Vec<Vec<GpRecord>>,
}

/// One converged (sub-)step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub time: f64,
    /// Amplitude of each Dirichlet history at `time`, in declaration order.
    pub bc_values: Vec<f64>,
    /// Prescribed value and solved load of the indirect drive, when present.
    pub control: Option<(f64, f64)>,
    pub probes: Vec<f64>,
    pub reactions: Vec<f64>,
    /// Sum of internal forces over all constrained dofs, per component:
    /// the net reaction, which equilibrium drives to the residual scale.
    pub balance: [f64; 2],
    pub iterations: usize,
    pub cuts: usize,
    pub residual: f64,
    pub reference: f64,
    /// True when the step was committed through stalled-iteration acceptance
    /// rather than the strict relative criterion (see [`STALL_ACCEPT_REL`]).
    pub relaxed: bool,
}

/// View of the converged state handed to the output sink after each commit.
pub struct StepContext<'a> {
    pub record: &'a StepRecord,
    /// Index into the schedule when this commit lands on a scheduled time.
    pub scheduled: Option<usize>,
    pub mesh: &'a Mesh,
    pub geoms: &'a [ElementGeom],
    pub displacements: &'a [f64],
    pub store: &'a QuadStore,
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub schedule: Vec<f64>,
}

struct Constraint {
    dof: usize,
    bc: usize,
}

struct System {
    geoms: Vec<ElementGeom>,
    constraints: Vec<Constraint>,
    /// Global dof -> reduced free index.
    reduced: Vec<Option<usize>>,
    n_free: usize,
    bandwidth: usize,
}

fn build_system(mesh: &Mesh, bcs: &[DirichletHistory]) -> Result<System, FemError> {
    mesh.validate()?;
    let n_nodes = mesh.nodes.len();
    let mut geoms = Vec::with_capacity(mesh.elements.len());
    for i in 0..mesh.elements.len() {
        geoms.push(element_geometry(mesh, i)?);
    }

    let mut constrained = vec![false; 2 * n_nodes];
    let mut constraints = Vec::new();
    for (bc_index, bc) in bcs.iter().enumerate() {
        if bc.comp > 1 {
            return Err(FemError::BadComponent(bc.comp));
        }
        let nodes = mesh.set(&bc.set)?;
        if nodes.is_empty() {
            return Err(FemError::EmptySet(bc.set.clone()));
        }
        for &node in nodes {
            let dof = 2 * node + bc.comp;
            if constrained[dof] {
                return Err(FemError::DuplicateConstraint {
                    node,
                    comp: bc.comp,
                });
            }
            constrained[dof] = true;
            constraints.push(Constraint { dof, bc: bc_index });
        }
    }
    if constraints.is_empty() {
        return Err(FemError::NoConstraints);
    }

    // Reverse Cuthill-McKee on the node graph bounds the free-dof band.
    let mut adj = vec![Vec::new(); n_nodes];
    for conn in &mesh.elements {
        let ids = conn.nodes();
        for &a in ids {
            for &b in ids {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    let label = reverse_cuthill_mckee(&adj);
    let mut by_label: Vec<usize> = (0..n_nodes).collect();
    by_label.sort_by_key(|&node| label[node]);

    let mut reduced = vec![None; 2 * n_nodes];
    let mut n_free = 0;
    for &node in &by_label {
        for comp in 0..2 {
            let dof = 2 * node + comp;
            if !constrained[dof] {
                reduced[dof] = Some(n_free);
                n_free += 1;
            }
        }
    }

    let mut bandwidth = 0usize;
    for conn in &mesh.elements {
        let ids = conn.nodes();
        for &a in ids {
            for &b in ids {
                for (ca, cb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    if let (Some(i), Some(j)) = (reduced[2 * a + ca], reduced[2 * b + cb]) {
                        bandwidth = bandwidth.max(i.max(j) - i.min(j));
                    }
                }
            }
        }
    }

    Ok(System {
        geoms,
        constraints,
        reduced,
        n_free,
        bandwidth,
    })
}

/// Pseudo-time grid: the union of every history's knots with a uniform
/// subdivision into `steps` intervals, so protocol corners are always hit
/// exactly.
fn build_schedule(histories: &[&PiecewiseLinear], steps: usize) -> Vec<f64> {
    let t0 = histories
        .iter()
        .map(|a| a.start_time())
        .fold(f64::INFINITY, f64::min);
    let t1 = histories
        .iter()
        .map(|a| a.end_time())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut times: BTreeSet<u64> = BTreeSet::new();
    let mut push = |t: f64| {
        times.insert(t.to_bits());
    };
    for i in 0..=steps {
        push(t0 + (t1 - t0) * i as f64 / steps as f64);
    }
    for amp in histories {
        for &(t, _) in amp.knots() {
            push(t);
        }
    }
    let mut out: Vec<f64> = times.into_iter().map(f64::from_bits).collect();
    out.sort_by(f64::total_cmp);
    out
}

enum AttemptFailure {
    Constitutive {
        element: usize,
        gp: usize,
        source: UpdateError,
    },
    NoConvergence {
        residual: f64,
        reference: f64,
    },
    Singular,
    NonFinite,
}

impl AttemptFailure {
    fn describe(&self) -> String {
        match self {
            AttemptFailure::Constitutive {
                element,
                gp,
                source,
            } => format!("element {element} gauss point {gp}: {source}"),
            AttemptFailure::NoConvergence {
                residual,
                reference,
            } => format!("residual {residual:e} of reference {reference:e}"),
            AttemptFailure::Singular => "singular tangent".to_string(),
            AttemptFailure::NonFinite => "non-finite residual".to_string(),
        }
    }
}

struct Attempt {
    iterations: usize,
    residual: f64,
    reference: f64,
    relaxed: bool,
}

/// Indirect-drive working set for one attempt: the prescribed combination
/// value at the target time and the force scale that folds the combination
/// mismatch (a length) into the force-residual norm.
struct IndirectCtx<'a> {
    drive: &'a IndirectDrive,
    target: f64,
    kappa: f64,
}

impl IndirectCtx<'_> {
    fn mismatch(&self, u: &[f64]) -> f64 {
        self.target
            - self
                .drive
                .terms
                .iter()
                .map(|&(dof, c)| c * u[dof])
                .sum::<f64>()
    }
}

/// Residual norm of the free equations at `u`, evaluated against the
/// committed store. Touches neither the scratch store nor the matrix, so
/// it is safe to call on trial displacements that may be thrown away.
/// With an indirect drive the norm covers the bordered system: the applied
/// load `p` offsets its dof and the scaled combination mismatch joins in.
fn free_residual_norm(
    mesh: &Mesh,
    params: &MaterialParams,
    sys: &System,
    store: &QuadStore,
    u: &[f64],
    indirect: Option<(&IndirectCtx, f64)>,
) -> Result<f64, AttemptFailure> {
    let mut f_int = vec![0.0; u.len()];
    for (e, conn) in mesh.elements.iter().enumerate() {
        let geom = &sys.geoms[e];
        let ids = conn.nodes();
        let mut ue = [0.0; 2 * MAX_ELEM_NODES];
        for (i, &n) in ids.iter().enumerate() {
            ue[2 * i] = u[2 * n];
            ue[2 * i + 1] = u[2 * n + 1];
        }
        let mut fe = [0.0; 2 * MAX_ELEM_NODES];
        for (g, gp) in geom.gps.iter().enumerate() {
            let committed = &store.gps[e][g];
            let eps = gp_strain(gp, geom.n_nodes, &ue[..2 * geom.n_nodes]);
            let deps = eps - committed.state.strain;
            let updated = update_stress(&committed.state, deps, params).map_err(|source| {
                AttemptFailure::Constitutive {
                    element: e,
                    gp: g,
                    source,
                }
            })?;
            add_gp_force(gp, geom.n_nodes, updated.stress, &mut fe);
        }
        for (i, &n) in ids.iter().enumerate() {
            f_int[2 * n] += fe[2 * i];
            f_int[2 * n + 1] += fe[2 * i + 1];
        }
    }
    let mut norm2 = 0.0;
    if let Some((ic, p)) = indirect {
        f_int[ic.drive.load_dof] -= p * ic.drive.load_sign;
        let g = ic.kappa * ic.mismatch(u);
        norm2 += g * g;
    }
    for (dof, red) in sys.reduced.iter().enumerate() {
        if red.is_some() {
            norm2 += f_int[dof] * f_int[dof];
        }
    }
    let norm = norm2.sqrt();
    if norm.is_finite() {
        Ok(norm)
    } else {
        Err(AttemptFailure::NonFinite)
    }
}

/// Newton iteration toward equilibrium at fixed constrained displacements.
/// On success `u` holds the converged field and `scratch` the matching
/// uncommitted material states; on failure both are meaningless and the
/// committed store is untouched.
#[allow(clippy::too_many_arguments)]
fn newton_attempt(
    mesh: &Mesh,
    params: &MaterialParams,
    sys: &System,
    store: &QuadStore,
    scratch: &mut QuadStore,
    u: &mut [f64],
    p_load: &mut f64,
    indirect: Option<&IndirectCtx>,
    matrix: &mut BandMatrix,
    config: &SolverConfig,
    run_scale: f64,
) -> Result<Attempt, AttemptFailure> {
    let floor = TANGENT_FLOOR_REL * params.young();
    let zero_row = ZERO_ROW_REL * params.young();
    let mut f_int = vec![0.0; u.len()];
    let mut reference = 0.0;
    let mut last_norm = f64::NAN;
    let mut rejected_steps = 0usize;
    let mut best_norm = f64::INFINITY;
    let mut stalled_for = 0usize;
    // Best iterate seen, kept consistent as a (residual, displacements,
    // trial states) triple so a stalled attempt can fall back to it.
    let mut snap_norm = f64::INFINITY;
    let mut snap_u = vec![0.0; u.len()];
    let mut snap_p = *p_load;
    let mut snap_scratch: Option<QuadStore> = None;

    for iteration in 0..config.max_iter {
        // Softening (growing damage) makes the consistent tangent indefinite,
        // and Newton directions through it can cycle instead of converging.
        // Once line searches start failing outright, swap the iteration
        // matrix for the damaged elastic secant: positive definite, so the
        // directions become plain descent steps. The residual is exact either
        // way; only the path to the root changes.
        let secant = rejected_steps >= SECANT_AFTER_REJECTS;
        f_int.iter_mut().for_each(|x| *x = 0.0);
        matrix.reset();

        for (e, conn) in mesh.elements.iter().enumerate() {
            let geom = &sys.geoms[e];
            let ids = conn.nodes();
            let mut ue = [0.0; 2 * MAX_ELEM_NODES];
            for (i, &n) in ids.iter().enumerate() {
                ue[2 * i] = u[2 * n];
                ue[2 * i + 1] = u[2 * n + 1];
            }
            let mut fe = [0.0; 2 * MAX_ELEM_NODES];
            let mut ke = [[0.0; 2 * MAX_ELEM_NODES]; 2 * MAX_ELEM_NODES];
            for (g, gp) in geom.gps.iter().enumerate() {
                let committed = &store.gps[e][g];
                let eps = gp_strain(gp, geom.n_nodes, &ue[..2 * geom.n_nodes]);
                let deps = eps - committed.state.strain;
                let updated = update_stress(&committed.state, deps, params).map_err(|source| {
                    AttemptFailure::Constitutive {
                        element: e,
                        gp: g,
                        source,
                    }
                })?;
                // The finite-difference probes step across regime boundaries
                // the update itself did not cross, so they can fail where the
                // update succeeded; the damaged elastic secant stands in for
                // that point, leaving the residual exact.
                let numeric = if secant {
                    None
                } else {
                    tangent_numeric(&committed.state, deps, params).ok()
                };
                let mut tangent = numeric.unwrap_or_else(|| {
                    let s = (1.0 - updated.damage).max(SECANT_STIFFNESS_MIN);
                    let mut t = params.elastic().matrix();
                    for row in t.0.iter_mut() {
                        for v in row.iter_mut() {
                            *v *= s;
                        }
                    }
                    t
                });
                for r in 0..3 {
                    if tangent.row_max_abs(r) <= zero_row {
                        tangent.0[r][r] += floor;
                    }
                }
                add_gp_force(gp, geom.n_nodes, updated.stress, &mut fe);
                add_gp_stiffness(gp, geom.n_nodes, &tangent, &mut ke);
                scratch.gps[e][g] = GpRecord {
                    state: updated.state,
                    stress: updated.stress,
                    effective: updated.effective_stress,
                    damage: updated.damage,
                };
            }
            for (i, &a) in ids.iter().enumerate() {
                f_int[2 * a] += fe[2 * i];
                f_int[2 * a + 1] += fe[2 * i + 1];
                for (j, &b) in ids.iter().enumerate() {
                    for (ca, cb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        if let (Some(ri), Some(rj)) =
                            (sys.reduced[2 * a + ca], sys.reduced[2 * b + cb])
                        {
                            matrix.add(ri, rj, ke[2 * i + ca][2 * j + cb]);
                        }
                    }
                }
            }
        }

        let mut rhs = vec![0.0; sys.n_free];
        for (dof, red) in sys.reduced.iter().enumerate() {
            if let Some(r) = *red {
                rhs[r] = -f_int[dof];
            }
        }
        let mut mismatch = 0.0;
        if let Some(ic) = indirect {
            let rl = sys.reduced[ic.drive.load_dof].expect("load dof is free");
            rhs[rl] += *p_load * ic.drive.load_sign;
            mismatch = ic.mismatch(u);
        }
        let norm = (rhs.iter().map(|x| x * x).sum::<f64>()
            + indirect.map_or(0.0, |ic| (ic.kappa * mismatch).powi(2)))
        .sqrt();
        if !norm.is_finite() {
            return Err(AttemptFailure::NonFinite);
        }
        if iteration == 0 {
            reference = norm;
        }
        last_norm = norm;
        let scale_ref = reference.max(RUN_SCALE_FLOOR * run_scale);
        if norm <= config.tol * scale_ref {
            return Ok(Attempt {
                iterations: iteration,
                residual: norm,
                reference,
                relaxed: false,
            });
        }
        if norm < 0.99 * best_norm {
            best_norm = norm;
            stalled_for = 0;
        } else {
            stalled_for += 1;
        }
        if stalled_for >= STALL_PATIENCE && norm <= STALL_ACCEPT_REL * scale_ref {
            return Ok(Attempt {
                iterations: iteration,
                residual: norm,
                reference,
                relaxed: true,
            });
        }
        if norm < snap_norm {
            snap_norm = norm;
            snap_u.copy_from_slice(u);
            snap_p = *p_load;
            match &mut snap_scratch {
                Some(s) => s.clone_from(scratch),
                None => snap_scratch = Some(scratch.clone()),
            }
        }

        let mut dp = 0.0;
        let step_bad = match matrix.factor() {
            Ok(ipiv) => {
                matrix.solve(&ipiv, &mut rhs);
                let mut bad = rhs.iter().any(|x| !x.is_finite());
                if let Some(ic) = indirect {
                    // Bordered row: a second back-substitution for the load
                    // influence column, then the scalar that restores the
                    // driven combination, folded into the displacement step.
                    let rl = sys.reduced[ic.drive.load_dof].expect("load dof is free");
                    let mut infl = vec![0.0; sys.n_free];
                    infl[rl] = ic.drive.load_sign;
                    matrix.solve(&ipiv, &mut infl);
                    let comb = |v: &[f64]| -> f64 {
                        ic.drive
                            .terms
                            .iter()
                            .map(|&(dof, c)| c * v[sys.reduced[dof].expect("driven dof is free")])
                            .sum()
                    };
                    let denom = comb(&infl);
                    dp = (mismatch - comb(&rhs)) / denom;
                    if denom.abs() < f64::MIN_POSITIVE.sqrt() || !dp.is_finite() {
                        bad = true;
                    } else {
                        for (r, v) in rhs.iter_mut().zip(&infl) {
                            *r += dp * v;
                        }
                        bad = bad || rhs.iter().any(|x| !x.is_finite());
                    }
                }
                bad
            }
            Err(_) => true,
        };
        if step_bad {
            // A singular or overflowing iteration matrix is a property of
            // the matrix, not the iterate: keep the displacements and retry
            // with the secant matrix.
            rejected_steps += 1;
            continue;
        }

        // Damped correction. Regime switches make the residual non-monotone
        // along the full Newton step, and a long trial step can even land
        // outside the constitutive update's reach; backtrack on the residual
        // norm. When nothing decreases, the best finite candidate is still
        // taken: crossing a formation burst requires climbing its ridge, and
        // the following iterations descend on the far side. Only when every
        // trial fails constitutively is the direction itself abandoned: keep
        // the iterate and let the secant matrix produce a plain descent
        // direction next pass.
        let du = rhs;
        let mut u_cand = u.to_vec();
        let mut accepted: Option<(f64, f64)> = None;
        let mut best: Option<(f64, f64)> = None;
        for &scale in &[1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125] {
            for (dof, red) in sys.reduced.iter().enumerate() {
                if let Some(r) = *red {
                    u_cand[dof] = u[dof] + scale * du[r];
                }
            }
            let ind_cand = indirect.map(|ic| (ic, *p_load + scale * dp));
            if let Ok(norm_try) = free_residual_norm(mesh, params, sys, store, &u_cand, ind_cand) {
                if norm_try <= (1.0 - 1.0e-4 * scale) * norm {
                    accepted = Some((scale, norm_try));
                    break;
                }
                if best.is_none_or(|(_, b)| norm_try < b) {
                    best = Some((scale, norm_try));
                }
            }
        }
        let explored = accepted.is_none();
        let Some((scale, norm_next)) = accepted.or(best) else {
            rejected_steps += 1;
            if std::env::var_os("DSTRAIN_TRACE").is_some() {
                eprintln!("  it={iteration} norm={norm:.3e} REJECTED");
            }
            continue;
        };
        if explored {
            rejected_steps += 1;
        }
        for (dof, red) in sys.reduced.iter().enumerate() {
            if let Some(r) = *red {
                u[dof] += scale * du[r];
            }
        }
        *p_load += scale * dp;

        if std::env::var_os("DSTRAIN_TRACE").is_some() {
            use crate::material::Regime;
            let mut opened = 0usize;
            let mut closed = 0usize;
            for (e, recs) in scratch.gps.iter().enumerate() {
                for (g, r) in recs.iter().enumerate() {
                    let was = store.gps[e][g].state.regime;
                    if was != r.state.regime {
                        if r.state.regime == Regime::CrackOpen {
                            opened += 1;
                        } else {
                            closed += 1;
                        }
                    }
                }
            }
            eprintln!(
                "  it={iteration} norm={norm:.3e} lam={scale} next={norm_next:.3e} opened={opened} closed={closed}"
            );
        }
        if iteration == config.max_iter.saturating_sub(1) && std::env::var_os("DSTRAIN_DUMP").is_some() {
            let mut worst: Vec<(f64, usize)> = f_int
                .iter()
                .enumerate()
                .filter(|(dof, _)| sys.reduced[*dof].is_some())
                .map(|(dof, v)| (v.abs(), dof))
                .collect();
            worst.sort_by(|a, b| b.0.total_cmp(&a.0));
            for &(mag, dof) in worst.iter().take(8) {
                eprintln!("  dof {} (node {} comp {}) |r|={mag:.4e}", dof, dof / 2, dof % 2);
            }
            let top_nodes: Vec<usize> = worst.iter().take(3).map(|&(_, d)| d / 2).collect();
            for (e, conn) in mesh.elements.iter().enumerate() {
                if conn.nodes().iter().any(|n| top_nodes.contains(n)) {
                    for (g, r) in scratch.gps[e].iter().enumerate() {
                        let sp = r.effective.spectral();
                        eprintln!(
                            "    el {e} gp {g} regime={:?} d={:.6} jump={:.3e} acc={:.4e} sig_eff=({:.3e},{:.3e}) cauchy=({:.3e},{:.3e})",
                            r.state.regime,
                            r.damage,
                            r.state.jump(),
                            r.state.acc_plastic,
                            sp.values[0],
                            sp.values[1],
                            r.stress.spectral().values[0],
                            r.stress.spectral().values[1],
                        );
                    }
                }
            }
        }
    }
    // Budget exhausted. An oscillating stall never satisfies the patience
    // counter, so check the best iterate against the same relaxed threshold
    // before giving up.
    if let Some(s) = snap_scratch {
        if snap_norm <= STALL_ACCEPT_REL * reference.max(RUN_SCALE_FLOOR * run_scale) {
            u.copy_from_slice(&snap_u);
            *p_load = snap_p;
            *scratch = s;
            return Ok(Attempt {
                iterations: config.max_iter,
                residual: snap_norm,
                reference,
                relaxed: true,
            });
        }
    }
    Err(AttemptFailure::NoConvergence {
        residual: last_norm,
        reference,
    })
}

fn probe_value(probe: &ProbeDef, mesh: &Mesh, u: &[f64]) -> Result<f64, FemError> {
    match &probe.kind {
        ProbeKind::NodePairAbs { a, b, comp } => {
            if *comp > 1 {
                return Err(FemError::BadComponent(*comp));
            }
            Ok((u[2 * a + comp] - u[2 * b + comp]).abs())
        }
        ProbeKind::LineAvgDiff { set_a, set_b, comp } => {
            if *comp > 1 {
                return Err(FemError::BadComponent(*comp));
            }
            let avg = |name: &str| -> Result<f64, FemError> {
                let nodes = mesh.set(name)?;
                if nodes.is_empty() {
                    return Err(FemError::EmptySet(name.to_string()));
                }
                Ok(nodes.iter().map(|&n| u[2 * n + comp]).sum::<f64>() / nodes.len() as f64)
            };
            Ok(avg(set_a)? - avg(set_b)?)
        }
    }
}

/// March the prescribed-displacement histories to the end of their common
/// span, committing quadrature states only at converged configurations and
/// cutting the pseudo-time step on any failure. The sink sees every
/// converged commit; `scheduled` marks commits that land on the step grid.
#[allow(clippy::too_many_arguments)]
pub fn run_history(
    mesh: &Mesh,
    params: &MaterialParams,
    bcs: &[DirichletHistory],
    control: Option<&IndirectDrive>,
    probes: &[ProbeDef],
    reactions: &[ReactionDef],
    config: &SolverConfig,
    sink: &mut dyn FnMut(&StepContext) -> Result<(), String>,
) -> Result<RunOutput, FemError> {
    config.validate()?;
    if bcs.is_empty() {
        return Err(FemError::NoConstraints);
    }
    let sys = build_system(mesh, bcs)?;
    if let Some(drive) = control {
        if drive.terms.is_empty() {
            return Err(FemError::BadConfig("indirect drive has no terms"));
        }
        for &(dof, _) in drive.terms.iter().chain([&(drive.load_dof, 0.0)]) {
            if dof >= 2 * mesh.nodes.len() {
                return Err(FemError::BadConfig("indirect drive dof out of range"));
            }
            if sys.reduced[dof].is_none() {
                return Err(FemError::BadConfig(
                    "indirect drive dof is Dirichlet-constrained",
                ));
            }
        }
    }
    for probe in probes {
        // Fail fast on dangling references.
        probe_value(probe, mesh, &vec![0.0; 2 * mesh.nodes.len()])?;
    }
    for r in reactions {
        if r.comp > 1 {
            return Err(FemError::BadComponent(r.comp));
        }
        mesh.set(&r.set)?;
    }

    let histories: Vec<&PiecewiseLinear> = bcs
        .iter()
        .map(|b| &b.amplitude)
        .chain(control.map(|d| &d.amplitude))
        .collect();
    let schedule = build_schedule(&histories, config.steps);
    let mut store = QuadStore {
        gps: sys
            .geoms
            .iter()
            .map(|g| vec![GpRecord::virgin(); g.gps.len()])
            .collect(),
    };
    let mut scratch = store.clone();
    let mut matrix = BandMatrix::new(sys.n_free, sys.bandwidth);
    let mut u = vec![0.0; 2 * mesh.nodes.len()];
    let mut records: Vec<StepRecord> = Vec::new();

    let mut time = schedule[0];
    let mut run_scale = 0.0_f64;
    let mut p_load = 0.0_f64;
    // Mismatch weight turning the driven-combination gap into a force on the
    // residual scale of the mesh.
    let kappa = params.young() * mesh.thickness;
    for (index, &target) in schedule.iter().enumerate().skip(1) {
        let mut cuts_here = 0usize;
        let mut dt = target - time;
        while time < target {
            let t_next = if time + dt >= target { target } else { time + dt };
            let mut u_try = u.clone();
            for c in &sys.constraints {
                u_try[c.dof] = bcs[c.bc].amplitude.eval(t_next);
            }
            let mut p_try = p_load;
            let ictx = control.map(|drive| IndirectCtx {
                drive,
                target: drive.amplitude.eval(t_next),
                kappa,
            });
            match newton_attempt(
                mesh,
                params,
                &sys,
                &store,
                &mut scratch,
                &mut u_try,
                &mut p_try,
                ictx.as_ref(),
                &mut matrix,
                config,
                run_scale,
            ) {
                Ok(attempt) => {
                    std::mem::swap(&mut store, &mut scratch);
                    u = u_try;
                    p_load = p_try;
                    time = t_next;
                    run_scale = run_scale.max(attempt.reference);

                    let mut f_int = vec![0.0; u.len()];
                    for (e, conn) in mesh.elements.iter().enumerate() {
                        let geom = &sys.geoms[e];
                        let mut fe = [0.0; 2 * MAX_ELEM_NODES];
                        for (g, gp) in geom.gps.iter().enumerate() {
                            add_gp_force(gp, geom.n_nodes, store.gps[e][g].stress, &mut fe);
                        }
                        for (i, &n) in conn.nodes().iter().enumerate() {
                            f_int[2 * n] += fe[2 * i];
                            f_int[2 * n + 1] += fe[2 * i + 1];
                        }
                    }
                    let mut balance = [0.0; 2];
                    for c in &sys.constraints {
                        balance[c.dof % 2] += f_int[c.dof];
                    }
                    let mut probe_vals = Vec::with_capacity(probes.len());
                    for p in probes {
                        probe_vals.push(probe_value(p, mesh, &u)?);
                    }
                    let reaction_vals = reactions
                        .iter()
                        .map(|r| {
                            Ok(mesh
                                .set(&r.set)?
                                .iter()
                                .map(|&n| f_int[2 * n + r.comp])
                                .sum::<f64>())
                        })
                        .collect::<Result<Vec<f64>, FemError>>()?;

                    let record = StepRecord {
                        time,
                        bc_values: bcs.iter().map(|b| b.amplitude.eval(time)).collect(),
                        control: control.map(|d| (d.amplitude.eval(time), p_load)),
                        probes: probe_vals,
                        reactions: reaction_vals,
                        balance,
                        iterations: attempt.iterations,
                        cuts: cuts_here,
                        residual: attempt.residual,
                        reference: attempt.reference,
                        relaxed: attempt.relaxed,
                    };
                    let context = StepContext {
                        record: &record,
                        scheduled: (time == target).then_some(index),
                        mesh,
                        geoms: &sys.geoms,
                        displacements: &u,
                        store: &store,
                    };
                    sink(&context).map_err(FemError::Sink)?;
                    records.push(record);
                }
                Err(failure) => {
                    cuts_here += 1;
                    if cuts_here > config.max_cuts {
                        return Err(match failure {
                            AttemptFailure::Constitutive {
                                element,
                                gp,
                                source,
                            } => FemError::Constitutive {
                                element,
                                gp,
                                time: t_next,
                                source,
                            },
                            other => FemError::NonConvergence {
                                time: t_next,
                                detail: other.describe(),
                            },
                        });
                    }
                    dt *= config.cut;
                }
            }
        }
    }

    Ok(RunOutput { records, schedule })
}
