//! Independent reference solutions and material-point drivers.
//!
//! [`uniaxial_closed_form`] integrates the damage model analytically for a
//! uniaxial-stress strain history (axial strain prescribed, lateral Cauchy
//! stress zero). It shares no code with the incremental kernel: every phase
//! has an explicit formula and every phase boundary is located exactly, so
//! it serves as an oracle for the kernel drivers.
//!
//! [`mixed_control_drive`] runs the incremental kernel under the same
//! mixed control, finding the lateral strain of each increment by a scalar
//! root search on the lateral Cauchy stress. [`tensor_path_drive`] runs the
//! kernel under a fully prescribed tensor strain history.

use thiserror::Error;

use crate::material::{
    update_stress, MaterialParams, MaterialState, PathRecord, Regime, UpdateError,
};
use crate::path::{PathError, PiecewiseLinear, TensorPath};
use crate::tensor::SymTensor2;

/// Lateral-stress bound guaranteed by the mixed-control driver, relative to
/// the yield stress.
pub const LATERAL_TOL_REL: f64 = 1e-6;

/// Internal target of the lateral root search, relative to the yield stress.
/// Aiming well below the guaranteed bound keeps the Poisson-coupled error in
/// the axial stress negligible: a lateral residual r leaks about ν·r/(1−d)
/// into σxx once damage has grown. The looser bound is only the acceptance
/// fallback where the residual cannot be driven further down (frozen-stress
/// crack regime, arithmetic noise floor).
const LATERAL_SOLVE_REL: f64 = 1e-11;

/// Iteration budget of the lateral root search.
const LATERAL_MAX_ITERS: usize = 100;

/// Recursive halving depth for increments the kernel refuses whole.
const MAX_CUT_DEPTH: usize = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("strain history must start at zero strain, got {0}")]
    NonZeroStart(f64),
    #[error("sample times must be non-decreasing")]
    UnsortedTimes,
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Error)]
pub enum DriveError {
    #[error("material update failed at t = {time}: {source}")]
    Update {
        time: f64,
        #[source]
        source: UpdateError,
    },
    #[error("lateral strain search did not converge at t = {time}")]
    LateralSearch { time: f64 },
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Phase labels of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OraclePhase {
    /// Linear-elastic, no crack has ever formed.
    Elastic,
    /// On the yield locus with growing plastic strain and damage.
    PlasticDamage,
    /// Crack open, opening jump at its historical maximum and growing.
    CrackOpen,
    /// Crack open but unloading: stress frozen at the damaged plateau.
    FrozenUnload,
    /// Crack closed again: elastic response with accumulated damage.
    ClosedElastic,
}

impl OraclePhase {
    pub fn label(&self) -> &'static str {
        match self {
            OraclePhase::Elastic => "elastic",
            OraclePhase::PlasticDamage => "plastic_damage",
            OraclePhase::CrackOpen => "crack_open",
            OraclePhase::FrozenUnload => "frozen_unload",
            OraclePhase::ClosedElastic => "closed_elastic",
        }
    }
}

/// One closed-form sample.
#[derive(Debug, Clone, Copy)]
pub struct UniaxialSample {
    pub time: f64,
    /// Axial strain.
    pub strain: f64,
    /// Axial Cauchy stress.
    pub stress: f64,
    pub damage: f64,
    pub phase: OraclePhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Elastic,
    Plastic,
    Open,
}

/// Closed-form uniaxial-stress response, evaluated at the given times.
///
/// Piecewise structure along the history:
/// - elastic: `sigma = E * (eps - eps_p)`, degraded by `(1 - d)` while the
///   effective stress is tensile, full stiffness in compression;
/// - plastic: effective stress pinned at the yield stress,
///   `eps_p = eps - sy/E`, `d = 1 - exp(-a * eps_p)`;
/// - crack open (reached when `d` hits the critical damage): Cauchy stress
///   `(1 - d) * sy` with `d = 1 - (1 - d_cr) * exp(-b * max_jump)`, the
///   jump being the strain beyond the formation strain, its maximum kept
///   for ever;
/// - closure at the formation strain returns to the elastic branch; a later
///   reload reopens the crack at the same point.
pub fn uniaxial_closed_form(
    params: &MaterialParams,
    path: &PiecewiseLinear,
    times: &[f64],
) -> Result<Vec<UniaxialSample>, OracleError> {
    let start = path.knots()[0].1;
    if start != 0.0 {
        return Err(OracleError::NonZeroStart(start));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OracleError::UnsortedTimes);
    }

    let e = params.young();
    let sy = params.yield_stress();
    let a = params.plastic_damage_rate();
    let b = params.crack_damage_rate();
    let cap = params.plastic_strain_cap();
    let eps_yield0 = sy / e;
    // Strain at which the crack forms, closes and reopens.
    let eps_cr = eps_yield0 + cap;

    let mut phase = Phase::Elastic;
    let mut eps_p = 0.0f64;
    let mut max_jump = 0.0f64;
    let mut cracked = false;
    let mut t_cur = path.start_time();
    let mut eps_cur = 0.0f64;

    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let t = t.max(path.start_time()).min(path.end_time());
        // Walk the piecewise-linear legs from t_cur to t, handling phase
        // boundaries exactly.
        while t_cur < t {
            // Current leg and its end within [t_cur, t].
            let knots = path.knots();
            let leg = knots
                .windows(2)
                .position(|w| t_cur < w[1].0)
                .unwrap_or(knots.len() - 2);
            let (t0, v0) = knots[leg];
            let (t1, v1) = knots[leg + 1];
            let slope = (v1 - v0) / (t1 - t0);
            let t_stop = t.min(t1);
            let eps_stop = v0 + slope * (t_stop - t0);

            if slope <= 0.0 && phase == Phase::Plastic {
                phase = Phase::Elastic;
            }

            // Process events inside (eps_cur -> eps_stop).
            loop {
                match phase {
                    Phase::Elastic if slope > 0.0 => {
                        let eps_hit = eps_p + eps_yield0;
                        if eps_stop > eps_hit || (eps_cur >= eps_hit && eps_stop > eps_cur) {
                            if eps_cur < eps_hit {
                                eps_cur = eps_hit;
                            }
                            if cracked || eps_p >= cap {
                                phase = Phase::Open;
                            } else {
                                phase = Phase::Plastic;
                            }
                            continue;
                        }
                    }
                    Phase::Plastic => {
                        if eps_stop >= eps_cr {
                            eps_cur = eps_cr;
                            eps_p = cap;
                            cracked = true;
                            phase = Phase::Open;
                            continue;
                        }
                        eps_p = eps_stop - eps_yield0;
                    }
                    Phase::Open if slope < 0.0 => {
                        if eps_stop < eps_cr {
                            eps_cur = eps_cr;
                            phase = Phase::Elastic;
                            continue;
                        }
                    }
                    Phase::Open if slope > 0.0 => {
                        max_jump = max_jump.max(eps_stop - eps_cr);
                    }
                    _ => {}
                }
                break;
            }
            eps_cur = eps_stop;
            t_cur = t_stop;
        }

        // Evaluate the sample at the current state.
        let eps = eps_cur;
        let (stress, damage, label) = match phase {
            Phase::Elastic => {
                let sig_eff = e * (eps - eps_p);
                let d = 1.0 - (-(a * eps_p.min(cap) + b * max_jump)).exp();
                let sig = if sig_eff >= 0.0 { (1.0 - d) * sig_eff } else { sig_eff };
                let label = if cracked {
                    OraclePhase::ClosedElastic
                } else {
                    OraclePhase::Elastic
                };
                (sig, d, label)
            }
            Phase::Plastic => {
                let d = 1.0 - (-a * eps_p).exp();
                ((1.0 - d) * sy, d, OraclePhase::PlasticDamage)
            }
            Phase::Open => {
                let jump = (eps - eps_cr).max(0.0);
                let at_front = jump >= max_jump;
                max_jump = max_jump.max(jump);
                let d = 1.0 - (-(a * cap + b * max_jump)).exp();
                let label = if at_front {
                    OraclePhase::CrackOpen
                } else {
                    OraclePhase::FrozenUnload
                };
                ((1.0 - d) * sy, d, label)
            }
        };
        out.push(UniaxialSample {
            time: t,
            strain: eps,
            stress,
            damage,
            phase: label,
        });
    }
    Ok(out)
}

/// Kernel history produced by one of the drivers.
#[derive(Debug, Clone)]
pub struct DriveOutput {
    /// One record per sample time, including the initial state.
    pub records: Vec<PathRecord>,
    /// Committed states matching `records`.
    pub states: Vec<MaterialState>,
}

impl DriveOutput {
    fn seeded(times: &[f64]) -> Self {
        let state = MaterialState::virgin();
        let records = vec![PathRecord {
            time: times[0],
            strain: SymTensor2::ZERO,
            effective_stress: SymTensor2::ZERO,
            stress: SymTensor2::ZERO,
            damage: 0.0,
            regime: Regime::Elastoplastic,
        }];
        DriveOutput {
            records,
            states: vec![state],
        }
    }
}

/// Drive the kernel along a prescribed axial strain history under uniaxial
/// stress: at each sample the lateral in-plane strain is solved so the
/// lateral Cauchy stress vanishes (within [`LATERAL_TOL_REL`] times the
/// yield stress). Shear is held at zero.
pub fn mixed_control_drive(
    params: &MaterialParams,
    path: &PiecewiseLinear,
    substeps: usize,
) -> Result<DriveOutput, DriveError> {
    let times = path.sample_times(substeps);
    let mut out = DriveOutput::seeded(&times);
    let tol = LATERAL_TOL_REL * params.yield_stress();

    for &t in &times[1..] {
        let target_axial = path.eval(t);
        let state = *out.states.last().expect("seeded");
        let committed = advance_mixed(&state, target_axial, params, tol, t, MAX_CUT_DEPTH)?;
        out.states.push(committed.state);
        out.records.push(PathRecord {
            time: t,
            strain: committed.state.strain,
            effective_stress: committed.effective_stress,
            stress: committed.stress,
            damage: committed.damage,
            regime: committed.state.regime,
        });
    }
    Ok(out)
}

fn advance_mixed(
    state: &MaterialState,
    target_axial: f64,
    params: &MaterialParams,
    tol: f64,
    time: f64,
    depth: usize,
) -> Result<crate::material::StressUpdate, DriveError> {
    match solve_lateral(state, target_axial - state.strain.xx, params, tol) {
        Ok(update) => Ok(update),
        Err(LateralFailure::Update(UpdateError::TooManyTransitions)) | Err(LateralFailure::NoBracket)
            if depth > 0 =>
        {
            // The increment crosses too many regime boundaries at once:
            // advance through the midpoint first.
            let mid = 0.5 * (state.strain.xx + target_axial);
            let half = advance_mixed(state, mid, params, tol, time, depth - 1)?;
            advance_mixed(&half.state, target_axial, params, tol, time, depth - 1)
        }
        Err(LateralFailure::Update(source)) => Err(DriveError::Update { time, source }),
        Err(LateralFailure::NoBracket) => Err(DriveError::LateralSearch { time }),
    }
}

enum LateralFailure {
    Update(UpdateError),
    NoBracket,
}

impl From<UpdateError> for LateralFailure {
    fn from(e: UpdateError) -> Self {
        LateralFailure::Update(e)
    }
}

/// Scalar root search for the lateral strain increment: the lateral Cauchy
/// stress is monotone in the lateral strain, so a secant step inside a
/// growing bracket converges quickly; bisection guards the tail. The search
/// aims at [`LATERAL_SOLVE_REL`]; when the residual bottoms out above that
/// (frozen-stress crack regime, rounding floor) the best point seen is
/// accepted as long as it meets `tol`. Among equal residuals the smallest
/// lateral increment wins, which keeps the crack strain free of spurious
/// lateral components while the stress is frozen.
fn solve_lateral(
    state: &MaterialState,
    da: f64,
    params: &MaterialParams,
    tol: f64,
) -> Result<crate::material::StressUpdate, LateralFailure> {
    let eval = |dl: f64| update_stress(state, SymTensor2::new(da, dl, 0.0), params);
    let tight = LATERAL_SOLVE_REL * params.yield_stress();

    let mut x0 = 0.0;
    let r0 = eval(x0)?;
    let mut f0 = r0.stress.yy;
    if f0.abs() <= tight {
        return Ok(r0);
    }
    let mut best = (x0, r0);
    let consider = |x: f64, r: crate::material::StressUpdate, best: &mut (f64, crate::material::StressUpdate)| {
        let f = r.stress.yy.abs();
        let bf = best.1.stress.yy.abs();
        if f < bf || (f == bf && x.abs() < best.0.abs()) {
            *best = (x, r);
        }
    };
    let settle = |best: (f64, crate::material::StressUpdate)| {
        if best.1.stress.yy.abs() <= tol {
            Ok(best.1)
        } else {
            Err(LateralFailure::NoBracket)
        }
    };

    // Elastic estimate of d(sigma_yy)/d(eps_yy) for the first secant step.
    let slope = params.elastic().plane_modulus();
    let mut x1 = x0 - f0 / slope;
    let r1 = eval(x1)?;
    let mut f1 = r1.stress.yy;
    if f1.abs() <= tight {
        return Ok(r1);
    }
    consider(x1, r1, &mut best);
    if f1 == f0 {
        // Residual insensitive to the lateral strain: the whole increment is
        // swallowed by the crack and the stress stays frozen.
        return settle(best);
    }

    // Expand until the root is bracketed (the residual is increasing in
    // the lateral strain).
    let mut expand = (x1 - x0).abs().max(1e-12);
    let mut guard = 0;
    while f0.signum() == f1.signum() {
        guard += 1;
        if guard > 60 {
            return settle(best);
        }
        x0 = x1;
        f0 = f1;
        x1 -= f1.signum() * expand;
        expand *= 2.0;
        let r = eval(x1)?;
        f1 = r.stress.yy;
        if f1.abs() <= tight {
            return Ok(r);
        }
        consider(x1, r, &mut best);
    }
    let (mut lo, mut flo, mut hi, mut fhi) = if x0 < x1 {
        (x0, f0, x1, f1)
    } else {
        (x1, f1, x0, f0)
    };

    // Illinois regula falsi: the residual kinks where the lateral stress
    // changes sign (damaged tensile slope vs full compressive slope), and
    // plain false position stagnates on one endpoint across such a kink.
    let mut side = 0i8;
    for _ in 0..LATERAL_MAX_ITERS {
        let mut cand = lo - flo * (hi - lo) / (fhi - flo);
        if !cand.is_finite() || cand <= lo || cand >= hi {
            cand = 0.5 * (lo + hi);
        }
        if cand <= lo || cand >= hi {
            // Bracket exhausted at rounding resolution.
            break;
        }
        let r = eval(cand)?;
        let fc = r.stress.yy;
        if fc.abs() <= tight {
            return Ok(r);
        }
        consider(cand, r, &mut best);
        if fc.signum() == flo.signum() {
            lo = cand;
            flo = fc;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = cand;
            fhi = fc;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    settle(best)
}

/// Drive the kernel along a fully prescribed tensor strain history.
pub fn tensor_path_drive(
    params: &MaterialParams,
    path: &TensorPath,
    substeps: usize,
) -> Result<DriveOutput, DriveError> {
    let times = path.sample_times(substeps);
    let mut out = DriveOutput::seeded(&times);

    for &t in &times[1..] {
        let target = path.eval(t);
        let state = *out.states.last().expect("seeded");
        let committed = advance_tensor(&state, target, params, t, MAX_CUT_DEPTH)?;
        out.states.push(committed.state);
        out.records.push(PathRecord {
            time: t,
            strain: committed.state.strain,
            effective_stress: committed.effective_stress,
            stress: committed.stress,
            damage: committed.damage,
            regime: committed.state.regime,
        });
    }
    Ok(out)
}

fn advance_tensor(
    state: &MaterialState,
    target: SymTensor2,
    params: &MaterialParams,
    time: f64,
    depth: usize,
) -> Result<crate::material::StressUpdate, DriveError> {
    match update_stress(state, target - state.strain, params) {
        Ok(update) => Ok(update),
        Err(UpdateError::TooManyTransitions) if depth > 0 => {
            let mid = state.strain + (target - state.strain) * 0.5;
            let half = advance_tensor(state, mid, params, time, depth - 1)?;
            advance_tensor(&half.state, target, params, time, depth - 1)
        }
        Err(source) => Err(DriveError::Update { time, source }),
    }
}

/// Axial strain values of the standard cyclic exercise for a finite
/// critical damage: load past crack formation, unload into compression,
/// reload further than before, return to zero. Scaled by the formation
/// strain so the same shape works across parameter sets.
pub fn standard_cyclic_strain_values(params: &MaterialParams) -> Vec<f64> {
    let cap = params.plastic_strain_cap();
    assert!(
        cap.is_finite(),
        "the cyclic template needs a finite critical damage"
    );
    let eps_cr = params.yield_stress() / params.young() + cap;
    vec![0.0, 1.5 * eps_cr, -0.25 * eps_cr, 2.2 * eps_cr, 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params(d_cr: f64) -> MaterialParams {
        MaterialParams::new(28.0e9, 0.2, 3.8e6, 80.0, 70.0, d_cr).unwrap()
    }

    fn assert_rel(a: f64, b: f64, rel: f64, what: &str) {
        let scale = a.abs().max(b.abs()).max(1e-300);
        assert!(
            (a - b).abs() <= rel * scale,
            "{what}: expected {a} ~ {b} (rel {rel})"
        );
    }

    #[test]
    fn closed_form_knows_the_elastic_limit() {
        // At eps = sy/E the stress is exactly sy and damage is zero.
        let p = table_params(0.45);
        let eps_y = 3.8e6 / 28.0e9;
        let path = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, eps_y)]).unwrap();
        let s = uniaxial_closed_form(&p, &path, &[0.0, 0.5, 1.0]).unwrap();
        assert_rel(s[2].strain, 1.3571428571428572e-4, 1e-12, "strain");
        assert_rel(s[2].stress, 3.8e6, 1e-9, "stress");
        assert_eq!(s[2].damage, 0.0);
        assert_eq!(s[2].phase, OraclePhase::Elastic);
        assert_rel(s[1].stress, 0.5 * 3.8e6, 1e-9, "half-way stress");
    }

    #[test]
    fn closed_form_at_the_formation_strain() {
        // At eps_cr = sy/E + cap the stress has dropped to (1 - d_cr) * sy.
        let p = table_params(0.45);
        let eps_cr = 3.8e6 / 28.0e9 + p.plastic_strain_cap();
        let path = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, eps_cr)]).unwrap();
        let s = uniaxial_closed_form(&p, &path, &[1.0]).unwrap();
        assert_rel(s[0].stress, 0.55 * 3.8e6, 1e-9, "plateau stress");
        assert_rel(s[0].stress, 2.09e6, 1e-9, "plateau stress value");
        assert_rel(s[0].damage, 0.45, 1e-9, "critical damage");
    }

    #[test]
    fn closed_form_open_crack_and_plateau_unload() {
        let p = table_params(0.45);
        let eps_cr = 3.8e6 / 28.0e9 + p.plastic_strain_cap();
        let peak = 1.4 * eps_cr;
        let path =
            PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, peak), (2.0, 0.9 * eps_cr)]).unwrap();
        let s = uniaxial_closed_form(&p, &path, &[1.0, 1.2, 2.0]).unwrap();

        // At the peak: d = 1 - 0.55 exp(-b * 0.4 eps_cr).
        let d_peak = 1.0 - 0.55 * (-70.0 * 0.4 * eps_cr).exp();
        assert_rel(s[0].damage, d_peak, 1e-12, "peak damage");
        assert_rel(s[0].stress, (1.0 - d_peak) * 3.8e6, 1e-12, "peak stress");
        assert_eq!(s[0].phase, OraclePhase::CrackOpen);

        // Early unload: still open, frozen plateau at the peak damage.
        assert_eq!(s[1].phase, OraclePhase::FrozenUnload);
        assert_rel(s[1].stress, (1.0 - d_peak) * 3.8e6, 1e-12, "plateau");

        // Below the formation strain the crack has closed; elastic with
        // slope (1-d)E from the plateau.
        assert_eq!(s[2].phase, OraclePhase::ClosedElastic);
        let sig_eff = 28.0e9 * (0.9 * eps_cr - p.plastic_strain_cap());
        let expected = if sig_eff >= 0.0 {
            (1.0 - d_peak) * sig_eff
        } else {
            sig_eff
        };
        assert_rel(s[2].stress, expected, 1e-12, "closed branch");
    }

    #[test]
    fn closed_form_compression_recovers_full_stiffness() {
        let p = table_params(0.45);
        let eps_cr = 3.8e6 / 28.0e9 + p.plastic_strain_cap();
        let path = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.4 * eps_cr), (2.0, -1.0e-3)])
            .unwrap();
        let s = uniaxial_closed_form(&p, &path, &[2.0]).unwrap();
        // Fully closed and compressed: sigma = E (eps - eps_p), undamaged.
        let expected = 28.0e9 * (-1.0e-3 - p.plastic_strain_cap());
        assert!(expected < 0.0);
        assert_rel(s[0].stress, expected, 1e-12, "compressive branch");
    }

    #[test]
    fn closed_form_without_crack_regime() {
        // d_cr = 1 disables the crack: plastic plateau for ever.
        let p = table_params(1.0);
        let path = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 0.05)]).unwrap();
        let s = uniaxial_closed_form(&p, &path, &[1.0]).unwrap();
        let d = 1.0 - (-80.0f64 * (0.05 - 3.8e6 / 28.0e9)).exp();
        assert_rel(s[0].damage, d, 1e-12, "plastic damage");
        assert_rel(s[0].stress, (1.0 - d) * 3.8e6, 1e-12, "plastic stress");
        assert_eq!(s[0].phase, OraclePhase::PlasticDamage);
    }

    #[test]
    fn driver_matches_closed_form_on_the_standard_cycle() {
        for d_cr in [0.45, 0.85] {
            let p = table_params(d_cr);
            let path =
                PiecewiseLinear::through_values(&standard_cyclic_strain_values(&p)).unwrap();
            let drive = mixed_control_drive(&p, &path, 256).unwrap();
            let times: Vec<f64> = drive.records.iter().map(|r| r.time).collect();
            let oracle = uniaxial_closed_form(&p, &path, &times).unwrap();
            let scale = oracle
                .iter()
                .map(|s| s.stress.abs())
                .fold(0.0f64, f64::max);
            for (r, o) in drive.records.iter().zip(&oracle) {
                assert!(
                    (r.stress.xx - o.stress).abs() <= 1.0e-8 * scale,
                    "stress mismatch at t = {}: kernel {} vs oracle {} (d_cr {d_cr})",
                    r.time,
                    r.stress.xx,
                    o.stress
                );
                assert!(
                    (r.damage - o.damage).abs() <= 1.0e-8,
                    "damage mismatch at t = {}: {} vs {}",
                    r.time,
                    r.damage,
                    o.damage
                );
                assert!(
                    r.stress.yy.abs() <= 2.0 * LATERAL_TOL_REL * 3.8e6,
                    "lateral stress not zeroed at t = {}",
                    r.time
                );
            }
        }
    }

    #[test]
    fn driver_reaches_the_crack_regime_and_back() {
        let p = table_params(0.45);
        let path = PiecewiseLinear::through_values(&standard_cyclic_strain_values(&p)).unwrap();
        let drive = mixed_control_drive(&p, &path, 128).unwrap();
        assert!(drive
            .states
            .iter()
            .any(|s| s.regime == Regime::CrackOpen));
        let last = drive.states.last().unwrap();
        // Back at zero strain the crack is closed and compressed.
        assert_eq!(last.regime, Regime::Elastoplastic);
        assert!(drive.records.last().unwrap().stress.xx < 0.0);
        // Damage never decreased along the way.
        for w in drive.records.windows(2) {
            assert!(w[1].damage >= w[0].damage - 1e-12);
        }
    }

    #[test]
    fn tensor_drive_follows_the_prescribed_path_exactly() {
        let p = table_params(0.45);
        let path = TensorPath::new(vec![
            (0.0, SymTensor2::ZERO),
            (1.0, SymTensor2::new(2.0e-3, -4.0e-4, 3.0e-4)),
            (2.0, SymTensor2::new(-5.0e-4, 1.0e-4, -1.0e-4)),
        ])
        .unwrap();
        let drive = tensor_path_drive(&p, &path, 64).unwrap();
        for r in &drive.records {
            let want = path.eval(r.time);
            assert!((r.strain.xx - want.xx).abs() <= 1e-15);
            assert!((r.strain.yy - want.yy).abs() <= 1e-15);
            assert!((r.strain.xy - want.xy).abs() <= 1e-15);
        }
    }
}
