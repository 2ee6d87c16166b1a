//! Strain-driven state update with regime transitions.
//!
//! One call advances a committed state by a full strain increment. The
//! increment is split internally whenever the path crosses a regime
//! boundary: crack formation (the plastic multiplier reaches its cap),
//! crack closure (the opening jump would go negative), and crack
//! re-formation on reloading. Each transition hands the remaining fraction
//! of the increment to the next regime; a hard transition budget guards
//! against pathological ping-pong, in which case the caller must cut the
//! global step.

use crate::material::{
    damage_from_state, map_to_cauchy, return_map, yield_function, MaterialParams, MaterialState,
    Regime, ReturnMapping, UpdateError, MAX_TRANSITIONS,
};
use crate::tensor::{SymTensor2, Tangent3};

/// Iteration budget of the crack-formation fraction search.
const ALPHA_MAX_ITERS: usize = 100;

/// Finite-difference step parameters of [`tangent_numeric`].
const TANGENT_H_FLOOR: f64 = 1e-8;
const TANGENT_H_REL: f64 = 1e-6;

/// Committed outcome of one strain increment, without the tangent.
#[derive(Debug, Clone, Copy)]
pub struct StressUpdate {
    pub state: MaterialState,
    /// Cauchy stress (damage applied to the tensile part).
    pub stress: SymTensor2,
    /// Effective (undamaged) stress.
    pub effective_stress: SymTensor2,
    pub damage: f64,
}

/// [`StressUpdate`] plus the algorithmic tangent.
#[derive(Debug, Clone, Copy)]
pub struct UpdateResult {
    pub state: MaterialState,
    pub stress: SymTensor2,
    pub effective_stress: SymTensor2,
    pub damage: f64,
    /// Central finite-difference derivative of the Cauchy stress with
    /// respect to the strain increment, components (xx, yy, xy).
    pub tangent: Tangent3,
}

/// Intermediate state produced by [`solve_alpha`].
#[derive(Debug, Clone, Copy)]
pub struct AlphaSolution {
    /// Fraction of the increment consumed before the crack forms.
    pub alpha: f64,
    /// State committed at the formation point: plastic multiplier exactly
    /// at its cap, regime switched to [`Regime::CrackOpen`], crack normal
    /// set to the largest-principal-stress direction.
    pub state: MaterialState,
}

/// Find the increment fraction at which the crack forms.
///
/// The search runs on the return-mapping multiplier: `m(alpha)` is the
/// plastic multiplier needed to map the trial stress at fraction `alpha`
/// back to the yield locus, and the crack forms at the smallest `alpha`
/// where `m` crosses the remaining reserve `lambda = cap - acc_plastic`.
/// The multiplier is continuous in `alpha` even where the flow direction
/// switches between locus surfaces, which keeps the bracket sound near the
/// biaxial corner. On reloading of an existing crack the reserve is zero
/// and the crossing is the purely elastic fraction to the locus.
///
/// A crossing is only committed if the remaining increment can actually
/// open the crack it creates. Lateral loading couples into the normal
/// stress through Poisson contraction, so the stress can leave the locus in
/// a direction whose strain component is still contracting; forming a crack
/// there would close it again at once and the two regimes would hand the
/// increment back and forth for ever. In that case the search walks forward
/// to the fraction where the rotating principal direction first becomes
/// openable, and if the rotation never gets that far the whole increment is
/// consumed with the crack left dormant.
pub fn solve_alpha(
    state: &MaterialState,
    deps: SymTensor2,
    params: &MaterialParams,
) -> Result<AlphaSolution, UpdateError> {
    if state.regime != Regime::Elastoplastic {
        return Err(UpdateError::BrokenState(
            "crack formation search requires the elastoplastic regime",
        ));
    }
    let cap = params.plastic_strain_cap();
    let lambda = cap - state.acc_plastic;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(UpdateError::BrokenState(
            "plastic reserve is negative or infinite",
        ));
    }

    let el = params.elastic();
    let sigma_t = el.apply(state.strain - state.plastic_strain);
    let dsig = el.apply(deps);
    let ftol = params.yield_tol();
    // Yield-band width expressed on the multiplier scale.
    let mtol = ftol / el.plane_modulus();

    let probe = |alpha: f64| -> ReturnMapping { return_map(sigma_t + dsig * alpha, params) };

    let commit = |alpha: f64, rm: &ReturnMapping| -> AlphaSolution {
        let mut st = *state;
        st.strain += deps * alpha;
        st.plastic_strain += rm.flow * rm.multiplier;
        st.acc_plastic = cap;
        st.crack_strain = SymTensor2::ZERO;
        // The trial shares the mapped stress's eigenframe but keeps a
        // definite dominant direction when the return lands on the biaxial
        // corner, where the mapped principal values tie.
        let trial = sigma_t + dsig * alpha;
        st.crack_normal = Some(trial.spectral().directions[0]);
        st.regime = Regime::CrackOpen;
        AlphaSolution { alpha, state: st }
    };

    if yield_function(sigma_t, params) > ftol {
        return Err(UpdateError::AlphaSearch(
            "state lies outside the yield locus before the increment",
        ));
    }

    let rm1 = probe(1.0);
    if rm1.multiplier <= lambda + mtol {
        if rm1.multiplier >= lambda - mtol {
            return Ok(commit(1.0, &rm1));
        }
        return Err(UpdateError::AlphaSearch(
            "increment never reaches the yield locus",
        ));
    }

    // Opening admissibility of the crack a commit at `alpha` would create:
    // the remaining increment must not contract the committed normal.
    let opens = |alpha: f64| -> bool {
        let trial = sigma_t + dsig * alpha;
        deps.normal_component(trial.spectral().directions[0]) >= 0.0
    };

    let rm0 = probe(0.0);
    let mut seed = (0.0f64, rm0.multiplier);
    let mut star: Option<(f64, ReturnMapping)> = None;
    if rm0.multiplier > lambda {
        // The state already rests on the locus (typical on reopening of a
        // dormant crack). If the increment unloads the current
        // maximum-tension plane while re-yielding in a rotated direction,
        // the formation point is the strictly positive fraction where the
        // reserve runs out again; walk into the unloading dip to bracket
        // that crossing. With no dip the rotated surface takes over
        // immediately and the crossing is at zero.
        if opens(0.0) {
            return Ok(commit(0.0, &rm0));
        }
        let mut seeded = false;
        let mut a = 1.0e-12;
        while a <= 0.5 {
            let rma = probe(a);
            if rma.multiplier <= lambda {
                seed = (a, rma.multiplier);
                seeded = true;
                break;
            }
            a *= 10.0;
        }
        if !seeded {
            star = Some((0.0, rm0));
        }
    }

    // Bracketed search for the crossing m(alpha) = lambda: bisection with a
    // secant acceleration step. Every candidate return sits exactly on the
    // locus, so the bracket can collapse to round-off without a salvage
    // tolerance; the high side is taken in that case.
    if star.is_none() {
        let (mut lo, mut mlo) = seed;
        let (mut hi, mut mhi) = (1.0f64, rm1.multiplier);
        for it in 0..ALPHA_MAX_ITERS {
            let glo = mlo - lambda;
            let ghi = mhi - lambda;
            // Secant steps can stagnate against one end of the bracket, so
            // every other iteration bisects; that bounds the bracket width
            // and guarantees collapse within the budget.
            let mut cand = if it % 2 == 0 {
                lo - glo * (hi - lo) / (ghi - glo)
            } else {
                0.5 * (lo + hi)
            };
            if !cand.is_finite() || cand <= lo || cand >= hi {
                cand = 0.5 * (lo + hi);
            }
            let rmc = probe(cand);
            // Accept only from strictly above: for a zero reserve the
            // multiplier equals the reserve on the whole admissible segment,
            // and interior points of that flat stretch must not pass as the
            // crossing.
            if rmc.multiplier > lambda && rmc.multiplier - lambda <= mtol {
                star = Some((cand, rmc));
                break;
            }
            if rmc.multiplier > lambda {
                hi = cand;
                mhi = rmc.multiplier;
            } else {
                lo = cand;
                mlo = rmc.multiplier;
            }
            if hi - lo < f64::EPSILON {
                star = Some((hi, probe(hi)));
                break;
            }
        }
    }
    let (alpha_star, rm_star) = star.ok_or(UpdateError::AlphaSearch(
        "no convergence within the iteration budget",
    ))?;

    if opens(alpha_star) {
        return Ok(commit(alpha_star, &rm_star));
    }
    // The stress leaves the locus while the strain still contracts the
    // committed normal. Walk forward to where the rotating principal
    // direction first becomes openable; past the crossing the stress has
    // moved beyond the locus and the return spends slightly more than the
    // reserve, which is the price of forming the crack in a direction that
    // can carry it.
    if !opens(1.0) {
        return Ok(commit(1.0, &rm1));
    }
    let (mut lo, mut hi) = (alpha_star, 1.0f64);
    while hi - lo >= f64::EPSILON {
        let cand = 0.5 * (lo + hi);
        if opens(cand) {
            hi = cand;
        } else {
            lo = cand;
        }
    }
    Ok(commit(hi, &probe(hi)))
}

/// Fraction of the increment at which the crack-opening jump reaches zero.
///
/// Requires an open crack whose jump would become negative over the full
/// increment; the closure fraction solves
/// `n . (crack_strain + beta * deps) . n = 0`.
pub fn solve_beta(state: &MaterialState, deps: SymTensor2) -> Result<f64, UpdateError> {
    let n = state
        .crack_normal
        .ok_or(UpdateError::BrokenState("open crack without a normal"))?;
    if state.regime != Regime::CrackOpen {
        return Err(UpdateError::BrokenState(
            "closure search requires an open crack",
        ));
    }
    let jump = state.crack_strain.normal_component(n);
    let djump = deps.normal_component(n);
    if jump + djump >= 0.0 {
        return Err(UpdateError::BrokenState(
            "closure search requires penetration at the increment end",
        ));
    }
    // jump >= 0 (up to the committed floor) and jump + djump < 0 force
    // djump < 0, so the division is safe.
    Ok((-jump / djump).clamp(0.0, 1.0))
}

/// Advance a committed state by one strain increment (no tangent).
pub fn update_stress(
    state: &MaterialState,
    deps: SymTensor2,
    params: &MaterialParams,
) -> Result<StressUpdate, UpdateError> {
    if !deps.is_finite() {
        return Err(UpdateError::NonFiniteInput);
    }
    let el = params.elastic();
    let ftol = params.yield_tol();
    let cap = params.plastic_strain_cap();

    let mut st = *state;
    let mut rem = deps;
    let mut transitions = 0usize;

    let sigma_eff = loop {
        match st.regime {
            Regime::Elastoplastic => {
                let trial = el.apply(st.strain + rem - st.plastic_strain);
                let f = yield_function(trial, params);
                if f <= ftol {
                    st.strain += rem;
                    break trial;
                }
                let rm = return_map(trial, params);
                if st.acc_plastic + rm.multiplier <= cap {
                    st.strain += rem;
                    st.plastic_strain += rm.flow * rm.multiplier;
                    st.acc_plastic += rm.multiplier;
                    break rm.stress;
                }
                // The step would overshoot the cap: advance to the crack
                // formation point and hand the rest to the open regime.
                let sol = solve_alpha(&st, rem, params)?;
                rem = rem * (1.0 - sol.alpha);
                st = sol.state;
                transitions += 1;
                if std::env::var("DSTRAIN_PINGPONG").is_ok() && transitions >= MAX_TRANSITIONS - 2 {
                    eprintln!(
                        "ALPHA tr={} alpha={:.3e} rem=({:+.6e},{:+.6e},{:+.6e}) n={:?} seff0=({:+.6e},{:+.6e},{:+.6e})",
                        transitions, sol.alpha, rem.xx, rem.yy, rem.xy, st.crack_normal,
                        el.apply(st.strain - st.plastic_strain).xx,
                        el.apply(st.strain - st.plastic_strain).yy,
                        el.apply(st.strain - st.plastic_strain).xy,
                    );
                }
                if transitions > MAX_TRANSITIONS {
                    if std::env::var("DSTRAIN_PINGPONG").is_ok() {
                        eprintln!(
                            "PINGPONG state0: strain=({:+.16e},{:+.16e},{:+.16e}) plastic=({:+.16e},{:+.16e},{:+.16e}) acc={:.16e} mj={:.16e} deps=({:+.16e},{:+.16e},{:+.16e})",
                            state.strain.xx, state.strain.yy, state.strain.xy,
                            state.plastic_strain.xx, state.plastic_strain.yy, state.plastic_strain.xy,
                            state.acc_plastic, state.max_jump,
                            deps.xx, deps.yy, deps.xy,
                        );
                    }
                    return Err(UpdateError::TooManyTransitions);
                }
            }
            Regime::CrackOpen => {
                let n = st
                    .crack_normal
                    .ok_or(UpdateError::BrokenState("open crack without a normal"))?;
                let jump_end = (st.crack_strain + rem).normal_component(n);
                if jump_end < 0.0 {
                    // The crack closes inside this increment. At the closure
                    // point the crack strain has zero normal component; the
                    // tangential residue is slip the faces accumulated while
                    // apart, so it transfers to the plastic strain as a
                    // permanent offset. The elastic strain, and with it the
                    // effective stress, is continuous through closure.
                    let beta = solve_beta(&st, rem)?;
                    let residue = st.crack_strain + rem * beta;
                    st.strain += rem * beta;
                    st.plastic_strain += residue;
                    st.crack_strain = SymTensor2::ZERO;
                    st.regime = Regime::Elastoplastic;
                    rem = rem * (1.0 - beta);
                    transitions += 1;
                    if std::env::var("DSTRAIN_PINGPONG").is_ok() && transitions >= MAX_TRANSITIONS - 2 {
                        eprintln!(
                            "BETA tr={} beta={:.3e} n={:?} residue=({:+.3e},{:+.3e},{:+.3e})",
                            transitions, beta, n, residue.xx, residue.yy, residue.xy
                        );
                    }
                    if transitions > MAX_TRANSITIONS {
                        return Err(UpdateError::TooManyTransitions);
                    }
                } else {
                    // Open crack: the whole remaining increment accumulates
                    // on the crack strain and the effective stress is kept
                    // frozen on the yield locus.
                    st.crack_strain += rem;
                    st.strain += rem;
                    if jump_end > st.max_jump {
                        st.max_jump = jump_end;
                    }
                    break el.apply(st.strain - st.plastic_strain - st.crack_strain);
                }
            }
        }
    };

    let f_final = yield_function(sigma_eff, params);
    if f_final > ftol {
        return Err(UpdateError::Inadmissible { f: f_final });
    }
    let damage = damage_from_state(&st, params);
    let stress = map_to_cauchy(sigma_eff, damage);
    if !st.is_finite() || !sigma_eff.is_finite() || !stress.is_finite() || !damage.is_finite() {
        return Err(UpdateError::NonFiniteState);
    }
    Ok(StressUpdate {
        state: st,
        stress,
        effective_stress: sigma_eff,
        damage,
    })
}

/// Central finite-difference tangent of the Cauchy stress with respect to
/// the strain increment, evaluated around `deps` from the same committed
/// state. Rows and columns follow the (xx, yy, xy) component order.
pub fn tangent_numeric(
    state: &MaterialState,
    deps: SymTensor2,
    params: &MaterialParams,
) -> Result<Tangent3, UpdateError> {
    let h = TANGENT_H_FLOOR.max(TANGENT_H_REL * deps.norm());
    let mut t = [[0.0; 3]; 3];
    for j in 0..3 {
        let e = SymTensor2::basis(j);
        let plus = update_stress(state, deps + e * h, params)?;
        let minus = update_stress(state, deps - e * h, params)?;
        let scale = 1.0 / (2.0 * h);
        for i in 0..3 {
            t[i][j] = (plus.stress.component(i) - minus.stress.component(i)) * scale;
        }
    }
    let tangent = Tangent3(t);
    if !tangent.is_finite() {
        return Err(UpdateError::NonFiniteState);
    }
    Ok(tangent)
}

/// Advance a committed state by one strain increment, including the
/// algorithmic tangent.
pub fn update(
    state: &MaterialState,
    deps: SymTensor2,
    params: &MaterialParams,
) -> Result<UpdateResult, UpdateError> {
    let su = update_stress(state, deps, params)?;
    let tangent = tangent_numeric(state, deps, params)?;
    Ok(UpdateResult {
        state: su.state,
        stress: su.stress,
        effective_stress: su.effective_stress,
        damage: su.damage,
        tangent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{damage_from_state, yield_function, MaterialParams, MaterialState};

    fn table_params(d_cr: f64) -> MaterialParams {
        MaterialParams::new(28.0e9, 0.2, 3.8e6, 80.0, 70.0, d_cr).unwrap()
    }

    fn assert_rel(a: f64, b: f64, rel: f64) {
        let scale = a.abs().max(b.abs()).max(1e-300);
        assert!((a - b).abs() <= rel * scale, "expected {a} ~ {b} (rel {rel})");
    }

    #[test]
    fn elastic_update_reproduces_the_operator() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        let r = update(&st, SymTensor2::new(1.0e-4, 0.0, 0.0), &p).unwrap();
        assert_rel(r.effective_stress.xx, 28.0e9 / 0.96 * 1.0e-4, 1e-12);
        assert_rel(r.effective_stress.yy, 0.2 * 28.0e9 / 0.96 * 1.0e-4, 1e-12);
        assert_eq!(r.damage, 0.0);
        assert_eq!(r.state.regime, Regime::Elastoplastic);
        assert_eq!(r.stress.xx, r.effective_stress.xx);
        // Elastic tangent equals the plane-stress operator.
        let d = p.elastic().matrix();
        for i in 0..3 {
            for j in 0..3 {
                let scale = p.elastic().plane_modulus();
                assert!(
                    (r.tangent.0[i][j] - d.0[i][j]).abs() <= 1e-6 * scale,
                    "tangent[{i}][{j}] = {} vs {}",
                    r.tangent.0[i][j],
                    d.0[i][j]
                );
            }
        }
    }

    #[test]
    fn plastic_update_accumulates_and_stays_on_the_locus() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        // Uniaxial strain well beyond first yield but below the cap.
        let eps = 2.0e-4;
        let r = update_stress(&st, SymTensor2::new(eps, 0.0, 0.0), &p).unwrap();
        assert!(r.state.acc_plastic > 0.0);
        assert!(r.state.acc_plastic < p.plastic_strain_cap());
        assert!(yield_function(r.effective_stress, &p) <= p.yield_tol());
        assert_rel(r.effective_stress.spectral().values[0], 3.8e6, 1e-9);
        assert_eq!(r.state.regime, Regime::Elastoplastic);
        assert_rel(r.damage, damage_from_state(&r.state, &p), 1e-15);
        // Cauchy stress is the damaged tensile stress.
        let s1 = r.stress.spectral().values[0];
        assert_rel(s1, (1.0 - r.damage) * 3.8e6, 1e-9);
    }

    #[test]
    fn crack_formation_lands_exactly_on_the_cap() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        let cap = p.plastic_strain_cap();
        // One large uniaxial-strain increment far beyond the cap. The
        // principal axes stay fixed along the path, so the formation point
        // has a closed form: alpha * eps = lambda + sy / Ep.
        let eps = 2.0e-2;
        let r = update_stress(&st, SymTensor2::new(eps, 0.0, 0.0), &p).unwrap();
        assert_eq!(r.state.regime, Regime::CrackOpen);
        assert_eq!(r.state.acc_plastic, cap);
        let n = r.state.crack_normal.unwrap();
        assert_rel(n[0].abs(), 1.0, 1e-9);
        assert!(n[1].abs() < 1e-9);

        let ep = p.elastic().plane_modulus();
        let alpha_expected = (cap + 3.8e6 / ep) / eps;
        let jump_expected = (1.0 - alpha_expected) * eps;
        assert_rel(r.state.jump(), jump_expected, 1e-7);
        assert_rel(r.state.max_jump, jump_expected, 1e-7);
        // The frozen effective stress sits on the locus.
        assert!(yield_function(r.effective_stress, &p).abs() <= p.yield_tol());
        // Cauchy stress carries the post-crack damage.
        let d = r.damage;
        assert!(d > 0.45 && d < 1.0);
        assert_rel(r.stress.spectral().values[0], (1.0 - d) * 3.8e6, 1e-9);
    }

    #[test]
    fn solve_alpha_commit_is_kinematically_consistent() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        let deps = SymTensor2::new(2.0e-2, -1.0e-3, 3.0e-3);
        let sol = solve_alpha(&st, deps, &p).unwrap();
        assert!(sol.alpha > 0.0 && sol.alpha <= 1.0);
        let sig = sol.state.effective_stress(&p);
        assert!(yield_function(sig, &p).abs() <= p.yield_tol());
        assert_eq!(sol.state.acc_plastic, p.plastic_strain_cap());
        assert_eq!(sol.state.crack_strain, SymTensor2::ZERO);
        // The crack normal is the largest-principal direction of the
        // intermediate stress.
        let n = sol.state.crack_normal.unwrap();
        let e1 = sig.spectral().directions[0];
        let align = (n[0] * e1[0] + n[1] * e1[1]).abs();
        assert_rel(align, 1.0, 1e-9);
    }

    #[test]
    fn open_crack_accumulates_the_whole_increment() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let frozen = opened.effective_stress;
        let st = opened.state;

        let deps = SymTensor2::new(1.0e-3, 4.0e-4, 2.0e-4);
        let r = update_stress(&st, deps, &p).unwrap();
        assert_eq!(r.state.regime, Regime::CrackOpen);
        let grown = r.state.crack_strain - st.crack_strain;
        assert_rel(grown.xx, deps.xx, 1e-12);
        assert_rel(grown.yy, deps.yy, 1e-12);
        assert_rel(grown.xy, deps.xy, 1e-12);
        // Effective stress stays frozen.
        assert!((r.effective_stress.xx - frozen.xx).abs() < 1.0);
        assert!((r.effective_stress.yy - frozen.yy).abs() < 1.0);
        assert!((r.effective_stress.xy - frozen.xy).abs() < 1.0);
        // Damage grew with the jump.
        assert!(r.damage > opened.damage);
    }

    #[test]
    fn closure_drops_the_crack_strain_and_keeps_the_normal() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let st = opened.state;
        let jump = st.jump();
        assert!(jump > 0.0);

        // Close the crack and keep compressing by the same amount again.
        let deps = SymTensor2::new(-2.0 * jump, 0.0, 0.0);
        let r = update_stress(&st, deps, &p).unwrap();
        assert_eq!(r.state.regime, Regime::Elastoplastic);
        assert_eq!(r.state.crack_strain, SymTensor2::ZERO);
        assert!(r.state.crack_normal.is_some());
        assert_eq!(r.state.max_jump, st.max_jump);
        // After closure the stress unloads elastically from the frozen
        // locus state: sigma_eff_xx = sy - Ep * jump (lateral strain fixed).
        let ep = p.elastic().plane_modulus();
        assert_rel(r.effective_stress.xx, 3.8e6 - ep * jump, 1e-7);
        // Damage is unchanged by closure.
        assert_rel(r.damage, opened.damage, 1e-12);
    }

    #[test]
    fn closing_a_sheared_crack_turns_the_slip_into_plastic_offset() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let jump = opened.state.jump();
        let frozen = opened.effective_stress;

        // Shear the open crack so it carries tangential strain, then drive
        // the normal component through zero. The slip the faces accumulated
        // while apart must come out as permanent offset, not as a shear
        // stress spike: the effective stress is continuous through closure.
        let sheared = update_stress(&opened.state, SymTensor2::new(0.0, 0.0, 5.0e-3), &p).unwrap();
        assert_eq!(sheared.state.regime, Regime::CrackOpen);
        assert!(sheared.state.crack_strain.xy > 0.0);
        let slip = sheared.state.crack_strain.xy;
        let acc_before = sheared.state.acc_plastic;

        let r = update_stress(
            &sheared.state,
            SymTensor2::new(-jump * (1.0 + 1.0e-9), 0.0, 0.0),
            &p,
        )
        .unwrap();
        assert_eq!(r.state.regime, Regime::Elastoplastic);
        assert_eq!(r.state.crack_strain, SymTensor2::ZERO);
        assert_rel(r.state.plastic_strain.xy, slip, 1e-9);
        // The transfer is a kinematic reassignment, not plastic flow.
        assert_eq!(r.state.acc_plastic, acc_before);
        // Stress continuity: both ends of the (tiny) post-closure increment
        // stay near the frozen formation stress instead of jumping by the
        // elastic shear of the stored slip.
        assert_rel(r.effective_stress.xx, frozen.xx, 1e-4);
        assert!(r.effective_stress.xy.abs() < 1.0e-3 * p.young() * slip);
        assert!(yield_function(r.effective_stress, &p) <= p.yield_tol());
    }

    #[test]
    fn solve_beta_boundary_values() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let st = opened.state;
        let jump = st.jump();

        // Penetration by exactly twice the jump closes at beta = 0.5.
        let beta = solve_beta(&st, SymTensor2::new(-2.0 * jump, 0.0, 0.0)).unwrap();
        assert_rel(beta, 0.5, 1e-9);
        // No penetration is a precondition violation.
        assert!(solve_beta(&st, SymTensor2::new(1.0e-3, 0.0, 0.0)).is_err());
    }

    #[test]
    fn exact_strain_reversal_returns_the_crack_strain_to_zero() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(1.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let st = opened.state;
        let delta = SymTensor2::new(2.0e-3, 5.0e-4, 1.0e-4);
        let fwd = update_stress(&st, delta, &p).unwrap();
        let back = update_stress(&fwd.state, -delta, &p).unwrap();
        // The opening jump returns exactly to its pre-excursion value and
        // the crack strain to its pre-excursion tensor.
        assert_eq!(back.state.regime, Regime::CrackOpen);
        assert_rel(back.state.crack_strain.xx, st.crack_strain.xx, 1e-12);
        assert!((back.state.crack_strain.yy - st.crack_strain.yy).abs() <= 1e-18);
        assert!((back.state.crack_strain.xy - st.crack_strain.xy).abs() <= 1e-18);
    }

    #[test]
    fn reopening_recovers_the_crack_and_keeps_history() {
        let p = table_params(0.45);
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let max_jump = opened.state.max_jump;
        let damage_open = opened.damage;
        let jump = opened.state.jump();

        // Close fully and push into compression.
        let closed = update_stress(
            &opened.state,
            SymTensor2::new(-jump - 5.0e-3, 0.0, 0.0),
            &p,
        )
        .unwrap();
        assert_eq!(closed.state.regime, Regime::Elastoplastic);
        assert!(closed.effective_stress.xx < 0.0);
        // Compression passes undamaged.
        assert_rel(closed.stress.xx, closed.effective_stress.xx, 1e-12);

        // Reload past the locus: the crack reopens, history is retained.
        let reopened = update_stress(
            &closed.state,
            SymTensor2::new(jump + 6.0e-3, 0.0, 0.0),
            &p,
        )
        .unwrap();
        assert_eq!(reopened.state.regime, Regime::CrackOpen);
        assert_eq!(reopened.state.acc_plastic, p.plastic_strain_cap());
        assert!(reopened.state.max_jump >= max_jump);
        assert!(reopened.damage >= damage_open - 1e-12);
    }

    #[test]
    fn update_rejects_non_finite_input() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        assert!(matches!(
            update_stress(&st, SymTensor2::new(f64::NAN, 0.0, 0.0), &p),
            Err(UpdateError::NonFiniteInput)
        ));
    }

    #[test]
    fn tangent_off_diagonal_matches_poisson_coupling() {
        let p = table_params(0.45);
        let st = MaterialState::virgin();
        let t = tangent_numeric(&st, SymTensor2::new(1.0e-5, 0.0, 0.0), &p).unwrap();
        let ep = p.elastic().plane_modulus();
        assert_rel(t.0[0][0], ep, 1e-6);
        assert_rel(t.0[0][1], 0.2 * ep, 1e-6);
        assert_rel(t.0[1][0], 0.2 * ep, 1e-6);
        assert_rel(t.0[2][2], 28.0e9 / 1.2, 1e-6);
    }

    #[test]
    fn halved_increments_commit_the_same_state_within_a_regime() {
        let p = table_params(0.45);
        // Elastic, plastic and open-crack regimes, each driven by one
        // increment and by two halves.
        let paths = [
            (MaterialState::virgin(), SymTensor2::new(8.0e-5, 0.0, 1.0e-5)),
            (MaterialState::virgin(), SymTensor2::new(4.0e-4, -1.0e-4, 0.0)),
        ];
        for (st, deps) in paths {
            let whole = update_stress(&st, deps, &p).unwrap();
            let half = update_stress(&st, deps * 0.5, &p).unwrap();
            let two = update_stress(&half.state, deps * 0.5, &p).unwrap();
            assert_rel(whole.stress.xx, two.stress.xx, 1e-9);
            assert_rel(whole.stress.yy, two.stress.yy, 1e-9);
            assert!((whole.stress.xy - two.stress.xy).abs() <= 1e-9 * 3.8e6);
            assert!((whole.state.acc_plastic - two.state.acc_plastic).abs() <= 1e-9);
        }

        // Open crack regime.
        let opened = update_stress(
            &MaterialState::virgin(),
            SymTensor2::new(2.0e-2, 0.0, 0.0),
            &p,
        )
        .unwrap();
        let deps = SymTensor2::new(1.0e-3, 2.0e-4, 1.0e-4);
        let whole = update_stress(&opened.state, deps, &p).unwrap();
        let half = update_stress(&opened.state, deps * 0.5, &p).unwrap();
        let two = update_stress(&half.state, deps * 0.5, &p).unwrap();
        assert_rel(whole.damage, two.damage, 1e-12);
        assert_rel(whole.state.max_jump, two.state.max_jump, 1e-12);
    }
}
