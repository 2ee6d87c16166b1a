//! Plane-stress ductile damage with a recoverable crack-opening strain.
//!
//! The model splits total strain into elastic, plastic and crack parts.
//! Plastic flow follows a maximum-principal-stress yield surface on the
//! effective (undamaged) stress. Damage grows exponentially with the
//! accumulated plastic multiplier up to a critical value, after which a
//! crack forms: further straining is stored on a recoverable crack strain
//! while the effective stress stays frozen on the yield locus. Closing the
//! crack removes the crack strain and restores the full elastic stiffness
//! in compression. Damage never decreases; post-crack growth is driven by
//! the largest crack-opening jump seen so far.
//!
//! Cauchy stress degrades only the tensile spectral part of the effective
//! stress, so compressive load paths always see the undamaged stiffness.

mod update;

pub use update::{
    solve_alpha, solve_beta, tangent_numeric, update, update_stress, AlphaSolution, StressUpdate,
    UpdateResult,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{macaulay, ElasticOperator, SymTensor2};

/// Relative tolerance (times the yield stress) within which an effective
/// stress counts as admissible.
pub const YIELD_TOL_REL: f64 = 1e-9;

/// Hard cap on regime transitions handled inside one strain increment.
/// Exceeding it signals that the caller must cut the increment.
pub const MAX_TRANSITIONS: usize = 10;

/// Slack allowed on the accumulated-plastic-strain cap in committed states.
pub const ACC_CAP_SLACK: f64 = 1e-14;

/// The committed crack-opening jump may be negative only by this much.
pub const JUMP_FLOOR: f64 = -1e-12;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("Young's modulus must be positive and finite, got {0}")]
    Young(f64),
    #[error("Poisson's ratio must satisfy 0 <= nu < 0.5, got {0}")]
    Poisson(f64),
    #[error("yield stress must be positive and finite, got {0}")]
    YieldStress(f64),
    #[error("plastic damage rate must be positive and finite, got {0}")]
    PlasticDamageRate(f64),
    #[error("crack damage rate must be non-negative and finite, got {0}")]
    CrackDamageRate(f64),
    #[error("critical damage must lie in (0, 1], got {0}")]
    CriticalDamage(f64),
}

/// Material constants of the damage model.
///
/// Stresses are in Pa; the damage rates are dimensionless exponents applied
/// to the accumulated plastic multiplier and to the crack-opening jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MaterialParams {
    young: f64,
    poisson: f64,
    yield_stress: f64,
    plastic_damage_rate: f64,
    crack_damage_rate: f64,
    critical_damage: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    young: f64,
    poisson: f64,
    yield_stress: f64,
    plastic_damage_rate: f64,
    crack_damage_rate: f64,
    critical_damage: f64,
}

impl TryFrom<RawParams> for MaterialParams {
    type Error = ParamsError;
    fn try_from(r: RawParams) -> Result<Self, ParamsError> {
        MaterialParams::new(
            r.young,
            r.poisson,
            r.yield_stress,
            r.plastic_damage_rate,
            r.crack_damage_rate,
            r.critical_damage,
        )
    }
}

impl From<MaterialParams> for RawParams {
    fn from(p: MaterialParams) -> RawParams {
        RawParams {
            young: p.young,
            poisson: p.poisson,
            yield_stress: p.yield_stress,
            plastic_damage_rate: p.plastic_damage_rate,
            crack_damage_rate: p.crack_damage_rate,
            critical_damage: p.critical_damage,
        }
    }
}

impl MaterialParams {
    pub fn new(
        young: f64,
        poisson: f64,
        yield_stress: f64,
        plastic_damage_rate: f64,
        crack_damage_rate: f64,
        critical_damage: f64,
    ) -> Result<Self, ParamsError> {
        if !(young > 0.0) || !young.is_finite() {
            return Err(ParamsError::Young(young));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(ParamsError::Poisson(poisson));
        }
        if !(yield_stress > 0.0) || !yield_stress.is_finite() {
            return Err(ParamsError::YieldStress(yield_stress));
        }
        if !(plastic_damage_rate > 0.0) || !plastic_damage_rate.is_finite() {
            return Err(ParamsError::PlasticDamageRate(plastic_damage_rate));
        }
        if !(crack_damage_rate >= 0.0) || !crack_damage_rate.is_finite() {
            return Err(ParamsError::CrackDamageRate(crack_damage_rate));
        }
        if !(critical_damage > 0.0 && critical_damage <= 1.0) {
            return Err(ParamsError::CriticalDamage(critical_damage));
        }
        Ok(Self {
            young,
            poisson,
            yield_stress,
            plastic_damage_rate,
            crack_damage_rate,
            critical_damage,
        })
    }

    pub fn young(&self) -> f64 {
        self.young
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    pub fn yield_stress(&self) -> f64 {
        self.yield_stress
    }

    /// Exponential rate of damage growth with the plastic multiplier.
    pub fn plastic_damage_rate(&self) -> f64 {
        self.plastic_damage_rate
    }

    /// Exponential rate of damage growth with the crack-opening jump.
    pub fn crack_damage_rate(&self) -> f64 {
        self.crack_damage_rate
    }

    /// Damage level at which plastic flow stops and a crack forms.
    pub fn critical_damage(&self) -> f64 {
        self.critical_damage
    }

    /// Copy with a different critical damage (used by parameter sweeps).
    pub fn with_critical_damage(&self, d_cr: f64) -> Result<Self, ParamsError> {
        Self::new(
            self.young,
            self.poisson,
            self.yield_stress,
            self.plastic_damage_rate,
            self.crack_damage_rate,
            d_cr,
        )
    }

    pub fn elastic(&self) -> ElasticOperator {
        ElasticOperator::new(self.young, self.poisson).expect("params are validated")
    }

    /// Accumulated plastic multiplier at which damage reaches its critical
    /// value. Infinite when `critical_damage == 1`, which disables the crack
    /// regime entirely.
    pub fn plastic_strain_cap(&self) -> f64 {
        if self.critical_damage >= 1.0 {
            f64::INFINITY
        } else {
            -(1.0 - self.critical_damage).ln() / self.plastic_damage_rate
        }
    }

    /// Absolute admissibility tolerance on the yield function.
    pub fn yield_tol(&self) -> f64 {
        YIELD_TOL_REL * self.yield_stress
    }
}

/// Which branch of the model a quadrature point currently follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// No open crack; elastic response with possible plastic flow.
    Elastoplastic,
    /// An open crack carries all further strain on the crack strain field.
    CrackOpen,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Elastoplastic => "elastoplastic",
            Regime::CrackOpen => "crack_open",
        }
    }
}

/// Committed history of one material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialState {
    /// Total strain at the last commit.
    pub strain: SymTensor2,
    /// Plastic strain (permanent).
    pub plastic_strain: SymTensor2,
    /// Recoverable strain carried by the open crack; zero whenever the
    /// regime is [`Regime::Elastoplastic`].
    pub crack_strain: SymTensor2,
    /// Accumulated plastic multiplier.
    pub acc_plastic: f64,
    /// Largest crack-opening jump seen so far (never decreases).
    pub max_jump: f64,
    /// Unit normal of the crack plane. Set at crack formation and retained
    /// after closure so the history stays inspectable.
    pub crack_normal: Option<[f64; 2]>,
    pub regime: Regime,
}

impl MaterialState {
    pub fn virgin() -> Self {
        Self {
            strain: SymTensor2::ZERO,
            plastic_strain: SymTensor2::ZERO,
            crack_strain: SymTensor2::ZERO,
            acc_plastic: 0.0,
            max_jump: 0.0,
            crack_normal: None,
            regime: Regime::Elastoplastic,
        }
    }

    pub fn elastic_strain(&self) -> SymTensor2 {
        self.strain - self.plastic_strain - self.crack_strain
    }

    pub fn effective_stress(&self, params: &MaterialParams) -> SymTensor2 {
        params.elastic().apply(self.elastic_strain())
    }

    /// Current crack-opening jump, zero when no crack normal exists.
    pub fn jump(&self) -> f64 {
        match self.crack_normal {
            Some(n) => self.crack_strain.normal_component(n),
            None => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.strain.is_finite()
            && self.plastic_strain.is_finite()
            && self.crack_strain.is_finite()
            && self.acc_plastic.is_finite()
            && self.max_jump.is_finite()
            && self.crack_normal.map_or(true, |n| n[0].is_finite() && n[1].is_finite())
    }
}

/// Yield function: largest principal effective stress (clamped at zero)
/// minus the yield stress. Negative or zero means admissible; purely
/// compressive states never yield.
pub fn yield_function(sigma_eff: SymTensor2, params: &MaterialParams) -> f64 {
    macaulay(sigma_eff.spectral().values[0]) - params.yield_stress
}

/// Result of [`return_map`].
#[derive(Debug, Clone, Copy)]
pub struct ReturnMapping {
    /// Effective stress mapped back to the yield locus.
    pub stress: SymTensor2,
    /// Total plastic multiplier of the step.
    pub multiplier: f64,
    /// Flow direction, normalized so the plastic strain increment equals
    /// `flow * multiplier`.
    pub flow: SymTensor2,
}

/// Closed-form return of a trial effective stress onto the yield locus.
///
/// The regular return pulls the largest principal stress back along its
/// eigendirection. When that would leave the second principal stress above
/// the locus, both principal directions flow together and the mapped stress
/// sits in the corner where both principal stresses equal the yield stress.
/// A trial inside the locus is returned unchanged with a zero multiplier.
pub fn return_map(trial: SymTensor2, params: &MaterialParams) -> ReturnMapping {
    let spec = trial.spectral();
    let [l1, l2] = spec.values;
    let sy = params.yield_stress;
    let dyad1 = SymTensor2::dyad(spec.directions[0]);
    let dyad2 = SymTensor2::dyad(spec.directions[1]);

    if macaulay(l1) - sy <= 0.0 {
        return ReturnMapping {
            stress: trial,
            multiplier: 0.0,
            flow: dyad1,
        };
    }

    let ep = params.elastic().plane_modulus();
    let nu = params.poisson;

    let regular = (l1 - sy) / ep;
    let l2_after = l2 - nu * (l1 - sy);
    if l2_after > sy {
        // Corner: both surfaces active, solve the 2x2 principal system.
        let r1 = (l1 - sy) / ep;
        let r2 = (l2 - sy) / ep;
        let den = 1.0 - nu * nu;
        let g1 = (r1 - nu * r2) / den;
        let g2 = (r2 - nu * r1) / den;
        let multiplier = g1 + g2;
        ReturnMapping {
            stress: dyad1 * sy + dyad2 * sy,
            multiplier,
            flow: (dyad1 * g1 + dyad2 * g2) * (1.0 / multiplier),
        }
    } else {
        ReturnMapping {
            stress: dyad1 * sy + dyad2 * l2_after,
            multiplier: regular,
            flow: dyad1,
        }
    }
}

/// Damage from the committed history:
/// `d = 1 - exp(-a * acc_plastic) * exp(-b * max_jump)`.
pub fn damage_from_state(state: &MaterialState, params: &MaterialParams) -> f64 {
    let exponent =
        params.plastic_damage_rate * state.acc_plastic + params.crack_damage_rate * state.max_jump;
    1.0 - (-exponent).exp()
}

/// Cauchy stress from effective stress: damage degrades only the tensile
/// spectral part, the compressive part passes through unchanged.
pub fn map_to_cauchy(sigma_eff: SymTensor2, damage: f64) -> SymTensor2 {
    let (tension, compression) = sigma_eff.split_tension_compression();
    tension * (1.0 - damage) + compression
}

/// One row of a material-point history log: everything a driver commits
/// at a sample time.
#[derive(Debug, Clone, Copy)]
pub struct PathRecord {
    pub time: f64,
    pub strain: SymTensor2,
    pub effective_stress: SymTensor2,
    pub stress: SymTensor2,
    pub damage: f64,
    pub regime: Regime,
}

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("strain increment contains non-finite components")]
    NonFiniteInput,
    #[error("committed state would contain non-finite values")]
    NonFiniteState,
    #[error("more than {MAX_TRANSITIONS} regime transitions in one strain increment")]
    TooManyTransitions,
    #[error("crack-formation fraction search failed: {0}")]
    AlphaSearch(&'static str),
    #[error("inconsistent material state: {0}")]
    BrokenState(&'static str),
    #[error("committed effective stress violates the yield locus (f = {f:.6e} Pa)")]
    Inadmissible { f: f64 },
}
