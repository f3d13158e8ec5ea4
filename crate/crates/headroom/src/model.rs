//! The headroom ratio, the stylized degradation model, and the logistic
//! collapse curve — pure value-level computations shared by every experiment.
//!
//! The central quantity is the inference headroom ratio
//! `ihr = C / (U + K)`: effective capacity over combined environmental
//! demand. Values well above 1 mean surplus capacity; values below 1 mean the
//! system is operating beyond its means. Accuracy degrades linearly in `U`,
//! `K`, and their interaction, and a collapse event is the accuracy falling
//! below a fixed threshold.

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Errors from constructing or evaluating model values.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// `U + K` was not strictly positive, so the ratio is undefined. Signals
    /// a state that bypassed environment clipping.
    DegenerateDenominator { u: f64, k: f64 },
    /// A logistic collapse curve needs a strictly negative slope; collapse
    /// probability must decrease as headroom grows.
    NonNegativeSlope { beta1: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DegenerateDenominator { u, k } => write!(
                f,
                "degenerate denominator: u + k must be > 0 (u = {u}, k = {k})"
            ),
            ModelError::NonNegativeSlope { beta1 } => {
                write!(f, "invalid collapse curve: beta1 must be < 0, got {beta1}")
            }
        }
    }
}

impl Error for ModelError {}

/// One system operating point: capacity against environmental demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    /// Effective inferential capacity, dimensionless, > 0.
    pub capacity_c: f64,
    /// Environmental uncertainty burden, dimensionless, >= 0.
    pub uncertainty_u: f64,
    /// Constraint load, dimensionless, >= 0.
    pub constraint_k: f64,
}

impl SystemState {
    pub fn new(capacity_c: f64, uncertainty_u: f64, constraint_k: f64) -> Self {
        SystemState {
            capacity_c,
            uncertainty_u,
            constraint_k,
        }
    }

    /// The inference headroom ratio `C / (U + K)`.
    ///
    /// Errors when the demand sum is not strictly positive — states that have
    /// passed [`clip_environment`] cannot trigger this.
    pub fn ihr(&self) -> Result<f64, ModelError> {
        let demand = self.uncertainty_u + self.constraint_k;
        if demand <= 0.0 {
            return Err(ModelError::DegenerateDenominator {
                u: self.uncertainty_u,
                k: self.constraint_k,
            });
        }
        Ok(self.capacity_c / demand)
    }
}

/// Parameters of the stylized accuracy-degradation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    /// Accuracy with zero environmental stress.
    pub base_accuracy: f64,
    /// Linear penalty per unit of uncertainty.
    pub coef_u: f64,
    /// Linear penalty per unit of constraint load.
    pub coef_k: f64,
    /// Penalty on the uncertainty-constraint interaction.
    pub coef_interaction: f64,
    /// Standard deviation of the additive accuracy noise, >= 0.
    pub accuracy_noise_sd: f64,
    /// Accuracy strictly below this value is a collapse event.
    pub collapse_threshold: f64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        DegradationParams {
            base_accuracy: 0.96,
            coef_u: 0.22,
            coef_k: 0.18,
            coef_interaction: 0.28,
            accuracy_noise_sd: 0.015,
            collapse_threshold: 0.74,
        }
    }
}

impl DegradationParams {
    /// Accuracy at the given operating point with a realized noise value.
    ///
    /// The caller supplies the noise draw so this stays a deterministic
    /// function. The result is deliberately NOT clamped to [0, 1]: the
    /// stylized model goes negative under extreme stress, and only the
    /// comparison against the collapse threshold is ever consumed, so
    /// clamping would hide model behavior while changing nothing.
    pub fn degraded_accuracy(&self, state: &SystemState, noise_draw: f64) -> f64 {
        let u = state.uncertainty_u;
        let k = state.constraint_k;
        self.base_accuracy - self.coef_u * u - self.coef_k * k - self.coef_interaction * (u * k)
            + noise_draw
    }

    /// Collapse predicate: strictly below threshold. Accuracy exactly at the
    /// threshold is NOT a collapse.
    pub fn is_collapse(&self, accuracy: f64) -> bool {
        accuracy < self.collapse_threshold
    }
}

/// Replaces each environmental component with `max(component, clip_floor)`.
///
/// The floor keeps the demand sum strictly positive when noise drives `U` or
/// `K` toward (or past) zero. It is also the origin of the high-noise ratio
/// artifact: a both-components-clipped step can push the ratio into the
/// hundreds.
pub fn clip_environment(u: f64, k: f64, clip_floor: f64) -> (f64, f64) {
    (u.max(clip_floor), k.max(clip_floor))
}

/// The two-parameter logistic collapse curve
/// `P(collapse | ihr) = sigmoid(beta0 + beta1 * ihr)`.
///
/// The slope must be strictly negative: collapse probability decreases as
/// headroom grows. Constructors reject anything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticModel {
    beta0: f64,
    beta1: f64,
}

impl LogisticModel {
    // The negated comparison is load-bearing: `!(beta1 < 0.0)` also rejects
    // NaN, which `beta1 >= 0.0` would accept.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(beta0: f64, beta1: f64) -> Result<Self, ModelError> {
        if !(beta1 < 0.0) {
            return Err(ModelError::NonNegativeSlope { beta1 });
        }
        Ok(LogisticModel { beta0, beta1 })
    }

    /// Intercept of the linear predictor.
    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// Slope of the linear predictor (always < 0).
    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    /// Collapse probability at the given ratio, strictly inside (0, 1).
    ///
    /// Evaluated through the branch that never exponentiates a large positive
    /// argument, then nudged off exact 0 and 1 — high-noise ratio spikes
    /// reach the hundreds, where a naive sigmoid underflows to exactly 0.
    pub fn collapse_prob(&self, ihr: f64) -> f64 {
        let z = self.beta0 + self.beta1 * ihr;
        let p = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    /// The ratio at which the collapse probability crosses one half:
    /// `-beta0 / beta1`.
    pub fn critical_threshold(&self) -> f64 {
        -self.beta0 / self.beta1
    }
}

/// Strict deserialization with the slope invariant enforced; a config file
/// cannot smuggle in a non-decreasing curve.
impl<'de> Deserialize<'de> for LogisticModel {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            beta0: f64,
            beta1: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        LogisticModel::new(raw.beta0, raw.beta1).map_err(serde::de::Error::custom)
    }
}
