//! Maximum-likelihood fitting of the logistic collapse curve.
//!
//! Fits `P(collapse | ihr) = sigmoid(beta0 + beta1 * ihr)` to binary
//! outcomes by damped Newton-Raphson on the Bernoulli log-likelihood. The
//! problem is two-dimensional with a closed-form Hessian, so the fit needs no
//! external solver and converges in a handful of iterations on anything
//! resembling real collapse data.
//!
//! Degenerate inputs fail loudly: single-label data has an unbounded
//! likelihood, and a sharp enough transition can approach quasi-complete
//! separation, where the MLE runs away to infinite slope. Both are reported
//! as errors rather than returned as runaway coefficients.

use std::error::Error;
use std::fmt;

use crate::model::LogisticModel;

/// Convergence declared when the Newton step shrinks below this.
const STEP_TOL: f64 = 1e-10;
/// ... or when the gradient norm shrinks below this.
const GRAD_TOL: f64 = 1e-12;
/// Iteration cap before reporting non-convergence.
const MAX_ITER: u32 = 100;
/// Step halvings allowed per iteration before giving up on the line search.
const MAX_HALVINGS: u32 = 30;
/// Slope magnitude beyond which the data are treated as separated.
const SEPARATION_SLOPE: f64 = 1e3;

/// Errors from [`fit_logistic`].
#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    /// Every outcome has the same label; the likelihood is unbounded.
    DegenerateOutcomes { n: usize, all_collapsed: bool },
    /// Quasi-complete separation: a threshold on the predictor (nearly)
    /// perfectly splits the labels and the MLE diverges.
    Separation { beta1: f64 },
    /// The iteration cap was reached without meeting a convergence criterion.
    NonConvergence { iterations: u32 },
    /// The fitted slope came out non-negative, which no valid collapse curve
    /// allows: the outcomes do not show probability decreasing in the ratio.
    NonDecreasingCurve { beta1: f64 },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::DegenerateOutcomes { n, all_collapsed } => {
                let label = if *all_collapsed { "collapsed" } else { "non-collapsed" };
                write!(f, "degenerate outcomes: all {n} observations are {label}")
            }
            FitError::Separation { beta1 } => write!(
                f,
                "quasi-complete separation: slope diverged (beta1 = {beta1:e})"
            ),
            FitError::NonConvergence { iterations } => {
                write!(f, "fit failed to converge within {iterations} iterations")
            }
            FitError::NonDecreasingCurve { beta1 } => write!(
                f,
                "fitted slope is non-negative (beta1 = {beta1}); outcomes lack a decreasing collapse curve"
            ),
        }
    }
}

impl Error for FitError {}

/// A converged logistic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// The fitted collapse curve.
    pub model: LogisticModel,
    /// The ratio at which the fitted curve crosses one half.
    pub ihr_star: f64,
    /// Bernoulli log-likelihood at the optimum.
    pub log_likelihood: f64,
    /// Newton iterations consumed.
    pub iterations: u32,
    /// Whether a convergence criterion was met (always true for a returned
    /// result; kept explicit because reports serialize it).
    pub converged: bool,
    /// Euclidean norm of the log-likelihood gradient at the optimum.
    pub gradient_norm: f64,
}

/// `softplus(t) = ln(1 + e^t)` without overflow for large `t`.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood of the curve on the outcomes. Always <= 0; empty
/// input gives the empty sum, 0.
pub fn log_likelihood(model: &LogisticModel, outcomes: &[(f64, bool)]) -> f64 {
    log_likelihood_raw(model.beta0(), model.beta1(), outcomes)
}

/// Log-likelihood for raw coefficients, used inside the optimizer before a
/// candidate has earned `LogisticModel`'s slope invariant.
fn log_likelihood_raw(beta0: f64, beta1: f64, outcomes: &[(f64, bool)]) -> f64 {
    outcomes
        .iter()
        .map(|&(x, y)| {
            let z = beta0 + beta1 * x;
            // log p = -softplus(-z), log(1-p) = -softplus(z).
            if y {
                -softplus(-z)
            } else {
                -softplus(z)
            }
        })
        .sum()
}

/// Gradient of the log-likelihood at the given coefficients.
pub fn log_likelihood_grad(beta0: f64, beta1: f64, outcomes: &[(f64, bool)]) -> (f64, f64) {
    let mut g0 = 0.0;
    let mut g1 = 0.0;
    for &(x, y) in outcomes {
        let z = beta0 + beta1 * x;
        let p = stable_sigmoid(z);
        let r = f64::from(y) - p;
        g0 += r;
        g1 += r * x;
    }
    (g0, g1)
}

fn stable_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits the collapse curve to `(ihr, collapsed)` outcomes by damped
/// Newton-Raphson from `(0, 0)`.
///
/// Requires at least one outcome of each label (and, implicitly, two distinct
/// predictor values — without them the Hessian is singular and the fit
/// reports separation).
pub fn fit_logistic(outcomes: &[(f64, bool)]) -> Result<FitResult, FitError> {
    let n_collapsed = outcomes.iter().filter(|&&(_, y)| y).count();
    if n_collapsed == 0 || n_collapsed == outcomes.len() {
        return Err(FitError::DegenerateOutcomes {
            n: outcomes.len(),
            all_collapsed: n_collapsed != 0,
        });
    }

    let mut beta0 = 0.0_f64;
    let mut beta1 = 0.0_f64;
    let mut ll = log_likelihood_raw(beta0, beta1, outcomes);
    let mut iterations = 0;

    let converged = loop {
        if iterations >= MAX_ITER {
            return Err(FitError::NonConvergence { iterations });
        }
        iterations += 1;

        let (g0, g1) = log_likelihood_grad(beta0, beta1, outcomes);
        if (g0 * g0 + g1 * g1).sqrt() < GRAD_TOL {
            break true;
        }

        // Negated Hessian (positive semi-definite): sum of w * [1 x; x x^2].
        let mut h00 = 0.0;
        let mut h01 = 0.0;
        let mut h11 = 0.0;
        for &(x, _) in outcomes {
            let p = stable_sigmoid(beta0 + beta1 * x);
            let w = p * (1.0 - p);
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !det.is_finite() || det.abs() < 1e-12 * h00.max(h11).max(1.0) {
            return Err(FitError::Separation { beta1 });
        }

        // Newton direction: solve (-H) d = g.
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;

        // Backtracking line search: halve until the likelihood stops
        // decreasing.
        let mut scale = 1.0;
        let mut halvings = 0;
        let (next0, next1, next_ll) = loop {
            let c0 = beta0 + scale * d0;
            let c1 = beta1 + scale * d1;
            let c_ll = log_likelihood_raw(c0, c1, outcomes);
            if c_ll >= ll || halvings >= MAX_HALVINGS {
                break (c0, c1, c_ll);
            }
            scale *= 0.5;
            halvings += 1;
        };

        let step = ((next0 - beta0).powi(2) + (next1 - beta1).powi(2)).sqrt();
        beta0 = next0;
        beta1 = next1;
        ll = next_ll;

        if beta1.abs() > SEPARATION_SLOPE {
            return Err(FitError::Separation { beta1 });
        }
        if step < STEP_TOL {
            break true;
        }
    };

    let model =
        LogisticModel::new(beta0, beta1).map_err(|_| FitError::NonDecreasingCurve { beta1 })?;
    let (g0, g1) = log_likelihood_grad(beta0, beta1, outcomes);
    Ok(FitResult {
        model,
        ihr_star: model.critical_threshold(),
        log_likelihood: ll,
        iterations,
        converged,
        gradient_norm: (g0 * g0 + g1 * g1).sqrt(),
    })
}
