//! Score functions, the score-matching objective, and the
//! Hamilton–Jacobi–Bellman residual of a candidate value function.
//!
//! These are the pieces that turn a learned or tabulated approximation of
//! `∇ log density` into a usable steering drift, and that measure how far a
//! candidate `Φ = −log φ` is from solving the stationary HJB equation tied
//! to the eigenvalue problem.

use crate::error::{Error, Result};
use crate::estimators::stable_sum;
use crate::problem::ProblemSpec;

/// A vector field `s: ℝᵈ → ℝᵈ` with a divergence, either supplied
/// analytically or approximated by central differences with step `delta`.
pub struct ScoreField {
    dim: usize,
    field: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    divergence: Divergence,
}

enum Divergence {
    Analytic(Box<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    CentralDifference { delta: f64 },
}

impl std::fmt::Debug for ScoreField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let div = match &self.divergence {
            Divergence::Analytic(_) => "analytic".to_string(),
            Divergence::CentralDifference { delta } => format!("central(δ={delta})"),
        };
        f.debug_struct("ScoreField").field("dim", &self.dim).field("divergence", &div).finish()
    }
}

impl ScoreField {
    /// Score with an analytic divergence.
    pub fn new(
        dim: usize,
        field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        divergence: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("a score field needs dimension ≥ 1".into()));
        }
        Ok(Self {
            dim,
            field: Box::new(field),
            divergence: Divergence::Analytic(Box::new(divergence)),
        })
    }

    /// Score whose divergence is estimated by central differences with step
    /// `delta` per axis.
    pub fn with_numeric_divergence(
        dim: usize,
        field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        delta: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("a score field needs dimension ≥ 1".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "finite-difference step must be positive (got {delta})"
            )));
        }
        Ok(Self {
            dim,
            field: Box::new(field),
            divergence: Divergence::CentralDifference { delta },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate `s(x)` into `out`.
    pub fn evaluate(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.field)(x, out);
    }

    /// Divergence `∇·s(x)`.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        match &self.divergence {
            Divergence::Analytic(div) => div(x),
            Divergence::CentralDifference { delta } => {
                let mut shifted = x.to_vec();
                let mut buf = vec![0.0; self.dim];
                let mut total = 0.0;
                for k in 0..self.dim {
                    shifted[k] = x[k] + delta;
                    (self.field)(&shifted, &mut buf);
                    let plus = buf[k];
                    shifted[k] = x[k] - delta;
                    (self.field)(&shifted, &mut buf);
                    let minus = buf[k];
                    shifted[k] = x[k];
                    total += (plus - minus) / (2.0 * delta);
                }
                total
            }
        }
    }
}

/// Empirical score-matching objective over sample points:
/// `(1/m) Σ [ ‖s(xᵢ)‖² + 2 ∇·s(xᵢ) ]`.
///
/// Up to a constant independent of `s`, this equals
/// `E‖s − ∇ log p‖²` under the sampling density `p`, so it is minimized by
/// the true score. `points` is a flat `m × dim` buffer.
pub fn score_matching_loss(score: &ScoreField, points: &[f64]) -> Result<f64> {
    let d = score.dim();
    if points.is_empty() || !points.len().is_multiple_of(d) {
        return Err(Error::InvalidInput(format!(
            "need a nonempty flat m × {d} sample buffer (got length {})",
            points.len()
        )));
    }
    let m = points.len() / d;
    let mut buf = vec![0.0; d];
    let total = stable_sum((0..m).map(|i| {
        let x = &points[i * d..(i + 1) * d];
        score.evaluate(x, &mut buf);
        let sq: f64 = buf.iter().map(|&v| v * v).sum();
        sq + 2.0 * score.divergence(x)
    }));
    Ok(total / m as f64)
}

/// Steering drift implied by a score: `u = √ε · s(x)`.
pub fn control_from_score(score: &ScoreField, epsilon: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive (got {epsilon})")));
    }
    let mut out = vec![0.0; score.dim()];
    score.evaluate(x, &mut out);
    let scale = epsilon.sqrt();
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

/// A candidate value function `Φ` with analytic derivatives.
pub struct ValueFunction {
    dim: usize,
    value: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    laplacian: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ValueFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueFunction").field("dim", &self.dim).finish()
    }
}

impl ValueFunction {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        laplacian: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            laplacian: Box::new(laplacian),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        (self.laplacian)(x)
    }
}

/// Pointwise residual of the stationary HJB equation satisfied by
/// `Φ = −log φ` at eigenvalue `λ`:
///
/// `r(x) = −⟨DV, DΦ⟩ − ν‖DΦ‖² + ν ΔΦ + c(x) − λ`,  `ν = ε_eff / 2`.
///
/// The exact pair (Φ, λ) makes `r ≡ 0`; in the Gibbs case Φ ≡ 0, λ = 0 and
/// the residual reduces to `c(x)`.
pub fn hjb_residual(
    phi: &ValueFunction,
    spec: &ProblemSpec,
    lambda: f64,
    x: &[f64],
) -> Result<f64> {
    if phi.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "value function dimension {} does not match the problem dimension {}",
            phi.dim(),
            spec.dim()
        )));
    }
    let d = spec.dim();
    let nu = 0.5 * spec.noise_variance();
    let mut dv = vec![0.0; d];
    let mut dphi = vec![0.0; d];
    spec.grad_v(x, &mut dv);
    phi.gradient(x, &mut dphi);
    let advect: f64 = dv.iter().zip(&dphi).map(|(&a, &b)| a * b).sum();
    let grad_sq: f64 = dphi.iter().map(|&g| g * g).sum();
    Ok(-advect - nu * grad_sq + nu * phi.laplacian(x) + spec.c(x) - lambda)
}
