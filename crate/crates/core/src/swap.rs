//! Swap weights and rates for a forward/backward pair of walkers.
//!
//! A pair at `(x, y)` splits its statistical weight between the two role
//! assignments according to `ρ_ε(x, y) = (exp(2(V(x) − V(y))/ε) + 1)^{-1}`,
//! the zero-temperature limit of swapping the roles at rate K → ∞. The
//! finite-K Metropolis rate and the implied two-particle potential
//! `W_ε(x, y) = −ε·log(e^{−(Ψ(x)+Φ(y))/ε} + e^{−(Ψ(y)+Φ(x))/ε})` live here
//! too. All exponentials are evaluated in overflow-safe forms; the
//! temperature entering every formula is the effective one
//! (`diffusion_scale · ε`).

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// The infinite-swapping weight ρ ∈ [0, 1]: the fraction of time (and
/// weight) the pair spends in the unswapped role assignment.
///
/// Strictly inside (0, 1) unless the potential difference is so large that
/// the sigmoid underflows in f64 (|2ΔV/ε| ≳ 745), where it saturates to an
/// exact 0 or 1; the complement identity ρ(x,y) + ρ(y,x) = 1 survives
/// saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapWeight(f64);

impl SwapWeight {
    /// Build from a raw sigmoid argument `u = 2(V(x) − V(y))/ε`, computed
    /// without ever exponentiating a positive number.
    #[inline]
    fn from_exponent(u: f64) -> Self {
        let rho = if u >= 0.0 {
            let e = (-u).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + u.exp())
        };
        SwapWeight(rho)
    }

    /// The weight of the unswapped assignment.
    #[inline]
    pub fn rho(self) -> f64 {
        self.0
    }

    /// The weight `1 − ρ` of the swapped assignment.
    #[inline]
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

/// Infinite-swapping weight of the pair `(x, y)` under `spec`.
///
/// `ρ = (exp(2(V(x) − V(y))/ε_eff) + 1)^{-1}`: close to 1 when `x` sits much
/// deeper in the landscape than `y`, exactly ½ on level sets.
#[inline]
pub fn inf_swap_weight(x: &[f64], y: &[f64], spec: &ProblemSpec) -> SwapWeight {
    let u = 2.0 * (spec.v(x) - spec.v(y)) / spec.epsilon_eff();
    SwapWeight::from_exponent(u)
}

/// Continuous-time Metropolis swap rate `K·exp(−(2V(y) − 2V(x))⁺/ε_eff)`.
///
/// Always in (0, K]; equals K downhill. Satisfies detailed balance with
/// respect to the product Gibbs weights.
pub fn finite_swap_rate(
    x: &[f64],
    y: &[f64],
    spec: &ProblemSpec,
    swap_intensity: f64,
) -> Result<f64> {
    if !(swap_intensity > 0.0) || !swap_intensity.is_finite() {
        return Err(Error::InvalidInput(format!(
            "swap intensity must be positive and finite (got {swap_intensity})"
        )));
    }
    let uphill = (2.0 * spec.v(y) - 2.0 * spec.v(x)).max(0.0);
    Ok(swap_intensity * (-uphill / spec.epsilon_eff()).exp())
}

/// The implied two-particle potential on a product grid.
#[derive(Debug, Clone)]
pub struct ImpliedPotentialSurface {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major values, `w[i·len(ys) + j] = W(xs[i], ys[j])`.
    w: Vec<f64>,
}

impl ImpliedPotentialSurface {
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.ys.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn min_value(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Indices of the smallest value (first in row-major order on ties).
    pub fn argmin(&self) -> (usize, usize) {
        let (mut best, mut at) = (f64::INFINITY, 0);
        for (idx, &v) in self.w.iter().enumerate() {
            if v < best {
                best = v;
                at = idx;
            }
        }
        (at / self.ys.len(), at % self.ys.len())
    }
}

/// Evaluate `W_ε(x, y) = −ε·log(e^{−(Ψ(x)+Φ(y))/ε} + e^{−(Ψ(y)+Φ(x))/ε})`
/// on the product of two 1-d grids, in log-sum-exp stabilized form.
///
/// For the Gibbs case pass `Ψ = −ε·log ψ` and `Φ ≡ 0`; with the builtin
/// √(2ε)-noise landscapes this reduces to `Ψ = V`. The surface is symmetric
/// when the two grids coincide, and on the diagonal reduces to
/// `Ψ(x) + Φ(x) − ε·log 2`.
pub fn implied_potential(
    xs: &[f64],
    ys: &[f64],
    psi: impl Fn(f64) -> f64,
    phi: impl Fn(f64) -> f64,
    epsilon: f64,
) -> Result<ImpliedPotentialSurface> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidInput("implied potential needs nonempty grids".into()));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive (got {epsilon})")));
    }
    let psi_x: Vec<f64> = xs.iter().map(|&x| psi(x)).collect();
    let phi_x: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    let psi_y: Vec<f64> = ys.iter().map(|&y| psi(y)).collect();
    let phi_y: Vec<f64> = ys.iter().map(|&y| phi(y)).collect();
    let mut w = Vec::with_capacity(xs.len() * ys.len());
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            let t1 = psi_x[i] + phi_y[j];
            let t2 = psi_y[j] + phi_x[i];
            // −ε·log(e^{−t1/ε} + e^{−t2/ε}) = min(t1,t2) − ε·log(1 + e^{−|t1−t2|/ε})
            let lo = t1.min(t2);
            let gap = (t1 - t2).abs();
            w.push(lo - epsilon * (-gap / epsilon).exp().ln_1p());
        }
    }
    Ok(ImpliedPotentialSurface { xs: xs.to_vec(), ys: ys.to_vec(), w })
}
