//! Problem specification: periodic geometry, the potential landscape, the
//! killing field, and the temperature.
//!
//! A [`ProblemSpec`] bundles everything the dynamics need: a periodic box, a
//! potential `V` with analytic gradient and Laplacian, a zeroth-order killing
//! rate `c`, the temperature `ε`, and a `diffusion_scale` flag selecting
//! between √ε and √(2ε) noise. Derivatives are supplied analytically and
//! verified against finite differences at construction, so a wrong gradient
//! fails loudly instead of silently corrupting every estimator downstream.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Which of the two adjoint eigenproblems a component addresses: `Forward`
/// targets the density side ψ (drift −DV, rate c), `Backward` the function
/// side φ (drift +DV, rate c̄ = c − ΔV).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

// ---------------------------------------------------------------------------
// Periodic geometry
// ---------------------------------------------------------------------------

/// An axis-aligned periodic box; points live in `[lower_i, upper_i)` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PeriodicBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "box bounds must be nonempty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, up)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !up.is_finite() || up <= lo {
                return Err(Error::Config(format!(
                    "box axis {k} needs finite bounds with upper > lower (got [{lo}, {up}))"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[0,1)^d`.
    pub fn unit(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit box is valid")
    }

    /// `[lo, up)^d`.
    pub fn cube(d: usize, lo: f64, up: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![up; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn period(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Wrap one coordinate into `[lower, upper)`.
    #[inline]
    pub fn wrap_coord(&self, axis: usize, v: f64) -> f64 {
        let lo = self.lower[axis];
        let p = self.period(axis);
        let mut w = v - p * ((v - lo) / p).floor();
        // Guard the two rounding escapes of the float arithmetic above.
        if w >= self.upper[axis] {
            w -= p;
        }
        if w < lo {
            w = lo;
        }
        w
    }

    /// Wrap a point in place. Errors on non-finite coordinates.
    pub fn wrap_in_place(&self, x: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim());
        for (k, v) in x.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "cannot wrap non-finite coordinate {v} on axis {k}"
                )));
            }
            *v = self.wrap_coord(k, *v);
        }
        Ok(())
    }

    /// Wrapped copy of a point.
    pub fn wrap(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut w = x.to_vec();
        self.wrap_in_place(&mut w)?;
        Ok(w)
    }

    /// Signed displacement folded into `[-period/2, period/2]` on one axis.
    #[inline]
    pub fn min_image(&self, axis: usize, delta: f64) -> f64 {
        let p = self.period(axis);
        delta - p * (delta / p).round()
    }

    /// Periodic distance between two points.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for k in 0..self.dim() {
            let d = self.min_image(k, a[k] - b[k]);
            r2 += d * d;
        }
        r2.sqrt()
    }

    /// Uniform point, axes ascending (one uniform draw per axis).
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = rng.uniform_in(self.lower[k], self.upper[k]);
        }
    }
}

// ---------------------------------------------------------------------------
// Grid step policy
// ---------------------------------------------------------------------------

/// How the jump-chain step `h` is chosen: fixed, or drawn iid per rate
/// recomputation from `U(h_min, h_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    Fixed { h: f64 },
    UniformRandom { h_min: f64, h_max: f64 },
}

impl GridPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GridPolicy::Fixed { h } => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(Error::Config(format!(
                        "fixed grid step must be positive (got {h})"
                    )));
                }
            }
            GridPolicy::UniformRandom { h_min, h_max } => {
                if !(h_min > 0.0) || !(h_max > h_min) || !h_max.is_finite() {
                    return Err(Error::Config(format!(
                        "random grid bounds must satisfy 0 < h_min < h_max (got [{h_min}, {h_max}])"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draw a step. The fixed policy consumes no randomness.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            GridPolicy::Fixed { h } => h,
            GridPolicy::UniformRandom { h_min, h_max } => rng.uniform_in(h_min, h_max),
        }
    }

    /// Largest step the policy can produce.
    pub fn max_step(&self) -> f64 {
        match *self {
            GridPolicy::Fixed { h } => h,
            GridPolicy::UniformRandom { h_max, .. } => h_max,
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar fields with derivatives
// ---------------------------------------------------------------------------

/// A scalar field together with its analytic gradient and Laplacian.
///
/// Used for user-supplied potentials, consistency test functions, and the
/// log-eigenfunction in residual checks.
pub struct ScalarField {
    dim: usize,
    value: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    laplacian: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl ScalarField {
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

    /// One-dimensional field from scalar closures.
    pub fn univariate(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            1,
            move |x: &[f64]| value(x[0]),
            move |x: &[f64], out: &mut [f64]| out[0] = derivative(x[0]),
            move |x: &[f64]| second(x[0]),
        )
    }

    /// Field backed by a periodic cubic spline (d = 1).
    pub fn from_spline(spline: PeriodicSpline) -> Self {
        let s1 = spline.clone();
        let s2 = spline.clone();
        Self::new(
            1,
            move |x: &[f64]| spline.value(x[0]),
            move |x: &[f64], out: &mut [f64]| out[0] = s1.derivative(x[0]),
            move |x: &[f64]| s2.second_derivative(x[0]),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }

    #[inline]
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        (self.laplacian)(x)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("dim", &self.dim).finish()
    }
}

// ---------------------------------------------------------------------------
// Periodic cubic spline (tabulated 1-d potentials)
// ---------------------------------------------------------------------------

/// Periodic natural cubic spline through values on a uniform 1-d grid.
///
/// Node `j` sits at `lo + j·period/n`; the interpolant and its first two
/// derivatives are continuous across the period seam.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    lo: f64,
    period: f64,
    values: Vec<f64>,
    /// Second derivatives at the nodes (the spline moments).
    moments: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(lo: f64, period: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::Config(format!(
                "a periodic spline needs at least 3 tabulated values (got {n})"
            )));
        }
        if !(period > 0.0) || !period.is_finite() || !lo.is_finite() {
            return Err(Error::Config("spline needs finite lo and positive period".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated potential values must be finite".into()));
        }
        let h = period / n as f64;
        // Cyclic tridiagonal system for the moments M_j:
        //   (h/6)·M_{j-1} + (2h/3)·M_j + (h/6)·M_{j+1}
        //     = (y_{j+1} - 2y_j + y_{j-1}) / h   (indices mod n).
        let a = h / 6.0;
        let b = 2.0 * h / 3.0;
        let rhs: Vec<f64> = (0..n)
            .map(|j| {
                let prev = values[(j + n - 1) % n];
                let next = values[(j + 1) % n];
                (next - 2.0 * values[j] + prev) / h
            })
            .collect();
        let moments = solve_cyclic_tridiagonal(a, b, a, &rhs)?;
        Ok(Self { lo, period, values, moments })
    }

    fn n(&self) -> usize {
        self.values.len()
    }

    fn h(&self) -> f64 {
        self.period / self.n() as f64
    }

    /// Segment index and offset within it for a (periodically wrapped) x.
    fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.lo).rem_euclid(self.period);
        let h = self.h();
        let mut j = (s / h).floor() as usize;
        if j >= self.n() {
            j = self.n() - 1;
        }
        (j, s - j as f64 * h)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        let h = self.h();
        let jn = (j + 1) % self.n();
        let (y0, y1) = (self.values[j], self.values[jn]);
        let (m0, m1) = (self.moments[j], self.moments[jn]);
        let u = h - t;
        m0 * u * u * u / (6.0 * h)
            + m1 * t * t * t / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * u
            + (y1 / h - m1 * h / 6.0) * t
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        let h = self.h();
        let jn = (j + 1) % self.n();
        let (y0, y1) = (self.values[j], self.values[jn]);
        let (m0, m1) = (self.moments[j], self.moments[jn]);
        let u = h - t;
        -m0 * u * u / (2.0 * h) + m1 * t * t / (2.0 * h) - (y0 / h - m0 * h / 6.0)
            + (y1 / h - m1 * h / 6.0)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        let h = self.h();
        let jn = (j + 1) % self.n();
        (self.moments[j] * (h - t) + self.moments[jn] * t) / h
    }
}

/// Solve a cyclic tridiagonal system with constant bands (sub `a`, diagonal
/// `b`, super `c`, plus the two periodic corner entries) via the
/// Sherman–Morrison correction of two ordinary tridiagonal solves.
fn solve_cyclic_tridiagonal(a: f64, b: f64, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    debug_assert!(n >= 3);
    let gamma = -b;
    // Modified diagonal absorbing the rank-one corner correction.
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - a * c / gamma;
    let x = solve_tridiagonal(a, &diag, c, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c;
    let z = solve_tridiagonal(a, &diag, c, &u)?;
    // v = (1, 0, ..., 0, a/gamma)
    let vx = x[0] + a / gamma * x[n - 1];
    let vz = z[0] + a / gamma * z[n - 1];
    let factor = vx / (1.0 + vz);
    if !factor.is_finite() {
        return Err(Error::NumericalFailure { iterations: 0, residual: f64::NAN });
    }
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Thomas algorithm with constant off-diagonals and a per-row diagonal.
fn solve_tridiagonal(sub: f64, diag: &[f64], sup: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::NumericalFailure { iterations: 0, residual: f64::NAN });
    }
    cp[0] = sup / beta;
    dp[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub * cp[i - 1];
        if beta == 0.0 {
            return Err(Error::NumericalFailure { iterations: i, residual: f64::NAN });
        }
        cp[i] = sup / beta;
        dp[i] = (rhs[i] - sub * dp[i - 1]) / beta;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

/// The potential landscape `V` with analytic derivatives.
#[derive(Clone)]
pub enum Potential {
    /// `V(x) = A·cos(2πx)/(2π)`: one well per period (d = 1).
    Cosine { amplitude: f64 },
    /// Negative log-density of a periodic array of `k^d` isotropic Gaussians
    /// of width σ centred on the integer lattice `(1..=k)^d`; displacements
    /// use the minimum periodic image under the stored periods.
    GaussianMixtureArray {
        k: usize,
        sigma: f64,
        /// Flattened centre coordinates, `k^d × d`.
        centers: Vec<f64>,
        periods: Vec<f64>,
    },
    /// `V(x) = a·cos(4πx)/(4π) + b·sin(2πx)/(2π)`: two unequal wells per
    /// period (d = 1).
    DoubleWell { a: f64, b: f64 },
    /// Periodic cubic-spline interpolant of tabulated values (d = 1).
    Tabulated(PeriodicSpline),
    /// User-supplied analytic fields.
    Custom(Arc<ScalarField>),
}

impl Potential {
    /// The standard Gaussian-array construction: `k^d` centres on the integer
    /// lattice points `(1,…,1)` through `(k,…,k)`.
    pub fn gaussian_mixture_array(k: usize, sigma: f64, domain: &PeriodicBox) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("gaussian-mixture-array needs k >= 1".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "gaussian-mixture-array needs sigma > 0 (got {sigma})"
            )));
        }
        let d = domain.dim();
        let m = k.pow(d as u32);
        let mut centers = Vec::with_capacity(m * d);
        for flat in 0..m {
            let mut rem = flat;
            for _ in 0..d {
                centers.push((rem % k + 1) as f64);
                rem /= k;
            }
        }
        let periods = (0..d).map(|ax| domain.period(ax)).collect();
        Ok(Potential::GaussianMixtureArray { k, sigma, centers, periods })
    }

    /// Dimension this potential is defined for, if fixed.
    fn expected_dim(&self) -> Option<usize> {
        match self {
            Potential::Cosine { .. } | Potential::DoubleWell { .. } | Potential::Tabulated(_) => {
                Some(1)
            }
            Potential::GaussianMixtureArray { periods, .. } => Some(periods.len()),
            Potential::Custom(f) => Some(f.dim()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Cosine { amplitude } => amplitude * (TAU * x[0]).cos() / TAU,
            Potential::DoubleWell { a, b } => {
                a * (2.0 * TAU * x[0]).cos() / (2.0 * TAU) + b * (TAU * x[0]).sin() / TAU
            }
            Potential::Tabulated(s) => s.value(x[0]),
            Potential::Custom(f) => f.value(x),
            Potential::GaussianMixtureArray { sigma, centers, periods, .. } => {
                let (log_sum, _max) = mixture_log_sum(x, centers, periods, *sigma);
                -log_sum
            }
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::Cosine { amplitude } => out[0] = -amplitude * (TAU * x[0]).sin(),
            Potential::DoubleWell { a, b } => {
                out[0] = -a * (2.0 * TAU * x[0]).sin() + b * (TAU * x[0]).cos()
            }
            Potential::Tabulated(s) => out[0] = s.derivative(x[0]),
            Potential::Custom(f) => f.gradient(x, out),
            Potential::GaussianMixtureArray { sigma, centers, periods, .. } => {
                mixture_gradient(x, centers, periods, *sigma, out);
            }
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Cosine { amplitude } => -amplitude * TAU * (TAU * x[0]).cos(),
            Potential::DoubleWell { a, b } => {
                -2.0 * TAU * a * (2.0 * TAU * x[0]).cos() - TAU * b * (TAU * x[0]).sin()
            }
            Potential::Tabulated(s) => s.second_derivative(x[0]),
            Potential::Custom(f) => f.laplacian(x),
            Potential::GaussianMixtureArray { sigma, centers, periods, .. } => {
                mixture_laplacian(x, centers, periods, *sigma)
            }
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Cosine { amplitude } => write!(f, "Cosine {{ amplitude: {amplitude} }}"),
            Potential::GaussianMixtureArray { k, sigma, .. } => {
                write!(f, "GaussianMixtureArray {{ k: {k}, sigma: {sigma} }}")
            }
            Potential::DoubleWell { a, b } => write!(f, "DoubleWell {{ a: {a}, b: {b} }}"),
            Potential::Tabulated(s) => write!(f, "Tabulated {{ n: {} }}", s.n()),
            Potential::Custom(field) => write!(f, "Custom {{ dim: {} }}", field.dim()),
        }
    }
}

/// log Σ_k exp(−|Δ_k|²/2σ²) with max-subtraction; returns (log-sum, max exponent).
fn mixture_log_sum(x: &[f64], centers: &[f64], periods: &[f64], sigma: f64) -> (f64, f64) {
    let d = periods.len();
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let mut max_g = f64::NEG_INFINITY;
    let m = centers.len() / d;
    for c in 0..m {
        let mut r2 = 0.0;
        for ax in 0..d {
            let p = periods[ax];
            let mut dx = x[ax] - centers[c * d + ax];
            dx -= p * (dx / p).round();
            r2 += dx * dx;
        }
        let g = -r2 * inv2s2;
        if g > max_g {
            max_g = g;
        }
    }
    let mut sum = 0.0;
    for c in 0..m {
        let mut r2 = 0.0;
        for ax in 0..d {
            let p = periods[ax];
            let mut dx = x[ax] - centers[c * d + ax];
            dx -= p * (dx / p).round();
            r2 += dx * dx;
        }
        sum += (-r2 * inv2s2 - max_g).exp();
    }
    (max_g + sum.ln(), max_g)
}

/// ∇V = Σ_k w_k Δ_k / σ² with softmax weights w_k.
fn mixture_gradient(x: &[f64], centers: &[f64], periods: &[f64], sigma: f64, out: &mut [f64]) {
    let d = periods.len();
    let inv_s2 = 1.0 / (sigma * sigma);
    let (log_sum, max_g) = mixture_log_sum(x, centers, periods, sigma);
    let log_norm = log_sum - max_g;
    let m = centers.len() / d;
    out[..d].fill(0.0);
    for c in 0..m {
        let mut r2 = 0.0;
        let mut disp = [0.0f64; 8];
        debug_assert!(d <= 8);
        for ax in 0..d {
            let p = periods[ax];
            let mut dx = x[ax] - centers[c * d + ax];
            dx -= p * (dx / p).round();
            disp[ax] = dx;
            r2 += dx * dx;
        }
        let w = (-r2 * 0.5 * inv_s2 - max_g - log_norm).exp();
        for ax in 0..d {
            out[ax] += w * disp[ax] * inv_s2;
        }
    }
}

/// ΔV = Σ_k w_k (d/σ² − |Δ_k|²/σ⁴) + ‖∇V‖².
fn mixture_laplacian(x: &[f64], centers: &[f64], periods: &[f64], sigma: f64) -> f64 {
    let d = periods.len();
    let inv_s2 = 1.0 / (sigma * sigma);
    let (log_sum, max_g) = mixture_log_sum(x, centers, periods, sigma);
    let log_norm = log_sum - max_g;
    let m = centers.len() / d;
    let mut grad = [0.0f64; 8];
    debug_assert!(d <= 8);
    let mut lap = 0.0;
    for c in 0..m {
        let mut r2 = 0.0;
        let mut disp = [0.0f64; 8];
        for ax in 0..d {
            let p = periods[ax];
            let mut dx = x[ax] - centers[c * d + ax];
            dx -= p * (dx / p).round();
            disp[ax] = dx;
            r2 += dx * dx;
        }
        let w = (-r2 * 0.5 * inv_s2 - max_g - log_norm).exp();
        lap += w * (d as f64 * inv_s2 - r2 * inv_s2 * inv_s2);
        for ax in 0..d {
            grad[ax] += w * disp[ax] * inv_s2;
        }
    }
    lap + grad[..d].iter().map(|g| g * g).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Killing field
// ---------------------------------------------------------------------------

/// The zeroth-order rate `c` (soft killing); sign-unconstrained.
#[derive(Clone)]
pub enum KillField {
    /// `c ≡ 0`.
    Zero,
    /// `c ≡ value`.
    Constant { value: f64 },
    /// `c(x) = offset + amplitude·sin(2π x₁)`.
    OffsetSine { offset: f64, amplitude: f64 },
    /// User-supplied rate.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl KillField {
    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            KillField::Zero => 0.0,
            KillField::Constant { value } => *value,
            KillField::OffsetSine { offset, amplitude } => offset + amplitude * (TAU * x[0]).sin(),
            KillField::Custom(f) => f(x),
        }
    }

    /// True when the rate is structurally zero everywhere.
    pub fn is_identically_zero(&self) -> bool {
        matches!(self, KillField::Zero)
            || matches!(self, KillField::Constant { value } if *value == 0.0)
    }
}

impl fmt::Debug for KillField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KillField::Zero => write!(f, "Zero"),
            KillField::Constant { value } => write!(f, "Constant {{ value: {value} }}"),
            KillField::OffsetSine { offset, amplitude } => {
                write!(f, "OffsetSine {{ offset: {offset}, amplitude: {amplitude} }}")
            }
            KillField::Custom(_) => write!(f, "Custom"),
        }
    }
}

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

/// Number of random probe points used to cross-check analytic derivatives.
const PROBE_POINTS: usize = 100;
/// Central-difference step for the gradient probe.
const PROBE_DELTA_GRAD: f64 = 1e-5;
/// Central-difference step for the Laplacian probe.
const PROBE_DELTA_LAP: f64 = 1e-4;
/// Fixed internal seed so construction is deterministic.
const PROBE_SEED: u64 = 0x5eed_0b5e_55ed_cafe;

/// A fully validated problem: geometry, potential, killing rate, temperature.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    domain: PeriodicBox,
    potential: Potential,
    kill: KillField,
    epsilon: f64,
    diffusion_scale: f64,
}

impl ProblemSpec {
    /// Build and validate. The analytic gradient and Laplacian of the
    /// potential are probed against central finite differences on random
    /// points; a mismatch fails construction naming the offending field.
    pub fn new(
        domain: PeriodicBox,
        potential: Potential,
        kill: KillField,
        epsilon: f64,
        diffusion_scale: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive (got {epsilon})")));
        }
        if diffusion_scale != 1.0 && diffusion_scale != 2.0 {
            return Err(Error::Config(format!(
                "diffusion_scale must be 1 (√ε noise) or 2 (√(2ε) noise), got {diffusion_scale}"
            )));
        }
        if let Some(d) = potential.expected_dim() {
            if d != domain.dim() {
                return Err(Error::Config(format!(
                    "potential is defined for dimension {d} but the box has dimension {}",
                    domain.dim()
                )));
            }
        }
        let spec = Self { domain, potential, kill, epsilon, diffusion_scale };
        spec.verify_derivatives()?;
        Ok(spec)
    }

    fn verify_derivatives(&self) -> Result<()> {
        let d = self.dim();
        let mut rng = RngStream::new(PROBE_SEED);
        let mut x = vec![0.0; d];
        let mut grad = vec![0.0; d];
        let mut shifted = vec![0.0; d];
        for _ in 0..PROBE_POINTS {
            self.domain.sample_into(&mut rng, &mut x);
            let v0 = self.v(&x);
            let c0 = self.c(&x);
            if !v0.is_finite() || !c0.is_finite() {
                return Err(Error::Config(format!(
                    "potential or killing rate is non-finite at probe point {x:?}"
                )));
            }
            self.grad_v(&x, &mut grad);
            // Gradient probe, axis by axis.
            for ax in 0..d {
                shifted.copy_from_slice(&x);
                shifted[ax] = x[ax] + PROBE_DELTA_GRAD;
                let vp = self.v(&shifted);
                shifted[ax] = x[ax] - PROBE_DELTA_GRAD;
                let vm = self.v(&shifted);
                let fd = (vp - vm) / (2.0 * PROBE_DELTA_GRAD);
                let tol = 10.0 * PROBE_DELTA_GRAD * (1.0 + grad[ax].abs());
                if !grad[ax].is_finite() || (fd - grad[ax]).abs() > tol {
                    return Err(Error::FieldProbe {
                        field: "gradient",
                        point: x.clone(),
                        analytic: grad[ax],
                        probe: fd,
                        tolerance: tol,
                    });
                }
            }
            // Laplacian probe: sum of second central differences.
            let lap = self.lap_v(&x);
            let mut fd2 = 0.0;
            for ax in 0..d {
                shifted.copy_from_slice(&x);
                shifted[ax] = x[ax] + PROBE_DELTA_LAP;
                let vp = self.v(&shifted);
                shifted[ax] = x[ax] - PROBE_DELTA_LAP;
                let vm = self.v(&shifted);
                fd2 += (vp - 2.0 * v0 + vm) / (PROBE_DELTA_LAP * PROBE_DELTA_LAP);
            }
            let tol = 1e-3 * (1.0 + lap.abs());
            if !lap.is_finite() || (fd2 - lap).abs() > tol {
                return Err(Error::FieldProbe {
                    field: "laplacian",
                    point: x.clone(),
                    analytic: lap,
                    probe: fd2,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }

    // ---- builtins ----------------------------------------------------

    /// Example landscape: `V(x) = cos(2πx)/(2π)` on `[-1,1)`, √(2ε) noise,
    /// no killing.
    pub fn cosine(epsilon: f64) -> Result<Self> {
        Self::new(
            PeriodicBox::cube(1, -1.0, 1.0)?,
            Potential::Cosine { amplitude: 1.0 },
            KillField::Zero,
            epsilon,
            2.0,
        )
    }

    /// Example landscape: 4×4 periodic Gaussian array on `[0,4]²` with
    /// σ = 0.1, √(2ε) noise, no killing.
    pub fn gaussian_mixture(epsilon: f64) -> Result<Self> {
        let domain = PeriodicBox::cube(2, 0.0, 4.0)?;
        let potential = Potential::gaussian_mixture_array(4, 0.1, &domain)?;
        Self::new(domain, potential, KillField::Zero, epsilon, 2.0)
    }

    /// Two unequal wells on `[0,1)`: `V = cos(4πx)/(4π) + 0.2·sin(2πx)/(2π)`.
    pub fn double_well(epsilon: f64) -> Result<Self> {
        Self::new(
            PeriodicBox::cube(1, 0.0, 1.0)?,
            Potential::DoubleWell { a: 1.0, b: 0.2 },
            KillField::Zero,
            epsilon,
            2.0,
        )
    }

    /// Same problem with a different killing field (re-validated).
    pub fn with_kill(self, kill: KillField) -> Result<Self> {
        Self::new(self.domain, self.potential, kill, self.epsilon, self.diffusion_scale)
    }

    /// Same problem at a different temperature (re-validated).
    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.domain, self.potential, self.kill, epsilon, self.diffusion_scale)
    }

    // ---- accessors ----------------------------------------------------

    #[inline]
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &PeriodicBox {
        &self.domain
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn kill_field(&self) -> &KillField {
        &self.kill
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn diffusion_scale(&self) -> f64 {
        self.diffusion_scale
    }

    /// Effective temperature `diffusion_scale·ε`: the variance of the noise,
    /// and the temperature appearing in every Gibbs exponent
    /// (`e^{−2V/ε_eff}`, swap weights, swap rates).
    #[inline]
    pub fn epsilon_eff(&self) -> f64 {
        self.diffusion_scale * self.epsilon
    }

    /// Per-axis diffusion coefficient `a = diffusion_scale·ε`.
    #[inline]
    pub fn noise_variance(&self) -> f64 {
        self.epsilon_eff()
    }

    #[inline]
    pub fn v(&self, x: &[f64]) -> f64 {
        self.potential.value(x)
    }

    #[inline]
    pub fn grad_v(&self, x: &[f64], out: &mut [f64]) {
        self.potential.gradient(x, out);
    }

    #[inline]
    pub fn lap_v(&self, x: &[f64]) -> f64 {
        self.potential.laplacian(x)
    }

    /// Killing rate `c(x)`.
    #[inline]
    pub fn c(&self, x: &[f64]) -> f64 {
        self.kill.evaluate(x)
    }

    /// `c̄(x) = c(x) − ΔV(x)`, the rate of the adjoint problem.
    #[inline]
    pub fn c_bar(&self, x: &[f64]) -> f64 {
        self.kill.evaluate(x) - self.potential.laplacian(x)
    }

    /// Direction-resolved kill rate: `c` forward, `c̄` backward.
    #[inline]
    pub fn kill_rate(&self, x: &[f64], direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.c(x),
            Direction::Backward => self.c_bar(x),
        }
    }

    /// True when the forward killing rate is structurally zero.
    pub fn c_is_zero(&self) -> bool {
        self.kill.is_identically_zero()
    }
}

// ---------------------------------------------------------------------------
// JSON problem configs
// ---------------------------------------------------------------------------

fn default_amplitude() -> f64 {
    1.0
}

fn default_dw_a() -> f64 {
    1.0
}

fn default_dw_b() -> f64 {
    0.2
}

/// On-disk description of a [`PeriodicBox`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// On-disk description of a [`Potential`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Cosine {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    GaussianMixtureArray {
        k: usize,
        sigma: f64,
    },
    DoubleWell {
        #[serde(default = "default_dw_a")]
        a: f64,
        #[serde(default = "default_dw_b")]
        b: f64,
    },
    /// Values on a uniform grid over the box; interpolated by a periodic
    /// cubic spline (d = 1 only).
    Tabulated {
        values: Vec<f64>,
    },
}

/// On-disk description of a [`KillField`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KillConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    OffsetSine {
        offset: f64,
        amplitude: f64,
    },
}

/// On-disk description of a [`GridPolicy`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridConfig {
    Fixed { h: f64 },
    UniformRandom { h_min: f64, h_max: f64 },
}

impl GridConfig {
    pub fn policy(self) -> GridPolicy {
        match self {
            GridConfig::Fixed { h } => GridPolicy::Fixed { h },
            GridConfig::UniformRandom { h_min, h_max } => {
                GridPolicy::UniformRandom { h_min, h_max }
            }
        }
    }
}

/// A complete problem description as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub dimension: usize,
    #[serde(rename = "box")]
    pub domain: BoxConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub c: KillConfig,
    pub epsilon: f64,
    pub diffusion_scale: f64,
    pub grid: GridConfig,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn grid_policy(&self) -> GridPolicy {
        self.grid.policy()
    }
}

impl ProblemSpec {
    /// Resolve a JSON config into a validated problem.
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let domain = PeriodicBox::new(cfg.domain.lower.clone(), cfg.domain.upper.clone())?;
        if domain.dim() != cfg.dimension {
            return Err(Error::Config(format!(
                "config says dimension {} but the box has {} axes",
                cfg.dimension,
                domain.dim()
            )));
        }
        let potential = match &cfg.potential {
            PotentialConfig::Cosine { amplitude } => Potential::Cosine { amplitude: *amplitude },
            PotentialConfig::DoubleWell { a, b } => Potential::DoubleWell { a: *a, b: *b },
            PotentialConfig::GaussianMixtureArray { k, sigma } => {
                Potential::gaussian_mixture_array(*k, *sigma, &domain)?
            }
            PotentialConfig::Tabulated { values } => {
                if cfg.dimension != 1 {
                    return Err(Error::UnsupportedDimension { dim: cfg.dimension, limit: 1 });
                }
                Potential::Tabulated(PeriodicSpline::new(
                    domain.lower()[0],
                    domain.period(0),
                    values.clone(),
                )?)
            }
        };
        let kill = match &cfg.c {
            KillConfig::Zero => KillField::Zero,
            KillConfig::Constant { value } => KillField::Constant { value: *value },
            KillConfig::OffsetSine { offset, amplitude } => {
                KillField::OffsetSine { offset: *offset, amplitude: *amplitude }
            }
        };
        cfg.grid.policy().validate()?;
        Self::new(domain, potential, kill, cfg.epsilon, cfg.diffusion_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wrap_basic_cases() {
        let unit = PeriodicBox::unit(1);
        assert_relative_eq!(unit.wrap(&[0.3]).unwrap()[0], 0.3);
        assert_relative_eq!(unit.wrap(&[1.05]).unwrap()[0], 0.05, max_relative = 1e-12);
        let sym = PeriodicBox::cube(1, -1.0, 1.0).unwrap();
        assert_relative_eq!(sym.wrap(&[-1.2]).unwrap()[0], 0.8, max_relative = 1e-12);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        let unit = PeriodicBox::unit(1);
        assert!(unit.wrap(&[f64::NAN]).is_err());
        assert!(unit.wrap(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn wrap_idempotent_and_translation_invariant() {
        for d in 1..=3 {
            let domain = PeriodicBox::new(
                (0..d).map(|k| -(k as f64) - 1.0).collect(),
                (0..d).map(|k| 2.0 * k as f64 + 1.5).collect(),
            )
            .unwrap();
            let mut rng = RngStream::new(42 + d as u64);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.uniform_in(-40.0, 40.0)).collect();
                let w = domain.wrap(&x).unwrap();
                for ax in 0..d {
                    assert!(w[ax] >= domain.lower()[ax] && w[ax] < domain.upper()[ax]);
                    // Idempotence.
                    assert_eq!(domain.wrap_coord(ax, w[ax]), w[ax]);
                    // Translation by a whole period.
                    let t = domain.wrap_coord(ax, x[ax] + domain.period(ax));
                    assert_relative_eq!(t, w[ax], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn min_image_halves_the_period() {
        let domain = PeriodicBox::cube(1, 0.0, 4.0).unwrap();
        assert_relative_eq!(domain.min_image(0, 3.0), -1.0);
        assert_relative_eq!(domain.min_image(0, -3.5), 0.5);
        assert!(domain.min_image(0, 1.7).abs() <= 2.0);
    }

    #[test]
    fn cosine_builtin_matches_hand_derivatives() {
        let spec = ProblemSpec::cosine(0.2).unwrap();
        let x = [0.0];
        assert_relative_eq!(spec.v(&x), 1.0 / TAU, max_relative = 1e-14);
        let mut g = [0.0];
        spec.grad_v(&x, &mut g);
        assert_relative_eq!(g[0], 0.0);
        assert_relative_eq!(spec.lap_v(&x), -TAU, max_relative = 1e-14);
        // c̄ = −ΔV = 2π cos 2πx for the Gibbs case.
        assert_relative_eq!(spec.c_bar(&[0.25]), 0.0, epsilon = 1e-12);
        assert_relative_eq!(spec.c_bar(&[0.5]), -TAU, max_relative = 1e-12);
    }

    #[test]
    fn builtin_fields_are_periodic() {
        let specs = [
            ProblemSpec::cosine(0.1).unwrap(),
            ProblemSpec::double_well(0.1).unwrap(),
            ProblemSpec::gaussian_mixture(0.4).unwrap(),
        ];
        let mut rng = RngStream::new(9);
        for spec in &specs {
            let d = spec.dim();
            let mut x = vec![0.0; d];
            for _ in 0..200 {
                spec.domain().sample_into(&mut rng, &mut x);
                for ax in 0..d {
                    let mut shifted = x.clone();
                    shifted[ax] += spec.domain().period(ax);
                    assert_relative_eq!(spec.v(&shifted), spec.v(&x), epsilon = 1e-10);
                    assert_relative_eq!(spec.lap_v(&shifted), spec.lap_v(&x), epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn mixture_has_minima_at_centers() {
        let spec = ProblemSpec::gaussian_mixture(0.4).unwrap();
        let mut g = [0.0, 0.0];
        for cx in 1..=4 {
            for cy in 1..=4 {
                let x = [cx as f64, cy as f64];
                spec.grad_v(&x, &mut g);
                assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9, "gradient {g:?} at {x:?}");
                // A center is a strict local minimum: V rises a step away.
                let off = [x[0] + 0.05, x[1]];
                assert!(spec.v(&off) > spec.v(&x));
            }
        }
    }

    #[test]
    fn wrong_gradient_fails_construction_naming_the_field() {
        let bad = ScalarField::univariate(
            |x| (TAU * x).cos() / TAU,
            |x| (TAU * x).sin(), // sign error
            |x| -TAU * (TAU * x).cos(),
        );
        let err = ProblemSpec::new(
            PeriodicBox::cube(1, -1.0, 1.0).unwrap(),
            Potential::Custom(Arc::new(bad)),
            KillField::Zero,
            0.2,
            2.0,
        )
        .unwrap_err();
        match err {
            Error::FieldProbe { field, .. } => assert_eq!(field, "gradient"),
            other => panic!("expected FieldProbe, got {other:?}"),
        }
    }

    #[test]
    fn wrong_laplacian_fails_construction() {
        let bad = ScalarField::univariate(
            |x| (TAU * x).cos() / TAU,
            |x| -(TAU * x).sin(),
            |x| TAU * (TAU * x).cos(), // sign error
        );
        let err = ProblemSpec::new(
            PeriodicBox::cube(1, -1.0, 1.0).unwrap(),
            Potential::Custom(Arc::new(bad)),
            KillField::Zero,
            0.2,
            2.0,
        )
        .unwrap_err();
        match err {
            Error::FieldProbe { field, .. } => assert_eq!(field, "laplacian"),
            other => panic!("expected FieldProbe, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_and_scale_validation() {
        assert!(ProblemSpec::cosine(0.0).is_err());
        assert!(ProblemSpec::cosine(-1.0).is_err());
        let spec = ProblemSpec::cosine(0.25).unwrap();
        assert_relative_eq!(spec.epsilon_eff(), 0.5);
        let err = ProblemSpec::new(
            PeriodicBox::cube(1, -1.0, 1.0).unwrap(),
            Potential::Cosine { amplitude: 1.0 },
            KillField::Zero,
            0.2,
            1.5,
        );
        assert!(err.is_err());
    }

    #[test]
    fn spline_reproduces_smooth_periodic_function() {
        let n = 48;
        let values: Vec<f64> = (0..n).map(|j| (TAU * j as f64 / n as f64).sin()).collect();
        let spline = PeriodicSpline::new(0.0, 1.0, values).unwrap();
        let mut rng = RngStream::new(4);
        for _ in 0..500 {
            let x = rng.uniform();
            assert_relative_eq!(spline.value(x), (TAU * x).sin(), epsilon = 5e-5);
            assert_relative_eq!(spline.derivative(x), TAU * (TAU * x).cos(), epsilon = 5e-3);
            assert_relative_eq!(
                spline.second_derivative(x),
                -TAU * TAU * (TAU * x).sin(),
                epsilon = 0.25
            );
        }
        // Periodic continuation across the seam.
        assert_relative_eq!(spline.value(1.3), spline.value(0.3), epsilon = 1e-12);
    }

    #[test]
    fn tabulated_potential_builds_a_valid_problem() {
        let n = 64;
        let values: Vec<f64> = (0..n).map(|j| (TAU * j as f64 / n as f64).cos() / TAU).collect();
        let cfg_json = serde_json::json!({
            "name": "tabulated-cosine",
            "dimension": 1,
            "box": { "lower": [0.0], "upper": [1.0] },
            "potential": { "kind": "tabulated", "values": values },
            "c": { "kind": "zero" },
            "epsilon": 0.2,
            "diffusion_scale": 2.0,
            "grid": { "kind": "fixed", "h": 0.05 }
        });
        let cfg = ProblemConfig::from_json(&cfg_json.to_string()).unwrap();
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        assert_relative_eq!(spec.v(&[0.5]), -1.0 / TAU, epsilon = 1e-4);
    }

    #[test]
    fn config_round_trip_and_validation() {
        let json = r#"{
            "name": "cosine-example",
            "dimension": 1,
            "box": { "lower": [-1.0], "upper": [1.0] },
            "potential": { "kind": "cosine" },
            "c": { "kind": "offset-sine", "offset": 1.0, "amplitude": 0.5 },
            "epsilon": 0.2,
            "diffusion_scale": 2.0,
            "grid": { "kind": "fixed", "h": 0.05 }
        }"#;
        let cfg = ProblemConfig::from_json(json).unwrap();
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        assert_relative_eq!(spec.c(&[0.25]), 1.5, max_relative = 1e-12);
        // Round-trip through serde keeps the config intact.
        let echoed = serde_json::to_string(&cfg).unwrap();
        let cfg2 = ProblemConfig::from_json(&echoed).unwrap();
        let spec2 = ProblemSpec::from_config(&cfg2).unwrap();
        assert_eq!(spec2.dim(), spec.dim());
        assert_relative_eq!(spec2.c(&[0.25]), spec.c(&[0.25]));

        // Dimension mismatch is rejected.
        let bad = json.replace("\"dimension\": 1", "\"dimension\": 2");
        let cfg_bad = ProblemConfig::from_json(&bad).unwrap();
        assert!(ProblemSpec::from_config(&cfg_bad).is_err());
    }

    #[test]
    fn mixture_config_matches_builtin() {
        let json = r#"{
            "name": "mixture",
            "dimension": 2,
            "box": { "lower": [0.0, 0.0], "upper": [4.0, 4.0] },
            "potential": { "kind": "gaussian-mixture-array", "k": 4, "sigma": 0.1 },
            "epsilon": 0.4,
            "diffusion_scale": 2.0,
            "grid": { "kind": "uniform-random", "h_min": 0.05, "h_max": 0.15 }
        }"#;
        let cfg = ProblemConfig::from_json(json).unwrap();
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        let builtin = ProblemSpec::gaussian_mixture(0.4).unwrap();
        let x = [1.3, 2.7];
        assert_relative_eq!(spec.v(&x), builtin.v(&x), max_relative = 1e-13);
        match cfg.grid_policy() {
            GridPolicy::UniformRandom { h_min, h_max } => {
                assert_relative_eq!(h_min, 0.05);
                assert_relative_eq!(h_max, 0.15);
            }
            other => panic!("wrong grid policy {other:?}"),
        }
    }

    #[test]
    fn grid_policy_sampling() {
        let mut rng = RngStream::new(1);
        let fixed = GridPolicy::Fixed { h: 0.05 };
        assert_eq!(fixed.sample(&mut rng), 0.05);
        let random = GridPolicy::UniformRandom { h_min: 0.05, h_max: 0.15 };
        for _ in 0..1000 {
            let h = random.sample(&mut rng);
            assert!((0.05..0.15).contains(&h));
        }
        assert!(GridPolicy::Fixed { h: 0.0 }.validate().is_err());
        assert!(GridPolicy::UniformRandom { h_min: 0.1, h_max: 0.1 }.validate().is_err());
    }

    #[test]
    fn kill_field_structural_zero() {
        assert!(KillField::Zero.is_identically_zero());
        assert!(KillField::Constant { value: 0.0 }.is_identically_zero());
        assert!(!KillField::Constant { value: 0.5 }.is_identically_zero());
        assert!(!KillField::OffsetSine { offset: 0.0, amplitude: 0.0 }.is_identically_zero());
    }

    #[test]
    fn direction_resolved_kill_rate() {
        let spec = ProblemSpec::cosine(0.2)
            .unwrap()
            .with_kill(KillField::Constant { value: 2.0 })
            .unwrap();
        let x = [0.5];
        assert_relative_eq!(spec.kill_rate(&x, Direction::Forward), 2.0);
        // ΔV(0.5) = +2π, so c̄ = 2 − 2π.
        assert_relative_eq!(
            spec.kill_rate(&x, Direction::Backward),
            2.0 - TAU,
            max_relative = 1e-12
        );
    }

    #[test]
    fn probe_seed_is_deterministic() {
        // Construction twice must probe the same points (no hidden state).
        let a = ProblemSpec::cosine(0.2).unwrap();
        let b = ProblemSpec::cosine(0.2).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn pi_constant_sanity() {
        // TAU is used as 2π throughout the field formulas.
        assert_relative_eq!(TAU, 2.0 * std::f64::consts::PI);
    }
}
