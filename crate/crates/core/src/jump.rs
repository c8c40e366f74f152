//! Locally consistent jump rates: nearest-neighbour moves whose mean drift
//! and second moment match a target diffusion to O(h).
//!
//! For drift `b` and diagonal diffusion `a` the central scheme
//! `r±,k = (±h·b_k + a_k) / (2h²)` is exact in both conditional moments; when
//! any central rate would be negative (strong drift relative to `a/h`) every
//! coordinate falls back to the upwind scheme
//! `r±,k = (h·max(±b_k, 0) + a_k/2) / h²`, which keeps the drift exact and
//! inflates the second moment by `h·|b_k|`. Chains built from these rates
//! never live on a lattice — steps are anchored at the current (arbitrary)
//! point — so the state space is the whole periodic box.

use crate::error::{Error, Result};
use crate::problem::{PeriodicBox, ProblemSpec, ScalarField};
use crate::rng::RngStream;

/// Which rate formula produced a [`RateVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateScheme {
    /// Second moment matches `a` exactly; needs `h·|b_k| ≤ a_k`.
    Central,
    /// Nonnegative for any drift; second moment `a + h·|b|`.
    Upwind,
}

/// Jump rates for the 2d nearest-neighbour moves at one point, ordered
/// `(+e_1, …, +e_d, −e_1, …, −e_d)`.
#[derive(Debug, Clone)]
pub struct RateVector {
    rates: Vec<f64>,
    h: f64,
    scheme: RateScheme,
}

impl RateVector {
    /// Placeholder with zero rates, for buffers that are overwritten by
    /// [`transition_rates_into`].
    pub fn zeros(dim: usize) -> Self {
        Self { rates: vec![0.0; 2 * dim], h: 1.0, scheme: RateScheme::Central }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rates.len() / 2
    }

    /// Rate of the `+h·e_k` move.
    #[inline]
    pub fn up(&self, k: usize) -> f64 {
        self.rates[k]
    }

    /// Rate of the `−h·e_k` move.
    #[inline]
    pub fn down(&self, k: usize) -> f64 {
        self.rates[self.dim() + k]
    }

    /// All 2d rates in move order.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scheme(&self) -> RateScheme {
        self.scheme
    }

    /// Total jump intensity Σ r_j.
    #[inline]
    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `h·(r₊ − r₋)` along axis `k`; equals the drift in both schemes.
    pub fn mean_drift(&self, k: usize) -> f64 {
        self.h * (self.up(k) - self.down(k))
    }

    /// `h²·(r₊ + r₋)` along axis `k`.
    pub fn second_moment(&self, k: usize) -> f64 {
        self.h * self.h * (self.up(k) + self.down(k))
    }
}

/// Build the jump rates for drift `b` and diagonal diffusion `a` at step `h`.
///
/// Tries the central scheme first; if any entry is negative, all coordinates
/// switch to the upwind scheme (the sign test is exact, no tolerance).
pub fn transition_rates(b: &[f64], a: &[f64], h: f64) -> Result<RateVector> {
    let mut rv = RateVector::zeros(b.len());
    transition_rates_into(b, a, h, &mut rv)?;
    Ok(rv)
}

/// Allocation-free form of [`transition_rates`]; `out` must have the same
/// dimension as `b`.
pub fn transition_rates_into(b: &[f64], a: &[f64], h: f64, out: &mut RateVector) -> Result<()> {
    let d = b.len();
    if d == 0 || a.len() != d {
        return Err(Error::InvalidInput(format!(
            "drift and diffusion must have equal nonzero length (got {} and {})",
            d,
            a.len()
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("step h must be positive and finite (got {h})")));
    }
    debug_assert_eq!(out.rates.len(), 2 * d);
    for k in 0..d {
        if !b[k].is_finite() || !(a[k] >= 0.0) || !a[k].is_finite() {
            return Err(Error::InvalidInput(format!(
                "drift must be finite and diffusion non-negative (axis {k}: b={}, a={})",
                b[k], a[k]
            )));
        }
    }
    let inv2h2 = 1.0 / (2.0 * h * h);
    let mut central_ok = true;
    for k in 0..d {
        let up = (h * b[k] + a[k]) * inv2h2;
        let down = (-h * b[k] + a[k]) * inv2h2;
        if up < 0.0 || down < 0.0 {
            central_ok = false;
            break;
        }
        out.rates[k] = up;
        out.rates[d + k] = down;
    }
    if central_ok {
        out.scheme = RateScheme::Central;
    } else {
        let invh2 = 1.0 / (h * h);
        for k in 0..d {
            out.rates[k] = (h * b[k].max(0.0) + 0.5 * a[k]) * invh2;
            out.rates[d + k] = (h * (-b[k]).max(0.0) + 0.5 * a[k]) * invh2;
        }
        out.scheme = RateScheme::Upwind;
    }
    out.h = h;
    Ok(())
}

/// Sample one move index `j ∈ 0..2d` proportionally to the rates.
///
/// Consumes exactly one uniform; errs (consuming nothing) when the total
/// rate vanishes.
pub fn sample_move(r: &RateVector, rng: &mut RngStream) -> Result<usize> {
    let total = r.total();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalRate);
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (j, &rate) in r.rates.iter().enumerate() {
        if rate > 0.0 {
            last_positive = Some(j);
        }
        acc += rate;
        if target < acc {
            return Ok(j);
        }
    }
    // Rounding pushed the cumulative walk short of `total`; take the last
    // move that has positive rate.
    last_positive.ok_or(Error::ZeroTotalRate)
}

/// Advance the point by one sampled move, wrapping periodically. Exactly one
/// coordinate changes, by exactly `±h` before the wrap.
pub fn one_step_in_place(
    x: &mut [f64],
    r: &RateVector,
    rng: &mut RngStream,
    domain: &PeriodicBox,
) -> Result<usize> {
    let d = r.dim();
    debug_assert_eq!(x.len(), d);
    let j = sample_move(r, rng)?;
    let axis = j % d;
    let sign = if j < d { 1.0 } else { -1.0 };
    x[axis] = domain.wrap_coord(axis, x[axis] + sign * r.h());
    Ok(j)
}

/// Copying form of [`one_step_in_place`].
pub fn one_step(
    x: &[f64],
    r: &RateVector,
    rng: &mut RngStream,
    domain: &PeriodicBox,
) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    one_step_in_place(&mut out, r, rng, domain)?;
    Ok(out)
}

/// Local-consistency defect |Q_h f(x) − L f(x)| of the jump chain for the
/// forward dynamics of `spec` (drift −DV, diffusion ε_eff per axis).
///
/// `Q_h f(x) = Σ_j r_j·(f(x + move_j) − f(x))` with `f` evaluated at the
/// literal shifted points (no wrapping — `f` must be defined there), and
/// `L f = ⟨−DV, Df⟩ + (ε_eff/2)·Δf`. Zero to round-off for affine `f` (any
/// scheme) and for quadratic `f` under the central scheme; O(h) in general.
pub fn consistency_report(spec: &ProblemSpec, f: &ScalarField, x: &[f64], h: f64) -> Result<f64> {
    let d = spec.dim();
    if x.len() != d || f.dim() != d {
        return Err(Error::InvalidInput(format!(
            "consistency probe needs matching dimensions (problem {d}, point {}, field {})",
            x.len(),
            f.dim()
        )));
    }
    let mut b = vec![0.0; d];
    spec.grad_v(x, &mut b);
    for bk in b.iter_mut() {
        *bk = -*bk;
    }
    let a = vec![spec.noise_variance(); d];
    let rates = transition_rates(&b, &a, h)?;

    let f0 = f.value(x);
    let mut shifted = x.to_vec();
    let mut qf = 0.0;
    for k in 0..d {
        shifted.copy_from_slice(x);
        shifted[k] = x[k] + h;
        qf += rates.up(k) * (f.value(&shifted) - f0);
        shifted[k] = x[k] - h;
        qf += rates.down(k) * (f.value(&shifted) - f0);
    }

    let mut df = vec![0.0; d];
    f.gradient(x, &mut df);
    let lf: f64 = b.iter().zip(&df).map(|(bk, dk)| bk * dk).sum::<f64>()
        + 0.5 * spec.noise_variance() * f.laplacian(x);
    Ok((qf - lf).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::KillField;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn symmetric_walk_rates() {
        let eps = 0.2;
        let r = transition_rates(&[0.0], &[eps], 0.1).unwrap();
        assert_eq!(r.scheme(), RateScheme::Central);
        assert_relative_eq!(r.up(0), eps / 0.02);
        assert_relative_eq!(r.down(0), eps / 0.02);
    }

    #[test]
    fn central_example_drift_one() {
        let r = transition_rates(&[1.0], &[1.0], 0.1).unwrap();
        assert_eq!(r.scheme(), RateScheme::Central);
        assert_relative_eq!(r.up(0), 55.0, max_relative = 1e-13);
        assert_relative_eq!(r.down(0), 45.0, max_relative = 1e-13);
    }

    #[test]
    fn upwind_fallback_for_strong_drift() {
        let r = transition_rates(&[-30.0], &[1.0], 0.1).unwrap();
        assert_eq!(r.scheme(), RateScheme::Upwind);
        assert_relative_eq!(r.up(0), 50.0, max_relative = 1e-13);
        assert_relative_eq!(r.down(0), 350.0, max_relative = 1e-13);
    }

    #[test]
    fn fallback_applies_to_every_coordinate() {
        // Axis 0 alone would be fine centrally; axis 1 forces upwind for both.
        let r = transition_rates(&[0.1, -30.0], &[1.0, 1.0], 0.1).unwrap();
        assert_eq!(r.scheme(), RateScheme::Upwind);
        assert_relative_eq!(r.up(0), (0.1 * 0.1 + 0.5) / 0.01, max_relative = 1e-13);
        assert_relative_eq!(r.down(0), 0.5 / 0.01, max_relative = 1e-13);
        assert_relative_eq!(r.down(1), 350.0, max_relative = 1e-13);
    }

    #[test]
    fn rates_are_never_negative() {
        let mut rng = RngStream::new(77);
        for _ in 0..10_000 {
            let d = 1 + rng.index(3);
            let b: Vec<f64> = (0..d).map(|_| rng.uniform_in(-80.0, 80.0)).collect();
            let a: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.0, 2.0)).collect();
            let h = rng.uniform_in(0.01, 0.5);
            let r = transition_rates(&b, &a, h).unwrap();
            assert!(r.rates().iter().all(|&v| v >= 0.0), "negative rate for b={b:?} a={a:?} h={h}");
        }
    }

    #[test]
    fn moment_identities_hold_in_both_schemes() {
        let mut rng = RngStream::new(78);
        for _ in 0..10_000 {
            let d = 1 + rng.index(3);
            let b: Vec<f64> = (0..d).map(|_| rng.uniform_in(-30.0, 30.0)).collect();
            let a: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.0, 2.0)).collect();
            let h = rng.uniform_in(0.01, 0.5);
            let r = transition_rates(&b, &a, h).unwrap();
            for k in 0..d {
                assert!(
                    (r.mean_drift(k) - b[k]).abs() <= 1e-12,
                    "drift identity broke: scheme {:?}, b={}, got {}",
                    r.scheme(),
                    b[k],
                    r.mean_drift(k)
                );
                let expected = match r.scheme() {
                    RateScheme::Central => a[k],
                    RateScheme::Upwind => a[k] + h * b[k].abs(),
                };
                assert!(
                    (r.second_moment(k) - expected).abs() <= 1e-12,
                    "second moment broke: scheme {:?}",
                    r.scheme()
                );
            }
        }
    }

    #[test]
    fn one_step_degenerate_and_wrapping() {
        let unit = PeriodicBox::unit(1);
        let mut rng = RngStream::new(5);
        let r = RateVector { rates: vec![1.0, 0.0], h: 0.1, scheme: RateScheme::Upwind };
        for _ in 0..50 {
            let y = one_step(&[0.4], &r, &mut rng, &unit).unwrap();
            assert_relative_eq!(y[0], 0.5, max_relative = 1e-15);
        }
        let y = one_step(&[0.95], &r, &mut rng, &unit).unwrap();
        assert_relative_eq!(y[0], 0.05, epsilon = 1e-12);
    }

    #[test]
    fn one_step_frequencies_match_rates() {
        let unit = PeriodicBox::unit(1);
        let mut rng = RngStream::new(6);
        let r = RateVector { rates: vec![3.0, 1.0], h: 0.01, scheme: RateScheme::Upwind };
        let n = 10_000;
        let mut ups = 0usize;
        let mut x = [0.5];
        for _ in 0..n {
            let before = x[0];
            one_step_in_place(&mut x, &r, &mut rng, &unit).unwrap();
            if x[0] > before {
                ups += 1;
            }
        }
        let freq = ups as f64 / n as f64;
        let sigma = (0.75 * 0.25 / n as f64).sqrt();
        assert!((freq - 0.75).abs() <= 3.0 * sigma, "freq {freq} too far from 0.75");
    }

    #[test]
    fn zero_total_rate_is_an_error() {
        let unit = PeriodicBox::unit(1);
        let mut rng = RngStream::new(7);
        let r = RateVector { rates: vec![0.0, 0.0], h: 0.1, scheme: RateScheme::Central };
        assert!(matches!(one_step(&[0.5], &r, &mut rng, &unit), Err(Error::ZeroTotalRate)));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(transition_rates(&[0.0], &[0.2], 0.0).is_err());
        assert!(transition_rates(&[0.0], &[0.2], -0.1).is_err());
        assert!(transition_rates(&[0.0], &[-0.2], 0.1).is_err());
        assert!(transition_rates(&[f64::NAN], &[0.2], 0.1).is_err());
        assert!(transition_rates(&[0.0], &[0.2, 0.3], 0.1).is_err());
    }

    #[test]
    fn consistency_exact_for_affine_and_quadratic() {
        let spec = ProblemSpec::cosine(0.2).unwrap();
        let linear = ScalarField::univariate(|x| 3.0 * x - 1.0, |_| 3.0, |_| 0.0);
        for &x in &[0.05, 0.3, -0.7] {
            let err = consistency_report(&spec, &linear, &[x], 0.1).unwrap();
            assert!(err <= 1e-10, "affine defect {err} at {x}");
        }
        // Quadratic with b = 0 at the well bottom x = ±1/2 (sin 2πx = ∓... the
        // gradient of the cosine potential vanishes at x = 0 and x = ±1/2).
        let quad = ScalarField::univariate(|x| x * x, |x| 2.0 * x, |_| 2.0);
        let err = consistency_report(&spec, &quad, &[0.5], 0.1).unwrap();
        assert!(err <= 1e-10, "quadratic defect {err} at a drift-free point");
    }

    #[test]
    fn consistency_error_is_first_order_in_h() {
        // Low temperature puts the rates in the upwind regime, where the
        // defect is genuinely O(h); halving h should roughly halve it.
        let spec = ProblemSpec::cosine(0.01).unwrap();
        let basket: Vec<ScalarField> = vec![
            ScalarField::univariate(
                |x| (TAU * x).sin(),
                |x| TAU * (TAU * x).cos(),
                |x| -TAU * TAU * (TAU * x).sin(),
            ),
            ScalarField::univariate(
                |x| (TAU * x).cos(),
                |x| -TAU * (TAU * x).sin(),
                |x| -TAU * TAU * (TAU * x).cos(),
            ),
            ScalarField::univariate(
                |x| (2.0 * TAU * x).sin(),
                |x| 2.0 * TAU * (2.0 * TAU * x).cos(),
                |x| -4.0 * TAU * TAU * (2.0 * TAU * x).sin(),
            ),
            ScalarField::univariate(
                |x| (TAU * x).sin().exp(),
                |x| TAU * (TAU * x).cos() * (TAU * x).sin().exp(),
                |x| {
                    let (s, c) = ((TAU * x).sin(), (TAU * x).cos());
                    TAU * TAU * (c * c - s) * s.exp()
                },
            ),
            ScalarField::univariate(
                |x| (TAU * x).cos() + 0.3 * (2.0 * TAU * x).sin(),
                |x| -TAU * (TAU * x).sin() + 0.6 * TAU * (2.0 * TAU * x).cos(),
                |x| -TAU * TAU * (TAU * x).cos() - 1.2 * TAU * TAU * (2.0 * TAU * x).sin(),
            ),
        ];
        let probes: Vec<f64> = (0..32).map(|i| -1.0 + (i as f64 + 0.37) / 16.0).collect();
        for f in &basket {
            let err_at = |h: f64| -> f64 {
                probes
                    .iter()
                    .map(|&x| consistency_report(&spec, f, &[x], h).unwrap())
                    .fold(0.0, f64::max)
            };
            let (e1, e2, e3) = (err_at(0.1), err_at(0.05), err_at(0.025));
            for (coarse, fine) in [(e1, e2), (e2, e3)] {
                let ratio = coarse / fine;
                assert!(
                    (1.5..=2.5).contains(&ratio),
                    "defect ratio {ratio} outside [1.5, 2.5] (errors {e1:.3e}, {e2:.3e}, {e3:.3e})"
                );
            }
        }
    }

    #[test]
    fn consistency_first_order_on_other_builtins() {
        // Double well at low temperature; probe where the drift is strong.
        let dw = ProblemSpec::double_well(0.01).unwrap();
        let f = ScalarField::univariate(
            |x| (TAU * x).sin(),
            |x| TAU * (TAU * x).cos(),
            |x| -TAU * TAU * (TAU * x).sin(),
        );
        let probes = [0.58, 0.6, 0.62, 0.1, 0.35];
        let err_at = |h: f64| -> f64 {
            probes
                .iter()
                .map(|&x| consistency_report(&dw, &f, &[x], h).unwrap())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err_at(0.1), err_at(0.05), err_at(0.025));
        for (coarse, fine) in [(e1, e2), (e2, e3)] {
            let ratio = coarse / fine;
            assert!((1.4..=2.6).contains(&ratio), "double-well defect ratio {ratio}");
        }

        // Gaussian array in d = 2, probed off-centre where |∇V| is large.
        let gm = ProblemSpec::gaussian_mixture(0.4).unwrap();
        let w = TAU / 4.0;
        let f2 = ScalarField::new(
            2,
            move |x: &[f64]| (w * x[0]).sin() * (w * x[1]).cos(),
            move |x: &[f64], out: &mut [f64]| {
                out[0] = w * (w * x[0]).cos() * (w * x[1]).cos();
                out[1] = -w * (w * x[0]).sin() * (w * x[1]).sin();
            },
            move |x: &[f64]| -2.0 * w * w * (w * x[0]).sin() * (w * x[1]).cos(),
        );
        let probes2 = [[2.4, 2.0], [1.6, 3.0], [2.0, 2.45]];
        let err_at2 = |h: f64| -> f64 {
            probes2.iter().map(|x| consistency_report(&gm, &f2, x, h).unwrap()).fold(0.0, f64::max)
        };
        let (g1, g2, g3) = (err_at2(0.1), err_at2(0.05), err_at2(0.025));
        for (coarse, fine) in [(g1, g2), (g2, g3)] {
            let ratio = coarse / fine;
            assert!((1.4..=2.6).contains(&ratio), "mixture defect ratio {ratio}");
        }
    }

    #[test]
    fn consistency_respects_the_kill_field_not_at_all() {
        // The defect concerns the second-order part only; adding killing must
        // not change it.
        let plain = ProblemSpec::cosine(0.2).unwrap();
        let killed = ProblemSpec::cosine(0.2)
            .unwrap()
            .with_kill(KillField::OffsetSine { offset: 1.0, amplitude: 0.5 })
            .unwrap();
        let f = ScalarField::univariate(
            |x| (TAU * x).sin(),
            |x| TAU * (TAU * x).cos(),
            |x| -TAU * TAU * (TAU * x).sin(),
        );
        let a = consistency_report(&plain, &f, &[0.3], 0.05).unwrap();
        let b = consistency_report(&killed, &f, &[0.3], 0.05).unwrap();
        assert_relative_eq!(a, b);
    }
}
