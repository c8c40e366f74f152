//! Time-weighted estimators over recorded trajectories.
//!
//! A trajectory record holding for `dt` contributes, per pair, the atom
//! `(x, y)` with weight `dt·ρ` and the mirrored atom `(y, x)` with weight
//! `dt·(1 − ρ)`. The first coordinate block of an atom is a density-side
//! (ψ) sample and the second a function-side (φ) sample, so marginals and
//! eigenvalue estimates in either direction read off one block. Weighted
//! sums use Neumaier compensation throughout.

use crate::error::{Error, Result};
use crate::fv::WeightedTrajectory;
use crate::problem::{Direction, PeriodicBox, ProblemSpec};
use crate::rng::RngStream;

/// Neumaier-compensated sum.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running Neumaier accumulator for one-pass sums.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// A weighted empirical measure on pairs: atoms `((first, second), w)` with
/// strictly positive weights.
#[derive(Debug, Clone)]
pub struct WeightedEmpirical {
    dim: usize,
    domain: PeriodicBox,
    /// Density-side coordinates, `len() × dim`.
    firsts: Vec<f64>,
    /// Function-side coordinates, `len() × dim`.
    seconds: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl WeightedEmpirical {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &PeriodicBox {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Coordinate block of atom `i` on the requested side.
    pub fn point(&self, i: usize, side: Direction) -> &[f64] {
        let block = match side {
            Direction::Forward => &self.firsts,
            Direction::Backward => &self.seconds,
        };
        &block[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_burn_in(burn_in: f64) -> Result<()> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidInput(format!(
            "burn-in fraction must lie in [0, 1) (got {burn_in})"
        )));
    }
    Ok(())
}

/// Fold a trajectory into a weighted empirical measure, discarding records
/// whose interval ends within the first `burn_in` fraction of the horizon.
/// Atoms with zero weight (saturated ρ) are dropped.
pub fn weighted_empirical(
    traj: &WeightedTrajectory,
    domain: &PeriodicBox,
    burn_in: f64,
) -> Result<WeightedEmpirical> {
    check_burn_in(burn_in)?;
    if domain.dim() != traj.dim {
        return Err(Error::InvalidInput(format!(
            "domain dimension {} does not match trajectory dimension {}",
            domain.dim(),
            traj.dim
        )));
    }
    let d = traj.dim;
    let t_burn = burn_in * traj.t_end;
    let mut firsts = Vec::new();
    let mut seconds = Vec::new();
    let mut weights = Vec::new();
    let mut total = Accumulator::default();
    for rec in &traj.records {
        if rec.t <= t_burn {
            continue;
        }
        for i in 0..traj.n_pairs {
            let x = &rec.xs[i * d..(i + 1) * d];
            let y = &rec.ys[i * d..(i + 1) * d];
            let rho = rec.rho[i];
            let w_fwd = rec.holding_dt * rho;
            if w_fwd > 0.0 {
                firsts.extend_from_slice(x);
                seconds.extend_from_slice(y);
                weights.push(w_fwd);
                total.add(w_fwd);
            }
            let w_bwd = rec.holding_dt * (1.0 - rho);
            if w_bwd > 0.0 {
                firsts.extend_from_slice(y);
                seconds.extend_from_slice(x);
                weights.push(w_bwd);
                total.add(w_bwd);
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::InvalidInput(
            "no atoms survive the burn-in window; shorten it or extend the run".into(),
        ));
    }
    Ok(WeightedEmpirical {
        dim: d,
        domain: domain.clone(),
        firsts,
        seconds,
        weights,
        total_weight: total.value(),
    })
}

/// Principal-eigenvalue estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EigenvalueEstimate {
    pub lambda: f64,
    /// Standard error over equal-time batches; `None` when there are too
    /// few records to fill every batch.
    pub std_error: Option<f64>,
}

const EIGENVALUE_BATCHES: usize = 20;

/// Estimate the principal eigenvalue from a trajectory.
///
/// Forward averages the kill rate `c` over density-side samples
/// (`λ̂ = Σ w·c(first) / Σ w`); backward averages `c̄ = c − ΔV` over
/// function-side samples. The standard error comes from 20 equal-time
/// batches of the post-burn-in window and is `None` if any batch ends up
/// empty.
pub fn eigenvalue_estimate(
    traj: &WeightedTrajectory,
    spec: &ProblemSpec,
    direction: Direction,
    burn_in: f64,
) -> Result<EigenvalueEstimate> {
    check_burn_in(burn_in)?;
    if spec.dim() != traj.dim {
        return Err(Error::InvalidInput(format!(
            "problem dimension {} does not match trajectory dimension {}",
            spec.dim(),
            traj.dim
        )));
    }
    let d = traj.dim;
    let t_burn = burn_in * traj.t_end;
    let span = traj.t_end - t_burn;
    let mut num = vec![Accumulator::default(); EIGENVALUE_BATCHES];
    let mut den = vec![Accumulator::default(); EIGENVALUE_BATCHES];
    let mut kept: usize = 0;
    for rec in &traj.records {
        if rec.t <= t_burn {
            continue;
        }
        kept += 1;
        let batch = (((rec.t - t_burn) / span * EIGENVALUE_BATCHES as f64) as usize)
            .min(EIGENVALUE_BATCHES - 1);
        for i in 0..traj.n_pairs {
            let x = &rec.xs[i * d..(i + 1) * d];
            let y = &rec.ys[i * d..(i + 1) * d];
            let rho = rec.rho[i];
            let (w1, w2) = (rec.holding_dt * rho, rec.holding_dt * (1.0 - rho));
            // Atom (x, y) with weight w1 and atom (y, x) with weight w2.
            let (v1, v2) = match direction {
                Direction::Forward => (spec.c(x), spec.c(y)),
                Direction::Backward => (spec.c_bar(y), spec.c_bar(x)),
            };
            if w1 > 0.0 {
                num[batch].add(w1 * v1);
                den[batch].add(w1);
            }
            if w2 > 0.0 {
                num[batch].add(w2 * v2);
                den[batch].add(w2);
            }
        }
    }
    let total_num = stable_sum(num.iter().map(|a| a.value()));
    let total_den = stable_sum(den.iter().map(|a| a.value()));
    if !(total_den > 0.0) {
        return Err(Error::InvalidInput(
            "no atoms survive the burn-in window; shorten it or extend the run".into(),
        ));
    }
    let lambda = total_num / total_den;
    let std_error = if kept >= EIGENVALUE_BATCHES && den.iter().all(|a| a.value() > 0.0) {
        let means: Vec<f64> =
            (0..EIGENVALUE_BATCHES).map(|b| num[b].value() / den[b].value()).collect();
        let b = EIGENVALUE_BATCHES as f64;
        let mean = stable_sum(means.iter().copied()) / b;
        let var = stable_sum(means.iter().map(|m| (m - mean) * (m - mean))) / (b - 1.0);
        Some((var / b).sqrt())
    } else {
        None
    };
    Ok(EigenvalueEstimate { lambda, std_error })
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

/// A normalized piecewise-constant density on a box: `bins` cells per axis,
/// row-major, integrating to 1 under the bin measure.
#[derive(Debug, Clone)]
pub struct Histogram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bins: usize,
    dim: usize,
    density: Vec<f64>,
}

impl Histogram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Volume of one cell.
    pub fn bin_volume(&self) -> f64 {
        (0..self.dim).map(|a| (self.upper[a] - self.lower[a]) / self.bins as f64).product()
    }

    /// Center coordinates of the flat cell `idx`.
    pub fn bin_center(&self, idx: usize) -> Vec<f64> {
        let mut rest = idx;
        let mut center = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            let k = rest % self.bins;
            rest /= self.bins;
            let w = (self.upper[a] - self.lower[a]) / self.bins as f64;
            center[a] = self.lower[a] + (k as f64 + 0.5) * w;
        }
        center
    }

    fn cell_count(dim: usize, bins: usize) -> Result<usize> {
        if bins < 2 {
            return Err(Error::InvalidInput(format!(
                "a histogram needs at least 2 bins per axis (got {bins})"
            )));
        }
        let mut cells: usize = 1;
        for _ in 0..dim {
            cells = cells.checked_mul(bins).ok_or_else(|| {
                Error::InvalidInput(format!("{bins} bins in dimension {dim} overflows"))
            })?;
        }
        Ok(cells)
    }

    fn flat_index(&self, p: &[f64]) -> usize {
        let mut idx = 0;
        for (a, &pa) in p.iter().enumerate().take(self.dim) {
            let w = (self.upper[a] - self.lower[a]) / self.bins as f64;
            let mut k = ((pa - self.lower[a]) / w) as isize;
            k = k.clamp(0, self.bins as isize - 1);
            idx = idx * self.bins + k as usize;
        }
        idx
    }

    /// Bin weighted points into a normalized density. `weights` defaults to
    /// unit mass per point.
    pub fn from_points(
        points: &[f64],
        weights: Option<&[f64]>,
        domain: &PeriodicBox,
        bins: usize,
    ) -> Result<Self> {
        let dim = domain.dim();
        let cells = Self::cell_count(dim, bins)?;
        if !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "point buffer length {} is not a multiple of the dimension {dim}",
                points.len()
            )));
        }
        let m = points.len() / dim;
        if let Some(w) = weights {
            if w.len() != m {
                return Err(Error::InvalidInput(format!("{} weights for {m} points", w.len())));
            }
        }
        let mut hist = Self {
            lower: domain.lower().to_vec(),
            upper: domain.upper().to_vec(),
            bins,
            dim,
            density: vec![0.0; cells],
        };
        let mut mass = Accumulator::default();
        for i in 0..m {
            let w = weights.map_or(1.0, |ws| ws[i]);
            if w < 0.0 {
                return Err(Error::InvalidInput(format!("negative point weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            let idx = hist.flat_index(&points[i * dim..(i + 1) * dim]);
            hist.density[idx] += w;
            mass.add(w);
        }
        hist.normalize(mass.value())?;
        Ok(hist)
    }

    /// Discretize a nonnegative density function: each cell is averaged over
    /// a 4-point-per-axis midpoint grid, then the whole histogram is
    /// normalized.
    pub fn from_density_fn<F>(domain: &PeriodicBox, bins: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = domain.dim();
        let cells = Self::cell_count(dim, bins)?;
        let mut hist = Self {
            lower: domain.lower().to_vec(),
            upper: domain.upper().to_vec(),
            bins,
            dim,
            density: vec![0.0; cells],
        };
        const SUB: usize = 4;
        let sub_cells = SUB.pow(dim as u32);
        let mut p = vec![0.0; dim];
        let mut mass = Accumulator::default();
        for idx in 0..cells {
            let mut cell_sum = 0.0;
            for s in 0..sub_cells {
                let mut rest_cell = idx;
                let mut rest_sub = s;
                for a in (0..dim).rev() {
                    let k = rest_cell % bins;
                    rest_cell /= bins;
                    let q = rest_sub % SUB;
                    rest_sub /= SUB;
                    let w = (hist.upper[a] - hist.lower[a]) / bins as f64;
                    p[a] = hist.lower[a] + (k as f64 + (q as f64 + 0.5) / SUB as f64) * w;
                }
                let v = f(&p);
                if !(v >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "density function returned {v} at {p:?}"
                    )));
                }
                cell_sum += v;
            }
            hist.density[idx] = cell_sum / sub_cells as f64;
            mass.add(hist.density[idx]);
        }
        hist.normalize(mass.value())?;
        Ok(hist)
    }

    fn normalize(&mut self, raw_mass: f64) -> Result<()> {
        if !(raw_mass > 0.0) || !raw_mass.is_finite() {
            return Err(Error::InvalidInput("histogram has no mass to normalize".into()));
        }
        let scale = 1.0 / (raw_mass * self.bin_volume());
        for v in &mut self.density {
            *v *= scale;
        }
        Ok(())
    }
}

/// Marginal histogram of one coordinate block of an empirical measure:
/// `Forward` bins the density-side samples, `Backward` the function-side.
pub fn marginal_histogram(
    emp: &WeightedEmpirical,
    side: Direction,
    bins: usize,
) -> Result<Histogram> {
    let block = match side {
        Direction::Forward => &emp.firsts,
        Direction::Backward => &emp.seconds,
    };
    Histogram::from_points(block, Some(&emp.weights), &emp.domain, bins)
}

/// Total-variation distance `½ ∫ |p − q|` between two histograms on the
/// same box with the same resolution.
pub fn total_variation(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.dim != b.dim || a.bins != b.bins || a.lower != b.lower || a.upper != b.upper {
        return Err(Error::InvalidInput(
            "total variation needs histograms on the same box with the same bins".into(),
        ));
    }
    let vol = a.bin_volume();
    Ok(0.5 * stable_sum(a.density.iter().zip(&b.density).map(|(&p, &q)| (p - q).abs() * vol)))
}

/// Draw `m` points i.i.d. by atom weight from one side of an empirical
/// measure; returns a flat `m × dim` buffer. Deterministic in `seed`.
pub fn resample(emp: &WeightedEmpirical, side: Direction, m: usize, seed: u64) -> Result<Vec<f64>> {
    if emp.is_empty() {
        return Err(Error::InvalidInput("cannot resample an empty measure".into()));
    }
    // Cumulative weights for inverse-CDF sampling.
    let mut cum = Vec::with_capacity(emp.len());
    let mut acc = Accumulator::default();
    for &w in &emp.weights {
        acc.add(w);
        cum.push(acc.value());
    }
    let total = *cum.last().expect("nonempty");
    let mut rng = RngStream::new(seed);
    let mut out = Vec::with_capacity(m * emp.dim);
    for _ in 0..m {
        let u = rng.uniform() * total;
        let i = cum.partition_point(|&c| c <= u).min(emp.len() - 1);
        out.extend_from_slice(emp.point(i, side));
    }
    Ok(out)
}
