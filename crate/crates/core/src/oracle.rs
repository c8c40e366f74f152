//! Deterministic grid oracle for the eigenvalue problem.
//!
//! The generator of the killed jump chain is assembled exactly on a regular
//! periodic grid — the same locally consistent rates the particle engines
//! use — and its principal eigenpair is solved densely by shift-inverted
//! power iteration. The density side (left Perron vector, the quasistationary
//! distribution the ensembles sample) and the function side (right Perron
//! vector) share one spectrum, which gives a sharp internal consistency
//! check; comparing the forward and backward generators instead agrees only
//! up to the discretization error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::stable_sum;
use crate::fv::event_rates;
use crate::problem::{Direction, ProblemSpec};

/// Maximum spatial dimension the dense oracle supports.
pub const ORACLE_DIM_LIMIT: usize = 2;
const MIN_NODES_PER_AXIS: usize = 8;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_SOLVES: usize = 10_000;
const SOLVES_PER_FACTORIZATION: usize = 5;

/// Dense generator `G = L − kill` of one direction's killed jump chain on a
/// regular periodic grid: off-diagonal entries are the nearest-neighbor
/// transition rates, the diagonal is `−(total rate + kill)`, so each row
/// sums to `−kill` at its node.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    direction: Direction,
    n: usize,
    dim: usize,
    h: f64,
    lower: Vec<f64>,
    matrix: DMatrix<f64>,
    kill: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid spacing (equal on every axis).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of nodes, `n^dim`.
    pub fn node_count(&self) -> usize {
        self.kill.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Kill rate at each node (`c` forward, `c̄` backward).
    pub fn kill(&self) -> &[f64] {
        &self.kill
    }

    /// Coordinates of node `idx` (row-major, axis 0 slowest).
    pub fn node_coord(&self, idx: usize) -> Vec<f64> {
        let mut rest = idx;
        let mut coord = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            let k = rest % self.n;
            rest /= self.n;
            coord[a] = self.lower[a] + k as f64 * self.h;
        }
        coord
    }

    /// All node coordinates as one flat `node_count × dim` buffer.
    pub fn node_coords_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_count() * self.dim);
        for idx in 0..self.node_count() {
            out.extend_from_slice(&self.node_coord(idx));
        }
        out
    }
}

/// Assemble the killed-chain generator on an `n`-per-axis periodic grid.
///
/// Needs `n ≥ 8`, dimension at most [`ORACLE_DIM_LIMIT`], and equal box
/// periods on every axis (one scalar spacing `h = period / n`).
pub fn build_generator(
    spec: &ProblemSpec,
    n: usize,
    direction: Direction,
) -> Result<GeneratorMatrix> {
    let dim = spec.dim();
    if dim > ORACLE_DIM_LIMIT {
        return Err(Error::UnsupportedDimension { dim, limit: ORACLE_DIM_LIMIT });
    }
    if n < MIN_NODES_PER_AXIS {
        return Err(Error::InvalidInput(format!(
            "the grid oracle needs at least {MIN_NODES_PER_AXIS} nodes per axis (got {n})"
        )));
    }
    let period = spec.domain().period(0);
    for a in 1..dim {
        if spec.domain().period(a) != period {
            return Err(Error::InvalidInput(
                "the grid oracle needs equal box periods on every axis".into(),
            ));
        }
    }
    let h = period / n as f64;
    let w = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => 0.0,
    };
    let nodes = n.pow(dim as u32);
    let mut matrix = DMatrix::zeros(nodes, nodes);
    let mut kill = vec![0.0; nodes];
    let lower = spec.domain().lower().to_vec();

    let mut digits = vec![0usize; dim];
    let mut coord = vec![0.0; dim];
    for idx in 0..nodes {
        let mut rest = idx;
        for a in (0..dim).rev() {
            digits[a] = rest % n;
            rest /= n;
            coord[a] = lower[a] + digits[a] as f64 * h;
        }
        let er = event_rates(&coord, w, spec, h)?;
        kill[idx] = er.kill_clone;
        // Row-major neighbor index along one axis, wrapped.
        let mut stride = 1usize;
        for a in (0..dim).rev() {
            let up = (digits[a] + 1) % n;
            let down = (digits[a] + n - 1) % n;
            let base = idx - digits[a] * stride;
            matrix[(idx, base + up * stride)] += er.dynamics.up(a);
            matrix[(idx, base + down * stride)] += er.dynamics.down(a);
            stride *= n;
        }
        matrix[(idx, idx)] = -(er.dynamics.total() + kill[idx]);
    }

    Ok(GeneratorMatrix { direction, n, dim, h, lower, matrix, kill })
}

/// A converged principal eigenpair.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Strictly positive eigenvector over the grid nodes. The density side
    /// sums to 1; the function side has maximum 1.
    pub vector: Vec<f64>,
    /// Final `‖Av − λv‖∞` on the max-normalized iterate.
    pub residual: f64,
    /// Linear solves spent.
    pub iterations: usize,
}

#[derive(Clone, Copy)]
enum Side {
    Density,
    Function,
}

/// Principal eigenpair of the density side: the quasistationary distribution
/// `v ≥ 0, Σv = 1` with `−Gᵀ v = λ v`. The eigenvalue is read off the exact
/// stationarity identity `λ = Σ kill·v`.
pub fn principal_eigenpair(gen: &GeneratorMatrix) -> Result<Eigenpair> {
    solve_side(gen, Side::Density)
}

/// Principal eigenpair of the function side: the positive right eigenvector
/// of `−G`, max-normalized, with a Rayleigh-quotient eigenvalue. Shares the
/// density side's spectrum exactly (they are transposes).
pub fn principal_eigenpair_dual(gen: &GeneratorMatrix) -> Result<Eigenpair> {
    solve_side(gen, Side::Function)
}

fn solve_side(gen: &GeneratorMatrix, side: Side) -> Result<Eigenpair> {
    let nodes = gen.node_count();
    let a = match side {
        Side::Density => -gen.matrix.transpose(),
        Side::Function => -gen.matrix.clone(),
    };
    let kmin = gen.kill.iter().copied().fold(f64::INFINITY, f64::min);
    let kmax = gen.kill.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // The Perron eigenvalue lies in [min kill, max kill]; a shift strictly
    // below keeps A − σI an M-matrix, so the inverse iteration stays
    // positive.
    let mut sigma = kmin - 0.05 * (1.0 + (kmax - kmin));
    let mut v = DVector::from_element(nodes, 1.0);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut solves = 0usize;

    'outer: loop {
        let mut shifted = a.clone();
        for i in 0..nodes {
            shifted[(i, i)] -= sigma;
        }
        let lu = shifted.lu();
        for _ in 0..SOLVES_PER_FACTORIZATION {
            solves += 1;
            let Some(w) = lu.solve(&v) else {
                // Essentially singular shift: back away and refactor.
                sigma -= 0.1 * (1.0 + sigma.abs());
                if solves >= MAX_SOLVES {
                    return Err(Error::NumericalFailure { iterations: solves, residual });
                }
                continue 'outer;
            };
            let peak = w.amax();
            if !(peak > 0.0) || !peak.is_finite() {
                return Err(Error::NumericalFailure { iterations: solves, residual });
            }
            let flip = if w.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m }) < 0.0
            {
                -1.0
            } else {
                1.0
            };
            v = w * (flip / peak);
            lambda = match side {
                Side::Density => {
                    let num = stable_sum(gen.kill.iter().zip(v.iter()).map(|(&k, &x)| k * x));
                    num / stable_sum(v.iter().copied())
                }
                Side::Function => {
                    let av = &a * &v;
                    v.dot(&av) / v.dot(&v)
                }
            };
            residual = (&a * &v - &v * lambda).amax();
            if residual <= RESIDUAL_TOL {
                break 'outer;
            }
            if solves >= MAX_SOLVES {
                return Err(Error::NumericalFailure { iterations: solves, residual });
            }
        }
        sigma = lambda - (10.0 * residual).max(1e-13 * (1.0 + lambda.abs()));
    }

    if v.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NumericalFailure { iterations: solves, residual });
    }
    let mut vector: Vec<f64> = v.iter().copied().collect();
    match side {
        Side::Density => {
            let total = stable_sum(vector.iter().copied());
            for x in &mut vector {
                *x /= total;
            }
        }
        Side::Function => {
            // Already max-normalized by the iteration.
        }
    }
    Ok(Eigenpair { lambda, vector, residual, iterations: solves })
}
