//! Exact earth-mover's distance between binned 2D histograms.
//!
//! The ground distance is the Euclidean distance between bin centres divided
//! by the distance between the two corner bin centres, so the EMD lies in
//! `[0, 1]` and does not depend on the scale of the data. The score is
//! `exp(-k * EMD)`.
//!
//! Because the ground distance is a metric, an optimal plan leaves
//! `min(a_k, b_k)` in place at every bin. Only the surplus is handed to the
//! transportation solver, which is exact (network simplex) and certified by
//! its dual potentials.

mod simplex;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{bounding_rect, BoundingRect, PointSet};
use crate::scores::{ScoreName, ScoreValue};
use crate::{Error, Result};

/// Tolerance of the optimality and conservation certificates.
pub const CERT_TOL: f64 = 1e-9;

/// Normalized weights on an `nx` by `ny` lattice of bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub rect: BoundingRect,
    pub nx: usize,
    pub ny: usize,
    /// `weights[j * nx + i]` for bin column `i`, row `j`.
    weights: Vec<f64>,
}

impl Histogram2D {
    /// Wraps nonnegative weights summing to 1 (within 1e-12).
    pub fn new(rect: BoundingRect, nx: usize, ny: usize, weights: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2x2 bins, got {nx}x{ny}")));
        }
        if weights.len() != nx * ny {
            return Err(Error::LengthMismatch(weights.len(), nx * ny));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("histogram weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("histogram weights sum to {sum}, not 1")));
        }
        Ok(Self { rect, nx, ny, weights })
    }

    /// Normalizes arbitrary nonnegative masses.
    pub fn from_masses(rect: BoundingRect, nx: usize, ny: usize, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("histogram has no mass".into()));
        }
        Self::new(rect, nx, ny, masses.iter().map(|m| m / total).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.nx + i]
    }

    pub fn bin_center(&self, i: usize, j: usize) -> [f64; 2] {
        let dx = self.rect.width() / self.nx as f64;
        let dy = self.rect.height() / self.ny as f64;
        [self.rect.x_min + (i as f64 + 0.5) * dx, self.rect.y_min + (j as f64 + 0.5) * dy]
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.rect == other.rect && self.nx == other.nx && self.ny == other.ny
    }

    /// Normalized ground distance between flat bin indices `a` and `b`.
    pub fn ground_distance(&self, a: usize, b: usize) -> f64 {
        let dx = self.rect.width() / self.nx as f64;
        let dy = self.rect.height() / self.ny as f64;
        let diag = (((self.nx - 1) as f64 * dx).powi(2) + ((self.ny - 1) as f64 * dy).powi(2)).sqrt();
        let di = (a % self.nx) as f64 - (b % self.nx) as f64;
        let dj = (a / self.nx) as f64 - (b / self.nx) as f64;
        ((di * dx).powi(2) + (dj * dy).powi(2)).sqrt() / diag
    }
}

/// Bin index of `v` on `[lo, hi]` split into `n` bins; the upper edge
/// belongs to the last bin.
fn bin_index(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}

pub fn bin_points(ps: &PointSet, rect: BoundingRect, nx: usize, ny: usize) -> Result<Histogram2D> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2x2 bins, got {nx}x{ny}")));
    }
    let mut counts = vec![0usize; nx * ny];
    for &p in ps.points() {
        if !rect.contains(p) {
            return Err(Error::OutsideRect { x: p[0], y: p[1] });
        }
        let i = bin_index(p[0], rect.x_min, rect.x_max, nx);
        let j = bin_index(p[1], rect.y_min, rect.y_max, ny);
        counts[j * nx + i] += 1;
    }
    let total = ps.len() as f64;
    Ok(Histogram2D { rect, nx, ny, weights: counts.into_iter().map(|c| c as f64 / total).collect() })
}

/// Mass moved from one bin to another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub src: (usize, usize),
    pub dst: (usize, usize),
    pub mass: f64,
}

/// Optimal plan. `flows` lists moved mass only; `retained[k]` is the mass
/// that stays in bin `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<Flow>,
    pub retained: Vec<f64>,
    pub total_cost: f64,
}

impl TransportPlan {
    /// Largest violation of flow conservation or nonnegativity against the
    /// source and destination histograms.
    pub fn conservation_error(&self, a: &Histogram2D, b: &Histogram2D) -> f64 {
        let mut out = self.retained.clone();
        let mut inflow = self.retained.clone();
        let mut worst: f64 = 0.0;
        for f in &self.flows {
            worst = worst.max(-f.mass);
            out[f.src.1 * a.nx + f.src.0] += f.mass;
            inflow[f.dst.1 * a.nx + f.dst.0] += f.mass;
        }
        for k in 0..out.len() {
            worst = worst.max((out[k] - a.weights[k]).abs()).max((inflow[k] - b.weights[k]).abs());
        }
        worst
    }

    /// `src_i,src_j,dst_i,dst_j,mass` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io { path: path.to_path_buf(), source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(out, "src_i,src_j,dst_i,dst_j,mass").map_err(io_err)?;
        for f in &self.flows {
            writeln!(out, "{},{},{},{},{}", f.src.0, f.src.1, f.dst.0, f.dst.1, f.mass).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

pub fn emd_exact(a: &Histogram2D, b: &Histogram2D) -> Result<TransportPlan> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let bins = a.nx * a.ny;
    let retained: Vec<f64> = (0..bins).map(|k| a.weights[k].min(b.weights[k])).collect();
    let sources: Vec<usize> = (0..bins).filter(|&k| a.weights[k] > b.weights[k]).collect();
    let sinks: Vec<usize> = (0..bins).filter(|&k| b.weights[k] > a.weights[k]).collect();
    let supply: Vec<f64> = sources.iter().map(|&k| a.weights[k] - b.weights[k]).collect();
    let demand: Vec<f64> = sinks.iter().map(|&k| b.weights[k] - a.weights[k]).collect();
    if supply.iter().sum::<f64>() < CERT_TOL || demand.iter().sum::<f64>() < CERT_TOL {
        return Ok(TransportPlan { flows: Vec::new(), retained, total_cost: 0.0 });
    }
    let cost: Vec<f64> = sources
        .iter()
        .flat_map(|&s| sinks.iter().map(move |&t| (s, t)))
        .map(|(s, t)| a.ground_distance(s, t))
        .collect();
    let sol = simplex::solve_transport(&supply, &demand, &cost)?;
    certify(&supply, &demand, &cost, &sol)?;
    let nx = a.nx;
    let flows = sol
        .flows
        .iter()
        .map(|&(i, j, mass)| Flow {
            src: (sources[i] % nx, sources[i] / nx),
            dst: (sinks[j] % nx, sinks[j] / nx),
            mass,
        })
        .collect();
    Ok(TransportPlan { flows, retained, total_cost: sol.cost })
}

/// Checks primal feasibility, dual feasibility of the recovered potentials,
/// complementary slackness and a zero duality gap.
fn certify(supply: &[f64], demand: &[f64], cost: &[f64], sol: &simplex::TransportSolution) -> Result<()> {
    let (m, n) = (supply.len(), demand.len());
    let mut out = vec![0.0; m];
    let mut inflow = vec![0.0; n];
    for &(i, j, f) in &sol.flows {
        if f < 0.0 {
            return Err(Error::Solver(format!("negative flow {f}")));
        }
        out[i] += f;
        inflow[j] += f;
        let rc = cost[i * n + j] + sol.pi[i] - sol.pi[m + j];
        if f > CERT_TOL && rc.abs() > CERT_TOL {
            return Err(Error::Solver(format!("complementary slackness violated: reduced cost {rc} on flow {f}")));
        }
    }
    for (got, want) in out.iter().zip(supply).chain(inflow.iter().zip(demand)) {
        if (got - want).abs() > CERT_TOL {
            return Err(Error::Solver(format!("conservation violated: {got} vs {want}")));
        }
    }
    for i in 0..m {
        for j in 0..n {
            let rc = cost[i * n + j] + sol.pi[i] - sol.pi[m + j];
            if rc < -CERT_TOL {
                return Err(Error::Solver(format!("dual infeasible: reduced cost {rc}")));
            }
        }
    }
    // dual objective of max sum b_v y_v with y = -pi
    let dual: f64 =
        -supply.iter().enumerate().map(|(i, s)| s * sol.pi[i]).sum::<f64>() + demand.iter().enumerate().map(|(j, d)| d * sol.pi[m + j]).sum::<f64>();
    if (dual - sol.cost).abs() > CERT_TOL {
        return Err(Error::Solver(format!("duality gap {} (primal {}, dual {dual})", sol.cost - dual, sol.cost)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmdConfig {
    /// Score scale in `exp(-k * EMD)`.
    pub k: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self { k: 1.0, nx: 32, ny: 32 }
    }
}

/// EMD between the two point sets binned on their joint bounding rectangle.
pub fn emd_distance(p: &PointSet, q: &PointSet, nx: usize, ny: usize) -> Result<f64> {
    let rect = bounding_rect(&[p, q], 0.0)?;
    let a = bin_points(p, rect, nx, ny)?;
    let b = bin_points(q, rect, nx, ny)?;
    Ok(emd_exact(&a, &b)?.total_cost)
}

pub fn score_from_distance(emd: f64, k: f64) -> f64 {
    (-k * emd).exp()
}

pub fn emd_score(p: &PointSet, q: &PointSet, cfg: &EmdConfig) -> Result<ScoreValue> {
    if !(cfg.k > 0.0) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {}", cfg.k)));
    }
    let d = emd_distance(p, q, cfg.nx, cfg.ny)?;
    Ok(ScoreValue::deterministic(ScoreName::Emd, score_from_distance(d, cfg.k)))
}
