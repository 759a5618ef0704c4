//! Full-covariance Gaussian kernel density estimation.
//!
//! The kernel covariance is the sample covariance (denominator `n - 1`)
//! scaled by Scott's factor squared, `n^(-1/3)` in two dimensions. Because the
//! kernel follows the data covariance, the estimate is affine equivariant:
//! `f_{AP+b}(Ax + b) * |det A| = f_P(x)`.
//!
//! Density levels are expressed as iso-proportions: level `f` is the density
//! below which a fraction `f` of the probability mass lies, so `f = 0.05`
//! drops the lowest 5% of the mass.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::{BoundingRect, PointSet};
use crate::{Error, Result};

/// Relative determinant below which the sample covariance counts as singular.
const SINGULAR_REL_DET: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DensityModel {
    source: PointSet,
    bandwidth: Matrix2<f64>,
    chol: Matrix2<f64>,
    whiten: Matrix2<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    norm: f64,
}

const LANES: usize = 8;

/// `exp(x)` for `x <= 0`, within one ulp of libm, written so the kernel sum
/// vectorizes.
#[inline(always)]
fn exp_neg(x: f64) -> f64 {
    const SHIFT: f64 = 6755399441055744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.93147180369123816490e-01;
    const LN2_LO: f64 = 1.90821492927058770002e-10;
    let xc = x.max(-708.0);
    let t = xc * std::f64::consts::LOG2_E + SHIFT;
    let k = t - SHIFT;
    let r = (xc - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 6227020800.0;
    for c in [
        1.0 / 479001600.0,
        1.0 / 39916800.0,
        1.0 / 3628800.0,
        1.0 / 362880.0,
        1.0 / 40320.0,
        1.0 / 5040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    let scale = f64::from_bits((t.to_bits() as i64).wrapping_add(1023).wrapping_shl(52) as u64);
    if x > -708.0 { p * scale } else { 0.0 }
}

/// Sample covariance with denominator `n - 1`.
pub fn sample_covariance(ps: &PointSet) -> Matrix2<f64> {
    let n = ps.len() as f64;
    let (mx, my) = ps.points().iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in ps.points() {
        let dx = p[0] - mx;
        let dy = p[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    Matrix2::new(sxx, sxy, sxy, syy) / (n - 1.0)
}

/// Scott's factor for two dimensions, `n^(-1/6)`.
pub fn scott_factor(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 6.0)
}

pub fn fit_kde(ps: &PointSet) -> Result<DensityModel> {
    let cov = sample_covariance(ps);
    let det = cov.determinant();
    let scale = cov[(0, 0)] * cov[(1, 1)];
    if !(scale > 0.0) || !(det > SINGULAR_REL_DET * scale) {
        return Err(Error::SingularCovariance { det });
    }
    let f = scott_factor(ps.len());
    let bandwidth = cov * (f * f);
    let chol = bandwidth
        .cholesky()
        .ok_or(Error::SingularCovariance { det })?
        .l();
    let whiten = chol.try_inverse().ok_or(Error::SingularCovariance { det })?;
    let (wx, wy) = ps
        .points()
        .iter()
        .map(|p| {
            let w = whiten * Vector2::new(p[0], p[1]);
            (w.x, w.y)
        })
        .unzip();
    // 1 / (n * 2 pi * sqrt(det H)), with sqrt(det H) = det L
    let norm = 1.0 / (ps.len() as f64 * TAU * chol[(0, 0)] * chol[(1, 1)]);
    Ok(DensityModel { source: ps.clone(), bandwidth, chol, whiten, wx, wy, norm })
}

impl DensityModel {
    pub fn source(&self) -> &PointSet {
        &self.source
    }

    /// Kernel covariance matrix.
    pub fn bandwidth_matrix(&self) -> Matrix2<f64> {
        self.bandwidth
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `(1/n) * sum_i N(p - x_i; 0, H)`.
    #[inline]
    pub fn density_at(&self, p: [f64; 2]) -> f64 {
        let wx = self.whiten[(0, 0)] * p[0];
        let wy = self.whiten[(1, 0)] * p[0] + self.whiten[(1, 1)] * p[1];
        let mut acc = [0.0; LANES];
        let xs = self.wx.chunks_exact(LANES);
        let ys = self.wy.chunks_exact(LANES);
        let (xr, yr) = (xs.remainder(), ys.remainder());
        for (cx, cy) in xs.zip(ys) {
            for l in 0..LANES {
                let dx = wx - cx[l];
                let dy = wy - cy[l];
                acc[l] += exp_neg(-0.5 * (dx * dx + dy * dy));
            }
        }
        for (l, (&x, &y)) in xr.iter().zip(yr).enumerate() {
            let dx = wx - x;
            let dy = wy - y;
            acc[l] += exp_neg(-0.5 * (dx * dx + dy * dy));
        }
        acc.iter().sum::<f64>() * self.norm
    }

    pub fn evaluate(&self, pts: &[[f64; 2]]) -> Vec<f64> {
        pts.iter().map(|&p| self.density_at(p)).collect()
    }

    /// Smoothed-bootstrap draw: a uniformly chosen source point plus kernel
    /// noise.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let p = self.source.points()[rng.random_range(0..self.source.len())];
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        [
            p[0] + self.chol[(0, 0)] * z0,
            p[1] + self.chol[(1, 0)] * z0 + self.chol[(1, 1)] * z1,
        ]
    }

    /// Maximum of the density over `grid` cell centres and the source points.
    pub fn max_density(&self, grid: &DensityGrid) -> f64 {
        let on_points = self.source.points().iter().map(|&p| self.density_at(p));
        grid.values.iter().copied().chain(on_points).fold(0.0, f64::max)
    }
}

pub fn evaluate(m: &DensityModel, pts: &[[f64; 2]]) -> Vec<f64> {
    m.evaluate(pts)
}

/// Density sampled at the centres of an `nx` by `ny` lattice of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub rect: BoundingRect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in y: `values[j * nx + i]` is cell column `i`, row `j`.
    pub values: Vec<f64>,
    pub cell_area: f64,
}

impl DensityGrid {
    pub fn dx(&self) -> f64 {
        self.rect.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.rect.height() / self.ny as f64
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.rect.x_min + (i as f64 + 0.5) * self.dx(),
            self.rect.y_min + (j as f64 + 0.5) * self.dy(),
        ]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Riemann-sum mass of the rectangle.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `x,y,density` rows, one per cell centre.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io { path: path.to_path_buf(), source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(out, "x,y,density").map_err(io_err)?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let [x, y] = self.cell_center(i, j);
                writeln!(out, "{x},{y},{}", self.value(i, j)).map_err(io_err)?;
            }
        }
        out.flush().map_err(io_err)
    }
}

pub const MIN_GRID: usize = 16;

pub fn grid_evaluate(m: &DensityModel, rect: BoundingRect, nx: usize, ny: usize) -> Result<DensityGrid> {
    if nx < MIN_GRID || ny < MIN_GRID {
        return Err(Error::InvalidArgument(format!("grid must be at least {MIN_GRID}x{MIN_GRID}, got {nx}x{ny}")));
    }
    let mut grid = DensityGrid { rect, nx, ny, values: Vec::with_capacity(nx * ny), cell_area: 0.0 };
    grid.cell_area = grid.dx() * grid.dy();
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.cell_center(i, j);
            grid.values.push(m.density_at(c));
        }
    }
    Ok(grid)
}

/// Density thresholds matched to iso-proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelThresholds {
    pub iso_proportions: Vec<f64>,
    pub density_thresholds: Vec<f64>,
}

/// For each proportion `f`, the smallest grid density `t` such that the
/// cells with density below `t` carry at least `f` of the grid's mass.
///
/// Proportions are relative to the total mass on the grid.
pub fn iso_thresholds(grid: &DensityGrid, iso_proportions: &[f64]) -> Result<LevelThresholds> {
    if iso_proportions.iter().any(|f| !(0.0..1.0).contains(f)) {
        return Err(Error::InvalidArgument("iso-proportions must lie in [0, 1)".into()));
    }
    if iso_proportions.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("iso-proportions must be ascending".into()));
    }
    let mut sorted = grid.values.clone();
    sorted.sort_by(f64::total_cmp);
    // below[k] = mass strictly before sorted index k
    let mut below = Vec::with_capacity(sorted.len() + 1);
    let mut acc = 0.0;
    below.push(0.0);
    for v in &sorted {
        acc += v;
        below.push(acc);
    }
    let total = acc;
    let density_thresholds = iso_proportions
        .iter()
        .map(|&f| {
            let target = f * total;
            let n = sorted.len();
            let mut k = below[..n].partition_point(|&m| m < target);
            if k > 0 && k < n && sorted[k - 1] == sorted[k] {
                // cells tied with sorted[k] are not below it; move to the next distinct value
                k = sorted.partition_point(|&v| v <= sorted[k]);
            }
            sorted[k.min(n - 1)]
        })
        .collect();
    Ok(LevelThresholds { iso_proportions: iso_proportions.to_vec(), density_thresholds })
}
