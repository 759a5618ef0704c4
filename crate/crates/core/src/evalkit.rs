//! Baseline generators, repeat-sampling summaries and agreement statistics.
//!
//! Two untrained baselines are provided: a Gaussian copula with empirical
//! marginals, and a moment-matched Gaussian with the data's per-axis means
//! and standard deviations and independent axes.
//!
//! Empirical CDFs use plotting positions `rank / (n + 1)` with midranks for
//! ties; the inverse CDF interpolates linearly between order statistics and
//! is clamped to the observed range.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataio::PointSet;
use crate::report::{score_one, ScoreConfig};
use crate::rng;
use crate::scores::ScoreName;
use crate::{Error, Result};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Copula,
    MomentGaussian,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Copula => "copula",
            ModelKind::MomentGaussian => "moment_gaussian",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "copula" => Ok(ModelKind::Copula),
            "moment_gaussian" | "gaussian" => Ok(ModelKind::MomentGaussian),
            _ => Err(Error::InvalidArgument(format!("unknown model `{s}`; expected copula or moment_gaussian"))),
        }
    }
}

/// Empirical marginal: sorted observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    sorted: Vec<f64>,
}

impl Marginal {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let mut sorted: Vec<f64> = values.collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Inverse CDF at `u`, interpolating between order statistics placed at
    /// `k / (n + 1)`, `k = 1..=n`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        let pos = (u * (n + 1) as f64 - 1.0).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let t = pos - lo as f64;
        self.sorted[lo] + t * (self.sorted[hi] - self.sorted[lo])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerativeModel {
    Copula { x: Marginal, y: Marginal, rho: f64 },
    MomentGaussian { mean: [f64; 2], sd: [f64; 2] },
}

/// Midranks (1-based, ties averaged) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn fit_model(kind: ModelKind, ps: &PointSet) -> Result<GenerativeModel> {
    let (mx, sx) = mean_sd(&ps.xs().collect::<Vec<_>>());
    let (my, sy) = mean_sd(&ps.ys().collect::<Vec<_>>());
    for (axis, sd) in [('x', sx), ('y', sy)] {
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance { axis });
        }
    }
    Ok(match kind {
        ModelKind::MomentGaussian => GenerativeModel::MomentGaussian { mean: [mx, my], sd: [sx, sy] },
        ModelKind::Copula => {
            let n1 = (ps.len() + 1) as f64;
            let normal = std_normal();
            let scores = |v: Vec<f64>| -> Vec<f64> { midranks(&v).into_iter().map(|r| normal.inverse_cdf(r / n1)).collect() };
            let zx = scores(ps.xs().collect());
            let zy = scores(ps.ys().collect());
            GenerativeModel::Copula { x: Marginal::new(ps.xs()), y: Marginal::new(ps.ys()), rho: pearson(&zx, &zy) }
        }
    })
}

impl GenerativeModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            GenerativeModel::Copula { .. } => ModelKind::Copula,
            GenerativeModel::MomentGaussian { .. } => ModelKind::MomentGaussian,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n < 3 {
            return Err(Error::TooFewPoints { found: n });
        }
        let mut r = rng::seeded(seed);
        let mut pts = Vec::with_capacity(n);
        match self {
            GenerativeModel::MomentGaussian { mean, sd } => {
                for _ in 0..n {
                    let z0: f64 = r.sample(StandardNormal);
                    let z1: f64 = r.sample(StandardNormal);
                    pts.push([mean[0] + sd[0] * z0, mean[1] + sd[1] * z1]);
                }
            }
            GenerativeModel::Copula { x, y, rho } => {
                let normal = std_normal();
                let c = (1.0 - rho * rho).max(0.0).sqrt();
                for _ in 0..n {
                    let z0: f64 = r.sample(StandardNormal);
                    let e: f64 = r.sample(StandardNormal);
                    let z1 = rho * z0 + c * e;
                    pts.push([x.quantile(normal.cdf(z0)), y.quantile(normal.cdf(z1))]);
                }
            }
        }
        PointSet::new(self.kind().as_str(), pts)
    }
}

/// Free-function form of [`GenerativeModel::sample`].
pub fn sample(m: &GenerativeModel, n: usize, seed: u64) -> Result<PointSet> {
    m.sample(n, seed)
}

/// Values of one score over repeated samples, with summary statistics.
/// Percentiles use the nearest-rank rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleSummary {
    pub score: ScoreName,
    pub model: ModelKind,
    pub n_repeats: usize,
    pub base_seed: u64,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub iqr: f64,
    pub p5: f64,
    pub p95: f64,
    pub values: Vec<f64>,
}

/// Nearest-rank percentile: the smallest value with at least `p`% of the
/// values at or below it.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl ResampleSummary {
    pub fn from_values(score: ScoreName, model: ModelKind, base_seed: u64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 repeats, got {}", values.len())));
        }
        let (mean, sd) = mean_sd(&values);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |p| percentile_sorted(&sorted, p);
        Ok(Self {
            score,
            model,
            n_repeats: values.len(),
            base_seed,
            mean,
            sd,
            median: q(50.0),
            iqr: q(75.0) - q(25.0),
            p5: q(5.0),
            p95: q(95.0),
            values,
        })
    }

    pub fn percentile(&self, p: f64) -> f64 {
        percentile(&self.values, p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// `repeat,seed,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("repeat,seed,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{},{v}\n", rng::derive_seed(self.base_seed, i as u64)));
        }
        out
    }

    pub fn write_files(&self, json: impl AsRef<Path>, csv: impl AsRef<Path>) -> Result<()> {
        write_string(json.as_ref(), &self.to_json())?;
        write_string(csv.as_ref(), &self.to_csv())
    }
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(contents.as_bytes()).map_err(io_err)
}

/// Scores `n_repeats` samples of size `|real|` drawn from `m` against `real`.
///
/// Repeat `i` samples with seed `derive_seed(base_seed, i)` and scores with
/// the same seed for the stochastic scores.
pub fn resample_scores(
    real: &PointSet,
    m: &GenerativeModel,
    score: ScoreName,
    cfg: &ScoreConfig,
    n_repeats: usize,
    base_seed: u64,
) -> Result<ResampleSummary> {
    if n_repeats < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 repeats, got {n_repeats}")));
    }
    let mut values = Vec::with_capacity(n_repeats);
    for i in 0..n_repeats {
        let seed = rng::derive_seed(base_seed, i as u64);
        let synth = m.sample(real.len(), seed)?;
        let cfg = cfg.clone().with_seed(seed);
        values.push(score_one(score, real, &synth, &cfg)?.value);
    }
    ResampleSummary::from_values(score, m.kind(), base_seed, values)
}

/// Cohen's kappa for two binary raters. Perfect agreement on a constant
/// labelling counts as 1.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("cohen_kappa needs at least one rating".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    if expected == 1.0 {
        return Ok(if agree == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((agree - expected) / (1.0 - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Mann-Whitney U test with midranks, tie-corrected variance and continuity
/// correction under the normal approximation.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<MannWhitney> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("mann_whitney_u needs two nonempty samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("mann_whitney_u needs finite values".into()));
    }
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let all: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let ranks = midranks(&all);
    let r1: f64 = ranks[..xs.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;

    let n = n1 + n2;
    let mut sorted = all;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let end = start + sorted[start..].iter().take_while(|&&v| v == sorted[start]).count();
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, z: 0.0, p: 1.0 });
    }
    let dev = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let p = (2.0 * (1.0 - std_normal().cdf(z))).min(1.0);
    Ok(MannWhitney { u, z, p })
}
