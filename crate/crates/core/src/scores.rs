//! Equipoint scores: correlation, Jaccard and Kullback-Leibler.
//!
//! All three weight every datapoint equally. The earth-mover's score lives
//! in [`crate::emd`] and the equidensity Eden score in [`crate::eden`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataio::{bounding_rect, PointSet};
use crate::kde::{fit_kde, grid_evaluate, DensityGrid, DensityModel};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreName {
    Correlation,
    Emd,
    Jaccard,
    Kl,
    Eden,
}

impl ScoreName {
    pub const ALL: [ScoreName; 5] =
        [ScoreName::Correlation, ScoreName::Emd, ScoreName::Jaccard, ScoreName::Kl, ScoreName::Eden];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreName::Correlation => "correlation",
            ScoreName::Emd => "emd",
            ScoreName::Jaccard => "jaccard",
            ScoreName::Kl => "kl",
            ScoreName::Eden => "eden",
        }
    }

    /// Whether the score carries Monte-Carlo noise.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ScoreName::Kl | ScoreName::Eden)
    }
}

impl fmt::Display for ScoreName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScoreName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreName::ALL
            .into_iter()
            .find(|n| n.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown score `{s}`")))
    }
}

/// One score for one pair of point sets. `stderr` and `seed` are present for
/// the stochastic scores only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub name: ScoreName,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Conditions worth auditing (clamped estimates, empty annuli).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ScoreValue {
    pub fn deterministic(name: ScoreName, value: f64) -> Self {
        Self { name, value, stderr: None, seed: None, flags: Vec::new() }
    }
}

/// Sample Pearson correlation of the x and y coordinates.
pub fn pearson_r(ps: &PointSet) -> Result<f64> {
    let n = ps.len() as f64;
    let mx = ps.xs().sum::<f64>() / n;
    let my = ps.ys().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in ps.points() {
        let dx = p[0] - mx;
        let dy = p[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance { axis: 'x' });
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance { axis: 'y' });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - |R_p - R_q| / 2`.
pub fn correlation_score(p: &PointSet, q: &PointSet) -> Result<ScoreValue> {
    let rp = pearson_r(p)?;
    let rq = pearson_r(q)?;
    Ok(ScoreValue::deterministic(ScoreName::Correlation, correlation_from_r(rp, rq)))
}

pub fn correlation_from_r(rp: f64, rq: f64) -> f64 {
    1.0 - (rp - rq).abs() / 2.0
}

/// What counts as the union in the Jaccard ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JaccardUnion {
    /// Points lying in the high-likelihood region of at least one of the two
    /// KDEs. Gives exactly 1 for identical inputs.
    #[default]
    Support,
    /// Every point of both sets, `|P| + |Q|`.
    TotalPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JaccardConfig {
    /// A point belongs to a KDE's region when its density exceeds this
    /// fraction of the KDE's maximum.
    pub ratio_thresh: f64,
    pub union: JaccardUnion,
    /// Resolution of the grid on which each KDE's maximum is searched.
    pub grid: usize,
    pub margin_frac: f64,
}

impl Default for JaccardConfig {
    fn default() -> Self {
        Self { ratio_thresh: 0.1, union: JaccardUnion::Support, grid: 256, margin_frac: 0.10 }
    }
}

/// Per-point membership counts behind a Jaccard score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JaccardCounts {
    /// Points of P in Q's region plus points of Q in P's region.
    pub intersection: usize,
    /// Points of P and Q in at least one region.
    pub support: usize,
    pub total: usize,
}

impl JaccardCounts {
    pub fn score(&self, union: JaccardUnion) -> f64 {
        let denom = match union {
            JaccardUnion::Support => self.support,
            JaccardUnion::TotalPoints => self.total,
        };
        if denom == 0 {
            0.0
        } else {
            self.intersection as f64 / denom as f64
        }
    }
}

pub fn jaccard_counts(p: &PointSet, q: &PointSet, cfg: &JaccardConfig) -> Result<JaccardCounts> {
    let fp = fit_kde(p)?;
    let fq = fit_kde(q)?;
    jaccard_counts_with(&fp, &fq, cfg)
}

pub fn jaccard_counts_with(fp: &DensityModel, fq: &DensityModel, cfg: &JaccardConfig) -> Result<JaccardCounts> {
    if !(cfg.ratio_thresh > 0.0 && cfg.ratio_thresh < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio threshold must be in (0, 1), got {}", cfg.ratio_thresh)));
    }
    let rect = bounding_rect(&[fp.source(), fq.source()], cfg.margin_frac)?;
    let gp = grid_evaluate(fp, rect, cfg.grid, cfg.grid)?;
    let gq = grid_evaluate(fq, rect, cfg.grid, cfg.grid)?;
    jaccard_counts_on_grids(fp, fq, &gp, &gq, cfg)
}

/// As [`jaccard_counts_with`], with the maximum searched on precomputed grids.
pub fn jaccard_counts_on_grids(
    fp: &DensityModel,
    fq: &DensityModel,
    gp: &DensityGrid,
    gq: &DensityGrid,
    cfg: &JaccardConfig,
) -> Result<JaccardCounts> {
    if !(cfg.ratio_thresh > 0.0 && cfg.ratio_thresh < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio threshold must be in (0, 1), got {}", cfg.ratio_thresh)));
    }
    let (p, q) = (fp.source(), fq.source());
    let max_p = fp.max_density(gp);
    let max_q = fq.max_density(gq);
    let mut counts = JaccardCounts { intersection: 0, support: 0, total: p.len() + q.len() };
    // own-region and other-region membership for every point
    let mut tally = |pt: [f64; 2], own: &DensityModel, own_max: f64, other: &DensityModel, other_max: f64| {
        let in_other = other.density_at(pt) / other_max > cfg.ratio_thresh;
        let in_own = own.density_at(pt) / own_max > cfg.ratio_thresh;
        counts.intersection += in_other as usize;
        counts.support += (in_other || in_own) as usize;
    };
    for &pt in p.points() {
        tally(pt, fp, max_p, fq, max_q);
    }
    for &pt in q.points() {
        tally(pt, fq, max_q, fp, max_p);
    }
    Ok(counts)
}

/// Intersection over union of P and Q, membership decided by KDE
/// likelihood ratios against each distribution's maximum.
pub fn jaccard_score(p: &PointSet, q: &PointSet, cfg: &JaccardConfig) -> Result<ScoreValue> {
    let counts = jaccard_counts(p, q, cfg)?;
    Ok(ScoreValue::deterministic(ScoreName::Jaccard, counts.score(cfg.union)))
}

/// Monte-Carlo settings for the KL divergence (order 1 of the Rényi family).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KlConfig {
    pub n_samples: usize,
    /// Densities are floored here before taking logarithms.
    pub floor: f64,
    pub seed: u64,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self { n_samples: 50_000, floor: 1e-300, seed: 0 }
    }
}

impl KlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 100 {
            return Err(Error::InvalidArgument(format!("KL needs at least 100 samples, got {}", self.n_samples)));
        }
        if !(self.floor > 0.0) {
            return Err(Error::InvalidArgument("KL density floor must be positive".into()));
        }
        Ok(())
    }
}

/// Samples per RNG stream in the KL estimator.
pub const KL_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    /// Divergence estimate, clamped at 0.
    pub estimate: f64,
    /// Mean log-ratio before clamping.
    pub raw: f64,
    pub stderr: f64,
    pub clamped: bool,
}

/// `D(p || q) ~ mean_i log(p(x_i) / q(x_i))` with `x_i` drawn from `p` by
/// smoothed bootstrap.
pub fn kl_divergence_mc(p: &DensityModel, q: &DensityModel, cfg: &KlConfig) -> Result<KlEstimate> {
    cfg.validate()?;
    let mut terms = Vec::with_capacity(cfg.n_samples);
    for (chunk, start) in (0..cfg.n_samples).step_by(KL_CHUNK).enumerate() {
        let mut rng = rng::stream(cfg.seed, chunk as u64);
        for _ in start..(start + KL_CHUNK).min(cfg.n_samples) {
            let x = p.sample_one(&mut rng);
            let lp = p.density_at(x).max(cfg.floor).ln();
            let lq = q.density_at(x).max(cfg.floor).ln();
            terms.push(lp - lq);
        }
    }
    let (mean, stderr) = mean_and_stderr(&terms);
    Ok(KlEstimate { estimate: mean.max(0.0), raw: mean, stderr, clamped: mean < 0.0 })
}

pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `exp(-D(p || q))` with `p` the real and `q` the synthetic data. Not
/// symmetric.
pub fn kl_score(p: &PointSet, q: &PointSet, cfg: &KlConfig) -> Result<ScoreValue> {
    let fp = fit_kde(p)?;
    let fq = fit_kde(q)?;
    kl_score_with(&fp, &fq, cfg)
}

pub fn kl_score_with(fp: &DensityModel, fq: &DensityModel, cfg: &KlConfig) -> Result<ScoreValue> {
    let est = kl_divergence_mc(fp, fq, cfg)?;
    let value = (-est.estimate).exp();
    // delta method on exp(-D)
    let stderr = value * est.stderr;
    let mut flags = Vec::new();
    if est.clamped {
        flags.push(format!("negative divergence estimate {:e} clamped to 0", est.raw));
    }
    Ok(ScoreValue { name: ScoreName::Kl, value, stderr: Some(stderr), seed: Some(cfg.seed), flags })
}
