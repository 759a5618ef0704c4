//! Scoring a (real, synthetic) pair with every requested score, and the
//! JSON, CSV and text renderings of the result.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataio::{bounding_rect, BoundingRect, PointSet};
use crate::eden::{eden_with, AnnulusReport, AnnulusSet, EdenConfig, THRESHOLD_GRID};
use crate::emd::{emd_score, EmdConfig};
use crate::kde::{fit_kde, grid_evaluate, DensityGrid, DensityModel};
use crate::scores::{correlation_score, jaccard_counts_on_grids, kl_score_with, JaccardConfig, KlConfig, ScoreName, ScoreValue};
use crate::{Result, VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub scores: Vec<ScoreName>,
    pub emd: EmdConfig,
    pub eden: EdenConfig,
    pub kl: KlConfig,
    pub jaccard: JaccardConfig,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            scores: ScoreName::ALL.to_vec(),
            emd: EmdConfig::default(),
            eden: EdenConfig::default(),
            kl: KlConfig::default(),
            jaccard: JaccardConfig::default(),
        }
    }
}

impl ScoreConfig {
    /// Sets the seed of every stochastic score.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.kl.seed = seed;
        self.eden.seed = seed;
        self
    }

    pub fn with_scores(mut self, scores: &[ScoreName]) -> Self {
        self.scores = scores.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.eden.validate()?;
        self.kl.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub version: String,
    pub real: String,
    pub synth: String,
    pub n_real: usize,
    pub n_synth: usize,
    pub config: ScoreConfig,
    pub scores: Vec<ScoreValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eden_detail: Option<AnnulusReport>,
}

impl ScoreReport {
    pub fn get(&self, name: ScoreName) -> Option<&ScoreValue> {
        self.scores.iter().find(|s| s.name == name)
    }

    pub fn value(&self, name: ScoreName) -> Option<f64> {
        self.get(name).map(|s| s.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per score: `score,value,stderr,seed,flags`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,value,stderr,seed,flags\n");
        for s in &self.scores {
            let stderr = s.stderr.map(|e| e.to_string()).unwrap_or_default();
            let seed = s.seed.map(|e| e.to_string()).unwrap_or_default();
            let flags = s.flags.join("; ").replace('"', "'");
            let flags = if flags.is_empty() { flags } else { format!("\"{flags}\"") };
            writeln!(out, "{},{},{stderr},{seed},{flags}", s.name, s.value).unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "eden {}: {} ({} points) vs {} ({} points)", self.version, self.real, self.n_real, self.synth, self.n_synth)
            .unwrap();
        writeln!(out, "{:<12} {:<22} {:<24} seed", "score", "value", "stderr").unwrap();
        for s in &self.scores {
            let stderr = s.stderr.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
            let seed = s.seed.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
            writeln!(out, "{:<12} {:<22} {:<24} {}", s.name.as_str(), s.value, stderr, seed).unwrap();
            for f in &s.flags {
                writeln!(out, "  ! {f}").unwrap();
            }
        }
        if let Some(d) = &self.eden_detail {
            writeln!(out, "eden annuli (0 = outermost):").unwrap();
            for a in &d.per_annulus {
                writeln!(out, "  {}  s = {}  (both {}, either {})", a.index, a.s, a.count_both, a.count_either).unwrap();
            }
        }
        out
    }
}

/// Computes one score, fitting KDEs only when the score needs them.
pub fn score_one(name: ScoreName, p: &PointSet, q: &PointSet, cfg: &ScoreConfig) -> Result<ScoreValue> {
    let mut models = Models::new(p, q);
    Ok(compute(name, &mut models, cfg)?.0)
}

pub fn score_pair(p: &PointSet, q: &PointSet, cfg: &ScoreConfig) -> Result<ScoreReport> {
    cfg.validate()?;
    let mut models = Models::new(p, q);
    let mut scores = Vec::with_capacity(cfg.scores.len());
    let mut eden_detail = None;
    for &name in &cfg.scores {
        let (value, detail) = compute(name, &mut models, cfg)?;
        scores.push(value);
        if detail.is_some() {
            eden_detail = detail;
        }
    }
    Ok(ScoreReport {
        version: VERSION.to_string(),
        real: p.label().to_string(),
        synth: q.label().to_string(),
        n_real: p.len(),
        n_synth: q.len(),
        config: cfg.clone(),
        scores,
        eden_detail,
    })
}

type Gridded<'m> = (&'m DensityModel, &'m DensityModel, &'m DensityGrid, &'m DensityGrid);

struct Models<'a> {
    p: &'a PointSet,
    q: &'a PointSet,
    fitted: Option<(DensityModel, DensityModel)>,
    grids: Option<(BoundingRect, usize, DensityGrid, DensityGrid)>,
}

impl<'a> Models<'a> {
    fn new(p: &'a PointSet, q: &'a PointSet) -> Self {
        Self { p, q, fitted: None, grids: None }
    }

    fn kdes(&mut self) -> Result<&(DensityModel, DensityModel)> {
        if self.fitted.is_none() {
            self.fitted = Some((fit_kde(self.p)?, fit_kde(self.q)?));
        }
        Ok(self.fitted.as_ref().unwrap())
    }

    /// Both KDEs and their values on an `n` by `n` grid over `rect`; the
    /// grids are reused across scores.
    fn with_grids(&mut self, rect: BoundingRect, n: usize) -> Result<Gridded<'_>> {
        self.kdes()?;
        let (fp, fq) = self.fitted.as_ref().unwrap();
        if !matches!(&self.grids, Some((r, k, _, _)) if *r == rect && *k == n) {
            self.grids = Some((rect, n, grid_evaluate(fp, rect, n, n)?, grid_evaluate(fq, rect, n, n)?));
        }
        let (_, _, gp, gq) = self.grids.as_ref().unwrap();
        Ok((fp, fq, gp, gq))
    }
}

fn compute(name: ScoreName, m: &mut Models, cfg: &ScoreConfig) -> Result<(ScoreValue, Option<AnnulusReport>)> {
    let (p, q) = (m.p, m.q);
    Ok(match name {
        ScoreName::Correlation => (correlation_score(p, q)?, None),
        ScoreName::Emd => (emd_score(p, q, &cfg.emd)?, None),
        ScoreName::Jaccard => {
            let j = &cfg.jaccard;
            let rect = bounding_rect(&[p, q], j.margin_frac)?;
            let (fp, fq, gp, gq) = m.with_grids(rect, j.grid)?;
            let counts = jaccard_counts_on_grids(fp, fq, gp, gq, j)?;
            (ScoreValue::deterministic(ScoreName::Jaccard, counts.score(cfg.jaccard.union)), None)
        }
        ScoreName::Kl => {
            let (fp, fq) = m.kdes()?;
            (kl_score_with(fp, fq, &cfg.kl)?, None)
        }
        ScoreName::Eden => {
            let e = &cfg.eden;
            e.validate()?;
            let rect = bounding_rect(&[p, q], e.margin_frac)?;
            let (fp, fq, gp, gq) = m.with_grids(rect, THRESHOLD_GRID)?;
            let ap = AnnulusSet::from_grid(fp.clone(), gp, e.n_annuli)?;
            let aq = AnnulusSet::from_grid(fq.clone(), gq, e.n_annuli)?;
            let rep = eden_with(&ap, &aq, rect, e.n_mc, e.seed)?;
            (rep.to_score(), Some(rep))
        }
    })
}
