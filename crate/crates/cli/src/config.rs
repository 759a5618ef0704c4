//! Command-line arguments shared between subcommands, and their merge with
//! the optional TOML config file. A flag always wins over the file, and the
//! file wins over the built-in default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use eden::dataio::{read_table, ColumnFilter};
use eden::{ModelKind, PointSet, ScoreConfig, ScoreName};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    pub fn as_char(self) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
        }
    }

    /// Tab for `.tsv` and `.tab` files, comma otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("tsv" | "tab") => Delimiter::Tab,
            _ => Delimiter::Comma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Comma-separated score names, or `all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreList(pub Vec<ScoreName>);

impl FromStr for ScoreList {
    type Err = eden::Error;

    fn from_str(s: &str) -> eden::Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(ScoreList(ScoreName::ALL.to_vec()));
        }
        let mut names = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let name: ScoreName = part.parse()?;
            if !names.contains(&name) {
                names.push(name);
            }
        }
        if names.is_empty() {
            return Err(eden::Error::InvalidArgument("empty score list".into()));
        }
        Ok(ScoreList(names))
    }
}

impl fmt::Display for ScoreList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(ScoreName::as_str).collect();
        f.write_str(&names.join(","))
    }
}

/// Keys accepted in the config file. Every key is optional.
///
/// ```toml
/// x = "sepal_length"
/// y = "sepal_width"
/// delimiter = "comma"
/// scores = "eden,emd"
/// seed = 7
/// format = "json"
/// emd_k = 1.0
/// emd_bins = 32
/// eden_annuli = 5
/// eden_mc = 200000
/// kl_samples = 50000
/// jaccard_thresh = 0.1
/// model = "copula"
/// repeats = 5000
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub x: Option<String>,
    pub y: Option<String>,
    pub delimiter: Option<Delimiter>,
    pub scores: Option<String>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub emd_k: Option<f64>,
    pub emd_bins: Option<usize>,
    pub eden_annuli: Option<usize>,
    pub eden_mc: Option<usize>,
    pub kl_samples: Option<usize>,
    pub jaccard_thresh: Option<f64>,
    pub model: Option<ModelKind>,
    pub repeats: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?;
        log::info!("config file {}", path.display());
        Ok(cfg)
    }
}

/// Column selection for reading a point table.
#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    /// Column holding x [default: x]
    #[arg(long)]
    pub x: Option<String>,

    /// Column holding y [default: y]
    #[arg(long)]
    pub y: Option<String>,

    /// Field delimiter [default: tab for .tsv files, comma otherwise]
    #[arg(long, value_enum)]
    pub delimiter: Option<Delimiter>,

    /// Keep only rows where COL equals VALUE
    #[arg(long, value_name = "COL=VALUE")]
    pub filter: Option<ColumnFilter>,
}

impl ColumnArgs {
    pub fn read(&self, path: &Path, file: &FileConfig) -> Result<PointSet> {
        let x = self.x.clone().or_else(|| file.x.clone()).unwrap_or_else(|| "x".into());
        let y = self.y.clone().or_else(|| file.y.clone()).unwrap_or_else(|| "y".into());
        let delimiter = self.delimiter.or(file.delimiter).unwrap_or_else(|| Delimiter::for_path(path));
        let t = read_table(path, &x, &y, delimiter.as_char(), self.filter.as_ref())?;
        log::info!(
            "read {} points from {} (columns {x}, {y}, delimiter {delimiter:?}, {} rows, {} skipped)",
            t.points.len(),
            path.display(),
            t.rows_seen,
            t.rows_skipped,
        );
        if t.rows_skipped > 0 {
            log::warn!("{}: skipped {} rows with missing or non-numeric coordinates", path.display(), t.rows_skipped);
        }
        Ok(t.points)
    }
}

/// Which scores to compute and their parameters.
#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Comma-separated scores (correlation, emd, jaccard, kl, eden) or `all` [default: all]
    #[arg(long)]
    pub scores: Option<ScoreList>,

    /// Seed for every stochastic score [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// EMD score scale k in exp(-k * EMD) [default: 1]
    #[arg(long)]
    pub emd_k: Option<f64>,

    /// EMD histogram bins per axis [default: 32]
    #[arg(long)]
    pub emd_bins: Option<usize>,

    /// Number of Eden annuli [default: 5]
    #[arg(long)]
    pub eden_annuli: Option<usize>,

    /// Eden Monte-Carlo points [default: 200000]
    #[arg(long)]
    pub eden_mc: Option<usize>,

    /// KL Monte-Carlo samples [default: 50000]
    #[arg(long)]
    pub kl_samples: Option<usize>,

    /// Jaccard likelihood-ratio threshold [default: 0.1]
    #[arg(long)]
    pub jaccard_thresh: Option<f64>,
}

impl ScoreArgs {
    pub fn seed(&self, file: &FileConfig) -> u64 {
        self.seed.or(file.seed).unwrap_or(0)
    }

    pub fn score_config(&self, file: &FileConfig) -> Result<ScoreConfig> {
        let scores = match (&self.scores, &file.scores) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => s.parse()?,
            (None, None) => ScoreList(ScoreName::ALL.to_vec()),
        };
        let mut cfg = ScoreConfig::default().with_scores(&scores.0).with_seed(self.seed(file));
        if let Some(k) = self.emd_k.or(file.emd_k) {
            cfg.emd.k = k;
        }
        if let Some(b) = self.emd_bins.or(file.emd_bins) {
            cfg.emd.nx = b;
            cfg.emd.ny = b;
        }
        if let Some(n) = self.eden_annuli.or(file.eden_annuli) {
            cfg.eden.n_annuli = n;
        }
        if let Some(n) = self.eden_mc.or(file.eden_mc) {
            cfg.eden.n_mc = n;
        }
        if let Some(n) = self.kl_samples.or(file.kl_samples) {
            cfg.kl.n_samples = n;
        }
        if let Some(t) = self.jaccard_thresh.or(file.jaccard_thresh) {
            cfg.jaccard.ratio_thresh = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Output format and destination.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format [default: text]
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn format(&self, file: &FileConfig) -> Format {
        self.format.or(file.format).unwrap_or(Format::Text)
    }

    pub fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
                log::info!("wrote {}", path.display());
                Ok(())
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_lists() {
        assert_eq!("all".parse::<ScoreList>().unwrap().0, ScoreName::ALL.to_vec());
        assert_eq!("eden, emd,eden".parse::<ScoreList>().unwrap().0, vec![ScoreName::Eden, ScoreName::Emd]);
        assert!("eden,bogus".parse::<ScoreList>().is_err());
        assert!(",".parse::<ScoreList>().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("seed = 9\neden_mc = 50000\nscores = \"kl\"\nemd_bins = 16").unwrap();
        let args = ScoreArgs {
            scores: None,
            seed: Some(4),
            emd_k: None,
            emd_bins: None,
            eden_annuli: Some(3),
            eden_mc: None,
            kl_samples: None,
            jaccard_thresh: None,
        };
        let cfg = args.score_config(&file).unwrap();
        assert_eq!(cfg.scores, vec![ScoreName::Kl]);
        assert_eq!((cfg.eden.seed, cfg.kl.seed), (4, 4));
        assert_eq!((cfg.eden.n_mc, cfg.eden.n_annuli), (50_000, 3));
        assert_eq!((cfg.emd.nx, cfg.emd.ny), (16, 16));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("eden_annulli = 4").is_err());
    }

    #[test]
    fn delimiter_from_extension() {
        assert_eq!(Delimiter::for_path(Path::new("a.TSV")), Delimiter::Tab);
        assert_eq!(Delimiter::for_path(Path::new("a.csv")), Delimiter::Comma);
        assert_eq!(Delimiter::for_path(Path::new("a")), Delimiter::Comma);
    }
}
