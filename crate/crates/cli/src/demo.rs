//! Scripted experiments with fixed seeds. Each writes one JSON report and one
//! SVG per pair into the output directory, plus a summary table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use eden::dataio::{read_table, ColumnFilter};
use eden::evalkit::fit_model;
use eden::fixtures::{self, Pair};
use eden::render::render_fit;
use eden::report::score_pair;
use eden::{Error, ModelKind, ScoreConfig, ScoreReport};

use crate::config::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    /// Anscombe's sets I and II
    Anscombe,
    /// Datasaurus dino against a moment-matched Gaussian (needs --data)
    Dino,
    /// Stripes against matched and 10x oversampled copula samples
    Stripes,
    /// Trimodal target against a poor and a good fit
    Inflation,
}

fn pairs(name: DemoName, data: Option<&Path>, seed: u64) -> Result<Vec<Pair>> {
    Ok(match name {
        DemoName::Anscombe => vec![fixtures::anscombe_pair()],
        DemoName::Dino => {
            let path = data.ok_or_else(|| {
                Error::InvalidArgument("demo dino needs --data pointing at the Datasaurus Dozen TSV".into())
            })?;
            let filter = ColumnFilter { column: "dataset".into(), value: "dino".into() };
            let real = read_table(path, "x", "y", '\t', Some(&filter))?.points.with_label("dino");
            let synth = fit_model(ModelKind::MomentGaussian, &real)?
                .sample(real.len(), seed)?
                .with_label("moment gaussian");
            vec![Pair { name: "dino vs moment gaussian", real, synth }]
        }
        DemoName::Stripes => {
            let (m, o) = fixtures::stripes_oversampling()?;
            vec![m, o]
        }
        DemoName::Inflation => {
            let low = fixtures::low_quality_fit()?;
            let high = fixtures::high_quality_fit()?;
            vec![
                Pair { synth: low.synth.with_label("moment gaussian"), ..low },
                Pair { synth: high.synth.with_label("copula"), ..high },
            ]
        }
    })
}

fn slug(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join("_")
}

/// Runs the demo and returns the summary in `format`. Files go to `out_dir`.
pub fn run(name: DemoName, cfg: &ScoreConfig, out_dir: &Path, data: Option<&Path>, format: Format) -> Result<String> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let seed = cfg.eden.seed;
    let mut rows = Vec::new();
    for pair in pairs(name, data, seed)? {
        log::info!("scoring {} ({} vs {} points)", pair.name, pair.real.len(), pair.synth.len());
        let report = score_pair(&pair.real, &pair.synth, cfg)?;
        let stem = slug(pair.name);
        let json = out_dir.join(format!("{stem}.json"));
        let svg: PathBuf = out_dir.join(format!("{stem}.svg"));
        std::fs::write(&json, report.to_json()).with_context(|| format!("cannot write {}", json.display()))?;
        let contours = render_fit(&pair.real, &pair.synth, Some(&report), &svg)?;
        log::info!(
            "wrote {} and {} ({} + {} contours)",
            json.display(),
            svg.display(),
            contours.real.len(),
            contours.synth.len()
        );
        rows.push((pair.name, report));
    }
    let summary = summarize(&rows, format);
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "txt",
    };
    let path = out_dir.join(format!("summary.{ext}"));
    std::fs::write(&path, &summary).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(summary)
}

fn summarize(rows: &[(&str, ScoreReport)], format: Format) -> String {
    match format {
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|(name, r)| serde_json::json!({ "pair": name, "report": r })).collect();
            serde_json::to_string_pretty(&v).expect("reports serialize")
        }
        Format::Csv => {
            let mut s = String::from("pair,score,value,stderr,seed\n");
            for (name, r) in rows {
                for v in &r.scores {
                    let stderr = v.stderr.map(|e| e.to_string()).unwrap_or_default();
                    let seed = v.seed.map(|e| e.to_string()).unwrap_or_default();
                    writeln!(s, "{name},{},{},{stderr},{seed}", v.name, v.value).unwrap();
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (name, r) in rows {
                writeln!(s, "== {name}").unwrap();
                s.push_str(&r.to_text());
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("stripes vs oversampled copula"), "stripes_vs_oversampled_copula");
        assert_eq!(slug("anscombe I vs II"), "anscombe_I_vs_II");
    }

    #[test]
    fn dino_without_data_is_an_input_error() {
        let err = pairs(DemoName::Dino, None, 0).unwrap_err();
        let e = err.downcast_ref::<Error>().unwrap();
        assert_eq!(e.kind(), eden::ErrorKind::Input);
    }
}
