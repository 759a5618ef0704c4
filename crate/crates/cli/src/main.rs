mod config;
mod demo;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use eden::dataio::{make_toy, write_table};
use eden::evalkit::{fit_model, resample_scores};
use eden::render::render_fit;
use eden::report::score_pair;
use eden::{ErrorKind, ModelKind, ResampleSummary, ScoreName, ToyKind, VERSION};
use serde_json::json;

use config::{ColumnArgs, Delimiter, FileConfig, Format, OutputArgs, ScoreArgs};
use demo::DemoName;

/// Quality scores for comparing two-dimensional point distributions.
#[derive(Debug, Parser)]
#[command(name = "eden", version, propagate_version = true)]
struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true, env = "EDEN_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a synthetic table against a real one
    Score(ScoreCmd),
    /// Run a scripted experiment and write reports and figures
    Demo(DemoCmd),
    /// Score repeated samples from a model fitted to the real table
    Resample(ResampleCmd),
    /// Draw both KDE contour families as SVG
    Render(RenderCmd),
    /// Write a toy dataset as a table
    Toy(ToyCmd),
}

#[derive(Debug, Args)]
struct ScoreCmd {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    scores: ScoreArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct DemoCmd {
    #[arg(value_enum)]
    name: DemoName,
    /// Directory for reports and figures
    #[arg(long, default_value = "demo-out")]
    out_dir: PathBuf,
    /// Datasaurus Dozen TSV, for the dino demo
    #[arg(long)]
    data: Option<PathBuf>,
    /// Summary format [default: text]
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    scores: ScoreArgs,
}

#[derive(Debug, Args)]
struct ResampleCmd {
    #[arg(long)]
    real: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    /// Generator fitted to the real table: copula or moment_gaussian [default: copula]
    #[arg(long)]
    model: Option<ModelKind>,
    /// Score to collect [default: eden]
    #[arg(long)]
    score: Option<ScoreName>,
    /// Number of samples [default: 5000]
    #[arg(long)]
    repeats: Option<usize>,
    #[command(flatten)]
    scores: ScoreArgs,
    /// Summary format on standard output [default: text]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON summary path; per-repeat values go to the same path with a .csv extension
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RenderCmd {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    scores: ScoreArgs,
    /// Leave the score table out of the figure
    #[arg(long)]
    no_scores: bool,
    /// SVG path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ToyCmd {
    /// trimodal, stripes or dart
    #[arg(long)]
    kind: ToyKind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "comma")]
    delimiter: Delimiter,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn log_run(command: &str, params: serde_json::Value) {
    log::info!("eden {VERSION} {command}");
    log::info!("parameters {params}");
}

fn score(cmd: &ScoreCmd, file: &FileConfig) -> Result<()> {
    let cfg = cmd.scores.score_config(file)?;
    let format = cmd.output.format(file);
    log_run("score", json!({ "real": cmd.real, "synth": cmd.synth, "format": format, "out": cmd.output.out, "config": cfg }));
    let real = cmd.columns.read(&cmd.real, file)?;
    let synth = cmd.columns.read(&cmd.synth, file)?;
    let report = score_pair(&real, &synth, &cfg)?;
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    };
    cmd.output.emit(&text)
}

fn demo(cmd: &DemoCmd, file: &FileConfig) -> Result<()> {
    let cfg = cmd.scores.score_config(file)?;
    let format = cmd.format.or(file.format).unwrap_or(Format::Text);
    log_run("demo", json!({ "name": format!("{:?}", cmd.name), "out_dir": cmd.out_dir, "data": cmd.data, "config": cfg }));
    let summary = demo::run(cmd.name, &cfg, &cmd.out_dir, cmd.data.as_deref(), format)?;
    print!("{summary}");
    Ok(())
}

fn resample_text(s: &ResampleSummary) -> String {
    let mut out = String::new();
    writeln!(out, "score {}, model {}, {} repeats, base seed {}", s.score, s.model, s.n_repeats, s.base_seed).unwrap();
    for (k, v) in [("mean", s.mean), ("sd", s.sd), ("median", s.median), ("iqr", s.iqr), ("p5", s.p5), ("p95", s.p95)] {
        writeln!(out, "{k:<8}{v}").unwrap();
    }
    out
}

fn resample(cmd: &ResampleCmd, file: &FileConfig) -> Result<()> {
    let cfg = cmd.scores.score_config(file)?;
    let model_kind = cmd.model.or(file.model).unwrap_or(ModelKind::Copula);
    let score = cmd.score.unwrap_or(ScoreName::Eden);
    let repeats = cmd.repeats.or(file.repeats).unwrap_or(5000);
    let seed = cmd.scores.seed(file);
    let csv = cmd.out.with_extension("csv");
    log_run(
        "resample",
        json!({ "real": cmd.real, "model": model_kind, "score": score, "repeats": repeats, "base_seed": seed, "out": cmd.out, "csv": csv, "config": cfg }),
    );
    let real = cmd.columns.read(&cmd.real, file)?;
    let model = fit_model(model_kind, &real)?;
    let summary = resample_scores(&real, &model, score, &cfg, repeats, seed)?;
    summary.write_files(&cmd.out, &csv)?;
    log::info!("wrote {} and {}", cmd.out.display(), csv.display());
    match cmd.format.or(file.format).unwrap_or(Format::Text) {
        Format::Json => println!("{}", summary.to_json()),
        Format::Csv => print!("{}", summary.to_csv()),
        Format::Text => print!("{}", resample_text(&summary)),
    }
    Ok(())
}

fn render(cmd: &RenderCmd, file: &FileConfig) -> Result<()> {
    let cfg = cmd.scores.score_config(file)?;
    log_run("render", json!({ "real": cmd.real, "synth": cmd.synth, "out": cmd.out, "scores": !cmd.no_scores, "config": cfg }));
    let real = cmd.columns.read(&cmd.real, file)?;
    let synth = cmd.columns.read(&cmd.synth, file)?;
    let report = if cmd.no_scores { None } else { Some(score_pair(&real, &synth, &cfg)?) };
    let contours = render_fit(&real, &synth, report.as_ref(), &cmd.out)?;
    log::info!("wrote {} ({} + {} contours)", cmd.out.display(), contours.real.len(), contours.synth.len());
    Ok(())
}

fn toy(cmd: &ToyCmd) -> Result<()> {
    log_run("toy", json!({ "kind": cmd.kind, "n": cmd.n, "seed": cmd.seed, "delimiter": cmd.delimiter, "out": cmd.out }));
    let ps = make_toy(cmd.kind, cmd.n, cmd.seed)?;
    match &cmd.out {
        Some(path) => {
            write_table(&ps, path, cmd.delimiter.as_char())?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let d = cmd.delimiter.as_char();
            let mut s = format!("x{d}y\n");
            for p in ps.points() {
                writeln!(s, "{}{d}{}", p[0], p[1]).unwrap();
            }
            print!("{s}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Score(c) => score(c, &file),
        Command::Demo(c) => demo(c, &file),
        Command::Resample(c) => resample(c, &file),
        Command::Render(c) => render(c, &file),
        Command::Toy(c) => toy(c),
    }
}

/// 2 for input errors, 3 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<eden::Error>()) {
        Some(e) if e.kind() == ErrorKind::Numerical => 3,
        _ => 2,
    }
}

/// The error chain, leaving out causes already quoted by their parent.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain().map(|c| c.to_string()) {
        if !out.contains(&cause) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&cause);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", message(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
