use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eden::dataio::{anscombe, make_toy, write_table, Quartet};
use eden::{ScoreName, ScoreReport, ToyKind};

const FAST: [&str; 4] = ["--eden-mc", "20000", "--kl-samples", "2000"];

fn eden() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eden"));
    c.env_remove("EDEN_CONFIG").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    eden().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn toy_table(dir: &Path, name: &str, kind: ToyKind, n: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    write_table(&make_toy(kind, n, seed).unwrap(), &path, ',').unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn score_json(args: &[&str]) -> ScoreReport {
    let mut all = vec!["score", "--format", "json"];
    all.extend_from_slice(args);
    serde_json::from_str(&stdout(&run(&all))).expect("valid report JSON")
}

#[test]
fn identical_tables_score_one_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Trimodal, 200, 1);
    let mut args = vec!["--real", s(&a), "--synth", s(&a)];
    args.extend_from_slice(&FAST);
    let rep = score_json(&args);
    assert_eq!(rep.scores.len(), 5);
    for v in &rep.scores {
        assert_eq!(v.value, 1.0, "{}", v.name);
    }
}

#[test]
fn anscombe_correlation_reads_one() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("one.csv"), dir.path().join("two.csv"));
    write_table(&anscombe(Quartet::I), &a, ',').unwrap();
    write_table(&anscombe(Quartet::II), &b, ',').unwrap();
    let rep = score_json(&["--real", s(&a), "--synth", s(&b), "--scores", "correlation"]);
    assert_eq!(rep.scores.len(), 1);
    assert_eq!(format!("{:.2}", rep.value(ScoreName::Correlation).unwrap()), "1.00");
}

#[test]
fn json_round_trips_and_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Dart, 150, 2);
    let b = toy_table(dir.path(), "b.csv", ToyKind::Dart, 150, 3);
    let mut args = vec!["--real", s(&a), "--synth", s(&b), "--seed", "9"];
    args.extend_from_slice(&FAST);
    let json = {
        let mut all = vec!["score", "--format", "json"];
        all.extend_from_slice(&args);
        stdout(&run(&all))
    };
    let rep: ScoreReport = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string_pretty(&rep).unwrap(), json.trim_end());
    assert_eq!(rep.config.eden.seed, 9);
    assert_eq!(rep.config.kl.seed, 9);

    let mut all = vec!["score", "--format", "csv"];
    all.extend_from_slice(&args);
    let csv = stdout(&run(&all));
    for (line, v) in csv.lines().skip(1).zip(&rep.scores) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], v.name.as_str());
        assert_eq!(cols[1].parse::<f64>().unwrap(), v.value);
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Stripes, 150, 4);
    let out = dir.path().join("rep.csv");
    let args = ["score", "--real", s(&a), "--synth", s(&a), "--scores", "correlation,emd", "--format", "csv"];
    let printed = stdout(&run(&args));
    let mut with_out = args.to_vec();
    with_out.extend_from_slice(&["--out", s(&out)]);
    assert!(stdout(&run(&with_out)).is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), printed);
}

#[test]
fn resample_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Trimodal, 120, 5);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let json = dir.path().join(format!("run{k}.json"));
        let mut args = vec!["resample", "--real", s(&a), "--score", "eden", "--repeats", "10", "--seed", "17", "--out", s(&json)];
        args.extend_from_slice(&FAST);
        stdout(&run(&args));
        outputs.push((std::fs::read(&json).unwrap(), std::fs::read(json.with_extension("csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let summary: eden::ResampleSummary = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(summary.n_repeats, 10);
    assert_eq!(summary.percentile(50.0), summary.median);
    assert_eq!(String::from_utf8(outputs[0].1.clone()).unwrap().lines().count(), 11);
}

#[test]
fn render_writes_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Trimodal, 200, 6);
    let b = toy_table(dir.path(), "b.csv", ToyKind::Dart, 200, 7);
    let svg = dir.path().join("fit.svg");
    let mut args = vec!["render", "--real", s(&a), "--synth", s(&b), "--out", s(&svg)];
    args.extend_from_slice(&FAST);
    stdout(&run(&args));
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    let group = |id: &str| doc.descendants().find(|n| n.attribute("id") == Some(id));
    for id in ["axes", "real", "synth", "legend", "scores"] {
        assert!(group(id).is_some(), "missing group {id}");
    }
    let contours = |id: &str| group(id).unwrap().children().filter(|n| n.attribute("class") == Some("contour")).count();
    assert!(contours("real") >= 5);
    assert!(contours("synth") >= 5);

    let again = dir.path().join("again.svg");
    let mut args = vec!["render", "--real", s(&a), "--synth", s(&b), "--out", s(&again)];
    args.extend_from_slice(&FAST);
    stdout(&run(&args));
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Dart, 100, 8);
    let cfg = dir.path().join("eden.toml");
    std::fs::write(&cfg, "seed = 7\nscores = \"eden,kl\"\neden_mc = 20000\nkl_samples = 1000\nformat = \"json\"\n").unwrap();

    let out = eden().env("EDEN_CONFIG", &cfg).args(["score", "--real", s(&a), "--synth", s(&a)]).output().unwrap();
    let rep: ScoreReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep.config.scores, vec![ScoreName::Eden, ScoreName::Kl]);
    assert_eq!((rep.config.eden.seed, rep.config.eden.n_mc, rep.config.kl.n_samples), (7, 20_000, 1000));

    let out = eden()
        .env("EDEN_CONFIG", &cfg)
        .args(["score", "--real", s(&a), "--synth", s(&a), "--seed", "3", "--scores", "eden"])
        .output()
        .unwrap();
    let rep: ScoreReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep.config.scores, vec![ScoreName::Eden]);
    assert_eq!(rep.config.eden.seed, 3);
}

#[test]
fn toy_output_is_deterministic() {
    let a = stdout(&run(&["toy", "--kind", "stripes", "--n", "50", "--seed", "4"]));
    let b = stdout(&run(&["toy", "--kind", "stripes", "--n", "50", "--seed", "4"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().next(), Some("x,y"));
    assert_eq!(a.lines().count(), 51);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Dart, 50, 9);
    let missing = dir.path().join("missing.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["score", "--real", s(&missing), "--synth", s(&a)],
        vec!["score", "--real", s(&a), "--synth", s(&a), "--x", "nope"],
        vec!["score", "--real", s(&a), "--synth", s(&a), "--scores", "bogus"],
        vec!["score", "--real", s(&a), "--synth", s(&a), "--eden-annuli", "1"],
        vec!["demo", "dino", "--out-dir", dir.path().to_str().unwrap()],
        vec!["toy", "--kind", "spiral"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn degenerate_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let line = dir.path().join("line.csv");
    std::fs::write(&line, "x,y\n1,2\n2,4\n3,6\n4,8\n5,10\n").unwrap();
    let a = toy_table(dir.path(), "a.csv", ToyKind::Dart, 50, 10);
    let out = run(&["score", "--real", s(&line), "--synth", s(&a), "--scores", "jaccard"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn filter_and_tab_delimiter() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("multi.tsv");
    let mut text = String::from("dataset\tx\ty\n");
    for (i, p) in make_toy(ToyKind::Dart, 60, 11).unwrap().points().iter().enumerate() {
        let name = if i % 2 == 0 { "even" } else { "odd" };
        text.push_str(&format!("{name}\t{}\t{}\n", p[0], p[1]));
    }
    std::fs::write(&path, text).unwrap();
    let rep = score_json(&["--real", s(&path), "--synth", s(&path), "--filter", "dataset=even", "--scores", "correlation"]);
    assert_eq!(rep.n_real, 30);
    assert_eq!(rep.value(ScoreName::Correlation), Some(1.0));
}

#[test]
fn anscombe_demo_writes_reports_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["demo", "anscombe", "--out-dir", dir.path().to_str().unwrap(), "--format", "json"];
    args.extend_from_slice(&FAST);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
    let rep: ScoreReport = serde_json::from_value(summary[0]["report"].clone()).unwrap();
    assert_eq!(format!("{:.2}", rep.value(ScoreName::Correlation).unwrap()), "1.00");
    assert!(rep.value(ScoreName::Eden).unwrap() < 0.9);
    for f in ["anscombe_I_vs_II.json", "anscombe_I_vs_II.svg", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
