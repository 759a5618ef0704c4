//! Point sets, table ingestion, embedded reference data and toy generators.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// A finite, ordered set of 2D points with a short label.
///
/// Always holds at least 3 points, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    label: String,
    points: Vec<[f64; 2]>,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints { found: points.len() });
        }
        if let Some(index) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { label: label.into(), points })
    }

    pub fn from_xy(label: impl Into<String>, xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch(xs.len(), ys.len()));
        }
        Self::new(label, xs.iter().zip(ys).map(|(&x, &y)| [x, y]).collect())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[0])
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[1])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Image of the set under `x -> A x + b`.
    pub fn map_affine(&self, a: [[f64; 2]; 2], b: [f64; 2]) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| {
                [
                    a[0][0] * p[0] + a[0][1] * p[1] + b[0],
                    a[1][0] * p[0] + a[1][1] * p[1] + b[1],
                ]
            })
            .collect();
        Self::new(self.label.clone(), points)
    }

    /// Concatenation of `self` and `other`, in that order.
    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        PointSet { label: format!("{}+{}", self.label, other.label), points }
    }
}

/// Axis-aligned rectangle with `x_min < x_max` and `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingRect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingRect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::DegenerateRange { axis: 'x' });
        }
        if !(y_min < y_max) {
            return Err(Error::DegenerateRange { axis: 'y' });
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    /// Grows each side by `frac` times the extent of that axis.
    pub fn expanded(&self, frac: f64) -> Self {
        let dx = frac * self.width();
        let dy = frac * self.height();
        Self {
            x_min: self.x_min - dx,
            x_max: self.x_max + dx,
            y_min: self.y_min - dy,
            y_max: self.y_max + dy,
        }
    }
}

impl fmt::Display for BoundingRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x [{}, {}]", self.x_min, self.x_max, self.y_min, self.y_max)
    }
}

/// Smallest rectangle holding every point of every set, grown on each side
/// by `margin_frac` of the axis range.
pub fn bounding_rect(sets: &[&PointSet], margin_frac: f64) -> Result<BoundingRect> {
    if !(margin_frac >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin_frac must be >= 0, got {margin_frac}")));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in sets.iter().flat_map(|s| s.points()) {
        x_min = x_min.min(p[0]);
        x_max = x_max.max(p[0]);
        y_min = y_min.min(p[1]);
        y_max = y_max.max(p[1]);
    }
    Ok(BoundingRect::new(x_min, x_max, y_min, y_max)?.expanded(margin_frac))
}

/// Result of reading a table, with row accounting.
#[derive(Debug, Clone)]
pub struct TableLoad {
    pub points: PointSet,
    /// Data rows read (after the optional filter).
    pub rows_seen: usize,
    /// Rows dropped because a coordinate was missing or unparseable.
    pub rows_skipped: usize,
}

/// Equality filter `column = value` applied before coordinate parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnFilter {
    pub column: String,
    pub value: String,
}

impl std::str::FromStr for ColumnFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((c, v)) if !c.trim().is_empty() => {
                Ok(Self { column: c.trim().to_string(), value: v.trim().to_string() })
            }
            _ => Err(Error::InvalidArgument(format!("filter must look like col=value, got `{s}`"))),
        }
    }
}

/// Reads two numeric columns from a headed CSV (`,`) or TSV (`\t`) file.
pub fn load_table(path: impl AsRef<Path>, x_col: &str, y_col: &str, delimiter: char) -> Result<PointSet> {
    read_table(path, x_col, y_col, delimiter, None).map(|t| t.points)
}

pub fn read_table(
    path: impl AsRef<Path>,
    x_col: &str,
    y_col: &str,
    delimiter: char,
    filter: Option<&ColumnFilter>,
) -> Result<TableLoad> {
    let path = path.as_ref();
    if delimiter != ',' && delimiter != '\t' {
        return Err(Error::BadDelimiter(delimiter));
    }
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let xi = find(x_col)?;
    let yi = find(y_col)?;
    let fi = filter.map(|f| find(&f.column)).transpose()?;

    let mut points = Vec::new();
    let mut rows_seen = 0;
    let mut rows_skipped = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if let (Some(fi), Some(f)) = (fi, filter) {
            if record.get(fi) != Some(f.value.as_str()) {
                continue;
            }
        }
        rows_seen += 1;
        let parse = |i: usize| record.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        match (parse(xi), parse(yi)) {
            (Some(x), Some(y)) => points.push([x, y]),
            _ => rows_skipped += 1,
        }
    }
    let mut label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(f) = filter {
        label = format!("{label}[{}={}]", f.column, f.value);
    }
    Ok(TableLoad { points: PointSet::new(label, points)?, rows_seen, rows_skipped })
}

/// Writes `x`/`y` columns with a header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_table(ps: &PointSet, path: impl AsRef<Path>, delimiter: char) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(out, "x{delimiter}y").map_err(io_err)?;
    for p in ps.points() {
        writeln!(out, "{}{delimiter}{}", p[0], p[1]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// The four sets of Anscombe's quartet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quartet {
    I,
    II,
    III,
    IV,
}

impl std::str::FromStr for Quartet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Quartet::I),
            "II" | "2" => Ok(Quartet::II),
            "III" | "3" => Ok(Quartet::III),
            "IV" | "4" => Ok(Quartet::IV),
            _ => Err(Error::InvalidArgument(format!("unknown Anscombe set `{s}`"))),
        }
    }
}

// Anscombe, F. J. (1973), "Graphs in Statistical Analysis", Table 1.
const ANSCOMBE_X: [f64; 11] = [10.0, 8.0, 13.0, 9.0, 11.0, 14.0, 6.0, 4.0, 12.0, 7.0, 5.0];
const ANSCOMBE_X4: [f64; 11] = [8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 19.0, 8.0, 8.0, 8.0];
const ANSCOMBE_Y1: [f64; 11] = [8.04, 6.95, 7.58, 8.81, 8.33, 9.96, 7.24, 4.26, 10.84, 4.82, 5.68];
const ANSCOMBE_Y2: [f64; 11] = [9.14, 8.14, 8.74, 8.77, 9.26, 8.10, 6.13, 3.10, 9.13, 7.26, 4.74];
const ANSCOMBE_Y3: [f64; 11] = [7.46, 6.77, 12.74, 7.11, 7.81, 8.84, 6.08, 5.39, 8.15, 6.42, 5.73];
const ANSCOMBE_Y4: [f64; 11] = [6.58, 5.76, 7.71, 8.84, 8.47, 7.04, 5.25, 12.50, 5.56, 7.91, 6.89];

pub fn anscombe(which: Quartet) -> PointSet {
    let (xs, ys, label) = match which {
        Quartet::I => (&ANSCOMBE_X, &ANSCOMBE_Y1, "anscombe-I"),
        Quartet::II => (&ANSCOMBE_X, &ANSCOMBE_Y2, "anscombe-II"),
        Quartet::III => (&ANSCOMBE_X, &ANSCOMBE_Y3, "anscombe-III"),
        Quartet::IV => (&ANSCOMBE_X4, &ANSCOMBE_Y4, "anscombe-IV"),
    };
    PointSet::from_xy(label, xs, ys).expect("embedded data is valid")
}

/// Parametric toy datasets.
///
/// * `Trimodal`: equal mixture of isotropic Gaussians (sd 0.7) at
///   (-3, 0), (3, 0) and (0, 4).
/// * `Stripes`: five vertical bands of width 0.4 centred at x = -4, -2, 0,
///   2, 4; y uniform on [-4, 4].
/// * `Dart`: 80% uniform on the annulus 2.5 <= r <= 3.5, 20% isotropic
///   Gaussian (sd 0.5) at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyKind {
    Trimodal,
    Stripes,
    Dart,
}

impl std::str::FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trimodal" => Ok(ToyKind::Trimodal),
            "stripes" => Ok(ToyKind::Stripes),
            "dart" => Ok(ToyKind::Dart),
            _ => Err(Error::InvalidArgument(format!("unknown toy dataset `{s}`"))),
        }
    }
}

impl fmt::Display for ToyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyKind::Trimodal => "trimodal",
            ToyKind::Stripes => "stripes",
            ToyKind::Dart => "dart",
        })
    }
}

pub const TRIMODAL_CENTERS: [[f64; 2]; 3] = [[-3.0, 0.0], [3.0, 0.0], [0.0, 4.0]];
pub const TRIMODAL_SD: f64 = 0.7;
pub const STRIPE_CENTERS: [f64; 5] = [-4.0, -2.0, 0.0, 2.0, 4.0];
pub const STRIPE_WIDTH: f64 = 0.4;
pub const STRIPE_Y_RANGE: (f64, f64) = (-4.0, 4.0);
pub const DART_RING: (f64, f64) = (2.5, 3.5);
pub const DART_RING_WEIGHT: f64 = 0.8;
pub const DART_CENTER_SD: f64 = 0.5;

/// Deterministic in `(kind, n, seed)`.
pub fn make_toy(kind: ToyKind, n: usize, seed: u64) -> Result<PointSet> {
    if n < 3 {
        return Err(Error::TooFewPoints { found: n });
    }
    let mut rng = rng::seeded(seed);
    let points = (0..n)
        .map(|_| match kind {
            ToyKind::Trimodal => {
                let c = TRIMODAL_CENTERS[rng.random_range(0..3)];
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                [c[0] + TRIMODAL_SD * dx, c[1] + TRIMODAL_SD * dy]
            }
            ToyKind::Stripes => {
                let c = STRIPE_CENTERS[rng.random_range(0..5)];
                let x = c + STRIPE_WIDTH * (rng.random::<f64>() - 0.5);
                let y = STRIPE_Y_RANGE.0 + (STRIPE_Y_RANGE.1 - STRIPE_Y_RANGE.0) * rng.random::<f64>();
                [x, y]
            }
            ToyKind::Dart => {
                if rng.random::<f64>() < DART_RING_WEIGHT {
                    let (r0, r1) = DART_RING;
                    // uniform in area
                    let r = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
                    let theta = std::f64::consts::TAU * rng.random::<f64>();
                    [r * theta.cos(), r * theta.sin()]
                } else {
                    let dx: f64 = rng.sample(StandardNormal);
                    let dy: f64 = rng.sample(StandardNormal);
                    [DART_CENTER_SD * dx, DART_CENTER_SD * dy]
                }
            }
        })
        .collect();
    PointSet::new(kind.to_string(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_row_csv() {
        let f = write_tmp("x,y\n0,0\n1,1\n2,2\n", ".csv");
        let ps = load_table(f.path(), "x", "y", ',').unwrap();
        assert_eq!(ps.points(), &[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
    }

    #[test]
    fn two_valid_rows_is_an_error() {
        let f = write_tmp("x,y\n0,0\n1,oops\n2,2\n", ".csv");
        let err = load_table(f.path(), "x", "y", ',').unwrap_err();
        assert!(err.to_string().contains("fewer than 3 valid rows"), "{err}");
    }

    #[test]
    fn missing_column_and_file() {
        let f = write_tmp("a,b\n0,0\n1,1\n2,2\n", ".csv");
        assert!(matches!(load_table(f.path(), "x", "b", ','), Err(Error::MissingColumn { .. })));
        assert!(matches!(load_table("/nonexistent/file.csv", "x", "y", ','), Err(Error::Io { .. })));
        assert!(matches!(load_table(f.path(), "a", "b", ';'), Err(Error::BadDelimiter(';'))));
    }

    #[test]
    fn tsv_with_filter() {
        let f = write_tmp(
            "dataset\tx\ty\ndino\t1\t2\naway\t9\t9\ndino\t3\t4\ndino\t5\t6.5\ndino\tNA\t1\n",
            ".tsv",
        );
        let filter: ColumnFilter = "dataset=dino".parse().unwrap();
        let t = read_table(f.path(), "x", "y", '\t', Some(&filter)).unwrap();
        assert_eq!(t.points.points(), &[[1.0, 2.0], [3.0, 4.0], [5.0, 6.5]]);
        assert_eq!(t.rows_seen, 4);
        assert_eq!(t.rows_skipped, 1);
    }

    #[test]
    fn anscombe_sets() {
        for q in [Quartet::I, Quartet::II, Quartet::III, Quartet::IV] {
            assert_eq!(anscombe(q).len(), 11);
        }
        let iv = anscombe(Quartet::IV);
        assert_eq!(iv.xs().filter(|&x| x == 8.0).count(), 10);
    }

    #[test]
    fn toy_generators_are_seeded() {
        let a = make_toy(ToyKind::Trimodal, 3000, 7).unwrap();
        let b = make_toy(ToyKind::Trimodal, 3000, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_toy(ToyKind::Trimodal, 3000, 8).unwrap());
        assert!(matches!(make_toy(ToyKind::Dart, 2, 0), Err(Error::TooFewPoints { found: 2 })));
    }

    #[test]
    fn stripes_histogram_has_five_peaks() {
        let ps = make_toy(ToyKind::Stripes, 5000, 1).unwrap();
        // 0.2-wide bins over [-5, 5]
        let nb = 50;
        let mut hist = vec![0usize; nb];
        for x in ps.xs() {
            let b = ((x + 5.0) / 10.0 * nb as f64).floor() as usize;
            hist[b.min(nb - 1)] += 1;
        }
        // local maxima over runs of occupied bins
        let mut peaks = Vec::new();
        let mut i = 0;
        while i < nb {
            if hist[i] == 0 {
                i += 1;
                continue;
            }
            let start = i;
            while i < nb && hist[i] > 0 {
                i += 1;
            }
            let center = (start as f64 + i as f64) / 2.0 * 0.2 - 5.0;
            peaks.push(center);
        }
        assert_eq!(peaks.len(), 5, "{hist:?}");
        for (p, c) in peaks.iter().zip(STRIPE_CENTERS) {
            assert!((p - c).abs() < 0.25, "peak {p} vs center {c}");
        }
    }

    #[test]
    fn dart_stays_inside_ring() {
        let ps = make_toy(ToyKind::Dart, 4000, 2).unwrap();
        let inside = ps.points().iter().filter(|p| p[0].hypot(p[1]) <= DART_RING.1).count();
        assert!(inside as f64 >= 0.95 * 4000.0);
    }

    #[test]
    fn bounding_rect_examples() {
        let a = PointSet::new("a", vec![[0.0, 0.0], [1.0, 2.0], [0.5, 1.0]]).unwrap();
        assert_eq!(bounding_rect(&[&a], 0.0).unwrap(), BoundingRect::new(0.0, 1.0, 0.0, 2.0).unwrap());
        let r = bounding_rect(&[&a], 0.1).unwrap();
        for (got, want) in [(r.x_min, -0.1), (r.x_max, 1.1), (r.y_min, -0.2), (r.y_max, 2.2)] {
            assert!((got - want).abs() < 1e-12);
        }
        let p = PointSet::new("p", vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]).unwrap();
        let q = PointSet::new("q", vec![[-1.0, 0.0], [3.0, 1.0], [0.0, 2.0]]).unwrap();
        assert_eq!(bounding_rect(&[&p, &q], 0.0).unwrap(), BoundingRect::new(-1.0, 3.0, 0.0, 2.0).unwrap());
        let flat = PointSet::new("f", vec![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(bounding_rect(&[&flat], 0.0), Err(Error::DegenerateRange { axis: 'x' })));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            PointSet::new("n", vec![[0.0, 0.0], [f64::NAN, 1.0], [2.0, 2.0]]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    proptest! {
        #[test]
        fn table_round_trip(pts in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 3..40)) {
            let ps = PointSet::new("rt", pts.iter().map(|&(x, y)| [x, y]).collect()).unwrap();
            let f = tempfile::Builder::new().suffix(".tsv").tempfile().unwrap();
            write_table(&ps, f.path(), '\t').unwrap();
            let back = load_table(f.path(), "x", "y", '\t').unwrap();
            prop_assert_eq!(back.points(), ps.points());
        }

        #[test]
        fn rect_contains_all_points(
            pts in prop::collection::vec((-100f64..100.0, -100f64..100.0), 3..30),
            margin in 0f64..2.0,
        ) {
            let ps = PointSet::new("r", pts.iter().map(|&(x, y)| [x, y]).collect()).unwrap();
            if let Ok(r) = bounding_rect(&[&ps], margin) {
                prop_assert!(ps.points().iter().all(|&p| r.contains(p)));
            }
        }
    }
}
