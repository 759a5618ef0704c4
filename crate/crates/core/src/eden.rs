//! The Eden equidensity score.
//!
//! Each KDE is cut into `n_annuli` nested regions by density thresholds at
//! evenly spaced iso-proportions (0.05, 0.24, 0.43, 0.62, 0.81 for five
//! annuli). Annulus `i` is `{t_i <= f < t_{i+1}}` with the top interval
//! unbounded, so annulus 0 is the outermost and the last one is usually a
//! disk. Points below `t_0` belong to no annulus.
//!
//! The score of annulus `i` is the intersection-over-union of the areas of
//! annulus `i` of the two KDEs, estimated by sprinkling uniform points over
//! the shared bounding rectangle. The Eden score is the mean over annuli.
//!
//! Rule of thumb: keep at least 30 data points per annulus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{bounding_rect, BoundingRect, PointSet};
use crate::kde::{fit_kde, grid_evaluate, iso_thresholds, DensityGrid, DensityModel, LevelThresholds};
use crate::rng;
use crate::scores::{ScoreName, ScoreValue};
use crate::{Error, Result};

/// Resolution of the grid the density thresholds are computed on.
pub const THRESHOLD_GRID: usize = 256;

/// Lowest iso-proportion; the lowest 5% of the mass is ignored.
pub const LOWEST_LEVEL: f64 = 0.05;

/// `n_annuli` proportions evenly spaced from 0.05 towards 1, excluding 1.
pub fn iso_levels(n_annuli: usize) -> Vec<f64> {
    let step = (1.0 - LOWEST_LEVEL) / n_annuli as f64;
    (0..n_annuli).map(|i| LOWEST_LEVEL + i as f64 * step).collect()
}

/// A density model cut into annuli.
#[derive(Debug, Clone)]
pub struct AnnulusSet {
    model: DensityModel,
    thresholds: LevelThresholds,
}

impl AnnulusSet {
    pub fn new(model: DensityModel, thresholds: LevelThresholds) -> Result<Self> {
        let t = &thresholds.density_thresholds;
        if t.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 annuli, got {}", t.len())));
        }
        if let Some(k) = t.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::DegenerateLevels { index: k + 1 });
        }
        Ok(Self { model, thresholds })
    }

    /// Thresholds from the model's density on a 256x256 grid over `rect`.
    pub fn from_model(model: DensityModel, rect: BoundingRect, n_annuli: usize) -> Result<Self> {
        let grid = grid_evaluate(&model, rect, THRESHOLD_GRID, THRESHOLD_GRID)?;
        Self::from_grid(model, &grid, n_annuli)
    }

    /// Thresholds taken from a precomputed grid of `model`.
    pub fn from_grid(model: DensityModel, grid: &DensityGrid, n_annuli: usize) -> Result<Self> {
        let thresholds = iso_thresholds(grid, &iso_levels(n_annuli))?;
        Self::new(model, thresholds)
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn thresholds(&self) -> &LevelThresholds {
        &self.thresholds
    }

    pub fn n_annuli(&self) -> usize {
        self.thresholds.density_thresholds.len()
    }

    /// Annulus containing density `d`, or `None` below the lowest threshold.
    pub fn annulus_of_density(&self, d: f64) -> Option<usize> {
        let k = self.thresholds.density_thresholds.partition_point(|&t| t <= d);
        k.checked_sub(1)
    }

    pub fn annulus_of(&self, pt: [f64; 2]) -> Option<usize> {
        self.annulus_of_density(self.model.density_at(pt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdenConfig {
    pub n_annuli: usize,
    /// Number of uniform points sprinkled over the rectangle.
    pub n_mc: usize,
    /// Margin added to the joint bounding rectangle, as a fraction of its
    /// width and height.
    pub margin_frac: f64,
    pub seed: u64,
}

impl Default for EdenConfig {
    fn default() -> Self {
        Self { n_annuli: 5, n_mc: 200_000, margin_frac: 0.1, seed: 0 }
    }
}

impl EdenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_annuli < 2 {
            return Err(Error::InvalidArgument(format!("n_annuli must be at least 2, got {}", self.n_annuli)));
        }
        if self.n_mc < 10_000 {
            return Err(Error::InvalidArgument(format!("n_mc must be at least 10000, got {}", self.n_mc)));
        }
        if !(self.margin_frac >= 0.0) || !self.margin_frac.is_finite() {
            return Err(Error::InvalidArgument(format!("margin must be finite and nonnegative, got {}", self.margin_frac)));
        }
        Ok(())
    }
}

/// Sprinkle counts and IoU for one annulus. Areas are counts times the
/// rectangle area over `n_mc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusStat {
    pub index: usize,
    pub count_p: usize,
    pub count_q: usize,
    pub count_both: usize,
    pub count_either: usize,
    pub intersection_area: f64,
    pub union_area: f64,
    pub s: f64,
    /// Binomial standard error of `s`.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub per_annulus: Vec<AnnulusStat>,
    pub eden: f64,
    /// Standard error of `eden`, treating the annuli as independent.
    pub stderr: f64,
    pub rect: BoundingRect,
    pub n_mc: usize,
    pub seed: u64,
    pub thresholds_p: Vec<f64>,
    pub thresholds_q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl AnnulusReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.per_annulus.iter().map(|a| a.s).collect()
    }

    pub fn to_score(&self) -> ScoreValue {
        ScoreValue {
            name: ScoreName::Eden,
            value: self.eden,
            stderr: Some(self.stderr),
            seed: Some(self.seed),
            flags: self.flags.clone(),
        }
    }
}

/// Mean of per-annulus ratios.
pub fn eden_from_ratios(ratios: &[f64]) -> f64 {
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Uniform point `k` of the sprinkle: the two `u64` draws at offset `2k` of
/// the seeded stream, mapped to `rect`.
pub fn sprinkle_point<R: Rng>(rng: &mut R, rect: &BoundingRect) -> [f64; 2] {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    [rect.x_min + u * rect.width(), rect.y_min + v * rect.height()]
}

pub fn eden_score(p: &PointSet, q: &PointSet, cfg: &EdenConfig) -> Result<AnnulusReport> {
    cfg.validate()?;
    let rect = bounding_rect(&[p, q], cfg.margin_frac)?;
    let ap = AnnulusSet::from_model(fit_kde(p)?, rect, cfg.n_annuli)?;
    let aq = AnnulusSet::from_model(fit_kde(q)?, rect, cfg.n_annuli)?;
    eden_with(&ap, &aq, rect, cfg.n_mc, cfg.seed)
}

/// Sprinkles `n_mc` points over `rect` and compares the annuli of `ap` and
/// `aq` point by point.
pub fn eden_with(ap: &AnnulusSet, aq: &AnnulusSet, rect: BoundingRect, n_mc: usize, seed: u64) -> Result<AnnulusReport> {
    let n = ap.n_annuli();
    if aq.n_annuli() != n {
        return Err(Error::LengthMismatch(n, aq.n_annuli()));
    }
    let mut count_p = vec![0usize; n];
    let mut count_q = vec![0usize; n];
    let mut count_both = vec![0usize; n];
    let mut r = rng::seeded(seed);
    for _ in 0..n_mc {
        let pt = sprinkle_point(&mut r, &rect);
        let ip = ap.annulus_of(pt);
        let iq = aq.annulus_of(pt);
        if let Some(i) = ip {
            count_p[i] += 1;
        }
        if let Some(i) = iq {
            count_q[i] += 1;
        }
        if let (Some(i), Some(j)) = (ip, iq) {
            if i == j {
                count_both[i] += 1;
            }
        }
    }

    let cell = rect.area() / n_mc as f64;
    let mut flags = Vec::new();
    let per_annulus: Vec<AnnulusStat> = (0..n)
        .map(|i| {
            let either = count_p[i] + count_q[i] - count_both[i];
            let (s, stderr) = if either == 0 {
                flags.push(format!("annulus {i} is empty in both models"));
                (0.0, 0.0)
            } else {
                let s = count_both[i] as f64 / either as f64;
                (s, (s * (1.0 - s) / either as f64).sqrt())
            };
            AnnulusStat {
                index: i,
                count_p: count_p[i],
                count_q: count_q[i],
                count_both: count_both[i],
                count_either: either,
                intersection_area: count_both[i] as f64 * cell,
                union_area: either as f64 * cell,
                s,
                stderr,
            }
        })
        .collect();
    if per_annulus.iter().all(|a| a.count_either == 0) {
        return Err(Error::EmptyAnnuli);
    }
    let eden = eden_from_ratios(&per_annulus.iter().map(|a| a.s).collect::<Vec<_>>());
    let stderr = per_annulus.iter().map(|a| a.stderr * a.stderr).sum::<f64>().sqrt() / n as f64;
    Ok(AnnulusReport {
        per_annulus,
        eden,
        stderr,
        rect,
        n_mc,
        seed,
        thresholds_p: ap.thresholds.density_thresholds.clone(),
        thresholds_q: aq.thresholds.density_thresholds.clone(),
        flags,
    })
}

fn raster_annuli(aset: &AnnulusSet, rect: BoundingRect, n: usize) -> Result<Vec<Option<usize>>> {
    if n < 256 {
        return Err(Error::InvalidArgument(format!("raster resolution must be at least 256, got {n}")));
    }
    let grid = grid_evaluate(&aset.model, rect, n, n)?;
    Ok(grid.values.iter().map(|&d| aset.annulus_of_density(d)).collect())
}

/// Area of each annulus from an `n` by `n` raster of cell centres.
pub fn annulus_areas_raster(aset: &AnnulusSet, rect: BoundingRect, n: usize) -> Result<Vec<f64>> {
    let labels = raster_annuli(aset, rect, n)?;
    let cell = rect.area() / (n * n) as f64;
    let mut areas = vec![0.0; aset.n_annuli()];
    for i in labels.into_iter().flatten() {
        areas[i] += cell;
    }
    Ok(areas)
}

/// Per-annulus IoU from a shared `n` by `n` raster; a deterministic
/// counterpart of the sprinkle. Annuli empty in both models score 0.
pub fn annulus_iou_raster(ap: &AnnulusSet, aq: &AnnulusSet, rect: BoundingRect, n: usize) -> Result<Vec<f64>> {
    if aq.n_annuli() != ap.n_annuli() {
        return Err(Error::LengthMismatch(ap.n_annuli(), aq.n_annuli()));
    }
    let lp = raster_annuli(ap, rect, n)?;
    let lq = raster_annuli(aq, rect, n)?;
    let k = ap.n_annuli();
    let (mut both, mut either) = (vec![0usize; k], vec![0usize; k]);
    for (a, b) in lp.into_iter().zip(lq) {
        if a == b {
            if let Some(i) = a {
                both[i] += 1;
                either[i] += 1;
            }
        } else {
            for i in [a, b].into_iter().flatten() {
                either[i] += 1;
            }
        }
    }
    Ok(both.iter().zip(&either).map(|(&b, &e)| if e == 0 { 0.0 } else { b as f64 / e as f64 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{make_toy, ToyKind};
    use crate::kde::iso_thresholds;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal_points(n: usize, seed: u64, shift: [f64; 2]) -> PointSet {
        let mut r = rng::seeded(seed);
        let pts = (0..n)
            .map(|_| [shift[0] + r.sample::<f64, _>(StandardNormal), shift[1] + r.sample::<f64, _>(StandardNormal)])
            .collect();
        PointSet::new("normal", pts).unwrap()
    }

    fn cfg(n_mc: usize) -> EdenConfig {
        EdenConfig { n_mc, seed: 7, ..Default::default() }
    }

    fn annuli_for(ps: &PointSet, rect: BoundingRect) -> AnnulusSet {
        AnnulusSet::from_model(fit_kde(ps).unwrap(), rect, 5).unwrap()
    }

    #[test]
    fn five_levels() {
        let levels = iso_levels(5);
        for (got, want) in levels.iter().zip([0.05, 0.24, 0.43, 0.62, 0.81]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_means() {
        assert_eq!(format!("{:.2}", eden_from_ratios(&[0.77, 0.81, 0.78])), "0.79");
        assert_eq!(format!("{:.2}", eden_from_ratios(&[0.00, 0.005, 0.09])), "0.03");
    }

    #[test]
    fn annulus_lookup() {
        let ps = normal_points(300, 1, [0.0, 0.0]);
        let rect = bounding_rect(&[&ps], 0.1).unwrap();
        let a = annuli_for(&ps, rect);
        let t = a.thresholds().density_thresholds.clone();
        assert_eq!(a.annulus_of_density(t[2]), Some(2));
        assert_eq!(a.annulus_of_density(t[0] * 0.999), None);
        assert_eq!(a.annulus_of_density(f64::INFINITY), Some(4));
        assert_eq!(a.annulus_of([1e3, 1e3]), None);
        let peak = ps
            .points()
            .iter()
            .copied()
            .max_by(|x, y| a.model().density_at(*x).total_cmp(&a.model().density_at(*y)))
            .unwrap();
        assert_eq!(a.annulus_of(peak), Some(4));
    }

    #[test]
    fn rejects_tied_thresholds() {
        let ps = normal_points(50, 2, [0.0, 0.0]);
        let t = LevelThresholds { iso_proportions: vec![0.1, 0.2, 0.3], density_thresholds: vec![0.01, 0.02, 0.02] };
        assert!(matches!(AnnulusSet::new(fit_kde(&ps).unwrap(), t), Err(Error::DegenerateLevels { index: 2 })));
    }

    #[test]
    fn config_validation() {
        assert!(EdenConfig { n_annuli: 1, ..Default::default() }.validate().is_err());
        assert!(EdenConfig { n_mc: 9_999, ..Default::default() }.validate().is_err());
        assert!(EdenConfig::default().validate().is_ok());
    }

    #[test]
    fn identity_is_exactly_one() {
        let p = make_toy(ToyKind::Trimodal, 300, 3).unwrap();
        let rep = eden_score(&p, &p, &cfg(20_000)).unwrap();
        assert_eq!(rep.eden, 1.0);
        assert!(rep.per_annulus.iter().all(|a| a.s == 1.0 && a.count_p == a.count_q));
        assert!(rep.flags.is_empty());
    }

    #[test]
    fn symmetric_and_deterministic() {
        let p = make_toy(ToyKind::Trimodal, 300, 4).unwrap();
        let q = make_toy(ToyKind::Dart, 300, 5).unwrap();
        let pq = eden_score(&p, &q, &cfg(20_000)).unwrap();
        let qp = eden_score(&q, &p, &cfg(20_000)).unwrap();
        assert_eq!(pq.eden.to_bits(), qp.eden.to_bits());
        assert_eq!(pq.ratios(), qp.ratios());
        assert_eq!(pq, eden_score(&p, &q, &cfg(20_000)).unwrap());
        assert!(pq.per_annulus.iter().all(|a| (0.0..=1.0).contains(&a.s) && a.intersection_area <= a.union_area));
    }

    #[test]
    fn disjoint_blobs_score_near_zero() {
        let p = normal_points(300, 6, [0.0, 0.0]);
        let q = normal_points(300, 7, [40.0, 0.0]);
        assert!(eden_score(&p, &q, &cfg(50_000)).unwrap().eden < 0.01);
    }

    #[test]
    fn raster_areas_partition_the_support() {
        let ps = normal_points(400, 8, [0.0, 0.0]);
        let rect = bounding_rect(&[&ps], 0.1).unwrap();
        let a = annuli_for(&ps, rect);
        let n = 256;
        let areas = annulus_areas_raster(&a, rect, n).unwrap();
        let grid = grid_evaluate(a.model(), rect, n, n).unwrap();
        let t0 = a.thresholds().density_thresholds[0];
        let above = grid.values.iter().filter(|&&d| d >= t0).count() as f64 * grid.cell_area;
        assert!((areas.iter().sum::<f64>() - above).abs() <= grid.cell_area);

        let fine = annulus_areas_raster(&a, rect, 2 * n).unwrap();
        for (c, f) in areas.iter().zip(&fine) {
            assert!((c - f).abs() / f < 0.005, "coarse {c} vs fine {f}");
        }
        assert!(annulus_areas_raster(&a, rect, 255).is_err());
    }

    #[test]
    fn raster_areas_match_sprinkle() {
        let ps = normal_points(400, 9, [0.0, 0.0]);
        let rect = bounding_rect(&[&ps], 0.1).unwrap();
        let a = annuli_for(&ps, rect);
        let raster = annulus_areas_raster(&a, rect, 512).unwrap();
        let rep = eden_with(&a, &a, rect, 1_000_000, 3).unwrap();
        for (st, r) in rep.per_annulus.iter().zip(&raster) {
            let mc = st.union_area;
            assert!((mc - r).abs() / r < 0.01, "annulus {}: mc {mc} raster {r}", st.index);
        }
    }

    #[test]
    fn sprinkle_consistent_with_raster_iou() {
        let mut hits = 0;
        let mut total = 0;
        for (kp, kq, seed) in [(ToyKind::Trimodal, ToyKind::Dart, 10), (ToyKind::Stripes, ToyKind::Trimodal, 11)] {
            let p = make_toy(kp, 300, seed).unwrap();
            let q = make_toy(kq, 300, seed + 100).unwrap();
            let rect = bounding_rect(&[&p, &q], 0.1).unwrap();
            let (ap, aq) = (annuli_for(&p, rect), annuli_for(&q, rect));
            let oracle = annulus_iou_raster(&ap, &aq, rect, 512).unwrap();
            let rep = eden_with(&ap, &aq, rect, 100_000, seed).unwrap();
            for (st, o) in rep.per_annulus.iter().zip(&oracle) {
                total += 1;
                if (st.s - o).abs() <= 3.0 * st.stderr.max(1e-3) {
                    hits += 1;
                }
            }
        }
        assert!(hits as f64 >= 0.9 * total as f64, "{hits}/{total} annuli within 3 stderr");
    }

    #[test]
    fn thresholds_shared_by_iso_levels() {
        let ps = normal_points(200, 12, [0.0, 0.0]);
        let rect = bounding_rect(&[&ps], 0.1).unwrap();
        let a = annuli_for(&ps, rect);
        let grid = grid_evaluate(a.model(), rect, THRESHOLD_GRID, THRESHOLD_GRID).unwrap();
        assert_eq!(a.thresholds(), &iso_thresholds(&grid, &iso_levels(5)).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn joint_affine_invariance(
            seed in 0u64..1000,
            a00 in 0.3f64..3.0, a01 in -1.0f64..1.0, a10 in -1.0f64..1.0, a11 in 0.3f64..3.0,
            b0 in -50.0f64..50.0, b1 in -50.0f64..50.0,
        ) {
            let a = [[a00, a01], [a10, a11]];
            prop_assume!((a00 * a11 - a01 * a10).abs() > 0.2);
            let p = make_toy(ToyKind::Trimodal, 300, seed).unwrap();
            let q = normal_points(300, seed + 1, [0.0, 1.0]);
            let base = eden_score(&p, &q, &cfg(100_000)).unwrap().eden;
            let moved = eden_score(&p.map_affine(a, [b0, b1]).unwrap(), &q.map_affine(a, [b0, b1]).unwrap(), &cfg(100_000))
                .unwrap()
                .eden;
            prop_assert!((base - moved).abs() <= 0.02, "{base} vs {moved}");
        }
    }
}
