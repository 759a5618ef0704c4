//! Fixed, seeded data sets shared by the demos and the acceptance suite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataio::{anscombe, make_toy, PointSet, Quartet, ToyKind};
use crate::evalkit::{fit_model, ModelKind};
use crate::rng;
use crate::Result;

/// Size of the trimodal target used by the inflation fixtures.
pub const TRIMODAL_N: usize = 600;
/// Size of the stripes target used by the oversampling fixture.
pub const STRIPES_N: usize = 2000;
pub const OVERSAMPLE_FACTOR: usize = 10;

const TRIMODAL_SEED: u64 = 11;
const LOW_QUALITY_SEED: u64 = 12;
const HIGH_QUALITY_SEED: u64 = 13;
const STRIPES_SEED: u64 = 21;
const MATCHED_SEED: u64 = 22;
const OVERSAMPLED_SEED: u64 = 23;

/// A target and a candidate synthetic set.
#[derive(Debug, Clone)]
pub struct Pair {
    pub name: &'static str,
    pub real: PointSet,
    pub synth: PointSet,
}

/// Anscombe's sets I and II: same correlation, different shapes.
pub fn anscombe_pair() -> Pair {
    Pair { name: "anscombe I vs II", real: anscombe(Quartet::I), synth: anscombe(Quartet::II) }
}

pub fn trimodal_real() -> PointSet {
    make_toy(ToyKind::Trimodal, TRIMODAL_N, TRIMODAL_SEED).expect("valid generator arguments")
}

/// Trimodal target against a moment-matched Gaussian sample.
pub fn low_quality_fit() -> Result<Pair> {
    let real = trimodal_real();
    let synth = fit_model(ModelKind::MomentGaussian, &real)?.sample(real.len(), LOW_QUALITY_SEED)?;
    Ok(Pair { name: "trimodal vs moment gaussian", real, synth })
}

/// Trimodal target against a Gaussian-copula sample.
pub fn high_quality_fit() -> Result<Pair> {
    let real = trimodal_real();
    let synth = fit_model(ModelKind::Copula, &real)?.sample(real.len(), HIGH_QUALITY_SEED)?;
    Ok(Pair { name: "trimodal vs copula", real, synth })
}

/// Stripes target against copula samples of matched size and of
/// `OVERSAMPLE_FACTOR` times the size.
pub fn stripes_oversampling() -> Result<(Pair, Pair)> {
    let real = make_toy(ToyKind::Stripes, STRIPES_N, STRIPES_SEED)?;
    let model = fit_model(ModelKind::Copula, &real)?;
    let matched = model.sample(STRIPES_N, MATCHED_SEED)?.with_label("copula (matched)");
    let over = model.sample(OVERSAMPLE_FACTOR * STRIPES_N, OVERSAMPLED_SEED)?.with_label("copula (10x)");
    Ok((
        Pair { name: "stripes vs matched copula", real: real.clone(), synth: matched },
        Pair { name: "stripes vs oversampled copula", real, synth: over },
    ))
}

/// Bivariate normal with correlation `rho`.
pub fn correlated_normal(n: usize, rho: f64, seed: u64) -> PointSet {
    let mut r = rng::seeded(seed);
    let c = (1.0 - rho * rho).sqrt();
    let pts = (0..n)
        .map(|_| {
            let z0: f64 = r.sample(StandardNormal);
            let e: f64 = r.sample(StandardNormal);
            [z0, rho * z0 + c * e]
        })
        .collect();
    PointSet::new("correlated normal", pts).expect("finite points")
}

/// Five assorted point sets for identity checks.
pub fn identity_sets() -> Vec<PointSet> {
    vec![
        anscombe(Quartet::I),
        make_toy(ToyKind::Trimodal, 300, 31).expect("valid generator arguments"),
        make_toy(ToyKind::Stripes, 300, 32).expect("valid generator arguments"),
        make_toy(ToyKind::Dart, 300, 33).expect("valid generator arguments"),
        correlated_normal(300, 0.6, 34),
    ]
}

/// Pairs with partially overlapping annuli, for checking the Eden estimator.
pub fn crossval_pairs() -> Result<Vec<Pair>> {
    let dart = make_toy(ToyKind::Dart, 400, 41)?;
    let dart_copula = fit_model(ModelKind::Copula, &dart)?.sample(400, 42)?;
    Ok(vec![
        low_quality_fit()?,
        high_quality_fit()?,
        Pair { name: "dart vs copula", real: dart, synth: dart_copula },
    ])
}
