use eden::emd::Histogram2D;
use eden::BoundingRect;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;

pub fn random_hist(r: &mut impl Rng, nx: usize, ny: usize, rect: BoundingRect) -> Histogram2D {
    let mut masses: Vec<f64> = (0..nx * ny).map(|_| if r.random::<f64>() < 0.3 { 0.0 } else { r.random::<f64>() }).collect();
    if masses.iter().all(|&m| m == 0.0) {
        masses[0] = 1.0;
    }
    Histogram2D::from_masses(rect, nx, ny, &masses).unwrap()
}

/// Full transportation LP over every bin pair, with no retained-mass shortcut.
pub fn lp_emd(a: &Histogram2D, b: &Histogram2D) -> f64 {
    let k = a.weights().len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..k * k).map(|v| lp.add_var(a.ground_distance(v / k, v % k), (0.0, f64::INFINITY))).collect();
    for s in 0..k {
        let row: Vec<_> = (0..k).map(|t| (vars[s * k + t], 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, a.weights()[s]);
    }
    // one demand row is implied by the others
    for t in 0..k - 1 {
        let col: Vec<_> = (0..k).map(|s| (vars[s * k + t], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, b.weights()[t]);
    }
    lp.solve().unwrap().objective()
}
