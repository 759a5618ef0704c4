//! Cross-checks the network-simplex EMD against a dense LP solved by minilp.

mod common;

use eden::emd::emd_exact;
use eden::{rng, BoundingRect};

#[test]
fn matches_lp_on_random_grids() {
    let mut r = rng::seeded(11);
    for (nx, ny, rect) in [
        (4, 4, BoundingRect::new(0.0, 1.0, 0.0, 1.0).unwrap()),
        (5, 5, BoundingRect::new(-3.0, 7.0, 2.0, 4.0).unwrap()),
        (4, 3, BoundingRect::new(0.0, 2.0, 0.0, 9.0).unwrap()),
    ] {
        for _ in 0..8 {
            let a = common::random_hist(&mut r, nx, ny, rect);
            let b = common::random_hist(&mut r, nx, ny, rect);
            let plan = emd_exact(&a, &b).unwrap();
            let oracle = common::lp_emd(&a, &b);
            assert!((plan.total_cost - oracle).abs() < 1e-9, "{nx}x{ny}: simplex {} vs lp {oracle}", plan.total_cost);
            assert!(plan.conservation_error(&a, &b) < 1e-9);
        }
    }
}
