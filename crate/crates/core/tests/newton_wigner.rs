//! Newton–Wigner position: uniqueness among multiplicative corrections and
//! the velocity identity for a two-signed class.

use std::sync::Arc;

use freeparticle::catalog::{samples, DEFAULT_SEED};
use freeparticle::grid::{MomentumGrid, StencilOrder};
use freeparticle::position::{newton_wigner, uniqueness_probe, velocity_residual};
use freeparticle::triplets::{make_triplet, ClassTag};

#[test]
fn no_multiplicative_correction_improves_newton_wigner() {
    let mut coefficients = Vec::new();
    for n in [16, 24] {
        let grid = Arc::new(MomentumGrid::new(n, 6.0, 1.0, 1).unwrap());
        let u = uniqueness_probe(&grid, StencilOrder::Fourth, DEFAULT_SEED).unwrap();
        // the objective is discretization error only: the optimum barely moves it
        assert!(u.residual_after <= u.residual_before);
        assert!(u.residual_after >= 0.98 * u.residual_before, "{u:?}");
        // every correction direction is constrained
        assert!(u.conditioning > 0.05, "{u:?}");
        coefficients.push(u.max_coefficient);
    }
    // and the optimal correction shrinks with refinement
    assert!(coefficients[1] < 0.25 * coefficients[0], "{coefficients:?}");
}

#[test]
fn velocity_identity_converges_per_block() {
    let mut r = Vec::new();
    for n in [16, 32] {
        let grid = Arc::new(MomentumGrid::new(n, 6.0, 1.0, 2).unwrap());
        let t = make_triplet(ClassTag::MassivePm1, &grid, StencilOrder::Fourth).unwrap();
        let q = newton_wigner(&grid, StencilOrder::Fourth);
        r.push(
            velocity_residual(&t, &q, &samples(&grid, DEFAULT_SEED).unwrap())
                .unwrap()
                .max(),
        );
    }
    assert!(r[1] < r[0] / 8.0, "{r:?}");
}
