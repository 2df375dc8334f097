//! Rotation-covariance defect of the block Newton–Wigner candidate for
//! massless two-block particles, before and after the best multiplicative
//! correction, on a ladder of resolutions. A finer ladder for m = 0 shows
//! where the defect reaches its asymptotic order, and the uniqueness probe
//! shows that no correction is admissible for the massive case.

use std::sync::Arc;

use freeparticle::catalog::DEFAULT_SEED;
use freeparticle::grid::{MomentumGrid, StencilOrder};
use freeparticle::position::{localizability_experiment, uniqueness_probe, LocalizabilityReport};

fn show(r: &LocalizabilityReport) {
    println!("m = {}: {:?} (threshold {:.3})", r.m, r.verdict, r.threshold);
    for (raw, opt) in r.raw.iter().zip(&r.optimized) {
        println!(
            "  n = {:>2}  rotation {:.3e} -> {:.3e}   commutativity {:.3e} -> {:.3e}   canonical {:.3e}",
            raw.n, raw.rotation, opt.rotation, raw.commutativity, opt.commutativity, raw.canonical
        );
    }
    let fmt = |o: &[Option<f64>]| {
        o.iter()
            .map(|x| x.map_or("exact".to_string(), |v| format!("{v:.2}")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!(
        "  decay orders raw [{}], optimized [{}]",
        fmt(&r.raw_orders),
        fmt(&r.optimized_orders)
    );
}

fn main() -> freeparticle::Result<()> {
    let order = StencilOrder::Fourth;
    for m in [0, 2, 4] {
        show(&localizability_experiment(m, &[16, 24, 32], 6.0, order, DEFAULT_SEED)?);
    }
    println!("\nextended ladder");
    show(&localizability_experiment(0, &[32, 48, 64], 6.0, order, DEFAULT_SEED)?);

    println!("\nuniqueness probe (massive, mu = 1)");
    for n in [16, 24] {
        let grid = Arc::new(MomentumGrid::new(n, 6.0, 1.0, 1)?);
        let u = uniqueness_probe(&grid, order, DEFAULT_SEED)?;
        println!(
            "  n = {:>2}  objective {:.3e} -> {:.3e}  max |c| {:.2e}  conditioning {:.2e}",
            u.n, u.residual_before, u.residual_after, u.max_coefficient, u.conditioning
        );
    }
    Ok(())
}
