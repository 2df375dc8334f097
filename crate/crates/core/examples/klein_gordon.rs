//! Maps a two-signed massive state to position space, checks that the
//! density is nonnegative and conserved in time, compares conjugated
//! generators with their position-space forms and writes a density slice.

use std::sync::Arc;

use freeparticle::catalog::{samples, DEFAULT_SEED};
use freeparticle::grid::{MomentumGrid, Packet, StencilOrder};
use freeparticle::kgmap::{
    calibrate_fft, evolve, integrated_density, kg_density, kg_equivalence_residual, position_expectation,
    write_density_slice, KgMap,
};
use freeparticle::triplets::{make_triplet, ClassTag};
use num_complex::Complex64;

fn main() -> freeparticle::Result<()> {
    let grid = Arc::new(MomentumGrid::new(32, 6.0, 1.0, 2)?);
    let map = KgMap::new(&grid)?;
    let cal = calibrate_fft(&map)?;
    println!(
        "FFT roundtrip {:.1e}  isometry {:.1e}  analytic {:.1e}  -> tolerance {:.1e}",
        cal.roundtrip, cal.isometry, cal.analytic, cal.tolerance
    );

    let psi = Packet::new([1.0, 0.0, 0.0], 1.0).build(&grid, &[Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.6)])?;
    let chi = map.forward(&psi)?;
    for t in [0.0, 1.0, 2.0] {
        let chi_t = evolve(&map, &chi, t);
        let rho = kg_density(&chi_t);
        let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        let x = position_expectation(&map, &chi_t);
        println!(
            "t = {t}: integral rho = {:.15}  min rho = {min:.1e}  <x> = ({:+.4}, {:+.4}, {:+.4})",
            integrated_density(&chi_t),
            x[0],
            x[1],
            x[2]
        );
    }

    let t = make_triplet(ClassTag::MassivePm1, &grid, StencilOrder::Fourth)?;
    for e in kg_equivalence_residual(&t, &samples(&grid, DEFAULT_SEED)?)? {
        println!("  Z {} Z^-1 vs hatted: {:.2e}", e.generator, e.residual.max());
    }

    let path = std::env::temp_dir().join("kg_density_slice.csv");
    let mut file = std::fs::File::create(&path)?;
    write_density_slice(&mut file, &chi, 2, map.position().n() / 2)?;
    println!("density slice written to {}", path.display());
    Ok(())
}
