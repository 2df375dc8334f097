//! Newton–Wigner position for a massive particle: commutativity, canonical
//! and rotation covariance, symmetry under the invariant measure and the
//! velocity identity, followed by the kinetic-energy moments of a
//! two-signed state with equal block weights.

use std::sync::Arc;

use freeparticle::catalog::DEFAULT_SEED;
use freeparticle::grid::{MomentumGrid, Packet, StencilOrder};
use freeparticle::position::kinetic_energy_expectation;
use freeparticle::triplets::{make_triplet, ClassTag};
use freeparticle::verify::{covariance_suite, moment_p0, Ladder, Tolerances};
use num_complex::Complex64;

fn main() -> freeparticle::Result<()> {
    let ladder = Ladder::new(
        ClassTag::MassivePlus,
        &[16, 24, 32],
        6.0,
        1.0,
        StencilOrder::Fourth,
        DEFAULT_SEED,
    )?;
    for c in covariance_suite(&ladder, &Tolerances::default())? {
        let res: Vec<String> = c.residuals.iter().map(|r| format!("{:.2e}", r.value)).collect();
        let order = c.order_estimate.map_or("-".into(), |o| format!("{o:.2}"));
        println!(
            "{:<4} {:<34} {}  order {order}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            res.join("  ")
        );
    }

    let grid = Arc::new(MomentumGrid::new(32, 6.0, 1.0, 2)?);
    let t = make_triplet(ClassTag::MassivePm1, &grid, StencilOrder::Fourth)?;
    let w = Complex64::new(1.0, 0.0);
    let psi = Packet::new([0.8, -0.3, 0.2], 1.0).build(&grid, &[w, w])?;
    let p0 = psi.inner(&t.p0.apply(&psi)?)?.re;
    println!("\nequal-block state on {}:", t.tag());
    println!("  <P0>        = {p0:+.3e}");
    println!("  <E_kin>     = {:.12}", kinetic_energy_expectation(&psi));
    println!("  <p0> moment = {:.12}", moment_p0(&psi));
    Ok(())
}
