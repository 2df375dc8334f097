//! Poincaré commutation relations on a resolution ladder, with the measured
//! convergence order of each derivative-bearing relation. Includes the
//! massless m = 2 triplet whose rotation and boost generators carry
//! singular axial terms.

use freeparticle::catalog::DEFAULT_SEED;
use freeparticle::grid::StencilOrder;
use freeparticle::triplets::ClassTag;
use freeparticle::verify::{lie_algebra_suite, Ladder, Tolerances};

fn main() -> freeparticle::Result<()> {
    let ns = [16, 24, 32];
    for (tag, mass) in [
        (ClassTag::MassivePlus, 1.0),
        (ClassTag::MasslessPm { m: 2, pair: None }, 0.0),
    ] {
        let ladder = Ladder::new(tag, &ns, 6.0, mass, StencilOrder::Fourth, DEFAULT_SEED)?;
        println!("{tag}  (n = {ns:?})");
        for c in lie_algebra_suite(&ladder, &Tolerances::default())? {
            let res: Vec<String> = c.residuals.iter().map(|r| format!("{:.2e}", r.value)).collect();
            let order = c.order_estimate.map_or("  - ".into(), |o| format!("{o:.2}"));
            println!(
                "  {:<4} {:<30} {}  order {order}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                res.join("  ")
            );
        }
    }
    Ok(())
}
