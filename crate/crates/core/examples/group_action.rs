//! Exponentiated generators against the geometric group action: translations
//! are phases, rotations and boosts move the packet on the mass shell.

use freeparticle::catalog::DEFAULT_SEED;
use freeparticle::grid::StencilOrder;
use freeparticle::triplets::ClassTag;
use freeparticle::verify::{group_action_suite, Ladder, Tolerances};

fn main() -> freeparticle::Result<()> {
    for (tag, mass) in [
        (ClassTag::MassivePlus, 1.0),
        (ClassTag::MasslessPm { m: 0, pair: None }, 0.0),
    ] {
        let ladder = Ladder::new(tag, &[16, 32], 6.0, mass, StencilOrder::Fourth, DEFAULT_SEED)?;
        println!("{tag}");
        for c in group_action_suite(&ladder, &Tolerances::default())? {
            let res: Vec<String> = c.residuals.iter().map(|r| format!("{:.2e}", r.value)).collect();
            let order = c.order_estimate.map_or("-".into(), |o| format!("{o:.2}"));
            println!(
                "  {:<4} {:<40} {}  order {order}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                res.join("  ")
            );
        }
    }
    Ok(())
}
