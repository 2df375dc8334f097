//! Space inversion and time reversal: norm preservation, linearity and the
//! sign each one puts on the generators, for every class that has them.

use freeparticle::catalog::DEFAULT_SEED;
use freeparticle::grid::StencilOrder;
use freeparticle::triplets::ClassTag;
use freeparticle::verify::{conjugation_table, inversion_suite, Ladder, Tolerances};

fn main() -> freeparticle::Result<()> {
    for tag in ClassTag::with_inversions() {
        let mass = if tag.is_massive() { 1.0 } else { 0.0 };
        let ladder = Ladder::new(tag, &[16], 6.0, mass, StencilOrder::Fourth, DEFAULT_SEED)?;
        println!("{tag}");
        for c in inversion_suite(&ladder, &Tolerances::default())? {
            if c.name.starts_with("conjugation") {
                continue;
            }
            let last = c.residuals.last().map_or(String::new(), |r| format!("{:.1e}", r.value));
            println!("  {:<4} {:<52} {last}", if c.pass { "ok" } else { "FAIL" }, c.name);
        }
        let (t, s) = &ladder.rungs[0];
        let row: Vec<String> = conjugation_table(t, s)?
            .iter()
            .map(|x| format!("{}{}:{:+}", x.operator, x.generator, x.sign))
            .collect();
        println!("  signs {}", row.join(" "));
    }
    Ok(())
}
