//! Builds every massive triplet class, prints its measured spectrum class
//! and checks it against the inversion flags: a two-signed spectrum occurs
//! exactly when T is unitary or S is anti-unitary.

use std::sync::Arc;

use freeparticle::catalog::{samples, DEFAULT_SEED};
use freeparticle::grid::{MomentumGrid, StencilOrder};
use freeparticle::triplets::{make_triplet, mass_shell_residual, spectrum_class, ClassTag, SpectrumClass};

fn main() -> freeparticle::Result<()> {
    let classes = [
        ClassTag::MassivePlus,
        ClassTag::MassiveMinus,
        ClassTag::MassivePm1,
        ClassTag::MassivePm2,
    ];
    println!(
        "{:<16} {:>10} {:>10} {:>12} {:>12}  biconditional",
        "class", "spectrum", "predicted", "T unitary", "S antiunit."
    );
    for tag in classes {
        let grid = Arc::new(MomentumGrid::new(24, 6.0, 1.0, tag.blocks())?);
        let t = make_triplet(tag, &grid, StencilOrder::Fourth)?;
        let s = samples(&grid, DEFAULT_SEED)?;
        let measured = spectrum_class(&t, &s)?;
        let flag = |x: Option<bool>| x.map_or("-".to_string(), |v| v.to_string());
        let two_signed = measured == SpectrumClass::Both;
        let inverted = t.t_is_unitary() == Some(true) || t.s_is_antiunitary() == Some(true);
        println!(
            "{:<16} {:>10} {:>10} {:>12} {:>12}  {}",
            tag.to_string(),
            format!("{measured:?}"),
            format!("{:?}", t.predicted_spectrum()),
            flag(t.t_is_unitary()),
            flag(t.s_is_antiunitary()),
            if two_signed == inverted { "holds" } else { "VIOLATED" }
        );
        println!("    mass shell residual {:.2e}", mass_shell_residual(&t, &s)?.max());
    }
    Ok(())
}
