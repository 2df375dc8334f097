//! Per-block helicity J·P/p0 of massless triplets: ±m/2 on the two blocks of
//! the two-block classes, zero for the single-block ones.

use std::sync::Arc;

use freeparticle::grid::{MomentumGrid, Packet, StencilOrder};
use freeparticle::triplets::{helicity_expectation, make_triplet, ClassTag};
use num_complex::Complex64;

fn main() -> freeparticle::Result<()> {
    let one = Complex64::new(1.0, 0.0);
    let packet = Packet::new([0.4, -0.2, 0.9], 0.9).with_axial_power(2);
    let mut tags = vec![ClassTag::MasslessPlus, ClassTag::MasslessMinus];
    tags.extend([0, 2, -2, 4, -4].map(|m| ClassTag::MasslessPm { m, pair: None }));
    for tag in tags {
        let grid = Arc::new(MomentumGrid::new(24, 6.0, 0.0, tag.blocks())?);
        let t = make_triplet(tag, &grid, StencilOrder::Fourth)?;
        let psi = packet.build(&grid, &vec![one; tag.blocks()])?;
        let h: Vec<String> = helicity_expectation(&t, &psi)?
            .iter()
            .map(|v| v.map_or("-".into(), |x| format!("{x:+.6}")))
            .collect();
        println!(
            "{:<28} m/2 = {:+.1}   per block [{}]",
            tag.to_string(),
            tag.helicity_index() as f64 / 2.0,
            h.join(", ")
        );
    }
    Ok(())
}
