//! Free evolution of a massive and a massless packet: position expectation
//! drifts at the mean velocity while momentum, energy and norm stay fixed.
//! Prints the trajectory as CSV.

use std::sync::Arc;

use freeparticle::grid::{MomentumGrid, Packet, StencilOrder};
use freeparticle::triplets::{make_triplet, ClassTag};
use freeparticle::verify::{ehrenfest_evolution, fitted_slope, velocity_moment};
use num_complex::Complex64;

fn main() -> freeparticle::Result<()> {
    let times: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
    let one = Complex64::new(1.0, 0.0);
    let cases = [
        (ClassTag::MassivePlus, 1.0, Packet::new([1.0, 0.5, 0.0], 1.0)),
        (
            ClassTag::MasslessPlus,
            0.0,
            Packet::new([0.0, 0.0, 1.5], 0.8).with_axial_power(2),
        ),
    ];
    for (tag, mass, packet) in cases {
        let grid = Arc::new(MomentumGrid::new(32, 6.0, mass, 1)?);
        let t = make_triplet(tag, &grid, StencilOrder::Fourth)?;
        let psi = packet.build(&grid, &[one])?;
        let rows = ehrenfest_evolution(&t, &psi, &times)?;
        let v = velocity_moment(&t, &psi)?;
        println!("# {tag}: velocity moment ({:+.5}, {:+.5}, {:+.5})", v[0], v[1], v[2]);
        let q: Vec<[f64; 3]> = rows.iter().map(|r| r.q).collect();
        let slope: Vec<f64> = (0..3)
            .map(|a| fitted_slope(&times, &q.iter().map(|x| x[a]).collect::<Vec<_>>()))
            .collect();
        println!("# fitted slope ({:+.5}, {:+.5}, {:+.5})", slope[0], slope[1], slope[2]);
        println!("t,q1,q2,q3,p1,p2,p3,p0,e_kin,norm");
        for r in &rows {
            println!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.12}",
                r.t, r.q[0], r.q[1], r.q[2], r.p[0], r.p[1], r.p[2], r.p0, r.e_kin, r.norm
            );
        }
    }
    Ok(())
}
