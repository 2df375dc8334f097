//! Deterministic Gaussian sample catalog used by every residual check.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{parity, MomentumGrid, Packet};
use crate::opcalc::Sample;

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Block weight patterns cycled through on two-block grids.
fn block_weights(blocks: usize, i: usize) -> Vec<Complex64> {
    if blocks == 1 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match i % 4 {
        0 => vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        1 => vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        2 => vec![Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
        _ => vec![Complex64::new(r, 0.0), Complex64::new(0.0, r)],
    }
}

/// The packet recipes of the catalog, scaled to the grid's cutoff (the
/// reference layout is `p_max = 6`).
pub fn packets(grid: &MomentumGrid, seed: u64) -> Vec<Packet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = grid.p_max() / 6.0;
    let mut unit = |scale: f64| -> [f64; 3] { std::array::from_fn(|_| rng.gen_range(-1.0..1.0) * scale) };
    if grid.mass() > 0.0 {
        vec![
            Packet::new([0.0; 3], 1.2 * s).displaced(unit(0.3 / s)),
            Packet::new([0.0; 3], 1.4 * s),
            Packet::new(unit(0.5 * s), 1.2 * s).displaced(unit(0.3 / s)),
        ]
    } else {
        // the (p1^2 + p2^2)^2 envelope keeps every sample smooth where the
        // massless symbols are singular
        vec![
            Packet::new(unit(0.2 * s), s)
                .with_axial_power(2)
                .displaced(unit(0.4 / s)),
            Packet::new([0.0; 3], 0.9 * s).with_axial_power(2),
            Packet::new(unit(0.2 * s), s)
                .with_axial_power(2)
                .displaced(unit(0.4 / s)),
        ]
    }
}

/// Normalized samples: the catalog packets (block weights cycling over
/// pure, mixed and phased combinations) plus the odd part of the last one.
pub fn samples(grid: &Arc<MomentumGrid>, seed: u64) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    let packets = packets(grid, seed);
    for (i, p) in packets.iter().enumerate() {
        let w = block_weights(grid.blocks(), i);
        out.push(Sample::new(format!("{p:?} w={w:?}"), p.build(grid, &w)?));
    }
    let last = packets.len() - 1;
    let w = block_weights(grid.blocks(), last + 1);
    let even = packets[last].build(grid, &w)?;
    let odd = (&even - &parity(&even)).normalized()?;
    out.push(Sample::new(format!("odd part of {:?} w={w:?}", packets[last]), odd));
    Ok(out)
}

/// Samples restricted to block `b` and renormalized.
pub fn block_samples(grid: &Arc<MomentumGrid>, seed: u64, b: usize) -> Result<Vec<Sample>> {
    samples(grid, seed)?
        .into_iter()
        .filter(|s| s.state.block_norm_sqr(b) > 1e-3)
        .map(|s| {
            Ok(Sample::new(
                format!("{} (block {})", s.label, b + 1),
                s.state.restrict_to_block(b).normalized()?,
            ))
        })
        .collect()
}
