//! The unitary map from the two-block massive momentum representation to a
//! pair of flat-measure position fields, and the position-space operators.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, State};
use crate::opcalc::{ParticleOperator, ResidualStats, Sample};
use crate::position::newton_wigner;
use crate::triplets::{cyclic, ClassTag, TransformerTriplet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Position lattice paired with a momentum grid by the centered DFT:
/// `x_a = (a - (n-1)/2) h_x` with `h_x h_p = 2 pi / n`.
#[derive(Clone, Debug)]
pub struct PositionGrid {
    n: usize,
    spacing: f64,
    axis: Vec<f64>,
    momentum: Arc<MomentumGrid>,
}

impl PositionGrid {
    pub fn dual(momentum: &Arc<MomentumGrid>) -> Self {
        let n = momentum.n();
        let spacing = 2.0 * PI / (n as f64 * momentum.spacing());
        // mirrored construction keeps x -> -x an exact node permutation
        let half: Vec<f64> = (0..n / 2).map(|i| (i as f64 + 0.5) * spacing).collect();
        let axis = half.iter().rev().map(|x| -x).chain(half.iter().copied()).collect();
        PositionGrid {
            n,
            spacing,
            axis,
            momentum: Arc::clone(momentum),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_max(&self) -> f64 {
        self.n as f64 * self.spacing / 2.0
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn nodes(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn momentum(&self) -> &Arc<MomentumGrid> {
        &self.momentum
    }

    pub fn coord(&self, node: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.axis[node / (n * n)],
            self.axis[(node / n) % n],
            self.axis[node % n],
        ]
    }
}

/// Two position fields on the flat measure `h_x^3`.
#[derive(Clone, Debug)]
pub struct KgState {
    grid: Arc<PositionGrid>,
    fields: [Vec<Complex64>; 2],
}

impl KgState {
    pub fn from_fields(grid: &Arc<PositionGrid>, fields: [Vec<Complex64>; 2]) -> Result<Self> {
        if fields.iter().any(|f| f.len() != grid.nodes()) {
            return Err(Error::GridMismatch);
        }
        Ok(KgState {
            grid: Arc::clone(grid),
            fields,
        })
    }

    pub fn grid(&self) -> &Arc<PositionGrid> {
        &self.grid
    }

    pub fn field(&self, b: usize) -> &[Complex64] {
        &self.fields[b]
    }

    pub fn norm_sqr(&self) -> f64 {
        let cell = self.grid.spacing.powi(3);
        self.fields.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * cell
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &KgState) -> Complex64 {
        let cell = self.grid.spacing.powi(3);
        self.fields
            .iter()
            .flatten()
            .zip(other.fields.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * cell
    }

    fn map(&self, f: impl Fn(usize, usize, Complex64) -> Complex64 + Sync) -> KgState {
        let fields = std::array::from_fn(|b| {
            self.fields[b]
                .par_iter()
                .enumerate()
                .map(|(i, z)| f(b, i, *z))
                .collect()
        });
        KgState {
            grid: Arc::clone(&self.grid),
            fields,
        }
    }

    pub fn sub(&self, other: &KgState) -> KgState {
        self.map(|b, i, z| z - other.fields[b][i])
    }

    pub fn scaled(&self, s: Complex64) -> KgState {
        self.map(|_, _, z| z * s)
    }
}

/// One-dimensional centered transform `sum_b exp(+-2 pi i (a-c)(b-c)/n) / sqrt(n)`.
struct CenteredDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl CenteredDft {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let centre = (n as f64 - 1.0) / 2.0;
        let tau = 2.0 * PI / n as f64;
        let pre = (0..n)
            .map(|b| Complex64::from_polar(1.0, -tau * centre * b as f64))
            .collect();
        let post = (0..n)
            .map(|a| Complex64::from_polar(1.0 / (n as f64).sqrt(), tau * centre * (centre - a as f64)))
            .collect();
        CenteredDft {
            n,
            forward: planner.plan_fft(n, FftDirection::Inverse),
            backward: planner.plan_fft(n, FftDirection::Forward),
            pre,
            post,
        }
    }

    /// `+` sign kernel (momentum to position) or its adjoint.
    fn apply(&self, line: &mut [Complex64], to_position: bool) {
        let (fft, conj) = if to_position {
            (&self.forward, false)
        } else {
            (&self.backward, true)
        };
        let ph = |z: Complex64| if conj { z.conj() } else { z };
        for (v, p) in line.iter_mut().zip(&self.pre) {
            *v *= ph(*p);
        }
        fft.process(line);
        for (v, p) in line.iter_mut().zip(&self.post) {
            *v *= ph(*p);
        }
    }
}

fn transform_3d(dft: &CenteredDft, data: &mut [Complex64], to_position: bool) {
    let n = dft.n;
    // contiguous axis
    data.par_chunks_mut(n).for_each(|line| dft.apply(line, to_position));
    for stride in [n, n * n] {
        let lines: Vec<usize> = (0..n * n * n).filter(|i| (i / stride) % n == 0).collect();
        let updated: Vec<(usize, Vec<Complex64>)> = lines
            .par_iter()
            .map(|&start| {
                let mut line: Vec<Complex64> = (0..n).map(|a| data[start + a * stride]).collect();
                dft.apply(&mut line, to_position);
                (start, line)
            })
            .collect();
        for (start, line) in updated {
            for (a, v) in line.into_iter().enumerate() {
                data[start + a * stride] = v;
            }
        }
    }
}

/// The map `Z` and its inverse between a two-block massive momentum grid
/// and the dual position grid.
pub struct KgMap {
    momentum: Arc<MomentumGrid>,
    position: Arc<PositionGrid>,
    dft: CenteredDft,
    /// `(h_p / h_x)^{3/2}`: coefficient rescaling between the two measures.
    scale: f64,
}

impl KgMap {
    pub fn new(momentum: &Arc<MomentumGrid>) -> Result<Self> {
        if momentum.mass() <= 0.0 {
            return Err(Error::InvalidMass(momentum.mass()));
        }
        if momentum.blocks() != 2 {
            return Err(Error::InvalidBlocks(momentum.blocks()));
        }
        let position = Arc::new(PositionGrid::dual(momentum));
        let scale = (momentum.spacing() / position.spacing()).powf(1.5);
        Ok(KgMap {
            momentum: Arc::clone(momentum),
            dft: CenteredDft::new(momentum.n()),
            position,
            scale,
        })
    }

    pub fn position(&self) -> &Arc<PositionGrid> {
        &self.position
    }

    pub fn momentum(&self) -> &Arc<MomentumGrid> {
        &self.momentum
    }

    /// Flat-measure momentum fields to position fields (no `p0` factor).
    fn to_position(&self, flat: [Vec<Complex64>; 2]) -> KgState {
        let fields = flat.map(|mut f| {
            transform_3d(&self.dft, &mut f, true);
            f.iter_mut().for_each(|z| *z *= self.scale);
            f
        });
        KgState {
            grid: Arc::clone(&self.position),
            fields,
        }
    }

    fn to_momentum(&self, chi: &KgState) -> [Vec<Complex64>; 2] {
        std::array::from_fn(|b| {
            let mut f = chi.fields[b].clone();
            transform_3d(&self.dft, &mut f, false);
            f.iter_mut().for_each(|z| *z /= self.scale);
            f
        })
    }

    /// `Z psi`: multiply by `p0^{-1/2}`, then the inverse Fourier transform per block.
    pub fn forward(&self, psi: &State) -> Result<KgState> {
        if !psi.grid().same_lattice(&self.momentum) || psi.grid().blocks() != 2 {
            return Err(Error::GridMismatch);
        }
        let e = self.momentum.energy();
        let flat = std::array::from_fn(|b| psi.block(b).iter().zip(e).map(|(z, p0)| z / p0.sqrt()).collect());
        Ok(self.to_position(flat))
    }

    /// `Z^{-1} chi`.
    pub fn backward(&self, chi: &KgState) -> Result<State> {
        if !chi.grid.momentum.same_lattice(&self.momentum) {
            return Err(Error::GridMismatch);
        }
        let e = self.momentum.energy();
        let flat = self.to_momentum(chi);
        let amps = flat
            .iter()
            .flat_map(|f| f.iter().zip(e).map(|(z, p0)| z * p0.sqrt()))
            .collect();
        State::from_amplitudes(&self.momentum, amps)
    }

    /// Multiply by a momentum symbol `sym(block, p)` in the Fourier domain.
    pub fn symbol<F>(&self, chi: &KgState, sym: F) -> KgState
    where
        F: Fn(usize, [f64; 3], f64) -> Complex64 + Sync,
    {
        let coords = self.momentum.coords();
        let e = self.momentum.energy();
        let mut flat = self.to_momentum(chi);
        for (b, f) in flat.iter_mut().enumerate() {
            f.par_iter_mut()
                .enumerate()
                .for_each(|(i, z)| *z *= sym(b, coords[i], e[i]));
        }
        self.to_position(flat)
    }

    fn x_mul(&self, chi: &KgState, j: usize) -> KgState {
        let g = Arc::clone(&self.position);
        chi.map(move |_, i, z| z * g.coord(i)[j])
    }
}

/// Position-space operators on `KgState`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hatted {
    P0,
    P(usize),
    J(usize),
    K(usize),
    Q(usize),
    /// Printed inversion of the given pair: `S1 = K Y swap`, `S2 = K Y swap`.
    S(u8),
    /// Printed time reversal: `T1 = K`, `T2 = swap`.
    T(u8),
}

fn block_sign(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

impl KgMap {
    pub fn apply_hatted(&self, op: Hatted, chi: &KgState) -> KgState {
        match op {
            Hatted::P0 => self.symbol(chi, |b, _, e| c(block_sign(b) * e, 0.0)),
            Hatted::P(j) => self.symbol(chi, move |_, p, _| c(p[j], 0.0)),
            Hatted::Q(j) => self.x_mul(chi, j),
            Hatted::J(k) => {
                // (x cross P)_k = x_l P_j - x_j P_l with (j, l) = cyclic(k)
                let (j, l) = cyclic(k);
                let a = self.x_mul(&self.apply_hatted(Hatted::P(j), chi), l);
                let b = self.x_mul(&self.apply_hatted(Hatted::P(l), chi), j);
                a.sub(&b)
            }
            Hatted::K(j) => {
                let omega = |x: &KgState| self.symbol(x, |b, _, e| c(block_sign(b) * e, 0.0));
                let a = self.x_mul(&omega(chi), j);
                let b = omega(&self.x_mul(chi, j));
                a.map(|bl, i, z| (z + b.fields[bl][i]) * 0.5)
            }
            Hatted::S(_) => swap(&reflect_conj(chi)),
            Hatted::T(1) => chi.map(|_, _, z| z.conj()),
            Hatted::T(_) => swap(chi),
        }
    }
}

fn swap(chi: &KgState) -> KgState {
    KgState {
        grid: Arc::clone(&chi.grid),
        fields: [chi.fields[1].clone(), chi.fields[0].clone()],
    }
}

/// `K Y`: complex conjugation composed with `x -> -x`.
fn reflect_conj(chi: &KgState) -> KgState {
    let last = chi.grid.nodes() - 1;
    chi.map(|b, i, _| chi.fields[b][last - i].conj())
}

/// Roundoff baseline of the transform pair and the tolerance derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FftCalibration {
    pub roundtrip: f64,
    pub isometry: f64,
    /// Max deviation from the analytic transform of `sigma^3 exp(-sigma^2 x^2 / 2)`.
    pub analytic: f64,
    pub tolerance: f64,
}

/// Safety factor on the measured round-trip roundoff.
pub const FFT_SAFETY: f64 = 100.0;

/// Calibrates on `psi = p0^{1/2} exp(-|p|^2 / (2 sigma^2))` on both blocks,
/// whose image is `sigma^3 exp(-sigma^2 |x|^2 / 2)` up to truncation.
pub fn calibrate_fft(map: &KgMap) -> Result<FftCalibration> {
    let sigma = map.momentum.p_max() / 6.0;
    let psi = State::from_fn(&map.momentum, |_, p| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let e = (map.momentum.mass().powi(2) + r2).sqrt();
        c(e.sqrt() * (-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    let chi = map.forward(&psi)?;
    let back = map.backward(&chi)?;
    let roundtrip = (&back - &psi).norm() / psi.norm();
    let isometry = (chi.norm() - psi.norm()).abs() / psi.norm();
    let pos = &map.position;
    let analytic = chi
        .fields
        .iter()
        .flat_map(|f| f.iter().enumerate())
        .map(|(i, z)| {
            let x = pos.coord(i);
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let want = sigma.powi(3) * (-sigma * sigma * r2 / 2.0).exp();
            (z - c(want, 0.0)).norm()
        })
        .fold(0.0, f64::max)
        / sigma.powi(3);
    let tolerance = FFT_SAFETY * roundtrip.max(isometry).max(f64::EPSILON);
    Ok(FftCalibration {
        roundtrip,
        isometry,
        analytic,
        tolerance,
    })
}

/// `Z X Z^{-1}` for a momentum operator, applied to `chi`.
pub fn conjugated(map: &KgMap, op: &ParticleOperator, chi: &KgState) -> Result<KgState> {
    map.forward(&op.apply(&map.backward(chi)?)?)
}

/// Residuals of `Z G psi - G^ Z psi` relative to `|Z G psi|`, one entry per
/// generator family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KgEquivalence {
    pub generator: String,
    pub residual: ResidualStats,
}

pub fn kg_equivalence_residual(triplet: &TransformerTriplet, samples: &[Sample]) -> Result<Vec<KgEquivalence>> {
    let pair = match triplet.tag() {
        ClassTag::MassivePm1 => 1,
        ClassTag::MassivePm2 => 2,
        other => {
            return Err(Error::Precondition(format!(
                "the position-space map is defined for the two-block massive classes, got {other}"
            )))
        }
    };
    let map = KgMap::new(triplet.grid())?;
    let q = newton_wigner(triplet.grid(), triplet.stencil);
    let mut families: Vec<(String, Vec<(ParticleOperator, Hatted)>)> = vec![
        ("P0".into(), vec![(triplet.p0.clone(), Hatted::P0)]),
        (
            "P".into(),
            (0..3).map(|j| (triplet.p[j].clone(), Hatted::P(j))).collect(),
        ),
        (
            "J".into(),
            (0..3).map(|j| (triplet.j[j].clone(), Hatted::J(j))).collect(),
        ),
        (
            "K".into(),
            (0..3).map(|j| (triplet.k[j].clone(), Hatted::K(j))).collect(),
        ),
        ("Q".into(), (0..3).map(|j| (q.q[j].clone(), Hatted::Q(j))).collect()),
    ];
    if let (Some(s), Some(t)) = (&triplet.s, &triplet.t) {
        families.push(("S".into(), vec![(s.clone(), Hatted::S(pair))]));
        families.push(("T".into(), vec![(t.clone(), Hatted::T(pair))]));
    }
    families
        .into_iter()
        .map(|(name, ops)| {
            let mut values = Vec::new();
            let mut labels = Vec::new();
            for (op, hat) in &ops {
                for s in samples {
                    let lhs = map.forward(&op.apply(&s.state)?)?;
                    let rhs = map.apply_hatted(*hat, &map.forward(&s.state)?);
                    let scale = lhs.norm().max(s.state.norm());
                    values.push(lhs.sub(&rhs).norm() / scale);
                    labels.push(format!("{hat:?} {}", s.label));
                }
            }
            Ok(KgEquivalence {
                generator: name,
                residual: ResidualStats::from_values(&values, labels),
            })
        })
        .collect()
}

/// `rho(x) = |chi_1(x)|^2 + |chi_2(x)|^2`.
pub fn kg_density(chi: &KgState) -> Vec<f64> {
    chi.fields[0]
        .iter()
        .zip(&chi.fields[1])
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .collect()
}

/// `sum rho h_x^3`.
pub fn integrated_density(chi: &KgState) -> f64 {
    kg_density(chi).iter().sum::<f64>() * chi.grid.spacing.powi(3)
}

/// `exp(-i P0^ t) chi`, exact in the Fourier domain.
pub fn evolve(map: &KgMap, chi: &KgState, t: f64) -> KgState {
    map.symbol(chi, move |b, _, e| Complex64::from_polar(1.0, -block_sign(b) * e * t))
}

/// `<chi, x_j chi> / <chi, chi>`.
pub fn position_expectation(map: &KgMap, chi: &KgState) -> [f64; 3] {
    let n2 = chi.norm_sqr();
    std::array::from_fn(|j| chi.inner(&map.x_mul(chi, j)).re / n2)
}

/// Writes the plane `x_axis = x[index]` of `rho` as CSV rows `u,v,rho`.
pub fn write_density_slice<W: Write>(out: &mut W, chi: &KgState, axis: usize, index: usize) -> Result<()> {
    let g = &chi.grid;
    let n = g.n();
    if axis > 2 || index >= n {
        return Err(Error::Precondition(format!(
            "slice axis {axis} index {index} outside the lattice"
        )));
    }
    let rho = kg_density(chi);
    let (ua, va) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let names = ["x1", "x2", "x3"];
    writeln!(out, "{},{},rho", names[ua], names[va])?;
    for node in 0..g.nodes() {
        let idx = [node / (n * n), (node / n) % n, node % n];
        if idx[axis] == index {
            let x = g.coord(node);
            writeln!(out, "{},{},{:e}", x[ua], x[va], rho[node])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::grid::StencilOrder;
    use crate::triplets::make_triplet;

    fn grid(n: usize) -> Arc<MomentumGrid> {
        Arc::new(MomentumGrid::new(n, 6.0, 1.0, 2).unwrap())
    }

    #[test]
    fn dual_grid_spacing() {
        let g = grid(16);
        let x = PositionGrid::dual(&g);
        assert!((x.spacing() * g.spacing() - 2.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(x.axis()[0], -x.axis()[15]);
        assert!((x.x_max() - 16.0 * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn map_is_unitary_and_invertible() {
        let g = grid(16);
        let map = KgMap::new(&g).unwrap();
        for s in catalog::samples(&g, 3).unwrap() {
            let chi = map.forward(&s.state).unwrap();
            assert!((chi.norm() - s.state.norm()).abs() < 1e-10);
            let back = map.backward(&chi).unwrap();
            assert!((&back - &s.state).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_massless_and_single_block() {
        let g0 = Arc::new(MomentumGrid::new(16, 6.0, 0.0, 2).unwrap());
        assert!(matches!(KgMap::new(&g0), Err(Error::InvalidMass(_))));
        let g1 = Arc::new(MomentumGrid::new(16, 6.0, 1.0, 1).unwrap());
        assert!(matches!(KgMap::new(&g1), Err(Error::InvalidBlocks(1))));
    }

    #[test]
    fn gaussian_pair_matches_analytic_transform() {
        let map = KgMap::new(&grid(32)).unwrap();
        let cal = calibrate_fft(&map).unwrap();
        assert!(cal.roundtrip < 1e-13 && cal.isometry < 1e-13);
        assert!(cal.analytic < 1e-6, "analytic deviation {}", cal.analytic);
    }

    #[test]
    fn energy_symbol_on_a_plane_wave_packet() {
        let g = grid(32);
        let map = KgMap::new(&g).unwrap();
        let k = [1.5, 0.0, 0.0];
        let psi = crate::grid::Packet::new(k, 0.4)
            .build(&g, &[c(1.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        let chi = map.forward(&psi).unwrap();
        let e = chi.inner(&map.apply_hatted(Hatted::P0, &chi));
        // blocks contribute with opposite signs; check block 1 alone
        let one = KgState::from_fields(
            map.position(),
            [chi.field(0).to_vec(), vec![c(0.0, 0.0); chi.field(0).len()]],
        )
        .unwrap();
        let e1 = one.inner(&map.apply_hatted(Hatted::P0, &one)).re / one.norm_sqr();
        assert!(e.re.abs() < 1e-10);
        assert!((e1 - (1.0 + 1.5f64 * 1.5).sqrt()).abs() < 0.05, "{e1}");
    }

    #[test]
    fn density_is_nonnegative_and_conserved() {
        let g = grid(16);
        let map = KgMap::new(&g).unwrap();
        for s in catalog::samples(&g, 5).unwrap() {
            let chi = map.forward(&s.state).unwrap();
            assert!(kg_density(&chi).iter().all(|r| *r >= 0.0));
            assert!((integrated_density(&chi) - 1.0).abs() < 1e-10);
            let later = evolve(&map, &chi, 1.3);
            assert!((integrated_density(&later) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn position_operator_is_symmetric_and_k_hat_too() {
        let g = grid(16);
        let map = KgMap::new(&g).unwrap();
        let s = catalog::samples(&g, 9).unwrap();
        let a = map.forward(&s[0].state).unwrap();
        let b = map.forward(&s[2].state).unwrap();
        for op in [Hatted::Q(0), Hatted::K(1), Hatted::J(2), Hatted::P0] {
            let lhs = a.inner(&map.apply_hatted(op, &b));
            let rhs = map.apply_hatted(op, &a).inner(&b);
            assert!((lhs - rhs).norm() < 1e-12, "{op:?}");
        }
    }

    #[test]
    fn printed_inversions_are_exact_conjugates() {
        for (tag, pair) in [(ClassTag::MassivePm1, 1u8), (ClassTag::MassivePm2, 2)] {
            let g = grid(16);
            let t = make_triplet(tag, &g, StencilOrder::Fourth).unwrap();
            let map = KgMap::new(&g).unwrap();
            for s in catalog::samples(&g, 1).unwrap() {
                for (x, hat) in [
                    (t.s.as_ref().unwrap(), Hatted::S(pair)),
                    (t.t.as_ref().unwrap(), Hatted::T(pair)),
                ] {
                    let lhs = map.forward(&x.apply(&s.state).unwrap()).unwrap();
                    let rhs = map.apply_hatted(hat, &map.forward(&s.state).unwrap());
                    assert!(lhs.sub(&rhs).norm() < 1e-12, "{tag} {hat:?}");
                }
            }
        }
    }

    #[test]
    fn slice_csv_has_header_and_one_row_per_node() {
        let g = grid(16);
        let map = KgMap::new(&g).unwrap();
        let chi = map.forward(&catalog::samples(&g, 1).unwrap()[0].state).unwrap();
        let mut buf = Vec::new();
        write_density_slice(&mut buf, &chi, 2, 8).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,rho\n"));
        assert_eq!(text.lines().count(), 1 + 16 * 16);
        assert!(write_density_slice(&mut Vec::new(), &chi, 3, 0).is_err());
    }
}
