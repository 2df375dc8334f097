//! Transformer triplets: Poincaré generators together with space inversion
//! `S` and time reversal `T`, for massive spin-0 and massless particles.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, State, StencilOrder};
use crate::opcalc::{ParticleOperator, Sample};

/// Floor below which a residual counts as exact.
pub const EXACT_TOL: f64 = 1e-12;

/// Slack used by [`spectrum_class`]; the energy operators are exact
/// multiplications, so this only absorbs summation rounding.
pub const SPECTRUM_EPS: f64 = 10.0 * EXACT_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassTag {
    MassivePlus,
    MassiveMinus,
    MassivePm1,
    MassivePm2,
    MasslessPlus,
    MasslessMinus,
    /// `pair` selects one of the three inversion pairs, only for `m = 0`.
    MasslessPm {
        m: i32,
        pair: Option<u8>,
    },
}

impl ClassTag {
    pub fn is_massive(self) -> bool {
        matches!(
            self,
            ClassTag::MassivePlus | ClassTag::MassiveMinus | ClassTag::MassivePm1 | ClassTag::MassivePm2
        )
    }

    pub fn is_pm(self) -> bool {
        matches!(
            self,
            ClassTag::MassivePm1 | ClassTag::MassivePm2 | ClassTag::MasslessPm { .. }
        )
    }

    pub fn blocks(self) -> usize {
        if self.is_pm() {
            2
        } else {
            1
        }
    }

    pub fn helicity_index(self) -> i32 {
        match self {
            ClassTag::MasslessPm { m, .. } => m,
            _ => 0,
        }
    }

    /// All classes with a complete (S, T) pair, in a fixed order.
    pub fn with_inversions() -> Vec<ClassTag> {
        let mut v = vec![
            ClassTag::MassivePlus,
            ClassTag::MassiveMinus,
            ClassTag::MassivePm1,
            ClassTag::MassivePm2,
            ClassTag::MasslessPlus,
            ClassTag::MasslessMinus,
        ];
        v.extend((1..=3).map(|p| ClassTag::MasslessPm { m: 0, pair: Some(p) }));
        v
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassTag::MassivePlus => f.write_str("massive_plus"),
            ClassTag::MassiveMinus => f.write_str("massive_minus"),
            ClassTag::MassivePm1 => f.write_str("massive_pm_1"),
            ClassTag::MassivePm2 => f.write_str("massive_pm_2"),
            ClassTag::MasslessPlus => f.write_str("massless_plus"),
            ClassTag::MasslessMinus => f.write_str("massless_minus"),
            ClassTag::MasslessPm { m, pair: None } => write!(f, "massless_pm:m={m}"),
            ClassTag::MasslessPm { m, pair: Some(p) } => write!(f, "massless_pm:m={m},pair={p}"),
        }
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidClassTag(s.to_string());
        Ok(match s {
            "massive_plus" => ClassTag::MassivePlus,
            "massive_minus" => ClassTag::MassiveMinus,
            "massive_pm_1" => ClassTag::MassivePm1,
            "massive_pm_2" => ClassTag::MassivePm2,
            "massless_plus" => ClassTag::MasslessPlus,
            "massless_minus" => ClassTag::MasslessMinus,
            _ => {
                let rest = s.strip_prefix("massless_pm:").ok_or_else(bad)?;
                let mut m = None;
                let mut pair = None;
                for part in rest.split(',') {
                    match part.split_once('=') {
                        Some(("m", v)) if m.is_none() => m = Some(v.parse().map_err(|_| bad())?),
                        Some(("pair", v)) if pair.is_none() => pair = Some(v.parse::<u8>().map_err(|_| bad())?),
                        _ => return Err(bad()),
                    }
                }
                let m = m.ok_or_else(bad)?;
                if let Some(p) = pair {
                    if m != 0 {
                        return Err(Error::InversionUnavailable(s.to_string()));
                    }
                    if !(1..=3).contains(&p) {
                        return Err(bad());
                    }
                }
                ClassTag::MasslessPm { m, pair }
            }
        })
    }
}

impl Serialize for ClassTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletClass {
    pub tag: ClassTag,
    pub mass: f64,
}

impl TripletClass {
    pub fn new(tag: ClassTag, mass: f64) -> Result<Self> {
        let c = TripletClass { tag, mass };
        c.validate(mass, tag.blocks())?;
        Ok(c)
    }

    pub fn m(&self) -> i32 {
        self.tag.helicity_index()
    }

    pub fn st_pair(&self) -> Option<u8> {
        match self.tag {
            ClassTag::MasslessPm { pair, .. } => pair,
            _ => None,
        }
    }

    fn validate(&self, mass: f64, blocks: usize) -> Result<()> {
        let fail = |requirement| {
            Err(Error::ClassGridMismatch {
                class: self.tag.to_string(),
                requirement,
                mass,
                blocks,
            })
        };
        if self.tag.is_massive() && mass <= 0.0 {
            return fail("a positive mass");
        }
        if !self.tag.is_massive() && mass != 0.0 {
            return fail("zero mass");
        }
        if blocks != self.tag.blocks() {
            return fail(if self.tag.is_pm() { "two blocks" } else { "one block" });
        }
        if let ClassTag::MasslessPm { m, pair: Some(_) } = self.tag {
            if m != 0 {
                return Err(Error::InversionUnavailable(self.tag.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpectrumClass {
    Positive,
    Negative,
    Both,
}

/// Generators, inversions and class data of one triplet on one grid.
#[derive(Clone, Debug)]
pub struct TransformerTriplet {
    pub class: TripletClass,
    pub stencil: StencilOrder,
    pub p0: ParticleOperator,
    pub p: [ParticleOperator; 3],
    pub j: [ParticleOperator; 3],
    pub k: [ParticleOperator; 3],
    pub s: Option<ParticleOperator>,
    pub t: Option<ParticleOperator>,
    grid: Arc<MomentumGrid>,
}

/// `P0` sign on block `b`.
fn energy_sign(tag: ClassTag, b: usize) -> f64 {
    match tag {
        ClassTag::MassiveMinus | ClassTag::MasslessMinus => -1.0,
        _ if tag.is_pm() && b == 1 => -1.0,
        _ => 1.0,
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Axial denominator `p1^2 + p2^2`.
fn rho2(p: [f64; 3]) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

/// The rotation symbols added to `J` on the first block of a massless
/// two-block triplet of index `m`.
pub fn rotation_symbol(m: i32, p: [f64; 3], p0: f64) -> [f64; 3] {
    let h = 0.5 * m as f64 / rho2(p);
    [h * p[0] * p0, h * p[1] * p0, 0.0]
}

/// The boost symbols added to `K` on both blocks of a massless two-block
/// triplet of index `m`.
pub fn boost_symbol(m: i32, p: [f64; 3]) -> [f64; 3] {
    let h = 0.5 * m as f64 / rho2(p);
    [-h * p[1] * p[2], h * p[2] * p[0], 0.0]
}

/// Axis pair `(j, l)` with `(j, k, l)` cyclic (0-based).
pub fn cyclic(k: usize) -> (usize, usize) {
    ((k + 2) % 3, (k + 1) % 3)
}

/// Orbital rotation generator `-i (p_l d_j - p_j d_l)` plus `block_symbol`.
fn rotation<F>(grid: &Arc<MomentumGrid>, k: usize, order: StencilOrder, block_symbol: F) -> ParticleOperator
where
    F: Fn(usize, [f64; 3], f64) -> f64,
{
    let (j, l) = cyclic(k);
    ParticleOperator::first_order(
        format!("J{}", k + 1),
        grid,
        order,
        move |axis, _, p, _| {
            if axis == j {
                c(0.0, -p[l])
            } else if axis == l {
                c(0.0, p[j])
            } else {
                c(0.0, 0.0)
            }
        },
        move |b, p, e| c(block_symbol(b, p, e), 0.0),
    )
}

/// Boost generator `sign_b * i p0 d_j` plus `block_symbol`.
fn boost<F, G>(grid: &Arc<MomentumGrid>, j: usize, order: StencilOrder, sign: G, block_symbol: F) -> ParticleOperator
where
    F: Fn(usize, [f64; 3], f64) -> f64,
    G: Fn(usize) -> f64,
{
    ParticleOperator::first_order(
        format!("K{}", j + 1),
        grid,
        order,
        move |axis, b, _, e| if axis == j { c(0.0, sign(b) * e) } else { c(0.0, 0.0) },
        move |b, p, e| c(block_symbol(b, p, e), 0.0),
    )
}

fn inversions(tag: ClassTag, grid: &Arc<MomentumGrid>) -> Result<(Option<ParticleOperator>, Option<ParticleOperator>)> {
    let conj = ParticleOperator::conjugation(grid);
    let par = ParticleOperator::parity(grid);
    let (one, zero) = (c(1.0, 0.0), c(0.0, 0.0));
    let pair = match tag {
        ClassTag::MassivePlus | ClassTag::MassiveMinus | ClassTag::MasslessPlus | ClassTag::MasslessMinus => {
            (par.clone(), conj.compose(&par)?)
        }
        ClassTag::MassivePm1 => (ParticleOperator::swap(grid)?.compose(&conj)?, conj.compose(&par)?),
        ClassTag::MassivePm2 => (
            ParticleOperator::swap(grid)?.compose(&conj)?,
            ParticleOperator::swap(grid)?,
        ),
        ClassTag::MasslessPm { pair: None, .. } => return Ok((None, None)),
        ClassTag::MasslessPm { m, pair: Some(p) } => {
            if m != 0 {
                return Err(Error::InversionUnavailable(tag.to_string()));
            }
            let swap = ParticleOperator::swap(grid)?;
            match p {
                1 => (conj.compose(&swap)?, swap),
                2 => {
                    let d = ParticleOperator::block_matrix("diag(1,-1)", grid, [[one, zero], [zero, -one]])?;
                    (par.compose(&d)?, swap)
                }
                3 => {
                    let o = ParticleOperator::block_matrix("offdiag(1,-1)", grid, [[zero, one], [-one, zero]])?;
                    (o.compose(&conj)?, conj.compose(&par)?.compose(&swap)?)
                }
                _ => return Err(Error::InvalidClassTag(tag.to_string())),
            }
        }
    };
    Ok((Some(pair.0.with_label("S")), Some(pair.1.with_label("T"))))
}

/// Build the triplet of `tag` on `grid` with the given stencil order.
pub fn make_triplet(tag: ClassTag, grid: &Arc<MomentumGrid>, order: StencilOrder) -> Result<TransformerTriplet> {
    let class = TripletClass { tag, mass: grid.mass() };
    class.validate(grid.mass(), grid.blocks())?;
    let m = tag.helicity_index();
    let p0 = ParticleOperator::multiplication("P0", grid, move |b, _, e| c(energy_sign(tag, b) * e, 0.0));
    let p = std::array::from_fn(|a| {
        ParticleOperator::multiplication(format!("P{}", a + 1), grid, move |_, p, _| c(p[a], 0.0))
    });
    let j = std::array::from_fn(|k| {
        rotation(grid, k, order, move |b, p, e| {
            if m == 0 {
                return 0.0;
            }
            let s = if b == 0 { 1.0 } else { -1.0 };
            s * rotation_symbol(m, p, e)[k]
        })
    });
    let k = std::array::from_fn(|a| {
        boost(
            grid,
            a,
            order,
            move |b| energy_sign(tag, b),
            move |_, p, _| if m == 0 { 0.0 } else { boost_symbol(m, p)[a] },
        )
    });
    let (s, t) = inversions(tag, grid)?;
    Ok(TransformerTriplet {
        class,
        stencil: order,
        p0,
        p,
        j,
        k,
        s,
        t,
        grid: Arc::clone(grid),
    })
}

impl TransformerTriplet {
    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn tag(&self) -> ClassTag {
        self.class.tag
    }

    /// The ten generators with their names, in the order P0, P, J, K.
    pub fn generators(&self) -> Vec<(&'static str, &ParticleOperator)> {
        const P: [&str; 3] = ["P1", "P2", "P3"];
        const J: [&str; 3] = ["J1", "J2", "J3"];
        const K: [&str; 3] = ["K1", "K2", "K3"];
        let mut v = vec![("P0", &self.p0)];
        v.extend(P.iter().copied().zip(self.p.iter()));
        v.extend(J.iter().copied().zip(self.j.iter()));
        v.extend(K.iter().copied().zip(self.k.iter()));
        v
    }

    pub fn t_is_unitary(&self) -> Option<bool> {
        self.t.as_ref().map(|t| t.linearity().is_linear())
    }

    pub fn s_is_antiunitary(&self) -> Option<bool> {
        self.s.as_ref().map(|s| !s.linearity().is_linear())
    }

    /// The class prediction: both energy signs exactly for the two-block
    /// classes.
    pub fn predicted_spectrum(&self) -> SpectrumClass {
        if self.class.tag.is_pm() {
            SpectrumClass::Both
        } else if energy_sign(self.class.tag, 0) > 0.0 {
            SpectrumClass::Positive
        } else {
            SpectrumClass::Negative
        }
    }
}

/// Per-block helicity `<psi_b, (P.J / p0) psi_b> / <psi_b, psi_b>`, using the
/// diagonal blocks of `J` and `P`. Blocks where `psi` vanishes give `None`.
pub fn helicity_expectation(triplet: &TransformerTriplet, psi: &State) -> Result<Vec<Option<f64>>> {
    if triplet.class.mass != 0.0 {
        return Err(Error::Precondition(
            "helicity is a zero-mass diagnostic; got a massive triplet".into(),
        ));
    }
    let grid = triplet.grid();
    (0..grid.blocks())
        .map(|b| {
            if psi.block_norm_sqr(b) == 0.0 {
                return Ok(None);
            }
            let phi = psi.restrict_to_block(b);
            let mut acc = State::zeros(grid);
            for a in 0..3 {
                let jphi = triplet.j[a].apply(&phi)?;
                let pa = ParticleOperator::multiplication("p/p0", grid, move |_, p, e| c(p[a] / e, 0.0));
                acc = &acc + &pa.apply(&jphi)?;
            }
            Ok(Some(phi.inner(&acc)?.re / phi.norm_sqr()))
        })
        .collect()
}

/// `|(P0^2 - P^2 - mu^2) psi|` over the samples.
pub fn mass_shell_residual(triplet: &TransformerTriplet, samples: &[Sample]) -> Result<crate::opcalc::ResidualStats> {
    let mu2 = triplet.class.mass * triplet.class.mass;
    crate::opcalc::residual_over_samples(samples, |psi| {
        let e = triplet.p0.apply(psi).and_then(|x| triplet.p0.apply(&x));
        let mut out = e.expect("grid checked by sample construction");
        for a in 0..3 {
            let pp = triplet.p[a].apply(&triplet.p[a].apply(psi).unwrap()).unwrap();
            out = &out - &pp;
        }
        &out - &psi.scaled(c(mu2, 0.0))
    })
}

/// Energy expectations of block-supported probes, per block.
pub fn block_energies(triplet: &TransformerTriplet, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    let grid = triplet.grid();
    (0..grid.blocks())
        .map(|b| {
            samples
                .iter()
                .filter(|s| s.state.block_norm_sqr(b) > 0.0)
                .map(|s| {
                    let phi = s.state.restrict_to_block(b).normalized()?;
                    Ok(phi.inner(&triplet.p0.apply(&phi)?)?.re)
                })
                .collect()
        })
        .collect()
}

/// Sign pattern of the energy over block-supported probes.
pub fn spectrum_class(triplet: &TransformerTriplet, samples: &[Sample]) -> Result<SpectrumClass> {
    let mu = triplet.class.mass;
    let floor = mu * (1.0 - SPECTRUM_EPS);
    let energies = block_energies(triplet, samples)?;
    let all: Vec<f64> = energies.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::NoSamples);
    }
    let pos = all.iter().all(|&e| e > 0.0 && e >= floor);
    let neg = all.iter().all(|&e| e < 0.0 && e <= -floor);
    Ok(if pos {
        SpectrumClass::Positive
    } else if neg {
        SpectrumClass::Negative
    } else {
        SpectrumClass::Both
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::grid::gaussian_packet;
    use crate::opcalc::{adjoint_residual, identity_residual, Linearity};

    fn grid(mass: f64, blocks: usize) -> Arc<MomentumGrid> {
        Arc::new(MomentumGrid::new(16, 6.0, mass, blocks).unwrap())
    }

    fn build(tag: ClassTag) -> TransformerTriplet {
        let mass = if tag.is_massive() { 1.0 } else { 0.0 };
        make_triplet(tag, &grid(mass, tag.blocks()), StencilOrder::Fourth).unwrap()
    }

    #[test]
    fn tags_round_trip() {
        let mut tags = ClassTag::with_inversions();
        tags.push(ClassTag::MasslessPm { m: 2, pair: None });
        tags.push(ClassTag::MasslessPm { m: -4, pair: None });
        for t in tags {
            assert_eq!(t.to_string().parse::<ClassTag>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<ClassTag>(&json).unwrap(), t);
        }
        assert_eq!(ClassTag::MasslessPm { m: 2, pair: None }.to_string(), "massless_pm:m=2");
        assert_eq!(
            ClassTag::MasslessPm { m: 0, pair: Some(1) }.to_string(),
            "massless_pm:m=0,pair=1"
        );
        assert!("massive".parse::<ClassTag>().is_err());
        assert!("massless_pm:m=0,pair=4".parse::<ClassTag>().is_err());
        assert!(matches!(
            "massless_pm:m=2,pair=1".parse::<ClassTag>(),
            Err(Error::InversionUnavailable(_))
        ));
    }

    #[test]
    fn class_grid_consistency_is_enforced() {
        let g = grid(0.0, 1);
        assert!(make_triplet(ClassTag::MassivePlus, &g, StencilOrder::Fourth).is_err());
        assert!(make_triplet(ClassTag::MassivePm1, &grid(1.0, 1), StencilOrder::Fourth).is_err());
        assert!(make_triplet(ClassTag::MasslessPlus, &grid(1.0, 1), StencilOrder::Fourth).is_err());
        let r = make_triplet(
            ClassTag::MasslessPm { m: 2, pair: Some(1) },
            &grid(0.0, 2),
            StencilOrder::Fourth,
        );
        assert!(matches!(r, Err(Error::InversionUnavailable(_))));
    }

    #[test]
    fn energy_of_offset_packet_exceeds_mass() {
        let t = build(ClassTag::MassivePlus);
        let psi = gaussian_packet(t.grid(), [0.5, 0.5, 0.5], 1.0, &[c(1.0, 0.0)]).unwrap();
        assert!(psi.inner(&t.p0.apply(&psi).unwrap()).unwrap().re >= 1.0);
    }

    #[test]
    fn axial_symbols_project_onto_half_index() {
        // j.p = (m/2) p0 (p1^2 + p2^2) / (p1^2 + p2^2)
        let p = [0.5, 0.5, 0.5];
        let p0 = (0.75f64).sqrt();
        let j = rotation_symbol(2, p, p0);
        let proj = (j[0] * p[0] + j[1] * p[1] + j[2] * p[2]) / p0;
        assert!((proj - 1.0).abs() < 1e-15);
        let k = boost_symbol(2, p);
        assert_eq!(k[0] * p[0] + k[1] * p[1], 0.0);
    }

    #[test]
    fn linearity_flags_follow_the_class() {
        let pm1 = build(ClassTag::MassivePm1);
        let pm2 = build(ClassTag::MassivePm2);
        assert_eq!(pm1.t.as_ref().unwrap().linearity(), Linearity::ConjugateLinear);
        assert_eq!(pm2.t.as_ref().unwrap().linearity(), Linearity::Linear);
        assert_eq!(build(ClassTag::MassivePlus).s.unwrap().linearity(), Linearity::Linear);
        assert_eq!(pm1.s.unwrap().linearity(), Linearity::ConjugateLinear);
        let m2 = build(ClassTag::MasslessPm { m: 2, pair: None });
        assert!(m2.s.is_none() && m2.t.is_none());
    }

    #[test]
    fn inversions_preserve_norm() {
        for tag in ClassTag::with_inversions() {
            let t = build(tag);
            for s in catalog::samples(t.grid(), 3).unwrap() {
                for op in [t.s.as_ref().unwrap(), t.t.as_ref().unwrap()] {
                    let d = (op.apply(&s.state).unwrap().norm() - 1.0).abs();
                    assert!(d <= 1e-12, "{tag} {}", op.label());
                }
            }
        }
    }

    #[test]
    fn mass_shell_is_exact() {
        for tag in [
            ClassTag::MassivePlus,
            ClassTag::MassivePm1,
            ClassTag::MasslessPm { m: 3, pair: None },
        ] {
            let t = build(tag);
            let s = catalog::samples(t.grid(), 1).unwrap();
            let r = mass_shell_residual(&t, &s).unwrap();
            assert!(r.max() <= 1e-10, "{tag}: {}", r.max());
        }
    }

    #[test]
    fn spectrum_classes() {
        let expect = [
            (ClassTag::MassivePlus, SpectrumClass::Positive),
            (ClassTag::MassiveMinus, SpectrumClass::Negative),
            (ClassTag::MassivePm2, SpectrumClass::Both),
            (ClassTag::MasslessMinus, SpectrumClass::Negative),
            (ClassTag::MasslessPm { m: 2, pair: None }, SpectrumClass::Both),
        ];
        for (tag, want) in expect {
            let t = build(tag);
            let s = catalog::samples(t.grid(), 2).unwrap();
            assert_eq!(spectrum_class(&t, &s).unwrap(), want, "{tag}");
            assert_eq!(t.predicted_spectrum(), want);
        }
    }

    #[test]
    fn block_swap_anticommutes_with_energy() {
        let t = build(ClassTag::MassivePm1);
        let w = ParticleOperator::swap(t.grid()).unwrap();
        let lhs = w.compose(&t.p0).unwrap();
        let rhs = t.p0.compose(&w).unwrap().scaled(c(-1.0, 0.0));
        let s = catalog::samples(t.grid(), 4).unwrap();
        assert_eq!(identity_residual(&lhs, &rhs, &s).unwrap().max(), 0.0);
    }

    #[test]
    fn helicity_per_block() {
        for m in [0, 2, -2, 4] {
            let t = build(ClassTag::MasslessPm { m, pair: None });
            let s = catalog::block_samples(t.grid(), 1, 0).unwrap();
            let s2 = catalog::block_samples(t.grid(), 1, 1).unwrap();
            let h1 = helicity_expectation(&t, &s[0].state).unwrap();
            let h2 = helicity_expectation(&t, &s2[0].state).unwrap();
            assert!((h1[0].unwrap() - m as f64 / 2.0).abs() < 1e-10, "{h1:?}");
            assert!((h2[1].unwrap() + m as f64 / 2.0).abs() < 1e-10, "{h2:?}");
            assert!(h1[1].is_none());
        }
        let t = build(ClassTag::MasslessPlus);
        let s = catalog::samples(t.grid(), 1).unwrap();
        assert!(helicity_expectation(&t, &s[0].state).unwrap()[0].unwrap().abs() < 1e-10);
        assert!(helicity_expectation(&build(ClassTag::MassivePlus), &s[0].state).is_err());
    }

    #[test]
    fn generators_are_symmetric_under_the_invariant_measure() {
        for tag in [ClassTag::MassivePm1, ClassTag::MasslessPm { m: 2, pair: None }] {
            let t = build(tag);
            let s = catalog::samples(t.grid(), 9).unwrap();
            for (name, g) in t.generators() {
                let r = adjoint_residual(g, &s).unwrap().max();
                assert!(r < 5e-2, "{tag} {name}: {r}");
            }
        }
    }
}
