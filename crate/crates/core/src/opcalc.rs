//! Matrix-free linear and conjugate-linear operators on [`State`]s, with
//! commutator, adjoint and identity residual measurements.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, inner_unchecked, parity, MomentumGrid, State, StencilOrder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Linearity {
    Linear,
    ConjugateLinear,
}

impl Linearity {
    pub fn compose(self, other: Linearity) -> Linearity {
        if self == other {
            Linearity::Linear
        } else {
            Linearity::ConjugateLinear
        }
    }

    pub fn is_linear(self) -> bool {
        self == Linearity::Linear
    }
}

type Action = dyn Fn(&State) -> State + Send + Sync;

/// A map on states of one grid. Conjugate-linear operators are built as a
/// linear part applied after complex conjugation.
#[derive(Clone)]
pub struct ParticleOperator {
    label: String,
    linearity: Linearity,
    grid: Arc<MomentumGrid>,
    action: Arc<Action>,
    block_structure: Option<String>,
}

impl fmt::Debug for ParticleOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParticleOperator")
            .field("label", &self.label)
            .field("linearity", &self.linearity)
            .field("n", &self.grid.n())
            .field("blocks", &self.grid.blocks())
            .finish()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl ParticleOperator {
    pub fn linear<F>(label: impl Into<String>, grid: &Arc<MomentumGrid>, f: F) -> Self
    where
        F: Fn(&State) -> State + Send + Sync + 'static,
    {
        ParticleOperator {
            label: label.into(),
            linearity: Linearity::Linear,
            grid: Arc::clone(grid),
            action: Arc::new(f),
            block_structure: None,
        }
    }

    /// `psi -> linear_part(conj(psi))`.
    pub fn conjugate_linear<F>(label: impl Into<String>, grid: &Arc<MomentumGrid>, linear_part: F) -> Self
    where
        F: Fn(&State) -> State + Send + Sync + 'static,
    {
        ParticleOperator {
            label: label.into(),
            linearity: Linearity::ConjugateLinear,
            grid: Arc::clone(grid),
            action: Arc::new(move |psi: &State| linear_part(&psi.conj())),
            block_structure: None,
        }
    }

    pub fn identity(grid: &Arc<MomentumGrid>) -> Self {
        Self::linear("1", grid, |psi| psi.clone())
    }

    pub fn scalar(grid: &Arc<MomentumGrid>, value: Complex64) -> Self {
        Self::linear(format!("({value})*1"), grid, move |psi| psi.scaled(value))
    }

    /// Complex conjugation `K`.
    pub fn conjugation(grid: &Arc<MomentumGrid>) -> Self {
        Self::conjugate_linear("K", grid, |psi| psi.clone())
    }

    /// Space reflection `psi(p) -> psi(-p)`.
    pub fn parity(grid: &Arc<MomentumGrid>) -> Self {
        Self::linear("Y", grid, parity)
    }

    pub fn derivative(grid: &Arc<MomentumGrid>, axis: usize, order: StencilOrder) -> Self {
        Self::linear(format!("d/dp{}", axis + 1), grid, move |psi| {
            derivative(psi, axis, order)
        })
    }

    /// Pointwise multiplication by `symbol(block, p, p0)`.
    pub fn multiplication<F>(label: impl Into<String>, grid: &Arc<MomentumGrid>, symbol: F) -> Self
    where
        F: Fn(usize, [f64; 3], f64) -> Complex64,
    {
        let table = tabulate(grid, symbol);
        Self::linear(label, grid, move |psi| multiply(psi, &table))
    }

    /// Multiplication by a precomputed symbol laid out like the amplitudes.
    pub fn multiplication_table(
        label: impl Into<String>,
        grid: &Arc<MomentumGrid>,
        table: Vec<Complex64>,
    ) -> Result<Self> {
        if table.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self::linear(label, grid, move |psi| multiply(psi, &table)))
    }

    /// `sum_a coeff_a(block, p, p0) d/dp_a + zeroth(block, p, p0)`: the shape
    /// shared by every generator and position component in this crate.
    pub fn first_order<F, G>(
        label: impl Into<String>,
        grid: &Arc<MomentumGrid>,
        order: StencilOrder,
        coeff: F,
        zeroth: G,
    ) -> Self
    where
        F: Fn(usize, usize, [f64; 3], f64) -> Complex64,
        G: Fn(usize, [f64; 3], f64) -> Complex64,
    {
        let mut tables: Vec<(usize, Vec<Complex64>)> = Vec::new();
        for axis in 0..3 {
            let t = tabulate(grid, |b, p, e| coeff(axis, b, p, e));
            if t.iter().any(|v| *v != c(0.0, 0.0)) {
                tables.push((axis, t));
            }
        }
        let zero_table = tabulate(grid, zeroth);
        let has_zeroth = zero_table.iter().any(|v| *v != c(0.0, 0.0));
        Self::linear(label, grid, move |psi| {
            let mut out = if has_zeroth {
                multiply(psi, &zero_table).into_amplitudes()
            } else {
                vec![c(0.0, 0.0); psi.amplitudes().len()]
            };
            for (axis, table) in &tables {
                let d = derivative(psi, *axis, order);
                for ((o, v), t) in out.iter_mut().zip(d.amplitudes()).zip(table) {
                    *o += v * t;
                }
            }
            psi.with_amplitudes(out)
        })
    }

    /// Constant 2x2 mixing of the two blocks, `out_r = sum_s m[r][s] psi_s`.
    pub fn block_matrix(label: impl Into<String>, grid: &Arc<MomentumGrid>, m: [[Complex64; 2]; 2]) -> Result<Self> {
        if grid.blocks() != 2 {
            return Err(Error::InvalidBlocks(grid.blocks()));
        }
        let label = label.into();
        let structure = format!("[[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1]);
        let mut op = Self::linear(label, grid, move |psi| {
            let a = psi.block(0);
            let b = psi.block(1);
            let mut out = Vec::with_capacity(a.len() * 2);
            for r in 0..2 {
                out.extend(a.iter().zip(b).map(|(x, y)| m[r][0] * x + m[r][1] * y));
            }
            psi.with_amplitudes(out)
        });
        op.block_structure = Some(structure);
        Ok(op)
    }

    /// Block exchange `[[0, 1], [1, 0]]`.
    pub fn swap(grid: &Arc<MomentumGrid>) -> Result<Self> {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        Self::block_matrix("swap", grid, [[z, o], [o, z]])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn linearity(&self) -> Linearity {
        self.linearity
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn block_structure(&self) -> Option<&str> {
        self.block_structure.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn check_grid(&self, grid: &MomentumGrid) -> Result<()> {
        if std::ptr::eq(self.grid.as_ref(), grid) || self.grid.same_lattice(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn apply(&self, psi: &State) -> Result<State> {
        self.check_grid(psi.grid())?;
        Ok((self.action)(psi))
    }

    /// Apply without the grid check; callers guarantee compatibility.
    pub(crate) fn act(&self, psi: &State) -> State {
        (self.action)(psi)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ParticleOperator) -> Result<Self> {
        self.check_grid(&other.grid)?;
        let a = Arc::clone(&self.action);
        let b = Arc::clone(&other.action);
        Ok(ParticleOperator {
            label: format!("{}∘{}", self.label, other.label),
            linearity: self.linearity.compose(other.linearity),
            grid: Arc::clone(&self.grid),
            action: Arc::new(move |psi| a(&b(psi))),
            block_structure: None,
        })
    }

    fn combine(&self, other: &ParticleOperator, sign: f64, sym: &str) -> Result<Self> {
        self.check_grid(&other.grid)?;
        if self.linearity != other.linearity {
            return Err(Error::LinearityMismatch(self.label.clone(), other.label.clone()));
        }
        let a = Arc::clone(&self.action);
        let b = Arc::clone(&other.action);
        Ok(ParticleOperator {
            label: format!("({} {sym} {})", self.label, other.label),
            linearity: self.linearity,
            grid: Arc::clone(&self.grid),
            action: Arc::new(move |psi| {
                let x = a(psi);
                let y = b(psi);
                x.zip_with(&y, |u, v| u + v * sign)
            }),
            block_structure: None,
        })
    }

    pub fn plus(&self, other: &ParticleOperator) -> Result<Self> {
        self.combine(other, 1.0, "+")
    }

    pub fn minus(&self, other: &ParticleOperator) -> Result<Self> {
        self.combine(other, -1.0, "-")
    }

    /// `value * self` (the scalar multiplies the output).
    pub fn scaled(&self, value: Complex64) -> Self {
        let a = Arc::clone(&self.action);
        ParticleOperator {
            label: format!("({value})*{}", self.label),
            linearity: self.linearity,
            grid: Arc::clone(&self.grid),
            action: Arc::new(move |psi| a(psi).scaled(value)),
            block_structure: None,
        }
    }

    /// `[self, other] = self∘other - other∘self`; both must be linear.
    pub fn commutator(&self, other: &ParticleOperator) -> Result<Self> {
        require_linear(self, "commutator")?;
        require_linear(other, "commutator")?;
        self.compose(other)?
            .minus(&other.compose(self)?)
            .map(|op| op.with_label(format!("[{}, {}]", self.label, other.label)))
    }

    /// Largest deviation from the declared (conjugate-)linearity over
    /// randomized probes, relative to the output scale.
    pub fn linearity_defect(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let psi = random_smooth_state(&self.grid, &mut rng);
            let phi = random_smooth_state(&self.grid, &mut rng);
            let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let beta = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (ca, cb) = match self.linearity {
                Linearity::Linear => (alpha, beta),
                Linearity::ConjugateLinear => (alpha.conj(), beta.conj()),
            };
            let mixed = psi.scaled(alpha).zip_with(&phi, |u, v| u + beta * v);
            let lhs = self.act(&mixed);
            let a = self.act(&psi);
            let b = self.act(&phi);
            let rhs = a.zip_with(&b, |u, v| ca * u + cb * v);
            let scale = a.norm() + b.norm() + f64::MIN_POSITIVE;
            worst = worst.max(lhs.zip_with(&rhs, |u, v| u - v).norm() / scale);
        }
        worst
    }
}

/// Evaluate `symbol(block, p, p0)` in amplitude layout.
pub fn tabulate<F>(grid: &MomentumGrid, symbol: F) -> Vec<Complex64>
where
    F: Fn(usize, [f64; 3], f64) -> Complex64,
{
    let mut t = Vec::with_capacity(grid.len());
    for b in 0..grid.blocks() {
        t.extend(grid.coords().iter().zip(grid.energy()).map(|(&p, &e)| symbol(b, p, e)));
    }
    t
}

fn multiply(psi: &State, table: &[Complex64]) -> State {
    psi.with_amplitudes(psi.amplitudes().iter().zip(table).map(|(a, t)| a * t).collect())
}

fn random_smooth_state(grid: &Arc<MomentumGrid>, rng: &mut ChaCha8Rng) -> State {
    let s = grid.p_max() / 6.0;
    let center: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.5..0.5) * s);
    let x0: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0) / s);
    let w: Vec<Complex64> = (0..grid.blocks())
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    State::from_fn(grid, |b, p| {
        let d2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
        let phase: f64 = (0..3).map(|a| x0[a] * p[a]).sum();
        w[b] * Complex64::from_polar((-d2 / (2.0 * s * s)).exp(), phase)
    })
}

fn require_linear(op: &ParticleOperator, context: &'static str) -> Result<()> {
    if op.linearity.is_linear() {
        Ok(())
    } else {
        Err(Error::ConjugateLinearOperand {
            context,
            label: op.label.clone(),
        })
    }
}

/// A labelled, normalized test state.
#[derive(Clone, Debug)]
pub struct Sample {
    pub label: String,
    pub state: State,
}

impl Sample {
    pub fn new(label: impl Into<String>, state: State) -> Self {
        Sample {
            label: label.into(),
            state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_relative_residual: f64,
    pub mean_relative_residual: f64,
    pub sample_count: usize,
    pub state_descriptions: Vec<String>,
}

/// `f64::max` that lets a NaN through instead of dropping it, so a broken
/// sample cannot hide behind a finite one.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

impl ResidualStats {
    /// Per-sample values are reduced serially in sample order, so results
    /// do not depend on thread scheduling.
    pub fn from_values(values: &[f64], descriptions: Vec<String>) -> Self {
        let max = values.iter().cloned().fold(0.0, nan_max);
        let mean = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        ResidualStats {
            max_relative_residual: max,
            mean_relative_residual: mean,
            sample_count: values.len(),
            state_descriptions: descriptions,
        }
    }

    pub fn max(&self) -> f64 {
        self.max_relative_residual
    }
}

fn check_samples(samples: &[Sample], grid: &MomentumGrid) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    for s in samples {
        if !s.state.grid().same_lattice(grid) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// `max / mean` over samples of `|defect(psi)| / |psi|`.
pub fn residual_over_samples<F>(samples: &[Sample], defect: F) -> Result<ResidualStats>
where
    F: Fn(&State) -> State + Sync,
{
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let values: Vec<f64> = samples
        .par_iter()
        .map(|s| defect(&s.state).norm() / s.state.norm())
        .collect();
    Ok(ResidualStats::from_values(
        &values,
        samples.iter().map(|s| s.label.clone()).collect(),
    ))
}

/// Statistics of `|([A, B] - C) psi|` over the samples.
pub fn commutator_residual(
    a: &ParticleOperator,
    b: &ParticleOperator,
    expected: &ParticleOperator,
    samples: &[Sample],
) -> Result<ResidualStats> {
    require_linear(a, "commutator_residual")?;
    require_linear(b, "commutator_residual")?;
    require_linear(expected, "commutator_residual")?;
    a.check_grid(&b.grid)?;
    a.check_grid(&expected.grid)?;
    check_samples(samples, &a.grid)?;
    residual_over_samples(samples, |psi| {
        let ab = a.act(&b.act(psi));
        let ba = b.act(&a.act(psi));
        let cc = expected.act(psi);
        let mut out = ab.into_amplitudes();
        for ((o, x), y) in out.iter_mut().zip(ba.amplitudes()).zip(cc.amplitudes()) {
            *o -= x + y;
        }
        psi.with_amplitudes(out)
    })
}

/// Statistics of `|<phi, A psi> - <A phi, psi>|` over all sample pairs
/// (including each sample with itself).
pub fn adjoint_residual(a: &ParticleOperator, samples: &[Sample]) -> Result<ResidualStats> {
    require_linear(a, "adjoint_residual")?;
    check_samples(samples, &a.grid)?;
    let images: Vec<State> = samples.par_iter().map(|s| a.act(&s.state)).collect();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..samples.len() {
        for j in i..samples.len() {
            let lhs = inner_unchecked(&samples[i].state, &images[j]);
            let rhs = inner_unchecked(&images[i], &samples[j].state);
            let scale = samples[i].state.norm() * samples[j].state.norm();
            values.push((lhs - rhs).norm() / scale);
            labels.push(format!("({}, {})", samples[i].label, samples[j].label));
        }
    }
    Ok(ResidualStats::from_values(&values, labels))
}

/// Statistics of `|(A - B) psi|`; `A` and `B` must share linearity.
pub fn identity_residual(a: &ParticleOperator, b: &ParticleOperator, samples: &[Sample]) -> Result<ResidualStats> {
    if a.linearity != b.linearity {
        return Err(Error::LinearityMismatch(a.label.clone(), b.label.clone()));
    }
    a.check_grid(&b.grid)?;
    check_samples(samples, &a.grid)?;
    residual_over_samples(samples, |psi| {
        let x = a.act(psi);
        let y = b.act(psi);
        x.zip_with(&y, |u, v| u - v)
    })
}

/// Residuals at or below this floor are treated as exact.
pub const MACHINE_FLOOR: f64 = 1e-12;

/// Observed order `log(r_coarse / r_fine) / log(n_fine / n_coarse)`; `None`
/// when both residuals sit on the machine floor.
pub fn convergence_order(n_coarse: usize, r_coarse: f64, n_fine: usize, r_fine: f64) -> Option<f64> {
    if r_coarse <= MACHINE_FLOOR && r_fine <= MACHINE_FLOOR {
        return None;
    }
    let r_fine = r_fine.max(f64::MIN_POSITIVE);
    Some((r_coarse / r_fine).ln() / (n_fine as f64 / n_coarse as f64).ln())
}

/// Free function form of [`ParticleOperator::compose`].
pub fn compose(a: &ParticleOperator, b: &ParticleOperator) -> Result<ParticleOperator> {
    a.compose(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, Packet};

    fn grid(n: usize, mass: f64, blocks: usize) -> Arc<MomentumGrid> {
        Arc::new(MomentumGrid::new(n, 6.0, mass, blocks).unwrap())
    }

    fn samples(g: &Arc<MomentumGrid>) -> Vec<Sample> {
        let w = vec![c(1.0, 0.0); g.blocks()];
        let packets = [
            Packet::new([0.0; 3], 1.0).displaced([0.4, -0.2, 0.1]),
            Packet::new([0.5, 0.3, -0.2], 1.0),
            Packet::new([-0.3, 0.2, 0.6], 0.9).displaced([-0.3, 0.0, 0.5]),
        ];
        packets
            .iter()
            .enumerate()
            .map(|(i, p)| Sample::new(format!("g{i}"), p.build(g, &w).unwrap()))
            .collect()
    }

    fn p1(g: &Arc<MomentumGrid>) -> ParticleOperator {
        ParticleOperator::multiplication("p1", g, |_, p, _| c(p[0], 0.0))
    }

    #[test]
    fn conjugation_squares_to_identity() {
        let g = grid(8, 1.0, 1);
        let k = ParticleOperator::conjugation(&g);
        let kk = k.compose(&k).unwrap();
        assert_eq!(kk.linearity(), Linearity::Linear);
        let r = identity_residual(&kk, &ParticleOperator::identity(&g), &samples(&g)).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn conjugation_is_antilinear() {
        let g = grid(8, 1.0, 1);
        let k = ParticleOperator::conjugation(&g);
        let i1 = ParticleOperator::scalar(&g, c(0.0, 1.0));
        let lhs = k.compose(&i1).unwrap();
        assert_eq!(lhs.linearity(), Linearity::ConjugateLinear);
        let rhs = k.scaled(c(0.0, -1.0));
        let r = identity_residual(&lhs, &rhs, &samples(&g)).unwrap();
        assert_eq!(r.max(), 0.0);
        assert!(k.linearity_defect(4, 7) < 1e-14);
    }

    #[test]
    fn parity_anticommutes_with_odd_symbol() {
        let g = grid(8, 1.0, 1);
        let y = ParticleOperator::parity(&g);
        let a = y.compose(&p1(&g)).unwrap();
        let b = p1(&g).compose(&y).unwrap().scaled(c(-1.0, 0.0));
        assert_eq!(identity_residual(&a, &b, &samples(&g)).unwrap().max(), 0.0);
    }

    #[test]
    fn commuting_multiplications() {
        let g = grid(16, 1.0, 1);
        let zero = ParticleOperator::scalar(&g, c(0.0, 0.0));
        let r = commutator_residual(&p1(&g), &p1(&g), &zero, &samples(&g)).unwrap();
        assert!(r.max() <= 1e-12);
        assert_eq!(r.sample_count, 3);
    }

    #[test]
    fn wrong_identity_is_flagged() {
        let g = grid(16, 1.0, 1);
        let p2 = ParticleOperator::multiplication("p2", &g, |_, p, _| c(p[1], 0.0));
        let i1 = ParticleOperator::scalar(&g, c(0.0, 1.0));
        let r = commutator_residual(&p1(&g), &p2, &i1, &samples(&g)).unwrap();
        assert!((r.max() - 1.0).abs() < 1e-12);
    }

    fn newton_wigner_1(g: &Arc<MomentumGrid>) -> ParticleOperator {
        ParticleOperator::first_order(
            "F1",
            g,
            StencilOrder::Fourth,
            |axis, _, _, _| if axis == 0 { c(0.0, 1.0) } else { c(0.0, 0.0) },
            |_, p, e| c(0.0, -p[0] / (2.0 * e * e)),
        )
    }

    #[test]
    fn canonical_commutator_converges() {
        let mut res = Vec::new();
        for n in [16, 32] {
            let g = grid(n, 1.0, 1);
            let i1 = ParticleOperator::scalar(&g, c(0.0, 1.0));
            res.push(
                commutator_residual(&newton_wigner_1(&g), &p1(&g), &i1, &samples(&g))
                    .unwrap()
                    .max(),
            );
        }
        let order = (res[0] / res[1]).log2();
        assert!(order > 3.0, "order {order}, residuals {res:?}");
    }

    #[test]
    fn commutator_rejects_antilinear() {
        let g = grid(8, 1.0, 1);
        let k = ParticleOperator::conjugation(&g);
        let zero = ParticleOperator::scalar(&g, c(0.0, 0.0));
        assert!(matches!(
            commutator_residual(&k, &p1(&g), &zero, &samples(&g)),
            Err(Error::ConjugateLinearOperand { .. })
        ));
    }

    #[test]
    fn adjoint_of_real_multiplication_is_exact() {
        let g = grid(16, 1.0, 1);
        let p0 = ParticleOperator::multiplication("p0", &g, |_, _, e| c(e, 0.0));
        assert!(adjoint_residual(&p0, &samples(&g)).unwrap().max() <= 1e-12);
    }

    #[test]
    fn boost_symmetric_under_invariant_measure_but_plain_derivative_is_not() {
        let mut boost = Vec::new();
        let mut plain = Vec::new();
        for n in [16, 32] {
            let g = grid(n, 1.0, 1);
            let k1 = ParticleOperator::first_order(
                "K1",
                &g,
                StencilOrder::Fourth,
                |axis, _, _, e| if axis == 0 { c(0.0, e) } else { c(0.0, 0.0) },
                |_, _, _| c(0.0, 0.0),
            );
            let id1 = ParticleOperator::derivative(&g, 0, StencilOrder::Fourth).scaled(c(0.0, 1.0));
            boost.push(adjoint_residual(&k1, &samples(&g)).unwrap().max());
            plain.push(adjoint_residual(&id1, &samples(&g)).unwrap().max());
        }
        assert!((boost[0] / boost[1]).log2() > 3.0, "{boost:?}");
        // the uncorrected derivative keeps an O(1) defect
        assert!(plain[1] > 1e-2 && plain[1] / plain[0] > 0.5, "{plain:?}");
    }

    #[test]
    fn newton_wigner_symmetry_repairs_the_defect() {
        let g = grid(32, 1.0, 1);
        let r = adjoint_residual(&newton_wigner_1(&g), &samples(&g)).unwrap();
        assert!(r.max() < 1e-3, "{r:?}");
    }

    #[test]
    fn identity_residual_rejects_mixed_linearity() {
        let g = grid(8, 1.0, 1);
        let k = ParticleOperator::conjugation(&g);
        let one = ParticleOperator::identity(&g);
        assert!(identity_residual(&k, &one, &samples(&g)).is_err());
    }

    #[test]
    fn parity_and_conjugation_commute() {
        let g = grid(8, 1.0, 2);
        let k = ParticleOperator::conjugation(&g);
        let y = ParticleOperator::parity(&g);
        let r = identity_residual(&k.compose(&y).unwrap(), &y.compose(&k).unwrap(), &samples(&g));
        assert_eq!(r.unwrap().max(), 0.0);
    }

    #[test]
    fn block_matrix_requires_two_blocks() {
        let g = grid(8, 1.0, 1);
        assert!(ParticleOperator::swap(&g).is_err());
    }

    #[test]
    fn compose_rejects_foreign_grid() {
        let a = ParticleOperator::identity(&grid(8, 1.0, 1));
        let b = ParticleOperator::identity(&grid(10, 1.0, 1));
        assert!(matches!(a.compose(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn linear_operators_pass_probes() {
        let g = grid(8, 1.0, 2);
        let ops = [
            ParticleOperator::derivative(&g, 1, StencilOrder::Fourth),
            ParticleOperator::swap(&g).unwrap(),
            p1(&g),
        ];
        for op in ops {
            assert!(op.linearity_defect(3, 11) < 1e-13, "{}", op.label());
        }
    }

    #[test]
    fn gaussian_helper_is_normalized() {
        let g = grid(16, 1.0, 1);
        let s = gaussian_packet(&g, [0.1, 0.0, 0.0], 1.0, &[c(1.0, 0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn compose_is_associative(seed in 0u64..1000, axis in 0usize..3) {
                let g = grid(8, 1.0, 2);
                let a = ParticleOperator::derivative(&g, axis, StencilOrder::Fourth);
                let b = ParticleOperator::conjugation(&g);
                let s = ParticleOperator::swap(&g).unwrap();
                let left = a.compose(&b).unwrap().compose(&s).unwrap();
                let right = a.compose(&b.compose(&s).unwrap()).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_smooth_state(&g, &mut rng);
                let d = left.act(&psi).zip_with(&right.act(&psi), |u, v| u - v);
                prop_assert!(d.max_abs() <= 1e-12 * (1.0 + psi.max_abs()));
            }

            #[test]
            fn conjugate_linear_scaling(re in -2.0f64..2.0, im in -2.0f64..2.0, seed in 0u64..100) {
                let g = grid(8, 1.0, 1);
                let t = ParticleOperator::conjugation(&g).compose(&ParticleOperator::parity(&g)).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let psi = random_smooth_state(&g, &mut rng);
                let alpha = c(re, im);
                let lhs = t.act(&psi.scaled(alpha));
                let rhs = t.act(&psi).scaled(alpha.conj());
                prop_assert!(lhs.zip_with(&rhs, |u, v| u - v).max_abs() <= 1e-12);
            }
        }
    }
}
