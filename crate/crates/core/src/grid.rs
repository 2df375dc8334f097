//! Discretized momentum space.
//!
//! The lattice is cell-centered and symmetric: along every axis the nodes sit
//! at `-p_max + (i + 1/2) h`, so no node lies on a coordinate plane and
//! `p -> -p` is an exact permutation of the node set. All quadrature uses the
//! invariant weight `h^3 / p0`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of the central finite-difference stencils used for `d/dp_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn order(self) -> u32 {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            other => Err(Error::Precondition(format!(
                "stencil order must be 2 or 4, got {other}"
            ))),
        }
    }

    /// Number of nodes the stencil reaches on either side of its center.
    pub fn half_width(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }
}

impl Default for StencilOrder {
    fn default() -> Self {
        StencilOrder::Fourth
    }
}

#[derive(Debug)]
pub struct MomentumGrid {
    n: usize,
    p_max: f64,
    spacing: f64,
    mass: f64,
    blocks: usize,
    fiber_dim: usize,
    axis: Vec<f64>,
    coords: Vec<[f64; 3]>,
    energy: Vec<f64>,
    weight: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(n: usize, p_max: f64, mass: f64, blocks: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidResolution(n));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::InvalidCutoff(p_max));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidMass(mass));
        }
        if blocks != 1 && blocks != 2 {
            return Err(Error::InvalidBlocks(blocks));
        }
        let spacing = 2.0 * p_max / n as f64;
        // build the upper half and mirror it so that reflection is bit-exact
        let upper: Vec<f64> = (0..n / 2).map(|i| (i as f64 + 0.5) * spacing).collect();
        let axis: Vec<f64> = upper.iter().rev().map(|x| -x).chain(upper.iter().copied()).collect();
        let mut coords = Vec::with_capacity(n * n * n);
        for &a in &axis {
            for &b in &axis {
                for &c in &axis {
                    coords.push([a, b, c]);
                }
            }
        }
        let energy: Vec<f64> = coords
            .iter()
            .map(|p| (mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .collect();
        let cell = spacing * spacing * spacing;
        let weight = energy.iter().map(|e| cell / e).collect();
        Ok(MomentumGrid {
            n,
            p_max,
            spacing,
            mass,
            blocks,
            fiber_dim: 1,
            axis,
            coords,
            energy,
            weight,
        })
    }

    /// Same lattice and mass with a different block count.
    pub fn with_blocks(&self, blocks: usize) -> Result<Self> {
        MomentumGrid::new(self.n, self.p_max, self.mass, blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Number of lattice nodes `n^3`.
    pub fn nodes(&self) -> usize {
        self.coords.len()
    }

    /// Length of a state vector: blocks x fiber x nodes.
    pub fn len(&self) -> usize {
        self.blocks * self.fiber_dim * self.nodes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    /// `p0 = sqrt(mu^2 + |p|^2)` per node.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    /// Quadrature weight `h^3 / p0` per node.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Flat index of the node at `-p`. Reversing the lexicographic order
    /// reverses every axis at once.
    pub fn mirror(&self, node: usize) -> usize {
        self.nodes() - 1 - node
    }

    /// Stride of `axis` in the flat node index.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            2 => 1,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    pub fn same_lattice(&self, other: &MomentumGrid) -> bool {
        self.n == other.n && self.p_max == other.p_max && self.mass == other.mass && self.blocks == other.blocks
    }
}

/// Complex amplitudes over (block, fiber, node), tied to a grid.
#[derive(Clone, Debug)]
pub struct State {
    grid: Arc<MomentumGrid>,
    amps: Vec<Complex64>,
}

impl State {
    pub fn zeros(grid: &Arc<MomentumGrid>) -> Self {
        State {
            grid: Arc::clone(grid),
            amps: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_amplitudes(grid: &Arc<MomentumGrid>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "amplitude vector has length {}, grid expects {}",
                amps.len(),
                grid.len()
            )));
        }
        Ok(State {
            grid: Arc::clone(grid),
            amps,
        })
    }

    /// Fill from `f(block, p)`.
    pub fn from_fn<F>(grid: &Arc<MomentumGrid>, f: F) -> Self
    where
        F: Fn(usize, [f64; 3]) -> Complex64,
    {
        let mut amps = Vec::with_capacity(grid.len());
        for b in 0..grid.blocks() {
            amps.extend(grid.coords().iter().map(|&p| f(b, p)));
        }
        State {
            grid: Arc::clone(grid),
            amps,
        }
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn block(&self, b: usize) -> &[Complex64] {
        let m = self.grid.nodes();
        &self.amps[b * m..(b + 1) * m]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [Complex64] {
        let m = self.grid.nodes();
        &mut self.amps[b * m..(b + 1) * m]
    }

    /// Copy of the state with every block except `b` zeroed.
    pub fn restrict_to_block(&self, b: usize) -> State {
        let m = self.grid.nodes();
        let mut out = State::zeros(&self.grid);
        out.amps[b * m..(b + 1) * m].copy_from_slice(self.block(b));
        out
    }

    pub fn same_grid(&self, other: &State) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_lattice(&other.grid)
    }

    fn check_grid(&self, other: &State) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `<self, other>` with the invariant weight; conjugate-linear in `self`.
    pub fn inner(&self, other: &State) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(inner_unchecked(self, other))
    }

    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.weight();
        let m = self.grid.nodes();
        self.amps.iter().enumerate().map(|(i, a)| a.norm_sqr() * w[i % m]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn block_norm_sqr(&self, b: usize) -> f64 {
        let w = self.grid.weight();
        self.block(b).iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum()
    }

    pub fn normalized(mut self) -> Result<State> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Precondition("cannot normalize a zero state".into()));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    pub fn conj(&self) -> State {
        State {
            grid: Arc::clone(&self.grid),
            amps: self.amps.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> State {
        State {
            grid: Arc::clone(&self.grid),
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn try_add(&self, other: &State) -> Result<State> {
        self.check_grid(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &State) -> Result<State> {
        self.check_grid(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &State) -> Result<State> {
        self.check_grid(other)?;
        Ok(self.zip_with(other, |a, b| a + c * b))
    }

    /// Largest amplitude modulus (flat, unweighted).
    pub fn max_abs(&self) -> f64 {
        self.amps.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    pub(crate) fn zip_with<F>(&self, other: &State, f: F) -> State
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        State {
            grid: Arc::clone(&self.grid),
            amps: self.amps.iter().zip(&other.amps).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub(crate) fn with_amplitudes(&self, amps: Vec<Complex64>) -> State {
        debug_assert_eq!(amps.len(), self.amps.len());
        State {
            grid: Arc::clone(&self.grid),
            amps,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "State(n={}, blocks={}, norm={:.6e})",
            self.grid.n(),
            self.grid.blocks(),
            self.norm()
        )
    }
}

// Operator impls on references panic on grid mismatch; the `try_*` methods
// are the fallible equivalents.
impl Add for &State {
    type Output = State;
    fn add(self, rhs: &State) -> State {
        self.try_add(rhs).expect("grid mismatch in state addition")
    }
}

impl Sub for &State {
    type Output = State;
    fn sub(self, rhs: &State) -> State {
        self.try_sub(rhs).expect("grid mismatch in state subtraction")
    }
}

impl Mul<Complex64> for &State {
    type Output = State;
    fn mul(self, rhs: Complex64) -> State {
        self.scaled(rhs)
    }
}

impl Neg for &State {
    type Output = State;
    fn neg(self) -> State {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

pub(crate) fn inner_unchecked(a: &State, b: &State) -> Complex64 {
    let w = a.grid.weight();
    let m = a.grid.nodes();
    a.amps
        .iter()
        .zip(&b.amps)
        .enumerate()
        .map(|(i, (x, y))| x.conj() * y * w[i % m])
        .sum()
}

/// `<phi, psi>` with the invariant weight `h^3 / p0`.
pub fn inner_product(phi: &State, psi: &State) -> Result<Complex64> {
    phi.inner(psi)
}

// One-sided closures for the two nodes nearest the lower boundary; the upper
// boundary uses the mirrored rows with opposite sign.
const FOURTH_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const FOURTH_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const SECOND_EDGE0: [f64; 3] = [-3.0, 4.0, -1.0];

/// Derivative along one lattice line. `line` is read through `get(i)`.
///
/// Every node value is evaluated in a way that is exactly antisymmetric under
/// reversal of the line, so the stencil anticommutes with parity bit for bit.
fn differentiate_line<G>(order: StencilOrder, n: usize, inv_h: f64, get: G, out: &mut [Complex64])
where
    G: Fn(usize) -> Complex64,
{
    match order {
        StencilOrder::Fourth => {
            let scale = inv_h / 12.0;
            let edge = |row: &[f64; 5], at: &dyn Fn(usize) -> Complex64| {
                row.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc + at(k) * *c)
            };
            out[0] = edge(&FOURTH_EDGE0, &|k| get(k)) * scale;
            out[1] = edge(&FOURTH_EDGE1, &|k| get(k)) * scale;
            out[n - 1] = -edge(&FOURTH_EDGE0, &|k| get(n - 1 - k)) * scale;
            out[n - 2] = -edge(&FOURTH_EDGE1, &|k| get(n - 1 - k)) * scale;
            for i in 2..n - 2 {
                let near = get(i + 1) - get(i - 1);
                let far = get(i + 2) - get(i - 2);
                out[i] = (near * 8.0 - far) * scale;
            }
        }
        StencilOrder::Second => {
            let scale = inv_h / 2.0;
            let edge = |at: &dyn Fn(usize) -> Complex64| {
                SECOND_EDGE0
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc + at(k) * *c)
            };
            out[0] = edge(&|k| get(k)) * scale;
            out[n - 1] = -edge(&|k| get(n - 1 - k)) * scale;
            for i in 1..n - 1 {
                out[i] = (get(i + 1) - get(i - 1)) * scale;
            }
        }
    }
}

/// Finite-difference `d psi / d p_axis` (axis is 0-based) on every block.
pub fn derivative(psi: &State, axis: usize, order: StencilOrder) -> State {
    let grid = psi.grid();
    let n = grid.n();
    let stride = grid.stride(axis);
    let inv_h = 1.0 / grid.spacing();
    let m = grid.nodes();
    let src = psi.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for b in 0..grid.blocks() * grid.fiber_dim() {
        let base = b * m;
        for start in 0..m {
            // a line starts wherever the axis coordinate is zero
            if (start / stride) % n != 0 {
                continue;
            }
            let origin = base + start;
            differentiate_line(order, n, inv_h, |i| src[origin + i * stride], &mut line);
            for (i, v) in line.iter().enumerate() {
                out[origin + i * stride] = *v;
            }
        }
    }
    psi.with_amplitudes(out)
}

/// `(parity psi)(p) = psi(-p)`: an exact permutation of the amplitudes.
pub fn parity(psi: &State) -> State {
    let m = psi.grid().nodes();
    let mut out = Vec::with_capacity(psi.amplitudes().len());
    for b in 0..psi.grid().blocks() * psi.grid().fiber_dim() {
        out.extend(psi.amplitudes()[b * m..(b + 1) * m].iter().rev());
    }
    psi.with_amplitudes(out)
}

/// Normalized Gaussian `exp(-|p - center|^2 / (2 sigma^2))` with the given
/// per-block weights. Requires `|center| + 3 sigma < p_max`.
pub fn gaussian_packet(
    grid: &Arc<MomentumGrid>,
    center: [f64; 3],
    sigma: f64,
    block_weights: &[Complex64],
) -> Result<State> {
    Packet::new(center, sigma).build(grid, block_weights)
}

/// Test-state recipe: a Gaussian optionally multiplied by
/// `(p1^2 + p2^2)^axial_power` (vanishing on the p3 axis, needed wherever the
/// massless symbols are singular) and by a plane-wave phase `exp(-i x0.p)`
/// that displaces the packet in position space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub center: [f64; 3],
    pub sigma: f64,
    pub axial_power: u32,
    pub displacement: [f64; 3],
}

impl Packet {
    pub fn new(center: [f64; 3], sigma: f64) -> Self {
        Packet {
            center,
            sigma,
            axial_power: 0,
            displacement: [0.0; 3],
        }
    }

    pub fn with_axial_power(mut self, k: u32) -> Self {
        self.axial_power = k;
        self
    }

    pub fn displaced(mut self, x0: [f64; 3]) -> Self {
        self.displacement = x0;
        self
    }

    /// Radius beyond which the packet is negligible: the envelope peak plus
    /// three widths.
    pub fn support_radius(&self) -> f64 {
        let c = self.center.iter().map(|x| x * x).sum::<f64>().sqrt();
        c + (2.0 * self.axial_power as f64).sqrt() * self.sigma + 3.0 * self.sigma
    }

    pub fn check_support(&self, p_max: f64) -> Result<()> {
        let r = self.support_radius();
        if r < p_max {
            Ok(())
        } else {
            Err(Error::BoundarySupport {
                excursion: r - p_max,
                limit: p_max,
            })
        }
    }

    pub fn amplitude(&self, p: [f64; 3]) -> Complex64 {
        let d2: f64 = (0..3).map(|a| (p[a] - self.center[a]).powi(2)).sum();
        let mut v = (-d2 / (2.0 * self.sigma * self.sigma)).exp();
        if self.axial_power > 0 {
            v *= (p[0] * p[0] + p[1] * p[1]).powi(self.axial_power as i32);
        }
        let phase: f64 = -(0..3).map(|a| self.displacement[a] * p[a]).sum::<f64>();
        Complex64::from_polar(v, phase)
    }

    pub fn build(&self, grid: &Arc<MomentumGrid>, block_weights: &[Complex64]) -> Result<State> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Precondition(format!(
                "packet width must be positive, got {}",
                self.sigma
            )));
        }
        if block_weights.len() != grid.blocks() {
            return Err(Error::Precondition(format!(
                "{} block weights given for a {}-block grid",
                block_weights.len(),
                grid.blocks()
            )));
        }
        self.check_support(grid.p_max())?;
        State::from_fn(grid, |b, p| block_weights[b] * self.amplitude(p)).normalized()
    }
}
