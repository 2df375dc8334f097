//! Newton–Wigner position operator, covariance residuals and the
//! localizability experiment for massless two-block triplets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::grid::{inner_unchecked, MomentumGrid, State, StencilOrder};
use crate::opcalc::{convergence_order, tabulate, ParticleOperator, ResidualStats, Sample};
use crate::triplets::{make_triplet, ClassTag, TransformerTriplet};

/// Fraction of `|m|` the rotation defect must stay above, at every
/// resolution, for an obstruction verdict. Frozen from the `m = 2` run on
/// the ladder 16, 24, 32 at `p_max = 6`: the optimized defect levels off at
/// about `0.066 |m|` (raw `0.19 |m|`), and `m = 4` gives the same ratios.
pub const OBSTRUCTION_THRESHOLD: f64 = 0.05;

/// Largest decay order between the two finest resolutions still counted
/// as "non-decaying".
pub const NON_DECAY_ORDER: f64 = 0.5;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
    match (j, k, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Three position components acting identically on every block.
#[derive(Clone, Debug)]
pub struct PositionOperator {
    pub q: [ParticleOperator; 3],
    pub blocks: usize,
}

/// `F_j = i d/dp_j - i p_j / (2 p0^2)` on every block.
pub fn newton_wigner(grid: &Arc<MomentumGrid>, order: StencilOrder) -> PositionOperator {
    corrected_position(grid, order, |_, _, _, _| c(0.0, 0.0))
}

/// Newton–Wigner plus a multiplicative correction `delta(k, block, p, p0)`.
pub fn corrected_position<D>(grid: &Arc<MomentumGrid>, order: StencilOrder, delta: D) -> PositionOperator
where
    D: Fn(usize, usize, [f64; 3], f64) -> Complex64,
{
    let q = std::array::from_fn(|j| {
        ParticleOperator::first_order(
            format!("Q{}", j + 1),
            grid,
            order,
            move |axis, _, _, _| if axis == j { c(0.0, 1.0) } else { c(0.0, 0.0) },
            |b, p, e| c(0.0, -p[j] / (2.0 * e * e)) + delta(j, b, p, e),
        )
    });
    PositionOperator {
        q,
        blocks: grid.blocks(),
    }
}

/// Residuals of commutativity, the canonical relation, rotation covariance
/// and the two inversion relations `TQ = QT`, `SQ = -QS`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceResiduals {
    pub commutativity: ResidualStats,
    pub canonical: ResidualStats,
    pub rotation: ResidualStats,
    pub time_reversal: Option<ResidualStats>,
    pub space_inversion: Option<ResidualStats>,
}

fn pooled<F>(pairs: &[(usize, usize)], samples: &[Sample], defect: F) -> Result<ResidualStats>
where
    F: Fn(usize, usize, &State) -> State + Sync,
{
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for &(a, b) in pairs {
        let per: Vec<f64> = samples
            .par_iter()
            .map(|s| defect(a, b, &s.state).norm() / s.state.norm())
            .collect();
        for (v, s) in per.iter().zip(samples) {
            values.push(*v);
            labels.push(format!("({}, {}) {}", a + 1, b + 1, s.label));
        }
    }
    Ok(ResidualStats::from_values(&values, labels))
}

fn all_pairs() -> Vec<(usize, usize)> {
    (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect()
}

fn ordered_pairs() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (1, 2)]
}

/// The remaining index of a distinct pair.
fn third(j: usize, k: usize) -> Option<usize> {
    (j != k).then(|| 3 - j - k)
}

fn rotation_defect_state(j_op: &ParticleOperator, q: &PositionOperator, j: usize, k: usize, psi: &State) -> State {
    let mut out = &j_op.act(&q.q[k].act(psi)) - &q.q[k].act(&j_op.act(psi));
    if let Some(l) = third(j, k) {
        let e = levi_civita(j, k, l);
        out = &out - &q.q[l].act(psi).scaled(c(0.0, e));
    }
    out
}

pub fn covariance_residuals(
    triplet: &TransformerTriplet,
    q: &PositionOperator,
    samples: &[Sample],
) -> Result<CovarianceResiduals> {
    if !triplet.grid().same_lattice(q.q[0].grid()) || q.blocks != triplet.grid().blocks() {
        return Err(Error::GridMismatch);
    }
    let commutativity = pooled(&ordered_pairs(), samples, |a, b, psi| {
        &q.q[a].act(&q.q[b].act(psi)) - &q.q[b].act(&q.q[a].act(psi))
    })?;
    let canonical = pooled(&all_pairs(), samples, |j, k, psi| {
        let mut out = &q.q[j].act(&triplet.p[k].act(psi)) - &triplet.p[k].act(&q.q[j].act(psi));
        if j == k {
            out = &out - &psi.scaled(c(0.0, 1.0));
        }
        out
    })?;
    let rotation = pooled(&all_pairs(), samples, |j, k, psi| {
        rotation_defect_state(&triplet.j[j], q, j, k, psi)
    })?;
    let inversion = |op: &Option<ParticleOperator>, sign: f64| -> Result<Option<ResidualStats>> {
        let Some(x) = op else { return Ok(None) };
        let pairs: Vec<(usize, usize)> = (0..3).map(|k| (k, k)).collect();
        pooled(&pairs, samples, |k, _, psi| {
            let a = x.act(&q.q[k].act(psi));
            let b = q.q[k].act(&x.act(psi));
            a.zip_with(&b, |u, v| u - sign * v)
        })
        .map(Some)
    };
    Ok(CovarianceResiduals {
        commutativity,
        canonical,
        rotation,
        time_reversal: inversion(&triplet.t, 1.0)?,
        space_inversion: inversion(&triplet.s, -1.0)?,
    })
}

/// `|(i [P0, Q_j] - P0 p_j / p0^2) psi|` pooled over `j` and samples: the
/// velocity is `p / p0` times the block's energy sign.
pub fn velocity_residual(
    triplet: &TransformerTriplet,
    q: &PositionOperator,
    samples: &[Sample],
) -> Result<ResidualStats> {
    let grid = triplet.grid();
    let v: Vec<ParticleOperator> = (0..3)
        .map(|j| {
            let sym = ParticleOperator::multiplication("p/p0^2", grid, move |_, p, e| c(p[j] / (e * e), 0.0));
            triplet.p0.compose(&sym)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..3).map(|k| (k, k)).collect();
    pooled(&pairs, samples, |j, _, psi| {
        let comm = &triplet.p0.act(&q.q[j].act(psi)) - &q.q[j].act(&triplet.p0.act(psi));
        comm.scaled(c(0.0, 1.0)).zip_with(&v[j].act(psi), |a, b| a - b)
    })
}

/// `mu (1 - |p|^2 / p0^2)^(-1/2)`, taking the `mu -> 0` limit `p0`.
pub fn kinetic_energy_symbol(mass: f64, p: [f64; 3], p0: f64) -> f64 {
    if mass == 0.0 {
        return p0;
    }
    let v2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (p0 * p0);
    mass / (1.0 - v2).sqrt()
}

/// Largest relative deviation of the kinetic-energy symbol from `p0`.
pub fn kinetic_energy_defect(grid: &MomentumGrid) -> f64 {
    grid.coords()
        .iter()
        .zip(grid.energy())
        .map(|(&p, &e)| (kinetic_energy_symbol(grid.mass(), p, e) - e).abs() / e)
        .fold(0.0, f64::max)
}

/// `<psi, E_kin psi>` (block-independent, so nonnegative for every state).
pub fn kinetic_energy_expectation(psi: &State) -> f64 {
    let grid = psi.grid();
    let mass = grid.mass();
    let sym = ParticleOperator::multiplication("E_kin", grid, move |_, p, e| c(kinetic_energy_symbol(mass, p, e), 0.0));
    inner_unchecked(psi, &sym.act(psi)).re
}

/// Scalar symbols spanning the massless correction search (functions of
/// `p` only; `p0 = |p|`).
pub fn massless_basis(p: [f64; 3], p0: f64) -> [f64; 10] {
    let r2 = p0 * p0;
    let rho2 = p[0] * p[0] + p[1] * p[1];
    let r4 = r2 * r2;
    [
        p[0] / r2,
        p[1] / r2,
        p[2] / r2,
        p[0] * p0 / rho2,
        p[1] * p0 / rho2,
        p[0] * p[2] / rho2,
        p[1] * p[2] / rho2,
        p[2].powi(3) / r4,
        p[0] * p[0] * p[2] / r4,
        p[1] * p[1] * p[2] / r4,
    ]
}

/// Scalar symbols for the Newton–Wigner uniqueness probe.
pub fn massive_basis(p: [f64; 3], p0: f64) -> [f64; 10] {
    let e2 = p0 * p0;
    [
        1.0,
        p[0] / e2,
        p[1] / e2,
        p[2] / e2,
        p[0] * p[0] / e2,
        p[0] * p[1] / e2,
        p[0] * p[2] / e2,
        p[1] * p[1] / e2,
        p[1] * p[2] / e2,
        p[2] * p[2] / e2,
    ]
}

pub const BASIS_LEN: usize = 10;

/// Real least squares `min |r0 + A c|` accumulated block-by-block in
/// normal-equation form (columns are dnu-weighted states).
struct NormalEquations {
    ata: DMatrix<f64>,
    atb: DVector<f64>,
    bb: f64,
}

impl NormalEquations {
    fn new(dim: usize) -> Self {
        NormalEquations {
            ata: DMatrix::zeros(dim, dim),
            atb: DVector::zeros(dim),
            bb: 0.0,
        }
    }

    fn add(&mut self, r0: &State, cols: &[(usize, State)]) {
        self.bb += r0.norm_sqr();
        let gram: Vec<(usize, usize, f64)> = (0..cols.len())
            .into_par_iter()
            .flat_map_iter(|x| (x..cols.len()).map(move |y| (x, y)))
            .map(|(x, y)| (cols[x].0, cols[y].0, inner_unchecked(&cols[x].1, &cols[y].1).re))
            .collect();
        for (p, q, v) in gram {
            self.ata[(p, q)] += v;
            if p != q {
                self.ata[(q, p)] += v;
            }
        }
        for (p, col) in cols {
            self.atb[*p] += inner_unchecked(col, r0).re;
        }
    }

    /// Jacobi-scaled pseudo-inverse solve; returns coefficients and the
    /// singular values of the scaled design matrix.
    fn solve(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.atb.len();
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let v = self.ata[(i, i)];
                if v > 0.0 {
                    1.0 / v.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let m = DMatrix::from_fn(n, n, |i, j| d[i] * self.ata[(i, j)] * d[j]);
        let rhs = DVector::from_fn(n, |i, _| -d[i] * self.atb[i]);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let y = svd
            .solve(&rhs, 1e-12 * smax.max(f64::MIN_POSITIVE))
            .unwrap_or_else(|_| DVector::zeros(n));
        let coeffs = (0..n).map(|i| d[i] * y[i]).collect();
        let sv = svd.singular_values.iter().map(|s| s.sqrt()).collect();
        (coeffs, sv)
    }
}

/// Rotation, commutativity and canonical defects of one position candidate
/// at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationDefects {
    pub n: usize,
    pub commutativity: f64,
    pub canonical: f64,
    pub rotation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Localizable,
    Obstructed,
    /// Neither decaying at the stencil order nor bounded below.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizabilityReport {
    pub m: i32,
    pub resolutions: Vec<usize>,
    pub p_max: f64,
    pub stencil_order: u32,
    /// Canonical block Newton–Wigner candidate.
    pub raw: Vec<RelationDefects>,
    /// Candidate after the least-squares multiplicative correction.
    pub optimized: Vec<RelationDefects>,
    /// Correction coefficients per resolution, indexed `k * 10 + i`.
    pub coefficients: Vec<Vec<f64>>,
    /// Decay orders of the raw rotation defect between consecutive
    /// resolutions.
    pub raw_orders: Vec<Option<f64>>,
    pub optimized_orders: Vec<Option<f64>>,
    pub threshold: f64,
    pub verdict: Verdict,
}

fn summarize(n: usize, cov: &CovarianceResiduals) -> RelationDefects {
    RelationDefects {
        n,
        commutativity: cov.commutativity.max(),
        canonical: cov.canonical.max(),
        rotation: cov.rotation.max(),
    }
}

fn block_sign(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Least-squares correction `Delta_k = s_b sum_i c_{k,i} phi_i` minimizing
/// the commutativity and rotation defects of block Newton–Wigner.
fn massless_correction(triplet: &TransformerTriplet, f: &PositionOperator, samples: &[Sample]) -> Result<Vec<f64>> {
    let grid = triplet.grid();
    let phis: Vec<ParticleOperator> = (0..BASIS_LEN)
        .map(|i| {
            let t = tabulate(grid, |b, p, e| c(block_sign(b) * massless_basis(p, e)[i], 0.0));
            ParticleOperator::multiplication_table(format!("phi{i}"), grid, t)
        })
        .collect::<Result<_>>()?;
    let mut ne = NormalEquations::new(3 * BASIS_LEN);
    for s in samples {
        let psi = &s.state;
        let fpsi: Vec<State> = f.q.iter().map(|q| q.act(psi)).collect();
        let jpsi: Vec<State> = triplet.j.iter().map(|j| j.act(psi)).collect();
        struct Pieces {
            phi_psi: State,
            f_phi: Vec<State>,
            j_phi: Vec<State>,
        }
        let pieces: Vec<Pieces> = phis
            .par_iter()
            .map(|phi| {
                let phi_psi = phi.act(psi);
                Pieces {
                    f_phi: f.q.iter().map(|q| q.act(&phi_psi)).collect(),
                    j_phi: triplet.j.iter().map(|j| j.act(&phi_psi)).collect(),
                    phi_psi,
                }
            })
            .collect();
        for (a, b) in ordered_pairs() {
            let r0 = &f.q[a].act(&fpsi[b]) - &f.q[b].act(&fpsi[a]);
            let mut cols = Vec::new();
            for (i, pc) in pieces.iter().enumerate() {
                // component b: [F_a, Delta_b]; component a: [Delta_a, F_b]
                cols.push((b * BASIS_LEN + i, &pc.f_phi[a] - &phis[i].act(&fpsi[a])));
                cols.push((a * BASIS_LEN + i, &phis[i].act(&fpsi[b]) - &pc.f_phi[b]));
            }
            ne.add(&r0, &cols);
        }
        for (j, k) in all_pairs() {
            let r0 = rotation_defect_state(&triplet.j[j], f, j, k, psi);
            let mut cols = Vec::new();
            for (i, pc) in pieces.iter().enumerate() {
                cols.push((k * BASIS_LEN + i, &pc.j_phi[j] - &phis[i].act(&jpsi[j])));
                if let Some(l) = third(j, k) {
                    let e = levi_civita(j, k, l);
                    cols.push((l * BASIS_LEN + i, pc.phi_psi.scaled(c(0.0, -e))));
                }
            }
            ne.add(&r0, &cols);
        }
    }
    Ok(ne.solve().0)
}

fn massless_position(grid: &Arc<MomentumGrid>, order: StencilOrder, coeffs: &[f64]) -> PositionOperator {
    let coeffs = coeffs.to_vec();
    corrected_position(grid, order, move |k, b, p, e| {
        let phi = massless_basis(p, e);
        let v: f64 = (0..BASIS_LEN).map(|i| coeffs[k * BASIS_LEN + i] * phi[i]).sum();
        c(block_sign(b) * v, 0.0)
    })
}

/// Run the canonical candidate and the best multiplicative correction on a
/// ladder of massless grids and classify the outcome.
pub fn localizability_experiment(
    m: i32,
    resolutions: &[usize],
    p_max: f64,
    order: StencilOrder,
    seed: u64,
) -> Result<LocalizabilityReport> {
    if resolutions.len() < 3 {
        return Err(Error::Precondition(format!(
            "the localizability ladder needs at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("resolutions must increase strictly".into()));
    }
    let tag = ClassTag::MasslessPm { m, pair: None };
    let runs: Vec<(RelationDefects, RelationDefects, Vec<f64>)> = resolutions
        .par_iter()
        .map(|&n| {
            let grid = Arc::new(MomentumGrid::new(n, p_max, 0.0, 2)?);
            let triplet = make_triplet(tag, &grid, order)?;
            let samples = catalog::samples(&grid, seed)?;
            let f = newton_wigner(&grid, order);
            let raw = summarize(n, &covariance_residuals(&triplet, &f, &samples)?);
            let coeffs = massless_correction(&triplet, &f, &samples)?;
            let q = massless_position(&grid, order, &coeffs);
            let opt = summarize(n, &covariance_residuals(&triplet, &q, &samples)?);
            Ok((raw, opt, coeffs))
        })
        .collect::<Result<_>>()?;
    let orders = |pick: &dyn Fn(&RelationDefects) -> f64, which: usize| -> Vec<Option<f64>> {
        runs.windows(2)
            .map(|w| {
                let (a, b) = if which == 0 {
                    (&w[0].0, &w[1].0)
                } else {
                    (&w[0].1, &w[1].1)
                };
                convergence_order(a.n, pick(a), b.n, pick(b))
            })
            .collect()
    };
    let raw_orders = orders(&|d| d.rotation, 0);
    let optimized_orders = orders(&|d| d.rotation, 1);
    let threshold = OBSTRUCTION_THRESHOLD * m.unsigned_abs() as f64;
    let target = order.order() as f64 - 0.5;
    let decays = raw_orders.last().copied().flatten().map_or(true, |o| o >= target);
    let bounded = |defects: Vec<f64>, ords: &[Option<f64>]| {
        m != 0
            && defects.iter().all(|&d| d >= threshold)
            && ords.last().copied().flatten().is_some_and(|o| o <= NON_DECAY_ORDER)
    };
    let obstructed = bounded(runs.iter().map(|r| r.0.rotation).collect(), &raw_orders)
        && bounded(runs.iter().map(|r| r.1.rotation).collect(), &optimized_orders);
    let verdict = if obstructed {
        Verdict::Obstructed
    } else if decays {
        Verdict::Localizable
    } else {
        Verdict::Inconclusive
    };
    Ok(LocalizabilityReport {
        m,
        resolutions: resolutions.to_vec(),
        p_max,
        stencil_order: order.order(),
        raw: runs.iter().map(|r| r.0.clone()).collect(),
        optimized: runs.iter().map(|r| r.1.clone()).collect(),
        coefficients: runs.into_iter().map(|r| r.2).collect(),
        raw_orders,
        optimized_orders,
        threshold,
        verdict,
    })
}

/// Outcome of the Newton–Wigner uniqueness probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessProbe {
    pub n: usize,
    /// Largest `|c|` of the optimal correction `sum c_{k,i} phi_i`
    /// (complex coefficients, real and imaginary parts separately).
    pub max_coefficient: f64,
    /// Smallest over largest singular value of the scaled design matrix; a
    /// value away from zero means no correction is left unconstrained.
    pub conditioning: f64,
    /// Objective before and after the correction.
    pub residual_before: f64,
    pub residual_after: f64,
}

/// Search, among multiplicative corrections `F + Delta` (which always keep
/// the canonical relation), for one that also satisfies rotation
/// covariance, both inversion relations and symmetry. A well-conditioned
/// system with a vanishing optimum means `Delta = 0` is forced.
pub fn uniqueness_probe(grid: &Arc<MomentumGrid>, order: StencilOrder, seed: u64) -> Result<UniquenessProbe> {
    let triplet = make_triplet(ClassTag::MassivePlus, grid, order)?;
    let samples = catalog::samples(grid, seed)?;
    let f = newton_wigner(grid, order);
    let s_op = triplet.s.clone().expect("massive triplets carry S");
    let t_op = triplet.t.clone().expect("massive triplets carry T");
    // column p = (k * 10 + i) * 2 + part, part 0 real, 1 imaginary
    let phis: Vec<ParticleOperator> = (0..2 * BASIS_LEN)
        .map(|x| {
            let (i, part) = (x / 2, x % 2);
            let u = if part == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
            let t = tabulate(grid, |_, p, e| u * massive_basis(p, e)[i]);
            ParticleOperator::multiplication_table(format!("phi{i}.{part}"), grid, t)
        })
        .collect::<Result<_>>()?;
    let dim = 3 * 2 * BASIS_LEN;
    let mut ne = NormalEquations::new(dim);
    for s in &samples {
        let psi = &s.state;
        let jpsi: Vec<State> = triplet.j.iter().map(|j| j.act(psi)).collect();
        let spsi = s_op.act(psi);
        let tpsi = t_op.act(psi);
        let phi_psi: Vec<State> = phis.par_iter().map(|p| p.act(psi)).collect();
        let col = |k: usize, x: usize| (k * BASIS_LEN * 2) + x;
        for (j, k) in all_pairs() {
            let r0 = rotation_defect_state(&triplet.j[j], &f, j, k, psi);
            let mut cols: Vec<(usize, State)> = phis
                .par_iter()
                .enumerate()
                .map(|(x, phi)| (col(k, x), &triplet.j[j].act(&phi_psi[x]) - &phi.act(&jpsi[j])))
                .collect();
            if let Some(l) = third(j, k) {
                let e = levi_civita(j, k, l);
                cols.extend((0..phis.len()).map(|x| (col(l, x), phi_psi[x].scaled(c(0.0, -e)))));
            }
            ne.add(&r0, &cols);
        }
        for k in 0..3 {
            let r0t = &t_op.act(&f.q[k].act(psi)) - &f.q[k].act(&tpsi);
            let cols: Vec<(usize, State)> = (0..phis.len())
                .map(|x| (col(k, x), &t_op.act(&phi_psi[x]) - &phis[x].act(&tpsi)))
                .collect();
            ne.add(&r0t, &cols);
            let r0s = &s_op.act(&f.q[k].act(psi)) + &f.q[k].act(&spsi);
            let cols: Vec<(usize, State)> = (0..phis.len())
                .map(|x| (col(k, x), &s_op.act(&phi_psi[x]) + &phis[x].act(&spsi)))
                .collect();
            ne.add(&r0s, &cols);
            // symmetry: (Delta - Delta^dagger) psi is 2 Delta psi for the
            // imaginary columns and zero for the real ones
            let cols: Vec<(usize, State)> = (0..phis.len())
                .filter(|x| x % 2 == 1)
                .map(|x| (col(k, x), phi_psi[x].scaled(c(2.0, 0.0))))
                .collect();
            ne.add(&State::zeros(grid), &cols);
        }
    }
    let (coeffs, sv) = ne.solve();
    let after = {
        let mut v = ne.bb;
        let cvec = DVector::from_vec(coeffs.clone());
        v += 2.0 * ne.atb.dot(&cvec) + (cvec.transpose() * &ne.ata * &cvec)[(0, 0)];
        v.max(0.0).sqrt()
    };
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(UniquenessProbe {
        n: grid.n(),
        max_coefficient: coeffs.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
        conditioning: if smax > 0.0 { smin / smax } else { 0.0 },
        residual_before: ne.bb.sqrt(),
        residual_after: after,
    })
}
