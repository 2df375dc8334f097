//! Named, reproducible verification suites over a ladder of resolutions.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::grid::{inner_unchecked, MomentumGrid, State, StencilOrder};
use crate::opcalc::{commutator_residual, convergence_order, identity_residual, nan_max, ParticleOperator, Sample};
use crate::position::{
    covariance_residuals, kinetic_energy_defect, kinetic_energy_expectation, levi_civita, newton_wigner,
    velocity_residual,
};
use crate::triplets::{make_triplet, mass_shell_residual, spectrum_class, ClassTag, SpectrumClass, TransformerTriplet};

pub const SCHEMA_VERSION: u32 = 1;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Identities that hold exactly on the lattice.
    pub exact: f64,
    /// Allowed distance of a measured order from the stencil order.
    pub order_window: f64,
    /// Expected order of trilinear interpolation (group actions).
    pub interpolation_order: f64,
    /// Relative tolerance of the Ehrenfest slope.
    pub slope: f64,
    /// Norm drift allowed along a boost flow.
    pub boost_norm: f64,
    /// Moment identities evaluated by direct summation.
    pub moment: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-10,
            order_window: 0.5,
            interpolation_order: 2.0,
            slope: 0.02,
            boost_norm: 1e-6,
            moment: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Must sit below the exact tolerance at every resolution.
    Exact,
    /// Must decay at the target order (or sit on the exact floor).
    Convergent,
    /// Measured and recorded; pass only states the measurement succeeded.
    Recorded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualPoint {
    pub n: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub kind: CheckKind,
    pub residuals: Vec<ResidualPoint>,
    pub order_estimate: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn points(ns: &[usize], values: &[f64]) -> Vec<ResidualPoint> {
    ns.iter()
        .zip(values)
        .map(|(&n, &value)| ResidualPoint { n, value })
        .collect()
}

fn ladder_order(res: &[ResidualPoint]) -> Option<f64> {
    let (a, b) = (res.first()?, res.last()?);
    if a.n == b.n {
        return None;
    }
    convergence_order(a.n, a.value, b.n, b.value)
}

impl CheckResult {
    pub fn exact(name: impl Into<String>, anchor: &str, ns: &[usize], values: &[f64], tol: f64) -> Self {
        let residuals = points(ns, values);
        let pass = values.iter().all(|v| *v <= tol);
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            kind: CheckKind::Exact,
            order_estimate: ladder_order(&residuals),
            residuals,
            pass,
            detail: None,
        }
    }

    /// Passes when the first-to-last order lies within `window` of `target`,
    /// or when every residual is already below `floor`.
    pub fn convergent(
        name: impl Into<String>,
        anchor: &str,
        ns: &[usize],
        values: &[f64],
        target: f64,
        window: f64,
        floor: f64,
    ) -> Self {
        let residuals = points(ns, values);
        let order = ladder_order(&residuals);
        let exact = values.iter().all(|v| *v <= floor);
        let pass = exact || order.is_some_and(|o| (o - target).abs() <= window);
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            kind: CheckKind::Convergent,
            order_estimate: order,
            residuals,
            pass,
            detail: exact.then(|| "exact at every resolution".to_string()),
        }
    }

    /// Judged on the finest rung only; coarser rungs are reported.
    pub fn at_finest(name: impl Into<String>, anchor: &str, ns: &[usize], values: &[f64], tol: f64) -> Self {
        let mut out = Self::exact(name, anchor, ns, values, tol);
        out.kind = CheckKind::Convergent;
        out.pass = values.last().is_some_and(|v| *v <= tol);
        out
    }

    pub fn recorded(name: impl Into<String>, anchor: &str, ns: &[usize], values: &[f64], detail: String) -> Self {
        let residuals = points(ns, values);
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            kind: CheckKind::Recorded,
            order_estimate: ladder_order(&residuals),
            pass: values.iter().all(|v| v.is_finite()),
            residuals,
            detail: Some(detail),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// One triplet and its sample catalog per resolution.
pub struct Ladder {
    pub tag: ClassTag,
    pub order: StencilOrder,
    pub ns: Vec<usize>,
    pub rungs: Vec<(TransformerTriplet, Vec<Sample>)>,
}

impl Ladder {
    pub fn new(tag: ClassTag, ns: &[usize], p_max: f64, mass: f64, order: StencilOrder, seed: u64) -> Result<Self> {
        if ns.is_empty() {
            return Err(Error::Precondition("empty resolution ladder".into()));
        }
        let mass = if tag.is_massive() { mass } else { 0.0 };
        let rungs = ns
            .par_iter()
            .map(|&n| {
                let grid = Arc::new(MomentumGrid::new(n, p_max, mass, tag.blocks())?);
                let t = make_triplet(tag, &grid, order)?;
                let s = catalog::samples(&grid, seed)?;
                Ok((t, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ladder {
            tag,
            order,
            ns: ns.to_vec(),
            rungs,
        })
    }

    fn map<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&TransformerTriplet, &[Sample]) -> Result<f64> + Sync,
    {
        self.rungs.par_iter().map(|(t, s)| f(t, s)).collect()
    }

    fn target(&self) -> f64 {
        self.order.order() as f64
    }
}

type Triple = (ParticleOperator, ParticleOperator, ParticleOperator);

fn zero(grid: &Arc<MomentumGrid>) -> ParticleOperator {
    ParticleOperator::scalar(grid, c(0.0, 0.0))
}

/// `i eps_{jkl} X_l`, or zero for `j == k`.
fn eps_times(ops: &[ParticleOperator; 3], j: usize, k: usize, sign: f64) -> ParticleOperator {
    if j == k {
        return zero(ops[0].grid());
    }
    let l = 3 - j - k;
    ops[l].scaled(c(0.0, sign * levi_civita(j, k, l)))
}

struct Relation {
    name: &'static str,
    exact: bool,
    build: fn(&TransformerTriplet) -> Vec<Triple>,
}

fn pairs(upper_only: bool) -> Vec<(usize, usize)> {
    (0..3)
        .flat_map(|j| (0..3).map(move |k| (j, k)))
        .filter(|(j, k)| !upper_only || j < k)
        .collect()
}

fn relations() -> Vec<Relation> {
    vec![
        Relation {
            name: "[J_j, J_k] = i eps_jkl J_l",
            exact: false,
            build: |t| {
                pairs(true)
                    .into_iter()
                    .map(|(j, k)| (t.j[j].clone(), t.j[k].clone(), eps_times(&t.j, j, k, 1.0)))
                    .collect()
            },
        },
        Relation {
            name: "[J_j, P_k] = i eps_jkl P_l",
            exact: false,
            build: |t| {
                pairs(false)
                    .into_iter()
                    .map(|(j, k)| (t.j[j].clone(), t.p[k].clone(), eps_times(&t.p, j, k, 1.0)))
                    .collect()
            },
        },
        Relation {
            name: "[J_j, K_k] = i eps_jkl K_l",
            exact: false,
            build: |t| {
                pairs(false)
                    .into_iter()
                    .map(|(j, k)| (t.j[j].clone(), t.k[k].clone(), eps_times(&t.k, j, k, 1.0)))
                    .collect()
            },
        },
        Relation {
            name: "[K_j, K_k] = -i eps_jkl J_l",
            exact: false,
            build: |t| {
                pairs(true)
                    .into_iter()
                    .map(|(j, k)| (t.k[j].clone(), t.k[k].clone(), eps_times(&t.j, j, k, -1.0)))
                    .collect()
            },
        },
        Relation {
            name: "[K_j, P_k] = i delta_jk P0",
            exact: false,
            build: |t| {
                pairs(false)
                    .into_iter()
                    .map(|(j, k)| {
                        let e = if j == k {
                            t.p0.scaled(c(0.0, 1.0))
                        } else {
                            zero(t.grid())
                        };
                        (t.k[j].clone(), t.p[k].clone(), e)
                    })
                    .collect()
            },
        },
        Relation {
            name: "[K_j, P0] = i P_j",
            exact: false,
            build: |t| {
                (0..3)
                    .map(|j| (t.k[j].clone(), t.p0.clone(), t.p[j].scaled(c(0.0, 1.0))))
                    .collect()
            },
        },
        Relation {
            name: "[J_j, P0] = 0",
            exact: false,
            build: |t| (0..3).map(|j| (t.j[j].clone(), t.p0.clone(), zero(t.grid()))).collect(),
        },
        Relation {
            name: "[P_j, P_k] = 0",
            exact: true,
            build: |t| {
                pairs(true)
                    .into_iter()
                    .map(|(j, k)| (t.p[j].clone(), t.p[k].clone(), zero(t.grid())))
                    .collect()
            },
        },
        Relation {
            name: "[P_j, P0] = 0",
            exact: true,
            build: |t| (0..3).map(|j| (t.p[j].clone(), t.p0.clone(), zero(t.grid()))).collect(),
        },
    ]
}

fn max_commutator(triples: &[Triple], samples: &[Sample]) -> Result<f64> {
    triples
        .iter()
        .map(|(a, b, e)| commutator_residual(a, b, e, samples).map(|r| r.max()))
        .try_fold(0.0f64, |m, r| r.map(|v| nan_max(m, v)))
}

/// The ten-generator commutation relations on every rung of the ladder.
pub fn lie_algebra_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    relations()
        .into_iter()
        .map(|rel| {
            let values = ladder.map(|t, s| max_commutator(&(rel.build)(t), s))?;
            let anchor = "poincare-algebra";
            Ok(if rel.exact {
                CheckResult::exact(rel.name, anchor, &ladder.ns, &values, tol.exact)
            } else {
                CheckResult::convergent(
                    rel.name,
                    anchor,
                    &ladder.ns,
                    &values,
                    ladder.target(),
                    tol.order_window,
                    tol.exact,
                )
            })
        })
        .collect()
}

/// Measured conjugation sign of one generator family under `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationSign {
    pub operator: String,
    pub generator: String,
    pub sign: i8,
    pub residual: f64,
    /// Sign expected for a physical inversion of this linearity.
    pub expected: i8,
}

/// `X G = sigma G X` for the sign `sigma` that fits; residual of the best fit.
fn conjugation_sign(x: &ParticleOperator, g: &ParticleOperator, samples: &[Sample]) -> Result<(i8, f64)> {
    let xg = x.compose(g)?;
    let gx = g.compose(x)?;
    let plus = identity_residual(&xg, &gx, samples)?.max();
    let minus = identity_residual(&xg, &gx.scaled(c(-1.0, 0.0)), samples)?.max();
    Ok(if plus <= minus { (1, plus) } else { (-1, minus) })
}

/// Physical conjugation signs (P0, P, J, K) of space inversion and time
/// reversal, by linearity.
fn expected_signs(is_s: bool, linear: bool) -> [i8; 4] {
    match (is_s, linear) {
        (true, true) => [1, -1, 1, -1],
        (true, false) => [-1, 1, -1, 1],
        (false, true) => [-1, 1, 1, -1],
        (false, false) => [1, -1, -1, 1],
    }
}

/// Signs of `X G X^-1` for `X` in {S, T} and every generator family.
pub fn conjugation_table(t: &TransformerTriplet, samples: &[Sample]) -> Result<Vec<ConjugationSign>> {
    let mut out = Vec::new();
    for (is_s, x) in [(true, &t.s), (false, &t.t)] {
        let Some(x) = x else { continue };
        let exp = expected_signs(is_s, x.linearity().is_linear());
        let families: [(&str, Vec<&ParticleOperator>); 4] = [
            ("P0", vec![&t.p0]),
            ("P", t.p.iter().collect()),
            ("J", t.j.iter().collect()),
            ("K", t.k.iter().collect()),
        ];
        for (fi, (name, ops)) in families.iter().enumerate() {
            let fits = ops
                .iter()
                .map(|g| conjugation_sign(x, g, samples))
                .collect::<Result<Vec<_>>>()?;
            let sign = fits[0].0;
            let residual = if fits.iter().all(|f| f.0 == sign) {
                fits.iter().map(|f| f.1).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            out.push(ConjugationSign {
                operator: if is_s { "S" } else { "T" }.into(),
                generator: name.to_string(),
                sign,
                residual,
                expected: exp[fi],
            });
        }
    }
    Ok(out)
}

/// `X^2 = sigma 1`; returns the best sign and its residual.
fn square_sign(x: &ParticleOperator, samples: &[Sample]) -> Result<(i8, f64)> {
    let xx = x.compose(x)?;
    let one = ParticleOperator::identity(x.grid());
    let plus = identity_residual(&xx, &one, samples)?.max();
    let minus = identity_residual(&xx, &one.scaled(c(-1.0, 0.0)), samples)?.max();
    Ok(if plus <= minus { (1, plus) } else { (-1, minus) })
}

fn unitarity_defect(x: &ParticleOperator, samples: &[Sample]) -> Result<f64> {
    samples
        .iter()
        .map(|s| x.apply(&s.state).map(|y| (y.norm() - s.state.norm()).abs()))
        .try_fold(0.0f64, |m, r| r.map(|v| nan_max(m, v)))
}

/// Norm preservation, linearity, squares and conjugation signs of S and T,
/// plus the energy-sign consequence: a two-signed spectrum iff some
/// inversion reverses `P0`.
pub fn inversion_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let (t0, _) = &ladder.rungs[0];
    if t0.s.is_none() || t0.t.is_none() {
        return Ok(vec![CheckResult {
            name: "inversions".into(),
            anchor: "inversions".into(),
            kind: CheckKind::Recorded,
            residuals: vec![],
            order_estimate: None,
            pass: true,
            detail: Some(format!(
                "no S/T pair is defined for {}; section unavailable",
                ladder.tag
            )),
        }]);
    }
    let mut checks = Vec::new();
    for (label, pick) in [("S", 0usize), ("T", 1usize)] {
        let op = |t: &TransformerTriplet| -> ParticleOperator {
            if pick == 0 { t.s.clone() } else { t.t.clone() }.expect("checked above")
        };
        let values = ladder.map(|t, s| unitarity_defect(&op(t), s))?;
        checks.push(CheckResult::exact(
            format!("{label} preserves norms"),
            "inversions",
            &ladder.ns,
            &values,
            tol.exact,
        ));
        let values = ladder.map(|t, _| Ok(op(t).linearity_defect(4, 17)))?;
        let lin = op(t0).linearity();
        checks.push(
            CheckResult::exact(
                format!("{label} is {lin:?}"),
                "inversions",
                &ladder.ns,
                &values,
                tol.exact,
            )
            .with_detail(if lin.is_linear() { "unitary" } else { "anti-unitary" }),
        );
        let sq = ladder
            .rungs
            .par_iter()
            .map(|(t, s)| square_sign(&op(t), s))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = sq.iter().map(|x| x.1).collect();
        let sign = sq[0].0;
        let consistent = sq.iter().all(|x| x.0 == sign);
        let mut chk = CheckResult::exact(
            format!("{label}^2 = {sign:+}"),
            "inversions",
            &ladder.ns,
            &values,
            tol.exact,
        );
        chk.pass &= consistent;
        chk.kind = CheckKind::Recorded;
        checks.push(chk);
    }
    let tables = ladder
        .rungs
        .par_iter()
        .map(|(t, s)| conjugation_table(t, s))
        .collect::<Result<Vec<_>>>()?;
    for (i, row) in tables[0].iter().enumerate() {
        let values: Vec<f64> = tables.iter().map(|tb| tb[i].residual).collect();
        let stable = tables.iter().all(|tb| tb[i].sign == row.sign);
        let name = format!("{0} {1} {0}^-1 = {2:+} {1}", row.operator, row.generator, row.sign);
        let note = if row.sign == row.expected {
            "matches the physical inversion sign".to_string()
        } else {
            format!("physical inversion sign would be {:+}", row.expected)
        };
        let mut chk = CheckResult::exact(name, "inversions", &ladder.ns, &values, tol.exact).with_detail(note);
        chk.pass &= stable;
        chk.kind = CheckKind::Recorded;
        checks.push(chk);
    }
    let reverses_energy = tables[0]
        .iter()
        .any(|r| r.generator == "P0" && r.sign == -1 && r.residual <= tol.exact);
    let flags = t0.t_is_unitary().unwrap_or(false) || t0.s_is_antiunitary().unwrap_or(false);
    let pm = ladder.tag.is_pm();
    checks.push(CheckResult {
        name: "two-signed spectrum iff T unitary or S anti-unitary".into(),
        anchor: "spectrum-trichotomy".into(),
        kind: CheckKind::Exact,
        residuals: vec![],
        order_estimate: None,
        pass: pm == flags && pm == reverses_energy,
        detail: Some(format!(
            "two-block class: {pm}, T unitary: {:?}, S anti-unitary: {:?}, some inversion reverses P0: {reverses_energy}",
            t0.t_is_unitary(),
            t0.s_is_antiunitary()
        )),
    });
    Ok(checks)
}

/// Mass shell, commuting momenta, involutions and spectrum class.
pub fn exact_identity_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let ns = &ladder.ns;
    let mut checks = Vec::new();
    let v = ladder.map(|t, s| mass_shell_residual(t, s).map(|r| r.max()))?;
    checks.push(CheckResult::exact("P0^2 - P^2 = mu^2", "mass-shell", ns, &v, tol.exact));
    let v = ladder.map(|t, s| {
        let y = ParticleOperator::parity(t.grid());
        identity_residual(&y.compose(&y)?, &ParticleOperator::identity(t.grid()), s).map(|r| r.max())
    })?;
    checks.push(CheckResult::exact(
        "parity is an involution",
        "inversions",
        ns,
        &v,
        tol.exact,
    ));
    let v = ladder.map(|t, s| {
        let k = ParticleOperator::conjugation(t.grid());
        identity_residual(&k.compose(&k)?, &ParticleOperator::identity(t.grid()), s).map(|r| r.max())
    })?;
    checks.push(CheckResult::exact(
        "conjugation is an involution",
        "inversions",
        ns,
        &v,
        tol.exact,
    ));
    let v = ladder.map(|t, _| Ok(kinetic_energy_defect(t.grid())))?;
    checks.push(CheckResult::exact(
        "E_kin symbol equals p0",
        "kinetic-energy",
        ns,
        &v,
        tol.exact,
    ));
    let classes = ladder
        .rungs
        .par_iter()
        .map(|(t, s)| spectrum_class(t, s))
        .collect::<Result<Vec<_>>>()?;
    let want = ladder.rungs[0].0.predicted_spectrum();
    checks.push(CheckResult {
        name: format!("spectrum class {want:?}"),
        anchor: "spectrum-trichotomy".into(),
        kind: CheckKind::Exact,
        residuals: vec![],
        order_estimate: None,
        pass: classes.iter().all(|c| *c == want),
        detail: Some(format!("measured {classes:?}")),
    });
    Ok(checks)
}

/// Covariance relations of the (block) Newton–Wigner operator, its
/// symmetry, and the velocity identity.
pub fn covariance_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let order = ladder.order;
    let runs = ladder
        .rungs
        .par_iter()
        .map(|(t, s)| {
            let q = newton_wigner(t.grid(), order);
            let cov = covariance_residuals(t, &q, s)?;
            let vel = velocity_residual(t, &q, s)?.max();
            let adj =
                q.q.iter()
                    .map(|x| crate::opcalc::adjoint_residual(x, s).map(|r| r.max()))
                    .try_fold(0.0f64, |m, r| r.map(|v| nan_max(m, v)))?;
            Ok((cov, vel, adj))
        })
        .collect::<Result<Vec<_>>>()?;
    let ns = &ladder.ns;
    let conv = |name: &str, anchor: &str, v: Vec<f64>| {
        CheckResult::convergent(name, anchor, ns, &v, ladder.target(), tol.order_window, tol.exact)
    };
    let mut checks = vec![
        conv(
            "[Q_j, Q_k] = 0",
            "position-commutativity",
            runs.iter().map(|r| r.0.commutativity.max()).collect(),
        ),
        conv(
            "[Q_j, P_k] = i delta_jk",
            "position-covariance",
            runs.iter().map(|r| r.0.canonical.max()).collect(),
        ),
        conv(
            "[J_j, Q_k] = i eps_jkl Q_l",
            "position-covariance",
            runs.iter().map(|r| r.0.rotation.max()).collect(),
        ),
        conv(
            "Q symmetric under dnu",
            "newton-wigner",
            runs.iter().map(|r| r.2).collect(),
        ),
        conv(
            "i[P0, Q_j] = P0 p_j / p0^2",
            "velocity",
            runs.iter().map(|r| r.1).collect(),
        ),
    ];
    if runs[0].0.time_reversal.is_some() {
        let v: Vec<f64> = runs
            .iter()
            .map(|r| r.0.time_reversal.as_ref().map_or(0.0, |x| x.max()))
            .collect();
        checks.push(CheckResult::exact(
            "T Q = Q T",
            "position-covariance",
            ns,
            &v,
            tol.exact,
        ));
        let v: Vec<f64> = runs
            .iter()
            .map(|r| r.0.space_inversion.as_ref().map_or(0.0, |x| x.max()))
            .collect();
        checks.push(CheckResult::exact(
            "S Q = -Q S",
            "position-covariance",
            ns,
            &v,
            tol.exact,
        ));
    }
    Ok(checks)
}

/// Explicit fixed-step RK4 for `dpsi/dtau = i G psi`. `radius` bounds the
/// spectral radius of `G`; the step keeps `radius * dt <= courant`.
pub fn rk4_flow(g: &ParticleOperator, psi: &State, tau: f64, radius: f64, courant: f64) -> Result<State> {
    let steps = ((tau.abs() * radius / courant).ceil() as usize).max(1);
    let dt = tau / steps as f64;
    let ig = |x: &State| -> Result<State> { Ok(g.apply(x)?.scaled(c(0.0, 1.0))) };
    let start = psi.norm();
    let mut y = psi.clone();
    for _ in 0..steps {
        let k1 = ig(&y)?;
        let k2 = ig(&y.axpy(c(dt / 2.0, 0.0), &k1)?)?;
        let k3 = ig(&y.axpy(c(dt / 2.0, 0.0), &k2)?)?;
        let k4 = ig(&y.axpy(c(dt, 0.0), &k3)?)?;
        let amps: Vec<Complex64> = (0..y.amplitudes().len())
            .map(|i| {
                y.amplitudes()[i]
                    + (k1.amplitudes()[i] + 2.0 * k2.amplitudes()[i] + 2.0 * k3.amplitudes()[i] + k4.amplitudes()[i])
                        * (dt / 6.0)
            })
            .collect();
        y = State::from_amplitudes(psi.grid(), amps)?;
    }
    let end = y.norm();
    if !end.is_finite() || (end - start).abs() > 1e-2 * start {
        return Err(Error::Instability(format!(
            "flow of {} over {tau} in {steps} steps changed the norm from {start:.6} to {end:.6}",
            g.label()
        )));
    }
    Ok(y)
}

/// Upper estimate of the spectral radius of a first-order operator with
/// derivative coefficients bounded by `coeff` (summed over axes) and a
/// zeroth-order term bounded by `zeroth`.
pub fn spectral_radius_estimate(grid: &MomentumGrid, coeff: f64, zeroth: f64) -> f64 {
    // interior fourth-order symbol peaks at about 1.37 / h; 1.5 / h covers both
    coeff * 1.5 / grid.spacing() + zeroth
}

/// `radius * dt` for rotation and boost flows. The boundary closure rows
/// reach about seven times the interior estimate, which keeps them inside
/// the RK4 stability interval.
pub const FLOW_COURANT: f64 = 0.25;

/// Trilinear interpolation of block `b` of `psi` at an arbitrary momentum;
/// zero outside the lattice.
pub fn interpolate(psi: &State, b: usize, p: [f64; 3]) -> Complex64 {
    let grid = psi.grid();
    let n = grid.n();
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let t = (p[a] + grid.p_max()) / h - 0.5;
        if t < 0.0 || t > (n - 1) as f64 {
            return c(0.0, 0.0);
        }
        let i = (t.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = t - i as f64;
    }
    let data = psi.block(b);
    let mut acc = c(0.0, 0.0);
    for corner in 0..8 {
        let o = [(corner >> 2) & 1, (corner >> 1) & 1, corner & 1];
        let w: f64 = (0..3)
            .map(|a| if o[a] == 1 { frac[a] } else { 1.0 - frac[a] })
            .product();
        if w != 0.0 {
            acc += data[grid.index(base[0] + o[0], base[1] + o[1], base[2] + o[2])] * w;
        }
    }
    acc
}

/// Flow of `J_axis` by `theta` on a helicity-free triplet, compared with the
/// interpolated point rotation `psi(R p)`.
pub fn rotation_discrepancy(t: &TransformerTriplet, psi: &State, axis: usize, theta: f64) -> Result<f64> {
    if t.class.m() != 0 {
        return Err(Error::Precondition(
            "rotations of a helicity-carrying triplet are not point transformations".into(),
        ));
    }
    let grid = t.grid();
    let (j, l) = crate::triplets::cyclic(axis);
    let radius = spectral_radius_estimate(grid, 2.0 * grid.p_max(), 0.0);
    let flowed = rk4_flow(&t.j[axis], psi, theta, radius, FLOW_COURANT)?;
    let (cs, sn) = (theta.cos(), theta.sin());
    let target = State::from_fn(grid, |b, p| {
        let mut q = p;
        q[j] = p[j] * cs + p[l] * sn;
        q[l] = p[l] * cs - p[j] * sn;
        interpolate(psi, b, q)
    });
    Ok((&flowed - &target).norm() / psi.norm())
}

/// Flow of `K_axis` by rapidity `u` on a single-block massive triplet,
/// compared with the interpolated boosted state, plus the norm drift.
pub fn boost_discrepancy(t: &TransformerTriplet, psi: &State, axis: usize, u: f64) -> Result<(f64, f64)> {
    let grid = t.grid();
    if grid.blocks() != 1 || grid.mass() == 0.0 {
        return Err(Error::Precondition(
            "boost comparison needs a single-block massive triplet".into(),
        ));
    }
    let sign = if t.predicted_spectrum() == SpectrumClass::Negative {
        -1.0
    } else {
        1.0
    };
    let e_max = grid.energy().iter().cloned().fold(0.0, f64::max);
    let radius = spectral_radius_estimate(grid, e_max, 0.0);
    let flowed = rk4_flow(&t.k[axis], psi, u, radius, FLOW_COURANT)?;
    let (ch, sh) = (u.cosh(), u.sinh());
    let target = State::from_fn(grid, |b, p| {
        let e = (grid.mass().powi(2) + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let mut q = p;
        q[axis] = p[axis] * ch - sign * e * sh;
        interpolate(psi, b, q)
    });
    let drift = (flowed.norm() - psi.norm()).abs() / psi.norm();
    Ok(((&flowed - &target).norm() / psi.norm(), drift))
}

/// Flow of a multiplication generator compared with its exact phase.
pub fn translation_discrepancy(g: &ParticleOperator, symbol_max: f64, psi: &State, tau: f64) -> Result<f64> {
    let flowed = rk4_flow(g, psi, tau, symbol_max, 0.01)?;
    // the exact flow multiplies by exp(i tau g(p)); recover g(p) from G 1
    let one = State::from_fn(psi.grid(), |_, _| c(1.0, 0.0));
    let sym = g.apply(&one)?;
    let exact = psi.zip_with(&sym, |a, s| a * (c(0.0, tau) * s).exp());
    Ok((&flowed - &exact).norm() / psi.norm())
}

fn failed_flow(name: &str, e: Error) -> Result<CheckResult> {
    match e {
        Error::Instability(msg) => Ok(CheckResult {
            name: name.into(),
            anchor: "group-action".into(),
            kind: CheckKind::Convergent,
            residuals: vec![],
            order_estimate: None,
            pass: false,
            detail: Some(msg),
        }),
        other => Err(other),
    }
}

/// The comparison bounds flow and interpolation error together, so it only
/// has to decay at least as fast as the interpolation.
fn flow_check(name: &str, ns: &[usize], values: Result<Vec<f64>>, tol: &Tolerances) -> Result<CheckResult> {
    match values {
        Ok(v) => {
            let mut out = CheckResult::convergent(
                name,
                "group-action",
                ns,
                &v,
                tol.interpolation_order,
                tol.order_window,
                tol.exact,
            );
            out.pass = out
                .order_estimate
                .is_some_and(|o| o >= tol.interpolation_order - tol.order_window);
            Ok(out)
        }
        Err(e) => failed_flow(name, e),
    }
}

/// Finite transformations generated by `P0`, `P1`, `J3` and `K1`.
pub fn group_action_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let ns = &ladder.ns;
    let mut checks = Vec::new();
    let v = ladder.map(|t, s| {
        let pm = t.grid().p_max() * 3f64.sqrt();
        let e_max = t.grid().energy().iter().cloned().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for x in s {
            worst = worst.max(translation_discrepancy(&t.p[0], pm, &x.state, 0.3)?);
            worst = worst.max(translation_discrepancy(&t.p0, e_max, &x.state, 0.3)?);
        }
        Ok(worst)
    })?;
    checks.push(CheckResult::exact(
        "translations are phase multiplications",
        "group-action",
        ns,
        &v,
        tol.exact,
    ));
    if ladder.tag.helicity_index() == 0 {
        let rotation = |theta: f64| {
            ladder.map(|t, s| {
                s.iter()
                    .map(|x| rotation_discrepancy(t, &x.state, 2, theta))
                    .try_fold(0.0f64, |m, r| r.map(|v| nan_max(m, v)))
            })
        };
        // below one cell of displacement the trilinear error is (shift * h),
        // so the small-angle run is recorded rather than held to order 2
        checks.push(CheckResult::recorded(
            "rotation by 0.1 about axis 3, flow vs interpolation",
            "group-action",
            ns,
            &rotation(0.1).unwrap_or_default(),
            "interpolation error scales as shift * h while the shift is below one cell".into(),
        ));
        let v = rotation(0.5);
        checks.push(flow_check(
            "rotation flow matches interpolated point rotation",
            ns,
            v,
            tol,
        )?);
    }
    if ladder.tag.is_massive() && ladder.tag.blocks() == 1 {
        let boost = |u: f64| {
            ladder
                .rungs
                .par_iter()
                .map(|(t, s)| {
                    s.iter()
                        .map(|x| boost_discrepancy(t, &x.state, 0, u))
                        .try_fold((0.0f64, 0.0f64), |m, r| r.map(|v| (m.0.max(v.0), m.1.max(v.1))))
                })
                .collect::<Result<Vec<_>>>()
        };
        let v = boost(0.2).map(|r| r.iter().map(|x| x.0).collect());
        checks.push(flow_check("boost flow matches interpolated boosted state", ns, v, tol)?);
        match boost(0.05) {
            Ok(r) => {
                let v: Vec<f64> = r.iter().map(|x| x.1).collect();
                checks.push(CheckResult::exact(
                    "boost by 0.05 preserves the norm",
                    "group-action",
                    ns,
                    &v,
                    tol.boost_norm,
                ));
            }
            Err(e) => checks.push(failed_flow("boost by 0.05 preserves the norm", e)?),
        }
    }
    Ok(checks)
}

/// One row of an Ehrenfest trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub p0: f64,
    pub e_kin: f64,
    pub norm: f64,
}

/// `psi_t = exp(-i P0 t) psi` (exact phase per node) and the expectation
/// values of position, momentum, energy and kinetic energy along it.
pub fn ehrenfest_evolution(t: &TransformerTriplet, psi: &State, times: &[f64]) -> Result<Vec<TrajectoryPoint>> {
    let grid = t.grid();
    let q = newton_wigner(grid, t.stencil);
    let one = State::from_fn(grid, |_, _| c(1.0, 0.0));
    let energy = t.p0.apply(&one)?;
    times
        .par_iter()
        .map(|&time| {
            let phi = psi.zip_with(&energy, |a, e| a * (c(0.0, -time) * e).exp());
            let ex = |op: &ParticleOperator| -> Result<f64> { Ok(inner_unchecked(&phi, &op.apply(&phi)?).re) };
            let norm2 = phi.norm_sqr();
            Ok(TrajectoryPoint {
                t: time,
                q: [ex(&q.q[0])? / norm2, ex(&q.q[1])? / norm2, ex(&q.q[2])? / norm2],
                p: [ex(&t.p[0])? / norm2, ex(&t.p[1])? / norm2, ex(&t.p[2])? / norm2],
                p0: ex(&t.p0)? / norm2,
                e_kin: kinetic_energy_expectation(&phi) / norm2,
                norm: norm2.sqrt(),
            })
        })
        .collect()
}

/// `<psi, P0 p_j / p0^2 psi>`: the velocity each block contributes, by
/// direct summation.
pub fn velocity_moment(t: &TransformerTriplet, psi: &State) -> Result<[f64; 3]> {
    let one = State::from_fn(t.grid(), |_, _| c(1.0, 0.0));
    let energy = t.p0.apply(&one)?;
    let grid = t.grid();
    let m = grid.nodes();
    let mut v = [0.0; 3];
    for (i, (a, e)) in psi.amplitudes().iter().zip(energy.amplitudes()).enumerate() {
        let node = i % m;
        let p = grid.coords()[node];
        let w = grid.weight()[node] * a.norm_sqr();
        let p0 = grid.energy()[node];
        for j in 0..3 {
            v[j] += w * e.re * p[j] / (p0 * p0);
        }
    }
    let n2 = psi.norm_sqr();
    Ok(v.map(|x| x / n2))
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Ehrenfest slope `d<Q>/dt` against the velocity moment, conservation of
/// momentum and norm, and `<E_kin> = <p0>` by direct summation.
pub fn ehrenfest_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
    let res = ladder
        .rungs
        .par_iter()
        .map(|(t, s)| {
            let mut slope: f64 = 0.0;
            let mut conserved: f64 = 0.0;
            let mut kinetic: f64 = 0.0;
            for x in s {
                let traj = ehrenfest_evolution(t, &x.state, &times)?;
                let v = velocity_moment(t, &x.state)?;
                let scale = mean_speed(&x.state);
                for j in 0..3 {
                    let qj: Vec<f64> = traj.iter().map(|r| r.q[j]).collect();
                    slope = slope.max((fitted_slope(&times, &qj) - v[j]).abs() / scale);
                }
                for r in &traj {
                    conserved = conserved.max((r.norm - traj[0].norm).abs());
                    for j in 0..3 {
                        conserved = conserved.max((r.p[j] - traj[0].p[j]).abs());
                    }
                }
                let direct = moment_p0(&x.state);
                kinetic = kinetic.max((traj[0].e_kin - direct).abs());
            }
            Ok((slope, conserved, kinetic))
        })
        .collect::<Result<Vec<_>>>()?;
    let ns = &ladder.ns;
    Ok(vec![
        CheckResult::at_finest(
            "d<Q>/dt = <velocity>",
            "evolution",
            ns,
            &res.iter().map(|r| r.0).collect::<Vec<_>>(),
            tol.slope,
        ),
        CheckResult::exact(
            "norm and <P> conserved",
            "evolution",
            ns,
            &res.iter().map(|r| r.1).collect::<Vec<_>>(),
            tol.exact,
        ),
        CheckResult::exact(
            "<E_kin> = <p0>",
            "kinetic-energy",
            ns,
            &res.iter().map(|r| r.2).collect::<Vec<_>>(),
            tol.moment,
        ),
    ])
}

/// `<|p| / p0>`: the scale against which velocity errors are measured.
pub fn mean_speed(psi: &State) -> f64 {
    let grid = psi.grid();
    let m = grid.nodes();
    let s: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let p = grid.coords()[i % m];
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            a.norm_sqr() * grid.weight()[i % m] * r / grid.energy()[i % m]
        })
        .sum();
    s / psi.norm_sqr()
}

/// `<psi, p0 psi> / <psi, psi>` by direct quadrature, independent of any
/// operator table.
pub fn moment_p0(psi: &State) -> f64 {
    let grid = psi.grid();
    let m = grid.nodes();
    let s: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * grid.weight()[i % m] * grid.energy()[i % m])
        .sum();
    s / psi.norm_sqr()
}

/// Per-block helicity over the ladder: `|h_b - s_b m/2|` with `s = (+1, -1)`.
pub fn helicity_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    if ladder.tag.is_massive() {
        return Ok(vec![]);
    }
    let m = ladder.tag.helicity_index() as f64;
    let v = ladder.map(|t, _| {
        let mut dev: f64 = 0.0;
        for b in 0..t.grid().blocks() {
            let want = if b == 0 { m / 2.0 } else { -m / 2.0 };
            for s in catalog::block_samples(t.grid(), 7, b)? {
                let h = crate::triplets::helicity_expectation(t, &s.state)?[b].unwrap_or(f64::INFINITY);
                dev = nan_max(dev, (h - want).abs());
            }
        }
        Ok(dev)
    })?;
    let name = if ladder.tag.blocks() == 2 {
        format!("per-block helicity = ({:+}, {:+})", m / 2.0, -m / 2.0)
    } else {
        "helicity = 0".to_string()
    };
    Ok(vec![CheckResult::exact(name, "helicity", &ladder.ns, &v, tol.exact)
        .with_detail("block 1 carries +m/2, block 2 carries -m/2")])
}

/// Position-space equivalence on the two-block massive classes: unitarity
/// of the map, the hatted operators, density positivity and conservation.
pub fn kg_suite(ladder: &Ladder, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    use crate::kgmap::{
        calibrate_fft, evolve, integrated_density, kg_density, kg_equivalence_residual, position_expectation, KgMap,
    };
    if !(ladder.tag.is_massive() && ladder.tag.is_pm()) {
        return Ok(vec![]);
    }
    struct Rung {
        fft: f64,
        unitarity: f64,
        equivalence: Vec<(String, f64)>,
        density_min: f64,
        density_integral: f64,
        conservation: f64,
        drift: f64,
    }
    let rungs = ladder
        .rungs
        .par_iter()
        .map(|(t, s)| {
            let map = KgMap::new(t.grid())?;
            let cal = calibrate_fft(&map)?;
            let mut unitarity: f64 = 0.0;
            let mut density_min = f64::INFINITY;
            let mut density_integral: f64 = 0.0;
            let mut conservation: f64 = 0.0;
            let mut drift: f64 = 0.0;
            let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
            for x in s {
                let chi = map.forward(&x.state)?;
                let back = map.backward(&chi)?;
                unitarity = unitarity
                    .max((&back - &x.state).norm())
                    .max((chi.norm() - x.state.norm()).abs());
                density_min = density_min.min(kg_density(&chi).into_iter().fold(f64::INFINITY, f64::min));
                let total = integrated_density(&chi);
                density_integral = density_integral.max((total - x.state.norm_sqr()).abs());
                for time in [0.5, 1.0, 2.0] {
                    conservation = conservation.max((integrated_density(&evolve(&map, &chi, time)) - total).abs());
                }
                let xs: Vec<[f64; 3]> = times
                    .iter()
                    .map(|&time| position_expectation(&map, &evolve(&map, &chi, time)))
                    .collect();
                let v = velocity_moment(t, &x.state)?;
                for j in 0..3 {
                    let xj: Vec<f64> = xs.iter().map(|r| r[j]).collect();
                    drift = drift.max((fitted_slope(&times, &xj) - v[j]).abs() / mean_speed(&x.state));
                }
            }
            let equivalence = kg_equivalence_residual(t, s)?
                .into_iter()
                .map(|e| (e.generator, e.residual.max()))
                .collect();
            Ok(Rung {
                fft: cal.tolerance,
                unitarity,
                equivalence,
                density_min,
                density_integral,
                conservation,
                drift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ns = &ladder.ns;
    let col = |f: &dyn Fn(&Rung) -> f64| rungs.iter().map(f).collect::<Vec<f64>>();
    let fft_tol = rungs.iter().map(|r| r.fft).fold(0.0, f64::max);
    let mut checks = vec![
        CheckResult::exact(
            "Z is unitary (round trip and isometry)",
            "klein-gordon",
            ns,
            &col(&|r| r.unitarity),
            tol.exact,
        ),
        CheckResult::exact(
            "density is nonnegative",
            "klein-gordon",
            ns,
            &col(&|r| (-r.density_min).max(0.0)),
            0.0,
        ),
        CheckResult::exact(
            "integral of density = norm^2",
            "klein-gordon",
            ns,
            &col(&|r| r.density_integral),
            tol.exact,
        ),
        CheckResult::exact(
            "integral of density conserved in time",
            "klein-gordon",
            ns,
            &col(&|r| r.conservation),
            tol.moment,
        ),
        CheckResult::at_finest(
            "d<x>/dt = <velocity> in position space",
            "klein-gordon",
            ns,
            &col(&|r| r.drift),
            tol.slope,
        ),
    ];
    for (i, (name, _)) in rungs[0].equivalence.iter().enumerate() {
        let v = col(&|r| r.equivalence[i].1);
        let label = format!("Z {name} Z^-1 = {name}^");
        checks.push(match name.as_str() {
            "J" | "K" | "Q" => {
                let mut chk = CheckResult::convergent(
                    label,
                    "klein-gordon",
                    ns,
                    &v,
                    ladder.target(),
                    tol.order_window,
                    fft_tol,
                );
                chk.pass = v.windows(2).all(|w| w[1] < w[0]) || v.iter().all(|x| *x <= fft_tol);
                chk.with_detail("finite-difference generator against its spectral image: must decay")
            }
            _ => CheckResult::exact(label, "klein-gordon", ns, &v, fft_tol)
                .with_detail(format!("calibrated FFT tolerance {fft_tol:.2e}")),
        });
    }
    Ok(checks)
}
