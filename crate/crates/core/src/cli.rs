//! Thin command-line surface: `verify`, `localizability` and `evolve`.
//!
//! Exit codes: 0 every selected check passed, 1 a check failed (including
//! numerical instability), 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, Packet, StencilOrder};
use crate::kgmap::{evolve as kg_evolve, write_density_slice, KgMap};
use crate::position::{
    covariance_residuals, localizability_experiment, newton_wigner, LocalizabilityReport, Verdict, NON_DECAY_ORDER,
    OBSTRUCTION_THRESHOLD,
};
use crate::triplets::{make_triplet, ClassTag};
use crate::verify::{self, CheckKind, CheckResult, Ladder, Tolerances, TrajectoryPoint};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "FREEPARTICLE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lie,
    Inversion,
    Identities,
    Covariance,
    Group,
    Ehrenfest,
    Helicity,
    Kg,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Identities,
        Suite::Lie,
        Suite::Inversion,
        Suite::Covariance,
        Suite::Group,
        Suite::Ehrenfest,
        Suite::Helicity,
        Suite::Kg,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    /// The rotation covariance of the position candidate is expected to fail
    /// without decaying; that outcome counts as a pass.
    Obstructed,
}

/// Everything needed to reproduce a `verify` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub class: ClassTag,
    pub resolutions: Vec<usize>,
    pub p_max: f64,
    pub mass: f64,
    pub stencil: u32,
    pub suites: Vec<Suite>,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

impl RunConfig {
    /// Class and grid constraints, checked before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::Precondition("at least one resolution is required".into()));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("resolutions must increase strictly".into()));
        }
        StencilOrder::from_order(self.stencil)?;
        let mass = self.effective_mass()?;
        for &n in &self.resolutions {
            MomentumGrid::new(n, self.p_max, mass, self.class.blocks())?;
        }
        if self.suites.is_empty() {
            return Err(Error::Precondition("no suites selected".into()));
        }
        if self.expect.is_some() && !self.suites.contains(&Suite::Covariance) {
            return Err(Error::Precondition(
                "--expect obstructed needs the covariance suite".into(),
            ));
        }
        if self.expect.is_some() && self.class.helicity_index() == 0 {
            return Err(Error::ClassGridMismatch {
                class: self.class.to_string(),
                requirement: "a nonzero helicity index for an expected obstruction",
                mass: self.mass,
                blocks: self.class.blocks(),
            });
        }
        Ok(())
    }

    fn effective_mass(&self) -> Result<f64> {
        match (self.class.is_massive(), self.mass) {
            (true, m) if m > 0.0 => Ok(m),
            (false, 0.0) => Ok(0.0),
            (massive, m) => Err(Error::ClassGridMismatch {
                class: self.class.to_string(),
                requirement: if massive { "mass > 0" } else { "mass = 0" },
                mass: m,
                blocks: self.class.blocks(),
            }),
        }
    }
}

/// The `verify` report: config echo plus one entry per check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub triplet_class: String,
    pub config: RunConfig,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizabilityConfig {
    pub m: Vec<i32>,
    pub resolutions: Vec<usize>,
    pub p_max: f64,
    pub stencil: u32,
    pub seed: u64,
    /// Inversion pairs to test alongside `m = 0`.
    #[serde(default)]
    pub pairs: Vec<u8>,
}

/// `T Q = Q T` and `S Q = -Q S` for one `m = 0` pair, per resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInversions {
    pub pair: u8,
    pub time_reversal: Vec<f64>,
    pub space_inversion: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizabilityRun {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: LocalizabilityConfig,
    pub reports: Vec<LocalizabilityReport>,
    pub pair_inversions: Vec<PairInversions>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub class: ClassTag,
    pub n: usize,
    pub p_max: f64,
    pub mass: f64,
    pub stencil: u32,
    pub center: [f64; 3],
    pub sigma: f64,
    /// Block weights `(re, im)` per block; normalized by the packet builder.
    pub weights: Vec<[f64; 2]>,
    pub t_max: f64,
    pub steps: usize,
    #[serde(default)]
    pub kg_slices: bool,
}

#[derive(Parser, Debug)]
#[command(
    name = "freeparticle",
    version,
    about = "Verification runs for free-particle transformer triplets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run verification suites over a resolution ladder and write a JSON report.
    Verify(VerifyArgs),
    /// Newton–Wigner localizability ladder for massless two-block triplets.
    Localizability(LocalizabilityArgs),
    /// Evolve a packet and write expectation trajectories (and density slices) as CSV.
    Evolve(EvolveArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ClassArgs {
    /// massive_plus, massive_minus, massive_pm_1, massive_pm_2,
    /// massless_plus, massless_minus or massless_pm
    #[arg(long)]
    pub class: Option<String>,
    /// Helicity index (massless_pm only).
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i32>,
    /// Inversion pair 1..3 (massless_pm with m = 0 only).
    #[arg(long)]
    pub pair: Option<u8>,
}

impl ClassArgs {
    fn tag(&self) -> Result<ClassTag> {
        let class = self
            .class
            .as_deref()
            .ok_or_else(|| Error::Precondition("--class is required".into()))?;
        match (class, self.m, self.pair) {
            ("massless_pm", None, _) => Err(Error::Precondition("massless_pm needs --m".into())),
            ("massless_pm", Some(m), None) => format!("massless_pm:m={m}").parse(),
            ("massless_pm", Some(m), Some(p)) => format!("massless_pm:m={m},pair={p}").parse(),
            (other, None, None) => other.parse(),
            (other, _, _) => Err(Error::Precondition(format!(
                "--m and --pair only apply to massless_pm, not {other}"
            ))),
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Comma-separated resolution ladder.
    #[arg(long, value_delimiter = ',', default_value = "16,32")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 6.0)]
    pub p_max: f64,
    /// Defaults to 1 for massive classes and 0 for massless ones.
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub stencil: u32,
    /// Comma-separated suites; default is every suite.
    #[arg(long, value_delimiter = ',')]
    pub suites: Vec<Suite>,
    /// Tolerance overrides, e.g. `exact=1e-11,slope=0.02`.
    #[arg(long, value_delimiter = ',')]
    pub tol: Vec<String>,
    #[arg(long, default_value_t = catalog::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub expect: Option<Expectation>,
    /// Report path (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rerun the config embedded in a report (or a bare config file).
    #[arg(long, conflicts_with_all = ["class", "m", "pair", "n", "p_max", "mass", "stencil", "suites", "tol", "seed", "expect"])]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LocalizabilityArgs {
    /// Comma-separated helicity indices.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub m: Vec<i32>,
    #[arg(long, value_delimiter = ',', default_value = "16,24,32")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 6.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 4)]
    pub stencil: u32,
    #[arg(long, default_value_t = catalog::DEFAULT_SEED)]
    pub seed: u64,
    /// Inversion pairs checked with `m = 0`.
    #[arg(long, value_delimiter = ',')]
    pub pair: Vec<u8>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["m", "n", "p_max", "stencil", "seed", "pair"])]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 6.0)]
    pub p_max: f64,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub stencil: u32,
    /// Packet centre in momentum space.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,0,0")]
    pub center: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Block weights as real numbers (one per block).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Trajectory CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for density slices (two-block massive classes).
    #[arg(long)]
    pub kg: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["class", "m", "pair", "n", "p_max", "mass", "stencil", "center", "sigma", "weights", "t_max", "steps"])]
    pub config: Option<PathBuf>,
}

/// Parses `key=value` pairs onto the default tolerances.
pub fn parse_tolerances(pairs: &[String]) -> Result<Tolerances> {
    let mut value = serde_json::to_value(Tolerances::default())?;
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Precondition(format!("tolerance override {pair:?} is not key=value")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| Error::Precondition(format!("tolerance {k} has non-numeric value {v:?}")))?;
        let slot = value
            .get_mut(k)
            .ok_or_else(|| Error::Precondition(format!("unknown tolerance {k:?}")))?;
        *slot = serde_json::json!(x);
    }
    Ok(serde_json::from_value(value)?)
}

/// Reads a config, or the `config` member of a report.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = match value.get("config") {
        Some(c) if value.get("schema_version").is_some() => c.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(inner)?)
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Precondition(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Runs the selected suites.
pub fn run_verify(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let order = StencilOrder::from_order(config.stencil)?;
    let ladder = Ladder::new(
        config.class,
        &config.resolutions,
        config.p_max,
        config.effective_mass()?,
        order,
        config.seed,
    )?;
    let tol = &config.tolerances;
    let mut checks = Vec::new();
    for suite in Suite::ALL.iter().filter(|s| config.suites.contains(s)) {
        let section = match suite {
            Suite::Lie => verify::lie_algebra_suite(&ladder, tol),
            Suite::Inversion => verify::inversion_suite(&ladder, tol),
            Suite::Identities => verify::exact_identity_suite(&ladder, tol),
            Suite::Covariance => verify::covariance_suite(&ladder, tol),
            Suite::Group => verify::group_action_suite(&ladder, tol),
            Suite::Ehrenfest => verify::ehrenfest_suite(&ladder, tol),
            Suite::Helicity => verify::helicity_suite(&ladder, tol),
            Suite::Kg => verify::kg_suite(&ladder, tol),
        };
        match section {
            Ok(c) => checks.extend(c),
            Err(Error::Instability(msg)) => checks.push(CheckResult {
                name: format!("{suite:?} suite"),
                anchor: "stability".into(),
                kind: CheckKind::Convergent,
                residuals: vec![],
                order_estimate: None,
                pass: false,
                detail: Some(msg),
            }),
            Err(e) => return Err(e),
        }
    }
    if config.expect == Some(Expectation::Obstructed) {
        let floor = OBSTRUCTION_THRESHOLD * config.class.helicity_index().abs() as f64;
        for chk in checks.iter_mut().filter(|c| c.name.starts_with("[J_j, Q_k]")) {
            let bounded_below = chk.residuals.iter().all(|r| r.value >= floor);
            let flat = chk.order_estimate.is_some_and(|o| o <= NON_DECAY_ORDER);
            chk.pass = bounded_below && flat;
            chk.detail = Some(format!(
                "expected obstruction: defect >= {floor} at every resolution and order <= {NON_DECAY_ORDER}"
            ));
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        schema_version: verify::SCHEMA_VERSION,
        tool_version: tool_version(),
        triplet_class: config.class.to_string(),
        config: config.clone(),
        checks,
        pass,
    })
}

pub fn run_localizability(config: &LocalizabilityConfig) -> Result<LocalizabilityRun> {
    if config.m.is_empty() {
        return Err(Error::Precondition(
            "at least one helicity index (--m) is required".into(),
        ));
    }
    let order = StencilOrder::from_order(config.stencil)?;
    if !config.pairs.is_empty() && !config.m.contains(&0) {
        return Err(Error::InversionUnavailable("massless_pm with m != 0".into()));
    }
    if let Some(p) = config.pairs.iter().find(|p| !(1..=3).contains(*p)) {
        return Err(Error::Precondition(format!("inversion pair {p} is not one of 1, 2, 3")));
    }
    for &n in &config.resolutions {
        MomentumGrid::new(n, config.p_max, 0.0, 2)?;
    }
    let reports = config
        .m
        .iter()
        .map(|&m| localizability_experiment(m, &config.resolutions, config.p_max, order, config.seed))
        .collect::<Result<Vec<_>>>()?;
    let pair_inversions = config
        .pairs
        .iter()
        .map(|&pair| {
            let mut time_reversal = Vec::new();
            let mut space_inversion = Vec::new();
            for &n in &config.resolutions {
                let grid = Arc::new(MomentumGrid::new(n, config.p_max, 0.0, 2)?);
                let t = make_triplet(ClassTag::MasslessPm { m: 0, pair: Some(pair) }, &grid, order)?;
                let samples = catalog::samples(&grid, config.seed)?;
                let cov = covariance_residuals(&t, &newton_wigner(&grid, order), &samples)?;
                time_reversal.push(cov.time_reversal.map_or(f64::NAN, |r| r.max()));
                space_inversion.push(cov.space_inversion.map_or(f64::NAN, |r| r.max()));
            }
            let pass = time_reversal
                .iter()
                .chain(&space_inversion)
                .all(|v| *v <= Tolerances::default().exact);
            Ok(PairInversions {
                pair,
                time_reversal,
                space_inversion,
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizabilityRun {
        schema_version: verify::SCHEMA_VERSION,
        tool_version: tool_version(),
        config: config.clone(),
        reports,
        pair_inversions,
    })
}

/// Trajectory of the packet plus, when requested, the position-space map.
pub struct Evolution {
    pub trajectory: Vec<TrajectoryPoint>,
    pub map: Option<(KgMap, crate::kgmap::KgState)>,
}

pub fn run_evolve(config: &EvolveConfig) -> Result<Evolution> {
    let order = StencilOrder::from_order(config.stencil)?;
    let rc = RunConfig {
        class: config.class,
        resolutions: vec![config.n],
        p_max: config.p_max,
        mass: config.mass,
        stencil: config.stencil,
        suites: vec![Suite::Ehrenfest],
        tolerances: Tolerances::default(),
        seed: 0,
        expect: None,
    };
    rc.validate()?;
    if config.steps == 0 || config.t_max.is_nan() || config.t_max <= 0.0 {
        return Err(Error::Precondition("need steps > 0 and t_max > 0".into()));
    }
    let grid = Arc::new(MomentumGrid::new(
        config.n,
        config.p_max,
        rc.effective_mass()?,
        config.class.blocks(),
    )?);
    let weights: Vec<Complex64> = if config.weights.is_empty() {
        vec![Complex64::new(1.0, 0.0); grid.blocks()]
    } else {
        config.weights.iter().map(|w| Complex64::new(w[0], w[1])).collect()
    };
    let psi = Packet::new(config.center, config.sigma).build(&grid, &weights)?;
    let t = make_triplet(config.class, &grid, order)?;
    let times: Vec<f64> = (0..=config.steps)
        .map(|i| config.t_max * i as f64 / config.steps as f64)
        .collect();
    let trajectory = verify::ehrenfest_evolution(&t, &psi, &times)?;
    let map = if config.kg_slices {
        let map = KgMap::new(&grid)?;
        let chi = map.forward(&psi)?;
        Some((map, chi))
    } else {
        None
    };
    Ok(Evolution { trajectory, map })
}

pub fn trajectory_csv(rows: &[TrajectoryPoint]) -> String {
    let mut s = String::from("t,q1,q2,q3,p1,p2,p3,p0,e_kin,norm\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.t, r.q[0], r.q[1], r.q[2], r.p[0], r.p[1], r.p[2], r.p0, r.e_kin, r.norm
        ));
    }
    s
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Instability(_) => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process (tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => Ok(()),
    }
}

fn verify_config(a: &VerifyArgs) -> Result<RunConfig> {
    if let Some(path) = &a.config {
        return load_config(path);
    }
    let class = a.class.tag()?;
    Ok(RunConfig {
        class,
        resolutions: a.n.clone(),
        p_max: a.p_max,
        mass: a.mass.unwrap_or(if class.is_massive() { 1.0 } else { 0.0 }),
        stencil: a.stencil,
        suites: if a.suites.is_empty() {
            Suite::ALL.to_vec()
        } else {
            a.suites.clone()
        },
        tolerances: parse_tolerances(&a.tol)?,
        seed: a.seed,
        expect: a.expect,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let config = verify_config(a)?;
    let report = run_verify(&config)?;
    for c in &report.checks {
        let last = c
            .residuals
            .last()
            .map_or(String::from("-"), |r| format!("{:.3e}", r.value));
        let order = c.order_estimate.map_or(String::from("-"), |o| format!("{o:.2}"));
        println!(
            "{} {:<58} last={last} order={order}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name
        );
    }
    emit_json(&report, a.out.as_deref())?;
    Ok(if report.pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn cmd_localizability(a: &LocalizabilityArgs) -> Result<i32> {
    let config = match &a.config {
        Some(p) => load_config(p)?,
        None => LocalizabilityConfig {
            m: a.m.clone(),
            resolutions: a.n.clone(),
            p_max: a.p_max,
            stencil: a.stencil,
            seed: a.seed,
            pairs: a.pair.clone(),
        },
    };
    let run = run_localizability(&config)?;
    for r in &run.reports {
        let rot: Vec<String> = r.raw.iter().map(|d| format!("{:.3e}", d.rotation)).collect();
        let opt: Vec<String> = r.optimized.iter().map(|d| format!("{:.3e}", d.rotation)).collect();
        println!(
            "m={:<3} {:?}  raw rotation defect {rot:?}  optimized {opt:?}",
            r.m, r.verdict
        );
    }
    for p in &run.pair_inversions {
        println!(
            "m=0 pair {}: TQ=QT {:?}  SQ=-QS {:?}  {}",
            p.pair,
            p.time_reversal,
            p.space_inversion,
            if p.pass { "PASS" } else { "FAIL" }
        );
    }
    emit_json(&run, a.out.as_deref())?;
    let expected = |r: &LocalizabilityReport| match r.m {
        0 => r.verdict == Verdict::Localizable,
        _ => r.verdict == Verdict::Obstructed,
    };
    let ok = run.reports.iter().all(expected) && run.pair_inversions.iter().all(|p| p.pass);
    Ok(if ok { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn cmd_evolve(a: &EvolveArgs) -> Result<i32> {
    let config = match &a.config {
        Some(p) => load_config(p)?,
        None => {
            let class = a.class.tag()?;
            let center: [f64; 3] = a
                .center
                .as_slice()
                .try_into()
                .map_err(|_| Error::Precondition("--center takes three components".into()))?;
            EvolveConfig {
                class,
                n: a.n,
                p_max: a.p_max,
                mass: a.mass.unwrap_or(if class.is_massive() { 1.0 } else { 0.0 }),
                stencil: a.stencil,
                center,
                sigma: a.sigma,
                weights: a.weights.iter().map(|w| [*w, 0.0]).collect(),
                t_max: a.t_max,
                steps: a.steps,
                kg_slices: a.kg.is_some(),
            }
        }
    };
    let evo = run_evolve(&config)?;
    let csv = trajectory_csv(&evo.trajectory);
    match &a.out {
        Some(p) => write_atomic(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let (Some(dir), Some((map, chi))) = (&a.kg, &evo.map) {
        fs::create_dir_all(dir)?;
        let mid = map.position().n() / 2;
        for (i, r) in evo.trajectory.iter().enumerate() {
            let state = kg_evolve(map, chi, r.t);
            let mut buf = Vec::new();
            write_density_slice(&mut buf, &state, 2, mid)?;
            write_atomic(&dir.join(format!("rho_{i:04}.csv")), &buf)?;
        }
    }
    Ok(EXIT_PASS)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Localizability(a) => cmd_localizability(a),
        Command::Evolve(a) => cmd_evolve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
