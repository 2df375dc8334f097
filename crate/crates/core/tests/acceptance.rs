//! Acceptance criteria 1–9. Each test prints one `PASS`/`FAIL` line
//! (written past the test harness capture, so it appears in every run) and
//! then asserts. Every tolerance is pinned below and the verdicts are
//! recomputed here from raw residuals rather than taken from library flags.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use freeparticle::catalog::{samples, DEFAULT_SEED};
use freeparticle::cli::{load_config, run_verify, RunConfig, VerificationReport};
use freeparticle::grid::{MomentumGrid, Packet, StencilOrder};
use freeparticle::kgmap::{calibrate_fft, KgMap};
use freeparticle::position::{kinetic_energy_expectation, localizability_experiment};
use freeparticle::triplets::{helicity_expectation, make_triplet, spectrum_class, ClassTag, SpectrumClass};
use freeparticle::verify::{
    covariance_suite, exact_identity_suite, inversion_suite, kg_suite, lie_algebra_suite, moment_p0, CheckKind,
    CheckResult, Ladder, Tolerances,
};
use num_complex::Complex64;

const EXACT_TOL: f64 = 1e-10;
const STENCIL: StencilOrder = StencilOrder::Fourth;
const TARGET_ORDER: f64 = 4.0;
const ORDER_WINDOW: f64 = 0.5;
const MOMENT_TOL: f64 = 1e-8;
const HELICITY_FACTOR: f64 = 5.0;
const OBSTRUCTION_PER_M: f64 = 0.05;
const NON_DECAY_ORDER: f64 = 0.5;
const P_MAX: f64 = 6.0;
const MU: f64 = 1.0;
const CONVERGENCE_LADDER: [usize; 2] = [16, 32];
const DESK_LADDER: [usize; 3] = [16, 24, 32];

fn report(criterion: u32, pass: bool, summary: &str, failures: &[String]) {
    let mut out = std::io::stdout().lock();
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "acceptance criterion {criterion}: {verdict}  {summary}");
    for f in failures {
        let _ = writeln!(out, "    {f}");
    }
    drop(out);
    assert!(pass, "criterion {criterion} failed: {failures:?}");
}

fn mass_of(tag: ClassTag) -> f64 {
    if tag.is_massive() {
        MU
    } else {
        0.0
    }
}

fn ladder(tag: ClassTag, ns: &[usize]) -> Ladder {
    Ladder::new(tag, ns, P_MAX, mass_of(tag), STENCIL, DEFAULT_SEED).expect("ladder")
}

fn every_class() -> Vec<ClassTag> {
    let mut v = vec![
        ClassTag::MassivePlus,
        ClassTag::MassiveMinus,
        ClassTag::MassivePm1,
        ClassTag::MassivePm2,
        ClassTag::MasslessPlus,
        ClassTag::MasslessMinus,
    ];
    v.extend([-4, -2, 0, 2, 4].map(|m| ClassTag::MasslessPm { m, pair: None }));
    v.extend((1..=3).map(|p| ClassTag::MasslessPm { m: 0, pair: Some(p) }));
    v
}

/// Classes that carry a Newton–Wigner position operator.
fn spin_zero_classes() -> Vec<ClassTag> {
    vec![
        ClassTag::MassivePlus,
        ClassTag::MassiveMinus,
        ClassTag::MassivePm1,
        ClassTag::MassivePm2,
        ClassTag::MasslessPlus,
        ClassTag::MasslessMinus,
        ClassTag::MasslessPm { m: 0, pair: Some(1) },
    ]
}

fn max_residual(c: &CheckResult) -> f64 {
    c.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
}

fn order(c: &CheckResult) -> Option<f64> {
    let (first, last) = (c.residuals.first()?, c.residuals.last()?);
    Some((first.value / last.value).ln() / (last.n as f64 / first.n as f64).ln())
}

/// Convergent checks whose first-to-last order misses the stencil order.
fn order_failures(tag: ClassTag, checks: &[CheckResult]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| c.kind == CheckKind::Convergent)
        .filter_map(|c| {
            if max_residual(c) <= 1e-12 {
                return None;
            }
            let o = order(c).unwrap_or(f64::NAN);
            let ok = (o - TARGET_ORDER).abs() <= ORDER_WINDOW;
            (!ok).then(|| {
                format!(
                    "{tag} {}: order {o:.2} (residual at n=32 {:.2e})",
                    c.name,
                    c.residuals.last().unwrap().value
                )
            })
        })
        .collect()
}

#[test]
fn criterion_1_exact_identities() {
    let mut failures = Vec::new();
    let mut counted = 0;
    let mut worst: f64 = 0.0;
    for tag in every_class() {
        let l = ladder(tag, &DESK_LADDER);
        let tol = Tolerances::default();
        let mut checks = exact_identity_suite(&l, &tol).unwrap();
        checks.retain(|c| !c.name.starts_with("spectrum class") && !c.name.starts_with("E_kin"));
        checks.extend(
            lie_algebra_suite(&l, &tol)
                .unwrap()
                .into_iter()
                .filter(|c| c.name == "[P_j, P_k] = 0"),
        );
        checks.extend(
            inversion_suite(&l, &tol)
                .unwrap()
                .into_iter()
                .filter(|c| c.name.ends_with("preserves norms")),
        );
        checks.extend(
            kg_suite(&l, &tol)
                .unwrap()
                .into_iter()
                .filter(|c| c.name == "density is nonnegative" || c.name.starts_with("integral of density")),
        );
        for c in &checks {
            counted += 1;
            let r = max_residual(c);
            worst = worst.max(r);
            if r.is_nan() || r > EXACT_TOL {
                failures.push(format!("{tag} {}: {r:.2e}", c.name));
            }
        }
    }
    report(
        1,
        failures.is_empty(),
        &format!(
            "{counted} exact identities over {} classes, worst residual {worst:.2e} (tol {EXACT_TOL:e})",
            every_class().len()
        ),
        &failures,
    );
}

#[test]
fn criterion_2_convergence_orders() {
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    let mut counted = 0;
    for tag in spin_zero_classes() {
        let l = ladder(tag, &CONVERGENCE_LADDER);
        let mut checks = lie_algebra_suite(&l, &tol).unwrap();
        checks.extend(covariance_suite(&l, &tol).unwrap());
        counted += checks.iter().filter(|c| c.kind == CheckKind::Convergent).count();
        failures.extend(order_failures(tag, &checks));
    }
    report(
        2,
        failures.is_empty(),
        &format!(
            "{counted} derivative-bearing identities, order within {TARGET_ORDER} +/- {ORDER_WINDOW} between n=16 and n=32; {} outside",
            failures.len()
        ),
        &failures,
    );
}

#[test]
fn criterion_3_spectrum_trichotomy() {
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    for tag in every_class() {
        let grid = Arc::new(MomentumGrid::new(16, P_MAX, mass_of(tag), tag.blocks()).unwrap());
        let t = make_triplet(tag, &grid, STENCIL).unwrap();
        let measured = spectrum_class(&t, &samples(&grid, DEFAULT_SEED).unwrap()).unwrap();
        let expected = match tag {
            ClassTag::MassivePlus | ClassTag::MasslessPlus => SpectrumClass::Positive,
            ClassTag::MassiveMinus | ClassTag::MasslessMinus => SpectrumClass::Negative,
            _ => SpectrumClass::Both,
        };
        if measured != expected {
            failures.push(format!("{tag}: measured {measured:?}, expected {expected:?}"));
        }
        if let (Some(tu), Some(sa)) = (t.t_is_unitary(), t.s_is_antiunitary()) {
            if (measured == SpectrumClass::Both) != (tu || sa) {
                failures.push(format!(
                    "{tag}: biconditional fails (T unitary {tu}, S anti-unitary {sa})"
                ));
            }
            let bic = inversion_suite(&ladder(tag, &[16]), &tol).unwrap();
            let flagged = bic
                .iter()
                .find(|c| c.anchor == "spectrum-trichotomy")
                .expect("biconditional check");
            if !flagged.pass {
                failures.push(format!(
                    "{tag}: report does not confirm the biconditional: {:?}",
                    flagged.detail
                ));
            }
        }
    }
    report(
        3,
        failures.is_empty(),
        "spectrum class and inversion biconditional on every class",
        &failures,
    );
}

#[test]
fn criterion_4_kinetic_energy_consistency() {
    let grid = Arc::new(MomentumGrid::new(32, P_MAX, MU, 2).unwrap());
    let one = Complex64::new(1.0, 0.0);
    let mut failures = Vec::new();
    let mut line = String::new();
    for tag in [ClassTag::MassivePm1, ClassTag::MassivePm2] {
        let t = make_triplet(tag, &grid, STENCIL).unwrap();
        let psi = Packet::new([0.7, -0.4, 0.3], 1.1).build(&grid, &[one, one]).unwrap();
        let p0 = psi.inner(&t.p0.apply(&psi).unwrap()).unwrap().re;
        let e_kin = kinetic_energy_expectation(&psi);
        // independent oracle: direct quadrature of p0 |psi|^2 dnu
        let oracle: f64 = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let node = i % grid.nodes();
                grid.weight()[node] * grid.energy()[node] * a.norm_sqr()
            })
            .sum::<f64>()
            / psi.norm_sqr();
        let ok = p0.abs() <= MOMENT_TOL
            && (e_kin - oracle).abs() <= MOMENT_TOL
            && (moment_p0(&psi) - oracle).abs() <= MOMENT_TOL
            && e_kin >= MU;
        if !ok {
            failures.push(format!("{tag}: <P0> {p0:.2e}, <E_kin> {e_kin}, oracle {oracle}"));
        }
        line.push_str(&format!(
            "{tag}: <P0> = {p0:.1e}, <E_kin> - oracle = {:.1e}; ",
            e_kin - oracle
        ));
    }
    report(4, failures.is_empty(), line.trim_end_matches("; "), &failures);
}

#[test]
fn criterion_5_massless_m2_closure() {
    let tag = ClassTag::MasslessPm { m: 2, pair: None };
    let checks = lie_algebra_suite(&ladder(tag, &CONVERGENCE_LADDER), &Tolerances::default()).unwrap();
    let mut failures = order_failures(tag, &checks);
    for c in checks.iter().filter(|c| c.kind == CheckKind::Exact) {
        if max_residual(c) > EXACT_TOL {
            failures.push(format!("{tag} {}: {:.2e}", c.name, max_residual(c)));
        }
    }
    report(
        5,
        failures.is_empty(),
        &format!(
            "massless m=2 Lie algebra, {} relations, {} outside the order window",
            checks.len(),
            failures.len()
        ),
        &failures,
    );
}

#[test]
fn criterion_6_helicity() {
    let n = 32;
    let one = Complex64::new(1.0, 0.0);
    let mut failures = Vec::new();
    let mut recorded = Vec::new();
    let packet = Packet::new([0.4, -0.2, 0.9], 0.9).with_axial_power(2);
    let mut tags = vec![ClassTag::MasslessPlus, ClassTag::MasslessMinus];
    tags.extend([0, 2, -2, 4, -4].map(|m| ClassTag::MasslessPm { m, pair: None }));
    let mut tol = 0.0;
    for tag in tags {
        let grid = Arc::new(MomentumGrid::new(n, P_MAX, 0.0, tag.blocks()).unwrap());
        tol = HELICITY_FACTOR * grid.spacing().powi(4);
        let t = make_triplet(tag, &grid, STENCIL).unwrap();
        let psi = packet.build(&grid, &vec![one; tag.blocks()]).unwrap();
        let h = helicity_expectation(&t, &psi).unwrap();
        let m = tag.helicity_index() as f64;
        for (b, v) in h.iter().enumerate() {
            let v = v.expect("block carries weight");
            // block 1 carries +m/2 and block 2 carries -m/2
            let expected = if b == 0 { m / 2.0 } else { -m / 2.0 };
            if (v - expected).abs() > tol {
                failures.push(format!("{tag} block {}: {v} vs {expected}", b + 1));
            }
        }
        if tag.is_pm() && m != 0.0 {
            recorded.push(format!("m={}: {:+.3}/{:+.3}", m, h[0].unwrap(), h[1].unwrap()));
        }
    }
    report(
        6,
        failures.is_empty(),
        &format!(
            "per-block helicity within 5 h^4 = {tol:.3e} at n={n}; signs {}",
            recorded.join(", ")
        ),
        &failures,
    );
}

#[test]
fn criterion_7_localizability_separation() {
    let mut failures = Vec::new();
    let r0 = localizability_experiment(0, &DESK_LADDER, P_MAX, STENCIL, DEFAULT_SEED).unwrap();
    let rot0: Vec<f64> = r0.raw.iter().map(|d| d.rotation).collect();
    for (w, ns) in rot0.windows(2).zip(DESK_LADDER.windows(2)) {
        let o = (w[0] / w[1]).ln() / (ns[1] as f64 / ns[0] as f64).ln();
        if (o - TARGET_ORDER).abs() > ORDER_WINDOW {
            failures.push(format!(
                "m=0 rotation defect {:.3e} -> {:.3e} between n={} and n={}: order {o:.2}",
                w[0], w[1], ns[0], ns[1]
            ));
        }
    }
    for m in [2, 4] {
        let r = localizability_experiment(m, &DESK_LADDER, P_MAX, STENCIL, DEFAULT_SEED).unwrap();
        let threshold = OBSTRUCTION_PER_M * m as f64;
        for (label, defects) in [("raw", &r.raw), ("optimized", &r.optimized)] {
            let rot: Vec<f64> = defects.iter().map(|d| d.rotation).collect();
            if rot.iter().any(|v| *v < threshold) {
                failures.push(format!("m={m} {label} defect {rot:.3?} dips below {threshold}"));
            }
            let n = DESK_LADDER.len();
            let tail = (rot[n - 2] / rot[n - 1]).ln() / (DESK_LADDER[n - 1] as f64 / DESK_LADDER[n - 2] as f64).ln();
            if tail > NON_DECAY_ORDER {
                failures.push(format!("m={m} {label} defect still decays at order {tail:.2}"));
            }
        }
    }
    report(
        7,
        failures.is_empty(),
        &format!("m=0 decays at the stencil order; m=2,4 stay above {OBSTRUCTION_PER_M}|m| without decaying"),
        &failures,
    );
}

#[test]
fn criterion_8_klein_gordon_equivalence() {
    let mut failures = Vec::new();
    let mut fft_tol: f64 = 0.0;
    for &n in &DESK_LADDER {
        let grid = Arc::new(MomentumGrid::new(n, P_MAX, MU, 2).unwrap());
        fft_tol = fft_tol.max(calibrate_fft(&KgMap::new(&grid).unwrap()).unwrap().tolerance);
    }
    for tag in [ClassTag::MassivePm1, ClassTag::MassivePm2] {
        let checks = kg_suite(&ladder(tag, &DESK_LADDER), &Tolerances::default()).unwrap();
        for c in checks.iter().filter(|c| c.name.contains("Z^-1")) {
            let v: Vec<f64> = c.residuals.iter().map(|r| r.value).collect();
            let spectral = ["Z P0 ", "Z P ", "Z S ", "Z T "].iter().any(|p| c.name.starts_with(p));
            let ok = if spectral {
                v.iter().all(|x| *x <= fft_tol)
            } else {
                v.windows(2).all(|w| w[1] < w[0])
            };
            if !ok {
                failures.push(format!("{tag} {}: {v:?}", c.name));
            }
        }
    }
    report(
        8,
        failures.is_empty(),
        &format!("spectral generators within calibrated FFT tolerance {fft_tol:.2e}; J, K and NW position decay over n=16,24,32"),
        &failures,
    );
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_freeparticle")
}

fn run_bin(args: &[&str], threads: Option<&str>) -> i32 {
    let mut cmd = Command::new(bin());
    cmd.args(args)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null());
    if let Some(t) = threads {
        cmd.env("FREEPARTICLE_THREADS", t);
    }
    cmd.status().expect("spawn").code().unwrap_or(-1)
}

fn read_report(path: &Path) -> VerificationReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn criterion_9_reproducibility_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let f = first.to_str().unwrap();
    let s = second.to_str().unwrap();
    let mut failures = Vec::new();

    let base = [
        "verify",
        "--class",
        "massive_pm_1",
        "--n",
        "16,24",
        "--suites",
        "identities,lie,inversion,covariance",
        "--out",
        f,
    ];
    run_bin(&base, Some("1"));
    run_bin(&["verify", "--config", f, "--out", s], Some("4"));
    let (a, b) = (read_report(&first), read_report(&second));
    let bits = |r: &VerificationReport| -> Vec<(String, Vec<u64>)> {
        r.checks
            .iter()
            .map(|c| (c.name.clone(), c.residuals.iter().map(|p| p.value.to_bits()).collect()))
            .collect()
    };
    if bits(&a) != bits(&b) || a.config != b.config {
        failures.push("rerun of the embedded config (1 vs 4 threads) is not bitwise identical".into());
    }
    let config: RunConfig = load_config(&first).unwrap();
    let in_process = run_verify(&config).unwrap();
    if bits(&in_process) != bits(&a) {
        failures.push("in-process rerun differs from the binary's report".into());
    }

    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, r#"{"class":"massive_plus","resolutions":[16],"p_max":6,"mass":1,"stencil":4,"suites":["lie"],"tolerances":{},"seed":1,"bogus":true}"#).unwrap();
    let bad = bad_config.to_str().unwrap();
    let matrix: Vec<(Vec<&str>, i32)> = vec![
        (
            vec!["verify", "--class", "massive_plus", "--suites", "identities,inversion"],
            0,
        ),
        (
            vec![
                "verify",
                "--class",
                "massless_pm",
                "--m",
                "0",
                "--pair",
                "2",
                "--suites",
                "identities,helicity",
            ],
            0,
        ),
        (
            vec![
                "verify",
                "--class",
                "massive_plus",
                "--suites",
                "identities",
                "--tol",
                "exact=1e-300",
            ],
            1,
        ),
        (vec!["verify", "--class", "bogus"], 2),
        (vec!["verify", "--class", "massive_plus", "--n", "15"], 2),
        (vec!["verify", "--class", "massive_plus", "--mass", "0"], 2),
        (vec!["verify", "--class", "massive_plus", "--stencil", "3"], 2),
        (vec!["verify", "--class", "massless_pm"], 2),
        (vec!["verify", "--class", "massless_pm", "--m", "2", "--pair", "1"], 2),
        (vec!["verify", "--class", "massive_plus", "--tol", "nonsense=1"], 2),
        (vec!["verify", "--class", "massive_plus", "--expect", "obstructed"], 2),
        (vec!["verify", "--config", bad], 2),
        (vec!["verify", "--config", "/nonexistent/report.json"], 2),
        (vec!["frobnicate"], 2),
        (
            vec!["evolve", "--class", "massive_plus", "--n", "16", "--steps", "2"],
            0,
        ),
        (
            vec!["evolve", "--class", "massive_plus", "--n", "16", "--center", "5,0,0"],
            2,
        ),
        (vec!["localizability", "--m", "2", "--n", "16,24,32"], 0),
        (vec!["localizability", "--m", "2", "--n", "16,24"], 2),
        (vec!["localizability", "--m", "2", "--pair", "1"], 2),
    ];
    for (args, want) in &matrix {
        let got = run_bin(args, None);
        if got != *want {
            failures.push(format!(
                "`freeparticle {}` exited {got}, expected {want}",
                args.join(" ")
            ));
        }
    }
    report(
        9,
        failures.is_empty(),
        &format!(
            "bitwise rerun of an embedded config across thread counts; {}-case exit-code matrix",
            matrix.len()
        ),
        &failures,
    );
}
