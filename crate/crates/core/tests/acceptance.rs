//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p fracinv-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use fracinv_core::fbm::{const_a, kappa1, simulate_type1, simulate_type2, TableStore};
use fracinv_core::fracops::{frac_coeffs, fractional_difference, integrate_type2, partial_sums};
use fracinv_core::harness::{run_with_tables, ExperimentConfig, McReport, RunOutput};
use fracinv_core::memtests::{bartlett_lrv, kpss_statistic, rs_statistic};
use fracinv_core::seed::{derive_seed, rng_from_seed};
use rand::Rng;
use statrs::function::gamma::gamma;

// Pinned tolerances.
const COEFF_REL_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-10;
const A_ZERO_TOL: f64 = 1e-8;
const A_DUAL_TOL: f64 = 1e-6;
const PATH_VAR_SIGMAS: f64 = 3.0;
const PATH_VAR_PATHS: usize = 10_000;
const TERMINAL_VAR_REL: f64 = 0.10;
const GARCH_VAR_REL: f64 = 0.15;
const KS_ALPHA: f64 = 0.01;
const LRV_MEDIAN_REL: f64 = 0.20;
const KPSS_MEAN_REL: f64 = 0.15;
const SIZE_RANGE: (f64, f64) = (0.02, 0.09);
const POWER_MIN: f64 = 0.80;
const SLOPE_TOL: [f64; 3] = [0.10, 0.15, 0.15];
const HAND_TOL: f64 = 1e-12;

const D_GRID: [f64; 6] = [-0.45, -0.3, -0.1, 0.1, 0.25, 0.4];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

struct Suite {
    tables: TableStore,
    _dir: tempfile::TempDir,
    results: Vec<(String, bool)>,
    crit4_report: Option<String>,
    crit6_report: Option<String>,
}

impl Suite {
    fn check(&mut self, id: &str, name: &str, f: impl FnOnce(&mut Suite) -> Outcome) {
        let start = Instant::now();
        let o = f(self);
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>3} {name}: {} ({secs:.1} s)", o.detail);
        self.results.push((id.to_string(), o.passed));
    }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap_or_else(|e| panic!("bad acceptance config: {e}\n{text}"))
}

fn run(tables: &TableStore, cfg: &ExperimentConfig) -> RunOutput {
    run_with_tables(cfg, tables).unwrap_or_else(|e| panic!("run failed: {e}"))
}

fn run_in_pool(threads: usize, tables: &TableStore, cfg: &ExperimentConfig) -> McReport {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| run(tables, cfg).report)
}

/// `ln Γ(j + d) - ln Γ(j + 1)` from the Stirling series, written so that no
/// large logarithms cancel.
fn ln_gamma_gap(j: f64, d: f64) -> f64 {
    fn series(z: f64) -> f64 {
        // B_{2k} / (2k (2k - 1) z^{2k-1}), k = 1..6
        let c = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0];
        let z2 = z * z;
        let mut p = z;
        let mut s = 0.0;
        for ck in c {
            s += ck / p;
            p *= z2;
        }
        s
    }
    let jp1 = j + 1.0;
    (d - 1.0) * jp1.ln() + (j + d - 0.5) * ((d - 1.0) / jp1).ln_1p() - (d - 1.0) + series(j + d) - series(jp1)
}

fn coeff_oracle(d: f64, j: usize) -> f64 {
    if j < 20 {
        gamma(j as f64 + d) / (gamma(d) * gamma(j as f64 + 1.0))
    } else {
        let g = gamma(d);
        g.signum() * (ln_gamma_gap(j as f64, d) - g.abs().ln()).exp()
    }
}

fn criterion1() -> Outcome {
    let mut worst = 0.0f64;
    for d in D_GRID {
        let a = frac_coeffs(d, 10_001).unwrap().values;
        for (j, &v) in a.iter().enumerate() {
            let o = coeff_oracle(d, j);
            worst = worst.max(((v - o) / o).abs());
        }
    }
    outcome(worst <= COEFF_REL_TOL, format!("max relative error {worst:.2e} (tol {COEFF_REL_TOL:.0e})"))
}

fn criterion2() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst = 0.0f64;
    for d in D_GRID {
        for len in [1usize, 2, 10, 1000] {
            let u: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y = integrate_type2(&u, d).unwrap();
            let back = fractional_difference(&y, d).unwrap();
            for (a, b) in back.iter().zip(&u) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    outcome(worst <= ROUND_TRIP_TOL, format!("max error {worst:.2e} (tol {ROUND_TRIP_TOL:.0e})"))
}

/// `A(d)` by midpoint sums: `s = t^4` on `[0, 1]`, `s = e^v` on
/// `[1, 10^6]`, and the leading-order tail `d^2 S^{2d-1} / (1 - 2d)` beyond.
fn const_a_riemann(d: f64) -> f64 {
    let f = |s: f64| ((1.0 + s).powf(d) - s.powf(d)).powi(2);
    let n1 = 200_000;
    let h1 = 1.0 / n1 as f64;
    let near: f64 = (0..n1)
        .map(|i| {
            let t = (i as f64 + 0.5) * h1;
            f(t.powi(4)) * 4.0 * t.powi(3)
        })
        .sum::<f64>()
        * h1;
    let big = 1e6f64;
    let n2 = 2_000_000;
    let h2 = big.ln() / n2 as f64;
    let far: f64 = (0..n2)
        .map(|i| {
            let s = ((i as f64 + 0.5) * h2).exp();
            f(s) * s
        })
        .sum::<f64>()
        * h2;
    let tail = d * d * big.powf(2.0 * d - 1.0) / (1.0 - 2.0 * d);
    (1.0 / (2.0 * d + 1.0) + near + far + tail).sqrt()
}

fn terminal_variance(paths: usize, f: impl Fn(u64) -> f64) -> f64 {
    let xs: Vec<f64> = (0..paths as u64).map(f).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn criterion3() -> Outcome {
    let a0 = const_a(0.0).unwrap();
    let mut ok = (a0 - 1.0).abs() <= A_ZERO_TOL;
    let mut parts = vec![format!("A(0)={a0}")];
    for d in [-0.25, 0.25] {
        let q = const_a(d).unwrap();
        let r = const_a_riemann(d);
        ok &= (q - r).abs() <= A_DUAL_TOL;
        parts.push(format!("A({d})={q:.9} vs {r:.9}"));
    }
    let band = PATH_VAR_SIGMAS * (2.0 / PATH_VAR_PATHS as f64).sqrt();
    for d in [-0.25, 0.25] {
        let v1 = terminal_variance(PATH_VAR_PATHS, |r| {
            *simulate_type1(d, 256, derive_seed(31, r)).unwrap().values.last().unwrap()
        });
        let v2 = terminal_variance(PATH_VAR_PATHS, |r| {
            *simulate_type2(d, 256, derive_seed(32, r)).unwrap().values.last().unwrap()
        });
        ok &= (v1 - 1.0).abs() <= band && (v2 - 1.0).abs() <= band;
        parts.push(format!("Var B({d})={v1:.4} Var W({d})={v2:.4}"));
    }
    parts.push(format!("band ±{band:.4}"));
    outcome(ok, parts.join(", "))
}

fn invariance_config(d: f64, kind: &str, model: &str, ks: bool, tol: f64, seed: u64) -> ExperimentConfig {
    config(&format!(
        r#"
experiment = "invariance-principle"
n_list = [4096]
reps = 2000
seed = {seed}
functionals = []

[model]
{model}

[frac]
d = {d:?}
kind = "{kind}"

[tolerance]
terminal_variance_rel = {tol:?}
ks_alpha = {KS_ALPHA:?}

[checks]
terminal_variance = true
terminal_ks = {ks}
"#
    ))
}

fn verdict_line(report: &McReport) -> String {
    report
        .verdicts
        .iter()
        .map(|v| format!("{}={:.4}{}", v.check, v.observed, if v.passed { "" } else { "!" }))
        .collect::<Vec<_>>()
        .join(" ")
}

const IID: &str = "kind = \"iid-gaussian\"\nsigma = 1.0";

fn criterion4(s: &mut Suite) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in ["type1", "type2"] {
        for d in [-0.25, 0.0, 0.25] {
            let cfg = invariance_config(d, kind, IID, d == 0.0, TERMINAL_VAR_REL, 400);
            let report = if kind == "type1" && d == 0.25 {
                let r = run_in_pool(1, &s.tables, &cfg);
                s.crit4_report = Some(r.to_json());
                r
            } else {
                run(&s.tables, &cfg).report
            };
            ok &= report.passed() && !report.verdicts.is_empty();
            parts.push(format!("{kind} d={d}: {}", verdict_line(&report)));
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion5(s: &mut Suite) -> Outcome {
    let model = "kind = \"garch11\"\nomega = 0.1\nalpha = 0.1\nbeta = 0.8";
    let cfg = invariance_config(0.25, "type1", model, false, GARCH_VAR_REL, 500);
    let report = run(&s.tables, &cfg).report;
    let zeta = report.zeta.expect("zeta recorded");
    outcome(
        report.passed(),
        format!("{} (zeta={:.4} from {:?})", verdict_line(&report), zeta.norm, zeta.source),
    )
}

fn lrv_config() -> ExperimentConfig {
    config(&format!(
        r#"
experiment = "lrv-scaling"
n_list = [2048, 8192, 16384]
reps = 500
seed = 600

[model]
{IID}

[frac]
d = 0.2
kind = "type1"

[tolerance]
lrv_median_rel = {LRV_MEDIAN_REL:?}
"#
    ))
}

fn criterion6(s: &mut Suite) -> Outcome {
    let report = run_in_pool(1, &s.tables, &lrv_config());
    s.crit6_report = Some(report.to_json());
    let target = kappa1(0.2, 1.0).unwrap().powi(2);
    let errs: Vec<String> = report
        .per_n
        .iter()
        .map(|p| format!("n={} med={:.4} abs-err={:.4}", p.n, p.metrics["scaled_lrv"].median, p.values["median_abs_rel_error"]))
        .collect();
    let at_8192 = report.verdicts.iter().any(|v| v.check == "lrv-median@n=8192" && v.passed);
    outcome(
        report.passed() && at_8192,
        format!("kappa1^2={target:.4}; {}; {}", errs.join(", "), verdict_line(&report)),
    )
}

fn criterion7(s: &mut Suite) -> Outcome {
    let cfg = config(&format!(
        r#"
experiment = "stat-convergence"
n_list = [8192]
reps = 1000
seed = 700

[model]
{IID}

[frac]
d = 0.0
kind = "type1"

[tolerance]
kpss_mean_rel = {KPSS_MEAN_REL:?}

[checks]
kpss_mean = true
"#
    ));
    let report = run(&s.tables, &cfg).report;
    let mean = report.per_n[0].metrics["kpss"].mean;
    outcome(
        report.passed() && !report.verdicts.is_empty(),
        format!("mean normalized K_n = {mean:.5} vs 1/6 = {:.5}", 1.0 / 6.0),
    )
}

fn size_power_config(d: f64, size: bool, seed: u64) -> ExperimentConfig {
    config(&format!(
        r#"
experiment = "stat-convergence"
n_list = [4096]
reps = 500
seed = {seed}

[model]
{IID}

[frac]
d = {d:?}
kind = "type1"

[test]
d_null = 0.0
alpha = 0.05

[tolerance]
size_min = {:?}
size_max = {:?}
power_min = {POWER_MIN:?}

[checks]
kpss_mean = false
size = {size}
power = {}
"#,
        SIZE_RANGE.0,
        SIZE_RANGE.1,
        !size
    ))
}

fn criterion8(s: &mut Suite) -> Outcome {
    let size = run(&s.tables, &size_power_config(0.0, true, 800)).report;
    let power = run(&s.tables, &size_power_config(0.25, false, 801)).report;
    let v = |r: &McReport, k: &str| r.per_n[0].values[k];
    outcome(
        size.passed() && power.passed() && size.verdicts.len() == 2 && power.verdicts.len() == 1,
        format!(
            "size RS={:.3} KPSS={:.3}; power RS={:.3} (KPSS {:.3}, reported only)",
            v(&size, "rs_rejection_rate"),
            v(&size, "kpss_rejection_rate"),
            v(&power, "rs_rejection_rate"),
            v(&power, "kpss_rejection_rate"),
        ),
    )
}

fn criterion9(s: &mut Suite) -> Outcome {
    let cfg = config(&format!(
        r#"
experiment = "corollary-scaling"
n_list = [512, 1024, 2048, 4096, 8192, 16384]
reps = 200
seed = 900

[model]
{IID}

[frac]
d = 0.25
p = 1
kind = "type1"

[tolerance]
slope_endpoint_abs = {:?}
slope_partial_sum_abs = {:?}
slope_sum_sq_abs = {:?}
"#,
        SLOPE_TOL[0], SLOPE_TOL[1], SLOPE_TOL[2]
    ));
    let report = run(&s.tables, &cfg).report;
    let slopes: Vec<String> = report
        .slopes
        .iter()
        .map(|(k, v)| format!("{k}={:.3}±{:.3} (target {})", v.estimate, v.std_err, v.target))
        .collect();
    outcome(report.passed() && report.verdicts.len() == 3, slopes.join(", "))
}

fn demo_config(model: &str) -> ExperimentConfig {
    config(&format!(
        r#"
experiment = "moment-boundary-demo"
n_list = [256, 4096, 262144]
reps = 200
seed = 1000

[model]
{model}

[frac]
d = -0.25
"#
    ))
}

fn criterion10(s: &mut Suite) -> Outcome {
    let heavy = run(&s.tables, &demo_config("kind = \"heavy-tail-eta\"\nq0 = 4.0")).report;
    let gauss = run(&s.tables, &demo_config(IID)).report;
    let medians = |r: &McReport| {
        r.per_n.iter().map(|p| format!("{:.3}", p.metrics["ratio"].median)).collect::<Vec<_>>().join(" < ")
    };
    let ok = heavy.passed() && gauss.passed() && heavy.verdicts.len() == 1 && gauss.verdicts.len() == 1;
    outcome(
        ok,
        format!(
            "heavy medians {} (moment flag {}); gaussian medians {}",
            medians(&heavy),
            heavy.moment_warning.is_some(),
            medians(&gauss).replace('<', ">")
        ),
    )
}

fn criterion11() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= HAND_TOL * b.abs().max(1.0);
    let vec_close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y));
    let alt = [1.0, -1.0, 1.0, -1.0];
    let checks = [
        ("Q=1", close(rs_statistic(&[-1.0, 1.0], 0).unwrap(), 1.0)),
        ("Q=sqrt(3/2)", close(rs_statistic(&[1.0, 2.0, 3.0], 0).unwrap(), 1.5f64.sqrt())),
        ("K=1/4", close(kpss_statistic(&[-1.0, 1.0], 0).unwrap(), 0.25)),
        ("K=1/3", close(kpss_statistic(&[1.0, 2.0, 3.0], 0).unwrap(), 1.0 / 3.0)),
        ("w2=1", close(bartlett_lrv(&alt, 0).unwrap().w2, 1.0)),
        ("w2=1/4", close(bartlett_lrv(&alt, 1).unwrap().w2, 0.25)),
        ("w2=0", bartlett_lrv(&[3.7; 4], 1).unwrap().w2 == 0.0),
        ("a(0)", vec_close(&frac_coeffs(0.0, 4).unwrap().values, &[1.0, 0.0, 0.0, 0.0])),
        ("a(0.4)", vec_close(&frac_coeffs(0.4, 4).unwrap().values, &[1.0, 0.4, 0.28, 0.224])),
        ("a(-0.3)", vec_close(&frac_coeffs(-0.3, 3).unwrap().values, &[1.0, -0.3, -0.105])),
        ("A(0.4)", vec_close(&partial_sums(&frac_coeffs(0.4, 3).unwrap()).unwrap(), &[1.0, 1.4, 1.68])),
        ("A(-0.3)", vec_close(&partial_sums(&frac_coeffs(-0.3, 3).unwrap()).unwrap(), &[1.0, 0.7, 0.595])),
        ("Y impulse", vec_close(&integrate_type2(&[1.0, 0.0, 0.0], 0.4).unwrap(), &[1.0, 0.4, 0.28])),
        ("Y ones", vec_close(&integrate_type2(&[1.0, 1.0, 1.0], 0.4).unwrap(), &[1.0, 1.4, 1.68])),
        ("diff", vec_close(&fractional_difference(&[1.0, 0.4, 0.28], 0.4).unwrap(), &[1.0, 0.0, 0.0])),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} hand values reproduced (tol {HAND_TOL:.0e})", checks.len())
        } else {
            format!("mismatch: {}", failed.join(", "))
        },
    )
}

fn criterion12(s: &mut Suite) -> Outcome {
    let inv = invariance_config(0.25, "type1", IID, false, TERMINAL_VAR_REL, 400);
    let two_inv = run_in_pool(2, &s.tables, &inv).to_json();
    let two_lrv = run_in_pool(2, &s.tables, &lrv_config()).to_json();
    let same_inv = s.crit4_report.as_deref() == Some(two_inv.as_str());
    let same_lrv = s.crit6_report.as_deref() == Some(two_lrv.as_str());
    outcome(
        same_inv && same_lrv,
        format!(
            "1 vs 2 threads: criterion-4 report identical={same_inv} ({} bytes), criterion-6 report identical={same_lrv} ({} bytes)",
            two_inv.len(),
            two_lrv.len()
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let tables = TableStore::new(dir.path()).build_missing(true).with_resolution(1024, 20_000, 77);
    let mut s = Suite { tables, _dir: dir, results: Vec::new(), crit4_report: None, crit6_report: None };
    let total = Instant::now();
    s.check("1", "coefficient oracle", |_| criterion1());
    s.check("2", "filter round trip", |_| criterion2());
    s.check("3", "normalization constants", |_| criterion3());
    s.check("4", "terminal law, iid Gaussian", criterion4);
    s.check("5", "terminal law, GARCH(1,1)", criterion5);
    s.check("6", "long-run variance scaling", criterion6);
    s.check("7", "KPSS mean", criterion7);
    s.check("8", "test size and power", criterion8);
    s.check("9", "higher-order exponents", criterion9);
    s.check("10", "moment boundary demo", criterion10);
    s.check("11", "hand values", |_| criterion11());
    s.check("12", "determinism across thread counts", criterion12);
    let failed: Vec<&str> = s.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!(
        "acceptance: {}/{} passed in {:.0} s{}",
        s.results.len() - failed.len(),
        s.results.len(),
        total.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
