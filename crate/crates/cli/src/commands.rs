use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fracinv_core::fbm::build_quantile_table;
use fracinv_core::fracops::{burn_in_for, check_order, integrate_higher, HigherSource, DEFAULT_TRUNCATION_CAP};
use fracinv_core::harness::{self, ZetaSource};
use fracinv_core::innovations::gen_heavy_tail_eta;
use fracinv_core::memtests::{bandwidth, default_bandwidth, long_memory_test};
use fracinv_core::series::{self, SeriesFormat};
use fracinv_core::{
    Error, ExperimentConfig, FracSpec, InnovationModel, InnovationProcess, InnovationSpec, McReport, ProcessKind,
    QuantileTable, TableStore, Truncation,
};
use serde::Serialize;
use serde_json::json;

use crate::{CliError, ShowArgs, SimulateArgs, TablesArgs, TestArgs, VerifyArgs};

/// Bad parameter values exit with the usage code, everything else with the
/// data code.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain { .. }
            | Error::InvalidModel(_)
            | Error::Config(_)
            | Error::GridSize(_)
            | Error::Bandwidth { .. }
            | Error::TruncationInfeasible { .. } => CliError::Usage(msg),
            _ => CliError::Data(msg),
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(data_err)?;
    print_text(&text)
}

/// Writes a line to stdout; a closed pipe is not an error.
fn print_text(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(data_err(e)),
        _ => Ok(()),
    }
}

/// Parses `--model NAME --param k=v ...` by assembling a TOML table.
pub fn model_from_flags(name: &str, params: &[String]) -> Result<InnovationSpec, CliError> {
    let mut text = format!("kind = {}\n", toml_string(name));
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param {p:?} is not of the form key=value")))?;
        let k = k.trim();
        let v = v.trim();
        // Bare words become strings, anything else must be a TOML value.
        let value = if v.parse::<toml::Value>().is_ok() || toml::from_str::<toml::Table>(&format!("x = {v}")).is_ok() {
            v.to_string()
        } else {
            toml_string(v)
        };
        text.push_str(&format!("{k} = {value}\n"));
    }
    parse_model(&text).map_err(|e| CliError::Usage(format!("model {name:?}: {e}")))
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn parse_model(text: &str) -> Result<InnovationSpec, String> {
    toml::from_str::<InnovationSpec>(text).map_err(|e| e.message().to_string())
}

pub fn model_from_file(path: &Path) -> Result<InnovationSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    // Either a bare model table or one nested under `[model]`.
    #[derive(serde::Deserialize)]
    struct Wrapped {
        model: InnovationSpec,
    }
    match toml::from_str::<Wrapped>(&text) {
        Ok(w) => Ok(w.model),
        Err(_) => parse_model(&text).map_err(|e| CliError::Usage(format!("model file {}: {e}", path.display()))),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    check_order(a.d)?;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let model = match (&a.model, &a.model_file) {
        (Some(name), _) => model_from_flags(name, &a.params)?,
        (None, Some(path)) => model_from_file(path)?,
        (None, None) => InnovationSpec::iid_gaussian(1.0),
    };
    let kind: ProcessKind = a.kind.into();
    let spec = FracSpec::new(a.d, a.p, kind)?;

    let mut meta = json!({
        "format_version": 1,
        "out": a.out.display().to_string(),
        "n": a.n,
        "d": a.d,
        "p": a.p,
        "kind": kind.as_str(),
        "seed": a.seed,
        "model": model,
    });

    let values = if let InnovationModel::HeavyTailEta { q0, v0 } = model.model {
        if kind != ProcessKind::TypeII {
            return Err(CliError::Usage("heavy-tail-eta innovations are only simulated as type2".into()));
        }
        let u = gen_heavy_tail_eta(q0, v0, a.n, a.seed)?;
        meta["zeta_norm"] = serde_json::Value::Null;
        meta["zeta_source"] = json!("unavailable");
        integrate_higher(HigherSource::Series(u.values()), &spec)?
    } else {
        let process = InnovationProcess::new(&model)?;
        let truncation = match (a.burn_in, a.eps_tail) {
            (Some(m), _) => Truncation::Lags(m),
            (None, Some(eps)) => {
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(CliError::Usage(format!("--eps-tail {eps} must be positive")));
                }
                Truncation::tolerance(eps)
            }
            (None, None) => Truncation::Lags(harness::DEFAULT_BURN_FACTOR * a.n),
        };
        if kind == ProcessKind::TypeI {
            let m = match truncation {
                Truncation::Lags(m) => m,
                Truncation::Tolerance { eps_tail, cap } => burn_in_for(a.d, process.rms(), eps_tail, cap)?,
            };
            meta["burn_in"] = json!(m);
            meta["truncation"] = json!(truncation);
            meta["truncation_cap"] = json!(DEFAULT_TRUNCATION_CAP);
        }
        match process.analytic_zeta_norm2() {
            Some(z2) => {
                meta["zeta_norm"] = json!(z2.sqrt());
                meta["zeta_source"] = json!(ZetaSource::Analytic);
            }
            None => {
                meta["zeta_norm"] = serde_json::Value::Null;
                meta["zeta_source"] = json!("unavailable");
            }
        }
        meta["innovation_burn_in"] = json!(process.burn_in());
        integrate_higher(HigherSource::Model { spec: &model, n: a.n, truncation, seed: a.seed }, &spec)?
    };
    series::save(&a.out, values.values())?;
    meta["format"] = json!(match SeriesFormat::from_path(&a.out) {
        SeriesFormat::Csv => "csv",
        SeriesFormat::Binary => "binary",
    });
    print_json(&meta)
}

pub fn test(a: TestArgs) -> Result<(), CliError> {
    let x = series::load(&a.input)?;
    let n = x.values().len();
    let l = match (a.l, a.bandwidth_rate) {
        (Some(l), _) => l,
        (None, Some(rate)) => {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(CliError::Usage(format!("--bandwidth-rate {rate} must lie in (0, 1)")));
            }
            bandwidth(n, rate)
        }
        (None, None) => default_bandwidth(n),
    };
    if !(a.d_null > -0.5 && a.d_null < 0.5) {
        return Err(CliError::Usage(format!("--d-null {} must lie in (-0.5, 0.5)", a.d_null)));
    }
    let model = a.model_file.as_deref().map(model_from_file).transpose()?;
    let t = &a.tables;
    let store = TableStore::new(&t.tables_dir)
        .build_missing(t.build_missing)
        .with_resolution(t.table_m, t.table_reps, t.table_seed);
    let report = long_memory_test(x.values(), a.stat.into(), Some(l), a.d_null, &store, model.as_ref())?;
    print_json(&report)
}

pub fn tables(a: TablesArgs) -> Result<(), CliError> {
    let kind: ProcessKind = a.kind.into();
    let table = build_quantile_table(a.functional.into(), kind, a.d, a.m, a.reps, a.seed)?;
    let path = table.save(&a.out_dir)?;
    print_json(&json!({
        "format_version": 1,
        "file": table.key.file_name(),
        "path": path.display().to_string(),
        "functional": table.key.functional,
        "kind": kind.as_str(),
        "d": a.d,
        "m": a.m,
        "reps": a.reps,
        "seed": a.seed,
        "mean": table.mean(),
        "median": table.median(),
        "q95": table.quantile(0.95),
    }))
}

pub fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| match e {
        Error::Io(io) => CliError::Usage(format!("cannot read config {}: {io}", a.config.display())),
        other => CliError::Usage(other.to_string()),
    })?;
    if let Some(dir) = a.tables_dir {
        cfg.tables_dir = Some(dir);
    }
    let out_dir = a.out_dir.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| "out".into());
    let start = Instant::now();
    let output = harness::run(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    output.write(&out_dir)?;
    let timing = json!({
        "experiment": cfg.experiment.as_str(),
        "wall_seconds": elapsed,
        "threads": rayon::current_num_threads(),
    });
    fs::write(out_dir.join("timing.json"), format!("{}\n", serde_json::to_string_pretty(&timing).map_err(data_err)?))
        .map_err(data_err)?;
    let report = &output.report;
    for v in &report.verdicts {
        print_text(&verdict_line(v))?;
    }
    print_text(&format!("report: {}", out_dir.join("report.json").display()))?;
    if report.passed() {
        Ok(())
    } else {
        let failed = report.verdicts.iter().filter(|v| !v.passed).count();
        Err(CliError::Verdict(format!("{failed} of {} checks failed", report.verdicts.len())))
    }
}

fn verdict_line(v: &harness::Verdict) -> String {
    format!(
        "{} {}: observed {:.6} target {:.6} ({} = {}; {})",
        if v.passed { "PASS" } else { "FAIL" },
        v.check,
        v.observed,
        v.target,
        v.tolerance_name,
        v.tolerance,
        v.rule
    )
}

enum Shown {
    Table(QuantileTable),
    Report(Box<McReport>),
    Series(Vec<f64>),
}

fn load_any(path: &Path) -> Result<Shown, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    if bytes.starts_with(b"fracinv-quantile-table") {
        return Ok(Shown::Table(QuantileTable::from_bytes(&bytes, path)?));
    }
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        return Ok(Shown::Report(Box::new(McReport::load(path)?)));
    }
    match series::load(path) {
        Ok(s) => Ok(Shown::Series(s.into_vec())),
        Err(e) => Err(CliError::Data(format!(
            "{} is not a quantile table, experiment report or series: {e}",
            path.display()
        ))),
    }
}

pub fn show(a: ShowArgs) -> Result<(), CliError> {
    let shown = load_any(&a.path)?;
    let (summary, plot) = match &shown {
        Shown::Table(t) => {
            let k = &t.key;
            let mut s = String::from("quantile table\n");
            s += &format!("  id         {}\n", t.id());
            s += &format!("  functional {}\n  kind       {}\n  d          {}\n", k.functional, k.kind.as_str(), k.d);
            s += &format!("  m          {}\n  reps       {}\n  seed       {}\n", k.m, k.reps, k.seed);
            s += &format!("  min        {:.6}\n  median     {:.6}\n  max        {:.6}\n", t.quantile(0.0), t.median(), t.quantile(1.0));
            s += &format!("  mean       {:.6}", t.mean());
            let mut plot = String::from("p,value\n");
            for i in 1..100 {
                let p = i as f64 / 100.0;
                plot += &format!("{p},{:?}\n", t.quantile(p));
            }
            (s, plot)
        }
        Shown::Report(r) => {
            let mut s = format!("experiment report: {}\n", r.experiment.as_str());
            if let Some(w) = &r.moment_warning {
                s += &format!("WARNING: {w}\n");
            }
            s += &format!("{:>10}  {:<24} {:>14} {:>14} {:>14}\n", "n", "metric", "mean", "variance", "median");
            for p in &r.per_n {
                for (name, m) in &p.metrics {
                    s += &format!("{:>10}  {:<24} {:>14.6} {:>14.6} {:>14.6}\n", p.n, name, m.mean, m.variance, m.median);
                }
            }
            for v in &r.verdicts {
                s += &verdict_line(v);
                s.push('\n');
            }
            s += &format!("overall: {}", if r.passed() { "PASS" } else { "FAIL" });
            (s, r.summary_csv())
        }
        Shown::Series(x) => {
            let n = x.len();
            let mut s = format!("series of length {n}");
            if n > 0 {
                let m = harness::summarize(x);
                s += &format!("\n  mean {:.6}\n  variance {:.6}\n  min {:.6}\n  max {:.6}", m.mean, m.variance, m.min, m.max);
            }
            let mut plot = String::from("t,value\n");
            for (k, v) in x.iter().enumerate() {
                plot += &format!("{:?},{v:?}\n", (k + 1) as f64 / n as f64);
            }
            (s, plot)
        }
    };
    if let Some(out) = &a.plot_data {
        fs::write(out, plot).map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
    }
    print_text(&summary)
}
