//! Command implementations behind the CLI surface.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::json;

use windcast_core::dataset::{self, Dataset};
use windcast_core::design::{self, BlockLayout};
use windcast_core::forecast::{backtest, ForecastConfig, ForecastRun};
use windcast_core::metrics::{self, EvaluationReport};
use windcast_core::orders;
use windcast_core::solver::{bomp, SolverConfig};
use windcast_core::synth;

use crate::cli::{
    CompareArgs, EvaluateArgs, ForecastArgs, IngestArgs, SynthArgs, TrainArgs,
};
use crate::config::{pick, RunConfig};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;
use crate::methods::MethodSpec;

const DEFAULT_GAP_LIMIT: usize = 3;
const DEFAULT_HORIZON: usize = 6;
const DEFAULT_WINDOW: usize = 720;
const DEFAULT_NMAX: usize = 6;
const DEFAULT_TAU: f64 = 0.4;
/// Tail share of the training span held out when tuning lag orders.
const TUNE_SPAN_CAP: usize = 360;

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required {flag}")))
}

fn load_dataset(path: &Path, gap_limit: usize) -> CliResult<Dataset> {
    Ok(dataset::ingest_csv(path, gap_limit)?)
}

fn solver_config(kmax: Option<usize>) -> SolverConfig {
    let min_gain = std::env::var("WINDCAST_MIN_GAIN")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(SolverConfig::default().min_gain);
    SolverConfig {
        k_max: kmax.unwrap_or(SolverConfig::default().k_max),
        min_gain,
        ..SolverConfig::default()
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn cmd_ingest(args: IngestArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    let data = require(pick(args.data, file_cfg.data), "--data")?;
    let gap_limit = pick(args.gap_limit, file_cfg.gap_limit).unwrap_or(DEFAULT_GAP_LIMIT);

    let snapshot = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "data": data.display().to_string(),
        "gap_limit": gap_limit,
    });
    let mut rec = RunRecorder::new(&args.common.out, "ingest", snapshot, args.common.seed);
    rec.add_input(&data)?;

    rec.start_phase("ingest");
    let ds = load_dataset(&data, gap_limit)?;
    rec.start_phase("write");
    std::fs::create_dir_all(rec.out_dir())?;
    let csv_path = rec.out_dir().join("dataset.csv");
    dataset::write_canonical(&ds, &csv_path)?;
    rec.note_output("dataset.csv");
    rec.note_output("dataset.meta.json");
    rec.end_phase();

    println!(
        "ingested {} stations x {} hours ({} cells interpolated)",
        ds.station_count(),
        ds.len(),
        ds.filled_cells()
    );
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    let stations = pick(args.stations, file_cfg.stations).unwrap_or(20);
    let blocks = pick(args.blocks, file_cfg.blocks).unwrap_or(3);
    let sigma = pick(args.sigma, file_cfg.sigma).unwrap_or(0.5);
    let baseline = pick(args.baseline, file_cfg.baseline).unwrap_or(8.0);
    let hours = pick(args.hours, file_cfg.hours).unwrap_or(1080);
    let burn_in = pick(args.burn_in, file_cfg.burn_in).unwrap_or(200);
    let seed = pick(args.common.seed, file_cfg.seed).unwrap_or(0);

    let layout = match pick(args.orders, file_cfg.orders.clone()) {
        Some(orders) => {
            let n_max = orders.iter().copied().max().unwrap_or(0);
            BlockLayout::new(orders, n_max)?
        }
        None => {
            let order = pick(args.order, file_cfg.order).unwrap_or(3);
            BlockLayout::uniform(stations, order)?
        }
    };

    let snapshot = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "stations": stations,
        "orders": layout.orders(),
        "blocks": blocks,
        "sigma": sigma,
        "baseline": baseline,
        "hours": hours,
        "burn_in": burn_in,
        "seed": seed,
    });
    let mut rec = RunRecorder::new(&args.common.out, "synth", snapshot, Some(seed));

    rec.start_phase("plant");
    let model = synth::plant(stations, &layout, blocks, seed)?
        .with_noise_sigma(sigma)
        .with_baseline_level(baseline);
    rec.start_phase("simulate");
    let ds = synth::simulate(&model, hours, burn_in)?;
    rec.start_phase("write");
    std::fs::create_dir_all(rec.out_dir())?;
    dataset::write_canonical(&ds, rec.out_dir().join("dataset.csv"))?;
    rec.note_output("dataset.csv");
    rec.note_output("dataset.meta.json");
    let mut truth = serde_json::to_string_pretty(&model.ground_truth())?;
    truth.push('\n');
    rec.write_text("truth.json", &truth)?;
    rec.end_phase();

    println!(
        "planted {} stations, {} blocks per target, spectral radius {:.3}",
        stations,
        blocks,
        model.spectral_radius()
    );
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    let data = require(pick(args.data, file_cfg.data), "--data")?;
    let target_id = require(pick(args.target, file_cfg.target), "--target")?;
    let gap_limit = pick(args.gap_limit, file_cfg.gap_limit).unwrap_or(DEFAULT_GAP_LIMIT);
    let kmax = pick(args.kmax, file_cfg.kmax);

    let ds = load_dataset(&data, gap_limit)?;
    let target = ds.station_index(&target_id)?;

    let layout = if args.nonuniform {
        let nmax = pick(args.nmax, file_cfg.nmax).unwrap_or(DEFAULT_NMAX);
        let tau = pick(args.tau, file_cfg.tau).unwrap_or(DEFAULT_TAU);
        let profile = orders::correlate(&ds, target, nmax)?;
        orders::select_orders(&profile, nmax, tau)?
    } else {
        let order = pick(args.order, file_cfg.order).unwrap_or(3);
        BlockLayout::uniform(ds.station_count(), order)?
    };

    let snapshot = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "data": data.display().to_string(),
        "target": target_id,
        "orders": layout.orders(),
        "n_max": layout.n_max(),
        "kmax": kmax,
        "gap_limit": gap_limit,
    });
    let mut rec = RunRecorder::new(&args.common.out, "train", snapshot, args.common.seed);
    rec.add_input(&data)?;

    rec.start_phase("train");
    let sys = design::build_nonuniform(&ds, target, &layout, None)?;
    let coeffs = bomp(&sys, &solver_config(kmax))?;
    rec.start_phase("write");
    rec.write_text("coefficients.json", &coeffs.to_json_string()?)?;
    rec.end_phase();

    println!(
        "trained target '{}': support {:?}, residual {:.6e}",
        target_id,
        coeffs.support(),
        coeffs.final_residual().unwrap_or(0.0)
    );
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// shared backtest machinery (forecast / compare)
// ---------------------------------------------------------------------------

struct BacktestSetup {
    data: PathBuf,
    target_id: String,
    target: usize,
    split: usize,
    horizon: usize,
    window: usize,
    specs: Vec<MethodSpec>,
    solver: SolverConfig,
    nmax: usize,
    tau: f64,
    tune: bool,
    jobs: usize,
    gap_limit: usize,
    ds: Dataset,
    nonuniform_layout: Option<BlockLayout>,
}

impl BacktestSetup {
    fn config_snapshot(&self) -> serde_json::Value {
        json!({
            "schema_version": crate::config::SCHEMA_VERSION,
            "data": self.data.display().to_string(),
            "target": self.target_id,
            "split_hour": self.split,
            "horizon": self.horizon,
            "window": self.window,
            "methods": self.specs.iter().map(|s| s.label()).collect::<Vec<_>>(),
            "kmax": self.solver.k_max,
            "nmax": self.nmax,
            "tau": self.tau,
            "tune_orders": self.tune,
            "jobs": self.jobs,
            "gap_limit": self.gap_limit,
            "nonuniform_orders": self.nonuniform_layout.as_ref().map(|l| l.orders().to_vec()),
        })
    }

    fn forecast_config(&self, spec: &MethodSpec) -> CliResult<ForecastConfig> {
        Ok(ForecastConfig {
            horizon: self.horizon,
            window: self.window,
            method: spec.to_method(self.nonuniform_layout.as_ref())?,
            solver: self.solver.clone(),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_setup(
    file_cfg: &RunConfig,
    data: Option<PathBuf>,
    target: Option<String>,
    split_hour: Option<usize>,
    horizon: Option<usize>,
    window: Option<usize>,
    raw_methods: Vec<String>,
    kmax: Option<usize>,
    nmax: Option<usize>,
    tau: Option<f64>,
    tune_flag: bool,
    jobs: Option<usize>,
    gap_limit: Option<usize>,
) -> CliResult<BacktestSetup> {
    let data = require(pick(data, file_cfg.data.clone()), "--data")?;
    let target_id = require(pick(target, file_cfg.target.clone()), "--target")?;
    let split = require(pick(split_hour, file_cfg.split_hour), "--split-hour")?;
    let horizon = pick(horizon, file_cfg.horizon).unwrap_or(DEFAULT_HORIZON);
    let window = pick(window, file_cfg.window).unwrap_or(DEFAULT_WINDOW);
    let gap_limit = pick(gap_limit, file_cfg.gap_limit).unwrap_or(DEFAULT_GAP_LIMIT);
    let nmax = pick(nmax, file_cfg.nmax).unwrap_or(DEFAULT_NMAX);
    let tau = pick(tau, file_cfg.tau).unwrap_or(DEFAULT_TAU);
    let tune = tune_flag || file_cfg.tune_orders.unwrap_or(false);
    let jobs = pick(jobs, file_cfg.jobs).unwrap_or(1).max(1);
    if horizon == 0 {
        return Err(CliError::usage("--horizon must be >= 1"));
    }

    let methods = if raw_methods.is_empty() {
        file_cfg
            .methods
            .clone()
            .ok_or_else(|| CliError::usage("missing required --methods"))?
    } else {
        raw_methods
    };
    let specs = MethodSpec::parse_list(&methods)?;

    let ds = load_dataset(&data, gap_limit)?;
    let target_idx = ds.station_index(&target_id)?;
    if split == 0 || split >= ds.len() {
        return Err(CliError::usage(format!(
            "--split-hour {split} must lie strictly inside the {}-hour dataset",
            ds.len()
        )));
    }

    let nonuniform_layout = if specs.contains(&MethodSpec::CstNonuniform) {
        Some(resolve_nonuniform_layout(
            &ds, target_idx, split, nmax, tau, tune, horizon, window, kmax, jobs,
        )?)
    } else {
        None
    };

    Ok(BacktestSetup {
        data,
        target_id,
        target: target_idx,
        split,
        horizon,
        window,
        specs,
        solver: solver_config(kmax),
        nmax,
        tau,
        tune,
        jobs,
        gap_limit,
        ds,
        nonuniform_layout,
    })
}

/// Lag orders for the nonuniform method, from the training span only.
#[allow(clippy::too_many_arguments)]
fn resolve_nonuniform_layout(
    ds: &Dataset,
    target: usize,
    split: usize,
    nmax: usize,
    tau: f64,
    tune: bool,
    horizon: usize,
    window: usize,
    kmax: Option<usize>,
    jobs: usize,
) -> CliResult<BlockLayout> {
    let train = ds.slice(0, split)?;
    if !tune {
        let profile = orders::correlate(&train, target, nmax)?;
        return Ok(orders::select_orders(&profile, nmax, tau)?);
    }
    let tune_len = (split / 3).clamp(horizon, TUNE_SPAN_CAP);
    if tune_len >= split {
        return Err(CliError::usage(format!(
            "training span {split} is too short to hold out {tune_len} tuning hours"
        )));
    }
    let inner_split = split - tune_len;
    let ds_train = ds.slice(0, inner_split)?;
    let ds_val = ds.slice(inner_split, split)?;
    let settings = orders::TuneSettings {
        horizon,
        window,
        solver: solver_config(kmax),
        jobs,
    };
    let grid = orders::default_grid();
    Ok(orders::tune_orders(&ds_train, &ds_val, target, &grid, &settings)?)
}

/// Backtests every method, spreading work over `jobs` threads; results come
/// back in method order so outputs stay deterministic.
fn run_methods(setup: &BacktestSetup) -> CliResult<Vec<ForecastRun>> {
    let configs = setup
        .specs
        .iter()
        .map(|spec| setup.forecast_config(spec))
        .collect::<CliResult<Vec<_>>>()?;
    let count = configs.len();
    let slots: Mutex<Vec<Option<Result<ForecastRun, windcast_core::Error>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = setup.jobs.min(count).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let result = backtest(&setup.ds, setup.target, setup.split, &configs[i]);
                slots.lock().expect("worker poisoned the slots")[i] = Some(result);
            });
        }
    });

    let slots = slots.into_inner().expect("worker poisoned the slots");
    let mut runs = Vec::with_capacity(count);
    for (i, slot) in slots.into_iter().enumerate() {
        let run = slot.unwrap_or_else(|| panic!("method {i} never ran"));
        runs.push(run.map_err(CliError::from)?);
    }
    Ok(runs)
}

fn write_run_artifacts(rec: &mut RunRecorder, run: &ForecastRun) -> CliResult<()> {
    let label = &run.method;
    rec.write_text(&format!("runs/{label}.csv"), &run.to_csv_string())?;
    let mut body = serde_json::to_string_pretty(&run.to_wire())?;
    body.push('\n');
    rec.write_text(&format!("runs/{label}.json"), &body)?;
    for (cycle, coeffs) in run.coefficients_log.iter().enumerate() {
        rec.write_text(
            &format!("coeffs/{label}/{cycle:04}.json"),
            &coeffs.to_json_string()?,
        )?;
    }
    Ok(())
}

fn build_report(setup: &BacktestSetup, runs: &[ForecastRun]) -> CliResult<EvaluationReport> {
    let mut report = EvaluationReport::new(
        setup.target_id.clone(),
        [setup.split, setup.ds.len()],
    );
    for run in runs {
        let predicted = run.predicted_values();
        report.push_method(&run.method, &run.actuals, &predicted)?;
        report.per_step.push(metrics::step_breakdown(
            &run.method,
            &run.hours(),
            &run.actuals,
            &predicted,
            setup.split,
            setup.horizon,
        )?);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

pub fn cmd_forecast(args: ForecastArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    let setup = resolve_setup(
        &file_cfg,
        args.data,
        args.target,
        args.split_hour,
        args.horizon,
        args.window,
        args.method.map(|m| vec![m]).unwrap_or_default(),
        args.kmax,
        args.nmax,
        args.tau,
        args.tune_orders,
        None,
        args.gap_limit,
    )?;

    let mut rec = RunRecorder::new(
        &args.common.out,
        "forecast",
        setup.config_snapshot(),
        args.common.seed,
    );
    rec.add_input(&setup.data)?;
    rec.start_phase("backtest");
    let runs = run_methods(&setup)?;
    rec.start_phase("write");
    for run in &runs {
        write_run_artifacts(&mut rec, run)?;
    }
    rec.end_phase();

    for run in &runs {
        let predicted = run.predicted_values();
        println!(
            "{}: {} predictions, rmse {:.4} m/s",
            run.method,
            predicted.len(),
            metrics::rmse(&run.actuals, &predicted)?
        );
    }
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn parse_run_csv(path: &Path) -> CliResult<(String, Vec<usize>, Vec<f64>, Vec<f64>)> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = raw.lines();
    let header = lines.next().unwrap_or_default();
    if header != "hour,actual,predicted,method" {
        return Err(CliError::config(format!(
            "{}: expected header 'hour,actual,predicted,method'",
            path.display()
        )));
    }
    let mut method = String::new();
    let (mut hours, mut actuals, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(CliError::config(format!(
                "{}: malformed row {}",
                path.display(),
                idx + 2
            )));
        }
        let parse_err = |what: &str| {
            CliError::config(format!("{}: bad {what} in row {}", path.display(), idx + 2))
        };
        hours.push(fields[0].parse::<usize>().map_err(|_| parse_err("hour"))?);
        actuals.push(fields[1].parse::<f64>().map_err(|_| parse_err("actual"))?);
        predicted.push(fields[2].parse::<f64>().map_err(|_| parse_err("predicted"))?);
        if method.is_empty() {
            method = fields[3].to_string();
        }
    }
    if hours.is_empty() {
        return Err(CliError::config(format!("{}: no rows", path.display())));
    }
    Ok((method, hours, actuals, predicted))
}

pub fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    if args.runs.is_empty() {
        return Err(CliError::usage("missing required --runs"));
    }
    let horizon = pick(args.horizon, file_cfg.horizon).unwrap_or(DEFAULT_HORIZON);
    let target = pick(args.target, file_cfg.target).unwrap_or_default();

    let snapshot = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "runs": args.runs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "horizon": horizon,
        "target": target,
    });
    let mut rec = RunRecorder::new(&args.common.out, "evaluate", snapshot, args.common.seed);

    rec.start_phase("evaluate");
    let mut parsed = Vec::new();
    for path in &args.runs {
        rec.add_input(path)?;
        parsed.push(parse_run_csv(path)?);
    }
    let span_from = parsed
        .iter()
        .flat_map(|(_, hours, _, _)| hours.iter().copied())
        .min()
        .unwrap_or(0);
    let span_to = parsed
        .iter()
        .flat_map(|(_, hours, _, _)| hours.iter().copied())
        .max()
        .map(|h| h + 1)
        .unwrap_or(0);
    let mut report = EvaluationReport::new(target, [span_from, span_to]);
    for (method, hours, actuals, predicted) in &parsed {
        report.push_method(method, actuals, predicted)?;
        report.per_step.push(metrics::step_breakdown(
            method, hours, actuals, predicted, span_from, horizon,
        )?);
    }
    rec.start_phase("write");
    write_report(&mut rec, &report)?;
    rec.end_phase();

    print_report(&report);
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}

fn write_report(rec: &mut RunRecorder, report: &EvaluationReport) -> CliResult<()> {
    rec.write_text("report.csv", &report.to_csv_string())?;
    let mut body = serde_json::to_string_pretty(report)?;
    body.push('\n');
    rec.write_text("report.json", &body)?;
    Ok(())
}

fn print_report(report: &EvaluationReport) {
    println!("method,mae_ms,rmse_ms,nrmse_pct");
    for row in &report.rows {
        println!(
            "{},{:.4},{:.4},{:.2}",
            row.method, row.mae_ms, row.rmse_ms, row.nrmse_pct
        );
    }
    // reductions against the worst row, the way improvements are quoted
    if let Some(base) = report
        .rows
        .iter()
        .map(|r| r.nrmse_pct)
        .fold(None::<f64>, |acc, v| Some(acc.map_or(v, |a| a.max(v))))
    {
        for row in &report.rows {
            if row.nrmse_pct < base {
                if let Ok(cut) = metrics::reduction(base, row.nrmse_pct) {
                    println!("# {} cuts NRMSE by {:.1}% vs worst", row.method, cut);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

pub fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let file_cfg = RunConfig::load_optional(args.common.config.as_deref())?;
    let setup = resolve_setup(
        &file_cfg,
        args.data,
        args.target,
        args.split_hour,
        args.horizon,
        args.window,
        args.methods,
        args.kmax,
        args.nmax,
        args.tau,
        args.tune_orders,
        args.jobs,
        args.gap_limit,
    )?;

    let mut rec = RunRecorder::new(
        &args.common.out,
        "compare",
        setup.config_snapshot(),
        args.common.seed,
    );
    rec.add_input(&setup.data)?;

    rec.start_phase("backtest");
    let runs = run_methods(&setup)?;
    rec.start_phase("report");
    let report = build_report(&setup, &runs)?;
    rec.start_phase("write");
    for run in &runs {
        write_run_artifacts(&mut rec, run)?;
    }
    write_report(&mut rec, &report)?;
    rec.end_phase();

    print_report(&report);
    rec.finish()?;
    println!("wrote {}", args.common.out.display());
    Ok(())
}
