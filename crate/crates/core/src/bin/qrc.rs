//! Command-line front end: capacity runs, task scoring, parameter sweeps,
//! benchmark-data caching, and config inspection.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qrc_core::benchmarks::TaskKind;
use qrc_core::error::{Error, Result};
use qrc_core::harness::{
    aggregate, export, fetch_series, resolve_config, run_experiment, run_sweep, series_request,
    ExperimentConfig, ExportFormat, ResultRecord, SweepParameter, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "qrc",
    version,
    about = "Quantum reservoir computing simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; partial documents merge over the chosen preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset name (frp-default, mrp, wmp, chaos, dsp; append -full for
    /// publication scale).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (ipc/task/sweep) or cache directory (gen-data); defaults
    /// under $QRC_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Export format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the capacity pipeline over the configured Hamiltonian ensemble.
    Ipc,
    /// Score one benchmark task over the ensemble.
    Task {
        /// lxx, lxz, or mg.
        task: String,
    },
    /// Run a parameter sweep described by the config file.
    Sweep,
    /// Generate and cache the benchmark series an experiment will use.
    GenData,
    /// Print the fully resolved configuration as JSON.
    ShowConfig,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let format: ExportFormat = cli.format.parse()?;
    let document = cli
        .config
        .as_deref()
        .map(load_json)
        .transpose()?;

    match &cli.command {
        Command::Ipc => {
            let mut config = resolve_experiment(cli, document.as_ref())?;
            config.tasks.clear();
            let records = run_experiment(&config)?;
            finish(cli, &records, format, "ipc", &config.hash())
        }
        Command::Task { task } => {
            let kind: TaskKind = task.parse()?;
            let mut config = resolve_experiment(cli, document.as_ref())?;
            config.tasks = vec![kind];
            let records = run_experiment(&config)?;
            finish(cli, &records, format, "task", &config.hash())
        }
        Command::Sweep => {
            let sweep = resolve_sweep(cli, document.as_ref())?;
            let records = run_sweep(&sweep)?;
            finish(cli, &records, format, "sweep", &sweep.base.hash())
        }
        Command::GenData => {
            let config = resolve_experiment(cli, document.as_ref())?;
            gen_data(cli, &config)
        }
        Command::ShowConfig => {
            let config = resolve_experiment(cli, document.as_ref())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&config).expect("config serializes")
            );
            Ok(())
        }
    }
}

fn load_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn resolve_experiment(cli: &Cli, document: Option<&Value>) -> Result<ExperimentConfig> {
    let mut config = resolve_config(cli.preset.as_deref(), document)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

/// A sweep document holds the parameter, the grid, and a base config that
/// goes through the same preset/override resolution as single experiments.
fn resolve_sweep(cli: &Cli, document: Option<&Value>) -> Result<SweepSpec> {
    let document = document.ok_or_else(|| {
        Error::InvalidConfig("sweep requires --config with a sweep document".into())
    })?;
    #[derive(serde::Deserialize)]
    struct SweepDocument {
        parameter: SweepParameter,
        grid: Vec<f64>,
        #[serde(default)]
        base: Value,
    }
    let doc: SweepDocument = serde_json::from_value(document.clone())
        .map_err(|e| Error::InvalidConfig(format!("sweep document does not parse: {e}")))?;
    let base_doc = if doc.base.is_null() {
        None
    } else {
        Some(doc.base)
    };
    let mut base = resolve_config(cli.preset.as_deref(), base_doc.as_ref())?;
    if let Some(seed) = cli.seed {
        base.master_seed = seed;
    }
    let sweep = SweepSpec {
        parameter: doc.parameter,
        grid: doc.grid,
        base,
    };
    sweep.validate()?;
    Ok(sweep)
}

fn out_dir() -> PathBuf {
    std::env::var_os("QRC_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn finish(
    cli: &Cli,
    records: &[ResultRecord],
    format: ExportFormat,
    stem: &str,
    hash: &str,
) -> Result<()> {
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    let path = match &cli.out {
        Some(p) => p.clone(),
        None => out_dir().join(format!("qrc-{stem}-{hash}.{ext}")),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    export(records, format, &path)?;
    println!("wrote {} records to {}", records.len(), path.display());
    for point in aggregate(records)? {
        let parameter = point
            .parameter
            .map(|p| format!("{p}"))
            .unwrap_or_else(|| "-".into());
        let mut line = format!(
            "parameter={parameter} n={} total={:.2}±{:.2} linear={:.2}±{:.2} nonlinear={:.2}±{:.2}",
            point.n,
            point.total.mean,
            point.total.se,
            point.linear.mean,
            point.linear.se,
            point.nonlinear.mean,
            point.nonlinear.se,
        );
        for (name, s) in [
            ("lxx", point.nrmse_lxx),
            ("lxz", point.nrmse_lxz),
            ("mg", point.nrmse_mg),
        ] {
            if let Some(s) = s {
                line.push_str(&format!(" nrmse_{name}={:.4}±{:.4}", s.mean, s.se));
            }
        }
        println!("{line}");
    }
    Ok(())
}

fn gen_data(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let dir = cli
        .out
        .clone()
        .or_else(qrc_core::harness::experiment::data_dir)
        .unwrap_or_else(|| PathBuf::from("data"));
    let kinds: Vec<TaskKind> = if config.tasks.is_empty() {
        vec![TaskKind::Lxx, TaskKind::Lxz, TaskKind::Mg]
    } else {
        config.tasks.clone()
    };
    let mut requests = Vec::new();
    for kind in kinds {
        let request = series_request(config, kind);
        if !requests.contains(&request) {
            requests.push(request);
        }
    }
    for request in &requests {
        fetch_series(request, Some(&dir))?;
    }
    println!("cached {} series under {}", requests.len(), dir.display());
    Ok(())
}
