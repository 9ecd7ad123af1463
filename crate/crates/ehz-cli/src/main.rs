//! `ehz`: capacity computation, billiard tracing, and inequality
//! verification from the command line.
//!
//! Exit codes: 0 on success (for `verify`: every case passed), 1 when a
//! computation fails or any case fails or is inconclusive, 2 on usage
//! errors and malformed inputs.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ehz_core::billiards::{
    shortest_orbit_direct, shortest_orbit_over_m, trace, BilliardState, OrbitSearchConfig,
};
use ehz_core::bodies::{ConvexBody, LagrangianProduct};
use ehz_core::capacity::{capacity_of_body, capacity_of_product, SolverConfig};
use ehz_core::harness::{
    built_in_catalog, load_catalog, monotonicity_pair_sweep, superadditivity_pair_sweep,
    verify_inradius_bounds, verify_volume_bound, CatalogEntry, ExperimentReport, HarnessConfig,
};

#[derive(Parser)]
#[command(name = "ehz", version, about = "Symplectic capacities of convex bodies and their billiards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity of a Lagrangian product K x T or of a single body.
    ///
    /// With two files the bodies form the product K x T; one file holds
    /// either a product ({"k": .., "t": ..}) or a single even-dimensional
    /// body.
    Capacity {
        /// Body or product description files (JSON).
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        /// Solver configuration file; defaults are used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the result to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Billiard dynamics in a table K with geometry T.
    Billiard {
        #[command(subcommand)]
        action: BilliardAction,
    },
    /// Inequality experiments; writes JSON and CSV reports.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum BilliardAction {
    /// Iterate the reflection map from a boundary state.
    Trace {
        k: PathBuf,
        t: PathBuf,
        /// JSON file with the starting state {"q": [..], "p": [..]}.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the shortest closed (K, T)-orbit.
    Shortest {
        k: PathBuf,
        t: PathBuf,
        /// Exact bounce count; when absent the search sweeps 2..=dim+1.
        #[arg(short)]
        m: Option<usize>,
        /// Orbit search configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiments to run; nothing selected runs nothing and exits 0.
    #[arg(value_enum)]
    experiments: Vec<Experiment>,
    /// Body catalog file for the volume and inradius experiments; the
    /// built-in catalog is used when absent.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Overrides the seed of the harness configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Harness configuration file; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Bm,
    Volume,
    Inradius,
    Monotonicity,
    All,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage<E: Display>(e: E) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn runtime<E: Display>(e: E) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("BILLIARD_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: BILLIARD_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("malformed {what} {}: {e}", path.display())))
}

fn write_output<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Capacity { inputs, config, out } => {
            let solver: SolverConfig = match config {
                Some(path) => read_json(&path, "solver configuration")?,
                None => SolverConfig::default(),
            };
            let result = match inputs.len() {
                2 => {
                    let k: ConvexBody = read_json(&inputs[0], "body")?;
                    let t: ConvexBody = read_json(&inputs[1], "body")?;
                    let product = LagrangianProduct::new(k, t).map_err(usage)?;
                    capacity_of_product(&product, &solver).map_err(runtime)?
                }
                _ => {
                    let text = fs::read_to_string(&inputs[0])
                        .map_err(|e| usage(format!("cannot read {}: {e}", inputs[0].display())))?;
                    if let Ok(product) = serde_json::from_str::<LagrangianProduct>(&text) {
                        capacity_of_product(&product, &solver).map_err(runtime)?
                    } else {
                        let body: ConvexBody = serde_json::from_str(&text).map_err(|e| {
                            usage(format!(
                                "{} is neither a product nor a body: {e}",
                                inputs[0].display()
                            ))
                        })?;
                        capacity_of_body(&body, &solver).map_err(runtime)?
                    }
                }
            };
            write_output(&result, out.as_deref())?;
            Ok(if result.converged { 0 } else { 1 })
        }
        Command::Billiard { action } => match action {
            BilliardAction::Trace { k, t, state, steps, out } => {
                let k: ConvexBody = read_json(&k, "body")?;
                let t: ConvexBody = read_json(&t, "body")?;
                let state: BilliardState = read_json(&state, "state")?;
                let states = trace(&k, &t, &state, steps).map_err(runtime)?;
                write_output(&states, out.as_deref())?;
                Ok(0)
            }
            BilliardAction::Shortest { k, t, m, config, out } => {
                let k: ConvexBody = read_json(&k, "body")?;
                let t: ConvexBody = read_json(&t, "body")?;
                let orbit_config: OrbitSearchConfig = match config {
                    Some(path) => read_json(&path, "orbit configuration")?,
                    None => OrbitSearchConfig::default(),
                };
                let orbit = match m {
                    Some(m) => shortest_orbit_direct(&k, &t, m, &orbit_config),
                    None => shortest_orbit_over_m(&k, &t, 2..=k.dim() + 1, &orbit_config),
                }
                .map_err(runtime)?;
                write_output(&orbit, out.as_deref())?;
                Ok(0)
            }
        },
        Command::Verify(args) => verify(args),
    }
}

fn verify(args: VerifyArgs) -> Result<u8, Failure> {
    let mut config: HarnessConfig = match &args.config {
        Some(path) => read_json(path, "harness configuration")?,
        None => HarnessConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let catalog: Vec<CatalogEntry> = match &args.catalog {
        Some(path) => load_catalog(path).map_err(usage)?,
        None => built_in_catalog(&[2, 3], config.seed),
    };
    let dims: Vec<usize> = {
        let mut dims: Vec<usize> = catalog.iter().map(|e| e.dim()).collect();
        dims.sort_unstable();
        dims.dedup();
        dims
    };

    let mut selected: Vec<Experiment> = Vec::new();
    for e in &args.experiments {
        if *e == Experiment::All {
            selected = vec![
                Experiment::Bm,
                Experiment::Volume,
                Experiment::Inradius,
                Experiment::Monotonicity,
            ];
            break;
        }
        if !selected.contains(e) {
            selected.push(*e);
        }
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out.display())))?;

    let mut reports = Vec::new();
    for experiment in selected {
        let report = match experiment {
            Experiment::Bm => superadditivity_pair_sweep(&config),
            Experiment::Volume => verify_volume_bound(&catalog, &dims, &config),
            Experiment::Inradius => verify_inradius_bounds(&catalog, &config),
            Experiment::Monotonicity => monotonicity_pair_sweep(&config),
            Experiment::All => unreachable!("expanded above"),
        }
        .map_err(runtime)?;
        write_report(&args.out, &report)?;
        println!(
            "{}: {} cases, {} passed, {} failed, {} inconclusive",
            report.experiment,
            report.aggregate.cases,
            report.aggregate.passed,
            report.aggregate.failed,
            report.aggregate.inconclusive
        );
        reports.push(report);
    }
    write_plot_data(&args.out, &reports)?;
    Ok(if reports.iter().all(|r| r.all_pass()) { 0 } else { 1 })
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), Failure> {
    let json = report.to_json();
    let base = dir.join(&report.experiment);
    fs::write(base.with_extension("json"), json)
        .map_err(|e| runtime(format!("cannot write report: {e}")))?;
    fs::write(base.with_extension("csv"), report.to_csv())
        .map_err(|e| runtime(format!("cannot write report: {e}")))?;
    Ok(())
}

/// Plot-ready extracts: the empirical ratio against the dimension, and a
/// histogram of margin/slack across all checked cases.
fn write_plot_data(dir: &Path, reports: &[ExperimentReport]) -> Result<(), Failure> {
    let mut ratio_rows = String::from("experiment,case,n,ratio\n");
    let mut normalized: Vec<f64> = Vec::new();
    for report in reports {
        for case in &report.cases {
            if let (Some(n), Some(ratio)) = (case.quantities.get("n"), case.quantities.get("ratio"))
            {
                ratio_rows.push_str(&format!(
                    "{},{},{},{}\n",
                    report.experiment, case.id, n, ratio
                ));
            }
            if let Some(margin) = case.quantities.get("margin") {
                if case.slack > 0.0 {
                    normalized.push(margin / case.slack);
                }
            }
        }
    }
    fs::write(dir.join("ratio-vs-n.csv"), ratio_rows)
        .map_err(|e| runtime(format!("cannot write plot data: {e}")))?;

    let lo = -3.0f64;
    let hi = 9.0f64;
    let bins = 24usize;
    let step = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &normalized {
        let idx = ((v - lo) / step).floor();
        let idx = idx.clamp(0.0, bins as f64 - 1.0) as usize;
        counts[idx] += 1;
    }
    let mut hist = String::from("bin_lo,bin_hi,count\n");
    for (i, count) in counts.iter().enumerate() {
        hist.push_str(&format!(
            "{},{},{}\n",
            lo + step * i as f64,
            lo + step * (i + 1) as f64,
            count
        ));
    }
    fs::write(dir.join("slack-hist.csv"), hist)
        .map_err(|e| runtime(format!("cannot write plot data: {e}")))?;
    Ok(())
}
