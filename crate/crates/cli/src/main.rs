//! `sclb`: command-line driver for the link engine and launch optimizer.
//!
//! Exit status: 0 on success, 1 for invalid input or configuration, 2 when
//! the numerics fail or an optimization stops before meeting its tolerance
//! (outputs are still written in that case).

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sclb::link::run_link_detailed;
use sclb::optimizer::{
    compare_scenarios, flat_sweep, maximize_throughput, policy_to_spectrum, solve_three_db,
    OptimizationResult, PolicyVariant, ScenarioCase,
};
use sclb::report::{emit_comparison, emit_evolution, emit_report, emit_sweep, Summary};
use sclb::scenario::{parse_scenario, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "sclb",
    version,
    about = "Super-(C+L) GSNR, throughput and launch-power optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the link once with the scenario's launch policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Use a flat launch at this level (dBm) instead of the scenario's policy.
        #[arg(long, allow_hyphen_values = true)]
        power_dbm: Option<f64>,
        /// Also write the power evolution inside the first span.
        #[arg(long)]
        evolution: bool,
    },
    /// Optimize one launch strategy.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// cubic, flat-per-band, flat-both or 3db; defaults to the scenario's.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Optimize the reference strategy matrix and tabulate throughput.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Scan flat launch levels (all channels) and report throughput.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        from_dbm: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        to_dbm: f64,
        #[arg(long, default_value_t = 0.5)]
        step_db: f64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML). Relative paths also resolve against $SCLB_SCENARIO_DIR.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's ISRS switch.
    #[arg(long, value_enum)]
    isrs: Option<Switch>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Outcome of a subcommand that completed and wrote its outputs.
#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Done,
    NotConverged,
}

fn load(common: &Common) -> Result<Scenario> {
    let mut s = parse_scenario(&common.scenario)
        .with_context(|| format!("loading scenario {}", common.scenario.display()))?;
    if let Some(sw) = common.isrs {
        s.isrs = matches!(sw, Switch::On);
    }
    if let Some(dir) = &common.out {
        s.output.dir = dir.display().to_string();
    }
    std::fs::create_dir_all(&s.output.dir)
        .with_context(|| format!("creating output directory {}", s.output.dir))?;
    Ok(s)
}

fn isrs_tag(s: &Scenario) -> &'static str {
    if s.isrs {
        "isrs-on"
    } else {
        "isrs-off"
    }
}

fn simulate(common: &Common, power_dbm: Option<f64>, evolution: bool) -> Result<Outcome> {
    let s = load(common)?;
    let (link, grid) = (s.link()?, s.grid()?);
    let policy = match power_dbm {
        Some(p) => sclb::optimizer::LaunchPolicy::FlatAllBands(p),
        None => s.launch_policy()?,
    };
    let launch = policy_to_spectrum(&policy, &grid)?;
    let run = run_link_detailed(&link, &grid, &launch, &s.link_options()?)?;
    let csv = s.output_path(&format!("-simulate-{}.csv", isrs_tag(&s)));
    let mut summary = Summary::new(&run.report, format!("simulate {}", isrs_tag(&s)), s.hash()?);
    summary.strategy = Some(policy.variant().name().into());
    summary.coefficients = Some(policy.params());
    emit_report(&run.report, &grid, &summary, &csv)?;
    if evolution {
        let path = s.output_path(&format!("-evolution-{}.csv", isrs_tag(&s)));
        emit_evolution(&run.evolutions[run.span_class[0]], &path)?;
    }
    println!("{}: {:.3} Tb/s", csv.display(), run.report.total_tbps);
    Ok(Outcome::Done)
}

fn optimize(common: &Common, strategy: Option<&str>) -> Result<Outcome> {
    let mut s = load(common)?;
    if let Some(name) = strategy {
        s.strategy = name.to_string();
    }
    let variant = s.variant()?;
    let (link, grid, opts) = (s.link()?, s.grid()?, s.optimizer_options()?);
    let result = match variant {
        PolicyVariant::ThreeDbRule => solve_three_db(&link, &grid, &opts)?,
        v => maximize_throughput(&link, &grid, v, &opts)?,
    };
    let csv = s.output_path(&format!(
        "-optimize-{}-{}.csv",
        variant.name(),
        isrs_tag(&s)
    ));
    let summary = optimization_summary(&result, format!("optimize {variant}"), s.hash()?);
    emit_report(&result.report, &grid, &summary, &csv)?;
    println!(
        "{}: {variant} {:.3} Tb/s after {} evaluations",
        csv.display(),
        result.total_tbps,
        result.evaluations
    );
    if result.is_poor_fit() {
        eprintln!(
            "warning: 3-dB fit RMS gap {:.2} dB",
            result.three_db_rms_db.unwrap_or(0.0)
        );
    }
    Ok(converged(&[&result]))
}

fn compare(common: &Common) -> Result<Outcome> {
    let s = load(common)?;
    let (link, grid, opts) = (s.link()?, s.grid()?, s.optimizer_options()?);
    let cases = ScenarioCase::reference_matrix(s.raman.is_some());
    let comparison = compare_scenarios(&link, &grid, &cases, &opts)?;
    let hash = s.hash()?;
    for (k, row) in comparison.rows.iter().enumerate() {
        let tag = if row.case.isrs { "isrs-on" } else { "isrs-off" };
        let csv = s.output_path(&format!("-compare-{k}-{}-{tag}.csv", row.case.variant));
        let summary = optimization_summary(&row.result, row.case.label.clone(), hash.clone());
        emit_report(&row.result.report, &grid, &summary, &csv)?;
    }
    let table = s.output_path("-compare.csv");
    emit_comparison(&comparison, &hash, &table)?;
    for row in &comparison.rows {
        println!(
            "{:<22} {:>9.3} Tb/s {:>+7.2}%",
            row.case.label, row.result.total_tbps, row.delta_pct
        );
    }
    let results: Vec<&OptimizationResult> = comparison.rows.iter().map(|r| &r.result).collect();
    Ok(converged(&results))
}

fn sweep(common: &Common, from: f64, to: f64, step: f64) -> Result<Outcome> {
    if !(step > 0.0 && from.is_finite() && to.is_finite() && to >= from) {
        return Err(sclb::Error::InvalidInput(format!(
            "sweep needs from <= to and a positive step (got {from}..{to} by {step})"
        ))
        .into());
    }
    let s = load(common)?;
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    let levels: Vec<f64> = (0..count).map(|k| from + k as f64 * step).collect();
    let reports = flat_sweep(&s.link()?, &s.grid()?, &levels, &s.link_options()?)?;
    let csv = s.output_path(&format!("-sweep-{}.csv", isrs_tag(&s)));
    emit_sweep(&levels, &reports, &s.hash()?, &csv)?;
    println!("{}: {} levels", csv.display(), levels.len());
    Ok(Outcome::Done)
}

fn optimization_summary(result: &OptimizationResult, label: String, hash: String) -> Summary {
    let mut summary = Summary::new(&result.report, label, hash);
    summary.strategy = Some(result.policy.variant().name().into());
    summary.coefficients = Some(result.policy.params());
    summary.evaluations = Some(result.evaluations);
    summary.converged = Some(result.converged);
    summary.three_db_rms_db = result.three_db_rms_db;
    summary
}

fn converged(results: &[&OptimizationResult]) -> Outcome {
    if results.iter().all(|r| r.converged) {
        Outcome::Done
    } else {
        eprintln!("warning: optimizer stopped on its evaluation budget before converging");
        Outcome::NotConverged
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<sclb::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Simulate {
            common,
            power_dbm,
            evolution,
        } => simulate(common, *power_dbm, *evolution),
        Command::Optimize { common, strategy } => optimize(common, strategy.as_deref()),
        Command::Compare { common } => compare(common),
        Command::Sweep {
            common,
            from_dbm,
            to_dbm,
            step_db,
        } => sweep(common, *from_dbm, *to_dbm, *step_db),
    };
    match outcome {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
