//! Launch-power optimization: throughput maximization over the policy
//! families and the least-squares 3-dB-rule fit.

mod nelder_mead;
mod policy;

pub use nelder_mead::{Minimum, NelderMead};
pub use policy::{policy_to_spectrum, LaunchPolicy, PolicyVariant};

use crate::error::{Error, Result};
use crate::link::run_link;
use crate::{ChannelGrid, GsnrReport, Link, LinkOptions};
use rayon::prelude::*;

/// SNR_NL - OSNR at the NLI-optimal launch power: 10 log10(2) dB.
pub const THREE_DB_GAP: f64 = 3.010_299_956_639_812;
/// Above this RMS deviation from the 3-dB gap the fit is reported as poor.
pub const POOR_FIT_RMS_DB: f64 = 1.0;
const POLISH_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub link: LinkOptions,
    /// Simplex settings; `f_tolerance` is in Tb/s for throughput runs.
    pub simplex: NelderMead,
    /// Stop tolerance for the 3-dB fit, on the sum of squared gaps (dB²).
    pub three_db_tolerance: f64,
    /// Flat levels (dBm) from which independent simplex runs start.
    pub starts_dbm: Vec<f64>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            link: LinkOptions::default(),
            simplex: NelderMead {
                f_tolerance: 0.01,
                ..NelderMead::default()
            },
            three_db_tolerance: 1e-3,
            starts_dbm: vec![0.0, 2.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub policy: LaunchPolicy,
    pub total_tbps: f64,
    /// `run_link` re-evaluated on `policy`.
    pub report: GsnrReport,
    /// Objective evaluations summed over all starts.
    pub evaluations: usize,
    /// The winning start met its stopping tolerance.
    pub converged: bool,
    /// RMS of SNR_NL - OSNR - 3.01 dB over channels (3-dB fits only).
    pub three_db_rms_db: Option<f64>,
}

impl OptimizationResult {
    pub fn is_poor_fit(&self) -> bool {
        self.three_db_rms_db.is_some_and(|r| r > POOR_FIT_RMS_DB)
    }
}

/// Objective value for points the link cannot realize: an amplifier would
/// need gain below unity, or the launch is so strong that Raman depletion
/// drives the integration to non-positive power.
fn infeasible_or<T>(r: Result<T>, f: impl FnOnce(T) -> f64) -> Result<f64> {
    match r {
        Ok(v) => Ok(f(v)),
        Err(Error::GainBelowUnity { .. } | Error::NonPositivePower { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn evaluate(
    link: &Link,
    grid: &ChannelGrid,
    variant: PolicyVariant,
    params: &[f64],
    options: &LinkOptions,
) -> Result<GsnrReport> {
    let policy = LaunchPolicy::from_params(variant, grid.bands().len(), params)?;
    run_link(link, grid, &policy_to_spectrum(&policy, grid)?, options)
}

fn three_db_sum_sq(report: &GsnrReport) -> f64 {
    report
        .snr_nl_db
        .iter()
        .zip(&report.osnr_db)
        .map(|(s, o)| (s - o - THREE_DB_GAP).powi(2))
        .sum()
}

/// Runs the simplex from every start and keeps the lowest objective
/// (earliest start on ties). Starts whose every evaluation equals
/// `degenerate` or is infinite are discarded.
fn multistart<F>(
    variant: PolicyVariant,
    bands: usize,
    options: &OptimizerOptions,
    simplex: &NelderMead,
    degenerate: f64,
    objective: F,
) -> Result<(Minimum, usize)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if options.starts_dbm.is_empty() {
        return Err(Error::Optimizer("no starting points".into()));
    }
    let runs = options
        .starts_dbm
        .par_iter()
        .map(|&c0| {
            let x0 = LaunchPolicy::flat_start(variant, bands, c0).params();
            simplex.minimize(&objective, &x0)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut evaluations: usize = runs.iter().map(|m| m.evaluations).sum();
    let best = runs
        .into_iter()
        .filter(|m| m.history.iter().any(|&v| v.is_finite() && v != degenerate))
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .ok_or_else(|| {
            Error::Optimizer(format!(
                "degenerate start for {variant}: objective flat or infeasible from every start"
            ))
        })?;

    // A value-spread stop can fire while the simplex still straddles the
    // optimum. Restart once from the winner with a simplex ten times smaller
    // (and a tolerance scaled with the squared size) and keep any gain.
    let polish = NelderMead {
        initial_spread: simplex.initial_spread * POLISH_SCALE,
        f_tolerance: simplex.f_tolerance * POLISH_SCALE * POLISH_SCALE,
        ..simplex.clone()
    };
    let refined = polish.minimize(&objective, &best.x)?;
    evaluations += refined.evaluations;
    let best = if refined.f < best.f {
        Minimum {
            converged: best.converged && refined.converged,
            ..refined
        }
    } else {
        best
    };
    Ok((best, evaluations))
}

/// Maximizes total throughput over the parameters of `variant`.
pub fn maximize_throughput(
    link: &Link,
    grid: &ChannelGrid,
    variant: PolicyVariant,
    options: &OptimizerOptions,
) -> Result<OptimizationResult> {
    if variant == PolicyVariant::ThreeDbRule {
        return Err(Error::invalid(
            "the 3-dB rule is a fitting target; use solve_three_db",
        ));
    }
    let bands = grid.bands().len();
    let objective = |x: &[f64]| {
        infeasible_or(evaluate(link, grid, variant, x, &options.link), |r| {
            -r.total_tbps
        })
    };
    let (best, evaluations) =
        multistart(variant, bands, options, &options.simplex, 0.0, objective)?;
    let policy = LaunchPolicy::from_params(variant, bands, &best.x)?;
    let report = run_link(
        link,
        grid,
        &policy_to_spectrum(&policy, grid)?,
        &options.link,
    )?;
    Ok(OptimizationResult {
        policy,
        total_tbps: report.total_tbps,
        report,
        evaluations,
        converged: best.converged,
        three_db_rms_db: None,
    })
}

/// Fits per-band cubics so that SNR_NL - OSNR is as close to 3.01 dB as
/// possible on every channel (least squares).
pub fn solve_three_db(
    link: &Link,
    grid: &ChannelGrid,
    options: &OptimizerOptions,
) -> Result<OptimizationResult> {
    let variant = PolicyVariant::ThreeDbRule;
    let bands = grid.bands().len();
    let simplex = NelderMead {
        f_tolerance: options.three_db_tolerance,
        ..options.simplex.clone()
    };
    let objective = |x: &[f64]| {
        infeasible_or(evaluate(link, grid, variant, x, &options.link), |r| {
            three_db_sum_sq(&r)
        })
    };
    let (best, evaluations) = multistart(variant, bands, options, &simplex, f64::NAN, objective)?;
    let policy = LaunchPolicy::from_params(variant, bands, &best.x)?;
    let report = run_link(
        link,
        grid,
        &policy_to_spectrum(&policy, grid)?,
        &options.link,
    )?;
    let rms = (three_db_sum_sq(&report) / report.len().max(1) as f64).sqrt();
    Ok(OptimizationResult {
        policy,
        total_tbps: report.total_tbps,
        report,
        evaluations,
        converged: best.converged,
        three_db_rms_db: Some(rms),
    })
}

/// Strategy plus the physics switches it is evaluated with.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCase {
    pub label: String,
    pub variant: PolicyVariant,
    pub isrs: bool,
    pub raman: bool,
}

impl ScenarioCase {
    pub fn new(variant: PolicyVariant, isrs: bool, raman: bool) -> Self {
        let mut label = variant.name().to_string();
        if !isrs {
            label.push_str(" isrs-off");
        }
        if raman {
            label.push_str(" raman");
        }
        ScenarioCase {
            label,
            variant,
            isrs,
            raman,
        }
    }
}

impl ScenarioCase {
    /// The reference strategy matrix: cubic, flat-per-band, flat-both and
    /// 3-dB fit with ISRS, plus cubic without ISRS.
    pub fn reference_matrix(raman: bool) -> Vec<ScenarioCase> {
        vec![
            ScenarioCase::new(PolicyVariant::CubicPerBand, true, raman),
            ScenarioCase::new(PolicyVariant::FlatPerBand, true, raman),
            ScenarioCase::new(PolicyVariant::FlatAllBands, true, raman),
            ScenarioCase::new(PolicyVariant::ThreeDbRule, true, raman),
            ScenarioCase::new(PolicyVariant::CubicPerBand, false, raman),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub case: ScenarioCase,
    pub result: OptimizationResult,
    /// Change vs the baseline total, percent.
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Index of the row the deltas refer to: the first cubic case, or the
    /// first case if there is none.
    pub baseline: usize,
    pub rows: Vec<ComparisonRow>,
}

/// Optimizes every case (concurrently, output in input order) and reports
/// totals against the cubic-max baseline.
pub fn compare_scenarios(
    link: &Link,
    grid: &ChannelGrid,
    cases: &[ScenarioCase],
    options: &OptimizerOptions,
) -> Result<Comparison> {
    if cases.is_empty() {
        return Err(Error::invalid("no scenarios to compare"));
    }
    let results = cases
        .par_iter()
        .map(|case| {
            let opts = OptimizerOptions {
                link: LinkOptions {
                    isrs: case.isrs,
                    raman: case.raman,
                    ..options.link.clone()
                },
                ..options.clone()
            };
            match case.variant {
                PolicyVariant::ThreeDbRule => solve_three_db(link, grid, &opts),
                v => maximize_throughput(link, grid, v, &opts),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let baseline = cases
        .iter()
        .position(|c| c.variant == PolicyVariant::CubicPerBand)
        .unwrap_or(0);
    let base = results[baseline].total_tbps;
    let rows = cases
        .iter()
        .cloned()
        .zip(results)
        .map(|(case, result)| ComparisonRow {
            delta_pct: if base > 0.0 {
                100.0 * (result.total_tbps - base) / base
            } else {
                0.0
            },
            case,
            result,
        })
        .collect();
    Ok(Comparison { baseline, rows })
}

/// Runs the link at each flat launch level (dBm, all channels).
/// Levels are evaluated concurrently; output follows input order.
pub fn flat_sweep(
    link: &Link,
    grid: &ChannelGrid,
    levels_dbm: &[f64],
    options: &LinkOptions,
) -> Result<Vec<GsnrReport>> {
    levels_dbm
        .par_iter()
        .map(|&p| {
            let launch = policy_to_spectrum(&LaunchPolicy::FlatAllBands(p), grid)?;
            run_link(link, grid, &launch, options)
        })
        .collect()
}
