//! Per-channel CSV and JSON summaries.

use crate::error::{Error, Result};
use crate::optimizer::Comparison;
use crate::{ChannelGrid, GsnrReport, PowerEvolution};
use serde::Serialize;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: [&str; 8] = [
    "channel_index",
    "f_THz",
    "band",
    "launch_dBm",
    "OSNR_dB",
    "SNR_NL_dB",
    "GSNR_dB",
    "rate_Gbps",
];

/// Metadata stored next to every per-channel CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: String,
    pub scenario_hash: String,
    pub label: String,
    pub total_tbps: f64,
    pub channel_count: usize,
    pub mean_gsnr_db: f64,
    pub min_gsnr_db: f64,
    pub max_gsnr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub three_db_rms_db: Option<f64>,
}

impl Summary {
    pub fn new(
        report: &GsnrReport,
        label: impl Into<String>,
        scenario_hash: impl Into<String>,
    ) -> Self {
        let n = report.len().max(1) as f64;
        let fold = |init: f64, f: fn(f64, f64) -> f64| report.gsnr_db.iter().copied().fold(init, f);
        Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_hash: scenario_hash.into(),
            label: label.into(),
            total_tbps: report.total_tbps,
            channel_count: report.len(),
            mean_gsnr_db: report.gsnr_db.iter().sum::<f64>() / n,
            min_gsnr_db: fold(f64::INFINITY, f64::min),
            max_gsnr_db: fold(f64::NEG_INFINITY, f64::max),
            strategy: None,
            coefficients: None,
            evaluations: None,
            converged: None,
            three_db_rms_db: None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

fn db_or_inf(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes the per-channel CSV to `path` and the summary JSON next to it
/// (same stem, `.json`). Returns the JSON path.
pub fn emit_report(
    report: &GsnrReport,
    grid: &ChannelGrid,
    summary: &Summary,
    path: &Path,
) -> Result<PathBuf> {
    if report.len() != grid.len() {
        return Err(Error::invalid("report does not match the channel grid"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for (i, ch) in grid.channels().iter().enumerate() {
        let launch_dbm = 10.0 * report.launch_mw[i].log10();
        w.write_record([
            i.to_string(),
            format!("{:.4}", ch.f_thz),
            grid.bands()[ch.band].name.clone(),
            format!("{launch_dbm:.4}"),
            db_or_inf(report.osnr_db[i]),
            db_or_inf(report.snr_nl_db[i]),
            db_or_inf(report.gsnr_db[i]),
            format!("{:.4}", report.rate_gbps[i]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))?;
    let json_path = path.with_extension("json");
    write_json(summary, &json_path)?;
    Ok(json_path)
}

pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("cannot serialize summary: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Signal (and pump) power vs distance inside one span, one row per z.
pub fn emit_evolution(evolution: &PowerEvolution, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let n = evolution.channel_count();
    let pumps = evolution.pump_mw.as_ref();
    let np = pumps.and_then(|p| p.first()).map_or(0, Vec::len);
    let mut header = vec!["z_km".to_string()];
    header.extend((0..n).map(|i| format!("ch{i}_dBm")));
    header.extend((0..np).map(|k| format!("pump{k}_dBm")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (k, z) in evolution.z_km.iter().enumerate() {
        let mut row = vec![format!("{z:.4}")];
        row.extend(
            evolution.signal_mw[k]
                .iter()
                .map(|p| format!("{:.4}", 10.0 * p.log10())),
        );
        if let Some(p) = pumps {
            row.extend(p[k].iter().map(|p| format!("{:.4}", 10.0 * p.log10())));
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ComparisonEntry<'a> {
    label: &'a str,
    strategy: &'static str,
    isrs: bool,
    raman: bool,
    total_tbps: f64,
    delta_pct: f64,
    evaluations: usize,
    converged: bool,
    coefficients: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    three_db_rms_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ComparisonSummary<'a> {
    version: &'static str,
    scenario_hash: &'a str,
    baseline: &'a str,
    rows: Vec<ComparisonEntry<'a>>,
}

/// Strategy-by-throughput table (CSV at `path`) plus a JSON summary with
/// the optimized coefficients of every case. Returns the JSON path.
pub fn emit_comparison(
    comparison: &Comparison,
    scenario_hash: &str,
    path: &Path,
) -> Result<PathBuf> {
    let mut f = File::create(path).map_err(io_err(path))?;
    let mut text =
        String::from("strategy,isrs,raman,throughput_Tbps,delta_pct,evaluations,converged\n");
    for row in &comparison.rows {
        text.push_str(&format!(
            "{},{},{},{:.4},{:.4},{},{}\n",
            row.case.variant,
            if row.case.isrs { "on" } else { "off" },
            if row.case.raman { "on" } else { "off" },
            row.result.total_tbps,
            row.delta_pct,
            row.result.evaluations,
            row.result.converged
        ));
    }
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    let summary = ComparisonSummary {
        version: env!("CARGO_PKG_VERSION"),
        scenario_hash,
        baseline: &comparison.rows[comparison.baseline].case.label,
        rows: comparison
            .rows
            .iter()
            .map(|r| ComparisonEntry {
                label: &r.case.label,
                strategy: r.case.variant.name(),
                isrs: r.case.isrs,
                raman: r.case.raman,
                total_tbps: r.result.total_tbps,
                delta_pct: r.delta_pct,
                evaluations: r.result.evaluations,
                converged: r.result.converged,
                coefficients: r.result.policy.params(),
                three_db_rms_db: r.result.three_db_rms_db,
            })
            .collect(),
    };
    let json_path = path.with_extension("json");
    write_json(&summary, &json_path)?;
    Ok(json_path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepPoint {
    launch_dbm: f64,
    total_tbps: f64,
    mean_gsnr_db: f64,
    min_gsnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepSummary<'a> {
    version: &'static str,
    scenario_hash: &'a str,
    best_launch_dbm: f64,
    best_total_tbps: f64,
    points: Vec<SweepPoint>,
}

/// Flat-launch scan: one CSV row per level plus a JSON summary naming the
/// best level. Returns the JSON path.
pub fn emit_sweep(
    levels_dbm: &[f64],
    reports: &[GsnrReport],
    scenario_hash: &str,
    path: &Path,
) -> Result<PathBuf> {
    if levels_dbm.len() != reports.len() || levels_dbm.is_empty() {
        return Err(Error::invalid("sweep levels and reports do not match"));
    }
    let points: Vec<SweepPoint> = levels_dbm
        .iter()
        .zip(reports)
        .map(|(&p, r)| {
            let s = Summary::new(r, "", "");
            SweepPoint {
                launch_dbm: p,
                total_tbps: r.total_tbps,
                mean_gsnr_db: s.mean_gsnr_db,
                min_gsnr_db: s.min_gsnr_db,
            }
        })
        .collect();
    let mut text = String::from("launch_dBm,total_Tbps,mean_GSNR_dB,min_GSNR_dB\n");
    for q in &points {
        text.push_str(&format!(
            "{:.4},{:.4},{},{}\n",
            q.launch_dbm,
            q.total_tbps,
            db_or_inf(q.mean_gsnr_db),
            db_or_inf(q.min_gsnr_db)
        ));
    }
    std::fs::write(path, text).map_err(io_err(path))?;
    let best = points.iter().fold(
        &points[0],
        |b, q| if q.total_tbps > b.total_tbps { q } else { b },
    );
    let summary = SweepSummary {
        version: env!("CARGO_PKG_VERSION"),
        scenario_hash,
        best_launch_dbm: best.launch_dbm,
        best_total_tbps: best.total_tbps,
        points: points.clone(),
    };
    let json_path = path.with_extension("json");
    write_json(&summary, &json_path)?;
    Ok(json_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::run_link;
    use crate::units::default_grid;
    use crate::{Link, LinkOptions, PowerSpectrum};

    fn sample() -> (GsnrReport, ChannelGrid) {
        let grid = default_grid();
        let launch = PowerSpectrum::flat(grid.len(), 3.0).unwrap();
        let r = run_link(
            &Link::default_smf(2).unwrap(),
            &grid,
            &launch,
            &LinkOptions::default(),
        )
        .unwrap();
        (r, grid)
    }

    #[test]
    fn csv_layout_and_json_totals() {
        let (r, grid) = sample();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("run.csv");
        let json = emit_report(&r, &grid, &Summary::new(&r, "t", "abc"), &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 101);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        let sum: f64 = lines[1..]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        let total = v["total_tbps"].as_f64().unwrap();
        assert!((sum / 1000.0 - total).abs() < 100.0 * 0.5e-4 / 1000.0 + 1e-12);
        assert_eq!(v["scenario_hash"], "abc");
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[2], "L");
        assert_eq!(fields[3], "3.0000");
    }

    #[test]
    fn byte_identical_reruns() {
        let dir = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for k in 0..2 {
            let (r, grid) = sample();
            let p = dir.path().join(format!("r{k}.csv"));
            emit_report(&r, &grid, &Summary::new(&r, "t", "h"), &p).unwrap();
            outputs.push((
                std::fs::read(&p).unwrap(),
                std::fs::read(p.with_extension("json")).unwrap(),
            ));
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn sweep_table_and_best_level() {
        let (r, _) = sample();
        let mut weaker = r.clone();
        weaker.total_tbps -= 1.0;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.csv");
        let json = emit_sweep(&[1.0, 3.0], &[weaker, r.clone()], "h", &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("launch_dBm,total_Tbps,mean_GSNR_dB,min_GSNR_dB\n"));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(v["best_launch_dbm"], 3.0);
        assert!(emit_sweep(&[1.0], &[], "h", &p).is_err());
    }

    #[test]
    fn unwritable_path_reports_it() {
        let (r, grid) = sample();
        let err = emit_report(
            &r,
            &grid,
            &Summary::new(&r, "t", "h"),
            Path::new("/no/such/dir/x.csv"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/no/such/dir/x.csv"), "{err}");
    }
}
