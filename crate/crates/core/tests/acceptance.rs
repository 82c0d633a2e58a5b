//! Acceptance suite: one PASS/FAIL line per criterion, with the individual
//! checks listed underneath.
//!
//! The process exits non-zero when a criterion cannot be evaluated (a library
//! error). A criterion that evaluates and misses its bound prints FAIL but
//! does not change the exit status unless `SCLB_ACCEPTANCE_STRICT` is set.

use sclb::fiber::{make_default_smf, SampledCurve};
use sclb::link::{run_link, LinkOptions};
use sclb::nli::{nli_cfm, nli_numeric_gn};
use sclb::optimizer::{
    compare_scenarios, maximize_throughput, policy_to_spectrum, Comparison, OptimizationResult,
    OptimizerOptions, PolicyVariant, ScenarioCase,
};
use sclb::propagation::{evolve_signals, evolve_span};
use sclb::units::default_grid;
use sclb::{ChannelGrid, FiberSpan, GsnrReport, Link, PowerSpectrum, RamanPumpSet};
use std::time::{Duration, Instant};

type Outcome = Result<Vec<Check>, String>;

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn within(name: &str, value: f64, lo: f64, hi: f64, unit: &str) -> Check {
    check(
        name,
        value >= lo && value <= hi,
        format!("{value:.4}{unit} (bound [{lo}, {hi}]{unit})"),
    )
}

fn below(name: &str, value: f64, limit: f64, unit: &str) -> Check {
    check(
        name,
        value < limit,
        format!("{value:.3e}{unit} (bound < {limit:e}{unit})"),
    )
}

fn in_time(name: &str, elapsed: Duration, limit: Duration) -> Check {
    check(
        name,
        elapsed < limit,
        format!(
            "{:.1} s (bound < {} s)",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn err(e: sclb::Error) -> String {
    e.to_string()
}

fn photon_flux(mw: &[f64], grid: &ChannelGrid) -> f64 {
    mw.iter()
        .zip(grid.channels())
        .map(|(p, ch)| p / ch.f_thz)
        .sum()
}

fn lossless_span() -> FiberSpan {
    let smf = make_default_smf(100.0).unwrap();
    FiberSpan::new(
        100.0,
        SampledCurve::constant(1e-12),
        smf.dispersion.clone(),
        smf.gamma.clone(),
        smf.raman_eff.clone(),
        0.0,
    )
    .unwrap()
}

fn max_abs_db(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (10.0 * (x / y).log10()).abs())
        .fold(0.0, f64::max)
}

/// Largest max - min within any single band.
fn in_band_peak_to_peak(values: &[f64], grid: &ChannelGrid) -> f64 {
    (0..grid.bands().len())
        .map(|b| {
            let v: Vec<f64> = grid.band_members(b).iter().map(|&i| values[i]).collect();
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        })
        .fold(0.0, f64::max)
}

fn mean_gap_db(r: &GsnrReport) -> f64 {
    r.snr_nl_db
        .iter()
        .zip(&r.osnr_db)
        .map(|(s, o)| s - o)
        .sum::<f64>()
        / r.len() as f64
}

fn physics_invariants() -> Outcome {
    let grid = default_grid::<f64>();
    let mut checks = Vec::new();

    let start = Instant::now();
    let span = lossless_span();
    let mut drift: f64 = 0.0;
    for (label, idx) in [
        ("2", vec![0, 99]),
        ("9", vec![0, 12, 24, 36, 49, 50, 62, 74, 99]),
        ("100", (0..100).collect::<Vec<_>>()),
    ] {
        let g = grid.subset(&idx).map_err(err)?;
        let launch = PowerSpectrum::flat(g.len(), 5.0).map_err(err)?;
        let ev = evolve_signals(&span, &launch, &g, 0.25, true).map_err(err)?;
        let n0 = photon_flux(&launch.mw(), &g);
        let n1 = photon_flux(ev.fiber_output_mw(), &g);
        let tilt = max_abs_db(ev.fiber_output_mw(), &launch.mw());
        if label == "100" && tilt < 1.0 {
            return Err(format!(
                "lossless 100-channel span shows only {tilt:.3} dB of ISRS"
            ));
        }
        drift = drift.max(((n1 - n0) / n0).abs());
    }
    checks.push(below(
        "photon flux drift, lossless ISRS, 2/9/100 channels",
        drift,
        1e-6,
        "",
    ));
    checks.push(in_time(
        "flux runs",
        start.elapsed(),
        Duration::from_secs(5),
    ));

    let smf = make_default_smf(100.0).map_err(err)?;
    let launch = PowerSpectrum::flat(grid.len(), 4.0).map_err(err)?;
    let ev = evolve_signals(&smf, &launch, &grid, 0.25, false).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (i, ch) in grid.channels().iter().enumerate() {
        let rho = ev.normalized_profile(i).map_err(err)?;
        for (&z, &r) in ev.z_km.iter().zip(&rho) {
            let exact = (-smf.alpha_linear(ch.f_thz) * z).exp();
            worst = worst.max((r - exact).abs() / exact);
        }
    }
    checks.push(below(
        "ISRS-off profile vs exp(-alpha z), relative",
        worst,
        1e-14,
        "",
    ));

    let ev = evolve_signals(&smf, &launch, &grid, 0.25, true).map_err(err)?;
    let base = nli_cfm(&smf, &grid, &launch, &ev).map_err(err)?;
    let doubled = nli_cfm(&smf, &grid, &launch.offset(10.0 * 2f64.log10()), &ev).map_err(err)?;
    let cubic = base
        .total_mw
        .iter()
        .zip(&doubled.total_mw)
        .map(|(a, b)| (b / (8.0 * a) - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(below(
        "CFM 2x power -> 8x NLI, relative error",
        cubic,
        1e-9,
        "",
    ));

    let link = Link::default_smf(10).map_err(err)?;
    let report = run_link(&link, &grid, &launch, &LinkOptions::default()).map_err(err)?;
    let lin = |db: f64| 10f64.powf(db / 10.0);
    let composition = (0..report.len())
        .map(|i| {
            let lhs = 1.0 / lin(report.gsnr_db[i]);
            let rhs = 1.0 / lin(report.osnr_db[i]) + 1.0 / lin(report.snr_nl_db[i]);
            ((lhs - rhs) / rhs).abs()
        })
        .fold(0.0, f64::max);
    checks.push(below(
        "1/GSNR = 1/OSNR + 1/SNR_NL, relative",
        composition,
        1e-12,
        "",
    ));

    let strong = PowerSpectrum::flat(grid.len(), 8.0).map_err(err)?;
    let coarse = evolve_signals(&smf, &strong, &grid, 0.25, true).map_err(err)?;
    let fine = evolve_signals(&smf, &strong, &grid, 0.125, true).map_err(err)?;
    let span_change = max_abs_db(coarse.fiber_output_mw(), fine.fiber_output_mw());
    checks.push(below(
        "step halving, span output at 8 dBm/ch",
        span_change,
        1e-3,
        " dB",
    ));
    let fine_opts = LinkOptions {
        step_km: 0.125,
        ..LinkOptions::default()
    };
    let fine_report = run_link(&link, &grid, &launch, &fine_opts).map_err(err)?;
    let gsnr_change = report
        .gsnr_db
        .iter()
        .zip(&fine_report.gsnr_db)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(below(
        "step halving, 1000 km GSNR",
        gsnr_change,
        1e-3,
        " dB",
    ));
    Ok(checks)
}

fn oracle_equivalence() -> Outcome {
    let span = make_default_smf(100.0).map_err(err)?;
    let full = default_grid::<f64>();
    let combs = [
        (
            "band edges inward",
            vec![45, 46, 47, 48, 49, 50, 51, 52, 53],
        ),
        ("spread", vec![0, 12, 24, 36, 49, 50, 62, 74, 99]),
        ("outer edges", vec![0, 1, 2, 3, 4, 95, 96, 97, 98]),
    ];
    let mut checks = Vec::new();
    for (name, idx) in combs {
        let grid = full.subset(&idx).map_err(err)?;
        let start = Instant::now();
        let (mut worst, mut sq, mut count): (f64, f64, usize) = (0.0, 0.0, 0);
        for p in [-2.0, 3.0, 8.0] {
            for isrs in [false, true] {
                let launch = PowerSpectrum::flat(grid.len(), p).map_err(err)?;
                let ev = evolve_signals(&span, &launch, &grid, 0.25, isrs).map_err(err)?;
                let cfm = nli_cfm(&span, &grid, &launch, &ev).map_err(err)?;
                let num = nli_numeric_gn(&span, &grid, &launch, &ev, 64).map_err(err)?;
                for (a, b) in cfm.total_mw.iter().zip(&num.total_mw) {
                    let d = 10.0 * (a / b).log10();
                    worst = worst.max(d.abs());
                    sq += d * d;
                    count += 1;
                }
            }
        }
        let rms = (sq / count as f64).sqrt();
        checks.push(within(
            &format!("{name}: max |CFM - oracle|"),
            worst,
            0.0,
            1.0,
            " dB",
        ));
        checks.push(within(&format!("{name}: RMS"), rms, 0.0, 0.5, " dB"));
        checks.push(in_time(
            &format!("{name}: runtime"),
            start.elapsed(),
            Duration::from_secs(120),
        ));
    }
    Ok(checks)
}

fn three_db_emergence() -> Outcome {
    let grid = default_grid::<f64>();
    let link = Link::default_smf(10).map_err(err)?;
    let mut opts = OptimizerOptions::default();
    opts.link.isrs = false;
    let start = Instant::now();
    let r = maximize_throughput(&link, &grid, PolicyVariant::FlatAllBands, &opts).map_err(err)?;
    let elapsed = start.elapsed();
    Ok(vec![
        check(
            "optimum flat level",
            true,
            format!(
                "{:.3} dBm/ch, {:.2} Tb/s",
                r.policy.params()[0],
                r.total_tbps
            ),
        ),
        within(
            "mean SNR_NL - OSNR",
            mean_gap_db(&r.report),
            2.7,
            3.3,
            " dB",
        ),
        in_time("runtime", elapsed, Duration::from_secs(600)),
    ])
}

struct Matrix {
    km: f64,
    comparison: Comparison,
    elapsed: Duration,
}

impl Matrix {
    fn get(&self, variant: PolicyVariant, isrs: bool) -> &OptimizationResult {
        &self
            .comparison
            .rows
            .iter()
            .find(|r| r.case.variant == variant && r.case.isrs == isrs)
            .expect("case in the reference matrix")
            .result
    }

    fn total(&self, variant: PolicyVariant, isrs: bool) -> f64 {
        self.get(variant, isrs).total_tbps
    }
}

fn run_matrix(spans: usize) -> Result<Matrix, String> {
    let grid = default_grid::<f64>();
    let link = Link::default_smf(spans).map_err(err)?;
    let start = Instant::now();
    let comparison = compare_scenarios(
        &link,
        &grid,
        &ScenarioCase::reference_matrix(false),
        &OptimizerOptions::default(),
    )
    .map_err(err)?;
    Ok(Matrix {
        km: 100.0 * spans as f64,
        comparison,
        elapsed: start.elapsed(),
    })
}

fn penalty_pct(reference: f64, value: f64) -> f64 {
    100.0 * (reference - value) / reference
}

fn strategy_penalties(matrices: &[Matrix]) -> Outcome {
    let tol = OptimizerOptions::default().simplex.f_tolerance;
    let mut checks = Vec::new();
    for m in matrices {
        let cubic = m.total(PolicyVariant::CubicPerBand, true);
        let per_band = m.total(PolicyVariant::FlatPerBand, true);
        let both = m.total(PolicyVariant::FlatAllBands, true);
        let three = m.total(PolicyVariant::ThreeDbRule, true);
        let km = m.km;
        checks.push(within(
            &format!("{km} km flat-both penalty"),
            penalty_pct(cubic, both),
            0.5,
            4.0,
            " %",
        ));
        checks.push(within(
            &format!("{km} km flat-per-band penalty"),
            penalty_pct(cubic, per_band),
            0.2,
            2.5,
            " %",
        ));
        checks.push(within(
            &format!("{km} km 3-dB deficit"),
            penalty_pct(cubic, three),
            f64::NEG_INFINITY,
            1.0,
            " %",
        ));
        checks.push(check(
            &format!("{km} km cubic >= flat-per-band >= flat-both"),
            cubic + tol >= per_band && per_band + tol >= both,
            format!("{cubic:.3} / {per_band:.3} / {both:.3} Tb/s"),
        ));
    }
    Ok(checks)
}

fn isrs_penalty(m1000: &Matrix) -> Outcome {
    let on = m1000.total(PolicyVariant::CubicPerBand, true);
    let off = m1000.total(PolicyVariant::CubicPerBand, false);
    Ok(vec![within(
        &format!("1000 km cubic, ISRS on {on:.3} vs off {off:.3} Tb/s"),
        penalty_pct(off, on),
        0.5,
        3.0,
        " %",
    )])
}

fn isrs_signatures(m1000: &Matrix) -> Outcome {
    let grid = default_grid::<f64>();
    let last = grid.len() - 1;
    let on = m1000.get(PolicyVariant::CubicPerBand, true);
    let off = m1000.get(PolicyVariant::CubicPerBand, false);
    let launch_on = policy_to_spectrum(&on.policy, &grid).map_err(err)?;
    let launch_off = policy_to_spectrum(&off.policy, &grid).map_err(err)?;
    let rise = launch_on.dbm()[last] - launch_on.dbm()[0];
    let fall = on.report.gsnr_db[0] - on.report.gsnr_db[last];
    Ok(vec![
        check(
            "ISRS on: launch rise low-L -> high-C",
            rise >= 3.0,
            format!(
                "{:.2} -> {:.2} dBm, {rise:.2} dB (bound >= 3 dB)",
                launch_on.dbm()[0],
                launch_on.dbm()[last]
            ),
        ),
        within("ISRS on: GSNR fall low-L -> high-C", fall, 2.0, 5.0, " dB"),
        within(
            "ISRS off: launch in-band peak-to-peak",
            in_band_peak_to_peak(launch_off.dbm(), &grid),
            0.0,
            1.5,
            " dB",
        ),
        within(
            "ISRS off: GSNR in-band peak-to-peak",
            in_band_peak_to_peak(&off.report.gsnr_db, &grid),
            0.0,
            1.5,
            " dB",
        ),
    ])
}

fn raman_boost(m3000: &Matrix) -> Outcome {
    let grid = default_grid::<f64>();
    let pumps = RamanPumpSet::five_pump_unit();
    let link = Link::default_smf(30)
        .map_err(err)?
        .with_raman(Some(pumps.clone()));
    let mut opts = OptimizerOptions::default();
    opts.link.raman_ase = true;
    let start = Instant::now();
    let pumped =
        maximize_throughput(&link, &grid, PolicyVariant::CubicPerBand, &opts).map_err(err)?;
    let elapsed = start.elapsed();
    let unpumped = m3000.total(PolicyVariant::CubicPerBand, true);
    let gain_pct = 100.0 * (pumped.total_tbps / unpumped - 1.0);

    let span = make_default_smf(100.0).map_err(err)?;
    let launch = policy_to_spectrum(&pumped.policy, &grid).map_err(err)?;
    let with = evolve_span(&span, &launch, &grid, Some(&pumps), 0.25, true).map_err(err)?;
    let without = evolve_span(&span, &launch, &grid, None, 0.25, true).map_err(err)?;
    let on_off: Vec<f64> = with
        .fiber_output_mw()
        .iter()
        .zip(without.fiber_output_mw())
        .map(|(a, b)| 10.0 * (a / b).log10())
        .collect();
    let argmax = (0..on_off.len()).fold(0, |b, i| if on_off[i] > on_off[b] { i } else { b });
    let c_band = grid.band_members(1);
    let low_l = on_off[0];
    let l_band_min = grid
        .band_members(0)
        .iter()
        .map(|&i| on_off[i])
        .fold(f64::MAX, f64::min);
    let comb_min = on_off.iter().cloned().fold(f64::MAX, f64::min);
    Ok(vec![
        within(
            &format!(
                "throughput {:.3} vs unpumped {unpumped:.3} Tb/s",
                pumped.total_tbps
            ),
            gain_pct,
            40.0,
            80.0,
            " %",
        ),
        check(
            "on-off gain peaks in the C-band",
            c_band.contains(&argmax),
            format!("peak {:.2} dB at channel {argmax}", on_off[argmax]),
        ),
        check(
            "on-off gain weakest at the low-L edge",
            low_l <= l_band_min && low_l <= comb_min,
            format!("channel 0 {low_l:.2} dB, comb minimum {comb_min:.2} dB"),
        ),
        check(
            "optimization runtime",
            true,
            format!("{:.1} s", elapsed.as_secs_f64()),
        ),
    ])
}

fn absolute_totals(matrices: &[Matrix]) -> Outcome {
    let reference = [87.4, 67.5, 46.1];
    let mut checks = Vec::new();
    let mut totals = Vec::new();
    for (m, r) in matrices.iter().zip(reference) {
        let t = m.total(PolicyVariant::CubicPerBand, true);
        totals.push(t);
        checks.push(within(
            &format!("{} km cubic {t:.2} Tb/s vs {r}", m.km),
            100.0 * (t / r - 1.0),
            -20.0,
            20.0,
            " %",
        ));
    }
    checks.push(check(
        "decreasing with length",
        totals.windows(2).all(|w| w[0] > w[1]),
        format!("{totals:.2?} Tb/s"),
    ));
    let matrix_time: Duration = matrices.iter().map(|m| m.elapsed).sum();
    checks.push(in_time(
        "strategy matrix at three lengths",
        matrix_time,
        Duration::from_secs(7200),
    ));
    Ok(checks)
}

fn report(id: usize, title: &str, outcome: Outcome, elapsed: Duration) -> (bool, bool) {
    match outcome {
        Ok(checks) => {
            let pass = checks.iter().all(|c| c.pass);
            println!(
                "{} criterion {id}: {title} ({:.1} s)",
                if pass { "PASS" } else { "FAIL" },
                elapsed.as_secs_f64()
            );
            for c in &checks {
                println!(
                    "    [{}] {}: {}",
                    if c.pass { "ok" } else { "miss" },
                    c.name,
                    c.detail
                );
            }
            (pass, true)
        }
        Err(e) => {
            println!("FAIL criterion {id}: {title}: could not evaluate: {e}");
            (false, false)
        }
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn main() {
    let mut results = Vec::new();
    let mut record = |id, title, (outcome, elapsed): (Outcome, Duration)| {
        results.push(report(id, title, outcome, elapsed));
    };

    record(1, "physics invariants", timed(physics_invariants));
    record(
        2,
        "closed form vs numerical GN integral",
        timed(oracle_equivalence),
    );
    record(
        3,
        "3-dB rule emerges from flat optimization, ISRS off",
        timed(three_db_emergence),
    );

    let (matrices, matrix_time) = timed(|| [3, 10, 30].map(run_matrix));
    let matrices: Result<Vec<Matrix>, String> = matrices.into_iter().collect();
    let with = |f: &dyn Fn(&[Matrix]) -> Outcome| -> (Outcome, Duration) {
        timed(|| matrices.as_ref().map_err(Clone::clone).and_then(|m| f(m)))
    };
    println!(
        "strategy matrix (5 cases) at 300, 1000 and 3000 km optimized in {:.1} s",
        matrix_time.as_secs_f64()
    );
    record(
        4,
        "strategy penalties at 300/1000/3000 km",
        with(&strategy_penalties),
    );
    record(
        5,
        "ISRS throughput penalty at 1000 km",
        with(&|m| isrs_penalty(&m[1])),
    );
    record(
        6,
        "ISRS launch and GSNR signatures at 1000 km",
        with(&|m| isrs_signatures(&m[1])),
    );
    record(
        7,
        "backward Raman boost at 3000 km",
        with(&|m| raman_boost(&m[2])),
    );
    record(
        8,
        "absolute totals and length trend",
        with(&absolute_totals),
    );

    let passed = results.iter().filter(|r| r.0).count();
    let evaluated = results.iter().all(|r| r.1);
    println!("acceptance: {passed}/{} criteria pass", results.len());
    let strict = std::env::var_os("SCLB_ACCEPTANCE_STRICT").is_some();
    if !evaluated || (strict && passed < results.len()) {
        std::process::exit(1);
    }
}
