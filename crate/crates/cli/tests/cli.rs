use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "length_km = 200\n\n[optimizer]\nstarts_dbm = [2.0]\nmax_evaluations = 400\n";

fn sclb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sclb"))
        .current_dir(dir)
        .env_remove("SCLB_SCENARIO_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> serde_like::Value {
    serde_like::parse(&read(path))
}

/// Just enough JSON inspection for these checks without a serde dependency.
mod serde_like {
    pub struct Value(String);

    pub fn parse(text: &str) -> Value {
        Value(text.to_string())
    }

    impl Value {
        /// Raw text of the value stored under `"key":`.
        pub fn raw(&self, key: &str) -> &str {
            let tag = format!("\"{key}\":");
            let start = self
                .0
                .find(&tag)
                .unwrap_or_else(|| panic!("no {key} in {}", self.0))
                + tag.len();
            let rest = self.0[start..].trim_start();
            let end = if rest.starts_with('[') {
                rest.find(']').unwrap() + 1
            } else {
                rest.find([',', '\n', '}']).unwrap()
            };
            &rest[..end]
        }

        pub fn number(&self, key: &str) -> f64 {
            self.raw(key).parse().unwrap()
        }

        pub fn list_len(&self, key: &str) -> usize {
            let raw = self.raw(key);
            raw.trim_matches(|c| c == '[' || c == ']')
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .count()
        }
    }
}

#[test]
fn simulate_isrs_on_and_off_write_per_channel_tables() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "s.toml", "length_km = 1000\n");
    for sw in ["on", "off"] {
        let out = sclb(
            dir.path(),
            &[
                "simulate",
                "--scenario",
                "s.toml",
                "--isrs",
                sw,
                "--out",
                "o",
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let on = read(dir.path().join("o/sclb-simulate-isrs-on.csv"));
    let off = read(dir.path().join("o/sclb-simulate-isrs-off.csv"));
    assert_eq!(on.lines().count(), 101);
    assert_eq!(off.lines().count(), 101);
    assert!(
        on.starts_with("channel_index,f_THz,band,launch_dBm,OSNR_dB,SNR_NL_dB,GSNR_dB,rate_Gbps\n")
    );
    assert_ne!(on, off);
    let gsnr = |text: &str, row: usize| -> f64 {
        text.lines()
            .nth(row + 1)
            .unwrap()
            .split(',')
            .nth(6)
            .unwrap()
            .parse()
            .unwrap()
    };
    // ISRS moves power from C to L: the low-L edge gains relative to the high-C edge.
    let tilt_on = gsnr(&on, 0) - gsnr(&on, 99);
    let tilt_off = gsnr(&off, 0) - gsnr(&off, 99);
    assert!(tilt_on > tilt_off + 1.0, "{tilt_on} vs {tilt_off}");
    let summary = json(dir.path().join("o/sclb-simulate-isrs-on.json"));
    assert_eq!(summary.number("channel_count"), 100.0);
    assert_ne!(
        summary.raw("scenario_hash"),
        json(dir.path().join("o/sclb-simulate-isrs-off.json")).raw("scenario_hash")
    );
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "s.toml", "length_km = 300\n");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let o = format!("o{k}");
        let out = sclb(
            dir.path(),
            &[
                "simulate",
                "--scenario",
                "s.toml",
                "--out",
                &o,
                "--evolution",
            ],
        );
        assert!(out.status.success());
        outputs.push(
            [
                "sclb-simulate-isrs-on.csv",
                "sclb-simulate-isrs-on.json",
                "sclb-evolution-isrs-on.csv",
            ]
            .map(|f| read(dir.path().join(&o).join(f))),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
    let evolution = &outputs[0][2];
    assert!(evolution.starts_with("z_km,ch0_dBm"));
    assert_eq!(evolution.lines().count(), 1 + 401);
}

#[test]
fn optimize_cubic_reports_eight_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "s.toml", SMALL);
    let out = sclb(
        dir.path(),
        &[
            "optimize",
            "--scenario",
            "s.toml",
            "--strategy",
            "cubic",
            "--out",
            "o",
        ],
    );
    let code = out.status.code().unwrap();
    assert!(
        code == 0 || code == 2,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = json(dir.path().join("o/sclb-optimize-cubic-isrs-on.json"));
    assert_eq!(summary.list_len("coefficients"), 8);
    assert!(summary.number("total_tbps") > 50.0);
    assert_eq!(summary.raw("strategy"), "\"cubic\"");
    assert_eq!(summary.raw("converged") == "true", code == 0);
}

#[test]
fn compare_writes_strategy_table() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "s.toml", SMALL);
    let out = sclb(
        dir.path(),
        &["compare", "--scenario", "s.toml", "--out", "o"],
    );
    let code = out.status.code().unwrap();
    assert!(
        code == 0 || code == 2,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = read(dir.path().join("o/sclb-compare.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "strategy,isrs,raman,throughput_Tbps,delta_pct,evaluations,converged"
    );
    let keys: Vec<String> = lines[1..]
        .iter()
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "cubic,on",
            "flat-per-band,on",
            "flat-both,on",
            "3db,on",
            "cubic,off"
        ]
    );
    assert!(
        lines[1].contains(",0.0000,"),
        "baseline delta: {}",
        lines[1]
    );
    for k in 0..5 {
        let prefix = format!("sclb-compare-{k}-");
        assert!(std::fs::read_dir(dir.path().join("o")).unwrap().any(|e| e
            .unwrap()
            .file_name()
            .to_string_lossy()
            .starts_with(&prefix)));
    }
    let summary = json(dir.path().join("o/sclb-compare.json"));
    assert_eq!(summary.raw("baseline"), "\"cubic\"");
}

#[test]
fn sweep_covers_requested_levels() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "s.toml", "length_km = 1000\n");
    let out = sclb(
        dir.path(),
        &[
            "sweep",
            "--scenario",
            "s.toml",
            "--from-dbm",
            "-2",
            "--to-dbm",
            "8",
            "--step-db",
            "1",
            "--out",
            "o",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = read(dir.path().join("o/sclb-sweep-isrs-on.csv"));
    assert_eq!(table.lines().count(), 12);
    let totals: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let peak = totals.iter().cloned().fold(f64::MIN, f64::max);
    let k = totals.iter().position(|&t| t == peak).unwrap();
    assert!(k > 0 && k < totals.len() - 1, "{totals:?}");
    let best = json(dir.path().join("o/sclb-sweep-isrs-on.json")).number("best_launch_dbm");
    assert_eq!(best, -2.0 + k as f64);
}

#[test]
fn invalid_scenarios_exit_one_naming_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "neg.toml", "length_km = -5\n");
    scenario(dir.path(), "typo.toml", "length_km = 100\nlenght_km = 5\n");
    let cases = [
        ("neg.toml", "length_km"),
        ("typo.toml", "line 2"),
        ("missing.toml", "missing.toml"),
    ];
    for (file, needle) in cases {
        let out = sclb(dir.path(), &["simulate", "--scenario", file]);
        assert_eq!(out.status.code(), Some(1), "{file}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{file}: {err}");
    }
    scenario(dir.path(), "ok.toml", "length_km = 100\n");
    let out = sclb(
        dir.path(),
        &["optimize", "--scenario", "ok.toml", "--strategy", "best"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(sclb(dir.path(), &["transmogrify"]).status.code(), Some(1));
    assert_eq!(sclb(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn degenerate_optimization_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    scenario(
        dir.path(),
        "s.toml",
        "length_km = 100\n\n[optimizer]\nstarts_dbm = [-60.0]\nmax_evaluations = 20\n",
    );
    let out = sclb(
        dir.path(),
        &[
            "optimize",
            "--scenario",
            "s.toml",
            "--strategy",
            "flat-both",
            "--out",
            "o",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn scenario_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenarios");
    std::fs::create_dir(&scen).unwrap();
    scenario(&scen, "s.toml", "length_km = 100\n");
    let out = Command::new(env!("CARGO_BIN_EXE_sclb"))
        .current_dir(dir.path())
        .env("SCLB_SCENARIO_DIR", &scen)
        .args(["simulate", "--scenario", "s.toml", "--out", "o"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("o/sclb-simulate-isrs-on.csv").exists());
}
