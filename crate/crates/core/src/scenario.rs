//! Scenario files: a strict TOML description of a link, its channel plan,
//! the launch strategy and the optimizer settings.
//!
//! Every field has a default encoding the reference super-(C+L) system, so
//! `length_km = 1000` alone is a complete scenario.

use crate::error::{Error, Result};
use crate::fiber::{make_default_smf, RamanPump};
use crate::optimizer::{LaunchPolicy, NelderMead, OptimizerOptions, PolicyVariant};
use crate::propagation::DEFAULT_STEP_KM;
use crate::units::{build_grid, Band};
use crate::{
    Amplifier, ChannelGrid, FiberSpan, Link, LinkOptions, RamanPumpSet, SampledCurve,
    TransponderCurve,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Directory searched for scenario files given by relative path that do
/// not exist relative to the working directory.
pub const SCENARIO_DIR_ENV: &str = "SCLB_SCENARIO_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Total length; split into `span_length_km` spans. Ignored when `spans`
    /// is given.
    pub length_km: Option<f64>,
    pub span_length_km: f64,
    /// Explicit span lengths in km.
    pub spans: Option<Vec<f64>>,
    pub isrs: bool,
    pub raman_ase: bool,
    pub step_km: f64,
    pub strategy: String,
    pub bands: Vec<BandConfig>,
    pub channels: ChannelPlan,
    pub fiber: FiberOverrides,
    pub amplifier: AmplifierConfig,
    pub raman: Option<RamanConfig>,
    pub launch: Option<LaunchConfig>,
    pub optimizer: OptimizerConfig,
    pub transponder: Option<TransponderConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub name: String,
    pub f_lo_thz: f64,
    pub f_hi_thz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelPlan {
    pub per_band: usize,
    pub spacing_ghz: f64,
    pub symbol_rate_gbaud: f64,
    pub roll_off: f64,
}

/// Replacement curves as `[x, y]` pairs; anything left out keeps the
/// built-in SMF profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberOverrides {
    /// dB/km vs THz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attenuation: Option<Vec<[f64; 2]>>,
    /// ps/(nm km) vs THz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<Vec<[f64; 2]>>,
    /// 1/(W km) vs THz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<[f64; 2]>>,
    /// 1/(W km) vs frequency offset in THz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raman_efficiency: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lumped_loss_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplifierConfig {
    /// Noise figure dB vs THz; default 6 dB in L, 5 dB in C.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nf_db: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanConfig {
    pub pumps: Vec<PumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub f_thz: f64,
    pub power_mw: f64,
}

/// Fixed launch spectrum for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchConfig {
    pub policy: String,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_evaluations: usize,
    pub tolerance_tbps: f64,
    pub three_db_tolerance: f64,
    pub initial_spread_db: f64,
    pub starts_dbm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransponderConfig {
    /// `[gsnr_db, rate_gbps]` knots.
    pub table: Vec<[f64; 2]>,
    pub cap_gbps: f64,
    pub cutoff_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub prefix: String,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            length_km: None,
            span_length_km: 100.0,
            spans: None,
            isrs: true,
            raman_ase: false,
            step_km: DEFAULT_STEP_KM,
            strategy: PolicyVariant::CubicPerBand.name().to_string(),
            bands: vec![
                BandConfig {
                    name: "L".into(),
                    f_lo_thz: 184.50,
                    f_hi_thz: 190.32,
                },
                BandConfig {
                    name: "C".into(),
                    f_lo_thz: 190.75,
                    f_hi_thz: 196.57,
                },
            ],
            channels: ChannelPlan::default(),
            fiber: FiberOverrides::default(),
            amplifier: AmplifierConfig::default(),
            raman: None,
            launch: None,
            optimizer: OptimizerConfig::default(),
            transponder: None,
            output: OutputConfig::default(),
        }
    }
}

impl Default for ChannelPlan {
    fn default() -> Self {
        ChannelPlan {
            per_band: 50,
            spacing_ghz: 118.75,
            symbol_rate_gbaud: 100.0,
            roll_off: 0.1,
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        OptimizerConfig {
            max_evaluations: o.simplex.max_evaluations,
            tolerance_tbps: o.simplex.f_tolerance,
            three_db_tolerance: o.three_db_tolerance,
            initial_spread_db: o.simplex.initial_spread,
            starts_dbm: o.starts_dbm,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: ".".into(),
            prefix: "sclb".into(),
        }
    }
}

fn curve(field: &str, knots: &[[f64; 2]]) -> Result<SampledCurve> {
    SampledCurve::new(knots.iter().map(|k| (k[0], k[1])).collect())
        .map_err(|e| Error::config(field, e.to_string()))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {v}")))
    }
}

impl Scenario {
    /// Parses TOML text; unknown keys and type mismatches are reported with
    /// their location, physically invalid values with the offending field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "scenario".into());
            Error::config(field, e.message().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("scenario", e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded. Output
    /// locations do not take part: moving the results keeps the hash.
    pub fn hash(&self) -> Result<String> {
        let canonical = Scenario {
            output: OutputConfig::default(),
            ..self.clone()
        };
        Ok(hex::encode(Sha256::digest(
            canonical.to_toml_string()?.as_bytes(),
        )))
    }

    pub fn variant(&self) -> Result<PolicyVariant> {
        self.strategy
            .parse()
            .map_err(|e: Error| Error::config("strategy", e.to_string()))
    }

    /// Span lengths in km.
    pub fn span_lengths(&self) -> Result<Vec<f64>> {
        if let Some(spans) = &self.spans {
            if spans.is_empty() {
                return Err(Error::config("spans", "needs at least one span"));
            }
            for (k, &l) in spans.iter().enumerate() {
                positive(&format!("spans[{k}]"), l)?;
            }
            return Ok(spans.clone());
        }
        let total = self
            .length_km
            .ok_or_else(|| Error::config("length_km", "give `length_km` or `spans`"))?;
        positive("length_km", total)?;
        positive("span_length_km", self.span_length_km)?;
        let count = (total / self.span_length_km).round();
        if count < 1.0 || (count * self.span_length_km - total).abs() > 1e-9 * total {
            return Err(Error::config(
                "length_km",
                format!(
                    "{total} km is not a whole number of {} km spans",
                    self.span_length_km
                ),
            ));
        }
        Ok(vec![self.span_length_km; count as usize])
    }

    pub fn validate(&self) -> Result<()> {
        self.span_lengths()?;
        positive("step_km", self.step_km)?;
        self.variant()?;
        self.grid()?;
        self.span(self.span_length_km)?;
        self.amplifier()?;
        self.pumps()?;
        self.transponder_curve()?;
        self.launch_policy()?;
        let o = &self.optimizer;
        if o.max_evaluations == 0 {
            return Err(Error::config(
                "optimizer.max_evaluations",
                "must be at least 1",
            ));
        }
        positive("optimizer.tolerance_tbps", o.tolerance_tbps)?;
        positive("optimizer.three_db_tolerance", o.three_db_tolerance)?;
        positive("optimizer.initial_spread_db", o.initial_spread_db)?;
        if o.starts_dbm.is_empty() || o.starts_dbm.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(
                "optimizer.starts_dbm",
                "needs finite start levels",
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ChannelGrid> {
        let bands = self
            .bands
            .iter()
            .enumerate()
            .map(|(k, b)| {
                Band::new(b.name.clone(), b.f_lo_thz, b.f_hi_thz)
                    .map_err(|e| Error::config(format!("bands[{k}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let ch = &self.channels;
        build_grid(
            &bands,
            ch.per_band,
            ch.spacing_ghz,
            ch.symbol_rate_gbaud,
            ch.roll_off,
        )
        .map_err(|e| Error::config("channels", e.to_string()))
    }

    fn span(&self, length_km: f64) -> Result<FiberSpan> {
        let base =
            make_default_smf(length_km).map_err(|e| Error::config("spans", e.to_string()))?;
        let f = &self.fiber;
        let pick = |field: &str, o: &Option<Vec<[f64; 2]>>, d: &SampledCurve| match o {
            Some(k) => curve(field, k),
            None => Ok(d.clone()),
        };
        FiberSpan::new(
            length_km,
            pick("fiber.attenuation", &f.attenuation, &base.attenuation)?,
            pick("fiber.dispersion", &f.dispersion, &base.dispersion)?,
            pick("fiber.gamma", &f.gamma, &base.gamma)?,
            pick(
                "fiber.raman_efficiency",
                &f.raman_efficiency,
                &base.raman_eff,
            )?,
            f.lumped_loss_db.unwrap_or(base.lumped_loss_db),
        )
        .map_err(|e| Error::config("fiber", e.to_string()))
    }

    fn amplifier(&self) -> Result<Amplifier> {
        match &self.amplifier.nf_db {
            Some(k) => Ok(Amplifier {
                nf_db: curve("amplifier.nf_db", k)?,
            }),
            None => Ok(Amplifier::default_edfa()),
        }
    }

    pub fn pumps(&self) -> Result<Option<RamanPumpSet>> {
        let Some(cfg) = &self.raman else {
            return Ok(None);
        };
        let set = RamanPumpSet::new(
            cfg.pumps
                .iter()
                .map(|p| RamanPump {
                    f_thz: p.f_thz,
                    power_mw: p.power_mw,
                })
                .collect(),
        )
        .map_err(|e| Error::config("raman.pumps", e.to_string()))?;
        Ok(Some(set))
    }

    pub fn link(&self) -> Result<Link> {
        let lengths = self.span_lengths()?;
        let spans = lengths
            .iter()
            .map(|&l| self.span(l))
            .collect::<Result<Vec<_>>>()?;
        let amp = self.amplifier()?;
        let pumps = self.pumps()?;
        let n = spans.len();
        Link::new(spans, vec![amp; n], vec![pumps; n])
    }

    pub fn transponder_curve(&self) -> Result<TransponderCurve> {
        match &self.transponder {
            Some(t) => TransponderCurve::new(
                t.table.iter().map(|k| (k[0], k[1])).collect(),
                t.cap_gbps,
                t.cutoff_db,
            )
            .map_err(|e| Error::config("transponder", e.to_string())),
            None => Ok(TransponderCurve::default_100gbaud()),
        }
    }

    /// Fixed launch policy for `simulate`; a flat 2 dBm when absent.
    pub fn launch_policy(&self) -> Result<LaunchPolicy> {
        let bands = self.bands.len();
        match &self.launch {
            Some(l) => {
                let variant: PolicyVariant = l
                    .policy
                    .parse()
                    .map_err(|e: Error| Error::config("launch.policy", e.to_string()))?;
                LaunchPolicy::from_params(variant, bands, &l.params)
                    .map_err(|e| Error::config("launch.params", e.to_string()))
            }
            None => Ok(LaunchPolicy::FlatAllBands(2.0)),
        }
    }

    pub fn link_options(&self) -> Result<LinkOptions> {
        Ok(LinkOptions {
            isrs: self.isrs,
            raman: self.raman.is_some(),
            nli: true,
            raman_ase: self.raman_ase,
            curve: self.transponder_curve()?,
            step_km: self.step_km,
        })
    }

    pub fn optimizer_options(&self) -> Result<OptimizerOptions> {
        let o = &self.optimizer;
        Ok(OptimizerOptions {
            link: self.link_options()?,
            simplex: NelderMead {
                initial_spread: o.initial_spread_db,
                f_tolerance: o.tolerance_tbps,
                max_evaluations: o.max_evaluations,
                ..NelderMead::default()
            },
            three_db_tolerance: o.three_db_tolerance,
            starts_dbm: o.starts_dbm.clone(),
        })
    }

    /// Path of an output file `<dir>/<prefix><suffix>`.
    pub fn output_path(&self, suffix: &str) -> PathBuf {
        Path::new(&self.output.dir).join(format!("{}{suffix}", self.output.prefix))
    }
}

/// Resolves `path`, falling back to the directory named by
/// `SCLB_SCENARIO_DIR` for relative paths that do not exist as given.
pub fn resolve_scenario_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(SCENARIO_DIR_ENV) {
            return Path::new(&dir).join(path);
        }
    }
    path.to_path_buf()
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let path = resolve_scenario_path(path);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}
