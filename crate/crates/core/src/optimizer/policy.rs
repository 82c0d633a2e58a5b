//! Launch-power spectrum families.

use crate::error::{Error, Result};
use crate::{ChannelGrid, PowerSpectrum};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyVariant {
    CubicPerBand,
    FlatPerBand,
    FlatAllBands,
    ThreeDbRule,
}

impl PolicyVariant {
    pub const ALL: [PolicyVariant; 4] = [
        PolicyVariant::CubicPerBand,
        PolicyVariant::FlatPerBand,
        PolicyVariant::FlatAllBands,
        PolicyVariant::ThreeDbRule,
    ];

    pub fn parameter_count(self, bands: usize) -> usize {
        match self {
            PolicyVariant::CubicPerBand | PolicyVariant::ThreeDbRule => 4 * bands,
            PolicyVariant::FlatPerBand => bands,
            PolicyVariant::FlatAllBands => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyVariant::CubicPerBand => "cubic",
            PolicyVariant::FlatPerBand => "flat-per-band",
            PolicyVariant::FlatAllBands => "flat-both",
            PolicyVariant::ThreeDbRule => "3db",
        }
    }
}

impl fmt::Display for PolicyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" | "cubic-per-band" => Ok(PolicyVariant::CubicPerBand),
            "flat-per-band" | "flat-band" => Ok(PolicyVariant::FlatPerBand),
            "flat-both" | "flat-all" | "flat" => Ok(PolicyVariant::FlatAllBands),
            "3db" | "3-db" | "three-db" => Ok(PolicyVariant::ThreeDbRule),
            other => Err(Error::invalid(format!("unknown launch strategy `{other}`"))),
        }
    }
}

/// Launch spectrum as `c0 + c1 x + c2 x² + c3 x³` dBm per band, with `x` the
/// channel's position in its band on [-1, 1]. Flat variants keep only `c0`.
#[derive(Debug, Clone, PartialEq)]
pub enum LaunchPolicy {
    CubicPerBand(Vec<[f64; 4]>),
    FlatPerBand(Vec<f64>),
    FlatAllBands(f64),
    ThreeDbRule(Vec<[f64; 4]>),
}

impl LaunchPolicy {
    pub fn variant(&self) -> PolicyVariant {
        match self {
            LaunchPolicy::CubicPerBand(_) => PolicyVariant::CubicPerBand,
            LaunchPolicy::FlatPerBand(_) => PolicyVariant::FlatPerBand,
            LaunchPolicy::FlatAllBands(_) => PolicyVariant::FlatAllBands,
            LaunchPolicy::ThreeDbRule(_) => PolicyVariant::ThreeDbRule,
        }
    }

    /// Rebuilds a policy from its flat parameter vector.
    pub fn from_params(variant: PolicyVariant, bands: usize, params: &[f64]) -> Result<Self> {
        let expected = variant.parameter_count(bands);
        if params.len() != expected {
            return Err(Error::invalid(format!(
                "{variant} policy over {bands} bands takes {expected} parameters, got {}",
                params.len()
            )));
        }
        if let Some(k) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "policy parameter {k} is not finite"
            )));
        }
        let cubic = || {
            params
                .chunks_exact(4)
                .map(|c| [c[0], c[1], c[2], c[3]])
                .collect::<Vec<_>>()
        };
        Ok(match variant {
            PolicyVariant::CubicPerBand => LaunchPolicy::CubicPerBand(cubic()),
            PolicyVariant::ThreeDbRule => LaunchPolicy::ThreeDbRule(cubic()),
            PolicyVariant::FlatPerBand => LaunchPolicy::FlatPerBand(params.to_vec()),
            PolicyVariant::FlatAllBands => LaunchPolicy::FlatAllBands(params[0]),
        })
    }

    /// Every band at `c0` dBm with no tilt or curvature.
    pub fn flat_start(variant: PolicyVariant, bands: usize, c0: f64) -> Self {
        let mut params = vec![0.0; variant.parameter_count(bands)];
        match variant {
            PolicyVariant::CubicPerBand | PolicyVariant::ThreeDbRule => {
                params.iter_mut().step_by(4).for_each(|p| *p = c0)
            }
            _ => params.iter_mut().for_each(|p| *p = c0),
        }
        LaunchPolicy::from_params(variant, bands, &params).expect("consistent parameter count")
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            LaunchPolicy::CubicPerBand(c) | LaunchPolicy::ThreeDbRule(c) => {
                c.iter().flatten().copied().collect()
            }
            LaunchPolicy::FlatPerBand(v) => v.clone(),
            LaunchPolicy::FlatAllBands(v) => vec![*v],
        }
    }

    fn band_count(&self) -> Option<usize> {
        match self {
            LaunchPolicy::CubicPerBand(c) | LaunchPolicy::ThreeDbRule(c) => Some(c.len()),
            LaunchPolicy::FlatPerBand(v) => Some(v.len()),
            LaunchPolicy::FlatAllBands(_) => None,
        }
    }
}

pub fn policy_to_spectrum(policy: &LaunchPolicy, grid: &ChannelGrid) -> Result<PowerSpectrum> {
    if let Some(nb) = policy.band_count() {
        if nb != grid.bands().len() {
            return Err(Error::invalid(format!(
                "policy has {nb} bands, grid has {}",
                grid.bands().len()
            )));
        }
    }
    let dbm = grid
        .channels()
        .iter()
        .enumerate()
        .map(|(i, ch)| match policy {
            LaunchPolicy::CubicPerBand(c) | LaunchPolicy::ThreeDbRule(c) => {
                let [c0, c1, c2, c3] = c[ch.band];
                let x = grid.band_coordinate(i);
                c0 + x * (c1 + x * (c2 + x * c3))
            }
            LaunchPolicy::FlatPerBand(v) => v[ch.band],
            LaunchPolicy::FlatAllBands(v) => *v,
        })
        .collect();
    PowerSpectrum::from_dbm(dbm)
}
