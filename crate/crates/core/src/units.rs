//! Power units, band plans and the WDM channel grid.
//!
//! Frequencies are carried in THz, symbol rates in GBaud. Powers cross module
//! boundaries in dBm ([`PowerSpectrum`]) and are converted to mW wherever the
//! physics needs linear quantities.

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

pub fn dbm_to_mw<T: Scalar>(p_dbm: T) -> Result<T> {
    if !p_dbm.is_finite() {
        return Err(Error::invalid(format!("non-finite power {p_dbm} dBm")));
    }
    Ok(c::<T>(10.0).powf(p_dbm / c(10.0)))
}

pub fn mw_to_dbm<T: Scalar>(p_mw: T) -> Result<T> {
    if !p_mw.is_finite() || p_mw <= T::zero() {
        return Err(Error::invalid(format!("power {p_mw} mW has no dBm value")));
    }
    Ok(c::<T>(10.0) * p_mw.log10())
}

/// Linear ratio to dB without validation; callers guarantee positivity.
#[inline]
pub(crate) fn lin_to_db<T: Scalar>(x: T) -> T {
    c::<T>(10.0) * x.log10()
}

#[inline]
pub(crate) fn db_to_lin<T: Scalar>(x: T) -> T {
    c::<T>(10.0).powf(x / c(10.0))
}

/// A contiguous amplification band.
#[derive(Debug, Clone, PartialEq)]
pub struct Band<T> {
    pub name: String,
    pub f_lo: T,
    pub f_hi: T,
}

impl<T: Scalar> Band<T> {
    pub fn new(name: impl Into<String>, f_lo: T, f_hi: T) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo <= T::zero() || f_lo >= f_hi {
            return Err(Error::Grid(format!(
                "band edges [{f_lo}, {f_hi}] THz are not increasing"
            )));
        }
        Ok(Band {
            name: name.into(),
            f_lo,
            f_hi,
        })
    }

    pub fn center(&self) -> T {
        (self.f_lo + self.f_hi) / c(2.0)
    }

    pub fn width(&self) -> T {
        self.f_hi - self.f_lo
    }

    pub fn contains(&self, f: T) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }

    /// Super-L band edges used throughout the default scenario.
    pub fn super_l() -> Self {
        Band::new("L", c(184.50), c(190.32)).expect("valid band")
    }

    /// Super-C band edges used throughout the default scenario.
    pub fn super_c() -> Self {
        Band::new("C", c(190.75), c(196.57)).expect("valid band")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    /// Center frequency, THz.
    pub f_thz: T,
    pub symbol_rate_gbaud: T,
    pub roll_off: T,
    /// Index into [`ChannelGrid::bands`].
    pub band: usize,
}

impl<T: Scalar> Channel<T> {
    /// Symbol rate expressed in THz (i.e. 1/ps).
    pub fn symbol_rate_thz(&self) -> T {
        self.symbol_rate_gbaud * c(1e-3)
    }

    /// Spectral occupancy R_s (1 + roll-off), THz.
    pub fn occupancy_thz(&self) -> T {
        self.symbol_rate_thz() * (T::one() + self.roll_off)
    }
}

/// Ordered WDM comb with its band plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid<T> {
    bands: Vec<Band<T>>,
    channels: Vec<Channel<T>>,
}

impl<T: Scalar> ChannelGrid<T> {
    /// Validates band ordering, strictly increasing centers, non-overlapping
    /// occupancies and band membership.
    pub fn new(bands: Vec<Band<T>>, channels: Vec<Channel<T>>) -> Result<Self> {
        for w in bands.windows(2) {
            if w[0].f_hi >= w[1].f_lo {
                return Err(Error::Grid(format!(
                    "bands {} and {} overlap or are out of order",
                    w[0].name, w[1].name
                )));
            }
        }
        for (i, ch) in channels.iter().enumerate() {
            let band = bands.get(ch.band).ok_or_else(|| {
                Error::Grid(format!("channel {i} references unknown band {}", ch.band))
            })?;
            if !band.contains(ch.f_thz) {
                return Err(Error::Grid(format!(
                    "channel {i} at {} THz lies outside band {}",
                    ch.f_thz, band.name
                )));
            }
            if !(ch.symbol_rate_gbaud > T::zero()) || !(ch.roll_off >= T::zero()) {
                return Err(Error::Grid(format!(
                    "channel {i} has invalid symbol rate or roll-off"
                )));
            }
        }
        for (i, w) in channels.windows(2).enumerate() {
            if w[1].f_thz <= w[0].f_thz {
                return Err(Error::Grid(format!(
                    "channel {} is not above channel {i}",
                    i + 1
                )));
            }
            let half_occupancies = (w[0].occupancy_thz() + w[1].occupancy_thz()) / c(2.0);
            if w[1].f_thz - w[0].f_thz < half_occupancies {
                return Err(Error::Grid(format!("channels {i} and {} overlap", i + 1)));
            }
        }
        Ok(ChannelGrid { bands, channels })
    }

    pub fn bands(&self) -> &[Band<T>] {
        &self.bands
    }

    pub fn channels(&self) -> &[Channel<T>] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.channels.iter().map(|ch| ch.f_thz).collect()
    }

    /// Indices of the channels belonging to band `b`, in frequency order.
    pub fn band_members(&self, b: usize) -> Vec<usize> {
        (0..self.channels.len())
            .filter(|&i| self.channels[i].band == b)
            .collect()
    }

    /// Channel position inside its band mapped to `[-1, 1]`: the lowest and
    /// highest channel of a band sit at -1 and +1, a lone channel at 0.
    pub fn band_coordinate(&self, i: usize) -> T {
        let members = self.band_members(self.channels[i].band);
        let lo = self.channels[members[0]].f_thz;
        let hi = self.channels[*members.last().expect("non-empty band")].f_thz;
        if hi <= lo {
            return T::zero();
        }
        let mid = (lo + hi) / c(2.0);
        (self.channels[i].f_thz - mid) / ((hi - lo) / c(2.0))
    }

    /// A sub-grid holding the given channel indices (ascending).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let channels = indices
            .iter()
            .map(|&i| {
                self.channels
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Grid(format!("channel index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelGrid::new(self.bands.clone(), channels)
    }
}

/// Uniform comb centred in each band.
pub fn build_grid<T: Scalar>(
    bands: &[Band<T>],
    per_band_count: usize,
    spacing_ghz: T,
    symbol_rate_gbaud: T,
    roll_off: T,
) -> Result<ChannelGrid<T>> {
    if per_band_count == 0 {
        return Err(Error::Grid(
            "per-band channel count must be positive".into(),
        ));
    }
    if !(spacing_ghz > T::zero()) {
        return Err(Error::Grid("channel spacing must be positive".into()));
    }
    let spacing = spacing_ghz * c(1e-3);
    let n = T::from_count(per_band_count);
    let mut channels = Vec::with_capacity(bands.len() * per_band_count);
    for (b, band) in bands.iter().enumerate() {
        // One half-spacing of overhang is tolerated at each band edge.
        if n * spacing > band.width() + spacing * c(1.0 + 1e-9) {
            return Err(Error::Grid(format!(
                "{per_band_count} channels at {spacing_ghz} GHz overflow band {} ({} THz wide)",
                band.name,
                band.width()
            )));
        }
        let first = band.center() - spacing * (n - T::one()) / c(2.0);
        for k in 0..per_band_count {
            channels.push(Channel {
                f_thz: first + spacing * T::from_count(k),
                symbol_rate_gbaud,
                roll_off,
                band: b,
            });
        }
    }
    ChannelGrid::new(bands.to_vec(), channels)
}

/// The 2 x 50 channel, 118.75 GHz, 100 GBaud super-(C+L) comb.
pub fn default_grid<T: Scalar>() -> ChannelGrid<T> {
    build_grid(
        &[Band::super_l(), Band::super_c()],
        50,
        c(118.75),
        c(100.0),
        c(0.1),
    )
    .expect("default grid is valid")
}

/// Per-channel launch power in dBm, index-aligned with a [`ChannelGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    dbm: Vec<T>,
}

impl<T: Scalar> PowerSpectrum<T> {
    pub fn from_dbm(dbm: Vec<T>) -> Result<Self> {
        if let Some(i) = dbm.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "launch power of channel {i} is not finite"
            )));
        }
        Ok(PowerSpectrum { dbm })
    }

    pub fn flat(n: usize, dbm: T) -> Result<Self> {
        Self::from_dbm(vec![dbm; n])
    }

    pub fn from_mw(mw: &[T]) -> Result<Self> {
        Self::from_dbm(
            mw.iter()
                .map(|&p| mw_to_dbm(p))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn dbm(&self) -> &[T] {
        &self.dbm
    }

    pub fn mw(&self) -> Vec<T> {
        self.dbm.iter().map(|&p| db_to_lin(p)).collect()
    }

    pub fn len(&self) -> usize {
        self.dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dbm.is_empty()
    }

    /// Same spectrum shifted by `delta_db` on every channel.
    pub fn offset(&self, delta_db: T) -> Self {
        PowerSpectrum {
            dbm: self.dbm.iter().map(|&p| p + delta_db).collect(),
        }
    }

    pub fn check_aligned(&self, grid: &ChannelGrid<T>) -> Result<()> {
        if self.dbm.len() != grid.len() {
            return Err(Error::invalid(format!(
                "power spectrum has {} entries for {} channels",
                self.dbm.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}
