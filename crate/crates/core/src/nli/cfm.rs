//! Closed-form incoherent-GN estimate with ISRS-aware effective profiles.
//!
//! Each channel's normalized power profile ρ(z) is reduced to two numbers:
//! the effective length `L_eff = ∫ρ dz` and a fitted exponential decay rate
//! `α_fit`, whose inverse is the asymptotic effective length `L_a`. These
//! replace the uniform-loss quantities of the classic GN closed form:
//!
//! ```text
//! SPM_i    = (8/27)  γ_i²  P_i³     L_eff,i² · (π/2) asinh(a_i)/a_i,
//!            a_i = (π²/2) |β2,i| L_a,i R_i²
//! XPM_i←j  = (16/27) γ_ij² P_i P_j² L_eff,j² · atan(2π² |β2,ij| |Δf| R_i L_a,j)
//!            · ln((|Δf| + R_j/2)/(|Δf| − R_j/2)) / (π² |β2,ij| L_a,j R_j²)
//! ```
//!
//! with γ_ij the mean of γ_i and γ_j and β2,ij taken at the mean frequency.

use super::{NliBreakdown, NliContribution};
use crate::error::{Error, Result};
use crate::fiber::FiberSpan;
use crate::propagation::PowerEvolution;
use crate::scalar::{c, Scalar};
use crate::units::{ChannelGrid, PowerSpectrum};

/// Lower bound on the fitted decay rate, 1/km. Counter-pumped profiles can
/// be nearly flat or rising, which would otherwise send `L_a` to infinity.
const MIN_FIT_RATE_PER_KM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveProfile<T> {
    /// ∫ρ(z) dz, km.
    pub l_eff_km: T,
    /// Fitted power decay rate, 1/km.
    pub alpha_fit: T,
}

impl<T: Scalar> EffectiveProfile<T> {
    /// Trapezoidal `L_eff` and a ρ²-weighted log-linear fit of
    /// `ρ(z) ≈ exp(-α z)` through ρ(0) = 1.
    pub fn from_profile(z_km: &[T], rho: &[T]) -> Self {
        let mut l_eff = T::zero();
        for k in 1..z_km.len() {
            l_eff = l_eff + (z_km[k] - z_km[k - 1]) * (rho[k] + rho[k - 1]) / c(2.0);
        }
        let (mut num, mut den) = (T::zero(), T::zero());
        for (&z, &r) in z_km.iter().zip(rho) {
            let w = r * r;
            num = num - w * z * r.ln();
            den = den + w * z * z;
        }
        let fitted = if den > T::zero() {
            num / den
        } else {
            T::zero()
        };
        EffectiveProfile {
            l_eff_km: l_eff,
            alpha_fit: fitted.max(c(MIN_FIT_RATE_PER_KM)),
        }
    }

    /// Asymptotic effective length 1/α_fit, km.
    pub fn l_asymptotic_km(&self) -> T {
        T::one() / self.alpha_fit
    }
}

/// `asinh(a)/a`, continuous at 0.
fn asinhc<T: Scalar>(a: T) -> T {
    if a.abs() < c(1e-8) {
        T::one()
    } else {
        a.asinh() / a
    }
}

/// `atan(k·b)/b`, continuous at b = 0.
fn atan_over<T: Scalar>(k: T, b: T) -> T {
    if (k * b).abs() < c(1e-10) {
        k
    } else {
        (k * b).atan() / b
    }
}

pub fn nli_cfm<T: Scalar>(
    span: &FiberSpan<T>,
    grid: &ChannelGrid<T>,
    launch: &PowerSpectrum<T>,
    evolution: &PowerEvolution<T>,
) -> Result<NliContribution<T>> {
    launch.check_aligned(grid)?;
    let n = grid.len();
    if evolution.channel_count() != n {
        return Err(Error::invalid(format!(
            "evolution has {} channels, grid has {n}",
            evolution.channel_count()
        )));
    }
    let channels = grid.channels();
    if let Some(i) = channels
        .iter()
        .position(|ch| !(ch.symbol_rate_gbaud > T::zero()))
    {
        return Err(Error::invalid(format!("channel {i} has zero bandwidth")));
    }

    let profiles = (0..n)
        .map(|i| {
            let rho = evolution.normalized_profile(i)?;
            Ok(EffectiveProfile::from_profile(&evolution.z_km, &rho))
        })
        .collect::<Result<Vec<_>>>()?;
    // launch powers in W
    let p_w: Vec<T> = launch.mw().iter().map(|&p| p * c(1e-3)).collect();
    let rate: Vec<T> = channels.iter().map(|ch| ch.symbol_rate_thz()).collect();
    let freq: Vec<T> = channels.iter().map(|ch| ch.f_thz).collect();
    let gamma: Vec<T> = freq.iter().map(|&f| span.gamma_at(f)).collect();
    let pi = T::PI();
    let pi2 = pi * pi;

    let mut spm = vec![T::zero(); n];
    let mut xpm = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        let prof = profiles[i];
        let b2 = span.beta2(freq[i])?.abs();
        let la = prof.l_asymptotic_km();
        let a = pi2 / c(2.0) * b2 * la * rate[i] * rate[i];
        spm[i] = c::<T>(8.0 / 27.0)
            * gamma[i]
            * gamma[i]
            * p_w[i].powi(3)
            * prof.l_eff_km
            * prof.l_eff_km
            * (pi / c(2.0))
            * asinhc(a);

        for j in (0..n).filter(|&j| j != i) {
            let pj = profiles[j];
            let df = (freq[j] - freq[i]).abs();
            let half = rate[j] / c(2.0);
            if df <= half {
                return Err(Error::invalid(format!(
                    "channels {i} and {j} overlap; XPM closed form undefined"
                )));
            }
            let b2_ij = span.beta2((freq[i] + freq[j]) / c(2.0))?.abs();
            let la_j = pj.l_asymptotic_km();
            let g_ij = (gamma[i] + gamma[j]) / c(2.0);
            let kernel = atan_over(c::<T>(2.0) * pi2 * df * rate[i] * la_j, b2_ij)
                * ((df + half) / (df - half)).ln()
                / (pi2 * la_j * rate[j] * rate[j]);
            xpm[i][j] = c::<T>(16.0 / 27.0)
                * g_ij
                * g_ij
                * p_w[i]
                * p_w[j]
                * p_w[j]
                * pj.l_eff_km
                * pj.l_eff_km
                * kernel;
        }
    }

    let to_mw = c::<T>(1e3);
    let spm_mw: Vec<T> = spm.iter().map(|&v| v * to_mw).collect();
    let xpm_mw: Vec<Vec<T>> = xpm
        .iter()
        .map(|row| row.iter().map(|&v| v * to_mw).collect())
        .collect();
    let total_mw = (0..n)
        .map(|i| spm_mw[i] + xpm_mw[i].iter().copied().sum::<T>())
        .collect();
    Ok(NliContribution {
        total_mw,
        breakdown: Some(NliBreakdown { spm_mw, xpm_mw }),
    })
}
