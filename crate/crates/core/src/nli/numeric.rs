//! Numerical GN-model integration, the reference the closed form is checked
//! against.
//!
//! The NLI PSD at the centre of channel i is
//!
//! ```text
//! G_NLI(f_i) = 16/27 ∬ γ² G(f1) G(f2) G(f1+f2-f_i) |LK(f1, f2)|² df1 df2
//! LK = ∫_0^L sqrt(ρ(z,f1) ρ(z,f2) ρ(z,f1+f2-f_i) / ρ(z,f_i)) e^{iΔβ z} dz
//! Δβ = 4π² x1 x2 [β2 + π β3 (x1 + x2)],   x_k = f_k - f_i
//! ```
//!
//! with rectangular channel PSDs of width R_s and the NLI power taken as
//! `G_NLI(f_i) · R_s,i`. The z integral is exact for a piecewise-exponential
//! interpolant of the profile, so arbitrarily large Δβ is handled without
//! resolving the oscillation. The frequency integral runs over every triple
//! of channel cells with `f1 + f2 - f_i` inside a third cell, using composite
//! Gauss-Legendre rules graded geometrically toward the lines x1 = 0 and
//! x2 = 0 where the integrand is sharply peaked.

use num_complex::Complex;
use rayon::prelude::*;

use super::NliContribution;
use crate::error::{Error, Result};
use crate::fiber::FiberSpan;
use crate::propagation::PowerEvolution;
use crate::scalar::{c, Scalar};
use crate::units::{ChannelGrid, PowerSpectrum};

pub const MIN_POINTS_PER_CHANNEL: usize = 64;

/// Upper bound on z segments; finer evolutions are strided.
const MAX_Z_SEGMENTS: usize = 100;
/// Geometric grading reaches down to `2^-GRADING_OCTAVES` of an interval.
const GRADING_OCTAVES: f64 = 16.0;

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gauss_panel<T: Scalar>(lo: T, hi: T, out: &mut Vec<(T, T)>) {
    let mid = (lo + hi) / c(2.0);
    let half = (hi - lo) / c(2.0);
    for (&x, &w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
        out.push((mid + half * c(x), half * c(w)));
    }
}

/// Quadrature nodes on `[lo, hi]`. `unit` is the channel bandwidth that
/// `points_per_unit` refers to.
fn quadrature<T: Scalar>(lo: T, hi: T, unit: T, points_per_unit: usize, out: &mut Vec<(T, T)>) {
    out.clear();
    if !(hi > lo) {
        return;
    }
    if lo < T::zero() && hi > T::zero() {
        let mut right = Vec::new();
        graded(T::zero(), -lo, unit, points_per_unit, out);
        for p in out.iter_mut() {
            p.0 = -p.0;
        }
        graded(T::zero(), hi, unit, points_per_unit, &mut right);
        out.extend(right);
        return;
    }
    let len = hi - lo;
    let near = lo.abs().min(hi.abs());
    if near < len / c(2.0) {
        // grade toward the end closest to zero
        if lo.abs() <= hi.abs() {
            graded(lo, hi, unit, points_per_unit, out);
        } else {
            graded(-hi, -lo, unit, points_per_unit, out);
            for p in out.iter_mut() {
                p.0 = -p.0;
            }
        }
        return;
    }
    let panels = uniform_panels(len, unit, points_per_unit);
    let width = len / T::from_count(panels);
    for k in 0..panels {
        let a = lo + width * T::from_count(k);
        gauss_panel(a, a + width, out);
    }
}

fn uniform_panels<T: Scalar>(len: T, unit: T, points_per_unit: usize) -> usize {
    let pts = T::from_count(points_per_unit) * len / unit;
    (pts / c(8.0)).ceil().to_usize().unwrap_or(1).max(1)
}

/// Panels on `[a, b]` (0 <= a < b) shrinking geometrically toward `a`.
fn graded<T: Scalar>(a: T, b: T, unit: T, points_per_unit: usize, out: &mut Vec<(T, T)>) {
    let len = b - a;
    let count = ((GRADING_OCTAVES * points_per_unit as f64 / MIN_POINTS_PER_CHANNEL as f64).ceil()
        as usize)
        .max(uniform_panels(len, unit, points_per_unit));
    let ratio = c::<T>(2.0).powf(-c::<T>(GRADING_OCTAVES) / T::from_count(count));
    let mut hi = len;
    for _ in 0..count {
        let lo = hi * ratio;
        gauss_panel(a + lo, a + hi, out);
        hi = lo;
    }
    gauss_panel(a, a + hi, out);
}

/// Piecewise-exponential description of sqrt(ρa ρb ρc / ρi) on a z grid.
struct LinkProfile<T> {
    z: Vec<T>,
    h: Vec<T>,
    amp: Vec<T>,
    slope: Vec<T>,
    growth: Vec<T>,
    uniform_h: Option<T>,
}

impl<T: Scalar> LinkProfile<T> {
    fn new(z: &[T], log_amp: &[T]) -> Self {
        let m = z.len() - 1;
        let mut h = Vec::with_capacity(m);
        let mut amp = Vec::with_capacity(m);
        let mut slope = Vec::with_capacity(m);
        let mut growth = Vec::with_capacity(m);
        for k in 0..m {
            let hk = z[k + 1] - z[k];
            let s = (log_amp[k + 1] - log_amp[k]) / hk;
            h.push(hk);
            amp.push(log_amp[k].exp());
            slope.push(s);
            growth.push((s * hk).exp());
        }
        let first = h[0];
        let uniform_h = h[..m.saturating_sub(1)]
            .iter()
            .all(|&x| (x - first).abs() <= first * c(1e-9))
            .then_some(first);
        LinkProfile {
            z: z[..m].to_vec(),
            h,
            amp,
            slope,
            growth,
            uniform_h,
        }
    }

    /// |∫ g(z) e^{iΔβ z} dz|².
    fn power_kernel(&self, dbeta: T) -> T {
        let one = Complex::new(T::one(), T::zero());
        let m = self.h.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        let step_phase = self
            .uniform_h
            .map(|h| Complex::from_polar(T::one(), dbeta * h));
        let mut phase = one;
        for k in 0..m {
            let hk = self.h[k];
            let last = k + 1 == m;
            if k > 0 {
                // all segments but the last share one width, so z_k = k h
                phase = match step_phase {
                    Some(sp) => phase * sp,
                    None => Complex::from_polar(T::one(), dbeta * self.z[k]),
                };
            }
            let u = Complex::new(self.slope[k], dbeta);
            let uh = u * hk;
            let segment = if uh.norm_sqr() < c(1e-8) {
                // (e^{uh} - 1)/u by series
                let two = c::<T>(2.0);
                let six = c::<T>(6.0);
                let twenty_four = c::<T>(24.0);
                let series = one + uh / two + uh * uh / six + uh * uh * uh / twenty_four;
                series * hk
            } else {
                let rotation = match step_phase {
                    Some(sp) if !last => sp,
                    _ => Complex::from_polar(T::one(), dbeta * hk),
                };
                (rotation * self.growth[k] - one) / u
            };
            acc = acc + phase * segment * self.amp[k];
        }
        acc.norm_sqr()
    }
}

/// GN double-integral NLI for every channel of a (small) comb.
///
/// `points_per_channel` sets the quadrature density per channel bandwidth
/// and must be at least [`MIN_POINTS_PER_CHANNEL`].
pub fn nli_numeric_gn<T: Scalar>(
    span: &FiberSpan<T>,
    grid: &ChannelGrid<T>,
    launch: &PowerSpectrum<T>,
    evolution: &PowerEvolution<T>,
    points_per_channel: usize,
) -> Result<NliContribution<T>> {
    if points_per_channel < MIN_POINTS_PER_CHANNEL {
        return Err(Error::invalid(format!(
            "integration resolution {points_per_channel} is below {MIN_POINTS_PER_CHANNEL} points per channel"
        )));
    }
    launch.check_aligned(grid)?;
    let n = grid.len();
    if evolution.channel_count() != n {
        return Err(Error::invalid("evolution does not match the channel grid"));
    }
    let channels = grid.channels();
    let freq: Vec<T> = channels.iter().map(|ch| ch.f_thz).collect();
    let rate: Vec<T> = channels.iter().map(|ch| ch.symbol_rate_thz()).collect();
    let gamma: Vec<T> = freq.iter().map(|&f| span.gamma_at(f)).collect();
    // PSD in W/THz
    let psd: Vec<T> = launch
        .mw()
        .iter()
        .zip(&rate)
        .map(|(&p, &r)| p * c(1e-3) / r)
        .collect();

    let stride = (evolution.z_km.len() - 1).div_ceil(MAX_Z_SEGMENTS).max(1);
    let mut idx: Vec<usize> = (0..evolution.z_km.len()).step_by(stride).collect();
    if *idx.last().expect("non-empty") != evolution.z_km.len() - 1 {
        idx.push(evolution.z_km.len() - 1);
    }
    let z: Vec<T> = idx.iter().map(|&k| evolution.z_km[k]).collect();
    let log_rho: Vec<Vec<T>> = (0..n)
        .map(|ch| {
            let rho = evolution.normalized_profile(ch)?;
            Ok(idx.iter().map(|&k| rho[k].ln()).collect())
        })
        .collect::<Result<_>>()?;

    let mut dispersion = Vec::with_capacity(n);
    for &f in &freq {
        dispersion.push((span.beta2(f)?, span.beta3(f)?));
    }

    let per_channel: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (b2, b3) = dispersion[i];
            let fi = freq[i];
            let lo = |k: usize| freq[k] - rate[k] / c(2.0) - fi;
            let hi = |k: usize| freq[k] + rate[k] / c(2.0) - fi;
            let unit = rate[i];
            let mut outer = Vec::new();
            let mut inner = Vec::new();
            let mut log_amp = vec![T::zero(); z.len()];
            let mut psd_i = T::zero();
            for a in 0..n {
                // (a, b) and (b, a) regions are mirror images under x1 <-> x2
                for b in a..n {
                    let multiplicity = if a == b { T::one() } else { c::<T>(2.0) };
                    for cc in 0..n {
                        // f3 - f_i = x1 + x2 must be able to fall in cell cc
                        if hi(a) + hi(b) <= lo(cc) || lo(a) + lo(b) >= hi(cc) {
                            continue;
                        }
                        for (k, la) in log_amp.iter_mut().enumerate() {
                            *la = (log_rho[a][k] + log_rho[b][k] + log_rho[cc][k] - log_rho[i][k])
                                / c(2.0);
                        }
                        let profile = LinkProfile::new(&z, &log_amp);
                        let g_eff = (gamma[a] + gamma[b] + gamma[cc] + gamma[i]) / c(4.0);
                        let weight = multiplicity * g_eff * g_eff * psd[a] * psd[b] * psd[cc];

                        let mut region = T::zero();
                        quadrature(lo(a), hi(a), unit, points_per_channel, &mut outer);
                        for &(x1, w1) in &outer {
                            let x2_lo = lo(b).max(lo(cc) - x1);
                            let x2_hi = hi(b).min(hi(cc) - x1);
                            quadrature(x2_lo, x2_hi, unit, points_per_channel, &mut inner);
                            let mut line = T::zero();
                            for &(x2, w2) in &inner {
                                let dbeta = c::<T>(4.0)
                                    * T::PI()
                                    * T::PI()
                                    * x1
                                    * x2
                                    * (b2 + T::PI() * b3 * (x1 + x2));
                                line = line + w2 * profile.power_kernel(dbeta);
                            }
                            region = region + w1 * line;
                        }
                        psd_i = psd_i + weight * region;
                    }
                }
            }
            c::<T>(16.0 / 27.0) * psd_i * rate[i] * c(1e3)
        })
        .collect();

    Ok(NliContribution {
        total_mw: per_channel,
        breakdown: None,
    })
}
