//! Link budget: per-span propagation, exact spectral relaunch by the
//! amplifiers, incoherent ASE and NLI accumulation, and the GSNR to
//! throughput mapping.

use crate::error::{Error, Result};
use crate::fiber::{FiberSpan, Link, RamanPumpSet};
use crate::nli::{accumulate_link_nli, nli_cfm, NliContribution};
use crate::propagation::{evolve_span, PowerEvolution, DEFAULT_STEP_KM};
use crate::scalar::{c, Scalar};
use crate::units::{db_to_lin, lin_to_db, ChannelGrid, PowerSpectrum};

pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
/// Fiber temperature for the phonon occupancy of spontaneous Raman noise.
pub const FIBER_TEMPERATURE_K: f64 = 300.0;

/// Piecewise-linear GSNR (dB) to net rate (Gb/s) table.
#[derive(Debug, Clone, PartialEq)]
pub struct TransponderCurve<T> {
    knots: Vec<(T, T)>,
    cap_gbps: T,
    cutoff_db: T,
}

impl<T: Scalar> TransponderCurve<T> {
    pub fn new(knots: Vec<(T, T)>, cap_gbps: T, cutoff_db: T) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("transponder curve needs at least one knot"));
        }
        if knots
            .iter()
            .any(|(g, r)| !g.is_finite() || !r.is_finite() || *r < T::zero())
        {
            return Err(Error::invalid("transponder curve has invalid knots"));
        }
        if knots
            .windows(2)
            .any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1)
        {
            return Err(Error::invalid(
                "transponder curve must have increasing GSNR and non-decreasing rate",
            ));
        }
        if !(cap_gbps > T::zero()) || !cutoff_db.is_finite() {
            return Err(Error::invalid(
                "transponder cap must be positive and cutoff finite",
            ));
        }
        Ok(TransponderCurve {
            knots,
            cap_gbps,
            cutoff_db,
        })
    }

    /// Shannon with a 2 dB gap, dual polarization at 100 GBaud, 4% overhead,
    /// capped at 1.1 Tb/s, tabulated every 0.5 dB from 3 to 20 dB.
    pub fn default_100gbaud() -> Self {
        let knots = (0..=34)
            .map(|k| {
                let g = 3.0 + 0.5 * k as f64;
                let rate = 2.0 * 100.0 * 0.96 * (1.0 + 10f64.powf((g - 2.0) / 10.0)).log2();
                (c(g), c(rate.clamp(0.0, 1100.0)))
            })
            .collect();
        TransponderCurve::new(knots, c(1100.0), c(3.0)).expect("default curve is valid")
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn cap_gbps(&self) -> T {
        self.cap_gbps
    }

    pub fn cutoff_db(&self) -> T {
        self.cutoff_db
    }
}

/// Net rate in Gb/s at `gsnr_db`: zero below the cutoff, linear between
/// knots, flat beyond either end, never above the cap.
pub fn throughput_of<T: Scalar>(gsnr_db: T, curve: &TransponderCurve<T>) -> T {
    if gsnr_db.is_nan() || gsnr_db < curve.cutoff_db {
        return T::zero();
    }
    let k = &curve.knots;
    let (first, last) = (k[0], k[k.len() - 1]);
    let rate = if gsnr_db <= first.0 {
        first.1
    } else if gsnr_db >= last.0 {
        last.1
    } else {
        let hi = k.partition_point(|&(g, _)| g <= gsnr_db);
        let (g0, r0) = k[hi - 1];
        let (g1, r1) = k[hi];
        r0 + (r1 - r0) * (gsnr_db - g0) / (g1 - g0)
    };
    rate.min(curve.cap_gbps)
}

/// ASE power in mW from one amplifier of linear gain `gain_lin`.
pub fn ase_power<T: Scalar>(gain_lin: T, nf_db: T, f_thz: T, bandwidth_ghz: T) -> Result<T> {
    if !(gain_lin >= T::one()) {
        return Err(Error::invalid(format!(
            "amplifier gain {gain_lin} is below unity"
        )));
    }
    if !(f_thz > T::zero()) || bandwidth_ghz < T::zero() {
        return Err(Error::invalid("ASE needs positive frequency and bandwidth"));
    }
    let nf = c::<T>(10.0).powf(nf_db / c(10.0));
    // J/s = W, then mW
    Ok(nf
        * c::<T>(PLANCK_J_S)
        * f_thz
        * c(1e12)
        * (gain_lin - T::one())
        * bandwidth_ghz
        * c(1e9)
        * c(1e3))
}

/// Spontaneous Raman noise (mW, both polarizations, bandwidth `R_s`) at the
/// fiber output of a counter-pumped span.
///
/// Noise born at z with local pump gain `g(z)` grows like the signal does
/// from z to L, so `N_i(L) = ∫ 2 n_sp h f_i B g_i(z) P_i(L)/P_i(z) dz` with
/// `n_sp = 1 + 1/(exp(h Δf / kT) - 1)` per pump.
pub fn raman_ase_mw<T: Scalar>(
    span: &FiberSpan<T>,
    grid: &ChannelGrid<T>,
    pumps: &RamanPumpSet<T>,
    evolution: &PowerEvolution<T>,
) -> Result<Vec<T>> {
    let n = grid.len();
    if evolution.channel_count() != n {
        return Err(Error::invalid("evolution does not match the channel grid"));
    }
    let Some(pump_rows) = evolution.pump_mw.as_ref() else {
        return Ok(vec![T::zero(); n]);
    };
    let h = c::<T>(PLANCK_J_S);
    let kt = c::<T>(BOLTZMANN_J_PER_K * FIBER_TEMPERATURE_K);
    let z = &evolution.z_km;
    let out = evolution.fiber_output_mw();
    let mut noise = vec![T::zero(); n];
    for (i, ch) in grid.channels().iter().enumerate() {
        let f = ch.f_thz;
        // per-pump (gain per mW, n_sp)
        let coeffs: Vec<(T, T)> = pumps
            .pumps()
            .iter()
            .map(|p| {
                let x = h * (p.f_thz - f) * c(1e12) / kt;
                let n_sp = T::one() + T::one() / x.exp_m1();
                (span.raman_coupling(p.f_thz, f) * c(1e-3), n_sp)
            })
            .collect();
        // h f B in mW
        let quantum = h * f * c(1e12) * ch.symbol_rate_gbaud * c(1e9) * c(1e3);
        let source = |k: usize| -> T {
            let g_nsp: T = coeffs
                .iter()
                .zip(&pump_rows[k])
                .map(|(&(g, nsp), &pk)| g * pk * nsp)
                .sum();
            c::<T>(2.0) * quantum * g_nsp * out[i] / evolution.signal_mw[k][i]
        };
        let mut acc = T::zero();
        let mut prev = source(0);
        for k in 1..z.len() {
            let cur = source(k);
            acc = acc + (z[k] - z[k - 1]) * (prev + cur) / c(2.0);
            prev = cur;
        }
        noise[i] = acc;
    }
    Ok(noise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkOptions<T> {
    pub isrs: bool,
    /// Use the pump sets attached to the link's spans.
    pub raman: bool,
    /// Disable to compute the ASE-only budget.
    pub nli: bool,
    /// Count the spontaneous noise of distributed Raman gain. Off by
    /// default: only the EDFAs contribute ASE.
    pub raman_ase: bool,
    pub curve: TransponderCurve<T>,
    pub step_km: T,
}

impl<T: Scalar> Default for LinkOptions<T> {
    fn default() -> Self {
        LinkOptions {
            isrs: true,
            raman: true,
            nli: true,
            raman_ase: false,
            curve: TransponderCurve::default_100gbaud(),
            step_km: c(DEFAULT_STEP_KM),
        }
    }
}

/// Per-channel budget at the receiver. Powers in mW, ratios in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct GsnrReport<T> {
    pub launch_mw: Vec<T>,
    pub ase_mw: Vec<T>,
    pub nli_mw: Vec<T>,
    pub osnr_db: Vec<T>,
    pub snr_nl_db: Vec<T>,
    pub gsnr_db: Vec<T>,
    pub rate_gbps: Vec<T>,
    pub total_tbps: T,
}

impl<T: Scalar> GsnrReport<T> {
    pub fn len(&self) -> usize {
        self.launch_mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.launch_mw.is_empty()
    }

    /// Assemble the report from accumulated noise powers.
    pub fn from_noise(
        launch_mw: Vec<T>,
        ase_mw: Vec<T>,
        nli_mw: Vec<T>,
        curve: &TransponderCurve<T>,
    ) -> Result<Self> {
        let n = launch_mw.len();
        if ase_mw.len() != n || nli_mw.len() != n {
            return Err(Error::invalid(
                "noise vectors do not match the channel count",
            ));
        }
        let ratio_db = |p: T, noise: T| {
            if noise > T::zero() {
                lin_to_db(p / noise)
            } else {
                T::infinity()
            }
        };
        let osnr_db: Vec<T> = (0..n).map(|i| ratio_db(launch_mw[i], ase_mw[i])).collect();
        let snr_nl_db: Vec<T> = (0..n).map(|i| ratio_db(launch_mw[i], nli_mw[i])).collect();
        let gsnr_db: Vec<T> = (0..n)
            .map(|i| ratio_db(launch_mw[i], ase_mw[i] + nli_mw[i]))
            .collect();
        let rate_gbps: Vec<T> = gsnr_db.iter().map(|&g| throughput_of(g, curve)).collect();
        let total_tbps = rate_gbps.iter().copied().sum::<T>() / c(1000.0);
        Ok(GsnrReport {
            launch_mw,
            ase_mw,
            nli_mw,
            osnr_db,
            snr_nl_db,
            gsnr_db,
            rate_gbps,
            total_tbps,
        })
    }
}

/// Evolution and NLI of every span, plus the receiver report.
#[derive(Debug, Clone)]
pub struct LinkRun<T> {
    pub report: GsnrReport<T>,
    /// One entry per distinct span; `span_class[s]` indexes into it.
    pub evolutions: Vec<PowerEvolution<T>>,
    pub span_nli: Vec<NliContribution<T>>,
    pub span_class: Vec<usize>,
}

/// Propagates the launch spectrum through every span, relaunching exactly
/// at each amplifier, and reports per-channel OSNR, SNR_NL and GSNR.
pub fn run_link<T: Scalar>(
    link: &Link<T>,
    grid: &ChannelGrid<T>,
    launch: &PowerSpectrum<T>,
    options: &LinkOptions<T>,
) -> Result<GsnrReport<T>> {
    run_link_detailed(link, grid, launch, options).map(|run| run.report)
}

pub fn run_link_detailed<T: Scalar>(
    link: &Link<T>,
    grid: &ChannelGrid<T>,
    launch: &PowerSpectrum<T>,
    options: &LinkOptions<T>,
) -> Result<LinkRun<T>> {
    launch.check_aligned(grid)?;
    let n = grid.len();
    let freqs = grid.frequencies();
    let launch_mw = launch.mw();
    let noise_bw: Vec<T> = grid
        .channels()
        .iter()
        .map(|ch| ch.symbol_rate_gbaud)
        .collect();
    if options.raman {
        if let Some(f_max) = freqs.iter().copied().reduce(T::max) {
            for set in link.raman().iter().flatten() {
                set.check_above(f_max)?;
            }
        }
    }

    // Every span sees the same input spectrum, so spans with identical
    // fiber and pumps share one propagation and one NLI evaluation.
    let mut evolutions: Vec<PowerEvolution<T>> = Vec::new();
    let mut span_nli: Vec<NliContribution<T>> = Vec::new();
    let mut raman_noise: Vec<Option<Vec<T>>> = Vec::new();
    let mut class_rep: Vec<usize> = Vec::new();
    let mut span_class = Vec::with_capacity(link.len());
    for s in 0..link.len() {
        let span = &link.spans()[s];
        let pumps = if options.raman {
            link.raman()[s].as_ref()
        } else {
            None
        };
        let known = class_rep.iter().position(|&r| {
            link.spans()[r] == *span && (!options.raman || link.raman()[r].as_ref() == pumps)
        });
        let class = match known {
            Some(k) => k,
            None => {
                let ev = evolve_span(span, launch, grid, pumps, options.step_km, options.isrs)?;
                let nli = if options.nli {
                    nli_cfm(span, grid, launch, &ev)?
                } else {
                    NliContribution {
                        total_mw: vec![T::zero(); n],
                        breakdown: None,
                    }
                };
                let noise = match pumps {
                    Some(set) if options.raman_ase => {
                        let lumped = db_to_lin(-span.lumped_loss_db);
                        let at_fiber_end = raman_ase_mw(span, grid, set, &ev)?;
                        Some(at_fiber_end.into_iter().map(|v| v * lumped).collect())
                    }
                    _ => None,
                };
                evolutions.push(ev);
                span_nli.push(nli);
                raman_noise.push(noise);
                class_rep.push(s);
                evolutions.len() - 1
            }
        };
        span_class.push(class);
    }

    let mut ase = vec![T::zero(); n];
    for (s, &class) in span_class.iter().enumerate() {
        let out = evolutions[class].span_output_mw();
        let amp = &link.amplifiers()[s];
        for i in 0..n {
            let gain = launch_mw[i] / out[i];
            if gain < T::one() {
                return Err(Error::GainBelowUnity {
                    channel: i,
                    span: s,
                    gain_db: lin_to_db(gain).to_f64_lossy(),
                });
            }
            ase[i] = ase[i] + ase_power(gain, amp.nf_db.eval(freqs[i]), freqs[i], noise_bw[i])?;
            if let Some(noise) = &raman_noise[class] {
                ase[i] = ase[i] + gain * noise[i];
            }
        }
    }
    let per_span: Vec<NliContribution<T>> =
        span_class.iter().map(|&k| span_nli[k].clone()).collect();
    let nli = accumulate_link_nli(&per_span)?;
    let report = GsnrReport::from_noise(launch_mw, ase, nli, &options.curve)?;
    Ok(LinkRun {
        report,
        evolutions,
        span_nli,
        span_class,
    })
}
