//! Power evolution inside one span under inter-channel stimulated Raman
//! scattering, optionally with counter-propagating Raman pumps.
//!
//! Each wave obeys `dP_i/dz = P_i (-α_i + Σ_j C(j→i) P_j)` with `C` from
//! [`FiberSpan::raman_coupling`]; powers are mW, efficiencies 1/(W·km).
//! Integration is fixed-step classical RK4 on a uniform grid whose last step
//! may be shorter than the others.

use crate::error::{Error, Result};
use crate::fiber::{FiberSpan, RamanPumpSet};
use crate::scalar::{c, Scalar};
use crate::units::{db_to_lin, lin_to_db, ChannelGrid, PowerSpectrum};

pub const DEFAULT_STEP_KM: f64 = 0.25;
pub const MAX_PUMP_SWEEPS: usize = 50;
pub const PUMP_SWEEP_TOLERANCE_DB: f64 = 0.01;
const MIN_PUMP_RELAXATION: f64 = 1.0 / 16.0;

/// Powers along one span. Rows are positions, columns are channels (or pumps).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEvolution<T> {
    pub z_km: Vec<T>,
    /// In-fiber signal powers, mW. The lumped output loss is not included.
    pub signal_mw: Vec<Vec<T>>,
    pub pump_mw: Option<Vec<Vec<T>>>,
    pub lumped_loss_db: T,
    /// Fixed-point sweeps used by the counter-pumped solver (0 otherwise).
    pub sweeps: usize,
}

impl<T: Scalar> PowerEvolution<T> {
    pub fn channel_count(&self) -> usize {
        self.signal_mw.first().map_or(0, Vec::len)
    }

    pub fn launch_mw(&self) -> &[T] {
        &self.signal_mw[0]
    }

    /// Powers at the end of the fiber, before the lumped loss.
    pub fn fiber_output_mw(&self) -> &[T] {
        self.signal_mw.last().expect("non-empty evolution")
    }

    /// Powers delivered to the amplifier (lumped loss applied).
    pub fn span_output_mw(&self) -> Vec<T> {
        let lumped = db_to_lin(-self.lumped_loss_db);
        self.fiber_output_mw().iter().map(|&p| p * lumped).collect()
    }

    /// Net span gain in dB per channel (negative for a lossy span).
    pub fn net_gain_db(&self) -> Vec<T> {
        self.span_output_mw()
            .iter()
            .zip(self.launch_mw())
            .map(|(&out, &inp)| lin_to_db(out / inp))
            .collect()
    }

    /// `P_i(z) / P_i(0)` along the grid.
    pub fn normalized_profile(&self, channel: usize) -> Result<Vec<T>> {
        if channel >= self.channel_count() {
            return Err(Error::invalid(format!(
                "channel index {channel} out of range"
            )));
        }
        let p0 = self.signal_mw[0][channel];
        Ok(self.signal_mw.iter().map(|row| row[channel] / p0).collect())
    }
}

/// Uniform grid from 0 to `length` with a final partial step if needed.
fn z_grid<T: Scalar>(length: T, step: T) -> Vec<T> {
    let full = (length / step).floor().to_usize().unwrap_or(0);
    let mut z: Vec<T> = (0..=full).map(|k| step * T::from_count(k)).collect();
    let last = *z.last().expect("grid has origin");
    if length - last > step * c(1e-9) {
        z.push(length);
    } else {
        *z.last_mut().expect("grid has origin") = length;
    }
    z
}

/// Row-major coupling matrix `m[i*n + j] = C(f_j → f_i) · 1e-3` (per mW).
fn coupling_matrix<T: Scalar>(span: &FiberSpan<T>, freqs: &[T]) -> Vec<T> {
    let n = freqs.len();
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = span.raman_coupling(freqs[j], freqs[i]) * c(1e-3);
        }
    }
    m
}

/// Gain contributed to each wave by a frozen set of other waves, per mW.
struct FrozenGain<T> {
    nodes: Vec<Vec<T>>,
    mids: Vec<Vec<T>>,
}

impl<T: Scalar> FrozenGain<T> {
    /// `cross[i*m + k]` couples frozen wave k into integrated wave i; `frozen`
    /// holds the frozen powers at each node of the integration grid.
    fn new(cross: &[T], n: usize, frozen: &[Vec<T>]) -> Self {
        let m = frozen.first().map_or(0, Vec::len);
        let rate = |row: &dyn Fn(usize) -> T| -> Vec<T> {
            (0..n)
                .map(|i| (0..m).map(|k| cross[i * m + k] * row(k)).sum())
                .collect()
        };
        let nodes = frozen.iter().map(|p| rate(&|k| p[k])).collect();
        let mids = frozen
            .windows(2)
            .map(|w| rate(&|k| (w[0][k] * w[1][k]).sqrt()))
            .collect();
        FrozenGain { nodes, mids }
    }
}

fn rates<T: Scalar>(
    p: &[T],
    alpha: &[T],
    coupling: Option<&[T]>,
    external: Option<&[T]>,
    out: &mut [T],
) {
    let n = p.len();
    for i in 0..n {
        let mut g = -alpha[i];
        if let Some(m) = coupling {
            let row = &m[i * n..(i + 1) * n];
            g = g + row.iter().zip(p).map(|(&a, &b)| a * b).sum::<T>();
        }
        if let Some(e) = external {
            g = g + e[i];
        }
        out[i] = p[i] * g;
    }
}

/// RK4 over the grid `z`. Returns one row per node.
fn integrate<T: Scalar>(
    p0: &[T],
    alpha: &[T],
    coupling: Option<&[T]>,
    external: Option<&FrozenGain<T>>,
    z: &[T],
) -> Result<Vec<Vec<T>>> {
    let n = p0.len();
    let mut rows = Vec::with_capacity(z.len());
    rows.push(p0.to_vec());
    if coupling.is_none() && external.is_none() {
        // pure attenuation has the exact solution
        for &zk in &z[1..] {
            rows.push(
                p0.iter()
                    .zip(alpha)
                    .map(|(&p, &a)| p * (-a * zk).exp())
                    .collect(),
            );
        }
        return Ok(rows);
    }
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
    );
    let half = c::<T>(0.5);
    let sixth = c::<T>(1.0 / 6.0);
    for s in 0..z.len() - 1 {
        let h = z[s + 1] - z[s];
        let p = rows[s].clone();
        let (e0, em, e1) = match external {
            Some(g) => (
                Some(&g.nodes[s][..]),
                Some(&g.mids[s][..]),
                Some(&g.nodes[s + 1][..]),
            ),
            None => (None, None, None),
        };
        rates(&p, alpha, coupling, e0, &mut k1);
        for i in 0..n {
            tmp[i] = p[i] + half * h * k1[i];
        }
        rates(&tmp, alpha, coupling, em, &mut k2);
        for i in 0..n {
            tmp[i] = p[i] + half * h * k2[i];
        }
        rates(&tmp, alpha, coupling, em, &mut k3);
        for i in 0..n {
            tmp[i] = p[i] + h * k3[i];
        }
        rates(&tmp, alpha, coupling, e1, &mut k4);
        let next: Vec<T> = (0..n)
            .map(|i| p[i] + h * sixth * (k1[i] + c::<T>(2.0) * (k2[i] + k3[i]) + k4[i]))
            .collect();
        if let Some(i) = next
            .iter()
            .position(|&v| !(v > T::zero()) || !v.is_finite())
        {
            return Err(Error::NonPositivePower {
                channel: i,
                z_km: z[s + 1].to_f64_lossy(),
            });
        }
        rows.push(next);
    }
    Ok(rows)
}

fn check_inputs<T: Scalar>(
    launch: &PowerSpectrum<T>,
    grid: &ChannelGrid<T>,
    step_km: T,
) -> Result<()> {
    launch.check_aligned(grid)?;
    if !(step_km > T::zero()) || !step_km.is_finite() {
        return Err(Error::invalid(format!(
            "integration step {step_km} km must be positive"
        )));
    }
    Ok(())
}

/// Forward signal-only propagation through one span.
pub fn evolve_signals<T: Scalar>(
    span: &FiberSpan<T>,
    launch: &PowerSpectrum<T>,
    grid: &ChannelGrid<T>,
    step_km: T,
    isrs_enabled: bool,
) -> Result<PowerEvolution<T>> {
    check_inputs(launch, grid, step_km)?;
    let freqs = grid.frequencies();
    let alpha: Vec<T> = freqs.iter().map(|&f| span.alpha_linear(f)).collect();
    let z = z_grid(span.length_km, step_km);
    let coupling = isrs_enabled
        .then(|| coupling_matrix(span, &freqs))
        .filter(|m| any_nonzero(m));
    let signal_mw = integrate(&launch.mw(), &alpha, coupling.as_deref(), None, &z)?;
    Ok(PowerEvolution {
        z_km: z,
        signal_mw,
        pump_mw: None,
        lumped_loss_db: span.lumped_loss_db,
        sweeps: 0,
    })
}

/// Signals (+z) and counter-propagating pumps (-z), solved by alternating
/// sweeps with the other family frozen until the largest change between
/// sweeps drops below 0.01 dB.
pub fn evolve_with_counterpumps<T: Scalar>(
    span: &FiberSpan<T>,
    launch: &PowerSpectrum<T>,
    grid: &ChannelGrid<T>,
    pumps: &RamanPumpSet<T>,
    step_km: T,
) -> Result<PowerEvolution<T>> {
    check_inputs(launch, grid, step_km)?;
    let sig_f = grid.frequencies();
    if let Some(&f_max) = sig_f.last() {
        pumps.check_above(f_max)?;
    }
    let pump_f: Vec<T> = pumps.pumps().iter().map(|p| p.f_thz).collect();
    let pump_p0: Vec<T> = pumps.pumps().iter().map(|p| p.power_mw).collect();
    let (ns, np) = (sig_f.len(), pump_f.len());

    let z = z_grid(span.length_km, step_km);
    let nz = z.len();
    let zeta: Vec<T> = z.iter().rev().map(|&zk| span.length_km - zk).collect();

    let sig_alpha: Vec<T> = sig_f.iter().map(|&f| span.alpha_linear(f)).collect();
    let pump_alpha: Vec<T> = pump_f.iter().map(|&f| span.alpha_linear(f)).collect();
    let sig_coupling = coupling_matrix(span, &sig_f);
    let pump_coupling = coupling_matrix(span, &pump_f);
    let mut pump_to_sig = vec![T::zero(); ns * np];
    for i in 0..ns {
        for k in 0..np {
            pump_to_sig[i * np + k] = span.raman_coupling(pump_f[k], sig_f[i]) * c(1e-3);
        }
    }
    let mut sig_to_pump = vec![T::zero(); np * ns];
    for k in 0..np {
        for i in 0..ns {
            sig_to_pump[k * ns + i] = span.raman_coupling(sig_f[i], pump_f[k]) * c(1e-3);
        }
    }

    // pumps indexed by forward z; start with attenuation-only decay from z = L
    let mut pump_rows: Vec<Vec<T>> = z
        .iter()
        .map(|&zk| {
            pump_p0
                .iter()
                .zip(&pump_alpha)
                .map(|(&p, &a)| p * (-a * (span.length_km - zk)).exp())
                .collect()
        })
        .collect();
    let launch_mw = launch.mw();
    let mut signal_rows: Option<Vec<Vec<T>>> = None;
    let mut residual = T::infinity();
    let mut relax = T::one();
    let mut last_step: Option<Vec<T>> = None;

    let sig_coupling = Some(sig_coupling).filter(|m| any_nonzero(m));
    let pump_coupling = Some(pump_coupling).filter(|m| any_nonzero(m));
    let pumps_act = any_nonzero(&pump_to_sig);
    let signals_act = any_nonzero(&sig_to_pump);

    for sweep in 1..=MAX_PUMP_SWEEPS {
        let frozen = pumps_act.then(|| FrozenGain::new(&pump_to_sig, ns, &pump_rows));
        let signals = integrate(
            &launch_mw,
            &sig_alpha,
            sig_coupling.as_deref(),
            frozen.as_ref(),
            &z,
        )?;

        let reversed_signals: Vec<Vec<T>> = signals.iter().rev().cloned().collect();
        let frozen_sig = signals_act.then(|| FrozenGain::new(&sig_to_pump, np, &reversed_signals));
        let backward = integrate(
            &pump_p0,
            &pump_alpha,
            pump_coupling.as_deref(),
            frozen_sig.as_ref(),
            &zeta,
        )?;
        let new_pumps: Vec<Vec<T>> = backward.into_iter().rev().collect();

        let mut change = max_db_change(&pump_rows, &new_pumps);
        if let Some(prev) = &signal_rows {
            change = change.max(max_db_change(prev, &signals));
        }
        // Plain alternation oscillates under strong pumping. Estimate the
        // dominant eigenvalue of the sweep map from two successive log-space
        // updates and relax with the weight that cancels it.
        let step = log_difference(&pump_rows, &new_pumps);
        if let Some(prev) = &last_step {
            let (dot, norm) = step
                .iter()
                .zip(prev)
                .fold((T::zero(), T::zero()), |(d, n), (&a, &b)| {
                    (d + a * b, n + b * b)
                });
            if norm > T::zero() {
                let eig = T::one() + (dot / norm - T::one()) / relax;
                relax = if eig < T::zero() {
                    (T::one() / (T::one() - eig)).max(c(MIN_PUMP_RELAXATION))
                } else {
                    T::one()
                };
            }
        }
        residual = change;
        pump_rows = if relax < T::one() {
            blend_log(&pump_rows, &new_pumps, relax)
        } else {
            new_pumps
        };
        last_step = Some(step);
        signal_rows = Some(signals);
        if sweep > 1 && residual < c(PUMP_SWEEP_TOLERANCE_DB) {
            return Ok(PowerEvolution {
                z_km: z,
                signal_mw: signal_rows.expect("signals computed"),
                pump_mw: Some(pump_rows),
                lumped_loss_db: span.lumped_loss_db,
                sweeps: sweep,
            });
        }
    }
    debug_assert_eq!(pump_rows.len(), nz);
    Err(Error::NotConverged {
        iterations: MAX_PUMP_SWEEPS,
        residual_db: residual.to_f64_lossy(),
    })
}

/// `old^(1-w) · new^w`, element-wise.
fn blend_log<T: Scalar>(old: &[Vec<T>], new: &[Vec<T>], w: T) -> Vec<Vec<T>> {
    old.iter()
        .zip(new)
        .map(|(ro, rn)| {
            ro.iter()
                .zip(rn)
                .map(|(&a, &b)| a.powf(T::one() - w) * b.powf(w))
                .collect()
        })
        .collect()
}

/// Flattened `ln(new / old)`.
fn log_difference<T: Scalar>(old: &[Vec<T>], new: &[Vec<T>]) -> Vec<T> {
    old.iter()
        .zip(new)
        .flat_map(|(ro, rn)| ro.iter().zip(rn).map(|(&a, &b)| (b / a).ln()))
        .collect()
}

fn any_nonzero<T: Scalar>(m: &[T]) -> bool {
    m.iter().any(|&v| v != T::zero())
}

fn max_db_change<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| lin_to_db(y / x).abs()))
        .fold(T::zero(), T::max)
}

/// Propagates with or without pumps depending on `pumps`.
pub fn evolve_span<T: Scalar>(
    span: &FiberSpan<T>,
    launch: &PowerSpectrum<T>,
    grid: &ChannelGrid<T>,
    pumps: Option<&RamanPumpSet<T>>,
    step_km: T,
    isrs_enabled: bool,
) -> Result<PowerEvolution<T>> {
    match pumps {
        Some(set) if !set.is_empty() => evolve_with_counterpumps(span, launch, grid, set, step_km),
        _ => evolve_signals(span, launch, grid, step_km, isrs_enabled),
    }
}
