//! Frequency-dependent fiber description, EDFA noise figures and Raman pumps.

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Speed of light in nm/ps (equivalently nm·THz).
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// Piecewise-linear curve with constant extrapolation beyond the end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve<T> {
    knots: Vec<(T, T)>,
}

impl<T: Scalar> SampledCurve<T> {
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("a sampled curve needs at least two knots"));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("sampled curve has non-finite knots"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                "sampled curve abscissae must be strictly increasing",
            ));
        }
        Ok(SampledCurve { knots })
    }

    /// Two-knot curve holding `y` everywhere.
    pub fn constant(y: T) -> Self {
        SampledCurve {
            knots: vec![(T::zero(), y), (T::one(), y)],
        }
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn eval(&self, x: T) -> T {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        // first knot strictly above x
        let hi = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, y0) = k[hi - 1];
        let (x1, y1) = k[hi];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn min_value(&self) -> T {
        self.knots.iter().map(|k| k.1).fold(T::infinity(), T::min)
    }

    /// Same abscissae, ordinates multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        SampledCurve {
            knots: self.knots.iter().map(|&(x, y)| (x, y * factor)).collect(),
        }
    }
}

/// One fiber span. Curves are indexed by absolute frequency in THz except
/// `raman_eff`, which is indexed by pump-signal frequency offset in THz.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpan<T> {
    pub length_km: T,
    /// Attenuation, dB/km.
    pub attenuation: SampledCurve<T>,
    /// Dispersion D, ps/(nm·km).
    pub dispersion: SampledCurve<T>,
    /// Nonlinear coefficient, 1/(W·km).
    pub gamma: SampledCurve<T>,
    /// Raman gain efficiency C_R, 1/(W·km).
    pub raman_eff: SampledCurve<T>,
    /// Connector/splice loss applied at the span output, dB.
    pub lumped_loss_db: T,
}

impl<T: Scalar> FiberSpan<T> {
    pub fn new(
        length_km: T,
        attenuation: SampledCurve<T>,
        dispersion: SampledCurve<T>,
        gamma: SampledCurve<T>,
        raman_eff: SampledCurve<T>,
        lumped_loss_db: T,
    ) -> Result<Self> {
        if !(length_km > T::zero()) || !length_km.is_finite() {
            return Err(Error::invalid(format!(
                "span length {length_km} km must be positive"
            )));
        }
        if !(attenuation.min_value() > T::zero()) {
            return Err(Error::invalid(
                "fiber attenuation must be positive everywhere",
            ));
        }
        if gamma.min_value() < T::zero() {
            return Err(Error::invalid("nonlinear coefficient must be non-negative"));
        }
        if raman_eff.min_value() < T::zero() || raman_eff.eval(T::zero()) != T::zero() {
            return Err(Error::invalid(
                "Raman efficiency must be non-negative with C_R(0) = 0",
            ));
        }
        if !(lumped_loss_db >= T::zero()) {
            return Err(Error::invalid("lumped loss must be non-negative"));
        }
        Ok(FiberSpan {
            length_km,
            attenuation,
            dispersion,
            gamma,
            raman_eff,
            lumped_loss_db,
        })
    }

    /// Power attenuation coefficient in 1/km.
    pub fn alpha_linear(&self, f_thz: T) -> T {
        self.attenuation.eval(f_thz) * T::LN_10() / c(10.0)
    }

    /// Group-velocity dispersion β2 in ps²/km.
    pub fn beta2(&self, f_thz: T) -> Result<T> {
        if !(f_thz > T::zero()) {
            return Err(Error::invalid(format!(
                "frequency {f_thz} THz must be positive"
            )));
        }
        let light = c::<T>(SPEED_OF_LIGHT_NM_PER_PS);
        let lambda_nm = light / f_thz;
        Ok(-self.dispersion.eval(f_thz) * lambda_nm * lambda_nm / (c::<T>(2.0) * T::PI() * light))
    }

    /// Third-order dispersion β3 = dβ2/dω in ps³/km, by central difference.
    pub fn beta3(&self, f_thz: T) -> Result<T> {
        let h = c::<T>(0.05);
        let up = self.beta2(f_thz + h)?;
        let down = self.beta2(f_thz - h)?;
        Ok((up - down) / (c::<T>(2.0) * T::PI() * c::<T>(2.0) * h))
    }

    pub fn gamma_at(&self, f_thz: T) -> T {
        self.gamma.eval(f_thz)
    }

    /// Signed Raman efficiency seen by a wave at `f_b` due to a wave at `f_a`.
    ///
    /// Positive when `f_a > f_b` (b is pumped). When b is the higher frequency
    /// it is depleted, scaled by `f_b / f_a` so that photon flux is conserved.
    pub fn raman_coupling(&self, f_a: T, f_b: T) -> T {
        if f_a > f_b {
            self.raman_eff.eval(f_a - f_b)
        } else if f_a < f_b {
            -(f_b / f_a) * self.raman_eff.eval(f_b - f_a)
        } else {
            T::zero()
        }
    }

    /// Total span loss (fiber + lumped) at `f_thz`, dB.
    pub fn span_loss_db(&self, f_thz: T) -> T {
        self.attenuation.eval(f_thz) * self.length_km + self.lumped_loss_db
    }
}

/// Frequency at which the default span hits its nominal 22.5 dB per 100 km.
pub const REFERENCE_FREQUENCY_THZ: f64 = 193.4;
pub const NOMINAL_SPAN_LOSS_DB: f64 = 22.5;

/// Normalized silica-like Raman gain shape: (offset THz, fraction of peak).
const RAMAN_SHAPE: [(f64, f64); 24] = [
    (0.0, 0.0),
    (1.0, 0.06),
    (2.0, 0.12),
    (3.0, 0.18),
    (4.0, 0.24),
    (5.0, 0.30),
    (6.0, 0.36),
    (7.0, 0.43),
    (8.0, 0.50),
    (9.0, 0.58),
    (10.0, 0.67),
    (11.0, 0.77),
    (12.0, 0.89),
    (13.2, 1.0),
    (14.0, 0.94),
    (15.0, 0.78),
    (16.0, 0.52),
    (17.0, 0.36),
    (18.0, 0.31),
    (20.0, 0.25),
    (22.0, 0.19),
    (25.0, 0.11),
    (27.5, 0.05),
    (30.0, 0.0),
];
const RAMAN_PEAK: f64 = 0.42;

/// Built-in representative SMF profile of the given length.
///
/// The lumped loss is fixed so that a 100 km span loses exactly 22.5 dB at
/// 193.4 THz; the fiber part scales linearly with length.
pub fn make_default_smf<T: Scalar>(length_km: T) -> Result<FiberSpan<T>> {
    let attenuation = SampledCurve::new(vec![
        (c(184.5), c(0.235)),
        (c(190.5), c(0.222)),
        (c(196.6), c(0.225)),
    ])?;

    // D(λ) = D0 + S (λ - λ0) sampled on a 0.5 THz frequency grid
    let d0 = 16.7;
    let slope = 0.067;
    let lambda0 = SPEED_OF_LIGHT_NM_PER_PS / REFERENCE_FREQUENCY_THZ;
    let dispersion = SampledCurve::new(
        (0..=28)
            .map(|k| {
                let f = 183.0 + 0.5 * k as f64;
                let lambda = SPEED_OF_LIGHT_NM_PER_PS / f;
                (c(f), c(d0 + slope * (lambda - lambda0)))
            })
            .collect(),
    )?;

    let gamma = SampledCurve::new(vec![(c(184.5), c(1.1)), (c(196.6), c(1.4))])?;
    let raman_eff = SampledCurve::new(
        RAMAN_SHAPE
            .iter()
            .map(|&(x, y)| (c(x), c(y * RAMAN_PEAK)))
            .collect(),
    )?;

    let lumped =
        c::<T>(NOMINAL_SPAN_LOSS_DB) - attenuation.eval(c(REFERENCE_FREQUENCY_THZ)) * c::<T>(100.0);
    FiberSpan::new(length_km, attenuation, dispersion, gamma, raman_eff, lumped)
}

/// Optical amplifier closing a span.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplifier<T> {
    /// Noise figure in dB vs frequency in THz.
    pub nf_db: SampledCurve<T>,
}

impl<T: Scalar> Amplifier<T> {
    /// 6 dB across super-L, 5 dB across super-C.
    pub fn default_edfa() -> Self {
        Amplifier {
            nf_db: SampledCurve::new(vec![
                (c(184.50), c(6.0)),
                (c(190.32), c(6.0)),
                (c(190.75), c(5.0)),
                (c(196.57), c(5.0)),
            ])
            .expect("valid NF curve"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanPump<T> {
    pub f_thz: T,
    pub power_mw: T,
}

/// Counter-propagating pumps injected at the span output.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanPumpSet<T> {
    pumps: Vec<RamanPump<T>>,
}

impl<T: Scalar> RamanPumpSet<T> {
    pub fn new(pumps: Vec<RamanPump<T>>) -> Result<Self> {
        for (k, p) in pumps.iter().enumerate() {
            if !(p.power_mw > T::zero()) || !p.power_mw.is_finite() {
                return Err(Error::invalid(format!("pump {k} power must be positive")));
            }
            if !(p.f_thz > T::zero()) {
                return Err(Error::invalid(format!(
                    "pump {k} frequency must be positive"
                )));
            }
        }
        Ok(RamanPumpSet { pumps })
    }

    /// Set used by the 3000 km Raman-assisted run: five pumps, 1190 mW total.
    pub fn five_pump_unit() -> Self {
        let raw = [
            (210.6, 360.0),
            (208.9, 320.0),
            (206.7, 200.0),
            (204.5, 130.0),
            (200.6, 180.0),
        ];
        RamanPumpSet::new(
            raw.iter()
                .map(|&(f, p)| RamanPump {
                    f_thz: c(f),
                    power_mw: c(p),
                })
                .collect(),
        )
        .expect("valid pump set")
    }

    pub fn pumps(&self) -> &[RamanPump<T>] {
        &self.pumps
    }

    pub fn is_empty(&self) -> bool {
        self.pumps.is_empty()
    }

    /// Errors unless every pump sits above `f_max_signal`.
    pub fn check_above(&self, f_max_signal: T) -> Result<()> {
        match self.pumps.iter().find(|p| p.f_thz <= f_max_signal) {
            Some(p) => Err(Error::invalid(format!(
                "pump at {} THz is not above the signal band (max {} THz)",
                p.f_thz, f_max_signal
            ))),
            None => Ok(()),
        }
    }
}

/// Chain of spans, each closed by an amplifier and optionally pumped.
#[derive(Debug, Clone, PartialEq)]
pub struct Link<T> {
    spans: Vec<FiberSpan<T>>,
    amplifiers: Vec<Amplifier<T>>,
    raman: Vec<Option<RamanPumpSet<T>>>,
}

impl<T: Scalar> Link<T> {
    pub fn new(
        spans: Vec<FiberSpan<T>>,
        amplifiers: Vec<Amplifier<T>>,
        raman: Vec<Option<RamanPumpSet<T>>>,
    ) -> Result<Self> {
        if spans.is_empty() {
            return Err(Error::invalid("a link needs at least one span"));
        }
        if amplifiers.len() != spans.len() || raman.len() != spans.len() {
            return Err(Error::invalid(format!(
                "{} spans but {} amplifiers and {} pump entries",
                spans.len(),
                amplifiers.len(),
                raman.len()
            )));
        }
        Ok(Link {
            spans,
            amplifiers,
            raman,
        })
    }

    /// `count` copies of the same span/amplifier/pump triple.
    pub fn uniform(
        count: usize,
        span: FiberSpan<T>,
        amplifier: Amplifier<T>,
        raman: Option<RamanPumpSet<T>>,
    ) -> Result<Self> {
        Link::new(
            vec![span; count],
            vec![amplifier; count],
            vec![raman; count],
        )
    }

    /// Default SMF link of `n_spans` x 100 km with default EDFAs.
    pub fn default_smf(n_spans: usize) -> Result<Self> {
        Link::uniform(
            n_spans,
            make_default_smf(c(100.0))?,
            Amplifier::default_edfa(),
            None,
        )
    }

    pub fn spans(&self) -> &[FiberSpan<T>] {
        &self.spans
    }

    pub fn amplifiers(&self) -> &[Amplifier<T>] {
        &self.amplifiers
    }

    pub fn raman(&self) -> &[Option<RamanPumpSet<T>>] {
        &self.raman
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn total_length_km(&self) -> T {
        self.spans.iter().map(|s| s.length_km).sum()
    }

    /// Same link with every span pumped by `pumps` (or unpumped for `None`).
    pub fn with_raman(&self, pumps: Option<RamanPumpSet<T>>) -> Self {
        Link {
            spans: self.spans.clone(),
            amplifiers: self.amplifiers.clone(),
            raman: vec![pumps; self.spans.len()],
        }
    }
}
