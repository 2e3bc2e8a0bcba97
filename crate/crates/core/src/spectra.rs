//! Closed-form quadrature spectra of free and in-loop light.
//!
//! Spectra are normalized so that vacuum (shot noise) has density 1. A
//! detector of efficiency `ε` enters through its excess-noise factor
//! `θ = 1/ε − 1`, which is `+∞` for an absent channel (`ε = 0`).
//!
//! The loop filter is the single pole `h(s) = Λ e^{−Λ s}` with transform
//! `h̃(ω) = ∫₀^∞ h(s) e^{iωs} ds = Λ / (Λ − iω)`, so `h̃(0) = 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance below 1 at which an uncertainty product counts as a
/// violation of the free-field bound.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// Magnitude of the loop characteristic below which the closed-loop
/// spectrum is reported as a resonance.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;

/// White-noise squeezed input: `S_X = L`, `S_Y = 1/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedInput {
    l: f64,
}

impl SqueezedInput {
    pub fn new(l: f64) -> Result<Self> {
        check_squeezing(l)?;
        Ok(Self { l })
    }

    pub fn vacuum() -> Self {
        Self { l: 1.0 }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn spectrum_x(&self) -> f64 {
        self.l
    }

    pub fn spectrum_y(&self) -> f64 {
        1.0 / self.l
    }
}

/// Homodyne detector on one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorChannel {
    efficiency: f64,
}

impl DetectorChannel {
    pub fn new(efficiency: f64) -> Result<Self> {
        check_efficiency("epsilon", efficiency)?;
        Ok(Self { efficiency })
    }

    /// No detector on this quadrature (`ε = 0`, `θ = ∞`).
    pub fn absent() -> Self {
        Self { efficiency: 0.0 }
    }

    pub fn perfect() -> Self {
        Self { efficiency: 1.0 }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Excess-noise factor `θ = 1/ε − 1`; `+∞` for an absent channel.
    pub fn theta(&self) -> f64 {
        theta_from_efficiency(self.efficiency)
    }

    pub fn is_absent(&self) -> bool {
        self.efficiency == 0.0
    }
}

/// `θ = 1/ε − 1`, with `ε = 0` mapped to `+∞`.
pub fn theta_from_efficiency(efficiency: f64) -> f64 {
    if efficiency == 0.0 {
        f64::INFINITY
    } else {
        1.0 / efficiency - 1.0
    }
}

/// Inverse of [`theta_from_efficiency`].
pub fn efficiency_from_theta(theta: f64) -> f64 {
    if theta.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + theta)
    }
}

/// Parameters of the two homodyne feedback loops (one per quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    pub gain_x: f64,
    pub gain_y: f64,
    pub channel_x: DetectorChannel,
    pub channel_y: DetectorChannel,
    /// Loop delay `τ`, in units of the inverse atomic linewidth.
    pub tau: f64,
    /// Filter bandwidth `Λ`.
    pub bandwidth: f64,
}

impl FeedbackConfig {
    /// Open loop on both quadratures with no detectors.
    pub fn open(tau: f64, bandwidth: f64) -> Self {
        Self {
            gain_x: 0.0,
            gain_y: 0.0,
            channel_x: DetectorChannel::absent(),
            channel_y: DetectorChannel::absent(),
            tau,
            bandwidth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gain_x == 1.0 || self.gain_y == 1.0 {
            return Err(Error::UnitGain);
        }
        if !self.gain_x.is_finite() {
            return Err(Error::domain("gain_x", self.gain_x, "must be finite"));
        }
        if !self.gain_y.is_finite() {
            return Err(Error::domain("gain_y", self.gain_y, "must be finite"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::domain("tau", self.tau, "tau >= 0"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::domain("bandwidth", self.bandwidth, "bandwidth > 0"));
        }
        check_feasible(self.channel_x.efficiency(), self.channel_y.efficiency())?;
        if self.channel_x.is_absent() && self.gain_x != 0.0 {
            return Err(Error::domain(
                "gain_x",
                self.gain_x,
                "feedback requires a detector (epsilon_x > 0)",
            ));
        }
        if self.channel_y.is_absent() && self.gain_y != 0.0 {
            return Err(Error::domain(
                "gain_y",
                self.gain_y,
                "feedback requires a detector (epsilon_y > 0)",
            ));
        }
        Ok(())
    }

    /// Configurations with `|g| ≥ 1` on either quadrature. The broadband
    /// formulas still return numbers there, but the loop may not be stable;
    /// see [`crate::stability::stability_check`].
    pub fn potentially_unstable(&self) -> bool {
        self.gain_x.abs() >= 1.0 || self.gain_y.abs() >= 1.0
    }

    pub fn filter_response(&self, omega: f64) -> Complex64 {
        filter_response(omega, self.bandwidth)
    }

    /// In-loop X spectrum at `omega` for the given input.
    pub fn spectrum_x(&self, omega: f64, input: SqueezedInput) -> Result<f64> {
        inloop_spectrum_full(
            omega,
            input.spectrum_x(),
            self.gain_x,
            self.channel_x.theta(),
            self.tau,
            self.bandwidth,
        )
    }

    /// In-loop Y spectrum at `omega` for the given input.
    pub fn spectrum_y(&self, omega: f64, input: SqueezedInput) -> Result<f64> {
        inloop_spectrum_full(
            omega,
            input.spectrum_y(),
            self.gain_y,
            self.channel_y.theta(),
            self.tau,
            self.bandwidth,
        )
    }
}

/// Single-pole loop filter `h̃(ω) = Λ / (Λ − iω)`.
pub fn filter_response(omega: f64, bandwidth: f64) -> Complex64 {
    Complex64::new(bandwidth, 0.0) / Complex64::new(bandwidth, -omega)
}

/// Photocurrent spectrum of a homodyne detector of efficiency `epsilon`
/// looking at a field of spectrum `s`.
pub fn homodyne_spectrum(epsilon: f64, s: f64) -> Result<f64> {
    check_efficiency("epsilon", epsilon)?;
    if !(s > 0.0) {
        return Err(Error::domain("S", s, "S > 0"));
    }
    Ok(epsilon * s + (1.0 - epsilon))
}

/// Broadband in-loop spectrum `(L + g²θ)/(1 − g)²`.
pub fn inloop_spectrum_broadband(l: f64, gain: f64, theta: f64) -> Result<f64> {
    check_squeezing(l)?;
    check_theta(theta)?;
    if gain == 1.0 {
        return Err(Error::UnitGain);
    }
    if gain == 0.0 {
        return Ok(l);
    }
    if theta.is_infinite() {
        return Err(Error::domain(
            "g",
            gain,
            "only g = 0 is meaningful without a detector",
        ));
    }
    Ok((l + gain * gain * theta) / ((1.0 - gain) * (1.0 - gain)))
}

/// Gain minimizing the broadband in-loop spectrum, `−L/θ`.
///
/// A perfect detector (`θ = 0`) has no finite optimum and yields
/// [`Error::UnboundedGain`]; an absent one (`θ = ∞`) yields 0.
pub fn optimal_gain(l: f64, theta: f64) -> Result<f64> {
    check_squeezing(l)?;
    check_theta(theta)?;
    if theta == 0.0 {
        return Err(Error::UnboundedGain);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    Ok(-l / theta)
}

/// Lower bound `L/(1 + L/θ)` on the broadband in-loop spectrum.
pub fn min_inloop_spectrum(l: f64, theta: f64) -> Result<f64> {
    check_squeezing(l)?;
    check_theta(theta)?;
    if theta.is_infinite() {
        return Ok(l);
    }
    // L/(1 + L/θ) written to stay finite at θ = 0.
    Ok(l * theta / (theta + l))
}

/// In-loop spectrum with a finite loop delay and filter bandwidth:
///
/// `S(ω) = [S₀(ω) + θ g² |h̃(ω)|²] / |1 − g e^{iωτ} h̃(ω)|²`.
pub fn inloop_spectrum_full(
    omega: f64,
    s0: f64,
    gain: f64,
    theta: f64,
    tau: f64,
    bandwidth: f64,
) -> Result<f64> {
    if !(s0 > 0.0) {
        return Err(Error::domain("S0", s0, "S0 > 0"));
    }
    check_theta(theta)?;
    if gain == 1.0 {
        return Err(Error::UnitGain);
    }
    if !(tau >= 0.0) {
        return Err(Error::domain("tau", tau, "tau >= 0"));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::domain("bandwidth", bandwidth, "bandwidth > 0"));
    }
    if gain == 0.0 {
        return Ok(s0);
    }
    if theta.is_infinite() {
        return Err(Error::domain(
            "g",
            gain,
            "only g = 0 is meaningful without a detector",
        ));
    }
    let h = filter_response(omega, bandwidth);
    let loop_char = Complex64::new(1.0, 0.0) - gain * Complex64::from_polar(1.0, omega * tau) * h;
    let magnitude = loop_char.norm();
    if magnitude < RESONANCE_TOLERANCE {
        return Err(Error::LoopResonance { omega, magnitude });
    }
    Ok((s0 + theta * gain * gain * h.norm_sqr()) / loop_char.norm_sqr())
}

/// Spectra of a vacuum input squashed on both quadratures with optimal
/// gains (split homodyne / heterodyne detection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPair {
    pub sx: f64,
    pub sy: f64,
}

impl SpectrumPair {
    pub fn sum(&self) -> f64 {
        self.sx + self.sy
    }

    pub fn product(&self) -> f64 {
        self.sx * self.sy
    }
}

/// Both quadratures squashed with optimal gains on a vacuum input. The
/// sum is `2 − εX − εY`.
pub fn dual_squash_sum(epsilon_x: f64, epsilon_y: f64) -> Result<SpectrumPair> {
    check_efficiency("epsilon_x", epsilon_x)?;
    check_efficiency("epsilon_y", epsilon_y)?;
    check_feasible(epsilon_x, epsilon_y)?;
    Ok(SpectrumPair {
        sx: min_inloop_spectrum(1.0, theta_from_efficiency(epsilon_x))?,
        sy: min_inloop_spectrum(1.0, theta_from_efficiency(epsilon_y))?,
    })
}

/// X squeezed to `L` at the source and Y squashed with optimal gain using
/// a detector of efficiency `epsilon` (no detector on X).
pub fn squeeze_squash_pair(l: f64, epsilon: f64) -> Result<SpectrumPair> {
    check_squeezing(l)?;
    check_efficiency("epsilon", epsilon)?;
    let theta = theta_from_efficiency(epsilon);
    Ok(SpectrumPair {
        sx: l,
        sy: min_inloop_spectrum(1.0 / l, theta)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyClass {
    /// `Sx·Sy ≥ 1`, as for any free field.
    FreeFieldLegal,
    /// `Sx·Sy < 1`: only possible for in-loop light.
    SquashedViolation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    pub product: f64,
    pub class: UncertaintyClass,
}

pub fn uncertainty_product(sx: f64, sy: f64) -> Result<UncertaintyReport> {
    if !(sx > 0.0) {
        return Err(Error::domain("Sx", sx, "Sx > 0"));
    }
    if !(sy > 0.0) {
        return Err(Error::domain("Sy", sy, "Sy > 0"));
    }
    let product = sx * sy;
    let class = if product < 1.0 - VIOLATION_TOLERANCE {
        UncertaintyClass::SquashedViolation
    } else {
        UncertaintyClass::FreeFieldLegal
    };
    Ok(UncertaintyReport { product, class })
}

pub(crate) fn check_squeezing(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("L", l, "L > 0"))
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("theta", theta, "theta >= 0"))
    }
}

pub(crate) fn check_efficiency(name: &'static str, epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::domain(name, epsilon, "0 <= epsilon <= 1"))
    }
}

pub(crate) fn check_feasible(epsilon_x: f64, epsilon_y: f64) -> Result<()> {
    let total = epsilon_x + epsilon_y;
    // Allow rounding in splits such as 0.3 + 0.7.
    if total > 1.0 + 1e-12 {
        Err(Error::InfeasibleDetection { total })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn homodyne_examples() {
        assert_eq!(homodyne_spectrum(1.0, 0.5).unwrap(), 0.5);
        assert_eq!(homodyne_spectrum(0.0, 7.0).unwrap(), 1.0);
        assert_relative_eq!(homodyne_spectrum(0.8, 0.5).unwrap(), 0.6, epsilon = 1e-15);
        assert!(matches!(
            homodyne_spectrum(1.2, 0.5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn broadband_examples() {
        assert_eq!(inloop_spectrum_broadband(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(inloop_spectrum_broadband(1.0, -1.0, 1.0).unwrap(), 0.5);
        assert_eq!(
            inloop_spectrum_broadband(0.25, 0.0, f64::INFINITY).unwrap(),
            0.25
        );
        assert_eq!(
            inloop_spectrum_broadband(1.0, 1.0, 1.0),
            Err(Error::UnitGain)
        );
        assert!(inloop_spectrum_broadband(1.0, -0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn optimal_gain_examples() {
        assert_eq!(optimal_gain(1.0, 1.0).unwrap(), -1.0);
        assert_eq!(optimal_gain(0.5, 1.0).unwrap(), -0.5);
        assert_eq!(optimal_gain(1.0, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(optimal_gain(1.0, 0.0), Err(Error::UnboundedGain));
    }

    #[test]
    fn min_spectrum_examples() {
        assert_eq!(min_inloop_spectrum(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(min_inloop_spectrum(1.0, 0.0).unwrap(), 0.0);
        assert!(min_inloop_spectrum(1.0, 1e-12).unwrap() < 1e-11);
        assert_eq!(min_inloop_spectrum(2.0, f64::INFINITY).unwrap(), 2.0);
        assert_relative_eq!(
            min_inloop_spectrum(4.0, 1.0 / 19.0).unwrap(),
            4.0 / 77.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn full_spectrum_examples() {
        for &(tau, bw) in &[(0.0, 10.0), (0.01, 100.0), (0.3, 1.0)] {
            assert_relative_eq!(
                inloop_spectrum_full(0.0, 1.0, -1.0, 1.0, tau, bw).unwrap(),
                0.5,
                epsilon = 1e-15
            );
        }
        assert_eq!(
            inloop_spectrum_full(3.7, 0.8, 0.0, 1.0, 0.01, 100.0).unwrap(),
            0.8
        );
        let bw = 100.0;
        let s = inloop_spectrum_full(1000.0 * bw, 1.0, -1.0, 1.0, 0.0, bw).unwrap();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
    }

    #[test]
    fn full_spectrum_resonance() {
        // g → 1 with no delay: the characteristic vanishes at ω = 0.
        let err = inloop_spectrum_full(0.0, 1.0, 1.0 - 1e-14, 1.0, 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::LoopResonance { .. }));
    }

    #[test]
    fn single_pole_magnitude() {
        let bw = 7.0;
        for &w in &[0.0, 1.0, 7.0, 100.0] {
            assert_relative_eq!(
                filter_response(w, bw).norm_sqr(),
                bw * bw / (bw * bw + w * w),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn dual_squash_examples() {
        let p = dual_squash_sum(0.5, 0.5).unwrap();
        assert_eq!((p.sx, p.sy, p.sum()), (0.5, 0.5, 1.0));
        let p = dual_squash_sum(0.0, 0.0).unwrap();
        assert_eq!(p.sum(), 2.0);
        assert_relative_eq!(
            dual_squash_sum(0.3, 0.6).unwrap().sum(),
            1.1,
            epsilon = 1e-14
        );
        assert!(matches!(
            dual_squash_sum(0.6, 0.6),
            Err(Error::InfeasibleDetection { .. })
        ));
    }

    #[test]
    fn squeeze_squash_examples() {
        let p = squeeze_squash_pair(0.25, 0.95).unwrap();
        assert_eq!(p.sx, 0.25);
        assert_relative_eq!(p.sy, 4.0 / 77.0, max_relative = 1e-13);
        assert_relative_eq!(p.sum(), 0.25 + 4.0 / 77.0, max_relative = 1e-13);
        let p = squeeze_squash_pair(1.0, 0.0).unwrap();
        assert_eq!((p.sx, p.sy, p.sum()), (1.0, 1.0, 2.0));
        let p = squeeze_squash_pair(0.1, 1.0).unwrap();
        assert_eq!((p.sx, p.sy), (0.1, 0.0));
        assert_relative_eq!(p.sum(), 0.1);
    }

    #[test]
    fn uncertainty_examples() {
        let r = uncertainty_product(0.5, 2.0).unwrap();
        assert_eq!(r.product, 1.0);
        assert_eq!(r.class, UncertaintyClass::FreeFieldLegal);
        let r = uncertainty_product(0.5, 1.0).unwrap();
        assert_eq!(r.class, UncertaintyClass::SquashedViolation);
        let r = uncertainty_product(0.5, 0.5).unwrap();
        assert_eq!(r.product, 0.25);
        assert_eq!(r.class, UncertaintyClass::SquashedViolation);
    }

    #[test]
    fn feedback_config_validation() {
        let mut cfg = FeedbackConfig::open(0.001, 100.0);
        cfg.validate().unwrap();
        cfg.gain_x = -1.0;
        assert!(cfg.validate().is_err(), "gain without detector");
        cfg.channel_x = DetectorChannel::new(0.6).unwrap();
        cfg.channel_y = DetectorChannel::new(0.6).unwrap();
        assert!(matches!(
            cfg.validate(),
            Err(Error::InfeasibleDetection { .. })
        ));
        cfg.channel_y = DetectorChannel::new(0.4).unwrap();
        cfg.validate().unwrap();
        assert!(cfg.potentially_unstable());
    }
}
