//! Nyquist-style stability check of the delayed single-pole feedback loop.
//!
//! The open-loop response `G(p) = g Λ e^{−pτ} / (Λ + p)` has its only pole
//! in the left half plane, so the closed loop has a right-half-plane pole
//! exactly when `1 − G(iν)` winds around the origin as `ν` sweeps the real
//! line.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectra::filter_response;

/// `min |1 − g e^{iωτ} h̃(ω)|` below which a loop is reported marginal.
pub const MARGINAL_THRESHOLD: f64 = 1e-3;

/// The grid extends at least this many bandwidths on each side.
const RANGE_IN_BANDWIDTHS: f64 = 100.0;

const MAX_GRID_POINTS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub verdict: Stability,
    /// Net number of encirclements of the origin by the loop characteristic.
    pub winding: i64,
    pub min_magnitude: f64,
    /// Frequency at which the minimum magnitude occurs.
    pub omega_at_min: f64,
}

/// Loop characteristic `1 − g e^{iωτ} h̃(ω)`.
pub fn loop_characteristic(omega: f64, gain: f64, tau: f64, bandwidth: f64) -> Complex64 {
    Complex64::new(1.0, 0.0)
        - gain * Complex64::from_polar(1.0, omega * tau) * filter_response(omega, bandwidth)
}

pub fn stability_check(gain: f64, tau: f64, bandwidth: f64) -> Result<StabilityReport> {
    if gain == 1.0 {
        return Err(Error::UnitGain);
    }
    if !gain.is_finite() {
        return Err(Error::domain("g", gain, "must be finite"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::domain("tau", tau, "tau >= 0"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::domain("bandwidth", bandwidth, "bandwidth > 0"));
    }

    // Beyond `range` the open-loop magnitude is below ½, so the tail of the
    // curve cannot circle the origin.
    let range = (RANGE_IN_BANDWIDTHS * bandwidth).max(2.0 * gain.abs() * bandwidth);
    let mut step = 0.01 * bandwidth;
    if tau > 0.0 {
        step = step.min(0.05 / tau);
    }
    let n = ((2.0 * range / step).ceil() as usize).clamp(2, MAX_GRID_POINTS);
    let step = 2.0 * range / n as f64;

    let mut prev = loop_characteristic(-range, gain, tau, bandwidth);
    let mut total_phase = 0.0;
    let mut min_magnitude = prev.norm();
    let mut omega_at_min = -range;
    for i in 1..=n {
        let omega = -range + i as f64 * step;
        let cur = loop_characteristic(omega, gain, tau, bandwidth);
        total_phase += (cur / prev).arg();
        let m = cur.norm();
        if m < min_magnitude {
            min_magnitude = m;
            omega_at_min = omega;
        }
        prev = cur;
    }
    let winding = (total_phase / std::f64::consts::TAU).round() as i64;

    let verdict = if winding != 0 {
        Stability::Unstable
    } else if min_magnitude <= MARGINAL_THRESHOLD * (1.0 + 1e-9) {
        Stability::Marginal
    } else {
        Stability::Stable
    };
    Ok(StabilityReport {
        verdict,
        winding,
        min_magnitude,
        omega_at_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_feedback_without_delay_is_stable() {
        for bw in [1.0, 100.0, 1e4] {
            let r = stability_check(-1.0, 0.0, bw).unwrap();
            assert_eq!(r.verdict, Stability::Stable);
            assert_eq!(r.winding, 0);
        }
    }

    #[test]
    fn near_unit_gain_is_flagged() {
        let r = stability_check(0.999, 0.0, 100.0).unwrap();
        assert_ne!(r.verdict, Stability::Stable);
        assert!(r.omega_at_min.abs() < 1.0);
    }

    #[test]
    fn large_delayed_gain_is_unstable() {
        let r = stability_check(-5.0, 2.0 / 100.0, 100.0).unwrap();
        assert_eq!(r.verdict, Stability::Unstable);
    }

    #[test]
    fn positive_gain_above_one_is_unstable() {
        let r = stability_check(1.5, 0.0, 10.0).unwrap();
        assert_eq!(r.verdict, Stability::Unstable);
    }

    #[test]
    fn unit_gain_rejected() {
        assert_eq!(stability_check(1.0, 0.0, 1.0), Err(Error::UnitGain));
    }
}
