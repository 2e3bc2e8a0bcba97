//! Closed-form Bloch dynamics and fluorescence of the two-level atom.
//!
//! Rates are in units of the natural linewidth. The Bloch vector obeys
//! `ẋ = −γx x`, `ẏ = −γy y`, `ż = −γz z − C`.

use crate::error::{Error, Result};
use crate::liouville::BathParams;
use crate::spectra::check_squeezing;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochRates {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
    /// Pump constant in the inversion equation.
    pub c: f64,
}

impl BlochRates {
    /// Spontaneous emission into vacuum: `(½, ½, 1, 1)`.
    pub fn vacuum() -> Self {
        Self {
            gamma_x: 0.5,
            gamma_y: 0.5,
            gamma_z: 1.0,
            c: 1.0,
        }
    }

    /// Stationary inversion `−C/γz`, or `None` when `γz = 0`.
    pub fn steady_inversion(&self) -> Option<f64> {
        (self.gamma_z != 0.0).then(|| -self.c / self.gamma_z)
    }

    pub fn max_abs_diff(&self, other: &BlochRates) -> f64 {
        [
            self.gamma_x - other.gamma_x,
            self.gamma_y - other.gamma_y,
            self.gamma_z - other.gamma_z,
            self.c - other.c,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::domain("eta", eta, "0 <= eta <= 1"))
    }
}

pub fn rates_squeezed(eta: f64, l: f64) -> Result<BlochRates> {
    check_eta(eta)?;
    check_squeezing(l)?;
    let gamma_x = 0.5 * ((1.0 - eta) + eta * l);
    let gamma_y = 0.5 * ((1.0 - eta) + eta * l.recip());
    Ok(BlochRates {
        gamma_x,
        gamma_y,
        gamma_z: gamma_x + gamma_y,
        c: 1.0,
    })
}

/// `η S₀ (1 + λ/η)² + λ² θ / η`, i.e. `η` times the in-loop spectrum.
fn channel_noise(eta: f64, s0: f64, lambda: f64, theta: f64) -> f64 {
    if lambda == 0.0 {
        eta * s0
    } else {
        s0 * (eta + lambda).powi(2) / eta + lambda * lambda * theta / eta
    }
}

pub fn rates_squashed(params: &BathParams) -> Result<BlochRates> {
    params.validate()?;
    let BathParams {
        eta,
        l,
        lambda_x,
        lambda_y,
        theta_x,
        theta_y,
    } = *params;
    let gamma_x = 0.5 * ((1.0 - eta) + channel_noise(eta, l, lambda_x, theta_x));
    let gamma_y = 0.5 * ((1.0 - eta) + channel_noise(eta, 1.0 / l, lambda_y, theta_y));
    Ok(BlochRates {
        gamma_x,
        gamma_y,
        gamma_z: gamma_x + gamma_y,
        c: 1.0 + lambda_x + lambda_y,
    })
}

/// Y feedback strength minimizing the in-loop Y noise seen by the atom,
/// `−η / (1 + Lθ)`.
pub fn optimal_lambda_y(eta: f64, l: f64, theta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_squeezing(l)?;
    crate::spectra::check_theta(theta)?;
    if eta == 0.0 || theta.is_infinite() {
        return Ok(0.0);
    }
    Ok(-eta / (1.0 + l * theta))
}

/// X counterpart of [`optimal_lambda_y`], `−η / (1 + θ/L)`.
pub fn optimal_lambda_x(eta: f64, l: f64, theta: f64) -> Result<f64> {
    optimal_lambda_y(eta, 1.0 / l, theta)
}

pub fn evolve_bloch(rates: &BlochRates, initial: BlochState, t: f64) -> Result<BlochState> {
    if !(t >= 0.0) {
        return Err(Error::domain("t", t, "t >= 0"));
    }
    if t == 0.0 {
        return Ok(initial);
    }
    let x = initial.x * (-rates.gamma_x * t).exp();
    let y = initial.y * (-rates.gamma_y * t).exp();
    let z = if rates.gamma_z == 0.0 {
        if rates.c != 0.0 {
            return Err(Error::InconsistentRates { c: rates.c });
        }
        initial.z
    } else {
        let zs = -rates.c / rates.gamma_z;
        zs + (initial.z - zs) * (-rates.gamma_z * t).exp()
    };
    Ok(BlochState { x, y, z })
}

fn check_spectrum_rates(rates: &BlochRates) -> Result<()> {
    if !(rates.gamma_x > 0.0) {
        return Err(Error::domain("gamma_x", rates.gamma_x, "gamma_x > 0"));
    }
    if !(rates.gamma_y > 0.0) {
        return Err(Error::domain("gamma_y", rates.gamma_y, "gamma_y > 0"));
    }
    if rates.gamma_z < rates.c {
        return Err(Error::Unphysical {
            gamma_z: rates.gamma_z,
            c: rates.c,
        });
    }
    Ok(())
}

/// `P(ω) = (1−η)(γz−C)/(8πγz) · [γx/(γx²+ω²) + γy/(γy²+ω²)]`.
pub fn fluorescence_spectrum(eta: f64, rates: &BlochRates, omega: f64) -> Result<f64> {
    check_eta(eta)?;
    check_spectrum_rates(rates)?;
    let BlochRates {
        gamma_x: gx,
        gamma_y: gy,
        gamma_z: gz,
        c,
    } = *rates;
    let prefactor = (1.0 - eta) * (gz - c) / (8.0 * std::f64::consts::PI * gz);
    Ok(prefactor * (gx / (gx * gx + omega * omega) + gy / (gy * gy + omega * omega)))
}

/// `∫ P(ω) dω = (1−η)(γz−C)/(4γz)`.
pub fn fluorescence_total_power(eta: f64, rates: &BlochRates) -> Result<f64> {
    check_eta(eta)?;
    check_spectrum_rates(rates)?;
    Ok((1.0 - eta) * (rates.gamma_z - rates.c) / (4.0 * rates.gamma_z))
}

/// Full width at half maximum of the two-Lorentzian lineshape, by
/// bisection on the half-height point.
pub fn fluorescence_fwhm(rates: &BlochRates) -> Result<f64> {
    check_spectrum_rates(rates)?;
    let (gx, gy) = (rates.gamma_x, rates.gamma_y);
    let shape = |w: f64| gx / (gx * gx + w * w) + gy / (gy * gy + w * w);
    let half = 0.5 * shape(0.0);
    let mut lo = 0.0;
    let mut hi = gx.max(gy);
    while shape(hi) > half {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if shape(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rates(r: BlochRates, expect: (f64, f64, f64, f64), tol: f64) {
        let e = BlochRates {
            gamma_x: expect.0,
            gamma_y: expect.1,
            gamma_z: expect.2,
            c: expect.3,
        };
        assert!(r.max_abs_diff(&e) <= tol, "{r:?} vs {e:?}");
    }

    #[test]
    fn squeezed_examples() {
        assert_rates(rates_squeezed(0.0, 0.5).unwrap(), (0.5, 0.5, 1.0, 1.0), 0.0);
        assert_rates(
            rates_squeezed(1.0, 0.5).unwrap(),
            (0.25, 1.0, 1.25, 1.0),
            0.0,
        );
        assert_rates(rates_squeezed(1.0, 1.0).unwrap(), (0.5, 0.5, 1.0, 1.0), 0.0);
        assert!(rates_squeezed(1.5, 1.0).is_err());
        assert!(rates_squeezed(0.5, -1.0).is_err());
    }

    #[test]
    fn squashed_examples() {
        let p = BathParams {
            eta: 1.0,
            l: 1.0,
            lambda_x: -0.5,
            lambda_y: 0.0,
            theta_x: 1.0,
            theta_y: f64::INFINITY,
        };
        assert_rates(rates_squashed(&p).unwrap(), (0.25, 0.5, 0.75, 0.5), 1e-15);

        let theta = 1.0 / 0.95 - 1.0;
        let p = BathParams {
            eta: 1.0,
            l: 0.25,
            lambda_x: 0.0,
            lambda_y: optimal_lambda_y(1.0, 0.25, theta).unwrap(),
            theta_x: f64::INFINITY,
            theta_y: theta,
        };
        let r = rates_squashed(&p).unwrap();
        assert!((r.gamma_z - 0.150974).abs() < 1e-6, "{r:?}");
        assert!((r.c - 0.012987).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn optimal_lambda_examples() {
        let l = optimal_lambda_y(1.0, 0.25, 1.0 / 19.0).unwrap();
        assert!((l + 1.0 / (1.0 + 0.25 / 19.0)).abs() < 1e-15);
        assert!((l + 0.987013).abs() < 1e-6);
        assert_eq!(optimal_lambda_y(0.0, 0.25, 1.0).unwrap(), 0.0);
        assert_eq!(optimal_lambda_y(1.0, 0.25, f64::INFINITY).unwrap(), 0.0);
        assert!(optimal_lambda_y(1.0, 0.25, 1e12).unwrap().abs() < 1e-11);
    }

    #[test]
    fn evolve_examples() {
        let s0 = BlochState::new(0.3, -0.4, 0.5);
        let r = rates_squeezed(0.7, 0.3).unwrap();
        assert_eq!(evolve_bloch(&r, s0, 0.0).unwrap(), s0);

        let top = BlochState::new(0.0, 0.0, 1.0);
        for t in [0.1, 1.0, 3.0] {
            let s = evolve_bloch(&BlochRates::vacuum(), top, t).unwrap();
            assert!((s.z - (2.0 * (-t).exp() - 1.0)).abs() < 1e-15);
        }

        let frozen = BlochRates {
            gamma_x: 0.0,
            gamma_y: 0.0,
            gamma_z: 0.0,
            c: 0.0,
        };
        assert_eq!(evolve_bloch(&frozen, s0, 123.0).unwrap(), s0);
        let bad = BlochRates { c: 0.1, ..frozen };
        assert!(matches!(
            evolve_bloch(&bad, s0, 1.0),
            Err(Error::InconsistentRates { .. })
        ));
    }

    #[test]
    fn fluorescence_examples() {
        assert_eq!(
            fluorescence_spectrum(0.0, &BlochRates::vacuum(), 0.3).unwrap(),
            0.0
        );
        let r = rates_squeezed(0.5, 0.5).unwrap();
        assert_rates(r, (0.375, 0.75, 1.125, 1.0), 1e-15);
        let p0 = fluorescence_spectrum(0.5, &r, 0.0).unwrap();
        // 0.5 · 0.125 / (8π · 1.125) · (1/0.375 + 1/0.75)
        let hand = 0.0625 / (9.0 * std::f64::consts::PI) * 4.0;
        assert!((p0 - hand).abs() < 1e-15);
        assert!((p0 - 0.008842).abs() < 1e-6);

        let a = fluorescence_spectrum(0.5, &r, 1e3).unwrap();
        let b = fluorescence_spectrum(0.5, &r, 2e3).unwrap();
        assert!((a / b - 4.0).abs() < 1e-5);

        let unphysical = BlochRates { c: 2.0, ..r };
        assert!(matches!(
            fluorescence_spectrum(0.5, &unphysical, 0.0),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn fwhm_of_single_lorentzian() {
        let r = BlochRates {
            gamma_x: 0.4,
            gamma_y: 0.4,
            gamma_z: 0.8,
            c: 0.5,
        };
        assert!((fluorescence_fwhm(&r).unwrap() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn squeezing_narrows_the_line() {
        for l in [0.1, 0.25, 0.5, 0.9] {
            let r = rates_squeezed(0.8, l).unwrap();
            assert!(fluorescence_fwhm(&r).unwrap() < 2.0 * r.gamma_y);
        }
    }
}
