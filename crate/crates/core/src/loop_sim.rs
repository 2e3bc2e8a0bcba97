//! Stochastic simulation of the homodyne feedback loop.
//!
//! Quadratures are represented as real Gaussian processes. At every step
//! the input quadrature `X₀` and the detector noise `ξ` are drawn as white
//! noise, the ε-normalized photocurrent `u = X₀ + χ + √θ ξ` drives a
//! single-pole filter, and the filter output, delayed by `round(τ/dt)`
//! steps and scaled by the gain, is the modulator amplitude `χ` added to
//! the beam. The recorded in-loop quadrature is `X₁ = X₀ + χ`.
//!
//! Each quadrature has its own loop; the X loop never touches the Y record.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectra::{FeedbackConfig, SqueezedInput};
use crate::welch::{estimate_spectrum, SpectrumEstimate};

/// Records whose magnitude exceeds this multiple of the input noise scale
/// are treated as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample variance multiplied by `dt`, i.e. the white-noise density
    /// the record would have if it were uncorrelated.
    pub fn variance_density(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        let var = self.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub feedback: FeedbackConfig,
    pub input: SqueezedInput,
    pub dt: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Steps simulated and discarded before recording.
    pub warmup: usize,
}

impl SimulationConfig {
    /// Config with the minimum warmup of ten filter time constants.
    pub fn new(
        feedback: FeedbackConfig,
        input: SqueezedInput,
        dt: f64,
        n_samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            feedback,
            input,
            dt,
            n_samples,
            seed,
            warmup: min_warmup(feedback.bandwidth, dt),
        }
    }

    pub fn delay_steps(&self) -> usize {
        (self.feedback.tau / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.feedback.validate()?;
        let fb = &self.feedback;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        // Slack of one part in 1e9 for values like dt = 1e-4, tau = 1e-3.
        let slack = 1.0 + 1e-9;
        if fb.tau > 0.0 && self.dt > fb.tau / 10.0 * slack {
            return Err(Error::Config(format!(
                "dt = {} does not resolve the delay (dt <= tau/10 = {})",
                self.dt,
                fb.tau / 10.0
            )));
        }
        if self.dt > 0.1 / fb.bandwidth * slack {
            return Err(Error::Config(format!(
                "dt = {} does not resolve the filter (dt <= 0.1/bandwidth = {})",
                self.dt,
                0.1 / fb.bandwidth
            )));
        }
        if !self.n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n_samples));
        }
        let need = min_warmup(fb.bandwidth, self.dt);
        if self.warmup < need {
            return Err(Error::Config(format!(
                "warmup = {} steps is below ten filter time constants ({need} steps)",
                self.warmup
            )));
        }
        Ok(())
    }
}

/// `ceil(10 / (Λ dt))` steps.
pub fn min_warmup(bandwidth: f64, dt: f64) -> usize {
    (10.0 / (bandwidth * dt) * (1.0 - 1e-12)).ceil() as usize
}

/// One quadrature's feedback loop, advanced one sample at a time with
/// externally supplied noise.
#[derive(Debug, Clone)]
pub struct QuadratureLoop {
    gain: f64,
    sqrt_theta: f64,
    alpha: f64,
    /// Filter outputs `f[n−d], …, f[n]`, oldest at `head`.
    history: Vec<f64>,
    head: usize,
}

impl QuadratureLoop {
    pub fn new(gain: f64, theta: f64, bandwidth: f64, dt: f64, delay_steps: usize) -> Self {
        let sqrt_theta = if gain == 0.0 { 0.0 } else { theta.sqrt() };
        Self {
            gain,
            sqrt_theta,
            alpha: dt * bandwidth,
            history: vec![0.0; delay_steps + 1],
            head: 0,
        }
    }

    /// Advances one step given the input quadrature sample and detector
    /// noise sample; returns the in-loop sample `X₁[n]`.
    pub fn step(&mut self, input: f64, detector_noise: f64) -> f64 {
        if self.gain == 0.0 {
            return input;
        }
        let d = self.history.len();
        let chi = self.gain * self.history[self.head];
        let current = self.history[(self.head + d - 1) % d];
        let u = input + chi + self.sqrt_theta * detector_noise;
        let next = current + self.alpha * (u - current);
        // The oldest slot becomes the newest.
        self.history[self.head] = next;
        self.head = (self.head + 1) % d;
        input + chi
    }
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopRecord {
    pub x: TimeSeries,
    pub y: TimeSeries,
}

/// Runs both quadrature loops and returns the recorded in-loop quadratures.
///
/// Noise is drawn from a ChaCha8 stream seeded with `config.seed` in the
/// fixed order `X₀, ξ_X, Y₀, ξ_Y` per step, so a given config always
/// produces the same record.
pub fn simulate_loop(config: &SimulationConfig) -> Result<LoopRecord> {
    config.validate()?;
    let fb = &config.feedback;
    let dt = config.dt;
    let d = config.delay_steps();
    let mut loop_x = QuadratureLoop::new(fb.gain_x, fb.channel_x.theta(), fb.bandwidth, dt, d);
    let mut loop_y = QuadratureLoop::new(fb.gain_y, fb.channel_y.theta(), fb.bandwidth, dt, d);

    let sx = (config.input.spectrum_x() / dt).sqrt();
    let sy = (config.input.spectrum_y() / dt).sqrt();
    let s_xi = (1.0 / dt).sqrt();
    let limit_x = DIVERGENCE_FACTOR * sx;
    let limit_y = DIVERGENCE_FACTOR * sy;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = Vec::with_capacity(config.n_samples);
    let mut y = Vec::with_capacity(config.n_samples);
    let total = config.warmup + config.n_samples;
    for step in 0..total {
        let x0 = sx * sample_normal(&mut rng);
        let xi_x = s_xi * sample_normal(&mut rng);
        let y0 = sy * sample_normal(&mut rng);
        let xi_y = s_xi * sample_normal(&mut rng);
        let x1 = loop_x.step(x0, xi_x);
        let y1 = loop_y.step(y0, xi_y);
        if !(x1.abs() <= limit_x) {
            return Err(Error::Instability { step, value: x1 });
        }
        if !(y1.abs() <= limit_y) {
            return Err(Error::Instability { step, value: y1 });
        }
        if step >= config.warmup {
            x.push(x1);
            y.push(y1);
        }
    }
    Ok(LoopRecord {
        x: TimeSeries { dt, samples: x },
        y: TimeSeries { dt, samples: y },
    })
}

/// Bin-by-bin comparison of an estimated spectrum with a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub omega: Vec<f64>,
    pub estimate: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub analytic: Vec<f64>,
    pub segments: usize,
}

impl SpectrumComparison {
    /// Compares `est` against `analytic` over the bins with
    /// `lo <= ω <= hi`. The zero-frequency bin is never included.
    pub fn new(
        est: &SpectrumEstimate,
        band: (f64, f64),
        analytic: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        let mut out = SpectrumComparison {
            omega: Vec::new(),
            estimate: Vec::new(),
            standard_error: Vec::new(),
            analytic: Vec::new(),
            segments: est.segments,
        };
        for i in est.bins_in(band.0, band.1).filter(|&i| i > 0) {
            let w = est.frequencies[i];
            out.omega.push(w);
            out.estimate.push(est.estimates[i]);
            out.standard_error.push(est.standard_errors[i]);
            out.analytic.push(analytic(w)?);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn max_relative_deviation(&self) -> f64 {
        self.estimate
            .iter()
            .zip(&self.analytic)
            .map(|(e, a)| ((e - a) / a).abs())
            .fold(0.0, f64::max)
    }

    /// Fraction of bins whose estimate lies within `k` standard errors of
    /// the closed form.
    pub fn fraction_within(&self, k: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let inside = (0..self.len())
            .filter(|&i| (self.estimate[i] - self.analytic[i]).abs() <= k * self.standard_error[i])
            .count();
        inside as f64 / self.len() as f64
    }

    pub fn mean_estimate(&self) -> f64 {
        self.estimate.iter().sum::<f64>() / self.len() as f64
    }

    pub fn mean_analytic(&self) -> f64 {
        self.analytic.iter().sum::<f64>() / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub x: SpectrumComparison,
    pub y: SpectrumComparison,
}

/// Simulates `config`, estimates both quadrature spectra with 50%-overlap
/// Hann segments of `segment_len` samples, and compares them with the
/// closed-form in-loop spectra over `band`.
pub fn verify_against_analytic(
    config: &SimulationConfig,
    segment_len: usize,
    band: (f64, f64),
) -> Result<VerificationReport> {
    let record = simulate_loop(config)?;
    let fb = config.feedback;
    let input = config.input;
    let est_x = estimate_spectrum(&record.x, segment_len, 0.5)?;
    let est_y = estimate_spectrum(&record.y, segment_len, 0.5)?;
    Ok(VerificationReport {
        x: SpectrumComparison::new(&est_x, band, |w| fb.spectrum_x(w, input))?,
        y: SpectrumComparison::new(&est_y, band, |w| fb.spectrum_y(w, input))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::DetectorChannel;

    fn squash_config(n: usize, seed: u64) -> SimulationConfig {
        let mut fb = FeedbackConfig::open(0.001, 100.0);
        fb.gain_x = -1.0;
        fb.channel_x = DetectorChannel::new(0.5).unwrap();
        SimulationConfig::new(fb, SqueezedInput::vacuum(), 1e-4, n, seed)
    }

    #[test]
    fn default_warmup_is_ten_time_constants() {
        assert_eq!(min_warmup(100.0, 1e-4), 1000);
        let cfg = squash_config(1 << 10, 0);
        assert_eq!(cfg.warmup, 1000);
        assert_eq!(cfg.delay_steps(), 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut cfg = squash_config(1 << 10, 0);
        cfg.dt = 2e-4;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = squash_config(1000, 0);
        assert_eq!(cfg.validate(), Err(Error::NotPowerOfTwo(1000)));
        cfg.n_samples = 1024;
        cfg.warmup = 10;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn open_loop_passes_input_through() {
        let mut l = QuadratureLoop::new(0.0, f64::INFINITY, 100.0, 1e-4, 10);
        assert_eq!(l.step(1.5, 3.0), 1.5);
    }

    #[test]
    fn delay_line_timing() {
        // Unit impulse on the input: with d = 2 and alpha = 0.5 the filter
        // output f[1] = 0.5 first reaches chi at n = 1 + 2.
        let mut l = QuadratureLoop::new(-1.0, 0.0, 5.0, 0.1, 2);
        let out: Vec<f64> = [1.0, 0.0, 0.0, 0.0, 0.0]
            .iter()
            .map(|&x| l.step(x, 0.0))
            .collect();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);
        assert_eq!(out[3], -0.5);
    }

    #[test]
    fn diverging_loop_reports_step() {
        let mut fb = FeedbackConfig::open(0.02, 100.0);
        fb.gain_x = -5.0;
        fb.channel_x = DetectorChannel::new(0.5).unwrap();
        let cfg = SimulationConfig::new(fb, SqueezedInput::vacuum(), 1e-3, 1 << 16, 1);
        match simulate_loop(&cfg) {
            Err(Error::Instability { step, .. }) => assert!(step > 0),
            other => panic!("expected instability, got {other:?}"),
        }
    }
}
