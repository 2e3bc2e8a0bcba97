//! Welch-averaged periodogram for sampled quadrature records.
//!
//! The estimate is a two-sided spectral density in the same normalization
//! as the analytic spectra: a sequence of independent `Normal(0, v/dt)`
//! samples has density `v` at every frequency.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::loop_sim::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Angular frequencies `2πk/(N dt)`, `k = 0..=N/2`.
    pub frequencies: Vec<f64>,
    pub estimates: Vec<f64>,
    /// `estimate / √segments` per bin.
    pub standard_errors: Vec<f64>,
    pub segments: usize,
}

impl SpectrumEstimate {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Indices of bins with `lo <= ω <= hi`.
    pub fn bins_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        self.frequencies
            .iter()
            .enumerate()
            .filter(move |(_, &w)| w >= lo && w <= hi)
            .map(|(i, _)| i)
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
            s * s
        })
        .collect()
}

pub fn estimate_spectrum(
    series: &TimeSeries,
    segment_len: usize,
    overlap_fraction: f64,
) -> Result<SpectrumEstimate> {
    let record = series.samples.len();
    if !segment_len.is_power_of_two() || segment_len < 2 {
        return Err(Error::NotPowerOfTwo(segment_len));
    }
    if segment_len > record {
        return Err(Error::SegmentTooLong {
            segment: segment_len,
            record,
        });
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::domain(
            "overlap_fraction",
            overlap_fraction,
            "0 <= overlap < 1",
        ));
    }
    let hop = ((segment_len as f64) * (1.0 - overlap_fraction))
        .round()
        .max(1.0) as usize;
    let segments = (record - segment_len) / hop + 1;

    let window = hann(segment_len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let scale = series.dt / window_power;

    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let n_bins = segment_len / 2 + 1;
    let mut accum = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for seg in 0..segments {
        let start = seg * hop;
        let chunk = &series.samples[start..start + segment_len];
        for ((b, &x), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in accum.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }

    let norm = scale / segments as f64;
    let root_k = (segments as f64).sqrt();
    let estimates: Vec<f64> = accum.iter().map(|a| a * norm).collect();
    let standard_errors = estimates.iter().map(|e| e / root_k).collect();
    let df = std::f64::consts::TAU / (segment_len as f64 * series.dt);
    let frequencies = (0..n_bins).map(|k| k as f64 * df).collect();
    Ok(SpectrumEstimate {
        frequencies,
        estimates,
        standard_errors,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(n: usize, variance_density: f64, dt: f64, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, (variance_density / dt).sqrt()).unwrap();
        TimeSeries {
            dt,
            samples: (0..n).map(|_| d.sample(&mut rng)).collect(),
        }
    }

    fn fraction_within(est: &SpectrumEstimate, target: f64) -> f64 {
        let inside = (1..est.len())
            .filter(|&i| (est.estimates[i] - target).abs() <= 3.0 * est.standard_errors[i])
            .count();
        inside as f64 / (est.len() - 1) as f64
    }

    #[test]
    fn shot_noise_calibration() {
        let ts = white(1 << 18, 1.0, 1e-3, 3);
        let est = estimate_spectrum(&ts, 512, 0.5).unwrap();
        assert_eq!(est.segments, 1023);
        assert!(fraction_within(&est, 1.0) >= 0.95);
    }

    #[test]
    fn scaled_white_noise() {
        let ts = white(1 << 18, 0.5, 2e-4, 4);
        let est = estimate_spectrum(&ts, 256, 0.5).unwrap();
        assert!(fraction_within(&est, 0.5) >= 0.95);
        let mean: f64 = est.estimates[1..].iter().sum::<f64>() / (est.len() - 1) as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn frequency_axis() {
        let ts = white(64, 1.0, 0.5, 0);
        let est = estimate_spectrum(&ts, 16, 0.0).unwrap();
        assert_eq!(est.len(), 9);
        assert_eq!(est.segments, 4);
        let df = std::f64::consts::TAU / 8.0;
        assert!((est.frequencies[1] - df).abs() < 1e-15);
        assert!((est.frequencies[8] - std::f64::consts::PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_segments() {
        let ts = white(100, 1.0, 1.0, 0);
        assert_eq!(
            estimate_spectrum(&ts, 128, 0.5),
            Err(Error::SegmentTooLong {
                segment: 128,
                record: 100
            })
        );
        assert_eq!(
            estimate_spectrum(&ts, 48, 0.5),
            Err(Error::NotPowerOfTwo(48))
        );
        assert!(estimate_spectrum(&ts, 32, 1.0).is_err());
    }
}
