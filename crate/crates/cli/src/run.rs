//! Mode execution.

use std::io::Write;

use squashlab::bloch::{
    evolve_bloch, fluorescence_spectrum, optimal_lambda_x, optimal_lambda_y, rates_squashed,
    BlochRates, BlochState,
};
use squashlab::liouville::{build_squashed_me, lambda_from_gain, regression_spectrum, BathParams};
use squashlab::loop_sim::{simulate_loop, SimulationConfig, SpectrumComparison};
use squashlab::spectra::{
    optimal_gain, theta_from_efficiency, DetectorChannel, FeedbackConfig, SqueezedInput,
};
use squashlab::stability::{stability_check, Stability};
use squashlab::welch::estimate_spectrum;
use squashlab::{acceptance, Error};
use thiserror::Error as ThisError;

use crate::config::{Mode, Quadrature, ScenarioConfig};
use crate::csv::CsvWriter;

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Failed(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_validation() => 1,
            RunError::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub type RunResult = Result<(), RunError>;

/// Evenly spaced grid of `n` points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn gain_or_optimal(gain: Option<f64>, l: f64, theta: f64, name: &str) -> Result<f64, RunError> {
    match gain {
        Some(g) => Ok(g),
        None => optimal_gain(l, theta).map_err(|e| match e {
            Error::UnboundedGain => RunError::Validation(format!(
                "{name}: a perfect detector has no finite optimal gain; set {name} explicitly"
            )),
            e => e.into(),
        }),
    }
}

fn channel(epsilon: f64) -> Result<DetectorChannel, RunError> {
    if epsilon == 0.0 {
        Ok(DetectorChannel::absent())
    } else {
        Ok(DetectorChannel::new(epsilon)?)
    }
}

fn feedback(cfg: &ScenarioConfig) -> Result<FeedbackConfig, RunError> {
    let tx = theta_from_efficiency(cfg.epsilon_x);
    let ty = theta_from_efficiency(cfg.epsilon_y);
    let fb = FeedbackConfig {
        gain_x: gain_or_optimal(cfg.gx, cfg.l, tx, "gx")?,
        gain_y: gain_or_optimal(cfg.gy, 1.0 / cfg.l, ty, "gy")?,
        channel_x: channel(cfg.epsilon_x)?,
        channel_y: channel(cfg.epsilon_y)?,
        tau: cfg.tau,
        bandwidth: cfg.bandwidth,
    };
    fb.validate()?;
    Ok(fb)
}

fn bath(cfg: &ScenarioConfig) -> Result<BathParams, RunError> {
    let tx = theta_from_efficiency(cfg.epsilon_x);
    let ty = theta_from_efficiency(cfg.epsilon_y);
    let lambda_x = match cfg.gx {
        Some(g) => lambda_from_gain(g, cfg.eta)?,
        None => optimal_lambda_x(cfg.eta, cfg.l, tx)?,
    };
    let lambda_y = match cfg.gy {
        Some(g) => lambda_from_gain(g, cfg.eta)?,
        None => optimal_lambda_y(cfg.eta, cfg.l, ty)?,
    };
    let p = BathParams {
        eta: cfg.eta,
        l: cfg.l,
        lambda_x,
        lambda_y,
        theta_x: tx,
        theta_y: ty,
    };
    p.validate()?;
    Ok(p)
}

fn rates_summary(p: &BathParams, r: &BlochRates) -> String {
    let mut s = format!(
        "lambda_x = {}\nlambda_y = {}\ngamma_x = {}\ngamma_y = {}\ngamma_z = {}\nC = {}\n",
        p.lambda_x, p.lambda_y, r.gamma_x, r.gamma_y, r.gamma_z, r.c
    );
    match r.steady_inversion() {
        Some(z) => s.push_str(&format!("z_ss = {z}\n")),
        None => s.push_str("z_ss = undefined\n"),
    }
    s
}

/// Runs `cfg.mode`, writing CSV (or PASS/FAIL lines) to `out` and
/// diagnostics to `log`.
pub fn run(cfg: &ScenarioConfig, out: impl Write, log: &mut impl Write) -> RunResult {
    match cfg.mode {
        Mode::Spectra => spectra(cfg, out),
        Mode::LoopSim => loop_sim(cfg, out, log),
        Mode::Atom => atom(cfg, out, log),
        Mode::Fluorescence => fluorescence(cfg, out, log),
        Mode::Verify => verify(out),
    }
}

fn spectra(cfg: &ScenarioConfig, out: impl Write) -> RunResult {
    let fb = feedback(cfg)?;
    let input = SqueezedInput::new(cfg.l)?;
    let mut w = CsvWriter::new(out, &["omega", "Sx", "Sy", "product", "sum"])?;
    for omega in grid(cfg.omega_min, cfg.omega_max, cfg.n_bins) {
        let sx = fb.spectrum_x(omega, input)?;
        let sy = fb.spectrum_y(omega, input)?;
        w.row(&[omega, sx, sy, sx * sy, sx + sy])?;
    }
    w.finish()?;
    Ok(())
}

fn loop_sim(cfg: &ScenarioConfig, out: impl Write, log: &mut impl Write) -> RunResult {
    let fb = feedback(cfg)?;
    for (name, g) in [("x", fb.gain_x), ("y", fb.gain_y)] {
        if g == 0.0 {
            continue;
        }
        let report = stability_check(g, fb.tau, fb.bandwidth)?;
        if report.verdict != Stability::Stable {
            let msg = format!(
                "{name} loop is {:?} (winding {}, min |1 - g e^(i w tau) h| = {:.3e} at omega = {:.4})",
                report.verdict, report.winding, report.min_magnitude, report.omega_at_min
            );
            if !cfg.allow_unstable {
                return Err(RunError::Validation(format!(
                    "{msg}; set allow_unstable = true to simulate anyway"
                )));
            }
            writeln!(log, "warning: {msg}")?;
        }
    }
    let input = SqueezedInput::new(cfg.l)?;
    let sim = SimulationConfig::new(fb, input, cfg.dt, cfg.samples, cfg.seed);
    let record = simulate_loop(&sim)?;
    let series = match cfg.quadrature {
        Quadrature::X => &record.x,
        Quadrature::Y => &record.y,
    };
    let segment = cfg.segment_len.min(cfg.samples);
    let est = estimate_spectrum(series, segment, 0.5)?;
    let cmp = SpectrumComparison::new(&est, (cfg.omega_min, cfg.omega_max), |w| {
        match cfg.quadrature {
            Quadrature::X => fb.spectrum_x(w, input),
            Quadrature::Y => fb.spectrum_y(w, input),
        }
    })?;
    writeln!(
        log,
        "segments = {}\nbins = {}\nfraction_within_3se = {:.4}\nmax_relative_deviation = {:.4}",
        cmp.segments,
        cmp.len(),
        cmp.fraction_within(3.0),
        cmp.max_relative_deviation()
    )?;
    let mut w = CsvWriter::new(out, &["omega", "S_est", "S_err", "S_analytic"])?;
    for i in 0..cmp.len() {
        w.row(&[
            cmp.omega[i],
            cmp.estimate[i],
            cmp.standard_error[i],
            cmp.analytic[i],
        ])?;
    }
    w.finish()?;
    Ok(())
}

fn atom(cfg: &ScenarioConfig, out: impl Write, log: &mut impl Write) -> RunResult {
    let p = bath(cfg)?;
    let rates = rates_squashed(&p)?;
    write!(log, "{}", rates_summary(&p, &rates))?;
    let initial = BlochState::new(cfg.x0, cfg.y0, cfg.z0);
    let mut w = CsvWriter::new(out, &["t", "x", "y", "z"])?;
    for t in grid(0.0, cfg.t_max, cfg.n_bins) {
        let s = evolve_bloch(&rates, initial, t)?;
        w.row(&[t, s.x, s.y, s.z])?;
    }
    w.finish()?;
    Ok(())
}

fn fluorescence(cfg: &ScenarioConfig, out: impl Write, log: &mut impl Write) -> RunResult {
    let p = bath(cfg)?;
    let rates = rates_squashed(&p)?;
    write!(log, "{}", rates_summary(&p, &rates))?;
    let omega = grid(cfg.omega_min, cfg.omega_max, cfg.n_bins);
    let liouvillian = build_squashed_me(&p)?;
    let reg = regression_spectrum(&liouvillian, cfg.eta, &omega)?;
    let mut w = CsvWriter::new(out, &["omega", "P_closed_form", "P_regression", "ratio"])?;
    for (&om, &pr) in omega.iter().zip(&reg.values) {
        let pc = fluorescence_spectrum(cfg.eta, &rates, om)?;
        let ratio = if pc == 0.0 { f64::NAN } else { pr / pc };
        w.row(&[om, pc, pr, ratio])?;
    }
    w.finish()?;
    Ok(())
}

fn verify(mut out: impl Write) -> RunResult {
    let outcomes = acceptance::run_all();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    out.flush()?;
    if failed > 0 {
        return Err(RunError::Failed(format!(
            "{failed} of {} acceptance criteria failed",
            outcomes.len()
        )));
    }
    Ok(())
}
