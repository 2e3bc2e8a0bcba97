//! End-to-end verification checks.
//!
//! Each check reproduces one closed-form prediction or cross-checks two
//! independent routes (closed form against superoperator, stochastic
//! simulation against analytic spectrum) at a fixed tolerance. The same
//! checks back the `verify` command and the `acceptance` test target.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{
    evolve_bloch, fluorescence_spectrum, optimal_lambda_y, rates_squashed, rates_squeezed,
    BlochRates, BlochState,
};
use crate::error::Result;
use crate::liouville::{
    build_squashed_me, build_squeezed_me, extract_bloch_rates, fit_lorentzian_widths,
    lambda_from_gain, regression_spectrum, BathParams,
};
use crate::loop_sim::{verify_against_analytic, SimulationConfig};
use crate::spectra::{
    dual_squash_sum, inloop_spectrum_broadband, min_inloop_spectrum, optimal_gain,
    squeeze_squash_pair, theta_from_efficiency, uncertainty_product, DetectorChannel,
    FeedbackConfig, SqueezedInput, UncertaintyClass,
};

/// Seed of the stochastic loop check.
pub const LOOP_SEED: u64 = 20_260_518;
/// Seed of the randomized bath-parameter sweep.
pub const SWEEP_SEED: u64 = 7;
pub const SWEEP_DRAWS: usize = 2000;
/// Welch segment length for the stochastic check (2¹⁷ samples, Δω ≈ 0.48).
pub const LOOP_SEGMENT: usize = 1 << 17;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.2?}): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed,
            self.detail
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(u8, &str, Check); 9] = [
    (1, "squeeze+squash worked example", squeeze_squash_example),
    (2, "decay suppression by squashing", decay_suppression),
    (3, "optimal-gain bound", optimal_gain_bound),
    (4, "heterodyne squash", heterodyne_squash),
    (5, "stochastic vs analytic spectrum", stochastic_vs_analytic),
    (6, "Liouvillian vs closed-form rates", liouvillian_oracle),
    (7, "fluorescence lineshape", fluorescence_lineshape),
    (
        8,
        "uncertainty-violation classification",
        uncertainty_classification,
    ),
    (9, "frozen-atom limit", frozen_atom),
];

pub fn criterion_ids() -> impl Iterator<Item = (u8, &'static str)> {
    CHECKS.iter().map(|(id, name, _)| (*id, *name))
}

/// Runs a single criterion by number (1–9).
pub fn run_one(id: u8) -> Option<CriterionOutcome> {
    CHECKS
        .iter()
        .find(|(i, _, _)| *i == id)
        .map(|&(id, name, check)| run_check(id, name, check))
}

/// Runs every criterion concurrently and returns the outcomes in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = CHECKS
            .iter()
            .map(|&(id, name, check)| scope.spawn(move || run_check(id, name, check)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread panicked"))
            .collect()
    })
}

fn run_check(id: u8, name: &'static str, check: Check) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn squeeze_squash_example() -> Result<(bool, String)> {
    let p = squeeze_squash_pair(0.25, 0.95)?;
    let ok = p.sx == 0.25 && (p.sy - 0.051948).abs() <= 1e-6 && (p.sum() - 0.301948).abs() <= 1e-6;
    Ok((
        ok,
        format!("Sx = {}, Sy = {:.9}, sum = {:.9}", p.sx, p.sy, p.sum()),
    ))
}

fn decay_suppression() -> Result<(bool, String)> {
    let theta = theta_from_efficiency(0.95);
    let params = BathParams {
        eta: 1.0,
        l: 0.25,
        lambda_x: 0.0,
        lambda_y: optimal_lambda_y(1.0, 0.25, theta)?,
        theta_x: f64::INFINITY,
        theta_y: theta,
    };
    let closed = rates_squashed(&params)?;
    let extracted = extract_bloch_rates(&build_squashed_me(&params)?)?;
    let ok =
        (closed.gamma_z - 0.150974).abs() <= 1e-6 && (extracted.gamma_z - 0.150974).abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "gamma_z = {:.9} (closed form), {:.9} (Liouvillian); slowed by {:.2}%",
            closed.gamma_z,
            extracted.gamma_z,
            100.0 * (1.0 - closed.gamma_z)
        ),
    ))
}

fn optimal_gain_bound() -> Result<(bool, String)> {
    const G_MIN: f64 = -20.0;
    const G_MAX: f64 = 0.9;
    const STEPS: usize = 291_000;
    let step = (G_MAX - G_MIN) / STEPS as f64;
    let mut ok = true;
    let mut worst_below = f64::NEG_INFINITY;
    let mut worst_attain = 0.0_f64;
    for l in [0.1, 0.5, 1.0, 2.0] {
        for theta in [0.05, 0.2, 1.0, 5.0] {
            let bound = min_inloop_spectrum(l, theta)?;
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=STEPS {
                let g = G_MIN + i as f64 * step;
                let s = inloop_spectrum_broadband(l, g, theta)?;
                worst_below = worst_below.max(bound - s);
                if s < best.0 {
                    best = (s, g);
                }
            }
            let g_opt = optimal_gain(l, theta)?;
            let at_opt = inloop_spectrum_broadband(l, g_opt, theta)?;
            worst_attain = worst_attain.max((at_opt - bound).abs());
            ok &= bound - best.0 <= 1e-9 && (at_opt - bound).abs() <= 1e-6;
            // When the optimum lies inside the sweep, the sweep minimum sits
            // next to it.
            if (G_MIN..=G_MAX).contains(&g_opt) {
                ok &= (best.1 - g_opt).abs() <= step;
            }
        }
    }
    Ok((
        ok,
        format!("max(bound - swept) = {worst_below:.3e}, max |S(g*) - bound| = {worst_attain:.3e}"),
    ))
}

fn heterodyne_squash() -> Result<(bool, String)> {
    let p = dual_squash_sum(0.5, 0.5)?;
    let ok = p.sx == 0.5 && p.sy == 0.5 && p.sum() == 1.0;
    Ok((
        ok,
        format!("Sx = {}, Sy = {}, sum = {}", p.sx, p.sy, p.sum()),
    ))
}

/// Stochastic loop configuration of the simulation check.
pub fn stochastic_config() -> Result<SimulationConfig> {
    let mut fb = FeedbackConfig::open(0.001, 100.0);
    fb.gain_x = -1.0;
    fb.channel_x = DetectorChannel::new(0.5)?;
    Ok(SimulationConfig::new(
        fb,
        SqueezedInput::vacuum(),
        1e-4,
        1 << 22,
        LOOP_SEED,
    ))
}

fn stochastic_vs_analytic() -> Result<(bool, String)> {
    let cfg = stochastic_config()?;
    let band = (0.0, cfg.feedback.bandwidth / 10.0);
    let report = verify_against_analytic(&cfg, LOOP_SEGMENT, band)?;
    let x = &report.x;
    let within = x.fraction_within(3.0);
    let plateau = x.mean_estimate();
    let plateau_dev = (plateau - 0.5).abs() / 0.5;
    let ok = within >= 0.95 && plateau_dev <= 0.05;
    Ok((
        ok,
        format!(
            "{} bins, {:.1}% within 3 SE, plateau {:.4} ({:.2}% from 0.5), {} segments",
            x.len(),
            100.0 * within,
            plateau,
            100.0 * plateau_dev,
            x.segments
        ),
    ))
}

/// Random feasible bath parameters: η ∈ [0.05, 1], log-uniform L in
/// [0.1, 10], a random split of detector efficiency and gains in [−10, 0.9].
/// One draw in four has both loops open.
pub fn random_bath(rng: &mut impl Rng) -> BathParams {
    let eta = rng.random_range(0.05..=1.0);
    let l = 10f64.powf(rng.random_range(-1.0..=1.0));
    if rng.random_range(0..4) == 0 {
        return BathParams::squeezed(eta, l);
    }
    let eps_x = rng.random_range(0.05..0.95);
    let eps_y = rng.random_range(0.0..(1.0 - eps_x));
    let gain_x = rng.random_range(-10.0..0.9);
    let gain_y = if eps_y > 0.0 {
        rng.random_range(-10.0..0.9)
    } else {
        0.0
    };
    BathParams {
        eta,
        l,
        lambda_x: lambda_from_gain(gain_x, eta).unwrap_or(0.0),
        lambda_y: lambda_from_gain(gain_y, eta).unwrap_or(0.0),
        theta_x: theta_from_efficiency(eps_x),
        theta_y: theta_from_efficiency(eps_y),
    }
}

fn rates_tolerance(expect: &BlochRates) -> f64 {
    let scale = [expect.gamma_x, expect.gamma_y, expect.gamma_z, expect.c]
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    1e-10 * scale
}

fn liouvillian_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let mut worst = 0.0_f64;
    let mut worst_open = 0.0_f64;
    let mut ok = true;
    let mut open = 0;
    for _ in 0..SWEEP_DRAWS {
        let p = random_bath(&mut rng);
        let extracted = extract_bloch_rates(&build_squashed_me(&p)?)?;
        let closed = rates_squashed(&p)?;
        let diff = extracted.max_abs_diff(&closed);
        worst = worst.max(diff);
        ok &= diff <= rates_tolerance(&closed);
        if p.lambda_x == 0.0 && p.lambda_y == 0.0 {
            open += 1;
            let squeezed = rates_squeezed(p.eta, p.l)?;
            let d = extracted.max_abs_diff(&squeezed);
            worst_open = worst_open.max(d);
            ok &= d <= rates_tolerance(&squeezed);
        }
    }
    // The fixed grid of the squeezed-bath formulas.
    for i in 0..=4 {
        let eta = 0.25 * i as f64;
        for l in [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let extracted = extract_bloch_rates(&build_squeezed_me(eta, l)?)?;
            let squeezed = rates_squeezed(eta, l)?;
            let d = extracted.max_abs_diff(&squeezed);
            worst_open = worst_open.max(d);
            ok &= d <= rates_tolerance(&squeezed);
        }
    }
    Ok((
        ok,
        format!(
            "{SWEEP_DRAWS} draws ({open} open loop): max deviation {worst:.2e}; squeezed-bath max deviation {worst_open:.2e}"
        ),
    ))
}

/// Frequency grid of the lineshape check.
pub fn lineshape_grid() -> Vec<f64> {
    (0..=300).map(|i| i as f64 * 0.02).collect()
}

fn fluorescence_lineshape() -> Result<(bool, String)> {
    let (eta, l) = (0.5, 0.5);
    let omega = lineshape_grid();
    let reg = regression_spectrum(&build_squeezed_me(eta, l)?, eta, &omega)?;
    let rates = rates_squeezed(eta, l)?;
    let closed: Vec<f64> = omega
        .iter()
        .map(|&w| fluorescence_spectrum(eta, &rates, w))
        .collect::<Result<_>>()?;
    let peak_r = reg.values.iter().cloned().fold(f64::MIN, f64::max);
    let peak_c = closed.iter().cloned().fold(f64::MIN, f64::max);
    let shape_dev = reg
        .values
        .iter()
        .zip(&closed)
        .map(|(r, c)| (r / peak_r - c / peak_c).abs())
        .fold(0.0, f64::max);
    let (w1, w2) = fit_lorentzian_widths(&omega, &reg.values)?;
    let ratio = reg.values[0] / closed[0];
    let ok = shape_dev <= 1e-6 && (w1 - 0.375).abs() <= 1e-6 && (w2 - 0.75).abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "max normalized deviation {shape_dev:.2e}; fitted widths {w1:.9}, {w2:.9}; \
             regression/closed-form normalization ratio {ratio:.9}"
        ),
    ))
}

fn uncertainty_classification() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst_free = 0.0_f64;
    for l in [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 20.0] {
        let input = SqueezedInput::new(l)?;
        let r = uncertainty_product(input.spectrum_x(), input.spectrum_y())?;
        worst_free = worst_free.max((r.product - 1.0).abs());
        ok &= (r.product - 1.0).abs() <= 1e-12 && r.class == UncertaintyClass::FreeFieldLegal;
    }
    let mut cases = 0;
    let mut largest = 0.0_f64;
    for l in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0] {
        for eps in [0.01, 0.1, 0.3, 0.5, 0.8, 0.95, 0.99] {
            let theta = theta_from_efficiency(eps);
            // X squashed, Y untouched.
            let sx = min_inloop_spectrum(l, theta)?;
            let r = uncertainty_product(sx, 1.0 / l)?;
            // Y squashed, X squeezed at the source.
            let p = squeeze_squash_pair(l, eps)?;
            let r2 = uncertainty_product(p.sx, p.sy)?;
            for r in [r, r2] {
                cases += 1;
                largest = largest.max(r.product);
                ok &= r.class == UncertaintyClass::SquashedViolation;
            }
        }
    }
    for eps_x in [0.1, 0.3, 0.5] {
        let p = dual_squash_sum(eps_x, 1.0 - eps_x)?;
        let r = uncertainty_product(p.sx, p.sy)?;
        cases += 1;
        largest = largest.max(r.product);
        ok &= r.class == UncertaintyClass::SquashedViolation;
    }
    Ok((
        ok,
        format!(
            "free-field max |product - 1| = {worst_free:.1e}; {cases} squashed cases, largest product {largest:.6}"
        ),
    ))
}

/// Rates along the frozen-atom sequence `L = 10⁻ᵏ`, `θ_Y = L`, `η = 1`,
/// optimal `λ_Y`.
pub fn frozen_sequence() -> Result<Vec<(f64, BlochRates)>> {
    (1..=6)
        .map(|k| {
            let l = 10f64.powi(-k);
            let theta = l;
            let params = BathParams {
                eta: 1.0,
                l,
                lambda_x: 0.0,
                lambda_y: optimal_lambda_y(1.0, l, theta)?,
                theta_x: f64::INFINITY,
                theta_y: theta,
            };
            Ok((l, rates_squashed(&params)?))
        })
        .collect()
}

fn frozen_atom() -> Result<(bool, String)> {
    let seq = frozen_sequence()?;
    let mut ok = true;
    for w in seq.windows(2) {
        let (a, b) = (&w[0].1, &w[1].1);
        ok &= b.gamma_x < a.gamma_x && b.gamma_y < a.gamma_y && b.gamma_z < a.gamma_z && b.c < a.c;
    }
    let mut worst_change_ratio = 0.0_f64;
    for (l, r) in &seq {
        ok &= [r.gamma_x, r.gamma_y, r.gamma_z, r.c]
            .iter()
            .all(|v| *v >= 0.0 && *v < 10.0 * l);
        let end = evolve_bloch(r, BlochState::new(0.0, 0.0, 1.0), 1.0)?;
        let change = (end.z - 1.0).abs();
        worst_change_ratio = worst_change_ratio.max(change / l);
        ok &= change < 10.0 * l;
    }
    let (l_last, r_last) = seq.last().copied().expect("non-empty sequence");
    Ok((
        ok,
        format!(
            "at L = {l_last:e}: gamma_z = {:.3e}, C = {:.3e}; max |dz|/L over t = 1: {worst_change_ratio:.3}",
            r_last.gamma_z, r_last.c
        ),
    ))
}
