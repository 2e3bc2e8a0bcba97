//! Superoperators for a two-level atom in a squeezed and/or squashed bath.
//!
//! Density matrices are 2×2 in the `{excited, ground}` basis and are
//! column-stacked into 4-vectors, `vec(ρ)[i + 2j] = ρ[i, j]`, so that
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
//!
//! Pauli conventions: `σ = |g⟩⟨e|`, `σx = σ + σ†`, `σy = i(σ − σ†)`,
//! `σz = |e⟩⟨e| − |g⟩⟨g|`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::bloch::BlochRates;
use crate::error::{Error, Result};
use crate::spectra::{check_feasible, check_squeezing, check_theta, efficiency_from_theta};

pub type C64 = Complex64;
pub type Op = Matrix2<C64>;

/// Off-diagonal Bloch couplings larger than this invalidate rate extraction.
pub const RATE_EXTRACTION_TOLERANCE: f64 = 1e-10;

/// A correlation function has decayed once it is this small relative to
/// its value at zero delay.
pub const CORRELATION_CUTOFF: f64 = 1e-8;

const MAX_CORRELATION_STEPS: usize = 20_000_000;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Lowering operator `σ = |g⟩⟨e|`.
pub fn sigma_minus() -> Op {
    Op::new(c(0.0), c(0.0), c(1.0), c(0.0))
}

pub fn sigma_plus() -> Op {
    sigma_minus().adjoint()
}

pub fn sigma_x() -> Op {
    sigma_minus() + sigma_plus()
}

pub fn sigma_y() -> Op {
    (sigma_minus() - sigma_plus()) * C64::i()
}

pub fn sigma_z() -> Op {
    Op::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

pub fn vectorize(m: &Op) -> Vector4<C64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

pub fn unvectorize(v: &Vector4<C64>) -> Op {
    Op::new(v[0], v[2], v[1], v[3])
}

/// Superoperator of `ρ ↦ A ρ`.
pub fn left(a: &Op) -> Matrix4<C64> {
    Op::identity().kronecker(a)
}

/// Superoperator of `ρ ↦ ρ B`.
pub fn right(b: &Op) -> Matrix4<C64> {
    b.transpose().kronecker(&Op::identity())
}

/// 2×2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Op);

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(m: Op) -> Result<Self> {
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::Numerical(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - c(1.0)).norm() > 1e-12 {
            return Err(Error::Numerical(format!("density matrix trace {tr} != 1")));
        }
        let rho = Self(m);
        let (lo, _) = rho.eigenvalues();
        if lo < -1e-10 {
            return Err(Error::Numerical(format!(
                "density matrix has negative eigenvalue {lo:e}"
            )));
        }
        Ok(rho)
    }

    /// `ρ = ½(1 + x σx + y σy + z σz)`; no validation of the Bloch radius.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Self {
        Self((Op::identity() + sigma_x() * c(x) + sigma_y() * c(y) + sigma_z() * c(z)) * c(0.5))
    }

    pub fn excited() -> Self {
        Self::from_bloch(0.0, 0.0, 1.0)
    }

    pub fn ground() -> Self {
        Self::from_bloch(0.0, 0.0, -1.0)
    }

    pub fn matrix(&self) -> &Op {
        &self.0
    }

    /// `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        [
            (sigma_x() * self.0).trace().re,
            (sigma_y() * self.0).trace().re,
            (sigma_z() * self.0).trace().re,
        ]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [x, y, z] = self.bloch();
        let tr = self.0.trace().re;
        let r = (x * x + y * y + z * z).sqrt();
        (0.5 * (tr - r), 0.5 * (tr + r))
    }
}

/// Generator of the master equation acting on column-stacked 2×2 matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liouvillian(Matrix4<C64>);

impl Liouvillian {
    pub fn from_matrix(m: Matrix4<C64>) -> Self {
        Self(m)
    }

    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn apply(&self, rho: &Op) -> Op {
        unvectorize(&(self.0 * vectorize(rho)))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0 * c(k))
    }

    /// Largest `|d tr(ρ)/dt|` coefficient: the sum of the rows for the
    /// diagonal entries, which is zero for a trace-preserving generator.
    pub fn trace_leak(&self) -> f64 {
        (0..4)
            .map(|j| (self.0[(0, j)] + self.0[(3, j)]).norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let schur = self.0.schur();
        let ev = schur
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Schur decomposition failed".into()))?;
        let mut ev: Vec<C64> = ev.iter().copied().collect();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        Ok(ev)
    }

    /// `exp(L t)`, by eigendecomposition when the eigenvectors are well
    /// conditioned and by scaling and squaring otherwise.
    pub fn propagator(&self, t: f64) -> Matrix4<C64> {
        self.propagator_eigen(t)
            .unwrap_or_else(|| (self.0 * c(t)).exp())
    }

    fn propagator_eigen(&self, t: f64) -> Option<Matrix4<C64>> {
        let ev = self.eigenvalues().ok()?;
        let scale = self
            .0
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for i in 0..4 {
            for j in 0..i {
                if (ev[i] - ev[j]).norm() < 1e-6 * scale {
                    return None;
                }
            }
        }
        let mut vecs = Matrix4::<C64>::zeros();
        for (k, &lam) in ev.iter().enumerate() {
            let shifted = self.0 - Matrix4::identity() * lam;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t?;
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))?;
            let v = v_t.row(imin).adjoint();
            vecs.set_column(k, &v);
        }
        let sv = vecs.svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if !(cond < 1e8) {
            return None;
        }
        let inv = vecs.try_inverse()?;
        let diag =
            Matrix4::from_diagonal(&Vector4::from_iterator(ev.iter().map(|l| (l * t).exp())));
        Some(vecs * diag * inv)
    }

    pub fn propagate(&self, rho: &DensityMatrix, t: f64) -> Op {
        unvectorize(&(self.propagator(t) * vectorize(rho.matrix())))
    }
}

impl std::ops::Add for Liouvillian {
    type Output = Liouvillian;
    fn add(self, rhs: Liouvillian) -> Liouvillian {
        Liouvillian(self.0 + rhs.0)
    }
}

/// `D[A]ρ = A ρ A† − ½{A†A, ρ}`.
pub fn dissipator(a: &Op) -> Liouvillian {
    let ad = a.adjoint();
    let ada = ad * a;
    Liouvillian(left(a) * right(&ad) - (left(&ada) + right(&ada)) * c(0.5))
}

/// `ρ ↦ −i λ [F, c ρ + ρ c†]`, the Markovian feedback term for feeding a
/// homodyne current of the measured operator `c` back through `F`.
fn feedback_term(lambda: f64, f: &Op, c_meas: &Op) -> Matrix4<C64> {
    let cd = c_meas.adjoint();
    let inner = left(c_meas) + right(&cd);
    (left(f) - right(f)) * inner * (-C64::i() * lambda)
}

/// Parameters of the atom's bath: mode matching, input squeezing and the
/// two feedback channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub eta: f64,
    pub l: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub theta_x: f64,
    pub theta_y: f64,
}

impl BathParams {
    /// Squeezed bath with no feedback.
    pub fn squeezed(eta: f64, l: f64) -> Self {
        Self {
            eta,
            l,
            lambda_x: 0.0,
            lambda_y: 0.0,
            theta_x: f64::INFINITY,
            theta_y: f64::INFINITY,
        }
    }

    /// Bath parameters from round-loop gains and detector efficiencies.
    pub fn from_gains(
        eta: f64,
        l: f64,
        gain_x: f64,
        eps_x: f64,
        gain_y: f64,
        eps_y: f64,
    ) -> Result<Self> {
        let p = Self {
            eta,
            l,
            lambda_x: lambda_from_gain(gain_x, eta)?,
            lambda_y: lambda_from_gain(gain_y, eta)?,
            theta_x: crate::spectra::theta_from_efficiency(eps_x),
            theta_y: crate::spectra::theta_from_efficiency(eps_y),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::domain("eta", self.eta, "0 <= eta <= 1"));
        }
        check_squeezing(self.l)?;
        check_theta(self.theta_x)?;
        check_theta(self.theta_y)?;
        for (name, lambda, theta) in [
            ("lambda_x", self.lambda_x, self.theta_x),
            ("lambda_y", self.lambda_y, self.theta_y),
        ] {
            if lambda == 0.0 {
                continue;
            }
            if !lambda.is_finite() {
                return Err(Error::domain(name, lambda, "must be finite"));
            }
            if self.eta == 0.0 {
                return Err(Error::domain(name, lambda, "feedback requires eta > 0"));
            }
            if lambda < -self.eta {
                return Err(Error::domain(name, lambda, "lambda >= -eta"));
            }
            if theta.is_infinite() {
                return Err(Error::domain(
                    name,
                    lambda,
                    "feedback requires a detector (theta < inf)",
                ));
            }
        }
        check_feasible(
            efficiency_from_theta(self.theta_x),
            efficiency_from_theta(self.theta_y),
        )
    }
}

/// `λ = g η / (1 − g)`.
pub fn lambda_from_gain(gain: f64, eta: f64) -> Result<f64> {
    if gain == 1.0 {
        return Err(Error::UnitGain);
    }
    if gain == 0.0 {
        return Ok(0.0);
    }
    Ok(gain * eta / (1.0 - gain))
}

/// Inverse of [`lambda_from_gain`], `g = λ / (η + λ)`.
pub fn gain_from_lambda(lambda: f64, eta: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda / (eta + lambda)
    }
}

/// `(1−η) D[σ] + (η/4L) D[(L+1)σ − (L−1)σ†]`.
pub fn build_squeezed_me(eta: f64, l: f64) -> Result<Liouvillian> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("eta", eta, "0 <= eta <= 1"));
    }
    check_squeezing(l)?;
    let s = sigma_minus();
    let jump = s * c(l + 1.0) - s.adjoint() * c(l - 1.0);
    Ok(dissipator(&s).scaled(1.0 - eta) + dissipator(&jump).scaled(eta / (4.0 * l)))
}

/// Master equation of the atom in the in-loop (squashed) beam.
///
/// On top of the squeezed-bath terms, each closed loop adds a feedback
/// commutator and a diffusion term:
///
/// * X: `−iλX [σy/2, cX ρ + ρ cX†]` with `cX = ½[(L+1)σ − (L−1)σ†]`,
///   and `λX²(L+θX)/η · D[σy/2]`;
/// * Y: `−iλY [σx/2, cY ρ + ρ cY†]` with
///   `cY = −(i/2)[(L⁻¹+1)σ + (L⁻¹−1)σ†]`, and `λY²(L⁻¹+θY)/η · D[σx/2]`.
pub fn build_squashed_me(params: &BathParams) -> Result<Liouvillian> {
    params.validate()?;
    let BathParams {
        eta,
        l,
        lambda_x,
        lambda_y,
        theta_x,
        theta_y,
    } = *params;
    let mut total = *build_squeezed_me(eta, l)?.matrix();
    let s = sigma_minus();
    let sd = sigma_plus();
    let half = c(0.5);

    if lambda_x != 0.0 {
        let c_x = (s * c(l + 1.0) - sd * c(l - 1.0)) * half;
        total += feedback_term(lambda_x, &(sigma_y() * half), &c_x);
        let kappa = lambda_x * lambda_x * (l + theta_x) / eta;
        total += dissipator(&(sigma_y() * half)).scaled(kappa).matrix();
    }
    if lambda_y != 0.0 {
        let li = 1.0 / l;
        let c_y = (s * c(li + 1.0) + sd * c(li - 1.0)) * (-C64::i() * 0.5);
        total += feedback_term(lambda_y, &(sigma_x() * half), &c_y);
        let kappa = lambda_y * lambda_y * (li + theta_y) / eta;
        total += dissipator(&(sigma_x() * half)).scaled(kappa).matrix();
    }
    Ok(Liouvillian(total))
}

/// Reads off `(γx, γy, γz, C)` from the action of the generator on the
/// Pauli basis, requiring `d⟨σx⟩/dt = −γx⟨σx⟩`, `d⟨σy⟩/dt = −γy⟨σy⟩` and
/// `d⟨σz⟩/dt = −γz⟨σz⟩ − C` with no cross terms.
pub fn extract_bloch_rates(liouvillian: &Liouvillian) -> Result<BlochRates> {
    let paulis = [sigma_x(), sigma_y(), sigma_z()];
    // d r_k/dt = b_k + Σ_j A_kj r_j for ρ = ½(1 + Σ r_j σ_j).
    let drift = liouvillian.apply(&(Op::identity() * half()));
    let images: Vec<Op> = paulis.iter().map(|p| liouvillian.apply(p)).collect();
    let mut a = [[C64::new(0.0, 0.0); 3]; 3];
    let mut b = [C64::new(0.0, 0.0); 3];
    for (k, pk) in paulis.iter().enumerate() {
        b[k] = (pk * drift).trace();
        for (j, img) in images.iter().enumerate() {
            a[k][j] = (pk * img).trace() * 0.5;
        }
    }

    let mut coupling: f64 = b[0].norm().max(b[1].norm()).max(b[2].im.abs());
    for (k, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let off = if j == k { v.im.abs() } else { v.norm() };
            coupling = coupling.max(off);
        }
    }
    // Trace leakage would also make the affine form meaningless.
    coupling = coupling.max(liouvillian.trace_leak());
    if coupling > RATE_EXTRACTION_TOLERANCE {
        return Err(Error::RateExtraction { coupling });
    }
    Ok(BlochRates {
        gamma_x: -a[0][0].re,
        gamma_y: -a[1][1].re,
        gamma_z: -a[2][2].re,
        c: -b[2].re,
    })
}

fn half() -> C64 {
    c(0.5)
}

/// Unique stationary state of the generator.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    let m = liouvillian.matrix();
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[3]];
    let second = svd.singular_values[order[1]];
    if largest == 0.0 || second < 1e-10 * largest {
        return Err(Error::NoUniqueSteadyState);
    }
    let v: Vector4<C64> = v_t.row(order[0]).adjoint();
    let tr = v[0] + v[3];
    if tr.norm() < 1e-14 {
        return Err(Error::NoUniqueSteadyState);
    }
    let rho = unvectorize(&(v / tr));
    let rho = (rho + rho.adjoint()) * half();
    DensityMatrix::new(rho)
}

/// Fluorescence spectrum obtained from the quantum regression theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpectrum {
    pub omega: Vec<f64>,
    /// `P(ω) = (1−η)/(2π) ∫ C(τ) e^{iωτ} dτ`.
    pub values: Vec<f64>,
    /// Grid spacing of the correlation function.
    pub tau_step: f64,
    /// `C(τ) = ⟨σ†(τ) σ(0)⟩` at `τ = n · tau_step`.
    pub correlation: Vec<C64>,
}

impl RegressionSpectrum {
    pub fn tau_max(&self) -> f64 {
        self.tau_step * (self.correlation.len().saturating_sub(1)) as f64
    }
}

/// Stationary fluorescence spectrum into the unobserved modes.
///
/// `C(τ) = tr[σ† e^{Lτ}(σ ρss)]` is propagated on a uniform grid until it
/// falls below [`CORRELATION_CUTOFF`] of `|C(0)|`, extended to negative
/// delays by `C(−τ) = C(τ)*`, and Fourier transformed with Simpson's rule.
pub fn regression_spectrum(
    liouvillian: &Liouvillian,
    eta: f64,
    omega: &[f64],
) -> Result<RegressionSpectrum> {
    let rho = steady_state(liouvillian)?;
    let s = sigma_minus();
    let sd = sigma_plus();
    let start = vectorize(&(s * rho.matrix()));
    let observe = |v: &Vector4<C64>| (sd * unvectorize(v)).trace();
    let c0 = observe(&start);
    let w_max = omega.iter().fold(0.0_f64, |m, w| m.max(w.abs()));

    if c0.norm() == 0.0 {
        return Ok(RegressionSpectrum {
            omega: omega.to_vec(),
            values: vec![0.0; omega.len()],
            tau_step: 0.0,
            correlation: vec![c0],
        });
    }

    let radius = liouvillian
        .eigenvalues()?
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.norm()));
    let tau_step = 0.02 / radius.max(w_max).max(1e-12);
    let step = liouvillian.propagator(tau_step);

    let mut correlation = vec![c0];
    let mut v = start;
    let cutoff = CORRELATION_CUTOFF * c0.norm();
    loop {
        v = step * v;
        correlation.push(observe(&v));
        let n = correlation.len() - 1;
        if n % 2 == 0 && correlation[n].norm() < cutoff {
            break;
        }
        if n >= MAX_CORRELATION_STEPS {
            return Err(Error::GridLength { steps: n });
        }
    }

    let n = correlation.len() - 1;
    let weights: Vec<f64> = (0..=n)
        .map(|k| {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect();
    let prefactor = (1.0 - eta) / std::f64::consts::TAU;
    let values = omega
        .iter()
        .map(|&w| {
            let rot = C64::from_polar(1.0, w * tau_step);
            let mut phase = c(1.0);
            let mut acc = c(0.0);
            for (ck, wk) in correlation.iter().zip(&weights) {
                acc += ck * phase * *wk;
                phase *= rot;
            }
            let integral = acc * (tau_step / 3.0);
            prefactor * 2.0 * integral.re
        })
        .collect();
    Ok(RegressionSpectrum {
        omega: omega.to_vec(),
        values,
        tau_step,
        correlation,
    })
}

/// Fits `P(ω) = A γ₁/(γ₁²+ω²) + B γ₂/(γ₂²+ω²)` to sampled values and
/// returns the two widths, smaller first.
///
/// Clearing denominators gives `P u² + s P u + p P − a u − b = 0` with
/// `u = ω²`, `s = γ₁² + γ₂²`, `p = γ₁² γ₂²`, which is linear in
/// `(s, p, a, b)` and solved by least squares.
pub fn fit_lorentzian_widths(omega: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if omega.len() != values.len() || omega.len() < 4 {
        return Err(Error::Numerical(
            "need at least four spectral samples to fit two Lorentzians".into(),
        ));
    }
    let n = omega.len();
    let p_scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let u_scale = omega.iter().fold(0.0_f64, |m, w| m.max(w * w)).max(1e-300);
    if p_scale == 0.0 {
        return Err(Error::Numerical(
            "cannot fit an identically zero spectrum".into(),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(n, 4);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let u = omega[i] * omega[i] / u_scale;
        let p = values[i] / p_scale;
        a[(i, 0)] = -p * u;
        a[(i, 1)] = -p;
        a[(i, 2)] = u;
        a[(i, 3)] = 1.0;
        rhs[i] = p * u * u;
    }
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(e.into()))?;
    let (s, p) = (sol[0], sol[1]);
    let disc = (s * s - 4.0 * p).max(0.0).sqrt();
    let g1 = ((s - disc) / 2.0 * u_scale).max(0.0).sqrt();
    let g2 = ((s + disc) / 2.0 * u_scale).max(0.0).sqrt();
    Ok((g1, g2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Op, b: &Op, tol: f64) -> bool {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max) < tol
    }

    #[test]
    fn pauli_conventions() {
        let i = C64::i();
        assert!(close(&(sigma_x() * sigma_y()), &(sigma_z() * i), 1e-15));
        assert!(close(
            &(sigma_plus() * sigma_minus()),
            &DensityMatrix::excited().0,
            1e-15
        ));
    }

    #[test]
    fn vectorization_matches_kronecker() {
        let a = Op::new(c(1.0), C64::new(0.0, 2.0), c(-3.0), c(0.5));
        let b = Op::new(c(0.2), c(1.0), C64::new(1.0, -1.0), c(4.0));
        let x = Op::new(c(0.1), C64::new(0.3, 0.1), c(-0.7), c(2.0));
        let lhs = vectorize(&(a * x * b));
        let rhs = left(&a) * right(&b) * vectorize(&x);
        assert!((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn dissipator_examples() {
        let d = dissipator(&sigma_minus());
        let out = d.apply(DensityMatrix::excited().matrix());
        let expect = DensityMatrix::ground().0 - DensityMatrix::excited().0;
        assert!(close(&out, &expect, 1e-15));
        let out = d.apply(DensityMatrix::ground().matrix());
        assert!(out.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-15);

        let s = sigma_minus();
        let jump = s * c(2.0); // (L+1)σ − (L−1)σ† at L = 1
        let d4 = dissipator(&jump);
        assert!(
            (d4.matrix() - d.matrix() * c(4.0))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                < 1e-12
        );
    }

    #[test]
    fn squeezed_eigenvalues() {
        let ev = build_squeezed_me(0.0, 0.3).unwrap().eigenvalues().unwrap();
        let expect = [0.0, -0.5, -0.5, -1.0];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - c(x)).norm() < 1e-12, "{ev:?}");
        }
        let ev = build_squeezed_me(1.0, 0.5).unwrap().eigenvalues().unwrap();
        for (e, x) in ev.iter().zip([0.0, -0.25, -1.0, -1.25]) {
            assert!((e - c(x)).norm() < 1e-12, "{ev:?}");
        }
        let a = build_squeezed_me(1.0, 1.0).unwrap();
        let b = build_squeezed_me(0.0, 1.0).unwrap();
        assert!(
            (a.matrix() - b.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                < 1e-15
        );
        assert!(build_squeezed_me(0.5, 0.0).is_err());
    }

    #[test]
    fn squashed_reduces_to_squeezed() {
        let p = BathParams {
            theta_x: 1.0,
            theta_y: 3.0,
            ..BathParams::squeezed(0.7, 0.4)
        };
        let a = build_squashed_me(&p).unwrap();
        let b = build_squeezed_me(0.7, 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn squashed_rate_example() {
        let p = BathParams {
            eta: 1.0,
            l: 1.0,
            lambda_x: -0.5,
            lambda_y: 0.0,
            theta_x: 1.0,
            theta_y: f64::INFINITY,
        };
        let r = extract_bloch_rates(&build_squashed_me(&p).unwrap()).unwrap();
        assert!((r.gamma_x - 0.25).abs() < 1e-14);
        assert!((r.gamma_y - 0.5).abs() < 1e-14);
        assert!((r.gamma_z - 0.75).abs() < 1e-14);
        assert!((r.c - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bath_validation() {
        let mut p = BathParams::squeezed(0.0, 1.0);
        p.lambda_x = -0.1;
        p.theta_x = 1.0;
        assert!(matches!(
            build_squashed_me(&p),
            Err(Error::Domain {
                name: "lambda_x",
                ..
            })
        ));
        let p = BathParams {
            eta: 0.5,
            l: 1.0,
            lambda_x: -0.1,
            lambda_y: -0.1,
            theta_x: 1.0 / 0.6 - 1.0,
            theta_y: 1.0 / 0.6 - 1.0,
        };
        assert!(matches!(
            p.validate(),
            Err(Error::InfeasibleDetection { .. })
        ));
        assert!(BathParams::from_gains(0.5, 1.0, 1.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn gain_lambda_roundtrip() {
        for g in [-20.0, -1.0, -0.3, 0.0, 0.5, 0.9] {
            let l = lambda_from_gain(g, 0.8).unwrap();
            assert!((gain_from_lambda(l, 0.8) - g).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_examples() {
        let rho = steady_state(&build_squeezed_me(0.0, 1.0).unwrap()).unwrap();
        assert!((rho.bloch()[2] + 1.0).abs() < 1e-12);
        let rho = steady_state(&build_squeezed_me(0.5, 0.5).unwrap()).unwrap();
        assert!((rho.bloch()[2] + 1.0 / 1.125).abs() < 1e-12);
        assert_eq!(
            steady_state(&Liouvillian::zero()),
            Err(Error::NoUniqueSteadyState)
        );
    }

    #[test]
    fn propagator_routes_agree() {
        let l = build_squashed_me(&BathParams {
            eta: 0.8,
            l: 0.3,
            lambda_x: -0.2,
            lambda_y: -0.4,
            theta_x: 2.0,
            theta_y: 1.5,
        })
        .unwrap();
        let eig = l.propagator_eigen(1.7).expect("non-degenerate");
        let pade = (l.matrix() * c(1.7)).exp();
        assert!((eig - pade).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        // Vacuum has a degenerate pair and must take the fallback route.
        assert!(build_squeezed_me(0.0, 1.0)
            .unwrap()
            .propagator_eigen(1.0)
            .is_none());
    }

    #[test]
    fn vacuum_fluorescence_vanishes() {
        let l = build_squeezed_me(0.0, 1.0).unwrap();
        let reg = regression_spectrum(&l, 0.0, &[0.0, 1.0, 5.0]).unwrap();
        assert!(reg.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lorentzian_fit_recovers_widths() {
        let omega: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = omega
            .iter()
            .map(|w| 0.3 * 0.2 / (0.04 + w * w) + 0.7 * 1.3 / (1.69 + w * w))
            .collect();
        let (a, b) = fit_lorentzian_widths(&omega, &values).unwrap();
        assert!((a - 0.2).abs() < 1e-9 && (b - 1.3).abs() < 1e-9, "{a} {b}");
    }
}
