//! Classical noise sources: 1/f charge noise and the quasistatic nuclear field.

use crate::numerics::{standard_normal, RngStream};
use rand::Rng;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid spectrum: {0}")]
    InvalidSpec(String),
    #[error("sample interval must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("trajectory needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("invalid qubit parameters: {0}")]
    InvalidParams(String),
    #[error("inconsistent parameters: radicand of {formula} is {radicand:.4e} < 0")]
    InconsistentParameters { formula: &'static str, radicand: f64 },
}

/// Three-branch one-sided spectrum: white below `f_ell`, 1/f up to `f_c`,
/// 1/f² above. `a0` in μeV², frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneOverFSpec {
    pub a0: f64,
    pub f_ell: f64,
    pub f_c: f64,
}

impl OneOverFSpec {
    /// `a0 = 0` is accepted and switches the source off.
    pub fn new(a0: f64, f_ell: f64, f_c: f64) -> Result<Self, NoiseError> {
        if !(a0 >= 0.0 && a0.is_finite()) {
            return Err(NoiseError::InvalidSpec(format!("a0 = {a0} must be finite and non-negative")));
        }
        if !(f_ell > 0.0 && f_c > f_ell && f_c.is_finite()) {
            return Err(NoiseError::InvalidSpec(format!(
                "cutoffs must satisfy 0 < f_ell < f_c, got f_ell = {f_ell}, f_c = {f_c}"
            )));
        }
        Ok(Self { a0, f_ell, f_c })
    }

    /// √A0 = 0.5 μeV, 100 Hz to 10 MHz.
    pub fn standard() -> Self {
        Self { a0: 0.25, f_ell: 100.0, f_c: 1e7 }
    }

    pub fn psd(&self, f: f64) -> f64 {
        let f = f.abs();
        if f < self.f_ell {
            self.a0 / self.f_ell
        } else if f <= self.f_c {
            self.a0 / f
        } else {
            self.a0 * self.f_c / (f * f)
        }
    }

    /// ∫ S(f) df over `[lo, hi]`, `0 ≤ lo ≤ hi` (hi may be infinite).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let (fl, fc, a0) = (self.f_ell, self.f_c, self.a0);
        let mut total = 0.0;
        let (a, b) = (lo.min(fl), hi.min(fl));
        if b > a {
            total += a0 / fl * (b - a);
        }
        let (a, b) = (lo.max(fl), hi.min(fc));
        if b > a {
            total += a0 * (b / a).ln();
        }
        let (a, b) = (lo.max(fc), hi.max(fc));
        if b > a {
            total += a0 * fc * (1.0 / a - if b.is_finite() { 1.0 / b } else { 0.0 });
        }
        total
    }

    /// Total variance A0·(ln(f_c/f_ℓ) + 2).
    pub fn band_integral(&self) -> f64 {
        self.a0 * ((self.f_c / self.f_ell).ln() + 2.0)
    }

    /// ln(f_c/f_ℓ).
    pub fn log_ratio(&self) -> f64 {
        (self.f_c / self.f_ell).ln()
    }
}

/// Sampled noise field v(t) in μeV at spacing `dt` μs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    pub dt: f64,
    values: Vec<f64>,
    pub spec: OneOverFSpec,
    /// `(seed, stream_id)` when synthesized from a known stream.
    pub seed: Option<(u64, u64)>,
    #[serde(skip)]
    prefix: OnceLock<Vec<f64>>,
}

impl NoiseTrajectory {
    pub fn from_values(dt: f64, values: Vec<f64>, spec: OneOverFSpec) -> Self {
        Self { dt, values, spec, seed: None, prefix: OnceLock::new() }
    }

    /// Identically zero field.
    pub fn zeros(dt: f64, n: usize) -> Self {
        Self::from_values(dt, vec![0.0; n], OneOverFSpec { a0: 0.0, f_ell: 1.0, f_c: 2.0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Σ values[i0..i1].
    pub fn window_sum(&self, i0: usize, i1: usize) -> f64 {
        let p = self.prefix.get_or_init(|| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(self.values.len() + 1);
            out.push(0.0);
            for v in &self.values {
                acc += v;
                out.push(acc);
            }
            out
        });
        p[i1] - p[i0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.dt)
    }

    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    /// Put the spectral weight below Δf/2 into a random constant offset.
    pub quasistatic_remainder: bool,
}

/// Resolution problems of a `(dt, n)` grid for this spectrum.
pub fn resolution_warnings(spec: &OneOverFSpec, dt: f64, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let dt_s = dt * 1e-6;
    let f_min = 1.0 / (n as f64 * dt_s);
    if f_min > 10.0 * spec.f_ell {
        out.push(format!(
            "lowest resolved frequency {f_min:.3e} Hz is above 10·f_ell = {:.3e} Hz",
            10.0 * spec.f_ell
        ));
    }
    let nyq = 0.5 / dt_s;
    if nyq < spec.f_c / 2.0 {
        out.push(format!("Nyquist frequency {nyq:.3e} Hz is below f_c/2 = {:.3e} Hz", spec.f_c / 2.0));
    }
    out
}

/// Gaussian trajectory with the spectrum of `spec`, built in frequency space.
pub fn synthesize_trajectory(
    spec: &OneOverFSpec,
    dt: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<NoiseTrajectory, NoiseError> {
    synthesize_trajectory_with(spec, dt, n, rng, SynthesisOptions::default())
}

/// As [`synthesize_trajectory`] with explicit options.
///
/// Bin k > 0 receives independent complex Gaussian weight whose variance is the
/// integral of S over that bin; the Nyquist bin is real. DC is empty unless the
/// quasistatic remainder is requested.
pub fn synthesize_trajectory_with<R: Rng + ?Sized>(
    spec: &OneOverFSpec,
    dt: f64,
    n: usize,
    rng: &mut R,
    opts: SynthesisOptions,
) -> Result<NoiseTrajectory, NoiseError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NoiseError::BadStep(dt));
    }
    if n < 2 {
        return Err(NoiseError::TooShort(n));
    }
    for w in resolution_warnings(spec, dt, n) {
        log::warn!("noise synthesis: {w}");
    }
    if spec.a0 == 0.0 {
        return Ok(NoiseTrajectory::from_values(dt, vec![0.0; n], *spec));
    }
    let df = 1.0 / (n as f64 * dt * 1e-6);
    let mut planner = RealFftPlanner::<f64>::new();
    let c2r = planner.plan_fft_inverse(n);
    let mut spectrum = c2r.make_input_vec();
    let last = spectrum.len() - 1;
    let even = n.is_multiple_of(2);
    for (k, bin) in spectrum.iter_mut().enumerate() {
        let fk = k as f64 * df;
        if k == 0 {
            let var = if opts.quasistatic_remainder { spec.integral(0.0, 0.5 * df) } else { 0.0 };
            bin.re = var.sqrt() * standard_normal(rng);
            bin.im = 0.0;
        } else if even && k == last {
            let var = spec.integral(fk - 0.5 * df, fk);
            bin.re = var.sqrt() * standard_normal(rng);
            bin.im = 0.0;
        } else {
            let var = spec.integral(fk - 0.5 * df, fk + 0.5 * df);
            let sd = (var / 4.0).sqrt();
            bin.re = sd * standard_normal(rng);
            bin.im = sd * standard_normal(rng);
        }
    }
    let mut values = c2r.make_output_vec();
    c2r.process(&mut spectrum, &mut values)
        .expect("DC and Nyquist bins are real");
    Ok(NoiseTrajectory::from_values(dt, values, *spec))
}

/// Synthesize from a fresh `(seed, stream)` pair and record it.
pub fn synthesize_seeded(
    spec: &OneOverFSpec,
    dt: f64,
    n: usize,
    seed: u64,
    stream: u64,
    opts: SynthesisOptions,
) -> Result<NoiseTrajectory, NoiseError> {
    let mut rng = crate::numerics::seeded_rng(seed, stream);
    let mut t = synthesize_trajectory_with(spec, dt, n, &mut rng, opts)?;
    t.seed = Some((seed, stream));
    Ok(t)
}

/// Measured coherence figures of one qubit (and its exchange partner).
///
/// Times in μs; `gamma_r`, `gamma_e`, `omega0`, `j0` are ordinary frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoiseParams {
    pub t2_star: f64,
    pub t2: f64,
    pub gamma_r: f64,
    pub gamma_e: f64,
    pub omega0: f64,
    pub j0: f64,
}

impl QubitNoiseParams {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.t2_star > 0.0 && self.t2_star.is_finite()) {
            return Err(NoiseError::InvalidParams(format!("t2_star = {} must be positive", self.t2_star)));
        }
        if !(self.t2 >= self.t2_star) {
            return Err(NoiseError::InvalidParams(format!(
                "t2 = {} must be at least t2_star = {}",
                self.t2, self.t2_star
            )));
        }
        for (name, v) in [("gamma_r", self.gamma_r), ("gamma_e", self.gamma_e), ("omega0", self.omega0), ("j0", self.j0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NoiseError::InvalidParams(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Coupling of the noise field into the Hamiltonian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSensitivities {
    /// Δⁿ, rad/μs per μeV.
    pub delta_n: f64,
    /// δΩⁿ, per μeV.
    pub d_omega_n: f64,
    /// δJⁿ, per μeV.
    pub d_j_n: f64,
    /// RMS nuclear shift gμ_B B_n/ħ, rad/μs.
    pub sigma_b: f64,
}

impl NoiseSensitivities {
    pub fn quiet() -> Self {
        Self::default()
    }
}

/// How coherence times are converted into couplings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityConvention {
    /// The closed forms as published, taken literally with a one-sided PSD.
    Published,
    /// Rescaled so the simulated echo and Rabi decays reproduce the input
    /// T₂ and γ_r under the one-sided PSD: Δⁿ²A0 = 2/(ln2·T₂²), and the
    /// Rabi/exchange couplings pick up a factor √2.
    #[default]
    FilterFunction,
}

/// Couplings from coherence figures using the published closed forms.
pub fn derive_sensitivities(
    p: &QubitNoiseParams,
    spec: &OneOverFSpec,
) -> Result<NoiseSensitivities, NoiseError> {
    derive_sensitivities_with(p, spec, SensitivityConvention::Published)
}

pub fn derive_sensitivities_with(
    p: &QubitNoiseParams,
    spec: &OneOverFSpec,
    convention: SensitivityConvention,
) -> Result<NoiseSensitivities, NoiseError> {
    p.validate()?;
    let lr = spec.log_ratio();
    let inv_t2s = 1.0 / (p.t2_star * p.t2_star);
    let inv_t2 = if p.t2.is_finite() { 1.0 / (p.t2 * p.t2) } else { 0.0 };
    let a0l = spec.a0 * lr;
    let (sigma_b_sq, kappa, rabi_pref, exch_pref) = match convention {
        SensitivityConvention::Published => {
            let sb = 2.0 * inv_t2s - lr * inv_t2 / 4f64.ln();
            (sb, None, 1.0, 2.0)
        }
        SensitivityConvention::FilterFunction => {
            let k = 2.0 * inv_t2 / 2f64.ln();
            (2.0 * inv_t2s - k * lr, Some(k), 2.0, 4.0)
        }
    };
    if sigma_b_sq < -1e-12 * inv_t2s {
        return Err(NoiseError::InconsistentParameters { formula: "sigma_b", radicand: sigma_b_sq });
    }
    let sigma_b_sq = sigma_b_sq.max(0.0);
    let sigma_b = sigma_b_sq.sqrt();

    let scale_ok = a0l > 0.0;
    let delta_n = match kappa {
        None => {
            let rad = inv_t2s - sigma_b_sq / 2.0;
            if rad < -1e-15 * inv_t2s {
                return Err(NoiseError::InconsistentParameters { formula: "delta_n", radicand: rad });
            }
            if scale_ok { (1.0 / a0l).sqrt() * rad.max(0.0).sqrt() } else { 0.0 }
        }
        Some(k) => {
            if scale_ok { (k / spec.a0).sqrt() } else { 0.0 }
        }
    };
    let ratio = |rate: f64, target: f64, name: &str| -> Result<f64, NoiseError> {
        if rate == 0.0 {
            Ok(0.0)
        } else if target > 0.0 {
            Ok(rate / target)
        } else {
            Err(NoiseError::InvalidParams(format!("{name} must be positive when its decay rate is nonzero")))
        }
    };
    let d_omega_n = if scale_ok { (rabi_pref / a0l).sqrt() * ratio(p.gamma_r, p.omega0, "omega0")? } else { 0.0 };
    let d_j_n = if scale_ok { (exch_pref / a0l).sqrt() * ratio(p.gamma_e, p.j0, "j0")? } else { 0.0 };
    Ok(NoiseSensitivities { delta_n, d_omega_n, d_j_n, sigma_b })
}

/// One quasistatic nuclear shift, N(0, sigma_b²) in rad/μs.
pub fn draw_nuclear_shift<R: Rng + ?Sized>(sens: &NoiseSensitivities, rng: &mut R) -> f64 {
    if sens.sigma_b == 0.0 {
        return 0.0;
    }
    sens.sigma_b * standard_normal(rng)
}
