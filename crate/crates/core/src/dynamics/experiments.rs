//! Ramsey, Rabi, echo and CPMG experiments on a single noisy qubit.
//!
//! Every experiment starts in spin down (`|1⟩`) and reports the probability of
//! finding spin down at the end. The phase of the last π/2 pulse is chosen so
//! that the noiseless zero-delay sequence returns to spin down.

use super::{evolve, ControlSchedule, DynamicsError, SegmentControl};
use crate::noise::{
    draw_nuclear_shift, synthesize_trajectory_with, NoiseSensitivities, NoiseTrajectory, OneOverFSpec,
    SynthesisOptions,
};
use crate::numerics::{least_squares_fit, seeded_rng, stream_id, FitResult, SpectrumEstimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const DOMAIN_RAMSEY: u32 = 0x101;
const DOMAIN_RABI: u32 = 0x102;
const DOMAIN_ECHO: u32 = 0x103;
const DOMAIN_CPMG: u32 = 0x104;

/// Noise and pulse settings for the benchmark experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub spec: OneOverFSpec,
    pub sens: NoiseSensitivities,
    /// Pulse Rabi frequency Ω⁰, MHz.
    pub omega0: f64,
    /// Integration step and noise sample spacing, μs.
    pub dt: f64,
    /// Each realization is one short shot, so by default the 1/f weight below
    /// the shot's frequency resolution enters as a static offset.
    pub synthesis: SynthesisOptions,
    pub seed: u64,
}

impl BenchParams {
    pub fn new(spec: OneOverFSpec, sens: NoiseSensitivities, omega0: f64, seed: u64) -> Self {
        Self { spec, sens, omega0, dt: 0.0005, synthesis: SynthesisOptions { quasistatic_remainder: true }, seed }
    }

    fn t90(&self) -> f64 {
        0.25 / self.omega0
    }

    fn t180(&self) -> f64 {
        0.5 / self.omega0
    }

    fn schedule(&self) -> ControlSchedule {
        ControlSchedule::new(1, self.dt, vec![self.sens])
    }

    fn noisy(&self) -> bool {
        self.spec.a0 > 0.0 && (self.sens.delta_n != 0.0 || self.sens.d_omega_n != 0.0)
    }
}

/// Mean spin-down probability against delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// μs.
    pub delays: Vec<f64>,
    pub p0: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
}

impl DecayCurve {
    /// Coherence W = 2P₀ − 1.
    pub fn coherence(&self) -> Vec<f64> {
        self.p0.iter().map(|p| 2.0 * p - 1.0).collect()
    }
}

/// Fit of `P₀ = ½ + A·exp(−(τ/T)²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    /// μs.
    pub time: f64,
    pub time_stderr: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiCurve {
    /// Drive durations, μs.
    pub durations: Vec<f64>,
    pub p0: Vec<f64>,
    pub stderr: Vec<f64>,
    /// 1 − 2P₀, the oscillation amplitude when sampled at π times.
    pub amplitude: Vec<f64>,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmgResult {
    pub n_pi: usize,
    pub curve: DecayCurve,
    pub fit: Option<DecayFit>,
}

impl CpmgResult {
    pub fn decay_time(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.time)
    }
}

fn mean_and_stderr(rows: &[Vec<f64>], n_points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; n_points];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut err = vec![0.0; n_points];
    if rows.len() > 1 {
        for r in rows {
            for ((e, v), m) in err.iter_mut().zip(r).zip(&mean) {
                *e += (v - m).powi(2);
            }
        }
        for e in &mut err {
            *e = (*e / (n - 1.0)).sqrt() / n.sqrt();
        }
    }
    (mean, err)
}

/// Run `n_real` realizations; `eval` maps (noise, shift) to one value per point.
fn monte_carlo<F>(
    p: &BenchParams,
    domain: u32,
    n_real: usize,
    max_duration: f64,
    n_points: usize,
    eval: F,
) -> Result<(Vec<f64>, Vec<f64>), DynamicsError>
where
    F: Fn(&[&NoiseTrajectory], f64) -> Result<Vec<f64>, DynamicsError> + Sync,
{
    let n_samples = (max_duration / p.dt).ceil() as usize + 4;
    let rows: Result<Vec<Vec<f64>>, DynamicsError> = (0..n_real)
        .into_par_iter()
        .map(|r| {
            let mut rng_b = seeded_rng(p.seed, stream_id(domain, 2 * r as u64 + 1));
            let b = draw_nuclear_shift(&p.sens, &mut rng_b);
            if p.noisy() {
                let mut rng = seeded_rng(p.seed, stream_id(domain, 2 * r as u64));
                let tr = synthesize_trajectory_with(&p.spec, p.dt, n_samples.max(2), &mut rng, p.synthesis)
                    .map_err(|e| DynamicsError::InvalidSchedule(e.to_string()))?;
                eval(&[&tr], b)
            } else {
                eval(&[], b)
            }
        })
        .collect();
    let rows = rows?;
    Ok(mean_and_stderr(&rows, n_points))
}

fn return_probability(s: &ControlSchedule, noise: &[&NoiseTrajectory], b: f64) -> Result<f64, DynamicsError> {
    Ok(evolve(s, noise, &[b], 0)?.transition_probability(1, 1))
}

/// Phase of the closing π/2 pulse that maps the noiseless sequence back to spin down.
fn closing_phase<F: Fn(f64) -> ControlSchedule>(build: F) -> f64 {
    let p0 = return_probability(&build(0.0), &[], 0.0).unwrap_or(0.0);
    let ppi = return_probability(&build(PI), &[], 0.0).unwrap_or(0.0);
    if ppi > p0 { PI } else { 0.0 }
}

fn ramsey_schedule(p: &BenchParams, tau: f64, closing: f64) -> ControlSchedule {
    let mut s = p.schedule();
    s.push(SegmentControl::drive(p.t90(), 1, 0, p.omega0, 0.0));
    s.push(SegmentControl::idle(tau, 1));
    s.push(SegmentControl::drive(p.t90(), 1, 0, p.omega0, closing));
    s
}

fn cpmg_schedule(p: &BenchParams, n_pi: usize, tau: f64, phase_pi: f64, closing: f64) -> ControlSchedule {
    let mut s = p.schedule();
    s.push(SegmentControl::drive(p.t90(), 1, 0, p.omega0, 0.0));
    let gap = tau / n_pi as f64;
    s.push(SegmentControl::idle(0.5 * gap, 1));
    for k in 0..n_pi {
        s.push(SegmentControl::drive(p.t180(), 1, 0, p.omega0, phase_pi));
        s.push(SegmentControl::idle(if k + 1 == n_pi { 0.5 * gap } else { gap }, 1));
    }
    s.push(SegmentControl::drive(p.t90(), 1, 0, p.omega0, closing));
    s
}

fn check_sorted(xs: &[f64]) -> Result<(), DynamicsError> {
    if xs.windows(2).any(|w| w[1] < w[0]) || xs.iter().any(|x| !(*x >= 0.0)) {
        return Err(DynamicsError::InvalidSchedule("delays must be non-negative and ascending".into()));
    }
    Ok(())
}

/// π/2 - τ - π/2 free-induction decay.
pub fn ramsey_experiment(p: &BenchParams, delays: &[f64], n_realizations: usize) -> Result<DecayCurve, DynamicsError> {
    check_sorted(delays)?;
    let closing = closing_phase(|c| ramsey_schedule(p, 0.0, c));
    let scheds: Vec<ControlSchedule> = delays.iter().map(|&t| ramsey_schedule(p, t, closing)).collect();
    let max_d = scheds.iter().map(|s| s.duration()).fold(0.0, f64::max);
    let (p0, stderr) = monte_carlo(p, DOMAIN_RAMSEY, n_realizations, max_d, delays.len(), |noise, b| {
        scheds.iter().map(|s| return_probability(s, noise, b)).collect()
    })?;
    Ok(DecayCurve { delays: delays.to_vec(), p0, stderr, n_realizations })
}

/// Hahn echo π/2 - τ/2 - π - τ/2 - π/2; `delays` are total free-evolution times.
pub fn echo_experiment(p: &BenchParams, delays: &[f64], n_realizations: usize) -> Result<DecayCurve, DynamicsError> {
    check_sorted(delays)?;
    let closing = closing_phase(|c| cpmg_schedule(p, 1, 0.0, 0.0, c));
    let scheds: Vec<ControlSchedule> = delays.iter().map(|&t| cpmg_schedule(p, 1, t, 0.0, closing)).collect();
    let max_d = scheds.iter().map(|s| s.duration()).fold(0.0, f64::max);
    let (p0, stderr) = monte_carlo(p, DOMAIN_ECHO, n_realizations, max_d, delays.len(), |noise, b| {
        scheds.iter().map(|s| return_probability(s, noise, b)).collect()
    })?;
    Ok(DecayCurve { delays: delays.to_vec(), p0, stderr, n_realizations })
}

/// CPMG with `n_pi` π pulses about Y at τ(k − ½)/n_π; `delays` are total
/// free-evolution times. Noise realizations are shared across `n_pi` values
/// with the same seed.
pub fn cpmg_experiment(
    p: &BenchParams,
    n_pi: usize,
    delays: &[f64],
    n_realizations: usize,
) -> Result<CpmgResult, DynamicsError> {
    if n_pi == 0 {
        return Err(DynamicsError::InvalidSchedule("CPMG needs at least one π pulse".into()));
    }
    check_sorted(delays)?;
    let closing = closing_phase(|c| cpmg_schedule(p, n_pi, 0.0, FRAC_PI_2, c));
    let scheds: Vec<ControlSchedule> =
        delays.iter().map(|&t| cpmg_schedule(p, n_pi, t, FRAC_PI_2, closing)).collect();
    let max_d = scheds.iter().map(|s| s.duration()).fold(0.0, f64::max);
    let (p0, stderr) = monte_carlo(p, DOMAIN_CPMG, n_realizations, max_d, delays.len(), |noise, b| {
        scheds.iter().map(|s| return_probability(s, noise, b)).collect()
    })?;
    let curve = DecayCurve { delays: delays.to_vec(), p0, stderr, n_realizations };
    let fit = fit_gaussian_decay(&curve);
    Ok(CpmgResult { n_pi, curve, fit })
}

/// Resonant drive for each duration; raw P₀ plus amplitude 1 − 2P₀.
pub fn rabi_experiment(p: &BenchParams, durations: &[f64], n_realizations: usize) -> Result<RabiCurve, DynamicsError> {
    if !(p.omega0 > 0.0) {
        return Err(DynamicsError::InvalidSchedule("Rabi drive needs omega0 > 0".into()));
    }
    check_sorted(durations)?;
    let scheds: Vec<ControlSchedule> = durations
        .iter()
        .map(|&t| {
            let mut s = p.schedule();
            s.push(SegmentControl::drive(t, 1, 0, p.omega0, 0.0));
            s
        })
        .collect();
    let max_d = durations.last().copied().unwrap_or(0.0);
    let (p0, stderr) = monte_carlo(p, DOMAIN_RABI, n_realizations, max_d, durations.len(), |noise, b| {
        scheds
            .iter()
            .zip(durations)
            .map(|(s, &t)| if t > 0.0 { return_probability(s, noise, b) } else { Ok(1.0) })
            .collect()
    })?;
    let amplitude = p0.iter().map(|v| 1.0 - 2.0 * v).collect();
    Ok(RabiCurve { durations: durations.to_vec(), p0, stderr, amplitude, n_realizations })
}

/// `count` π times (2k+1)/(2Ω⁰) spread evenly up to `t_max` μs.
pub fn rabi_pi_times(omega0: f64, t_max: f64, count: usize) -> Vec<f64> {
    let half = 0.5 / omega0;
    let k_max = ((t_max / half - 1.0) / 2.0).floor().max(0.0) as usize;
    let count = count.max(1).min(k_max + 1);
    let mut out: Vec<f64> = (0..count)
        .map(|i| {
            let k = if count == 1 { 0 } else { (i * k_max) / (count - 1) };
            (2 * k + 1) as f64 * half
        })
        .collect();
    out.dedup();
    out
}

/// Fit `P₀ = ½ + A·exp(−(τ/T)²)`.
pub fn fit_gaussian_decay(curve: &DecayCurve) -> Option<DecayFit> {
    let (xs, ys) = (&curve.delays, &curve.p0);
    if xs.len() < 2 {
        return None;
    }
    let a0 = (ys[0] - 0.5).max(0.05);
    let target = 0.5 + a0 / std::f64::consts::E;
    let t0 = xs
        .iter()
        .zip(ys)
        .find(|(_, y)| **y < target)
        .map(|(x, _)| *x)
        .unwrap_or_else(|| xs[xs.len() - 1])
        .max(1e-6);
    let fit: FitResult = least_squares_fit(
        |t, q| 0.5 + q[0] * (-(t / q[1]).powi(2)).exp(),
        xs,
        ys,
        &[a0, t0],
    )
    .ok()?;
    Some(DecayFit {
        amplitude: fit.params[0],
        time: fit.params[1].abs(),
        time_stderr: fit.stderr(1),
        converged: fit.converged,
    })
}

/// Fit `A(t) = A₀·exp(−(2πγt)²)`; returns (A₀, γ in MHz).
pub fn fit_rabi_envelope(curve: &RabiCurve) -> Option<(f64, f64)> {
    let xs = &curve.durations;
    let ys = &curve.amplitude;
    if xs.len() < 2 {
        return None;
    }
    let a0 = ys[0].max(0.1);
    let t_e = xs.iter().zip(ys).find(|(_, y)| **y < a0 / std::f64::consts::E).map(|(x, _)| *x).unwrap_or(xs[xs.len() - 1]);
    let g0 = 1.0 / (2.0 * PI * t_e.max(1e-9));
    let fit = least_squares_fit(|t, q| q[0] * (-(2.0 * PI * q[1] * t).powi(2)).exp(), xs, ys, &[a0, g0]).ok()?;
    Some((fit.params[0], fit.params[1].abs()))
}

/// First-harmonic CPMG noise spectroscopy.
///
/// Each point with coherence 0 < W < 1 gives S(f) = −π² ln W/(4τ) at
/// f = n_π/(2τ), τ in seconds; S is in rad²/s. Points at equal frequency are
/// averaged.
pub fn cpmg_spectroscopy(results: &[CpmgResult]) -> Result<SpectrumEstimate, DynamicsError> {
    let mut ns: Vec<usize> = results.iter().map(|r| r.n_pi).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(DynamicsError::InvalidSchedule(format!(
            "CPMG spectroscopy needs at least 3 distinct pulse counts, got {}",
            ns.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for r in results {
        for (tau_us, w) in r.curve.delays.iter().zip(r.curve.coherence()) {
            if !(w > 0.0 && w < 1.0) || !(*tau_us > 0.0) {
                continue;
            }
            let tau = tau_us * 1e-6;
            pts.push((r.n_pi as f64 / (2.0 * tau), -PI * PI * w.ln() / (4.0 * tau)));
        }
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut freqs: Vec<f64> = Vec::new();
    let mut psd: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (f, s) in pts {
        match freqs.last() {
            Some(&last) if (f - last).abs() <= 1e-9 * f => {
                let k = psd.len() - 1;
                psd[k] += s;
                counts[k] += 1;
            }
            _ => {
                freqs.push(f);
                psd.push(s);
                counts.push(1);
            }
        }
    }
    for (p, c) in psd.iter_mut().zip(&counts) {
        *p /= *c as f64;
    }
    Ok(SpectrumEstimate { freqs, psd, n_averages: results.len() })
}
