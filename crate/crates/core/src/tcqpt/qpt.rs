//! Windowed process tomography over long noise trajectories.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::QptError;
use crate::channels::pauli::pauli_digits;
use crate::channels::{average_gate_fidelity, error_generator, ptm_from_unitary, ErrorGenerator, PauliTransferMatrix};
use crate::dynamics::{evolve, ideal_unitary, native_gate_schedule, GateParams, NativeGate, Propagator};
use crate::noise::{
    derive_sensitivities_with, draw_nuclear_shift, synthesize_trajectory_with, NoiseSensitivities, NoiseTrajectory,
    OneOverFSpec, QubitNoiseParams, SensitivityConvention, SynthesisOptions,
};
use crate::numerics::{seeded_rng, stream_id, RMatrix};

const DOMAIN_QPT: u32 = 0x201;
const DOMAIN_SHOTS: u32 = 0x202;

/// One windowed-QPT experiment on a single native gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QptRunConfig {
    pub gate: NativeGate,
    /// Gates per tomographic estimate (N_w).
    pub window: usize,
    /// Length of each noise realization, μs.
    pub t_tot: f64,
    pub n_realizations: usize,
    pub spec: OneOverFSpec,
    /// Coherence figures per qubit the gate acts on. For the CZ, γ_e and J⁰
    /// of the first entry describe the pair.
    pub qubits: Vec<QubitNoiseParams>,
    pub convention: SensitivityConvention,
    pub t_g_1q: f64,
    pub t_g_2q: f64,
    /// Integration step and noise sample spacing, μs.
    pub dt: f64,
    /// ωᵢ − ωⱼ in rad/μs; `None` drops the flip-flop exchange term.
    pub flip_flop: Option<f64>,
    /// Binomial shots per (preparation, observable) setting; `None` uses the
    /// exact window channel.
    pub shots: Option<u64>,
    pub synthesis: SynthesisOptions,
    pub seed: u64,
}

impl QptRunConfig {
    /// X90 with t_g = 100 ns, T₂* = 3 μs, T₂ = 30 μs, γ_r = 8 kHz over 1.6 ms.
    pub fn single_qubit_default() -> Self {
        Self {
            gate: NativeGate::X90,
            window: 256,
            t_tot: 1600.0,
            n_realizations: 20,
            spec: OneOverFSpec::standard(),
            qubits: vec![QubitNoiseParams {
                t2_star: 3.0,
                t2: 30.0,
                gamma_r: 0.008,
                gamma_e: 0.0,
                omega0: 5.0,
                j0: 10.0,
            }],
            convention: SensitivityConvention::default(),
            t_g_1q: 0.1,
            t_g_2q: 0.05,
            dt: 0.0005,
            flip_flop: None,
            shots: None,
            synthesis: SynthesisOptions { quasistatic_remainder: true },
            seed: 1,
        }
    }

    /// CZ with t_g = 50 ns, J⁰ = 10 MHz, γ_e = 45 kHz, T₂* = 0.5 μs,
    /// T₂ = 30/105 μs over 50 μs.
    pub fn cz_default() -> Self {
        let q = |t2: f64| QubitNoiseParams { t2_star: 0.5, t2, gamma_r: 0.0, gamma_e: 0.045, omega0: 5.0, j0: 10.0 };
        Self { gate: NativeGate::CZ, t_tot: 50.0, qubits: vec![q(30.0), q(105.0)], ..Self::single_qubit_default() }
    }

    pub fn gate_time(&self) -> f64 {
        match self.gate {
            NativeGate::CZ => self.t_g_2q,
            _ => self.t_g_1q,
        }
    }

    /// ε = t_g/T₂* of the first qubit.
    pub fn epsilon(&self) -> f64 {
        self.gate_time() / self.qubits[0].t2_star
    }

    pub fn n_gates(&self) -> usize {
        (self.t_tot / self.gate_time() + 1e-9).floor() as usize
    }

    pub fn n_windows(&self) -> usize {
        self.n_gates() / self.window.max(1)
    }

    fn steps_per_gate(&self) -> usize {
        (self.gate_time() / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), QptError> {
        let bad = |m: String| Err(QptError::InvalidConfig(m));
        if self.window < 1 {
            return bad("window must be at least 1".into());
        }
        if self.n_realizations < 1 {
            return bad("n_realizations must be at least 1".into());
        }
        if !(self.dt > 0.0) || !(self.t_g_1q > 0.0) || !(self.t_g_2q > 0.0) {
            return bad("dt and gate times must be positive".into());
        }
        let tg = self.gate_time();
        if !(self.t_tot >= self.window as f64 * tg * (1.0 - 1e-9)) {
            return bad(format!("t_tot = {} is shorter than one window ({} gates of {} μs)", self.t_tot, self.window, tg));
        }
        let ratio = tg / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return bad(format!("gate time {tg} μs is not a multiple of dt = {} μs", self.dt));
        }
        if self.qubits.len() != self.gate.n_qubits() {
            return bad(format!("{} needs {} qubit parameter sets, got {}", self.gate, self.gate.n_qubits(), self.qubits.len()));
        }
        if self.gate == NativeGate::CZ && self.t_g_2q < 0.5 / self.qubits[0].j0 - 1e-12 {
            return bad(format!("t_g_2q = {} is shorter than the exchange pulse 1/(2 J0)", self.t_g_2q));
        }
        if self.shots == Some(0) {
            return bad("shots must be positive".into());
        }
        for q in &self.qubits {
            q.validate()?;
        }
        Ok(())
    }

    /// Per-qubit couplings and the pair exchange coupling.
    pub fn sensitivities(&self) -> Result<(Vec<NoiseSensitivities>, f64), QptError> {
        let sens = self
            .qubits
            .iter()
            .map(|q| derive_sensitivities_with(q, &self.spec, self.convention))
            .collect::<Result<Vec<_>, _>>()?;
        let pair = sens[0].d_j_n;
        Ok((sens, pair))
    }

    pub fn gate_params(&self) -> Result<GateParams, QptError> {
        let (couplings, pair_d_j_n) = self.sensitivities()?;
        Ok(GateParams {
            t_g_1q: self.t_g_1q,
            t_g_2q: self.t_g_2q,
            j0: self.qubits[0].j0,
            dt: self.dt,
            couplings,
            pair_d_j_n,
            flip_flop: self.flip_flop,
        })
    }

    fn noisy(&self) -> bool {
        self.spec.a0 > 0.0
    }
}

/// Window estimates of one noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSeries {
    pub generators: Vec<ErrorGenerator>,
    /// Average gate fidelity of each window's error channel.
    pub fidelities: Vec<f64>,
}

/// Error generators over time, one uniform series per realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSeries {
    pub gate: NativeGate,
    pub n_qubits: usize,
    /// Spacing of consecutive estimates, μs.
    pub interval: f64,
    pub realizations: Vec<RealizationSeries>,
}

impl GeneratorSeries {
    pub fn n_realizations(&self) -> usize {
        self.realizations.len()
    }

    pub fn n_windows(&self) -> usize {
        self.realizations.first().map(|r| r.generators.len()).unwrap_or(0)
    }

    /// Mean over all windows of the window infidelity.
    pub fn mean_infidelity(&self) -> f64 {
        let (s, n) = self
            .realizations
            .iter()
            .flat_map(|r| r.fidelities.iter())
            .fold((0.0, 0usize), |(s, n), f| (s + 1.0 - f, n + 1));
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &ErrorGenerator)> {
        self.realizations
            .iter()
            .enumerate()
            .flat_map(|(r, s)| s.generators.iter().enumerate().map(move |(w, g)| (r, w, g)))
    }
}

/// Shot-noise estimate of a channel from product Pauli-eigenstate preparations
/// and ±1 Pauli measurements.
pub fn sample_ptm_shots<R: Rng + ?Sized>(e: &PauliTransferMatrix, shots: u64, rng: &mut R) -> PauliTransferMatrix {
    let n = e.n_qubits;
    let d = e.dim() as f64;
    let np = e.matrix.nrows();
    let mut est = RMatrix::zeros(np, np);
    est[(0, 0)] = 1.0;
    for nu in 0..np {
        let digits = pauli_digits(nu, n);
        for signs in 0..(1usize << n) {
            // Bloch coordinates of the product eigenstate
            let mut coeff = 1.0;
            let mut bloch = Vec::with_capacity(n);
            for (q, &dg) in digits.iter().enumerate() {
                let s = if (signs >> q) & 1 == 0 { 1.0 } else { -1.0 };
                let axis = if dg == 0 { 3 } else { dg };
                if dg != 0 {
                    coeff *= s;
                }
                let mut b = [1.0, 0.0, 0.0, 0.0];
                b[axis] = s;
                bloch.push(b);
            }
            let r: Vec<f64> = (0..np)
                .map(|mu| pauli_digits(mu, n).iter().zip(&bloch).map(|(dg, b)| b[*dg]).product())
                .collect();
            for mu in 1..np {
                let exact: f64 = (0..np).map(|k| e.matrix[(mu, k)] * r[k]).sum();
                let p = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
                let k = Binomial::new(shots, p).expect("valid binomial").sample(rng) as f64;
                est[(mu, nu)] += coeff * (2.0 * k / shots as f64 - 1.0) / d;
            }
        }
    }
    PauliTransferMatrix { n_qubits: n, matrix: est }
}

fn run_realization(
    cfg: &QptRunConfig,
    gp: &GateParams,
    sens: &[NoiseSensitivities],
    ideal_inv: &nalgebra::DMatrix<crate::numerics::C64>,
    r: usize,
) -> Result<RealizationSeries, QptError> {
    let nq = cfg.gate.n_qubits();
    let schedule = native_gate_schedule(cfg.gate, gp);
    let spg = cfg.steps_per_gate();
    let n_gates = cfg.n_windows() * cfg.window;
    let n_samples = n_gates * spg + schedule.samples_needed(cfg.dt) + 2;

    let mut rng_b = seeded_rng(cfg.seed, stream_id(DOMAIN_QPT, (nq as u64 + 1) * r as u64 + nq as u64));
    let b: Vec<f64> = sens.iter().map(|s| draw_nuclear_shift(s, &mut rng_b)).collect();
    let trajs: Vec<NoiseTrajectory> = if cfg.noisy() {
        (0..nq)
            .map(|q| {
                let mut rng = seeded_rng(cfg.seed, stream_id(DOMAIN_QPT, (nq as u64 + 1) * r as u64 + q as u64));
                synthesize_trajectory_with(&cfg.spec, cfg.dt, n_samples, &mut rng, cfg.synthesis)
            })
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let refs: Vec<&NoiseTrajectory> = trajs.iter().collect();
    let mut rng_shots = seeded_rng(cfg.seed, stream_id(DOMAIN_SHOTS, r as u64));

    let mut out = RealizationSeries { generators: Vec::new(), fidelities: Vec::new() };
    let np = 1usize << (2 * nq);
    for w in 0..cfg.n_windows() {
        let mut acc = RMatrix::zeros(np, np);
        for k in 0..cfg.window {
            let g = w * cfg.window + k;
            let u = evolve(&schedule, &refs, &b, g * spg)?;
            let v = Propagator { matrix: &u.matrix * ideal_inv };
            let p = ptm_from_unitary(&v).map_err(|source| QptError::Window { realization: r, window: w, source })?;
            acc += p.matrix;
        }
        acc /= cfg.window as f64;
        acc[(0, 0)] = 1.0;
        for j in 1..np {
            acc[(0, j)] = 0.0;
        }
        let mut e = PauliTransferMatrix { n_qubits: nq, matrix: acc };
        if let Some(shots) = cfg.shots {
            e = sample_ptm_shots(&e, shots, &mut rng_shots);
        }
        let l = error_generator(&e).map_err(|source| QptError::Window { realization: r, window: w, source })?;
        out.fidelities.push(average_gate_fidelity(&e));
        out.generators.push(l);
    }
    Ok(out)
}

/// Simulate `n_realizations` independent runs of T_tot/t_g consecutive gates
/// and estimate the error generator of every window of N_w gates.
pub fn run_windowed_qpt(cfg: &QptRunConfig) -> Result<GeneratorSeries, QptError> {
    cfg.validate()?;
    let (sens, _) = cfg.sensitivities()?;
    let gp = cfg.gate_params()?;
    let ideal_inv = ideal_unitary(cfg.gate).adjoint();
    let realizations = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|r| run_realization(cfg, &gp, &sens, &ideal_inv, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GeneratorSeries {
        gate: cfg.gate,
        n_qubits: cfg.gate.n_qubits(),
        interval: cfg.window as f64 * cfg.gate_time(),
        realizations,
    })
}
