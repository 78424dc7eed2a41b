//! Rotating-frame spin dynamics under noisy piecewise-constant controls.
//!
//! Computational basis: `|0⟩` is spin up (s^z = +½), `|1⟩` spin down. Two-qubit
//! states are ordered `|q1 q2⟩` with qubit 1 as the most significant bit.
//!
//! The Hamiltonian (ħ = 1, rad/μs) is
//!
//! ```text
//! H = Σ Δᵢ sᵢᶻ + Σ (Rᵢ/2)(cos θᵢ σᵢˣ + sin θᵢ σᵢʸ) + J (s₁ᶻs₂ᶻ − ¼) [+ flip-flop]
//! Δᵢ = Δᵢ⁰ + Δⁿ vᵢ(t) + bᵢ,  Rᵢ = 2πΩᵢ⁰ (1 + δΩⁿ vᵢ(t)),  J = 2πJ⁰ (1 + δJⁿ (v₁ + v₂))
//! ```
//!
//! so `Ω⁰` and `J⁰` are ordinary frequencies in MHz and a drive of `Ω⁰` turns
//! the spin by 2πΩ⁰ per μs.

mod experiments;
mod gates;
pub mod su2;

pub use experiments::{
    cpmg_experiment, cpmg_spectroscopy, echo_experiment, fit_gaussian_decay, fit_rabi_envelope, rabi_experiment,
    rabi_pi_times, ramsey_experiment, BenchParams, CpmgResult, DecayCurve, DecayFit, RabiCurve,
};
pub use gates::{ideal_unitary, native_gate_schedule, GateParams, NativeGate};

use crate::noise::{NoiseSensitivities, NoiseTrajectory};
use crate::numerics::{matrix_exp, CMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};
use su2::Su2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("noise trajectory too short: step needs sample {needed}, trajectory has {available}")]
    TrajectoryUnderrun { needed: usize, available: usize },
    #[error("schedule for {schedule} qubit(s) got {given} noise trajectories / shifts")]
    QubitCountMismatch { schedule: usize, given: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Per-qubit controls during one segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitControl {
    /// Δ⁰, rad/μs.
    pub detuning: f64,
    /// Ω⁰, MHz (ordinary Rabi frequency).
    pub drive_amp: f64,
    /// θ, rad.
    pub drive_phase: f64,
    pub drive_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentControl {
    /// μs.
    pub duration: f64,
    pub qubits: Vec<QubitControl>,
    /// J⁰, MHz.
    pub exchange: f64,
    pub exchange_on: bool,
}

impl SegmentControl {
    pub fn idle(duration: f64, n_qubits: usize) -> Self {
        Self { duration, qubits: vec![QubitControl::default(); n_qubits], exchange: 0.0, exchange_on: false }
    }

    /// Square resonant drive on one qubit of an `n_qubits` register.
    pub fn drive(duration: f64, n_qubits: usize, qubit: usize, amp_mhz: f64, phase: f64) -> Self {
        let mut s = Self::idle(duration, n_qubits);
        s.qubits[qubit] = QubitControl { detuning: 0.0, drive_amp: amp_mhz, drive_phase: phase, drive_on: true };
        s
    }

    pub fn exchange(duration: f64, j0_mhz: f64) -> Self {
        let mut s = Self::idle(duration, 2);
        s.exchange = j0_mhz;
        s.exchange_on = true;
        s
    }

    fn any_drive(&self) -> bool {
        self.qubits.iter().any(|q| q.drive_on)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Pulse(SegmentControl),
    /// Exact frame change `exp(−i angle Z/2)` on one qubit, zero duration.
    VirtualZ { qubit: usize, angle: f64 },
}

/// Piecewise-constant control sequence with its noise couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub n_qubits: usize,
    pub segments: Vec<Segment>,
    /// Integration step, μs. Segments shorter than `dt` take one step.
    pub dt: f64,
    /// Per-qubit couplings; `sigma_b` is ignored here (shifts are passed to [`evolve`]).
    pub couplings: Vec<NoiseSensitivities>,
    /// δJⁿ of the exchange pair.
    pub pair_d_j_n: f64,
    /// Frequency difference ωᵢ − ωⱼ (rad/μs) enabling the flip-flop exchange term.
    pub flip_flop: Option<f64>,
}

impl ControlSchedule {
    pub fn new(n_qubits: usize, dt: f64, couplings: Vec<NoiseSensitivities>) -> Self {
        Self { n_qubits, segments: Vec::new(), dt, couplings, pair_d_j_n: 0.0, flip_flop: None }
    }

    pub fn push(&mut self, seg: SegmentControl) -> &mut Self {
        if seg.duration > 0.0 {
            self.segments.push(Segment::Pulse(seg));
        }
        self
    }

    pub fn push_virtual_z(&mut self, qubit: usize, angle: f64) -> &mut Self {
        self.segments.push(Segment::VirtualZ { qubit, angle });
        self
    }

    pub fn extend(&mut self, other: &ControlSchedule) -> &mut Self {
        self.segments.extend(other.segments.iter().cloned());
        self
    }

    pub fn duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Pulse(c) => c.duration,
                Segment::VirtualZ { .. } => 0.0,
            })
            .sum()
    }

    /// Noise samples at spacing `dt_noise` the schedule consumes.
    pub fn samples_needed(&self, dt_noise: f64) -> usize {
        let mut t = 0.0;
        let mut last = 0usize;
        for s in &self.segments {
            if let Segment::Pulse(c) = s {
                let (steps, h) = self.steps_of(c.duration);
                let tl = t + (steps - 1) as f64 * h;
                last = last.max(sample_index(tl, dt_noise));
                t += c.duration;
            }
        }
        last + 1
    }

    fn steps_of(&self, duration: f64) -> (usize, f64) {
        let steps = ((duration / self.dt).round() as usize).max(1);
        (steps, duration / steps as f64)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.n_qubits == 1 || self.n_qubits == 2) {
            return Err(DynamicsError::InvalidSchedule(format!("{} qubits unsupported", self.n_qubits)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidSchedule(format!("dt = {} must be positive", self.dt)));
        }
        if self.couplings.len() != self.n_qubits {
            return Err(DynamicsError::InvalidSchedule("one coupling set per qubit required".into()));
        }
        for s in &self.segments {
            match s {
                Segment::Pulse(c) => {
                    if !(c.duration > 0.0 && c.duration.is_finite()) {
                        return Err(DynamicsError::InvalidSchedule(format!("segment duration {}", c.duration)));
                    }
                    if c.qubits.len() != self.n_qubits {
                        return Err(DynamicsError::InvalidSchedule("segment qubit count mismatch".into()));
                    }
                    if c.exchange_on && self.n_qubits != 2 {
                        return Err(DynamicsError::InvalidSchedule("exchange needs two qubits".into()));
                    }
                }
                Segment::VirtualZ { qubit, .. } => {
                    if *qubit >= self.n_qubits {
                        return Err(DynamicsError::InvalidSchedule(format!("virtual Z on qubit {qubit}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn sample_index(t: f64, dt_noise: f64) -> usize {
    (t / dt_noise + 1e-9).floor() as usize
}

/// Unitary of a (noisy) schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub matrix: CMatrix,
}

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ‖U†U − I‖₂.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        crate::numerics::norm2(&(self.matrix.adjoint() * &self.matrix - CMatrix::identity(d, d)))
    }

    /// min over φ of ‖e^{iφ}U − V‖_F.
    pub fn phase_distance(&self, other: &CMatrix) -> f64 {
        let ov: C64 = (self.matrix.adjoint() * other).trace();
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
        (&self.matrix * phase - other).norm()
    }

    /// Probability of finding basis state `out` after starting in basis state `inp`.
    pub fn transition_probability(&self, inp: usize, out: usize) -> f64 {
        self.matrix[(out, inp)].norm_sqr()
    }
}

static STEP_WARNED: AtomicBool = AtomicBool::new(false);

fn warn_step(phase: f64) {
    if phase > 0.05 && !STEP_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("integration step rotates by {phase:.3} rad (> 0.05); consider a smaller dt");
    }
}

struct NoiseView<'a> {
    traj: &'a [&'a NoiseTrajectory],
    start: usize,
    dt_noise: f64,
}

impl NoiseView<'_> {
    #[inline]
    fn index(&self, t: f64) -> usize {
        self.start + sample_index(t, self.dt_noise)
    }

    #[inline]
    fn value(&self, q: usize, idx: usize) -> f64 {
        if self.traj.is_empty() { 0.0 } else { self.traj[q].values()[idx] }
    }

    /// Σ v over `steps` consecutive steps of length `h` from relative time
    /// `t0`, when those steps map one-to-one onto consecutive samples.
    fn contiguous_sum(&self, q: usize, t0: f64, steps: usize, h: f64) -> Option<f64> {
        if self.traj.is_empty() {
            return Some(0.0);
        }
        if (h - self.dt_noise).abs() > 1e-12 * self.dt_noise {
            return None;
        }
        let x = t0 / self.dt_noise;
        if (x - x.round()).abs() > 1e-6 {
            return None;
        }
        let i0 = self.start + x.round() as usize;
        Some(self.traj[q].window_sum(i0, i0 + steps))
    }
}

/// Propagator of `schedule` under the given noise.
///
/// `noise` holds one trajectory per qubit (an empty slice means no 1/f
/// noise); step `k` of the schedule, starting at relative time tₖ, uses sample
/// `start_index + ⌊tₖ/dt_noise⌋` (zero-order hold). `b_shift` are the static
/// nuclear shifts in rad/μs.
pub fn evolve(
    schedule: &ControlSchedule,
    noise: &[&NoiseTrajectory],
    b_shift: &[f64],
    start_index: usize,
) -> Result<Propagator, DynamicsError> {
    schedule.validate()?;
    let nq = schedule.n_qubits;
    if !(noise.is_empty() || noise.len() == nq) {
        return Err(DynamicsError::QubitCountMismatch { schedule: nq, given: noise.len() });
    }
    if b_shift.len() != nq {
        return Err(DynamicsError::QubitCountMismatch { schedule: nq, given: b_shift.len() });
    }
    let dt_noise = noise.first().map(|t| t.dt).unwrap_or(schedule.dt);
    if let Some(avail) = noise.iter().map(|t| t.len()).min() {
        let needed = start_index + schedule.samples_needed(dt_noise);
        if needed > avail {
            return Err(DynamicsError::TrajectoryUnderrun { needed: needed - 1, available: avail });
        }
    }
    let view = NoiseView { traj: noise, start: start_index, dt_noise };
    let t_offset = start_index as f64 * dt_noise;

    let dim = 1usize << nq;
    let mut u = CMatrix::identity(dim, dim);
    let mut t = 0.0;
    for seg in &schedule.segments {
        match seg {
            Segment::VirtualZ { qubit, angle } => {
                let z = embed_single(&Su2::rz(*angle).to_matrix(), *qubit, nq);
                u = z * u;
            }
            Segment::Pulse(c) => {
                let su = if nq == 1 {
                    single_qubit_segment(schedule, c, 0, &view, b_shift[0], t).to_matrix()
                } else if !c.exchange_on {
                    let u1 = single_qubit_segment(schedule, c, 0, &view, b_shift[0], t).to_matrix();
                    let u2 = single_qubit_segment(schedule, c, 1, &view, b_shift[1], t).to_matrix();
                    u1.kronecker(&u2)
                } else if c.any_drive() {
                    generic_two_qubit_segment(schedule, c, &view, b_shift, t, t_offset)
                } else if let Some(dw) = schedule.flip_flop {
                    flip_flop_segment(schedule, c, &view, b_shift, t, t_offset, dw)
                } else {
                    ising_segment(schedule, c, &view, b_shift, t)
                };
                u = su * u;
                t += c.duration;
            }
        }
    }
    Ok(Propagator { matrix: u })
}

fn embed_single(m: &CMatrix, qubit: usize, nq: usize) -> CMatrix {
    if nq == 1 {
        return m.clone();
    }
    let id = CMatrix::identity(2, 2);
    if qubit == 0 { m.kronecker(&id) } else { id.kronecker(m) }
}

fn single_qubit_segment(
    sched: &ControlSchedule,
    c: &SegmentControl,
    q: usize,
    view: &NoiseView,
    b: f64,
    t0: f64,
) -> Su2 {
    let (steps, h) = sched.steps_of(c.duration);
    let qc = &c.qubits[q];
    let cp = &sched.couplings[q];
    if !qc.drive_on {
        if let Some(sum) = view.contiguous_sum(q, t0, steps, h) {
            let phase = (qc.detuning + b) * h * steps as f64 + cp.delta_n * h * sum;
            return Su2::rz(phase);
        }
        let mut phase = 0.0;
        for k in 0..steps {
            let v = view.value(q, view.index(t0 + k as f64 * h));
            phase += (qc.detuning + cp.delta_n * v + b) * h;
        }
        return Su2::rz(phase);
    }
    let (sin_t, cos_t) = qc.drive_phase.sin_cos();
    let mut u = Su2::IDENTITY;
    let mut max_rot: f64 = 0.0;
    for k in 0..steps {
        let v = view.value(q, view.index(t0 + k as f64 * h));
        let delta = qc.detuning + cp.delta_n * v + b;
        let rabi = 2.0 * PI * qc.drive_amp * (1.0 + cp.d_omega_n * v);
        let (hx, hy, hz) = (0.5 * rabi * cos_t, 0.5 * rabi * sin_t, 0.5 * delta);
        max_rot = max_rot.max((hx * hx + hy * hy + hz * hz).sqrt() * h);
        u = u.then(Su2::from_field(hx, hy, hz, h));
    }
    warn_step(max_rot);
    u
}

/// Energies of |00⟩, |01⟩, |10⟩, |11⟩ for the Ising part.
#[inline]
fn ising_energies(d1: f64, d2: f64, j: f64) -> [f64; 4] {
    [0.5 * (d1 + d2), 0.5 * (d1 - d2) - 0.5 * j, 0.5 * (d2 - d1) - 0.5 * j, -0.5 * (d1 + d2)]
}

struct StepFields {
    d1: f64,
    d2: f64,
    j: f64,
    v1: f64,
    v2: f64,
}

fn step_fields(sched: &ControlSchedule, c: &SegmentControl, view: &NoiseView, b: &[f64], t: f64) -> StepFields {
    let idx = view.index(t);
    let v1 = view.value(0, idx);
    let v2 = view.value(1, idx);
    let cp = &sched.couplings;
    let d1 = c.qubits[0].detuning + cp[0].delta_n * v1 + b[0];
    let d2 = c.qubits[1].detuning + cp[1].delta_n * v2 + b[1];
    let j = if c.exchange_on { 2.0 * PI * c.exchange * (1.0 + sched.pair_d_j_n * (v1 + v2)) } else { 0.0 };
    StepFields { d1, d2, j, v1, v2 }
}

fn ising_segment(sched: &ControlSchedule, c: &SegmentControl, view: &NoiseView, b: &[f64], t0: f64) -> CMatrix {
    let (steps, h) = sched.steps_of(c.duration);
    let mut phase = [0.0f64; 4];
    let mut max_rot: f64 = 0.0;
    for k in 0..steps {
        let f = step_fields(sched, c, view, b, t0 + k as f64 * h);
        let e = ising_energies(f.d1, f.d2, f.j);
        for (p, ei) in phase.iter_mut().zip(e) {
            *p += ei * h;
        }
        max_rot = max_rot.max(f.j.abs() * h);
    }
    warn_step(max_rot);
    let mut u = CMatrix::zeros(4, 4);
    for (i, p) in phase.iter().enumerate() {
        u[(i, i)] = C64::from_polar(1.0, -p);
    }
    u
}

fn flip_flop_segment(
    sched: &ControlSchedule,
    c: &SegmentControl,
    view: &NoiseView,
    b: &[f64],
    t0: f64,
    t_offset: f64,
    dw: f64,
) -> CMatrix {
    let (steps, h) = sched.steps_of(c.duration);
    let mut p00 = 0.0;
    let mut p11 = 0.0;
    let mut block = Su2::IDENTITY;
    let mut block_phase = 0.0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let f = step_fields(sched, c, view, b, t);
        let e = ising_energies(f.d1, f.d2, f.j);
        p00 += e[0] * h;
        p11 += e[3] * h;
        // ⟨01|H|10⟩ = (J/2) e^{iδω t}, evaluated mid-step
        let tm = t_offset + t + 0.5 * h;
        let g = C64::from_polar(0.5 * f.j, dw * tm);
        block_phase += 0.5 * (e[1] + e[2]) * h;
        block = block.then(Su2::from_field(g.re, -g.im, 0.5 * (e[1] - e[2]), h));
    }
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = C64::from_polar(1.0, -p00);
    u[(3, 3)] = C64::from_polar(1.0, -p11);
    let m = block.to_matrix() * C64::from_polar(1.0, -block_phase);
    u[(1, 1)] = m[(0, 0)];
    u[(1, 2)] = m[(0, 1)];
    u[(2, 1)] = m[(1, 0)];
    u[(2, 2)] = m[(1, 1)];
    u
}

fn generic_two_qubit_segment(
    sched: &ControlSchedule,
    c: &SegmentControl,
    view: &NoiseView,
    b: &[f64],
    t0: f64,
    t_offset: f64,
) -> CMatrix {
    let (steps, h) = sched.steps_of(c.duration);
    let sx = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let sy = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
    let id = CMatrix::identity(2, 2);
    let ops = [
        (sx.kronecker(&id), sy.kronecker(&id)),
        (id.kronecker(&sx), id.kronecker(&sy)),
    ];
    let mut u = CMatrix::identity(4, 4);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let f = step_fields(sched, c, view, b, t);
        let e = ising_energies(f.d1, f.d2, f.j);
        let mut hm = CMatrix::zeros(4, 4);
        for (i, ei) in e.iter().enumerate() {
            hm[(i, i)] = C64::new(*ei, 0.0);
        }
        for (q, (ox, oy)) in ops.iter().enumerate() {
            let qc = &c.qubits[q];
            if qc.drive_on {
                let v = if q == 0 { f.v1 } else { f.v2 };
                let rabi = 2.0 * PI * qc.drive_amp * (1.0 + sched.couplings[q].d_omega_n * v);
                let (s, co) = qc.drive_phase.sin_cos();
                hm += ox * C64::new(0.5 * rabi * co, 0.0) + oy * C64::new(0.5 * rabi * s, 0.0);
            }
        }
        if let Some(dw) = sched.flip_flop {
            let g = C64::from_polar(0.5 * f.j, dw * (t_offset + t + 0.5 * h));
            hm[(1, 2)] += g;
            hm[(2, 1)] += g.conj();
        }
        let step = matrix_exp(&(hm * C64::new(0.0, -h))).expect("finite Hamiltonian");
        u = step * u;
    }
    u
}
