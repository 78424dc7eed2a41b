//! Native gate set: I, X90, Y90 (square EDSR pulses) and CZ (square exchange pulse).

use super::{ControlSchedule, SegmentControl};
use crate::noise::NoiseSensitivities;
use crate::numerics::{CMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NativeGate {
    I,
    X90,
    Y90,
    CZ,
}

impl NativeGate {
    pub const ALL: [NativeGate; 4] = [NativeGate::I, NativeGate::X90, NativeGate::Y90, NativeGate::CZ];

    pub fn n_qubits(self) -> usize {
        if self == NativeGate::CZ { 2 } else { 1 }
    }

    pub fn name(self) -> &'static str {
        match self {
            NativeGate::I => "I",
            NativeGate::X90 => "X90",
            NativeGate::Y90 => "Y90",
            NativeGate::CZ => "CZ",
        }
    }
}

impl fmt::Display for NativeGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NativeGate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(NativeGate::I),
            "X90" => Ok(NativeGate::X90),
            "Y90" => Ok(NativeGate::Y90),
            "CZ" => Ok(NativeGate::CZ),
            other => Err(format!("unknown gate `{other}` (expected I, X90, Y90 or CZ)")),
        }
    }
}

/// Timing and coupling parameters shared by the native gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Single-qubit gate time, μs. X90/Y90 amplitudes follow from it.
    pub t_g_1q: f64,
    /// CZ slot, μs. The exchange pulse lasts 1/(2J⁰); any remainder of the
    /// slot is idle time.
    pub t_g_2q: f64,
    /// J⁰, MHz.
    pub j0: f64,
    /// Integration step, μs.
    pub dt: f64,
    /// Per-qubit couplings (one entry for single-qubit gates suffices).
    pub couplings: Vec<NoiseSensitivities>,
    pub pair_d_j_n: f64,
    pub flip_flop: Option<f64>,
}

impl GateParams {
    pub fn noiseless(t_g_1q: f64, t_g_2q: f64, j0: f64, dt: f64) -> Self {
        Self {
            t_g_1q,
            t_g_2q,
            j0,
            dt,
            couplings: vec![NoiseSensitivities::quiet(); 2],
            pair_d_j_n: 0.0,
            flip_flop: None,
        }
    }

    pub fn gate_time(&self, gate: NativeGate) -> f64 {
        match gate {
            NativeGate::CZ => self.t_g_2q.max(self.exchange_time()),
            _ => self.t_g_1q,
        }
    }

    pub fn exchange_time(&self) -> f64 {
        0.5 / self.j0
    }

    /// Drive amplitude (MHz) for a π/2 turn in `t_g_1q`.
    pub fn pi2_amplitude(&self) -> f64 {
        0.25 / self.t_g_1q
    }
}

/// Control schedule of a native gate. Noiseless evolution equals
/// [`ideal_unitary`] up to a global phase.
pub fn native_gate_schedule(gate: NativeGate, p: &GateParams) -> ControlSchedule {
    let nq = gate.n_qubits();
    let mut couplings = p.couplings.clone();
    couplings.resize(nq.max(couplings.len()), NoiseSensitivities::quiet());
    couplings.truncate(nq);
    let mut s = ControlSchedule::new(nq, p.dt, couplings);
    match gate {
        NativeGate::I => {
            s.push(SegmentControl::idle(p.t_g_1q, 1));
        }
        NativeGate::X90 => {
            s.push(SegmentControl::drive(p.t_g_1q, 1, 0, p.pi2_amplitude(), 0.0));
        }
        NativeGate::Y90 => {
            s.push(SegmentControl::drive(p.t_g_1q, 1, 0, p.pi2_amplitude(), FRAC_PI_2));
        }
        NativeGate::CZ => {
            s.pair_d_j_n = p.pair_d_j_n;
            s.flip_flop = p.flip_flop;
            let t_ex = p.exchange_time();
            s.push(SegmentControl::exchange(t_ex, p.j0));
            let pad = p.t_g_2q - t_ex;
            if pad > 1e-12 {
                s.push(SegmentControl::idle(pad, 2));
            }
            // exp(iπ(s₁ᶻ + s₂ᶻ)/2)
            s.push_virtual_z(0, -FRAC_PI_2);
            s.push_virtual_z(1, -FRAC_PI_2);
        }
    }
    s
}

/// Target unitary of a native gate.
pub fn ideal_unitary(gate: NativeGate) -> CMatrix {
    let c = FRAC_PI_4.cos();
    let s = FRAC_PI_4.sin();
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    match gate {
        NativeGate::I => CMatrix::identity(2, 2),
        NativeGate::X90 => CMatrix::from_row_slice(2, 2, &[r(c), i(-s), i(-s), r(c)]),
        NativeGate::Y90 => CMatrix::from_row_slice(2, 2, &[r(c), r(-s), r(s), r(c)]),
        NativeGate::CZ => {
            let mut m = CMatrix::identity(4, 4);
            m[(3, 3)] = r(-1.0);
            m
        }
    }
}
