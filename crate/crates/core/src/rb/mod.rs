//! Two-qubit Clifford machinery and (interleaved) randomized benchmarking on
//! the compressed gate model.

mod clifford;

use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clifford::{
    clifford_group, invert_clifford, phase_overlap, sample_clifford, CliffordElement, CliffordGroup, CompileCosts,
    NativeOp, Pauli2, Tableau, CLIFFORD_GROUP_ORDER,
};
use clifford::rz;

use crate::channels::{average_gate_fidelity, ptm_from_unitary};
use crate::dynamics::{ideal_unitary, NativeGate, Propagator};
use crate::numerics::{least_squares_fit, seeded_rng, standard_normal, stream_id, CMatrix, FitResult, C64};
use crate::tcqpt::{sample_compressed_unitary, CompressedGateModel, QptError, RSharing};

const DOMAIN_RB: u32 = 0x301;
const DOMAIN_EXACT: u32 = 0x302;
const DOMAIN_RB_SHOTS: u32 = 0x303;

#[derive(Debug, Error)]
pub enum RbError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] QptError),
    #[error("{0} curve has no usable fit")]
    MissingFit(Variant),
    #[error("reference decay p = {0} is not positive")]
    NonPositiveDecay(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Reference,
    Interleaved,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Reference => "reference",
            Variant::Interleaved => "interleaved",
        })
    }
}

/// Where the residual ZZ exchange error is inserted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualExchange {
    /// Once after every layer holding a physical single-qubit gate.
    #[default]
    PerLayer,
    /// Once after every physical single-qubit gate.
    PerGate,
}

/// Noise strength ε = t_g/T₂* of each gate class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateEpsilon {
    pub one_qubit: f64,
    pub two_qubit: f64,
}

impl GateEpsilon {
    pub fn from_t2_star(t2_star: f64, t_g_1q: f64, t_g_2q: f64) -> Self {
        GateEpsilon { one_qubit: t_g_1q / t2_star, two_qubit: t_g_2q / t2_star }
    }

    pub fn of(&self, gate: NativeGate) -> f64 {
        if gate == NativeGate::CZ { self.two_qubit } else { self.one_qubit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    /// Clifford counts, ascending.
    pub lengths: Vec<usize>,
    pub n_seq: usize,
    pub eps: GateEpsilon,
    pub h_ex: f64,
    pub residual: ResidualExchange,
    pub sharing: RSharing,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl RbConfig {
    /// 100 ns single-qubit gates, 50 ns CZ, h_ex = 0.086, 30 sequences × 8 lengths.
    pub fn standard(t2_star: f64) -> Self {
        RbConfig {
            lengths: vec![1, 2, 4, 8, 16, 32, 64, 128],
            n_seq: 30,
            eps: GateEpsilon::from_t2_star(t2_star, 0.1, 0.05),
            h_ex: 0.086,
            residual: ResidualExchange::PerLayer,
            sharing: RSharing::PerQubit,
            shots: None,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), RbError> {
        let bad = |m: String| Err(RbError::InvalidConfig(m));
        if self.lengths.is_empty() {
            return bad("lengths must not be empty".into());
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("lengths must be strictly ascending, got {:?}", self.lengths));
        }
        if self.n_seq == 0 {
            return bad("n_seq must be at least 1".into());
        }
        if !(self.eps.one_qubit >= 0.0 && self.eps.two_qubit >= 0.0) {
            return bad(format!("eps must be non-negative, got {:?}", self.eps));
        }
        if !self.h_ex.is_finite() {
            return bad(format!("h_ex must be finite, got {}", self.h_ex));
        }
        if self.shots == Some(0) {
            return bad("shots must be positive".into());
        }
        Ok(())
    }
}

/// One time step of a compiled circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Per-qubit op lists, at most one physical gate per qubit.
    Local([Vec<NativeOp>; 2]),
    Cz,
}

impl Layer {
    pub fn physical_count(&self) -> usize {
        match self {
            Layer::Local(slots) => slots.iter().flatten().filter(|o| !o.is_virtual()).count(),
            Layer::Cz => 1,
        }
    }
}

/// Pack native ops into layers, keeping per-qubit order.
pub fn layer_circuit(ops: &[NativeOp]) -> Vec<Layer> {
    let mut layers = Vec::new();
    let mut slots: [Vec<NativeOp>; 2] = [Vec::new(), Vec::new()];
    let has_phys = |s: &Vec<NativeOp>| s.iter().any(|o| !o.is_virtual());
    let flush = |slots: &mut [Vec<NativeOp>; 2], layers: &mut Vec<Layer>| {
        if !slots[0].is_empty() || !slots[1].is_empty() {
            layers.push(Layer::Local(std::mem::take(slots)));
        }
    };
    for op in ops {
        match op.qubit() {
            None => {
                flush(&mut slots, &mut layers);
                layers.push(Layer::Cz);
            }
            Some(q) => {
                if !op.is_virtual() && has_phys(&slots[q]) {
                    flush(&mut slots, &mut layers);
                }
                slots[q].push(*op);
            }
        }
    }
    flush(&mut slots, &mut layers);
    layers
}

/// Native ops of one RB sequence, one block per Clifford (and per
/// interleaved CZ), final inverse included.
pub fn rb_sequence<R: Rng + ?Sized>(length: usize, interleave_cz: bool, rng: &mut R) -> Vec<Vec<NativeOp>> {
    let group = clifford_group();
    let cz = clifford::op_tableau(NativeOp::CZ);
    let mut blocks = Vec::new();
    let mut t = Tableau::identity();
    for _ in 0..length {
        let c = group.sample(rng);
        blocks.push(c.native_sequence.clone());
        t = t.then(&c.tableau);
        if interleave_cz {
            blocks.push(vec![NativeOp::CZ]);
            t = t.then(&cz);
        }
    }
    blocks.push(group.invert(&t).native_sequence.clone());
    blocks
}

/// Layers of a blocked circuit; layers never span two blocks.
pub fn layer_blocks(blocks: &[Vec<NativeOp>]) -> Vec<Layer> {
    blocks.iter().flat_map(|b| layer_circuit(b)).collect()
}

/// Error unitaries of one circuit realization.
#[derive(Debug, Clone)]
pub struct NoisyGateSet {
    /// Noisy single-qubit gates `E·G`, indexed [gate][qubit] for I, X90, Y90.
    local: [[CMatrix; 2]; 3],
    cz: CMatrix,
    zz: CMatrix,
    residual: ResidualExchange,
}

fn local_index(gate: NativeGate) -> usize {
    match gate {
        NativeGate::I => 0,
        NativeGate::X90 => 1,
        _ => 2,
    }
}

impl NoisyGateSet {
    /// Draw the Gaussian fields and build every gate's noisy unitary.
    pub fn sample<R: Rng + ?Sized>(
        model: &CompressedGateModel,
        eps: GateEpsilon,
        h_ex: f64,
        residual: ResidualExchange,
        sharing: RSharing,
        rng: &mut R,
    ) -> Result<Self, RbError> {
        let shared = [standard_normal(rng), standard_normal(rng)];
        let mut draw = |q: usize| if sharing == RSharing::PerQubit { shared[q] } else { standard_normal(rng) };
        let mut local: [[CMatrix; 2]; 3] = Default::default();
        for g in [NativeGate::I, NativeGate::X90, NativeGate::Y90] {
            for q in 0..2 {
                let e = sample_compressed_unitary(model, g, &[draw(q)], eps.of(g))?;
                local[local_index(g)][q] = e * ideal_unitary(g);
            }
        }
        let r = [draw(0), draw(1)];
        let cz = sample_compressed_unitary(model, NativeGate::CZ, &r, eps.two_qubit)? * ideal_unitary(NativeGate::CZ);
        Ok(NoisyGateSet { local, cz, zz: zz_unitary(h_ex), residual })
    }

    /// Noiseless gates.
    pub fn ideal() -> Self {
        let g = |gate| [ideal_unitary(gate), ideal_unitary(gate)];
        NoisyGateSet {
            local: [g(NativeGate::I), g(NativeGate::X90), g(NativeGate::Y90)],
            cz: ideal_unitary(NativeGate::CZ),
            zz: CMatrix::identity(4, 4),
            residual: ResidualExchange::PerLayer,
        }
    }

    /// Unitary of one layer, residual exchange included.
    pub fn layer_unitary(&self, layer: &Layer) -> CMatrix {
        let slots = match layer {
            Layer::Cz => return self.cz.clone(),
            Layer::Local(s) => s,
        };
        let n_phys = layer.physical_count();
        let mut m: [CMatrix; 2] = [CMatrix::identity(2, 2), CMatrix::identity(2, 2)];
        for q in 0..2 {
            let mut phys = false;
            for op in &slots[q] {
                let g = match op {
                    NativeOp::X90(_) => &self.local[1][q],
                    NativeOp::Y90(_) => &self.local[2][q],
                    NativeOp::Z { quarter_turns, .. } => {
                        m[q] = rz(*quarter_turns as f64 * std::f64::consts::FRAC_PI_2) * &m[q];
                        continue;
                    }
                    NativeOp::CZ => unreachable!("CZ in a local layer"),
                };
                phys = true;
                m[q] = g * &m[q];
            }
            if !phys && n_phys > 0 {
                m[q] = &self.local[0][q] * &m[q];
            }
        }
        let mut u = m[0].kronecker(&m[1]);
        let n_zz = match self.residual {
            _ if n_phys == 0 => 0,
            ResidualExchange::PerLayer => 1,
            ResidualExchange::PerGate => n_phys,
        };
        for _ in 0..n_zz {
            u = &self.zz * u;
        }
        u
    }

    /// Layer unitaries of a circuit.
    pub fn circuit_unitaries(&self, layers: &[Layer]) -> Vec<CMatrix> {
        layers.iter().map(|l| self.layer_unitary(l)).collect()
    }
}

/// exp(−i h Z⊗Z).
pub fn zz_unitary(h: f64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (k, s) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
        m[(k, k)] = C64::from_polar(1.0, -h * s);
    }
    m
}

/// |⟨00|U_n⋯U_1|00⟩|² by state-vector evolution.
pub fn return_probability(unitaries: &[CMatrix]) -> f64 {
    let mut psi = nalgebra::DVector::from_element(4, C64::new(0.0, 0.0));
    psi[0] = C64::new(1.0, 0.0);
    for u in unitaries {
        psi = u * psi;
    }
    psi[0].norm_sqr().clamp(0.0, 1.0)
}

/// Same probability by density-matrix evolution.
pub fn return_probability_density(unitaries: &[CMatrix]) -> f64 {
    let mut rho = CMatrix::zeros(4, 4);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    for u in unitaries {
        rho = u * rho * u.adjoint();
    }
    rho[(0, 0)].re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub p_stderr: Option<f64>,
    /// Covariance of (A, p, B).
    pub covariance: Option<Vec<Vec<f64>>>,
    pub converged: bool,
    /// Data do not decay; p is not identifiable.
    pub degenerate: bool,
}

/// Fit `A·p^m + B`, B seeded at 1/4.
pub fn fit_rb_decay(lengths: &[usize], means: &[f64]) -> Result<RbFit, String> {
    if lengths.len() != means.len() {
        return Err(format!("{} lengths but {} means", lengths.len(), means.len()));
    }
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        return Ok(RbFit {
            a: 0.0,
            p: 1.0,
            b: hi,
            p_stderr: None,
            covariance: None,
            converged: false,
            degenerate: true,
        });
    }
    if lengths.len() < 3 {
        return Err(format!("need at least 3 lengths to fit, got {}", lengths.len()));
    }
    let xs: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let b0 = 0.25;
    let a0 = (means[0] - b0).max(hi - lo);
    // slope of log(y − B) between the ends
    let (y0, y1) = ((means[0] - b0).max(1e-6), (means[means.len() - 1] - b0).max(1e-6));
    let span = xs[xs.len() - 1] - xs[0];
    let p0 = ((y1 / y0).ln() / span).exp().clamp(0.5, 0.9999);
    let fit: FitResult = least_squares_fit(|m, q| q[0] * q[1].powf(m) + q[2], &xs, means, &[a0, p0, b0])
        .map_err(|e| e.to_string())?;
    let q = &fit.params;
    if !q.iter().all(|v| v.is_finite()) {
        return Err("fit diverged".into());
    }
    Ok(RbFit {
        a: q[0],
        p: q[1],
        b: q[2],
        p_stderr: fit.stderr(1),
        covariance: fit.covariance.clone(),
        converged: fit.converged,
        degenerate: fit.covariance_degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub variant: Variant,
    pub lengths: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `per_sequence[i][s]`: sequence `s` at length `lengths[i]`.
    pub per_sequence: Vec<Vec<f64>>,
    pub fit: Option<RbFit>,
    pub fit_error: Option<String>,
}

impl RbCurve {
    fn from_values(variant: Variant, lengths: Vec<usize>, per_sequence: Vec<Vec<f64>>) -> Self {
        let (mean, stderr): (Vec<f64>, Vec<f64>) = per_sequence
            .iter()
            .map(|v| {
                let n = v.len() as f64;
                let m = v.iter().sum::<f64>() / n;
                let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                (m, (var / n).sqrt())
            })
            .unzip();
        let (fit, fit_error) = match fit_rb_decay(&lengths, &mean) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e)),
        };
        RbCurve { variant, lengths, mean, stderr, per_sequence, fit, fit_error }
    }

    fn decay(&self) -> Result<&RbFit, RbError> {
        self.fit.as_ref().filter(|f| !f.degenerate).ok_or(RbError::MissingFit(self.variant))
    }
}

/// Survival probabilities of one nested sequence: length `lengths[i]` runs
/// the first `lengths[i]` Cliffords of a single random stream, then its own
/// inverse.
pub fn nested_survivals<R: Rng + ?Sized>(
    gates: &NoisyGateSet,
    lengths: &[usize],
    interleave_cz: bool,
    rng: &mut R,
) -> Vec<f64> {
    let group = clifford_group();
    let cz_tableau = clifford::op_tableau(NativeOp::CZ);
    let cz = gates.layer_unitary(&Layer::Cz);
    let run = |psi: &mut nalgebra::DVector<C64>, ops: &[NativeOp]| {
        for l in layer_circuit(ops) {
            *psi = gates.layer_unitary(&l) * &*psi;
        }
    };
    let mut psi = nalgebra::DVector::from_element(4, C64::new(0.0, 0.0));
    psi[0] = C64::new(1.0, 0.0);
    let mut t = Tableau::identity();
    let mut done = 0;
    let mut out = Vec::with_capacity(lengths.len());
    for &m in lengths {
        while done < m {
            let c = group.sample(rng);
            run(&mut psi, &c.native_sequence);
            t = t.then(&c.tableau);
            if interleave_cz {
                psi = &cz * psi;
                t = t.then(&cz_tableau);
            }
            done += 1;
        }
        let mut phi = psi.clone();
        run(&mut phi, &group.invert(&t).native_sequence);
        out.push(phi[0].norm_sqr().clamp(0.0, 1.0));
    }
    out
}

/// Simulate one RB curve. Sequence `s` draws its fields and Clifford stream
/// from the same random stream for both variants, and all lengths of a
/// sequence share that stream, so reference and interleaved curves are
/// evaluated with common random numbers.
pub fn run_rb(model: &CompressedGateModel, cfg: &RbConfig, variant: Variant) -> Result<RbCurve, RbError> {
    cfg.validate()?;
    let interleave = variant == Variant::Interleaved;
    let by_seq: Vec<Vec<f64>> = (0..cfg.n_seq)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>, RbError> {
            let mut rng = seeded_rng(cfg.seed, stream_id(DOMAIN_RB, s as u64));
            let gates = NoisyGateSet::sample(model, cfg.eps, cfg.h_ex, cfg.residual, cfg.sharing, &mut rng)?;
            let exact = nested_survivals(&gates, &cfg.lengths, interleave, &mut rng);
            Ok(match cfg.shots {
                None => exact,
                Some(n) => {
                    let mut shot_rng = seeded_rng(cfg.seed, stream_id(DOMAIN_RB_SHOTS, s as u64));
                    exact
                        .iter()
                        .map(|&p| Binomial::new(n, p).expect("p in [0, 1]").sample(&mut shot_rng) as f64 / n as f64)
                        .collect()
                }
            })
        })
        .collect::<Result<_, _>>()?;
    let per_sequence = (0..cfg.lengths.len()).map(|i| by_seq.iter().map(|v| v[i]).collect()).collect();
    Ok(RbCurve::from_values(variant, cfg.lengths.clone(), per_sequence))
}

/// Average gate fidelity of the compressed CZ, averaged over field draws.
pub fn exact_cz_fidelity(
    model: &CompressedGateModel,
    eps_2q: f64,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64), RbError> {
    if n_draws < 2 {
        return Err(RbError::InvalidConfig("exact fidelity needs at least 2 draws".into()));
    }
    let f: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|k| -> Result<f64, RbError> {
            let mut rng = seeded_rng(seed, stream_id(DOMAIN_EXACT, k as u64));
            let r = [standard_normal(&mut rng), standard_normal(&mut rng)];
            let e = sample_compressed_unitary(model, NativeGate::CZ, &r, eps_2q)?;
            let ptm = ptm_from_unitary(&Propagator { matrix: e }).map_err(QptError::from)?;
            Ok(average_gate_fidelity(&ptm))
        })
        .collect::<Result<_, _>>()?;
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

pub const EXACT_FIDELITY_DRAWS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrbReport {
    pub p_ref: f64,
    pub p_ref_stderr: Option<f64>,
    pub p_int: f64,
    pub p_int_stderr: Option<f64>,
    /// (d−1)(1 − p_int/p_ref)/d.
    pub rb_infidelity: f64,
    pub rb_fidelity: f64,
    pub exact_fidelity: f64,
    pub exact_fidelity_stderr: f64,
    pub exact_infidelity: f64,
    /// rb_infidelity / exact_infidelity.
    pub ratio: f64,
    pub ref_covariance: Option<Vec<Vec<f64>>>,
    pub int_covariance: Option<Vec<Vec<f64>>>,
}

pub fn irb_report(
    reference: &RbCurve,
    interleaved: &RbCurve,
    model: &CompressedGateModel,
    eps_2q: f64,
    n_draws: usize,
    seed: u64,
) -> Result<IrbReport, RbError> {
    let fr = reference.decay()?;
    let fi = interleaved.decay()?;
    if fr.p <= 0.0 {
        return Err(RbError::NonPositiveDecay(fr.p));
    }
    let d = 4.0;
    let r = (d - 1.0) * (1.0 - fi.p / fr.p) / d;
    let (f_exact, f_err) = exact_cz_fidelity(model, eps_2q, n_draws, seed)?;
    let exact_inf = 1.0 - f_exact;
    Ok(IrbReport {
        p_ref: fr.p,
        p_ref_stderr: fr.p_stderr,
        p_int: fi.p,
        p_int_stderr: fi.p_stderr,
        rb_infidelity: r,
        rb_fidelity: (1.0 - r).clamp(0.0, 1.0),
        exact_fidelity: f_exact,
        exact_fidelity_stderr: f_err,
        exact_infidelity: exact_inf,
        ratio: if exact_inf > 0.0 { r / exact_inf } else { f64::NAN },
        ref_covariance: fr.covariance.clone(),
        int_covariance: fi.covariance.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(t2s: f64) -> RbConfig {
        RbConfig { lengths: vec![1, 4, 8, 16, 32], n_seq: 12, ..RbConfig::standard(t2s) }
    }

    #[test]
    fn layering_keeps_order() {
        let ops = [
            NativeOp::X90(0),
            NativeOp::Y90(1),
            NativeOp::Z { qubit: 0, quarter_turns: 1 },
            NativeOp::X90(0),
            NativeOp::CZ,
            NativeOp::Z { qubit: 1, quarter_turns: 2 },
        ];
        let l = layer_circuit(&ops);
        assert_eq!(l.len(), 4);
        assert_eq!(l[0].physical_count(), 2);
        assert_eq!(l[1].physical_count(), 1);
        assert_eq!(l[2], Layer::Cz);
        assert_eq!(l[3].physical_count(), 0);
        let g = NoisyGateSet::ideal();
        let want = ops.iter().fold(CMatrix::identity(4, 4), |u, o| o.unitary() * u);
        let got = g.circuit_unitaries(&l).iter().fold(CMatrix::identity(4, 4), |u, m| m * u);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn noiseless_sequences_return() {
        let mut rng = seeded_rng(5, 0);
        let g = NoisyGateSet::ideal();
        for len in [0, 1, 20] {
            for interleave in [false, true] {
                let blocks = rb_sequence(len, interleave, &mut rng);
                let p = return_probability(&g.circuit_unitaries(&layer_blocks(&blocks)));
                assert!((p - 1.0).abs() < 1e-9);
            }
        }
        let curve = run_rb(&CompressedGateModel::noiseless(), &RbConfig { h_ex: 0.0, ..quick(3.5) }, Variant::Reference)
            .unwrap();
        assert!(curve.per_sequence.iter().flatten().all(|p| (p - 1.0).abs() < 1e-9));
        assert!(curve.fit.unwrap().degenerate);
    }

    #[test]
    fn pure_state_matches_density_matrix() {
        let m = CompressedGateModel::published();
        let eps = GateEpsilon::from_t2_star(1.0, 0.1, 0.05);
        let mut rng = seeded_rng(6, 0);
        for _ in 0..10 {
            let g = NoisyGateSet::sample(&m, eps, 0.086, ResidualExchange::PerGate, RSharing::PerGate, &mut rng).unwrap();
            let us = g.circuit_unitaries(&layer_blocks(&rb_sequence(15, true, &mut rng)));
            let a = return_probability(&us);
            let b = return_probability_density(&us);
            assert!((a - b).abs() < 1e-10);
            assert!(a < 1.0);
        }
    }

    #[test]
    fn alternative_compilation_is_equivalent() {
        let alt = CliffordGroup::build(CompileCosts { x90: 10, y90: 25, ..CompileCosts::default() });
        let std = clifford_group();
        let mut differ = 0;
        for e in std.elements() {
            let a = alt.find(&e.tableau).unwrap();
            differ += usize::from(a.native_sequence != e.native_sequence);
            assert!((phase_overlap(&a.unitary, &e.unitary) - 1.0).abs() < 1e-9);
            let mut psi = nalgebra::DVector::from_fn(4, |k, _| C64::new(0.3 + k as f64, 0.1 * k as f64));
            psi /= C64::new(psi.norm(), 0.0);
            let pa = (&a.unitary * &psi).map(|z| z.norm_sqr());
            let pe = (&e.unitary * &psi).map(|z| z.norm_sqr());
            assert!((pa - pe).amax() < 1e-9);
        }
        assert!(differ > 1000);
    }

    #[test]
    fn depolarizing_decay_is_recovered() {
        // depolarizing after each Clifford: survival is exactly (3/4)q^m + 1/4 per sequence
        let q = 0.97;
        let g = clifford_group();
        let mut rng = seeded_rng(7, 0);
        let lengths = [1usize, 5, 10, 20, 40, 80];
        let means: Vec<f64> = lengths
            .iter()
            .map(|&m| {
                let mut acc = 0.0;
                for _ in 0..5 {
                    let mut rho = CMatrix::zeros(4, 4);
                    rho[(0, 0)] = C64::new(1.0, 0.0);
                    let mut t = Tableau::identity();
                    let mixed = CMatrix::identity(4, 4) * C64::new(0.25, 0.0);
                    for _ in 0..m {
                        let c = g.sample(&mut rng);
                        t = t.then(&c.tableau);
                        rho = &c.unitary * rho * c.unitary.adjoint() * C64::new(q, 0.0) + &mixed * C64::new(1.0 - q, 0.0);
                    }
                    let inv = g.invert(&t);
                    rho = &inv.unitary * rho * inv.unitary.adjoint();
                    acc += rho[(0, 0)].re;
                }
                acc / 5.0
            })
            .collect();
        let fit = fit_rb_decay(&lengths, &means).unwrap();
        assert!((fit.p / q - 1.0).abs() < 0.02, "{}", fit.p);
    }

    #[test]
    fn interleaved_decays_faster() {
        let m = CompressedGateModel::published();
        let cfg = RbConfig { n_seq: 400, ..quick(3.5) };
        let r = run_rb(&m, &cfg, Variant::Reference).unwrap();
        let i = run_rb(&m, &cfg, Variant::Interleaved).unwrap();
        for k in 1..cfg.lengths.len() {
            assert!(i.mean[k] <= r.mean[k] + 2.0 * r.stderr[k], "m = {}", cfg.lengths[k]);
        }
        assert!(r.mean.iter().all(|p| (0.0..=1.0).contains(p)));
        let rep = irb_report(&r, &i, &m, cfg.eps.two_qubit, 500, 1).unwrap();
        assert!(rep.rb_infidelity > 0.0);
        assert!(rep.exact_fidelity > 0.99 && rep.exact_fidelity < 1.0);
    }

    #[test]
    fn identical_curves_give_zero_infidelity() {
        let m = CompressedGateModel::published();
        let r = run_rb(&m, &quick(3.5), Variant::Reference).unwrap();
        let rep = irb_report(&r, &r, &m, 0.05 / 3.5, 100, 1).unwrap();
        assert_eq!(rep.rb_infidelity, 0.0);
    }

    #[test]
    fn shots_scatter_around_exact() {
        let m = CompressedGateModel::published();
        let exact = run_rb(&m, &quick(2.0), Variant::Reference).unwrap();
        let shot = run_rb(&m, &RbConfig { shots: Some(100_000), ..quick(2.0) }, Variant::Reference).unwrap();
        for (a, b) in exact.per_sequence.iter().flatten().zip(shot.per_sequence.iter().flatten()) {
            assert!((a - b).abs() < 0.01);
        }
    }

    #[test]
    fn config_validation() {
        let base = quick(3.5);
        assert!(RbConfig { lengths: vec![4, 2], ..base.clone() }.validate().is_err());
        assert!(RbConfig { n_seq: 0, ..base.clone() }.validate().is_err());
        assert!(RbConfig { shots: Some(0), ..base }.validate().is_err());
    }

    #[test]
    fn fit_recovers_synthetic_decay() {
        let lengths = [1usize, 2, 4, 8, 16, 32, 64, 128];
        let mut rng = seeded_rng(8, 0);
        let ys: Vec<f64> = lengths
            .iter()
            .map(|&m| (0.7 * 0.98f64.powi(m as i32) + 0.27) * (1.0 + 0.01 * standard_normal(&mut rng)))
            .collect();
        let f = fit_rb_decay(&lengths, &ys).unwrap();
        assert!((f.p / 0.98 - 1.0).abs() < 0.02);
    }
}
