//! Pauli transfer matrices and error generators.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::pauli::{pauli_labels, pauli_matrices};
use super::ChannelError;
use crate::dynamics::Propagator;
use crate::numerics::{complexify, hermitian_eigenvalues, matrix_exp_real, matrix_log_principal, CMatrix, RMatrix, C64};

/// Tolerance on the smallest Choi eigenvalue.
pub const CP_TOLERANCE: f64 = 1e-8;
pub const TP_TOLERANCE: f64 = 1e-10;

pub(crate) fn paulis(n_qubits: usize) -> &'static [CMatrix] {
    static ONE: OnceLock<Vec<CMatrix>> = OnceLock::new();
    static TWO: OnceLock<Vec<CMatrix>> = OnceLock::new();
    match n_qubits {
        1 => ONE.get_or_init(|| pauli_matrices(1)),
        2 => TWO.get_or_init(|| pauli_matrices(2)),
        n => panic!("unsupported qubit count {n}"),
    }
}

pub(crate) fn qubits_for_dim(d: usize) -> Result<usize, ChannelError> {
    match d {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(ChannelError::UnsupportedQubits(d)),
    }
}

/// Re Tr[P A] for a Pauli P (monomial matrix).
#[inline]
fn pauli_trace(p: &CMatrix, a: &CMatrix) -> f64 {
    let d = p.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let pij = p[(i, j)];
            if pij.re != 0.0 || pij.im != 0.0 {
                acc += (pij * a[(j, i)]).re;
            }
        }
    }
    acc
}

/// Superoperator of a linear map in the normalized Pauli basis:
/// M_{μν} = Re Tr[P_μ Φ(P_ν)]/d.
pub fn superop_from_map(n_qubits: usize, f: impl Fn(&CMatrix) -> CMatrix) -> RMatrix {
    let ps = paulis(n_qubits);
    let d = 1usize << n_qubits;
    let n = ps.len();
    let mut m = RMatrix::zeros(n, n);
    for (nu, pn) in ps.iter().enumerate() {
        let img = f(pn);
        for (mu, pm) in ps.iter().enumerate() {
            m[(mu, nu)] = pauli_trace(pm, &img) / d as f64;
        }
    }
    m
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    n_qubits: usize,
    basis: Vec<String>,
    matrix: Vec<f64>,
}

fn to_wire(n_qubits: usize, m: &RMatrix) -> MatrixWire {
    let n = m.nrows();
    let mut flat = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            flat.push(m[(i, j)]);
        }
    }
    MatrixWire { n_qubits, basis: pauli_labels(n_qubits), matrix: flat }
}

fn from_wire(w: MatrixWire) -> Result<(usize, RMatrix), ChannelError> {
    if !(1..=2).contains(&w.n_qubits) {
        return Err(ChannelError::UnsupportedQubits(w.n_qubits));
    }
    if w.basis != pauli_labels(w.n_qubits) {
        return Err(ChannelError::Malformed("basis labels out of order".into()));
    }
    let n = 1usize << (2 * w.n_qubits);
    if w.matrix.len() != n * n {
        return Err(ChannelError::Malformed(format!("expected {} entries, got {}", n * n, w.matrix.len())));
    }
    Ok((w.n_qubits, RMatrix::from_row_slice(n, n, &w.matrix)))
}

/// Real d²×d² channel matrix in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct PauliTransferMatrix {
    pub n_qubits: usize,
    pub matrix: RMatrix,
}

impl TryFrom<MatrixWire> for PauliTransferMatrix {
    type Error = ChannelError;
    fn try_from(w: MatrixWire) -> Result<Self, ChannelError> {
        let (n_qubits, matrix) = from_wire(w)?;
        Ok(Self { n_qubits, matrix })
    }
}

impl From<PauliTransferMatrix> for MatrixWire {
    fn from(p: PauliTransferMatrix) -> Self {
        to_wire(p.n_qubits, &p.matrix)
    }
}

impl PauliTransferMatrix {
    pub fn new(n_qubits: usize, matrix: RMatrix) -> Result<Self, ChannelError> {
        let n = 1usize << (2 * n_qubits);
        if !(1..=2).contains(&n_qubits) {
            return Err(ChannelError::UnsupportedQubits(n_qubits));
        }
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(ChannelError::DimensionMismatch);
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let n = 1usize << (2 * n_qubits);
        Self { n_qubits, matrix: RMatrix::identity(n, n) }
    }

    /// Depolarizing channel ρ → (1−p)ρ + p·I/d.
    pub fn depolarizing(n_qubits: usize, p: f64) -> Self {
        let mut m = Self::identity(n_qubits);
        for i in 1..m.matrix.nrows() {
            m.matrix[(i, i)] = 1.0 - p;
        }
        m
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &PauliTransferMatrix) -> PauliTransferMatrix {
        Self { n_qubits: self.n_qubits, matrix: &next.matrix * &self.matrix }
    }

    /// Largest deviation of the first row from (1, 0, …, 0).
    pub fn tp_error(&self) -> f64 {
        let row = self.matrix.row(0);
        row.iter()
            .enumerate()
            .map(|(j, v)| if j == 0 { (v - 1.0).abs() } else { v.abs() })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.tp_error() <= TP_TOLERANCE
    }

    /// Normalized Choi matrix Σ M_{μν} P_μ ⊗ P_νᵀ / d².
    pub fn choi(&self) -> CMatrix {
        let ps = paulis(self.n_qubits);
        let d = self.dim();
        let mut j = CMatrix::zeros(d * d, d * d);
        for (mu, pm) in ps.iter().enumerate() {
            for (nu, pn) in ps.iter().enumerate() {
                let w = self.matrix[(mu, nu)];
                if w != 0.0 {
                    j += pm.kronecker(&pn.transpose()) * C64::new(w / (d * d) as f64, 0.0);
                }
            }
        }
        j
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi())[0]
    }

    pub fn is_completely_positive(&self) -> bool {
        self.min_choi_eigenvalue() >= -CP_TOLERANCE
    }

    /// Process (entanglement) fidelity Tr M / d².
    pub fn process_fidelity(&self) -> f64 {
        self.matrix.trace() / (self.dim() * self.dim()) as f64
    }
}

/// Generator of a trace-preserving channel family, same basis as the PTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct ErrorGenerator {
    pub n_qubits: usize,
    pub matrix: RMatrix,
}

impl TryFrom<MatrixWire> for ErrorGenerator {
    type Error = ChannelError;
    fn try_from(w: MatrixWire) -> Result<Self, ChannelError> {
        let (n_qubits, matrix) = from_wire(w)?;
        Ok(Self { n_qubits, matrix })
    }
}

impl From<ErrorGenerator> for MatrixWire {
    fn from(g: ErrorGenerator) -> Self {
        to_wire(g.n_qubits, &g.matrix)
    }
}

impl ErrorGenerator {
    pub fn zeros(n_qubits: usize) -> Self {
        let n = 1usize << (2 * n_qubits);
        Self { n_qubits, matrix: RMatrix::zeros(n, n) }
    }

    pub fn exp(&self) -> PauliTransferMatrix {
        let m = matrix_exp_real(&self.matrix).expect("square generator");
        PauliTransferMatrix { n_qubits: self.n_qubits, matrix: m }
    }

    /// max |L_{0j}|.
    pub fn tp_error(&self) -> f64 {
        self.matrix.row(0).iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

pub fn ptm_from_unitary(u: &Propagator) -> Result<PauliTransferMatrix, ChannelError> {
    let n_qubits = qubits_for_dim(u.dim())?;
    let err = u.unitarity_error();
    if !(err <= 1e-8) {
        return Err(ChannelError::NotUnitary(err));
    }
    let ps = paulis(n_qubits);
    let d = u.dim() as f64;
    let ud = u.matrix.adjoint();
    let n = ps.len();
    let mut m = RMatrix::zeros(n, n);
    m[(0, 0)] = 1.0;
    for (nu, pn) in ps.iter().enumerate().skip(1) {
        let img = &u.matrix * pn * &ud;
        for (mu, pm) in ps.iter().enumerate().skip(1) {
            m[(mu, nu)] = pauli_trace(pm, &img) / d;
        }
    }
    Ok(PauliTransferMatrix { n_qubits, matrix: m })
}

/// Weighted mixture of unitary channels.
pub fn channel_from_ensemble(us: &[Propagator], weights: &[f64]) -> Result<PauliTransferMatrix, ChannelError> {
    if us.is_empty() || us.len() != weights.len() {
        return Err(ChannelError::WeightMismatch(format!("{} unitaries, {} weights", us.len(), weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(ChannelError::WeightMismatch("negative weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ChannelError::WeightMismatch(format!("weights sum to {total}")));
    }
    let mut acc: Option<PauliTransferMatrix> = None;
    for (u, w) in us.iter().zip(weights) {
        let p = ptm_from_unitary(u)?;
        match acc.as_mut() {
            None => acc = Some(PauliTransferMatrix { n_qubits: p.n_qubits, matrix: p.matrix * *w }),
            Some(a) => {
                if a.n_qubits != p.n_qubits {
                    return Err(ChannelError::DimensionMismatch);
                }
                a.matrix += p.matrix * *w;
            }
        }
    }
    let mut out = acc.expect("non-empty");
    // the first row is exact for each unitary; remove accumulated rounding
    out.matrix[(0, 0)] = 1.0;
    for j in 1..out.matrix.ncols() {
        out.matrix[(0, j)] = 0.0;
    }
    Ok(out)
}

/// Equal-weight mixture.
pub fn uniform_mixture(us: &[Propagator]) -> Result<PauliTransferMatrix, ChannelError> {
    let w = vec![1.0 / us.len().max(1) as f64; us.len()];
    channel_from_ensemble(us, &w)
}

/// E with E ∘ U = G.
pub fn error_channel(gate: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> Result<PauliTransferMatrix, ChannelError> {
    if gate.n_qubits != ideal.n_qubits {
        return Err(ChannelError::DimensionMismatch);
    }
    let n = ideal.matrix.nrows();
    let orth = (&ideal.matrix.transpose() * &ideal.matrix - RMatrix::identity(n, n)).amax();
    let inv = if orth < 1e-10 {
        ideal.matrix.transpose()
    } else {
        ideal.matrix.clone().try_inverse().ok_or(ChannelError::Singular)?
    };
    Ok(PauliTransferMatrix { n_qubits: gate.n_qubits, matrix: &gate.matrix * inv })
}

/// Principal logarithm of an error channel.
pub fn error_generator(e: &PauliTransferMatrix) -> Result<ErrorGenerator, ChannelError> {
    let log = matrix_log_principal(&complexify(&e.matrix))?;
    let imag = log.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag > 1e-6 {
        return Err(ChannelError::ComplexLog(imag));
    }
    let mut l = log.map(|z| z.re);
    // TP family: the first row of the log vanishes identically
    for j in 0..l.ncols() {
        l[(0, j)] = 0.0;
    }
    Ok(ErrorGenerator { n_qubits: e.n_qubits, matrix: l })
}

/// Haar-averaged state fidelity of a trace-preserving channel.
pub fn average_gate_fidelity(e: &PauliTransferMatrix) -> f64 {
    let d = e.dim() as f64;
    ((e.matrix.trace() + d) / (d * d + d)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::su2::Su2;
    use crate::numerics::{seeded_rng, standard_normal};

    fn prop(m: CMatrix) -> Propagator {
        Propagator { matrix: m }
    }

    fn rz(theta: f64) -> Propagator {
        prop(Su2::rz(theta).to_matrix())
    }

    #[test]
    fn unitary_ptms() {
        let id = ptm_from_unitary(&Propagator::identity(2)).unwrap();
        assert_eq!(id, PauliTransferMatrix::identity(1));
        let x = prop(super::super::pauli::single_pauli(1));
        let m = ptm_from_unitary(&x).unwrap();
        let want = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((m.matrix - want).amax() < 1e-15);
        let u = rz(0.7).matrix * C64::from_polar(1.0, 0.4);
        let a = ptm_from_unitary(&prop(u)).unwrap();
        let b = ptm_from_unitary(&rz(0.7)).unwrap();
        assert!((a.matrix - b.matrix).amax() < 1e-14);
        let err = ptm_from_unitary(&prop(Su2::rz(0.1).to_matrix() * C64::new(1.1, 0.0)));
        assert!(matches!(err, Err(ChannelError::NotUnitary(_))));
    }

    #[test]
    fn dephasing_mixture() {
        let th = 0.3;
        let m = channel_from_ensemble(&[rz(th), rz(-th)], &[0.5, 0.5]).unwrap();
        let c = th.cos();
        let want = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, c, c, 1.0]));
        assert!((&m.matrix - want).amax() < 1e-14);
        let swapped = channel_from_ensemble(&[rz(-th), rz(th)], &[0.5, 0.5]).unwrap();
        assert!((m.matrix - swapped.matrix).amax() < 1e-15);
        assert!(channel_from_ensemble(&[rz(th)], &[0.5]).is_err());
        assert!(channel_from_ensemble(&[rz(th), rz(th)], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn error_channel_of_over_rotation() {
        let x = |a: f64| prop(Su2::from_field(1.0, 0.0, 0.0, a / 2.0).to_matrix());
        let g = ptm_from_unitary(&x(std::f64::consts::FRAC_PI_2 + 0.02)).unwrap();
        let u = ptm_from_unitary(&x(std::f64::consts::FRAC_PI_2)).unwrap();
        let e = error_channel(&g, &u).unwrap();
        let want = ptm_from_unitary(&x(0.02)).unwrap();
        assert!((e.matrix - want.matrix).amax() < 1e-14);
        assert!((error_channel(&g, &g).unwrap().matrix - RMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn logarithm_round_trip() {
        let e = ptm_from_unitary(&rz(0.05)).unwrap();
        let l = error_generator(&e).unwrap();
        assert!((l.exp().matrix - &e.matrix).amax() < 1e-12);
        let zero = error_generator(&PauliTransferMatrix::identity(2)).unwrap();
        assert!(zero.matrix.amax() < 1e-15);
    }

    #[test]
    fn fidelity_closed_forms() {
        assert_eq!(average_gate_fidelity(&PauliTransferMatrix::identity(2)), 1.0);
        let h: f64 = 0.1;
        let f = average_gate_fidelity(&ptm_from_unitary(&rz(2.0 * h)).unwrap());
        assert!((f - (4.0 * h.cos().powi(2) + 2.0) / 6.0).abs() < 1e-15);
        assert!((f - 0.9933556).abs() < 1e-7);
        assert!((average_gate_fidelity(&PauliTransferMatrix::depolarizing(1, 1.0)) - 0.5).abs() < 1e-15);
    }

    fn haar_state(rng: &mut crate::numerics::RngStream, d: usize) -> Vec<C64> {
        let mut v: Vec<C64> = (0..d).map(|_| C64::new(standard_normal(rng), standard_normal(rng))).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        v
    }

    #[test]
    fn fidelity_matches_haar_monte_carlo() {
        let u = prop(Su2::from_field(0.3, -0.5, 0.8, 0.4).to_matrix());
        let e = channel_from_ensemble(&[u, rz(0.9)], &[0.7, 0.3]).unwrap();
        let exact = average_gate_fidelity(&e);
        let ps = paulis(1);
        let mut rng = seeded_rng(11, 0);
        let n = 20000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let psi = haar_state(&mut rng, 2);
            let rho = CMatrix::from_fn(2, 2, |i, j| psi[i] * psi[j].conj());
            let r: Vec<f64> = ps.iter().map(|p| pauli_trace(p, &rho)).collect();
            let mr = &e.matrix * nalgebra::DVector::from_vec(r.clone());
            let f: f64 = r.iter().zip(mr.iter()).map(|(a, b)| a * b).sum::<f64>() / 2.0;
            s += f;
            s2 += f * f;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} ± {se}");
    }

    #[test]
    fn choi_of_unitary_and_depolarizing() {
        let e = ptm_from_unitary(&rz(0.4)).unwrap();
        let ev = hermitian_eigenvalues(&e.choi());
        assert!((ev[3] - 1.0).abs() < 1e-12 && ev[0].abs() < 1e-12);
        assert!(PauliTransferMatrix::depolarizing(2, 0.3).is_completely_positive());
        // a transpose-like map is positive but not CP
        let bad = PauliTransferMatrix::new(1, RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, 1.0]))).unwrap();
        assert!(!bad.is_completely_positive());
    }

    #[test]
    fn json_shape() {
        let e = ptm_from_unitary(&rz(0.4)).unwrap();
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["n_qubits"], 1);
        assert_eq!(v["basis"][3], "Z");
        assert_eq!(v["matrix"].as_array().unwrap().len(), 16);
        let back: PauliTransferMatrix = serde_json::from_value(v).unwrap();
        assert!((back.matrix - e.matrix).amax() < 1e-15);
        let bad = serde_json::json!({"n_qubits": 1, "basis": ["I","X","Y","Z"], "matrix": [1.0]});
        assert!(serde_json::from_value::<PauliTransferMatrix>(bad).is_err());
    }
}
