//! Hamiltonian / stochastic / correlated / active elementary generators.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::pauli::pauli_label;
use super::ptm::{paulis, superop_from_map, ErrorGenerator};
use super::ChannelError;
use crate::numerics::{CMatrix, RMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// H_P[ρ] = −i[P, ρ]
    Hamiltonian(usize),
    /// S_P[ρ] = PρP − ρ
    Stochastic(usize),
    /// C_{P,Q}[ρ] = PρQ + QρP − ½{{P,Q},ρ}, P < Q
    Symmetric(usize, usize),
    /// A_{P,Q}[ρ] = i(PρQ − QρP + ½{[P,Q],ρ}), P < Q
    Antisymmetric(usize, usize),
}

impl GeneratorKind {
    pub fn label(&self, n_qubits: usize) -> String {
        let l = |i: usize| pauli_label(i, n_qubits);
        match *self {
            GeneratorKind::Hamiltonian(p) => format!("H_{}", l(p)),
            GeneratorKind::Stochastic(p) => format!("S_{}", l(p)),
            GeneratorKind::Symmetric(p, q) => format!("C_{},{}", l(p), l(q)),
            GeneratorKind::Antisymmetric(p, q) => format!("A_{},{}", l(p), l(q)),
        }
    }
}

fn anticomm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

fn element_map(kind: GeneratorKind, ps: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    match kind {
        GeneratorKind::Hamiltonian(p) => (&ps[p] * rho - rho * &ps[p]) * (-i),
        GeneratorKind::Stochastic(p) => &ps[p] * rho * &ps[p] - rho,
        GeneratorKind::Symmetric(p, q) => {
            let (p, q) = (&ps[p], &ps[q]);
            p * rho * q + q * rho * p - anticomm(&anticomm(p, q), rho) * half
        }
        GeneratorKind::Antisymmetric(p, q) => {
            let (p, q) = (&ps[p], &ps[q]);
            let comm = p * q - q * p;
            (p * rho * q - q * rho * p + anticomm(&comm, rho) * half) * i
        }
    }
}

/// Elementary generators and their biorthogonal duals.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    pub n_qubits: usize,
    pub kinds: Vec<GeneratorKind>,
    pub elements: Vec<RMatrix>,
    pub duals: Vec<RMatrix>,
    /// Rows are vec(D'_i) in row-major order; coefficients are `dual_rows · vec(L)`.
    dual_rows: RMatrix,
}

impl GeneratorBasis {
    fn build(n_qubits: usize) -> Self {
        let ps = paulis(n_qubits);
        let np = ps.len();
        let mut kinds = Vec::new();
        kinds.extend((1..np).map(GeneratorKind::Hamiltonian));
        kinds.extend((1..np).map(GeneratorKind::Stochastic));
        for p in 1..np {
            for q in p + 1..np {
                kinds.push(GeneratorKind::Symmetric(p, q));
            }
        }
        for p in 1..np {
            for q in p + 1..np {
                kinds.push(GeneratorKind::Antisymmetric(p, q));
            }
        }
        let elements: Vec<RMatrix> =
            kinds.iter().map(|k| superop_from_map(n_qubits, |rho| element_map(*k, ps, rho))).collect();
        let n = kinds.len();
        let flat = np * np;
        let mut a = RMatrix::zeros(n, flat);
        for (i, e) in elements.iter().enumerate() {
            for r in 0..np {
                for c in 0..np {
                    a[(i, r * np + c)] = e[(r, c)];
                }
            }
        }
        let gram = &a * a.transpose();
        let ginv = gram.try_inverse().expect("elementary generators are linearly independent");
        let dual_rows = &ginv * &a;
        let duals = (0..n).map(|i| RMatrix::from_row_slice(np, np, dual_rows.row(i).transpose().as_slice())).collect();
        Self { n_qubits, kinds, elements, duals, dual_rows }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn index_of(&self, kind: GeneratorKind) -> Option<usize> {
        self.kinds.iter().position(|k| *k == kind)
    }

    /// Coefficients of `l` in basis order.
    pub fn coefficients(&self, l: &RMatrix) -> Vec<f64> {
        let np = l.nrows();
        let mut v = nalgebra::DVector::zeros(np * np);
        for r in 0..np {
            for c in 0..np {
                v[r * np + c] = l[(r, c)];
            }
        }
        (&self.dual_rows * v).iter().copied().collect()
    }

    /// Σ c_i D_i.
    pub fn reconstruct(&self, coeffs: &[f64]) -> RMatrix {
        let np = 1usize << (2 * self.n_qubits);
        let mut out = RMatrix::zeros(np, np);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            if *c != 0.0 {
                out += e * *c;
            }
        }
        out
    }
}

/// Shared basis for 1 or 2 qubits.
pub fn generator_basis(n_qubits: usize) -> Result<&'static GeneratorBasis, ChannelError> {
    static ONE: OnceLock<GeneratorBasis> = OnceLock::new();
    static TWO: OnceLock<GeneratorBasis> = OnceLock::new();
    match n_qubits {
        1 => Ok(ONE.get_or_init(|| GeneratorBasis::build(1))),
        2 => Ok(TWO.get_or_init(|| GeneratorBasis::build(2))),
        n => Err(ChannelError::UnsupportedQubits(n)),
    }
}

/// Error rates of a generator. Pair keys are "P,Q" with P before Q in basis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDecomposition {
    pub n_qubits: usize,
    pub h: BTreeMap<String, f64>,
    pub s: BTreeMap<String, f64>,
    pub c: BTreeMap<String, f64>,
    pub a: BTreeMap<String, f64>,
    /// Frobenius norm of L minus its reconstruction.
    pub residual: f64,
}

impl GeneratorDecomposition {
    pub fn h(&self, label: &str) -> f64 {
        self.h.get(label).copied().unwrap_or(0.0)
    }

    pub fn s(&self, label: &str) -> f64 {
        self.s.get(label).copied().unwrap_or(0.0)
    }

    /// Largest |coefficient| outside the named H and S terms.
    pub fn max_other(&self, keep_h: &[&str], keep_s: &[&str]) -> f64 {
        let h = self.h.iter().filter(|(k, _)| !keep_h.contains(&k.as_str())).map(|(_, v)| v.abs());
        let s = self.s.iter().filter(|(k, _)| !keep_s.contains(&k.as_str())).map(|(_, v)| v.abs());
        let rest = self.c.values().chain(self.a.values()).map(|v| v.abs());
        h.chain(s).chain(rest).fold(0.0, f64::max)
    }
}

impl fmt::Display for GeneratorDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.h {
            writeln!(f, "H_{k} {v:+.3e}")?;
        }
        for (k, v) in &self.s {
            writeln!(f, "S_{k} {v:+.3e}")?;
        }
        write!(f, "residual {:.2e}", self.residual)
    }
}

pub fn decompose(l: &ErrorGenerator) -> GeneratorDecomposition {
    let basis = generator_basis(l.n_qubits).expect("generator qubit count");
    let coeffs = basis.coefficients(&l.matrix);
    let residual = (&l.matrix - basis.reconstruct(&coeffs)).norm();
    let n = l.n_qubits;
    let mut out = GeneratorDecomposition {
        n_qubits: n,
        h: BTreeMap::new(),
        s: BTreeMap::new(),
        c: BTreeMap::new(),
        a: BTreeMap::new(),
        residual,
    };
    for (k, c) in basis.kinds.iter().zip(coeffs) {
        let lab = |i: usize| pauli_label(i, n);
        match *k {
            GeneratorKind::Hamiltonian(p) => out.h.insert(lab(p), c),
            GeneratorKind::Stochastic(p) => out.s.insert(lab(p), c),
            GeneratorKind::Symmetric(p, q) => out.c.insert(format!("{},{}", lab(p), lab(q)), c),
            GeneratorKind::Antisymmetric(p, q) => out.a.insert(format!("{},{}", lab(p), lab(q)), c),
        };
    }
    out
}

/// Generator Σ rate·element for labelled Hamiltonian and stochastic terms.
pub fn generator_from_rates(
    n_qubits: usize,
    h: &[(&str, f64)],
    s: &[(&str, f64)],
) -> Result<ErrorGenerator, ChannelError> {
    let basis = generator_basis(n_qubits)?;
    let mut coeffs = vec![0.0; basis.len()];
    let idx = |label: &str| super::pauli::pauli_index(label).filter(|i| *i > 0 && label.len() == n_qubits);
    for (label, rate) in h {
        let p = idx(label).ok_or_else(|| ChannelError::Malformed(format!("bad Pauli label {label}")))?;
        coeffs[basis.index_of(GeneratorKind::Hamiltonian(p)).unwrap()] += rate;
    }
    for (label, rate) in s {
        let p = idx(label).ok_or_else(|| ChannelError::Malformed(format!("bad Pauli label {label}")))?;
        coeffs[basis.index_of(GeneratorKind::Stochastic(p)).unwrap()] += rate;
    }
    Ok(ErrorGenerator { n_qubits, matrix: basis.reconstruct(&coeffs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{error_generator, ptm_from_unitary, PauliTransferMatrix};
    use crate::dynamics::su2::Su2;
    use crate::dynamics::Propagator;

    fn frob(a: &RMatrix, b: &RMatrix) -> f64 {
        a.component_mul(b).sum()
    }

    #[test]
    fn duality_full_matrix() {
        for n in 1..=2 {
            let b = generator_basis(n).unwrap();
            assert_eq!(b.len(), (1 << (4 * n)) - (1 << (2 * n)));
            for (i, d) in b.duals.iter().enumerate() {
                for (j, e) in b.elements.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((frob(d, e) - want).abs() < 1e-12, "n={n} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn hamiltonian_dual_scaling() {
        // H_P has squared norm 2d² in the normalized basis
        for n in 1..=2usize {
            let b = generator_basis(n).unwrap();
            let d2 = (1usize << (2 * n)) as f64;
            let i = b.index_of(GeneratorKind::Hamiltonian(3)).unwrap();
            assert!((&b.duals[i] - &b.elements[i] / (2.0 * d2)).amax() < 1e-14);
            let hz = &b.elements[b.index_of(GeneratorKind::Hamiltonian(3)).unwrap()];
            let sz = &b.elements[b.index_of(GeneratorKind::Stochastic(3)).unwrap()];
            assert!((frob(&b.duals[i], hz) - 1.0).abs() < 1e-12);
            assert!(frob(&b.duals[i], sz).abs() < 1e-12);
        }
    }

    #[test]
    fn every_element_is_trace_preserving() {
        for n in 1..=2 {
            let b = generator_basis(n).unwrap();
            for (k, e) in b.kinds.iter().zip(&b.elements) {
                assert!(e.row(0).amax() < 1e-15, "{}", k.label(n));
            }
        }
    }

    #[test]
    fn closed_form_duals() {
        // S'ρ = PρP/d², C'ρ = (PρQ + QρP)/2d², A'ρ = i(PρQ − QρP)/2d², H' = H/2d²
        let i = C64::new(0.0, 1.0);
        for n in 1..=2usize {
            let b = generator_basis(n).unwrap();
            let ps = paulis(n);
            let d2 = (1usize << (2 * n)) as f64;
            for (k, el) in b.kinds.iter().zip(&b.elements) {
                let m = match *k {
                    GeneratorKind::Hamiltonian(_) => el / (2.0 * d2),
                    GeneratorKind::Stochastic(p) => superop_from_map(n, |r| &ps[p] * r * &ps[p]) / d2,
                    GeneratorKind::Symmetric(p, q) => {
                        superop_from_map(n, |r| &ps[p] * r * &ps[q] + &ps[q] * r * &ps[p]) / (2.0 * d2)
                    }
                    GeneratorKind::Antisymmetric(p, q) => {
                        superop_from_map(n, |r| (&ps[p] * r * &ps[q] - &ps[q] * r * &ps[p]) * i) / (2.0 * d2)
                    }
                };
                for (j, e) in b.elements.iter().enumerate() {
                    let want = if b.kinds[j] == *k { 1.0 } else { 0.0 };
                    assert!((frob(&m, e) - want).abs() < 1e-12, "{}", k.label(n));
                }
            }
        }
    }

    #[test]
    fn stochastic_generators_are_unital() {
        let b = generator_basis(1).unwrap();
        for k in 1..4 {
            let s = &b.elements[b.index_of(GeneratorKind::Stochastic(k)).unwrap()];
            assert!(s.column(0).amax() < 1e-15);
        }
    }

    #[test]
    fn z_rotation_rate_is_half_angle() {
        let th = 0.02;
        let e = ptm_from_unitary(&Propagator { matrix: Su2::rz(th).to_matrix() }).unwrap();
        let d = decompose(&error_generator(&e).unwrap());
        assert!((d.h("Z") - th / 2.0).abs() < 1e-12);
        assert!(d.max_other(&["Z"], &[]) < 1e-12);
    }

    #[test]
    fn depolarizing_has_equal_stochastic_rates() {
        let p = 0.05;
        let e = PauliTransferMatrix::depolarizing(1, p);
        let d = decompose(&error_generator(&e).unwrap());
        // exp(4 s S-sum) scales the Bloch vector by e^{-4s}
        let s = -(1.0 - p).ln() / 4.0;
        for l in ["X", "Y", "Z"] {
            assert!((d.s(l) - s).abs() < 1e-12);
        }
        let back = generator_from_rates(1, &[], &[("X", s), ("Y", s), ("Z", s)]).unwrap();
        assert!((back.exp().matrix - e.matrix).amax() < 1e-12);
    }

    #[test]
    fn basis_elements_and_mixtures() {
        let l = generator_from_rates(2, &[("ZZ", 0.01)], &[]).unwrap();
        let d = decompose(&l);
        assert!((d.h("ZZ") - 0.01).abs() < 1e-14);
        assert!(d.max_other(&["ZZ"], &[]) < 1e-12);
        let l = generator_from_rates(1, &[("Y", 0.3)], &[("X", 0.2)]).unwrap();
        let d = decompose(&l);
        assert!((d.h("Y") - 0.3).abs() < 1e-14 && (d.s("X") - 0.2).abs() < 1e-14);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn non_tp_matrix_leaves_residual() {
        let mut m = RMatrix::zeros(4, 4);
        m[(0, 1)] = 0.1;
        let d = decompose(&ErrorGenerator { n_qubits: 1, matrix: m });
        assert!((d.residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bad_labels_rejected() {
        assert!(generator_from_rates(2, &[("Z", 0.1)], &[]).is_err());
        assert!(generator_from_rates(1, &[("I", 0.1)], &[]).is_err());
        assert!(generator_basis(3).is_err());
    }
}
