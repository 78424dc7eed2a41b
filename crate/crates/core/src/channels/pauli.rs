//! Pauli strings in lexicographic {I,X,Y,Z}^n order.

use crate::numerics::{CMatrix, C64};

const SYMBOLS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Single-qubit Pauli matrix for digit 0..4 (I, X, Y, Z).
pub fn single_pauli(digit: usize) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match digit {
        0 => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        1 => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        2 => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        3 => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => panic!("pauli digit {digit} out of range"),
    }
}

/// Base-4 digits of `index`, most significant (qubit 1) first.
pub fn pauli_digits(index: usize, n_qubits: usize) -> Vec<usize> {
    (0..n_qubits).rev().map(|k| (index >> (2 * k)) & 3).collect()
}

/// Label such as "IX" for `index` in an `n_qubits` basis.
pub fn pauli_label(index: usize, n_qubits: usize) -> String {
    pauli_digits(index, n_qubits).into_iter().map(|d| SYMBOLS[d]).collect()
}

pub fn pauli_labels(n_qubits: usize) -> Vec<String> {
    (0..1usize << (2 * n_qubits)).map(|i| pauli_label(i, n_qubits)).collect()
}

/// Inverse of [`pauli_label`].
pub fn pauli_index(label: &str) -> Option<usize> {
    let mut idx = 0;
    for ch in label.chars() {
        let d = SYMBOLS.iter().position(|s| *s == ch.to_ascii_uppercase())?;
        idx = idx * 4 + d;
    }
    if label.is_empty() {
        None
    } else {
        Some(idx)
    }
}

pub fn pauli_matrix(index: usize, n_qubits: usize) -> CMatrix {
    let digits = pauli_digits(index, n_qubits);
    let mut m = single_pauli(digits[0]);
    for d in &digits[1..] {
        m = m.kronecker(&single_pauli(*d));
    }
    m
}

/// All Pauli matrices of the basis in index order.
pub fn pauli_matrices(n_qubits: usize) -> Vec<CMatrix> {
    (0..1usize << (2 * n_qubits)).map(|i| pauli_matrix(i, n_qubits)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_indices() {
        assert_eq!(pauli_labels(1), vec!["I", "X", "Y", "Z"]);
        let two = pauli_labels(2);
        assert_eq!(two.len(), 16);
        assert_eq!(two[1], "IX");
        assert_eq!(two[4], "XI");
        assert_eq!(two[15], "ZZ");
        for (i, l) in two.iter().enumerate() {
            assert_eq!(pauli_index(l), Some(i));
        }
        assert_eq!(pauli_index("Q"), None);
    }

    #[test]
    fn orthogonality() {
        let ps = pauli_matrices(2);
        for (a, pa) in ps.iter().enumerate() {
            for (b, pb) in ps.iter().enumerate() {
                let t = (pa * pb).trace();
                let want = if a == b { 4.0 } else { 0.0 };
                assert!((t.re - want).abs() < 1e-14 && t.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn qubit_one_is_most_significant() {
        let zi = pauli_matrix(pauli_index("ZI").unwrap(), 2);
        assert_eq!(zi[(0, 0)].re, 1.0);
        assert_eq!(zi[(1, 1)].re, 1.0);
        assert_eq!(zi[(2, 2)].re, -1.0);
    }
}
