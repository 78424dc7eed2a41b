//! Closed-form SU(2) arithmetic for single-spin steps.

use crate::numerics::{CMatrix, C64};

/// `[[a, −b*], [b, a*]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub a: C64,
    pub b: C64,
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0) };

    /// `exp(−i h (hx σx + hy σy + hz σz))`.
    #[inline]
    pub fn from_field(hx: f64, hy: f64, hz: f64, h: f64) -> Su2 {
        let norm = (hx * hx + hy * hy + hz * hz).sqrt();
        if norm == 0.0 {
            return Su2::IDENTITY;
        }
        let phi = norm * h;
        let (s, c) = phi.sin_cos();
        let k = s / norm;
        Su2 { a: C64::new(c, -hz * k), b: C64::new(hy * k, -hx * k) }
    }

    /// `exp(−i φ σz / 2)`.
    #[inline]
    pub fn rz(phi: f64) -> Su2 {
        let (s, c) = (0.5 * phi).sin_cos();
        Su2 { a: C64::new(c, -s), b: C64::new(0.0, 0.0) }
    }

    /// `next · self`.
    #[inline]
    pub fn then(self, next: Su2) -> Su2 {
        Su2 {
            a: next.a * self.a - next.b.conj() * self.b,
            b: next.b * self.a + next.a.conj() * self.b,
        }
    }

    pub fn to_matrix(self) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[self.a, -self.b.conj(), self.b, self.a.conj()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix_exp;

    fn pauli(k: usize) -> CMatrix {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match k {
            0 => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            1 => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            _ => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let (hx, hy, hz, h) = (0.3, -1.1, 0.7, 0.37);
        let hm = pauli(0) * C64::new(hx, 0.0) + pauli(1) * C64::new(hy, 0.0) + pauli(2) * C64::new(hz, 0.0);
        let want = matrix_exp(&(hm * C64::new(0.0, -h))).unwrap();
        let got = Su2::from_field(hx, hy, hz, h).to_matrix();
        assert!((want - got).norm() < 1e-14);
    }

    #[test]
    fn composition_order() {
        let a = Su2::from_field(1.0, 0.0, 0.0, 0.4);
        let b = Su2::from_field(0.0, 0.0, 1.0, 0.9);
        let got = a.then(b).to_matrix();
        let want = b.to_matrix() * a.to_matrix();
        assert!((want - got).norm() < 1e-14);
        let z = Su2::rz(0.8).to_matrix();
        let want = Su2::from_field(0.0, 0.0, 0.4, 1.0).to_matrix();
        assert!((z - want).norm() < 1e-14);
    }
}
