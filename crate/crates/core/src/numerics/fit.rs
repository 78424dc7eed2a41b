//! Levenberg–Marquardt nonlinear least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("xs has {xs} points but ys has {ys}")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("{points} data points cannot determine {params} parameters")]
    Underdetermined { points: usize, params: usize },
    #[error("no parameters to fit")]
    NoParameters,
    #[error("model produced a non-finite value at the initial parameters")]
    NonFiniteModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// sqrt(Σ r²)
    pub residual_norm: f64,
    /// Parameter covariance s²(JᵀJ)⁻¹, absent when the Jacobian is rank deficient.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Set when JᵀJ is numerically singular at the solution.
    pub covariance_degenerate: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// 1σ standard error of parameter `i`.
    pub fn stderr(&self, i: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[i][i].max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_step: 1e-6,
        }
    }
}

/// Fit `model(x, params)` to `(xs, ys)` starting from `init`.
pub fn least_squares_fit<F>(
    model: F,
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
) -> Result<FitResult, FitError>
where
    F: Fn(f64, &[f64]) -> f64,
{
    least_squares_fit_with(model, xs, ys, init, FitOptions::default())
}

pub fn least_squares_fit_with<F>(
    model: F,
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
    opts: FitOptions,
) -> Result<FitResult, FitError>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch { xs: xs.len(), ys: ys.len() });
    }
    let np = init.len();
    if np == 0 {
        return Err(FitError::NoParameters);
    }
    if xs.len() < np {
        return Err(FitError::Underdetermined { points: xs.len(), params: np });
    }
    let n = xs.len();

    let residuals = |p: &[f64]| -> DVector<f64> {
        DVector::from_iterator(n, xs.iter().zip(ys).map(|(x, y)| model(*x, p) - y))
    };
    let cost_of = |r: &DVector<f64>| -> f64 {
        let c = r.norm_squared();
        if c.is_finite() { c } else { f64::INFINITY }
    };
    let jacobian = |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, np);
        let mut pp = p.to_vec();
        for k in 0..np {
            let h = opts.rel_step * p[k].abs().max(1e-3);
            pp[k] = p[k] + h;
            let up = residuals(&pp);
            pp[k] = p[k] - h;
            let dn = residuals(&pp);
            pp[k] = p[k];
            j.set_column(k, &((up - dn) / (2.0 * h)));
        }
        j
    };

    let mut p = init.to_vec();
    let mut r = residuals(&p);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(FitError::NonFiniteModel);
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let j = jacobian(&p);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-30 {
            converged = true;
            break;
        }
        let mut improved = false;
        loop {
            let mut damped = a.clone();
            for k in 0..np {
                let d = a[(k, k)];
                damped[(k, k)] += lambda * if d > 0.0 { d } else { 1e-12 };
            }
            let step = damped.lu().solve(&(-&g));
            if let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) {
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let r_new = residuals(&trial);
                let c_new = cost_of(&r_new);
                if c_new < cost {
                    let drop = cost - c_new;
                    let step_small = step.norm()
                        <= 1e-12 * (p.iter().map(|v| v * v).sum::<f64>().sqrt() + 1e-12);
                    p = trial;
                    r = r_new;
                    cost = c_new;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = true;
                    if drop <= 1e-15 * cost || step_small {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            // no descent direction left: local minimum to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let j = jacobian(&p);
    let a = j.transpose() * &j;
    let dof = if n > np { (n - np) as f64 } else { 1.0 };
    let s2 = cost / dof;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let degenerate = !(smax > 0.0) || smin <= 1e-13 * smax;
    let covariance = if degenerate {
        None
    } else {
        a.try_inverse().map(|inv| {
            (0..np)
                .map(|i| (0..np).map(|k| inv[(i, k)] * s2).collect())
                .collect()
        })
    };
    Ok(FitResult {
        params: p,
        residual_norm: cost.sqrt(),
        covariance_degenerate: degenerate || covariance.is_none(),
        covariance,
        converged,
        iterations,
    })
}

/// Linear least-squares polynomial fit; coefficients in ascending order.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>, FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch { xs: xs.len(), ys: ys.len() });
    }
    let np = degree + 1;
    if xs.len() < np {
        return Err(FitError::Underdetermined { points: xs.len(), params: np });
    }
    let v = DMatrix::from_fn(xs.len(), np, |i, k| xs[i].powi(k as i32));
    let y = DVector::from_column_slice(ys);
    let sol = v
        .svd(true, true)
        .solve(&y, 1e-14)
        .expect("SVD was computed with both factors");
    Ok(sol.iter().copied().collect())
}

/// Evaluate an ascending-order polynomial.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::{seeded_rng, standard_normal};

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = least_squares_fit(|x, p| p[0] * x + p[1], &xs, &ys, &[0.0, 0.0]).unwrap();
        assert!(f.converged);
        assert!((f.params[0] - 2.0).abs() < 1e-9 && (f.params[1] - 1.0).abs() < 1e-9);
        assert!(f.residual_norm < 1e-9);
    }

    #[test]
    fn gaussian_decay() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|t| (-(t / 40.0f64).powi(2)).exp()).collect();
        let f = least_squares_fit(|t, p| (-(t / p[0]).powi(2)).exp(), &xs, &ys, &[25.0]).unwrap();
        assert!(f.converged);
        assert!((f.params[0] - 40.0).abs() < 1e-6, "{:?}", f.params);
    }

    #[test]
    fn rb_shaped_data() {
        let mut rng = seeded_rng(4, 0);
        let (a, p, b): (f64, f64, f64) = (0.7, 0.95, 0.25);
        let xs: Vec<f64> = [1, 2, 4, 8, 12, 16, 24, 32, 48, 64].iter().map(|&m| m as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|m| (a * p.powf(*m) + b) * (1.0 + 0.01 * standard_normal(&mut rng)))
            .collect();
        let f = least_squares_fit(|m, q| q[0] * q[1].powf(m) + q[2], &xs, &ys, &[0.75, 0.9, 0.25]).unwrap();
        assert!((f.params[1] / p - 1.0).abs() < 0.02);
        assert!(f.covariance.is_some());
    }

    #[test]
    fn degenerate_jacobian_is_flagged() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![1.0, 1.0, 1.0];
        // p[0] and p[1] enter only through their sum
        let f = least_squares_fit(|_, p| p[0] + p[1], &xs, &ys, &[0.2, 0.3]).unwrap();
        assert!(f.covariance_degenerate);
        assert!(f.covariance.is_none());
        assert!((f.params[0] + f.params[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn input_validation() {
        let m = |x: f64, p: &[f64]| p[0] * x;
        assert!(matches!(least_squares_fit(m, &[1.0], &[1.0, 2.0], &[1.0]), Err(FitError::LengthMismatch { .. })));
        assert!(matches!(least_squares_fit(m, &[], &[], &[1.0]), Err(FitError::Underdetermined { .. })));
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|t| 3.0 * (-t / 7.0).exp()).collect();
        let f = least_squares_fit_with(
            |t, p| p[0] * (-t / p[1]).exp(),
            &xs,
            &ys,
            &[1.0, 1.0],
            FitOptions { max_iter: 1, rel_step: 1e-6 },
        )
        .unwrap();
        assert!(!f.converged);
    }

    #[test]
    fn polynomial_fit() {
        let xs = [0.0, 0.1, 0.2, 0.3];
        let ys: Vec<f64> = xs.iter().map(|x| 0.018 - 0.031 * x - 0.18 * x * x).collect();
        let c = polyfit(&xs, &ys, 2).unwrap();
        assert!((c[0] - 0.018).abs() < 1e-12 && (c[1] + 0.031).abs() < 1e-12 && (c[2] + 0.18).abs() < 1e-11);
        assert!((polyval(&c, 0.5) - (0.018 - 0.0155 - 0.045)).abs() < 1e-12);
    }
}
