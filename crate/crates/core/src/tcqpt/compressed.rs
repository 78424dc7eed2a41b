//! Quasistatic coherent gate model `h = h̄(ε) + δh(ε)·R`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{extract_static_split, run_windowed_qpt, QptError, QptRunConfig, StaticNoiseSplit};
use crate::channels::{decompose, generator_from_rates, pauli_index, pauli_matrix, ErrorGenerator, GeneratorDecomposition};
use crate::dynamics::NativeGate;
use crate::numerics::{matrix_exp, polyfit, polyval, CMatrix, C64};

/// Mean and fluctuation polynomials in ε, ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub mean_poly: Vec<f64>,
    pub fluct_poly: Vec<f64>,
}

impl CoefficientModel {
    pub fn new(mean_poly: &[f64], fluct_poly: &[f64]) -> Self {
        Self { mean_poly: mean_poly.to_vec(), fluct_poly: fluct_poly.to_vec() }
    }

    pub fn mean(&self, eps: f64) -> f64 {
        polyval(&self.mean_poly, eps)
    }

    /// δh(ε), floored at zero.
    pub fn fluct(&self, eps: f64) -> f64 {
        polyval(&self.fluct_poly, eps).max(0.0)
    }
}

/// How Gaussian fields are shared between gates of one circuit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RSharing {
    /// One R per qubit, shared by every gate touching it.
    #[default]
    PerQubit,
    /// One R per (gate type, qubit).
    PerGate,
}

/// Coefficient models per gate name (`I`, `X90`, `Y90`, `CZ`) and Pauli label.
///
/// Single-qubit labels are `X`, `Y`, `Z`. CZ labels are `XX` (multiplying
/// H_XX + H_YY), `ZZ`, `ZI`, `IZ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompressedGateModel {
    pub gates: BTreeMap<String, BTreeMap<String, CoefficientModel>>,
}

pub const SINGLE_QUBIT_LABELS: [&str; 3] = ["X", "Y", "Z"];
pub const CZ_LABELS: [&str; 4] = ["XX", "ZZ", "ZI", "IZ"];

pub fn model_labels(gate: NativeGate) -> &'static [&'static str] {
    match gate {
        NativeGate::CZ => &CZ_LABELS,
        _ => &SINGLE_QUBIT_LABELS,
    }
}

impl CompressedGateModel {
    /// The published fit for t_g = 100 ns single-qubit gates and the 50 ns CZ;
    /// δh_ZZ is taken as the constant 0.036.
    pub fn published() -> Self {
        let c = CoefficientModel::new;
        let zero = || c(&[0.0], &[0.0]);
        let mut gates = BTreeMap::new();
        let mut idle = BTreeMap::new();
        idle.insert("X".into(), zero());
        idle.insert("Y".into(), zero());
        idle.insert("Z".into(), c(&[0.0], &[0.0, 1.4]));
        gates.insert("I".into(), idle);
        let axis = c(&[0.018, -0.031, -0.18], &[0.018, -0.088, 0.43]);
        let transverse = c(&[0.0], &[0.0034, 0.86]);
        let mut x = BTreeMap::new();
        x.insert("X".into(), axis.clone());
        x.insert("Y".into(), transverse.clone());
        x.insert("Z".into(), transverse.clone());
        gates.insert("X90".into(), x);
        let mut y = BTreeMap::new();
        y.insert("X".into(), transverse.clone());
        y.insert("Y".into(), axis);
        y.insert("Z".into(), transverse);
        gates.insert("Y90".into(), y);
        let mut cz = BTreeMap::new();
        cz.insert("XX".into(), c(&[0.016], &[0.0007, 0.15]));
        cz.insert("ZZ".into(), c(&[-0.006], &[0.036]));
        cz.insert("ZI".into(), c(&[0.0], &[0.0009, 1.4]));
        cz.insert("IZ".into(), c(&[0.0], &[0.0009, 1.4]));
        gates.insert("CZ".into(), cz);
        Self { gates }
    }

    /// Every coefficient identically zero.
    pub fn noiseless() -> Self {
        let mut gates = BTreeMap::new();
        for g in NativeGate::ALL {
            let m = model_labels(g).iter().map(|l| (l.to_string(), CoefficientModel::new(&[0.0], &[0.0]))).collect();
            gates.insert(g.name().to_string(), m);
        }
        Self { gates }
    }

    fn gate(&self, gate: NativeGate) -> Result<&BTreeMap<String, CoefficientModel>, QptError> {
        self.gates.get(gate.name()).ok_or_else(|| QptError::UnknownGate(gate.name().to_string()))
    }

    /// Hamiltonian rates (full Pauli labels) of `gate` for draws `r`
    /// (one per qubit the gate acts on).
    pub fn hamiltonian_terms(&self, gate: NativeGate, r: &[f64], eps: f64) -> Result<Vec<(String, f64)>, QptError> {
        let g = self.gate(gate)?;
        if r.len() != gate.n_qubits() {
            return Err(QptError::InvalidConfig(format!("{gate} needs {} draws, got {}", gate.n_qubits(), r.len())));
        }
        let mut out = Vec::new();
        for (label, m) in g {
            let field = label_field(label, r);
            let h = m.mean(eps) + m.fluct(eps) * field;
            if gate == NativeGate::CZ && label == "XX" {
                out.push(("XX".to_string(), h));
                out.push(("YY".to_string(), h));
            } else {
                out.push((label.clone(), h));
            }
        }
        Ok(out)
    }
}

/// Hamiltonian-only error generator Σ h_P H_P.
pub fn sample_compressed_generator(
    model: &CompressedGateModel,
    gate: NativeGate,
    r: &[f64],
    eps: f64,
) -> Result<ErrorGenerator, QptError> {
    let terms = model.hamiltonian_terms(gate, r, eps)?;
    let refs: Vec<(&str, f64)> = terms.iter().map(|(l, h)| (l.as_str(), *h)).collect();
    Ok(generator_from_rates(gate.n_qubits(), &refs, &[])?)
}

fn label_field(label: &str, r: &[f64]) -> f64 {
    if r.len() == 1 {
        return r[0];
    }
    let b = label.as_bytes();
    match (b.first(), b.get(1)) {
        (Some(b'I'), _) => r[1],
        (_, Some(b'I')) => r[0],
        _ => (r[0] + r[1]) * FRAC_1_SQRT_2,
    }
}

/// exp(−i a·σ) as [[u00, u01], [u10, u11]].
fn su2_exp(a: [f64; 3]) -> [[C64; 2]; 2] {
    let theta = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let (s, c) = theta.sin_cos();
    let k = if theta > 0.0 { s / theta } else { 1.0 };
    [
        [C64::new(c, -k * a[2]), C64::new(-k * a[1], -k * a[0])],
        [C64::new(k * a[1], -k * a[0]), C64::new(c, k * a[2])],
    ]
}

/// Closed forms for the single-qubit labels and the CZ labels; `None` when
/// the model carries other terms.
fn closed_form_unitary(g: &BTreeMap<String, CoefficientModel>, nq: usize, r: &[f64], eps: f64) -> Option<CMatrix> {
    let mut h = [0.0f64; 4];
    for (label, m) in g {
        let i = match (nq, label.as_str()) {
            (1, "X") | (2, "XX") => 0,
            (1, "Y") | (2, "ZZ") => 1,
            (1, "Z") | (2, "ZI") => 2,
            (2, "IZ") => 3,
            _ => return None,
        };
        h[i] += m.mean(eps) + m.fluct(eps) * label_field(label, r);
    }
    if nq == 1 {
        let u = su2_exp([h[0], h[1], h[2]]);
        return Some(CMatrix::from_fn(2, 2, |i, j| u[i][j]));
    }
    // h_XX (XX + YY) couples |01⟩, |10⟩ with amplitude 2h_XX; the rest is diagonal.
    let [xx, zz, zi, iz] = h;
    let p_zz = C64::from_polar(1.0, -zz);
    let p_z = C64::from_polar(1.0, -(zi + iz));
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = p_zz * p_z;
    u[(3, 3)] = p_zz * p_z.conj();
    let b = su2_exp([2.0 * xx, 0.0, zi - iz]).map(|row| row.map(|z| z * p_zz.conj()));
    u[(1, 1)] = b[0][0];
    u[(1, 2)] = b[0][1];
    u[(2, 1)] = b[1][0];
    u[(2, 2)] = b[1][1];
    Some(u)
}

/// exp(−i Σ h_P P), the unitary whose channel is exp of the sampled generator.
pub fn sample_compressed_unitary(
    model: &CompressedGateModel,
    gate: NativeGate,
    r: &[f64],
    eps: f64,
) -> Result<CMatrix, QptError> {
    let nq = gate.n_qubits();
    if r.len() != nq {
        return Err(QptError::InvalidConfig(format!("{gate} needs {nq} draws, got {}", r.len())));
    }
    if let Some(u) = closed_form_unitary(model.gate(gate)?, nq, r, eps) {
        return Ok(u);
    }
    let d = 1usize << nq;
    let mut h = CMatrix::zeros(d, d);
    for (label, rate) in model.hamiltonian_terms(gate, r, eps)? {
        let p = pauli_index(&label).ok_or_else(|| QptError::UnknownGate(label.clone()))?;
        h += pauli_matrix(p, nq) * C64::new(rate, 0.0);
    }
    Ok(matrix_exp(&(h * C64::new(0.0, -1.0)))?)
}

/// Measured coefficients of one gate at one ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPoint {
    pub eps: f64,
    pub label: String,
    pub mean: f64,
    pub fluct: f64,
}

/// Model coefficients read off a static split.
pub fn split_coefficients(gate: NativeGate, eps: f64, split: &StaticNoiseSplit) -> Vec<CoefficientPoint> {
    let dm = decompose(&split.l_m);
    let ds = decompose(&split.l_s());
    let pick = |d: &GeneratorDecomposition, l: &str| -> f64 {
        if gate == NativeGate::CZ && l == "XX" {
            (d.h("XX") + d.h("YY")) / 2.0
        } else {
            d.h(l)
        }
    };
    model_labels(gate)
        .iter()
        .map(|l| {
            let fluct = if gate == NativeGate::CZ && *l == "XX" {
                (ds.h("XX").abs() + ds.h("YY").abs()) / 2.0
            } else {
                ds.h(l).abs()
            };
            CoefficientPoint { eps, label: l.to_string(), mean: pick(&dm, l), fluct }
        })
        .collect()
}

/// Largest |stochastic rate| of L_M relative to the coherent norm.
pub fn stochastic_ratio(gate: NativeGate, eps: f64, split: &StaticNoiseSplit) -> f64 {
    let dm = decompose(&split.l_m);
    let coherent = split_coefficients(gate, eps, split)
        .iter()
        .map(|c| c.mean * c.mean + c.fluct * c.fluct)
        .sum::<f64>()
        .sqrt();
    let stoch = dm.s.values().fold(0.0f64, |a, v| a.max(v.abs()));
    if coherent > 0.0 {
        stoch / coherent
    } else if stoch > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Result of refitting the model on an ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedFit {
    pub model: CompressedGateModel,
    pub points: BTreeMap<String, Vec<CoefficientPoint>>,
    /// Per gate, the largest stochastic/coherent ratio over the sweep.
    pub stochastic_ratio: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Least-squares polynomials (degree ≤ 2) through each coefficient's sweep.
pub fn fit_compressed_model(
    splits: &BTreeMap<NativeGate, Vec<(f64, StaticNoiseSplit)>>,
    degree: usize,
) -> Result<CompressedFit, QptError> {
    if degree > 2 {
        return Err(QptError::InvalidConfig(format!("polynomial degree {degree} exceeds 2")));
    }
    let mut fit = CompressedFit {
        model: CompressedGateModel::default(),
        points: BTreeMap::new(),
        stochastic_ratio: BTreeMap::new(),
        warnings: Vec::new(),
    };
    for (gate, sweep) in splits {
        if sweep.len() < 3 {
            return Err(QptError::InvalidConfig(format!("{gate}: at least 3 ε points required, got {}", sweep.len())));
        }
        let mut pts = Vec::new();
        let mut worst = 0.0f64;
        for (eps, split) in sweep {
            pts.extend(split_coefficients(*gate, *eps, split));
            worst = worst.max(stochastic_ratio(*gate, *eps, split));
        }
        if worst > 0.1 {
            let w = format!("{gate}: stochastic rates reach {worst:.2} of the coherent norm");
            log::warn!("{w}");
            fit.warnings.push(w);
        }
        let mut models = BTreeMap::new();
        for label in model_labels(*gate) {
            let (xs, means, flucts): (Vec<f64>, Vec<f64>, Vec<f64>) = pts
                .iter()
                .filter(|p| p.label == *label)
                .fold((vec![], vec![], vec![]), |(mut a, mut b, mut c), p| {
                    a.push(p.eps);
                    b.push(p.mean);
                    c.push(p.fluct);
                    (a, b, c)
                });
            let mean_poly = polyfit(&xs, &means, degree)?;
            let fluct_poly = polyfit(&xs, &flucts, degree)?;
            models.insert(label.to_string(), CoefficientModel { mean_poly, fluct_poly });
        }
        fit.model.gates.insert(gate.name().to_string(), models);
        fit.stochastic_ratio.insert(gate.name().to_string(), worst);
        fit.points.insert(gate.name().to_string(), pts);
    }
    Ok(fit)
}

/// One T₂* point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub t2_star: f64,
    pub eps: f64,
    pub split: StaticNoiseSplit,
    /// Mean infidelity of the full-simulation window channels.
    pub full_infidelity: f64,
}

/// Run `base` at each T₂* (applied to every qubit).
pub fn sweep_t2_star(base: &QptRunConfig, t2_stars: &[f64]) -> Result<Vec<SweepPoint>, QptError> {
    t2_stars
        .iter()
        .map(|&t2s| {
            let mut cfg = base.clone();
            for q in &mut cfg.qubits {
                q.t2_star = t2s;
            }
            let series = run_windowed_qpt(&cfg)?;
            Ok(SweepPoint {
                t2_star: t2s,
                eps: cfg.epsilon(),
                split: extract_static_split(&series),
                full_infidelity: series.mean_infidelity(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{average_gate_fidelity, decompose, ptm_from_unitary};
    use crate::dynamics::Propagator;
    use crate::numerics::{seeded_rng, standard_normal};

    #[test]
    fn noiseless_model_gives_zero_generator() {
        let m = CompressedGateModel::noiseless();
        for g in NativeGate::ALL {
            let r = vec![0.7; g.n_qubits()];
            assert_eq!(sample_compressed_generator(&m, g, &r, 0.1).unwrap().matrix.amax(), 0.0);
        }
    }

    #[test]
    fn zero_draws_give_means() {
        let m = CompressedGateModel::published();
        let l = sample_compressed_generator(&m, NativeGate::CZ, &[0.0, 0.0], 0.0).unwrap();
        let d = decompose(&l);
        assert!((d.h("XX") - 0.016).abs() < 1e-14 && (d.h("YY") - 0.016).abs() < 1e-14);
        assert!((d.h("ZZ") + 0.006).abs() < 1e-14);
        assert!(d.h("ZI").abs() < 1e-14);
    }

    #[test]
    fn correlation_rules() {
        let m = CompressedGateModel::published();
        let t = m.hamiltonian_terms(NativeGate::CZ, &[1.0, 0.0], 0.1).unwrap();
        let get = |l: &str| t.iter().find(|(k, _)| k == l).unwrap().1;
        assert!((get("ZI") - (0.0009 + 0.14)).abs() < 1e-14);
        assert!(get("IZ").abs() < 1e-14);
        assert!((get("ZZ") - (-0.006 + 0.036 * FRAC_1_SQRT_2)).abs() < 1e-14);
        assert!(m.hamiltonian_terms(NativeGate::CZ, &[1.0], 0.1).is_err());
    }

    #[test]
    fn symmetric_term_variance() {
        let m = CompressedGateModel::published();
        let mut rng = seeded_rng(9, 0);
        let n = 10000;
        let eps = 0.1;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let r = [standard_normal(&mut rng), standard_normal(&mut rng)];
                let t = m.hamiltonian_terms(NativeGate::CZ, &r, eps).unwrap();
                t.iter().find(|(l, _)| l == "XX").unwrap().1
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let want = (0.0007 + 0.15 * eps).powi(2);
        assert!((var / want - 1.0).abs() < 0.03, "{}", var / want);
    }

    #[test]
    fn unitary_matches_generator() {
        let m = CompressedGateModel::published();
        for g in NativeGate::ALL {
            for r in [[0.8, 0.8], [-1.3, 2.1], [3.0, -0.4]] {
                let r = &r[..g.n_qubits()];
                let u = sample_compressed_unitary(&m, g, r, 0.3).unwrap();
                let from_u = ptm_from_unitary(&Propagator { matrix: u }).unwrap();
                let from_l = sample_compressed_generator(&m, g, r, 0.3).unwrap().exp();
                assert!((from_u.matrix - &from_l.matrix).amax() < 1e-12);
                assert!(average_gate_fidelity(&from_l) < 1.0);
            }
        }
    }

    #[test]
    fn json_shape() {
        let m = CompressedGateModel::published();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["I"]["Z"]["fluct_poly"][1], 1.4);
        assert_eq!(v["CZ"]["ZZ"]["mean_poly"][0], -0.006);
        let back: CompressedGateModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn fit_recovers_linear_sweep() {
        use crate::channels::generator_from_rates;
        use crate::numerics::RMatrix;
        let mk = |eps: f64| {
            let lm = generator_from_rates(1, &[("X", 0.01 + 0.1 * eps)], &[]).unwrap();
            let ls = generator_from_rates(1, &[("Z", 0.7 * eps)], &[]).unwrap();
            StaticNoiseSplit {
                n_qubits: 1,
                l_m: lm,
                l_s_abs: ls.matrix.abs(),
                l_f_abs: RMatrix::zeros(4, 4),
                signs: ls.matrix.map(|v| if v < 0.0 { -1.0 } else { 1.0 }),
                sign_reference: 0,
                n_samples: 1,
            }
        };
        let mut splits = BTreeMap::new();
        splits.insert(NativeGate::X90, [0.02, 0.05, 0.1, 0.2].iter().map(|&e| (e, mk(e))).collect::<Vec<_>>());
        let fit = fit_compressed_model(&splits, 1).unwrap();
        let x = &fit.model.gates["X90"];
        assert!((x["X"].mean_poly[0] - 0.01).abs() < 1e-12 && (x["X"].mean_poly[1] - 0.1).abs() < 1e-12);
        assert!(x["Z"].fluct_poly[0].abs() < 1e-12 && (x["Z"].fluct_poly[1] - 0.7).abs() < 1e-12);
        assert!(fit.warnings.is_empty());
        let mut short = BTreeMap::new();
        short.insert(NativeGate::I, vec![(0.1, mk(0.1))]);
        assert!(fit_compressed_model(&short, 1).is_err());
        assert!(fit_compressed_model(&splits, 3).is_err());
    }
}
