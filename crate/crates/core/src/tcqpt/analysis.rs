//! Spectra, static/fluctuating split and fidelity benchmarks of a generator series.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GeneratorSeries, QptError};
use crate::channels::{average_gate_fidelity, decompose, pauli_index, pauli_label, ErrorGenerator};
use crate::numerics::{matrix_exp_real, periodogram_psd, standard_normal, RMatrix, RealSeries, SpectrumEstimate};

/// Scalar extracted from each window's generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementSelector {
    /// PTM entry L[row, col] by basis index.
    Entry { row: usize, col: usize },
    /// Hamiltonian rate of a Pauli label.
    Hamiltonian(String),
    /// Stochastic rate of a Pauli label.
    Stochastic(String),
}

impl ElementSelector {
    /// Value of this selector for one generator.
    pub fn value(&self, l: &ErrorGenerator) -> Result<f64, QptError> {
        let np = l.matrix.nrows();
        match self {
            ElementSelector::Entry { row, col } => {
                if *row >= np || *col >= np {
                    return Err(QptError::Selector(format!("entry ({row},{col}) outside a {np}x{np} generator")));
                }
                Ok(l.matrix[(*row, *col)])
            }
            ElementSelector::Hamiltonian(p) | ElementSelector::Stochastic(p) => {
                if p.len() != l.n_qubits || pauli_index(p).is_none_or(|i| i == 0) {
                    return Err(QptError::Selector(format!("`{p}` is not a non-identity {}-qubit Pauli", l.n_qubits)));
                }
                let d = decompose(l);
                Ok(if matches!(self, ElementSelector::Hamiltonian(_)) { d.h(p) } else { d.s(p) })
            }
        }
    }

    /// Basis-indexed label, e.g. `L[X,Y]`, `H_ZZ`.
    pub fn label(&self, n_qubits: usize) -> String {
        match self {
            ElementSelector::Entry { row, col } => {
                format!("L[{},{}]", pauli_label(*row, n_qubits), pauli_label(*col, n_qubits))
            }
            ElementSelector::Hamiltonian(p) => format!("H_{p}"),
            ElementSelector::Stochastic(p) => format!("S_{p}"),
        }
    }

    /// Every PTM entry of an `n_qubits` generator below the first row.
    pub fn all_entries(n_qubits: usize) -> Vec<ElementSelector> {
        let np = 1usize << (2 * n_qubits);
        (1..np).flat_map(|row| (0..np).map(move |col| ElementSelector::Entry { row, col })).collect()
    }
}

impl fmt::Display for ElementSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementSelector::Entry { row, col } => write!(f, "L[{row},{col}]"),
            ElementSelector::Hamiltonian(p) => write!(f, "H_{p}"),
            ElementSelector::Stochastic(p) => write!(f, "S_{p}"),
        }
    }
}

impl FromStr for ElementSelector {
    type Err = QptError;

    /// `H_ZZ`, `S_X`, `L[X,Y]` (Pauli labels) or `L[1,2]` (indices).
    fn from_str(s: &str) -> Result<Self, QptError> {
        let s = s.trim();
        if let Some(p) = s.strip_prefix("H_") {
            return Ok(ElementSelector::Hamiltonian(p.to_ascii_uppercase()));
        }
        if let Some(p) = s.strip_prefix("S_") {
            return Ok(ElementSelector::Stochastic(p.to_ascii_uppercase()));
        }
        let inner = s
            .strip_prefix("L[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| QptError::Selector(format!("cannot parse selector `{s}`")))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(QptError::Selector(format!("cannot parse selector `{s}`")));
        }
        let idx = |p: &str| p.parse::<usize>().ok().or_else(|| pauli_index(p));
        match (idx(parts[0]), idx(parts[1])) {
            (Some(row), Some(col)) => Ok(ElementSelector::Entry { row, col }),
            _ => Err(QptError::Selector(format!("cannot parse selector `{s}`"))),
        }
    }
}

/// Realization-averaged periodogram of one generator element.
///
/// Each realization's series is mean-removed and transformed as a whole.
pub fn generator_psd(series: &GeneratorSeries, selector: &ElementSelector) -> Result<SpectrumEstimate, QptError> {
    if series.n_windows() < 2 {
        return Err(QptError::InvalidConfig("at least two windows per realization are needed for a spectrum".into()));
    }
    let mut spectra = Vec::with_capacity(series.n_realizations());
    for r in &series.realizations {
        let values = r.generators.iter().map(|l| selector.value(l)).collect::<Result<Vec<_>, _>>()?;
        let n = values.len();
        let s = RealSeries::new(series.interval, 0.0, values)?;
        spectra.push(periodogram_psd(&s, n)?);
    }
    Ok(SpectrumEstimate::average(&spectra)?)
}

/// `L_eff = L_M + L_s R` parameters of a gate.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticNoiseSplit {
    pub n_qubits: usize,
    /// Mean generator over all realizations and windows.
    pub l_m: ErrorGenerator,
    /// Entrywise standard deviation about `l_m` over all samples.
    pub l_s_abs: RMatrix,
    /// Entrywise standard deviation about each realization's own mean
    /// (the within-run, higher-frequency part).
    pub l_f_abs: RMatrix,
    /// ±1 per entry, from the deviation of the reference realization.
    pub signs: RMatrix,
    pub sign_reference: usize,
    pub n_samples: usize,
}

impl StaticNoiseSplit {
    pub fn l_s(&self) -> ErrorGenerator {
        ErrorGenerator { n_qubits: self.n_qubits, matrix: self.l_s_abs.component_mul(&self.signs) }
    }

    pub fn l_f(&self) -> ErrorGenerator {
        ErrorGenerator { n_qubits: self.n_qubits, matrix: self.l_f_abs.component_mul(&self.signs) }
    }
}

/// Mean and fluctuation magnitudes with signs fixed by realization 0.
pub fn extract_static_split(series: &GeneratorSeries) -> StaticNoiseSplit {
    let nq = series.n_qubits;
    let np = 1usize << (2 * nq);
    if series.n_realizations() < 10 {
        log::warn!("static split from {} realizations; at least 10 are recommended", series.n_realizations());
    }
    let mut sum = RMatrix::zeros(np, np);
    let mut n = 0usize;
    for (_, _, l) in series.iter() {
        sum += &l.matrix;
        n += 1;
    }
    let mean = if n > 0 { sum / n as f64 } else { RMatrix::zeros(np, np) };
    let mut var = RMatrix::zeros(np, np);
    let mut within = RMatrix::zeros(np, np);
    let mut reference_dev = RMatrix::zeros(np, np);
    for (r, rs) in series.realizations.iter().enumerate() {
        let k = rs.generators.len().max(1) as f64;
        let mut rmean = RMatrix::zeros(np, np);
        for l in &rs.generators {
            rmean += &l.matrix;
        }
        rmean /= k;
        for l in &rs.generators {
            let d = &l.matrix - &mean;
            var += d.component_mul(&d);
            let w = &l.matrix - &rmean;
            within += w.component_mul(&w);
        }
        if r == 0 {
            reference_dev = rmean - &mean;
        }
    }
    let denom = n.max(1) as f64;
    let l_s_abs = (var / denom).map(f64::sqrt);
    let l_f_abs = (within / denom).map(f64::sqrt);
    let signs = reference_dev.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
    StaticNoiseSplit {
        n_qubits: nq,
        l_m: ErrorGenerator { n_qubits: nq, matrix: mean },
        l_s_abs,
        l_f_abs,
        signs,
        sign_reference: 0,
        n_samples: n,
    }
}

/// Per-source fidelities; sampled values carry standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityBenchmarks {
    pub f_m: f64,
    pub f_s: f64,
    pub f_s_err: f64,
    pub f_f: f64,
    pub f_f_err: f64,
    pub f_ms: f64,
    pub f_ms_err: f64,
    pub f_msf: f64,
    pub f_msf_err: f64,
    pub n_mc: usize,
}

fn agf_of(l: &RMatrix, n_qubits: usize) -> f64 {
    let e = matrix_exp_real(l).expect("square generator");
    average_gate_fidelity(&crate::channels::PauliTransferMatrix { n_qubits, matrix: e })
}

fn mean_err(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// F_M exactly, and F_s, F_f, F_Ms, F_Msf by Monte Carlo over unit Gaussian
/// draws R (static) and V (fast). Without `high_freq` the L_f term is dropped
/// and F_f = 1.
pub fn fidelity_benchmarks<R: Rng + ?Sized>(
    split: &StaticNoiseSplit,
    high_freq: bool,
    n_mc: usize,
    rng: &mut R,
) -> FidelityBenchmarks {
    let nq = split.n_qubits;
    let lm = &split.l_m.matrix;
    let ls = split.l_s().matrix;
    let lf = split.l_f().matrix;
    let f_m = agf_of(lm, nq);
    let n_mc = n_mc.max(1);
    let (mut fs, mut ff, mut fms, mut fmsf) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n_mc {
        let r = standard_normal(rng);
        let v = standard_normal(rng);
        fs.push(agf_of(&(&ls * r), nq));
        fms.push(agf_of(&(lm + &ls * r), nq));
        if high_freq {
            ff.push(agf_of(&(&lf * v), nq));
            fmsf.push(agf_of(&(lm + &ls * r + &lf * v), nq));
        }
    }
    let (f_s, f_s_err) = mean_err(&fs);
    let (f_ms, f_ms_err) = mean_err(&fms);
    let ((f_f, f_f_err), (f_msf, f_msf_err)) =
        if high_freq { (mean_err(&ff), mean_err(&fmsf)) } else { ((1.0, 0.0), (f_ms, f_ms_err)) };
    FidelityBenchmarks { f_m, f_s, f_s_err, f_f, f_f_err, f_ms, f_ms_err, f_msf, f_msf_err, n_mc }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::generator_from_rates;
    use crate::dynamics::NativeGate;
    use crate::numerics::seeded_rng;
    use crate::tcqpt::RealizationSeries;

    fn synthetic(l0: &ErrorGenerator, l1: &ErrorGenerator, n_real: usize, n_win: usize, fast: f64) -> GeneratorSeries {
        let mut rng = seeded_rng(5, 0);
        let realizations = (0..n_real)
            .map(|_| {
                let r = standard_normal(&mut rng);
                let generators = (0..n_win)
                    .map(|_| {
                        let v = fast * standard_normal(&mut rng);
                        ErrorGenerator { n_qubits: 1, matrix: &l0.matrix + &l1.matrix * (r + v) }
                    })
                    .collect();
                RealizationSeries { generators, fidelities: vec![1.0; n_win] }
            })
            .collect();
        GeneratorSeries { gate: NativeGate::X90, n_qubits: 1, interval: 0.1, realizations }
    }

    #[test]
    fn selector_parsing() {
        assert_eq!("H_ZZ".parse::<ElementSelector>().unwrap(), ElementSelector::Hamiltonian("ZZ".into()));
        assert_eq!("L[X,Y]".parse::<ElementSelector>().unwrap(), ElementSelector::Entry { row: 1, col: 2 });
        assert_eq!("L[3, 0]".parse::<ElementSelector>().unwrap(), ElementSelector::Entry { row: 3, col: 0 });
        assert!("Q".parse::<ElementSelector>().is_err());
        let l = ErrorGenerator::zeros(1);
        assert!(ElementSelector::Entry { row: 4, col: 0 }.value(&l).is_err());
        assert!(ElementSelector::Hamiltonian("ZZ".into()).value(&l).is_err());
    }

    #[test]
    fn static_split_recovers_constructed_ensemble() {
        let l0 = generator_from_rates(1, &[("X", 0.01)], &[("Z", 0.001)]).unwrap();
        let l1 = generator_from_rates(1, &[("Z", 0.02)], &[]).unwrap();
        let s = synthetic(&l0, &l1, 4000, 3, 0.0);
        let split = extract_static_split(&s);
        assert!((&split.l_m.matrix - &l0.matrix).amax() < 3e-3);
        let ls = split.l_s();
        // l_s reproduces ±l_1 up to one global sign
        let sign = if ls.matrix[(1, 2)] * l1.matrix[(1, 2)] > 0.0 { 1.0 } else { -1.0 };
        assert!((&ls.matrix * sign - &l1.matrix).amax() < 0.05 * l1.matrix.amax());
        assert!(split.l_f_abs.amax() < 1e-12);
        for v in split.signs.iter() {
            assert!(*v == 1.0 || *v == -1.0);
        }
    }

    #[test]
    fn zero_series_gives_zero_split_and_unit_fidelity() {
        let z = ErrorGenerator::zeros(1);
        let s = synthetic(&z, &z, 10, 4, 1.0);
        let split = extract_static_split(&s);
        assert_eq!(split.l_m.matrix.amax(), 0.0);
        assert_eq!(split.l_s_abs.amax(), 0.0);
        let mut rng = seeded_rng(1, 1);
        let b = fidelity_benchmarks(&split, true, 100, &mut rng);
        assert_eq!(b.f_s, 1.0);
        assert_eq!(b.f_m, 1.0);
    }

    #[test]
    fn white_series_has_flat_spectrum() {
        let z = ErrorGenerator::zeros(1);
        let l1 = generator_from_rates(1, &[("X", 0.01)], &[]).unwrap();
        let s = synthetic(&z, &l1, 50, 256, 1.0);
        let psd = generator_psd(&s, &ElementSelector::Hamiltonian("X".into())).unwrap();
        let lo = psd.band_mean(psd.freqs[0], psd.freqs[psd.len() / 4]).unwrap();
        let hi = psd.band_mean(psd.freqs[3 * psd.len() / 4], psd.freqs[psd.len() - 1]).unwrap();
        assert!(lo / hi < 2.0 && hi / lo < 2.0, "{lo} {hi}");
    }

    #[test]
    fn benchmarks_in_range_and_converge() {
        let l0 = generator_from_rates(1, &[], &[("Z", 0.002)]).unwrap();
        let l1 = generator_from_rates(1, &[("Z", 0.03), ("X", 0.01)], &[]).unwrap();
        let split = extract_static_split(&synthetic(&l0, &l1, 200, 8, 0.3));
        let mut rng = seeded_rng(2, 0);
        let a = fidelity_benchmarks(&split, true, 400, &mut rng);
        let b = fidelity_benchmarks(&split, true, 1600, &mut rng);
        for f in [a.f_m, a.f_s, a.f_f, a.f_ms, a.f_msf] {
            assert!((0.0..=1.0).contains(&f));
        }
        assert!(a.f_s < 1.0 && a.f_m < 1.0);
        let ratio = a.f_s_err / b.f_s_err;
        assert!((ratio - 2.0).abs() < 0.6, "{ratio}");
    }
}
