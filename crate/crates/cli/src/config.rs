//! Run configuration: TOML sections with unit-suffixed keys.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use tcqpt_core::dynamics::{BenchParams, NativeGate};
use tcqpt_core::noise::{
    derive_sensitivities_with, OneOverFSpec, QubitNoiseParams, SensitivityConvention, SynthesisOptions,
};
use tcqpt_core::rb::{GateEpsilon, RbConfig, ResidualExchange};
use tcqpt_core::tcqpt::{QptRunConfig, RSharing};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    NoiseBench,
    Qpt,
    Benchmarks,
    Compress,
    Irb,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::NoiseBench => "noise-bench",
            Pipeline::Qpt => "qpt",
            Pipeline::Benchmarks => "benchmarks",
            Pipeline::Compress => "compress",
            Pipeline::Irb => "irb",
        }
    }
}

/// One value, or one per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Same(f64),
    Each(Vec<f64>),
}

impl PerQubit {
    pub fn get(&self, qubit: usize) -> f64 {
        match self {
            PerQubit::Same(v) => *v,
            PerQubit::Each(v) => v.get(qubit).or(v.last()).copied().unwrap_or(f64::NAN),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PerQubit::Same(v) => vec![*v],
            PerQubit::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub a0_uev2: f64,
    pub f_ell_hz: f64,
    pub f_c_hz: f64,
    pub t2star_us: PerQubit,
    pub t2_us: PerQubit,
    pub gamma_r_mhz: f64,
    pub gamma_e_mhz: f64,
    pub convention: SensitivityConvention,
    pub quasistatic_remainder: bool,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            a0_uev2: 0.25,
            f_ell_hz: 100.0,
            f_c_hz: 1e7,
            t2star_us: PerQubit::Same(3.0),
            t2_us: PerQubit::Same(30.0),
            gamma_r_mhz: 0.008,
            gamma_e_mhz: 0.045,
            convention: SensitivityConvention::default(),
            quasistatic_remainder: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatesSection {
    pub gate: NativeGate,
    pub t_g_1q_us: f64,
    pub t_g_2q_us: f64,
    pub j0_mhz: f64,
    pub omega0_mhz: f64,
    /// Drive-frequency difference of the pair; enables the flip-flop term.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip_flop_mhz: Option<f64>,
}

impl Default for GatesSection {
    fn default() -> Self {
        Self { gate: NativeGate::X90, t_g_1q_us: 0.1, t_g_2q_us: 0.05, j0_mhz: 10.0, omega0_mhz: 5.0, flip_flop_mhz: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_us: f64,
    pub t_tot_us: f64,
    pub n_realizations: usize,
    pub window: usize,
    pub seed: u64,
    /// Binomial shots per tomography setting; exact channels when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Monte Carlo draws for fidelity benchmarks.
    pub n_mc: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { dt_us: 0.0005, t_tot_us: 1600.0, n_realizations: 20, window: 256, seed: 1, shots: None, n_mc: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub n_realizations: usize,
    pub n_points: usize,
    pub ramsey_max_us: f64,
    pub echo_max_us: f64,
    pub rabi_max_us: f64,
    pub cpmg_n_pi: Vec<usize>,
    /// CPMG delays span this range in units of T₂·√n_π.
    pub cpmg_span: [f64; 2],
    /// Samples of one exported noise trajectory; 0 skips the export.
    pub trajectory_samples: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            n_realizations: 500,
            n_points: 25,
            ramsey_max_us: 6.0,
            echo_max_us: 120.0,
            rabi_max_us: 2.0,
            cpmg_n_pi: vec![1, 2, 4, 8, 16],
            cpmg_span: [0.4, 1.3],
            trajectory_samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressSection {
    pub gates: Vec<NativeGate>,
    pub t2star_grid_us: Vec<f64>,
    pub degree: usize,
}

impl Default for CompressSection {
    fn default() -> Self {
        Self { gates: NativeGate::ALL.to_vec(), t2star_grid_us: vec![0.5, 1.0, 1.5, 2.0, 3.0, 5.0], degree: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbSection {
    pub lengths: Vec<usize>,
    pub n_seq: usize,
    pub h_ex: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    pub residual: ResidualExchange,
    pub sharing: RSharing,
    pub exact_draws: usize,
    /// Compressed model JSON; the published coefficients when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

impl Default for RbSection {
    fn default() -> Self {
        let d = RbConfig::standard(3.0);
        Self {
            lengths: d.lengths,
            n_seq: d.n_seq,
            h_ex: d.h_ex,
            shots: None,
            residual: d.residual,
            sharing: d.sharing,
            exact_draws: tcqpt_core::rb::EXACT_FIDELITY_DRAWS,
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `section.key` or a key that is unique across sections.
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Pipeline>,
    pub noise: NoiseSection,
    pub gates: GatesSection,
    pub sim: SimSection,
    pub bench: BenchSection,
    pub compress: CompressSection,
    pub rb: RbSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

const SECTIONS: [(&str, &[&str]); 7] = [
    (
        "noise",
        &["a0_uev2", "f_ell_hz", "f_c_hz", "t2star_us", "t2_us", "gamma_r_mhz", "gamma_e_mhz", "convention", "quasistatic_remainder"],
    ),
    ("gates", &["gate", "t_g_1q_us", "t_g_2q_us", "j0_mhz", "omega0_mhz", "flip_flop_mhz"]),
    ("sim", &["dt_us", "t_tot_us", "n_realizations", "window", "seed", "shots", "n_mc"]),
    (
        "bench",
        &["n_realizations", "n_points", "ramsey_max_us", "echo_max_us", "rabi_max_us", "cpmg_n_pi", "cpmg_span", "trajectory_samples"],
    ),
    ("compress", &["gates", "t2star_grid_us", "degree"]),
    ("rb", &["lengths", "n_seq", "h_ex", "shots", "residual", "sharing", "exact_draws", "model"]),
    ("sweep", &["parameter", "values"]),
];

const UNIT_SUFFIXES: [&str; 12] = ["s", "ms", "us", "ns", "ps", "hz", "khz", "mhz", "ghz", "uev2", "ev", "uev"];

fn split_unit(key: &str) -> Option<(&str, &str)> {
    let (stem, suffix) = key.rsplit_once('_')?;
    UNIT_SUFFIXES.contains(&suffix.to_ascii_lowercase().as_str()).then_some((stem, suffix))
}

fn key_error(section: Option<&str>, key: &str, known: &[&str]) -> CliError {
    let full = section.map_or_else(|| key.to_string(), |s| format!("{s}.{key}"));
    if let Some((stem, _)) = split_unit(key) {
        if let Some(want) = known.iter().find(|k| split_unit(k).is_some_and(|(s, _)| s == stem)) {
            let expected = section.map_or_else(|| want.to_string(), |s| format!("{s}.{want}"));
            return CliError::Config(format!("`{full}`: wrong unit suffix, expected `{expected}`"));
        }
    }
    CliError::Config(format!("unknown key `{full}`"))
}

/// Reject unknown keys and unit-suffix mismatches before typed parsing.
fn check_keys(table: &toml::Table) -> Result<(), CliError> {
    let top: Vec<&str> = SECTIONS.iter().map(|(s, _)| *s).chain(["pipeline"]).collect();
    for (key, value) in table {
        let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == key) else {
            if key == "pipeline" {
                continue;
            }
            return Err(key_error(None, key, &top));
        };
        let Some(inner) = value.as_table() else {
            return Err(CliError::Config(format!("`{key}` must be a table")));
        };
        for k in inner.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(key_error(Some(key), k, keys));
            }
        }
    }
    Ok(())
}

fn parse_error(e: toml::de::Error) -> CliError {
    CliError::Config(e.message().to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(parse_error)?;
        check_keys(&table)?;
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(parse_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, what: &str| Err(CliError::Config(format!("`{key}` {what}")));
        let n = &self.noise;
        for (key, v) in [("noise.a0_uev2", n.a0_uev2), ("noise.gamma_r_mhz", n.gamma_r_mhz), ("noise.gamma_e_mhz", n.gamma_e_mhz)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, "must be finite and non-negative");
            }
        }
        if !(n.f_ell_hz > 0.0 && n.f_c_hz > n.f_ell_hz && n.f_c_hz.is_finite()) {
            return bad("noise.f_c_hz", "must exceed noise.f_ell_hz > 0");
        }
        for (key, pq) in [("noise.t2star_us", &n.t2star_us), ("noise.t2_us", &n.t2_us)] {
            let v = pq.values();
            if v.is_empty() || v.len() > 2 || v.iter().any(|x| !(*x > 0.0)) {
                return bad(key, "must be one or two positive values");
            }
        }
        let g = &self.gates;
        for (key, v) in [
            ("gates.t_g_1q_us", g.t_g_1q_us),
            ("gates.t_g_2q_us", g.t_g_2q_us),
            ("gates.j0_mhz", g.j0_mhz),
            ("gates.omega0_mhz", g.omega0_mhz),
            ("sim.dt_us", self.sim.dt_us),
            ("sim.t_tot_us", self.sim.t_tot_us),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, "must be positive");
            }
        }
        if g.t_g_2q_us + 1e-12 < 0.5 / g.j0_mhz {
            return bad("gates.t_g_2q_us", "is shorter than the exchange pulse 1/(2 j0_mhz)");
        }
        for (key, v) in [
            ("sim.n_realizations", self.sim.n_realizations),
            ("sim.window", self.sim.window),
            ("sim.n_mc", self.sim.n_mc),
            ("bench.n_realizations", self.bench.n_realizations),
            ("rb.n_seq", self.rb.n_seq),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        if self.sim.n_mc < 100 {
            return bad("sim.n_mc", "must be at least 100");
        }
        if self.sim.shots == Some(0) || self.rb.shots == Some(0) {
            return bad(if self.sim.shots == Some(0) { "sim.shots" } else { "rb.shots" }, "must be at least 1");
        }
        let b = &self.bench;
        if b.n_points < 2 {
            return bad("bench.n_points", "must be at least 2");
        }
        if b.cpmg_n_pi.contains(&0) {
            return bad("bench.cpmg_n_pi", "entries must be positive");
        }
        let mut distinct = b.cpmg_n_pi.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 3 {
            return bad("bench.cpmg_n_pi", "needs at least 3 distinct pulse counts");
        }
        if !(b.cpmg_span[0] > 0.0 && b.cpmg_span[1] > b.cpmg_span[0]) {
            return bad("bench.cpmg_span", "must be an increasing pair of positive factors");
        }
        let c = &self.compress;
        if c.degree > 2 {
            return bad("compress.degree", "must be 0, 1 or 2");
        }
        if c.t2star_grid_us.len() < 3 || c.t2star_grid_us.iter().any(|x| !(*x > 0.0)) {
            return bad("compress.t2star_grid_us", "needs at least 3 positive values");
        }
        if c.gates.is_empty() {
            return bad("compress.gates", "must not be empty");
        }
        let rb = &self.rb;
        if rb.lengths.is_empty() || rb.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return bad("rb.lengths", "must be non-empty and strictly ascending");
        }
        if rb.exact_draws < 2 {
            return bad("rb.exact_draws", "must be at least 2");
        }
        if !rb.h_ex.is_finite() {
            return bad("rb.h_ex", "must be finite");
        }
        if let Some(s) = &self.sweep {
            resolve_sweep_key(&s.parameter)?;
            if s.values.is_empty() {
                return bad("sweep.values", "must not be empty");
            }
            self.expand_sweep()?;
        }
        self.qpt_config(self.gates.gate).validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.rb_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn spec(&self) -> OneOverFSpec {
        OneOverFSpec { a0: self.noise.a0_uev2, f_ell: self.noise.f_ell_hz, f_c: self.noise.f_c_hz }
    }

    pub fn qubit(&self, q: usize) -> QubitNoiseParams {
        QubitNoiseParams {
            t2_star: self.noise.t2star_us.get(q),
            t2: self.noise.t2_us.get(q),
            gamma_r: self.noise.gamma_r_mhz,
            gamma_e: self.noise.gamma_e_mhz,
            omega0: self.gates.omega0_mhz,
            j0: self.gates.j0_mhz,
        }
    }

    pub fn synthesis(&self) -> SynthesisOptions {
        SynthesisOptions { quasistatic_remainder: self.noise.quasistatic_remainder }
    }

    pub fn qpt_config(&self, gate: NativeGate) -> QptRunConfig {
        QptRunConfig {
            gate,
            window: self.sim.window,
            t_tot: self.sim.t_tot_us,
            n_realizations: self.sim.n_realizations,
            spec: self.spec(),
            qubits: (0..gate.n_qubits()).map(|q| self.qubit(q)).collect(),
            convention: self.noise.convention,
            t_g_1q: self.gates.t_g_1q_us,
            t_g_2q: self.gates.t_g_2q_us,
            dt: self.sim.dt_us,
            flip_flop: self.gates.flip_flop_mhz.map(|f| 2.0 * PI * f),
            shots: self.sim.shots,
            synthesis: self.synthesis(),
            seed: self.sim.seed,
        }
    }

    pub fn bench_params(&self) -> Result<BenchParams, CliError> {
        let sens = derive_sensitivities_with(&self.qubit(0), &self.spec(), self.noise.convention)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut p = BenchParams::new(self.spec(), sens, self.gates.omega0_mhz, self.sim.seed);
        p.dt = self.sim.dt_us;
        p.synthesis = self.synthesis();
        Ok(p)
    }

    pub fn rb_config(&self) -> RbConfig {
        RbConfig {
            lengths: self.rb.lengths.clone(),
            n_seq: self.rb.n_seq,
            eps: GateEpsilon::from_t2_star(self.noise.t2star_us.get(0), self.gates.t_g_1q_us, self.gates.t_g_2q_us),
            h_ex: self.rb.h_ex,
            residual: self.rb.residual,
            sharing: self.rb.sharing,
            shots: self.rb.shots,
            seed: self.sim.seed,
        }
    }

    /// One resolved config per sweep value, labelled for its subdirectory.
    pub fn expand_sweep(&self) -> Result<Vec<(String, RunConfig)>, CliError> {
        let Some(sweep) = &self.sweep else {
            return Ok(Vec::new());
        };
        let (section, key) = resolve_sweep_key(&sweep.parameter)?;
        let mut base = self.clone();
        base.sweep = None;
        let base_value = toml::Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        let mut out = Vec::new();
        for (i, v) in sweep.values.iter().enumerate() {
            let mut t = base_value.clone();
            t.get_mut(section)
                .and_then(|s| s.as_table_mut())
                .expect("sections serialize as tables")
                .insert(key.to_string(), v.clone());
            let cfg: RunConfig = t
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config(format!("sweep value {v} for `{section}.{key}`: {}", e.message())))?;
            cfg.validate()?;
            let label = format!("{i:03}_{key}={}", v.to_string().trim_matches('"'));
            out.push((label, cfg));
        }
        Ok(out)
    }
}

fn resolve_sweep_key(parameter: &str) -> Result<(&'static str, &'static str), CliError> {
    let sweepable = || SECTIONS.iter().filter(|(s, _)| *s != "sweep");
    let hits: Vec<(&'static str, &'static str)> = match parameter.split_once('.') {
        Some((s, k)) => sweepable()
            .filter(|(sec, _)| *sec == s)
            .flat_map(|(sec, keys)| keys.iter().filter(|kk| **kk == k).map(move |kk| (*sec, *kk)))
            .collect(),
        None => sweepable().flat_map(|(sec, keys)| keys.iter().filter(|kk| **kk == parameter).map(move |kk| (*sec, *kk))).collect(),
    };
    match hits.as_slice() {
        [one] => Ok(*one),
        [] => Err(CliError::Config(format!("`sweep.parameter`: unknown key `{parameter}`"))),
        _ => Err(CliError::Config(format!("`sweep.parameter`: `{parameter}` is ambiguous, use section.key"))),
    }
}

/// Flattened `section.key → value` view used in manifests.
pub fn flatten(cfg: &RunConfig) -> BTreeMap<String, serde_json::Value> {
    let mut out = BTreeMap::new();
    if let Ok(serde_json::Value::Object(top)) = serde_json::to_value(cfg) {
        for (section, v) in top {
            match v {
                serde_json::Value::Object(inner) => {
                    for (k, x) in inner {
                        out.insert(format!("{section}.{k}"), x);
                    }
                }
                other => {
                    out.insert(section, other);
                }
            }
        }
    }
    out
}
