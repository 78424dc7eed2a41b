use std::path::PathBuf;

use tcqpt_cli::config::{Pipeline, RunConfig};
use tcqpt_cli::CliError;
use tcqpt_core::dynamics::NativeGate;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config_err(text: &str) -> String {
    match RunConfig::from_toml_str(text) {
        Err(CliError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn empty_file_gives_single_qubit_defaults() {
    let cfg = RunConfig::from_toml_str("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.gates.gate, NativeGate::X90);
    assert_eq!(cfg.noise.t2star_us.get(0), 3.0);
    assert_eq!(cfg.noise.t2_us.get(0), 30.0);
    assert_eq!(cfg.noise.gamma_r_mhz, 0.008);
    assert_eq!(cfg.noise.f_ell_hz, 100.0);
    assert_eq!(cfg.noise.f_c_hz, 1e7);
    assert_eq!(cfg.gates.t_g_1q_us, 0.1);
    assert_eq!(cfg.sim.t_tot_us, 1600.0);
    assert_eq!(cfg.sim.window, 256);
    assert_eq!(cfg.sim.n_realizations, 20);
    let q = cfg.qpt_config(cfg.gates.gate);
    let n_gates = (q.t_tot / q.t_g_1q).round() as usize;
    assert_eq!(n_gates / q.window, 62);
}

#[test]
fn noise_bench_scenario_file() {
    let cfg = RunConfig::from_path(&configs_dir().join("noise_bench.toml")).unwrap();
    assert_eq!(cfg.pipeline, Some(Pipeline::NoiseBench));
    assert_eq!(cfg.noise.t2star_us.get(0), 1.9);
    assert_eq!(cfg.noise.t2_us.get(0), 40.0);
    assert_eq!(cfg.noise.f_c_hz, 1e7);
    assert_eq!(cfg.noise.f_ell_hz, 100.0);
    assert_eq!(cfg.noise.a0_uev2, 0.25);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(cfg.pipeline.is_some(), "{}", path.display());
        }
    }
}

#[test]
fn wrong_unit_suffix_names_the_key() {
    let m = config_err("[noise]\nt2star_ms = 3.0\n");
    assert!(m.contains("noise.t2star_ms"), "{m}");
    assert!(m.contains("noise.t2star_us"), "{m}");
    let m = config_err("[gates]\nj0_khz = 10\n");
    assert!(m.contains("gates.j0_khz"), "{m}");
}

#[test]
fn unknown_keys_rejected() {
    let m = config_err("[noise]\nbogus = 1\n");
    assert!(m.contains("noise.bogus"), "{m}");
    let m = config_err("[nosie]\nt2_us = 1\n");
    assert!(m.contains("nosie"), "{m}");
    let m = config_err("extra = true\n");
    assert!(m.contains("extra"), "{m}");
}

#[test]
fn range_errors_name_the_key() {
    for (text, key) in [
        ("[noise]\nt2star_us = -1.0\n", "noise.t2star_us"),
        ("[noise]\nf_c_hz = 50.0\n", "noise.f_c_hz"),
        ("[sim]\nn_realizations = 0\n", "sim.n_realizations"),
        ("[rb]\nlengths = [4, 2]\n", "rb.lengths"),
        ("[bench]\ncpmg_n_pi = [1, 1, 2]\n", "bench.cpmg_n_pi"),
        ("[compress]\ndegree = 3\n", "compress.degree"),
        ("[gates]\nt_g_2q_us = 0.01\n", "gates.t_g_2q_us"),
    ] {
        let m = config_err(text);
        assert!(m.contains(key), "{text:?}: {m}");
    }
}

#[test]
fn per_qubit_values() {
    let cfg = RunConfig::from_toml_str("[noise]\nt2_us = [30.0, 105.0]\n").unwrap();
    assert_eq!(cfg.noise.t2_us.get(0), 30.0);
    assert_eq!(cfg.noise.t2_us.get(1), 105.0);
    let q = cfg.qpt_config(NativeGate::CZ);
    assert_eq!(q.qubits[1].t2, 105.0);
    assert!(RunConfig::from_toml_str("[noise]\nt2_us = [1.0, 2.0, 3.0]\n").is_err());
}

#[test]
fn resolved_config_round_trips() {
    let cfg = RunConfig::from_toml_str("[noise]\nt2star_us = 1.5\n[sweep]\nparameter = \"seed\"\nvalues = [1, 2]\n").unwrap();
    let back = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn sweep_expands_one_config_per_value() {
    let cfg = RunConfig::from_toml_str("[sweep]\nparameter = \"t2star_us\"\nvalues = [0.5, 2.0, 5.0]\n").unwrap();
    let points = cfg.expand_sweep().unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[1].0, "001_t2star_us=2.0");
    assert_eq!(points[2].1.noise.t2star_us.get(0), 5.0);
    assert!(points.iter().all(|(_, c)| c.sweep.is_none()));

    let m = config_err("[sweep]\nparameter = \"n_realizations\"\nvalues = [1]\n");
    assert!(m.contains("ambiguous"), "{m}");
    let m = config_err("[sweep]\nparameter = \"t2star_us\"\nvalues = [-1.0]\n");
    assert!(m.contains("noise.t2star_us"), "{m}");
    assert!(RunConfig::from_toml_str("[sweep]\nparameter = \"bench.n_realizations\"\nvalues = [5]\n").is_ok());
}

#[test]
fn flatten_uses_section_keys() {
    let flat = tcqpt_cli::config::flatten(&RunConfig::default());
    assert_eq!(flat["noise.t2star_us"], serde_json::json!(3.0));
    assert_eq!(flat["sim.seed"], serde_json::json!(1));
    assert!(flat.contains_key("rb.h_ex"));
}
