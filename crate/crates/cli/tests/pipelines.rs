use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const QPT: &str = "[sim]\nt_tot_us = 12.8\nwindow = 8\nn_realizations = 3\nn_mc = 200\n";
const NOISE_BENCH: &str = "[noise]\nt2star_us = 1.9\nt2_us = 10.0\n[sim]\ndt_us = 0.001\n\
    [bench]\nn_realizations = 20\nn_points = 5\necho_max_us = 20.0\nrabi_max_us = 1.0\ntrajectory_samples = 50\n";
const COMPRESS: &str = "[compress]\nt2star_grid_us = [1.0, 2.0, 3.0]\n\
    [sim]\nt_tot_us = 3.2\nwindow = 4\nn_realizations = 3\nn_mc = 200\n";
const IRB: &str = "[noise]\nt2star_us = 3.5\n[rb]\nlengths = [1, 4, 16]\nn_seq = 4\nexact_draws = 100\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tcqpt"));
    c.env("RUST_LOG", "error").env_remove("TCQPT_THREADS");
    c
}

fn run(tmp: &Path, pipeline: &str, config: &str, out: &str, extra: &[&str]) -> (i32, PathBuf) {
    let cfg = tmp.join(format!("{out}.toml"));
    fs::write(&cfg, config).unwrap();
    let dir = tmp.join(out);
    let status = bin().arg(pipeline).arg("--config").arg(&cfg).arg("--out").arg(&dir).args(extra).status().unwrap();
    (status.code().unwrap_or(-1), dir)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())).lines().next().unwrap_or("").to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Every file but the manifest, which records wall time.
fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn noise_bench_writes_the_benchmark_curves() {
    let tmp = TempDir::new().unwrap();
    let (code, dir) = run(tmp.path(), "noise-bench", NOISE_BENCH, "nb", &[]);
    assert_eq!(code, 0);
    for (file, h) in [
        ("ramsey.csv", "delay_us,p0,stderr"),
        ("echo.csv", "delay_us,p0,stderr"),
        ("rabi.csv", "duration_us,p0,stderr,amplitude"),
        ("cpmg.csv", "n_pi,delay_us,p0,stderr"),
        ("cpmg_spectrum.csv", "f_hz,s_psd"),
        ("trajectory.csv", "t_us,v_ueV"),
    ] {
        assert_eq!(header(&dir.join(file)), h, "{file}");
    }
    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("fits.json")).unwrap()).unwrap();
    assert!(fits["ramsey_t2star_us"].as_f64().unwrap() > 0.0);
    let m = manifest(&dir);
    assert_eq!(m["pipeline"], "noise-bench");
    assert_eq!(m["parameters"]["noise.t2star_us"], 1.9);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["files"].as_array().unwrap().iter().any(|f| f == "cpmg_spectrum.csv"));
    assert!(dir.join("config.resolved.toml").exists());
}

#[test]
fn qpt_and_benchmarks_schemas() {
    let tmp = TempDir::new().unwrap();
    let (code, dir) = run(tmp.path(), "qpt", QPT, "qpt", &[]);
    assert_eq!(code, 0);
    assert_eq!(header(&dir.join("window_fidelity.csv")), "realization,window,t_us,fidelity");
    assert_eq!(header(&dir.join("psd.csv")), "element,f_hz,psd");
    let first: serde_json::Value =
        serde_json::from_str(fs::read_to_string(dir.join("generators.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    for k in ["realization", "window", "t_us", "matrix"] {
        assert!(first.get(k).is_some(), "{k}");
    }
    assert_eq!(first["matrix"].as_array().unwrap().len(), 4);
    assert!(dir.join("split.json").exists());

    let (code, dir) = run(tmp.path(), "benchmarks", QPT, "bench", &[]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.join("benchmarks.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "benchmark,fidelity,stderr");
    let names: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, ["M", "s", "f", "Ms", "Msf", "full"]);
}

#[test]
fn compress_schemas() {
    let tmp = TempDir::new().unwrap();
    let (code, dir) = run(tmp.path(), "compress", COMPRESS, "comp", &[]);
    assert_eq!(code, 0);
    assert_eq!(header(&dir.join("coefficients.csv")), "gate,label,eps,mean,fluct");
    assert_eq!(header(&dir.join("compression.csv")), "gate,t2star_us,eps,full_infidelity,compressed_infidelity");
    assert_eq!(fs::read_to_string(dir.join("compression.csv")).unwrap().lines().count(), 1 + 4 * 3);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("compressed_model.json")).unwrap()).unwrap();
    assert!(model.to_string().contains("CZ"));

    // The fitted model feeds the irb pipeline.
    let cfg = format!("{IRB}model = {:?}\n", dir.join("compressed_model.json"));
    let (code, irb) = run(tmp.path(), "irb", &cfg, "irb_fitted", &[]);
    assert_eq!(code, 0);
    assert!(irb.join("irb_report.json").exists());

    let partial = tmp.path().join("partial.json");
    let mut m = model.clone();
    m.as_object_mut().unwrap().remove("I");
    fs::write(&partial, m.to_string()).unwrap();
    let (code, irb) = run(tmp.path(), "irb", &format!("{IRB}model = {partial:?}\n"), "irb_partial", &[]);
    assert_eq!(code, 2);
    assert!(fs::read_to_string(irb.join("error.json")).unwrap().contains("rb.model"));
}

#[test]
fn irb_writes_both_curves_and_report() {
    let tmp = TempDir::new().unwrap();
    let (code, dir) = run(tmp.path(), "irb", IRB, "irb", &["--plot"]);
    assert_eq!(code, 0);
    for f in ["rb_reference.csv", "rb_interleaved.csv"] {
        assert_eq!(header(&dir.join(f)), "m,p_mean,p_stderr,variant");
    }
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("irb_report.json")).unwrap()).unwrap();
    for k in ["p_ref", "p_int", "rb_infidelity", "exact_infidelity", "ratio"] {
        assert!(rep[k].is_number(), "{k}");
    }
    for svg in ["rb_reference.svg", "rb_interleaved.svg", "rb_overlay.svg"] {
        assert!(dir.join(svg).exists(), "{svg}");
    }
}

#[test]
fn same_seed_gives_identical_files_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let (a, da) = run(tmp.path(), "qpt", QPT, "a", &["--threads", "1", "--seed", "9"]);
    let (b, db) = run(tmp.path(), "qpt", QPT, "b", &["--threads", "2", "--seed", "9"]);
    let (c, dc) = run(tmp.path(), "qpt", QPT, "c", &["--seed", "10"]);
    assert_eq!((a, b, c), (0, 0, 0));
    let (fa, fb) = (data_files(&da), data_files(&db));
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
    let gen = |d: &Path| fs::read(d.join("generators.jsonl")).unwrap();
    assert_ne!(gen(&da), gen(&dc));
    assert_eq!(manifest(&da)["seed"], 9);

    let (x, dx) = run(tmp.path(), "irb", IRB, "irb_a", &[]);
    let (y, dy) = run(tmp.path(), "irb", IRB, "irb_b", &["--threads", "2"]);
    assert_eq!((x, y), (0, 0));
    assert_eq!(data_files(&dx), data_files(&dy));
}

#[test]
fn config_errors_exit_2_with_error_json() {
    let tmp = TempDir::new().unwrap();
    let (code, dir) = run(tmp.path(), "qpt", "[noise]\nt2star_ms = 3.0\n", "bad", &[]);
    assert_eq!(code, 2);
    let err: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "config");
    assert!(err["message"].as_str().unwrap().contains("noise.t2star_ms"));

    // Inconsistent T2*/T2 pair: no real quasistatic amplitude.
    let (code, dir) = run(tmp.path(), "noise-bench", "[noise]\nt2star_us = 1.9\nt2_us = 5.0\n", "radicand", &[]);
    assert_eq!(code, 2);
    assert!(fs::read_to_string(dir.join("error.json")).unwrap().contains("radicand"));
}

#[test]
fn sweep_fans_out_into_subdirectories() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!("{QPT}[sweep]\nparameter = \"noise.t2star_us\"\nvalues = [1.0, 3.0]\n");
    let (code, dir) = run(tmp.path(), "benchmarks", &cfg, "sweep", &["--plot"]);
    assert_eq!(code, 0);
    for sub in ["000_t2star_us=1.0", "001_t2star_us=3.0"] {
        assert!(dir.join(sub).join("benchmarks.csv").exists(), "{sub}");
        assert!(dir.join(sub).join("config.resolved.toml").exists(), "{sub}");
    }
    let agg = fs::read_to_string(dir.join("sweep_benchmarks.csv")).unwrap();
    assert_eq!(agg.lines().next().unwrap(), "value,benchmark,fidelity,stderr");
    assert_eq!(agg.lines().count(), 1 + 2 * 6);
    assert!(dir.join("sweep_benchmarks.svg").exists());
    let files = manifest(&dir)["files"].as_array().unwrap().clone();
    assert!(files.iter().any(|f| f == "001_t2star_us=3.0/benchmarks.csv"));
    assert!(files.iter().any(|f| f == "000_t2star_us=1.0/benchmarks.svg"));
}
