use std::fs;
use std::process::Command;

use tempfile::TempDir;

use tcqpt_cli::plots::render_plots;
use tcqpt_cli::CliError;

#[test]
fn empty_csv_gives_empty_axes() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("ramsey.csv"), "delay_us,p0,stderr\n").unwrap();
    fs::write(tmp.path().join("psd.csv"), "element,f_hz,psd\n").unwrap();
    let out = render_plots(tmp.path()).unwrap();
    assert_eq!(out.len(), 2);
    for p in out {
        assert!(fs::read_to_string(p).unwrap().starts_with("<svg"));
    }
    let status = Command::new(env!("CARGO_BIN_EXE_tcqpt")).arg("plot").arg(tmp.path()).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn cpmg_spectrum_is_log_log_with_guide() {
    let tmp = TempDir::new().unwrap();
    let rows: String = (0..6).map(|i| format!("{},{}\n", 1e4 * 2f64.powi(i), 1e3 / 2f64.powi(i))).collect();
    fs::write(tmp.path().join("cpmg_spectrum.csv"), format!("f_hz,s_psd\n{rows}")).unwrap();
    render_plots(tmp.path()).unwrap();
    let svg = fs::read_to_string(tmp.path().join("cpmg_spectrum.svg")).unwrap();
    assert!(svg.contains("slope -1"));
    assert!(svg.contains("f_hz"));
}

#[test]
fn rb_curves_are_overlaid() {
    let tmp = TempDir::new().unwrap();
    let curve = |v: &str, p: f64| {
        let rows: String = [1, 2, 4, 8].iter().map(|m| format!("{m},{},0.01,{v}\n", 0.5 + 0.5 * p.powi(*m))).collect();
        format!("m,p_mean,p_stderr,variant\n{rows}")
    };
    fs::write(tmp.path().join("rb_reference.csv"), curve("reference", 0.96)).unwrap();
    fs::write(tmp.path().join("rb_interleaved.csv"), curve("interleaved", 0.94)).unwrap();
    let out = render_plots(tmp.path()).unwrap();
    assert_eq!(out.len(), 3);
    let svg = fs::read_to_string(tmp.path().join("rb_overlay.svg")).unwrap();
    assert!(svg.contains("reference") && svg.contains("interleaved"));
}

#[test]
fn unknown_csv_uses_first_numeric_columns() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("other.csv"), "name,x,y\na,1,2\nb,2,4\n").unwrap();
    assert_eq!(render_plots(tmp.path()).unwrap().len(), 1);
}

#[test]
fn missing_artifacts_are_errors() {
    let tmp = TempDir::new().unwrap();
    assert!(matches!(render_plots(tmp.path()), Err(CliError::MissingArtifact(_))));
    assert!(matches!(render_plots(&tmp.path().join("nope")), Err(CliError::MissingArtifact(_))));
    let status = Command::new(env!("CARGO_BIN_EXE_tcqpt")).arg("plot").arg(tmp.path().join("nope")).status().unwrap();
    assert_eq!(status.code(), Some(1));
}
