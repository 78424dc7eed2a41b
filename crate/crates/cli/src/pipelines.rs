//! The five pipelines. Each writes its data files into `out` and returns
//! their names.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;

use tcqpt_core::channels::{decompose, pauli_labels};
use tcqpt_core::dynamics::{
    cpmg_experiment, cpmg_spectroscopy, echo_experiment, fit_gaussian_decay, fit_rabi_envelope, rabi_experiment,
    rabi_pi_times, ramsey_experiment, DecayCurve, NativeGate,
};
use tcqpt_core::noise::synthesize_seeded;
use tcqpt_core::numerics::{seeded_rng, standard_normal, stream_id, RMatrix};
use tcqpt_core::rb::{irb_report, run_rb, RbCurve, Variant};
use tcqpt_core::tcqpt::{
    extract_static_split, fidelity_benchmarks, fit_compressed_model, generator_psd, run_windowed_qpt,
    sample_compressed_unitary, sweep_t2_star, CompressedGateModel, ElementSelector, GeneratorSeries,
    StaticNoiseSplit,
};

use crate::config::{Pipeline, RunConfig};
use crate::output::{write_csv, write_json, Artifacts};
use crate::CliError;

const DOMAIN_CLI_BENCHMARKS: u32 = 0x401;
const DOMAIN_CLI_COMPRESS: u32 = 0x402;
const DOMAIN_CLI_TRAJECTORY: u32 = 0x403;

pub fn run(pipeline: Pipeline, cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let mut art = Artifacts::new(out);
    match pipeline {
        Pipeline::NoiseBench => noise_bench(cfg, &mut art)?,
        Pipeline::Qpt => qpt(cfg, &mut art)?,
        Pipeline::Benchmarks => benchmarks(cfg, &mut art)?,
        Pipeline::Compress => compress(cfg, &mut art)?,
        Pipeline::Irb => irb(cfg, &mut art)?,
    }
    Ok(art)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn decay_rows(c: &DecayCurve) -> Vec<Vec<String>> {
    c.delays
        .iter()
        .zip(&c.p0)
        .zip(&c.stderr)
        .map(|((d, p), e)| vec![d.to_string(), p.to_string(), e.to_string()])
        .collect()
}

fn matrix_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn noise_bench(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let p = cfg.bench_params()?;
    let b = &cfg.bench;
    let n = b.n_realizations;

    let ramsey = ramsey_experiment(&p, &linspace(0.0, b.ramsey_max_us, b.n_points), n)?;
    write_csv(art, "ramsey.csv", &["delay_us", "p0", "stderr"], decay_rows(&ramsey))?;

    let rabi = rabi_experiment(&p, &rabi_pi_times(cfg.gates.omega0_mhz, b.rabi_max_us, b.n_points), n)?;
    let rows = rabi
        .durations
        .iter()
        .enumerate()
        .map(|(i, t)| vec![t.to_string(), rabi.p0[i].to_string(), rabi.stderr[i].to_string(), rabi.amplitude[i].to_string()])
        .collect();
    write_csv(art, "rabi.csv", &["duration_us", "p0", "stderr", "amplitude"], rows)?;

    let echo = echo_experiment(&p, &linspace(0.0, b.echo_max_us, b.n_points), n)?;
    write_csv(art, "echo.csv", &["delay_us", "p0", "stderr"], decay_rows(&echo))?;

    let t2 = cfg.noise.t2_us.get(0);
    let mut cpmg = Vec::new();
    let mut rows = Vec::new();
    for &n_pi in &b.cpmg_n_pi {
        let scale = t2 * (n_pi as f64).sqrt();
        let r = cpmg_experiment(&p, n_pi, &linspace(b.cpmg_span[0] * scale, b.cpmg_span[1] * scale, b.n_points), n)?;
        rows.extend(decay_rows(&r.curve).into_iter().map(|mut row| {
            row.insert(0, n_pi.to_string());
            row
        }));
        cpmg.push(r);
    }
    write_csv(art, "cpmg.csv", &["n_pi", "delay_us", "p0", "stderr"], rows)?;

    let spectrum = cpmg_spectroscopy(&cpmg)?;
    let rows = spectrum.freqs.iter().zip(&spectrum.psd).map(|(f, s)| vec![f.to_string(), s.to_string()]).collect();
    write_csv(art, "cpmg_spectrum.csv", &["f_hz", "s_psd"], rows)?;

    if b.trajectory_samples > 1 {
        let tr = synthesize_seeded(
            &cfg.spec(),
            cfg.sim.dt_us,
            b.trajectory_samples,
            cfg.sim.seed,
            stream_id(DOMAIN_CLI_TRAJECTORY, 0),
            cfg.synthesis(),
        )?;
        let rows = tr.times().zip(tr.values()).map(|(t, v)| vec![t.to_string(), v.to_string()]).collect();
        write_csv(art, "trajectory.csv", &["t_us", "v_ueV"], rows)?;
    }

    let fits = json!({
        "ramsey_t2star_us": fit_gaussian_decay(&ramsey).map(|f| f.time),
        "echo_t2_us": fit_gaussian_decay(&echo).map(|f| f.time),
        "rabi_gamma_mhz": fit_rabi_envelope(&rabi).map(|(_, g)| g),
        "cpmg": cpmg.iter().map(|r| json!({"n_pi": r.n_pi, "decay_time_us": r.decay_time()})).collect::<Vec<_>>(),
        "cpmg_spectrum_slope": spectrum.loglog_slope(0.0, f64::INFINITY),
        "couplings": p.sens,
    });
    write_json(art, "fits.json", &fits)
}

fn psd_selectors(n_qubits: usize) -> Vec<ElementSelector> {
    let mut sel = if n_qubits == 1 { ElementSelector::all_entries(1) } else { Vec::new() };
    for p in pauli_labels(n_qubits).into_iter().skip(1) {
        sel.push(ElementSelector::Hamiltonian(p.clone()));
        sel.push(ElementSelector::Stochastic(p));
    }
    sel
}

fn split_json(split: &StaticNoiseSplit) -> serde_json::Value {
    json!({
        "n_samples": split.n_samples,
        "sign_reference": split.sign_reference,
        "l_m": matrix_rows(&split.l_m.matrix),
        "l_s_abs": matrix_rows(&split.l_s_abs),
        "l_f_abs": matrix_rows(&split.l_f_abs),
        "signs": matrix_rows(&split.signs),
        "l_m_rates": decompose(&split.l_m),
        "l_s_rates": decompose(&split.l_s()),
    })
}

fn write_series(art: &mut Artifacts, series: &GeneratorSeries) -> Result<(), CliError> {
    let mut lines = String::new();
    let mut rows = Vec::new();
    for (r, real) in series.realizations.iter().enumerate() {
        for (w, l) in real.generators.iter().enumerate() {
            let t_us = w as f64 * series.interval;
            let rec = json!({"realization": r, "window": w, "t_us": t_us, "matrix": matrix_rows(&l.matrix)});
            lines.push_str(&rec.to_string());
            lines.push('\n');
            rows.push(vec![r.to_string(), w.to_string(), t_us.to_string(), real.fidelities[w].to_string()]);
        }
    }
    art.write_text("generators.jsonl", &lines)?;
    write_csv(art, "window_fidelity.csv", &["realization", "window", "t_us", "fidelity"], rows)
}

fn qpt(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let series = run_windowed_qpt(&cfg.qpt_config(cfg.gates.gate))?;
    write_series(art, &series)?;
    if series.n_windows() >= 2 {
        let mut rows = Vec::new();
        for sel in psd_selectors(series.n_qubits) {
            let label = sel.label(series.n_qubits);
            let p = generator_psd(&series, &sel)?;
            rows.extend(p.freqs.iter().zip(&p.psd).map(|(f, s)| vec![label.clone(), f.to_string(), s.to_string()]));
        }
        write_csv(art, "psd.csv", &["element", "f_hz", "psd"], rows)?;
    } else {
        log::warn!("one window per realization: no spectra written");
    }
    let split = extract_static_split(&series);
    write_json(art, "split.json", &split_json(&split))
}

fn benchmarks(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let series = run_windowed_qpt(&cfg.qpt_config(cfg.gates.gate))?;
    let split = extract_static_split(&series);
    let mut rng = seeded_rng(cfg.sim.seed, stream_id(DOMAIN_CLI_BENCHMARKS, 0));
    let b = fidelity_benchmarks(&split, true, cfg.sim.n_mc, &mut rng);
    let rows = [
        ("M", b.f_m, 0.0),
        ("s", b.f_s, b.f_s_err),
        ("f", b.f_f, b.f_f_err),
        ("Ms", b.f_ms, b.f_ms_err),
        ("Msf", b.f_msf, b.f_msf_err),
        ("full", 1.0 - series.mean_infidelity(), 0.0),
    ]
    .iter()
    .map(|(k, f, e)| vec![k.to_string(), f.to_string(), e.to_string()])
    .collect();
    write_csv(art, "benchmarks.csv", &["benchmark", "fidelity", "stderr"], rows)?;
    write_json(art, "benchmarks.json", &b)?;
    write_json(art, "split.json", &split_json(&split))
}

fn compress(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let grid = &cfg.compress.t2star_grid_us;
    let mut splits = BTreeMap::new();
    let mut full = Vec::new();
    for &gate in &cfg.compress.gates {
        let sweep = sweep_t2_star(&cfg.qpt_config(gate), grid)?;
        for p in &sweep {
            full.push((gate, p.t2_star, p.eps, p.full_infidelity));
        }
        splits.insert(gate, sweep.into_iter().map(|p| (p.eps, p.split)).collect::<Vec<_>>());
    }
    let fit = fit_compressed_model(&splits, cfg.compress.degree)?;
    write_json(art, "compressed_model.json", &fit.model)?;
    let rows = fit
        .points
        .iter()
        .flat_map(|(g, pts)| {
            pts.iter().map(move |p| vec![g.clone(), p.label.clone(), p.eps.to_string(), p.mean.to_string(), p.fluct.to_string()])
        })
        .collect();
    write_csv(art, "coefficients.csv", &["gate", "label", "eps", "mean", "fluct"], rows)?;

    let mut rng = seeded_rng(cfg.sim.seed, stream_id(DOMAIN_CLI_COMPRESS, 0));
    let mut rows = Vec::new();
    for (gate, t2s, eps, f_full) in full {
        let comp = compressed_infidelity(&fit.model, gate, eps, cfg.sim.n_mc, &mut rng)?;
        rows.push(vec![gate.to_string(), t2s.to_string(), eps.to_string(), f_full.to_string(), comp.to_string()]);
    }
    write_csv(art, "compression.csv", &["gate", "t2star_us", "eps", "full_infidelity", "compressed_infidelity"], rows)?;
    write_json(art, "fit_report.json", &json!({"stochastic_ratio": fit.stochastic_ratio, "warnings": fit.warnings}))
}

/// 1 − F averaged over Gaussian draws of the compressed unitary.
fn compressed_infidelity(
    model: &CompressedGateModel,
    gate: NativeGate,
    eps: f64,
    n_draws: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64, CliError> {
    let nq = gate.n_qubits();
    let d = (1usize << nq) as f64;
    let mut acc = 0.0;
    for _ in 0..n_draws {
        let r: Vec<f64> = (0..nq).map(|_| standard_normal(rng)).collect();
        let u = sample_compressed_unitary(model, gate, &r, eps)?;
        acc += (u.trace().norm_sqr() + d) / (d * (d + 1.0));
    }
    Ok(1.0 - acc / n_draws as f64)
}

fn rb_rows(c: &RbCurve) -> Vec<Vec<String>> {
    c.lengths
        .iter()
        .enumerate()
        .map(|(i, m)| vec![m.to_string(), c.mean[i].to_string(), c.stderr[i].to_string(), c.variant.to_string()])
        .collect()
}

fn irb(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let model = match &cfg.rb.model {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("`rb.model`: cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<CompressedGateModel>(&text)
                .map_err(|e| CliError::Config(format!("`rb.model`: {}: {e}", path.display())))?
        }
        None => CompressedGateModel::published(),
    };
    let missing: Vec<String> =
        NativeGate::ALL.iter().map(|g| g.to_string()).filter(|g| !model.gates.contains_key(g)).collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!("`rb.model` lacks gates {}", missing.join(", "))));
    }
    let rb = cfg.rb_config();
    let reference = run_rb(&model, &rb, Variant::Reference)?;
    let interleaved = run_rb(&model, &rb, Variant::Interleaved)?;
    let header = ["m", "p_mean", "p_stderr", "variant"];
    write_csv(art, "rb_reference.csv", &header, rb_rows(&reference))?;
    write_csv(art, "rb_interleaved.csv", &header, rb_rows(&interleaved))?;
    let report = irb_report(&reference, &interleaved, &model, rb.eps.two_qubit, cfg.rb.exact_draws, cfg.sim.seed)?;
    write_json(art, "irb_report.json", &report)
}
