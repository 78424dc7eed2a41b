//! Static SVG plots of the CSV artifacts in a directory.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::coord::ranged1d::{AsRangedCoord, ValueFormatter};
use plotters::coord::types::RangedCoordf64;
use plotters::prelude::*;

use crate::CliError;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let header = r
            .headers()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn numeric(&self, c: usize) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.get(c).is_some_and(|v| v.parse::<f64>().is_ok()))
    }
}

#[derive(Default)]
struct Layout {
    x: &'static str,
    ys: &'static [&'static str],
    group: &'static [&'static str],
    log_x: bool,
    log_y: bool,
    /// Plot 1 − y.
    complement: bool,
    /// Reference line of slope −1 on log-log axes.
    slope_guide: bool,
}

fn layout_for(stem: &str) -> Option<Layout> {
    let l = match stem {
        "ramsey" | "echo" => Layout { x: "delay_us", ys: &["p0"], ..Default::default() },
        "cpmg" => Layout { x: "delay_us", ys: &["p0"], group: &["n_pi"], ..Default::default() },
        "rabi" => Layout { x: "duration_us", ys: &["amplitude"], ..Default::default() },
        "cpmg_spectrum" => {
            Layout { x: "f_hz", ys: &["s_psd"], log_x: true, log_y: true, slope_guide: true, ..Default::default() }
        }
        "trajectory" => Layout { x: "t_us", ys: &["v_ueV"], ..Default::default() },
        "psd" => Layout { x: "f_hz", ys: &["psd"], group: &["element"], log_x: true, log_y: true, ..Default::default() },
        "window_fidelity" => Layout { x: "t_us", ys: &["fidelity"], group: &["realization"], ..Default::default() },
        "benchmarks" => Layout { x: "benchmark", ys: &["fidelity"], log_y: true, complement: true, ..Default::default() },
        "sweep_benchmarks" => Layout {
            x: "value",
            ys: &["fidelity"],
            group: &["benchmark"],
            log_y: true,
            complement: true,
            ..Default::default()
        },
        "coefficients" => Layout { x: "eps", ys: &["mean", "fluct"], group: &["gate", "label"], ..Default::default() },
        "compression" => Layout {
            x: "eps",
            ys: &["full_infidelity", "compressed_infidelity"],
            group: &["gate"],
            log_y: true,
            ..Default::default()
        },
        "rb_reference" | "rb_interleaved" => Layout { x: "m", ys: &["p_mean"], group: &["variant"], ..Default::default() },
        _ => return None,
    };
    Some(l)
}

type Series = Vec<(String, Vec<(f64, f64)>)>;

fn build_series(t: &Table, l: &Layout) -> Series {
    let Some(xc) = t.col(l.x) else {
        return Vec::new();
    };
    let x_numeric = t.numeric(xc);
    let groups: Vec<usize> = l.group.iter().filter_map(|g| t.col(g)).collect();
    let mut out: Series = Vec::new();
    for y in l.ys {
        let Some(yc) = t.col(y) else { continue };
        for (i, row) in t.rows.iter().enumerate() {
            let x = if x_numeric { row[xc].parse().unwrap_or(f64::NAN) } else { i as f64 };
            let Ok(mut v) = row[yc].parse::<f64>() else { continue };
            if l.complement {
                v = 1.0 - v;
            }
            let key: Vec<&str> = groups.iter().map(|g| row[*g].as_str()).collect();
            let mut name = key.join(" ");
            if l.ys.len() > 1 {
                name = if name.is_empty() { y.to_string() } else { format!("{name} {y}") };
            }
            match out.iter_mut().find(|(n, _)| *n == name) {
                Some((_, pts)) => pts.push((x, v)),
                None => out.push((name, vec![(x, v)])),
            }
        }
    }
    for (_, pts) in &mut out {
        pts.retain(|(x, y)| x.is_finite() && y.is_finite() && (!l.log_x || *x > 0.0) && (!l.log_y || *y > 0.0));
    }
    out
}

fn fallback(t: &Table) -> Series {
    let cols: Vec<usize> = (0..t.header.len()).filter(|c| t.numeric(*c)).collect();
    match cols.as_slice() {
        [x, y, ..] => {
            let pts = t.rows.iter().filter_map(|r| Some((r[*x].parse().ok()?, r[*y].parse().ok()?))).collect();
            vec![(t.header[*y].clone(), pts)]
        }
        _ => Vec::new(),
    }
}

fn bounds(series: &Series, log: bool, pick: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let vals = series.iter().flat_map(|(_, p)| p.iter().map(&pick));
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo / 2.0, lo * 2.0) };
        (lo / 1.3, hi * 1.3)
    } else {
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        (lo - pad, hi + pad)
    }
}

#[allow(clippy::too_many_arguments)]
fn draw<X, Y>(path: &Path, title: &str, xlabel: &str, ylabel: &str, x: X, y: Y, series: &Series, guide: bool) -> Result<(), String>
where
    X: AsRangedCoord<Value = f64>,
    Y: AsRangedCoord<Value = f64>,
    X::CoordDescType: ValueFormatter<f64>,
    Y::CoordDescType: ValueFormatter<f64>,
{
    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(14)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d(x, y)
        .map_err(|e| e.to_string())?;
    chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw().map_err(|e| e.to_string())?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| e.to_string())?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart.draw_series(pts.iter().map(|p| Circle::new(*p, 3, color.filled()))).map_err(|e| e.to_string())?;
    }
    if guide {
        if let Some((_, pts)) = series.iter().find(|(_, p)| !p.is_empty()) {
            let (xm, ym) = pts[pts.len() / 2];
            let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0);
            let line = [x0, x1].map(|x| (x, ym * xm / x));
            chart
                .draw_series(LineSeries::new(line, BLACK.stroke_width(1)))
                .map_err(|e| e.to_string())?
                .label("slope -1")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK));
        }
    }
    if (series.len() > 1 || guide) && series.len() <= 12 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| e.to_string())?;
    }
    root.present().map_err(|e| e.to_string())
}

fn render(path: &Path, title: &str, xlabel: &str, ylabel: &str, series: &Series, l: &Layout) -> Result<(), CliError> {
    let xr = bounds(series, l.log_x, |p| p.0);
    let yr = bounds(series, l.log_y, |p| p.1);
    let lin = |r: (f64, f64)| -> RangedCoordf64 { (r.0..r.1).into() };
    let res = match (l.log_x, l.log_y) {
        (false, false) => draw(path, title, xlabel, ylabel, lin(xr), lin(yr), series, l.slope_guide),
        (true, false) => draw(path, title, xlabel, ylabel, (xr.0..xr.1).log_scale(), lin(yr), series, l.slope_guide),
        (false, true) => draw(path, title, xlabel, ylabel, lin(xr), (yr.0..yr.1).log_scale(), series, l.slope_guide),
        (true, true) => {
            draw(path, title, xlabel, ylabel, (xr.0..xr.1).log_scale(), (yr.0..yr.1).log_scale(), series, l.slope_guide)
        }
    };
    res.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn render_csv(csv_path: &Path) -> Result<PathBuf, CliError> {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string();
    let table = Table::read(csv_path)?;
    let (series, layout) = match layout_for(&stem) {
        Some(l) => (build_series(&table, &l), l),
        None => (fallback(&table), Layout::default()),
    };
    let xlabel = if layout.x.is_empty() { table.header.first().cloned().unwrap_or_default() } else { layout.x.to_string() };
    let mut ylabel = layout.ys.join(", ");
    if layout.complement {
        ylabel = format!("1 - {ylabel}");
    }
    let out = csv_path.with_extension("svg");
    render(&out, &stem, &xlabel, &ylabel, &series, &layout)?;
    Ok(out)
}

/// One SVG per CSV in `dir`, plus an overlay when both RB curves are present.
pub fn render_plots(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", dir.display())))?;
    let mut csvs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(CliError::MissingArtifact(format!("no CSV artifacts in {}", dir.display())));
    }
    let mut out = Vec::new();
    for c in &csvs {
        out.push(render_csv(c)?);
    }
    let (r, i) = (dir.join("rb_reference.csv"), dir.join("rb_interleaved.csv"));
    if r.exists() && i.exists() {
        let l = layout_for("rb_reference").expect("rb layout");
        let mut series = build_series(&Table::read(&r)?, &l);
        series.extend(build_series(&Table::read(&i)?, &l));
        let path = dir.join("rb_overlay.svg");
        render(&path, "randomized benchmarking", "m", "p_mean", &series, &l)?;
        out.push(path);
    }
    Ok(out)
}
