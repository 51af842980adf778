//! Figures for a finished sweep: energy convergence curves and
//! approximation-ratio box plots, each written as SVG plus a CSV holding the
//! plotted numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::ansatz::Circuit;
use crate::error::{Error, Result};
use crate::experiments::{self, describe, quantile_sorted, RunRow, RUNS_FILE};
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Convergence,
    Boxplot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSpec {
    /// Sweep directory holding `runs.csv` and `traces/`.
    pub runs_dir: PathBuf,
    pub figure: Figure,
    /// Keep only these circuits; empty keeps all.
    pub circuits: Vec<Circuit>,
    /// Keep only these depths; empty keeps all.
    pub layers: Vec<usize>,
    pub out_svg: PathBuf,
    pub out_csv: PathBuf,
}

impl ReportSpec {
    /// Companion CSV goes next to the SVG with the extension swapped.
    pub fn new(runs_dir: impl Into<PathBuf>, figure: Figure, out_svg: impl Into<PathBuf>) -> Self {
        let out_svg = out_svg.into();
        Self {
            runs_dir: runs_dir.into(),
            figure,
            circuits: Vec::new(),
            layers: Vec::new(),
            out_csv: out_svg.with_extension("csv"),
            out_svg,
        }
    }
}

/// Parses circuit names for filtering; unknown names are filter errors.
pub fn parse_circuit_filter<S: AsRef<str>>(names: &[S]) -> Result<Vec<Circuit>> {
    names
        .iter()
        .map(|s| {
            s.as_ref()
                .parse::<Circuit>()
                .map_err(|e| Error::Filter(e.to_string()))
        })
        .collect()
}

type GroupKey = (Circuit, usize);

fn load_groups(spec: &ReportSpec) -> Result<BTreeMap<GroupKey, Vec<RunRow>>> {
    let rows = experiments::read_runs(&spec.runs_dir.join(RUNS_FILE))?;
    group_rows(rows, &spec.circuits, &spec.layers)
}

/// Applies the filters and groups by (circuit, layers). Every requested
/// circuit/depth must leave at least one run.
pub fn group_rows(
    rows: Vec<RunRow>,
    circuits: &[Circuit],
    layers: &[usize],
) -> Result<BTreeMap<GroupKey, Vec<RunRow>>> {
    let mut groups: BTreeMap<GroupKey, Vec<RunRow>> = BTreeMap::new();
    for r in rows {
        let keep = (circuits.is_empty() || circuits.contains(&r.circuit()))
            && (layers.is_empty() || layers.contains(&r.layers));
        if keep {
            groups.entry((r.circuit(), r.layers)).or_default().push(r);
        }
    }
    let mut missing = Vec::new();
    match (circuits.is_empty(), layers.is_empty()) {
        (false, false) => {
            for &c in circuits {
                for &l in layers {
                    if !groups.contains_key(&(c, l)) {
                        missing.push(format!("{c} l={l}"));
                    }
                }
            }
        }
        (false, true) => {
            for &c in circuits {
                if !groups.keys().any(|k| k.0 == c) {
                    missing.push(c.to_string());
                }
            }
        }
        (true, false) => {
            for &l in layers {
                if !groups.keys().any(|k| k.1 == l) {
                    missing.push(format!("l={l}"));
                }
            }
        }
        (true, true) => {}
    }
    if !missing.is_empty() {
        return Err(Error::Filter(format!("no runs for {}", missing.join(", "))));
    }
    if groups.is_empty() {
        return Err(Error::Filter("no runs to plot".into()));
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub circuit: Circuit,
    pub layers: usize,
    pub runs: usize,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
}

/// Mean and median energy per evaluation index. Shorter traces are padded
/// by repeating their last value up to the longest trace in the group.
pub fn aggregate_traces(
    circuit: Circuit,
    layers: usize,
    traces: &[Vec<f64>],
) -> Result<ConvergenceSeries> {
    if traces.is_empty() || traces.iter().any(|t| t.is_empty()) {
        return Err(Error::argument(format!(
            "{circuit} l={layers}: empty trace"
        )));
    }
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut median = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(traces.len());
    for k in 0..len {
        column.clear();
        column.extend(traces.iter().map(|t| t[k.min(t.len() - 1)]));
        column.sort_by(f64::total_cmp);
        mean.push(column.iter().sum::<f64>() / column.len() as f64);
        median.push(quantile_sorted(&column, 0.5));
    }
    Ok(ConvergenceSeries {
        circuit,
        layers,
        runs: traces.len(),
        mean,
        median,
    })
}

pub fn convergence_series(
    runs_dir: &Path,
    groups: &BTreeMap<GroupKey, Vec<RunRow>>,
) -> Result<Vec<ConvergenceSeries>> {
    groups
        .iter()
        .map(|(&(circuit, layers), rows)| {
            let traces = rows
                .iter()
                .map(|r| {
                    let run_id = r.run_id();
                    let path = experiments::trace_path(runs_dir, &run_id);
                    if !path.exists() {
                        return Err(Error::MissingTrace { run_id, path });
                    }
                    experiments::read_trace(&path)
                })
                .collect::<Result<Vec<_>>>()?;
            aggregate_traces(circuit, layers, &traces)
        })
        .collect()
}

pub fn convergence_csv(series: &[ConvergenceSeries]) -> String {
    let mut out = String::from("circuit,layers,eval_index,mean_energy,median_energy\n");
    for s in series {
        for (k, (m, md)) in s.mean.iter().zip(&s.median).enumerate() {
            writeln!(out, "{},{},{},{},{}", s.circuit, s.layers, k + 1, m, md).unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub circuit: Circuit,
    pub layers: usize,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl BoxStats {
    /// Text printed under the box: mean / std to three decimals.
    pub fn annotation(&self) -> String {
        format!("{:.3} / {:.3}", self.mean, self.std)
    }
}

pub fn box_stats(groups: &BTreeMap<GroupKey, Vec<RunRow>>) -> Result<Vec<BoxStats>> {
    groups
        .iter()
        .map(|(&(circuit, layers), rows)| {
            let ratios: Vec<f64> = rows.iter().map(|r| r.approx_ratio).collect();
            let (mean, std, [min, q1, median, q3, max]) = describe(&ratios)?;
            Ok(BoxStats {
                circuit,
                layers,
                count: rows.len(),
                min,
                q1,
                median,
                q3,
                max,
                mean,
                std,
            })
        })
        .collect()
}

pub fn boxplot_csv(boxes: &[BoxStats]) -> String {
    let mut out = String::from("circuit,layers,count,min,q1,median,q3,max,mean,std,annotation\n");
    for b in boxes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            b.circuit,
            b.layers,
            b.count,
            b.min,
            b.q1,
            b.median,
            b.q3,
            b.max,
            b.mean,
            b.std,
            b.annotation()
        )
        .unwrap();
    }
    out
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 270.0;
const MARGIN_L: f64 = 58.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 62.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Panel {
    x0: f64,
    y0: f64,
}

impl Panel {
    fn plot_w(&self) -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn plot_h(&self) -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn left(&self) -> f64 {
        self.x0 + MARGIN_L
    }

    fn top(&self) -> f64 {
        self.y0 + MARGIN_T
    }

    fn bottom(&self) -> f64 {
        self.top() + self.plot_h()
    }

    fn x(&self, frac: f64) -> f64 {
        self.left() + frac * self.plot_w()
    }

    fn y(&self, frac: f64) -> f64 {
        self.bottom() - frac * self.plot_h()
    }
}

fn layout(count: usize) -> (usize, usize) {
    let cols = count.clamp(1, 4);
    (cols, count.div_ceil(cols))
}

fn svg_open(out: &mut String, cols: usize, rows: usize) {
    let (w, h) = (cols as f64 * PANEL_W, rows as f64 * PANEL_H);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
}

fn panel_frame(out: &mut String, p: &Panel, title: &str, xlabel: &str, ylabel: &str) {
    writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        p.left(),
        p.top(),
        p.plot_w(),
        p.plot_h()
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13" font-weight="bold">{title}</text>"#,
        p.x(0.5),
        p.y0 + 18.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        p.x(0.5),
        p.y0 + PANEL_H - 8.0
    )
    .unwrap();
    let (lx, ly) = (p.x0 + 14.0, p.y(0.5));
    writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{ylabel}</text>"#
    )
    .unwrap();
}

fn y_tick(out: &mut String, p: &Panel, frac: f64, label: &str) {
    let y = p.y(frac);
    writeln!(
        out,
        r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
        p.left() - 4.0,
        p.left(),
        p.left() - 6.0,
        y + 4.0
    )
    .unwrap();
}

fn x_tick(out: &mut String, p: &Panel, frac: f64, label: &str) {
    let x = p.x(frac);
    writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
        p.bottom(),
        p.bottom() + 4.0,
        p.bottom() + 16.0
    )
    .unwrap();
}

fn panels_by_circuit<T>(
    items: &[T],
    circuit: impl Fn(&T) -> Circuit,
) -> BTreeMap<Circuit, Vec<&T>> {
    let mut map: BTreeMap<Circuit, Vec<&T>> = BTreeMap::new();
    for it in items {
        map.entry(circuit(it)).or_default().push(it);
    }
    map
}

/// One panel per circuit, one colour per depth; mean solid, median dashed.
pub fn convergence_svg(series: &[ConvergenceSeries]) -> String {
    let panels = panels_by_circuit(series, |s| s.circuit);
    let (cols, rows) = layout(panels.len());
    let mut out = String::new();
    svg_open(&mut out, cols, rows);
    for (i, (circuit, list)) in panels.iter().enumerate() {
        let p = Panel {
            x0: (i % cols) as f64 * PANEL_W,
            y0: (i / cols) as f64 * PANEL_H,
        };
        panel_frame(
            &mut out,
            &p,
            &circuit.to_string(),
            "Evaluation Count",
            "Energy",
        );

        let max_len = list.iter().map(|s| s.mean.len()).max().unwrap_or(1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in list {
            for &v in s.mean.iter().chain(&s.median) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let fx = |k: usize| {
            if max_len > 1 {
                k as f64 / (max_len - 1) as f64
            } else {
                0.5
            }
        };
        let fy = |v: f64| (v - lo) / (hi - lo);

        y_tick(&mut out, &p, 0.0, &format!("{lo:.3}"));
        y_tick(&mut out, &p, 1.0, &format!("{hi:.3}"));
        x_tick(&mut out, &p, fx(0), "1");
        x_tick(&mut out, &p, fx(max_len - 1), &max_len.to_string());

        for (j, s) in list.iter().enumerate() {
            let colour = PALETTE[j % PALETTE.len()];
            for (values, dash) in [(&s.mean, ""), (&s.median, r#" stroke-dasharray="4 3""#)] {
                let mut pts = String::new();
                for (k, &v) in values.iter().enumerate() {
                    write!(pts, "{:.2},{:.2} ", p.x(fx(k)), p.y(fy(v))).unwrap();
                }
                writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2"{dash} points="{}"/>"#,
                    pts.trim_end()
                )
                .unwrap();
            }
            let ly = p.top() + 12.0 + 13.0 * j as f64;
            let lx = p.left() + p.plot_w() - 60.0;
            writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">l={}</text>"#,
                ly - 4.0,
                lx + 16.0,
                ly - 4.0,
                lx + 20.0,
                s.layers
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One panel per circuit, one box per depth on a fixed `[0, 1]` axis, with
/// mean / std printed under each box.
pub fn boxplot_svg(boxes: &[BoxStats]) -> String {
    let panels = panels_by_circuit(boxes, |b| b.circuit);
    let (cols, rows) = layout(panels.len());
    let mut out = String::new();
    svg_open(&mut out, cols, rows);
    for (i, (circuit, list)) in panels.iter().enumerate() {
        let p = Panel {
            x0: (i % cols) as f64 * PANEL_W,
            y0: (i / cols) as f64 * PANEL_H,
        };
        panel_frame(
            &mut out,
            &p,
            &circuit.to_string(),
            "Layers",
            "Approximation Ratio",
        );
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            y_tick(&mut out, &p, t, &format!("{t:.2}"));
        }
        let slot = 1.0 / list.len() as f64;
        for (j, b) in list.iter().enumerate() {
            let cx = p.x(slot * (j as f64 + 0.5));
            let half = (slot * p.plot_w() * 0.3).min(22.0);
            let (y_min, y_q1, y_med, y_q3, y_max) =
                (p.y(b.min), p.y(b.q1), p.y(b.median), p.y(b.q3), p.y(b.max));
            writeln!(
                out,
                r#"<line x1="{cx:.2}" y1="{y_max:.2}" x2="{cx:.2}" y2="{y_q3:.2}" stroke="black"/><line x1="{cx:.2}" y1="{y_q1:.2}" x2="{cx:.2}" y2="{y_min:.2}" stroke="black"/>"#
            )
            .unwrap();
            for y in [y_min, y_max] {
                writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                    cx - half / 2.0,
                    cx + half / 2.0
                )
                .unwrap();
            }
            writeln!(
                out,
                r##"<rect x="{:.2}" y="{y_q3:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
                cx - half,
                2.0 * half,
                y_q1 - y_q3
            )
            .unwrap();
            writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y_med:.2}" x2="{:.2}" y2="{y_med:.2}" stroke="black" stroke-width="2"/>"#,
                cx - half,
                cx + half
            )
            .unwrap();
            writeln!(
                out,
                r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                p.bottom() + 14.0,
                b.layers
            )
            .unwrap();
            writeln!(
                out,
                r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="9">{}</text>"#,
                p.bottom() + 28.0,
                b.annotation()
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Loads runs and traces, writes the convergence SVG and its CSV.
pub fn render_convergence(spec: &ReportSpec) -> Result<Vec<ConvergenceSeries>> {
    let groups = load_groups(spec)?;
    let series = convergence_series(&spec.runs_dir, &groups)?;
    write_atomic(&spec.out_svg, convergence_svg(&series).as_bytes())?;
    write_atomic(&spec.out_csv, convergence_csv(&series).as_bytes())?;
    Ok(series)
}

/// Loads runs, writes the box-plot SVG and its CSV.
pub fn render_boxplot(spec: &ReportSpec) -> Result<Vec<BoxStats>> {
    let groups = load_groups(spec)?;
    let boxes = box_stats(&groups)?;
    write_atomic(&spec.out_svg, boxplot_svg(&boxes).as_bytes())?;
    write_atomic(&spec.out_csv, boxplot_csv(&boxes).as_bytes())?;
    Ok(boxes)
}

pub fn render(spec: &ReportSpec) -> Result<()> {
    match spec.figure {
        Figure::Convergence => render_convergence(spec).map(drop),
        Figure::Boxplot => render_boxplot(spec).map(drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::Family;
    use crate::optimize::Termination;
    use crate::vqe::InitMode;

    fn circuit(name: &str) -> Circuit {
        name.parse().unwrap()
    }

    fn row(c: &str, layers: usize, seed: u64, ratio: f64) -> RunRow {
        let c = circuit(c);
        RunRow {
            instance_id: 0,
            family: c.family,
            hadamard: c.hadamard,
            layers,
            seed,
            init_mode: InitMode::Zero,
            eval_count: 3,
            final_energy: -1.0,
            cut: 1,
            optimal_cut: 1,
            approx_ratio: ratio,
            termination: Termination::Converged,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn single_trace_is_reproduced() {
        let t = vec![4.0, 1.0, -2.0, -2.5];
        let s = aggregate_traces(circuit("ry"), 1, std::slice::from_ref(&t)).unwrap();
        assert_eq!(s.mean, t);
        assert_eq!(s.median, t);
    }

    #[test]
    fn identical_traces_average_to_themselves() {
        let t = vec![0.0, -0.3, -1.7];
        let s = aggregate_traces(circuit("hry"), 1, &[t.clone(), t.clone()]).unwrap();
        assert_eq!(s.mean, t);
    }

    #[test]
    fn short_traces_carry_forward() {
        let s = aggregate_traces(
            circuit("ry"),
            1,
            &[vec![2.0, 0.0], vec![4.0, 2.0, 1.0, -1.0]],
        )
        .unwrap();
        assert_eq!(s.mean, vec![3.0, 1.0, 0.5, -0.5]);
    }

    #[test]
    fn box_annotation() {
        let groups =
            group_rows(vec![row("ry", 1, 30, 1.0), row("ry", 1, 31, 0.5)], &[], &[]).unwrap();
        let b = &box_stats(&groups).unwrap()[0];
        assert_eq!(b.median, 0.75);
        assert_eq!(b.annotation(), "0.750 / 0.250");
        let svg = boxplot_svg(std::slice::from_ref(b));
        assert!(svg.contains("0.750 / 0.250"));
        assert!(boxplot_csv(std::slice::from_ref(b)).contains("0.750 / 0.250"));
    }

    #[test]
    fn identical_ratios_give_flat_box() {
        let groups = group_rows(
            vec![row("ryrx", 3, 30, 0.8), row("ryrx", 3, 31, 0.8)],
            &[],
            &[],
        )
        .unwrap();
        let b = &box_stats(&groups).unwrap()[0];
        assert_eq!((b.q1, b.q3, b.std), (0.8, 0.8, 0.0));
        assert!(boxplot_svg(std::slice::from_ref(b)).contains(r#"height="0.00""#));
    }

    #[test]
    fn filter_errors() {
        assert!(matches!(
            parse_circuit_filter(&["ry", "zz"]),
            Err(Error::Filter(_))
        ));
        let rows = vec![row("ry", 1, 30, 1.0)];
        let err = group_rows(rows.clone(), &[circuit("rycnot")], &[]).unwrap_err();
        assert!(err.to_string().contains("rycnot"), "{err}");
        let err = group_rows(rows.clone(), &[circuit("ry")], &[1, 9]).unwrap_err();
        assert!(err.to_string().contains("ry l=9"), "{err}");
        let ok = group_rows(rows, &[circuit("ry")], &[1]).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok.keys().next().unwrap().0.family, Family::Ry);
    }

    #[test]
    fn svg_is_deterministic_and_labelled() {
        let s = aggregate_traces(circuit("hrycnot"), 3, &[vec![0.0, -1.0, -2.0]]).unwrap();
        let a = convergence_svg(std::slice::from_ref(&s));
        assert_eq!(a, convergence_svg(std::slice::from_ref(&s)));
        assert!(a.contains("Evaluation Count") && a.contains("Energy") && a.contains("hrycnot"));
        let csv = convergence_csv(&[s]);
        assert_eq!(csv.lines().nth(1).unwrap(), "hrycnot,3,1,0,0");
    }
}
