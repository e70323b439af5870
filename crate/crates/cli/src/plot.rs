//! Standalone SVG line plots built from the CSV artifacts.
//!
//! Polylines are written in data coordinates inside a transformed group, so
//! every plotted point is literally a value from the source table.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;

use crate::output::{NumericTable, OutDir};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Files the data came from, recorded in a comment.
    pub sources: Vec<String>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let (x0, x1) = bounds(self.series.iter().flat_map(|s| s.xs.iter().copied()));
        let (y0, y1) = bounds(self.series.iter().flat_map(|s| s.ys.iter().copied()));
        let pw = WIDTH - 2.0 * MARGIN;
        let ph = HEIGHT - 2.0 * MARGIN;
        let sx = pw / (x1 - x0);
        let sy = ph / (y1 - y0);
        let mut svg = String::new();
        let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(svg, "<!-- generated by nlci {} -->", env!("CARGO_PKG_VERSION"));
        for src in &self.sources {
            let _ = writeln!(svg, "<!-- source: {} -->", src.replace("--", "- -"));
        }
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let bottom = HEIGHT - MARGIN;
        let right = WIDTH - MARGIN;
        let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}" text-anchor="middle">{x0:.4}</text>"#, bottom + 16.0);
        let _ = writeln!(svg, r#"<text x="{right}" y="{}" text-anchor="middle">{x1:.4}</text>"#, bottom + 16.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{bottom}" text-anchor="end">{y0:.4}</text>"#, MARGIN - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, MARGIN - 4.0, MARGIN + 4.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        // data (x, y) lands at (MARGIN + sx (x − x0), bottom − sy (y − y0))
        let _ = writeln!(
            svg,
            r#"<g transform="matrix({sx} 0 0 {} {} {})">"#,
            -sy,
            MARGIN - sx * x0,
            bottom + sy * y0
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(svg, r#"<g data-series="{}">"#, escape(&s.name));
            for run in finite_runs(&s.xs, &s.ys) {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x},{y}")).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" vector-effect="non-scaling-stroke" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let _ = writeln!(svg, "</g>");
        }
        let _ = writeln!(svg, "</g>");
        for (i, s) in self.series.iter().enumerate().take(24) {
            let y = MARGIN + 14.0 + 14.0 * i as f64;
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{y}">{}</text>"#,
                right - 110.0,
                y - 4.0,
                right - 92.0,
                y - 4.0,
                right - 88.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn finite_runs(xs: &[f64], ys: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let mut runs = Vec::new();
    let mut cur = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x.is_finite() && y.is_finite() {
            cur.push((x, y));
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

/// Artifact families that can be plotted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Artifact {
    Profiles,
    Bifurcation,
    Scans,
    Lyapunov,
}

/// Outcome of [`emit_plots`]: written files and skipped-artifact warnings.
#[derive(Debug, Default)]
pub struct PlotOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Builds one SVG per available artifact in `out`.
pub fn emit_plots(out: &OutDir, artifacts: &[Artifact]) -> Result<PlotOutcome> {
    let mut outcome = PlotOutcome::default();
    if artifacts.is_empty() {
        outcome.warnings.push("no artifacts requested, nothing plotted".into());
        return Ok(outcome);
    }
    for &artifact in artifacts {
        let plots = match artifact {
            Artifact::Profiles => profiles_plot(out)?,
            Artifact::Bifurcation => single(out, "bifurcation.csv", bifurcation_plot)?,
            Artifact::Scans => scan_plots(out)?,
            Artifact::Lyapunov => single(out, "flow.csv", lyapunov_plot)?,
        };
        match plots {
            Some(plots) => {
                for (name, plot) in plots {
                    outcome.written.push(out.write_bytes(&name, plot.render().as_bytes())?);
                }
            }
            None => outcome.warnings.push(format!("{artifact:?} artifacts missing, plot skipped")),
        }
    }
    Ok(outcome)
}

type Plots = Option<Vec<(String, Plot)>>;

fn single(out: &OutDir, file: &str, build: fn(&NumericTable, &str) -> Option<(String, Plot)>) -> Result<Plots> {
    let path = out.path(file);
    if !path.exists() {
        return Ok(None);
    }
    Ok(build(&NumericTable::read(&path)?, file).map(|p| vec![p]))
}

fn profiles_plot(out: &OutDir) -> Result<Plots> {
    let path = out.path("equilibria.csv");
    if !path.exists() {
        return Ok(None);
    }
    let summary = NumericTable::read(&path)?;
    let Some(label_col) = summary.column("label") else { return Ok(None) };
    let mut series = Vec::new();
    let mut sources = vec!["equilibria.csv".to_string()];
    for label in &summary.text[label_col] {
        let file = profile_file(label);
        let p = out.path(&file);
        if !p.exists() {
            continue;
        }
        let t = NumericTable::read(&p)?;
        series.push(Series { name: label.clone(), xs: t.numbers(0), ys: t.numbers(1) });
        sources.push(file);
    }
    if series.is_empty() {
        return Ok(None);
    }
    let plot = Plot {
        title: "Equilibrium profiles".into(),
        x_label: "x".into(),
        y_label: "phi(x)".into(),
        series,
        sources,
    };
    Ok(Some(vec![("profiles.svg".into(), plot)]))
}

fn bifurcation_plot(t: &NumericTable, file: &str) -> Option<(String, Plot)> {
    let (l, lab, amp) = (t.column("lambda")?, t.column("label")?, t.column("max_abs")?);
    let mut series: Vec<Series> = Vec::new();
    for (i, label) in t.text[lab].iter().enumerate() {
        let (x, y) = (t.columns[l][i]?, t.columns[amp][i]?);
        match series.iter_mut().find(|s| &s.name == label) {
            Some(s) => {
                s.xs.push(x);
                s.ys.push(y);
            }
            None => series.push(Series { name: label.clone(), xs: vec![x], ys: vec![y] }),
        }
    }
    let plot = Plot {
        title: "Bifurcation diagram".into(),
        x_label: "lambda".into(),
        y_label: "max |phi|".into(),
        series,
        sources: vec![file.into()],
    };
    Some(("bifurcation.svg".into(), plot))
}

fn scan_plots(out: &OutDir) -> Result<Plots> {
    let mut files: Vec<String> = std::fs::read_dir(out.root())?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("scan_") && n.ends_with(".csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Ok(None);
    }
    let mut plots = Vec::new();
    for file in files {
        let t = NumericTable::read(&out.path(&file))?;
        let xs = t.numbers(0);
        let series = (1..t.header.len())
            .map(|c| Series { name: t.header[c].clone(), xs: xs.clone(), ys: t.numbers(c) })
            .collect();
        let stem = file.trim_end_matches(".csv");
        let plot = Plot {
            title: format!("Eigenvalues against epsilon ({})", stem.trim_start_matches("scan_")),
            x_label: "epsilon".into(),
            y_label: "eigenvalue".into(),
            series,
            sources: vec![file.clone()],
        };
        plots.push((format!("{stem}.svg"), plot));
    }
    Ok(Some(plots))
}

fn lyapunov_plot(t: &NumericTable, file: &str) -> Option<(String, Plot)> {
    let (time, v) = (t.column("time")?, t.column("lyapunov")?);
    let plot = Plot {
        title: "Lyapunov functional along the flow".into(),
        x_label: "time".into(),
        y_label: "V(u)".into(),
        series: vec![Series { name: "V".into(), xs: t.numbers(time), ys: t.numbers(v) }],
        sources: vec![file.into()],
    };
    Some(("lyapunov.svg".into(), plot))
}

/// File name of an equilibrium profile, e.g. `profile_phi2p.csv`.
pub fn profile_file(label: &str) -> String {
    format!("profile_{}.csv", file_stem(label))
}

/// Label with `+`/`-` spelled out for file names.
pub fn file_stem(label: &str) -> String {
    label.replace('+', "p").replace('-', "m")
}
