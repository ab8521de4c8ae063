//! Tables and whisker plots from audit results.
//!
//! Tables come in three grid families (weighted F1 and neutral percentage
//! per dataset × model, mean |EO| per attribute × model) plus a long table
//! of every metric cell. CSV uses fixed 4-decimal numbers; JSON keeps full
//! precision. Plots are SVG with one panel per model: the Favor-as-positive
//! series in green on top, Against-as-positive in red below, each group's
//! dot at the mean with whiskers at mean ± sd.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::attribute::Attribute;
use crate::audit::{fmt4, write_cells_csv, AuditResult, MetricCell};
use crate::metrics::Metric;
use crate::stance::Direction;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report: no audit results")]
    Empty,
    #[error("plot for {metric} on {target:?} is missing cells: {}", .missing.join("; "))]
    MissingCells {
        metric: Metric,
        target: String,
        missing: Vec<String>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Row × column table of optional values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub name: String,
    pub row_label: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: BTreeMap<String, BTreeMap<String, Option<f64>>>,
}

impl Grid {
    fn new(name: &str, row_label: &str, rows: Vec<String>, columns: Vec<String>) -> Self {
        Grid {
            name: name.into(),
            row_label: row_label.into(),
            rows,
            columns,
            values: BTreeMap::new(),
        }
    }

    fn set(&mut self, row: &str, column: &str, value: Option<f64>) {
        self.values
            .entry(row.to_string())
            .or_default()
            .insert(column.to_string(), value);
    }

    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        self.values.get(row)?.get(column).copied().flatten()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.row_label);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            for c in &self.columns {
                out.push(',');
                out.push_str(&fmt4(self.get(r, c)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("grid serializes");
        s.push('\n');
        s
    }
}

fn all_models(results: &[AuditResult]) -> Vec<String> {
    results
        .iter()
        .flat_map(|r| r.models.iter().map(|m| m.model.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn summary_grid(
    results: &[AuditResult],
    name: &str,
    pick: impl Fn(&crate::audit::ModelSummary) -> Option<f64>,
) -> Grid {
    let datasets: Vec<String> = results
        .iter()
        .map(|r| r.metadata.dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut grid = Grid::new(name, "dataset", datasets, all_models(results));
    for r in results {
        for m in &r.models {
            // The first result for a dataset wins; later audits of the same
            // dataset score the same predictions.
            let filled = grid
                .values
                .get(&r.metadata.dataset)
                .is_some_and(|row| row.contains_key(&m.model));
            if !filled {
                grid.set(&r.metadata.dataset, &m.model, pick(m));
            }
        }
    }
    grid
}

pub fn f1_grid(results: &[AuditResult]) -> Grid {
    summary_grid(results, "weighted_f1", |m| m.weighted_f1)
}

pub fn neutral_grid(results: &[AuditResult]) -> Grid {
    summary_grid(results, "neutral_percent", |m| m.neutral_rate)
}

/// Mean |EO| over every class, dataset, target and direction of an attribute.
pub fn mean_abs_eo_grid(results: &[AuditResult]) -> Grid {
    let attributes: Vec<Attribute> = results
        .iter()
        .map(|r| r.metadata.attribute)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let models = all_models(results);
    let mut grid = Grid::new(
        "mean_abs_eo",
        "attribute",
        attributes.iter().map(|a| a.as_str().to_string()).collect(),
        models.clone(),
    );
    for attribute in &attributes {
        for model in &models {
            let (sum, n) = results
                .iter()
                .filter(|r| r.metadata.attribute == *attribute)
                .flat_map(|r| r.cells.iter())
                .filter(|c| c.model == *model && c.metric == Metric::EqualOpportunity)
                .filter_map(|c| c.mean)
                .fold((0.0, 0usize), |(s, n), v| (s + v.abs(), n + 1));
            let value = (n > 0).then(|| sum / n as f64);
            grid.set(attribute.as_str(), model, value);
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePaths {
    pub files: Vec<PathBuf>,
}

/// Writes `f1`, `neutral`, `mean_abs_eo` and `fairness` tables as CSV and
/// JSON into `dir`.
pub fn emit_tables(results: &[AuditResult], dir: impl AsRef<Path>) -> Result<TablePaths, ReportError> {
    if results.is_empty() || results.iter().all(|r| r.models.is_empty()) {
        return Err(ReportError::Empty);
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    for (stem, grid) in [
        ("f1", f1_grid(results)),
        ("neutral", neutral_grid(results)),
        ("mean_abs_eo", mean_abs_eo_grid(results)),
    ] {
        let csv = dir.join(format!("{stem}.csv"));
        write_file(&csv, &grid.to_csv())?;
        let json = dir.join(format!("{stem}.json"));
        write_file(&json, &grid.to_json())?;
        files.push(csv);
        files.push(json);
    }

    let mut long = Vec::new();
    write_cells_csv(results, &mut long).expect("writing to memory");
    let csv = dir.join("fairness.csv");
    write_file(&csv, &String::from_utf8(long).expect("utf-8 csv"))?;
    files.push(csv);

    #[derive(Serialize)]
    struct LongRow<'a> {
        dataset: &'a str,
        attribute: Attribute,
        #[serde(flatten)]
        cell: &'a MetricCell,
    }
    let rows: Vec<LongRow<'_>> = results
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(move |cell| LongRow {
                dataset: &r.metadata.dataset,
                attribute: r.metadata.attribute,
                cell,
            })
        })
        .collect();
    let json = dir.join("fairness.json");
    let mut text = serde_json::to_string_pretty(&rows).expect("cells serialize");
    text.push('\n');
    write_file(&json, &text)?;
    files.push(json);
    Ok(TablePaths { files })
}

/// One dot-and-whisker mark.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub model: String,
    pub group: String,
    pub direction: Direction,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Marks for every model × group × direction of a target, or the list of
/// cells that are absent or undefined.
pub fn plot_points(
    result: &AuditResult,
    target: &str,
    metric: Metric,
) -> Result<Vec<PlotPoint>, ReportError> {
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for model in result.model_names() {
        for direction in &result.metadata.directions {
            for group in plot_groups(result, target, model, metric) {
                match result
                    .cell(target, model, metric, &group, *direction)
                    .and_then(|c| Some((c.mean?, c.sd.unwrap_or(0.0))))
                {
                    Some((mean, sd)) => points.push(PlotPoint {
                        model: model.to_string(),
                        group,
                        direction: *direction,
                        mean,
                        lo: mean - sd,
                        hi: mean + sd,
                    }),
                    None => missing.push(format!("{model}/{group}/{direction}")),
                }
            }
        }
    }
    if !missing.is_empty() || points.is_empty() {
        if missing.is_empty() {
            missing.push(format!("no cells for target {target:?}"));
        }
        return Err(ReportError::MissingCells {
            metric,
            target: target.to_string(),
            missing,
        });
    }
    Ok(points)
}

/// Group labels in cell order; falls back to the configured groups.
fn plot_groups(result: &AuditResult, target: &str, model: &str, metric: Metric) -> Vec<String> {
    let mut seen = Vec::new();
    for c in &result.cells {
        if c.target == target && c.model == model && c.metric == metric && !seen.contains(&c.group) {
            seen.push(c.group.clone());
        }
    }
    if seen.is_empty() {
        result.metadata.groups.clone()
    } else {
        seen
    }
}

const PANEL_W: f64 = 240.0;
const HALF_H: f64 = 150.0;
const MARGIN_L: f64 = 48.0;
const MARGIN_T: f64 = 48.0;
const GAP: f64 = 24.0;
const LABEL_H: f64 = 40.0;
const FAVOR_COLOR: &str = "#2e7d32";
const AGAINST_COLOR: &str = "#c62828";

/// Symmetric half-range of the y axis: the largest whisker extent rounded
/// up to a tenth, between 0.1 and 1.
fn axis_extent(points: &[PlotPoint]) -> f64 {
    let max = points
        .iter()
        .map(|p| p.lo.abs().max(p.hi.abs()))
        .fold(0.0, f64::max);
    ((max * 10.0 - 1e-9).ceil() / 10.0).clamp(0.1, 1.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps a metric value into pixel y inside a half-panel whose top is `top`.
fn y_of(value: f64, top: f64, extent: f64) -> f64 {
    let clamped = value.clamp(-extent, extent);
    top + HALF_H / 2.0 - clamped / extent * (HALF_H / 2.0 - 8.0)
}

/// Renders the whisker plot for one target and metric as an SVG document.
pub fn emit_eo_plot(result: &AuditResult, target: &str, metric: Metric) -> Result<String, ReportError> {
    let points = plot_points(result, target, metric)?;
    let models = result.model_names();
    let extent = axis_extent(&points);
    let width = MARGIN_L + models.len() as f64 * (PANEL_W + GAP);
    let height = MARGIN_T + 2.0 * HALF_H + LABEL_H + 16.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-size="15" text-anchor="middle">{} on {} ({}, {})</text>"#,
        width / 2.0,
        metric,
        escape(target),
        escape(&result.metadata.dataset),
        result.metadata.attribute
    );

    for (mi, model) in models.iter().enumerate() {
        let left = MARGIN_L + mi as f64 * (PANEL_W + GAP);
        let _ = writeln!(svg, r#"<g class="panel" data-model="{}">"#, escape(model));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            left + PANEL_W / 2.0,
            MARGIN_T - 10.0,
            escape(model)
        );
        let model_points: Vec<&PlotPoint> = points.iter().filter(|p| p.model == *model).collect();
        let groups: Vec<&str> = {
            let mut g: Vec<&str> = Vec::new();
            for p in &model_points {
                if !g.contains(&p.group.as_str()) {
                    g.push(&p.group);
                }
            }
            g
        };
        let step = PANEL_W / groups.len().max(1) as f64;

        for (half, direction, color) in [
            (0usize, Direction::FavorAsPositive, FAVOR_COLOR),
            (1usize, Direction::AgainstAsPositive, AGAINST_COLOR),
        ] {
            let top = MARGIN_T + half as f64 * HALF_H;
            let _ = writeln!(
                svg,
                r##"<rect x="{left:.2}" y="{top:.2}" width="{PANEL_W:.2}" height="{HALF_H:.2}" fill="none" stroke="#999999"/>"##
            );
            let zero = y_of(0.0, top, extent);
            let _ = writeln!(
                svg,
                r##"<line x1="{left:.2}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
                left + PANEL_W
            );
            if mi == 0 {
                for tick in [-extent, 0.0, extent] {
                    let y = y_of(tick, top, extent);
                    let _ = writeln!(
                        svg,
                        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.1}</text>"#,
                        left - 6.0,
                        y + 3.0,
                        tick
                    );
                }
                let _ = writeln!(
                    svg,
                    r#"<text x="12" y="{:.2}" font-size="11" fill="{color}" transform="rotate(-90 12 {:.2})" text-anchor="middle">{}</text>"#,
                    top + HALF_H / 2.0,
                    top + HALF_H / 2.0,
                    direction.as_str()
                );
            }
            for p in model_points.iter().filter(|p| p.direction == direction) {
                let gi = groups.iter().position(|g| *g == p.group).unwrap_or(0);
                let x = left + step * (gi as f64 + 0.5);
                let y = y_of(p.mean, top, extent);
                let _ = writeln!(
                    svg,
                    r#"<g class="mark" data-group="{}" data-direction="{}" data-mean="{:.4}" data-lo="{:.4}" data-hi="{:.4}">"#,
                    escape(&p.group),
                    direction.as_str(),
                    p.mean,
                    p.lo,
                    p.hi
                );
                if p.hi > p.lo {
                    let y_lo = y_of(p.lo, top, extent);
                    let y_hi = y_of(p.hi, top, extent);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x:.2}" y1="{y_lo:.2}" x2="{x:.2}" y2="{y_hi:.2}" stroke="{color}" stroke-width="1.5"/>"#
                    );
                    for yc in [y_lo, y_hi] {
                        let _ = writeln!(
                            svg,
                            r#"<line x1="{:.2}" y1="{yc:.2}" x2="{:.2}" y2="{yc:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                            x - 5.0,
                            x + 5.0
                        );
                    }
                }
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/>"#
                );
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{:.2}</text>"#,
                    x + 7.0,
                    y + 3.5,
                    p.mean
                );
                let _ = writeln!(svg, "</g>");
            }
        }
        for (gi, g) in groups.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                left + step * (gi as f64 + 0.5),
                MARGIN_T + 2.0 * HALF_H + 16.0,
                escape(g)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Writes one SVG per target × fairness metric of each result into `dir`.
/// Plots whose cells are missing are skipped and returned as errors.
pub fn emit_all_plots(
    results: &[AuditResult],
    dir: impl AsRef<Path>,
) -> Result<(Vec<PathBuf>, Vec<ReportError>), ReportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let mut skipped = Vec::new();
    for result in results {
        let metrics: BTreeSet<Metric> = result.cells.iter().map(|c| c.metric).collect();
        for target in result.targets() {
            for &metric in &metrics {
                match emit_eo_plot(result, target, metric) {
                    Ok(svg) => {
                        let name = format!(
                            "{}_{}_{}_{}.svg",
                            slug(&result.metadata.dataset),
                            result.metadata.attribute,
                            slug(target),
                            metric.as_str().to_ascii_lowercase()
                        );
                        let path = dir.join(name);
                        write_file(&path, &svg)?;
                        written.push(path);
                    }
                    Err(e @ ReportError::MissingCells { .. }) => skipped.push(e),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((written, skipped))
}
