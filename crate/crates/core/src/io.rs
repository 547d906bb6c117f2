//! CSV, summary and SVG output.
//!
//! Numbers are written with a fixed count of significant digits (9 unless
//! `HHRD_CSV_DIGITS` says otherwise) in a `%g`-style notation, so identical
//! records always serialize to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::{TrajectoryRecord, FIELD_NAMES};
use crate::model::PointState;
use crate::monitors::{MonitorVerdicts, RegimeLabel};

pub const DEFAULT_DIGITS: usize = 9;
pub const DIGITS_ENV: &str = "HHRD_CSV_DIGITS";

/// Significant digits for numeric output.
pub fn output_digits() -> usize {
    std::env::var(DIGITS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|d| (1..=17).contains(d))
        .unwrap_or(DEFAULT_DIGITS)
}

/// Formats like C's `%.{digits}g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_num(x: f64) -> String {
    format_sig(x, output_digits())
}

/// Column name `<neuron>_<field>@x<pos>`.
fn column_name(neuron: usize, field: &str, pos: f64) -> String {
    format!("{}_{}@x{}", neuron + 1, field, fmt_num(pos))
}

pub fn render_timeseries_csv(record: &TrajectoryRecord) -> Result<String> {
    if record.times.is_empty() {
        return Err(Error::Domain("cannot write an empty record".into()));
    }
    let mut out = String::from("t");
    for neuron in 0..record.neuron_count {
        for p in 0..record.probes.len() {
            for field in FIELD_NAMES {
                out.push(',');
                out.push_str(&column_name(neuron, field, record.probe_position(p)));
            }
        }
    }
    out.push('\n');
    for (k, t) in record.times.iter().enumerate() {
        out.push_str(&fmt_num(*t));
        for neuron in 0..record.neuron_count {
            for p in 0..record.probes.len() {
                let s = record.series[neuron][p][k];
                for x in [s.v, s.n, s.m, s.h] {
                    out.push(',');
                    out.push_str(&fmt_num(x));
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the probe time series: one row per recorded step.
pub fn write_timeseries_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    write_file(path, &render_timeseries_csv(record)?)
}

fn parse_column(name: &str) -> Option<(usize, usize, f64)> {
    let (head, pos) = name.split_once("@x")?;
    let (neuron, field) = head.split_once('_')?;
    let neuron: usize = neuron.parse().ok()?;
    let k = FIELD_NAMES.iter().position(|f| *f == field)?;
    Some((neuron.checked_sub(1)?, k, pos.parse().ok()?))
}

/// Parses a time-series CSV back into a probe-only record.
///
/// The record's grid is the set of probe positions; snapshots and
/// whole-field extrema are not recoverable from this format.
pub fn parse_timeseries_csv(text: &str) -> Result<TrajectoryRecord> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("time-series CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(Error::Config("time-series CSV must start with a 't' column".into()));
    }
    let mut parsed = Vec::with_capacity(cols.len() - 1);
    for c in &cols[1..] {
        parsed.push(parse_column(c).ok_or_else(|| {
            Error::Config(format!("unrecognized time-series column '{c}'"))
        })?);
    }
    let neuron_count = parsed.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let mut positions: Vec<f64> = Vec::new();
    for c in &parsed {
        if !positions.contains(&c.2) {
            positions.push(c.2);
        }
    }
    let mut sorted = positions.clone();
    sorted.sort_by(f64::total_cmp);
    let probes: Vec<usize> = positions
        .iter()
        .map(|p| sorted.iter().position(|q| q == p).expect("present"))
        .collect();

    let mut times = Vec::new();
    let mut series = vec![vec![Vec::new(); positions.len()]; neuron_count];
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 2)))?;
        if values.len() != cols.len() {
            return Err(Error::Config(format!(
                "line {}: expected {} values, found {}",
                lineno + 2,
                cols.len(),
                values.len()
            )));
        }
        times.push(values[0]);
        let mut row = vec![vec![PointState::default(); positions.len()]; neuron_count];
        for (c, v) in parsed.iter().zip(&values[1..]) {
            let p = positions.iter().position(|q| *q == c.2).expect("present");
            let s = &mut row[c.0][p];
            match c.1 {
                0 => s.v = *v,
                1 => s.n = *v,
                2 => s.m = *v,
                _ => s.h = *v,
            }
        }
        for (neuron, per_probe) in row.into_iter().enumerate() {
            for (p, s) in per_probe.into_iter().enumerate() {
                series[neuron][p].push(s);
            }
        }
    }
    Ok(TrajectoryRecord {
        neuron_count,
        positions: sorted,
        probes,
        times,
        series,
        snapshots: Vec::new(),
        extrema: Vec::new(),
        verdicts: None,
    })
}

pub fn read_timeseries_csv(path: &Path) -> Result<TrajectoryRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timeseries_csv(&text)
}

fn missing_snapshot(record: &TrajectoryRecord, time: f64) -> Error {
    let available: Vec<String> = record.snapshots.iter().map(|s| fmt_num(s.time)).collect();
    Error::Domain(format!(
        "no snapshot at t={time}; available: [{}]",
        available.join(", ")
    ))
}

pub fn render_snapshot_csv(record: &TrajectoryRecord, time: f64) -> Result<String> {
    let snap = record
        .snapshot_at(time)
        .ok_or_else(|| missing_snapshot(record, time))?;
    let mut out = String::from("x");
    for neuron in 1..=record.neuron_count {
        for field in FIELD_NAMES {
            let _ = write!(out, ",{field}{neuron}");
        }
    }
    out.push('\n');
    for (node, x) in record.positions.iter().enumerate() {
        out.push_str(&fmt_num(*x));
        for nrn in &snap.state.neurons {
            let s = nrn.point(node);
            for v in [s.v, s.n, s.m, s.h] {
                out.push(',');
                out.push_str(&fmt_num(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes the full spatial state at a recorded snapshot time.
pub fn write_snapshot_csv(record: &TrajectoryRecord, time: f64, path: &Path) -> Result<()> {
    write_file(path, &render_snapshot_csv(record, time)?)
}

pub fn snapshot_file_name(time: f64) -> String {
    format!("snapshot_t{}.csv", format_sig(time, DEFAULT_DIGITS))
}

/// What a run reports besides its CSV files.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Source of the run, e.g. `preset fig2` or a config path.
    pub source: String,
    pub labels: Vec<RegimeLabel>,
    pub verdicts: Option<MonitorVerdicts>,
    /// Key/value pairs describing the configuration.
    pub config_echo: Vec<(String, String)>,
    /// Wall-clock seconds; printed, but kept out of the summary file so that
    /// output files stay byte-for-byte reproducible.
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "source = {}", self.source);
        for (k, v) in &self.config_echo {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        for (i, l) in self.labels.iter().enumerate() {
            let n = i + 1;
            let _ = writeln!(out, "label.neuron{n} = {}", l.label);
            for (side, st) in [("near", &l.near), ("far", &l.far)] {
                let _ = writeln!(out, "{side}.neuron{n}.position = {}", fmt_num(st.position));
                let _ = writeln!(out, "{side}.neuron{n}.spikes = {}", st.spike_count());
                let _ = writeln!(out, "{side}.neuron{n}.bursts = {}", st.burst_count());
                let _ = writeln!(out, "{side}.neuron{n}.isi_cv = {}", fmt_num(st.isi_cv));
                let _ = writeln!(out, "{side}.neuron{n}.amplitude = {}", fmt_num(st.amplitude));
            }
        }
        if let Some(v) = &self.verdicts {
            let _ = writeln!(out, "monitor.gates = {}", v.gates);
            let _ = writeln!(out, "monitor.voltage = {}", v.voltage);
            for (i, b) in v.bounds.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "bounds.neuron{} = {} {} {}",
                    i + 1,
                    fmt_num(b.v_lo),
                    fmt_num(b.v_hi),
                    b.derivation
                );
            }
        }
        out
    }
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<()> {
    write_file(path, &summary.render())
}

/// Reads `label.neuronN = ...` lines from a summary file.
pub fn parse_summary_labels(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .filter_map(|l| {
            let (k, v) = l.split_once(" = ")?;
            let n = k.strip_prefix("label.neuron")?.parse().ok()?;
            Some((n, v.to_string()))
        })
        .collect()
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 400.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn svg_plot(title: &str, lines: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = lines.iter().flat_map(|(_, l)| l.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let margin = 40.0;
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * margin);
    let sy = |y: f64| SVG_H - margin - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * margin);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{margin}" y="20" font-size="14">{title}</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{margin}" y="{}" font-size="10">x: [{}, {}]  y: [{}, {}]</text>"#,
        SVG_H - 10.0,
        format_sig(x0, 6),
        format_sig(x1, 6),
        format_sig(y0, 6),
        format_sig(y1, 6)
    );
    for (i, (label, l)) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = l
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"><title>{label}</title></polyline>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{label}</text>"#,
            SVG_W - 160.0,
            30.0 + 12.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// V(t) at every probe of every neuron.
pub fn write_timeseries_svg(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let mut lines = Vec::new();
    for neuron in 0..record.neuron_count {
        for p in 0..record.probes.len() {
            let pts = record
                .times
                .iter()
                .zip(&record.series[neuron][p])
                .map(|(t, s)| (*t, s.v))
                .collect();
            lines.push((column_name(neuron, "V", record.probe_position(p)), pts));
        }
    }
    write_file(path, &svg_plot("V(t) at probes", &lines))
}

/// V(x) of every neuron at one snapshot.
pub fn write_snapshot_svg(record: &TrajectoryRecord, time: f64, path: &Path) -> Result<()> {
    let snap = record
        .snapshot_at(time)
        .ok_or_else(|| missing_snapshot(record, time))?;
    let lines: Vec<_> = snap
        .state
        .neurons
        .iter()
        .enumerate()
        .map(|(i, nrn)| {
            let pts = record.positions.iter().copied().zip(nrn.v.iter().copied()).collect();
            (format!("V{}", i + 1), pts)
        })
        .collect();
    write_file(path, &svg_plot(&format!("V(x) at t={}", fmt_num(time)), &lines))
}
