//! File emission: CSV tables, JSON reports and SVG renderings.
//!
//! CSV: `,` delimiter, `.` decimals, LF line endings, mandatory header.
//! Numbers use Rust's shortest round-trip formatting, so every value parses
//! back to the identical `f64`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use sweepwave::limit::{EventKind, PiecewisePath};
use sweepwave::params::ModelParams;
use sweepwave::sim::Trajectory;

use crate::config::RunConfig;

/// Shortest decimal that parses back to `x`.
#[inline]
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn kind_fields(kind: EventKind) -> (&'static str, usize) {
    match kind {
        EventKind::NewTypeBirth { new_type } => ("birth", new_type),
        EventKind::DominanceChange { new_dominant } => ("dominance", new_dominant),
    }
}

/// Limit path table: one row per event time with every level at that time,
/// preceded by the initial levels (`event_index` 0, kind `initial`). A
/// path without events yields the header only.
pub fn write_limit_csv<W: Write>(mut w: W, path: &PiecewisePath<f64>) -> io::Result<()> {
    let k_max = path.type_count().saturating_sub(1);
    let mut header = String::from("event_index,s_n,kind,new_dominant_or_new_type");
    for j in 0..=k_max {
        write!(header, ",y_{j}").unwrap();
    }
    writeln!(w, "{header}")?;
    if path.events.is_empty() {
        return Ok(());
    }
    let row = |w: &mut W, idx: usize, s: f64, kind: &str, which: String| -> io::Result<()> {
        let mut line = format!("{idx},{},{kind},{which}", num(s));
        for j in 0..=k_max {
            let y = path.eval(j, s).map_err(io::Error::other)?;
            write!(line, ",{}", num(y)).unwrap();
        }
        writeln!(w, "{line}")
    };
    row(&mut w, 0, 0.0, "initial", path.initial.dominant.to_string())?;
    for e in &path.events {
        let (kind, which) = kind_fields(e.kind);
        row(&mut w, e.index + 1, e.time, kind, which.to_string())?;
    }
    Ok(())
}

/// `k,b_k,gap_k` for every type born after time zero.
pub fn write_birth_csv<W: Write>(mut w: W, path: &PiecewisePath<f64>) -> io::Result<()> {
    writeln!(w, "k,b_k,gap_k")?;
    for b in path.birth_times().into_iter().filter(|b| b.k > path.initial.edge) {
        writeln!(w, "{},{},{}", b.k, num(b.time), num(b.gap))?;
    }
    Ok(())
}

/// `t,N,types` then `x_0..x_{max_type}`; `types` is the quoted sparse list
/// `"type:count;…"`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, max_type: usize) -> io::Result<()> {
    let mut header = String::from("t,N,types");
    for j in 0..=max_type {
        write!(header, ",x_{j}").unwrap();
    }
    writeln!(w, "{header}")?;
    for s in &traj.samples {
        let sparse: Vec<String> = s.counts.iter().map(|(j, c)| format!("{j}:{c}")).collect();
        let mut line = format!("{},{},\"{}\"", num(s.t), s.n, sparse.join(";"));
        for j in 0..=max_type {
            write!(line, ",{}", s.count(j)).unwrap();
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Snapshot table in long form: `source,t,type,prob`.
pub fn write_snapshot_csv<W: Write>(
    mut w: W,
    rows: &[(&str, &sweepwave::analysis::Snapshot)],
) -> io::Result<()> {
    writeln!(w, "source,t,type,prob")?;
    for (source, snap) in rows {
        for &(j, p) in &snap.probs {
            writeln!(w, "{source},{},{j},{}", num(snap.t), num(p))?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Report<'a, P: Serialize> {
    pub params: ModelParams<f64>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub payload: P,
}

impl<'a, P: Serialize> Report<'a, P> {
    pub fn new(config: &'a RunConfig, seed: Option<u64>, payload: P) -> Self {
        Self {
            params: config.params,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            command: config.command.name(),
            config,
            payload,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> io::Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf)
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const SVG_PAD: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// One polyline per series, in the series' own (scaled) coordinates.
pub fn svg_polylines(series: &[Vec<(f64, f64)>], x_label: &str, y_label: &str) -> String {
    let pts = series.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| SVG_PAD + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * SVG_PAD);
    let sy = |y: f64| SVG_H - SVG_PAD - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * SVG_PAD);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    );
    writeln!(
        out,
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"12\">{x_label} [{}, {}]</text>\n<text x=\"4\" y=\"14\" font-size=\"12\">{y_label} [{}, {}]</text>",
        SVG_W / 2.0,
        SVG_H - 8.0,
        num(x0),
        num(x1),
        num(y0),
        num(y1)
    )
    .unwrap();
    for (i, s) in series.iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        let points: Vec<String> = s.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(
            out,
            "<polyline data-type=\"{i}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            PALETTE[i % PALETTE.len()],
            points.join(" ")
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Limit levels `y_j` against scaled time, one series per type, cut to the
/// stretches where the type is present.
pub fn limit_series(path: &PiecewisePath<f64>) -> Vec<Vec<(f64, f64)>> {
    path.segments
        .iter()
        .map(|pieces| {
            let mut pts = Vec::new();
            for (i, seg) in pieces.iter().enumerate() {
                let end = pieces.get(i + 1).map_or(path.end(), |n| n.start);
                pts.push((seg.start, seg.value.max(0.0)));
                pts.push((end, (seg.value + seg.slope * (end - seg.start)).max(0.0)));
            }
            pts
        })
        .collect()
}

/// A limit path read back from its CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTable {
    pub times: Vec<f64>,
    pub kinds: Vec<String>,
    pub which: Vec<usize>,
    /// `levels[row][j]`.
    pub levels: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

impl LimitTable {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let err = |line: usize, message: String| TableError { line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let width = header.split(',').count();
        let mut table = LimitTable {
            times: Vec::new(),
            kinds: Vec::new(),
            which: Vec::new(),
            levels: Vec::new(),
        };
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != width {
                return Err(err(i + 2, format!("{} columns, header has {width}", cols.len())));
            }
            let f = |s: &str| s.parse::<f64>().map_err(|e| err(i + 2, e.to_string()));
            table.times.push(f(cols[1])?);
            table.kinds.push(cols[2].to_string());
            table.which.push(cols[3].parse().map_err(|e: std::num::ParseIntError| err(i + 2, e.to_string()))?);
            table.levels.push(cols[4..].iter().map(|s| f(s)).collect::<Result<_, _>>()?);
        }
        Ok(table)
    }

    /// Re-evaluates `y_j(t)` from the table alone: between consecutive rows
    /// every type present moves with slope `λ_{j−m}/γ` (`m` the dominant
    /// type in force), clamped at zero; unborn types stay at zero.
    pub fn eval(&self, params: &ModelParams<f64>, j: usize, t: f64) -> Option<f64> {
        let row = self.times.partition_point(|&s| s <= t).checked_sub(1)?;
        let mut dominant = 0;
        let mut highest = 0;
        for (r, kind) in self.kinds[..=row].iter().enumerate() {
            match kind.as_str() {
                "initial" => {
                    dominant = self.which[r];
                    highest = self.levels[r].iter().rposition(|&y| y > 0.0).unwrap_or(0);
                }
                "dominance" => dominant = self.which[r],
                "birth" => highest = highest.max(self.which[r]),
                _ => return None,
            }
        }
        let y0 = *self.levels[row].get(j).unwrap_or(&0.0);
        if j > highest {
            return Some(0.0);
        }
        let slope = params.lambda_growth(j as i64 - dominant as i64) / params.gamma;
        Some((y0 + slope * (t - self.times[row])).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sweepwave::limit::run_limit;

    #[test]
    fn regime_one_birth_rows() {
        let p = ModelParams::fixed(0.01, 1.3, 1e-3).unwrap();
        let path = run_limit(&p, 3.0, 1000).unwrap();
        let mut buf = Vec::new();
        write_birth_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,b_k,gap_k"));
        let parse = |l: &str| -> Vec<f64> { l.split(',').map(|x| x.parse().unwrap()).collect() };
        let r2 = parse(lines.next().unwrap());
        let r3 = parse(lines.next().unwrap());
        assert_eq!(r2[0], 2.0);
        assert!((r2[1] - 0.7).abs() < 1e-12 && (r2[2] - 0.7).abs() < 1e-12);
        assert_eq!(r3[0], 3.0);
        assert!((r3[1] - 1.397).abs() < 1e-12 && (r3[2] - 0.697).abs() < 1e-12);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.7), "0.7");
    }

    #[test]
    fn svg_has_one_polyline_per_type() {
        let p = ModelParams::fixed(0.01, 1.3, 1e-3).unwrap();
        let path = run_limit(&p, 3.0, 1000).unwrap();
        let series = limit_series(&path);
        let svg = svg_polylines(&series, "t", "y");
        let lines = svg.matches("<polyline").count();
        assert_eq!(lines, series.iter().filter(|s| !s.is_empty()).count());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
