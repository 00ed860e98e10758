//! Static SVG plots of sweep results: one polyline per model against the
//! load factor. Missing values split a polyline; isolated points are drawn
//! as markers. Output bytes depend only on the inputs.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formulation::Model;
use crate::sweep::SweepRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Plottable column of the result table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Cost,
    Gap,
    RecoveredGap,
    BindingVmag,
    BindingFlow,
    Runtime,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Cost,
        Metric::Gap,
        Metric::RecoveredGap,
        Metric::BindingVmag,
        Metric::BindingFlow,
        Metric::Runtime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cost => "cost",
            Metric::Gap => "gap",
            Metric::RecoveredGap => "recovered_gap",
            Metric::BindingVmag => "vmag",
            Metric::BindingFlow => "flow",
            Metric::Runtime => "runtime",
        }
    }

    /// Result-table column the metric reads.
    pub fn column(self) -> &'static str {
        match self {
            Metric::Cost => "objective",
            Metric::Gap => "gap_pct",
            Metric::RecoveredGap => "recovered_gap_pct",
            Metric::BindingVmag => "pct_binding_vmag",
            Metric::BindingFlow => "pct_binding_flow",
            Metric::Runtime => "solve_time_s",
        }
    }

    pub fn default_label(self) -> &'static str {
        match self {
            Metric::Cost => "objective cost",
            Metric::Gap => "optimality gap (%)",
            Metric::RecoveredGap => "gap to recovered dispatch (%)",
            Metric::BindingVmag => "binding voltage limits (%)",
            Metric::BindingFlow => "binding flow limits (%)",
            Metric::Runtime => "solve time (s)",
        }
    }

    /// Value of a record, `None` where the cell is empty or the solve
    /// did not reach optimality.
    pub fn value(self, r: &SweepRecord) -> Option<f64> {
        match self {
            Metric::Cost => r.status.is_optimal().then_some(r.objective),
            Metric::Gap => r.gap_pct,
            Metric::RecoveredGap => r.recovered_gap_pct,
            Metric::BindingVmag => r.pct_binding_vmag,
            Metric::BindingFlow => r.pct_binding_flow,
            Metric::Runtime => r.solve_time_s,
        }
        .filter(|v| v.is_finite())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts the short name or the result-table column name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.column() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Metric::ALL.iter().map(|m| m.as_str()).collect();
                Error::Plot(format!("unknown metric '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub metric: Metric,
    /// Series to draw; empty means every model present in the records.
    pub models: Vec<Model>,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub path: PathBuf,
}

impl PlotSpec {
    /// Spec with default labels writing `<dir>/<metric>.svg`.
    pub fn new(metric: Metric, dir: &Path) -> PlotSpec {
        PlotSpec {
            metric,
            models: Vec::new(),
            title: metric.default_label().to_string(),
            x_label: "load factor t".to_string(),
            y_label: metric.default_label().to_string(),
            path: dir.join(format!("{}.svg", metric.as_str())),
        }
    }
}

/// One model's points, split at missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub model: Model,
    pub segments: Vec<Vec<(f64, f64)>>,
}

/// Groups the records into per-model series sorted by `t`. Models without
/// a single value are dropped.
pub fn collect_series(records: &[SweepRecord], spec: &PlotSpec) -> Vec<Series> {
    let mut models: Vec<Model> = if spec.models.is_empty() {
        records.iter().map(|r| r.model).collect()
    } else {
        spec.models.clone()
    };
    models.sort();
    models.dedup();
    let mut out = Vec::new();
    for model in models {
        let mut rows: Vec<&SweepRecord> = records.iter().filter(|r| r.model == model).collect();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut segments = Vec::new();
        let mut cur: Vec<(f64, f64)> = Vec::new();
        for r in rows {
            match spec.metric.value(r) {
                Some(v) if r.t.is_finite() => cur.push((r.t, v)),
                _ => {
                    if !cur.is_empty() {
                        segments.push(std::mem::take(&mut cur));
                    }
                }
            }
        }
        if !cur.is_empty() {
            segments.push(cur);
        }
        if !segments.is_empty() {
            out.push(Series { model, segments });
        }
    }
    out
}

fn colour(m: Model) -> &'static str {
    match m {
        Model::Ac => "#000000",
        Model::Qc => "#d62728",
        Model::Socp => "#1f77b4",
        Model::Sdp2 => "#2ca02c",
        Model::Sdp3 => "#9467bd",
    }
}

fn dash(m: Model) -> &'static str {
    match m {
        Model::Sdp2 => " stroke-dasharray=\"6 3\"",
        Model::Sdp3 => " stroke-dasharray=\"2 2\"",
        _ => "",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step, plus the padded range.
fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi - lo > 1e-12 * hi.abs().max(1.0) {
        (lo, hi)
    } else {
        let pad = (0.05 * lo.abs()).max(0.5);
        (lo - pad, hi + pad)
    };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|k| k * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).floor() * step;
    let last = (hi / step).ceil() * step;
    let n = ((last - first) / step).round() as usize;
    let marks = (0..=n).map(|i| first + i as f64 * step).collect();
    (first, last, marks)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Renders the plot as an SVG document.
pub fn render_svg(records: &[SweepRecord], spec: &PlotSpec) -> Result<String> {
    let series = collect_series(records, spec);
    if series.is_empty() {
        return Err(Error::Plot(format!(
            "no values of '{}' to plot after filtering",
            spec.metric.column()
        )));
    }
    let pts = || series.iter().flat_map(|s| s.segments.iter().flatten());
    let (xmin, xmax) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1, xt) = ticks(xmin, xmax);
    let (y0, y1, yt) = ticks(ymin, ymax);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(w, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        w,
        "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        LEFT + pw / 2.0,
        escape(&spec.title)
    );
    let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
    let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
    for &x in &xt {
        let px = sx(x);
        let _ = writeln!(
            w,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            TOP,
            TOP + ph
        );
        let _ = writeln!(
            w,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            TOP + ph + 18.0,
            tick_label(x, xstep)
        );
    }
    for &y in &yt {
        let py = sy(y);
        let _ = writeln!(
            w,
            "<line x1=\"{LEFT:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>",
            LEFT + pw
        );
        let _ = writeln!(
            w,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            py + 4.0,
            tick_label(y, ystep)
        );
    }
    let _ = writeln!(
        w,
        "<rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\" fill=\"none\" stroke=\"#000000\"/>"
    );
    let _ = writeln!(
        w,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        w,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let c = colour(ser.model);
        let _ = writeln!(w, "<g id=\"series-{}\">", ser.model);
        for seg in &ser.segments {
            if seg.len() == 1 {
                let (x, y) = seg[0];
                let _ = writeln!(
                    w,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{c}\"/>",
                    sx(x),
                    sy(y)
                );
            } else {
                let coords: Vec<String> = seg.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    w,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\"{}/>",
                    coords.join(" "),
                    dash(ser.model)
                );
            }
        }
        let _ = writeln!(w, "</g>");
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            w,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{c}\" stroke-width=\"1.5\"{}/>",
            lx + 24.0,
            dash(ser.model)
        );
        let _ = writeln!(
            w,
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            lx + 30.0,
            ly + 4.0,
            ser.model.as_str().to_uppercase()
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

/// Writes the plot to `spec.path` and returns that path.
pub fn emit_plot(records: &[SweepRecord], spec: &PlotSpec) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::Plot("no records to plot".into()));
    }
    let svg = render_svg(records, spec)?;
    std::fs::write(&spec.path, svg).map_err(|e| Error::Io {
        path: spec.path.display().to_string(),
        msg: e.to_string(),
    })?;
    Ok(spec.path.clone())
}
