//! CSV, JSON and SVG emission.
//!
//! Floats in CSV use 17 significant digits. SVG coordinates are rounded to
//! `1e-3` plot units and every file carries its own styles, so the output is
//! byte-identical for identical inputs.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::classifier::{DomainReport, ShapeType, SweepReport};
use crate::integrator::Trace;
use crate::phase::{eta_unchecked, zeta};

/// `r,psi,vprime,v` rows for every stored sample.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("r,psi,vprime,v\n");
    for s in &trace.samples {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.r, s.psi, s.vprime, s.v);
    }
    out
}

/// Trace metadata without the samples.
pub fn trace_json(trace: &Trace) -> Value {
    json!({
        "params": trace.params,
        "seed": trace.seed,
        "events": {"left": trace.left_event, "right": trace.right_event},
        "crossings": trace.crossings,
        "step_stats": trace.step_stats,
        "config": trace.config,
        "samples": trace.samples.len(),
        "gauge": trace.gauge,
    })
}

/// Classification envelope: params, seed, type labels, events and domain.
pub fn classify_json(trace: &Trace, shape: &ShapeType, domain: Option<&DomainReport>) -> Value {
    json!({
        "params": trace.params,
        "seed": trace.seed,
        "type": shape.labels,
        "zero_crossing": shape.zero_crossing,
        "evidence": shape.evidence,
        "tol": shape.tol,
        "note": shape.note,
        "events": {"left": trace.left_event, "right": trace.right_event},
        "domain": domain,
    })
}

/// Plain text histogram, one `type,count` line per type.
pub fn histogram_csv(report: &SweepReport) -> String {
    let mut out = String::from("type,count\n");
    for (t, c) in &report.histogram {
        let _ = writeln!(out, "{t},{c}");
    }
    out
}

/// One row per seed with its type (or error).
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("r,psi,type,crossing,error\n");
    for e in &report.entries {
        let (t, z) = match &e.shape {
            Some(s) => (s.labels.v.clone(), s.zero_crossing.map(|z| format!("{z:.16e}")).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        let err = e.error.as_deref().unwrap_or("").replace(',', ";");
        let _ = writeln!(out, "{:.16e},{:.16e},{t},{z},{err}", e.seed.r, e.seed.psi);
    }
    out
}

/// Which curve of a trace to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Psi,
    VPrime,
    V,
}

impl PlotKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            PlotKind::Psi => "psi",
            PlotKind::VPrime => "vprime",
            PlotKind::V => "v",
        }
    }

    fn axis(self) -> &'static str {
        match self {
            PlotKind::Psi => "psi",
            PlotKind::VPrime => "V'",
            PlotKind::V => "V",
        }
    }
}

/// Optional guides drawn behind the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlays {
    pub eta: bool,
    pub zeta: bool,
    pub r_line: bool,
}

impl Default for Overlays {
    fn default() -> Self {
        Self {
            eta: true,
            zeta: true,
            r_line: true,
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn inside(&self, y: f64) -> bool {
        y.is_finite() && y >= self.y.0 && y <= self.y.1
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

// Splits the curve wherever it leaves the vertical range.
fn polylines(frame: &Frame, pts: &[(f64, f64)], class: &str, out: &mut String) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
        if run.len() >= 2 {
            let coords: Vec<String> = run
                .iter()
                .map(|&(x, y)| format!("{:.3},{:.3}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, coords.join(" "));
        }
        run.clear();
    };
    for &(x, y) in pts {
        if frame.inside(y) {
            run.push((x, y));
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

fn y_range(kind: PlotKind, values: impl Iterator<Item = f64>) -> (f64, f64) {
    let clip = match kind {
        PlotKind::Psi => 10.0,
        PlotKind::VPrime => 5.0,
        PlotKind::V => f64::INFINITY,
    };
    let (mut lo, mut hi) = values
        .filter(|v| v.is_finite())
        .map(|v| v.clamp(-clip, clip))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Self-contained SVG of `ψ`, `V'` or `V` against `r` with the guide curves
/// and the line `r = R`. `label` is printed under the title, typically the
/// shape type.
pub fn trace_svg(trace: &Trace, kind: PlotKind, overlays: Overlays, label: &str) -> String {
    let p = &trace.params;
    let data: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .map(|s| {
            let y = match kind {
                PlotKind::Psi => s.psi,
                PlotKind::VPrime => s.vprime,
                PlotKind::V => s.v,
            };
            (s.r, y)
        })
        .collect();
    let frame = Frame {
        x: (-1.0, 1.0),
        y: y_range(kind, data.iter().map(|d| d.1)),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    out.push_str(
        "<style>text{font-family:monospace;font-size:12px}.axis{stroke:#000;stroke-width:1}\
         .sol{fill:none;stroke:#1f4e9c;stroke-width:1.6}.eta{fill:none;stroke:#c0392b;stroke-dasharray:5 3}\
         .zeta{fill:none;stroke:#27813b;stroke-dasharray:2 3}.rline{stroke:#777;stroke-dasharray:4 4}</style>\n",
    );
    let _ = writeln!(out, r##"<rect width="{W}" height="{H}" fill="#fff"/>"##);

    let (x0, x1) = (frame.px(-1.0), frame.px(1.0));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(out, r#"<rect class="axis" fill="none" x="{x0:.3}" y="{y1:.3}" width="{:.3}" height="{:.3}"/>"#, x1 - x0, y0 - y1);
    if frame.inside(0.0) {
        let y = frame.py(0.0);
        let _ = writeln!(out, r#"<line class="axis" x1="{x0:.3}" y1="{y:.3}" x2="{x1:.3}" y2="{y:.3}"/>"#);
    }
    if overlays.r_line {
        let x = frame.px(p.r_const());
        let _ = writeln!(out, r#"<line class="rline" x1="{x:.3}" y1="{y1:.3}" x2="{x:.3}" y2="{y0:.3}"/>"#);
        let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">r=R</text>"#, x + 3.0, y1 + 14.0);
    }

    let grid: Vec<f64> = (1..800).map(|i| -1.0 + 2.0 * i as f64 / 800.0).collect();
    let guide = |f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for &r in &grid {
            if (r - p.r_const()).abs() < 1e-9 {
                pts.push((r, f64::NAN));
            } else {
                pts.push((r, f(r)));
            }
        }
        pts
    };
    match kind {
        PlotKind::Psi if overlays.eta => {
            polylines(&frame, &guide(&|r| eta_unchecked(p, r)), "eta", &mut out);
        }
        PlotKind::VPrime if overlays.zeta => {
            let z = |r: f64| zeta(p, r).ok().and_then(|v| v.finite()).unwrap_or(f64::NAN);
            polylines(&frame, &guide(&z), "zeta", &mut out);
        }
        _ => {}
    }
    polylines(&frame, &data, "sol", &mut out);

    let title = format!(
        "{}(r)  k={} n={} m1={} m2={} R={:.6}",
        kind.axis(),
        p.k,
        p.n,
        p.m1,
        p.m2,
        p.r_const()
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="18">{}</text>"#, escape(&title));
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="34">{}</text>"#, escape(label));
    let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">-1</text>"#, x0 - 6.0, y0 + 16.0);
    let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}">1</text>"#, x1 - 4.0, y0 + 16.0);
    let _ = writeln!(out, r#"<text x="4" y="{:.3}">{:.3}</text>"#, y1 + 4.0, frame.y.1);
    let _ = writeln!(out, r#"<text x="4" y="{:.3}">{:.3}</text>"#, y0 + 4.0, frame.y.0);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SolitonParams;
    use crate::integrator::{maximal_trace, IntegratorConfig};
    use crate::phase::PhasePoint;

    fn trace() -> Trace {
        let p = SolitonParams::new(1, 2, 1, 1).unwrap();
        maximal_trace(&p, PhasePoint::new(0.0, 0.0).unwrap(), &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn csv_round_trips_exactly() {
        let t = trace();
        let csv = trace_csv(&t);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("r,psi,vprime,v"));
        for (line, s) in lines.zip(&t.samples) {
            let vals: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(vals, vec![s.r, s.psi, s.vprime, s.v]);
        }
    }

    #[test]
    fn svg_is_deterministic_and_labelled() {
        let t = trace();
        let a = trace_svg(&t, PlotKind::Psi, Overlays::default(), "type I");
        let b = trace_svg(&t, PlotKind::Psi, Overlays::default(), "type I");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("k=1 n=2") && a.contains("type I"));
        assert!(a.contains(r#"class="eta""#) && a.contains(r#"class="sol""#));
        assert!(!a.contains("href"));
    }

    #[test]
    fn json_envelope_has_events() {
        let v = trace_json(&trace());
        assert_eq!(v["events"]["left"]["kind"], "BlowUpMinus");
        assert_eq!(v["params"]["k"], 1);
    }
}
