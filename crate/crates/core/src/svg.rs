//! Self-contained SVG rendering of a bound trace on log-log axes, with
//! optional asymptote lines and transition-time markers. Output is fully
//! deterministic: fixed canvas, fixed float formatting, no external assets.

use std::fmt::Write as _;

use crate::bound::{Asymptote, BoundTrace};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Everything needed to draw one plot.
#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    /// Dashed reference lines `coefficient * t^power`.
    pub asymptotes: Vec<Asymptote>,
    /// Vertical dashed markers (transition times).
    pub markers: Vec<f64>,
}

struct Frame {
    lx0: f64,
    lx1: f64,
    ly0: f64,
    ly1: f64,
}

impl Frame {
    fn x(&self, lt: f64) -> f64 {
        MARGIN_LEFT + (lt - self.lx0) / (self.lx1 - self.lx0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }
    fn y(&self, lf: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (lf - self.ly0) / (self.ly1 - self.ly0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn exp_label(k: i64) -> String {
    match k {
        0 => "1".to_string(),
        1 => "10".to_string(),
        _ => format!("1e{k}"),
    }
}

/// Renders the trace as an SVG document string.
///
/// Samples with `F <= 0` cannot appear on a log axis and are skipped; a
/// trace with no positive values yields a labelled empty frame instead of
/// an error so identically-zero bounds stay representable.
pub fn render_loglog(trace: &BoundTrace, plot: &Plot) -> String {
    let mut s = String::with_capacity(16 * 1024);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !plot.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" font-family="monospace" font-size="15" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&plot.title)
        );
    }

    let pos: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|&(&t, &f)| t > 0.0 && f > 0.0 && t.is_finite() && f.is_finite())
        .map(|(&t, &f)| (t.log10(), f.log10()))
        .collect();

    if pos.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="14" text-anchor="middle">bound is identically zero</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let lx0 = pos.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor();
    let lx1 = pos.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil();
    let ly0 = pos.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
    let ly1 = pos.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
    let frame = Frame {
        lx0,
        lx1: if lx1 > lx0 { lx1 } else { lx0 + 1.0 },
        ly0,
        ly1: if ly1 > ly0 { ly1 } else { ly0 + 1.0 },
    };

    // Decade grid with labels on both axes.
    for k in (frame.lx0 as i64)..=(frame.lx1 as i64) {
        let x = frame.x(k as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            exp_label(k)
        );
    }
    for k in (frame.ly0 as i64)..=(frame.ly1 as i64) {
        let y = frame.y(k as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            exp_label(k)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12" text-anchor="middle">t</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">F(t)</text>"#,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0
    );

    // Asymptotes are straight lines in log-log space; clip them to the frame.
    for asy in &plot.asymptotes {
        if asy.coefficient <= 0.0 {
            continue;
        }
        let lc = asy.coefficient.log10();
        let p = asy.power as f64;
        // log F = lc + p * log t; restrict log t so log F stays in frame.
        let (mut a0, mut a1) = (frame.lx0, frame.lx1);
        if p != 0.0 {
            let t_at = |lf: f64| (lf - lc) / p;
            let (mut b0, mut b1) = (t_at(frame.ly0), t_at(frame.ly1));
            if b0 > b1 {
                std::mem::swap(&mut b0, &mut b1);
            }
            a0 = a0.max(b0);
            a1 = a1.min(b1);
        } else if lc + 0.0 < frame.ly0 || lc > frame.ly1 {
            continue;
        }
        if a0 >= a1 {
            continue;
        }
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#b22222" stroke-width="1" stroke-dasharray="6,4"/>"##,
            frame.x(a0),
            frame.y(lc + p * a0),
            frame.x(a1),
            frame.y(lc + p * a1)
        );
    }

    for &tau in &plot.markers {
        if tau <= 0.0 || !tau.is_finite() {
            continue;
        }
        let lt = tau.log10();
        if lt < frame.lx0 || lt > frame.lx1 {
            continue;
        }
        let x = frame.x(lt);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#228b22" stroke-width="1" stroke-dasharray="2,3"/>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
    }

    let mut path = String::with_capacity(pos.len() * 16);
    for (i, (lt, lf)) in pos.iter().enumerate() {
        let sep = if i == 0 { "" } else { " " };
        let _ = write!(path, "{sep}{:.2},{:.2}", frame.x(*lt), frame.y(*lf));
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.8"/>"##
    );

    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
