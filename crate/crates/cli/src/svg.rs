//! Minimal SVG views: profile step plots, label rasters and trend lines.

use std::fmt::Write;

use gsbv_core::{CellLabel, ConcentrationProfile, GridFunction};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#b07aa1", "#76b7b2", "#edc948", "#ff9da7", "#9c755f",
];

fn open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

struct Scale {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, t: f64) -> f64 {
        let span = (self.x1 - self.x0).max(f64::MIN_POSITIVE);
        MARGIN + (t - self.x0) / span * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = self.y1.max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN - v / span * (HEIGHT - 2.0 * MARGIN)
    }
}

fn axes(out: &mut String, s: &Scale, y0: f64) {
    let _ = writeln!(
        out,
        "<path d=\"M{:.2} {:.2}H{:.2}M{:.2} {:.2}V{:.2}\" stroke=\"black\" fill=\"none\"/>",
        MARGIN,
        s.y(0.0),
        WIDTH - MARGIN,
        MARGIN,
        HEIGHT - MARGIN,
        MARGIN
    );
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-size=\"11\">{}</text>\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\
         <text x=\"4\" y=\"{:.2}\" font-size=\"11\">{}</text>",
        HEIGHT - MARGIN + 14.0,
        s.x0,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        s.x1,
        MARGIN - 4.0,
        s.y1.max(y0)
    );
}

/// Step plot of a profile over its support.
pub fn profile(f: &ConcentrationProfile) -> String {
    let (lo, hi) = f.support().unwrap_or((0.0, 1.0));
    let s = Scale {
        x0: lo,
        x1: hi,
        y1: f.max_value(),
    };
    let mut out = open(WIDTH, HEIGHT);
    axes(&mut out, &s, 0.0);
    let mut d = format!("M{:.2} {:.2}", s.x(lo), s.y(0.0));
    for (a, b, v) in f.plateaus() {
        let _ = write!(
            d,
            "L{:.2} {:.2}L{:.2} {:.2}",
            s.x(a),
            s.y(v),
            s.x(b),
            s.y(v)
        );
    }
    let _ = write!(d, "L{:.2} {:.2}", s.x(hi), s.y(0.0));
    let _ = writeln!(
        out,
        "<path d=\"{d}\" stroke=\"{}\" fill=\"none\"/>",
        PALETTE[0]
    );
    out.push_str("</svg>\n");
    out
}

/// Cell labels as a raster with the crack set drawn on top. A 1D function
/// is drawn as a single row.
pub fn labels(u: &GridFunction, labels: &[CellLabel]) -> String {
    let geom = u.geom();
    let (nx, ny) = match geom.shape() {
        [n] => (*n, 1),
        [nx, ny] => (*nx, *ny),
        _ => unreachable!("grids are 1D or 2D"),
    };
    let cell = (WIDTH / nx as f64).min(HEIGHT / ny as f64).max(1.0);
    let mut out = open(cell * nx as f64, cell * ny as f64);
    for (c, l) in labels.iter().enumerate() {
        let (i, j) = if geom.dim() == 1 {
            (c, 0)
        } else {
            (c / ny, c % ny)
        };
        let fill = match l {
            CellLabel::Main(k) => PALETTE[k % PALETTE.len()],
            CellLabel::GapMinus(_) | CellLabel::GapPlus(_) => "#bab0ac",
            CellLabel::Vanishing(_) => "#e15759",
        };
        // axis 0 runs left to right, axis 1 bottom to top
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\"><title>{l}</title></rect>",
            i as f64 * cell,
            (ny - 1 - j) as f64 * cell
        );
    }
    let mut d = String::new();
    for f in geom.interior_faces().filter(|&f| u.is_crack(f)) {
        let (i, j) = if geom.dim() == 1 {
            (f.lo, 0)
        } else {
            (f.lo / ny, f.lo % ny)
        };
        let (x, y) = (i as f64 * cell, (ny - 1 - j) as f64 * cell);
        if f.axis == 0 {
            let _ = write!(d, "M{:.2} {:.2}v{cell:.2}", x + cell, y);
        } else {
            let _ = write!(d, "M{:.2} {:.2}h{cell:.2}", x, y);
        }
    }
    if !d.is_empty() {
        let _ = writeln!(
            out,
            "<path d=\"{d}\" stroke=\"black\" stroke-width=\"1.5\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Named series against their index.
pub fn trends(series: &[(String, Vec<f64>)]) -> String {
    let len = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let top = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let s = Scale {
        x0: 0.0,
        x1: len.saturating_sub(1).max(1) as f64,
        y1: top,
    };
    let mut out = open(WIDTH, HEIGHT);
    axes(&mut out, &s, 0.0);
    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", s.x(i as f64), s.y(v)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" stroke=\"{color}\" fill=\"none\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            points.join(" "),
            WIDTH - MARGIN - 160.0,
            MARGIN + 14.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}
