//! Slice pictures "from above" (x1, x2) and "from the side" (x2, x3).

use std::fmt::Write;

use crate::io::CurveDoc;

#[derive(Debug, Clone, Copy)]
pub enum View {
    Above,
    Side,
}

impl View {
    pub fn suffix(self) -> &'static str {
        match self {
            View::Above => "above",
            View::Side => "side",
        }
    }

    fn axes(self) -> (usize, usize) {
        match self {
            View::Above => (0, 1),
            View::Side => (1, 2),
        }
    }

    fn labels(self) -> (&'static str, &'static str) {
        match self {
            View::Above => ("x1", "x2"),
            View::Side => ("x2", "x3"),
        }
    }
}

/// Half-width of the square viewport.
pub const EXTENT: f64 = 2.2;
const PIXELS: f64 = 480.0;
/// Points beyond this are dropped and break the path.
const FAR: f64 = 10.0 * EXTENT;

/// A number with 9 significant digits and no trailing zeros.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render(curves: &[CurveDoc], t: Option<f64>, view: View) -> String {
    let (a, b) = view.axes();
    let (la, lb) = view.labels();
    let mut s = String::new();
    let side = 2.0 * EXTENT;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" viewBox="{lo} {lo} {w} {w}">"#,
        px = num(PIXELS),
        lo = num(-EXTENT),
        w = num(side),
    );
    let _ = writeln!(s, r#"<rect x="{lo}" y="{lo}" width="{w}" height="{w}" fill="white"/>"#, lo = num(-EXTENT), w = num(side));
    let _ = writeln!(
        s,
        r##"<g stroke="#bbbbbb" stroke-width="0.004"><line x1="{lo}" y1="0" x2="{hi}" y2="0"/><line x1="0" y1="{lo}" x2="0" y2="{hi}"/></g>"##,
        lo = num(-EXTENT),
        hi = num(EXTENT),
    );
    let caption = match t {
        Some(t) => format!("t = {}   {la} right, {lb} up", num(t)),
        None => format!("{la} right, {lb} up"),
    };
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="{font}" font-family="sans-serif">{caption}</text>"#,
        x = num(-EXTENT + 0.05),
        y = num(-EXTENT + 0.15),
        font = num(0.12),
    );
    // flip so the second axis points up
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none" stroke-width="0.012" stroke-linejoin="round">"#);
    for (k, c) in curves.iter().enumerate() {
        let mut d = String::new();
        let mut prev: Option<[f64; 3]> = None;
        for p in &c.points {
            if p[a].abs().max(p[b].abs()) > FAR {
                prev = None;
                continue;
            }
            // a jump this large means the curve went through infinity
            let cmd = match prev {
                Some(q) if (p[a] - q[a]).hypot(p[b] - q[b]) < 1.0 => "L",
                _ => "M",
            };
            let _ = write!(d, "{cmd}{} {} ", num(p[a]), num(p[b]));
            prev = Some(*p);
        }
        if c.closed && !d.is_empty() && !d[1..].contains('M') {
            d.push('Z');
        }
        if d.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<path stroke="{}" d="{}"/>"#, PALETTE[k % PALETTE.len()], d.trim_end());
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(std::f64::consts::PI), "3.14159265");
        assert_eq!(num(-0.000123456789012), "-0.000123456789");
        assert_eq!(num(12345.6789012345), "12345.6789");
        assert_eq!(num(-1e-30), "-0.000000000000000000000000000001");
    }

    #[test]
    fn closed_curves_close_their_path() {
        let c = CurveDoc { t: 0.0, chart: "standard".into(), closed: true, points: vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0]] };
        let svg = render(&[c], Some(0.0), View::Above);
        assert!(svg.contains("M0 0 L0.5 0 L0 0.5 Z"));
    }

    #[test]
    fn paths_break_at_infinity() {
        let pts = vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1e6, 0.0, 0.0], [-0.5, 0.0, 0.0], [-0.4, 0.0, 0.0]];
        let c = CurveDoc { t: 0.0, chart: "standard".into(), closed: true, points: pts };
        let svg = render(&[c], None, View::Above);
        assert!(svg.contains(r#"d="M0 0 L0.5 0 M-0.5 0 L-0.4 0""#), "{svg}");
    }
}
