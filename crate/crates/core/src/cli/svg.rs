//! Minimal scatter-plot writer.

use std::fmt::Write as _;

use crate::embed::Point2;

pub const SIZE: f64 = 800.0;
pub const MARGIN: f64 = 20.0;
pub const RADIUS: f64 = 2.0;
pub const MISSING: &str = "#808080";

/// 256 stops of a polynomial fit to the viridis colour map, dark blue to
/// yellow, with monotonically increasing lightness.
pub fn ramp() -> [[u8; 3]; 256] {
    const C: [[f64; 3]; 7] = [
        [0.277_727_327_223_417_7, 0.005_407_344_544_966_578, 0.334_099_805_335_306_1],
        [0.105_093_043_108_577_4, 1.404_613_529_898_575, 1.384_590_162_594_685],
        [-0.330_861_828_725_556_3, 0.214_847_559_468_213, 0.095_095_163_028_236_59],
        [-4.634_230_498_983_486, -5.799_100_973_351_585, -19.332_440_956_279_87],
        [6.228_269_936_347_081, 14.179_933_366_805_09, 56.690_552_600_681_05],
        [4.776_384_997_670_288, -13.745_145_377_746_01, -65.353_032_633_372_34],
        [-5.435_455_855_934_631, 4.645_852_612_178_535, 26.312_435_249_583_2],
    ];
    let mut out = [[0u8; 3]; 256];
    for (s, stop) in out.iter_mut().enumerate() {
        let t = s as f64 / 255.0;
        for (ch, value) in stop.iter_mut().enumerate() {
            let v = C.iter().rev().fold(0.0, |acc, c| acc * t + c[ch]);
            *value = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    out
}

fn colors(values: Option<&[f64]>, n: usize) -> Vec<String> {
    let Some(values) = values else {
        return vec![MISSING.to_string(); n];
    };
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let ramp = ramp();
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                return MISSING.to_string();
            }
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let [r, g, b] = ramp[(t * 255.0).round() as usize];
            format!("#{r:02x}{g:02x}{b:02x}")
        })
        .collect()
}

/// An 800x800 SVG with one circle per point. The drawing is scaled
/// uniformly to fit inside the margin, with y pointing up. `values` colours
/// the points through [`ramp`]; without it every point is gray.
pub fn scatter(coords: &[Point2], values: Option<&[f64]>, title: &str) -> String {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in coords {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let span = (xmax - xmin).max(ymax - ymin);
    let inner = SIZE - 2.0 * MARGIN;
    let scale = if span > 0.0 && span.is_finite() { inner / span } else { 0.0 };
    let (cx, cy) = if coords.is_empty() {
        (0.0, 0.0)
    } else {
        (0.5 * (xmin + xmax), 0.5 * (ymin + ymax))
    };
    let fill = colors(values, coords.len());

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (p, f) in coords.iter().zip(&fill) {
        let x = SIZE / 2.0 + (p[0] - cx) * scale;
        let y = SIZE / 2.0 - (p[1] - cy) * scale;
        writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="{f}"/>"#).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub(crate) fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
