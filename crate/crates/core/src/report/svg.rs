//! Minimal SVG drawing: line charts, scatter grids and heatmaps.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// An SVG document under construction.
pub struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = write!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
        );
        buf.push('\n');
        let _ = writeln!(buf, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
        Svg { buf }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.buf, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#);
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(self.buf, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r}" fill="{fill}" fill-opacity="0.7"/>"#);
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
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
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// One named series per line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h) = (640.0, 420.0);
    let (l, r, t, b) = (70.0, 150.0, 40.0, 50.0);
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);
    let mut s = Svg::new(w, h);
    s.text(w / 2.0, 24.0, 16.0, "middle", title);
    s.line(l, h - b, w - r, h - b, "black");
    s.line(l, t, l, h - b, "black");
    for i in 0..=4 {
        let yv = y0 + (y1 - y0) * i as f64 / 4.0;
        s.text(l - 6.0, py(yv) + 4.0, 11.0, "end", &format!("{yv:.3}"));
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        s.text(px(xv), h - b + 16.0, 11.0, "middle", &format!("{xv:.1}"));
    }
    s.text((l + w - r) / 2.0, h - 10.0, 13.0, "middle", x_label);
    s.text(16.0, (t + h - b) / 2.0, 13.0, "middle", y_label);
    for (i, (name, pts)) in series.iter().enumerate() {
        let mapped: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (px(x), py(y))).collect();
        s.polyline(&mapped, color(i));
        for &(x, y) in &mapped {
            s.circle(x, y, 3.0, color(i));
        }
        s.rect(w - r + 12.0, t + 18.0 * i as f64, 12.0, 12.0, color(i));
        s.text(w - r + 30.0, t + 18.0 * i as f64 + 10.0, 12.0, "start", name);
    }
    s.finish()
}

/// A 2-D scatter panel coloured by integer labels.
pub struct Panel {
    pub title: String,
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
}

pub fn scatter_grid(title: &str, panels: &[Panel], columns: usize) -> String {
    let (pw, ph) = (420.0, 400.0);
    let rows = panels.len().div_ceil(columns).max(1);
    let (w, h) = (pw * columns as f64, 40.0 + ph * rows as f64);
    let mut s = Svg::new(w, h);
    s.text(w / 2.0, 24.0, 16.0, "middle", title);
    if panels.is_empty() {
        s.text(w / 2.0, h / 2.0, 14.0, "middle", "embedding disabled for this run");
    }
    for (n, p) in panels.iter().enumerate() {
        let ox = pw * (n % columns) as f64;
        let oy = 40.0 + ph * (n / columns) as f64;
        s.text(ox + pw / 2.0, oy + 18.0, 13.0, "middle", &p.title);
        let (x0, x1) = bounds(p.points.iter().map(|q| q[0]));
        let (y0, y1) = bounds(p.points.iter().map(|q| q[1]));
        let m = 20.0;
        for (q, &lab) in p.points.iter().zip(&p.labels) {
            let x = ox + m + (q[0] - x0) / (x1 - x0) * (pw - 2.0 * m);
            let y = oy + 30.0 + (y1 - q[1]) / (y1 - y0) * (ph - 30.0 - m);
            s.circle(x, y, 1.8, color(lab));
        }
    }
    s.finish()
}

fn shade(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(247.0, 8.0), c(251.0, 48.0), c(255.0, 107.0))
}

/// Cells shaded from the matrix minimum (light) to maximum (dark).
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>], annotate: bool) -> String {
    let cell_w = 70.0;
    let cell_h = if annotate { 40.0 } else { 14.0 };
    let left = 10.0 + 7.0 * row_labels.iter().map(|s| s.chars().count()).max().unwrap_or(4) as f64;
    let top = 70.0;
    let w = left + cell_w * col_labels.len() as f64 + 20.0;
    let h = top + cell_h * row_labels.len() as f64 + 20.0;
    let (lo, hi) = bounds(values.iter().flatten().copied());
    let mut s = Svg::new(w, h);
    s.text(w / 2.0, 24.0, 16.0, "middle", title);
    for (j, c) in col_labels.iter().enumerate() {
        s.text(left + cell_w * (j as f64 + 0.5), top - 8.0, 11.0, "middle", c);
    }
    for (i, r) in row_labels.iter().enumerate() {
        let y = top + cell_h * i as f64;
        s.text(left - 6.0, y + cell_h * 0.75, if annotate { 12.0 } else { 10.0 }, "end", r);
        for (j, &v) in values[i].iter().enumerate() {
            let t = (v - lo) / (hi - lo);
            s.rect(left + cell_w * j as f64, y, cell_w, cell_h, &shade(t));
            if annotate {
                s.text(left + cell_w * (j as f64 + 0.5), y + cell_h * 0.6, 12.0, "middle", &format!("{v:.1}"));
            }
        }
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_is_escaped() {
        let mut s = Svg::new(10.0, 10.0);
        s.text(0.0, 0.0, 10.0, "start", "a<b & \"c\"");
        let out = s.finish();
        assert!(out.contains("a&lt;b &amp; &quot;c&quot;"));
        assert!(out.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_inputs_render() {
        let out = line_chart("t", "x", "y", &[("s".into(), vec![(1.0, 0.5)])]);
        assert!(!out.contains("NaN"));
        let out = heatmap("h", &["r".into()], &["c".into()], &[vec![f64::NAN]], true);
        assert!(out.contains("<rect"));
        let out = scatter_grid("g", &[], 2);
        assert!(out.contains("disabled"));
    }
}
