//! Minimal stacked line charts.

use std::fmt::Write;

pub struct Panel {
    pub title: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 4] = ["steelblue", "firebrick", "seagreen", "rebeccapurple"];

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let pts = panel.series.iter().flat_map(|(_, s)| s.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    for (k, panel) in panels.iter().enumerate() {
        let top = PANEL_HEIGHT * k as f64;
        let (x0, x1, y0, y1) = bounds(panel);
        let (left, right) = (MARGIN + 20.0, WIDTH - MARGIN / 2.0);
        let (upper, lower) = (top + MARGIN / 2.0 + 10.0, top + PANEL_HEIGHT - MARGIN);
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| lower - (y - y0) / (y1 - y0) * (lower - upper);
        let _ = writeln!(
            out,
            r#"<rect x="{left:.1}" y="{upper:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="gray"/>"#,
            right - left,
            lower - upper
        );
        let _ = writeln!(out, r#"<text x="{left:.1}" y="{:.1}">{}</text>"#, upper - 6.0, escape(&panel.title));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{y1:.4e}</text>"#, 2.0, upper + 4.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{lower:.1}">{y0:.4e}</text>"#, 2.0);
        let _ = writeln!(out, r#"<text x="{left:.1}" y="{:.1}">{x0:.4}</text>"#, lower + 14.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{x1:.4}</text>"#, right, lower + 14.0);
        for (i, (name, pts)) in panel.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = pts
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}" text-anchor="end">{}</text>"#,
                right - 4.0,
                upper + 14.0 * (i as f64 + 1.0),
                escape(name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_panels() {
        let p = Panel { title: "x(t)".into(), series: vec![("x1".into(), vec![(0.0, 0.0), (1.0, 2.0)])] };
        let svg = render(&[p]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("<polyline"));
        let flat = Panel { title: "<c>".into(), series: vec![("c".into(), vec![(1.0, 3.0), (1.0, 3.0)])] };
        assert!(render(&[flat]).contains("&lt;c&gt;"));
    }
}
