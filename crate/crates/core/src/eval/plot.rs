use std::fmt::Write as _;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
const NOISE: &str = "#bbbbbb";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders labelled 2-D points as an SVG scatter plot, coloured by cluster.
/// Noise points are drawn grey.
pub fn scatter_svg(
    title: &str,
    tokens: &[String],
    coords: &[Vec<f64>],
    labels: &[Option<usize>],
) -> String {
    let (w, h, pad) = (800.0, 600.0, 50.0);
    let xs = coords.iter().map(|c| c.first().copied().unwrap_or(0.0));
    let ys = coords.iter().map(|c| c.get(1).copied().unwrap_or(0.0));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(x0, x1), span(y0, y1));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    for (i, c) in coords.iter().enumerate() {
        let x = c.first().copied().unwrap_or(0.0);
        let y = c.get(1).copied().unwrap_or(0.0);
        let px = pad + (x - x0.min(x)) / sx * (w - 2.0 * pad);
        let py = h - pad - (y - y0.min(y)) / sy * (h - 2.0 * pad);
        let color = match labels.get(i).copied().flatten() {
            Some(l) => PALETTE[l % PALETTE.len()],
            None => NOISE,
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{color}"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10">{}</text>"#,
            px + 6.0,
            py + 3.0,
            escape(tokens.get(i).map_or("", String::as_str))
        );
    }
    out.push_str("</svg>\n");
    out
}
