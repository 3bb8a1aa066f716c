//! SVG bar charts of distribution histograms.
//!
//! Bars live in a nested `<svg>` whose viewBox is in data units, so every
//! bar's `height` attribute is its count (or density) and its `width` the
//! bin width.

use std::fmt::Write;

use roadforge_core::stats::ParameterDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarScale {
    Count,
    Density,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn filter_label(d: &ParameterDistribution) -> String {
    if d.filters.0.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = d.filters.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(" [{}]", parts.join(", "))
}

pub fn render_histogram(d: &ParameterDistribution, scale: BarScale) -> String {
    let h = &d.histogram;
    let heights: Vec<f64> = match scale {
        BarScale::Count => h.counts.iter().map(|&c| c as f64).collect(),
        BarScale::Density => d.density(),
    };
    let x0 = h.edges[0];
    let x1 = h.edges[h.edges.len() - 1];
    let ymax = heights.iter().copied().fold(0.0, f64::max);
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let (pw, ph) = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT, HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let unit = d.parameter.unit();
    let xlabel = if unit.is_empty() { d.parameter.as_str().to_string() } else { format!("{} [{unit}]", d.parameter.as_str()) };
    let ylabel = match scale {
        BarScale::Count => "count",
        BarScale::Density => "density",
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}{} (n = {})</text>"#,
        WIDTH / 2.0,
        escape(d.parameter.as_str()),
        escape(&filter_label(d)),
        d.n
    );
    let _ = writeln!(
        s,
        r#"  <svg class="plot" x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" viewBox="{x0} 0 {} {ymax}" preserveAspectRatio="none">"#,
        x1 - x0
    );
    for (i, &v) in heights.iter().enumerate() {
        let (a, b) = (h.edges[i], h.edges[i + 1]);
        let _ = writeln!(
            s,
            r##"    <rect class="bar" x="{a}" y="{}" width="{}" height="{v}" data-count="{}" fill="#4a78b0" stroke="#ffffff" stroke-width="0.5" vector-effect="non-scaling-stroke"/>"##,
            ymax - v,
            b - a,
            h.counts[i]
        );
    }
    let _ = writeln!(s, "  </svg>");
    let (bx, by) = (MARGIN_LEFT, MARGIN_TOP + ph);
    let _ = writeln!(s, r#"  <line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#, bx + pw);
    let _ = writeln!(s, r#"  <line x1="{bx}" y1="{MARGIN_TOP}" x2="{bx}" y2="{by}" stroke="black"/>"#);
    let tick = |v: f64| format!("{:.4}", v).trim_end_matches('0').trim_end_matches('.').to_string();
    let _ = writeln!(s, r#"  <text x="{bx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, by + 16.0, tick(x0));
    let _ = writeln!(s, r#"  <text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#, bx + pw, by + 16.0, tick(x1));
    let _ = writeln!(s, r#"  <text x="{}" y="{by}" text-anchor="end" font-family="sans-serif" font-size="11">0</text>"#, bx - 6.0);
    let _ = writeln!(s, r#"  <text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, bx - 6.0, MARGIN_TOP + 4.0, tick(ymax));
    let _ = writeln!(
        s,
        r#"  <text class="xlabel" x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        bx + pw / 2.0,
        HEIGHT - 18.0,
        escape(&xlabel)
    );
    let _ = writeln!(
        s,
        r#"  <text class="ylabel" x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">{ylabel}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0
    );
    s.push_str("</svg>\n");
    s
}
