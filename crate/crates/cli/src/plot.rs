//! Minimal SVG histogram: one bar per outcome, shaded acceptance windows and a
//! rule at the count a flat spectrum would give each bin.

use std::fmt::Write;

use shorcert::cert::AcceptanceWindows;
use shorcert::Histogram;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Maximal runs `[start, end)` of consecutive accepted bins.
fn runs(bins: &[u64]) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &b in bins {
        match out.last_mut() {
            Some((_, end)) if *end == b => *end += 1,
            _ => out.push((b, b + 1)),
        }
    }
    out
}

pub fn histogram_svg(hist: &Histogram, windows: Option<&AcceptanceWindows>, title: &str, metadata: &str) -> String {
    let grid = hist.grid_size() as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let flat = hist.shots() as f64 / grid;
    let peak = hist.counts().iter().copied().max().unwrap_or(0) as f64;
    let y_max = peak.max(flat).max(1.0) * 1.05;
    let sx = |y: f64| LEFT + y / grid * plot_w;
    let sy = |c: f64| TOP + plot_h - c / y_max * plot_h;
    let bar_w = (plot_w / grid).max(0.5);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<metadata>{}</metadata>", escape(metadata));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(w) = windows {
        for (start, end) in runs(&w.bins) {
            let _ = writeln!(
                svg,
                r##"<rect x="{:.2}" y="{TOP}" width="{:.2}" height="{plot_h}" fill="#cfe3f7"/>"##,
                sx(start as f64),
                (end - start) as f64 / grid * plot_w
            );
        }
    }
    for (y, &c) in hist.counts().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let top = sy(c as f64);
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="#2b5d8c"/>"##,
            sx(y as f64),
            TOP + plot_h - top
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" x2="{}" y1="{by:.2}" y2="{by:.2}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
        LEFT + plot_w,
        by = sy(flat)
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" x2="{}" y1="{}" y2="{}" stroke="black"/>"##,
        LEFT + plot_w,
        TOP + plot_h,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" x2="{LEFT}" y1="{TOP}" y2="{}" stroke="black"/>"##,
        TOP + plot_h
    );
    for tick in 0..=4 {
        let y = grid / 4.0 * tick as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            sx(y),
            TOP + plot_h + 16.0,
            y as u64
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="{}" text-anchor="end" dx="-4">{}</text>"#,
        TOP + 4.0,
        peak as u64
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">outcome y</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="24" font-size="14">{}</text>"#,
        escape(title)
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use shorcert::cert::{acceptance_set, WindowMode};

    #[test]
    fn merges_adjacent_bins() {
        assert_eq!(runs(&[0, 1, 2, 5, 6, 9]), vec![(0, 3), (5, 7), (9, 10)]);
        assert!(runs(&[]).is_empty());
    }

    #[test]
    fn renders_windows_bars_and_rule() {
        let mut h = Histogram::new(9).unwrap();
        h.record(0, 10).unwrap();
        h.record(128, 7).unwrap();
        let w = acceptance_set(512, 4, WindowMode::Inclusive).unwrap();
        let svg = histogram_svg(&h, Some(&w), "N=15 a=7 <t=9>", "{\"seed\":1}");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("&lt;t=9&gt;"));
        // 4 windows, the first wraps and splits in two; plus background and 2 bars
        assert_eq!(svg.matches("<rect").count(), 1 + 5 + 2);
    }
}
