use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Vertical bars, one per label, on a zero baseline.
pub fn bar_chart(title: &str, labels: &[&str], values: &[f64]) -> String {
    let hi = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().copied().fold(0.0, f64::min);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let plot_h = H - 2.0 * MARGIN;
    let y = |v: f64| MARGIN + plot_h * (hi - v) / span;
    let slot = (W - 2.0 * MARGIN) / labels.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let zero = y(0.0);
    for (i, (&label, &v)) in labels.iter().zip(values).enumerate() {
        let x = MARGIN + slot * (i as f64 + 0.15);
        let (top, bottom) = if v >= 0.0 { (y(v), zero) } else { (zero, y(v)) };
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="#4a78b5"/>"##,
            slot * 0.7,
            bottom - top
        );
        let cx = x + slot * 0.35;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{v:.4}</text>"#,
            top - 4.0,
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            H - MARGIN + 16.0,
            escape(label)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{zero:.1}" x2="{}" y2="{zero:.1}" stroke="black"/>"#,
        W - MARGIN
    );
    s.push_str("</svg>\n");
    s
}
