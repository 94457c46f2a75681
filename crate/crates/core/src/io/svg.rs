//! SVG rendering of a layout grid.

use std::fmt::Write as _;

use super::script::runs;
use crate::drc::DrcMarker;
use crate::grid::{Cell, Layer, LayoutGrid};

const UNIT: usize = 20;
const MARGIN: usize = 30;

fn color(layer: Layer) -> &'static str {
    match layer {
        Layer::Poly => "#d62728",
        Layer::Diff => "#2ca02c",
        Layer::Lisd => "#8c564b",
        Layer::Lig => "#e377c2",
        Layer::M1 => "#1f77b4",
        Layer::M2 => "#9467bd",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn x(col: usize) -> usize {
    MARGIN + col * UNIT
}

fn y(track: usize) -> usize {
    MARGIN + track * UNIT
}

/// Renders layers (one colour each), cuts (dashed), pin labels and DRC
/// markers (red overlays). Groups with nothing to draw are omitted.
pub fn export_svg(grid: &LayoutGrid, markers: &[DrcMarker]) -> String {
    let (w, h) = (2 * MARGIN + grid.width * UNIT, 2 * MARGIN + grid.height * UNIT);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r##"<rect id="background" x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r##"<g id="ruler" stroke="#dddddd" font-size="10" font-family="monospace">"##).unwrap();
    for t in 0..grid.height {
        let cy = y(t) + UNIT / 2;
        writeln!(s, r#"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}"/>"#, MARGIN, x(grid.width)).unwrap();
        writeln!(s, r##"<text x="4" y="{}" stroke="none" fill="#666666">{t}</text>"##, cy + 4).unwrap();
    }
    s.push_str("</g>\n");

    for layer in Layer::ALL {
        let parts = runs(grid, layer);
        let nets: Vec<_> = parts.iter().filter(|r| r.4 != Cell::Blocked).collect();
        if !nets.is_empty() {
            writeln!(s, r#"<g id="layer-{layer}" fill="{}" fill-opacity="0.5">"#, color(layer)).unwrap();
            for (t0, c0, t1, c1, cell) in nets {
                let net = cell.net().map(|n| grid.net_name(n)).unwrap_or("");
                writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}"><title>{}</title></rect>"#,
                    x(*c0),
                    y(*t0),
                    (c1 - c0 + 1) * UNIT,
                    (t1 - t0 + 1) * UNIT,
                    escape(net)
                )
                .unwrap();
            }
            s.push_str("</g>\n");
        }
        let blocked: Vec<_> = parts.iter().filter(|r| r.4 == Cell::Blocked).collect();
        if !blocked.is_empty() {
            writeln!(s, r##"<g id="blocked-{layer}" fill="#7f7f7f" fill-opacity="0.3">"##).unwrap();
            for (t0, c0, t1, c1, _) in blocked {
                writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                    x(*c0),
                    y(*t0),
                    (c1 - c0 + 1) * UNIT,
                    (t1 - t0 + 1) * UNIT
                )
                .unwrap();
            }
            s.push_str("</g>\n");
        }
    }

    if !grid.cuts.is_empty() {
        writeln!(s, r##"<g id="cuts" stroke="#000000" stroke-width="2" stroke-dasharray="3,2">"##).unwrap();
        for (t, c) in &grid.cuts {
            let cx = x(*c) + UNIT / 2;
            writeln!(s, r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#, y(*t), y(*t) + UNIT).unwrap();
        }
        s.push_str("</g>\n");
    }
    if !grid.pins.is_empty() {
        writeln!(s, r##"<g id="pins" font-size="11" font-family="monospace" fill="#000000">"##).unwrap();
        for p in &grid.pins {
            writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x(p.col) + 2, y(p.track) + 14, escape(&p.name)).unwrap();
        }
        s.push_str("</g>\n");
    }
    if !markers.is_empty() {
        writeln!(s, r##"<g id="drc" fill="#ff0000" fill-opacity="0.35" stroke="#ff0000">"##).unwrap();
        for m in markers {
            let (t1, c1) = m.extent.unwrap_or((m.track, m.col));
            let (t0, c0) = (m.track.min(t1), m.col.min(c1));
            let (t1, c1) = (m.track.max(t1), m.col.max(c1));
            writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"><title>{}</title></rect>"#,
                x(c0),
                y(t0),
                (c1 - c0 + 1) * UNIT,
                (t1 - t0 + 1) * UNIT,
                m.rule.name()
            )
            .unwrap();
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
