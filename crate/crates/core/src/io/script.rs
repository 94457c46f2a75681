//! A line-oriented layout script.
//!
//! ```text
//! format_version 1
//! grid <height> <width>
//! net <id> <name>
//! rect <LAYER> <t0> <c0> <t1> <c1> <net|->      # one maximal run, `-` = blocked
//! via <LOWER> <UPPER> <track> <col> <net>       # informational
//! cut <track> <col>
//! pin <name> <net> <track> <col>
//! access <net> <LAYER> <track> <col> <Source|Drain|Gate|Pin> <owner>
//! ```
//!
//! Rect runs follow the layer direction. Net names must be free of
//! whitespace and must not be `-`. Replaying a script rebuilds the grid exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::FORMAT_VERSION;
use crate::error::ParseError;
use crate::grid::{AccessKind, AccessPoint, Cell, GridPoint, Layer, LayoutGrid, NetId, PinLabel};

/// Maximal same-cell runs of one layer along its routing direction, as
/// `(t0, c0, t1, c1, cell)`.
pub fn runs(grid: &LayoutGrid, layer: Layer) -> Vec<(usize, usize, usize, usize, Cell)> {
    let mut out = Vec::new();
    let (outer, inner) = if layer.horizontal() {
        (grid.height, grid.width)
    } else {
        (grid.width, grid.height)
    };
    let at = |o: usize, i: usize| {
        if layer.horizontal() {
            (o, i)
        } else {
            (i, o)
        }
    };
    for o in 0..outer {
        let mut i = 0;
        while i < inner {
            let (t, c) = at(o, i);
            let cell = grid.get(layer, t, c);
            let start = i;
            while i < inner && {
                let (t, c) = at(o, i);
                grid.get(layer, t, c) == cell
            } {
                i += 1;
            }
            if cell != Cell::Empty {
                let (t0, c0) = at(o, start);
                let (t1, c1) = at(o, i - 1);
                out.push((t0, c0, t1, c1, cell));
            }
        }
    }
    out
}

fn kind_name(k: AccessKind) -> &'static str {
    match k {
        AccessKind::Source => "Source",
        AccessKind::Drain => "Drain",
        AccessKind::Gate => "Gate",
        AccessKind::Pin => "Pin",
    }
}

pub fn export_script(grid: &LayoutGrid) -> String {
    let mut s = String::new();
    let name = |n: NetId| grid.net_name(n);
    writeln!(s, "format_version {FORMAT_VERSION}").unwrap();
    writeln!(s, "grid {} {}", grid.height, grid.width).unwrap();
    for (i, n) in grid.nets.iter().enumerate() {
        writeln!(s, "net {i} {n}").unwrap();
    }
    for layer in Layer::ALL {
        for (t0, c0, t1, c1, cell) in runs(grid, layer) {
            let label = cell.net().map_or("-", name);
            writeln!(s, "rect {layer} {t0} {c0} {t1} {c1} {label}").unwrap();
        }
    }
    for (lo, hi) in Layer::VIAS {
        for t in 0..grid.height {
            for c in 0..grid.width {
                if let Cell::Net(n) = grid.get(lo, t, c) {
                    if grid.get(hi, t, c) == Cell::Net(n) {
                        writeln!(s, "via {lo} {hi} {t} {c} {}", name(n)).unwrap();
                    }
                }
            }
        }
    }
    for (t, c) in &grid.cuts {
        writeln!(s, "cut {t} {c}").unwrap();
    }
    for p in &grid.pins {
        writeln!(s, "pin {} {} {} {}", p.name, name(p.net), p.track, p.col).unwrap();
    }
    for a in &grid.access {
        let p = a.point;
        writeln!(
            s,
            "access {} {} {} {} {} {}",
            name(a.net),
            p.layer,
            p.track,
            p.col,
            kind_name(a.kind),
            a.owner
        )
        .unwrap();
    }
    s
}

struct Reader<'a> {
    line: usize,
    tokens: Vec<&'a str>,
}

impl<'a> Reader<'a> {
    fn err(&self, m: impl Into<String>) -> ParseError {
        ParseError::new(self.line, m)
    }

    fn expect_len(&self, n: usize) -> Result<(), ParseError> {
        if self.tokens.len() < n {
            return Err(self.err(format!("{} needs {} fields", self.tokens[0], n - 1)));
        }
        Ok(())
    }

    fn num(&self, i: usize) -> Result<usize, ParseError> {
        self.tokens[i]
            .parse()
            .map_err(|_| self.err(format!("expected a number, found {}", self.tokens[i])))
    }

    fn layer(&self, i: usize) -> Result<Layer, ParseError> {
        Layer::from_name(self.tokens[i]).ok_or_else(|| self.err(format!("unknown layer {}", self.tokens[i])))
    }
}

pub fn import_script(text: &str) -> Result<LayoutGrid, ParseError> {
    let mut grid: Option<LayoutGrid> = None;
    let mut ids: HashMap<String, NetId> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let r = Reader {
            line: i + 1,
            tokens: body.split_whitespace().collect(),
        };
        let kw = r.tokens[0];
        match kw {
            "format_version" => {
                r.expect_len(2)?;
                if r.num(1)? != FORMAT_VERSION as usize {
                    return Err(r.err(format!("unsupported format_version {}", r.tokens[1])));
                }
                continue;
            }
            "grid" => {
                r.expect_len(3)?;
                grid = Some(LayoutGrid::empty(r.num(1)?, r.num(2)?, Vec::new()));
                continue;
            }
            _ => {}
        }
        let g = grid.as_mut().ok_or_else(|| r.err("statement before the grid line"))?;
        let net = |tok: &str| ids.get(tok).copied().ok_or_else(|| r.err(format!("undeclared net {tok}")));
        let in_grid = |t: usize, c: usize| {
            if t < g.height && c < g.width {
                Ok(())
            } else {
                Err(r.err(format!("point ({t}, {c}) outside the grid")))
            }
        };
        match kw {
            "net" => {
                r.expect_len(3)?;
                let id = r.num(1)?;
                if id != g.nets.len() {
                    return Err(r.err(format!("net ids must be consecutive; expected {}", g.nets.len())));
                }
                let name = r.tokens[2].to_string();
                if ids.insert(name.clone(), NetId(id as u16)).is_some() {
                    return Err(r.err(format!("duplicate net {name}")));
                }
                g.nets.push(name);
            }
            "rect" => {
                r.expect_len(7)?;
                let layer = r.layer(1)?;
                let (t0, c0, t1, c1) = (r.num(2)?, r.num(3)?, r.num(4)?, r.num(5)?);
                in_grid(t1, c1)?;
                if t0 > t1 || c0 > c1 {
                    return Err(r.err("rect corners out of order"));
                }
                let cell = match r.tokens[6] {
                    "-" => Cell::Blocked,
                    tok => Cell::Net(net(tok)?),
                };
                for t in t0..=t1 {
                    for c in c0..=c1 {
                        g.set(layer, t, c, cell);
                    }
                }
            }
            "via" => {
                r.expect_len(6)?;
                r.layer(1)?;
                r.layer(2)?;
                in_grid(r.num(3)?, r.num(4)?)?;
                net(r.tokens[5])?;
            }
            "cut" => {
                r.expect_len(3)?;
                let (t, c) = (r.num(1)?, r.num(2)?);
                in_grid(t, c)?;
                g.cuts.insert((t, c));
            }
            "pin" => {
                r.expect_len(5)?;
                let (t, c) = (r.num(3)?, r.num(4)?);
                in_grid(t, c)?;
                let label = PinLabel {
                    name: r.tokens[1].to_string(),
                    net: net(r.tokens[2])?,
                    track: t,
                    col: c,
                };
                g.pins.push(label);
            }
            "access" => {
                r.expect_len(6)?;
                let layer = r.layer(2)?;
                let (t, c) = (r.num(3)?, r.num(4)?);
                in_grid(t, c)?;
                let kind = match r.tokens[5] {
                    "Source" => AccessKind::Source,
                    "Drain" => AccessKind::Drain,
                    "Gate" => AccessKind::Gate,
                    "Pin" => AccessKind::Pin,
                    k => return Err(r.err(format!("unknown access kind {k}"))),
                };
                let point = AccessPoint {
                    net: net(r.tokens[1])?,
                    point: GridPoint::new(layer, t, c),
                    kind,
                    owner: r.tokens.get(6).copied().unwrap_or("").to_string(),
                };
                g.access.push(point);
            }
            other => return Err(r.err(format!("unknown statement {other}"))),
        }
    }
    grid.ok_or_else(|| ParseError::new(1, "missing grid line"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grid::build_grid;
    use crate::placement::{realize_placement, slot_count, PlacementRep};
    use crate::tech::TechParams;

    #[test]
    fn runs_follow_layer_direction() {
        let mut g = LayoutGrid::empty(3, 4, vec!["A".into()]);
        for c in 0..3 {
            g.set(Layer::M1, 1, c, Cell::Net(NetId(0)));
        }
        for t in 0..3 {
            g.set(Layer::M2, t, 2, Cell::Net(NetId(0)));
        }
        assert_eq!(runs(&g, Layer::M1), vec![(1, 0, 1, 2, Cell::Net(NetId(0)))]);
        assert_eq!(runs(&g, Layer::M2), vec![(0, 2, 2, 2, Cell::Net(NetId(0)))]);
    }

    #[test]
    fn fixture_grid_round_trips() {
        let nl = fixtures::nand2();
        let tech = TechParams::default();
        let rep = PlacementRep::initial(&nl, slot_count(&nl, &tech));
        let r = realize_placement(&rep, &nl, &tech).unwrap();
        let mut g = build_grid(&r, &nl, &tech).unwrap();
        g.cuts.insert((3, 4));
        let text = export_script(&g);
        assert!(text.starts_with("format_version 1\ngrid 10 "));
        assert_eq!(import_script(&text).unwrap(), g);
    }

    #[test]
    fn import_errors() {
        assert_eq!(import_script("net 0 A\n").unwrap_err().line, 1);
        let e = import_script("grid 2 2\nrect M3 0 0 0 0 -\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = import_script("grid 2 2\nnet 0 A\nrect M1 0 0 0 5 A\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = import_script("grid 2 2\nrect M1 0 0 0 1 B\n").unwrap_err();
        assert!(e.message.contains("undeclared"));
    }
}
