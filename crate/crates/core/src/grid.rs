//! The layered on-track layout grid.
//!
//! Every layer is an `height x width` array of [`Cell`]s. Track 0 is the top of
//! the cell. Routing columns alternate diffusion (even) and gate (odd) columns:
//! a device in poly column `x` has its left diffusion at routing column `2x`,
//! its gate at `2x + 1` and its right diffusion at `2x + 2`. Vias are implicit:
//! two stack-adjacent layers holding the same net at the same point are joined.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CellError;
use crate::netlist::{DeviceKind, Netlist, Terminal};
use crate::placement::RealizedPlacement;
use crate::tech::TechParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Poly,
    Diff,
    Lisd,
    Lig,
    M1,
    M2,
}

impl Layer {
    pub const ALL: [Layer; 6] = [
        Layer::Poly,
        Layer::Diff,
        Layer::Lisd,
        Layer::Lig,
        Layer::M1,
        Layer::M2,
    ];

    /// Layers the maze router may draw on.
    pub const ROUTING: [Layer; 4] = [Layer::Lisd, Layer::Lig, Layer::M1, Layer::M2];

    /// Stack-adjacent layer pairs that connect through a via.
    pub const VIAS: [(Layer, Layer); 5] = [
        (Layer::Diff, Layer::Lisd),
        (Layer::Poly, Layer::Lig),
        (Layer::Lisd, Layer::M1),
        (Layer::Lig, Layer::M1),
        (Layer::M1, Layer::M2),
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn horizontal(self) -> bool {
        matches!(self, Layer::Diff | Layer::Lig | Layer::M1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Poly => "POLY",
            Layer::Diff => "DIFF",
            Layer::Lisd => "LISD",
            Layer::Lig => "LIG",
            Layer::M1 => "M1",
            Layer::M2 => "M2",
        }
    }

    pub fn from_name(name: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.name() == name)
    }

    /// Layers this one connects to through a via.
    pub fn via_neighbors(self) -> impl Iterator<Item = Layer> {
        Layer::VIAS.into_iter().filter_map(move |(a, b)| {
            if a == self {
                Some(b)
            } else if b == self {
                Some(a)
            } else {
                None
            }
        })
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    #[default]
    Empty,
    Blocked,
    Net(NetId),
}

impl Cell {
    pub fn net(self) -> Option<NetId> {
        match self {
            Cell::Net(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub layer: Layer,
    pub track: usize,
    pub col: usize,
}

impl GridPoint {
    pub fn new(layer: Layer, track: usize, col: usize) -> Self {
        Self { layer, track, col }
    }

    /// Planar Manhattan distance (layers ignored).
    pub fn manhattan(&self, other: &GridPoint) -> usize {
        self.track.abs_diff(other.track) + self.col.abs_diff(other.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessKind {
    Source,
    Drain,
    Gate,
    Pin,
}

/// A point the router must connect: a device terminal or a pin label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessPoint {
    pub net: NetId,
    pub point: GridPoint,
    pub kind: AccessKind,
    pub owner: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinLabel {
    pub name: String,
    pub net: NetId,
    pub track: usize,
    pub col: usize,
}

/// Fixed track roles derived from the grid height.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrackPlan {
    pub height: usize,
    pub top_rail: usize,
    pub p_row: usize,
    pub p_gate: usize,
    pub n_gate: usize,
    pub n_row: usize,
    pub bottom_rail: usize,
    /// Last track of the PMOS half of a poly column.
    pub poly_split: usize,
}

impl TrackPlan {
    pub fn new(height: usize) -> Self {
        assert!(height >= 6, "grid height must be at least 6");
        Self {
            height,
            top_rail: 0,
            p_row: 1,
            p_gate: 2,
            n_gate: height - 3,
            n_row: height - 2,
            bottom_rail: height - 1,
            poly_split: (height - 1) / 2,
        }
    }

    /// Gate contact track of a device in poly column `x`. Odd columns move
    /// one track inward when the poly half has room, so contacts of
    /// neighbouring gates never share a track.
    pub fn gate_contact(&self, kind: DeviceKind, x: usize) -> usize {
        let stagger = x % 2;
        match kind {
            DeviceKind::Pmos if self.p_gate < self.poly_split => self.p_gate + stagger,
            DeviceKind::Nmos if self.n_gate - 1 > self.poly_split => self.n_gate - stagger,
            DeviceKind::Pmos => self.p_gate,
            DeviceKind::Nmos => self.n_gate,
        }
    }

    /// Tracks that host pin labels, in preference order.
    pub fn pin_tracks(&self) -> Vec<usize> {
        if self.n_gate > self.p_gate + 1 {
            (self.p_gate + 1..self.n_gate).collect()
        } else {
            vec![self.p_gate, self.n_gate]
        }
    }

    pub fn is_rail(&self, track: usize) -> bool {
        track == self.top_rail || track == self.bottom_rail
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutGrid {
    pub height: usize,
    pub width: usize,
    /// Net names; `NetId(i)` refers to `nets[i]`.
    pub nets: Vec<String>,
    layers: Vec<Vec<Cell>>,
    /// Cut positions on M1, as (track, column).
    pub cuts: BTreeSet<(usize, usize)>,
    pub pins: Vec<PinLabel>,
    pub access: Vec<AccessPoint>,
}

impl LayoutGrid {
    /// An all-empty grid.
    pub fn empty(height: usize, width: usize, nets: Vec<String>) -> Self {
        Self {
            height,
            width,
            nets,
            layers: vec![vec![Cell::Empty; height * width]; Layer::ALL.len()],
            cuts: BTreeSet::new(),
            pins: Vec::new(),
            access: Vec::new(),
        }
    }

    #[inline]
    pub fn get(&self, layer: Layer, track: usize, col: usize) -> Cell {
        self.layers[layer.index()][track * self.width + col]
    }

    #[inline]
    pub fn at(&self, p: GridPoint) -> Cell {
        self.get(p.layer, p.track, p.col)
    }

    #[inline]
    pub fn set(&mut self, layer: Layer, track: usize, col: usize, cell: Cell) {
        self.layers[layer.index()][track * self.width + col] = cell;
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.nets.iter().position(|n| n == name).map(|i| NetId(i as u16))
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.0 as usize]
    }

    pub fn in_bounds(&self, track: isize, col: isize) -> bool {
        track >= 0 && col >= 0 && (track as usize) < self.height && (col as usize) < self.width
    }

    /// Neighbours of `p` along its layer's routing direction.
    pub fn lateral_neighbors(&self, p: GridPoint) -> impl Iterator<Item = GridPoint> + '_ {
        let (dt, dc) = if p.layer.horizontal() { (0, 1) } else { (1, 0) };
        [-1isize, 1].into_iter().filter_map(move |s| {
            let t = p.track as isize + s * dt;
            let c = p.col as isize + s * dc;
            self.in_bounds(t, c)
                .then(|| GridPoint::new(p.layer, t as usize, c as usize))
        })
    }

    /// Whether `net` may occupy `p`: the cell is free or already `net`, and no
    /// other net touches it along the layer direction.
    pub fn usable_by(&self, p: GridPoint, net: NetId) -> bool {
        match self.at(p) {
            Cell::Net(n) => n == net,
            Cell::Blocked => false,
            Cell::Empty => self
                .lateral_neighbors(p)
                .all(|q| matches!(self.at(q), Cell::Empty | Cell::Blocked) || self.at(q) == Cell::Net(net)),
        }
    }

    /// Row-major view of one layer.
    pub fn layer_cells(&self, layer: Layer) -> &[Cell] {
        &self.layers[layer.index()]
    }

    /// M1 net occupancy of one track.
    pub fn m1_track(&self, track: usize) -> &[Cell] {
        let start = track * self.width;
        &self.layers[Layer::M1.index()][start..start + self.width]
    }

    pub fn is_empty_layout(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.iter().all(|c| *c == Cell::Empty))
    }
}

/// Draws devices, rails, gate contacts and pin labels for a realized placement.
pub fn build_grid(
    realized: &RealizedPlacement,
    netlist: &Netlist,
    tech: &TechParams,
) -> Result<LayoutGrid, CellError> {
    if realized.width > tech.max_width {
        return Err(CellError::WidthOverflow {
            width: realized.width,
            max: tech.max_width,
        });
    }
    let plan = TrackPlan::new(tech.grid_height);
    let h = tech.grid_height;
    let w = TechParams::m1_width(realized.width);
    let mut g = LayoutGrid::empty(h, w, netlist.nets());

    // Blockages: LISD only on diffusion columns, LIG only where a gate contact is drawn,
    // nothing but rail straps on the rail tracks.
    for t in 0..h {
        for c in 0..w {
            g.set(Layer::Lig, t, c, Cell::Blocked);
            if c % 2 == 1 || plan.is_rail(t) {
                g.set(Layer::Lisd, t, c, Cell::Blocked);
            }
            if plan.is_rail(t) {
                g.set(Layer::M2, t, c, Cell::Blocked);
            }
        }
    }
    for (track, name) in [(plan.top_rail, &tech.power.top), (plan.bottom_rail, &tech.power.bottom)] {
        let cell = g.net_id(name).map_or(Cell::Blocked, Cell::Net);
        for c in 0..w {
            g.set(Layer::M1, track, c, cell);
        }
    }

    for (i, d) in netlist.devices.iter().enumerate() {
        let placed = realized.devices[i];
        let (row, rail, rail_net, poly_span) = match d.kind {
            DeviceKind::Pmos => (
                plan.p_row,
                plan.top_rail,
                &tech.power.top,
                plan.p_row..=plan.poly_split,
            ),
            DeviceKind::Nmos => (
                plan.n_row,
                plan.bottom_rail,
                &tech.power.bottom,
                plan.poly_split + 1..=plan.n_row,
            ),
        };
        let gate_col = placed.terminal_column(Terminal::Gate);
        let gate_track = plan.gate_contact(d.kind, gate_col / 2);
        let gate_net = Cell::Net(g.net_id(&d.gate).expect("gate net registered"));
        for t in poly_span {
            g.set(Layer::Poly, t, gate_col, gate_net);
        }
        g.set(Layer::Diff, row, gate_col, Cell::Blocked);
        g.set(Layer::Lig, gate_track, gate_col, gate_net);
        g.access.push(AccessPoint {
            net: gate_net.net().unwrap(),
            point: GridPoint::new(Layer::Lig, gate_track, gate_col),
            kind: AccessKind::Gate,
            owner: d.name.clone(),
        });
        for (term, kind) in [(Terminal::Source, AccessKind::Source), (Terminal::Drain, AccessKind::Drain)] {
            let col = placed.terminal_column(term);
            let name = d.net(term);
            let net = g.net_id(name).expect("diffusion net registered");
            for layer in [Layer::Diff, Layer::Lisd] {
                match g.get(layer, row, col) {
                    Cell::Net(other) if other != net => {
                        return Err(CellError::TerminalConflict {
                            track: row,
                            col,
                            message: format!(
                                "diffusion of {} ({name}) abuts {}",
                                d.name,
                                g.net_name(other)
                            ),
                        })
                    }
                    _ => g.set(layer, row, col, Cell::Net(net)),
                }
            }
            if name == rail_net {
                g.set(Layer::Lisd, rail, col, Cell::Net(net));
            }
            g.access.push(AccessPoint {
                net,
                point: GridPoint::new(Layer::Lisd, row, col),
                kind,
                owner: d.name.clone(),
            });
        }
    }

    place_pins(&mut g, &plan, realized, netlist)?;
    Ok(g)
}

/// Whether an M1 pin at `p` would sit on or beside another net's gate contact.
fn blocks_contact(g: &LayoutGrid, p: GridPoint, net: NetId) -> bool {
    (p.col.saturating_sub(1)..=(p.col + 1).min(g.width - 1))
        .any(|c| matches!(g.get(Layer::Lig, p.track, c), Cell::Net(m) if m != net))
}

fn place_pins(
    g: &mut LayoutGrid,
    plan: &TrackPlan,
    realized: &RealizedPlacement,
    netlist: &Netlist,
) -> Result<(), CellError> {
    let tracks = plan.pin_tracks();
    for (i, pin) in netlist.pins.iter().enumerate() {
        let net = g.net_id(&pin.net).expect("pin net registered");
        let want = 2 * realized.pin_cols[i] + 1;
        let mut order: Vec<usize> = (0..tracks.len()).map(|k| tracks[(i + k) % tracks.len()]).collect();
        order.dedup();
        let mut spot = None;
        'search: for off in 0..g.width as isize {
            for s in if off == 0 { vec![0] } else { vec![off, -off] } {
                let c = want as isize + s;
                if c < 1 || c >= g.width as isize - 1 {
                    continue;
                }
                for &t in &order {
                    let p = GridPoint::new(Layer::M1, t, c as usize);
                    if g.at(p) == Cell::Empty && g.usable_by(p, net) && !blocks_contact(g, p, net) {
                        spot = Some(p);
                        break 'search;
                    }
                }
            }
        }
        let p = spot.ok_or_else(|| CellError::PinAccess(pin.name.clone()))?;
        g.set(Layer::M1, p.track, p.col, Cell::Net(net));
        g.pins.push(PinLabel {
            name: pin.name.clone(),
            net,
            track: p.track,
            col: p.col,
        });
        g.access.push(AccessPoint {
            net,
            point: p,
            kind: AccessKind::Pin,
            owner: pin.name.clone(),
        });
    }
    Ok(())
}
