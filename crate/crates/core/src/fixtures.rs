//! Synthetic standard-cell library and DRC repair fixtures.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::drc::{drc_count, run_drc, Rule};
use crate::drcfix::legal_actions;
use crate::grid::{Cell, Layer, LayoutGrid, NetId};
use crate::io::export_script;
use crate::netlist::{Device, DeviceKind, Netlist, Pin};
use crate::placement::{realize_placement, slot_count, PlacementRep};
use crate::placer::exhaustive_min_width;
use crate::routability::RoutabilityLabel;
use crate::rng;
use crate::tech::{DrcRuleSet, TechParams};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 2021;
/// Cells up to this many devices get an exact width from exhaustive search.
pub const EXACT_WIDTH_DEVICES: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureCell {
    pub format_version: u32,
    pub netlist: Netlist,
    /// Optimal width when `width_exact`, otherwise a known feasible width.
    pub width_bound: usize,
    pub width_exact: bool,
    pub expected_label: RoutabilityLabel,
}

impl FixtureCell {
    pub fn name(&self) -> &str {
        &self.netlist.name
    }

    pub fn from_netlist(netlist: Netlist, tech: &TechParams) -> Self {
        let (width_bound, width_exact) = if netlist.devices.len() <= EXACT_WIDTH_DEVICES {
            (exhaustive_min_width(&netlist, tech), true)
        } else {
            let rep = PlacementRep::initial(&netlist, slot_count(&netlist, tech));
            let r = realize_placement(&rep, &netlist, tech).expect("initial placement is valid");
            (r.width, false)
        };
        Self {
            format_version: FORMAT_VERSION,
            netlist,
            width_bound,
            width_exact,
            expected_label: RoutabilityLabel::Routable,
        }
    }
}

struct Builder {
    name: String,
    devices: Vec<Device>,
    pins: Vec<Pin>,
}

impl Builder {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            devices: Vec::new(),
            pins: Vec::new(),
        }
    }

    fn dev(mut self, name: &str, kind: DeviceKind, fins: u32, gate: &str, source: &str, drain: &str) -> Self {
        self.devices.push(Device {
            name: name.into(),
            kind,
            fins,
            gate: gate.into(),
            source: source.into(),
            drain: drain.into(),
        });
        self
    }

    fn p(self, name: &str, gate: &str, source: &str, drain: &str) -> Self {
        self.dev(name, DeviceKind::Pmos, 2, gate, source, drain)
    }

    fn n(self, name: &str, gate: &str, source: &str, drain: &str) -> Self {
        self.dev(name, DeviceKind::Nmos, 2, gate, source, drain)
    }

    fn pins(mut self, names: &[&str]) -> Netlist {
        self.pins = names
            .iter()
            .map(|n| Pin {
                name: (*n).into(),
                net: (*n).into(),
            })
            .collect();
        Netlist {
            name: self.name,
            devices: self.devices,
            pins: self.pins,
        }
    }
}

pub fn inverter() -> Netlist {
    Builder::new("INV")
        .p("MP", "A", "VDD", "Y")
        .n("MN", "A", "VSS", "Y")
        .pins(&["A", "Y"])
}

pub fn nand2() -> Netlist {
    Builder::new("NAND2")
        .p("MP1", "A", "VDD", "Y")
        .p("MP2", "B", "Y", "VDD")
        .n("MN1", "A", "Y", "X")
        .n("MN2", "B", "X", "VSS")
        .pins(&["A", "B", "Y"])
}

pub fn nor2() -> Netlist {
    Builder::new("NOR2")
        .p("MP1", "A", "VDD", "X")
        .p("MP2", "B", "X", "Y")
        .n("MN1", "A", "Y", "VSS")
        .n("MN2", "B", "VSS", "Y")
        .pins(&["A", "B", "Y"])
}

pub fn aoi21() -> Netlist {
    Builder::new("AOI21")
        .p("MPA1", "A1", "VDD", "W")
        .p("MPA2", "A2", "VDD", "W")
        .p("MPB", "B", "W", "Y")
        .n("MNA1", "A1", "X", "Y")
        .n("MNA2", "A2", "VSS", "X")
        .n("MNB", "B", "VSS", "Y")
        .pins(&["A1", "A2", "B", "Y"])
}

pub fn oai21() -> Netlist {
    Builder::new("OAI21")
        .p("MPA1", "A1", "VDD", "W")
        .p("MPA2", "A2", "W", "Y")
        .p("MPB", "B", "VDD", "Y")
        .n("MNA1", "A1", "VSS", "X")
        .n("MNA2", "A2", "VSS", "X")
        .n("MNB", "B", "X", "Y")
        .pins(&["A1", "A2", "B", "Y"])
}

pub fn mux2() -> Netlist {
    Builder::new("MUX2")
        .p("MPS", "S", "VDD", "SN")
        .n("MNS", "S", "VSS", "SN")
        .p("MPT0", "S", "A", "Z")
        .n("MNT0", "SN", "A", "Z")
        .p("MPT1", "SN", "B", "Z")
        .n("MNT1", "S", "B", "Z")
        .p("MPO", "Z", "VDD", "Y")
        .n("MNO", "Z", "VSS", "Y")
        .pins(&["A", "B", "S", "Y"])
}

pub fn xor2() -> Netlist {
    Builder::new("XOR2")
        .p("MPA", "A", "VDD", "AN")
        .n("MNA", "A", "VSS", "AN")
        .p("MPB", "B", "VDD", "BN")
        .n("MNB", "B", "VSS", "BN")
        .p("MPT0", "B", "A", "Y")
        .n("MNT0", "BN", "A", "Y")
        .p("MPT1", "BN", "AN", "Y")
        .n("MNT1", "B", "AN", "Y")
        .pins(&["A", "B", "Y"])
}

pub fn latch() -> Netlist {
    Builder::new("LATCH")
        .p("MPE", "E", "VDD", "EN")
        .n("MNE", "E", "VSS", "EN")
        .p("MPI", "EN", "D", "M")
        .n("MNI", "E", "D", "M")
        .p("MPQ", "M", "VDD", "Q")
        .n("MNQ", "M", "VSS", "Q")
        .p("MPF", "Q", "VDD", "FB")
        .n("MNF", "Q", "VSS", "FB")
        .p("MPK", "E", "FB", "M")
        .n("MNK", "EN", "FB", "M")
        .pins(&["D", "E", "Q"])
}

pub fn hand_written() -> Vec<Netlist> {
    vec![
        inverter(),
        nand2(),
        nor2(),
        aoi21(),
        oai21(),
        mux2(),
        xor2(),
        latch(),
    ]
}

enum Expr {
    Leaf(usize),
    Series(Box<Expr>, Box<Expr>),
    Parallel(Box<Expr>, Box<Expr>),
}

fn random_expr(inputs: &[usize], r: &mut rng::Rng) -> Expr {
    if inputs.len() == 1 {
        return Expr::Leaf(inputs[0]);
    }
    let split = r.gen_range(1..inputs.len());
    let (a, b) = inputs.split_at(split);
    let (a, b) = (Box::new(random_expr(a, r)), Box::new(random_expr(b, r)));
    if r.gen_bool(0.5) {
        Expr::Series(a, b)
    } else {
        Expr::Parallel(a, b)
    }
}

struct Emitter<'a> {
    kind: DeviceKind,
    prefix: &'a str,
    fins: Vec<u32>,
    counter: usize,
    devices: Vec<Device>,
}

impl Emitter<'_> {
    /// Emits the network of `e` between `top` and `bottom`; `dual` swaps series and parallel.
    fn emit(&mut self, e: &Expr, top: &str, bottom: &str, dual: bool, names: &[String]) {
        match (e, dual) {
            (Expr::Leaf(i), _) => {
                let idx = self.devices.len();
                self.devices.push(Device {
                    name: format!("M{}{}", self.prefix, idx),
                    kind: self.kind,
                    fins: self.fins[idx % self.fins.len()],
                    gate: names[*i].clone(),
                    source: bottom.into(),
                    drain: top.into(),
                });
            }
            (Expr::Series(a, b), false) | (Expr::Parallel(a, b), true) => {
                self.counter += 1;
                let mid = format!("{}{}", self.prefix.to_lowercase(), self.counter);
                self.emit(a, top, &mid, dual, names);
                self.emit(b, &mid, bottom, dual, names);
            }
            (Expr::Parallel(a, b), false) | (Expr::Series(a, b), true) => {
                self.emit(a, top, bottom, dual, names);
                self.emit(b, top, bottom, dual, names);
            }
        }
    }
}

/// One random complementary series-parallel gate, or a small pass-gate cell.
fn random_cell(index: usize, r: &mut rng::Rng) -> Netlist {
    let name = format!("RND{index}");
    if r.gen_bool(0.15) {
        return Builder::new(&name)
            .p("MP", "A", "VDD", "X")
            .n("MN", "A", "VSS", "X")
            .n("MT", "B", "X", "Y")
            .pins(&["A", "B", "Y"]);
    }
    let k = r.gen_range(2..=4usize);
    let names: Vec<String> = (0..k).map(|i| format!("I{i}")).collect();
    let mut inputs: Vec<usize> = (0..k).collect();
    inputs.shuffle(r);
    let expr = random_expr(&inputs, r);
    let fins = |r: &mut rng::Rng| {
        let base = if r.gen_bool(0.7) { 2 } else { 1 };
        let mut f = vec![base; k];
        if r.gen_bool(0.25) {
            let i = r.gen_range(0..k);
            f[i] = 3 - base;
        }
        f
    };
    let mut pdn = Emitter {
        kind: DeviceKind::Nmos,
        prefix: "N",
        fins: fins(r),
        counter: 0,
        devices: Vec::new(),
    };
    pdn.emit(&expr, "Y", "VSS", false, &names);
    let mut pun = Emitter {
        kind: DeviceKind::Pmos,
        prefix: "P",
        fins: fins(r),
        counter: 0,
        devices: Vec::new(),
    };
    pun.emit(&expr, "Y", "VDD", true, &names);
    let mut devices = pun.devices;
    devices.extend(pdn.devices);
    let mut pins: Vec<Pin> = names
        .iter()
        .map(|n| Pin {
            name: n.clone(),
            net: n.clone(),
        })
        .collect();
    pins.push(Pin {
        name: "Y".into(),
        net: "Y".into(),
    });
    Netlist { name, devices, pins }
}

/// Hand-written cells followed by seeded random gates; about 20 cells total.
pub fn generate_library(seed: u64) -> Vec<Netlist> {
    let mut cells = hand_written();
    let mut r = rng::stream(seed, "fixtures");
    for i in 0..12 {
        cells.push(random_cell(i, &mut r));
    }
    cells
}

/// Library cells with their width bounds under `tech`.
pub fn generate_fixtures(seed: u64, tech: &TechParams) -> Vec<FixtureCell> {
    generate_library(seed)
        .into_iter()
        .map(|n| FixtureCell::from_netlist(n, tech))
        .collect()
}

/// The library under [`DEFAULT_SEED`].
pub fn library() -> Vec<Netlist> {
    generate_library(DEFAULT_SEED)
}

pub fn by_name(name: &str) -> Option<Netlist> {
    library().into_iter().find(|n| n.name == name)
}

/// An M1-only layout whose markers are all cut conflicts, repairable by a few
/// added points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrcFixture {
    pub format_version: u32,
    pub name: String,
    /// The layout in the line-based script format.
    pub layout: String,
    pub drc_count: usize,
    /// Fewest added M1 points that clear every marker.
    pub min_extensions: usize,
}

/// Most extensions a DRC fixture may need.
pub const FIXTURE_MAX_EXTENSIONS: usize = 3;

fn random_m1(r: &mut rng::Rng, height: usize, width: usize, nets: usize) -> LayoutGrid {
    let names: Vec<String> = (0..nets).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let mut g = LayoutGrid::empty(height, width, names);
    for t in 0..height {
        let mut c = r.gen_range(0..3usize);
        while c + 2 <= width {
            let len = r.gen_range(2..=4usize).min(width - c);
            let net = NetId(r.gen_range(0..nets) as u16);
            for x in c..c + len {
                g.set(Layer::M1, t, x, Cell::Net(net));
            }
            c += len + r.gen_range(1..=3usize);
        }
    }
    g
}

/// Iterative deepening over legal extensions; `None` beyond `depth`.
pub fn min_extensions(grid: &LayoutGrid, rules: &DrcRuleSet, depth: usize) -> Option<usize> {
    fn search(g: &mut LayoutGrid, rules: &DrcRuleSet, left: usize) -> bool {
        if drc_count(g, rules) == 0 {
            return true;
        }
        if left == 0 {
            return false;
        }
        for (a, net) in legal_actions(g) {
            let (t, c) = (a / g.width, a % g.width);
            g.set(Layer::M1, t, c, Cell::Net(net));
            let ok = search(g, rules, left - 1);
            g.set(Layer::M1, t, c, Cell::Empty);
            if ok {
                return true;
            }
        }
        false
    }
    let mut g = grid.clone();
    (0..=depth).find(|&d| search(&mut g, rules, d))
}

/// `count` seeded DRC fixtures; the required extension count cycles through
/// 1 to [`FIXTURE_MAX_EXTENSIONS`].
pub fn drc_fixtures(seed: u64, count: usize, rules: &DrcRuleSet) -> Vec<DrcFixture> {
    let mut r = rng::stream(seed, "drc-fixtures");
    let mut out = Vec::new();
    while out.len() < count {
        let g = random_m1(&mut r, 4, 12, 3);
        let markers = run_drc(&g, rules);
        if markers.is_empty()
            || markers
                .iter()
                .any(|m| !matches!(m.rule, Rule::CutSpacing | Rule::CutAdjacency))
        {
            continue;
        }
        let want = 1 + out.len() % FIXTURE_MAX_EXTENSIONS;
        let Some(k) = min_extensions(&g, rules, want).filter(|k| *k == want) else {
            continue;
        };
        out.push(DrcFixture {
            format_version: FORMAT_VERSION,
            name: format!("DRC{:02}", out.len()),
            layout: export_script(&g),
            drc_count: markers.len(),
            min_extensions: k,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_valid_and_deterministic() {
        let a = generate_library(5);
        assert_eq!(a, generate_library(5));
        assert_eq!(a.len(), 20);
        for n in &a {
            n.validate(4).unwrap_or_else(|e| panic!("{}: {e}", n.name));
            let d = n.devices.len();
            assert!((2..=12).contains(&d), "{} has {d} devices", n.name);
        }
        for n in &a[8..] {
            assert!((3..=8).contains(&n.devices.len()));
        }
    }

    #[test]
    fn hand_cells_have_expected_sizes() {
        assert_eq!(inverter().devices.len(), 2);
        assert_eq!(nand2().devices.len(), 4);
        assert!(by_name("LATCH").is_some());
    }

    #[test]
    fn drc_fixtures_need_few_extensions() {
        let rules = DrcRuleSet::default();
        let f = drc_fixtures(3, 4, &rules);
        assert_eq!(f, drc_fixtures(3, 4, &rules));
        for x in &f {
            assert!((1..=FIXTURE_MAX_EXTENSIONS).contains(&x.min_extensions));
            assert!(x.drc_count > 0);
        }
    }
}
