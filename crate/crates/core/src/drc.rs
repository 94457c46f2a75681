//! Cut-metal inference, M1 rule checking and connectivity verification.
//!
//! Between two M1 segments of different nets on a track, the empty interval
//! receives exactly one cut. Every interval has a default position (its
//! leftmost column); the chosen position is the candidate among the first
//! `cut_adjacency_window + 1` columns of the interval that conflicts with the
//! fewest default positions of intervals further left on the same track or on
//! the track above. Because choices only look at defaults, which depend on
//! geometry alone, one added M1 point can move cuts only near itself.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Layer, LayoutGrid, NetId};
use crate::tech::DrcRuleSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    CutSpacing,
    CutAdjacency,
    MinSegment,
    Short,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::CutSpacing => "cut_spacing",
            Rule::CutAdjacency => "cut_adjacency",
            Rule::MinSegment => "min_segment",
            Rule::Short => "short",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DrcMarker {
    pub track: usize,
    pub col: usize,
    pub rule: Rule,
    /// Far corner of the violation, when it spans more than one point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<(usize, usize)>,
}

/// An empty M1 interval `[lo, hi]` on `track` between two different nets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutInterval {
    pub track: usize,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CutInference {
    pub cuts: BTreeSet<(usize, usize)>,
    /// Abutting different nets where no cut fits.
    pub infeasible: Vec<(usize, usize)>,
}

impl CutInference {
    pub fn feasible(&self) -> bool {
        self.infeasible.is_empty()
    }
}

/// Empty intervals needing a cut, and abutments that cannot get one, per track.
fn scan_track(row: &[Cell], track: usize, intervals: &mut Vec<CutInterval>, abut: &mut Vec<(usize, usize)>) {
    let mut last: Option<(usize, NetId)> = None;
    let mut blocked = false;
    for (c, cell) in row.iter().enumerate() {
        match *cell {
            Cell::Empty => {}
            Cell::Blocked => {
                last = None;
                blocked = true;
            }
            Cell::Net(n) => {
                if let Some((lc, ln)) = last {
                    if ln != n && !blocked {
                        if lc + 1 == c {
                            abut.push((track, lc));
                        } else {
                            intervals.push(CutInterval {
                                track,
                                lo: lc + 1,
                                hi: c - 1,
                            });
                        }
                    }
                }
                last = Some((c, n));
                blocked = false;
            }
        }
    }
}

pub fn cut_intervals(grid: &LayoutGrid) -> (Vec<CutInterval>, Vec<(usize, usize)>) {
    let mut intervals = Vec::new();
    let mut abut = Vec::new();
    for t in 0..grid.height {
        scan_track(grid.m1_track(t), t, &mut intervals, &mut abut);
    }
    (intervals, abut)
}

fn choose_cuts(grid: &LayoutGrid, rules: &DrcRuleSet) -> (Vec<Vec<usize>>, Vec<(usize, usize)>) {
    let (intervals, abut) = cut_intervals(grid);
    let mut defaults: Vec<Vec<usize>> = vec![Vec::new(); grid.height];
    for iv in &intervals {
        defaults[iv.track].push(iv.lo);
    }
    let window = rules.cut_adjacency_window;
    let spacing = rules.min_cut_spacing;
    let mut cuts: Vec<Vec<usize>> = vec![Vec::new(); grid.height];
    for iv in &intervals {
        let cost = |x: usize| {
            let same = defaults[iv.track]
                .iter()
                .filter(|&&d| d < iv.lo && x - d < spacing)
                .count();
            let above = if iv.track > 0 {
                defaults[iv.track - 1]
                    .iter()
                    .filter(|&&d| d.abs_diff(x) < window)
                    .count()
            } else {
                0
            };
            same + above
        };
        let last = iv.hi.min(iv.lo + window);
        let best = (iv.lo..=last)
            .min_by_key(|&x| (cost(x), x))
            .expect("non-empty interval");
        cuts[iv.track].push(best);
    }
    (cuts, abut)
}

/// Cut positions for every M1 interval that separates two nets.
pub fn infer_cuts(grid: &LayoutGrid, rules: &DrcRuleSet) -> CutInference {
    let (cuts, infeasible) = choose_cuts(grid, rules);
    CutInference {
        cuts: cuts
            .iter()
            .enumerate()
            .flat_map(|(t, cs)| cs.iter().map(move |&c| (t, c)))
            .collect(),
        infeasible,
    }
}

/// Runs cut inference and stores the cuts on the grid.
pub fn apply_cuts(grid: &mut LayoutGrid, rules: &DrcRuleSet) -> CutInference {
    let inf = infer_cuts(grid, rules);
    grid.cuts = inf.cuts.clone();
    inf
}

fn markers_for(grid: &LayoutGrid, rules: &DrcRuleSet, cuts: &[Vec<usize>]) -> Vec<DrcMarker> {
    let mut out = Vec::new();
    for (t, cs) in cuts.iter().enumerate() {
        for (i, &p) in cs.iter().enumerate() {
            for &q in &cs[i + 1..] {
                if q - p < rules.min_cut_spacing {
                    out.push(DrcMarker {
                        track: t,
                        col: p,
                        rule: Rule::CutSpacing,
                        extent: Some((t, q)),
                    });
                }
            }
            if let Some(below) = cuts.get(t + 1) {
                for &q in below {
                    if p.abs_diff(q) < rules.cut_adjacency_window {
                        out.push(DrcMarker {
                            track: t,
                            col: p,
                            rule: Rule::CutAdjacency,
                            extent: Some((t + 1, q)),
                        });
                    }
                }
            }
        }
    }
    for t in 0..grid.height {
        let row = grid.m1_track(t);
        let mut c = 0;
        while c < row.len() {
            let Cell::Net(n) = row[c] else {
                c += 1;
                continue;
            };
            let start = c;
            while c < row.len() && row[c] == Cell::Net(n) {
                c += 1;
            }
            if c - start < rules.min_segment_len {
                out.push(DrcMarker {
                    track: t,
                    col: start,
                    rule: Rule::MinSegment,
                    extent: Some((t, c - 1)),
                });
            }
            if let Some(Cell::Net(m)) = row.get(c) {
                if *m != n {
                    out.push(DrcMarker {
                        track: t,
                        col: c - 1,
                        rule: Rule::Short,
                        extent: Some((t, c)),
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// Markers for the cuts currently stored on the grid.
pub fn check_drc(grid: &LayoutGrid, rules: &DrcRuleSet) -> Vec<DrcMarker> {
    let mut cuts = vec![Vec::new(); grid.height];
    for &(t, c) in &grid.cuts {
        cuts[t].push(c);
    }
    markers_for(grid, rules, &cuts)
}

/// Cut inference followed by rule checking, without touching the grid.
pub fn run_drc(grid: &LayoutGrid, rules: &DrcRuleSet) -> Vec<DrcMarker> {
    let (cuts, _) = choose_cuts(grid, rules);
    markers_for(grid, rules, &cuts)
}

pub fn drc_count(grid: &LayoutGrid, rules: &DrcRuleSet) -> usize {
    run_drc(grid, rules).len()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IssueKind {
    Open,
    Short { other: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConnectivityIssue {
    pub net: String,
    #[serde(flatten)]
    pub kind: IssueKind,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Electrical components of every occupied cell, as a union-find root per cell
/// (`usize::MAX` for unoccupied cells). Index = `layer * H * W + track * W + col`.
pub fn components(grid: &LayoutGrid) -> Vec<usize> {
    let (h, w) = (grid.height, grid.width);
    let plane = h * w;
    let mut uf = UnionFind::new(plane * Layer::ALL.len());
    for layer in Layer::ALL {
        let cells = grid.layer_cells(layer);
        let base = layer.index() * plane;
        for t in 0..h {
            for c in 0..w {
                let Cell::Net(n) = cells[t * w + c] else { continue };
                let next = if layer.horizontal() {
                    (c + 1 < w).then(|| t * w + c + 1)
                } else {
                    (t + 1 < h).then(|| (t + 1) * w + c)
                };
                let Some(j) = next else { continue };
                let Cell::Net(m) = cells[j] else { continue };
                let joins = match layer {
                    Layer::Diff => false,
                    // gate nets split by an inferred poly cut
                    Layer::Poly => n == m,
                    _ => true,
                };
                if joins {
                    uf.union(base + t * w + c, base + j);
                }
            }
        }
    }
    for (a, b) in Layer::VIAS {
        let (ca, cb) = (grid.layer_cells(a), grid.layer_cells(b));
        for i in 0..plane {
            if let (Cell::Net(n), Cell::Net(m)) = (ca[i], cb[i]) {
                if n == m {
                    uf.union(a.index() * plane + i, b.index() * plane + i);
                }
            }
        }
    }
    (0..plane * Layer::ALL.len())
        .map(|i| {
            let layer = Layer::ALL[i / plane];
            if grid.layer_cells(layer)[i % plane].net().is_some() {
                uf.find(i)
            } else {
                usize::MAX
            }
        })
        .collect()
}

/// Opens (a net's access points in more than one component) and shorts
/// (two nets in one component), sorted.
pub fn check_connectivity(grid: &LayoutGrid) -> Vec<ConnectivityIssue> {
    let comp = components(grid);
    let plane = grid.height * grid.width;
    let index = |l: Layer, t: usize, c: usize| l.index() * plane + t * grid.width + c;

    let mut issues = BTreeSet::new();
    let mut per_net: BTreeMap<NetId, BTreeSet<usize>> = BTreeMap::new();
    for ap in &grid.access {
        let i = index(ap.point.layer, ap.point.track, ap.point.col);
        per_net.entry(ap.net).or_default().insert(comp[i]);
    }
    for (net, comps) in &per_net {
        if comps.len() > 1 || comps.contains(&usize::MAX) {
            issues.insert(ConnectivityIssue {
                net: grid.net_name(*net).to_string(),
                kind: IssueKind::Open,
            });
        }
    }
    let mut nets_of: BTreeMap<usize, BTreeSet<NetId>> = BTreeMap::new();
    for layer in Layer::ALL {
        for (i, cell) in grid.layer_cells(layer).iter().enumerate() {
            if let Cell::Net(n) = cell {
                nets_of.entry(comp[layer.index() * plane + i]).or_default().insert(*n);
            }
        }
    }
    for nets in nets_of.values() {
        let names: Vec<&str> = nets.iter().map(|n| grid.net_name(*n)).collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                issues.insert(ConnectivityIssue {
                    net: a.to_string(),
                    kind: IssueKind::Short { other: b.to_string() },
                });
            }
        }
    }
    issues.into_iter().collect()
}
