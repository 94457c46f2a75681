//! Terminal-pair decomposition: a minimum spanning tree per net.

use std::collections::BTreeMap;

use crate::drc::components;
use crate::grid::{GridPoint, LayoutGrid, NetId};
use crate::router::maze::TerminalPair;

/// Prim's tree over `points` under planar Manhattan distance. Returns index
/// pairs `(in_tree, added)` in insertion order; ties go to the
/// lexicographically smallest `(distance, a, b)`.
pub fn mst_pairs(points: &[GridPoint]) -> Vec<(usize, usize)> {
    if points.len() < 2 {
        return Vec::new();
    }
    let start = (0..points.len()).min_by_key(|&i| points[i]).unwrap();
    let mut in_tree = vec![false; points.len()];
    in_tree[start] = true;
    let mut out = Vec::new();
    for _ in 1..points.len() {
        let mut best: Option<(usize, GridPoint, GridPoint, usize, usize)> = None;
        for i in (0..points.len()).filter(|&i| in_tree[i]) {
            for j in (0..points.len()).filter(|&j| !in_tree[j]) {
                let key = (points[i].manhattan(&points[j]), points[i], points[j], i, j);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (_, _, _, i, j) = best.unwrap();
        in_tree[j] = true;
        out.push((i, j));
    }
    out
}

/// Pairs to route so that every net's access points end up connected.
/// Access points already joined on the unrouted grid (shared diffusion, the
/// power rails) form one group; the tree runs over groups, each edge between
/// the closest members of the two groups.
pub fn terminal_pairs(grid: &LayoutGrid) -> Vec<TerminalPair> {
    let comp = components(grid);
    let plane = grid.height * grid.width;
    let comp_of = |p: GridPoint| comp[p.layer.index() * plane + p.track * grid.width + p.col];

    let mut groups: BTreeMap<NetId, BTreeMap<usize, Vec<GridPoint>>> = BTreeMap::new();
    for ap in &grid.access {
        let members = groups.entry(ap.net).or_default().entry(comp_of(ap.point)).or_default();
        if !members.contains(&ap.point) {
            members.push(ap.point);
        }
    }

    let mut out = Vec::new();
    for (net, by_comp) in groups {
        let mut gs: Vec<Vec<GridPoint>> = by_comp.into_values().collect();
        for g in &mut gs {
            g.sort();
        }
        gs.sort();
        if gs.len() < 2 {
            continue;
        }
        let mut in_tree = vec![false; gs.len()];
        in_tree[0] = true;
        for _ in 1..gs.len() {
            let mut best: Option<(usize, GridPoint, GridPoint, usize)> = None;
            for gi in gs.iter().enumerate().filter(|(i, _)| in_tree[*i]).map(|(_, g)| g) {
                for (j, gj) in gs.iter().enumerate().filter(|(j, _)| !in_tree[*j]) {
                    for a in gi {
                        for b in gj {
                            let key = (a.manhattan(b), *a, *b, j);
                            if best.is_none_or(|k| key < k) {
                                best = Some(key);
                            }
                        }
                    }
                }
            }
            let (_, a, b, j) = best.unwrap();
            in_tree[j] = true;
            out.push(TerminalPair { net, a, b });
        }
    }
    out
}
