//! Lee-style wavefront routing over the routing layers.
//!
//! Expansion is a Dijkstra wavefront (unit steps along each layer's direction,
//! a configurable cost per via). The backtrace picks uniformly among all
//! predecessors that lie on some shortest path, so the cost is always optimal
//! while the path shape is random.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridPoint, Layer, LayoutGrid, NetId};
use crate::tech::RouteCost;

/// Two points of one net joined by a single routing call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalPair {
    pub net: NetId,
    pub a: GridPoint,
    pub b: GridPoint,
}

/// A connected point path from one end of a pair to the other.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub net: NetId,
    pub points: Vec<GridPoint>,
}

impl Route {
    pub fn cost(&self, cost: &RouteCost) -> u32 {
        self.points
            .windows(2)
            .map(|w| if w[0].layer == w[1].layer { cost.step } else { cost.via })
            .sum()
    }

    pub fn vias(&self) -> usize {
        self.points.windows(2).filter(|w| w[0].layer != w[1].layer).count()
    }

    /// Every consecutive pair is one step along the layer direction or a via.
    pub fn is_connected(&self) -> bool {
        self.points.windows(2).all(|w| adjacent(w[0], w[1]))
    }
}

/// Whether `a` and `b` are one routing move apart.
pub fn adjacent(a: GridPoint, b: GridPoint) -> bool {
    if a.layer == b.layer {
        let (dt, dc) = (a.track.abs_diff(b.track), a.col.abs_diff(b.col));
        if a.layer.horizontal() {
            dt == 0 && dc == 1
        } else {
            dc == 0 && dt == 1
        }
    } else {
        a.track == b.track && a.col == b.col && a.layer.via_neighbors().any(|l| l == b.layer)
    }
}

fn routing_slot(layer: Layer) -> Option<usize> {
    Layer::ROUTING.iter().position(|l| *l == layer)
}

/// Dense index of a routing-layer point.
fn node(grid: &LayoutGrid, p: GridPoint) -> usize {
    let r = routing_slot(p.layer).expect("routing layer");
    (r * grid.height + p.track) * grid.width + p.col
}

fn point(grid: &LayoutGrid, i: usize) -> GridPoint {
    let plane = grid.height * grid.width;
    let r = i / plane;
    let rem = i % plane;
    GridPoint::new(Layer::ROUTING[r], rem / grid.width, rem % grid.width)
}

/// Routing moves out of `p` (lateral steps and vias) with their costs, without
/// any occupancy check.
pub fn moves(grid: &LayoutGrid, p: GridPoint, cost: &RouteCost) -> Vec<(GridPoint, u32)> {
    let mut out: Vec<(GridPoint, u32)> = grid.lateral_neighbors(p).map(|q| (q, cost.step)).collect();
    for l in p.layer.via_neighbors() {
        if routing_slot(l).is_some() {
            out.push((GridPoint::new(l, p.track, p.col), cost.via));
        }
    }
    out
}

/// Shortest route for `pair` through cells usable by its net, or `None` when
/// no path exists. The grid is not modified.
pub fn maze_route<R: Rng + ?Sized>(grid: &LayoutGrid, pair: &TerminalPair, rng: &mut R, cost: &RouteCost) -> Option<Route> {
    let net = pair.net;
    if routing_slot(pair.a.layer).is_none() || routing_slot(pair.b.layer).is_none() {
        return None;
    }
    if !grid.usable_by(pair.a, net) || !grid.usable_by(pair.b, net) {
        return None;
    }
    let n = Layer::ROUTING.len() * grid.height * grid.width;
    let mut dist = vec![u32::MAX; n];
    let src = node(grid, pair.a);
    let dst = node(grid, pair.b);
    dist[src] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u32, src)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == dst {
            break;
        }
        for (q, c) in moves(grid, point(grid, u), cost) {
            if !grid.usable_by(q, net) {
                continue;
            }
            let v = node(grid, q);
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    if dist[dst] == u32::MAX {
        return None;
    }

    let mut path = vec![pair.b];
    let mut cur = dst;
    while cur != src {
        let p = point(grid, cur);
        let preds: Vec<usize> = moves(grid, p, cost)
            .into_iter()
            .filter_map(|(q, c)| {
                let u = node(grid, q);
                (dist[u] != u32::MAX && dist[u] + c == dist[cur]).then_some(u)
            })
            .collect();
        cur = preds[rng.gen_range(0..preds.len())];
        path.push(point(grid, cur));
    }
    path.reverse();
    Some(Route { net, points: path })
}

/// Writes the route's net into every point it covers.
pub fn mark_route(grid: &mut LayoutGrid, route: &Route) {
    for p in &route.points {
        grid.set(p.layer, p.track, p.col, Cell::Net(route.net));
    }
}

/// Whether every point of the route can be drawn on `grid` without touching
/// another net.
pub fn fits(grid: &LayoutGrid, route: &Route) -> bool {
    route.points.iter().all(|p| grid.usable_by(*p, route.net))
}
