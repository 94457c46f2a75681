//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use cellsynth::grid::{AccessKind, AccessPoint, Cell, GridPoint, Layer, LayoutGrid, NetId, PinLabel};
use cellsynth::netlist::Netlist;
use cellsynth::tech::{RouteCost, TechParams};
use ndarray::{Array3, ArrayD};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("v1")
}

/// Compares `actual` with the shipped file, or rewrites it when
/// `UPDATE_FIXTURES` is set.
pub fn check_shipped(file: &str, actual: &str) {
    let path = fixtures_dir().join(file);
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let shipped = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_FIXTURES=1)", path.display()));
    assert_eq!(shipped, actual, "{} is stale (run with UPDATE_FIXTURES=1)", path.display());
}

pub fn net_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

/// Every layer filled with random runs of nets, blockages and gaps, plus cuts,
/// pins and access points.
pub fn random_grid<R: Rng>(r: &mut R, height: usize, width: usize, nets: usize) -> LayoutGrid {
    let mut g = LayoutGrid::empty(height, width, net_names(nets));
    for layer in Layer::ALL {
        for t in 0..height {
            for c in 0..width {
                let cell = match r.gen_range(0..10) {
                    0..=4 => Cell::Empty,
                    5 => Cell::Blocked,
                    _ => Cell::Net(NetId(r.gen_range(0..nets) as u16)),
                };
                g.set(layer, t, c, cell);
            }
        }
    }
    for _ in 0..r.gen_range(0..6) {
        g.cuts.insert((r.gen_range(0..height), r.gen_range(0..width)));
    }
    for i in 0..r.gen_range(0..4) {
        g.pins.push(PinLabel {
            name: format!("P{i}"),
            net: NetId(r.gen_range(0..nets) as u16),
            track: r.gen_range(0..height),
            col: r.gen_range(0..width),
        });
    }
    let kinds = [AccessKind::Source, AccessKind::Drain, AccessKind::Gate, AccessKind::Pin];
    for i in 0..r.gen_range(0..8) {
        g.access.push(AccessPoint {
            net: NetId(r.gen_range(0..nets) as u16),
            point: GridPoint::new(
                *Layer::ALL.choose(r).unwrap(),
                r.gen_range(0..height),
                r.gen_range(0..width),
            ),
            kind: *kinds.choose(r).unwrap(),
            owner: format!("M{i}"),
        });
    }
    g
}

/// An M1-only grid of same-net runs separated by gaps.
pub fn random_m1<R: Rng>(r: &mut R, height: usize, width: usize, nets: usize) -> LayoutGrid {
    let mut g = LayoutGrid::empty(height, width, net_names(nets));
    for t in 0..height {
        let mut c = r.gen_range(0..3usize);
        while c < width {
            let len = r.gen_range(1..=5usize).min(width - c);
            let net = NetId(r.gen_range(0..nets) as u16);
            for x in c..c + len {
                g.set(Layer::M1, t, x, Cell::Net(net));
            }
            c += len + r.gen_range(1..=4usize);
        }
    }
    g
}

// ---------------------------------------------------------------- placement

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Column sequences merging `np` PMOS and `nn` NMOS entries: each column holds
/// the next PMOS, the next NMOS, or both.
fn merges(np: usize, nn: usize, max_cols: usize) -> Vec<Vec<(bool, bool)>> {
    fn rec(i: usize, j: usize, np: usize, nn: usize, left: usize, cur: &mut Vec<(bool, bool)>, out: &mut Vec<Vec<(bool, bool)>>) {
        if i == np && j == nn {
            out.push(cur.clone());
            return;
        }
        if left == 0 {
            return;
        }
        for (p, n) in [(true, true), (true, false), (false, true)] {
            if (p && i == np) || (n && j == nn) {
                continue;
            }
            cur.push((p, n));
            rec(i + p as usize, j + n as usize, np, nn, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, 0, np, nn, max_cols, &mut Vec::new(), &mut out);
    out
}

/// Whether a device may sit at distance `d >= 1` right of its row neighbour:
/// abutting needs shared diffusion (and equal fins unless `k_f` is zero),
/// otherwise the dummy-poly gap applies.
fn may_follow(left: (&str, &str, u32), right: (&str, &str, u32), d: usize, tech: &TechParams) -> bool {
    let mismatch = left.2 != right.2;
    let apart = 1 + if mismatch { tech.k_s.max(tech.k_f) } else { tech.k_s };
    if d == 1 {
        apart == 1 || (left.1 == right.0 && (!mismatch || tech.k_f == 0))
    } else {
        d >= apart
    }
}

/// Left net, right net, gate column count of one placed device.
type Side<'a> = (&'a str, &'a str, u32);

/// Minimum cell width by brute force over row orders, flips and column merges,
/// using at most `slots` columns with devices.
pub fn oracle_min_width(netlist: &Netlist, tech: &TechParams, slots: usize) -> usize {
    let pm: Vec<_> = netlist.devices.iter().filter(|d| d.kind == cellsynth::DeviceKind::Pmos).collect();
    let nm: Vec<_> = netlist.devices.iter().filter(|d| d.kind == cellsynth::DeviceKind::Nmos).collect();
    let (np, nn) = (pm.len(), nm.len());
    fn side(d: &cellsynth::Device, flip: bool) -> Side<'_> {
        if flip {
            (d.drain.as_str(), d.source.as_str(), d.fins)
        } else {
            (d.source.as_str(), d.drain.as_str(), d.fins)
        }
    }
    let merge_set = merges(np, nn, slots);
    let mut best = usize::MAX;
    for po in permutations(np) {
        for no in permutations(nn) {
            for flips in 0u32..(1 << (np + nn)) {
                let rows: [Vec<(&str, &str, u32)>; 2] = [
                    po.iter().map(|&i| side(pm[i], flips >> i & 1 == 1)).collect(),
                    no.iter().map(|&i| side(nm[i], flips >> (np + i) & 1 == 1)).collect(),
                ];
                for m in &merge_set {
                    let mut next = [0usize; 2];
                    let mut last: [Option<(usize, Side<'_>)>; 2] = [None, None];
                    let mut col: Option<usize> = None;
                    for &(p, n) in m {
                        let here = [p, n];
                        let mut x = col.map_or(0, |c| c + 1);
                        while !(0..2).all(|row| match (here[row], last[row]) {
                            (true, Some((lc, ld))) => may_follow(ld, rows[row][next[row]], x - lc, tech),
                            _ => true,
                        }) {
                            x += 1;
                        }
                        for row in 0..2 {
                            if here[row] {
                                last[row] = Some((x, rows[row][next[row]]));
                                next[row] += 1;
                            }
                        }
                        col = Some(x);
                    }
                    best = best.min(col.map_or(0, |c| c + 1));
                }
            }
        }
    }
    best
}

// ------------------------------------------------------------------- router

fn horizontal(layer: Layer) -> bool {
    matches!(layer, Layer::Lig | Layer::M1)
}

const ROUTING: [Layer; 4] = [Layer::Lisd, Layer::Lig, Layer::M1, Layer::M2];
const VIA_PAIRS: [(Layer, Layer); 3] = [(Layer::Lisd, Layer::M1), (Layer::Lig, Layer::M1), (Layer::M1, Layer::M2)];

fn passable(g: &LayoutGrid, layer: Layer, t: usize, c: usize, net: NetId) -> bool {
    match g.get(layer, t, c) {
        Cell::Blocked => false,
        Cell::Net(n) => n == net,
        Cell::Empty => {
            let beside: Vec<(isize, isize)> = if horizontal(layer) { vec![(0, -1), (0, 1)] } else { vec![(-1, 0), (1, 0)] };
            beside.into_iter().all(|(dt, dc)| {
                let (tt, cc) = (t as isize + dt, c as isize + dc);
                if tt < 0 || cc < 0 || tt >= g.height as isize || cc >= g.width as isize {
                    return true;
                }
                match g.get(layer, tt as usize, cc as usize) {
                    Cell::Net(m) => m == net,
                    _ => true,
                }
            })
        }
    }
}

/// Shortest-path cost between two points for `net` by Dijkstra on an explicit
/// petgraph graph of every passable routing cell.
pub fn oracle_route_cost(g: &LayoutGrid, net: NetId, a: GridPoint, b: GridPoint, cost: &RouteCost) -> Option<u32> {
    let mut graph = UnGraph::<(), u32>::new_undirected();
    let mut ids: HashMap<(Layer, usize, usize), NodeIndex> = HashMap::new();
    for layer in ROUTING {
        for t in 0..g.height {
            for c in 0..g.width {
                if passable(g, layer, t, c, net) {
                    ids.insert((layer, t, c), graph.add_node(()));
                }
            }
        }
    }
    for (&(layer, t, c), &u) in &ids {
        let fwd = if horizontal(layer) { (t, c + 1) } else { (t + 1, c) };
        if let Some(&v) = ids.get(&(layer, fwd.0, fwd.1)) {
            graph.add_edge(u, v, cost.step);
        }
    }
    for (lo, hi) in VIA_PAIRS {
        for t in 0..g.height {
            for c in 0..g.width {
                if let (Some(&u), Some(&v)) = (ids.get(&(lo, t, c)), ids.get(&(hi, t, c))) {
                    graph.add_edge(u, v, cost.via);
                }
            }
        }
    }
    let src = *ids.get(&(a.layer, a.track, a.col))?;
    let dst = *ids.get(&(b.layer, b.track, b.col))?;
    dijkstra(&graph, src, Some(dst), |e| *e.weight()).get(&dst).copied()
}

// ----------------------------------------------------------------- networks

/// Zero-padded 3x3 convolution by direct loops. `w` is `[O, C, 3, 3]`.
pub fn direct_conv3x3(x: &Array3<f64>, w: &ArrayD<f64>, b: &ArrayD<f64>) -> Array3<f64> {
    let (c_in, h, wd) = x.dim();
    let c_out = w.shape()[0];
    let mut out = Array3::zeros((c_out, h, wd));
    for o in 0..c_out {
        for i in 0..h {
            for j in 0..wd {
                let mut acc = b[[o]];
                for c in 0..c_in {
                    for di in 0..3 {
                        for dj in 0..3 {
                            let (si, sj) = (i as isize + di as isize - 1, j as isize + dj as isize - 1);
                            if si >= 0 && sj >= 0 && (si as usize) < h && (sj as usize) < wd {
                                acc += w[[o, c, di, dj]] * x[[c, si as usize, sj as usize]];
                            }
                        }
                    }
                }
                out[[o, i, j]] = acc;
            }
        }
    }
    out
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn mlp(t: &BTreeMap<String, ArrayD<f64>>, prefix: &str, x: &[f64]) -> f64 {
    let mut cur = x.to_vec();
    for layer in 1..=3 {
        let w = &t[&format!("{prefix}.fc{layer}.weight")];
        let b = &t[&format!("{prefix}.fc{layer}.bias")];
        let (o, i) = (w.shape()[0], w.shape()[1]);
        cur = (0..o)
            .map(|r| {
                let s = b[[r]] + (0..i).map(|k| w[[r, k]] * cur[k]).sum::<f64>();
                if layer < 3 {
                    relu(s)
                } else {
                    s
                }
            })
            .collect();
    }
    cur[0]
}

/// Policy logits and value computed entirely by loops.
pub fn reference_policy(t: &BTreeMap<String, ArrayD<f64>>, obs: &Array3<f64>) -> (Vec<f64>, f64) {
    let mut x = obs.clone();
    for layer in 1..=4 {
        x = direct_conv3x3(&x, &t[&format!("conv{layer}.weight")], &t[&format!("conv{layer}.bias")]);
        x.mapv_inplace(relu);
    }
    let (c, h, w) = x.dim();
    let mut logits = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let px: Vec<f64> = (0..c).map(|k| x[[k, i, j]]).collect();
            logits.push(mlp(t, "policy", &px));
        }
    }
    let mean: Vec<f64> = (0..c)
        .map(|k| (0..h).flat_map(|i| (0..w).map(move |j| (i, j))).map(|(i, j)| x[[k, i, j]]).sum::<f64>() / (h * w) as f64)
        .collect();
    (logits, mlp(t, "value", &mean))
}

/// Routability class probabilities by loops: two same-padded 1D convolutions,
/// max over slots, dense, softmax.
pub fn reference_routability(t: &BTreeMap<String, ArrayD<f64>>, feats: &[Vec<f64>]) -> Vec<f64> {
    let conv = |x: &Vec<Vec<f64>>, w: &ArrayD<f64>, b: &ArrayD<f64>| -> Vec<Vec<f64>> {
        let (o, ci, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
        let len = x.len();
        (0..len)
            .map(|pos| {
                (0..o)
                    .map(|oo| {
                        let mut acc = b[[oo]];
                        for kk in 0..k {
                            let s = pos as isize + kk as isize - (k / 2) as isize;
                            if s >= 0 && (s as usize) < len {
                                for cc in 0..ci {
                                    acc += w[[oo, cc, kk]] * x[s as usize][cc];
                                }
                            }
                        }
                        relu(acc)
                    })
                    .collect()
            })
            .collect()
    };
    let h1 = conv(&feats.to_vec(), &t["conv1.weight"], &t["conv1.bias"]);
    let h2 = conv(&h1, &t["conv2.weight"], &t["conv2.bias"]);
    let pooled: Vec<f64> = (0..h2[0].len())
        .map(|c| h2.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let w = &t["dense.weight"];
    let b = &t["dense.bias"];
    let logits: Vec<f64> = (0..w.shape()[0])
        .map(|o| b[[o]] + (0..w.shape()[1]).map(|i| w[[o, i]] * pooled[i]).sum::<f64>())
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}
