//! Maze router, terminal pairs and genetic router invariants.

mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use cellsynth::drc::{apply_cuts, check_connectivity, check_drc};
use cellsynth::drcfix::GreedyFixer;
use cellsynth::fixtures;
use cellsynth::ga::{crossover, evolve, random_routing, GaParams, RoutingProblem};
use cellsynth::grid::{AccessKind, AccessPoint, Cell, GridPoint, Layer, LayoutGrid, NetId};
use cellsynth::pipeline::{place, placed_grid, PipelineConfig};
use cellsynth::router::maze::{fits, maze_route, TerminalPair};
use cellsynth::router::pairs::terminal_pairs;
use cellsynth::tech::{RouteCost, TechParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

type Rng64 = rand_chacha::ChaCha8Rng;

/// Blockages plus a few foreign-net cells, so the keep-out rule matters.
fn cluttered(r: &mut Rng64, h: usize, w: usize, block: f64) -> LayoutGrid {
    let mut g = LayoutGrid::empty(h, w, common::net_names(3));
    for layer in Layer::ROUTING {
        for t in 0..h {
            for c in 0..w {
                let x: f64 = r.gen();
                if x < block {
                    g.set(layer, t, c, Cell::Blocked);
                } else if x < block + 0.05 {
                    g.set(layer, t, c, Cell::Net(NetId(r.gen_range(1..3))));
                }
            }
        }
    }
    g
}

fn any_point(r: &mut Rng64, g: &LayoutGrid) -> GridPoint {
    GridPoint::new(Layer::ROUTING[r.gen_range(0..4)], r.gen_range(0..g.height), r.gen_range(0..g.width))
}

/// Kruskal over complete Manhattan graph.
fn mst_weight(points: &[GridPoint]) -> usize {
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            edges.push((points[i].manhattan(&points[j]), i, j));
        }
    }
    edges.sort();
    let mut comp: Vec<usize> = (0..points.len()).collect();
    let mut total = 0;
    for (d, i, j) in edges {
        let (a, b) = (comp[i], comp[j]);
        if a != b {
            total += d;
            for c in comp.iter_mut() {
                if *c == b {
                    *c = a;
                }
            }
        }
    }
    total
}

fn problems() -> &'static [RoutingProblem] {
    static CACHE: OnceLock<Vec<RoutingProblem>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let config = PipelineConfig::default();
        ["INV", "NAND2", "NOR2", "AOI21"]
            .iter()
            .map(|n| {
                let nl = fixtures::by_name(n).unwrap();
                let rep = place(&nl, &config, 1, None).unwrap();
                RoutingProblem::new(placed_grid(&nl, &rep, &config.tech).unwrap(), config.tech.clone())
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn route_cost_is_optimal(seed: u64, h in 2usize..12, w in 2usize..16, block in 0.0f64..0.45, via in 1u32..5) {
        let mut r = Rng64::seed_from_u64(seed);
        let g = cluttered(&mut r, h, w, block);
        let cost = RouteCost { step: 1, via };
        let pair = TerminalPair { net: NetId(0), a: any_point(&mut r, &g), b: any_point(&mut r, &g) };
        let want = common::oracle_route_cost(&g, pair.net, pair.a, pair.b, &cost);
        let got = maze_route(&g, &pair, &mut r, &cost);
        prop_assert_eq!(got.as_ref().map(|route| route.cost(&cost)), want);
        if let Some(route) = got {
            prop_assert!(route.is_connected());
            prop_assert!(fits(&g, &route));
            prop_assert_eq!(route.points[0], pair.a);
            prop_assert_eq!(*route.points.last().unwrap(), pair.b);
        }
    }

    #[test]
    fn pairs_follow_the_spanning_tree(seed: u64, h in 4usize..12, w in 4usize..20, terminals in prop::collection::vec(1usize..7, 1..4)) {
        // M2 contacts on every other track, so no two of them touch vertically
        let mut r = Rng64::seed_from_u64(seed);
        let mut g = LayoutGrid::empty(h, w, common::net_names(terminals.len()));
        let mut free: Vec<(usize, usize)> = (0..h).step_by(2).flat_map(|t| (0..w).map(move |c| (t, c))).collect();
        let mut by_net: BTreeMap<NetId, Vec<GridPoint>> = BTreeMap::new();
        for (n, &k) in terminals.iter().enumerate() {
            for i in 0..k {
                prop_assume!(!free.is_empty());
                let (t, c) = free.swap_remove(r.gen_range(0..free.len()));
                let p = GridPoint::new(Layer::M2, t, c);
                g.set(Layer::M2, t, c, Cell::Net(NetId(n as u16)));
                g.access.push(AccessPoint { net: NetId(n as u16), point: p, kind: AccessKind::Pin, owner: format!("T{i}") });
                by_net.entry(NetId(n as u16)).or_default().push(p);
            }
        }
        let pairs = terminal_pairs(&g);
        for (net, pts) in &by_net {
            let mine: Vec<&TerminalPair> = pairs.iter().filter(|p| p.net == *net).collect();
            prop_assert_eq!(mine.len(), pts.len() - 1);
            let total: usize = mine.iter().map(|p| p.a.manhattan(&p.b)).sum();
            prop_assert_eq!(total, mst_weight(pts));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crossover_children_never_overlap(which in 0usize..4, seed: u64) {
        let problem = &problems()[which];
        let mut r = Rng64::seed_from_u64(seed);
        let dad = random_routing(problem, &mut r);
        let mom = random_routing(problem, &mut r);
        let (a, b) = crossover(problem, &dad, &mom, &mut r);
        for child in [a, b] {
            let mut owner: BTreeMap<GridPoint, NetId> = BTreeMap::new();
            for s in &child.segments {
                for p in &s.route.points {
                    let prev = owner.insert(*p, s.route.net);
                    prop_assert!(prev.is_none_or(|n| n == s.route.net), "{:?} claimed twice", p);
                }
            }
        }
    }

    #[test]
    fn evolve_is_reproducible_and_solutions_are_clean(which in 0usize..4, seed in 0u64..1000) {
        let problem = &problems()[which];
        let params = GaParams { generations: 4, population: 6, collect_all: true, ..GaParams::default() };
        let a = evolve(problem, &params, &GreedyFixer, seed);
        prop_assert_eq!(&a, &evolve(problem, &params, &GreedyFixer, seed));
        prop_assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        for sol in &a.solutions {
            let mut g = sol.overlay(&problem.base);
            apply_cuts(&mut g, &problem.tech.drc_rules);
            prop_assert!(check_drc(&g, &problem.tech.drc_rules).is_empty());
            prop_assert!(check_connectivity(&g).is_empty());
        }
    }
}

#[test]
fn unreachable_pair_has_no_route() {
    let mut g = LayoutGrid::empty(3, 5, common::net_names(1));
    for layer in Layer::ROUTING {
        for t in 0..3 {
            g.set(layer, t, 2, Cell::Blocked);
        }
    }
    let pair = TerminalPair {
        net: NetId(0),
        a: GridPoint::new(Layer::M1, 1, 0),
        b: GridPoint::new(Layer::M1, 1, 4),
    };
    let cost = TechParams::default().route_cost;
    assert!(maze_route(&g, &pair, &mut Rng64::seed_from_u64(0), &cost).is_none());
    assert!(common::oracle_route_cost(&g, pair.net, pair.a, pair.b, &cost).is_none());
}
