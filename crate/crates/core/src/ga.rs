//! Genetic routing: a population of routing solutions evolved by cut-line
//! crossover and region mutation, completed by the maze router and repaired
//! by a [`Fixer`] before scoring.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drc::{check_connectivity, drc_count};
use crate::drcfix::Fixer;
use crate::grid::{GridPoint, Layer, LayoutGrid};
use crate::rng;
use crate::router::{fits, mark_route, maze_route, terminal_pairs, Route, TerminalPair};
use crate::tech::TechParams;

/// Probability that the fitter of two tournament entrants is picked.
pub const TOURNAMENT_P: f64 = 0.75;

/// One routed piece: the route of a terminal pair, or a repair patch.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub pair: Option<usize>,
    pub route: Route,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutingSolution {
    /// Segments in insertion order.
    pub segments: Vec<Segment>,
}

impl RoutingSolution {
    pub fn routed_pairs(&self) -> BTreeSet<usize> {
        self.segments.iter().filter_map(|s| s.pair).collect()
    }

    pub fn unrouted(&self, pairs: usize) -> Vec<usize> {
        let routed = self.routed_pairs();
        (0..pairs).filter(|p| !routed.contains(p)).collect()
    }

    /// The base layout with every segment drawn in.
    pub fn overlay(&self, base: &LayoutGrid) -> LayoutGrid {
        let mut g = base.clone();
        for s in &self.segments {
            mark_route(&mut g, &s.route);
        }
        g
    }
}

/// Everything fixed during one routing run.
#[derive(Clone, Debug)]
pub struct RoutingProblem {
    pub base: LayoutGrid,
    pub pairs: Vec<TerminalPair>,
    pub tech: TechParams,
}

impl RoutingProblem {
    pub fn new(base: LayoutGrid, tech: TechParams) -> Self {
        let pairs = terminal_pairs(&base);
        Self { base, pairs, tech }
    }

    pub fn fixer_budget(&self) -> usize {
        2 * self.base.height * self.base.width
    }
}

/// Lexicographic: fewer unrouted pairs first, then fewer DRC and
/// connectivity problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fitness {
    pub unrouted: usize,
    pub drcs: usize,
}

impl Fitness {
    pub fn is_clean(&self) -> bool {
        self.unrouted == 0 && self.drcs == 0
    }
}

pub fn fitness(problem: &RoutingProblem, sol: &RoutingSolution) -> Fitness {
    let g = sol.overlay(&problem.base);
    Fitness {
        unrouted: sol.unrouted(problem.pairs.len()).len(),
        drcs: drc_count(&g, &problem.tech.drc_rules) + check_connectivity(&g).len(),
    }
}

/// Routes every unrouted pair in random order on top of the existing segments.
pub fn complete<R: Rng + ?Sized>(problem: &RoutingProblem, sol: &RoutingSolution, rng: &mut R) -> RoutingSolution {
    let mut out = sol.clone();
    let mut g = sol.overlay(&problem.base);
    let mut todo = sol.unrouted(problem.pairs.len());
    todo.shuffle(rng);
    for p in todo {
        if let Some(route) = maze_route(&g, &problem.pairs[p], rng, &problem.tech.route_cost) {
            mark_route(&mut g, &route);
            out.segments.push(Segment { pair: Some(p), route });
        }
    }
    out
}

/// A full maze routing in random pair order.
pub fn random_routing<R: Rng + ?Sized>(problem: &RoutingProblem, rng: &mut R) -> RoutingSolution {
    complete(problem, &RoutingSolution::default(), rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutLine {
    /// Segments with every column `< x` are left of the cut.
    Vertical(usize),
    /// Segments with every track `< y` are above the cut.
    Horizontal(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    First,
    Second,
    Straddle,
}

fn side(points: &[GridPoint], cut: CutLine) -> Side {
    let coord = |p: &GridPoint| match cut {
        CutLine::Vertical(_) => p.col,
        CutLine::Horizontal(_) => p.track,
    };
    let at = match cut {
        CutLine::Vertical(x) | CutLine::Horizontal(x) => x,
    };
    if points.iter().all(|p| coord(p) < at) {
        Side::First
    } else if points.iter().all(|p| coord(p) >= at) {
        Side::Second
    } else {
        Side::Straddle
    }
}

/// Inserts segments in order, dropping any that would touch another net or
/// repeat an already routed pair.
fn assemble<'a>(base: &LayoutGrid, parts: impl Iterator<Item = &'a Segment>) -> RoutingSolution {
    let mut g = base.clone();
    let mut routed = BTreeSet::new();
    let mut out = RoutingSolution::default();
    for s in parts {
        if s.pair.is_some_and(|p| routed.contains(&p)) || !fits(&g, &s.route) {
            continue;
        }
        mark_route(&mut g, &s.route);
        if let Some(p) = s.pair {
            routed.insert(p);
        }
        out.segments.push(s.clone());
    }
    out
}

/// Child 1 takes `mom`'s segments left of (above) the cut and `dad`'s right
/// of (below) it; child 2 the reverse. Straddling segments are dropped.
pub fn crossover_at(
    problem: &RoutingProblem,
    dad: &RoutingSolution,
    mom: &RoutingSolution,
    cut: CutLine,
) -> (RoutingSolution, RoutingSolution) {
    let pick = |sol: &'_ RoutingSolution, want: Side| -> Vec<Segment> {
        sol.segments
            .iter()
            .filter(|s| side(&s.route.points, cut) == want)
            .cloned()
            .collect()
    };
    let c1: Vec<Segment> = pick(mom, Side::First).into_iter().chain(pick(dad, Side::Second)).collect();
    let c2: Vec<Segment> = pick(dad, Side::First).into_iter().chain(pick(mom, Side::Second)).collect();
    (assemble(&problem.base, c1.iter()), assemble(&problem.base, c2.iter()))
}

pub fn random_cut<R: Rng + ?Sized>(grid: &LayoutGrid, rng: &mut R) -> CutLine {
    if rng.gen_bool(0.5) {
        CutLine::Vertical(rng.gen_range(0..=grid.width))
    } else {
        CutLine::Horizontal(rng.gen_range(0..=grid.height))
    }
}

pub fn crossover<R: Rng + ?Sized>(
    problem: &RoutingProblem,
    dad: &RoutingSolution,
    mom: &RoutingSolution,
    rng: &mut R,
) -> (RoutingSolution, RoutingSolution) {
    let cut = random_cut(&problem.base, rng);
    crossover_at(problem, dad, mom, cut)
}

/// Inclusive rectangle of tracks and columns, on all layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub t0: usize,
    pub c0: usize,
    pub t1: usize,
    pub c1: usize,
}

impl Region {
    pub fn contains(&self, p: &GridPoint) -> bool {
        (self.t0..=self.t1).contains(&p.track) && (self.c0..=self.c1).contains(&p.col)
    }

    pub fn random<R: Rng + ?Sized>(grid: &LayoutGrid, rng: &mut R) -> Self {
        let h = rng.gen_range(1..=(grid.height / 2).max(1));
        let w = rng.gen_range(1..=(grid.width / 2).max(1));
        let t0 = rng.gen_range(0..=grid.height - h);
        let c0 = rng.gen_range(0..=grid.width - w);
        Self {
            t0,
            c0,
            t1: t0 + h - 1,
            c1: c0 + w - 1,
        }
    }
}

/// Removes every segment with a point inside `region`.
pub fn mutate_region(sol: &RoutingSolution, region: &Region) -> RoutingSolution {
    RoutingSolution {
        segments: sol
            .segments
            .iter()
            .filter(|s| !s.route.points.iter().any(|p| region.contains(p)))
            .cloned()
            .collect(),
    }
}

pub fn mutate<R: Rng + ?Sized>(problem: &RoutingProblem, sol: &RoutingSolution, rng: &mut R) -> RoutingSolution {
    mutate_region(sol, &Region::random(&problem.base, rng))
}

/// Two size-2 tournaments; returns population indices `(dad, mom)`.
pub fn select_parents<R: Rng + ?Sized>(fitness: &[Fitness], rng: &mut R) -> (usize, usize) {
    let mut pick = || {
        if fitness.len() == 1 {
            return 0;
        }
        let i = rng.gen_range(0..fitness.len());
        let mut j = rng.gen_range(0..fitness.len() - 1);
        if j >= i {
            j += 1;
        }
        let (better, worse) = match fitness[i].cmp(&fitness[j]) {
            std::cmp::Ordering::Less => (i, j),
            std::cmp::Ordering::Greater => (j, i),
            std::cmp::Ordering::Equal => return if rng.gen_bool(0.5) { i } else { j },
        };
        if rng.gen_bool(TOURNAMENT_P) {
            better
        } else {
            worse
        }
    };
    let dad = pick();
    let mom = pick();
    (dad, mom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub generations: usize,
    pub population: usize,
    /// Finish the generation that produced the first clean child and return
    /// every clean child of it.
    pub collect_all: bool,
    /// Fixer actions per child; `None` means `2 * H * W`.
    pub fixer_budget: Option<usize>,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            generations: 10,
            population: 8,
            collect_all: false,
            fixer_budget: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Individual {
    pub solution: RoutingSolution,
    pub fitness: Fitness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    /// Clean (fully routed, zero DRC) solutions; empty when none was found.
    pub solutions: Vec<RoutingSolution>,
    pub best: Individual,
    /// Best fitness of the population after initialisation and after each generation.
    pub trace: Vec<Fitness>,
    pub generations_run: usize,
}

impl GaOutcome {
    pub fn clean(&self) -> bool {
        !self.solutions.is_empty()
    }
}

/// Child `index` of a generation: selection, crossover, mutation, completion and repair.
pub fn make_child(
    problem: &RoutingProblem,
    population: &[Individual],
    fixer: &dyn Fixer,
    budget: usize,
    rng: &mut rng::Rng,
) -> Individual {
    let fit: Vec<Fitness> = population.iter().map(|i| i.fitness).collect();
    let (dad, mom) = select_parents(&fit, rng);
    let (c1, c2) = crossover(problem, &population[dad].solution, &population[mom].solution, rng);
    let child = if rng.gen_bool(0.5) { c1 } else { c2 };
    let child = mutate(problem, &child, rng);
    let mut child = complete(problem, &child, rng);
    let overlay = child.overlay(&problem.base);
    let fixed = fixer.fix(&overlay, &problem.tech, budget);
    for (t, c, net) in fixed.added {
        child.segments.push(Segment {
            pair: None,
            route: Route {
                net,
                points: vec![GridPoint::new(Layer::M1, t, c)],
            },
        });
    }
    let fitness = fitness(problem, &child);
    Individual { solution: child, fitness }
}

/// Runs the genetic routing flow. Children of a generation are built in
/// parallel from per-child random streams, so results depend only on `seed`.
pub fn evolve(problem: &RoutingProblem, params: &GaParams, fixer: &dyn Fixer, seed: u64) -> GaOutcome {
    let k = params.population.max(1);
    let budget = params.fixer_budget.unwrap_or_else(|| problem.fixer_budget());
    let mut population: Vec<Individual> = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream_indexed(seed, "ga-init", i);
            let solution = random_routing(problem, &mut r);
            let fitness = fitness(problem, &solution);
            Individual { solution, fitness }
        })
        .collect();
    population.sort_by_key(|i| i.fitness);
    let mut trace = vec![population[0].fitness];

    for g in 0..params.generations {
        let gen_seed = rng::derive_indexed(seed, "ga-gen", g as u64);
        let children: Vec<Individual> = (0..k as u64)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream_indexed(gen_seed, "child", i);
                make_child(problem, &population, fixer, budget, &mut r)
            })
            .collect();
        let clean: Vec<&Individual> = children.iter().filter(|c| c.fitness.is_clean()).collect();
        if !clean.is_empty() {
            let take = if params.collect_all { clean.len() } else { 1 };
            let solutions: Vec<RoutingSolution> = clean.iter().take(take).map(|c| c.solution.clone()).collect();
            let best = clean[0].clone();
            trace.push(best.fitness);
            return GaOutcome {
                solutions,
                best,
                trace,
                generations_run: g + 1,
            };
        }
        // stable: parents stay ahead of equally fit children
        population.extend(children);
        population.sort_by_key(|i| i.fitness);
        population.truncate(k);
        trace.push(population[0].fitness);
    }
    GaOutcome {
        solutions: Vec::new(),
        best: population[0].clone(),
        trace,
        generations_run: params.generations,
    }
}
