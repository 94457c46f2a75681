//! The end-to-end flow: place, build the grid, route with repair, check.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drc::{apply_cuts, check_connectivity, drc_count, ConnectivityIssue, IssueKind};
use crate::drcfix::Fixer;
use crate::ga::{evolve, GaOutcome, GaParams, RoutingProblem};
use crate::grid::{build_grid, LayoutGrid};
use crate::netlist::Netlist;
use crate::placement::{realize_placement, PlacementRep};
use crate::placer::anneal_all;
use crate::error::CellError;
use crate::io::FORMAT_VERSION;
use crate::rng;
use crate::routability::RoutabilityPredictor;
use crate::tech::TechParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tech: TechParams,
    pub place_steps: usize,
    pub place_restarts: usize,
    /// Distinct placements, best first, tried until one routes clean.
    pub placement_candidates: usize,
    pub ga: GaParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tech: TechParams::default(),
            place_steps: 20_000,
            place_restarts: 4,
            placement_candidates: 4,
            ga: GaParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Validate,
    Place,
    Grid,
    Route,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Place => "place",
            Stage::Grid => "grid",
            Stage::Route => "route",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub source: CellError,
}

fn at(stage: Stage) -> impl FnOnce(CellError) -> PipelineError {
    move |source| PipelineError { stage, source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub cell: String,
    pub width: usize,
    pub drc_count: usize,
    pub opens: usize,
    pub shorts: usize,
    pub runtime_ms: u64,
    pub solutions_found: usize,
}

impl Report {
    pub fn clean(&self) -> bool {
        self.drc_count == 0 && self.opens == 0 && self.shorts == 0
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: Report,
    pub placement: PlacementRep,
    /// Routed layout of the best solution, with cuts applied.
    pub layout: LayoutGrid,
    pub routing: GaOutcome,
    pub issues: Vec<ConnectivityIssue>,
}

/// Distinct feasible placements from independent annealing restarts, best
/// score first. Restarts use the `place` stream of `seed`.
pub fn place_candidates(
    netlist: &Netlist,
    config: &PipelineConfig,
    seed: u64,
    predictor: Option<&(dyn RoutabilityPredictor + Sync)>,
) -> Result<Vec<PlacementRep>, PipelineError> {
    config.tech.validate().map_err(at(Stage::Validate))?;
    netlist.validate(config.tech.max_fins).map_err(at(Stage::Validate))?;
    let mut outcomes = anneal_all(
        netlist,
        &config.tech,
        config.place_steps,
        config.place_restarts,
        rng::derive(seed, "place"),
        predictor,
    );
    // stable: equal scores keep restart order
    outcomes.sort_by(|a, b| a.best_score.total_cmp(&b.best_score));
    let mut reps: Vec<PlacementRep> = Vec::new();
    let mut first_err = None;
    for o in outcomes {
        if reps.contains(&o.best) {
            continue;
        }
        match realize_placement(&o.best, netlist, &config.tech) {
            Ok(r) if r.width <= config.tech.max_width => reps.push(o.best),
            Ok(r) => {
                first_err.get_or_insert(CellError::WidthOverflow {
                    width: r.width,
                    max: config.tech.max_width,
                });
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (reps.is_empty(), first_err) {
        (true, Some(e)) => Err(at(Stage::Place)(e)),
        _ => Ok(reps),
    }
}

/// The best placement of [`place_candidates`].
pub fn place(
    netlist: &Netlist,
    config: &PipelineConfig,
    seed: u64,
    predictor: Option<&(dyn RoutabilityPredictor + Sync)>,
) -> Result<PlacementRep, PipelineError> {
    Ok(place_candidates(netlist, config, seed, predictor)?.remove(0))
}

/// The unrouted grid of a placement.
pub fn placed_grid(netlist: &Netlist, rep: &PlacementRep, tech: &TechParams) -> Result<LayoutGrid, PipelineError> {
    let realized = realize_placement(rep, netlist, tech).map_err(at(Stage::Place))?;
    build_grid(&realized, netlist, tech).map_err(at(Stage::Grid))
}

/// Routes and checks a placement; `seed` drives the genetic router directly.
pub fn route_placement(
    netlist: &Netlist,
    rep: &PlacementRep,
    config: &PipelineConfig,
    fixer: &dyn Fixer,
    seed: u64,
) -> Result<(LayoutGrid, GaOutcome, Vec<ConnectivityIssue>, usize), PipelineError> {
    let grid = placed_grid(netlist, rep, &config.tech)?;
    let width = realize_placement(rep, netlist, &config.tech).map_err(at(Stage::Place))?.width;
    let problem = RoutingProblem::new(grid, config.tech.clone());
    let outcome = evolve(&problem, &config.ga, fixer, seed);
    let mut layout = outcome.best.solution.overlay(&problem.base);
    apply_cuts(&mut layout, &config.tech.drc_rules);
    let issues = check_connectivity(&layout);
    Ok((layout, outcome, issues, width))
}

/// Places, then routes candidate placements in order until one is clean.
/// When none is, the run whose router reached the best fitness is reported.
pub fn run_pipeline(
    netlist: &Netlist,
    config: &PipelineConfig,
    fixer: &dyn Fixer,
    seed: u64,
    predictor: Option<&(dyn RoutabilityPredictor + Sync)>,
) -> Result<PipelineRun, PipelineError> {
    let start = Instant::now();
    let candidates = place_candidates(netlist, config, seed, predictor)?;
    let mut best: Option<PipelineRun> = None;
    for (k, placement) in candidates.into_iter().take(config.placement_candidates.max(1)).enumerate() {
        let route_seed = rng::derive_indexed(seed, "route", k as u64);
        let (layout, routing, issues, width) = route_placement(netlist, &placement, config, fixer, route_seed)?;
        let opens = issues.iter().filter(|i| i.kind == IssueKind::Open).count();
        let report = Report {
            format_version: FORMAT_VERSION,
            cell: netlist.name.clone(),
            width,
            drc_count: drc_count(&layout, &config.tech.drc_rules),
            opens,
            shorts: issues.len() - opens,
            runtime_ms: 0,
            solutions_found: routing.solutions.len(),
        };
        let run = PipelineRun {
            report,
            placement,
            layout,
            routing,
            issues,
        };
        let clean = run.report.clean();
        if best
            .as_ref()
            .is_none_or(|b| run.routing.best.fitness < b.routing.best.fitness)
        {
            best = Some(run);
        }
        if clean {
            break;
        }
    }
    let mut run = best.expect("at least one placement candidate");
    run.report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(run)
}
