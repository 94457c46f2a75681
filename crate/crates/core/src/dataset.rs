//! Routability training data: perturbed placements labelled by a short routing run.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drcfix::Fixer;
use crate::ga::GaParams;
use crate::netlist::Netlist;
use crate::pipeline::{route_placement, PipelineConfig, PipelineError};
use crate::placement::{realize_placement, slot_count, PlacementRep};
use crate::placer::{apply, propose};
use crate::rng;
use crate::routability::{extract_features, DatasetRecord, RoutabilityLabel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetParams {
    pub placements_per_cell: usize,
    /// Random moves applied to the initial placement, drawn from `0..=max_moves`.
    pub max_moves: usize,
    /// Reduced routing budget used for labelling.
    pub ga: GaParams,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            placements_per_cell: 20,
            max_moves: 40,
            ga: GaParams {
                generations: 3,
                population: 4,
                ..GaParams::default()
            },
        }
    }
}

/// Routes a placement with the configured budget and labels the result.
pub fn label_placement(
    netlist: &Netlist,
    rep: &PlacementRep,
    config: &PipelineConfig,
    fixer: &dyn Fixer,
    seed: u64,
) -> Result<RoutabilityLabel, PipelineError> {
    let (_, outcome, issues, _) = route_placement(netlist, rep, config, fixer, seed)?;
    Ok(if outcome.clean() && issues.is_empty() {
        RoutabilityLabel::Routable
    } else if outcome.best.fitness.unrouted == 0 {
        RoutabilityLabel::RoutableWithDrcs
    } else {
        RoutabilityLabel::NotRoutable
    })
}

/// A random walk of up to `max_moves` moves from the default placement.
pub fn sample_placement(netlist: &Netlist, config: &PipelineConfig, max_moves: usize, r: &mut rng::Rng) -> PlacementRep {
    let mut rep = PlacementRep::initial(netlist, slot_count(netlist, &config.tech));
    for _ in 0..r.gen_range(0..=max_moves) {
        rep = apply(&rep, &propose(r, &rep));
    }
    rep
}

/// Records for every cell, in cell order then sample order. Placements that
/// exceed the width bound are skipped.
pub fn generate_dataset(
    cells: &[Netlist],
    params: &DatasetParams,
    config: &PipelineConfig,
    fixer: &dyn Fixer,
    seed: u64,
) -> Vec<DatasetRecord> {
    let cfg = PipelineConfig {
        ga: params.ga.clone(),
        ..config.clone()
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..params.placements_per_cell).map(move |i| (c, i)))
        .collect();
    jobs.into_par_iter()
        .filter_map(|(c, i)| {
            let netlist = &cells[c];
            let cell_seed = rng::derive_indexed(seed, "dataset", c as u64);
            let mut r = rng::stream_indexed(cell_seed, "sample", i as u64);
            let rep = sample_placement(netlist, &cfg, params.max_moves, &mut r);
            let width = realize_placement(&rep, netlist, &cfg.tech).ok()?.width;
            if width > cfg.tech.max_width {
                return None;
            }
            let label = label_placement(netlist, &rep, &cfg, fixer, r.gen()).ok()?;
            Some(DatasetRecord {
                cell: netlist.name.clone(),
                features: extract_features(&rep, netlist, &cfg.tech).iter().map(|f| f.to_vec()).collect(),
                label: label.index(),
            })
        })
        .collect()
}

pub fn to_jsonl(records: &[DatasetRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}
