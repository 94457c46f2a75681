//! The step-based M1 repair environment.
//!
//! An action is a flat index `track * W + col` into the M1 grid. A legal
//! action extends the single net that touches the cell horizontally; metal is
//! never removed.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::drc::{run_drc, DrcMarker};
use crate::error::EnvError;
use crate::grid::{Cell, Layer, LayoutGrid, NetId};
use crate::tech::TechParams;

pub type Observation = Array3<f32>;

/// The net a legal action at `(track, col)` would extend.
pub fn action_net(grid: &LayoutGrid, track: usize, col: usize) -> Option<NetId> {
    if grid.get(Layer::M1, track, col) != Cell::Empty {
        return None;
    }
    let left = col.checked_sub(1).and_then(|c| grid.get(Layer::M1, track, c).net());
    let right = (col + 1 < grid.width)
        .then(|| grid.get(Layer::M1, track, col + 1).net())
        .flatten();
    match (left, right) {
        (Some(a), Some(b)) if a != b => None,
        (Some(a), _) | (None, Some(a)) => Some(a),
        (None, None) => None,
    }
}

/// Row-major legality of every M1 cell.
pub fn action_mask(grid: &LayoutGrid) -> Vec<bool> {
    (0..grid.height)
        .flat_map(|t| (0..grid.width).map(move |c| (t, c)))
        .map(|(t, c)| action_net(grid, t, c).is_some())
        .collect()
}

/// Legal actions as `(flat index, net)`, ascending.
pub fn legal_actions(grid: &LayoutGrid) -> Vec<(usize, NetId)> {
    let mut out = Vec::new();
    for t in 0..grid.height {
        for c in 0..grid.width {
            if let Some(n) = action_net(grid, t, c) {
                out.push((t * grid.width + c, n));
            }
        }
    }
    out
}

/// Planes: M1 occupancy, action mask, DRC marker positions.
pub fn observe(grid: &LayoutGrid, markers: &[DrcMarker]) -> Observation {
    let (h, w) = (grid.height, grid.width);
    let mut obs = Array3::zeros((3, h, w));
    let mask = action_mask(grid);
    for t in 0..h {
        for c in 0..w {
            if grid.get(Layer::M1, t, c).net().is_some() {
                obs[[0, t, c]] = 1.0;
            }
            if mask[t * w + c] {
                obs[[1, t, c]] = 1.0;
            }
        }
    }
    for m in markers {
        obs[[2, m.track, m.col]] = 1.0;
    }
    obs
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub drc_count: usize,
    /// Markers removed by this step (negative when markers were added).
    pub drc_delta: i64,
    pub illegal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Clone, Debug)]
struct Episode {
    grid: LayoutGrid,
    markers: Vec<DrcMarker>,
    done: bool,
    steps: usize,
    added: Vec<(usize, usize, NetId)>,
}

#[derive(Clone, Debug)]
pub struct DrcFixEnv {
    tech: TechParams,
    episode: Option<Episode>,
}

impl DrcFixEnv {
    pub fn new(tech: TechParams) -> Self {
        Self { tech, episode: None }
    }

    pub fn tech(&self) -> &TechParams {
        &self.tech
    }

    /// Starts an episode from a routed layout.
    pub fn reset(&mut self, grid: LayoutGrid) -> Observation {
        let markers = run_drc(&grid, &self.tech.drc_rules);
        let obs = observe(&grid, &markers);
        self.episode = Some(Episode {
            grid,
            markers,
            done: false,
            steps: 0,
            added: Vec::new(),
        });
        obs
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        let rules = self.tech.drc_rules;
        let (r_s, r_d) = (self.tech.reward_step, self.tech.reward_drc_coeff);
        let ep = self.episode.as_mut().ok_or(EnvError::NotReset)?;
        if ep.done {
            return Err(EnvError::EpisodeFinished);
        }
        let size = ep.grid.height * ep.grid.width;
        if action >= size {
            return Err(EnvError::ActionOutOfRange { action, size });
        }
        let (t, c) = (action / ep.grid.width, action % ep.grid.width);
        ep.steps += 1;
        let before = ep.markers.len();
        let Some(net) = action_net(&ep.grid, t, c) else {
            ep.done = true;
            return Ok(StepResult {
                obs: observe(&ep.grid, &ep.markers),
                reward: r_s,
                done: true,
                info: StepInfo {
                    drc_count: before,
                    drc_delta: 0,
                    illegal: true,
                },
            });
        };
        ep.grid.set(Layer::M1, t, c, Cell::Net(net));
        ep.added.push((t, c, net));
        ep.markers = run_drc(&ep.grid, &rules);
        let after = ep.markers.len();
        let delta = before as i64 - after as i64;
        ep.done = after == 0;
        Ok(StepResult {
            obs: observe(&ep.grid, &ep.markers),
            reward: r_s + r_d * delta as f64,
            done: ep.done,
            info: StepInfo {
                drc_count: after,
                drc_delta: delta,
                illegal: false,
            },
        })
    }

    pub fn grid(&self) -> Option<&LayoutGrid> {
        self.episode.as_ref().map(|e| &e.grid)
    }

    pub fn drc_count(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.markers.len())
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.done)
    }

    pub fn steps(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    /// M1 points added during the episode, in order.
    pub fn added(&self) -> &[(usize, usize, NetId)] {
        self.episode.as_ref().map_or(&[], |e| &e.added)
    }

    pub fn observation(&self) -> Option<Observation> {
        self.episode.as_ref().map(|e| observe(&e.grid, &e.markers))
    }
}
