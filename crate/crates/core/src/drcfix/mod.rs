//! M1 DRC repair: the environment, the greedy baseline and policy inference.

pub mod env;
pub mod greedy;
pub mod policy;

use ndarray::Array3;

use crate::grid::LayoutGrid;
use crate::nn::{self, Scalar};
use crate::tech::TechParams;

pub use env::{action_mask, action_net, legal_actions, observe, DrcFixEnv, Observation, StepInfo, StepResult};
pub use greedy::{greedy_fix, FixOutcome};
pub use policy::{PolicyOutput, PolicyWeights};

/// Something that repairs a routed layout by adding M1 points.
pub trait Fixer: Sync {
    fn fix(&self, grid: &LayoutGrid, tech: &TechParams, budget: usize) -> FixOutcome;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyFixer;

impl Fixer for GreedyFixer {
    fn fix(&self, grid: &LayoutGrid, tech: &TechParams, budget: usize) -> FixOutcome {
        greedy_fix(grid, tech, budget)
    }
}

/// Leaves the layout as it is.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoFixer;

impl Fixer for NoFixer {
    fn fix(&self, grid: &LayoutGrid, tech: &TechParams, _budget: usize) -> FixOutcome {
        let remaining = crate::drc::drc_count(grid, &tech.drc_rules);
        FixOutcome {
            grid: grid.clone(),
            added: Vec::new(),
            remaining,
            trace: vec![remaining],
        }
    }
}

/// Plays the most likely legal action of a policy until the episode ends.
#[derive(Clone, Debug)]
pub struct PolicyFixer<T: Scalar> {
    pub weights: PolicyWeights<T>,
}

impl<T: Scalar> Fixer for PolicyFixer<T> {
    fn fix(&self, grid: &LayoutGrid, tech: &TechParams, budget: usize) -> FixOutcome {
        let mut env = DrcFixEnv::new(tech.clone());
        let mut obs = env.reset(grid.clone());
        let mut trace = vec![env.drc_count().unwrap_or(0)];
        while trace.last() != Some(&0) && env.steps() < budget {
            let input: Array3<T> = obs.mapv(|v| nn::cast(f64::from(v)));
            let Ok(out) = self.weights.forward(&input) else { break };
            let Some(action) = out.argmax() else { break };
            let Ok(step) = env.step(action) else { break };
            obs = step.obs;
            trace.push(step.info.drc_count);
            if step.done {
                break;
            }
        }
        FixOutcome {
            grid: env.grid().cloned().unwrap_or_else(|| grid.clone()),
            added: env.added().to_vec(),
            remaining: *trace.last().unwrap(),
            trace,
        }
    }
}
