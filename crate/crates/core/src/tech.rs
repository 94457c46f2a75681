//! Technology parameters and the synthetic M1 rule set.

use serde::{Deserialize, Serialize};

use crate::error::CellError;

/// Synthetic cut-metal rule deck applied to the M1 layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrcRuleSet {
    /// Minimum column distance between two cuts on the same track.
    pub min_cut_spacing: usize,
    /// Cuts on adjacent tracks conflict when their columns differ by less than this.
    pub cut_adjacency_window: usize,
    /// Minimum length of a same-net M1 run.
    pub min_segment_len: usize,
}

impl Default for DrcRuleSet {
    fn default() -> Self {
        Self {
            min_cut_spacing: 3,
            cut_adjacency_window: 1,
            min_segment_len: 2,
        }
    }
}

impl DrcRuleSet {
    /// Chebyshev radius around an added M1 point outside of which markers cannot change.
    pub fn locality_radius(&self) -> usize {
        self.min_cut_spacing + self.cut_adjacency_window
    }

    pub fn validate(&self) -> Result<(), CellError> {
        if self.min_cut_spacing == 0 || self.cut_adjacency_window == 0 || self.min_segment_len == 0
        {
            return Err(CellError::InvalidTech("all DRC rule values must be >= 1".into()));
        }
        Ok(())
    }
}

/// Weights of the placement score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreWeights {
    pub w_width: f64,
    pub w_cong: f64,
    pub w_viol: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            w_width: 1.0,
            w_cong: 0.25,
            w_viol: 4.0,
        }
    }
}

impl ScoreWeights {
    pub fn new(w_width: f64, w_cong: f64, w_viol: f64) -> Self {
        Self {
            w_width,
            w_cong,
            w_viol,
        }
    }
}

/// Penalties added to the placement score from a routability prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoutabilityPenalty {
    pub soft: f64,
    pub hard: f64,
}

impl Default for RoutabilityPenalty {
    fn default() -> Self {
        Self {
            soft: 25.0,
            hard: 1000.0,
        }
    }
}

/// Maze-router step costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouteCost {
    pub step: u32,
    pub via: u32,
}

impl Default for RouteCost {
    fn default() -> Self {
        Self { step: 1, via: 2 }
    }
}

/// Power rail nets. A rail is drawn only when its net exists in the netlist.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerRails {
    pub top: String,
    pub bottom: String,
}

impl Default for PowerRails {
    fn default() -> Self {
        Self {
            top: "VDD".into(),
            bottom: "VSS".into(),
        }
    }
}

impl PowerRails {
    pub fn is_power(&self, net: &str) -> bool {
        net == self.top || net == self.bottom
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechParams {
    /// Dummy polys between neighbours that do not share diffusion.
    pub k_s: usize,
    /// Dummy polys between neighbours with different fin counts.
    pub k_f: usize,
    /// Routing tracks per cell (H of the M1 grid).
    pub grid_height: usize,
    /// Upper bound on poly columns.
    pub max_width: usize,
    pub max_fins: u32,
    /// Per-step reward of the DRC fixing environment (negative).
    pub reward_step: f64,
    /// Reward per removed DRC marker.
    pub reward_drc_coeff: f64,
    pub score_weights: ScoreWeights,
    /// Blend between max and mean crossings in the congestion estimate.
    pub congestion_alpha: f64,
    pub routability_penalty: RoutabilityPenalty,
    pub drc_rules: DrcRuleSet,
    pub power: PowerRails,
    pub route_cost: RouteCost,
    /// Extra placement slots are `ceil(max(N_P, N_N) / slack_divisor)`.
    pub slack_divisor: usize,
}

impl Default for TechParams {
    fn default() -> Self {
        Self {
            k_s: 1,
            k_f: 1,
            grid_height: 10,
            max_width: 32,
            max_fins: 4,
            reward_step: -0.1,
            reward_drc_coeff: 1.0,
            score_weights: ScoreWeights::default(),
            congestion_alpha: 0.5,
            routability_penalty: RoutabilityPenalty::default(),
            drc_rules: DrcRuleSet::default(),
            power: PowerRails::default(),
            route_cost: RouteCost::default(),
            slack_divisor: 4,
        }
    }
}

impl TechParams {
    pub fn validate(&self) -> Result<(), CellError> {
        let bad = |m: &str| Err(CellError::InvalidTech(m.to_string()));
        if self.grid_height < 6 {
            return bad("grid_height must be >= 6 (rails, diffusion rows and gate contacts)");
        }
        if self.k_s > 4 || self.k_f > 4 {
            return bad("k_s and k_f must be <= 4");
        }
        if self.max_width == 0 {
            return bad("max_width must be >= 1");
        }
        if !self.reward_step.is_finite() || self.reward_step >= 0.0 {
            return bad("reward_step must be a finite negative number");
        }
        if !self.reward_drc_coeff.is_finite() || self.reward_drc_coeff <= 0.0 {
            return bad("reward_drc_coeff must be a finite positive number");
        }
        let w = self.score_weights;
        for x in [w.w_width, w.w_cong, w.w_viol] {
            if !x.is_finite() || x < 0.0 {
                return bad("score weights must be finite and non-negative");
            }
        }
        if !(0.0..=1.0).contains(&self.congestion_alpha) {
            return bad("congestion_alpha must lie in [0, 1]");
        }
        if self.slack_divisor == 0 {
            return bad("slack_divisor must be >= 1");
        }
        if self.route_cost.step == 0 || self.route_cost.via == 0 {
            return bad("route step and via costs must be >= 1");
        }
        self.drc_rules.validate()
    }

    /// Routing columns of the M1 grid for a cell `width` poly columns wide.
    pub fn m1_width(width: usize) -> usize {
        2 * width + 2
    }

    pub fn from_json(text: &str) -> Result<Self, CellError> {
        let tech: TechParams =
            serde_json::from_str(text).map_err(|e| CellError::InvalidTech(e.to_string()))?;
        tech.validate()?;
        Ok(tech)
    }
}
