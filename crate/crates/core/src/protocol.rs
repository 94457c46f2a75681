//! Line-delimited JSON server for the DRC repair environment.
//!
//! Requests, one per line:
//! `{"cmd":"reset","cell":<fixture name | netlist object>,"seed":<u64>}`,
//! `{"cmd":"step","action":<int>}`, `{"cmd":"close"}`.
//! Reset and step answer `{"obs":[3][H][W],"reward":..,"done":..,"info":{..}}`;
//! failures answer `{"error":"..."}` and leave the session usable.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::drcfix::{DrcFixEnv, Observation};
use crate::fixtures;
use crate::ga::{random_routing, RoutingProblem};
use crate::grid::LayoutGrid;
use crate::io::FORMAT_VERSION;
use crate::netlist::Netlist;
use crate::pipeline::{place, placed_grid, PipelineConfig};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CellRef {
    Name(String),
    Netlist(Netlist),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Request {
    Reset {
        cell: CellRef,
        #[serde(default)]
        seed: u64,
    },
    Step {
        action: usize,
    },
    Close,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub obs: Vec<Vec<Vec<f32>>>,
    pub reward: f64,
    pub done: bool,
    pub info: Value,
}

pub fn obs_to_nested(obs: &Observation) -> Vec<Vec<Vec<f32>>> {
    obs.outer_iter()
        .map(|plane| plane.outer_iter().map(|row| row.to_vec()).collect())
        .collect()
}

/// One environment session. Placements are computed once per cell (with
/// `placement_seed`); every reset draws a fresh random routing from its seed.
pub struct EnvSession {
    config: PipelineConfig,
    placement_seed: u64,
    env: DrcFixEnv,
    bases: HashMap<String, LayoutGrid>,
}

impl EnvSession {
    pub fn new(config: PipelineConfig, placement_seed: u64) -> Self {
        let env = DrcFixEnv::new(config.tech.clone());
        Self {
            config,
            placement_seed,
            env,
            bases: HashMap::new(),
        }
    }

    fn base(&mut self, cell: &CellRef) -> Result<LayoutGrid, String> {
        let netlist = match cell {
            CellRef::Name(n) => fixtures::by_name(n).ok_or_else(|| format!("unknown fixture cell {n}"))?,
            CellRef::Netlist(n) => n.clone(),
        };
        let key = serde_json::to_string(&netlist).expect("netlist serializes");
        if let Some(g) = self.bases.get(&key) {
            return Ok(g.clone());
        }
        let rep = place(&netlist, &self.config, self.placement_seed, None).map_err(|e| e.to_string())?;
        let grid = placed_grid(&netlist, &rep, &self.config.tech).map_err(|e| e.to_string())?;
        self.bases.insert(key, grid.clone());
        Ok(grid)
    }

    /// Starts an episode on a randomly routed layout of `cell`.
    pub fn reset(&mut self, cell: &CellRef, seed: u64) -> Result<Response, String> {
        let base = self.base(cell)?;
        let name = match cell {
            CellRef::Name(n) => n.clone(),
            CellRef::Netlist(n) => n.name.clone(),
        };
        let problem = RoutingProblem::new(base, self.config.tech.clone());
        let mut r = rng::stream(seed, "env-reset");
        let routed = random_routing(&problem, &mut r).overlay(&problem.base);
        let obs = self.env.reset(routed);
        Ok(Response {
            obs: obs_to_nested(&obs),
            reward: 0.0,
            done: false,
            info: json!({
                "format_version": FORMAT_VERSION,
                "cell": name,
                "height": obs.shape()[1],
                "width": obs.shape()[2],
                "drc_count": self.env.drc_count().unwrap_or(0),
            }),
        })
    }

    pub fn step(&mut self, action: usize) -> Result<Response, String> {
        let r = self.env.step(action).map_err(|e| e.to_string())?;
        Ok(Response {
            obs: obs_to_nested(&r.obs),
            reward: r.reward,
            done: r.done,
            info: serde_json::to_value(r.info).expect("info serializes"),
        })
    }

    /// Handles one request line; `None` means the session is closed.
    pub fn handle(&mut self, line: &str) -> Option<Value> {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Some(json!({ "error": format!("bad request: {e}") })),
        };
        let out = match req {
            Request::Reset { cell, seed } => self.reset(&cell, seed),
            Request::Step { action } => self.step(action),
            Request::Close => return None,
        };
        Some(match out {
            Ok(resp) => serde_json::to_value(resp).expect("response serializes"),
            Err(e) => json!({ "error": e }),
        })
    }
}

/// Serves requests until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, session: &mut EnvSession) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match session.handle(&line) {
            Some(v) => {
                serde_json::to_writer(&mut output, &v)?;
                output.write_all(b"\n")?;
                output.flush()?;
            }
            None => {
                output.write_all(b"{\"closed\":true}\n")?;
                output.flush()?;
                break;
            }
        }
    }
    Ok(())
}
