//! Standard-cell layout synthesis: placement, routing, DRC and repair.

pub mod dataset;
pub mod drc;
pub mod drcfix;
pub mod error;
pub mod fixtures;
pub mod ga;
pub mod grid;
pub mod io;
pub mod netlist;
pub mod nn;
pub mod pipeline;
pub mod placement;
pub mod placer;
pub mod protocol;
pub mod rng;
pub mod router;
pub mod routability;
pub mod tech;

pub use error::{CellError, EnvError, ModelFormatError, ParseError};
pub use netlist::{Device, DeviceKind, Netlist, Pin};
pub use tech::TechParams;

pub type RoutabilityNet = routability::RoutabilityModel<f32>;
pub type PolicyNet = drcfix::PolicyWeights<f32>;
