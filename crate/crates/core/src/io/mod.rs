//! Textual formats: netlists, the layout script, SVG and configuration.

pub mod netlist;
pub mod script;
pub mod svg;

pub use netlist::{netlist_to_json, parse_netlist, NetlistFormat};
pub use script::{export_script, import_script};
pub use svg::export_svg;

use crate::error::CellError;
use crate::pipeline::PipelineConfig;

/// Version stamped on every JSON document and script this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Reads a configuration document; missing fields take their defaults.
pub fn load_config(text: &str) -> Result<PipelineConfig, CellError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CellError::InvalidTech(e.to_string()))?;
    if let Some(v) = value.get("format_version") {
        if v.as_u64() != Some(FORMAT_VERSION as u64) {
            return Err(CellError::InvalidTech(format!("unsupported format_version {v}")));
        }
    }
    let config: PipelineConfig =
        serde_json::from_str(text).map_err(|e| CellError::InvalidTech(e.to_string()))?;
    config.tech.validate()?;
    Ok(config)
}
