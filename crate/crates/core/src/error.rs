use thiserror::Error;

/// Netlist ingestion failure, located at a 1-based source line when known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),
    #[error("invalid placement representation: {0}")]
    InvalidRepresentation(String),
    #[error("invalid technology parameters: {0}")]
    InvalidTech(String),
    #[error("cell width {width} exceeds the maximum of {max} poly columns")]
    WidthOverflow { width: usize, max: usize },
    #[error("terminal conflict at track {track}, column {col}: {message}")]
    TerminalConflict {
        track: usize,
        col: usize,
        message: String,
    },
    #[error("no free pin access point for pin {0}")]
    PinAccess(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelFormatError {
    #[error("unsupported weight file format version {0}")]
    Version(u32),
    #[error("missing tensor {0}")]
    Missing(String),
    #[error("unexpected tensor {0}")]
    Unexpected(String),
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor {name}: data length {len} does not match shape {shape:?}")]
    DataLength {
        name: String,
        len: usize,
        shape: Vec<usize>,
    },
    #[error("input has {found} channels, model expects {expected}")]
    InputChannels { expected: usize, found: usize },
    #[error("malformed weight file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("episode is finished; call reset before stepping again")]
    EpisodeFinished,
    #[error("environment has not been reset")]
    NotReset,
    #[error("action {action} out of range for {size} cells")]
    ActionOutOfRange { action: usize, size: usize },
}
