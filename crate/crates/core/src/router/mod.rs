//! Terminal-pair decomposition and maze routing.

pub mod maze;
pub mod pairs;

pub use maze::{adjacent, fits, mark_route, maze_route, Route, TerminalPair};
pub use pairs::{mst_pairs, terminal_pairs};
