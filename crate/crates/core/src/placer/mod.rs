//! Simulated-annealing placement: pairing and ordering solved together.

pub mod anneal;
pub mod exhaustive;
pub mod moves;
pub mod score;

pub use anneal::{anneal, anneal_all, anneal_restarts, lam_target, AnnealOutcome, AnnealState};
pub use exhaustive::exhaustive_min_width;
pub use moves::{apply, propose, Move, MoveKind, Target};
pub use score::{congestion, score, score_breakdown, ScoreBreakdown};
