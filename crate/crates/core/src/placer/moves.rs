//! The annealer's move set: Flip / Swap / Move over runs of consecutive slots.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::placement::PlacementRep;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Flip,
    Swap,
    Move,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Pmos,
    Nmos,
    Pair,
    Pins,
}

/// The ten legal kind/target combinations.
pub const COMBINATIONS: [(MoveKind, Target); 10] = [
    (MoveKind::Flip, Target::Pmos),
    (MoveKind::Flip, Target::Nmos),
    (MoveKind::Flip, Target::Pair),
    (MoveKind::Swap, Target::Pmos),
    (MoveKind::Swap, Target::Nmos),
    (MoveKind::Swap, Target::Pair),
    (MoveKind::Swap, Target::Pins),
    (MoveKind::Move, Target::Pmos),
    (MoveKind::Move, Target::Nmos),
    (MoveKind::Move, Target::Pair),
];

/// `start` and `len` select slots `start..start + len` (0-based). For Swap,
/// `dest` is the start of the second run; for Move it is the insertion index
/// into the order once the run has been taken out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub target: Target,
    pub start: usize,
    pub len: usize,
    pub dest: usize,
}

/// Draws a move uniformly over the combinations, with a geometric run length
/// (p = 0.5) capped at half the slot count.
pub fn propose<R: Rng + ?Sized>(rng: &mut R, rep: &PlacementRep) -> Move {
    let n = rep.slots();
    let (kind, target) = COMBINATIONS[rng.gen_range(0..COMBINATIONS.len())];
    let cap = (n / 2).max(1);
    let mut len = 1;
    while len < cap && rng.gen_bool(0.5) {
        len += 1;
    }
    let start = rng.gen_range(0..=n - len);
    let dest = match kind {
        MoveKind::Flip => start,
        MoveKind::Swap | MoveKind::Move => rng.gen_range(0..=n - len),
    };
    Move {
        kind,
        target,
        start,
        len,
        dest,
    }
}

fn swap_runs<T>(v: &mut [T], a: usize, b: usize, len: usize) {
    if a == b {
        return;
    }
    for i in 0..len {
        v.swap(a + i, b + i);
    }
}

fn move_run<T>(v: &mut Vec<T>, start: usize, len: usize, dest: usize) {
    let run: Vec<T> = v.drain(start..start + len).collect();
    let at = dest.min(v.len());
    v.splice(at..at, run);
}

pub fn apply(rep: &PlacementRep, mv: &Move) -> PlacementRep {
    let mut out = rep.clone();
    apply_in_place(&mut out, mv);
    out
}

pub fn apply_in_place(rep: &mut PlacementRep, mv: &Move) {
    let rows: &[Target] = match mv.target {
        Target::Pair => &[Target::Pmos, Target::Nmos],
        Target::Pmos => &[Target::Pmos],
        Target::Nmos => &[Target::Nmos],
        Target::Pins => &[Target::Pins],
    };
    for row in rows {
        match mv.kind {
            MoveKind::Flip => {
                let (order, flips) = match row {
                    Target::Pmos => (&rep.order_p, &mut rep.flip_p),
                    Target::Nmos => (&rep.order_n, &mut rep.flip_n),
                    _ => continue,
                };
                for d in order[mv.start..mv.start + mv.len].iter().flatten() {
                    flips[*d] = !flips[*d];
                }
            }
            MoveKind::Swap => swap_runs(order_mut(rep, *row), mv.start, mv.dest, mv.len),
            MoveKind::Move => move_run(order_mut(rep, *row), mv.start, mv.len, mv.dest),
        }
    }
}

fn order_mut(rep: &mut PlacementRep, row: Target) -> &mut Vec<Option<usize>> {
    match row {
        Target::Pmos | Target::Pair => &mut rep.order_p,
        Target::Nmos => &mut rep.order_n,
        Target::Pins => &mut rep.pin_slots,
    }
}
