//! One-step-lookahead greedy repair with a short plateau beam.

use serde::{Deserialize, Serialize};

use super::env::legal_actions;
use crate::drc::{drc_count, run_drc};
use crate::grid::{Cell, Layer, LayoutGrid, NetId};
use crate::tech::TechParams;

/// Plateau moves tried by the two-step search when no single move helps.
pub const BEAM_WIDTH: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct FixOutcome {
    pub grid: LayoutGrid,
    /// Added M1 points `(track, col, net)` in order.
    pub added: Vec<(usize, usize, NetId)>,
    pub remaining: usize,
    /// DRC count before the first action and after every action.
    pub trace: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lookahead {
    pub action: usize,
    pub net: NetId,
    pub delta: i64,
}

/// ΔDRC of every legal action from the current grid (removed markers).
pub fn lookahead(grid: &mut LayoutGrid, tech: &TechParams) -> Vec<Lookahead> {
    let base = drc_count(grid, &tech.drc_rules) as i64;
    let w = grid.width;
    legal_actions(grid)
        .into_iter()
        .map(|(action, net)| {
            let (t, c) = (action / w, action % w);
            grid.set(Layer::M1, t, c, Cell::Net(net));
            let after = drc_count(grid, &tech.drc_rules) as i64;
            grid.set(Layer::M1, t, c, Cell::Empty);
            Lookahead {
                action,
                net,
                delta: base - after,
            }
        })
        .collect()
}

fn apply(grid: &mut LayoutGrid, la: &Lookahead, added: &mut Vec<(usize, usize, NetId)>) {
    let (t, c) = (la.action / grid.width, la.action % grid.width);
    grid.set(Layer::M1, t, c, Cell::Net(la.net));
    added.push((t, c, la.net));
}

/// Adds M1 points until the layout is DRC-clean, `budget` actions are spent,
/// or neither one move nor a plateau move followed by one more reduces the
/// marker count. The count never increases along the way.
pub fn greedy_fix(grid: &LayoutGrid, tech: &TechParams, budget: usize) -> FixOutcome {
    let mut g = grid.clone();
    let mut added = Vec::new();
    let mut count = drc_count(&g, &tech.drc_rules);
    let mut trace = vec![count];
    while count > 0 && added.len() < budget {
        let options = lookahead(&mut g, tech);
        // max delta, lowest action index on ties
        let best = options
            .iter()
            .copied()
            .max_by(|a, b| a.delta.cmp(&b.delta).then(b.action.cmp(&a.action)));
        if let Some(best) = best.filter(|b| b.delta > 0) {
            apply(&mut g, &best, &mut added);
            count -= best.delta as usize;
            trace.push(count);
            continue;
        }
        if added.len() + 2 > budget {
            break;
        }
        // plateau moves closest to a marker first
        let markers = run_drc(&g, &tech.drc_rules);
        let w = g.width;
        let near = |a: usize| {
            let (t, c) = (a / w, a % w);
            markers
                .iter()
                .map(|m| m.track.abs_diff(t).max(m.col.abs_diff(c)))
                .min()
                .unwrap_or(usize::MAX)
        };
        let mut plateau: Vec<Lookahead> = options.iter().copied().filter(|o| o.delta == 0).collect();
        plateau.sort_by_key(|o| (near(o.action), o.action));
        let mut pick: Option<(i64, Lookahead, Lookahead)> = None;
        for first in plateau.iter().take(BEAM_WIDTH) {
            let mut scratch = Vec::new();
            apply(&mut g, first, &mut scratch);
            let second = lookahead(&mut g, tech)
                .into_iter()
                .filter(|s| s.delta > 0)
                .max_by(|a, b| a.delta.cmp(&b.delta).then(b.action.cmp(&a.action)));
            let (t, c, _) = scratch[0];
            g.set(Layer::M1, t, c, Cell::Empty);
            if let Some(s) = second {
                if pick.as_ref().is_none_or(|(d, _, _)| s.delta > *d) {
                    pick = Some((s.delta, *first, s));
                }
            }
        }
        let Some((delta, first, second)) = pick else { break };
        apply(&mut g, &first, &mut added);
        trace.push(count);
        apply(&mut g, &second, &mut added);
        count -= delta as usize;
        trace.push(count);
    }
    FixOutcome {
        grid: g,
        added,
        remaining: count,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> LayoutGrid {
        let names: Vec<String> = ('A'..='Z').map(|c| c.to_string()).collect();
        let mut g = LayoutGrid::empty(rows.len(), rows[0].len(), names);
        for (t, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                if ch != '.' {
                    g.set(Layer::M1, t, c, Cell::Net(NetId(ch as u16 - 'A' as u16)));
                }
            }
        }
        g
    }

    #[test]
    fn clean_input_is_untouched() {
        let g = grid(&["AAA...", "..BBBB"]);
        let out = greedy_fix(&g, &TechParams::default(), 10);
        assert_eq!(out.remaining, 0);
        assert!(out.added.is_empty());
        assert_eq!(out.grid, g);
    }

    #[test]
    fn adjacency_conflict_resolved_by_extension() {
        // the middle cut dodges the top one onto column 3, where the bottom cut
        // also lands; growing A pushes the bottom cut to column 4
        let g = grid(&["EE.FFFF", "CC..DDD", "AAA..BB"]);
        let tech = TechParams::default();
        assert!(!run_drc(&g, &tech.drc_rules).is_empty());
        let out = greedy_fix(&g, &tech, 2 * g.height * g.width);
        assert_eq!(out.remaining, 0);
        assert!(run_drc(&out.grid, &tech.drc_rules).is_empty());
    }

    #[test]
    fn abutment_short_is_not_fixable() {
        let g = grid(&["AABB...."]);
        let tech = TechParams::default();
        let budget = 2 * g.height * g.width;
        let out = greedy_fix(&g, &tech, budget);
        assert!(out.remaining >= 1);
        assert!(out.added.len() <= budget);
    }

    #[test]
    fn trace_never_increases() {
        let g = grid(&["A.B..C....", "..A...B.C.", "B...A..C.."]);
        let out = greedy_fix(&g, &TechParams::default(), 60);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.remaining);
    }
}
