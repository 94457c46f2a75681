//! Exact placement by enumeration, for cells small enough to afford it.

use crate::netlist::Netlist;
use crate::placement::{realize_placement, slot_count, PlacementRep};
use crate::tech::TechParams;

/// Every way to place `count` devices into `slots` slots (injective maps).
fn arrangements(count: usize, slots: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(
        slot: usize,
        cur: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        count: usize,
        slots: usize,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if slot == slots {
            if used.iter().all(|u| *u) {
                out.push(cur.clone());
            }
            return;
        }
        let placed = used.iter().filter(|u| **u).count();
        if count - placed < slots - slot {
            cur.push(None);
            rec(slot + 1, cur, used, count, slots, out);
            cur.pop();
        }
        for d in 0..count {
            if !used[d] {
                used[d] = true;
                cur.push(Some(d));
                rec(slot + 1, cur, used, count, slots, out);
                cur.pop();
                used[d] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, &mut Vec::new(), &mut vec![false; count], count, slots, &mut out);
    out
}

/// Minimum realizable width over all orders and flips (pins do not affect width).
pub fn exhaustive_min_width(netlist: &Netlist, tech: &TechParams) -> usize {
    let np = netlist.pmos().len();
    let nn = netlist.nmos().len();
    let slots = slot_count(netlist, tech);
    let ps = arrangements(np, slots);
    let ns = arrangements(nn, slots);
    let mut pins = vec![None; slots];
    for (i, p) in pins.iter_mut().enumerate().take(netlist.pins.len()) {
        *p = Some(i);
    }
    let mut best = usize::MAX;
    let mut rep = PlacementRep {
        order_p: Vec::new(),
        order_n: Vec::new(),
        flip_p: vec![false; np],
        flip_n: vec![false; nn],
        pin_slots: pins,
    };
    for p in &ps {
        rep.order_p = p.clone();
        for n in &ns {
            rep.order_n = n.clone();
            for mask in 0u32..(1 << (np + nn)) {
                for i in 0..np {
                    rep.flip_p[i] = mask >> i & 1 == 1;
                }
                for i in 0..nn {
                    rep.flip_n[i] = mask >> (np + i) & 1 == 1;
                }
                let w = realize_placement(&rep, netlist, tech)
                    .expect("enumerated representation is valid")
                    .width;
                best = best.min(w);
            }
        }
    }
    best
}
