//! Placement representation and its left-to-right realization into poly columns.
//!
//! A [`PlacementRep`] holds one entry per placement slot for the PMOS row, the
//! NMOS row and the pins. Device entries index into the per-kind device lists
//! ([`Netlist::pmos`] / [`Netlist::nmos`]); pin entries index into
//! [`Netlist::pins`]. Slots whose PMOS and NMOS entries are both empty take no
//! column at all, so extra slots only give the annealer room to move things.

use serde::{Deserialize, Serialize};

use crate::error::CellError;
use crate::netlist::{Netlist, Terminal};
use crate::tech::TechParams;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementRep {
    pub order_p: Vec<Option<usize>>,
    pub order_n: Vec<Option<usize>>,
    pub flip_p: Vec<bool>,
    pub flip_n: Vec<bool>,
    pub pin_slots: Vec<Option<usize>>,
}

/// Default number of placement slots for a netlist.
pub fn slot_count(netlist: &Netlist, tech: &TechParams) -> usize {
    let m = netlist.pmos().len().max(netlist.nmos().len());
    let slack = m.div_ceil(tech.slack_divisor.max(1));
    (m + slack).max(netlist.pins.len())
}

fn check_perm(entries: &[Option<usize>], count: usize, what: &str) -> Result<(), CellError> {
    let mut seen = vec![false; count];
    for e in entries.iter().flatten() {
        if *e >= count || seen[*e] {
            return Err(CellError::InvalidRepresentation(format!(
                "{what} order is not a permutation (entry {e})"
            )));
        }
        seen[*e] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(CellError::InvalidRepresentation(format!(
            "{what} order misses an entry"
        )));
    }
    Ok(())
}

impl PlacementRep {
    pub fn slots(&self) -> usize {
        self.order_p.len()
    }

    /// Deterministic starting point: devices in netlist order, each PMOS
    /// paired with the first unused NMOS sharing its gate, flips cleared,
    /// pins in the leading slots.
    pub fn initial(netlist: &Netlist, slots: usize) -> Self {
        let pmos = netlist.pmos();
        let nmos = netlist.nmos();
        let mut order_p = vec![None; slots];
        let mut order_n = vec![None; slots];
        let mut used_n = vec![false; nmos.len()];
        for (k, &p) in pmos.iter().enumerate() {
            order_p[k] = Some(k);
            let gate = &netlist.devices[p].gate;
            if let Some(j) =
                (0..nmos.len()).find(|&j| !used_n[j] && netlist.devices[nmos[j]].gate == *gate)
            {
                used_n[j] = true;
                order_n[k] = Some(j);
            }
        }
        let free: Vec<usize> = (0..slots).filter(|&k| order_n[k].is_none()).collect();
        let mut free = free.into_iter();
        for (j, _) in used_n.iter().enumerate().filter(|(_, used)| !**used) {
            let k = free.next().expect("enough slots for every NMOS");
            order_n[k] = Some(j);
        }
        let mut pin_slots = vec![None; slots];
        for (i, slot) in pin_slots.iter_mut().enumerate().take(netlist.pins.len()) {
            *slot = Some(i);
        }
        Self {
            order_p,
            order_n,
            flip_p: vec![false; pmos.len()],
            flip_n: vec![false; nmos.len()],
            pin_slots,
        }
    }

    pub fn validate(&self, netlist: &Netlist) -> Result<(), CellError> {
        let n = self.slots();
        let np = netlist.pmos().len();
        let nn = netlist.nmos().len();
        if self.order_n.len() != n || self.pin_slots.len() != n {
            return Err(CellError::InvalidRepresentation(
                "order and pin vectors differ in length".into(),
            ));
        }
        if n < np.max(nn) || n < netlist.pins.len() {
            return Err(CellError::InvalidRepresentation(format!(
                "{n} slots cannot hold {np} PMOS, {nn} NMOS and {} pins",
                netlist.pins.len()
            )));
        }
        if self.flip_p.len() != np || self.flip_n.len() != nn {
            return Err(CellError::InvalidRepresentation(
                "flip vectors do not match device counts".into(),
            ));
        }
        check_perm(&self.order_p, np, "PMOS")?;
        check_perm(&self.order_n, nn, "NMOS")?;
        check_perm(&self.pin_slots, netlist.pins.len(), "pin")
    }
}

/// Where one device landed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedDevice {
    pub col: usize,
    pub flipped: bool,
}

impl PlacedDevice {
    /// M1 routing column of a terminal: diffusions flank the gate column.
    pub fn terminal_column(&self, terminal: Terminal) -> usize {
        let left = 2 * self.col;
        match (terminal, self.flipped) {
            (Terminal::Gate, _) => left + 1,
            (Terminal::Source, false) | (Terminal::Drain, true) => left,
            (Terminal::Source, true) | (Terminal::Drain, false) => left + 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizedPlacement {
    /// Poly column per PMOS (indexed like `Netlist::pmos`).
    pub x_p: Vec<usize>,
    /// Poly column per NMOS (indexed like `Netlist::nmos`).
    pub x_n: Vec<usize>,
    pub pin_cols: Vec<usize>,
    /// Column of each slot; `None` for slots that hold no device.
    pub slot_cols: Vec<Option<usize>>,
    pub width: usize,
    /// Indexed by position in `Netlist::devices`.
    pub devices: Vec<PlacedDevice>,
}

impl RealizedPlacement {
    /// Column a slot maps to: its own, else the next occupied slot's, else the last column.
    pub fn slot_column(&self, slot: usize) -> usize {
        self.slot_cols[slot..]
            .iter()
            .flatten()
            .next()
            .copied()
            .unwrap_or(self.width.saturating_sub(1))
    }

    pub fn terminal_column(&self, device: usize, terminal: Terminal) -> usize {
        self.devices[device].terminal_column(terminal)
    }
}

/// Scans slots left to right, opening dummy-poly gaps where neighbours on
/// either row cannot abut.
pub fn realize_placement(
    rep: &PlacementRep,
    netlist: &Netlist,
    tech: &TechParams,
) -> Result<RealizedPlacement, CellError> {
    rep.validate(netlist)?;
    let pmos = netlist.pmos();
    let nmos = netlist.nmos();
    let mut devices = vec![
        PlacedDevice {
            col: 0,
            flipped: false
        };
        netlist.devices.len()
    ];
    let mut x_p = vec![0; pmos.len()];
    let mut x_n = vec![0; nmos.len()];
    let mut slot_cols = Vec::with_capacity(rep.slots());
    // Last placed device per row: (global index, column).
    let mut last: [Option<(usize, usize)>; 2] = [None, None];
    let mut prev_col: Option<usize> = None;

    for k in 0..rep.slots() {
        let here = [
            rep.order_p[k].map(|i| (pmos[i], rep.flip_p[i])),
            rep.order_n[k].map(|i| (nmos[i], rep.flip_n[i])),
        ];
        if here.iter().all(Option::is_none) {
            slot_cols.push(None);
            continue;
        }
        let mut x = prev_col.map_or(0, |c| c + 1);
        loop {
            let mut next = x;
            for row in 0..2 {
                let (Some((dev, flip)), Some((ldev, lcol))) = (here[row], last[row]) else {
                    continue;
                };
                let left = &netlist.devices[ldev];
                let right = &netlist.devices[dev];
                let mismatch = left.fins != right.fins;
                let abut = x == lcol + 1;
                let shares = abut && left.diffusion(devices[ldev].flipped).1 == right.diffusion(flip).0;
                let fin_gap = if mismatch { tech.k_f } else { 0 };
                let gap = if shares { fin_gap } else { tech.k_s.max(fin_gap) };
                next = next.max(lcol + 1 + gap);
            }
            if next == x {
                break;
            }
            x = next;
        }
        for (row, entry) in here.iter().enumerate() {
            if let Some((dev, flip)) = *entry {
                devices[dev] = PlacedDevice { col: x, flipped: flip };
                last[row] = Some((dev, x));
            }
        }
        if let Some(i) = rep.order_p[k] {
            x_p[i] = x;
        }
        if let Some(i) = rep.order_n[k] {
            x_n[i] = x;
        }
        slot_cols.push(Some(x));
        prev_col = Some(x);
    }

    let width = prev_col.map_or(0, |c| c + 1);
    let mut realized = RealizedPlacement {
        x_p,
        x_n,
        pin_cols: vec![0; netlist.pins.len()],
        slot_cols,
        width,
        devices,
    };
    for (k, pin) in rep.pin_slots.iter().enumerate() {
        if let Some(p) = pin {
            realized.pin_cols[*p] = realized.slot_column(k);
        }
    }
    Ok(realized)
}

/// Slots pairing a PMOS and an NMOS with different gate nets.
pub fn gate_violations(rep: &PlacementRep, netlist: &Netlist) -> usize {
    let pmos = netlist.pmos();
    let nmos = netlist.nmos();
    rep.order_p
        .iter()
        .zip(&rep.order_n)
        .filter(|(p, n)| match (p, n) {
            (Some(p), Some(n)) => netlist.devices[pmos[*p]].gate != netlist.devices[nmos[*n]].gate,
            _ => false,
        })
        .count()
}
