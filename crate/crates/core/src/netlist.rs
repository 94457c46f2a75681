//! Transistor netlists: the problem instance handed to the placer and router.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::CellError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    #[serde(alias = "PMOS")]
    Pmos,
    #[serde(alias = "NMOS")]
    Nmos,
}

/// Device terminal roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    Gate,
    Source,
    Drain,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    #[serde(default = "one")]
    pub fins: u32,
    pub gate: String,
    pub source: String,
    pub drain: String,
}

impl Device {
    pub fn net(&self, terminal: Terminal) -> &str {
        match terminal {
            Terminal::Gate => &self.gate,
            Terminal::Source => &self.source,
            Terminal::Drain => &self.drain,
        }
    }

    /// Diffusion nets as drawn left to right, honouring the flip flag.
    pub fn diffusion(&self, flipped: bool) -> (&str, &str) {
        if flipped {
            (&self.drain, &self.source)
        } else {
            (&self.source, &self.drain)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pin {
    pub name: String,
    pub net: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub devices: Vec<Device>,
    #[serde(default)]
    pub pins: Vec<Pin>,
}

impl Netlist {
    /// Checks the structural invariants; `max_fins` caps the per-device fin count.
    pub fn validate(&self, max_fins: u32) -> Result<(), CellError> {
        let err = |m: String| Err(CellError::InvalidNetlist(m));
        let mut names = HashSet::new();
        for d in &self.devices {
            if !names.insert(d.name.as_str()) {
                return err(format!("duplicate device name {}", d.name));
            }
            if d.fins == 0 || d.fins > max_fins {
                return err(format!(
                    "device {} has {} fins (allowed 1..={max_fins})",
                    d.name, d.fins
                ));
            }
            if d.gate.is_empty() || d.source.is_empty() || d.drain.is_empty() {
                return err(format!("device {} has an empty net name", d.name));
            }
        }
        if self.pmos().is_empty() || self.nmos().is_empty() {
            return err("a cell needs at least one PMOS and one NMOS device".into());
        }
        let device_nets: HashSet<&str> = self
            .devices
            .iter()
            .flat_map(|d| [d.gate.as_str(), d.source.as_str(), d.drain.as_str()])
            .collect();
        let mut pin_names = HashSet::new();
        for p in &self.pins {
            if !pin_names.insert(p.name.as_str()) {
                return err(format!("duplicate pin name {}", p.name));
            }
            if !device_nets.contains(p.net.as_str()) {
                return err(format!("pin {} references dangling net {}", p.name, p.net));
            }
        }
        Ok(())
    }

    /// All net names, sorted.
    pub fn nets(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        for d in &self.devices {
            set.insert(d.gate.clone());
            set.insert(d.source.clone());
            set.insert(d.drain.clone());
        }
        for p in &self.pins {
            set.insert(p.net.clone());
        }
        set.into_iter().collect()
    }

    /// Indices into `devices` of the PMOS devices, in netlist order.
    pub fn pmos(&self) -> Vec<usize> {
        self.of_kind(DeviceKind::Pmos)
    }

    pub fn nmos(&self) -> Vec<usize> {
        self.of_kind(DeviceKind::Nmos)
    }

    pub fn of_kind(&self, kind: DeviceKind) -> Vec<usize> {
        (0..self.devices.len())
            .filter(|&i| self.devices[i].kind == kind)
            .collect()
    }

    /// Number of device terminals and pins attached to each net.
    pub fn net_degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg = BTreeMap::new();
        for d in &self.devices {
            for n in [&d.gate, &d.source, &d.drain] {
                *deg.entry(n.as_str()).or_insert(0) += 1;
            }
        }
        for p in &self.pins {
            *deg.entry(p.net.as_str()).or_insert(0) += 1;
        }
        deg
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes")
    }
}
