//! Netlist ingestion from canonical JSON and a SPICE subset.
//!
//! SPICE cards: `M<name> <drain> <gate> <source> <bulk> <pmos|nmos> [nfin=<k>]`,
//! optionally wrapped in `.subckt <cell> <ports...>` / `.ends`. Ports other
//! than supply nets become pins. `*` starts a comment line.

use std::collections::HashSet;

use serde::Serialize;

use super::FORMAT_VERSION;
use crate::error::ParseError;
use crate::netlist::{Device, DeviceKind, Netlist, Pin};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetlistFormat {
    Json,
    Spice,
}

impl NetlistFormat {
    /// Guesses from a file extension; anything but `.json` is SPICE.
    pub fn from_path(path: &str) -> Self {
        if path.to_ascii_lowercase().ends_with(".json") {
            NetlistFormat::Json
        } else {
            NetlistFormat::Spice
        }
    }
}

const SUPPLY_NETS: [&str; 4] = ["VDD", "VSS", "GND", "VCC"];

pub fn parse_netlist(text: &str, format: NetlistFormat) -> Result<Netlist, ParseError> {
    match format {
        NetlistFormat::Json => parse_json(text),
        NetlistFormat::Spice => parse_spice(text),
    }
}

#[derive(Serialize)]
struct Versioned<'a> {
    format_version: u32,
    #[serde(flatten)]
    netlist: &'a Netlist,
}

pub fn netlist_to_json(netlist: &Netlist) -> String {
    serde_json::to_string_pretty(&Versioned {
        format_version: FORMAT_VERSION,
        netlist,
    })
    .expect("netlist serializes")
}

/// 1-based line of the `nth` (0-based) occurrence of `needle`.
fn locate(text: &str, needle: &str, nth: usize) -> usize {
    text.match_indices(needle)
        .nth(nth)
        .map_or(1, |(i, _)| text[..i].matches('\n').count() + 1)
}

fn parse_json(text: &str) -> Result<Netlist, ParseError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.to_string()))?;
    if let Some(v) = value.get("format_version") {
        if v.as_u64() != Some(FORMAT_VERSION as u64) {
            return Err(ParseError::new(
                locate(text, "\"format_version\"", 0),
                format!("unsupported format_version {v}"),
            ));
        }
    }
    let netlist: Netlist = serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.to_string()))?;
    let mut seen = HashSet::new();
    for d in &netlist.devices {
        if !seen.insert(d.name.as_str()) {
            let line = locate(text, &format!("\"{}\"", d.name), 1);
            return Err(ParseError::new(line, format!("duplicate device name {}", d.name)));
        }
    }
    let nets: HashSet<&str> = netlist
        .devices
        .iter()
        .flat_map(|d| [d.gate.as_str(), d.source.as_str(), d.drain.as_str()])
        .collect();
    let mut pins = HashSet::new();
    for p in &netlist.pins {
        if !pins.insert(p.name.as_str()) {
            let line = locate(text, &format!("\"{}\"", p.name), 1);
            return Err(ParseError::new(line, format!("duplicate pin name {}", p.name)));
        }
        if !nets.contains(p.net.as_str()) {
            let line = locate(text, "\"pins\"", 0);
            return Err(ParseError::new(line, format!("pin {} references dangling net {}", p.name, p.net)));
        }
    }
    Ok(netlist)
}

fn parse_spice(text: &str) -> Result<Netlist, ParseError> {
    let mut name = String::from("cell");
    let mut ports: Vec<String> = Vec::new();
    let mut subckt_line = 0;
    let mut devices: Vec<Device> = Vec::new();
    let mut names = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let head = tokens[0].to_ascii_lowercase();
        if head == ".subckt" {
            if tokens.len() < 2 {
                return Err(ParseError::new(line, ".subckt needs a cell name"));
            }
            name = tokens[1].to_string();
            ports = tokens[2..].iter().map(|s| s.to_string()).collect();
            subckt_line = line;
            continue;
        }
        if head.starts_with('.') {
            continue;
        }
        if !head.starts_with('m') {
            return Err(ParseError::new(line, format!("unsupported card {}", tokens[0])));
        }
        if tokens.len() < 6 {
            return Err(ParseError::new(
                line,
                "transistor card needs: name drain gate source bulk model",
            ));
        }
        let kind = match tokens[5].to_ascii_lowercase().as_str() {
            "pmos" => DeviceKind::Pmos,
            "nmos" => DeviceKind::Nmos,
            other => return Err(ParseError::new(line, format!("unknown device kind {other}"))),
        };
        let mut fins = 1;
        for param in &tokens[6..] {
            let Some((k, v)) = param.split_once('=') else {
                return Err(ParseError::new(line, format!("malformed parameter {param}")));
            };
            if k.eq_ignore_ascii_case("nfin") {
                fins = v
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("bad fin count {v}")))?;
            }
        }
        if !names.insert(tokens[0].to_string()) {
            return Err(ParseError::new(line, format!("duplicate device name {}", tokens[0])));
        }
        devices.push(Device {
            name: tokens[0].to_string(),
            kind,
            fins,
            drain: tokens[1].to_string(),
            gate: tokens[2].to_string(),
            source: tokens[3].to_string(),
        });
    }
    let nets: HashSet<&str> = devices
        .iter()
        .flat_map(|d| [d.gate.as_str(), d.source.as_str(), d.drain.as_str()])
        .collect();
    let mut pins = Vec::new();
    for p in &ports {
        if SUPPLY_NETS.iter().any(|s| s.eq_ignore_ascii_case(p)) {
            continue;
        }
        if !nets.contains(p.as_str()) {
            return Err(ParseError::new(subckt_line, format!("port {p} is not connected to any device")));
        }
        if pins.iter().any(|q: &Pin| &q.name == p) {
            return Err(ParseError::new(subckt_line, format!("duplicate port {p}")));
        }
        pins.push(Pin {
            name: p.clone(),
            net: p.clone(),
        });
    }
    Ok(Netlist { name, devices, pins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn spice_card() {
        let nl = parse_netlist("M1 Y A VDD VDD pmos nfin=2\nM2 Y A VSS VSS nmos\n", NetlistFormat::Spice).unwrap();
        let d = &nl.devices[0];
        assert_eq!(d.kind, DeviceKind::Pmos);
        assert_eq!(d.fins, 2);
        assert_eq!(d.gate, "A");
        assert_eq!((d.drain.as_str(), d.source.as_str()), ("Y", "VDD"));
        assert_eq!(nl.devices[1].fins, 1);
    }

    #[test]
    fn spice_subckt_ports_become_pins() {
        let text = "* inverter\n.subckt INV A Y VDD VSS\nMP Y A VDD VDD pmos nfin=2\nMN Y A VSS VSS nmos nfin=2\n.ends\n";
        let nl = parse_netlist(text, NetlistFormat::Spice).unwrap();
        assert_eq!(nl.name, "INV");
        let pins: Vec<&str> = nl.pins.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(pins, ["A", "Y"]);
    }

    #[test]
    fn spice_errors_carry_lines() {
        let e = parse_netlist("M1 Y A VDD VDD pmos\nM2 Y A VSS VSS cmos\n", NetlistFormat::Spice).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("cmos"));
        let e = parse_netlist("M1 Y A VDD VDD pmos\n\nM1 Y A VSS VSS nmos\n", NetlistFormat::Spice).unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_netlist(".subckt X A B\nM1 Y A VDD VDD pmos\n", NetlistFormat::Spice).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn json_round_trip() {
        for nl in fixtures::library() {
            let text = netlist_to_json(&nl);
            assert_eq!(parse_netlist(&text, NetlistFormat::Json).unwrap(), nl);
        }
    }

    #[test]
    fn json_unknown_kind_located() {
        let text = "{\n \"name\": \"X\",\n \"devices\": [\n  {\"name\": \"M1\", \"kind\": \"cmos\", \"gate\": \"A\", \"source\": \"B\", \"drain\": \"C\"}\n ]\n}";
        let e = parse_netlist(text, NetlistFormat::Json).unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn json_duplicate_and_dangling() {
        let mut nl = fixtures::inverter();
        nl.devices[1].name = nl.devices[0].name.clone();
        let e = parse_netlist(&netlist_to_json(&nl), NetlistFormat::Json).unwrap_err();
        assert!(e.message.contains("duplicate device"));
        assert!(e.line > 1);
        let mut nl = fixtures::inverter();
        nl.pins[0].net = "nowhere".into();
        let e = parse_netlist(&netlist_to_json(&nl), NetlistFormat::Json).unwrap_err();
        assert!(e.message.contains("dangling"));
    }
}
