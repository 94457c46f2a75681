use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netlist::Netlist;
use crate::placement::{gate_violations, realize_placement, PlacementRep, RealizedPlacement};
use crate::routability::{RoutabilityLabel, RoutabilityPredictor};
use crate::tech::TechParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub width: usize,
    pub congestion: f64,
    pub violations: usize,
    pub penalty: f64,
    pub total: f64,
}

/// `[leftmost, rightmost]` poly-column span of every signal net (rails excluded).
pub fn net_spans(
    realized: &RealizedPlacement,
    netlist: &Netlist,
    tech: &TechParams,
) -> BTreeMap<String, (usize, usize)> {
    let mut spans: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut touch = |net: &str, col: usize| {
        if tech.power.is_power(net) {
            return;
        }
        spans
            .entry(net.to_string())
            .and_modify(|s| {
                s.0 = s.0.min(col);
                s.1 = s.1.max(col);
            })
            .or_insert((col, col));
    };
    for (i, d) in netlist.devices.iter().enumerate() {
        let col = realized.devices[i].col;
        touch(&d.gate, col);
        touch(&d.source, col);
        touch(&d.drain, col);
    }
    for (i, p) in netlist.pins.iter().enumerate() {
        touch(&p.net, realized.pin_cols[i]);
    }
    spans
}

/// Crossing estimate over the `width - 1` column boundaries of a realization.
pub fn congestion_of(realized: &RealizedPlacement, netlist: &Netlist, tech: &TechParams) -> f64 {
    if realized.width < 2 {
        return 0.0;
    }
    let spans = net_spans(realized, netlist, tech);
    let boundaries = realized.width - 1;
    let mut crossings = vec![0usize; boundaries];
    for &(lo, hi) in spans.values() {
        for c in crossings.iter_mut().take(hi).skip(lo) {
            *c += 1;
        }
    }
    let max = *crossings.iter().max().unwrap_or(&0) as f64;
    let mean = crossings.iter().sum::<usize>() as f64 / boundaries as f64;
    tech.congestion_alpha * max + (1.0 - tech.congestion_alpha) * mean
}

pub fn congestion(rep: &PlacementRep, netlist: &Netlist, tech: &TechParams) -> f64 {
    let realized = realize_placement(rep, netlist, tech).expect("valid placement representation");
    congestion_of(&realized, netlist, tech)
}

pub fn score_breakdown(
    rep: &PlacementRep,
    netlist: &Netlist,
    tech: &TechParams,
    predictor: Option<&dyn RoutabilityPredictor>,
) -> ScoreBreakdown {
    let realized = realize_placement(rep, netlist, tech).expect("valid placement representation");
    let w = tech.score_weights;
    let cong = if w.w_cong != 0.0 {
        congestion_of(&realized, netlist, tech)
    } else {
        0.0
    };
    let violations = gate_violations(rep, netlist);
    let penalty = match predictor.map(|p| p.predict_label(rep, netlist, tech)) {
        None | Some(RoutabilityLabel::Routable) => 0.0,
        Some(RoutabilityLabel::RoutableWithDrcs) => tech.routability_penalty.soft,
        Some(RoutabilityLabel::NotRoutable) => tech.routability_penalty.hard,
    };
    let total = w.w_width * realized.width as f64 + w.w_cong * cong + w.w_viol * violations as f64 + penalty;
    ScoreBreakdown {
        width: realized.width,
        congestion: cong,
        violations,
        penalty,
        total,
    }
}

/// Weighted sum of width, congestion and gate violations, plus the
/// routability penalty when a predictor is supplied.
pub fn score(
    rep: &PlacementRep,
    netlist: &Netlist,
    tech: &TechParams,
    predictor: Option<&dyn RoutabilityPredictor>,
) -> f64 {
    score_breakdown(rep, netlist, tech, predictor).total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netlist::{Device, DeviceKind};
    use crate::tech::ScoreWeights;

    fn with_weights(w: f64, c: f64, v: f64) -> TechParams {
        TechParams {
            score_weights: ScoreWeights::new(w, c, v),
            ..TechParams::default()
        }
    }

    fn nand2_rep(p: [usize; 2], n: [usize; 2]) -> PlacementRep {
        PlacementRep {
            order_p: vec![Some(p[0]), Some(p[1]), None],
            order_n: vec![Some(n[0]), Some(n[1]), None],
            flip_p: vec![false; 2],
            flip_n: vec![false; 2],
            pin_slots: vec![Some(0), Some(1), Some(2)],
        }
    }

    #[test]
    fn width_only() {
        let nl = fixtures::nand2();
        assert_eq!(score(&nand2_rep([0, 1], [0, 1]), &nl, &with_weights(1.0, 0.0, 0.0), None), 2.0);
    }

    #[test]
    fn width_plus_violation() {
        let nl = fixtures::nand2();
        // slot 0 pairs gates A/A, slot 1 pairs B/A? use a swapped NMOS order with one mismatch
        let rep = nand2_rep([0, 1], [1, 0]);
        let s = score_breakdown(&rep, &nl, &with_weights(1.0, 0.0, 10.0), None);
        assert_eq!(s.violations, 2);
        let mut rep = nand2_rep([0, 1], [0, 1]);
        rep.order_n = vec![Some(1), None, Some(0)];
        let s = score_breakdown(&rep, &nl, &with_weights(1.0, 0.0, 10.0), None);
        assert_eq!(s.violations, 1);
        assert_eq!(s.total, s.width as f64 + 10.0);
    }

    #[test]
    fn width_two_plus_one_violation_is_twelve() {
        // two pairs that share diffusion on both rows; one pair has mismatched gates
        use DeviceKind::*;
        let dev = |name: &str, kind, g: &str, s: &str, d: &str| Device {
            name: name.into(),
            kind,
            fins: 1,
            gate: g.into(),
            source: s.into(),
            drain: d.into(),
        };
        let nl = Netlist {
            name: "T".into(),
            devices: vec![
                dev("P1", Pmos, "A", "VDD", "Y"),
                dev("P2", Pmos, "B", "Y", "VDD"),
                dev("N1", Nmos, "A", "VSS", "Y"),
                dev("N2", Nmos, "C", "Y", "VSS"),
            ],
            pins: vec![],
        };
        let rep = PlacementRep {
            order_p: vec![Some(0), Some(1)],
            order_n: vec![Some(0), Some(1)],
            flip_p: vec![false; 2],
            flip_n: vec![false; 2],
            pin_slots: vec![None, None],
        };
        assert_eq!(score(&rep, &nl, &with_weights(1.0, 0.0, 10.0), None), 12.0);
    }

    #[test]
    fn congestion_projection() {
        let nl = fixtures::nand2();
        let tech = with_weights(0.0, 1.0, 0.0);
        let rep = nand2_rep([0, 1], [0, 1]);
        assert_eq!(score(&rep, &nl, &tech, None), congestion(&rep, &nl, &tech));
    }

    #[test]
    fn single_net_spanning_two_columns() {
        use DeviceKind::*;
        let dev = |name: &str, kind, g: &str, s: &str, d: &str| Device {
            name: name.into(),
            kind,
            fins: 1,
            gate: g.into(),
            source: s.into(),
            drain: d.into(),
        };
        // only Z spans columns 0..1; everything else is a rail or single-column
        let nl = Netlist {
            name: "T".into(),
            devices: vec![
                dev("P1", Pmos, "A", "VDD", "Z"),
                dev("P2", Pmos, "B", "Z", "VDD"),
                dev("N1", Nmos, "A", "VSS", "VSS"),
                dev("N2", Nmos, "B", "VSS", "VSS"),
            ],
            pins: vec![],
        };
        let rep = PlacementRep {
            order_p: vec![Some(0), Some(1)],
            order_n: vec![Some(0), Some(1)],
            flip_p: vec![false; 2],
            flip_n: vec![false; 2],
            pin_slots: vec![None, None],
        };
        // gates A and B are single-column nets
        assert_eq!(congestion(&rep, &nl, &TechParams::default()), 1.0);
    }

    #[test]
    fn no_multi_column_nets() {
        let nl = fixtures::inverter();
        let rep = PlacementRep::initial(&nl, 2);
        assert_eq!(congestion(&rep, &nl, &TechParams::default()), 0.0);
    }

    #[test]
    fn two_full_width_nets() {
        use DeviceKind::*;
        let dev = |name: &str, kind, g: &str, s: &str, d: &str| Device {
            name: name.into(),
            kind,
            fins: 1,
            gate: g.into(),
            source: s.into(),
            drain: d.into(),
        };
        // P/N rows share diffusion; nets U and V both touch columns 0 and 2.
        let nl = Netlist {
            name: "T".into(),
            devices: vec![
                dev("P1", Pmos, "U", "VDD", "VDD"),
                dev("P2", Pmos, "G", "VDD", "VDD"),
                dev("P3", Pmos, "U", "VDD", "VDD"),
                dev("N1", Nmos, "V", "VSS", "VSS"),
                dev("N2", Nmos, "G", "VSS", "VSS"),
                dev("N3", Nmos, "V", "VSS", "VSS"),
            ],
            pins: vec![],
        };
        let rep = PlacementRep {
            order_p: vec![Some(0), Some(1), Some(2)],
            order_n: vec![Some(0), Some(1), Some(2)],
            flip_p: vec![false; 3],
            flip_n: vec![false; 3],
            pin_slots: vec![None; 3],
        };
        let tech = TechParams {
            congestion_alpha: 1.0,
            ..TechParams::default()
        };
        assert_eq!(congestion(&rep, &nl, &tech), 2.0);
    }
}
