//! Placement routability: per-slot features and the 1D-convolution classifier.
//!
//! Feature layout per slot (11 values):
//! `[p_gate, p_left, p_right, n_gate, n_left, n_right, pins_near, crossings, p_fins, n_fins, gap]`
//! where the terminal entries are the degree of the net on that terminal
//! (device terminals plus pins) and left/right follow the flip flag.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayD};
use serde::{Deserialize, Serialize};

use crate::error::ModelFormatError;
use crate::netlist::Netlist;
use crate::nn::{self, Manifest, Scalar, WeightFile};
use crate::placement::{realize_placement, PlacementRep};
use crate::placer::score::net_spans;
use crate::tech::TechParams;

pub const FEATURE_DIM: usize = 11;
pub const HIDDEN: usize = 32;
pub const KERNEL: usize = 3;
pub const CLASSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutabilityLabel {
    Routable,
    RoutableWithDrcs,
    NotRoutable,
}

impl RoutabilityLabel {
    pub const ALL: [RoutabilityLabel; 3] = [
        RoutabilityLabel::Routable,
        RoutabilityLabel::RoutableWithDrcs,
        RoutabilityLabel::NotRoutable,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

pub type PairFeatures = [f64; FEATURE_DIM];

/// Anything that can label a placement for the annealer's end phase.
pub trait RoutabilityPredictor {
    fn predict_label(&self, rep: &PlacementRep, netlist: &Netlist, tech: &TechParams) -> RoutabilityLabel;
}

pub fn extract_features(rep: &PlacementRep, netlist: &Netlist, tech: &TechParams) -> Vec<PairFeatures> {
    let realized = realize_placement(rep, netlist, tech).expect("valid placement representation");
    let degree = netlist.net_degrees();
    let spans = net_spans(&realized, netlist, tech);
    let pmos = netlist.pmos();
    let nmos = netlist.nmos();
    let deg = |net: &str| degree.get(net).copied().unwrap_or(0) as f64;

    (0..rep.slots())
        .map(|k| {
            let mut f = [0.0; FEATURE_DIM];
            let col = realized.slot_column(k);
            for (row, entry) in [(0, rep.order_p[k].map(|i| (pmos[i], rep.flip_p[i]))), (1, rep.order_n[k].map(|i| (nmos[i], rep.flip_n[i])))] {
                if let Some((dev, flip)) = entry {
                    let d = &netlist.devices[dev];
                    let (l, r) = d.diffusion(flip);
                    f[row * 3] = deg(&d.gate);
                    f[row * 3 + 1] = deg(l);
                    f[row * 3 + 2] = deg(r);
                    f[8 + row] = d.fins as f64;
                }
            }
            f[6] = realized
                .pin_cols
                .iter()
                .filter(|&&c| c.abs_diff(col) <= 1)
                .count() as f64;
            f[7] = spans.values().filter(|(lo, hi)| *lo <= col && col <= *hi && lo < hi).count() as f64;
            f[10] = if rep.order_p[k].is_none() || rep.order_n[k].is_none() { 1.0 } else { 0.0 };
            f
        })
        .collect()
}

/// Two same-length 1D convolutions (ReLU), max over slots, dense to three classes.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutabilityModel<T: Scalar> {
    conv1_w: Array2<T>,
    conv1_b: Array1<T>,
    conv2_w: Array2<T>,
    conv2_b: Array1<T>,
    dense_w: Array2<T>,
    dense_b: Array1<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: RoutabilityLabel,
    pub probabilities: [f64; CLASSES],
}

impl<T: Scalar> RoutabilityModel<T> {
    pub fn manifest() -> Manifest {
        vec![
            ("conv1.weight".into(), vec![HIDDEN, FEATURE_DIM, KERNEL]),
            ("conv1.bias".into(), vec![HIDDEN]),
            ("conv2.weight".into(), vec![HIDDEN, HIDDEN, KERNEL]),
            ("conv2.bias".into(), vec![HIDDEN]),
            ("dense.weight".into(), vec![CLASSES, HIDDEN]),
            ("dense.bias".into(), vec![CLASSES]),
        ]
    }

    pub fn from_tensors(t: &BTreeMap<String, ArrayD<T>>) -> Self {
        Self {
            conv1_w: nn::as_matrix(&t["conv1.weight"]),
            conv1_b: nn::as_vector(&t["conv1.bias"]),
            conv2_w: nn::as_matrix(&t["conv2.weight"]),
            conv2_b: nn::as_vector(&t["conv2.bias"]),
            dense_w: nn::as_matrix(&t["dense.weight"]),
            dense_b: nn::as_vector(&t["dense.bias"]),
        }
    }

    pub fn from_weight_file(file: &WeightFile) -> Result<Self, ModelFormatError> {
        Ok(Self::from_tensors(&file.load::<T>(&Self::manifest())?))
    }

    pub fn tensors(&self) -> BTreeMap<String, ArrayD<T>> {
        let m = Self::manifest();
        let arrays = [
            self.conv1_w.clone().into_dyn(),
            self.conv1_b.clone().into_dyn(),
            self.conv2_w.clone().into_dyn(),
            self.conv2_b.clone().into_dyn(),
            self.dense_w.clone().into_dyn(),
            self.dense_b.clone().into_dyn(),
        ];
        m.into_iter()
            .zip(arrays)
            .map(|((name, shape), a)| (name, a.into_shape(shape).unwrap()))
            .collect()
    }

    pub fn zeros() -> Self {
        Self::from_tensors(&nn::zero_tensors(&Self::manifest()))
    }

    /// Class probabilities for a feature sequence (`[L][FEATURE_DIM]`).
    pub fn probabilities(&self, features: &[PairFeatures]) -> Result<Vec<T>, ModelFormatError> {
        if features.is_empty() {
            return Ok(nn::softmax(&self.dense_b.to_vec()));
        }
        let len = features.len();
        let input = Array2::from_shape_fn((FEATURE_DIM, len), |(c, x)| nn::cast::<T>(features[x][c]));
        let mut h = nn::conv1d_same(&input, &self.conv1_w, &self.conv1_b, KERNEL);
        nn::relu_in_place(&mut h);
        let mut h = nn::conv1d_same(&h, &self.conv2_w, &self.conv2_b, KERNEL);
        nn::relu_in_place(&mut h);
        let pooled = Array1::from_iter(h.rows().into_iter().map(|r| r.iter().copied().fold(T::neg_infinity(), T::max)));
        let logits = nn::dense(&pooled, &self.dense_w, &self.dense_b);
        Ok(nn::softmax(&logits.to_vec()))
    }

    pub fn predict(&self, features: &[PairFeatures]) -> Result<Prediction, ModelFormatError> {
        let p = self.probabilities(features)?;
        let mut best = 0;
        for i in 1..CLASSES {
            if p[i] > p[best] {
                best = i;
            }
        }
        let mut probabilities = [0.0; CLASSES];
        for (dst, src) in probabilities.iter_mut().zip(&p) {
            *dst = src.to_f64().unwrap();
        }
        Ok(Prediction {
            label: RoutabilityLabel::from_index(best).unwrap(),
            probabilities,
        })
    }
}

impl<T: Scalar> RoutabilityPredictor for RoutabilityModel<T> {
    fn predict_label(&self, rep: &PlacementRep, netlist: &Netlist, tech: &TechParams) -> RoutabilityLabel {
        self.predict(&extract_features(rep, netlist, tech))
            .map(|p| p.label)
            .unwrap_or(RoutabilityLabel::NotRoutable)
    }
}

/// One line of a routability dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub cell: String,
    pub features: Vec<Vec<f64>>,
    pub label: usize,
}
