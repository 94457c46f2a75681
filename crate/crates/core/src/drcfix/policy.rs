//! Inference of the fully-convolutional repair policy.
//!
//! Four zero-padded 3x3 convolutions (3 -> 64 -> 128 -> 256 -> 512, ReLU)
//! give a per-pixel embedding. The policy head is a per-pixel MLP
//! 512 -> 64 -> 64 -> 1 whose logits are masked by observation plane 1 and
//! normalised with a softmax; the value head averages the embedding over all
//! pixels and applies its own 512 -> 64 -> 64 -> 1 MLP. No parameter depends
//! on the grid size.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Array3, ArrayD};

use crate::error::ModelFormatError;
use crate::nn::{self, Manifest, Scalar, WeightFile};

pub const INPUT_CHANNELS: usize = 3;
pub const CONV_CHANNELS: [usize; 4] = [64, 128, 256, 512];
pub const HEAD_WIDTHS: [usize; 3] = [64, 64, 1];

#[derive(Clone, Debug, PartialEq)]
struct Dense<T: Scalar> {
    w: Array2<T>,
    b: Array1<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyWeights<T: Scalar> {
    convs: Vec<Dense<T>>,
    policy: Vec<Dense<T>>,
    value: Vec<Dense<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput<T> {
    /// Probability of every flat action; zero where masked.
    pub probs: Vec<T>,
    pub logits: Vec<T>,
    pub value: T,
}

impl<T> PolicyOutput<T>
where
    T: Scalar,
{
    /// Most likely legal action (lowest index on ties); `None` when nothing is legal.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > T::zero() && best.is_none_or(|b| *p > self.probs[b]) {
                best = Some(i);
            }
        }
        best
    }
}

fn head_manifest(prefix: &str, out: &mut Manifest) {
    let mut fan_in = CONV_CHANNELS[3];
    for (i, w) in HEAD_WIDTHS.iter().enumerate() {
        out.push((format!("{prefix}.fc{}.weight", i + 1), vec![*w, fan_in]));
        out.push((format!("{prefix}.fc{}.bias", i + 1), vec![*w]));
        fan_in = *w;
    }
}

impl<T: Scalar> PolicyWeights<T> {
    pub fn manifest() -> Manifest {
        let mut m = Vec::new();
        let mut c_in = INPUT_CHANNELS;
        for (i, c) in CONV_CHANNELS.iter().enumerate() {
            m.push((format!("conv{}.weight", i + 1), vec![*c, c_in, 3, 3]));
            m.push((format!("conv{}.bias", i + 1), vec![*c]));
            c_in = *c;
        }
        head_manifest("policy", &mut m);
        head_manifest("value", &mut m);
        m
    }

    pub fn param_count() -> usize {
        Self::manifest().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }

    pub fn from_tensors(t: &BTreeMap<String, ArrayD<T>>) -> Self {
        let dense = |name: &str| Dense {
            w: nn::as_matrix(&t[&format!("{name}.weight")]),
            b: nn::as_vector(&t[&format!("{name}.bias")]),
        };
        Self {
            convs: (1..=4).map(|i| dense(&format!("conv{i}"))).collect(),
            policy: (1..=3).map(|i| dense(&format!("policy.fc{i}"))).collect(),
            value: (1..=3).map(|i| dense(&format!("value.fc{i}"))).collect(),
        }
    }

    pub fn from_weight_file(file: &WeightFile) -> Result<Self, ModelFormatError> {
        Ok(Self::from_tensors(&file.load::<T>(&Self::manifest())?))
    }

    pub fn tensors(&self) -> BTreeMap<String, ArrayD<T>> {
        let mut layers: Vec<&Dense<T>> = self.convs.iter().collect();
        layers.extend(&self.policy);
        layers.extend(&self.value);
        let manifest = Self::manifest();
        let mut out = BTreeMap::new();
        for (pair, layer) in manifest.chunks(2).zip(layers) {
            let (wn, ws) = &pair[0];
            let (bn, _) = &pair[1];
            out.insert(wn.clone(), layer.w.clone().into_shape(ws.clone()).unwrap());
            out.insert(bn.clone(), layer.b.clone().into_dyn());
        }
        out
    }

    pub fn zeros() -> Self {
        Self::from_tensors(&nn::zero_tensors(&Self::manifest()))
    }

    /// Per-pixel embedding `[512, H, W]`.
    pub fn embed(&self, obs: &Array3<T>) -> Result<Array3<T>, ModelFormatError> {
        if obs.dim().0 != INPUT_CHANNELS {
            return Err(ModelFormatError::InputChannels {
                expected: INPUT_CHANNELS,
                found: obs.dim().0,
            });
        }
        let mut x = obs.clone();
        for layer in &self.convs {
            x = nn::conv3x3_same(&x, &layer.w, &layer.b);
            nn::relu_in_place(&mut x);
        }
        Ok(x)
    }

    pub fn forward(&self, obs: &Array3<T>) -> Result<PolicyOutput<T>, ModelFormatError> {
        let emb = self.embed(obs)?;
        let (c, h, w) = emb.dim();
        let flat = emb.clone().into_shape((c, h * w)).expect("contiguous embedding");
        let mut x = flat;
        for (i, layer) in self.policy.iter().enumerate() {
            x = layer.w.dot(&x);
            for (mut row, b) in x.rows_mut().into_iter().zip(layer.b.iter()) {
                row.mapv_inplace(|v| v + *b);
            }
            if i + 1 < self.policy.len() {
                nn::relu_in_place(&mut x);
            }
        }
        let logits: Vec<T> = x.row(0).to_vec();
        let mask: Vec<bool> = obs.slice(ndarray::s![1, .., ..]).iter().map(|v| *v > nn::cast(0.5)).collect();
        let probs = nn::masked_softmax(&logits, &mask);

        let mut v = nn::spatial_mean(&emb);
        for (i, layer) in self.value.iter().enumerate() {
            v = nn::dense(&v, &layer.w, &layer.b);
            if i + 1 < self.value.len() {
                nn::relu_in_place(&mut v);
            }
        }
        Ok(PolicyOutput {
            probs,
            logits,
            value: v[0],
        })
    }
}
