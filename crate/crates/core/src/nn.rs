//! Scalar-generic inference kernels and the JSON weight-file container.

use std::collections::BTreeMap;
use std::fmt::Debug;

use ndarray::{s, Array1, Array2, Array3, ArrayD, IxDyn, LinalgScalar};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelFormatError;

/// Floating-point element type of the inference code.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + LinalgScalar + Debug + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite value representable in the scalar type")
}

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorData {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// `{"format_version": 1, "tensors": {name: {"shape": [...], "data": [...]}}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub format_version: u32,
    pub tensors: BTreeMap<String, TensorData>,
}

/// Tensor names and shapes a model expects.
pub type Manifest = Vec<(String, Vec<usize>)>;

impl WeightFile {
    pub fn parse(text: &str) -> Result<Self, ModelFormatError> {
        serde_json::from_str(text).map_err(|e| ModelFormatError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weight file serializes")
    }

    pub fn from_arrays<T: Scalar>(tensors: &BTreeMap<String, ArrayD<T>>) -> Self {
        Self {
            format_version: WEIGHT_FORMAT_VERSION,
            tensors: tensors
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        TensorData {
                            shape: v.shape().to_vec(),
                            data: v.iter().map(|x| x.to_f64().unwrap()).collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Validates every tensor against `manifest` (exact name set, shapes and
    /// data lengths) and converts to arrays.
    pub fn load<T: Scalar>(&self, manifest: &Manifest) -> Result<BTreeMap<String, ArrayD<T>>, ModelFormatError> {
        if self.format_version != WEIGHT_FORMAT_VERSION {
            return Err(ModelFormatError::Version(self.format_version));
        }
        for name in self.tensors.keys() {
            if !manifest.iter().any(|(n, _)| n == name) {
                return Err(ModelFormatError::Unexpected(name.clone()));
            }
        }
        let mut out = BTreeMap::new();
        for (name, shape) in manifest {
            let t = self
                .tensors
                .get(name)
                .ok_or_else(|| ModelFormatError::Missing(name.clone()))?;
            if &t.shape != shape {
                return Err(ModelFormatError::Shape {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(ModelFormatError::DataLength {
                    name: name.clone(),
                    len: t.data.len(),
                    shape: shape.clone(),
                });
            }
            let arr = ArrayD::from_shape_vec(IxDyn(shape), t.data.iter().map(|x| cast::<T>(*x)).collect())
                .expect("length checked");
            out.insert(name.clone(), arr);
        }
        Ok(out)
    }
}

/// Uniform(-scale, scale) tensors for a manifest.
pub fn random_tensors<T: Scalar, R: Rng + ?Sized>(manifest: &Manifest, rng: &mut R, scale: f64) -> BTreeMap<String, ArrayD<T>> {
    manifest
        .iter()
        .map(|(name, shape)| {
            let n = shape.iter().product();
            let data = (0..n).map(|_| cast::<T>(rng.gen_range(-scale..=scale))).collect();
            (name.clone(), ArrayD::from_shape_vec(IxDyn(shape), data).unwrap())
        })
        .collect()
}

pub fn zero_tensors<T: Scalar>(manifest: &Manifest) -> BTreeMap<String, ArrayD<T>> {
    manifest
        .iter()
        .map(|(name, shape)| (name.clone(), ArrayD::zeros(IxDyn(shape))))
        .collect()
}

pub fn relu_in_place<T: Scalar, D: ndarray::Dimension>(a: &mut ndarray::Array<T, D>) {
    a.mapv_inplace(|x| if x > T::zero() { x } else { T::zero() });
}

/// Zero-padded 3x3 convolution preserving height and width.
/// `input` is `[C, H, W]`, `weight` is `[O, C * 9]` (row-major `[O, C, 3, 3]`), `bias` is `[O]`.
pub fn conv3x3_same<T: Scalar>(input: &Array3<T>, weight: &Array2<T>, bias: &Array1<T>) -> Array3<T> {
    let (c, h, w) = input.dim();
    let mut cols = Array2::<T>::zeros((c * 9, h * w));
    for ci in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = ci * 9 + ky * 3 + kx;
                let mut dst = cols.row_mut(row);
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            dst[y * w + x] = input[[ci, sy as usize, sx as usize]];
                        }
                    }
                }
            }
        }
    }
    let mut out = weight.dot(&cols);
    for (mut row, b) in out.rows_mut().into_iter().zip(bias.iter()) {
        row.mapv_inplace(|x| x + *b);
    }
    let o = weight.nrows();
    out.into_shape((o, h, w)).expect("contiguous gemm output")
}

/// Zero-padded 1D convolution with odd kernel `k`, preserving length.
/// `input` is `[C, L]`, `weight` is `[O, C * k]` (row-major `[O, C, k]`).
pub fn conv1d_same<T: Scalar>(input: &Array2<T>, weight: &Array2<T>, bias: &Array1<T>, k: usize) -> Array2<T> {
    let (c, len) = input.dim();
    let half = (k / 2) as isize;
    let mut cols = Array2::<T>::zeros((c * k, len));
    for ci in 0..c {
        for kk in 0..k {
            for x in 0..len {
                let sx = x as isize + kk as isize - half;
                if sx >= 0 && sx < len as isize {
                    cols[[ci * k + kk, x]] = input[[ci, sx as usize]];
                }
            }
        }
    }
    let mut out = weight.dot(&cols);
    for (mut row, b) in out.rows_mut().into_iter().zip(bias.iter()) {
        row.mapv_inplace(|x| x + *b);
    }
    out
}

/// Softmax over the entries with `mask[i]`; masked entries get probability 0.
/// With nothing legal the result is all zeros.
pub fn masked_softmax<T: Scalar>(logits: &[T], mask: &[bool]) -> Vec<T> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(l, _)| *l)
        .fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return vec![T::zero(); logits.len()];
    }
    let exps: Vec<T> = logits
        .iter()
        .zip(mask)
        .map(|(l, m)| if *m { (*l - max).exp() } else { T::zero() })
        .collect();
    let sum = exps.iter().fold(T::zero(), |a, b| a + *b);
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    masked_softmax(logits, &vec![true; logits.len()])
}

/// Dense layer `y = W x + b` with `W` as `[out, in]`.
pub fn dense<T: Scalar>(x: &Array1<T>, w: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    w.dot(x) + b
}

/// Reshape a stored `[O, C, k...]` tensor into the `[O, C * k...]` gemm layout.
pub fn as_matrix<T: Scalar>(t: &ArrayD<T>) -> Array2<T> {
    let o = t.shape()[0];
    let rest = t.len() / o;
    t.clone().into_shape((o, rest)).expect("contiguous tensor")
}

pub fn as_vector<T: Scalar>(t: &ArrayD<T>) -> Array1<T> {
    t.clone().into_shape(t.len()).expect("contiguous tensor")
}

/// Average over the spatial axes of a `[C, H, W]` array.
pub fn spatial_mean<T: Scalar>(a: &Array3<T>) -> Array1<T> {
    let (c, h, w) = a.dim();
    let n: T = cast((h * w) as f64);
    Array1::from_iter((0..c).map(|ci| a.slice(s![ci, .., ..]).sum() / n))
}
