//! Flat parameter layout for fully connected ReLU networks.
//!
//! Layer `k` (1-based, `1..=L`) occupies a contiguous block of
//! `ℓ_k (ℓ_{k-1} + 1)` coordinates: first the `ℓ_k × ℓ_{k-1}` weight matrix in
//! row-major order, then the `ℓ_k` biases. Public index maps are 1-based;
//! slices returned by [`ParamVector::layer_weights`] and friends are plain
//! 0-based Rust slices.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer dimensions `(ℓ_0, …, ℓ_L)` of a network with `L ≥ 2` affine maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    param_count: usize,
}

impl Architecture {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidArchitecture(format!("need at least two affine layers, got dims {dims:?}")));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArchitecture(format!("layer {pos} has zero width")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0usize;
        offsets.push(0);
        for k in 1..dims.len() {
            offsets.push(acc);
            acc += dims[k] * (dims[k - 1] + 1);
        }
        Ok(Self { dims: dims.to_vec(), offsets, param_count: acc })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of affine layers `L`.
    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    /// Width `ℓ_k`.
    pub fn width(&self, k: usize) -> usize {
        self.dims[k]
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.depth()]
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// 0-based offset of layer `k`'s block.
    pub(crate) fn layer_offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// 0-based position of weight `(i, j)` of layer `k`, with 0-based `i`, `j`.
    #[inline]
    pub(crate) fn w_pos(&self, k: usize, i: usize, j: usize) -> usize {
        self.offsets[k] + i * self.dims[k - 1] + j
    }

    /// 0-based position of bias `i` of layer `k`, with 0-based `i`.
    #[inline]
    pub(crate) fn b_pos(&self, k: usize, i: usize) -> usize {
        self.offsets[k] + self.dims[k] * self.dims[k - 1] + i
    }

    fn check_neuron(&self, k: usize, i: usize) -> Result<()> {
        if k == 0 || k > self.depth() {
            return Err(Error::IndexOutOfRange(format!("layer {k} not in 1..={}", self.depth())));
        }
        if i == 0 || i > self.dims[k] {
            return Err(Error::IndexOutOfRange(format!("neuron {i} not in 1..={} of layer {k}", self.dims[k])));
        }
        Ok(())
    }

    /// 1-based flat index of weight `𝔴^k_{i,j}`.
    pub fn weight_index(&self, k: usize, i: usize, j: usize) -> Result<usize> {
        self.check_neuron(k, i)?;
        if j == 0 || j > self.dims[k - 1] {
            return Err(Error::IndexOutOfRange(format!("input {j} not in 1..={} of layer {k}", self.dims[k - 1])));
        }
        Ok(self.w_pos(k, i - 1, j - 1) + 1)
    }

    /// 1-based flat index of bias `𝔟^k_i`.
    pub fn bias_index(&self, k: usize, i: usize) -> Result<usize> {
        self.check_neuron(k, i)?;
        Ok(self.b_pos(k, i - 1) + 1)
    }

    /// The hidden neurons `Λ`, layer by layer.
    pub fn hidden_keys(&self) -> impl Iterator<Item = NeuronKey> + '_ {
        (1..self.depth()).flat_map(move |k| (1..=self.dims[k]).map(move |i| NeuronKey { layer: k, index: i }))
    }

    pub fn hidden_count(&self) -> usize {
        self.dims[1..self.depth()].iter().sum()
    }

    /// 0-based flat positions of the neuron sub-vector `V^k_i`: incoming
    /// weights followed by the bias.
    pub(crate) fn subvector_positions(&self, key: NeuronKey) -> impl Iterator<Item = usize> + '_ {
        let k = key.layer;
        let i = key.index - 1;
        (0..self.dims[k - 1]).map(move |j| self.w_pos(k, i, j)).chain(std::iter::once(self.b_pos(k, i)))
    }

    pub fn validate_key(&self, key: NeuronKey) -> Result<()> {
        self.check_neuron(key.layer, key.index)
    }
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Architecture::new(&v)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(a: Architecture) -> Self {
        a.dims
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Neuron `i` of layer `k`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NeuronKey {
    pub layer: usize,
    pub index: usize,
}

impl NeuronKey {
    pub fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

/// Flat parameter vector `θ ∈ ℝ^𝔡` bound to its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    arch: Arc<Architecture>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(arch: Arc<Architecture>, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: arch.param_count(),
                got: values.len(),
                context: "parameter vector",
            });
        }
        Ok(Self { arch, values })
    }

    pub fn zeros(arch: Arc<Architecture>) -> Self {
        let n = arch.param_count();
        Self { arch, values: vec![0.0; n] }
    }

    /// Independent standard normal coordinates scaled by `scale`.
    pub fn sample_normal<R: Rng + ?Sized>(arch: Arc<Architecture>, rng: &mut R, scale: f64) -> Self {
        let values = (0..arch.param_count()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { arch, values }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn arch_arc(&self) -> &Arc<Architecture> {
        &self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same architecture, new coordinates.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.arch), values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major `ℓ_k × ℓ_{k-1}` weight block of layer `k`.
    pub fn layer_weights(&self, k: usize) -> &[f64] {
        let start = self.arch.layer_offset(k);
        &self.values[start..start + self.arch.width(k) * self.arch.width(k - 1)]
    }

    pub fn layer_biases(&self, k: usize) -> &[f64] {
        let start = self.arch.b_pos(k, 0);
        &self.values[start..start + self.arch.width(k)]
    }

    /// `𝔴^k_{i,j}` with 1-based indices.
    pub fn weight(&self, k: usize, i: usize, j: usize) -> Result<f64> {
        Ok(self.values[self.arch.weight_index(k, i, j)? - 1])
    }

    /// `𝔟^k_i` with 1-based indices.
    pub fn bias(&self, k: usize, i: usize) -> Result<f64> {
        Ok(self.values[self.arch.bias_index(k, i)? - 1])
    }

    /// `V^k_i`: incoming weights of neuron `(k, i)` followed by its bias.
    pub fn neuron_subvector(&self, key: NeuronKey) -> Result<Vec<f64>> {
        self.arch.validate_key(key)?;
        Ok(self.arch.subvector_positions(key).map(|p| self.values[p]).collect())
    }

    pub fn set_neuron_subvector(&mut self, key: NeuronKey, v: &[f64]) -> Result<()> {
        self.arch.validate_key(key)?;
        let expected = self.arch.width(key.layer - 1) + 1;
        if v.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: v.len(), context: "neuron sub-vector" });
        }
        let positions: Vec<usize> = self.arch.subvector_positions(key).collect();
        for (p, &x) in positions.into_iter().zip(v) {
            self.values[p] = x;
        }
        Ok(())
    }

    /// Squared norm of `V^k_i` without allocating.
    pub(crate) fn subvector_norm_sq(&self, key: NeuronKey) -> f64 {
        self.arch.subvector_positions(key).map(|p| self.values[p] * self.values[p]).sum()
    }

    /// `min_{(k,i) ∈ Λ} ‖V^k_i‖`.
    pub fn min_hidden_norm(&self) -> f64 {
        self.arch.hidden_keys().map(|key| self.subvector_norm_sq(key).sqrt()).fold(f64::INFINITY, f64::min)
    }
}
