//! Minimal sequential neural network substrate: architecture description,
//! deterministic forward pass, FLOPs accounting, and structural pruning by
//! genome application (splicing).
//!
//! Conventions: convolutions use zero padding of `(k-1)/2` so odd kernels
//! at stride 1 preserve spatial size; one multiply-accumulate counts as
//! 2 FLOPs; bias adds, activations and pooling contribute 0 FLOPs.

pub mod checkpoint;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;
use crate::genome::LayerGenome;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("genome count {got} does not match {expected} prunable layers")]
    GenomeCount { expected: usize, got: usize },
    #[error("genome length {got} does not match layer {layer} width {expected}")]
    GenomeLength {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("genome for layer {0} prunes every filter")]
    AllPruned(usize),
    #[error("layer {0} is not prunable")]
    NotPrunable(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite weight encountered")]
    NonFiniteWeight,
    #[error("training diverged: loss became non-finite")]
    Diverged,
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
}

/// Data shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Flat(usize),
    Map {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Shape {
    pub fn size(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Map {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        in_units: usize,
        out_units: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        input_height: usize,
        input_width: usize,
    },
    GlobalAvgPool,
    Relu,
}

impl LayerSpec {
    pub fn is_parametric(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. })
    }

    /// Output width (units or filters) of a parametric layer.
    pub fn out_width(&self) -> Option<usize> {
        match *self {
            LayerSpec::Dense { out_units, .. } => Some(out_units),
            LayerSpec::Conv2d { out_channels, .. } => Some(out_channels),
            _ => None,
        }
    }
}

fn conv_out_dims(h: usize, w: usize, k: usize, stride: usize) -> (usize, usize) {
    let pad = (k - 1) / 2;
    ((h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1)
}

/// Ordered layer descriptors plus per-layer prunable flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub layers: Vec<LayerSpec>,
    pub prunable: Vec<bool>,
}

impl ArchitectureSpec {
    pub fn new(layers: Vec<LayerSpec>, prunable: Vec<bool>) -> Result<Self, NetError> {
        let spec = Self { layers, prunable };
        spec.shapes()?;
        Ok(spec)
    }

    pub fn input_shape(&self) -> Result<Shape, NetError> {
        match self.layers.first() {
            Some(&LayerSpec::Dense { in_units, .. }) => Ok(Shape::Flat(in_units)),
            Some(&LayerSpec::Conv2d {
                in_channels,
                input_height,
                input_width,
                ..
            }) => Ok(Shape::Map {
                channels: in_channels,
                height: input_height,
                width: input_width,
            }),
            _ => Err(NetError::InvalidArchitecture(
                "first layer must be dense or conv".into(),
            )),
        }
    }

    /// Validates the architecture and returns the output shape of each layer.
    pub fn shapes(&self) -> Result<Vec<Shape>, NetError> {
        if self.layers.is_empty() {
            return Err(NetError::InvalidArchitecture("no layers".into()));
        }
        if self.layers.len() != self.prunable.len() {
            return Err(NetError::InvalidArchitecture(format!(
                "{} layers but {} prunable flags",
                self.layers.len(),
                self.prunable.len()
            )));
        }
        let mut shape = self.input_shape()?;
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            if self.prunable[i] && !layer.is_parametric() {
                return Err(NetError::InvalidArchitecture(format!(
                    "layer {i} is flagged prunable but has no filters"
                )));
            }
            shape = match *layer {
                LayerSpec::Dense {
                    in_units,
                    out_units,
                } => {
                    if in_units == 0 || out_units == 0 {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: dense dims must be positive"
                        )));
                    }
                    match shape {
                        Shape::Flat(n) if n == in_units => Shape::Flat(out_units),
                        Shape::Map { .. } => {
                            return Err(NetError::InvalidArchitecture(format!(
                                "layer {i}: dense after conv requires global average pooling"
                            )))
                        }
                        Shape::Flat(n) => {
                            return Err(NetError::InvalidArchitecture(format!(
                                "layer {i}: dense expects {in_units} inputs, got {n}"
                            )))
                        }
                    }
                }
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                    input_height,
                    input_width,
                } => {
                    if in_channels == 0 || out_channels == 0 {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: conv channels must be positive"
                        )));
                    }
                    if kernel_size == 0 || kernel_size % 2 == 0 {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: kernel size must be odd and positive"
                        )));
                    }
                    if stride == 0 {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: stride must be positive"
                        )));
                    }
                    let expect = Shape::Map {
                        channels: in_channels,
                        height: input_height,
                        width: input_width,
                    };
                    if shape != expect {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: conv input {expect:?} but upstream produces {shape:?}"
                        )));
                    }
                    let (h, w) = conv_out_dims(input_height, input_width, kernel_size, stride);
                    if h == 0 || w == 0 {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: conv output collapses to zero size"
                        )));
                    }
                    Shape::Map {
                        channels: out_channels,
                        height: h,
                        width: w,
                    }
                }
                LayerSpec::GlobalAvgPool => match shape {
                    Shape::Map { channels, .. } => Shape::Flat(channels),
                    Shape::Flat(_) => {
                        return Err(NetError::InvalidArchitecture(format!(
                            "layer {i}: pooling expects a feature map"
                        )))
                    }
                },
                LayerSpec::Relu => shape,
            };
            shapes.push(shape);
        }
        // The classifier (last parametric layer) is never prunable.
        if let Some(last) = (0..self.layers.len())
            .rev()
            .find(|&i| self.layers[i].is_parametric())
        {
            if self.prunable[last] {
                return Err(NetError::InvalidArchitecture(
                    "the output layer must not be prunable".into(),
                ));
            }
        }
        Ok(shapes)
    }

    /// Indices of prunable layers, ascending.
    pub fn prunable_layers(&self) -> Vec<usize> {
        (0..self.layers.len())
            .filter(|&i| self.prunable[i])
            .collect()
    }
}

/// Weight and bias tensors for one layer. Dense weights are row-major
/// `out × in`; conv weights are `out × in × k × k`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    Dense { w: Vec<f64>, b: Vec<f64> },
    Conv { w: Vec<f64>, b: Vec<f64> },
    None,
}

impl LayerWeights {
    fn param_count(&self) -> usize {
        match self {
            LayerWeights::Dense { w, b } | LayerWeights::Conv { w, b } => w.len() + b.len(),
            LayerWeights::None => 0,
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            LayerWeights::Dense { w, b } | LayerWeights::Conv { w, b } => {
                w.iter().chain(b.iter()).all(|v| v.is_finite())
            }
            LayerWeights::None => true,
        }
    }
}

/// An architecture plus matching weights. Immutable once built; forward,
/// evaluate and flops are read-only and safe to share across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    spec: ArchitectureSpec,
    weights: Vec<LayerWeights>,
    shapes: Vec<Shape>,
}

impl NetworkModel {
    pub fn new(spec: ArchitectureSpec, weights: Vec<LayerWeights>) -> Result<Self, NetError> {
        let shapes = spec.shapes()?;
        if weights.len() != spec.layers.len() {
            return Err(NetError::InvalidArchitecture(format!(
                "{} weight sets for {} layers",
                weights.len(),
                spec.layers.len()
            )));
        }
        for (i, (layer, wts)) in spec.layers.iter().zip(&weights).enumerate() {
            let ok = match (layer, wts) {
                (
                    LayerSpec::Dense {
                        in_units,
                        out_units,
                    },
                    LayerWeights::Dense { w, b },
                ) => w.len() == in_units * out_units && b.len() == *out_units,
                (
                    LayerSpec::Conv2d {
                        in_channels,
                        out_channels,
                        kernel_size,
                        ..
                    },
                    LayerWeights::Conv { w, b },
                ) => {
                    w.len() == out_channels * in_channels * kernel_size * kernel_size
                        && b.len() == *out_channels
                }
                (LayerSpec::GlobalAvgPool | LayerSpec::Relu, LayerWeights::None) => true,
                _ => false,
            };
            if !ok {
                return Err(NetError::InvalidArchitecture(format!(
                    "layer {i}: weight shapes disagree with spec"
                )));
            }
            if !wts.all_finite() {
                return Err(NetError::NonFiniteWeight);
            }
        }
        Ok(Self {
            spec,
            weights,
            shapes,
        })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[LayerWeights] {
        &self.weights
    }

    /// Replace the weights, revalidating shapes. Used by training and the
    /// finite-difference tests.
    pub fn with_weights(&self, weights: Vec<LayerWeights>) -> Result<Self, NetError> {
        Self::new(self.spec.clone(), weights)
    }

    pub fn input_size(&self) -> usize {
        self.spec.input_shape().expect("validated").size()
    }

    pub fn num_params(&self) -> u64 {
        self.weights.iter().map(|w| w.param_count() as u64).sum()
    }

    /// Output width of each prunable layer, in layer order.
    pub fn prunable_widths(&self) -> Vec<(usize, usize)> {
        self.spec
            .prunable_layers()
            .into_iter()
            .map(|i| (i, self.spec.layers[i].out_width().expect("parametric")))
            .collect()
    }

    fn layer_input_shape(&self, i: usize) -> Shape {
        if i == 0 {
            self.spec.input_shape().expect("validated")
        } else {
            self.shapes[i - 1]
        }
    }

    fn apply_layer(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let in_shape = self.layer_input_shape(i);
        match (&self.spec.layers[i], &self.weights[i]) {
            (
                LayerSpec::Dense {
                    in_units,
                    out_units,
                },
                LayerWeights::Dense { w, b },
            ) => {
                let mut out = Vec::with_capacity(*out_units);
                for o in 0..*out_units {
                    let row = &w[o * in_units..(o + 1) * in_units];
                    let mut acc = b[o];
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    out.push(acc);
                }
                out
            }
            (
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                    input_height,
                    input_width,
                },
                LayerWeights::Conv { w, b },
            ) => {
                let (ic, oc, k, s) = (*in_channels, *out_channels, *kernel_size, *stride);
                let (h, wd) = (*input_height, *input_width);
                let (oh, ow) = conv_out_dims(h, wd, k, s);
                let pad = (k - 1) / 2;
                let mut out = vec![0.0; oc * oh * ow];
                for o in 0..oc {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = b[o];
                            for c in 0..ic {
                                for ky in 0..k {
                                    for kx in 0..k {
                                        let iy = (oy * s + ky) as isize - pad as isize;
                                        let ix = (ox * s + kx) as isize - pad as isize;
                                        let xv = if iy >= 0
                                            && ix >= 0
                                            && (iy as usize) < h
                                            && (ix as usize) < wd
                                        {
                                            x[c * h * wd + iy as usize * wd + ix as usize]
                                        } else {
                                            0.0
                                        };
                                        acc += w[((o * ic + c) * k + ky) * k + kx] * xv;
                                    }
                                }
                            }
                            out[(o * oh + oy) * ow + ox] = acc;
                        }
                    }
                }
                out
            }
            (LayerSpec::GlobalAvgPool, _) => {
                let Shape::Map {
                    channels,
                    height,
                    width,
                } = in_shape
                else {
                    unreachable!("validated")
                };
                let area = (height * width) as f64;
                (0..channels)
                    .map(|c| {
                        x[c * height * width..(c + 1) * height * width]
                            .iter()
                            .sum::<f64>()
                            / area
                    })
                    .collect()
            }
            (LayerSpec::Relu, _) => x.iter().map(|v| v.max(0.0)).collect(),
            _ => unreachable!("validated"),
        }
    }

    fn forward_one(&self, sample: &[f64]) -> Vec<f64> {
        let mut x = sample.to_vec();
        for i in 0..self.spec.layers.len() {
            x = self.apply_layer(i, &x);
        }
        x
    }

    /// Per-layer activations for one sample: `acts[0]` is the input,
    /// `acts[i+1]` the output of layer `i`.
    pub(crate) fn forward_cached(&self, sample: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.spec.layers.len() + 1);
        acts.push(sample.to_vec());
        for i in 0..self.spec.layers.len() {
            let next = self.apply_layer(i, acts.last().unwrap());
            acts.push(next);
        }
        acts
    }

    /// Deterministic class scores for a batch of feature vectors.
    pub fn forward(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NetError> {
        let expect = self.input_size();
        for (i, sample) in batch.iter().enumerate() {
            if sample.len() != expect {
                return Err(NetError::ShapeMismatch(format!(
                    "sample {i} has {} features, network expects {expect}",
                    sample.len()
                )));
            }
        }
        Ok(batch.iter().map(|s| self.forward_one(s)).collect())
    }

    /// Correct-count accuracy: number of samples whose argmax score (first
    /// index on ties) equals the label, as an exact integer pair.
    pub fn evaluate(&self, data: &LabeledDataset) -> Result<(usize, usize), NetError> {
        if data.len() == 0 {
            return Err(NetError::EmptyDataset);
        }
        let scores = self.forward(&data.features)?;
        let correct = scores
            .iter()
            .zip(&data.labels)
            .filter(|(s, &label)| argmax(s) == label)
            .count();
        Ok((correct, data.len()))
    }

    /// Forward-pass FLOPs under the fixed convention: 2 per multiply-
    /// accumulate (padding positions included), 0 for bias/activation/pool.
    pub fn flops(&self) -> u64 {
        self.spec
            .layers
            .iter()
            .map(|layer| match *layer {
                LayerSpec::Dense {
                    in_units,
                    out_units,
                } => 2 * in_units as u64 * out_units as u64,
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                    input_height,
                    input_width,
                } => {
                    let (oh, ow) = conv_out_dims(input_height, input_width, kernel_size, stride);
                    2 * kernel_size as u64
                        * kernel_size as u64
                        * in_channels as u64
                        * out_channels as u64
                        * oh as u64
                        * ow as u64
                }
                _ => 0,
            })
            .sum()
    }

    /// Structurally remove pruned units: one genome per prunable layer, in
    /// layer order. Pruned output rows/filters and the consuming layer's
    /// matching input columns/channels are deleted; surviving weights are
    /// copied unchanged.
    pub fn apply_genomes(&self, genomes: &[LayerGenome]) -> Result<NetworkModel, NetError> {
        let prunable = self.spec.prunable_layers();
        if genomes.len() != prunable.len() {
            return Err(NetError::GenomeCount {
                expected: prunable.len(),
                got: genomes.len(),
            });
        }
        let mut genome_iter = prunable.iter().zip(genomes);
        let mut new_layers = Vec::with_capacity(self.spec.layers.len());
        let mut new_weights = Vec::with_capacity(self.weights.len());
        // Kept input indices imposed on the next parametric layer by an
        // upstream prune; None means all inputs survive.
        let mut keep_in: Option<Vec<usize>> = None;

        for (i, layer) in self.spec.layers.iter().enumerate() {
            let keep_out = if self.spec.prunable[i] {
                let (&li, genome) = genome_iter.next().expect("counted above");
                debug_assert_eq!(li, i);
                let width = layer.out_width().expect("prunable is parametric");
                if genome.len() != width {
                    return Err(NetError::GenomeLength {
                        layer: i,
                        expected: width,
                        got: genome.len(),
                    });
                }
                if genome.retained() == 0 {
                    return Err(NetError::AllPruned(i));
                }
                Some(genome.kept_indices())
            } else {
                None
            };

            match (layer, &self.weights[i]) {
                (
                    LayerSpec::Dense {
                        in_units,
                        out_units,
                    },
                    LayerWeights::Dense { w, b },
                ) => {
                    let in_idx: Vec<usize> =
                        keep_in.take().unwrap_or_else(|| (0..*in_units).collect());
                    let out_idx: Vec<usize> = keep_out
                        .clone()
                        .unwrap_or_else(|| (0..*out_units).collect());
                    let mut nw = Vec::with_capacity(out_idx.len() * in_idx.len());
                    let mut nb = Vec::with_capacity(out_idx.len());
                    for &o in &out_idx {
                        for &ii in &in_idx {
                            nw.push(w[o * in_units + ii]);
                        }
                        nb.push(b[o]);
                    }
                    new_layers.push(LayerSpec::Dense {
                        in_units: in_idx.len(),
                        out_units: out_idx.len(),
                    });
                    new_weights.push(LayerWeights::Dense { w: nw, b: nb });
                    keep_in = keep_out;
                }
                (
                    LayerSpec::Conv2d {
                        in_channels,
                        out_channels,
                        kernel_size,
                        stride,
                        input_height,
                        input_width,
                    },
                    LayerWeights::Conv { w, b },
                ) => {
                    let k = *kernel_size;
                    let in_idx: Vec<usize> = keep_in
                        .take()
                        .unwrap_or_else(|| (0..*in_channels).collect());
                    let out_idx: Vec<usize> = keep_out
                        .clone()
                        .unwrap_or_else(|| (0..*out_channels).collect());
                    let mut nw = Vec::with_capacity(out_idx.len() * in_idx.len() * k * k);
                    let mut nb = Vec::with_capacity(out_idx.len());
                    for &o in &out_idx {
                        for &c in &in_idx {
                            let base = ((o * in_channels + c) * k) * k;
                            nw.extend_from_slice(&w[base..base + k * k]);
                        }
                        nb.push(b[o]);
                    }
                    new_layers.push(LayerSpec::Conv2d {
                        in_channels: in_idx.len(),
                        out_channels: out_idx.len(),
                        kernel_size: k,
                        stride: *stride,
                        input_height: *input_height,
                        input_width: *input_width,
                    });
                    new_weights.push(LayerWeights::Conv { w: nw, b: nb });
                    keep_in = keep_out;
                }
                (LayerSpec::GlobalAvgPool, _) => {
                    // channel → dense-input mapping is one-to-one, so the
                    // pending keep mask passes through unchanged
                    new_layers.push(LayerSpec::GlobalAvgPool);
                    new_weights.push(LayerWeights::None);
                }
                (LayerSpec::Relu, _) => {
                    new_layers.push(LayerSpec::Relu);
                    new_weights.push(LayerWeights::None);
                }
                _ => unreachable!("validated"),
            }
        }
        let spec = ArchitectureSpec {
            layers: new_layers,
            prunable: self.spec.prunable.clone(),
        };
        NetworkModel::new(spec, new_weights)
    }

    /// Splice a single candidate layer into the frozen base: all-ones
    /// genomes everywhere except `layer_index`.
    pub fn splice_one(
        &self,
        layer_index: usize,
        genome: &LayerGenome,
    ) -> Result<NetworkModel, NetError> {
        let prunable = self.spec.prunable_layers();
        let slot = prunable
            .iter()
            .position(|&i| i == layer_index)
            .ok_or(NetError::NotPrunable(layer_index))?;
        let genomes: Vec<LayerGenome> = prunable
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                if j == slot {
                    Ok(genome.clone())
                } else {
                    let width = self.spec.layers[i].out_width().expect("parametric");
                    LayerGenome::all_ones(width)
                }
            })
            .collect::<Result<_, _>>()
            .map_err(|_: crate::genome::GenomeError| {
                NetError::InvalidArchitecture("zero-width layer".into())
            })?;
        self.apply_genomes(&genomes)
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in scores.iter().enumerate().skip(1) {
        if *v > scores[best] {
            best = i;
        }
    }
    best
}
