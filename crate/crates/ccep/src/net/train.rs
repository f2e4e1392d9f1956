//! SGD training: softmax cross-entropy, backpropagation for every layer
//! kind, momentum, weight decay, and a step learning-rate schedule.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ArchitectureSpec, LayerSpec, LayerWeights, NetError, NetworkModel, Shape};
use crate::dataset::LabeledDataset;

/// Hyperparameters of one finetune run: SGD with momentum, weight decay,
/// and learning rate multiplied by 0.1 at each milestone epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub initial_lr: f64,
    pub epochs: usize,
    pub milestones: Vec<usize>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
}

impl FinetuneConfig {
    /// Full-scale preset for small-image classification runs.
    pub fn cifar10() -> Self {
        Self {
            initial_lr: 0.1,
            epochs: 100,
            milestones: vec![50],
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 128,
        }
    }

    /// Full-scale preset for large-image classification runs.
    pub fn imagenet() -> Self {
        Self {
            initial_lr: 0.01,
            epochs: 60,
            milestones: vec![20, 40, 50],
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 256,
        }
    }

    /// Minutes-scale preset for the synthetic desk tasks.
    pub fn desk() -> Self {
        Self {
            initial_lr: 0.05,
            epochs: 30,
            milestones: vec![20],
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 32,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "cifar10" => Some(Self::cifar10()),
            "imagenet" => Some(Self::imagenet()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.initial_lr <= 0.0 {
            return Err(NetError::InvalidArchitecture(
                "learning rate must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(NetError::InvalidArchitecture(
                "batch size must be at least 1".into(),
            ));
        }
        let increasing = self.milestones.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.milestones.iter().all(|&m| m < self.epochs);
        if !increasing || (self.epochs > 0 && !in_range) {
            return Err(NetError::InvalidArchitecture(
                "milestones must be strictly increasing and below epochs".into(),
            ));
        }
        Ok(())
    }
}

fn zeros_like(weights: &[LayerWeights]) -> Vec<LayerWeights> {
    weights
        .iter()
        .map(|lw| match lw {
            LayerWeights::Dense { w, b } => LayerWeights::Dense {
                w: vec![0.0; w.len()],
                b: vec![0.0; b.len()],
            },
            LayerWeights::Conv { w, b } => LayerWeights::Conv {
                w: vec![0.0; w.len()],
                b: vec![0.0; b.len()],
            },
            LayerWeights::None => LayerWeights::None,
        })
        .collect()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Mean softmax cross-entropy loss and its gradient w.r.t. every weight,
/// on one batch. Gradients mirror the weight layout.
pub fn loss_and_gradients(
    net: &NetworkModel,
    features: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<LayerWeights>), NetError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(NetError::EmptyDataset);
    }
    let batch = features.len() as f64;
    let mut grads = zeros_like(net.weights());
    let mut loss = 0.0;

    for (x, &label) in features.iter().zip(labels) {
        if x.len() != net.input_size() {
            return Err(NetError::ShapeMismatch(format!(
                "sample has {} features, network expects {}",
                x.len(),
                net.input_size()
            )));
        }
        let acts = net.forward_cached(x);
        let scores = acts.last().unwrap();
        let probs = softmax(scores);
        loss -= probs[label].max(f64::MIN_POSITIVE).ln() / batch;

        // d loss / d scores
        let mut dout: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| (p - f64::from(u8::from(i == label))) / batch)
            .collect();

        for i in (0..net.spec().layers.len()).rev() {
            let input = &acts[i];
            dout = backward_layer(net, &mut grads, i, input, &dout);
        }
    }
    Ok((loss, grads))
}

/// Gradient of one layer: accumulates weight/bias gradients into `grads`
/// and returns the gradient w.r.t. the layer input.
fn backward_layer(
    net: &NetworkModel,
    grads: &mut [LayerWeights],
    i: usize,
    input: &[f64],
    dout: &[f64],
) -> Vec<f64> {
    match (&net.spec().layers[i], &net.weights()[i], &mut grads[i]) {
        (
            LayerSpec::Dense {
                in_units,
                out_units,
            },
            LayerWeights::Dense { w, .. },
            LayerWeights::Dense { w: gw, b: gb },
        ) => {
            let mut dx = vec![0.0; *in_units];
            for o in 0..*out_units {
                let d = dout[o];
                gb[o] += d;
                let row = o * in_units;
                for ii in 0..*in_units {
                    gw[row + ii] += d * input[ii];
                    dx[ii] += w[row + ii] * d;
                }
            }
            dx
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
            LayerWeights::Conv { w, .. },
            LayerWeights::Conv { w: gw, b: gb },
        ) => {
            let (ic, oc, k, s) = (*in_channels, *out_channels, *kernel_size, *stride);
            let (h, wd) = (*input_height, *input_width);
            let (oh, ow) = super::conv_out_dims(h, wd, k, s);
            let pad = (k - 1) / 2;
            let mut dx = vec![0.0; ic * h * wd];
            for o in 0..oc {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let d = dout[(o * oh + oy) * ow + ox];
                        gb[o] += d;
                        for c in 0..ic {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = (oy * s + ky) as isize - pad as isize;
                                    let ix = (ox * s + kx) as isize - pad as isize;
                                    if iy < 0
                                        || ix < 0
                                        || iy as usize >= h
                                        || ix as usize >= wd
                                    {
                                        continue;
                                    }
                                    let xi = c * h * wd + iy as usize * wd + ix as usize;
                                    let wi = ((o * ic + c) * k + ky) * k + kx;
                                    gw[wi] += d * input[xi];
                                    dx[xi] += w[wi] * d;
                                }
                            }
                        }
                    }
                }
            }
            dx
        }
        (LayerSpec::GlobalAvgPool, _, _) => {
            let Shape::Map {
                channels,
                height,
                width,
            } = net.layer_input_shape(i)
            else {
                unreachable!("validated")
            };
            let area = (height * width) as f64;
            let mut dx = vec![0.0; channels * height * width];
            for c in 0..channels {
                let d = dout[c] / area;
                for v in dx[c * height * width..(c + 1) * height * width].iter_mut() {
                    *v = d;
                }
            }
            dx
        }
        (LayerSpec::Relu, _, _) => input
            .iter()
            .zip(dout)
            .map(|(x, d)| if *x > 0.0 { *d } else { 0.0 })
            .collect(),
        _ => unreachable!("validated"),
    }
}

fn sgd_step(
    weights: &mut [LayerWeights],
    velocity: &mut [LayerWeights],
    grads: &[LayerWeights],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for ((wl, vl), gl) in weights.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        let (LayerWeights::Dense { w, b } | LayerWeights::Conv { w, b }) = wl else {
            continue;
        };
        let (LayerWeights::Dense { w: vw, b: vb } | LayerWeights::Conv { w: vw, b: vb }) = vl
        else {
            continue;
        };
        let (LayerWeights::Dense { w: gw, b: gb } | LayerWeights::Conv { w: gw, b: gb }) = gl
        else {
            continue;
        };
        for ((wi, vi), gi) in w.iter_mut().zip(vw.iter_mut()).zip(gw) {
            *vi = momentum * *vi + gi + weight_decay * *wi;
            *wi -= lr * *vi;
        }
        for ((bi, vi), gi) in b.iter_mut().zip(vb.iter_mut()).zip(gb) {
            *vi = momentum * *vi + gi + weight_decay * *bi;
            *bi -= lr * *vi;
        }
    }
}

/// Mini-batch SGD on softmax cross-entropy. Deterministic given the
/// random stream, which drives per-epoch shuffling. `epochs = 0` returns
/// the network unchanged. Aborts with [`NetError::Diverged`] if the loss
/// becomes non-finite.
pub fn finetune<R: Rng + ?Sized>(
    net: &NetworkModel,
    train: &LabeledDataset,
    cfg: &FinetuneConfig,
    rng: &mut R,
) -> Result<NetworkModel, NetError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let mut weights = net.weights().to_vec();
    let mut velocity = zeros_like(&weights);
    let mut indices: Vec<usize> = (0..train.len()).collect();
    let mut current = net.clone();

    for epoch in 0..cfg.epochs {
        let decays = cfg.milestones.iter().filter(|&&m| m <= epoch).count() as i32;
        let lr = cfg.initial_lr * 0.1f64.powi(decays);
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size) {
            let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| train.features[i].clone()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (loss, grads) = loss_and_gradients(&current, &xs, &ys)?;
            if !loss.is_finite() {
                return Err(NetError::Diverged);
            }
            sgd_step(
                &mut weights,
                &mut velocity,
                &grads,
                lr,
                cfg.momentum,
                cfg.weight_decay,
            );
            current = current.with_weights(weights.clone())?;
        }
    }
    Ok(current)
}

/// Fresh random initialization: weights uniform in `±sqrt(1/fan_in)`,
/// biases zero.
pub fn init_weights<R: Rng + ?Sized>(
    spec: &ArchitectureSpec,
    rng: &mut R,
) -> Result<NetworkModel, NetError> {
    let weights = spec
        .layers
        .iter()
        .map(|layer| match *layer {
            LayerSpec::Dense {
                in_units,
                out_units,
            } => {
                let bound = (1.0 / in_units as f64).sqrt();
                LayerWeights::Dense {
                    w: (0..in_units * out_units)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect(),
                    b: vec![0.0; out_units],
                }
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => {
                let fan_in = (in_channels * kernel_size * kernel_size) as f64;
                let bound = (1.0 / fan_in).sqrt();
                LayerWeights::Conv {
                    w: (0..out_channels * in_channels * kernel_size * kernel_size)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect(),
                    b: vec![0.0; out_channels],
                }
            }
            LayerSpec::GlobalAvgPool | LayerSpec::Relu => LayerWeights::None,
        })
        .collect();
    NetworkModel::new(spec.clone(), weights)
}

/// Train a freshly initialized network.
pub fn train_from_scratch<R: Rng + ?Sized>(
    spec: &ArchitectureSpec,
    train: &LabeledDataset,
    cfg: &FinetuneConfig,
    rng: &mut R,
) -> Result<NetworkModel, NetError> {
    let net = init_weights(spec, rng)?;
    finetune(&net, train, cfg, rng)
}
