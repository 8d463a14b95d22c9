//! Emotion network: labels, architecture configs, parameters, and inference.
//!
//! Two architecture families are supported, both taking a single-channel
//! 48×48 input and producing 7 class probabilities:
//!
//! * `FERNET9` — nine 3×3 convolutions with a max-pool after every third
//!   conv, then two dense layers. The reference widths are
//!   8/8/8/16/16/16/32/32/32 with a 64-unit hidden dense layer.
//! * `RESNET_MINI` — a small residual alternative: at least one residual
//!   block and a global average pool in front of the dense head.
//!
//! Parameters live in a [`ParamSet`]: an ordered list of named tensors whose
//! names follow the layer order (`conv1.weight`, `conv1.bias`, …,
//! `res2.conv1.weight`, …, `dense2.bias`). The order is the contract for the
//! weights file format and for gradient/parameter correspondence.

use crate::error::Error;
use crate::image::GrayImage;
use crate::tensor::{conv2d, dense, global_avg_pool, maxpool2d, relu, softmax, ConvSpec, Scalar, Tensor};
use crate::Result;

pub const NUM_CLASSES: usize = 7;
pub const INPUT_SIZE: usize = 48;

/// The seven emotion classes, in their frozen index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum EmotionLabel {
    Angry = 0,
    Disgust = 1,
    Fear = 2,
    Happy = 3,
    Sad = 4,
    Surprise = 5,
    Neutral = 6,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; NUM_CLASSES] = [
        EmotionLabel::Angry,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happy,
        EmotionLabel::Sad,
        EmotionLabel::Surprise,
        EmotionLabel::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<EmotionLabel> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::index(format!("emotion index {i} out of range 0..{NUM_CLASSES}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Angry => "Angry",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Happy => "Happy",
            EmotionLabel::Sad => "Sad",
            EmotionLabel::Surprise => "Surprise",
            EmotionLabel::Neutral => "Neutral",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn from_name(name: &str) -> Result<EmotionLabel> {
        let lower = name.to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::domain(format!("unknown emotion '{name}'")))
    }
}

impl std::fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One layer of the network, in execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv(ConvSpec),
    Relu,
    MaxPool { window: usize, stride: usize },
    /// Two shape-preserving convolutions with a shortcut add:
    /// `relu(x + conv2(relu(conv1(x))))`. Both convs are
    /// `channels → channels`, `kernel`×`kernel`, stride 1.
    Residual { channels: usize, kernel: usize, padding: usize },
    GlobalAvgPool,
    Flatten,
    Dense { inputs: usize, outputs: usize },
    Softmax,
}

/// Architecture family tag; each carries extra structural rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchTag {
    Fernet9,
    ResnetMini,
    /// Free-form layer list; only the shared structural rules apply
    /// (48×48 input, single trailing softmax, 7 outputs).
    Custom,
}

impl ArchTag {
    pub fn name(self) -> &'static str {
        match self {
            ArchTag::Fernet9 => "FERNET9",
            ArchTag::ResnetMini => "RESNET_MINI",
            ArchTag::Custom => "CUSTOM",
        }
    }
}

/// Ordered layer list plus the architecture tag and fixed input shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    pub tag: ArchTag,
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// Declaration of one parameter tensor: canonical name, shape, and the
/// fan-in/fan-out used for initialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub shape: Vec<usize>,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl NetworkConfig {
    /// Reference FERNET9 configuration (toy widths).
    pub fn fernet9() -> NetworkConfig {
        let widths = [8usize, 8, 8, 16, 16, 16, 32, 32, 32];
        let mut layers = Vec::new();
        let mut in_ch = 1usize;
        for (i, &w) in widths.iter().enumerate() {
            layers.push(LayerSpec::Conv(ConvSpec {
                out_channels: w,
                in_channels: in_ch,
                kernel_h: 3,
                kernel_w: 3,
                stride: 1,
                padding: 1,
            }));
            layers.push(LayerSpec::Relu);
            if (i + 1) % 3 == 0 {
                layers.push(LayerSpec::MaxPool { window: 2, stride: 2 });
            }
            in_ch = w;
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::Dense { inputs: 32 * 6 * 6, outputs: 64 });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dense { inputs: 64, outputs: NUM_CLASSES });
        layers.push(LayerSpec::Softmax);
        NetworkConfig { tag: ArchTag::Fernet9, input: [1, INPUT_SIZE, INPUT_SIZE], layers }
    }

    /// Reference RESNET_MINI configuration.
    pub fn resnet_mini() -> NetworkConfig {
        let layers = vec![
            LayerSpec::Conv(ConvSpec {
                out_channels: 16,
                in_channels: 1,
                kernel_h: 3,
                kernel_w: 3,
                stride: 1,
                padding: 1,
            }),
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2, stride: 2 },
            LayerSpec::Residual { channels: 16, kernel: 3, padding: 1 },
            LayerSpec::MaxPool { window: 2, stride: 2 },
            LayerSpec::Residual { channels: 16, kernel: 3, padding: 1 },
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense { inputs: 16, outputs: NUM_CLASSES },
            LayerSpec::Softmax,
        ];
        NetworkConfig { tag: ArchTag::ResnetMini, input: [1, INPUT_SIZE, INPUT_SIZE], layers }
    }

    /// Small desk-scale network: one conv block and a dense head. Fast
    /// enough to train on the synthetic glyphs in seconds while still
    /// exercising the conv/pool/dense/softmax path end to end.
    pub fn light() -> NetworkConfig {
        let layers = vec![
            LayerSpec::Conv(ConvSpec {
                out_channels: 4,
                in_channels: 1,
                kernel_h: 3,
                kernel_w: 3,
                stride: 1,
                padding: 1,
            }),
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 4, stride: 4 },
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 4 * 12 * 12, outputs: NUM_CLASSES },
            LayerSpec::Softmax,
        ];
        NetworkConfig { tag: ArchTag::Custom, input: [1, INPUT_SIZE, INPUT_SIZE], layers }
    }

    pub fn by_name(name: &str) -> Result<NetworkConfig> {
        match name.to_ascii_lowercase().as_str() {
            "fernet9" => Ok(NetworkConfig::fernet9()),
            "resnet-mini" | "resnet_mini" | "resnetmini" => Ok(NetworkConfig::resnet_mini()),
            "light" => Ok(NetworkConfig::light()),
            other => Err(Error::domain(format!(
                "unknown network config '{other}' (expected 'fernet9', 'resnet-mini', or 'light')"
            ))),
        }
    }

    /// Propagates the input shape through every layer, checking geometry.
    /// Returns one output shape per layer.
    pub fn output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape: Vec<usize> = self.input.to_vec();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let err = |msg: String| Error::config(format!("layer {i}: {msg}"));
            shape = match layer {
                LayerSpec::Conv(spec) => {
                    spec.validate()?;
                    if shape.len() != 3 {
                        return Err(err(format!("conv needs a (C,H,W) input, has {shape:?}")));
                    }
                    if shape[0] != spec.in_channels {
                        return Err(err(format!(
                            "conv expects {} input channels, gets {}",
                            spec.in_channels, shape[0]
                        )));
                    }
                    let oh = crate::tensor::conv_out_dim(shape[1], spec.kernel_h, spec.stride, spec.padding)?;
                    let ow = crate::tensor::conv_out_dim(shape[2], spec.kernel_w, spec.stride, spec.padding)?;
                    vec![spec.out_channels, oh, ow]
                }
                LayerSpec::Relu => shape,
                LayerSpec::MaxPool { window, stride } => {
                    if shape.len() != 3 {
                        return Err(err(format!("maxpool needs a (C,H,W) input, has {shape:?}")));
                    }
                    let oh = crate::tensor::pool_out_dim(shape[1], *window, *stride)?;
                    let ow = crate::tensor::pool_out_dim(shape[2], *window, *stride)?;
                    vec![shape[0], oh, ow]
                }
                LayerSpec::Residual { channels, kernel, padding } => {
                    if shape.len() != 3 || shape[0] != *channels {
                        return Err(err(format!(
                            "residual block over {channels} channels applied to {shape:?}"
                        )));
                    }
                    let oh = crate::tensor::conv_out_dim(shape[1], *kernel, 1, *padding)?;
                    if oh != shape[1] {
                        return Err(err("residual convs must preserve spatial size".into()));
                    }
                    shape
                }
                LayerSpec::GlobalAvgPool => {
                    if shape.len() != 3 {
                        return Err(err(format!("global_avg_pool needs a (C,H,W) input, has {shape:?}")));
                    }
                    vec![shape[0]]
                }
                LayerSpec::Flatten => {
                    vec![shape.iter().product()]
                }
                LayerSpec::Dense { inputs, outputs } => {
                    if shape.len() != 1 || shape[0] != *inputs {
                        return Err(err(format!(
                            "dense expects a flat input of {inputs}, gets {shape:?}"
                        )));
                    }
                    vec![*outputs]
                }
                LayerSpec::Softmax => {
                    if shape.len() != 1 {
                        return Err(err(format!("softmax needs a flat input, has {shape:?}")));
                    }
                    shape
                }
            };
            shapes.push(shape.clone());
        }
        Ok(shapes)
    }

    /// Structural validation: shape propagation plus the per-tag rules.
    pub fn validate(&self) -> Result<()> {
        if self.input != [1, INPUT_SIZE, INPUT_SIZE] {
            return Err(Error::config(format!(
                "input shape must be (1,{INPUT_SIZE},{INPUT_SIZE}), got {:?}",
                self.input
            )));
        }
        let shapes = self.output_shapes()?;
        let last = shapes.last().ok_or_else(|| Error::config("network has no layers"))?;
        if last.as_slice() != [NUM_CLASSES] {
            return Err(Error::config(format!(
                "final layer must produce exactly {NUM_CLASSES} outputs, produces {last:?}"
            )));
        }
        let softmax_positions: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Softmax))
            .map(|(i, _)| i)
            .collect();
        if softmax_positions != [self.layers.len() - 1] {
            return Err(Error::config("exactly one softmax is required, as the final layer"));
        }

        let conv_count = self.layers.iter().filter(|l| matches!(l, LayerSpec::Conv(_))).count();
        let dense_count = self.layers.iter().filter(|l| matches!(l, LayerSpec::Dense { .. })).count();
        match self.tag {
            ArchTag::Fernet9 => {
                if conv_count != 9 {
                    return Err(Error::config(format!(
                        "FERNET9 requires exactly 9 conv layers, found {conv_count}"
                    )));
                }
                // record how many convs precede each max-pool
                let mut convs_seen = 0usize;
                let mut pool_marks = Vec::new();
                for layer in &self.layers {
                    match layer {
                        LayerSpec::Conv(_) => convs_seen += 1,
                        LayerSpec::MaxPool { .. } => pool_marks.push(convs_seen),
                        _ => {}
                    }
                }
                if pool_marks != [3, 6, 9] {
                    return Err(Error::config(format!(
                        "FERNET9 requires a max-pool after convs 3, 6 and 9; pools fall after convs {pool_marks:?}"
                    )));
                }
                if dense_count != 2 {
                    return Err(Error::config(format!(
                        "FERNET9 requires exactly 2 dense layers, found {dense_count}"
                    )));
                }
            }
            ArchTag::ResnetMini => {
                let res_count =
                    self.layers.iter().filter(|l| matches!(l, LayerSpec::Residual { .. })).count();
                if res_count == 0 {
                    return Err(Error::config("RESNET_MINI requires at least one residual block"));
                }
                let gap_pos = self.layers.iter().position(|l| matches!(l, LayerSpec::GlobalAvgPool));
                let dense_pos = self.layers.iter().position(|l| matches!(l, LayerSpec::Dense { .. }));
                match (gap_pos, dense_pos) {
                    (Some(g), Some(d)) if g < d => {}
                    _ => {
                        return Err(Error::config(
                            "RESNET_MINI requires a global average pool before the dense head",
                        ))
                    }
                }
            }
            ArchTag::Custom => {}
        }
        Ok(())
    }

    /// Canonical parameter declarations in layer order.
    pub fn param_decls(&self) -> Result<Vec<ParamDecl>> {
        let mut decls = Vec::new();
        let (mut conv_n, mut res_n, mut dense_n) = (0usize, 0usize, 0usize);
        for layer in &self.layers {
            match layer {
                LayerSpec::Conv(s) => {
                    conv_n += 1;
                    let fan_in = s.in_channels * s.kernel_h * s.kernel_w;
                    let fan_out = s.out_channels * s.kernel_h * s.kernel_w;
                    decls.push(ParamDecl {
                        name: format!("conv{conv_n}.weight"),
                        shape: vec![s.out_channels, s.in_channels, s.kernel_h, s.kernel_w],
                        fan_in,
                        fan_out,
                    });
                    decls.push(ParamDecl {
                        name: format!("conv{conv_n}.bias"),
                        shape: vec![s.out_channels],
                        fan_in,
                        fan_out,
                    });
                }
                LayerSpec::Residual { channels, kernel, .. } => {
                    res_n += 1;
                    let fan = channels * kernel * kernel;
                    for branch in 1..=2 {
                        decls.push(ParamDecl {
                            name: format!("res{res_n}.conv{branch}.weight"),
                            shape: vec![*channels, *channels, *kernel, *kernel],
                            fan_in: fan,
                            fan_out: fan,
                        });
                        decls.push(ParamDecl {
                            name: format!("res{res_n}.conv{branch}.bias"),
                            shape: vec![*channels],
                            fan_in: fan,
                            fan_out: fan,
                        });
                    }
                }
                LayerSpec::Dense { inputs, outputs } => {
                    dense_n += 1;
                    decls.push(ParamDecl {
                        name: format!("dense{dense_n}.weight"),
                        shape: vec![*outputs, *inputs],
                        fan_in: *inputs,
                        fan_out: *outputs,
                    });
                    decls.push(ParamDecl {
                        name: format!("dense{dense_n}.bias"),
                        shape: vec![*outputs],
                        fan_in: *inputs,
                        fan_out: *outputs,
                    });
                }
                _ => {}
            }
        }
        Ok(decls)
    }
}

/// Ordered, uniquely-named parameter tensors. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T = f32> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::integrity(format!("duplicate parameter name '{name}'")));
        }
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::integrity(format!("missing parameter '{name}'")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::integrity(format!("missing parameter '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), &mut *t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamSet<f32> {
    pub fn to_f64(&self) -> ParamSet<f64> {
        ParamSet {
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.to_f64())).collect(),
        }
    }
}

impl ParamSet<f64> {
    pub fn to_f32(&self) -> ParamSet<f32> {
        ParamSet {
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.to_f32())).collect(),
        }
    }
}

/// A config paired with a matching parameter set.
#[derive(Debug, Clone)]
pub struct EmotionModel {
    pub config: NetworkConfig,
    pub params: ParamSet<f32>,
}

/// Checks that `params` covers exactly the tensors the config declares.
pub fn check_params<T: Scalar>(config: &NetworkConfig, params: &ParamSet<T>) -> Result<()> {
    let decls = config.param_decls()?;
    if decls.len() != params.len() {
        return Err(Error::integrity(format!(
            "config declares {} parameter tensors, set has {}",
            decls.len(),
            params.len()
        )));
    }
    for (decl, (name, tensor)) in decls.iter().zip(params.iter()) {
        if decl.name != name {
            return Err(Error::integrity(format!(
                "parameter {name} found where {} was expected",
                decl.name
            )));
        }
        if decl.shape != tensor.shape() {
            return Err(Error::integrity(format!(
                "parameter {name} has shape {:?}, config needs {:?}",
                tensor.shape(),
                decl.shape
            )));
        }
    }
    Ok(())
}

/// Initializes a model: weights are Glorot-uniform
/// (`±sqrt(6 / (fan_in + fan_out))`) drawn from [`crate::rng::SplitMix64`]
/// seeded with `seed`, biases are zero. Tensors are filled in declaration
/// order, row-major, so a seed pins every bit of the initialization.
pub fn build_model(config: &NetworkConfig, seed: u64) -> Result<EmotionModel> {
    config.validate()?;
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut params = ParamSet::new();
    for decl in config.param_decls()? {
        let n: usize = decl.shape.iter().product();
        let tensor = if decl.name.ends_with(".bias") {
            Tensor::zeros(&decl.shape)?
        } else {
            let limit = (6.0 / (decl.fan_in + decl.fan_out) as f32).sqrt();
            let data: Vec<f32> = (0..n).map(|_| rng.next_range_f32(-limit, limit)).collect();
            Tensor::new(&decl.shape, data)?
        };
        params.push(decl.name, tensor)?;
    }
    Ok(EmotionModel { config: config.clone(), params })
}

/// Activations recorded by the forward pass: `acts[0]` is the input and
/// `acts[i + 1]` the output of layer `i`. Residual layers also record their
/// branch intermediates for the backward pass.
pub struct Tape<T> {
    pub acts: Vec<Tensor<T>>,
    pub residual_aux: Vec<Option<ResidualAux<T>>>,
}

/// Intermediates of one residual block: `a = conv1(x)`, `r = relu(a)`,
/// `z = x + conv2(r)` (the block output is `relu(z)`).
pub struct ResidualAux<T> {
    pub a: Tensor<T>,
    pub r: Tensor<T>,
    pub z: Tensor<T>,
}

impl<T: Scalar> Tape<T> {
    /// Pre-softmax logits (output of the penultimate layer).
    pub fn logits(&self) -> &Tensor<T> {
        &self.acts[self.acts.len() - 2]
    }

    /// Output of the final (softmax) layer.
    pub fn probabilities(&self) -> &Tensor<T> {
        &self.acts[self.acts.len() - 1]
    }
}

fn residual_params<'a, T: Scalar>(
    params: &'a ParamSet<T>,
    res_n: usize,
) -> Result<(&'a Tensor<T>, &'a Tensor<T>, &'a Tensor<T>, &'a Tensor<T>)> {
    Ok((
        params.get(&format!("res{res_n}.conv1.weight"))?,
        params.get(&format!("res{res_n}.conv1.bias"))?,
        params.get(&format!("res{res_n}.conv2.weight"))?,
        params.get(&format!("res{res_n}.conv2.bias"))?,
    ))
}

/// Runs the network, recording every activation.
pub fn forward_collect<T: Scalar>(
    config: &NetworkConfig,
    params: &ParamSet<T>,
    input: &Tensor<T>,
) -> Result<Tape<T>> {
    if input.shape() != config.input {
        return Err(Error::dimension(format!(
            "network input must be {:?}, got {:?}",
            config.input,
            input.shape()
        )));
    }
    check_params(config, params)?;
    let mut acts: Vec<Tensor<T>> = vec![input.clone()];
    let mut residual_aux: Vec<Option<ResidualAux<T>>> = Vec::with_capacity(config.layers.len());
    let (mut conv_n, mut res_n, mut dense_n) = (0usize, 0usize, 0usize);
    for layer in &config.layers {
        let x = acts.last().unwrap();
        let mut aux = None;
        let y = match layer {
            LayerSpec::Conv(spec) => {
                conv_n += 1;
                let k = params.get(&format!("conv{conv_n}.weight"))?;
                let b = params.get(&format!("conv{conv_n}.bias"))?;
                conv2d(x, k, b, spec.stride, spec.padding)?
            }
            LayerSpec::Relu => relu(x),
            LayerSpec::MaxPool { window, stride } => maxpool2d(x, *window, *stride)?,
            LayerSpec::Residual { padding, .. } => {
                res_n += 1;
                let (k1, b1, k2, b2) = residual_params(params, res_n)?;
                let a = conv2d(x, k1, b1, 1, *padding)?;
                let r = relu(&a);
                let branch = conv2d(&r, k2, b2, 1, *padding)?;
                if branch.shape() != x.shape() {
                    return Err(Error::geometry(
                        "residual branch does not preserve shape; shortcut add impossible",
                    ));
                }
                let mut z = branch;
                for (zv, xv) in z.data_mut().iter_mut().zip(x.data()) {
                    *zv = *zv + *xv;
                }
                let out = relu(&z);
                aux = Some(ResidualAux { a, r, z });
                out
            }
            LayerSpec::GlobalAvgPool => global_avg_pool(x)?,
            LayerSpec::Flatten => x.reshaped(&[x.len()])?,
            LayerSpec::Dense { .. } => {
                dense_n += 1;
                let w = params.get(&format!("dense{dense_n}.weight"))?;
                let b = params.get(&format!("dense{dense_n}.bias"))?;
                dense(x, w, b)?
            }
            LayerSpec::Softmax => softmax(x)?,
        };
        acts.push(y);
        residual_aux.push(aux);
    }
    Ok(Tape { acts, residual_aux })
}

/// Classification result: the winning label and the full distribution.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Prediction {
    pub label: EmotionLabel,
    pub probabilities: [f32; NUM_CLASSES],
}

/// Argmax with ties resolved to the lowest index.
pub fn argmax_label(probabilities: &[f32; NUM_CLASSES]) -> EmotionLabel {
    let mut best = 0usize;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    EmotionLabel::ALL[best]
}

/// Converts a grayscale image into the network input: bilinear resize to
/// 48×48, then scale intensities to `[0, 1]` by dividing by 255.
pub fn preprocess(img: &GrayImage) -> Result<Tensor<f32>> {
    let vals = img.resize_f64(INPUT_SIZE, INPUT_SIZE)?;
    let data: Vec<f32> = vals.iter().map(|&v| (v / 255.0) as f32).collect();
    Tensor::new(&[1, INPUT_SIZE, INPUT_SIZE], data)
}

/// Runs the model on an already-preprocessed input tensor.
pub fn classify_tensor(model: &EmotionModel, input: &Tensor<f32>) -> Result<Prediction> {
    let tape = forward_collect(&model.config, &model.params, input)?;
    let probs = tape.probabilities();
    let mut probabilities = [0f32; NUM_CLASSES];
    probabilities.copy_from_slice(probs.data());
    Ok(Prediction { label: argmax_label(&probabilities), probabilities })
}

/// Classifies a grayscale image.
pub fn classify(model: &EmotionModel, img: &GrayImage) -> Result<Prediction> {
    classify_tensor(model, &preprocess(img)?)
}

/// Classifies each eye crop and averages the probability vectors; the label
/// is the argmax of the mean. At least one image is required.
pub fn classify_eyes(model: &EmotionModel, eyes: &[GrayImage]) -> Result<Prediction> {
    if eyes.is_empty() {
        return Err(Error::domain("classify_eyes needs at least one eye image"));
    }
    let mut mean = [0f32; NUM_CLASSES];
    for eye in eyes {
        let p = classify(model, eye)?;
        for (m, v) in mean.iter_mut().zip(&p.probabilities) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= eyes.len() as f32;
    }
    Ok(Prediction { label: argmax_label(&mean), probabilities: mean })
}
