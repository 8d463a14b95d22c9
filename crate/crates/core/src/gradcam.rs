//! Grad-CAM: explains a classification by weighting the final
//! convolutional activations with the spatial mean of the target
//! logit's gradient.
//!
//! The heatmap is `ReLU(Σ_k α_k · A_k)` normalized to `[0, 1]`, where
//! `A_k` are the channels of the final convolutional activation and
//! `α_k` is the spatial mean of `∂y/∂A_k` for the PRE-softmax logit
//! `y` of the target class. Gradients are taken at the logit (not the
//! probability), which makes the map exactly invariant to shifts of
//! the output bias vector.
//!
//! "Final convolutional activation" means the output of the last
//! `Conv` layer in the layer list; when the last convolution sits
//! inside a residual block it is the branch output *after* the
//! shortcut add (`z = x + conv2(relu(conv1(x)))`, before the block's
//! closing relu).

use crate::autodiff::{backprop, relu_backward};
use crate::error::Error;
use crate::image::{GrayImage, RgbImage};
use crate::net::{forward_collect, EmotionModel, LayerSpec, NetworkConfig, ParamSet, NUM_CLASSES};
use crate::tensor::{Scalar, Tensor};
use crate::Result;

/// Nonnegative 2-D map with values in `[0, 1]`; the maximum is exactly
/// 1 unless the map is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl Heatmap {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::geometry(format!(
                "heatmap {height}x{width} does not match {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::domain("heatmap values must lie in [0, 1]"));
        }
        Ok(Heatmap { height, width, values })
    }

    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// 8-bit grayscale rendition (`round(v · 255)`), e.g. for PGM dumps.
    pub fn to_gray(&self) -> Result<GrayImage> {
        let pixels = self.values.iter().map(|v| (v * 255.0).round() as u8).collect();
        GrayImage::new(self.width, self.height, pixels)
    }
}

/// Index of the layer whose output provides the Grad-CAM activation:
/// the last `Conv` or `Residual` entry.
pub fn final_conv_index(config: &NetworkConfig) -> Result<usize> {
    config
        .layers
        .iter()
        .rposition(|l| matches!(l, LayerSpec::Conv(_) | LayerSpec::Residual { .. }))
        .ok_or_else(|| Error::config("model has no convolutional layer to explain"))
}

/// Everything the Grad-CAM computation produces, kept at full
/// precision for verification: activation `A`, its gradient
/// `∂y/∂A`, channel weights `α`, the post-ReLU raw map, and the
/// normalized heatmap values.
pub struct GradCamDetail<T> {
    pub activation: Tensor<T>,
    pub activation_grad: Tensor<T>,
    pub alpha: Vec<T>,
    /// `ReLU(Σ_k α_k · A_k)`, before normalization, row-major `h × w`.
    pub raw: Vec<T>,
    pub heat: Vec<T>,
    pub height: usize,
    pub width: usize,
}

pub fn gradcam_detail<T: Scalar>(
    config: &NetworkConfig,
    params: &ParamSet<T>,
    input: &Tensor<T>,
    target_class: usize,
) -> Result<GradCamDetail<T>> {
    if target_class >= NUM_CLASSES {
        return Err(Error::index(format!(
            "target class {target_class} out of range 0..{NUM_CLASSES}"
        )));
    }
    let fci = final_conv_index(config)?;

    let tape = forward_collect(config, params, input)?;
    let logits = tape.logits();
    let mut seed = Tensor::new(logits.shape(), vec![T::zero(); logits.data().len()])?;
    seed.data_mut()[target_class] = T::one();
    let (_, act_grads) = backprop(config, params, &tape, &seed)?;

    let (activation, activation_grad) = match &config.layers[fci] {
        LayerSpec::Conv(_) => (tape.acts[fci + 1].clone(), act_grads[fci + 1].clone()),
        LayerSpec::Residual { .. } => {
            let aux = tape.residual_aux[fci]
                .as_ref()
                .ok_or_else(|| Error::integrity("missing residual intermediates"))?;
            let gz = relu_backward(&aux.z, &act_grads[fci + 1]);
            (aux.z.clone(), gz)
        }
        _ => unreachable!("final_conv_index returns conv or residual layers only"),
    };

    let shape = activation.shape();
    if shape.len() != 3 {
        return Err(Error::dimension(format!(
            "expected a rank-3 conv activation, got shape {shape:?}"
        )));
    }
    let (channels, height, width) = (shape[0], shape[1], shape[2]);
    let plane = height * width;

    let g = activation_grad.data();
    let a = activation.data();
    let alpha: Vec<T> = (0..channels)
        .map(|k| {
            let mut sum = T::zero();
            for cell in &g[k * plane..(k + 1) * plane] {
                sum = sum + *cell;
            }
            sum / <T as From<f32>>::from(plane as f32)
        })
        .collect();

    let mut raw = vec![T::zero(); plane];
    for k in 0..channels {
        for (cell, out) in a[k * plane..(k + 1) * plane].iter().zip(raw.iter_mut()) {
            *out = *out + alpha[k] * *cell;
        }
    }
    for v in &mut raw {
        if *v < T::zero() {
            *v = T::zero();
        }
    }

    let max = raw.iter().fold(T::zero(), |m, v| if *v > m { *v } else { m });
    let heat = if max > T::zero() {
        raw.iter().map(|v| *v / max).collect()
    } else {
        raw.clone()
    };

    Ok(GradCamDetail { activation, activation_grad, alpha, raw, heat, height, width })
}

/// Grad-CAM heatmap at the final convolution's spatial resolution.
pub fn compute_gradcam(
    model: &EmotionModel,
    input: &Tensor<f32>,
    target_class: usize,
) -> Result<Heatmap> {
    let detail = gradcam_detail(&model.config, &model.params, input, target_class)?;
    Heatmap::new(detail.height, detail.width, detail.heat)
}

/// Corner-aligned bilinear resampling; output values stay in `[0, 1]`.
pub fn upsample_bilinear(map: &Heatmap, out_h: usize, out_w: usize) -> Result<Heatmap> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::geometry("upsample target must be nonzero"));
    }
    let sample_pos = |dst: usize, dst_len: usize, src_len: usize| -> f64 {
        if dst_len <= 1 {
            0.0
        } else {
            dst as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
        }
    };
    let mut values = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let sy = sample_pos(y, out_h, map.height);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(map.height - 1);
        let fy = sy - y0 as f64;
        for x in 0..out_w {
            let sx = sample_pos(x, out_w, map.width);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(map.width - 1);
            let fx = sx - x0 as f64;
            let p00 = map.get(y0, x0) as f64;
            let p10 = map.get(y0, x1) as f64;
            let p01 = map.get(y1, x0) as f64;
            let p11 = map.get(y1, x1) as f64;
            let top = p00 + (p10 - p00) * fx;
            let bot = p01 + (p11 - p01) * fx;
            values.push(((top + (bot - top) * fy) as f32).clamp(0.0, 1.0));
        }
    }
    Heatmap::new(out_h, out_w, values)
}

/// Three-stop linear color ramp: blue `(0,0,255)` at 0, green
/// `(0,255,0)` at 0.5, red `(255,0,0)` at 1. Returns unrounded
/// channel intensities so callers blend before quantizing.
pub fn colormap(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    if t <= 0.5 {
        let s = t / 0.5;
        [0.0, 255.0 * s, 255.0 * (1.0 - s)]
    } else {
        let s = (t - 0.5) / 0.5;
        [255.0 * s, 255.0 * (1.0 - s), 0.0]
    }
}

/// Blends the colormapped heatmap over the grayscale image:
/// `out = (1 − alpha) · gray + alpha · colormap(heat)` per channel,
/// rounded to nearest and clamped once at the end.
pub fn overlay(image: &GrayImage, heat: &Heatmap, alpha: f64) -> Result<RgbImage> {
    if image.width != heat.width || image.height != heat.height {
        return Err(Error::geometry(format!(
            "image {}x{} vs heatmap {}x{}",
            image.width, image.height, heat.width, heat.height
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("overlay alpha {alpha} outside [0, 1]")));
    }
    let mut pixels = Vec::with_capacity(image.pixels.len() * 3);
    for (g, h) in image.pixels.iter().zip(&heat.values) {
        let c = colormap(*h as f64);
        for channel in c {
            let v = (1.0 - alpha) * (*g as f64) + alpha * channel;
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    RgbImage::new(image.width, image.height, pixels)
}
