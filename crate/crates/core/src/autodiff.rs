//! Reverse-mode gradients, the training loss, SGD, and gradient checking.
//!
//! The backward pass mirrors [`crate::net::forward_collect`]: it walks the
//! layer list in reverse, propagating the gradient of a scalar function of
//! the logits. Gradient sets share the [`ParamSet`] layout, so parameter and
//! gradient tensors correspond by position and name.
//!
//! Conventions worth knowing:
//! * loss is `-ln(max(p[target], 1e-12))` on softmax probabilities, and the
//!   gradient is seeded at the logits as `probs - onehot(target)` — the
//!   closed form for cross-entropy through softmax;
//! * max-pool routes its gradient to the first maximum in row-major window
//!   order when there are ties;
//! * relu passes gradient only where the forward input was strictly
//!   positive;
//! * gradient checking reruns everything in `f64` and compares against
//!   central finite differences.

use crate::error::Error;
use crate::net::{
    check_params, forward_collect, EmotionModel, LayerSpec, NetworkConfig, ParamSet, Tape,
};
use crate::tensor::{Scalar, Tensor};
use crate::Result;

/// Gradients, one tensor per parameter, in parameter order.
pub type GradSet<T = f32> = ParamSet<T>;

/// `-ln(max(probs[target], 1e-12))`. `probs` must be a probability vector
/// (entries nonnegative, summing to 1 within 1e-4).
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, target: usize) -> Result<T> {
    if probs.rank() != 1 {
        return Err(Error::dimension("cross_entropy expects a flat probability vector"));
    }
    if target >= probs.len() {
        return Err(Error::index(format!(
            "target {target} out of range for {} classes",
            probs.len()
        )));
    }
    let mut sum = T::zero();
    for &p in probs.data() {
        if p < T::zero() {
            return Err(Error::domain("probability vector has a negative entry"));
        }
        sum = sum + p;
    }
    let one: f64 = 1.0;
    if ((sum.into()) - one).abs() > 1e-4 {
        return Err(Error::domain(format!(
            "probability vector sums to {:?}, not 1",
            sum
        )));
    }
    let floor: T = 1e-12f32.into();
    let p = probs.data()[target].max(floor);
    Ok(-p.ln())
}

fn conv_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (c_out, _, kh, kw) = (
        kernel.shape()[0],
        kernel.shape()[1],
        kernel.shape()[2],
        kernel.shape()[3],
    );
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);

    let mut gi = vec![T::zero(); c_in * h * w];
    let mut gk = vec![T::zero(); kernel.len()];
    let mut gb = vec![T::zero(); c_out];

    let in_data = input.data();
    let k_data = kernel.data();
    let go = grad_out.data();

    for o in 0..c_out {
        let go_ch = &go[o * oh * ow..(o + 1) * oh * ow];
        let mut bias_acc = T::zero();
        for &g in go_ch {
            bias_acc = bias_acc + g;
        }
        gb[o] = bias_acc;
        for c in 0..c_in {
            let in_ch = &in_data[c * h * w..(c + 1) * h * w];
            let gi_ch = &mut gi[c * h * w..(c + 1) * h * w];
            for ky in 0..kh {
                for kx in 0..kw {
                    let kidx = ((o * c_in + c) * kh + ky) * kw + kx;
                    let wv = k_data[kidx];
                    let mut wacc = T::zero();
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let irow = &in_ch[iy as usize * w..(iy as usize + 1) * w];
                        let girow = &mut gi_ch[iy as usize * w..(iy as usize + 1) * w];
                        let gorow = &go_ch[oy * ow..(oy + 1) * ow];
                        if stride == 1 {
                            let ox_lo = padding.saturating_sub(kx);
                            let ox_hi = (w + padding - kx).min(ow);
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            let off = kx as isize - padding as isize;
                            let ibase = (ox_lo as isize + off) as usize;
                            let span = ox_hi - ox_lo;
                            for ((g, iv), giv) in gorow[ox_lo..ox_hi]
                                .iter()
                                .zip(&irow[ibase..ibase + span])
                                .zip(girow[ibase..ibase + span].iter_mut())
                            {
                                wacc = wacc + *g * *iv;
                                *giv = *giv + wv * *g;
                            }
                        } else {
                            for ox in 0..ow {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let g = gorow[ox];
                                wacc = wacc + g * irow[ix as usize];
                                girow[ix as usize] = girow[ix as usize] + wv * g;
                            }
                        }
                    }
                    gk[kidx] = gk[kidx] + wacc;
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape(), gi)?,
        Tensor::new(kernel.shape(), gk)?,
        Tensor::new(&[c_out], gb)?,
    ))
}

fn maxpool_backward<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<Tensor<T>> {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);
    let mut gi = vec![T::zero(); input.len()];
    for ch in 0..c {
        let in_ch = &input.data()[ch * h * w..(ch + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                // locate the first row-major maximum in the window
                let mut best = in_ch[(oy * stride) * w + ox * stride];
                let mut best_at = (oy * stride) * w + ox * stride;
                for py in 0..window {
                    for px in 0..window {
                        let idx = (oy * stride + py) * w + ox * stride + px;
                        if in_ch[idx] > best {
                            best = in_ch[idx];
                            best_at = idx;
                        }
                    }
                }
                let g = grad_out.data()[(ch * oh + oy) * ow + ox];
                gi[ch * h * w + best_at] = gi[ch * h * w + best_at] + g;
            }
        }
    }
    Tensor::new(input.shape(), gi)
}

pub(crate) fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape(), data).expect("matching shapes")
}

fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let n = input.shape()[0];
    let m = weights.shape()[0];
    let mut gi = vec![T::zero(); n];
    let mut gw = vec![T::zero(); m * n];
    for row in 0..m {
        let g = grad_out.data()[row];
        let wrow = &weights.data()[row * n..(row + 1) * n];
        let gwrow = &mut gw[row * n..(row + 1) * n];
        for i in 0..n {
            gwrow[i] = g * input.data()[i];
            gi[i] = gi[i] + g * wrow[i];
        }
    }
    Ok((
        Tensor::new(&[n], gi)?,
        Tensor::new(weights.shape(), gw)?,
        Tensor::new(&[m], grad_out.data().to_vec())?,
    ))
}

fn gap_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let area: T = ((h * w) as f32).into();
    let mut gi = Vec::with_capacity(input.len());
    for ch in 0..c {
        let g = grad_out.data()[ch] / area;
        gi.extend(std::iter::repeat(g).take(h * w));
    }
    Tensor::new(input.shape(), gi)
}

/// Backpropagates `logit_grad` (a gradient on the pre-softmax logits)
/// through every layer. Returns the parameter gradients and the gradient of
/// the seeded scalar with respect to every recorded activation
/// (`act_grads[i]` pairs with `tape.acts[i]`; the softmax output has no
/// entry because the seed sits below it).
pub fn backprop<T: Scalar>(
    config: &NetworkConfig,
    params: &ParamSet<T>,
    tape: &Tape<T>,
    logit_grad: &Tensor<T>,
) -> Result<(GradSet<T>, Vec<Tensor<T>>)> {
    let n_layers = config.layers.len();
    // the final layer is softmax (validated); backprop covers layers below it
    let mut act_grads: Vec<Option<Tensor<T>>> = vec![None; n_layers];
    act_grads[n_layers - 1] = Some(logit_grad.clone());

    let mut grads: Vec<(String, Tensor<T>)> = Vec::new();
    let mut conv_n = config.layers.iter().filter(|l| matches!(l, LayerSpec::Conv(_))).count();
    let mut res_n = config.layers.iter().filter(|l| matches!(l, LayerSpec::Residual { .. })).count();
    let mut dense_n = config.layers.iter().filter(|l| matches!(l, LayerSpec::Dense { .. })).count();

    for i in (0..n_layers - 1).rev() {
        let grad_out = act_grads[i + 1].clone().expect("gradient available in reverse order");
        let input = &tape.acts[i];
        let grad_in = match &config.layers[i] {
            LayerSpec::Conv(spec) => {
                let k = params.get(&format!("conv{conv_n}.weight"))?;
                let (gi, gk, gb) = conv_backward(input, k, &grad_out, spec.stride, spec.padding)?;
                grads.push((format!("conv{conv_n}.bias"), gb));
                grads.push((format!("conv{conv_n}.weight"), gk));
                conv_n -= 1;
                gi
            }
            LayerSpec::Relu => relu_backward(input, &grad_out),
            LayerSpec::MaxPool { window, stride } => {
                maxpool_backward(input, &grad_out, *window, *stride)?
            }
            LayerSpec::Residual { padding, .. } => {
                let aux = tape.residual_aux[i]
                    .as_ref()
                    .ok_or_else(|| Error::integrity("residual tape entry missing"))?;
                let k1 = params.get(&format!("res{res_n}.conv1.weight"))?;
                let k2 = params.get(&format!("res{res_n}.conv2.weight"))?;
                // out = relu(z), z = x + conv2(relu(conv1(x)))
                let gz = relu_backward(&aux.z, &grad_out);
                let (gr, gk2, gb2) = conv_backward(&aux.r, k2, &gz, 1, *padding)?;
                let ga = relu_backward(&aux.a, &gr);
                let (gx_branch, gk1, gb1) = conv_backward(input, k1, &ga, 1, *padding)?;
                grads.push((format!("res{res_n}.conv2.bias"), gb2));
                grads.push((format!("res{res_n}.conv2.weight"), gk2));
                grads.push((format!("res{res_n}.conv1.bias"), gb1));
                grads.push((format!("res{res_n}.conv1.weight"), gk1));
                res_n -= 1;
                let mut gx = gz;
                for (g, gb) in gx.data_mut().iter_mut().zip(gx_branch.data()) {
                    *g = *g + *gb;
                }
                gx
            }
            LayerSpec::GlobalAvgPool => gap_backward(input, &grad_out)?,
            LayerSpec::Flatten => grad_out.reshaped(input.shape())?,
            LayerSpec::Dense { .. } => {
                let w = params.get(&format!("dense{dense_n}.weight"))?;
                let (gi, gw, gb) = dense_backward(input, w, &grad_out)?;
                grads.push((format!("dense{dense_n}.bias"), gb));
                grads.push((format!("dense{dense_n}.weight"), gw));
                dense_n -= 1;
                gi
            }
            LayerSpec::Softmax => {
                return Err(Error::config("softmax may only appear as the final layer"))
            }
        };
        act_grads[i] = Some(grad_in);
    }

    // reorder accumulated gradients into canonical parameter order
    let mut grad_set = GradSet::new();
    for decl in config.param_decls()? {
        let pos = grads
            .iter()
            .position(|(n, _)| *n == decl.name)
            .ok_or_else(|| Error::integrity(format!("no gradient produced for '{}'", decl.name)))?;
        let (name, tensor) = grads.swap_remove(pos);
        grad_set.push(name, tensor)?;
    }

    let act_grads: Vec<Tensor<T>> =
        act_grads.into_iter().map(|g| g.expect("filled")).collect();
    Ok((grad_set, act_grads))
}

/// Forward pass, loss, and full parameter gradients for one example.
pub fn forward_backward<T: Scalar>(
    config: &NetworkConfig,
    params: &ParamSet<T>,
    input: &Tensor<T>,
    target: usize,
) -> Result<(T, GradSet<T>)> {
    let tape = forward_collect(config, params, input)?;
    let probs = tape.probabilities();
    let loss = cross_entropy(probs, target)?;
    let mut seed = probs.clone();
    seed.data_mut()[target] = seed.data()[target] - T::one();
    let (grads, _) = backprop(config, params, &tape, &seed)?;
    Ok((loss, grads))
}

/// One SGD step: `theta -= lr * grad`, element-wise. Parameters and
/// gradients must correspond tensor-for-tensor.
pub fn sgd_step(params: &mut ParamSet<f32>, grads: &GradSet<f32>, lr: f32) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::correspondence(format!(
            "{} parameter tensors vs {} gradient tensors",
            params.len(),
            grads.len()
        )));
    }
    // verify alignment before mutating anything
    for ((pn, pt), (gn, gt)) in params.iter().zip(grads.iter()) {
        if pn != gn {
            return Err(Error::correspondence(format!(
                "parameter '{pn}' paired with gradient '{gn}'"
            )));
        }
        if pt.shape() != gt.shape() {
            return Err(Error::correspondence(format!(
                "parameter '{pn}' shape {:?} vs gradient shape {:?}",
                pt.shape(),
                gt.shape()
            )));
        }
    }
    for ((_, pt), (_, gt)) in params.iter_mut().zip(grads.iter()) {
        for (p, g) in pt.data_mut().iter_mut().zip(gt.data()) {
            *p -= lr * *g;
        }
    }
    Ok(())
}

/// Result of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error across all checked scalars.
    pub max_rel_err: f64,
    /// Number of scalars compared.
    pub checked: usize,
    /// Worst relative error per parameter tensor (only tensors that had at
    /// least one scalar checked appear).
    pub per_tensor: Vec<(String, f64)>,
}

fn loss_at(config: &NetworkConfig, params: &ParamSet<f64>, input: &Tensor<f64>, target: usize) -> Result<f64> {
    let tape = forward_collect(config, params, input)?;
    cross_entropy(tape.probabilities(), target)
}

/// Compares `analytic` gradients against central finite differences of the
/// loss, all in 64-bit precision. When the model has more than
/// `max_samples` scalars, a seeded sample of that many is checked.
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check(
    config: &NetworkConfig,
    params: &ParamSet<f64>,
    input: &Tensor<f64>,
    target: usize,
    h: f64,
    analytic: &GradSet<f64>,
    max_samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    check_params(config, params)?;
    let tensor_sizes: Vec<(String, usize)> =
        params.iter().map(|(n, t)| (n.to_string(), t.len())).collect();
    let total: usize = tensor_sizes.iter().map(|(_, l)| l).sum();

    let flat_indices: Vec<usize> = if total <= max_samples {
        (0..total).collect()
    } else {
        // distinct seeded sample
        let mut rng = crate::rng::SplitMix64::new(seed);
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < max_samples {
            seen.insert(rng.next_below(total as u64) as usize);
        }
        seen.into_iter().collect()
    };

    let mut work = params.clone();
    let mut max_rel = 0.0f64;
    let mut per_tensor: std::collections::BTreeMap<String, f64> = Default::default();

    for flat in flat_indices.iter().copied() {
        // locate (tensor, offset) for the flat index
        let mut remaining = flat;
        let mut tensor_name = "";
        for (name, len) in &tensor_sizes {
            if remaining < *len {
                tensor_name = name;
                break;
            }
            remaining -= len;
        }
        let offset = remaining;

        let original = work.get(tensor_name)?.data()[offset];
        work.get_mut(tensor_name)?.data_mut()[offset] = original + h;
        let plus = loss_at(config, &work, input, target)?;
        work.get_mut(tensor_name)?.data_mut()[offset] = original - h;
        let minus = loss_at(config, &work, input, target)?;
        work.get_mut(tensor_name)?.data_mut()[offset] = original;

        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.get(tensor_name)?.data()[offset];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
        let slot = per_tensor.entry(tensor_name.to_string()).or_insert(0.0);
        *slot = slot.max(rel);
    }

    Ok(GradCheckReport {
        max_rel_err: max_rel,
        checked: flat_indices.len(),
        per_tensor: per_tensor.into_iter().collect(),
    })
}

/// Full 64-bit gradient check of a 32-bit model: computes analytic gradients
/// with the same backward code (in `f64`) and compares them to central
/// differences with step `h`.
pub fn grad_check(
    model: &EmotionModel,
    input: &Tensor<f32>,
    target: usize,
    h: f64,
    max_samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let params64 = model.params.to_f64();
    let input64 = input.to_f64();
    let (_, analytic) = forward_backward(&model.config, &params64, &input64, target)?;
    finite_diff_check(&model.config, &params64, &input64, target, h, &analytic, max_samples, seed)
}

/// Builds a model for gradient checking: weights uniform in
/// `±sqrt(6 / fan_in)` from the seeded generator, biases zero.
///
/// This deliberately differs from [`build_model`]'s Glorot scaling.
/// Glorot halves activation variance at every relu of an equal-width
/// stack, so by conv 5 of a 9-conv network the pre-activation scale has
/// collapsed toward the finite-difference step — and then nearly every
/// probe shifts some activation across a relu/maxpool kink, making the
/// central difference meaningless no matter how correct the backward pass
/// is. The `sqrt(6/fan_in)` bound keeps variance roughly constant with
/// depth, so activations stay well clear of the kink scale and finite
/// differences converge at their nominal O(h²) rate.
///
/// `config` is not required to pass [`NetworkConfig::validate`]; check
/// instances are usually toy-sized.
pub fn verification_model(config: &NetworkConfig, seed: u64) -> Result<EmotionModel> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut params = ParamSet::new();
    for decl in config.param_decls()? {
        let n: usize = decl.shape.iter().product();
        let tensor = if decl.name.ends_with(".bias") {
            Tensor::zeros(&decl.shape)?
        } else {
            let limit = (6.0 / decl.fan_in as f32).sqrt();
            Tensor::new(&decl.shape, (0..n).map(|_| rng.next_range_f32(-limit, limit)).collect())?
        };
        params.push(decl.name, tensor)?;
    }
    Ok(EmotionModel { config: config.clone(), params })
}

/// One entry of [`gradient_suite`]'s result.
#[derive(Debug, Clone)]
pub struct GradSuiteCase {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub checked: usize,
    pub threshold: f64,
    pub pass: bool,
}

mod suite_configs {
    use crate::net::{ArchTag, LayerSpec, NetworkConfig};
    use crate::tensor::ConvSpec;

    pub(super) fn conv(out_ch: usize, in_ch: usize) -> LayerSpec {
        LayerSpec::Conv(ConvSpec {
            out_channels: out_ch,
            in_channels: in_ch,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: 1,
        })
    }

    pub(super) fn net(input: usize, layers: Vec<LayerSpec>) -> NetworkConfig {
        NetworkConfig { tag: ArchTag::Fernet9, input: [1, input, input], layers }
    }

    /// The full FERNET9 layout at desk-check size: all nine convs and the
    /// three pools, widths 2/4/8, on an 8×8 input.
    pub(super) fn fernet9_toy_width() -> NetworkConfig {
        let widths = [2usize, 2, 2, 4, 4, 4, 8, 8, 8];
        let mut layers = Vec::new();
        let mut in_ch = 1;
        for (i, &w) in widths.iter().enumerate() {
            layers.push(conv(w, in_ch));
            layers.push(LayerSpec::Relu);
            if (i + 1) % 3 == 0 {
                layers.push(LayerSpec::MaxPool { window: 2, stride: 2 });
            }
            in_ch = w;
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::Dense { inputs: 8, outputs: 8 });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dense { inputs: 8, outputs: 7 });
        layers.push(LayerSpec::Softmax);
        net(8, layers)
    }

    /// RESNET_MINI's layer sequence at desk-check size.
    pub(super) fn resnet_mini_toy() -> NetworkConfig {
        NetworkConfig {
            tag: ArchTag::ResnetMini,
            input: [1, 12, 12],
            layers: vec![
                conv(4, 1),
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2, stride: 2 },
                LayerSpec::Residual { channels: 4, kernel: 3, padding: 1 },
                LayerSpec::MaxPool { window: 2, stride: 2 },
                LayerSpec::Residual { channels: 4, kernel: 3, padding: 1 },
                LayerSpec::GlobalAvgPool,
                LayerSpec::Dense { inputs: 4, outputs: 7 },
                LayerSpec::Softmax,
            ],
        }
    }
}

/// Runs the named finite-difference checks that back `verify`'s gradient
/// suite: each tensor-kernel in isolation, a two-conv stack, an exactly
/// linear model, the full FERNET9 and RESNET_MINI layouts at desk-check
/// size, and a sensitivity case that deliberately sign-flips a conv
/// gradient and must see the harness object (`max_rel_err > 0.1`).
///
/// All checks run in 64-bit mode with central differences at `h = 1e-3`
/// against [`verification_model`] instances with pinned seeds; the seeds
/// pin check points whose activations sit away from relu/maxpool kinks so
/// the finite differences are trustworthy. At most `model_samples` scalars
/// are probed on the two full-layout models (pass `usize::MAX` to cover
/// every parameter); isolation cases are always exhaustive.
///
/// With `sabotage` set, every conv-family weight gradient is negated
/// before comparison; a healthy harness must then fail loudly, which is
/// exactly what the caller should demonstrate.
pub fn gradient_suite(model_samples: usize, sabotage: bool) -> Result<Vec<GradSuiteCase>> {
    use suite_configs::*;
    let d = |i, o| LayerSpec::Dense { inputs: i, outputs: o };

    // (name, config, seed, samples, threshold, expect_failure)
    let cases: Vec<(&'static str, NetworkConfig, u64, usize, f64, bool)> = vec![
        (
            "conv2d",
            net(6, vec![conv(2, 1), LayerSpec::Flatten, d(72, 7), LayerSpec::Softmax]),
            11,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "relu",
            net(6, vec![conv(2, 1), LayerSpec::Relu, LayerSpec::Flatten, d(72, 7), LayerSpec::Softmax]),
            12,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "maxpool2d",
            net(
                6,
                vec![
                    conv(2, 1),
                    LayerSpec::MaxPool { window: 2, stride: 2 },
                    LayerSpec::Flatten,
                    d(18, 7),
                    LayerSpec::Softmax,
                ],
            ),
            13,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "residual_block",
            net(
                6,
                vec![
                    conv(2, 1),
                    LayerSpec::Residual { channels: 2, kernel: 3, padding: 1 },
                    LayerSpec::Flatten,
                    d(72, 7),
                    LayerSpec::Softmax,
                ],
            ),
            14,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "global_avg_pool",
            net(6, vec![conv(2, 1), LayerSpec::GlobalAvgPool, d(2, 7), LayerSpec::Softmax]),
            15,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "dense",
            net(4, vec![LayerSpec::Flatten, d(16, 8), LayerSpec::Relu, d(8, 7), LayerSpec::Softmax]),
            6,
            usize::MAX,
            1e-3,
            false,
        ),
        (
            "linear_exact",
            net(4, vec![LayerSpec::Flatten, d(16, 7), LayerSpec::Softmax]),
            7,
            usize::MAX,
            1e-6,
            false,
        ),
        (
            "conv_stack",
            net(
                6,
                vec![conv(2, 1), LayerSpec::Relu, conv(2, 2), LayerSpec::Flatten, d(72, 7), LayerSpec::Softmax],
            ),
            5,
            usize::MAX,
            1e-3,
            false,
        ),
        ("fernet9_toy_width", fernet9_toy_width(), 11, model_samples, 1e-3, false),
        ("resnet_mini_toy", resnet_mini_toy(), 0, model_samples, 1e-3, false),
        (
            "sensitivity",
            net(
                6,
                vec![conv(2, 1), LayerSpec::Relu, conv(2, 2), LayerSpec::Flatten, d(72, 7), LayerSpec::Softmax],
            ),
            5,
            usize::MAX,
            1e-3,
            true,
        ),
    ];

    let mut out = Vec::with_capacity(cases.len());
    for (name, config, seed, samples, threshold, expect_failure) in cases {
        let model = verification_model(&config, seed)?;
        let params64 = model.params.to_f64();
        let n = config.input[1];
        let mut rng = crate::rng::SplitMix64::new(seed ^ 0xABCD);
        let input64: Tensor<f64> =
            Tensor::new(&[1, n, n], (0..n * n).map(|_| rng.next_unit_f32() as f64).collect())?;
        let target = 3;
        let (_, mut analytic) = forward_backward(&config, &params64, &input64, target)?;
        let flip_convs = sabotage || expect_failure;
        if flip_convs {
            for (pname, g) in analytic.iter_mut() {
                if pname.ends_with(".weight") && !pname.starts_with("dense") {
                    for v in g.data_mut() {
                        *v = -*v;
                    }
                }
            }
        }
        // a sabotaged sensitivity case flips twice, i.e. not at all — it
        // then correctly reports that the harness failed to object
        if sabotage && expect_failure {
            for (pname, g) in analytic.iter_mut() {
                if pname.ends_with(".weight") && !pname.starts_with("dense") {
                    for v in g.data_mut() {
                        *v = -*v;
                    }
                }
            }
        }
        let report =
            finite_diff_check(&config, &params64, &input64, target, 1e-3, &analytic, samples, seed)?;
        let pass = if expect_failure {
            report.max_rel_err > 0.1
        } else {
            report.max_rel_err <= threshold
        };
        out.push(GradSuiteCase {
            name,
            max_rel_err: report.max_rel_err,
            checked: report.checked,
            threshold,
            pass,
        });
    }
    Ok(out)
}

/// Training hyper-parameters for the toy trainer.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::config("learning_rate must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Mini-batch SGD over `(input, label)` pairs. Each epoch shuffles the
/// sample order (one generator stream across all epochs, seeded from the
/// config) and applies one SGD step per batch using the batch-mean gradient.
/// Returns the trained model and the mean per-sample loss of each epoch.
/// With `epochs == 0` the model is returned untouched.
pub fn train_toy(
    mut model: EmotionModel,
    dataset: &[(Tensor<f32>, usize)],
    config: &TrainConfig,
) -> Result<(EmotionModel, Vec<f32>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::domain("training dataset is empty"));
    }
    let mut rng = crate::rng::SplitMix64::new(config.seed);
    let mut losses = Vec::with_capacity(config.epochs as usize);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(config.batch_size) {
            let mut batch_grads: Option<GradSet<f32>> = None;
            for &idx in batch {
                let (input, target) = &dataset[idx];
                let (loss, grads) = forward_backward(&model.config, &model.params, input, *target)?;
                epoch_loss += loss as f64;
                batch_grads = Some(match batch_grads {
                    None => grads,
                    Some(mut acc) => {
                        for ((_, a), (_, g)) in acc.iter_mut().zip(grads.iter()) {
                            for (av, gv) in a.data_mut().iter_mut().zip(g.data()) {
                                *av += *gv;
                            }
                        }
                        acc
                    }
                });
            }
            let mut grads = batch_grads.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f32;
            for (_, g) in grads.iter_mut() {
                for v in g.data_mut() {
                    *v *= scale;
                }
            }
            sgd_step(&mut model.params, &grads, config.learning_rate)?;
        }
        losses.push((epoch_loss / dataset.len() as f64) as f32);
    }
    Ok((model, losses))
}

/// Fraction of examples whose argmax matches the label.
pub fn accuracy(model: &EmotionModel, dataset: &[(Tensor<f32>, usize)]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    let mut hits = 0usize;
    for (input, target) in dataset {
        let pred = crate::net::classify_tensor(model, input)?;
        if pred.label.index() == *target {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}
