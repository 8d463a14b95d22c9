//! Dense row-major tensors and the forward kernels of the emotion network.
//!
//! Tensors are 1–4 dimensional, stored flat in row-major order. Stored model
//! data is always `f32`; every kernel is also generic over `f64` because the
//! gradient checker reruns the same code in 64-bit precision to get finite
//! differences that are actually trustworthy.
//!
//! Geometry conventions:
//! * convolution uses zero padding and floor geometry:
//!   `out = floor((in + 2*padding - kernel) / stride) + 1`
//! * max-pooling considers only fully-inside windows:
//!   `out = floor((in - window) / stride) + 1`

use crate::error::Error;
use crate::Result;

/// Element type of a tensor: `f32` for storage, `f64` for verification mode.
pub trait Scalar:
    num_traits::Float + From<f32> + Into<f64> + Default + std::fmt::Debug + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense row-major tensor with 1 to 4 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor from a shape and flat row-major data.
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(Error::dimension(format!(
                "tensor rank must be 1..=4, got {}",
                shape.len()
            )));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::dimension(format!("zero-sized axis in shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::dimension(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        Tensor::new(shape, vec![T::zero(); len])
    }

    pub fn filled(shape: &[usize], value: T) -> Result<Self> {
        let len: usize = shape.iter().product();
        Tensor::new(shape, vec![value; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Reinterprets the same flat data under a new shape of equal size.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Self> {
        Tensor::new(shape, self.data.clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Tensor<f32> {
    pub fn to_f64(&self) -> Tensor<f64> {
        self.map(|x| x as f64)
    }
}

impl Tensor<f64> {
    pub fn to_f32(&self) -> Tensor<f32> {
        self.map(|x| x as f32)
    }
}

/// Shape of a convolution layer: kernel `(out, in, kh, kw)`, plus stride and
/// zero padding. Stride must be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.out_channels == 0 || self.in_channels == 0 || self.kernel_h == 0 || self.kernel_w == 0
        {
            return Err(Error::geometry(format!("zero-sized convolution spec {self:?}")));
        }
        if self.stride == 0 {
            return Err(Error::geometry("convolution stride must be >= 1"));
        }
        Ok(())
    }
}

/// Output spatial extent of a convolution along one axis, or an error when no
/// window fits.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::geometry("stride must be >= 1"));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::geometry(format!(
            "kernel {kernel} does not fit input {input} with padding {padding}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Output spatial extent of a pooling op along one axis (valid windows only).
pub fn pool_out_dim(input: usize, window: usize, stride: usize) -> Result<usize> {
    if window == 0 || stride == 0 {
        return Err(Error::geometry("pool window and stride must be >= 1"));
    }
    if input < window {
        return Err(Error::geometry(format!(
            "pool window {window} does not fit input extent {input}"
        )));
    }
    Ok((input - window) / stride + 1)
}

fn expect_rank<T: Scalar>(t: &Tensor<T>, rank: usize, what: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(Error::dimension(format!(
            "{what} must have rank {rank}, got shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// 2-D convolution with zero padding.
///
/// `input` is `(C, H, W)`, `kernel` is `(O, C, KH, KW)`, `bias` is `(O)`.
/// Output is `(O, H', W')` with floor geometry.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    expect_rank(input, 3, "conv2d input")?;
    expect_rank(kernel, 4, "conv2d kernel")?;
    expect_rank(bias, 1, "conv2d bias")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (c_out, kc, kh, kw) = (
        kernel.shape()[0],
        kernel.shape()[1],
        kernel.shape()[2],
        kernel.shape()[3],
    );
    if kc != c_in {
        return Err(Error::dimension(format!(
            "kernel expects {kc} input channels, input has {c_in}"
        )));
    }
    if bias.shape()[0] != c_out {
        return Err(Error::dimension(format!(
            "bias has {} entries for {c_out} output channels",
            bias.shape()[0]
        )));
    }
    let oh = conv_out_dim(h, kh, stride, padding)?;
    let ow = conv_out_dim(w, kw, stride, padding)?;

    let mut out = vec![T::zero(); c_out * oh * ow];
    let in_data = input.data();
    let k_data = kernel.data();
    let b_data = bias.data();

    for o in 0..c_out {
        let out_ch = &mut out[o * oh * ow..(o + 1) * oh * ow];
        for v in out_ch.iter_mut() {
            *v = b_data[o];
        }
        for c in 0..c_in {
            let in_ch = &in_data[c * h * w..(c + 1) * h * w];
            for ky in 0..kh {
                for kx in 0..kw {
                    let wv = k_data[((o * c_in + c) * kh + ky) * kw + kx];
                    if wv == T::zero() {
                        continue;
                    }
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let irow = &in_ch[iy as usize * w..(iy as usize + 1) * w];
                        let orow = &mut out_ch[oy * ow..(oy + 1) * ow];
                        if stride == 1 {
                            // ix = ox + kx - padding must land in [0, w)
                            let ox_lo = padding.saturating_sub(kx);
                            let ox_hi = (w + padding - kx).min(ow);
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            let off = kx as isize - padding as isize;
                            let ibase = (ox_lo as isize + off) as usize;
                            for (ov, iv) in orow[ox_lo..ox_hi]
                                .iter_mut()
                                .zip(&irow[ibase..ibase + (ox_hi - ox_lo)])
                            {
                                *ov = *ov + wv * *iv;
                            }
                        } else {
                            for ox in 0..ow {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                orow[ox] = orow[ox] + wv * irow[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&[c_out, oh, ow], out)
}

/// Max pooling over `(C, H, W)` with square windows and valid geometry.
pub fn maxpool2d<T: Scalar>(input: &Tensor<T>, window: usize, stride: usize) -> Result<Tensor<T>> {
    expect_rank(input, 3, "maxpool2d input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let oh = pool_out_dim(h, window, stride)?;
    let ow = pool_out_dim(w, window, stride)?;
    let mut out = vec![T::zero(); c * oh * ow];
    let data = input.data();
    for ch in 0..c {
        let in_ch = &data[ch * h * w..(ch + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = in_ch[(oy * stride) * w + ox * stride];
                for py in 0..window {
                    for px in 0..window {
                        let v = in_ch[(oy * stride + py) * w + ox * stride + px];
                        if v > best {
                            best = v;
                        }
                    }
                }
                out[(ch * oh + oy) * ow + ox] = best;
            }
        }
    }
    Tensor::new(&[c, oh, ow], out)
}

/// Element-wise `max(0, x)` on any shape.
pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| if x > T::zero() { x } else { T::zero() })
}

/// Fully-connected layer: `weights (M, N) * input (N) + bias (M)`.
pub fn dense<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    expect_rank(input, 1, "dense input")?;
    expect_rank(weights, 2, "dense weights")?;
    expect_rank(bias, 1, "dense bias")?;
    let n = input.shape()[0];
    let (m, wn) = (weights.shape()[0], weights.shape()[1]);
    if wn != n {
        return Err(Error::dimension(format!(
            "dense weights expect {wn} inputs, input has {n}"
        )));
    }
    if bias.shape()[0] != m {
        return Err(Error::dimension(format!(
            "dense bias has {} entries for {m} outputs",
            bias.shape()[0]
        )));
    }
    let x = input.data();
    let mut out = Vec::with_capacity(m);
    for row in 0..m {
        let wrow = &weights.data()[row * n..(row + 1) * n];
        let mut acc = bias.data()[row];
        for (wv, xv) in wrow.iter().zip(x) {
            acc = acc + *wv * *xv;
        }
        out.push(acc);
    }
    Tensor::new(&[m], out)
}

/// Numerically-stable softmax over a 1-D logit vector.
///
/// The maximum logit is subtracted before exponentiation, always — this is
/// what keeps `exp` from overflowing on large logits.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    expect_rank(logits, 1, "softmax input")?;
    if !logits.all_finite() {
        return Err(Error::numeric("softmax input contains a non-finite logit"));
    }
    let data = logits.data();
    let mut max = data[0];
    for &v in data {
        if v > max {
            max = v;
        }
    }
    let mut exps: Vec<T> = data.iter().map(|&v| (v - max).exp()).collect();
    let mut sum = T::zero();
    for &e in &exps {
        sum = sum + e;
    }
    for e in exps.iter_mut() {
        *e = *e / sum;
    }
    Tensor::new(&[data.len()], exps)
}

/// Per-channel spatial mean: `(C, H, W)` → `(C)`.
pub fn global_avg_pool<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    expect_rank(input, 3, "global_avg_pool input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let area: T = ((h * w) as f32).into();
    let mut out = Vec::with_capacity(c);
    for ch in 0..c {
        let mut acc = T::zero();
        for &v in &input.data()[ch * h * w..(ch + 1) * h * w] {
            acc = acc + v;
        }
        out.push(acc / area);
    }
    Tensor::new(&[c], out)
}

/// Two-convolution residual block:
/// `out = relu(input + conv2(relu(conv1(input))))`.
///
/// Both convolutions must preserve the input shape so the shortcut add is
/// well-formed; anything else is a geometry error.
pub fn residual_block<T: Scalar>(
    input: &Tensor<T>,
    kernel1: &Tensor<T>,
    bias1: &Tensor<T>,
    kernel2: &Tensor<T>,
    bias2: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let a = conv2d(input, kernel1, bias1, stride, padding)?;
    if a.shape() != input.shape() {
        return Err(Error::geometry(format!(
            "residual branch conv1 maps {:?} to {:?}; the shortcut add needs matching shapes",
            input.shape(),
            a.shape()
        )));
    }
    let r = relu(&a);
    let b = conv2d(&r, kernel2, bias2, stride, padding)?;
    if b.shape() != input.shape() {
        return Err(Error::geometry(format!(
            "residual branch conv2 maps {:?} to {:?}; the shortcut add needs matching shapes",
            input.shape(),
            b.shape()
        )));
    }
    let mut sum = b;
    for (s, x) in sum.data_mut().iter_mut().zip(input.data()) {
        *s = *s + *x;
    }
    Ok(relu(&sum))
}
