//! emocue-core: the engine behind the `emocue` CLI.
//!
//! The pipeline goes image → eye detection → emotion classification →
//! Grad-CAM explanation → playlist recommendation:
//!
//! * [`tensor`] — dense row-major tensors and the forward kernels
//!   (convolution, max-pooling, relu, dense, softmax, global average
//!   pooling, residual blocks) in both 32- and 64-bit precision.
//! * [`autodiff`] — reverse-mode gradients for every kernel, cross-entropy
//!   loss, SGD, finite-difference gradient checking, and the toy trainer.
//! * [`haar`] — integral images, Haar feature evaluation, staged cascades,
//!   multiscale detection with grouping, and eye-ROI extraction.
//! * [`cascade_xml`] — parser/serializer for the cascade XML subset.
//! * [`net`] — emotion labels, network configs (`FERNET9`, `RESNET_MINI`),
//!   preprocessing, and classification.
//! * [`weights`] — the binary `FEMR` weights file format.
//! * [`gradcam`] — Grad-CAM heatmaps, bilinear upsampling, and overlays.
//! * [`recommend`] — song catalogs and seeded playlist generation.
//! * [`image`] — 8-bit grayscale images, bilinear resizing, and PGM/PPM I/O.
//! * [`rng`] — the seeded generator used everywhere randomness is needed.
//! * [`glyphs`] — the synthetic 7-glyph dataset used by the toy trainer.

pub mod autodiff;
pub mod cascade_xml;
pub mod error;
pub mod glyphs;
pub mod gradcam;
pub mod haar;
pub mod image;
pub mod net;
pub mod recommend;
pub mod rng;
pub mod tensor;
pub mod weights;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
