//! Saliency-aware omnidirectional (360°) image compression laboratory.
//!
//! The crate bundles everything needed to study saliency-driven bit
//! allocation for equirectangular (ERP) images at desk scale:
//!
//! - [`sphere`] — ERP pixel/angle mappings, latitude weights, spherical
//!   coordinate channels, and ERP↔cubemap resampling.
//! - [`saliency`] — the saliency-mask pipeline (rescale+sigmoid, average
//!   pooling to latent resolution, mask residual, latent-channel masking)
//!   plus a synthetic equator-biased saliency generator.
//! - [`codec`] — a deterministic reference codec: block-DCT analysis,
//!   latent masking, λ-indexed uniform quantization, and adaptive range
//!   coding into a bit-exact container format.
//! - [`quality`] — WS-PSNR, SAL-PSNR, and WS-SSIM full-reference metrics.
//! - [`salmetrics`] — NSS, KLD, CC, and AUC-Judd saliency metrics.
//! - [`losses`] — saliency-weighted MSE, rate–distortion loss, fusion
//!   loss, and bits-per-pixel accounting.
//! - [`bd`] — Bjontegaard delta-PSNR / delta-rate between RD curves.
//! - [`dataset`] — image/saliency/fixation I/O, ERP-aware augmentation,
//!   and corpus manifests.
//! - [`synth`] — deterministic synthetic ERP content for tests and demos.
//!
//! All operations are pure functions of their inputs and use fixed-order
//! accumulation, so results are reproducible to the last bit regardless
//! of how callers schedule work.

pub mod bd;
pub mod codec;
pub mod dataset;
mod error;
pub mod losses;
pub mod quality;
pub mod saliency;
pub mod salmetrics;
pub mod sphere;
pub mod synth;

pub use error::{Error, Result};
pub use saliency::{DownsampledMask, LatentTensor, MaskResidual, SaliencyMap};
pub use salmetrics::FixationMap;
pub use sphere::{CubeFace, CubeFaceSet, ErpImage, LatitudeWeights};
