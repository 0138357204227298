//! A deterministic reference codec realizing encoder-side saliency-aware
//! rate allocation: fixed block-DCT analysis, latent masking, λ-indexed
//! uniform quantization, and adaptive range coding into a bit-exact
//! container.
//!
//! The latent volume has `image_channels · block_size²` channels; each
//! channel holds one DCT coefficient position across all blocks.
//! Channels are ordered zigzag-major (lowest spatial frequencies first)
//! with the color planes interleaved per frequency, so "the first K
//! channels" always means "the K most information-dense coefficients".
//! Masking amplifies channels at or above the preserved split before
//! quantization; the decoder reads a coarse 4-bit residual grid from the
//! stream's side-info and divides it back out. The full-resolution
//! saliency map never leaves the encoder.

mod bitstream;
mod dct;
mod rangecoder;

pub use bitstream::{Bitstream, Header, FIXED_HEADER_LEN, FLAG_SALIENCY, MAGIC, VERSION};
pub use rangecoder::{
    decode_gamma, encode_gamma, AdaptiveModel, RangeDecoder, RangeEncoder, MAX_TOTAL,
};

use serde::{Deserialize, Serialize};

use crate::losses::bits_per_pixel;
use crate::quality::{sal_psnr, ws_psnr, ws_ssim};
use crate::saliency::{
    apply_latent_mask, downsample_mask, invert_latent_mask, mask_residual, rescale_and_sigmoid,
    LatentTensor, MaskResidual, SaliencyMap,
};
use crate::sphere::ErpImage;
use crate::{Error, Result};
use dct::BlockDct;

/// The eight-step λ ladder used for variable-rate operating points.
pub const LAMBDA_LADDER: [f64; 8] = [0.0018, 0.0035, 0.0067, 0.013, 0.025, 0.0483, 0.0932, 0.18];

/// Default quantization-step scale; calibrated once on the synthetic
/// test corpus so the λ = 0.18 point lands near 0.8 bpp at 512×256.
pub const DEFAULT_BASE_STEP: f64 = 5.0;

/// Environment variable read by [`rd_sweep`] as a parallelism hint.
/// Thread count never changes any output byte.
pub const THREADS_ENV_VAR: &str = "ODIC_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecConfig {
    /// DCT block edge; also the latent downsampling factor.
    pub block_size: usize,
    /// Fraction of latent channels exempt from masking (lowest
    /// frequencies first).
    pub preserved_fraction: f64,
    /// Strictly increasing Lagrange multipliers indexed by the header.
    pub lambda_ladder: Vec<f64>,
    /// Mask residual α.
    pub alpha: f64,
    /// Whether encoding applies the saliency mask.
    pub saliency_mode: bool,
    /// Scale of the quantization step schedule Δ(λ) = base/√λ.
    pub base_step_constant: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            block_size: 16,
            preserved_fraction: 0.25,
            lambda_ladder: LAMBDA_LADDER.to_vec(),
            alpha: 1.0,
            saliency_mode: false,
            base_step_constant: DEFAULT_BASE_STEP,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::arg("block_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.preserved_fraction) {
            return Err(Error::arg("preserved_fraction must lie in [0, 1]"));
        }
        if self.lambda_ladder.is_empty() || self.lambda_ladder.len() > 256 {
            return Err(Error::arg("lambda ladder must hold 1..=256 entries"));
        }
        for pair in self.lambda_ladder.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::arg("lambda ladder must be strictly increasing"));
            }
        }
        if self.lambda_ladder.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::arg("lambda values must be positive and finite"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::arg("alpha must be positive and finite"));
        }
        if !(self.base_step_constant > 0.0) || !self.base_step_constant.is_finite() {
            return Err(Error::arg("base_step_constant must be positive and finite"));
        }
        Ok(())
    }

    pub fn lambda(&self, index: usize) -> Result<f64> {
        self.lambda_ladder
            .get(index)
            .copied()
            .ok_or_else(|| Error::arg(format!("lambda index {index} outside the ladder")))
    }

    /// Quantization step for one ladder entry: Δ(λ) = base/√λ, so larger
    /// multipliers quantize finer.
    pub fn step_size(&self, index: usize) -> Result<f64> {
        Ok(self.base_step_constant / self.lambda(index)?.sqrt())
    }

    /// The whole per-λ step schedule (the quantization regulator vector).
    pub fn step_schedule(&self) -> Vec<f64> {
        self.lambda_ladder
            .iter()
            .map(|l| self.base_step_constant / l.sqrt())
            .collect()
    }

    /// Number of latent channels for an image with the given plane count.
    pub fn latent_channels(&self, image_channels: usize) -> usize {
        image_channels * self.block_size * self.block_size
    }

    /// Preserved channel count K = round(fraction · C).
    pub fn preserved_channels(&self, latent_channels: usize) -> usize {
        (self.preserved_fraction * latent_channels as f64).round() as usize
    }
}

/// Reflected index for symmetric padding.
fn mirror_index(i: usize, n: usize) -> usize {
    let period = 2 * n;
    let m = i % period;
    if m < n {
        m
    } else {
        period - 1 - m
    }
}

/// Forward transform: symmetric padding to block multiples, per-plane
/// orthonormal block DCT, coefficients fanned out into zigzag-ordered
/// channels (color planes interleaved per frequency).
pub fn analysis(img: &ErpImage, cfg: &CodecConfig) -> Result<LatentTensor> {
    cfg.validate()?;
    let b = cfg.block_size;
    let planes = img.channels();
    let (w, h) = (img.width(), img.height());
    let grid_w = w.div_ceil(b);
    let grid_h = h.div_ceil(b);
    let dct = BlockDct::new(b);
    let mut latent = LatentTensor::zeros(cfg.latent_channels(planes), grid_h, grid_w);

    let mut block = vec![0.0; b * b];
    let mut coeffs = vec![0.0; b * b];
    for p in 0..planes {
        let plane = img.plane(p);
        for by in 0..grid_h {
            for bx in 0..grid_w {
                for y in 0..b {
                    let sy = mirror_index(by * b + y, h);
                    for x in 0..b {
                        let sx = mirror_index(bx * b + x, w);
                        block[y * b + x] = plane[sy * w + sx];
                    }
                }
                dct.forward(&block, &mut coeffs);
                let cell = by * grid_w + bx;
                for (z, &(r, c)) in dct.zigzag().iter().enumerate() {
                    let channel = z * planes + p;
                    latent.channel_mut(channel)[cell] = coeffs[r * b + c];
                }
            }
        }
    }
    Ok(latent)
}

/// Inverse transform; reconstructs the padded raster, crops to the
/// requested size, and clips samples into `[0, max_value]`.
pub fn synthesis(
    latent: &LatentTensor,
    cfg: &CodecConfig,
    width: usize,
    height: usize,
    max_value: f64,
) -> Result<ErpImage> {
    cfg.validate()?;
    let b = cfg.block_size;
    if latent.channels() % (b * b) != 0 {
        return Err(Error::arg("latent channel count does not match block size"));
    }
    let planes = latent.channels() / (b * b);
    if planes != 1 && planes != 3 {
        return Err(Error::arg("latent implies an unsupported plane count"));
    }
    let grid_w = width.div_ceil(b);
    let grid_h = height.div_ceil(b);
    if latent.width() != grid_w || latent.height() != grid_h {
        return Err(Error::arg(format!(
            "latent grid {}x{} does not match {}x{} at block {b}",
            latent.width(),
            latent.height(),
            width,
            height
        )));
    }
    let dct = BlockDct::new(b);
    let mut img = ErpImage::new(width, height, planes, max_value)?;
    let mut coeffs = vec![0.0; b * b];
    let mut block = vec![0.0; b * b];
    for p in 0..planes {
        for by in 0..grid_h {
            for bx in 0..grid_w {
                let cell = by * grid_w + bx;
                for (z, &(r, c)) in dct.zigzag().iter().enumerate() {
                    coeffs[r * b + c] = latent.channel(z * planes + p)[cell];
                }
                dct.inverse(&coeffs, &mut block);
                for y in 0..b {
                    let dy = by * b + y;
                    if dy >= height {
                        break;
                    }
                    for x in 0..b {
                        let dx = bx * b + x;
                        if dx >= width {
                            break;
                        }
                        img.set(p, dx, dy, block[y * b + x].clamp(0.0, max_value));
                    }
                }
            }
        }
    }
    Ok(img)
}

/// Uniform-quantized latent (round-to-nearest bin indices).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLatent {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<i32>,
}

impl QuantizedLatent {
    pub fn channel(&self, c: usize) -> &[i32] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }
}

pub fn quantize(latent: &LatentTensor, step: f64) -> Result<QuantizedLatent> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg("quantization step must be positive and finite"));
    }
    let values = latent.data().iter().map(|v| (v / step).round() as i32).collect();
    Ok(QuantizedLatent {
        channels: latent.channels(),
        height: latent.height(),
        width: latent.width(),
        values,
    })
}

/// Reconstruction at bin centers.
pub fn dequantize(q: &QuantizedLatent, step: f64) -> Result<LatentTensor> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg("quantization step must be positive and finite"));
    }
    LatentTensor::from_data(
        q.channels,
        q.height,
        q.width,
        q.values.iter().map(|&v| v as f64 * step).collect(),
    )
}

// --- residual side-info -------------------------------------------------

/// 4-bit code for a residual multiplier, linear over [1, 2].
fn residual_code(r: f64) -> u8 {
    ((r - 1.0) * 15.0).round().clamp(0.0, 15.0) as u8
}

fn residual_from_code(code: u8) -> f64 {
    1.0 + code as f64 / 15.0
}

fn encode_mask_grid(codes: &[u8]) -> Vec<u8> {
    let mut enc = RangeEncoder::new();
    let mut model = AdaptiveModel::uniform(16);
    for &c in codes {
        model.encode(&mut enc, c as usize);
    }
    enc.finish()
}

fn decode_mask_grid(data: &[u8], count: usize) -> Result<Vec<u8>> {
    let mut dec = RangeDecoder::new(data);
    let mut model = AdaptiveModel::uniform(16);
    let codes: Vec<u8> = (0..count).map(|_| model.decode(&mut dec) as u8).collect();
    if dec.overran() {
        return Err(Error::TruncatedPayload);
    }
    Ok(codes)
}

// --- latent payload ------------------------------------------------------

/// Magnitude alphabet: 0, 1..=15 literal, 16 = escape (gamma-coded
/// excess). Counts start from a two-sided-geometric prior and adapt.
fn magnitude_model() -> AdaptiveModel {
    let mut init = vec![1u32; 17];
    init[0] = 48;
    init[1] = 24;
    init[2] = 12;
    init[3] = 6;
    init[4] = 3;
    init[16] = 2;
    AdaptiveModel::with_init(init)
}

fn encode_value(enc: &mut RangeEncoder, model: &mut AdaptiveModel, v: i32) {
    let mag = v.unsigned_abs();
    if mag == 0 {
        model.encode(enc, 0);
    } else if mag <= 15 {
        model.encode(enc, mag as usize);
        enc.encode_bit_raw(v < 0);
    } else {
        model.encode(enc, 16);
        encode_gamma(enc, mag - 15);
        enc.encode_bit_raw(v < 0);
    }
}

fn decode_value(dec: &mut RangeDecoder, model: &mut AdaptiveModel) -> Result<i32> {
    let symbol = model.decode(dec);
    let mag = match symbol {
        0 => return Ok(0),
        s if s <= 15 => s as u32,
        _ => 15 + decode_gamma(dec)?,
    };
    let negative = dec.decode_bit_raw();
    let mag = mag as i64;
    Ok(if negative { -mag } else { mag } as i32)
}

/// Serialize the quantized latent. Channels are visited in index order;
/// each sends an "all zero" flag through a shared adaptive bit model and,
/// when set, skips the cells entirely. The lowest-frequency channel of
/// each plane (channel index < plane count) is delta-coded in raster
/// order since neighboring blocks share their local mean.
fn encode_latent(q: &QuantizedLatent, planes: usize) -> Vec<u8> {
    let mut enc = RangeEncoder::new();
    let mut flag_model = AdaptiveModel::uniform(2);
    for c in 0..q.channels {
        let cells = q.channel(c);
        let all_zero = cells.iter().all(|&v| v == 0);
        flag_model.encode(&mut enc, all_zero as usize);
        if all_zero {
            continue;
        }
        let mut model = magnitude_model();
        if c < planes {
            let mut prev = 0i32;
            for &v in cells {
                encode_value(&mut enc, &mut model, v.wrapping_sub(prev));
                prev = v;
            }
        } else {
            for &v in cells {
                encode_value(&mut enc, &mut model, v);
            }
        }
    }
    enc.finish()
}

fn decode_latent(
    data: &[u8],
    channels: usize,
    height: usize,
    width: usize,
    planes: usize,
) -> Result<QuantizedLatent> {
    let cells = height * width;
    let mut values = vec![0i32; channels * cells];
    let mut dec = RangeDecoder::new(data);
    let mut flag_model = AdaptiveModel::uniform(2);
    for c in 0..channels {
        let all_zero = flag_model.decode(&mut dec) == 1;
        if all_zero {
            continue;
        }
        let slot = &mut values[c * cells..(c + 1) * cells];
        let mut model = magnitude_model();
        if c < planes {
            let mut prev = 0i32;
            for v in slot.iter_mut() {
                prev = prev.wrapping_add(decode_value(&mut dec, &mut model)?);
                *v = prev;
            }
        } else {
            for v in slot.iter_mut() {
                *v = decode_value(&mut dec, &mut model)?;
            }
        }
    }
    if dec.overran() {
        return Err(Error::TruncatedPayload);
    }
    Ok(QuantizedLatent {
        channels,
        height,
        width,
        values,
    })
}

// --- encode / decode ------------------------------------------------------

/// Quantized residual grid actually applied at the encoder (and shipped
/// as side info), so masking inverts exactly at the decoder.
fn quantized_residual(
    saliency: &SaliencyMap,
    cfg: &CodecConfig,
    grid_w: usize,
    grid_h: usize,
) -> Result<(MaskResidual, Vec<u8>)> {
    let sigmoid = rescale_and_sigmoid(saliency)?;
    let mask = downsample_mask(&sigmoid, cfg.block_size)?;
    if mask.width() != grid_w || mask.height() != grid_h {
        return Err(Error::arg("saliency resolution does not match the image"));
    }
    let exact = mask_residual(&mask, cfg.alpha)?;
    let codes: Vec<u8> = exact.values().iter().map(|&r| residual_code(r)).collect();
    let values: Vec<f64> = codes.iter().map(|&c| residual_from_code(c)).collect();
    let residual = MaskResidual::from_values(grid_w, grid_h, cfg.alpha, values)?;
    Ok((residual, codes))
}

pub fn encode(
    img: &ErpImage,
    saliency: Option<&SaliencyMap>,
    lambda_index: usize,
    cfg: &CodecConfig,
) -> Result<Bitstream> {
    cfg.validate()?;
    let lambda_u8 = u8::try_from(lambda_index)
        .map_err(|_| Error::arg(format!("lambda index {lambda_index} outside the ladder")))?;
    let step = cfg.step_size(lambda_index)?;
    if img.max_value() != 255.0 {
        return Err(Error::arg("the codec operates on 8-bit-scale images (max_value 255)"));
    }
    if img.width() > u32::MAX as usize || img.height() > u32::MAX as usize {
        return Err(Error::arg("image dimensions exceed the container limits"));
    }

    let mut latent = analysis(img, cfg)?;
    let planes = img.channels();
    let latent_channels = latent.channels();
    let split = cfg.preserved_channels(latent_channels);

    let mut mask_bytes = Vec::new();
    let mut flags = 0u8;
    if cfg.saliency_mode {
        let saliency = saliency.ok_or_else(|| {
            Error::arg("saliency_mode is on but no saliency map was supplied")
        })?;
        if saliency.width() != img.width() || saliency.height() != img.height() {
            return Err(Error::arg("saliency map size must match the image"));
        }
        let (residual, codes) =
            quantized_residual(saliency, cfg, latent.width(), latent.height())?;
        latent = apply_latent_mask(&latent, &residual, split)?;
        mask_bytes = encode_mask_grid(&codes);
        flags |= FLAG_SALIENCY;
    }

    let q = quantize(&latent, step)?;
    let payload = encode_latent(&q, planes);

    Ok(Bitstream {
        header: Header {
            flags,
            width: img.width() as u32,
            height: img.height() as u32,
            channels: planes as u8,
            lambda_index: lambda_u8,
            alpha: cfg.alpha as f32,
        },
        mask: mask_bytes,
        payload,
    })
}

pub fn decode(bs: &Bitstream, cfg: &CodecConfig) -> Result<ErpImage> {
    cfg.validate()?;
    let h = &bs.header;
    let step = cfg.step_size(h.lambda_index as usize)?;
    let (width, height) = (h.width as usize, h.height as usize);
    let planes = h.channels as usize;
    let b = cfg.block_size;
    let grid_w = width.div_ceil(b);
    let grid_h = height.div_ceil(b);
    let channels = cfg.latent_channels(planes);

    let q = decode_latent(&bs.payload, channels, grid_h, grid_w, planes)?;
    let mut latent = dequantize(&q, step)?;

    if h.saliency_mode() {
        let codes = decode_mask_grid(&bs.mask, grid_w * grid_h)?;
        let values: Vec<f64> = codes.iter().map(|&c| residual_from_code(c)).collect();
        let residual = MaskResidual::from_values(grid_w, grid_h, h.alpha as f64, values)?;
        let split = cfg.preserved_channels(channels);
        latent = invert_latent_mask(&latent, &residual, split)?;
    }

    synthesis(&latent, cfg, width, height, 255.0)
}

// --- rate-distortion sweeps ----------------------------------------------

/// One operating point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub lambda_index: usize,
    pub lambda: f64,
    pub bpp: f64,
    pub ws_psnr: f64,
    pub sal_psnr: f64,
    pub ws_ssim: f64,
}

/// Encode/decode/measure across the whole λ ladder.
///
/// The returned bpp values include headers and mask side-info and must
/// be non-decreasing in λ; a violation reports a degenerate-input error.
/// When no saliency map is given, SAL-PSNR is evaluated against a
/// constant map and therefore equals WS-PSNR. Honors the
/// `ODIC_THREADS` environment variable as a parallelism hint (outputs
/// are identical for any thread count).
pub fn rd_sweep(
    img: &ErpImage,
    saliency: Option<&SaliencyMap>,
    cfg: &CodecConfig,
) -> Result<Vec<RdPoint>> {
    let threads = std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1);
    rd_sweep_with_threads(img, saliency, cfg, threads)
}

pub fn rd_sweep_with_threads(
    img: &ErpImage,
    saliency: Option<&SaliencyMap>,
    cfg: &CodecConfig,
    threads: usize,
) -> Result<Vec<RdPoint>> {
    cfg.validate()?;
    let n = cfg.lambda_ladder.len();
    let threads = threads.clamp(1, n);

    let run_point = |index: usize| -> Result<RdPoint> {
        let bs = encode(img, saliency, index, cfg)?;
        let bytes = bs.to_bytes();
        let bpp = bits_per_pixel(bytes.len(), img.width(), img.height())?;
        let rec = decode(&Bitstream::from_bytes(&bytes)?, cfg)?;
        let eval_map = match saliency {
            Some(s) => s.clone(),
            None => SaliencyMap::constant(img.width(), img.height(), 1.0)?,
        };
        Ok(RdPoint {
            lambda_index: index,
            lambda: cfg.lambda(index)?,
            bpp,
            ws_psnr: ws_psnr(img, &rec)?.value,
            sal_psnr: sal_psnr(img, &rec, &eval_map)?.value,
            ws_ssim: ws_ssim(img, &rec)?.value,
        })
    };

    let mut results: Vec<Option<Result<RdPoint>>> = (0..n).map(|_| None).collect();
    if threads == 1 {
        for (index, slot) in results.iter_mut().enumerate() {
            *slot = Some(run_point(index));
        }
    } else {
        let chunks: Vec<Vec<usize>> = (0..threads)
            .map(|t| (0..n).filter(|i| i % threads == t).collect())
            .collect();
        let outputs = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    scope.spawn(|| {
                        chunk
                            .iter()
                            .map(|&i| (i, run_point(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect::<Vec<_>>()
        });
        for batch in outputs {
            for (i, r) in batch {
                results[i] = Some(r);
            }
        }
    }

    let points: Vec<RdPoint> = results
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect::<Result<_>>()?;

    for pair in points.windows(2) {
        if pair[1].bpp < pair[0].bpp - 1e-6 {
            return Err(Error::degenerate(format!(
                "bpp not monotone over the ladder: {} then {}",
                pair[0].bpp, pair[1].bpp
            )));
        }
    }
    Ok(points)
}

/// CSV column order used by sweeps and accepted by the BD loader.
pub const RD_CSV_HEADER: &str = "image,lambda_index,lambda,bpp,ws_psnr,sal_psnr,ws_ssim";

pub fn write_rd_csv<W: std::io::Write>(
    writer: &mut W,
    image_name: &str,
    points: &[RdPoint],
) -> Result<()> {
    writeln!(writer, "{RD_CSV_HEADER}")?;
    for p in points {
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            image_name, p.lambda_index, p.lambda, p.bpp, p.ws_psnr, p.sal_psnr, p.ws_ssim
        )?;
    }
    Ok(())
}
