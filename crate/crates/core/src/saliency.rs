//! Saliency-mask pipeline: rescale+sigmoid of a raw attention map,
//! average pooling down to latent resolution, mask-residual computation,
//! and latent-channel masking. Also provides a synthetic equator-biased
//! saliency generator that stands in for a trained attention network.

use crate::sphere::erp_point_to_spherical;
use crate::{Error, Result};

/// Continuous attention density over a pixel grid. Values are
/// non-negative and finite; no normalization is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("saliency dimensions must be positive"));
        }
        if values.len() != width * height {
            return Err(Error::arg("saliency value count does not match dimensions"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg("saliency values must be finite and non-negative"));
        }
        Ok(SaliencyMap {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        SaliencyMap::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Mirror left↔right.
    pub fn hflip(&self) -> SaliencyMap {
        let mut out = self.clone();
        for row in out.values.chunks_mut(self.width) {
            row.reverse();
        }
        out
    }

    /// Mirror top↔bottom.
    pub fn vmirror(&self) -> SaliencyMap {
        let mut out = self.clone();
        for y in 0..self.height {
            let src = (self.height - 1 - y) * self.width;
            out.values[y * self.width..(y + 1) * self.width]
                .copy_from_slice(&self.values[src..src + self.width]);
        }
        out
    }
}

/// Saliency pooled to the latent grid; values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DownsampledMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DownsampledMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Multiplier grid `(mask + α)/α`; values lie in `[1, (1+α)/α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskResidual {
    width: usize,
    height: usize,
    alpha: f64,
    values: Vec<f64>,
}

impl MaskResidual {
    /// Build directly from multiplier values (all must be ≥ 1 and finite).
    pub fn from_values(width: usize, height: usize, alpha: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::arg("residual value count does not match dimensions"));
        }
        if !(alpha > 0.0) {
            return Err(Error::arg("alpha must be positive"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 1.0) {
            return Err(Error::arg("residual multipliers must be finite and >= 1"));
        }
        Ok(MaskResidual {
            width,
            height,
            alpha,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// C×h×w coefficient volume, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl LatentTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        LatentTensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::arg("latent data length does not match shape"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("latent coefficients must be finite"));
        }
        Ok(LatentTensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells_per_channel(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.cells_per_channel();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.cells_per_channel();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Affine rescale of a non-constant map to [0, 255] followed by the
/// elementwise logistic; output values land in [0.5, 1] (the upper
/// endpoint saturates to 1.0 in double precision).
pub fn rescale_and_sigmoid(raw: &SaliencyMap) -> Result<SaliencyMap> {
    let min = raw.min();
    let max = raw.max();
    if max == min {
        return Err(Error::degenerate(
            "constant saliency map: rescale to [0, 255] is undefined",
        ));
    }
    let scale = 255.0 / (max - min);
    let values = raw
        .values
        .iter()
        .map(|v| {
            let t = (v - min) * scale;
            1.0 / (1.0 + (-t).exp())
        })
        .collect();
    SaliencyMap::new(raw.width, raw.height, values)
}

/// Non-overlapping D×D average pooling; edge blocks average over the
/// in-bounds region only. Input values must already be in [0, 1].
pub fn downsample_mask(map: &SaliencyMap, factor: usize) -> Result<DownsampledMask> {
    if factor == 0 {
        return Err(Error::arg("downsample factor must be at least 1"));
    }
    if factor > map.width && factor > map.height {
        return Err(Error::arg(format!(
            "downsample factor {factor} larger than both dimensions {}x{}",
            map.width, map.height
        )));
    }
    if map.values.iter().any(|v| *v > 1.0) {
        return Err(Error::arg("mask downsampling expects values in [0, 1]"));
    }
    let out_w = map.width.div_ceil(factor);
    let out_h = map.height.div_ceil(factor);
    let mut values = vec![0.0; out_w * out_h];
    for by in 0..out_h {
        let y0 = by * factor;
        let y1 = (y0 + factor).min(map.height);
        for bx in 0..out_w {
            let x0 = bx * factor;
            let x1 = (x0 + factor).min(map.width);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += map.values[y * map.width + x];
                }
            }
            values[by * out_w + bx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    Ok(DownsampledMask {
        width: out_w,
        height: out_h,
        values,
    })
}

/// Elementwise `(mask + α)/α`.
pub fn mask_residual(mask: &DownsampledMask, alpha: f64) -> Result<MaskResidual> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::arg("alpha must be a positive finite number"));
    }
    let values = mask.values.iter().map(|m| (m + alpha) / alpha).collect();
    Ok(MaskResidual {
        width: mask.width,
        height: mask.height,
        alpha,
        values,
    })
}

/// Copy channels `[0, split)` verbatim and multiply channels
/// `[split, C)` elementwise by the residual, broadcast across channels.
pub fn apply_latent_mask(
    latent: &LatentTensor,
    residual: &MaskResidual,
    split: usize,
) -> Result<LatentTensor> {
    if residual.width != latent.width || residual.height != latent.height {
        return Err(Error::arg(format!(
            "residual grid {}x{} does not match latent {}x{}",
            residual.width, residual.height, latent.width, latent.height
        )));
    }
    if split > latent.channels {
        return Err(Error::arg(format!(
            "split {split} exceeds channel count {}",
            latent.channels
        )));
    }
    let mut out = latent.clone();
    for c in split..latent.channels {
        let plane = out.channel_mut(c);
        for (v, r) in plane.iter_mut().zip(&residual.values) {
            *v *= r;
        }
    }
    Ok(out)
}

/// Inverse of [`apply_latent_mask`]: divide channels `[split, C)` by the
/// residual. Used by decoders holding only the coarse residual grid.
pub fn invert_latent_mask(
    latent: &LatentTensor,
    residual: &MaskResidual,
    split: usize,
) -> Result<LatentTensor> {
    if residual.width != latent.width || residual.height != latent.height {
        return Err(Error::arg("residual grid does not match latent dimensions"));
    }
    if split > latent.channels {
        return Err(Error::arg("split exceeds channel count"));
    }
    let mut out = latent.clone();
    for c in split..latent.channels {
        let plane = out.channel_mut(c);
        for (v, r) in plane.iter_mut().zip(&residual.values) {
            *v /= r;
        }
    }
    Ok(out)
}

/// A Gaussian attention bump centered at `(lat, lon)` with angular
/// standard deviation `sigma` (great-circle radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hotspot {
    pub lat: f64,
    pub lon: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

/// Synthetic equator-biased saliency: a Gaussian in latitude plus
/// optional great-circle Gaussian hotspots. Stands in for a trained
/// attention network in experiments.
pub fn equator_prior_saliency(
    width: usize,
    height: usize,
    sigma_lat: f64,
    hotspots: &[Hotspot],
) -> Result<SaliencyMap> {
    if !(sigma_lat > 0.0) {
        return Err(Error::arg("sigma_lat must be positive"));
    }
    for h in hotspots {
        if !(h.sigma > 0.0) || !h.amplitude.is_finite() || h.amplitude < 0.0 {
            return Err(Error::arg(
                "hotspot needs positive sigma and non-negative finite amplitude",
            ));
        }
    }
    let mut values = vec![0.0; width * height];
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let mut s = (-lat * lat / (2.0 * sigma_lat * sigma_lat)).exp();
            for h in hotspots {
                let d = great_circle_distance(lat, lon, h.lat, h.lon);
                s += h.amplitude * (-d * d / (2.0 * h.sigma * h.sigma)).exp();
            }
            values[v * width + u] = s;
        }
    }
    SaliencyMap::new(width, height, values)
}

/// Haversine great-circle distance in radians.
pub fn great_circle_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let a = (dlat / 2.0).sin().powi(2)
        + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * a.sqrt().clamp(0.0, 1.0).asin()
}
