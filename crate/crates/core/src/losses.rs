//! Measurable training objectives: saliency-weighted MSE, the combined
//! rate–distortion loss, the fusion loss (KLD − CC), and bits-per-pixel
//! accounting.

use serde::{Deserialize, Serialize};

use crate::saliency::SaliencyMap;
use crate::salmetrics::{self, DEFAULT_KLD_EPSILON};
use crate::sphere::ErpImage;
use crate::{Error, Result};

/// One evaluated operating point. `total` always equals
/// `lambda · sal_mse + bpp`; when the fusion fields are present,
/// `fusion == kld − cc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub sal_mse: f64,
    pub bpp: f64,
    pub lambda: f64,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kld: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<f64>,
}

impl LossReport {
    pub fn new(sal_mse: f64, bpp: f64, lambda: f64) -> Result<Self> {
        let total = rd_loss(sal_mse, bpp, lambda)?;
        Ok(LossReport {
            sal_mse,
            bpp,
            lambda,
            total,
            kld: None,
            cc: None,
            fusion: None,
        })
    }

    pub fn with_fusion(mut self, fusion: FusionLoss) -> Self {
        self.kld = Some(fusion.kld);
        self.cc = Some(fusion.cc);
        self.fusion = Some(fusion.fusion);
        self
    }

    /// Internal consistency of the report fields.
    pub fn is_consistent(&self) -> bool {
        let expect = self.lambda * self.sal_mse + self.bpp;
        let total_ok = (self.total - expect).abs() <= 1e-12 * expect.abs().max(1.0);
        let fusion_ok = match (self.kld, self.cc, self.fusion) {
            (Some(k), Some(c), Some(f)) => (f - (k - c)).abs() <= 1e-12 * (k - c).abs().max(1.0),
            (None, None, None) => true,
            _ => false,
        };
        total_ok && fusion_ok
    }
}

/// Saliency-weighted mean squared error:
/// `Σ s_i · e²_i / Σ s_i`, where `e²_i` is the per-pixel squared error
/// averaged over color channels. The caller supplies `s` in whatever
/// convention it wants weighted by (typically the sigmoid of a ground
/// truth map); positive rescaling of `s` does not change the value.
pub fn sal_mse(x: &ErpImage, x_hat: &ErpImage, s: &SaliencyMap) -> Result<f64> {
    if !x.same_shape(x_hat) {
        return Err(Error::arg("images must share dimensions and channels"));
    }
    if s.width() != x.width() || s.height() != x.height() {
        return Err(Error::arg("saliency map size must match the images"));
    }
    let weight_sum = s.sum();
    if weight_sum == 0.0 {
        return Err(Error::degenerate("saliency weights sum to zero"));
    }
    let channels = x.channels() as f64;
    let mut acc = 0.0;
    for (i, w) in s.values().iter().enumerate() {
        let mut err = 0.0;
        for c in 0..x.channels() {
            let d = x.plane(c)[i] - x_hat.plane(c)[i];
            err += d * d;
        }
        acc += w * (err / channels);
    }
    Ok(acc / weight_sum)
}

/// `λ · distortion + rate`.
pub fn rd_loss(sal_mse_value: f64, bpp_value: f64, lambda: f64) -> Result<f64> {
    if !sal_mse_value.is_finite() || !bpp_value.is_finite() || !lambda.is_finite() {
        return Err(Error::arg("rd_loss arguments must be finite"));
    }
    if !(lambda > 0.0) {
        return Err(Error::arg("lambda must be positive"));
    }
    Ok(lambda * sal_mse_value + bpp_value)
}

/// Fusion objective components; `fusion = kld − cc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionLoss {
    pub kld: f64,
    pub cc: f64,
    pub fusion: f64,
}

/// Evaluate the fusion loss between a predicted and a ground-truth map.
/// Metric preconditions (nonzero variance for CC, nonzero mass for KLD)
/// propagate as errors.
pub fn fusion_loss(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<FusionLoss> {
    let kld = salmetrics::kld(gt, pred, DEFAULT_KLD_EPSILON)?;
    let cc = salmetrics::cc(pred, gt)?;
    Ok(FusionLoss {
        kld,
        cc,
        fusion: kld - cc,
    })
}

/// `8 · bytes / (width · height)`, counting every transmitted byte
/// (headers and side information included).
pub fn bits_per_pixel(bitstream_bytes: usize, width: usize, height: usize) -> Result<f64> {
    if width == 0 || height == 0 {
        return Err(Error::arg("pixel area must be positive"));
    }
    Ok(8.0 * bitstream_bytes as f64 / (width as f64 * height as f64))
}
