//! Saliency evaluation measures: linear correlation coefficient (CC),
//! Kullback–Leibler divergence (KLD), normalized scanpath saliency
//! (NSS), and AUC-Judd. All four are deterministic; AUC uses the full
//! set of fixation-value thresholds rather than random sampling.

use crate::saliency::SaliencyMap;
use crate::{Error, Result};

/// Default smoothing constant added to both normalized distributions
/// inside the KLD logarithm.
pub const DEFAULT_KLD_EPSILON: f64 = 1e-7;

/// Binary grid of recorded gaze landing points.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationMap {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl FixationMap {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("fixation dimensions must be positive"));
        }
        if cells.len() != width * height {
            return Err(Error::arg("fixation cell count does not match dimensions"));
        }
        Ok(FixationMap {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_fixated(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn fixation_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

fn check_same_size(a: &SaliencyMap, b: &SaliencyMap) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::arg(format!(
            "map sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pearson linear correlation over all pixels; requires nonzero
/// variance on both maps.
pub fn cc(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    check_same_size(pred, gt)?;
    if pred.min() == pred.max() || gt.min() == gt.max() {
        return Err(Error::degenerate(
            "correlation undefined for zero-variance map",
        ));
    }
    let mp = mean(pred.values());
    let mg = mean(gt.values());
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for (p, g) in pred.values().iter().zip(gt.values()) {
        let dp = p - mp;
        let dg = g - mg;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    if var_p == 0.0 || var_g == 0.0 {
        return Err(Error::degenerate(
            "correlation undefined for zero-variance map",
        ));
    }
    Ok(cov / (var_p.sqrt() * var_g.sqrt()))
}

/// KLD(gt ‖ pred) with both maps normalized to unit sum and `epsilon`
/// added inside the logarithm: `Σ p·ln((p+ε)/(q+ε))`.
pub fn kld(gt: &SaliencyMap, pred: &SaliencyMap, epsilon: f64) -> Result<f64> {
    check_same_size(gt, pred)?;
    if !(epsilon > 0.0) {
        return Err(Error::arg("epsilon must be positive"));
    }
    let sum_g = gt.sum();
    let sum_p = pred.sum();
    if sum_g == 0.0 || sum_p == 0.0 {
        return Err(Error::degenerate("KLD undefined for an all-zero map"));
    }
    let mut total = 0.0;
    for (g, p) in gt.values().iter().zip(pred.values()) {
        let pg = g / sum_g;
        let qp = p / sum_p;
        if pg > 0.0 {
            total += pg * ((pg + epsilon) / (qp + epsilon)).ln();
        }
    }
    Ok(total)
}

/// Z-score the prediction over all pixels, then average at fixated
/// cells.
pub fn nss(pred: &SaliencyMap, fix: &FixationMap) -> Result<f64> {
    if pred.width() != fix.width() || pred.height() != fix.height() {
        return Err(Error::arg("prediction and fixation sizes differ"));
    }
    let n_fix = fix.fixation_count();
    if n_fix == 0 {
        return Err(Error::degenerate("NSS needs at least one fixation"));
    }
    if pred.min() == pred.max() {
        return Err(Error::degenerate("NSS undefined for constant prediction"));
    }
    let m = mean(pred.values());
    let var = pred
        .values()
        .iter()
        .map(|v| (v - m) * (v - m))
        .sum::<f64>()
        / pred.values().len() as f64;
    if var == 0.0 {
        return Err(Error::degenerate("NSS undefined for constant prediction"));
    }
    let sd = var.sqrt();
    let mut sum = 0.0;
    for (v, &f) in pred.values().iter().zip(fix.cells()) {
        if f {
            sum += (v - m) / sd;
        }
    }
    Ok(sum / n_fix as f64)
}

/// AUC-Judd: thresholds are the fixations' predicted values taken in
/// descending order (duplicates used once). At threshold t the true
/// positive rate counts fixations with value ≥ t and the false positive
/// rate counts non-fixation pixels with value ≥ t; the curve is closed
/// with the anchors (0,0) and (1,1) and integrated by trapezoids.
pub fn auc_judd(pred: &SaliencyMap, fix: &FixationMap) -> Result<f64> {
    if pred.width() != fix.width() || pred.height() != fix.height() {
        return Err(Error::arg("prediction and fixation sizes differ"));
    }
    let n_fix = fix.fixation_count();
    if n_fix == 0 {
        return Err(Error::degenerate("AUC needs at least one fixation"));
    }
    let n_neg = pred.values().len() - n_fix;

    let mut thresholds: Vec<f64> = pred
        .values()
        .iter()
        .zip(fix.cells())
        .filter(|(_, &f)| f)
        .map(|(v, _)| *v)
        .collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    // (fpr, tpr) points; thresholds descend so rates ascend.
    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push((0.0, 0.0));
    for &t in &thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (v, &f) in pred.values().iter().zip(fix.cells()) {
            if *v >= t {
                if f {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let tpr = tp as f64 / n_fix as f64;
        let fpr = if n_neg == 0 { 0.0 } else { fp as f64 / n_neg as f64 };
        points.push((fpr, tpr));
    }
    points.push((1.0, 1.0));

    let mut area = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(area)
}
