//! Bjontegaard delta metrics between two rate–distortion curves:
//! average quality gap (BD-PSNR) and average rate difference (BD-rate),
//! via polynomial fits in the log10-rate domain integrated exactly over
//! the overlapping interval.

use std::path::Path;

use crate::{Error, Result};

/// Default polynomial degree of the classical procedure.
pub const DEFAULT_FIT_DEGREE: usize = 3;

/// An ordered rate–distortion curve: bpp strictly increasing, quality
/// (dB) strictly increasing, at least four points for the cubic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    points: Vec<(f64, f64)>,
}

impl RdCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::arg(format!(
                "an RD curve needs at least 4 points, got {}",
                points.len()
            )));
        }
        for &(rate, quality) in &points {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::arg("rates must be positive finite numbers"));
            }
            if !quality.is_finite() {
                return Err(Error::arg("quality values must be finite"));
            }
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::arg("rates must be strictly increasing"));
            }
            if pair[1].1 <= pair[0].1 {
                return Err(Error::arg("quality must be strictly increasing with rate"));
            }
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn log_rates(&self) -> Vec<f64> {
        self.points.iter().map(|(r, _)| r.log10()).collect()
    }

    fn qualities(&self) -> Vec<f64> {
        self.points.iter().map(|(_, q)| *q).collect()
    }
}

/// Both deltas plus the integration intervals they were averaged over.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BdResult {
    /// Average quality gap in dB (test minus anchor).
    pub bd_psnr: f64,
    /// Average rate difference in percent (negative = test cheaper).
    pub bd_rate_percent: f64,
    /// Overlap used for BD-PSNR, in log10(rate).
    pub rate_overlap_log10: (f64, f64),
    /// Overlap used for BD-rate, in quality dB.
    pub quality_overlap_db: (f64, f64),
}

/// Least-squares polynomial fit of `ys` against `xs − center`,
/// returning coefficients in ascending powers. Solved by Gaussian
/// elimination with partial pivoting on the normal equations; centering
/// keeps the system well conditioned for dB-scale abscissas.
fn polyfit_centered(xs: &[f64], ys: &[f64], degree: usize, center: f64) -> Result<Vec<f64>> {
    let n = degree + 1;
    if xs.len() < n {
        return Err(Error::arg(format!(
            "{} points cannot support a degree-{degree} fit",
            xs.len()
        )));
    }
    // Normal equations: power sums up to 2·degree.
    let mut pow_sums = vec![0.0; 2 * degree + 1];
    let mut rhs = vec![0.0; n];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x - center;
        let mut p = 1.0;
        for (k, ps) in pow_sums.iter_mut().enumerate() {
            *ps += p;
            if k < n {
                rhs[k] += p * y;
            }
            p *= t;
        }
    }
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = pow_sums[i + j];
        }
    }
    gauss_solve(&mut a, &mut rhs)?;
    Ok(rhs)
}

fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::degenerate("singular system in polynomial fit"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * b[k];
        }
        b[col] = acc / a[col][col];
    }
    Ok(())
}

/// Exact mean of the polynomial over `[lo, hi]` (antiderivative form),
/// in the centered variable.
fn poly_interval_mean(coeffs: &[f64], lo: f64, hi: f64, center: f64) -> f64 {
    let (a, b) = (lo - center, hi - center);
    let mut integral = 0.0;
    for (k, &c) in coeffs.iter().enumerate() {
        let p = (k + 1) as f64;
        integral += c / p * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1));
    }
    integral / (hi - lo)
}

fn overlap(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let lo = a.first().unwrap().max(*b.first().unwrap());
    let hi = a.last().unwrap().min(*b.last().unwrap());
    if !(hi > lo) {
        return Err(Error::degenerate(
            "RD curves do not overlap; refusing to extrapolate",
        ));
    }
    Ok((lo, hi))
}

fn fit_degree_for(anchor: &RdCurve, test: &RdCurve, degree: usize) -> Result<usize> {
    if degree == 0 {
        return Err(Error::arg("fit degree must be at least 1"));
    }
    if anchor.len() < degree + 1 || test.len() < degree + 1 {
        return Err(Error::arg(format!(
            "degree-{degree} fit needs at least {} points per curve",
            degree + 1
        )));
    }
    Ok(degree)
}

/// Average vertical gap (dB) between quality-over-log-rate fits on the
/// overlapping rate interval.
pub fn bd_psnr(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    bd_psnr_with_degree(anchor, test, DEFAULT_FIT_DEGREE)
}

pub fn bd_psnr_with_degree(anchor: &RdCurve, test: &RdCurve, degree: usize) -> Result<f64> {
    let degree = fit_degree_for(anchor, test, degree)?;
    let ax = anchor.log_rates();
    let tx = test.log_rates();
    let (lo, hi) = overlap(&ax, &tx)?;
    let center = (lo + hi) / 2.0;
    let fa = polyfit_centered(&ax, &anchor.qualities(), degree, center)?;
    let ft = polyfit_centered(&tx, &test.qualities(), degree, center)?;
    Ok(poly_interval_mean(&ft, lo, hi, center) - poly_interval_mean(&fa, lo, hi, center))
}

/// Average rate difference in percent: `100·(10^Δ − 1)` with Δ the mean
/// gap between log-rate-over-quality fits on the overlapping quality
/// interval.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    bd_rate_with_degree(anchor, test, DEFAULT_FIT_DEGREE)
}

pub fn bd_rate_with_degree(anchor: &RdCurve, test: &RdCurve, degree: usize) -> Result<f64> {
    let degree = fit_degree_for(anchor, test, degree)?;
    let aq = anchor.qualities();
    let tq = test.qualities();
    let (lo, hi) = overlap(&aq, &tq)?;
    let center = (lo + hi) / 2.0;
    let fa = polyfit_centered(&aq, &anchor.log_rates(), degree, center)?;
    let ft = polyfit_centered(&tq, &test.log_rates(), degree, center)?;
    let delta = poly_interval_mean(&ft, lo, hi, center) - poly_interval_mean(&fa, lo, hi, center);
    Ok(100.0 * (10f64.powf(delta) - 1.0))
}

/// Both deltas plus their integration intervals.
pub fn bd_result(anchor: &RdCurve, test: &RdCurve, degree: usize) -> Result<BdResult> {
    let bd_psnr = bd_psnr_with_degree(anchor, test, degree)?;
    let bd_rate_percent = bd_rate_with_degree(anchor, test, degree)?;
    let ax = anchor.log_rates();
    let tx = test.log_rates();
    let rate_overlap_log10 = overlap(&ax, &tx)?;
    let aq = anchor.qualities();
    let tq = test.qualities();
    let quality_overlap_db = overlap(&aq, &tq)?;
    Ok(BdResult {
        bd_psnr,
        bd_rate_percent,
        rate_overlap_log10,
        quality_overlap_db,
    })
}

/// Which quality column of a rate–distortion CSV to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdCsvMetric {
    WsPsnr,
    SalPsnr,
    WsSsim,
}

impl RdCsvMetric {
    pub fn column(self) -> &'static str {
        match self {
            RdCsvMetric::WsPsnr => "ws_psnr",
            RdCsvMetric::SalPsnr => "sal_psnr",
            RdCsvMetric::WsSsim => "ws_ssim",
        }
    }
}

/// Load `(bpp, quality)` pairs from a sweep CSV with the header
/// `image,lambda_index,lambda,bpp,ws_psnr,sal_psnr,ws_ssim`. Rows are
/// sorted by bpp; duplicate bpp values and short files are rejected.
pub fn load_rd_csv(path: &Path, metric: RdCsvMetric) -> Result<RdCurve> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Malformed(format!("missing CSV column '{name}'")))
    };
    let bpp_col = find("bpp")?;
    let quality_col = find(metric.column())?;

    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed(format!("row {}: {e}", line + 2)))?;
        let parse = |col: usize| -> Result<f64> {
            record
                .get(col)
                .ok_or_else(|| Error::Malformed(format!("row {}: missing field", line + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Malformed(format!("row {}: {e}", line + 2)))
        };
        points.push((parse(bpp_col)?, parse(quality_col)?));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in points.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Malformed(format!(
                "duplicate bpp value {} in {}",
                pair[0].0,
                path.display()
            )));
        }
    }
    RdCurve::new(points)
}
