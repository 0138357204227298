//! Orthonormal 2-D block DCT with zigzag coefficient ordering.

use std::f64::consts::PI;

/// Precomputed orthonormal DCT-II basis for one block size, plus the
/// zigzag scan order used to arrange coefficients by frequency.
#[derive(Debug, Clone)]
pub struct BlockDct {
    size: usize,
    // basis[k * size + n] = c(k) · cos(π(2n+1)k / 2N)
    basis: Vec<f64>,
    // zigzag[z] = (row, col) of the z-th coefficient, low → high frequency.
    zigzag: Vec<(usize, usize)>,
}

impl BlockDct {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "block size must be positive");
        let n = size as f64;
        let mut basis = vec![0.0; size * size];
        for k in 0..size {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for i in 0..size {
                basis[k * size + i] = scale * (PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n)).cos();
            }
        }
        BlockDct {
            size,
            basis,
            zigzag: zigzag_scan(size),
        }
    }

    /// `(row, col)` of zigzag position `z`.
    pub fn zigzag(&self) -> &[(usize, usize)] {
        &self.zigzag
    }

    /// Forward transform of a row-major `size × size` block.
    pub fn forward(&self, block: &[f64], out: &mut [f64]) {
        self.apply(block, out, false);
    }

    /// Inverse transform back to the spatial block.
    pub fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        self.apply(coeffs, out, true);
    }

    // Y = B·X·Bᵀ (forward) or X = Bᵀ·Y·B (inverse), via two passes.
    fn apply(&self, input: &[f64], out: &mut [f64], inverse: bool) {
        let n = self.size;
        debug_assert_eq!(input.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        let mut tmp = vec![0.0; n * n];
        // Rows: tmp = input · Bᵀ (forward) or input · B (inverse).
        for r in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    let b = if inverse { self.basis[i * n + k] } else { self.basis[k * n + i] };
                    acc += input[r * n + i] * b;
                }
                tmp[r * n + k] = acc;
            }
        }
        // Columns.
        for k in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    let b = if inverse { self.basis[i * n + k] } else { self.basis[k * n + i] };
                    acc += tmp[i * n + c] * b;
                }
                out[k * n + c] = acc;
            }
        }
    }
}

/// JPEG-style zigzag scan generalized to N×N: diagonals of constant
/// row+col, alternating direction, starting at the DC position.
fn zigzag_scan(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for row in lo..=hi {
                order.push((row, s - row));
            }
        } else {
            for row in (lo..=hi).rev() {
                order.push((row, s - row));
            }
        }
    }
    order
}
