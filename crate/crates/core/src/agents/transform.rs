//! Orthonormal block transforms used by the collaborative filter.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Orthonormal DCT-II matrix, row `k` holds basis function `k`.
pub(crate) fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            c[k * n + i] = scale * (PI * (i as f64 + 0.5) * k as f64 / n as f64).cos();
        }
    }
    c
}

/// `out = C X Cᵀ` for an n×n block.
pub(crate) fn dct2_forward(c: &[f64], n: usize, x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    // tmp = C X
    for k in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += c[k * n + i] * x[i * n + j];
            }
            tmp[k * n + j] = s;
        }
    }
    // out = tmp Cᵀ
    for k in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += tmp[k * n + j] * c[l * n + j];
            }
            out[k * n + l] = s;
        }
    }
}

/// `out = Cᵀ Y C`
pub(crate) fn dct2_inverse(c: &[f64], n: usize, y: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    for i in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += c[k * n + i] * y[k * n + l];
            }
            tmp[i * n + l] = s;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                s += tmp[i * n + l] * c[l * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// Full dyadic orthonormal Haar transform of `x[0..len]` taken with
/// stride `stride` (`len` a power of two).
pub(crate) fn haar_forward(x: &mut [f64], len: usize, stride: usize, tmp: &mut [f64]) {
    let mut n = len;
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            let a = x[2 * i * stride];
            let b = x[(2 * i + 1) * stride];
            tmp[i] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        for i in 0..n {
            x[i * stride] = tmp[i];
        }
        n = half;
    }
}

pub(crate) fn haar_inverse(x: &mut [f64], len: usize, stride: usize, tmp: &mut [f64]) {
    let mut n = 2;
    while n <= len {
        let half = n / 2;
        for i in 0..half {
            let a = x[i * stride];
            let d = x[(half + i) * stride];
            tmp[2 * i] = (a + d) * FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        for i in 0..n {
            x[i * stride] = tmp[i];
        }
        n *= 2;
    }
}
