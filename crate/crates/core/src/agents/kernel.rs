//! Ring-shaped correlated-noise kernel and its block power spectrum.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radially symmetric kernel cos(4πr/γ)·exp(−r²/(2η²)) on an odd S×S
/// lattice centred at the middle sample. Successive rings are γ/2 apart.
#[derive(Clone, Debug, PartialEq)]
pub struct RingKernel {
    values: Vec<f64>,
    size: usize,
    gamma: f64,
    eta: f64,
}

impl RingKernel {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Spacing between successive rings, γ/2 samples.
    pub fn ring_period(&self) -> f64 {
        self.gamma / 2.0
    }

    fn half(&self) -> isize {
        (self.size / 2) as isize
    }

    /// Value at signed offset `(a, b)` from the centre (`a` lateral, `b` depth).
    pub fn at(&self, a: isize, b: isize) -> f64 {
        let h = self.half();
        assert!(a.abs() <= h && b.abs() <= h, "offset outside kernel");
        self.values[((b + h) as usize) * self.size + (a + h) as usize]
    }

    /// Continuous radial profile of the kernel.
    pub fn profile(&self, r: f64) -> f64 {
        ring_profile(r, self.gamma, self.eta)
    }

    /// Radii of the local maxima of the continuous profile on (0, r_max],
    /// located on a grid of spacing `step` and refined by a parabolic fit.
    pub fn radial_maxima(&self, r_max: f64, step: f64) -> Vec<f64> {
        let n = (r_max / step).ceil() as usize;
        let f: Vec<f64> = (0..=n + 1).map(|i| self.profile(i as f64 * step)).collect();
        (1..=n)
            .filter(|&i| f[i] > f[i - 1] && f[i] >= f[i + 1])
            .map(|i| {
                let denom = f[i - 1] - 2.0 * f[i] + f[i + 1];
                let shift = if denom != 0.0 { 0.5 * (f[i - 1] - f[i + 1]) / denom } else { 0.0 };
                (i as f64 + shift) * step
            })
            .collect()
    }

    /// Integer offsets of the local maxima along the positive lateral axis.
    pub fn axis_maxima(&self) -> Vec<usize> {
        let h = self.half();
        (1..h)
            .filter(|&a| self.at(a, 0) > self.at(a - 1, 0) && self.at(a, 0) >= self.at(a + 1, 0))
            .map(|a| a as usize)
            .collect()
    }
}

fn ring_profile(r: f64, gamma: f64, eta: f64) -> f64 {
    (4.0 * PI * r / gamma).cos() * (-r * r / (2.0 * eta * eta)).exp()
}

/// Smallest odd kernel size accepted for `gamma`: covers two ring
/// wavelengths on each side of the centre.
pub fn min_kernel_size(gamma: f64) -> usize {
    let s = (4.0 * gamma).ceil() as usize;
    if s.is_multiple_of(2) {
        s + 1
    } else {
        s
    }
}

/// Sample the ring kernel on a `size × size` lattice.
pub fn build_ring_kernel(gamma: f64, eta: f64, size: usize) -> Result<RingKernel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::config(format!("eta must be positive, got {eta}")));
    }
    if size.is_multiple_of(2) || (size as f64) < 4.0 * gamma {
        return Err(Error::config(format!(
            "kernel size must be odd and at least 4·gamma = {:.2}, got {size}",
            4.0 * gamma
        )));
    }
    let h = (size / 2) as isize;
    let mut values = Vec::with_capacity(size * size);
    for b in -h..=h {
        for a in -h..=h {
            let r = ((a * a + b * b) as f64).sqrt();
            values.push(ring_profile(r, gamma, eta));
        }
    }
    Ok(RingKernel { values, size, gamma, eta })
}

/// Power spectral density of the correlated artifact process on a
/// `size × size` block, in unshifted DFT order (index 0 is DC, rows are
/// depth frequencies).
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePsd {
    values: Vec<f64>,
    size: usize,
    noise_std: f64,
}

impl NoisePsd {
    pub fn new(values: Vec<f64>, size: usize, noise_std: f64) -> Result<Self> {
        if size == 0 || values.len() != size * size {
            return Err(Error::config("PSD must be a non-empty square array"));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("PSD entries must be finite and non-negative"));
        }
        if !(noise_std > 0.0 && noise_std.is_finite()) {
            return Err(Error::config(format!("PSD noise std must be positive, got {noise_std}")));
        }
        Ok(Self { values, size, noise_std })
    }

    /// Flat spectrum of white noise with standard deviation `noise_std`.
    pub fn white(size: usize, noise_std: f64) -> Result<Self> {
        Self::new(vec![noise_std * noise_std; size * size], size, noise_std)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    #[inline]
    pub fn at(&self, kz: usize, kx: usize) -> f64 {
        self.values[kz * self.size + kx]
    }

    pub fn total_power(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Same spectrum with the DC bin moved to the centre, for display.
    pub fn centered(&self) -> Vec<f64> {
        let n = self.size;
        let shift = n / 2;
        let mut out = vec![0.0; n * n];
        for kz in 0..n {
            for kx in 0..n {
                out[((kz + shift) % n) * n + (kx + shift) % n] = self.at(kz, kx);
            }
        }
        out
    }
}

/// 2D DFT of a real square array (unshifted order).
pub(crate) fn dft2(values: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for z in 0..n {
            col[z] = data[z * n + x];
        }
        fft.process(&mut col);
        for z in 0..n {
            data[z * n + x] = col[z];
        }
    }
    data
}

/// Power spectrum of `kernel`, folded onto a `block_size` frequency
/// lattice by averaging the kernel-resolution bins nearest to each block
/// bin, and scaled to a total power of `noise_std² · block_size²`.
pub fn kernel_psd(kernel: &RingKernel, block_size: usize, noise_std: f64) -> Result<NoisePsd> {
    psd_from_array(kernel.values(), kernel.size(), block_size, noise_std)
}

/// [`kernel_psd`] for an arbitrary odd-sized square kernel array.
pub fn psd_from_array(values: &[f64], size: usize, block_size: usize, noise_std: f64) -> Result<NoisePsd> {
    if block_size == 0 || block_size > size {
        return Err(Error::config(format!(
            "block size {block_size} must be in 1..={size} (kernel size)"
        )));
    }
    if values.len() != size * size {
        return Err(Error::config("kernel array is not square"));
    }
    if !(noise_std > 0.0 && noise_std.is_finite()) {
        return Err(Error::config(format!("noise std must be positive, got {noise_std}")));
    }
    let spec = dft2(values, size);
    let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();

    let signed = |m: usize| if m <= size / 2 { m as f64 } else { m as f64 - size as f64 };
    let bin = |m: usize| {
        let k = (signed(m) * block_size as f64 / size as f64).round() as isize;
        k.rem_euclid(block_size as isize) as usize
    };
    let mut sum = vec![0.0; block_size * block_size];
    let mut count = vec![0usize; block_size * block_size];
    for mz in 0..size {
        let bz = bin(mz);
        for mx in 0..size {
            let idx = bz * block_size + bin(mx);
            sum[idx] += power[mz * size + mx];
            count[idx] += 1;
        }
    }
    let mut psd: Vec<f64> =
        sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    let total: f64 = psd.iter().sum();
    if total <= 0.0 {
        return Err(Error::config("kernel has no spectral power"));
    }
    let scale = noise_std * noise_std * (block_size * block_size) as f64 / total;
    psd.iter_mut().for_each(|v| *v *= scale);
    NoisePsd::new(psd, block_size, noise_std)
}
