//! Block-matching collaborative filter with thresholds shaped by the
//! power spectrum of a correlated noise process.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::kernel::NoisePsd;
use super::transform::{dct2_forward, dct2_inverse, dct_matrix, haar_forward, haar_inverse};
use crate::error::{Error, Result};
use crate::grid::Image;

/// Settings of the collaborative filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserSettings {
    /// Block edge length in pixels.
    pub block_size: usize,
    /// Stride between reference blocks.
    pub step: usize,
    /// Edge length of the block-matching search window.
    pub search_window: usize,
    /// Maximum number of blocks stacked into one group.
    pub max_matches: usize,
    /// Hard-threshold multiplier on the per-coefficient noise deviation.
    pub lambda: f64,
    /// Run the empirical Wiener second stage after hard thresholding.
    pub wiener: bool,
    /// Treat the matched blocks as fully correlated when thresholding the
    /// group-mean coefficients, raising their threshold by √(group size).
    /// Matches of a narrowband noise field are near copies of each other,
    /// so their noise adds coherently in the group mean.
    pub coherent_group_mean: bool,
}

impl Default for DenoiserSettings {
    fn default() -> Self {
        Self { block_size: 8, step: 4, search_window: 39, max_matches: 16, lambda: 2.7, wiener: false, coherent_group_mean: true }
    }
}

impl DenoiserSettings {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.step == 0 || self.max_matches == 0 {
            return Err(Error::config("block size, step and max matches must be positive"));
        }
        if self.search_window < self.block_size {
            return Err(Error::config("search window must be at least one block wide"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// One matched group: top-left corners `(z, x)` of its blocks.
type Group = Vec<(usize, usize)>;

/// Per-group contribution to the aggregation buffers.
struct GroupEstimate {
    corners: Group,
    blocks: Vec<f64>,
    weight: f64,
}

/// The ringing-suppression denoiser.
#[derive(Clone, Debug)]
pub struct RingingDenoiser {
    settings: DenoiserSettings,
    dct: Vec<f64>,
    coef_var: Vec<f64>,
}

impl RingingDenoiser {
    pub fn new(psd: &NoisePsd, settings: DenoiserSettings) -> Result<Self> {
        settings.validate()?;
        if psd.size() != settings.block_size {
            return Err(Error::config(format!(
                "PSD size {} does not match block size {}",
                psd.size(),
                settings.block_size
            )));
        }
        let dct = dct_matrix(settings.block_size);
        let coef_var = coefficient_variances(psd, &dct);
        Ok(Self { settings, dct, coef_var })
    }

    pub fn settings(&self) -> &DenoiserSettings {
        &self.settings
    }

    /// Noise variance of each 2D block-transform coefficient.
    pub fn coefficient_variances(&self) -> &[f64] {
        &self.coef_var
    }

    pub fn denoise(&self, v: &Image) -> Result<Image> {
        let b = self.settings.block_size;
        let (nx, nz) = (v.grid.nx(), v.grid.nz());
        if nx < b || nz < b {
            return Err(Error::config(format!(
                "image {nx}x{nz} is smaller than one {b}x{b} block"
            )));
        }
        let basic = self.hard_threshold_stage(v);
        let out = if self.settings.wiener { self.wiener_stage(v, &basic) } else { basic };
        Image::new(v.grid, out)
    }

    fn reference_positions(&self, n: usize) -> Vec<usize> {
        let b = self.settings.block_size;
        let mut pos: Vec<usize> = (0..=n - b).step_by(self.settings.step).collect();
        if *pos.last().unwrap() != n - b {
            pos.push(n - b);
        }
        pos
    }

    /// Up to `max_matches` blocks closest (L2) to the reference, the
    /// reference first; truncated to a power of two.
    fn match_blocks(&self, img: &[f64], nx: usize, nz: usize, rz: usize, rx: usize) -> Group {
        let b = self.settings.block_size;
        let half = self.settings.search_window / 2;
        let cap = self.settings.max_matches;
        let z0 = rz.saturating_sub(half);
        let z1 = (rz + half).min(nz - b);
        let x0 = rx.saturating_sub(half);
        let x1 = (rx + half).min(nx - b);

        let mut best: Vec<(f64, usize, usize)> = Vec::with_capacity(cap + 1);
        best.push((0.0, rz, rx));
        for cz in z0..=z1 {
            for cx in x0..=x1 {
                if cz == rz && cx == rx {
                    continue;
                }
                let bound = if best.len() == cap { best[cap - 1].0 } else { f64::INFINITY };
                let mut d = 0.0;
                'rows: for i in 0..b {
                    let ro = (rz + i) * nx + rx;
                    let co = (cz + i) * nx + cx;
                    for j in 0..b {
                        let diff = img[ro + j] - img[co + j];
                        d += diff * diff;
                    }
                    if d >= bound {
                        break 'rows;
                    }
                }
                if d < bound {
                    // keep the reference at the head, stable among equals
                    let at = best[1..].partition_point(|e| e.0 <= d) + 1;
                    best.insert(at, (d, cz, cx));
                    best.truncate(cap);
                }
            }
        }
        let keep = 1usize << (usize::BITS - 1 - best.len().leading_zeros());
        best.truncate(keep);
        best.into_iter().map(|(_, z, x)| (z, x)).collect()
    }

    fn extract(&self, img: &[f64], nx: usize, group: &Group) -> Vec<f64> {
        let b = self.settings.block_size;
        let mut out = Vec::with_capacity(group.len() * b * b);
        for &(z, x) in group {
            for i in 0..b {
                out.extend_from_slice(&img[(z + i) * nx + x..(z + i) * nx + x + b]);
            }
        }
        out
    }

    /// 2D DCT of every block followed by a Haar transform across the group.
    fn forward_3d(&self, blocks: &mut [f64], n: usize) {
        let bb = self.settings.block_size * self.settings.block_size;
        let b = self.settings.block_size;
        let (mut tmp, mut out) = (vec![0.0; bb], vec![0.0; bb]);
        for blk in blocks.chunks_mut(bb) {
            dct2_forward(&self.dct, b, blk, &mut tmp, &mut out);
            blk.copy_from_slice(&out);
        }
        let mut scratch = vec![0.0; n];
        for c in 0..bb {
            haar_forward(&mut blocks[c..], n, bb, &mut scratch);
        }
    }

    fn inverse_3d(&self, blocks: &mut [f64], n: usize) {
        let bb = self.settings.block_size * self.settings.block_size;
        let b = self.settings.block_size;
        let mut scratch = vec![0.0; n];
        for c in 0..bb {
            haar_inverse(&mut blocks[c..], n, bb, &mut scratch);
        }
        let (mut tmp, mut out) = (vec![0.0; bb], vec![0.0; bb]);
        for blk in blocks.chunks_mut(bb) {
            dct2_inverse(&self.dct, b, blk, &mut tmp, &mut out);
            blk.copy_from_slice(&out);
        }
    }

    fn references(&self, nx: usize, nz: usize) -> Vec<(usize, usize)> {
        let zs = self.reference_positions(nz);
        let xs = self.reference_positions(nx);
        zs.iter().flat_map(|&z| xs.iter().map(move |&x| (z, x))).collect()
    }

    fn aggregate(&self, nx: usize, nz: usize, estimates: Vec<GroupEstimate>, fallback: &[f64]) -> Vec<f64> {
        let b = self.settings.block_size;
        let mut num = vec![0.0; nx * nz];
        let mut den = vec![0.0; nx * nz];
        for est in estimates {
            for (g, &(z, x)) in est.corners.iter().enumerate() {
                let blk = &est.blocks[g * b * b..(g + 1) * b * b];
                for i in 0..b {
                    for j in 0..b {
                        let p = (z + i) * nx + x + j;
                        num[p] += est.weight * blk[i * b + j];
                        den[p] += est.weight;
                    }
                }
            }
        }
        num.iter()
            .zip(&den)
            .zip(fallback)
            .map(|((n, d), f)| if *d > 0.0 { n / d } else { *f })
            .collect()
    }

    fn hard_threshold_stage(&self, v: &Image) -> Vec<f64> {
        let (nx, nz) = (v.grid.nx(), v.grid.nz());
        let bb = self.settings.block_size * self.settings.block_size;
        let thresholds: Vec<f64> = self.coef_var.iter().map(|var| self.settings.lambda * var.sqrt()).collect();
        let img = &v.values;
        let estimates: Vec<GroupEstimate> = self
            .references(nx, nz)
            .into_par_iter()
            .map(|(rz, rx)| {
                let corners = self.match_blocks(img, nx, nz, rz, rx);
                let n = corners.len();
                let mut blocks = self.extract(img, nx, &corners);
                self.forward_3d(&mut blocks, n);
                let mean_scale = if self.settings.coherent_group_mean { (n as f64).sqrt() } else { 1.0 };
                let mut retained = 0usize;
                for (idx, c) in blocks.iter_mut().enumerate() {
                    let thr = if idx < bb { mean_scale * thresholds[idx] } else { thresholds[idx % bb] };
                    // the DC of the group mean is always kept
                    if idx == 0 || c.abs() >= thr {
                        if *c != 0.0 {
                            retained += 1;
                        }
                    } else {
                        *c = 0.0;
                    }
                }
                self.inverse_3d(&mut blocks, n);
                GroupEstimate { corners, blocks, weight: 1.0 / retained.max(1) as f64 }
            })
            .collect();
        self.aggregate(nx, nz, estimates, img)
    }

    fn wiener_stage(&self, v: &Image, pilot: &[f64]) -> Vec<f64> {
        let (nx, nz) = (v.grid.nx(), v.grid.nz());
        let bb = self.settings.block_size * self.settings.block_size;
        let estimates: Vec<GroupEstimate> = self
            .references(nx, nz)
            .into_par_iter()
            .map(|(rz, rx)| {
                let corners = self.match_blocks(pilot, nx, nz, rz, rx);
                let n = corners.len();
                let mut noisy = self.extract(&v.values, nx, &corners);
                let mut basic = self.extract(pilot, nx, &corners);
                self.forward_3d(&mut noisy, n);
                self.forward_3d(&mut basic, n);
                let mut energy = 0.0;
                let mean_scale = if self.settings.coherent_group_mean { n as f64 } else { 1.0 };
                for (idx, (c, p)) in noisy.iter_mut().zip(&basic).enumerate() {
                    let var = if idx < bb { mean_scale * self.coef_var[idx] } else { self.coef_var[idx % bb] };
                    let w = if p * p + var > 0.0 { p * p / (p * p + var) } else { 1.0 };
                    *c *= w;
                    energy += w * w;
                }
                self.inverse_3d(&mut noisy, n);
                let weight = if energy > 0.0 { 1.0 / energy } else { 1.0 };
                GroupEstimate { corners, blocks: noisy, weight }
            })
            .collect();
        self.aggregate(nx, nz, estimates, pilot)
    }
}

/// Variance of each orthonormal 2D DCT coefficient of a block of
/// stationary noise with the given block-resolution PSD:
/// var(i, j) = Σ_k P(k) |φ̂_i(k_z)|² |φ̂_j(k_x)|², with φ̂ the unitary DFT of
/// the DCT basis functions.
fn coefficient_variances(psd: &NoisePsd, dct: &[f64]) -> Vec<f64> {
    let b = psd.size();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(b);
    // spec[i][k] = |DFT(φ_i)(k)|² / b
    let mut spec = vec![0.0; b * b];
    for i in 0..b {
        let mut row: Vec<Complex<f64>> = (0..b).map(|n| Complex::new(dct[i * b + n], 0.0)).collect();
        fft.process(&mut row);
        for k in 0..b {
            spec[i * b + k] = row[k].norm_sqr() / b as f64;
        }
    }
    let mut var = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            let mut s = 0.0;
            for kz in 0..b {
                let wz = spec[i * b + kz];
                for kx in 0..b {
                    s += psd.at(kz, kx) * wz * spec[j * b + kx];
                }
            }
            var[i * b + j] = s;
        }
    }
    var
}

/// One-shot denoise with a fresh [`RingingDenoiser`].
pub fn denoise_ringing(v: &Image, psd: &NoisePsd, settings: &DenoiserSettings) -> Result<Image> {
    RingingDenoiser::new(psd, *settings)?.denoise(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ImageGrid;

    fn denoiser(sigma: f64) -> RingingDenoiser {
        RingingDenoiser::new(&NoisePsd::white(8, sigma).unwrap(), DenoiserSettings::default()).unwrap()
    }

    #[test]
    fn white_psd_gives_flat_coefficient_variance() {
        let d = denoiser(0.5);
        for v in d.coefficient_variances() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_constant_images() {
        let g = ImageGrid::new(20, 24, 1.0, 0.0).unwrap();
        let d = denoiser(0.3);
        let z = d.denoise(&Image::zeros(g)).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        let c = Image::constant(g, -0.04);
        let out = d.denoise(&c).unwrap();
        for v in &out.values {
            assert!((v + 0.04).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_images_and_size_mismatch() {
        let g = ImageGrid::new(7, 24, 1.0, 0.0).unwrap();
        assert!(denoiser(0.3).denoise(&Image::zeros(g)).is_err());
        let psd = NoisePsd::white(16, 0.3).unwrap();
        assert!(RingingDenoiser::new(&psd, DenoiserSettings::default()).is_err());
    }

    #[test]
    fn group_sizes_are_powers_of_two() {
        let g = ImageGrid::new(30, 30, 1.0, 0.0).unwrap();
        let img: Vec<f64> = (0..900).map(|i| ((i * 7919) % 101) as f64).collect();
        let d = denoiser(1.0);
        for &(rz, rx) in &[(0, 0), (22, 22), (8, 12)] {
            let grp = d.match_blocks(&img, g.nx(), g.nz(), rz, rx);
            assert!(grp.len().is_power_of_two());
            assert_eq!(grp[0], (rz, rx));
            assert!(grp.len() <= 16);
        }
    }
}
