use rayon::prelude::*;

use super::sparse::SparseColumns;
use super::travel::{beam_weight, travel_time};
use crate::error::{check_len, Error, Result};
use crate::grid::{Image, ImageGrid};
use crate::pulse::Pulse;
use crate::scan::ScanConfig;

/// Entries below this fraction of a column's peak are dropped from A.
pub const SPARSITY_THRESHOLD: f64 = 1e-6;

/// The linear measurement operator y = Ax + Dg + e.
#[derive(Clone, Debug)]
pub struct SystemModel {
    /// MK × N, one column per voxel.
    pub a: SparseColumns,
    /// MK × (K·J), block-diagonal over receivers.
    pub d: SparseColumns,
    /// Noise standard deviation σ.
    pub noise_std: f64,
    pub m: usize,
    pub k: usize,
}

impl SystemModel {
    pub fn new(a: SparseColumns, d: SparseColumns, noise_std: f64, m: usize, k: usize) -> Result<Self> {
        check_len("rows of A", m * k, a.nrows())?;
        check_len("rows of D", m * k, d.nrows())?;
        if !(noise_std > 0.0 && noise_std.is_finite()) {
            return Err(Error::config(format!(
                "the data-fit model needs a positive noise std, got {noise_std}"
            )));
        }
        Ok(Self { a, d, noise_std, m, k })
    }

    /// Build A and D for a scan, using the scan's noise level as σ.
    pub fn build(cfg: &ScanConfig) -> Result<Self> {
        Self::build_with_noise(cfg, cfg.noise_std)
    }

    /// Build A and D with an explicit model σ (e.g. for noiseless data).
    pub fn build_with_noise(cfg: &ScanConfig, noise_std: f64) -> Result<Self> {
        let a = build_system_matrix(cfg)?;
        let d = build_direct_arrival_basis(cfg)?;
        Self::new(a, d, noise_std, cfg.m, cfg.k())
    }

    /// Number of voxels N.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.m * self.k
    }
}

/// Write `scale × pulse` delayed by `delay` seconds into `out`, splitting
/// each sample between its two neighbouring output samples by linear
/// interpolation.
fn place_delayed(pulse: &Pulse, delay: f64, scale: f64, out: &mut [f64]) -> Result<()> {
    let pos = delay * pulse.sample_rate();
    let n0 = pos.floor();
    let frac = pos - n0;
    if n0 < 0.0 {
        return Err(Error::config("negative propagation delay"));
    }
    let n0 = n0 as usize;
    for (i, &s) in pulse.samples().iter().enumerate() {
        for (idx, w) in [(n0 + i, 1.0 - frac), (n0 + i + 1, frac)] {
            if w == 0.0 {
                continue;
            }
            match out.get_mut(idx) {
                Some(o) => *o += scale * w * s,
                None => {
                    return Err(Error::config(format!(
                        "delay of {:.1} µs overruns the {}-sample window",
                        delay * 1e6,
                        out.len()
                    )))
                }
            }
        }
    }
    Ok(())
}

/// Column of A for voxel `j` of `grid` as sparse `(row, value)` pairs.
pub fn voxel_column(cfg: &ScanConfig, grid: &ImageGrid, j: usize) -> Result<Vec<(u32, f64)>> {
    let v = grid.center(j);
    let weight = beam_weight(v, &cfg.geometry);
    if weight == 0.0 {
        return Ok(Vec::new());
    }
    let src = cfg.geometry.source_pos();
    let down = travel_time(src, v, &cfg.medium)?;
    let r_src = (v[0] - src[0]).hypot(v[1] - src[1]);

    let m = cfg.m;
    let mut dense = vec![0.0; m * cfg.k()];
    for (k, r) in cfg.geometry.receivers().iter().enumerate() {
        let up = travel_time(v, *r, &cfg.medium)?;
        let r_total = r_src + (r[0] - v[0]).hypot(r[1] - v[1]);
        let scale = weight / r_total.max(grid.pitch());
        place_delayed(&cfg.pulse, down + up, scale, &mut dense[k * m..(k + 1) * m])?;
    }
    let peak = dense.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = SPARSITY_THRESHOLD * peak;
    Ok(dense
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v != 0.0 && v.abs() >= cut)
        .map(|(i, v)| (i as u32, v))
        .collect())
}

/// Assemble the MK × N system matrix column by column.
///
/// Column j, receiver block k holds the pulse delayed by the two-way
/// travel time source → voxel → receiver, weighted by the beam
/// apodization and 1/max(path length, pitch).
pub fn build_system_matrix(cfg: &ScanConfig) -> Result<SparseColumns> {
    let grid = cfg.grid;
    let columns = (0..grid.len())
        .into_par_iter()
        .map(|j| voxel_column(cfg, &grid, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseColumns::from_columns(cfg.m * cfg.k(), columns))
}

/// Direct-arrival basis: per receiver, `direct_arrival_copies` unit-norm
/// copies of the pulse delayed by the source → receiver travel time (and
/// successive one-sample shifts), confined to that receiver's block.
pub fn build_direct_arrival_basis(cfg: &ScanConfig) -> Result<SparseColumns> {
    let m = cfg.m;
    let src = cfg.geometry.source_pos();
    let fs = cfg.pulse.sample_rate();
    let mut columns = Vec::with_capacity(cfg.k() * cfg.direct_arrival_copies);
    for (k, r) in cfg.geometry.receivers().iter().enumerate() {
        let t = travel_time(src, *r, &cfg.medium)?;
        for c in 0..cfg.direct_arrival_copies {
            let mut block = vec![0.0; m];
            place_delayed(&cfg.pulse, t + c as f64 / fs, 1.0, &mut block)?;
            let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
            columns.push(
                block
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .map(|(i, v)| ((k * m + i) as u32, v / norm))
                    .collect(),
            );
        }
    }
    Ok(SparseColumns::from_columns(m * cfg.k(), columns))
}

/// `A x`
pub fn apply_a(model: &SystemModel, image: &Image) -> Result<Vec<f64>> {
    model.a.mul_vec(&image.values)
}

/// `Aᵀ u`, returned as an image-shaped vector.
pub fn apply_a_transpose(model: &SystemModel, u: &[f64]) -> Result<Vec<f64>> {
    model.a.tmul_vec(u)
}

/// `D g`
pub fn apply_d(model: &SystemModel, g: &[f64]) -> Result<Vec<f64>> {
    model.d.mul_vec(g)
}

/// `Dᵀ u`
pub fn apply_d_transpose(model: &SystemModel, u: &[f64]) -> Result<Vec<f64>> {
    model.d.tmul_vec(u)
}
