use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::system::{build_direct_arrival_basis, voxel_column};
use crate::error::{check_len, Error, Result};
use crate::grid::Image;
use crate::scan::{MeasurementSet, ScanConfig};

/// Direct-arrival scaling coefficients g, one per column of D.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectArrivalCoeffs {
    pub g: Vec<f64>,
}

impl DirectArrivalCoeffs {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("direct-arrival coefficients must be finite"));
        }
        Ok(Self { g })
    }

    pub fn zeros(len: usize) -> Self {
        Self { g: vec![0.0; len] }
    }
}

/// Synthesize y = A x + D g + e with e ~ N(0, σ² I) drawn from a ChaCha
/// stream seeded by `seed`.
///
/// A is evaluated on `x_true`'s own lattice, which may be finer than
/// `cfg.grid`; only nonzero voxels are visited.
pub fn simulate_measurements(
    cfg: &ScanConfig,
    x_true: &Image,
    g: &DirectArrivalCoeffs,
    seed: u64,
) -> Result<MeasurementSet> {
    let rows = cfg.m * cfg.k();
    check_len("direct-arrival coefficients", cfg.k() * cfg.direct_arrival_copies, g.g.len())?;
    let scan = if x_true.grid == cfg.grid { cfg.clone() } else { cfg.with_grid(x_true.grid)? };

    let hot: Vec<usize> = (0..x_true.values.len()).filter(|&j| x_true.values[j] != 0.0).collect();
    let columns = hot
        .par_iter()
        .map(|&j| voxel_column(&scan, &x_true.grid, j))
        .collect::<Result<Vec<_>>>()?;

    let mut y = vec![0.0; rows];
    for (&j, col) in hot.iter().zip(&columns) {
        let xj = x_true.values[j];
        for &(r, v) in col {
            y[r as usize] += xj * v;
        }
    }

    let d = build_direct_arrival_basis(cfg)?;
    for (c, &gc) in g.g.iter().enumerate() {
        if gc != 0.0 {
            d.axpy_column(c, gc, &mut y);
        }
    }

    if cfg.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::config(e.to_string()))?;
        for v in y.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    MeasurementSet::new(y, cfg.m, cfg.k(), cfg.pulse.sample_rate())
}
