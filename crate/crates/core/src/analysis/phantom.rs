use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, ImageGrid};
use crate::medium::{reflection_coefficient, Layer, LayeredMedium};

const WATER: Layer = Layer { thickness: 0.055, speed: 1500.0, density: 997.0 };
const PLEXIGLAS: Layer = Layer { thickness: 0.005, speed: 2820.0, density: 1180.0 };
const CONCRETE_SPEED: f64 = 2620.0;
const CONCRETE_DENSITY: f64 = 1970.0;
const AIR: Layer = Layer { thickness: 1.0, speed: 343.0, density: 1.2 };

/// Specimen geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomConfig {
    pub back_wall_depth: f64,
    pub notch_depth: f64,
    /// Lateral extent of the notch as a fraction of the field width.
    pub notch_fraction: f64,
    /// Lateral centre of the notch.
    pub notch_center: f64,
    /// Pitch at which reflector amplitudes are unit-normalized; rows on
    /// finer grids are scaled by `pitch / reference_pitch` so the
    /// integrated reflectivity is unchanged.
    pub reference_pitch: Option<f64>,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self { back_wall_depth: 0.1885, notch_depth: 0.2385, notch_fraction: 1.0 / 3.0, notch_center: 0.0, reference_pitch: None }
    }
}

/// Reflectivity ground truth of the specimen on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub x_true: Image,
    pub medium: LayeredMedium,
    pub notch: bool,
    pub back_wall_depth: f64,
    pub notch_depth: f64,
    /// Columns covered by the notch.
    pub notch_columns: Range<usize>,
}

impl Phantom {
    /// Depth of the reflecting wall under column `ix`.
    pub fn wall_depth(&self, ix: usize) -> f64 {
        if self.notch && self.notch_columns.contains(&ix) {
            self.notch_depth
        } else {
            self.back_wall_depth
        }
    }

    /// Row of the reflecting wall under column `ix`.
    pub fn wall_row(&self, ix: usize) -> usize {
        let g = &self.x_true.grid;
        ((self.wall_depth(ix) - g.origin_depth()) / g.pitch()).round() as usize
    }

    pub fn wall_depths(&self) -> Vec<f64> {
        (0..self.x_true.grid.nx()).map(|ix| self.wall_depth(ix)).collect()
    }
}

/// Water / Plexiglas / concrete stack with the concrete reaching `bottom`.
pub fn specimen_medium(bottom: f64) -> Result<LayeredMedium> {
    let top = WATER.thickness + PLEXIGLAS.thickness;
    if !(bottom > top) {
        return Err(Error::config(format!("medium must extend below {top} m, got {bottom}")));
    }
    LayeredMedium::new(vec![WATER, PLEXIGLAS, Layer::new(bottom - top, CONCRETE_SPEED, CONCRETE_DENSITY)])
}

/// [`make_phantom_with`] using the default specimen geometry.
pub fn make_phantom(notch: bool, grid: ImageGrid) -> Result<Phantom> {
    make_phantom_with(notch, grid, &PhantomConfig::default())
}

/// Back-wall (or notch) reflector of the specimen sampled on `grid`.
///
/// The reflector is one row of concrete-to-air reflection coefficients;
/// with `notch` the central columns reflect at the notch depth instead.
pub fn make_phantom_with(notch: bool, grid: ImageGrid, cfg: &PhantomConfig) -> Result<Phantom> {
    if !(cfg.back_wall_depth < cfg.notch_depth) {
        return Err(Error::config("back wall must lie above the notch"));
    }
    if !(cfg.notch_fraction > 0.0 && cfg.notch_fraction <= 1.0) {
        return Err(Error::config(format!("notch fraction must lie in (0, 1], got {}", cfg.notch_fraction)));
    }
    let deepest = if notch { cfg.notch_depth } else { cfg.back_wall_depth };
    let half_pixel = 0.5 * grid.pitch();
    if cfg.back_wall_depth < grid.origin_depth() - half_pixel || deepest > grid.max_depth() + half_pixel {
        return Err(Error::config(format!(
            "grid depth span [{:.4}, {:.4}] m does not contain the reflector at {:.4} m",
            grid.origin_depth(),
            grid.max_depth(),
            deepest
        )));
    }
    let scale = match cfg.reference_pitch {
        Some(p) if p > 0.0 => grid.pitch() / p,
        Some(p) => return Err(Error::config(format!("reference pitch must be positive, got {p}"))),
        None => 1.0,
    };
    let medium = specimen_medium(cfg.notch_depth.max(grid.max_depth()) + 0.01)?;
    let concrete = medium.layers()[2];
    let amplitude = scale * reflection_coefficient(&concrete, &AIR);

    let half_width = 0.5 * cfg.notch_fraction * grid.nx() as f64 * grid.pitch();
    let cols: Vec<usize> =
        (0..grid.nx()).filter(|&ix| (grid.lateral(ix) - cfg.notch_center).abs() <= half_width).collect();
    let notch_columns = match (cols.first(), cols.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    };

    let mut phantom = Phantom {
        x_true: Image::zeros(grid),
        medium,
        notch,
        back_wall_depth: cfg.back_wall_depth,
        notch_depth: cfg.notch_depth,
        notch_columns,
    };
    for ix in 0..grid.nx() {
        let row = phantom.wall_row(ix);
        phantom.x_true.set(ix, row, amplitude);
    }
    Ok(phantom)
}

/// Columns whose voxel at `depth` receives at least `min_weight` of the
/// beam's on-axis amplitude.
pub fn insonified_columns(scan: &crate::scan::ScanConfig, depth: f64, min_weight: f64) -> Range<usize> {
    let g = &scan.grid;
    let lit: Vec<usize> = (0..g.nx())
        .filter(|&ix| crate::forward::beam_weight([g.lateral(ix), depth], &scan.geometry) >= min_weight)
        .collect();
    match (lit.first(), lit.last()) {
        (Some(&a), Some(&b)) => a..b + 1,
        _ => 0..0,
    }
}
