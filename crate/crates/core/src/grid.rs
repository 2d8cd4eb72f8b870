//! Image lattice and image values.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Square-pixel lattice below the transducer face.
///
/// Rows run along depth, columns along the lateral axis. Lateral pixel
/// centres are symmetric about x = 0; the first row's centre sits at
/// `origin_depth`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRaw", into = "GridRaw")]
pub struct ImageGrid {
    nx: usize,
    nz: usize,
    pitch: f64,
    origin_depth: f64,
}

#[derive(Serialize, Deserialize)]
struct GridRaw {
    nx: usize,
    nz: usize,
    pitch: f64,
    origin_depth: f64,
}

impl TryFrom<GridRaw> for ImageGrid {
    type Error = Error;
    fn try_from(r: GridRaw) -> Result<Self> {
        ImageGrid::new(r.nx, r.nz, r.pitch, r.origin_depth)
    }
}

impl From<ImageGrid> for GridRaw {
    fn from(g: ImageGrid) -> Self {
        GridRaw { nx: g.nx, nz: g.nz, pitch: g.pitch, origin_depth: g.origin_depth }
    }
}

impl ImageGrid {
    pub fn new(nx: usize, nz: usize, pitch: f64, origin_depth: f64) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::config(format!("grid must be non-empty, got {nx}x{nz}")));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::config(format!("pitch must be positive, got {pitch}")));
        }
        if !(origin_depth >= 0.0 && origin_depth.is_finite()) {
            return Err(Error::config(format!("origin depth must be non-negative, got {origin_depth}")));
        }
        Ok(Self { nx, nz, pitch, origin_depth })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn origin_depth(&self) -> f64 {
        self.origin_depth
    }

    /// Number of voxels N.
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// Inverse of [`ImageGrid::index`]: `(ix, iz)`.
    #[inline]
    pub fn coords(&self, j: usize) -> (usize, usize) {
        (j % self.nx, j / self.nx)
    }

    pub fn lateral(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx as f64 - 1.0) / 2.0) * self.pitch
    }

    pub fn depth(&self, iz: usize) -> f64 {
        self.origin_depth + iz as f64 * self.pitch
    }

    /// Centre of voxel `j` as `(lateral, depth)` in metres.
    pub fn center(&self, j: usize) -> [f64; 2] {
        let (ix, iz) = self.coords(j);
        [self.lateral(ix), self.depth(iz)]
    }

    /// Depth of the deepest row centre.
    pub fn max_depth(&self) -> f64 {
        self.depth(self.nz - 1)
    }

    /// Nearest row index for a physical depth, if it falls within half a
    /// pixel of the lattice.
    pub fn row_of_depth(&self, depth: f64) -> Option<usize> {
        let r = ((depth - self.origin_depth) / self.pitch).round();
        (r >= 0.0 && (r as usize) < self.nz).then_some(r as usize)
    }

    /// Nearest column index for a lateral position.
    pub fn column_of_lateral(&self, x: f64) -> Option<usize> {
        let c = (x / self.pitch + (self.nx as f64 - 1.0) / 2.0).round();
        (c >= 0.0 && (c as usize) < self.nx).then_some(c as usize)
    }

    /// Lattice refined by an integer `factor` such that every original
    /// pixel centre is also a centre of the refined lattice.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::config("refinement factor must be at least 1"));
        }
        ImageGrid::new(
            factor * (self.nx - 1) + 1,
            factor * (self.nz - 1) + 1,
            self.pitch / factor as f64,
            self.origin_depth,
        )
    }
}

/// Reflectivity image: the vector x of the measurement model, stored
/// depth-major (`values[iz * nx + ix]`).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub grid: ImageGrid,
    pub values: Vec<f64>,
}

impl Image {
    pub fn new(grid: ImageGrid, values: Vec<f64>) -> Result<Self> {
        check_len("image values", grid.len(), values.len())?;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("image value {j} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: ImageGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: ImageGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    #[inline]
    pub fn get(&self, ix: usize, iz: usize) -> f64 {
        self.values[self.grid.index(ix, iz)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iz: usize, v: f64) {
        let j = self.grid.index(ix, iz);
        self.values[j] = v;
    }

    /// Depth profile of column `ix`.
    pub fn column(&self, ix: usize) -> Vec<f64> {
        (0..self.grid.nz).map(|iz| self.get(ix, iz)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Image with the same grid and new values (length checked).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Image::new(self.grid, values)
    }

    /// Columns `range` of this image, keeping depth rows. The lateral
    /// origin of the sub-grid is re-centred.
    pub fn crop_columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > self.grid.nx {
            return Err(Error::config(format!(
                "column range {range:?} outside 0..{}",
                self.grid.nx
            )));
        }
        let g = ImageGrid::new(range.len(), self.grid.nz, self.grid.pitch, self.grid.origin_depth)?;
        let mut values = Vec::with_capacity(g.len());
        for iz in 0..self.grid.nz {
            for ix in range.clone() {
                values.push(self.get(ix, iz));
            }
        }
        Ok(Image { grid: g, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(ImageGrid::new(0, 4, 1e-3, 0.0).is_err());
        assert!(ImageGrid::new(4, 0, 1e-3, 0.0).is_err());
        assert!(ImageGrid::new(4, 4, 0.0, 0.0).is_err());
        assert!(ImageGrid::new(4, 4, 1e-3, -1.0).is_err());
    }

    #[test]
    fn layout_is_depth_major() {
        let g = ImageGrid::new(3, 2, 1.0, 10.0).unwrap();
        assert_eq!(g.index(2, 1), 5);
        assert_eq!(g.coords(5), (2, 1));
        assert_eq!(g.center(4), [0.0, 11.0]);
        assert_eq!(g.lateral(0), -1.0);
    }

    #[test]
    fn refinement_keeps_coarse_centres() {
        let g = ImageGrid::new(5, 7, 2e-3, 0.07).unwrap();
        let r = g.refined(2).unwrap();
        assert_eq!((r.nx(), r.nz()), (9, 13));
        for iz in 0..g.nz() {
            for ix in 0..g.nx() {
                let a = g.center(g.index(ix, iz));
                let b = r.center(r.index(2 * ix, 2 * iz));
                assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn image_rejects_bad_values() {
        let g = ImageGrid::new(2, 2, 1.0, 0.0).unwrap();
        assert!(Image::new(g, vec![0.0; 3]).is_err());
        assert!(Image::new(g, vec![0.0, 1.0, f64::INFINITY, 0.0]).is_err());
    }
}
