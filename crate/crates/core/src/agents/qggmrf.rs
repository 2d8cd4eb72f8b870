//! Spatially varying q-generalized Gaussian MRF prior and its proximal
//! map, solved by ICD with the symmetric-bound quadratic surrogate.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{Image, ImageGrid};
use crate::medium::LayeredMedium;

/// Neighbour offsets `(dx, dz, diagonal)` of the 8-neighbourhood.
const NEIGHBOURS: [(isize, isize, bool); 8] = [
    (-1, 0, false),
    (1, 0, false),
    (0, -1, false),
    (0, 1, false),
    (-1, -1, true),
    (1, -1, true),
    (-1, 1, true),
    (1, 1, true),
];

/// Pair weights of the 8-neighbourhood. Four axial plus four diagonal
/// weights sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborWeights {
    pub axial: f64,
    pub diagonal: f64,
}

impl Default for NeighborWeights {
    /// Inverse-distance weighting, normalized.
    fn default() -> Self {
        let total = 4.0 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
        Self { axial: 1.0 / total, diagonal: std::f64::consts::FRAC_1_SQRT_2 / total }
    }
}

/// Shape parameters of the QGGMRF potential, independent of the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QggmrfShape {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub weights: NeighborWeights,
}

impl Default for QggmrfShape {
    fn default() -> Self {
        Self { p: 2.0, q: 1.2, t: 0.1, weights: NeighborWeights::default() }
    }
}

impl QggmrfShape {
    pub fn validate(&self) -> Result<()> {
        let QggmrfShape { p, q, t, weights } = *self;
        let ordered = (1.0..=2.0).contains(&q) && q < p && p <= 2.0;
        let quadratic = p == 2.0 && q == 2.0;
        if !(ordered || quadratic) {
            return Err(Error::config(format!(
                "QGGMRF needs 1 <= q < p <= 2 or p = q = 2, got p = {p}, q = {q}"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::config(format!("QGGMRF T must be positive, got {t}")));
        }
        if weights.axial < 0.0 || weights.diagonal < 0.0 {
            return Err(Error::config("neighbour weights must be non-negative"));
        }
        let sum = 4.0 * (weights.axial + weights.diagonal);
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("neighbour weights must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

/// QGGMRF parameters bound to a lattice through a per-voxel σ_x map.
#[derive(Clone, Debug, PartialEq)]
pub struct QggmrfParams {
    pub shape: QggmrfShape,
    sigma_x: Vec<f64>,
}

impl QggmrfParams {
    pub fn new(shape: QggmrfShape, sigma_x: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if sigma_x.is_empty() || sigma_x.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("every sigma_x entry must be positive and finite"));
        }
        Ok(Self { shape, sigma_x })
    }

    pub fn uniform(shape: QggmrfShape, grid: &ImageGrid, sigma_x: f64) -> Result<Self> {
        Self::new(shape, vec![sigma_x; grid.len()])
    }

    /// One σ_x per material layer, mapped onto voxels by their depth.
    pub fn per_layer(
        shape: QggmrfShape,
        grid: &ImageGrid,
        medium: &LayeredMedium,
        layer_sigma: &[f64],
    ) -> Result<Self> {
        check_len("per-layer sigma_x", medium.layers().len(), layer_sigma.len())?;
        let sigma = (0..grid.len())
            .map(|j| {
                let depth = grid.center(j)[1];
                medium
                    .layer_index_at(depth)
                    .map(|i| layer_sigma[i])
                    .ok_or_else(|| Error::config(format!("voxel depth {depth} outside the medium")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape, sigma)
    }

    pub fn sigma_x(&self) -> &[f64] {
        &self.sigma_x
    }

    #[inline]
    fn pair_sigma(&self, s: usize, r: usize) -> f64 {
        0.5 * (self.sigma_x[s] + self.sigma_x[r])
    }
}

/// QGGMRF potential ρ(Δ) for scale σ.
pub fn potential(delta: f64, sigma: f64, shape: &QggmrfShape) -> f64 {
    let a = delta.abs();
    if a == 0.0 {
        return 0.0;
    }
    let QggmrfShape { p, q, t, .. } = *shape;
    let s = (a / (t * sigma)).powf(q - p);
    a.powf(p) / (p * sigma.powf(p)) * s / (1.0 + s)
}

/// Derivative ρ'(Δ).
pub fn potential_derivative(delta: f64, sigma: f64, shape: &QggmrfShape) -> f64 {
    let a = delta.abs();
    if a == 0.0 {
        return 0.0;
    }
    let QggmrfShape { p, q, t, .. } = *shape;
    let s = (a / (t * sigma)).powf(q - p);
    let mag = a.powf(p - 1.0) / sigma.powf(p) * s * (q / p + s) / ((1.0 + s) * (1.0 + s));
    mag.copysign(delta)
}

/// Curvature ρ'(Δ)/(2Δ) of the symmetric-bound surrogate at Δ.
fn surrogate_coefficient(delta: f64, sigma: f64, shape: &QggmrfShape) -> f64 {
    let QggmrfShape { p, q, t, .. } = *shape;
    // Δ = 0 limit; for p < 2 the limit diverges, so clamp |Δ|
    let a = delta.abs().max(1e-9 * t * sigma);
    if shape.p == 2.0 && delta == 0.0 {
        return 1.0 / (2.0 * sigma * sigma) * if q == p { 0.5 } else { 1.0 };
    }
    let s = (a / (t * sigma)).powf(q - p);
    a.powf(p - 2.0) / (2.0 * sigma.powf(p)) * s * (q / p + s) / ((1.0 + s) * (1.0 + s))
}

fn neighbours(grid: &ImageGrid, j: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
    let (ix, iz) = grid.coords(j);
    NEIGHBOURS.iter().filter_map(move |&(dx, dz, diag)| {
        let x = ix as isize + dx;
        let z = iz as isize + dz;
        (x >= 0 && z >= 0 && (x as usize) < grid.nx() && (z as usize) < grid.nz())
            .then(|| (grid.index(x as usize, z as usize), diag))
    })
}

/// Prior energy Σ over unordered neighbour pairs of b·ρ(z_s − z_r).
pub fn prior_energy(z: &Image, params: &QggmrfParams) -> Result<f64> {
    check_len("sigma_x map", z.grid.len(), params.sigma_x.len())?;
    let w = params.shape.weights;
    let mut e = 0.0;
    for s in 0..z.values.len() {
        for (r, diag) in neighbours(&z.grid, s) {
            if r > s {
                let b = if diag { w.diagonal } else { w.axial };
                e += b * potential(z.values[s] - z.values[r], params.pair_sigma(s, r), &params.shape);
            }
        }
    }
    Ok(e)
}

/// Proximal objective: prior energy plus ‖z − v‖²/(2β).
pub fn qggmrf_objective(z: &Image, v: &Image, params: &QggmrfParams, beta: f64) -> Result<f64> {
    check_len("image", v.values.len(), z.values.len())?;
    let tether: f64 = z.values.iter().zip(&v.values).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(prior_energy(z, params)? + tether / (2.0 * beta))
}

/// Approximate `argmin_z prior(z) + ‖z − v‖²/(2β)` with `sweeps` ICD
/// passes started from `v`.
pub fn prox_qggmrf(v: &Image, params: &QggmrfParams, beta: f64, sweeps: usize) -> Result<Image> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("beta must be positive, got {beta}")));
    }
    if sweeps == 0 {
        return Err(Error::config("at least one ICD sweep is required"));
    }
    check_len("sigma_x map", v.grid.len(), params.sigma_x.len())?;
    let grid = v.grid;
    let w = params.shape.weights;
    let inv_beta = 1.0 / beta;
    let mut z = v.values.clone();
    for _ in 0..sweeps {
        for s in 0..z.len() {
            let zs = z[s];
            let mut num = v.values[s] * inv_beta;
            let mut den = inv_beta;
            for (r, diag) in neighbours(&grid, s) {
                let b = if diag { w.diagonal } else { w.axial };
                let c = 2.0 * b * surrogate_coefficient(zs - z[r], params.pair_sigma(s, r), &params.shape);
                num += c * z[r];
                den += c;
            }
            z[s] = num / den;
        }
    }
    Image::new(grid, z).map_err(|_| Error::Numerical {
        iteration: sweeps,
        message: "QGGMRF proximal map produced non-finite values".into(),
    })
}
