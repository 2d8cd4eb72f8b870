//! Proximal map of the data-fit term, with the direct-arrival
//! coefficients profiled out.

use crate::error::{check_len, Error, Result};
use crate::forward::SystemModel;
use crate::grid::Image;
use crate::scan::MeasurementSet;

/// Dense lower-triangular Cholesky factor of a small SPD matrix.
#[derive(Clone, Debug)]
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(n: usize, a: &[f64]) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Solves `argmin_z min_g ‖y − Az − Dg‖²/(2σ²) + ‖z − v‖²/(2β)` by
/// alternating an exact least-squares update of g with ICD sweeps over
/// the voxels.
#[derive(Clone, Debug)]
pub struct DataFitProx<'a> {
    model: &'a SystemModel,
    y: &'a [f64],
    beta: f64,
    sweeps: usize,
    col_norm_sq: Vec<f64>,
    gram: Vec<f64>,
    gram_factor: Option<Cholesky>,
}

/// Output of one proximal evaluation with its diagnostics.
#[derive(Clone, Debug)]
pub struct DataFitTrace {
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    /// Objective after each sweep (g update + voxel pass).
    pub objective: Vec<f64>,
}

impl<'a> DataFitProx<'a> {
    pub fn new(model: &'a SystemModel, y: &'a MeasurementSet, beta: f64, sweeps: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        if sweeps == 0 {
            return Err(Error::config("at least one ICD sweep is required"));
        }
        check_len("measurements", model.rows(), y.y.len())?;
        if y.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("measurements contain non-finite values"));
        }
        let col_norm_sq = (0..model.n()).map(|j| model.a.column_norm_sq(j)).collect();
        let p = model.d.ncols();
        let mut gram = vec![0.0; p * p];
        for i in 0..p {
            let ci = model.d.dense_column(i);
            for j in 0..=i {
                let v = model.d.column_dot(j, &ci);
                gram[i * p + j] = v;
                gram[j * p + i] = v;
            }
        }
        let gram_factor = if p == 0 {
            None
        } else {
            Some(
                Cholesky::factor(p, &gram)
                    .ok_or_else(|| Error::config("direct-arrival basis is rank deficient"))?,
            )
        };
        Ok(Self { model, y: &y.y, beta, sweeps, col_norm_sq, gram, gram_factor })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Objective of the proximal problem at `(z, g)` given its residual.
    fn objective_from_residual(&self, residual: &[f64], z: &[f64], v: &[f64]) -> f64 {
        let s2 = self.model.noise_std * self.model.noise_std;
        let data: f64 = residual.iter().map(|e| e * e).sum::<f64>() / (2.0 * s2);
        let tether: f64 = z.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * self.beta);
        data + tether
    }

    /// Objective of the proximal problem at an arbitrary `(z, g)`.
    pub fn objective(&self, z: &[f64], g: &[f64], v: &[f64]) -> Result<f64> {
        let az = self.model.a.mul_vec(z)?;
        let dg = self.model.d.mul_vec(g)?;
        let r: Vec<f64> = (0..self.y.len()).map(|i| self.y[i] - az[i] - dg[i]).collect();
        Ok(self.objective_from_residual(&r, z, v))
    }

    /// Replace g by the least-squares fit to the current residual.
    fn update_g(&self, g: &mut [f64], residual: &mut [f64]) {
        let Some(chol) = &self.gram_factor else { return };
        let d = &self.model.d;
        let p = g.len();
        // rhs = Dᵀ(y − Az) = Dᵀe + (DᵀD) g
        let mut rhs: Vec<f64> = (0..p)
            .map(|c| d.column_dot(c, residual) + (0..p).map(|c2| self.gram[c * p + c2] * g[c2]).sum::<f64>())
            .collect();
        chol.solve(&mut rhs);
        for c in 0..p {
            let delta = rhs[c] - g[c];
            if delta != 0.0 {
                d.axpy_column(c, -delta, residual);
            }
            g[c] = rhs[c];
        }
    }

    fn icd_sweep(&self, z: &mut [f64], v: &[f64], residual: &mut [f64]) {
        let s2 = self.model.noise_std * self.model.noise_std;
        let inv_beta = 1.0 / self.beta;
        for j in 0..z.len() {
            let nrm = self.col_norm_sq[j];
            if nrm == 0.0 {
                z[j] = v[j];
                continue;
            }
            let theta1 = -self.model.a.column_dot(j, residual) / s2;
            let theta2 = nrm / s2;
            let new = (theta2 * z[j] - theta1 + v[j] * inv_beta) / (theta2 + inv_beta);
            let delta = new - z[j];
            if delta != 0.0 {
                self.model.a.axpy_column(j, -delta, residual);
                z[j] = new;
            }
        }
    }

    /// Evaluate the proximal map from `v`, recording the objective per sweep.
    pub fn apply_traced(&self, v: &[f64]) -> Result<DataFitTrace> {
        self.apply_from(v, v)
    }

    /// Proximal map at `v` with the ICD iterate initialized at `start`.
    pub fn apply_from(&self, v: &[f64], start: &[f64]) -> Result<DataFitTrace> {
        check_len("image", self.model.n(), v.len())?;
        check_len("ICD start", self.model.n(), start.len())?;
        if v.iter().chain(start).any(|x| !x.is_finite()) {
            return Err(Error::data("data-fit input contains non-finite values"));
        }
        let mut z = start.to_vec();
        let mut g = vec![0.0; self.model.d.ncols()];
        let az = self.model.a.mul_vec(&z)?;
        let mut residual: Vec<f64> = self.y.iter().zip(&az).map(|(y, a)| y - a).collect();
        let mut objective = Vec::with_capacity(self.sweeps);
        for _ in 0..self.sweeps {
            self.update_g(&mut g, &mut residual);
            self.icd_sweep(&mut z, v, &mut residual);
            objective.push(self.objective_from_residual(&residual, &z, v));
        }
        Ok(DataFitTrace { z, g, objective })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_traced(v)?.z)
    }
}

/// One-shot proximal data-fit map on an image.
pub fn prox_data_fit(
    v: &Image,
    model: &SystemModel,
    y: &MeasurementSet,
    beta: f64,
    sweeps: usize,
) -> Result<Image> {
    let prox = DataFitProx::new(model, y, beta, sweeps)?;
    Image::new(v.grid, prox.apply(&v.values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::SparseColumns;

    #[test]
    fn cholesky_solves() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let c = Cholesky::factor(2, &a).unwrap();
        let mut b = [2.0, 1.0];
        c.solve(&mut b);
        assert!((4.0 * b[0] + 2.0 * b[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * b[0] + 3.0 * b[1] - 1.0).abs() < 1e-14);
        assert!(Cholesky::factor(2, &[1.0, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn scalar_closed_form() {
        let a = SparseColumns::from_dense_columns(1, &[vec![1.0]]);
        let d = SparseColumns::empty(1);
        let sigma = 0.5;
        let model = SystemModel::new(a, d, sigma, 1, 1).unwrap();
        let y = MeasurementSet::new(vec![3.0], 1, 1, 1.0).unwrap();
        let prox = DataFitProx::new(&model, &y, sigma * sigma, 1).unwrap();
        let z = prox.apply(&[1.0]).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = SparseColumns::from_dense_columns(1, &[vec![1.0]]);
        let model = SystemModel::new(a, SparseColumns::empty(1), 1.0, 1, 1).unwrap();
        let y = MeasurementSet::new(vec![3.0], 1, 1, 1.0).unwrap();
        assert!(DataFitProx::new(&model, &y, 0.0, 1).is_err());
        assert!(DataFitProx::new(&model, &y, 1.0, 0).is_err());
        let prox = DataFitProx::new(&model, &y, 1.0, 1).unwrap();
        assert!(prox.apply(&[1.0, 2.0]).is_err());
        assert!(prox.apply(&[f64::NAN]).is_err());
    }
}
