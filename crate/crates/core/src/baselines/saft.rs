use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::forward::travel_time;
use crate::grid::Image;
use crate::scan::{MeasurementSet, ScanConfig};

/// Delay-and-sum settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaftConfig {
    /// Rectify and smooth along depth over one pulse length.
    pub envelope_detect: bool,
    /// Largest accepted angle, in degrees from vertical, of the
    /// voxel-to-receiver ray.
    pub aperture_limit: f64,
}

impl Default for SaftConfig {
    fn default() -> Self {
        Self { envelope_detect: false, aperture_limit: 30.0 }
    }
}

impl SaftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_limit > 0.0 && self.aperture_limit <= 90.0) {
            return Err(Error::config(format!(
                "aperture limit must lie in (0, 90] degrees, got {}",
                self.aperture_limit
            )));
        }
        Ok(())
    }
}

/// Linear interpolation of `trace` at fractional sample `pos`; zero
/// outside the record.
fn sample_at(trace: &[f64], pos: f64) -> f64 {
    if !(pos >= 0.0) {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match (trace.get(i), trace.get(i + 1)) {
        (Some(a), Some(b)) => a + frac * (b - a),
        (Some(a), None) if frac == 0.0 => *a,
        _ => 0.0,
    }
}

/// Delay-and-sum image on `cfg.grid`.
///
/// Each voxel sums every receiver trace at the two-way travel time plus
/// the pulse's own peak delay, skipping receivers outside the aperture.
pub fn saft_reconstruct(y: &MeasurementSet, cfg: &ScanConfig, s: &SaftConfig) -> Result<Image> {
    s.validate()?;
    check_len("measurement samples", cfg.m, y.m)?;
    check_len("measurement receivers", cfg.k(), y.k)?;
    let grid = cfg.grid;
    let fs = y.sample_rate;
    let peak_delay = cfg.pulse.delay_index() as f64 / cfg.pulse.sample_rate();
    let max_angle = s.aperture_limit.to_radians();
    let src = cfg.geometry.source_pos();
    let receivers = cfg.geometry.receivers();

    let values = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let v = grid.center(j);
            let down = travel_time(src, v, &cfg.medium)?;
            let mut acc = 0.0;
            for (k, r) in receivers.iter().enumerate() {
                let angle = (r[0] - v[0]).abs().atan2((v[1] - r[1]).abs());
                if angle > max_angle {
                    continue;
                }
                let t = down + travel_time(v, *r, &cfg.medium)? + peak_delay;
                acc += sample_at(y.trace(k), t * fs);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;

    let image = Image::new(grid, values)?;
    if s.envelope_detect {
        let depth_per_pulse = cfg.imaging_speed() * cfg.pulse.envelope_width() / 2.0;
        let width = ((depth_per_pulse / grid.pitch()).round() as usize).max(1) | 1;
        Ok(envelope(&image, width))
    } else {
        Ok(image)
    }
}

/// |x| smoothed by a centred moving average of odd `width` along depth.
fn envelope(img: &Image, width: usize) -> Image {
    let (nx, nz) = (img.grid.nx(), img.grid.nz());
    let half = width / 2;
    let mut out = vec![0.0; nx * nz];
    for ix in 0..nx {
        let col: Vec<f64> = (0..nz).map(|iz| img.get(ix, iz).abs()).collect();
        for iz in 0..nz {
            let lo = iz.saturating_sub(half);
            let hi = (iz + half).min(nz - 1);
            let sum: f64 = col[lo..=hi].iter().sum();
            out[img.grid.index(ix, iz)] = sum / (hi - lo + 1) as f64;
        }
    }
    Image { grid: img.grid, values: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ImageGrid;

    #[test]
    fn interpolation() {
        let t = [0.0, 1.0, 3.0];
        assert_eq!(sample_at(&t, 0.5), 0.5);
        assert_eq!(sample_at(&t, 1.25), 1.5);
        assert_eq!(sample_at(&t, 2.0), 3.0);
        assert_eq!(sample_at(&t, 2.5), 0.0);
        assert_eq!(sample_at(&t, -0.1), 0.0);
    }

    #[test]
    fn envelope_of_constant_magnitude() {
        let g = ImageGrid::new(2, 5, 1.0, 0.0).unwrap();
        let img = Image::new(g, vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0]).unwrap();
        let e = envelope(&img, 3);
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn aperture_validation() {
        assert!(SaftConfig { aperture_limit: 0.0, ..Default::default() }.validate().is_err());
        assert!(SaftConfig { aperture_limit: 91.0, ..Default::default() }.validate().is_err());
        SaftConfig { aperture_limit: 90.0, ..Default::default() }.validate().unwrap();
    }
}
