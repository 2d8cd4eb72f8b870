use std::fmt::Write as _;
use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::phantom::Phantom;
use crate::error::{check_len, Error, Result};
use crate::grid::Image;

/// Half-width of the ringing band relative to its centre frequency.
const BAND: f64 = 0.15;

/// Fraction of the depth-axis AC power, averaged over columns, lying
/// within ±15% of the ringing frequency 2/γ cycles per pixel.
pub fn ringing_energy(img: &Image, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    let nz = img.grid.nz();
    let fft = FftPlanner::new().plan_fft_forward(nz);
    let mut power = vec![0.0; nz];
    let mut buf = vec![Complex::new(0.0, 0.0); nz];
    for ix in 0..img.grid.nx() {
        for (iz, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(img.get(ix, iz), 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    let f0 = 2.0 / gamma;
    let (mut band, mut total) = (0.0, 0.0);
    for (k, p) in power.iter().enumerate().skip(1) {
        let f = k.min(nz - k) as f64 / nz as f64;
        total += p;
        if (f - f0).abs() <= BAND * f0 {
            band += p;
        }
    }
    Ok(if total > 0.0 { band / total } else { 0.0 })
}

/// Root-mean-square difference of two images on the same grid.
pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::data("images do not share a grid"));
    }
    let ss: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.values.len() as f64).sqrt())
}

/// Per-column wall depth estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct WallEstimate {
    /// First column of the evaluated range.
    pub first_column: usize,
    /// Depth of the strongest return per column; `None` for all-zero columns.
    pub depths: Vec<Option<f64>>,
}

impl WallEstimate {
    pub fn missing(&self) -> usize {
        self.depths.iter().filter(|d| d.is_none()).count()
    }
}

/// Depth of max |value| in each column of `columns`.
pub fn wall_depth_estimate(img: &Image, columns: Range<usize>) -> Result<WallEstimate> {
    if columns.is_empty() || columns.end > img.grid.nx() {
        return Err(Error::config(format!(
            "column range {columns:?} is empty or exceeds {} columns",
            img.grid.nx()
        )));
    }
    let depths = columns
        .clone()
        .map(|ix| {
            let mut best: Option<(usize, f64)> = None;
            for iz in 0..img.grid.nz() {
                let a = img.get(ix, iz).abs();
                if a > 0.0 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((iz, a));
                }
            }
            best.map(|(iz, _)| img.grid.depth(iz))
        })
        .collect();
    Ok(WallEstimate { first_column: columns.start, depths })
}

/// Median absolute depth error against `truth` (one depth per image
/// column), in metres; missing columns are skipped.
pub fn median_wall_error(est: &WallEstimate, truth: &[f64]) -> Result<f64> {
    let mut errs: Vec<f64> = est
        .depths
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|d| (d - truth[est.first_column + i]).abs()))
        .collect();
    if errs.is_empty() {
        return Err(Error::data("no column has a wall estimate"));
    }
    errs.sort_by(f64::total_cmp);
    let n = errs.len();
    Ok(if n % 2 == 1 { errs[n / 2] } else { 0.5 * (errs[n / 2 - 1] + errs[n / 2]) })
}

/// Mean over `columns` of the largest |value| within `window` rows of
/// the true wall row.
pub fn wall_peak_amplitude(img: &Image, phantom: &Phantom, columns: Range<usize>, window: usize) -> Result<f64> {
    if img.grid != phantom.x_true.grid {
        return Err(Error::data("image and phantom grids differ"));
    }
    if columns.is_empty() || columns.end > img.grid.nx() {
        return Err(Error::config(format!("column range {columns:?} is invalid")));
    }
    let nz = img.grid.nz();
    let mut sum = 0.0;
    for ix in columns.clone() {
        let row = phantom.wall_row(ix);
        let lo = row.saturating_sub(window);
        let hi = (row + window).min(nz - 1);
        sum += (lo..=hi).map(|iz| img.get(ix, iz).abs()).fold(0.0, f64::max);
    }
    Ok(sum / columns.len() as f64)
}

/// Quality figures of one reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub rmse: f64,
    pub wall_depth_error_px: f64,
    pub ringing_energy_ratio: f64,
    pub wall_peak: f64,
}

impl MetricsReport {
    /// Evaluate `img` against `phantom`: wall figures over `columns`,
    /// RMSE and ringing over the whole image.
    pub fn evaluate(label: &str, img: &Image, phantom: &Phantom, columns: Range<usize>, gamma: f64) -> Result<Self> {
        check_len("image", phantom.x_true.values.len(), img.values.len())?;
        let est = wall_depth_estimate(img, columns.clone())?;
        let err = match median_wall_error(&est, &phantom.wall_depths()) {
            Ok(e) => e / img.grid.pitch(),
            Err(_) => f64::INFINITY,
        };
        Ok(Self {
            label: label.to_string(),
            rmse: rmse(img, &phantom.x_true)?,
            wall_depth_error_px: err,
            ringing_energy_ratio: ringing_energy(img, gamma)?,
            wall_peak: wall_peak_amplitude(img, phantom, columns, 2)?,
        })
    }

    pub const CSV_HEADER: &'static str = "label,rmse,wall_depth_error_px,ringing_energy_ratio,wall_peak";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{},{},{:e}",
            self.label, self.rmse, self.wall_depth_error_px, self.ringing_energy_ratio, self.wall_peak
        )
    }

    pub fn to_csv(reports: &[Self]) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in reports {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }

    /// Fixed-width text table.
    pub fn to_table(reports: &[Self]) -> String {
        let w = reports.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
        let mut s = format!("{:<w$}  {:>11}  {:>10}  {:>9}  {:>11}\n", "method", "rmse", "wall err", "ringing", "wall peak");
        for r in reports {
            let _ = writeln!(
                s,
                "{:<w$}  {:>11.4e}  {:>8.2}px  {:>9.4}  {:>11.4e}",
                r.label, r.rmse, r.wall_depth_error_px, r.ringing_energy_ratio, r.wall_peak
            );
        }
        s
    }
}
