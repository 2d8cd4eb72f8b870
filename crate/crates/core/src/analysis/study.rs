use std::ops::Range;

use super::metrics::{ringing_energy, wall_peak_amplitude};
use super::phantom::Phantom;
use crate::agents::{DenoiserSettings, NoisePsd, RingingDenoiser};
use crate::error::{Error, Result};
use crate::grid::Image;

/// Interval, in applications, between recorded snapshots.
pub const SNAPSHOT_INTERVAL: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct StudySnapshot {
    /// Number of denoiser applications behind this image (0 is the input).
    pub applications: usize,
    pub image: Image,
    pub ringing_energy: f64,
    pub wall_peak: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    /// The input followed by every fifth output.
    pub snapshots: Vec<StudySnapshot>,
    /// Output of the last application.
    pub final_image: Image,
}

/// Apply the ringing denoiser `n_applications` times in succession,
/// recording the input and every fifth output together with its ringing
/// energy and back-wall peak over `columns`.
pub fn bm3d_postprocess_study(
    img: &Image,
    psd: &NoisePsd,
    settings: &DenoiserSettings,
    n_applications: usize,
    gamma: f64,
    phantom: &Phantom,
    columns: Range<usize>,
) -> Result<StudyResult> {
    if n_applications == 0 {
        return Err(Error::config("the study needs at least one application"));
    }
    let denoiser = RingingDenoiser::new(psd, *settings)?;
    let snapshot = |applications: usize, image: &Image| -> Result<StudySnapshot> {
        Ok(StudySnapshot {
            applications,
            image: image.clone(),
            ringing_energy: ringing_energy(image, gamma)?,
            wall_peak: wall_peak_amplitude(image, phantom, columns.clone(), 2)?,
        })
    };
    let mut snapshots = vec![snapshot(0, img)?];
    let mut current = img.clone();
    for i in 1..=n_applications {
        current = denoiser.denoise(&current)?;
        if i % SNAPSHOT_INTERVAL == 0 {
            snapshots.push(snapshot(i, &current)?);
        }
    }
    Ok(StudyResult { snapshots, final_image: current })
}
