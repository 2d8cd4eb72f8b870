//! Broadband excitation pulse.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Envelope level, relative to the peak, at which the waveform is truncated.
const TRUNCATION_LEVEL: f64 = 1e-4;

/// Parameters from which a [`Pulse`] is synthesized. This is the form
/// stored in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub center_freq: f64,
    pub fractional_bandwidth: f64,
    pub sample_rate: f64,
}

/// A sampled Gaussian-modulated cosine excitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseSpec", into = "PulseSpec")]
pub struct Pulse {
    center_freq: f64,
    fractional_bandwidth: f64,
    sample_rate: f64,
    samples: Vec<f64>,
    delay_index: usize,
}

impl Pulse {
    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    pub fn fractional_bandwidth(&self) -> f64 {
        self.fractional_bandwidth
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Index of the waveform peak within [`Pulse::samples`].
    pub fn delay_index(&self) -> usize {
        self.delay_index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration of the stored waveform in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Full width of the envelope at half amplitude (−6 dB), in seconds.
    pub fn envelope_width(&self) -> f64 {
        4.0 * std::f64::consts::LN_2 / (std::f64::consts::PI * self.fractional_bandwidth * self.center_freq)
    }

    pub fn spec(&self) -> PulseSpec {
        PulseSpec {
            center_freq: self.center_freq,
            fractional_bandwidth: self.fractional_bandwidth,
            sample_rate: self.sample_rate,
        }
    }
}

impl TryFrom<PulseSpec> for Pulse {
    type Error = Error;

    fn try_from(spec: PulseSpec) -> Result<Self> {
        make_pulse(spec.center_freq, spec.fractional_bandwidth, spec.sample_rate)
    }
}

impl From<Pulse> for PulseSpec {
    fn from(p: Pulse) -> Self {
        p.spec()
    }
}

/// Temporal standard deviation of the Gaussian envelope whose spectrum has
/// a full width at half amplitude (-6 dB) of `bandwidth` Hz.
fn envelope_sigma(bandwidth: f64) -> f64 {
    // |S(f)| ∝ exp(-(2π Δf)² σ² / 2) = 1/2 at Δf = bandwidth / 2
    (2.0 * 2f64.ln()).sqrt() / (PI * bandwidth)
}

/// Synthesize a Gaussian-modulated cosine centred on `center_freq` with a
/// -6 dB spectral width of `fractional_bandwidth × center_freq`.
///
/// The waveform is truncated where its envelope drops below 1e-4 of the
/// peak, and normalized so the largest sample magnitude is exactly 1.
pub fn make_pulse(center_freq: f64, fractional_bandwidth: f64, sample_rate: f64) -> Result<Pulse> {
    if !(center_freq > 0.0 && center_freq.is_finite()) {
        return Err(Error::config(format!("center frequency must be positive, got {center_freq}")));
    }
    if !(fractional_bandwidth > 0.0 && fractional_bandwidth <= 2.0) {
        return Err(Error::config(format!(
            "fractional bandwidth must lie in (0, 2], got {fractional_bandwidth}"
        )));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::config(format!("sample rate must be positive, got {sample_rate}")));
    }
    if sample_rate <= 2.0 * center_freq {
        return Err(Error::config(format!(
            "sample rate {sample_rate} Hz violates Nyquist for center frequency {center_freq} Hz"
        )));
    }

    let sigma_t = envelope_sigma(fractional_bandwidth * center_freq);
    let half_width = sigma_t * (-2.0 * TRUNCATION_LEVEL.ln()).sqrt();
    let half = (half_width * sample_rate).floor() as usize;

    let mut samples: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sample_rate;
            (-t * t / (2.0 * sigma_t * sigma_t)).exp() * (2.0 * PI * center_freq * t).cos()
        })
        .collect();
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::config("pulse has no nonzero samples"));
    }
    samples.iter_mut().for_each(|v| *v /= peak);

    Ok(Pulse {
        center_freq,
        fractional_bandwidth,
        sample_rate,
        samples,
        delay_index: half,
    })
}
