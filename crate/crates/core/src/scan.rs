//! Acquisition geometry, measurements and the full scan description.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::forward::travel_time;
use crate::grid::ImageGrid;
use crate::medium::LayeredMedium;
use crate::pulse::Pulse;

/// 2D point `[lateral, depth]` in metres.
pub type Point = [f64; 2];

/// Transmitter and receiver placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRaw", into = "GeometryRaw")]
pub struct ArrayGeometry {
    source_pos: Point,
    firing_tilt: f64,
    beam_halfwidth: f64,
    receivers: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct GeometryRaw {
    source_pos: Point,
    firing_tilt: f64,
    beam_halfwidth: f64,
    receivers: Vec<Point>,
}

impl TryFrom<GeometryRaw> for ArrayGeometry {
    type Error = Error;
    fn try_from(r: GeometryRaw) -> Result<Self> {
        ArrayGeometry::new(r.source_pos, r.firing_tilt, r.beam_halfwidth, r.receivers)
    }
}

impl From<ArrayGeometry> for GeometryRaw {
    fn from(g: ArrayGeometry) -> Self {
        GeometryRaw {
            source_pos: g.source_pos,
            firing_tilt: g.firing_tilt,
            beam_halfwidth: g.beam_halfwidth,
            receivers: g.receivers,
        }
    }
}

impl ArrayGeometry {
    /// `firing_tilt` is in degrees, positive towards +lateral ("upward").
    pub fn new(
        source_pos: Point,
        firing_tilt: f64,
        beam_halfwidth: f64,
        receivers: Vec<Point>,
    ) -> Result<Self> {
        if receivers.is_empty() {
            return Err(Error::config("at least one receiver is required"));
        }
        if !(beam_halfwidth > 0.0 && beam_halfwidth.is_finite()) {
            return Err(Error::config(format!("beam half-width must be positive, got {beam_halfwidth}")));
        }
        if !firing_tilt.is_finite() || firing_tilt.abs() >= 90.0 {
            return Err(Error::config(format!("firing tilt must lie in (-90, 90) degrees, got {firing_tilt}")));
        }
        let finite = |p: &Point| p.iter().all(|v| v.is_finite());
        if !finite(&source_pos) || !receivers.iter().all(finite) {
            return Err(Error::config("transducer positions must be finite"));
        }
        Ok(Self { source_pos, firing_tilt, beam_halfwidth, receivers })
    }

    pub fn source_pos(&self) -> Point {
        self.source_pos
    }

    pub fn firing_tilt(&self) -> f64 {
        self.firing_tilt
    }

    pub fn beam_halfwidth(&self) -> f64 {
        self.beam_halfwidth
    }

    pub fn receivers(&self) -> &[Point] {
        &self.receivers
    }

    /// Number of receivers K.
    pub fn k(&self) -> usize {
        self.receivers.len()
    }

    /// Unit vector along the beam axis, `[lateral, depth]`.
    pub fn beam_direction(&self) -> Point {
        let t = self.firing_tilt.to_radians();
        [t.sin(), t.cos()]
    }
}

/// Receiver-major measurement vector y: block `k` holds the `m` time
/// samples of receiver `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub y: Vec<f64>,
    pub m: usize,
    pub k: usize,
    pub sample_rate: f64,
}

impl MeasurementSet {
    pub fn new(y: Vec<f64>, m: usize, k: usize, sample_rate: f64) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::data(format!("measurement shape must be non-empty, got {m}x{k}")));
        }
        check_len("measurement vector", m * k, y.len())?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::data(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("measurement {i} is not finite")));
        }
        Ok(Self { y, m, k, sample_rate })
    }

    pub fn zeros(m: usize, k: usize, sample_rate: f64) -> Self {
        Self { y: vec![0.0; m * k], m, k, sample_rate }
    }

    /// Time trace of receiver `k`.
    pub fn trace(&self, k: usize) -> &[f64] {
        &self.y[k * self.m..(k + 1) * self.m]
    }
}

/// Everything needed to model one scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScanRaw", into = "ScanRaw")]
pub struct ScanConfig {
    pub medium: LayeredMedium,
    pub geometry: ArrayGeometry,
    pub grid: ImageGrid,
    pub pulse: Pulse,
    /// Time samples per receiver, M.
    pub m: usize,
    /// Standard deviation σ of the additive measurement noise.
    pub noise_std: f64,
    /// Shifted copies of the direct-arrival waveform per receiver (columns of D).
    pub direct_arrival_copies: usize,
}

#[derive(Serialize, Deserialize)]
struct ScanRaw {
    medium: LayeredMedium,
    geometry: ArrayGeometry,
    grid: ImageGrid,
    pulse: Pulse,
    #[serde(rename = "M")]
    m: usize,
    noise_std: f64,
    #[serde(default = "one")]
    direct_arrival_copies: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<ScanRaw> for ScanConfig {
    type Error = Error;
    fn try_from(r: ScanRaw) -> Result<Self> {
        let cfg = ScanConfig {
            medium: r.medium,
            geometry: r.geometry,
            grid: r.grid,
            pulse: r.pulse,
            m: r.m,
            noise_std: r.noise_std,
            direct_arrival_copies: r.direct_arrival_copies,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<ScanConfig> for ScanRaw {
    fn from(c: ScanConfig) -> Self {
        ScanRaw {
            medium: c.medium,
            geometry: c.geometry,
            grid: c.grid,
            pulse: c.pulse,
            m: c.m,
            noise_std: c.noise_std,
            direct_arrival_copies: c.direct_arrival_copies,
        }
    }
}

impl ScanConfig {
    pub fn new(
        medium: LayeredMedium,
        geometry: ArrayGeometry,
        grid: ImageGrid,
        pulse: Pulse,
        m: usize,
        noise_std: f64,
    ) -> Result<Self> {
        let cfg = Self { medium, geometry, grid, pulse, m, noise_std, direct_arrival_copies: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the cross-field invariants: image inside the medium, every
    /// transducer inside the medium, and the deepest echo inside the
    /// M-sample window.
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config(format!("noise std must be non-negative, got {}", self.noise_std)));
        }
        if self.m == 0 {
            return Err(Error::config("M must be positive"));
        }
        if self.direct_arrival_copies == 0 {
            return Err(Error::config("direct_arrival_copies must be at least 1"));
        }
        let total = self.medium.total_thickness();
        if self.grid.max_depth() > total {
            return Err(Error::config(format!(
                "image extends to depth {:.4} m beyond the medium ({total:.4} m)",
                self.grid.max_depth()
            )));
        }
        let src = self.geometry.source_pos();
        let span = |p: &Point| p[1] >= 0.0 && p[1] <= total;
        if !span(&src) || !self.geometry.receivers().iter().all(span) {
            return Err(Error::config("transducers must lie inside the medium depth span"));
        }
        let window = self.m as f64 / self.pulse.sample_rate();
        // one extra sample for the fractional-delay spill-over
        let latest = self.latest_echo_time()? + self.pulse.duration() + 1.0 / self.pulse.sample_rate();
        if latest > window {
            return Err(Error::config(format!(
                "M = {} samples ({:.1} µs) cannot hold the deepest echo ending at {:.1} µs",
                self.m,
                window * 1e6,
                latest * 1e6
            )));
        }
        Ok(())
    }

    /// Largest two-way delay over the image corners and every receiver.
    pub fn latest_echo_time(&self) -> Result<f64> {
        let g = &self.grid;
        let src = self.geometry.source_pos();
        let mut latest = 0.0f64;
        for ix in [0, g.nx() - 1] {
            for iz in [0, g.nz() - 1] {
                let v = [g.lateral(ix), g.depth(iz)];
                let down = travel_time(src, v, &self.medium)?;
                for r in self.geometry.receivers() {
                    latest = latest.max(down + travel_time(v, *r, &self.medium)?);
                }
            }
        }
        Ok(latest)
    }

    pub fn k(&self) -> usize {
        self.geometry.k()
    }

    /// Sound speed of the layer at the middle of the image depth range,
    /// the c_m used for the characteristic wavelength.
    pub fn imaging_speed(&self) -> f64 {
        let mid = 0.5 * (self.grid.origin_depth() + self.grid.max_depth());
        self.medium.layer_at(mid).map(|l| l.speed).unwrap_or(self.medium.layers()[0].speed)
    }

    /// Characteristic ringing wavelength of this scan, in pixels.
    pub fn gamma(&self) -> f64 {
        self.imaging_speed() / (self.pulse.center_freq() * self.grid.pitch())
    }

    /// Same scan on a different image lattice.
    pub fn with_grid(&self, grid: ImageGrid) -> Result<Self> {
        let cfg = Self { grid, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Characteristic wavelength γ = c_m / (f_c Δ_p) in pixels. Ringing
/// artifacts in reconstructions repeat with a period of about γ/2.
pub fn characteristic_wavelength(speed: f64, center_freq: f64, pitch: f64) -> Result<f64> {
    for (name, v) in [("speed", speed), ("center frequency", center_freq), ("pitch", pitch)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(speed / (center_freq * pitch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wavelength_values() {
        let g = characteristic_wavelength(2620.0, 29e3, 0.03).unwrap();
        assert!((g - 3.011_494_252_873_563).abs() < 1e-12);
        assert_eq!(characteristic_wavelength(1.0, 1.0, 1.0).unwrap(), 1.0);
        let g = characteristic_wavelength(2620.0, 58e3, 0.03).unwrap();
        assert!((g - 1.505_747_126_436_781_6).abs() < 1e-12);
    }

    #[test]
    fn wavelength_rejects_nonpositive() {
        assert!(characteristic_wavelength(0.0, 1.0, 1.0).is_err());
        assert!(characteristic_wavelength(1.0, -1.0, 1.0).is_err());
        assert!(characteristic_wavelength(1.0, 1.0, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn wavelength_is_homogeneous(
            c in 100.0..6000.0f64,
            f in 1e3..1e6f64,
            p in 1e-4..0.1f64,
            a in 0.1..10.0f64,
        ) {
            let g = characteristic_wavelength(c, f, p).unwrap();
            let rel = |x: f64, y: f64| ((x - y) / y).abs();
            prop_assert!(rel(characteristic_wavelength(a * c, f, p).unwrap(), a * g) < 1e-12);
            prop_assert!(rel(characteristic_wavelength(c, a * f, p).unwrap(), g / a) < 1e-12);
            prop_assert!(rel(characteristic_wavelength(c, f, a * p).unwrap(), g / a) < 1e-12);
        }
    }

    #[test]
    fn measurement_validation() {
        assert!(MeasurementSet::new(vec![0.0; 5], 2, 3, 1e6).is_err());
        assert!(MeasurementSet::new(vec![0.0, f64::NAN], 1, 2, 1e6).is_err());
        let y = MeasurementSet::new((0..6).map(f64::from).collect(), 3, 2, 1e6).unwrap();
        assert_eq!(y.trace(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::new([0.0, 0.0], 5.0, 0.02, vec![]).is_err());
        assert!(ArrayGeometry::new([0.0, 0.0], 5.0, 0.0, vec![[0.0, 0.0]]).is_err());
        assert!(ArrayGeometry::new([0.0, 0.0], 95.0, 0.02, vec![[0.0, 0.0]]).is_err());
        let g = ArrayGeometry::new([0.0, 0.0], 0.0, 0.02, vec![[0.0, 0.0]]).unwrap();
        assert_eq!(g.beam_direction(), [0.0, 1.0]);
    }
}
