//! File formats: TOML experiment configs, binary and CSV measurements,
//! 16-bit graymaps and CSV images, and JSON run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, ImageGrid};
use crate::mace::{averaging_weights, MaceConfig, SolveReport};
use crate::pipeline::ExperimentConfig;
use crate::scan::MeasurementSet;

/// Leading tag of the binary measurement format ("RMACEMS1").
pub const MEASUREMENT_MAGIC: u64 = u64::from_le_bytes(*b"RMACEMS1");

const HEADER_BYTES: usize = 32;

pub fn config_from_toml(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_to_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    config_from_toml(&text)
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    fs::write(path, config_to_toml(cfg)?)?;
    Ok(())
}

/// Little-endian header (magic, M, K, sample rate) followed by the
/// receiver-major samples.
pub fn encode_measurements(y: &MeasurementSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * y.y.len());
    out.extend_from_slice(&MEASUREMENT_MAGIC.to_le_bytes());
    out.extend_from_slice(&(y.m as u64).to_le_bytes());
    out.extend_from_slice(&(y.k as u64).to_le_bytes());
    out.extend_from_slice(&y.sample_rate.to_le_bytes());
    for v in &y.y {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_measurements(bytes: &[u8]) -> Result<MeasurementSet> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::data(format!("measurement file is {} bytes, shorter than its header", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("eight bytes") };
    if u64::from_le_bytes(word(0)) != MEASUREMENT_MAGIC {
        return Err(Error::data("not a measurement file (bad magic)"));
    }
    let m = u64::from_le_bytes(word(1)) as usize;
    let k = u64::from_le_bytes(word(2)) as usize;
    let sample_rate = f64::from_le_bytes(word(3));
    let n = m.checked_mul(k).ok_or_else(|| Error::data("measurement shape overflows"))?;
    let body = &bytes[HEADER_BYTES..];
    if body.len() != 8 * n {
        return Err(Error::data(format!("expected {} samples for {m}x{k}, found {} bytes", n, body.len())));
    }
    let y = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect();
    MeasurementSet::new(y, m, k, sample_rate)
}

pub fn write_measurements(path: &Path, y: &MeasurementSet) -> Result<()> {
    fs::write(path, encode_measurements(y))?;
    Ok(())
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    decode_measurements(&fs::read(path)?)
}

/// One row per time sample, one column per receiver.
pub fn measurements_to_csv(y: &MeasurementSet) -> String {
    let mut s = String::new();
    let header: Vec<String> = (0..y.k).map(|k| format!("rx{k}")).collect();
    let _ = writeln!(s, "{}", header.join(","));
    for t in 0..y.m {
        let row: Vec<String> = (0..y.k).map(|k| y.y[k * y.m + t].to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Row-major `rows × cols` matrix as CSV with full float precision.
pub fn matrix_to_csv(values: &[f64], cols: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(cols.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn csv_to_matrix(text: &str) -> Result<(Vec<f64>, usize)> {
    let mut values = Vec::new();
    let mut cols = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::data(format!("line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::data(format!("line {} has {} cells, expected {c}", i + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
    }
    Ok((values, cols.unwrap_or(0)))
}

/// One CSV row per depth row.
pub fn image_to_csv(img: &Image) -> String {
    matrix_to_csv(&img.values, img.grid.nx())
}

pub fn image_from_csv(text: &str, grid: ImageGrid) -> Result<Image> {
    let (values, cols) = csv_to_matrix(text)?;
    if cols != grid.nx() || values.len() != grid.len() {
        return Err(Error::Dimension { what: "image CSV", expected: grid.len(), got: values.len() });
    }
    Image::new(grid, values)
}

/// Binary 16-bit graymap (P5, big-endian samples), min-max normalized.
/// Constant inputs map to zero.
pub fn to_pgm16(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if width * height != values.len() {
        return Err(Error::Dimension { what: "graymap pixels", expected: width * height, got: values.len() });
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in values {
        let level = if span > 0.0 { ((v - lo) / span * 65535.0).round() as u16 } else { 0 };
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok(out)
}

/// Parse a P5 graymap written by [`to_pgm16`] into `(width, height, levels)`.
pub fn from_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::data("truncated graymap header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(Error::data("expected a 16-bit P5 graymap"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::data(format!("graymap header: {e}")));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != 2 * w * h {
        return Err(Error::data(format!("graymap body is {} bytes, expected {}", body.len(), 2 * w * h)));
    }
    Ok((w, h, body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

pub fn image_to_pgm(img: &Image) -> Vec<u8> {
    to_pgm16(&img.values, img.grid.nx(), img.grid.nz()).expect("image shape matches its grid")
}

/// Convergence and weighting record of a consensus solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub rho: f64,
    pub mu: f64,
    pub max_iters: usize,
    /// Averaging weights for the agents of the solve.
    pub weights: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_residual: Option<f64>,
}

impl SolverSummary {
    pub fn new(cfg: &MaceConfig, n_agents: usize, report: &SolveReport) -> Result<Self> {
        Ok(Self {
            rho: cfg.rho,
            mu: cfg.mu,
            max_iters: cfg.max_iters,
            weights: averaging_weights(n_agents, cfg.mu)?,
            iterations_run: report.iterations_run,
            converged: report.converged,
            final_residual: report.residual_history.last().copied(),
        })
    }
}

/// Structured record of one command invocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    pub method: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_s: f64,
    pub solver: Option<SolverSummary>,
    /// UMBIR solve that initialized a RARE-MACE run.
    pub warm_start: Option<SolverSummary>,
    pub metrics: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), version: env!("CARGO_PKG_VERSION").to_string(), ..Default::default() }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::data(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::data(format!("manifest: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_spells_the_tag() {
        assert_eq!(&MEASUREMENT_MAGIC.to_le_bytes(), b"RMACEMS1");
    }

    #[test]
    fn pgm_levels_span_full_range() {
        let bytes = to_pgm16(&[-1.0, 0.0, 1.0, 3.0], 2, 2).unwrap();
        let (w, h, levels) = from_pgm16(&bytes).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(levels, vec![0, 16384, 32768, 65535]);
    }
}
