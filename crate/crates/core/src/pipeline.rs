//! End-to-end runs: experiment configuration, phantom simulation and the
//! three reconstruction methods.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{
    build_ring_kernel, kernel_psd, min_kernel_size, DenoiserSettings, NoisePsd, QggmrfParams, QggmrfShape,
    RingingDenoiser,
};
use crate::analysis::{insonified_columns, make_phantom_with, specimen_medium, Phantom, PhantomConfig};
use crate::baselines::{saft_reconstruct, umbir_reconstruct, SaftConfig, UmbirAgents};
use crate::error::{Error, Result};
use crate::forward::{simulate_measurements, DirectArrivalCoeffs, SystemModel};
use crate::grid::{Image, ImageGrid};
use crate::pulse::make_pulse;
use crate::mace::{solve_mace, Agent, MaceConfig, SolveReport};
use crate::scan::{ArrayGeometry, MeasurementSet, ScanConfig};

/// QGGMRF prior settings: potential shape plus the σ_x scale field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QggmrfSection {
    #[serde(flatten)]
    pub shape: QggmrfShape,
    /// Uniform σ_x, used when no per-layer values are given.
    pub sigma_x: f64,
    /// One σ_x per medium layer.
    pub sigma_x_per_layer: Option<Vec<f64>>,
}

impl Default for QggmrfSection {
    fn default() -> Self {
        Self { shape: QggmrfShape::default(), sigma_x: 0.3, sigma_x_per_layer: None }
    }
}

impl QggmrfSection {
    pub fn params(&self, scan: &ScanConfig) -> Result<QggmrfParams> {
        match &self.sigma_x_per_layer {
            Some(layers) => QggmrfParams::per_layer(self.shape, &scan.grid, &scan.medium, layers),
            None => QggmrfParams::uniform(self.shape, &scan.grid, self.sigma_x),
        }
    }
}

/// Ringing denoiser settings plus the ring kernel that shapes its PSD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserSection {
    #[serde(flatten)]
    pub settings: DenoiserSettings,
    /// Standard deviation of the ringing process the filter removes.
    pub noise_std: f64,
    /// Envelope width of the ring kernel, in pixels.
    pub eta: f64,
    /// Kernel size; defaults to the smallest odd size ≥ 4γ.
    pub kernel_size: Option<usize>,
}

impl Default for DenoiserSection {
    fn default() -> Self {
        Self { settings: DenoiserSettings::default(), noise_std: 0.1, eta: 20.0, kernel_size: None }
    }
}

impl DenoiserSection {
    /// Block PSD of the ring kernel for characteristic wavelength `gamma`.
    pub fn psd(&self, gamma: f64) -> Result<NoisePsd> {
        let size = self
            .kernel_size
            .unwrap_or_else(|| min_kernel_size(gamma).max(self.settings.block_size | 1));
        let kernel = build_ring_kernel(gamma, self.eta, size)?;
        kernel_psd(&kernel, self.settings.block_size, self.noise_std)
    }
}

/// Specimen phantom selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSection {
    pub notch: bool,
    #[serde(flatten)]
    pub geometry: PhantomConfig,
}

/// Synthetic-data settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Synthesis grid refinement factor relative to the image grid.
    pub refine: usize,
    /// Direct-arrival amplitude applied to every receiver.
    pub direct_arrival: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { seed: 0, refine: 2, direct_arrival: 0.0 }
    }
}

/// Noise level assumed by the data-fit agent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataFitSection {
    /// Overrides `scan.noise_std`; required when the data are noiseless.
    pub noise_std: Option<f64>,
}

/// How reconstructions are scored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSection {
    /// Columns whose beam weight at the back-wall depth reaches this
    /// value are scored for wall position and amplitude.
    pub min_beam_weight: f64,
    /// Denoiser applications in the post-processing study.
    pub study_applications: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { min_beam_weight: 0.7, study_applications: 15 }
    }
}

/// Everything needed to simulate and reconstruct one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scan: ScanConfig,
    #[serde(default)]
    pub qggmrf: QggmrfSection,
    #[serde(default)]
    pub denoiser: DenoiserSection,
    #[serde(default)]
    pub mace: MaceConfig,
    #[serde(default)]
    pub saft: SaftConfig,
    #[serde(default)]
    pub phantom: PhantomSection,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub data_fit: DataFitSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scan.validate()?;
        self.qggmrf.shape.validate()?;
        self.mace.validate()?;
        self.saft.validate()?;
        self.denoiser.settings.validate()?;
        if self.simulation.refine == 0 {
            return Err(Error::config("refine factor must be at least 1"));
        }
        if !(self.evaluation.min_beam_weight > 0.0 && self.evaluation.min_beam_weight <= 1.0) {
            return Err(Error::config("evaluation.min_beam_weight must lie in (0, 1]"));
        }
        if !self.simulation.direct_arrival.is_finite() {
            return Err(Error::config("direct-arrival amplitude must be finite"));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.scan.gamma()
    }

    /// σ used by the data-fit agent.
    pub fn model_noise_std(&self) -> Result<f64> {
        let s = self.data_fit.noise_std.unwrap_or(self.scan.noise_std);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::config(
                "data-fit noise std must be positive; set data_fit.noise_std for noiseless data",
            ));
        }
        Ok(s)
    }

    pub fn system_model(&self) -> Result<SystemModel> {
        SystemModel::build_with_noise(&self.scan, self.model_noise_std()?)
    }

    /// Columns scored by the wall metrics.
    pub fn evaluation_columns(&self) -> Range<usize> {
        insonified_columns(&self.scan, self.phantom.geometry.back_wall_depth, self.evaluation.min_beam_weight)
    }

    /// Desk-scale specimen experiment: a 96×160 grid at 2 mm pitch
    /// starting 8.5 mm below the top of the concrete, five receivers
    /// spaced 4 cm apart and a 58 kHz source tilted 5°.
    pub fn desk() -> Self {
        let pitch = 0.002;
        let origin = 0.0685;
        let (nx, nz) = (96, 160);
        let build = || -> Result<ScanConfig> {
            let grid = ImageGrid::new(nx, nz, pitch, origin)?;
            let medium = specimen_medium(origin + nz as f64 * pitch + 0.02)?;
            let receivers = [-0.08, -0.04, 0.0, 0.04, 0.08].iter().map(|&x| [x, 0.0]).collect();
            let geometry = ArrayGeometry::new([0.0, 0.0], 5.0, 0.03, receivers)?;
            ScanConfig::new(medium, geometry, grid, make_pulse(58e3, 1.0, 2e6)?, 900, 10.0)
        };
        let scan = build().expect("desk preset is valid");
        Self {
            scan,
            qggmrf: QggmrfSection { sigma_x: 0.1, ..Default::default() },
            denoiser: DenoiserSection::default(),
            mace: MaceConfig { beta: 1e-3, icd_sweeps_per_call: 4, ..Default::default() },
            saft: SaftConfig::default(),
            phantom: PhantomSection::default(),
            simulation: SimulationConfig { seed: 1, ..Default::default() },
            data_fit: DataFitSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }

    /// Phantom on the image grid.
    pub fn phantom(&self) -> Result<Phantom> {
        make_phantom_with(self.phantom.notch, self.scan.grid, &self.phantom.geometry)
    }
}

/// Reconstruction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Saft,
    Umbir,
    RareMace,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Saft, Method::Umbir, Method::RareMace];

    pub fn name(self) -> &'static str {
        match self {
            Method::Saft => "saft",
            Method::Umbir => "umbir",
            Method::RareMace => "rare-mace",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method '{s}' (expected saft, umbir or rare-mace)")))
    }
}

/// Simulate measurements of the configured phantom, synthesizing on a
/// grid refined by `refine` so the reconstruction model differs from the
/// data model.
pub fn simulate(cfg: &ExperimentConfig, seed: u64, refine: usize) -> Result<(MeasurementSet, Phantom)> {
    cfg.validate()?;
    if refine == 0 {
        return Err(Error::config("refine factor must be at least 1"));
    }
    let fine_grid = cfg.scan.grid.refined(refine)?;
    let geometry = PhantomConfig { reference_pitch: Some(cfg.scan.grid.pitch()), ..cfg.phantom.geometry };
    let fine = make_phantom_with(cfg.phantom.notch, fine_grid, &geometry)?;
    let g = DirectArrivalCoeffs::new(vec![cfg.simulation.direct_arrival; cfg.scan.k() * cfg.scan.direct_arrival_copies])?;
    let y = simulate_measurements(&cfg.scan, &fine.x_true, &g, seed)?;
    Ok((y, cfg.phantom()?))
}

/// The ringing denoiser as a consensus agent.
pub struct RingingAgent {
    pub denoiser: RingingDenoiser,
    pub grid: crate::grid::ImageGrid,
}

impl Agent for RingingAgent {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.denoiser.denoise(&Image::new(self.grid, x.to_vec())?)?.values)
    }
}

/// Three-agent consensus reconstruction (data fit, QGGMRF, ringing
/// denoiser) started from `init`.
pub fn rare_mace_reconstruct(
    y: &MeasurementSet,
    model: &SystemModel,
    params: &QggmrfParams,
    psd: &NoisePsd,
    settings: &DenoiserSettings,
    cfg: &MaceConfig,
    init: &Image,
) -> Result<(Image, SolveReport)> {
    let base = UmbirAgents::new(y, model, params, cfg, init.grid)?;
    let ringing = RingingAgent { denoiser: RingingDenoiser::new(psd, *settings)?, grid: init.grid };
    solve_mace(cfg, &[&base.data_fit, &base.prior, &ringing], init)
}

/// Output of one reconstruction run.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub method: Method,
    pub image: Image,
    /// Convergence record of the method's own solve.
    pub report: Option<SolveReport>,
    /// For RARE-MACE, the UMBIR solve that produced its initialization.
    pub warm_start: Option<(Image, SolveReport)>,
}

/// Run `method` on `y` with the settings of `cfg`. RARE-MACE always
/// starts from its own UMBIR solve.
pub fn reconstruct(cfg: &ExperimentConfig, y: &MeasurementSet, method: Method) -> Result<Reconstruction> {
    cfg.validate()?;
    if method == Method::Saft {
        let image = saft_reconstruct(y, &cfg.scan, &cfg.saft)?;
        return Ok(Reconstruction { method, image, report: None, warm_start: None });
    }
    let model = cfg.system_model()?;
    let params = cfg.qggmrf.params(&cfg.scan)?;
    let (umbir, umbir_report) = umbir_reconstruct(y, &model, &params, &cfg.mace, cfg.scan.grid)?;
    if method == Method::Umbir {
        return Ok(Reconstruction { method, image: umbir, report: Some(umbir_report), warm_start: None });
    }
    let psd = cfg.denoiser.psd(cfg.gamma())?;
    let (image, report) =
        rare_mace_reconstruct(y, &model, &params, &psd, &cfg.denoiser.settings, &cfg.mace, &umbir)?;
    Ok(Reconstruction { method, image, report: Some(report), warm_start: Some((umbir, umbir_report)) })
}
