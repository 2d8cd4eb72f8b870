use crate::agents::{prox_qggmrf, DataFitProx, QggmrfParams};
use crate::error::Result;
use crate::forward::SystemModel;
use crate::grid::{Image, ImageGrid};
use crate::mace::{solve_mace, Agent, MaceConfig, SolveReport};
use crate::scan::MeasurementSet;

/// The data-fit and QGGMRF agents bound to one data set.
pub struct UmbirAgents<'a> {
    pub data_fit: DataFitProx<'a>,
    pub prior: QggmrfAgent<'a>,
}

/// QGGMRF proximal map as a consensus agent.
pub struct QggmrfAgent<'a> {
    pub params: &'a QggmrfParams,
    pub grid: ImageGrid,
    pub beta: f64,
    pub sweeps: usize,
}

impl Agent for QggmrfAgent<'_> {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = Image::new(self.grid, x.to_vec())?;
        Ok(prox_qggmrf(&v, self.params, self.beta, self.sweeps)?.values)
    }
}

impl Agent for DataFitProx<'_> {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        DataFitProx::apply(self, x)
    }
}

impl<'a> UmbirAgents<'a> {
    pub fn new(
        y: &'a MeasurementSet,
        model: &'a SystemModel,
        params: &'a QggmrfParams,
        cfg: &MaceConfig,
        grid: ImageGrid,
    ) -> Result<Self> {
        cfg.validate()?;
        crate::error::check_len("sigma_x map", grid.len(), params.sigma_x().len())?;
        crate::error::check_len("system matrix columns", grid.len(), model.n())?;
        let data_fit = DataFitProx::new(model, y, cfg.beta, cfg.icd_sweeps_per_call)?;
        let prior = QggmrfAgent { params, grid, beta: cfg.beta, sweeps: cfg.icd_sweeps_per_call };
        Ok(Self { data_fit, prior })
    }
}

/// Two-agent consensus reconstruction (data fit + QGGMRF) from a zero
/// image; the averaging weights are 1/(1+μ) and μ/(1+μ).
pub fn umbir_reconstruct(
    y: &MeasurementSet,
    model: &SystemModel,
    params: &QggmrfParams,
    cfg: &MaceConfig,
    grid: ImageGrid,
) -> Result<(Image, SolveReport)> {
    let agents = UmbirAgents::new(y, model, params, cfg, grid)?;
    solve_mace(cfg, &[&agents.data_fit, &agents.prior], &Image::zeros(grid))
}
