//! Consensus-equilibrium solver: stacked agent states, the weighted
//! averaging operator and Douglas-Rachford (Mann) iteration.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;

/// A map from an image vector to an improved estimate of the same length.
pub trait Agent: Sync {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Agent for F
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self(x)
    }
}

/// One state vector per agent, all of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedState {
    components: Vec<Vec<f64>>,
}

impl StackedState {
    pub fn new(components: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::config("a stacked state needs at least one component"));
        };
        let n = first.len();
        for c in &components {
            crate::error::check_len("stacked state component", n, c.len())?;
        }
        Ok(Self { components })
    }

    /// `copies` identical components equal to `x`.
    pub fn replicate(x: &[f64], copies: usize) -> Result<Self> {
        Self::new(vec![x.to_vec(); copies])
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn n_agents(&self) -> usize {
        self.components.len()
    }

    /// Length of each component.
    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Self { components }
    }

    /// ‖self − other‖.
    pub fn distance(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt()
    }
}

/// Averaging weights for `n_agents` agents: the forward agent gets
/// 1/(1+μ) and the priors share μ/(1+μ) equally.
pub fn averaging_weights(n_agents: usize, mu: f64) -> Result<Vec<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::config(format!("mu must be non-negative, got {mu}")));
    }
    match n_agents {
        0 => Err(Error::config("at least one agent is required")),
        1 => Ok(vec![1.0]),
        n => {
            let mut w = vec![mu / ((n - 1) as f64 * (1.0 + mu)); n];
            w[0] = 1.0 / (1.0 + mu);
            Ok(w)
        }
    }
}

/// Weighted average of the components, with weights summing to one.
/// Evaluated as `c_0 + Σ_i w_i (c_i − c_0)` so a consensus state maps to
/// itself exactly.
pub fn weighted_average(state: &StackedState, weights: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_len("averaging weights", state.n_agents(), weights.len())?;
    let mut out = state.components[0].clone();
    for (c, &w) in state.components.iter().zip(weights).skip(1) {
        for ((o, v), base) in out.iter_mut().zip(c).zip(&state.components[0]) {
            *o += w * (v - base);
        }
    }
    Ok(out)
}

/// Apply agent `i` to component `i`, all agents independently.
pub fn apply_agents(state: &StackedState, agents: &[&dyn Agent]) -> Result<StackedState> {
    crate::error::check_len("agents", state.n_agents(), agents.len())?;
    let n = state.len();
    let components = agents
        .par_iter()
        .zip(state.components.par_iter())
        .map(|(agent, w)| {
            let out = agent.apply(w)?;
            crate::error::check_len("agent output", n, out.len())?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StackedState { components })
}

/// Replace every component by the weighted average.
pub fn average_operator(state: &StackedState, mu: f64) -> Result<StackedState> {
    let w = averaging_weights(state.n_agents(), mu)?;
    let avg = weighted_average(state, &w)?;
    StackedState::replicate(&avg, state.n_agents())
}

/// One damped Douglas-Rachford update together with the relative
/// fixed-point residual ‖TW − W‖/‖W‖.
fn dr_update(state: &StackedState, agents: &[&dyn Agent], mu: f64, rho: f64) -> Result<(StackedState, f64)> {
    let l = apply_agents(state, agents)?;
    let x = l.zip_map(state, |a, w| 2.0 * a - w);
    let g = average_operator(&x, mu)?;
    let tw = g.zip_map(&x, |a, b| 2.0 * a - b);
    let diff = tw.distance(state);
    let norm = state.norm();
    let residual = if norm > 0.0 { diff / norm } else { diff };
    let next = state.zip_map(&tw, |w, t| w + rho * (t - w));
    Ok((next, residual))
}

/// `W + ρ(TW − W)` with `T = (2G − I)(2L − I)`.
pub fn dr_step(state: &StackedState, agents: &[&dyn Agent], mu: f64, rho: f64) -> Result<StackedState> {
    Ok(dr_update(state, agents, mu, rho)?.0)
}

/// Solver settings shared by the consensus reconstructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaceConfig {
    /// Regularization versus data-fit weight in the average.
    pub mu: f64,
    /// Mann damping of the Douglas-Rachford update.
    pub rho: f64,
    pub max_iters: usize,
    /// Early stop when the relative fixed-point residual drops below this.
    pub tol: f64,
    /// Proximal parameter shared by the proximal agents.
    pub beta: f64,
    /// ICD sweeps per proximal-agent call.
    pub icd_sweeps_per_call: usize,
    /// Record the averaged estimate every this many iterations.
    pub snapshot_every: Option<usize>,
}

impl Default for MaceConfig {
    fn default() -> Self {
        Self { mu: 1.0, rho: 0.9, max_iters: 100, tol: 1e-5, beta: 1.0, icd_sweeps_per_call: 1, snapshot_every: None }
    }
}

impl MaceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config(format!("mu must be non-negative, got {}", self.mu)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.max_iters == 0 || self.icd_sweeps_per_call == 0 {
            return Err(Error::config("max_iters and icd_sweeps_per_call must be positive"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::config("snapshot interval must be positive"));
        }
        Ok(())
    }
}

/// Averaged estimate recorded during a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub image: Image,
}

/// Convergence record of a solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations_run: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub snapshots: Vec<Snapshot>,
}

impl SolveReport {
    /// `iteration,residual` rows, one per iteration.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,residual\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            let _ = writeln!(s, "{},{:e}", i + 1, r);
        }
        s
    }
}

/// Iterate from `W = [init; …; init]` until the residual falls below
/// `tol` or `max_iters` is reached; returns the weighted average of the
/// final state.
pub fn solve_mace(cfg: &MaceConfig, agents: &[&dyn Agent], init: &Image) -> Result<(Image, SolveReport)> {
    let (state, report) = solve_mace_state(cfg, agents, init)?;
    let weights = averaging_weights(agents.len(), cfg.mu)?;
    let image = Image::new(init.grid, weighted_average(&state, &weights)?)?;
    Ok((image, report))
}

/// [`solve_mace`] returning the final stacked state instead of its average.
pub fn solve_mace_state(cfg: &MaceConfig, agents: &[&dyn Agent], init: &Image) -> Result<(StackedState, SolveReport)> {
    cfg.validate()?;
    if !init.is_finite() {
        return Err(Error::data("initial image contains non-finite values"));
    }
    let weights = averaging_weights(agents.len(), cfg.mu)?;
    let mut state = StackedState::replicate(&init.values, agents.len())?;
    let mut report = SolveReport::default();
    for it in 1..=cfg.max_iters {
        let (next, residual) = dr_update(&state, agents, cfg.mu, cfg.rho).map_err(|e| match e {
            Error::Numerical { message, .. } => Error::Numerical { iteration: it, message },
            other => other,
        })?;
        if !next.is_finite() || !residual.is_finite() {
            return Err(Error::Numerical { iteration: it, message: "consensus state became non-finite".into() });
        }
        state = next;
        report.iterations_run = it;
        report.residual_history.push(residual);
        if let Some(every) = cfg.snapshot_every {
            if it % every == 0 {
                let image = Image::new(init.grid, weighted_average(&state, &weights)?)?;
                report.snapshots.push(Snapshot { iteration: it, image });
            }
        }
        if residual < cfg.tol {
            report.converged = true;
            break;
        }
    }
    Ok((state, report))
}
