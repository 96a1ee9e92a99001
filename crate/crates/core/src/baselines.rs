//! FROST: combine-then-adapt gradient tracking with one consensus round per
//! variable and fixed, uncoordinated step sizes.

use nalgebra::DVector;

use crate::adbb::{check_finite, drive, initial_states, mix_once, AgentState, Instance, RunResult};
use crate::error::{Error, Result};
use crate::objective::{LocalObjective, ObjectiveInfo};

#[derive(Debug, Clone, PartialEq)]
pub struct FrostConfig {
    pub alphas: Vec<f64>,
    pub max_iters: usize,
    pub residual_tol: f64,
}

impl FrostConfig {
    /// Every agent at `0.9 / (m·L)`, just under the cited stability ceiling.
    pub fn default_for<O: LocalObjective>(instance: &Instance<O>, max_iters: usize, residual_tol: f64) -> Self {
        let m = instance.agents();
        let alpha = 0.9 * frost_stability_bound(instance.info(), m);
        Self {
            alphas: vec![alpha; m],
            max_iters,
            residual_tol,
        }
    }

    pub fn validate(&self, agents: usize) -> Result<()> {
        if self.alphas.len() != agents {
            return Err(Error::DimensionMismatch {
                expected: agents,
                got: self.alphas.len(),
            });
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig(format!("FROST step size must be positive, got {a}")));
        }
        Ok(())
    }
}

/// `1/(m·L)`.
pub fn frost_stability_bound(info: &ObjectiveInfo, agents: usize) -> f64 {
    1.0 / (agents as f64 * info.lipschitz)
}

/// One FROST iteration: mix, then descend with each agent's own step.
pub fn frost_iterate<O: LocalObjective>(k: usize, states: &[AgentState], instance: &Instance<O>) -> Result<Vec<AgentState>> {
    let weights = instance.weights();
    let m = states.len();
    let xs: Vec<DVector<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<DVector<f64>> = states.iter().map(|s| s.y.clone()).collect();
    let zs: Vec<DVector<f64>> = states.iter().map(|s| s.z.clone()).collect();

    let x_next: Vec<DVector<f64>> = mix_once(&xs, weights)
        .into_iter()
        .zip(states)
        .map(|(mixed, s)| mixed - &s.z * s.alpha)
        .collect();
    if let Some(agent) = x_next.iter().position(|x| x.iter().any(|c| !c.is_finite() || c.abs() > crate::adbb::BLOWUP_THRESHOLD)) {
        return Err(Error::NumericalBlowup { iteration: k + 1, agent });
    }
    let y_next = mix_once(&ys, weights);
    let z_mixed = mix_once(&zs, weights);

    let next = (0..m)
        .map(|i| {
            let prev = &states[i];
            let grad = instance.objectives()[i].gradient(&x_next[i])?;
            let z = &z_mixed[i] + &grad / y_next[i][i] - &prev.grad / prev.y[i];
            Ok(AgentState {
                x: x_next[i].clone(),
                y: y_next[i].clone(),
                z,
                x_prev: prev.x.clone(),
                grad,
                grad_prev: prev.grad.clone(),
                alpha: prev.alpha,
                raw_alpha: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_finite(&next, k + 1)?;
    Ok(next)
}

/// Runs FROST from the origin.
pub fn run_frost<O: LocalObjective>(instance: &Instance<O>, cfg: &FrostConfig) -> Result<RunResult> {
    run_frost_from(instance, cfg, &instance.zero_start())
}

pub fn run_frost_from<O: LocalObjective>(instance: &Instance<O>, cfg: &FrostConfig, x0: &[DVector<f64>]) -> Result<RunResult> {
    cfg.validate(instance.agents())?;
    let states = initial_states(instance.objectives(), x0, &cfg.alphas)?;
    drive(instance, states, cfg.max_iters, cfg.residual_tol, 3, |k, s| frost_iterate(k, s, instance))
}
