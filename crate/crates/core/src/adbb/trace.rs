use nalgebra::{DMatrix, DVector};

use super::{AgentState, Instance};
use crate::graph::{pi_block_norm, spectral_norm};
use crate::objective::LocalObjective;

/// Quantities computed alongside each trace row for the runtime invariant
/// checks. They stay in memory and are not written to the CSV trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `‖y∞x_k − 1⊗w*‖₂ = √m ‖Σ πᵢ xᵢ − w*‖₂`.
    pub opt_gap: f64,
    /// `‖∇F(x_k)‖₂` over the stacked local gradients.
    pub grad_norm: f64,
    /// `πᵀα_k`.
    pub pi_alpha: f64,
    /// `‖Σ πᵢ zᵢ − Σ πᵢ ∇fᵢ(xᵢ)/[yᵢ]ᵢ‖₂`, zero in exact arithmetic.
    pub tracking_identity_gap: f64,
    /// `‖ỹ_k − 1πᵀ‖₂` with `ỹ_k` the matrix whose rows are the `yᵢ`.
    pub eig_learning_err: f64,
    /// Largest deviation of any `yᵢ` from the probability simplex.
    pub simplex_err: f64,
    /// Extremes of the unclamped BB quotients evaluated this iteration.
    pub raw_alpha_min: Option<f64>,
    pub raw_alpha_max: Option<f64>,
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `(1/m) Σ ‖xᵢ − w*‖₂`.
    pub residual: f64,
    /// `‖x − y∞x‖_π`.
    pub consensus_err: f64,
    /// `‖z − y∞z‖_π`.
    pub tracking_err: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub grad_evals: usize,
    pub comm_rounds: usize,
    pub diagnostics: Diagnostics,
}

fn pi_average(blocks: &[DVector<f64>], pi: &DVector<f64>) -> DVector<f64> {
    let mut avg = DVector::zeros(blocks[0].len());
    for (b, &p) in blocks.iter().zip(pi.iter()) {
        avg.axpy(p, b, 1.0);
    }
    avg
}

fn disagreement(blocks: &[DVector<f64>], pi: &DVector<f64>) -> f64 {
    let avg = pi_average(blocks, pi);
    let centered: Vec<DVector<f64>> = blocks.iter().map(|b| b - &avg).collect();
    pi_block_norm(&centered, pi)
}

impl TraceRecord {
    pub fn observe<O: LocalObjective>(
        k: usize,
        states: &[AgentState],
        instance: &Instance<O>,
        grad_evals: usize,
        comm_rounds: usize,
    ) -> Self {
        let m = states.len();
        let pi = instance.pi();
        let optimum = instance.optimum();

        let xs: Vec<DVector<f64>> = states.iter().map(|s| s.x.clone()).collect();
        let zs: Vec<DVector<f64>> = states.iter().map(|s| s.z.clone()).collect();
        let scaled: Vec<DVector<f64>> = states.iter().enumerate().map(|(i, s)| &s.grad / s.y[i]).collect();

        let residual = xs.iter().map(|x| (x - optimum).norm()).sum::<f64>() / m as f64;
        let x_bar = pi_average(&xs, pi);
        let opt_gap = (m as f64).sqrt() * (x_bar - optimum).norm();
        let grad_norm = states.iter().map(|s| s.grad.norm_squared()).sum::<f64>().sqrt();
        let tracking_identity_gap = (pi_average(&zs, pi) - pi_average(&scaled, pi)).norm();

        let y_tilde = DMatrix::from_fn(m, m, |i, j| states[i].y[j]);
        let limit = DMatrix::from_fn(m, m, |_, j| pi[j]);
        let eig_learning_err = spectral_norm(&(y_tilde - limit));
        let simplex_err = states
            .iter()
            .map(|s| (s.y.sum() - 1.0).abs().max(-s.y.min()))
            .fold(0.0, f64::max);

        let alphas = states.iter().map(|s| s.alpha);
        let alpha_min = alphas.clone().fold(f64::INFINITY, f64::min);
        let alpha_max = alphas.clone().fold(f64::NEG_INFINITY, f64::max);
        let pi_alpha = alphas.zip(pi.iter()).map(|(a, p)| a * p).sum();
        let raws: Vec<f64> = states.iter().filter_map(|s| s.raw_alpha).collect();
        let raw_alpha_min = raws.iter().copied().reduce(f64::min);
        let raw_alpha_max = raws.iter().copied().reduce(f64::max);

        Self {
            k,
            residual,
            consensus_err: disagreement(&xs, pi),
            tracking_err: disagreement(&zs, pi),
            alpha_min,
            alpha_max,
            grad_evals,
            comm_rounds,
            diagnostics: Diagnostics {
                opt_gap,
                grad_norm,
                pi_alpha,
                tracking_identity_gap,
                eig_learning_err,
                simplex_err,
                raw_alpha_min,
                raw_alpha_max,
            },
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Converged,
    BudgetExceeded { residual: f64 },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// One record per iterate `k = 0, 1, …`, so at most `max_iters + 1`.
    pub trace: Vec<TraceRecord>,
    pub final_states: Vec<AgentState>,
    pub status: RunStatus,
}

impl RunResult {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.residual)
    }

    /// First iteration whose residual is at or below `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.trace.iter().find(|r| r.residual <= tol).map(|r| r.k)
    }

    /// Gradient evaluations spent when the residual first reached `tol`.
    pub fn grad_evals_to(&self, tol: f64) -> Option<usize> {
        self.trace.iter().find(|r| r.residual <= tol).map(|r| r.grad_evals)
    }

    /// π-weighted network average of the final iterates.
    pub fn average_iterate(&self, pi: &DVector<f64>) -> DVector<f64> {
        let xs: Vec<DVector<f64>> = self.final_states.iter().map(|s| s.x.clone()).collect();
        pi_average(&xs, pi)
    }
}
