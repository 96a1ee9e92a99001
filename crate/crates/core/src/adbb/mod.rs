//! The ADBB iteration: adapt-then-combine gradient tracking with
//! Barzilai-Borwein step sizes and `H` consensus rounds per variable.

pub mod compact;
pub mod consensus;
pub mod step_size;
pub mod trace;

use nalgebra::DVector;

pub use consensus::{mix_once, multi_consensus};
pub use step_size::{bb_raw, bb_step_size, BbVariant};
pub use trace::{Diagnostics, RunResult, RunStatus, TraceRecord};

use crate::error::{Error, Result};
use crate::graph::{perron_vector, WeightMatrix};
use crate::objective::{solve_centralized, LocalObjective, ObjectiveInfo};

/// Magnitude above which a state coordinate counts as diverged.
pub const BLOWUP_THRESHOLD: f64 = 1e100;

/// Gradient-norm tolerance for the reference optimum.
pub const OPTIMUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Bb(BbVariant),
    /// Keep every agent's initial step for the whole run.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdbbConfig {
    pub inner_loops: usize,
    pub alpha0: f64,
    pub step_rule: StepRule,
    pub safeguard_eps: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
}

impl Default for AdbbConfig {
    fn default() -> Self {
        Self {
            inner_loops: 5,
            alpha0: 1.2,
            step_rule: StepRule::Bb(BbVariant::Bb1),
            safeguard_eps: 1e-14,
            max_iters: 1000,
            residual_tol: 1e-8,
        }
    }
}

impl AdbbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_loops == 0 {
            return Err(Error::InvalidConfig("inner loop count H must be >= 1".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.safeguard_eps >= 0.0) {
            return Err(Error::InvalidConfig("safeguard eps must be non-negative".into()));
        }
        if self.residual_tol.is_nan() {
            return Err(Error::InvalidConfig("residual tolerance is NaN".into()));
        }
        Ok(())
    }
}

/// Everything agent `i` stores between outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: DVector<f64>,
    /// Running estimate of row `i` of `1πᵀ`; starts at `eᵢ`.
    pub y: DVector<f64>,
    /// Gradient tracker.
    pub z: DVector<f64>,
    pub x_prev: DVector<f64>,
    /// `∇fᵢ(x)`, cached so each iteration costs one evaluation.
    pub grad: DVector<f64>,
    pub grad_prev: DVector<f64>,
    pub alpha: f64,
    /// Unclamped BB quotient behind `alpha`, when one was formed.
    pub raw_alpha: Option<f64>,
}

/// Initial states: `y = eᵢ`, `z = ∇fᵢ(x₀ⁱ)`, `α = alphas[i]`.
pub fn initial_states<O: LocalObjective>(objectives: &[O], x0: &[DVector<f64>], alphas: &[f64]) -> Result<Vec<AgentState>> {
    let m = objectives.len();
    for len in [x0.len(), alphas.len()] {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {a}")));
    }
    objectives
        .iter()
        .zip(x0)
        .zip(alphas)
        .enumerate()
        .map(|(i, ((o, x), &alpha))| {
            let grad = o.gradient(x)?;
            let mut y = DVector::zeros(m);
            y[i] = 1.0;
            Ok(AgentState {
                x: x.clone(),
                y,
                z: grad.clone(),
                x_prev: x.clone(),
                grad_prev: grad.clone(),
                grad,
                alpha,
                raw_alpha: None,
            })
        })
        .collect()
}

/// A network and the agents' objectives, with the reference optimum and the
/// Perron vector used for diagnostics.
#[derive(Debug, Clone)]
pub struct Instance<O> {
    weights: WeightMatrix,
    objectives: Vec<O>,
    optimum: DVector<f64>,
    pi: DVector<f64>,
    info: ObjectiveInfo,
}

impl<O: LocalObjective> Instance<O> {
    /// Solves the centralized problem to `OPTIMUM_TOL` for the reference point.
    pub fn new(weights: WeightMatrix, objectives: Vec<O>) -> Result<Self> {
        Self::check(&weights, &objectives)?;
        let optimum = solve_centralized(&objectives, OPTIMUM_TOL)?;
        Self::with_optimum(weights, objectives, optimum)
    }

    pub fn with_optimum(weights: WeightMatrix, objectives: Vec<O>, optimum: DVector<f64>) -> Result<Self> {
        Self::check(&weights, &objectives)?;
        if optimum.len() != objectives[0].dim() {
            return Err(Error::DimensionMismatch {
                expected: objectives[0].dim(),
                got: optimum.len(),
            });
        }
        let pi = perron_vector(&weights)?;
        let info = ObjectiveInfo::uniform(&objectives)?;
        Ok(Self {
            weights,
            objectives,
            optimum,
            pi,
            info,
        })
    }

    fn check(weights: &WeightMatrix, objectives: &[O]) -> Result<()> {
        if objectives.len() != weights.agents() {
            return Err(Error::DimensionMismatch {
                expected: weights.agents(),
                got: objectives.len(),
            });
        }
        let n = objectives[0].dim();
        if let Some(o) = objectives.iter().find(|o| o.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: o.dim() });
        }
        Ok(())
    }

    pub fn agents(&self) -> usize {
        self.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.optimum.len()
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn objectives(&self) -> &[O] {
        &self.objectives
    }

    pub fn optimum(&self) -> &DVector<f64> {
        &self.optimum
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Uniform constants: smallest `μᵢ`, largest `Lᵢ`.
    pub fn info(&self) -> &ObjectiveInfo {
        &self.info
    }

    /// All agents at the origin.
    pub fn zero_start(&self) -> Vec<DVector<f64>> {
        vec![DVector::zeros(self.dim()); self.agents()]
    }
}

pub(crate) fn check_finite(states: &[AgentState], iteration: usize) -> Result<()> {
    let bad = |v: &DVector<f64>| v.iter().any(|c| !c.is_finite() || c.abs() > BLOWUP_THRESHOLD);
    match states.iter().position(|s| bad(&s.x) || bad(&s.y) || bad(&s.z)) {
        Some(agent) => Err(Error::NumericalBlowup { iteration, agent }),
        None => Ok(()),
    }
}

/// One outer iteration from iterate `k` to `k + 1`.
pub fn adbb_iterate<O: LocalObjective>(
    k: usize,
    states: &[AgentState],
    instance: &Instance<O>,
    cfg: &AdbbConfig,
) -> Result<Vec<AgentState>> {
    let weights = instance.weights();
    let h = cfg.inner_loops;
    let m = states.len();

    let descended: Vec<DVector<f64>> = states.iter().map(|s| &s.x - &s.z * s.alpha).collect();
    let x_next = multi_consensus(&descended, weights, h)?;
    if let Some(agent) = x_next.iter().position(|x| x.iter().any(|c| !c.is_finite() || c.abs() > BLOWUP_THRESHOLD)) {
        return Err(Error::NumericalBlowup { iteration: k + 1, agent });
    }

    let ys: Vec<DVector<f64>> = states.iter().map(|s| s.y.clone()).collect();
    let y_next = multi_consensus(&ys, weights, h)?;

    let grad_next = instance
        .objectives()
        .iter()
        .zip(&x_next)
        .map(|(o, x)| o.gradient(x))
        .collect::<Result<Vec<_>>>()?;
    let corrected: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let s = &states[i];
            &s.z + &grad_next[i] / y_next[i][i] - &s.grad / s.y[i]
        })
        .collect();
    let z_next = multi_consensus(&corrected, weights, h)?;

    let next: Vec<AgentState> = (0..m)
        .map(|i| {
            let prev = &states[i];
            let s = &x_next[i] - &prev.x;
            let v = &grad_next[i] - &prev.grad;
            let (alpha, raw_alpha) = match cfg.step_rule {
                StepRule::Fixed => (prev.alpha, None),
                StepRule::Bb(variant) => (
                    bb_step_size(&s, &v, m, variant, instance.info(), cfg.safeguard_eps, prev.alpha),
                    bb_raw(&s, &v, m, variant, cfg.safeguard_eps),
                ),
            };
            AgentState {
                x: x_next[i].clone(),
                y: y_next[i].clone(),
                z: z_next[i].clone(),
                x_prev: prev.x.clone(),
                grad: grad_next[i].clone(),
                grad_prev: prev.grad.clone(),
                alpha,
                raw_alpha,
            }
        })
        .collect();
    check_finite(&next, k + 1)?;
    Ok(next)
}

/// Shared outer loop: records the trace, stops at `tol` or after `max_iters`.
pub(crate) fn drive<O, F>(
    instance: &Instance<O>,
    mut states: Vec<AgentState>,
    max_iters: usize,
    tol: f64,
    rounds_per_iter: usize,
    mut step: F,
) -> Result<RunResult>
where
    O: LocalObjective,
    F: FnMut(usize, &[AgentState]) -> Result<Vec<AgentState>>,
{
    let m = instance.agents();
    let mut grad_evals = m;
    let mut comm_rounds = 0;
    let mut trace = vec![TraceRecord::observe(0, &states, instance, grad_evals, comm_rounds)];
    for k in 0..max_iters {
        if trace[k].residual <= tol {
            break;
        }
        states = step(k, &states)?;
        grad_evals += m;
        comm_rounds += rounds_per_iter;
        trace.push(TraceRecord::observe(k + 1, &states, instance, grad_evals, comm_rounds));
    }
    let last = trace.last().map_or(f64::INFINITY, |r| r.residual);
    let status = if last <= tol {
        RunStatus::Converged
    } else {
        RunStatus::BudgetExceeded { residual: last }
    };
    Ok(RunResult {
        trace,
        final_states: states,
        status,
    })
}

/// Runs ADBB from the origin.
pub fn run_adbb<O: LocalObjective>(instance: &Instance<O>, cfg: &AdbbConfig) -> Result<RunResult> {
    run_adbb_from(instance, cfg, &instance.zero_start())
}

pub fn run_adbb_from<O: LocalObjective>(instance: &Instance<O>, cfg: &AdbbConfig, x0: &[DVector<f64>]) -> Result<RunResult> {
    cfg.validate()?;
    let alphas = vec![cfg.alpha0; instance.agents()];
    let states = initial_states(instance.objectives(), x0, &alphas)?;
    drive(instance, states, cfg.max_iters, cfg.residual_tol, 3 * cfg.inner_loops, |k, s| {
        adbb_iterate(k, s, instance, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedNetwork;
    use crate::objective::QuadraticLocalObjective;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quadratics(m: usize, n: usize, seed: u64) -> Vec<QuadraticLocalObjective> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let b = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
                QuadraticLocalObjective::new(b, rng.random_range(0.5..3.0)).unwrap()
            })
            .collect()
    }

    fn instance(m: usize, seed: u64) -> Instance<QuadraticLocalObjective> {
        let net = DirectedNetwork::random_strongly_connected(m, 0.2, seed).unwrap();
        Instance::new(WeightMatrix::uniform(&net), quadratics(m, 3, seed)).unwrap()
    }

    #[test]
    fn config_rejects_zero_inner_loops() {
        let cfg = AdbbConfig {
            inner_loops: 0,
            ..AdbbConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = AdbbConfig {
            alpha0: 0.0,
            ..AdbbConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn initial_state_follows_the_algorithm() {
        let inst = instance(4, 3);
        let states = initial_states(inst.objectives(), &inst.zero_start(), &[1.2; 4]).unwrap();
        for (i, s) in states.iter().enumerate() {
            let mut e = DVector::zeros(4);
            e[i] = 1.0;
            assert_eq!(s.y, e);
            assert_eq!(s.z, inst.objectives()[i].gradient(&s.x).unwrap());
            assert_eq!(s.alpha, 1.2);
        }
    }

    #[test]
    fn identical_minimizers_are_a_fixed_point() {
        let target = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let objs: Vec<_> = [1.0, 2.0, 0.7, 1.5]
            .iter()
            .map(|&c| QuadraticLocalObjective::new(target.clone(), c).unwrap())
            .collect();
        let net = DirectedNetwork::random_strongly_connected(4, 0.3, 1).unwrap();
        let inst = Instance::new(WeightMatrix::uniform(&net), objs).unwrap();
        let cfg = AdbbConfig {
            inner_loops: 2,
            max_iters: 10,
            residual_tol: -1.0,
            ..AdbbConfig::default()
        };
        let run = run_adbb_from(&inst, &cfg, &vec![target.clone(); 4]).unwrap();
        assert_eq!(run.trace.len(), 11);
        assert!(run.trace.iter().all(|r| r.residual < 1e-9));
    }

    #[test]
    fn counters_advance_by_m_and_three_h() {
        let inst = instance(5, 7);
        let cfg = AdbbConfig {
            inner_loops: 4,
            max_iters: 6,
            residual_tol: 0.0,
            ..AdbbConfig::default()
        };
        let run = run_adbb(&inst, &cfg).unwrap();
        for (k, r) in run.trace.iter().enumerate() {
            assert_eq!(r.k, k);
            assert_eq!(r.grad_evals, 5 * (k + 1));
            assert_eq!(r.comm_rounds, 12 * k);
        }
        assert_eq!(run.status, RunStatus::BudgetExceeded { residual: run.final_residual() });
    }

    #[test]
    fn y_rows_equal_powers_of_the_weight_matrix() {
        let inst = instance(6, 11);
        let h = 3;
        let cfg = AdbbConfig {
            inner_loops: h,
            ..AdbbConfig::default()
        };
        let mut states = initial_states(inst.objectives(), &inst.zero_start(), &[1.2; 6]).unwrap();
        for k in 0..5 {
            states = adbb_iterate(k, &states, &inst, &cfg).unwrap();
            let expected = inst.weights().power(h * (k + 1));
            let got = DMatrix::from_fn(6, 6, |i, j| states[i].y[j]);
            assert!((got - expected).amax() < 1e-14);
        }
    }

    #[test]
    fn quadratic_runs_converge_with_invariants() {
        for seed in 0..3 {
            let inst = instance(6, seed);
            let cfg = AdbbConfig {
                inner_loops: 3,
                max_iters: 2000,
                residual_tol: 1e-10,
                ..AdbbConfig::default()
            };
            let run = run_adbb(&inst, &cfg).unwrap();
            assert!(run.converged(), "seed {seed}: residual {}", run.final_residual());
            let (lo, hi) = inst.info().step_bounds(6);
            for r in &run.trace[1..] {
                let d = r.diagnostics;
                assert!(r.alpha_min >= lo && r.alpha_max <= hi);
                // on quadratics the raw quotient is 1/(m·κᵢ) up to cancellation in v
                if let (Some(a), Some(b)) = (d.raw_alpha_min, d.raw_alpha_max) {
                    assert!(a >= lo * (1.0 - 1e-6) && b <= hi * (1.0 + 1e-6), "{a} {b} vs [{lo}, {hi}]");
                }
                assert!(d.tracking_identity_gap <= 1e-8 * (1.0 + d.grad_norm));
                assert!(d.simplex_err < 1e-10);
            }
            let last = run.trace.last().unwrap();
            assert!(last.consensus_err < 1e-6 && last.tracking_err < 1e-6);
        }
    }

    #[test]
    fn single_agent_matches_centralized_solution() {
        let objs = quadratics(1, 4, 5);
        let inst = Instance::new(WeightMatrix::from_dense(DMatrix::identity(1, 1)).unwrap(), objs).unwrap();
        let cfg = AdbbConfig {
            inner_loops: 1,
            residual_tol: 1e-10,
            ..AdbbConfig::default()
        };
        let run = run_adbb(&inst, &cfg).unwrap();
        assert!(run.converged());
        assert!((&run.final_states[0].x - inst.optimum()).norm() < 1e-8);
    }

    #[test]
    fn divergence_is_reported() {
        let inst = instance(4, 2);
        let cfg = AdbbConfig {
            inner_loops: 1,
            alpha0: 1e40,
            step_rule: StepRule::Fixed,
            max_iters: 200,
            ..AdbbConfig::default()
        };
        assert!(matches!(run_adbb(&inst, &cfg), Err(Error::NumericalBlowup { .. })));
    }

    #[test]
    fn mismatched_instance_is_rejected() {
        let net = DirectedNetwork::ring(3).unwrap();
        assert!(Instance::new(WeightMatrix::uniform(&net), quadratics(4, 2, 0)).is_err());
        let w = WeightMatrix::from_dense(DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(Instance::new(w, quadratics(3, 2, 0)), Err(Error::NotPrimitive(_))));
    }
}
