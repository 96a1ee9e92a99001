use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::{generate_synthetic, load_mushroom, LabeledSet, MUSHROOM_TRAIN};
use super::report::{evaluate_classifier, write_trace_csv, ClassificationReport};
use crate::adbb::{run_adbb, AdbbConfig, BbVariant, Instance, RunResult, RunStatus, StepRule};
use crate::baselines::{run_frost, FrostConfig};
use crate::error::{Error, Result};
use crate::graph::{compute_spectral_info, fixtures, DirectedNetwork, WeightMatrix};
use crate::objective::{LocalObjective, QuadraticLocalObjective};
use crate::theory::{build_contraction_matrix, certified_inner_loops, verify_contraction_empirically};

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Synthetic,
    Mushroom(PathBuf),
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    File(PathBuf),
    TenAgents,
    TwentyAgents,
    /// Ring over a seeded permutation plus extra edges with probability `density`.
    Random { density: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Adbb,
    Frost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub topology: Topology,
    pub algorithm: Algorithm,
    pub agents: usize,
    pub dim: usize,
    pub samples: usize,
    pub inner_loops: usize,
    pub alpha0: f64,
    pub bb_variant: BbVariant,
    pub beta: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub seed: u64,
    /// Keep the mushroom file order instead of shuffling with `seed`.
    pub file_order: bool,
    pub output: Option<PathBuf>,
    /// Inner-loop counts to run side by side instead of `inner_loops`.
    pub sweep: Vec<usize>,
    pub theory_check: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Synthetic,
            topology: Topology::Random { density: 0.2 },
            algorithm: Algorithm::Adbb,
            agents: 10,
            dim: 100,
            samples: 1000,
            inner_loops: 5,
            alpha0: 1.2,
            bb_variant: BbVariant::Bb1,
            beta: 0.1,
            max_iters: 1000,
            residual_tol: 1e-8,
            seed: 0,
            file_order: false,
            output: None,
            sweep: Vec::new(),
            theory_check: false,
        }
    }
}

impl ExperimentConfig {
    pub fn adbb_config(&self, inner_loops: usize) -> AdbbConfig {
        AdbbConfig {
            inner_loops,
            alpha0: self.alpha0,
            step_rule: StepRule::Bb(self.bb_variant),
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            ..AdbbConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("m and n must be positive".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!("beta must be non-negative, got {}", self.beta)));
        }
        let loops = if self.sweep.is_empty() { vec![self.inner_loops] } else { self.sweep.clone() };
        for h in loops {
            self.adbb_config(h).validate()?;
        }
        Ok(())
    }
}

pub fn build_network(topology: &Topology, agents: usize, seed: u64) -> Result<DirectedNetwork> {
    let net = match topology {
        Topology::File(path) => DirectedNetwork::read_edge_list(path, Some(agents))?,
        Topology::TenAgents => fixtures::ten_agents(),
        Topology::TwentyAgents => fixtures::twenty_agents(),
        Topology::Random { density } => DirectedNetwork::random_strongly_connected(agents, *density, seed)?,
    };
    if net.agents() != agents {
        return Err(Error::DimensionMismatch {
            expected: agents,
            got: net.agents(),
        });
    }
    if !net.check_strong_connectivity() {
        return Err(Error::InvalidNetwork("network is not strongly connected".into()));
    }
    Ok(net)
}

/// Seeded quadratics with targets in `[−2, 2]ⁿ` and curvatures in `[0.5, 3]`.
pub fn random_quadratics(agents: usize, dim: usize, seed: u64) -> Result<Vec<QuadraticLocalObjective>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..agents)
        .map(|_| {
            let target = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
            QuadraticLocalObjective::new(target, rng.random_range(0.5..3.0))
        })
        .collect()
}

pub struct ExperimentOutcome {
    /// `(H, run)` per executed configuration; FROST reports `H = 1`.
    pub runs: Vec<(usize, RunResult)>,
    pub theory: String,
    pub classification: Option<ClassificationReport>,
    pub summary: String,
}

impl ExperimentOutcome {
    /// 0 when every run converged, 2 when any ran out of iterations.
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().all(|(_, r)| r.converged()) {
            0
        } else {
            2
        }
    }
}

/// Maps an experiment result to the CLI exit status.
pub fn exit_code(result: &Result<ExperimentOutcome>) -> i32 {
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(Error::BudgetExceeded { .. }) => 2,
        Err(_) => 1,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let net = build_network(&cfg.topology, cfg.agents, cfg.seed)?;
    let weights = WeightMatrix::uniform(&net);
    match &cfg.problem {
        Problem::Quadratic => {
            let objs = random_quadratics(cfg.agents, cfg.dim, cfg.seed)?;
            execute(cfg, Instance::new(weights, objs)?, None)
        }
        Problem::Synthetic => {
            let data = generate_synthetic(cfg.agents, cfg.dim, cfg.samples, cfg.beta, cfg.seed)?;
            execute(cfg, Instance::new(weights, data.objectives)?, Some(data.test))
        }
        Problem::Mushroom(path) => {
            let seed = (!cfg.file_order).then_some(cfg.seed);
            let data = load_mushroom(path, MUSHROOM_TRAIN, cfg.agents, cfg.beta, seed)?;
            execute(cfg, Instance::new(weights, data.objectives)?, Some(data.test))
        }
    }
}

fn run_one<O: LocalObjective>(cfg: &ExperimentConfig, instance: &Instance<O>, h: usize) -> Result<RunResult> {
    match cfg.algorithm {
        Algorithm::Adbb => run_adbb(instance, &cfg.adbb_config(h)),
        Algorithm::Frost => run_frost(instance, &FrostConfig::default_for(instance, cfg.max_iters, cfg.residual_tol)),
    }
}

fn execute<O: LocalObjective>(cfg: &ExperimentConfig, instance: Instance<O>, test: Option<LabeledSet>) -> Result<ExperimentOutcome> {
    let loops: Vec<usize> = match (cfg.algorithm, cfg.sweep.is_empty()) {
        (Algorithm::Frost, _) => vec![1],
        (Algorithm::Adbb, true) => vec![cfg.inner_loops],
        (Algorithm::Adbb, false) => cfg.sweep.clone(),
    };
    let results: Vec<Result<RunResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = loops
            .iter()
            .map(|&h| {
                let inst = &instance;
                scope.spawn(move || run_one(cfg, inst, h))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidConfig("run thread panicked".into()))))
            .collect()
    });
    let runs: Vec<(usize, RunResult)> = loops.iter().copied().zip(results.into_iter().collect::<Result<Vec<_>>>()?).collect();

    let theory = theory_report(cfg, &instance, &runs)?;
    let (first_h, first) = &runs[0];
    let classification = match &test {
        Some(t) => Some(evaluate_classifier(&first.average_iterate(instance.pi()), t)?),
        None => None,
    };

    let mut summary = String::new();
    for (h, run) in &runs {
        let status = match run.status {
            RunStatus::Converged => "converged".to_string(),
            RunStatus::BudgetExceeded { .. } => "budget exceeded".to_string(),
        };
        let last = run.trace.last().expect("trace has the initial record");
        let _ = writeln!(
            summary,
            "H={h} iterations={} residual={:e} grad_evals={} comm_rounds={} status={status}",
            run.iterations(),
            last.residual,
            last.grad_evals,
            last.comm_rounds
        );
    }
    if let Some(c) = &classification {
        let _ = writeln!(summary, "test accuracy (H={first_h}) = {}", c.accuracy());
    }

    if let Some(dir) = &cfg.output {
        write_outputs(dir, cfg, &runs, &theory, classification.as_ref())?;
    }
    Ok(ExperimentOutcome {
        runs,
        theory,
        classification,
        summary,
    })
}

fn theory_report<O: LocalObjective>(cfg: &ExperimentConfig, instance: &Instance<O>, runs: &[(usize, RunResult)]) -> Result<String> {
    let m = instance.agents();
    let info = *instance.info();
    let (h, run) = &runs[0];
    let spec = compute_spectral_info(instance.weights(), *h)?;
    let alpha_cap = 1.0 / (m as f64 * info.mu);
    let mut out = String::new();
    let _ = writeln!(out, "algorithm = {:?}", cfg.algorithm);
    let _ = writeln!(out, "beta = {}", cfg.beta);
    match build_contraction_matrix(&spec, &info, m, *h, alpha_cap) {
        Ok(report) => out.push_str(&report.to_text(&spec, &info)),
        Err(e) => {
            let _ = writeln!(out, "contraction = unavailable ({e})");
        }
    }
    if cfg.theory_check {
        match certified_inner_loops(instance.weights(), &info) {
            Ok((h_cert, _)) => {
                let _ = writeln!(out, "certified_h = {h_cert}");
            }
            Err(e) => {
                let _ = writeln!(out, "certified_h = unavailable ({e})");
            }
        }
        if cfg.algorithm == Algorithm::Adbb && run.trace.len() > 1 {
            let verdicts = verify_contraction_empirically(run, &spec, &info, &cfg.adbb_config(*h))?;
            let held = verdicts.iter().filter(|&&v| v).count();
            let _ = writeln!(out, "empirical_inequality_held = {held}/{}", verdicts.len());
        }
    }
    Ok(out)
}

fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    runs: &[(usize, RunResult)],
    theory: &str,
    classification: Option<&ClassificationReport>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (h, run) in runs {
        let name = if cfg.sweep.is_empty() || cfg.algorithm == Algorithm::Frost {
            "trace.csv".to_string()
        } else {
            format!("trace_H{h}.csv")
        };
        write_trace_csv(&run.trace, BufWriter::new(File::create(dir.join(name))?))?;
    }
    fs::write(dir.join("theory.txt"), theory)?;
    if let Some(c) = classification {
        fs::write(dir.join("classification.txt"), c.to_text())?;
    }
    Ok(())
}
