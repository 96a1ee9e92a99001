//! Centralized checks of the linear-convergence argument: the seven
//! constants, the 3×3 contraction matrix, its certificate vector, the
//! admissible step window and the inner-loop lower bound. Nothing here is on
//! the algorithm's data path; it needs π and σ, which agents cannot know.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use crate::adbb::{AdbbConfig, RunResult};
use crate::error::{Error, Result};
use crate::graph::{compute_spectral_info, SpectralInfo, WeightMatrix};
use crate::objective::ObjectiveInfo;

/// Slack added to the right-hand side of the empirical inequality.
pub const EMPIRICAL_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub agents: usize,
    pub inner_loops: usize,
    pub sigma: f64,
    pub sigma_h: f64,
    /// `w₁ … w₇`.
    pub w: [f64; 7],
    /// Largest step the matrix was built for.
    pub alpha_max: f64,
    /// Optimality-gap contraction `1 − μ/L` used on the diagonal.
    pub lambda: f64,
    pub matrix: Matrix3<f64>,
    pub rho: f64,
    /// The same matrix and radius with `1 − μ/(m·L)` on the diagonal.
    pub lambda_alt: f64,
    pub matrix_alt: Matrix3<f64>,
    pub rho_alt: f64,
    pub c: Vector3<f64>,
    /// `(0, upper)`: largest steps for which `M·c < c` holds.
    pub alpha_window: (f64, f64),
    pub varpi: f64,
    pub h_min: usize,
    /// `ρ(M) < 1` and `M·c < c` componentwise.
    pub satisfied: bool,
}

/// `w₁ … w₇` for the given network constants.
pub fn contraction_constants(spec: &SpectralInfo, info: &ObjectiveInfo, agents: usize) -> [f64; 7] {
    let m = agents as f64;
    let l = info.lipschitz;
    let (y, yhat) = (spec.y_inv_sup, spec.y_norm_sup);
    let inv_sqrt_min = spec.pi_min.powf(-0.5);
    [
        spec.pi_max.sqrt() * m * l,
        inv_sqrt_min * m * l,
        inv_sqrt_min * yhat,
        spec.vartheta.sqrt() * y * l * spec.p1,
        m * y * yhat * l * l,
        inv_sqrt_min * y * yhat * l,
        info.mu / l,
    ]
}

/// The contraction matrix for step bound `alpha`, mixing factor `sigma_h` and
/// optimality contraction `lambda`.
pub fn contraction_matrix(w: &[f64; 7], sigma_h: f64, alpha: f64, lambda: f64) -> Matrix3<f64> {
    let s = sigma_h;
    Matrix3::new(
        s + alpha * s * w[0],
        alpha * s * w[0],
        alpha * s,
        alpha * w[1],
        lambda,
        alpha * w[2],
        s * w[3] + alpha * s * w[4],
        alpha * s * w[4],
        s + alpha * s * w[5],
    )
}

pub fn spectral_radius(matrix: &Matrix3<f64>) -> f64 {
    matrix
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Certificate vector: `c₁ = c₃ = 1` and `c₂` sized so the optimality-gap
/// row holds with room to spare for every step up to `1/(m·μ)`.
pub fn certificate_vector(w: &[f64; 7], info: &ObjectiveInfo, agents: usize) -> Vector3<f64> {
    let alpha_cap = 1.0 / (agents as f64 * info.mu);
    let c2 = 2.0 * alpha_cap * (w[1] + w[2]) / w[6];
    Vector3::new(1.0, c2, 1.0)
}

/// Upper end of the admissible step window for `c` at mixing factor `sigma_h`.
pub fn step_window_upper(w: &[f64; 7], c: &Vector3<f64>, sigma_h: f64) -> f64 {
    let (c1, c2, c3) = (c[0], c[1], c[2]);
    let first = if sigma_h > 0.0 {
        (1.0 - sigma_h) * c1 / (sigma_h * (w[0] * c1 + w[0] * c2 + c3))
    } else {
        f64::INFINITY
    };
    let second = w[6] * c2 / (w[1] * c1 + w[2] * c3);
    let third = if sigma_h > 0.0 {
        ((1.0 - sigma_h) * c3 - sigma_h * w[3] * c1) / (sigma_h * (w[4] * c1 + w[4] * c2 + w[5] * c3))
    } else {
        f64::INFINITY
    };
    first.min(second).min(third)
}

/// Threshold on `σ^H` below which the whole interval `[1/(m·L), 1/(m·μ)]`
/// is admissible.
pub fn varpi(w: &[f64; 7], c: &Vector3<f64>, info: &ObjectiveInfo, agents: usize) -> f64 {
    let mmu = agents as f64 * info.mu;
    let (c1, c2, c3) = (c[0], c[1], c[2]);
    let first = mmu * c1 / ((w[0] + mmu) * c1 + w[0] * c2 + c3);
    let second = mmu * c3 / ((w[4] + mmu * w[3]) * c1 + w[4] * c2 + (w[5] + mmu) * c3);
    first.min(second)
}

/// Smallest `H` with `σ^H < ϖ`: `⌈ln ϖ / ln σ⌉`, plus one when the ratio is
/// itself a positive integer.
pub fn inner_loops_for(varpi: f64, sigma: f64) -> usize {
    if sigma <= 0.0 || varpi >= 1.0 {
        return 1;
    }
    let ratio = varpi.ln() / sigma.ln();
    let nearest = ratio.round();
    let h = if nearest >= 1.0 && (ratio - nearest).abs() <= 1e-12 * nearest {
        nearest + 1.0
    } else {
        ratio.ceil()
    };
    h.max(1.0) as usize
}

pub fn build_contraction_matrix(
    spec: &SpectralInfo,
    info: &ObjectiveInfo,
    agents: usize,
    inner_loops: usize,
    alpha_max: f64,
) -> Result<ContractionReport> {
    if inner_loops == 0 {
        return Err(Error::InvalidConfig("inner loop count H must be >= 1".into()));
    }
    let sigma_h = spec.sigma.powi(inner_loops as i32);
    if !(sigma_h < 1.0) || !alpha_max.is_finite() || alpha_max <= 0.0 {
        return Err(Error::InfeasibleC { sigma_h });
    }
    let w = contraction_constants(spec, info, agents);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InfeasibleC { sigma_h });
    }
    let lambda = 1.0 - w[6];
    let lambda_alt = 1.0 - info.mu / (agents as f64 * info.lipschitz);
    let matrix = contraction_matrix(&w, sigma_h, alpha_max, lambda);
    let matrix_alt = contraction_matrix(&w, sigma_h, alpha_max, lambda_alt);
    let rho = spectral_radius(&matrix);
    let c = certificate_vector(&w, info, agents);
    let mc = matrix * c;
    let satisfied = rho < 1.0 && (0..3).all(|i| mc[i] < c[i]);
    let varpi = varpi(&w, &c, info, agents);
    Ok(ContractionReport {
        agents,
        inner_loops,
        sigma: spec.sigma,
        sigma_h,
        w,
        alpha_max,
        lambda,
        matrix,
        rho,
        lambda_alt,
        rho_alt: spectral_radius(&matrix_alt),
        matrix_alt,
        c,
        alpha_window: (0.0, step_window_upper(&w, &c, sigma_h)),
        varpi,
        h_min: inner_loops_for(varpi, spec.sigma),
        satisfied,
    })
}

/// Inner-loop lower bound using the constants in `spec`, which were computed
/// for `spec.inner_loops`.
pub fn min_inner_loops(spec: &SpectralInfo, info: &ObjectiveInfo, agents: usize) -> usize {
    let w = contraction_constants(spec, info, agents);
    let c = certificate_vector(&w, info, agents);
    inner_loops_for(varpi(&w, &c, info, agents), spec.sigma)
}

/// Smallest self-consistent bound: the constants depend on `H`, so the bound
/// is recomputed at its own output until it no longer grows.
pub fn certified_inner_loops(weights: &WeightMatrix, info: &ObjectiveInfo) -> Result<(usize, SpectralInfo)> {
    let m = weights.agents();
    let mut h = 1;
    for _ in 0..64 {
        let spec = compute_spectral_info(weights, h)?;
        let needed = min_inner_loops(&spec, info, m);
        if needed <= h {
            return Ok((h, spec));
        }
        h = needed;
    }
    Err(Error::InfeasibleC {
        sigma_h: compute_spectral_info(weights, h)?.sigma_pow(h),
    })
}

/// True when `1/(m·μ)` lies strictly inside the admissible window.
pub fn check_step_window(report: &ContractionReport, agents: usize, info: &ObjectiveInfo) -> bool {
    1.0 / (agents as f64 * info.mu) < report.alpha_window.1
}

/// Evaluates `t_{k+1} ≤ M_k t_k + G_k g_k` along a trace, one verdict per
/// transition `k → k+1`.
///
/// `M_k` uses the largest step seen in the run and the actual contraction
/// `max(|1 − m·πᵀα_k·μ|, |1 − m·πᵀα_k·L|)` of the averaged iterate; the
/// gradient column decays like `σ^{kH}` and scales with `‖∇F(x_k)‖₂`.
pub fn verify_contraction_empirically(
    run: &RunResult,
    spec: &SpectralInfo,
    info: &ObjectiveInfo,
    cfg: &AdbbConfig,
) -> Result<Vec<bool>> {
    if run.trace.len() < 2 {
        return Err(Error::TraceIncomplete(format!(
            "need at least two iterates, got {}",
            run.trace.len()
        )));
    }
    if spec.inner_loops != cfg.inner_loops {
        return Err(Error::InvalidConfig(format!(
            "spectral constants were computed for H = {}, run used H = {}",
            spec.inner_loops, cfg.inner_loops
        )));
    }
    let agents = run.final_states.len();
    let m = agents as f64;
    let h = cfg.inner_loops;
    let sigma_h = spec.sigma_pow(h);
    let w = contraction_constants(spec, info, agents);
    let alpha = run.trace.iter().map(|r| r.alpha_max).fold(0.0, f64::max);
    let (y, yhat, l) = (spec.y_inv_sup, spec.y_norm_sup, info.lipschitz);
    let gk = Vector3::new(
        alpha * (m * spec.pi_max).sqrt() * yhat * y * y * sigma_h,
        alpha * m.sqrt() * y * y * yhat,
        2.0 * (m / spec.pi_min).sqrt() * y * y * sigma_h + alpha * m.sqrt() * yhat * yhat * y.powi(3) * l * sigma_h,
    );

    let t = |k: usize| {
        let r = &run.trace[k];
        Vector3::new(r.consensus_err, r.diagnostics.opt_gap, r.tracking_err)
    };
    Ok((0..run.trace.len() - 1)
        .map(|k| {
            let rec = &run.trace[k];
            let theta = m * rec.diagnostics.pi_alpha;
            let lambda = (1.0 - theta * info.mu).abs().max((1.0 - theta * l).abs());
            let mk = contraction_matrix(&w, sigma_h, alpha, lambda);
            let decay = spec.sigma.powi((k * h) as i32) * rec.diagnostics.grad_norm;
            let bound = mk * t(k) + gk * decay;
            let next = t(k + 1);
            (0..3).all(|i| next[i] <= bound[i] + EMPIRICAL_SLACK)
        })
        .collect())
}

/// Least-squares fit of `ln(value)` against `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl GeometricFit {
    /// Per-iteration contraction factor `e^slope`.
    pub fn rate(&self) -> f64 {
        self.slope.exp()
    }
}

/// Fits `ln(values[i]) ≈ intercept + slope·ks[i]`; zero or negative values
/// are skipped. `None` with fewer than two usable points.
pub fn fit_geometric(ks: &[f64], values: &[f64]) -> Option<GeometricFit> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(k, v)| (*k, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(GeometricFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

impl ContractionReport {
    /// Flat `key = value` block.
    pub fn to_text(&self, spec: &SpectralInfo, info: &ObjectiveInfo) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("agents", self.agents.to_string());
        kv("inner_loops", self.inner_loops.to_string());
        kv("mu", info.mu.to_string());
        kv("lipschitz", info.lipschitz.to_string());
        kv("pi_max", spec.pi_max.to_string());
        kv("pi_min", spec.pi_min.to_string());
        kv("vartheta", spec.vartheta.to_string());
        kv("sigma", self.sigma.to_string());
        kv("sigma_h", self.sigma_h.to_string());
        kv("y_inv_sup", spec.y_inv_sup.to_string());
        kv("y_norm_sup", spec.y_norm_sup.to_string());
        kv("p1", spec.p1.to_string());
        for (i, w) in self.w.iter().enumerate() {
            kv(&format!("w{}", i + 1), w.to_string());
        }
        kv("alpha_max", self.alpha_max.to_string());
        kv("lambda", self.lambda.to_string());
        kv("rho", self.rho.to_string());
        kv("lambda_alt", self.lambda_alt.to_string());
        kv("rho_alt", self.rho_alt.to_string());
        kv("c", format!("{} {} {}", self.c[0], self.c[1], self.c[2]));
        kv("alpha_window_upper", self.alpha_window.1.to_string());
        kv("step_window_ok", check_step_window(self, self.agents, info).to_string());
        kv("varpi", self.varpi.to_string());
        kv("h_min", self.h_min.to_string());
        kv("satisfied", self.satisfied.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adbb::{run_adbb, run_adbb_from, Instance};
    use crate::graph::DirectedNetwork;
    use crate::objective::QuadraticLocalObjective;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Real roots of the characteristic polynomial by Cardano / trigonometric
    /// formula; complex pairs contribute their modulus.
    fn cardano_radius(a: &Matrix3<f64>) -> f64 {
        let tr = a.trace();
        let c2 = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)])
            + (a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)])
            + (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)]);
        let det = a.determinant();
        // λ³ − tr λ² + c2 λ − det = 0; substitute λ = t + tr/3
        let p = c2 - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * c2 / 3.0 - det;
        let shift = tr / 3.0;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc > 0.0 {
            let sq = disc.sqrt();
            let u = (-q / 2.0 + sq).cbrt();
            let v = (-q / 2.0 - sq).cbrt();
            let real = u + v + shift;
            let re = -(u + v) / 2.0 + shift;
            let im = (u - v) * 3f64.sqrt() / 2.0;
            real.abs().max((re * re + im * im).sqrt())
        } else {
            let r = (-p / 3.0).sqrt();
            let phi = if r == 0.0 { 0.0 } else { (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0).acos() };
            (0..3)
                .map(|j| (2.0 * r * ((phi + 2.0 * std::f64::consts::PI * j as f64) / 3.0).cos() + shift).abs())
                .fold(0.0, f64::max)
        }
    }

    fn three_cycle_instance() -> Instance<QuadraticLocalObjective> {
        let net = DirectedNetwork::new(3, &[(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
        let objs = vec![
            QuadraticLocalObjective::new(DVector::from_vec(vec![1.0, 0.0]), 1.0).unwrap(),
            QuadraticLocalObjective::new(DVector::from_vec(vec![-1.0, 2.0]), 1.5).unwrap(),
            QuadraticLocalObjective::new(DVector::from_vec(vec![0.5, -1.0]), 2.0).unwrap(),
        ];
        Instance::new(WeightMatrix::uniform(&net), objs).unwrap()
    }

    #[test]
    fn inner_loop_formula_examples() {
        assert_eq!(inner_loops_for(0.25, 0.5), 3);
        assert_eq!(inner_loops_for(0.5, 0.9), 7);
        assert_eq!(inner_loops_for(0.3, 0.0), 1);
        assert_eq!(inner_loops_for(1.5, 0.5), 1);
    }

    #[test]
    fn single_agent_radius_is_centralized_rate() {
        let w = WeightMatrix::from_dense(DMatrix::identity(1, 1)).unwrap();
        let spec = compute_spectral_info(&w, 1).unwrap();
        assert_eq!(spec.sigma, 0.0);
        let info = ObjectiveInfo::new(0.2, 1.0).unwrap();
        let report = build_contraction_matrix(&spec, &info, 1, 1, 1.0 / info.mu).unwrap();
        assert!((report.rho - 0.8).abs() < 1e-12);
        for (i, j) in [(0, 0), (0, 1), (0, 2), (2, 0), (2, 1), (2, 2)] {
            assert_eq!(report.matrix[(i, j)], 0.0);
        }
        for h in [1, 4, 20] {
            let r = build_contraction_matrix(&spec, &info, 1, h, 1.0 / info.mu).unwrap();
            assert!(check_step_window(&r, 1, &info));
        }
        assert_eq!(min_inner_loops(&spec, &info, 1), 1);
    }

    #[test]
    fn huge_h_leaves_the_diagonal() {
        let inst = three_cycle_instance();
        let spec = compute_spectral_info(inst.weights(), 200).unwrap();
        let info = *inst.info();
        let report = build_contraction_matrix(&spec, &info, 3, 200, 1e-9).unwrap();
        let expected = report.sigma_h.max(1.0 - info.mu / info.lipschitz);
        assert!((report.rho - expected).abs() < 1e-6);
    }

    #[test]
    fn radius_matches_cardano_oracle() {
        let inst = three_cycle_instance();
        let info = *inst.info();
        for h in [1, 3, 8, 30] {
            let spec = compute_spectral_info(inst.weights(), h).unwrap();
            for alpha in [1e-4, 1e-2, 0.3] {
                let r = build_contraction_matrix(&spec, &info, 3, h, alpha).unwrap();
                let oracle = cardano_radius(&r.matrix);
                assert!((r.rho - oracle).abs() < 1e-12 * oracle.max(1.0), "h={h} alpha={alpha}: {} vs {oracle}", r.rho);
            }
        }
    }

    #[test]
    fn certified_h_satisfies_everything() {
        let inst = three_cycle_instance();
        let info = *inst.info();
        let (h, spec) = certified_inner_loops(inst.weights(), &info).unwrap();
        assert_eq!(spec.inner_loops, h);
        let report = build_contraction_matrix(&spec, &info, 3, h, 1.0 / (3.0 * info.mu)).unwrap();
        assert!(report.sigma_h < report.varpi);
        assert!(report.satisfied);
        assert!(report.rho < 1.0);
        let mc = report.matrix * report.c;
        assert!((0..3).all(|i| mc[i] < report.c[i]));
        assert!(check_step_window(&report, 3, &info));
    }

    #[test]
    fn poor_mixing_with_one_loop_fails_the_window() {
        let net = DirectedNetwork::ring(12).unwrap();
        let w = WeightMatrix::uniform(&net);
        let spec = compute_spectral_info(&w, 1).unwrap();
        assert!(spec.sigma > 0.9);
        let info = ObjectiveInfo::new(0.1, 1.0).unwrap();
        let report = build_contraction_matrix(&spec, &info, 12, 1, 1.0 / (12.0 * 0.1)).unwrap();
        assert!(!check_step_window(&report, 12, &info));
        assert!(!report.satisfied);
    }

    #[test]
    fn bound_shrinks_as_mu_grows() {
        let net = DirectedNetwork::random_strongly_connected(6, 0.2, 5).unwrap();
        let spec = compute_spectral_info(&WeightMatrix::uniform(&net), 3).unwrap();
        let mut last = usize::MAX;
        for mu in [0.01, 0.03, 0.1, 0.3, 1.0, 2.0] {
            let h = min_inner_loops(&spec, &ObjectiveInfo::new(mu, 2.0).unwrap(), 6);
            assert!(h <= last, "mu={mu}: {h} > {last}");
            last = h;
        }
    }

    #[test]
    fn empirical_inequality_on_quadratic_instance() {
        let inst = three_cycle_instance();
        let info = *inst.info();
        let (h, spec) = certified_inner_loops(inst.weights(), &info).unwrap();
        let cfg = AdbbConfig {
            inner_loops: h,
            max_iters: 300,
            residual_tol: 1e-12,
            ..AdbbConfig::default()
        };
        let run = run_adbb(&inst, &cfg).unwrap();
        let verdicts = verify_contraction_empirically(&run, &spec, &info, &cfg).unwrap();
        assert!(verdicts.iter().all(|&v| v));

        let norms: Vec<f64> = run
            .trace
            .iter()
            .map(|r| Vector3::new(r.consensus_err, r.diagnostics.opt_gap, r.tracking_err).norm())
            .collect();
        let ks: Vec<f64> = (0..norms.len()).map(|k| k as f64).collect();
        let fit = fit_geometric(&ks, &norms).unwrap();
        let report = build_contraction_matrix(&spec, &info, 3, h, 1.0 / (3.0 * info.mu)).unwrap();
        assert!(fit.rate() <= report.rho.max(report.sigma_h) + 0.05);
    }

    #[test]
    fn fixed_point_run_has_zero_errors() {
        let target = DVector::from_vec(vec![1.0, -1.0]);
        let objs: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&c| QuadraticLocalObjective::new(target.clone(), c).unwrap())
            .collect();
        let net = DirectedNetwork::ring(3).unwrap();
        let inst = Instance::new(WeightMatrix::uniform(&net), objs).unwrap();
        let cfg = AdbbConfig {
            inner_loops: 2,
            max_iters: 5,
            residual_tol: -1.0,
            ..AdbbConfig::default()
        };
        let run = run_adbb_from(&inst, &cfg, &vec![target.clone(); 3]).unwrap();
        let spec = compute_spectral_info(inst.weights(), 2).unwrap();
        let verdicts = verify_contraction_empirically(&run, &spec, inst.info(), &cfg).unwrap();
        assert!(verdicts.iter().all(|&v| v));
    }

    #[test]
    fn short_trace_is_rejected() {
        let inst = three_cycle_instance();
        let cfg = AdbbConfig {
            inner_loops: 1,
            max_iters: 0,
            ..AdbbConfig::default()
        };
        let run = run_adbb(&inst, &cfg).unwrap();
        let spec = compute_spectral_info(inst.weights(), 1).unwrap();
        assert!(matches!(
            verify_contraction_empirically(&run, &spec, inst.info(), &cfg),
            Err(Error::TraceIncomplete(_))
        ));
    }

    #[test]
    fn geometric_fit_recovers_rate() {
        let ks: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let vals: Vec<f64> = ks.iter().map(|k| 3.0 * 0.7f64.powf(*k)).collect();
        let fit = fit_geometric(&ks, &vals).unwrap();
        assert!((fit.rate() - 0.7).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn certificate_and_radius_agree(
            seed in 0u64..200,
            m in 2usize..7,
            mu in 0.05f64..1.0,
            ratio in 1.0f64..20.0,
            h in 1usize..40,
            alpha_frac in 0.01f64..1.0,
        ) {
            let net = DirectedNetwork::random_strongly_connected(m, 0.3, seed).unwrap();
            let spec = compute_spectral_info(&WeightMatrix::uniform(&net), h).unwrap();
            let info = ObjectiveInfo::new(mu, mu * ratio).unwrap();
            let alpha = alpha_frac / (m as f64 * mu);
            let r = build_contraction_matrix(&spec, &info, m, h, alpha).unwrap();
            prop_assert!(r.matrix.iter().all(|&v| v >= 0.0));
            let mc = r.matrix * r.c;
            if (0..3).all(|i| mc[i] < r.c[i]) {
                prop_assert!(r.rho < 1.0);
            }
            if r.satisfied {
                prop_assert!(r.rho < 1.0);
            }
            // H at or above the bound always certifies the full interval
            if h >= r.h_min {
                prop_assert!(r.satisfied);
                prop_assert!(check_step_window(&r, m, &info));
            }
        }
    }
}
