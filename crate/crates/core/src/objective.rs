//! Local objective functions held privately by each agent, their curvature
//! constants, and the centralized reference solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Strong-convexity and gradient-Lipschitz constants, `0 < mu <= lipschitz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveInfo {
    pub mu: f64,
    pub lipschitz: f64,
}

impl ObjectiveInfo {
    pub fn new(mu: f64, lipschitz: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && lipschitz.is_finite() && mu <= lipschitz) {
            return Err(Error::NotStronglyConvex(format!(
                "need 0 < mu <= L, got mu = {mu}, L = {lipschitz}"
            )));
        }
        Ok(Self { mu, lipschitz })
    }

    /// Constants that hold for every local function at once: the smallest
    /// strong-convexity modulus and the largest Lipschitz constant.
    pub fn uniform<O: LocalObjective>(objectives: &[O]) -> Result<Self> {
        if objectives.is_empty() {
            return Err(Error::InvalidConfig("no objectives".into()));
        }
        let mut mu = f64::INFINITY;
        let mut lip = 0.0_f64;
        for o in objectives {
            let c = o.constants()?;
            mu = mu.min(c.mu);
            lip = lip.max(c.lipschitz);
        }
        Self::new(mu, lip)
    }

    /// Step-size interval `[1/(m·L), 1/(m·μ)]` that BB steps are confined to.
    pub fn step_bounds(&self, agents: usize) -> (f64, f64) {
        let m = agents as f64;
        (1.0 / (m * self.lipschitz), 1.0 / (m * self.mu))
    }

    pub fn condition_number(&self) -> f64 {
        self.lipschitz / self.mu
    }
}

/// A smooth, strongly convex function known only to one agent.
pub trait LocalObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, w: &DVector<f64>) -> f64;

    fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>>;

    fn constants(&self) -> Result<ObjectiveInfo>;
}

impl<T: LocalObjective + ?Sized> LocalObjective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        (**self).value(w)
    }

    fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).gradient(w)
    }

    fn constants(&self) -> Result<ObjectiveInfo> {
        (**self).constants()
    }
}

fn check_input(w: &DVector<f64>, dim: usize, what: &'static str) -> Result<()> {
    if w.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: w.len(),
        });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(what));
    }
    Ok(())
}

/// `log(1 + exp(-t))` without overflow.
pub fn logistic_loss(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-u))` without overflow.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `(1/q) Σ_j log(1 + exp(−b_j c_jᵀ w)) + β/(2m) ‖w‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLocalObjective {
    samples: DMatrix<f64>,
    labels: DVector<f64>,
    beta: f64,
    agents: usize,
}

impl LogisticLocalObjective {
    /// `samples` is `q × n` with one sample per row; labels must be ±1.
    pub fn new(samples: DMatrix<f64>, labels: Vec<f64>, beta: f64, agents: usize) -> Result<Self> {
        let (q, n) = samples.shape();
        if q == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!("empty sample matrix {q}x{n}")));
        }
        if labels.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidConfig(format!("label {bad} is not ±1")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("regularizer beta = {beta}")));
        }
        if agents == 0 {
            return Err(Error::InvalidConfig("agent count must be positive".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("logistic samples"));
        }
        Ok(Self {
            samples,
            labels: DVector::from_vec(labels),
            beta,
            agents,
        })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    fn reg(&self) -> f64 {
        self.beta / self.agents as f64
    }

    /// Largest eigenvalue of `CᵀC` by power iteration.
    pub fn gram_spectral_radius(&self) -> f64 {
        let gram = self.samples.transpose() * &self.samples;
        let n = gram.nrows();
        // Deterministic, non-symmetric start so no eigenvector is missed by sign patterns.
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
        v.normalize_mut();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w = &gram * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let next = w / norm;
            let rayleigh = next.dot(&(&gram * &next));
            let done = (rayleigh - lambda).abs() <= 1e-15 * rayleigh.abs().max(1.0);
            lambda = rayleigh;
            v = next;
            if done {
                break;
            }
        }
        lambda
    }
}

impl LocalObjective for LogisticLocalObjective {
    fn dim(&self) -> usize {
        self.samples.ncols()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        let margins = &self.samples * w;
        let q = self.samples.nrows() as f64;
        let loss: f64 = margins
            .iter()
            .zip(self.labels.iter())
            .map(|(t, b)| logistic_loss(b * t))
            .sum();
        loss / q + 0.5 * self.reg() * w.norm_squared()
    }

    fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_input(w, self.dim(), "logistic gradient")?;
        let q = self.samples.nrows() as f64;
        let mut coeff = &self.samples * w;
        for (c, b) in coeff.iter_mut().zip(self.labels.iter()) {
            *c = -b * sigmoid(-b * *c) / q;
        }
        let mut grad = self.samples.tr_mul(&coeff);
        grad.axpy(self.reg(), w, 1.0);
        Ok(grad)
    }

    fn constants(&self) -> Result<ObjectiveInfo> {
        if self.beta == 0.0 {
            return Err(Error::NotStronglyConvex(
                "logistic loss without regularization".into(),
            ));
        }
        let q = self.samples.nrows() as f64;
        let reg = self.reg();
        ObjectiveInfo::new(reg, self.gram_spectral_radius() / (4.0 * q) + reg)
    }
}

/// `(κ/2) ‖w − b‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLocalObjective {
    target: DVector<f64>,
    curvature: f64,
}

impl QuadraticLocalObjective {
    pub fn new(target: DVector<f64>, curvature: f64) -> Result<Self> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::NotStronglyConvex(format!("curvature {curvature}")));
        }
        if target.is_empty() {
            return Err(Error::InvalidConfig("empty target".into()));
        }
        Ok(Self { target, curvature })
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

impl LocalObjective for QuadraticLocalObjective {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * self.curvature * (w - &self.target).norm_squared()
    }

    fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_input(w, self.dim(), "quadratic gradient")?;
        Ok((w - &self.target) * self.curvature)
    }

    fn constants(&self) -> Result<ObjectiveInfo> {
        ObjectiveInfo::new(self.curvature, self.curvature)
    }
}

/// Gradient of `f = (1/m) Σ fᵢ`.
pub fn global_gradient<O: LocalObjective>(objectives: &[O], w: &DVector<f64>) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(w.len());
    for o in objectives {
        g += o.gradient(w)?;
    }
    Ok(g / objectives.len() as f64)
}

pub fn global_value<O: LocalObjective>(objectives: &[O], w: &DVector<f64>) -> f64 {
    objectives.iter().map(|o| o.value(w)).sum::<f64>() / objectives.len() as f64
}

const CENTRALIZED_BUDGET: usize = 200_000;

/// Minimizes `f = (1/m) Σ fᵢ` from `w = 0` until `‖∇f‖₂ <= tol`.
///
/// Barzilai-Borwein steps clamped to `[1/L, 1/μ]` of the averaged function do
/// the work; whenever the gradient norm climbs far above the best seen so far
/// the solver restarts from the best point with one plain `1/L` step.
pub fn solve_centralized<O: LocalObjective>(objectives: &[O], tol: f64) -> Result<DVector<f64>> {
    let first = objectives
        .first()
        .ok_or_else(|| Error::InvalidConfig("no objectives".into()))?;
    let n = first.dim();
    if let Some(bad) = objectives.iter().find(|o| o.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    let m = objectives.len() as f64;
    let (mut mu, mut lip) = (0.0, 0.0);
    for o in objectives {
        let c = o.constants()?;
        mu += c.mu / m;
        lip += c.lipschitz / m;
    }
    let plain = 1.0 / lip;

    let mut w = DVector::zeros(n);
    let mut g = global_gradient(objectives, &w)?;
    let mut best = (g.norm(), w.clone(), g.clone());
    let mut step = plain;
    for _ in 0..CENTRALIZED_BUDGET {
        let gnorm = g.norm();
        if gnorm <= tol {
            return Ok(w);
        }
        if gnorm < best.0 {
            best = (gnorm, w.clone(), g.clone());
        } else if !gnorm.is_finite() || gnorm > 1e3 * best.0 {
            w = best.1.clone();
            g = best.2.clone();
            step = plain;
        }
        let w_next = &w - &g * step;
        let g_next = global_gradient(objectives, &w_next)?;
        let s = &w_next - &w;
        let v = &g_next - &g;
        let sv = s.dot(&v);
        step = if sv > 0.0 {
            (s.norm_squared() / sv).clamp(plain, 1.0 / mu)
        } else {
            plain
        };
        w = w_next;
        g = g_next;
    }
    Err(Error::BudgetExceeded {
        budget: CENTRALIZED_BUDGET,
        residual: best.0,
    })
}
