//! Dense, stacked-vector form of the ADBB iteration:
//!
//! ```text
//! x⁺ = (A^H ⊗ I)(x − (D_α ⊗ I) z)
//! ỹ⁺ = A^H ỹ
//! z⁺ = (A^H ⊗ I)(z + (ŷ⁺)⁻¹∇F(x⁺) − ŷ⁻¹∇F(x))
//! ```
//!
//! where `ŷ = diag(ỹ) ⊗ I`. It only exists to cross-check the message-passing
//! implementation.

use nalgebra::{DMatrix, DVector};

use super::{bb_step_size, AdbbConfig, AgentState, Instance, StepRule};
use crate::error::Result;
use crate::objective::LocalObjective;

#[derive(Debug, Clone, PartialEq)]
pub struct CompactState {
    /// Stacked `[x¹; …; xᵐ]`, length `m·n`.
    pub x: DVector<f64>,
    /// Row `i` is agent `i`'s eigenvector estimate.
    pub y: DMatrix<f64>,
    pub z: DVector<f64>,
    /// Stacked `∇F(x)`.
    pub grad: DVector<f64>,
    pub alpha: DVector<f64>,
}

fn stack(blocks: impl Iterator<Item = DVector<f64>>) -> DVector<f64> {
    let parts: Vec<f64> = blocks.flat_map(|b| b.iter().copied().collect::<Vec<_>>()).collect();
    DVector::from_vec(parts)
}

fn block(v: &DVector<f64>, i: usize, n: usize) -> DVector<f64> {
    v.rows(i * n, n).into_owned()
}

impl CompactState {
    pub fn from_agents(states: &[AgentState]) -> Self {
        let m = states.len();
        Self {
            x: stack(states.iter().map(|s| s.x.clone())),
            y: DMatrix::from_fn(m, m, |i, j| states[i].y[j]),
            z: stack(states.iter().map(|s| s.z.clone())),
            grad: stack(states.iter().map(|s| s.grad.clone())),
            alpha: DVector::from_iterator(m, states.iter().map(|s| s.alpha)),
        }
    }

    /// Largest absolute entry difference in `x`, `y`, `z` and `α`.
    pub fn max_deviation(&self, states: &[AgentState]) -> f64 {
        let other = Self::from_agents(states);
        [
            (&self.x - &other.x).amax(),
            (&self.y - &other.y).amax(),
            (&self.z - &other.z).amax(),
            (&self.alpha - &other.alpha).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn inverse_diagonal(y: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let inv = DVector::from_iterator(y.nrows(), y.diagonal().iter().map(|d| 1.0 / d));
    DMatrix::from_diagonal(&inv).kronecker(&DMatrix::identity(n, n))
}

pub fn compact_step<O: LocalObjective>(state: &CompactState, instance: &Instance<O>, cfg: &AdbbConfig) -> Result<CompactState> {
    let m = instance.agents();
    let n = instance.dim();
    let eye = DMatrix::<f64>::identity(n, n);
    let a_h = instance.weights().power(cfg.inner_loops);
    let mix = a_h.kronecker(&eye);
    let d_alpha = DMatrix::from_diagonal(&state.alpha).kronecker(&eye);

    let x = &mix * (&state.x - &d_alpha * &state.z);
    let y = &a_h * &state.y;
    let grad = stack(
        instance
            .objectives()
            .iter()
            .enumerate()
            .map(|(i, o)| o.gradient(&block(&x, i, n)))
            .collect::<Result<Vec<_>>>()?
            .into_iter(),
    );
    let z = &mix * (&state.z + inverse_diagonal(&y, n) * &grad - inverse_diagonal(&state.y, n) * &state.grad);

    let alpha = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let s = block(&x, i, n) - block(&state.x, i, n);
            let v = block(&grad, i, n) - block(&state.grad, i, n);
            match cfg.step_rule {
                StepRule::Fixed => state.alpha[i],
                StepRule::Bb(variant) => {
                    bb_step_size(&s, &v, m, variant, instance.info(), cfg.safeguard_eps, state.alpha[i])
                }
            }
        }),
    );
    Ok(CompactState { x, y, z, grad, alpha })
}
