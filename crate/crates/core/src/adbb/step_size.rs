use nalgebra::DVector;

use crate::objective::ObjectiveInfo;

/// Which Barzilai-Borwein quotient an agent evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BbVariant {
    /// `(1/m) sᵀs / sᵀv`, the long step.
    #[default]
    Bb1,
    /// `(1/m) sᵀv / vᵀv`, the short step.
    Bb2,
}

/// Unclamped BB quotient, or `None` when the denominator is degenerate
/// (at most `eps` times the numerator scale, which also covers `s = 0`).
pub fn bb_raw(s: &DVector<f64>, v: &DVector<f64>, agents: usize, variant: BbVariant, eps: f64) -> Option<f64> {
    let m = agents as f64;
    let ss = s.norm_squared();
    let sv = s.dot(v);
    let vv = v.norm_squared();
    let (num, den) = match variant {
        BbVariant::Bb1 => (ss, sv),
        BbVariant::Bb2 => (sv, vv),
    };
    if !(num > 0.0) || den <= eps * num || !den.is_finite() {
        return None;
    }
    Some(num / den / m)
}

/// Safeguarded, clamped BB step size for one agent.
///
/// Degenerate quotients fall back to `fallback` (the agent's previous step);
/// the result is always clamped to `[1/(m·L), 1/(m·μ)]`.
pub fn bb_step_size(
    s: &DVector<f64>,
    v: &DVector<f64>,
    agents: usize,
    variant: BbVariant,
    info: &ObjectiveInfo,
    eps: f64,
    fallback: f64,
) -> f64 {
    let (lo, hi) = info.step_bounds(agents);
    bb_raw(s, v, agents, variant, eps)
        .unwrap_or(fallback)
        .clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    const EPS: f64 = 1e-14;

    #[test]
    fn unit_curvature_gives_unit_step() {
        let s = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let info = ObjectiveInfo::new(1.0, 1.0).unwrap();
        for variant in [BbVariant::Bb1, BbVariant::Bb2] {
            assert_eq!(bb_raw(&s, &s, 1, variant, EPS), Some(1.0));
            assert_eq!(bb_step_size(&s, &s, 1, variant, &info, EPS, 0.5), 1.0);
        }
    }

    #[test]
    fn scaled_curvature_gives_inverse_over_m() {
        let s = DVector::from_vec(vec![1.0, 2.0]);
        let v = &s * 4.0;
        let got = bb_raw(&s, &v, 5, BbVariant::Bb1, EPS).unwrap();
        assert!((got - 1.0 / 20.0).abs() < 1e-16);
    }

    #[test]
    fn degenerate_pairs_use_fallback_then_clamp() {
        let info = ObjectiveInfo::new(0.5, 2.0).unwrap();
        let zero = DVector::zeros(3);
        let s = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(bb_raw(&zero, &zero, 2, BbVariant::Bb1, EPS), None);
        assert_eq!(bb_raw(&s, &zero, 2, BbVariant::Bb1, EPS), None);
        assert_eq!(bb_raw(&s, &zero, 2, BbVariant::Bb2, EPS), None);
        assert_eq!(bb_step_size(&zero, &zero, 2, BbVariant::Bb1, &info, EPS, 0.6), 0.6);
        // fallback outside [1/(mL), 1/(mμ)] = [0.25, 1] is clamped
        assert_eq!(bb_step_size(&zero, &zero, 2, BbVariant::Bb1, &info, EPS, 7.0), 1.0);
        let negative = DVector::from_vec(vec![-1.0, 0.0, 0.0]);
        assert_eq!(bb_raw(&s, &negative, 2, BbVariant::Bb1, EPS), None);
    }

    fn spd(n: usize, diag: &[f64], angle: f64) -> DMatrix<f64> {
        // rotate diag(d) in the (0,1) plane so Q is not diagonal
        let mut rot = DMatrix::identity(n, n);
        rot[(0, 0)] = angle.cos();
        rot[(0, 1)] = -angle.sin();
        rot[(1, 0)] = angle.sin();
        rot[(1, 1)] = angle.cos();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        &rot * d * rot.transpose()
    }

    proptest! {
        #[test]
        fn bb_quotients_lie_between_inverse_extreme_eigenvalues(
            d in proptest::collection::vec(0.1f64..20.0, 4),
            s in proptest::collection::vec(-5.0f64..5.0, 4),
            angle in 0.0f64..3.0,
            m in 1usize..20,
        ) {
            let s = DVector::from_vec(s);
            prop_assume!(s.norm() > 1e-3);
            let q = spd(4, &d, angle);
            let eig = q.clone().symmetric_eigenvalues();
            let (lo, hi) = (eig.min(), eig.max());
            let v = &q * &s;
            let mf = m as f64;
            for variant in [BbVariant::Bb1, BbVariant::Bb2] {
                let a = bb_raw(&s, &v, m, variant, EPS).unwrap();
                prop_assert!(a >= 1.0 / (mf * hi) * (1.0 - 1e-10));
                prop_assert!(a <= 1.0 / (mf * lo) * (1.0 + 1e-10));
            }
            // the short step never exceeds the long step
            let long = bb_raw(&s, &v, m, BbVariant::Bb1, EPS).unwrap();
            let short = bb_raw(&s, &v, m, BbVariant::Bb2, EPS).unwrap();
            prop_assert!(short <= long * (1.0 + 1e-12));
        }
    }
}
