use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::WeightMatrix;

/// One synchronous mixing round: every agent replaces its value with the
/// weighted sum of its own and its in-neighbors' values from the previous
/// round.
pub fn mix_once(values: &[DVector<f64>], weights: &WeightMatrix) -> Vec<DVector<f64>> {
    (0..values.len())
        .map(|i| {
            let mut acc = DVector::zeros(values[i].len());
            for &(j, a) in weights.row(i) {
                acc.axpy(a, &values[j], 1.0);
            }
            acc
        })
        .collect()
}

/// `rounds` successive mixing rounds, i.e. `(A^H ⊗ I) x` computed by message
/// passing. Each round reads a frozen snapshot of the previous one.
pub fn multi_consensus(values: &[DVector<f64>], weights: &WeightMatrix, rounds: usize) -> Result<Vec<DVector<f64>>> {
    if values.len() != weights.agents() {
        return Err(Error::DimensionMismatch {
            expected: weights.agents(),
            got: values.len(),
        });
    }
    if let Some(first) = values.first() {
        if let Some(bad) = values.iter().find(|v| v.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: bad.len(),
            });
        }
    }
    let mut current = values.to_vec();
    for _ in 0..rounds {
        current = mix_once(&current, weights);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedNetwork;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_values(m: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)))
            .collect()
    }

    #[test]
    fn zero_rounds_is_identity() {
        let w = WeightMatrix::uniform(&DirectedNetwork::ring(4).unwrap());
        let values = random_values(4, 3, 1);
        assert_eq!(multi_consensus(&values, &w, 0).unwrap(), values);
    }

    #[test]
    fn agreement_is_a_fixed_point() {
        let net = DirectedNetwork::random_strongly_connected(6, 0.3, 9).unwrap();
        let w = WeightMatrix::uniform(&net);
        let common = DVector::from_vec(vec![1.5, -2.0]);
        let values = vec![common.clone(); 6];
        for h in [1, 3, 7] {
            for v in multi_consensus(&values, &w, h).unwrap() {
                assert!((v - &common).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn matches_dense_matrix_power() {
        let net = DirectedNetwork::random_strongly_connected(5, 0.25, 4).unwrap();
        let w = WeightMatrix::uniform(&net);
        let values = random_values(5, 4, 2);
        let out = multi_consensus(&values, &w, 3).unwrap();
        // oracle: stack as an m×n matrix and multiply by A³ formed densely
        let a = w.dense();
        let cube = a * a * a;
        let stacked = DMatrix::from_fn(5, 4, |i, c| values[i][c]);
        let expected = cube * stacked;
        for i in 0..5 {
            for c in 0..4 {
                assert!((out[i][c] - expected[(i, c)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let w = WeightMatrix::uniform(&DirectedNetwork::ring(3).unwrap());
        assert!(multi_consensus(&random_values(2, 2, 0), &w, 1).is_err());
        let mut ragged = random_values(3, 2, 0);
        ragged[1] = DVector::zeros(5);
        assert!(multi_consensus(&ragged, &w, 1).is_err());
    }
}
