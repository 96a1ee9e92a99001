use std::io::Write;

use nalgebra::DVector;

use super::data::LabeledSet;
use crate::adbb::TraceRecord;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "k",
    "residual",
    "consensus_err",
    "tracking_err",
    "alpha_min",
    "alpha_max",
    "grad_evals",
    "comm_rounds",
];

/// Rows are the true class (+1 first), columns the predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassificationReport {
    pub confusion: [[usize; 2]; 2],
}

impl ClassificationReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct = self.confusion[0][0] + self.confusion[1][1];
        correct as f64 / self.total().max(1) as f64
    }

    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        format!(
            "true\\pred +1 -1\n+1 {} {}\n-1 {} {}\naccuracy = {}\n",
            c[0][0],
            c[0][1],
            c[1][0],
            c[1][1],
            self.accuracy()
        )
    }
}

/// Predicts `sign(cᵀw)` with ties going to +1.
pub fn evaluate_classifier(w: &DVector<f64>, test: &LabeledSet) -> Result<ClassificationReport> {
    if w.len() != test.samples.ncols() {
        return Err(Error::DimensionMismatch {
            expected: test.samples.ncols(),
            got: w.len(),
        });
    }
    let scores = &test.samples * w;
    let mut confusion = [[0usize; 2]; 2];
    for (score, &label) in scores.iter().zip(&test.labels) {
        let row = usize::from(label < 0.0);
        let col = usize::from(*score < 0.0);
        confusion[row][col] += 1;
    }
    Ok(ClassificationReport { confusion })
}

/// Writes the trace with floats in shortest round-trip form.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            r.residual.to_string(),
            r.consensus_err.to_string(),
            r.tracking_err.to_string(),
            r.alpha_min.to_string(),
            r.alpha_max.to_string(),
            r.grad_evals.to_string(),
            r.comm_rounds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn set() -> LabeledSet {
        LabeledSet {
            samples: DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 2.0, 1.0, -1.0, 0.5, 0.0, -3.0, -2.0, -2.0]),
            labels: vec![1.0, 1.0, -1.0, -1.0, 1.0],
        }
    }

    #[test]
    fn zero_weights_predict_positive() {
        let r = evaluate_classifier(&DVector::zeros(2), &set()).unwrap();
        assert_eq!(r.confusion, [[3, 0], [2, 0]]);
        assert!((r.accuracy() - 0.6).abs() < 1e-15);
        assert_eq!(r.total(), 5);
    }

    #[test]
    fn sign_flip_swaps_columns() {
        let w = DVector::from_vec(vec![1.0, 0.3]);
        let a = evaluate_classifier(&w, &set()).unwrap();
        let b = evaluate_classifier(&(-w), &set()).unwrap();
        for row in 0..2 {
            assert_eq!(a.confusion[row][0], b.confusion[row][1]);
            assert_eq!(a.confusion[row][1], b.confusion[row][0]);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(evaluate_classifier(&DVector::zeros(3), &set()).is_err());
    }
}
