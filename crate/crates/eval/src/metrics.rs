//! FID, KID and IS over feature matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::EvalError;
use crate::features::FeatureSet;

fn check_pair(a: &FeatureSet, b: &FeatureSet) -> Result<(), EvalError> {
    if a.d != b.d {
        return Err(EvalError::DimensionMismatch(a.d, b.d));
    }
    for s in [a, b] {
        if s.n < 2 {
            return Err(EvalError::TooFewSamples(s.n));
        }
    }
    Ok(())
}

/// Sample mean and covariance with the 1/(n−1) normalisation.
pub fn mean_and_covariance(set: &FeatureSet) -> (DVector<f64>, DMatrix<f64>) {
    let x = set.matrix();
    let mean = x.row_mean().transpose();
    let mut centred = x;
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centred.transpose() * &centred / (set.n as f64 - 1.0);
    (mean, cov)
}

fn symmetric_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to the two sets:
/// `‖μa − μb‖² + Tr(Σa + Σb − 2 (Σa Σb)^½)`. The trace of the cross term
/// is taken as `Tr((Σa^½ Σb Σa^½)^½)`, which is symmetric positive
/// semidefinite; negative eigenvalues from round-off are clamped to zero.
pub fn compute_fid(a: &FeatureSet, b: &FeatureSet) -> Result<f64, EvalError> {
    check_pair(a, b)?;
    let (mu_a, cov_a) = mean_and_covariance(a);
    let (mu_b, cov_b) = mean_and_covariance(b);
    let sa = symmetric_sqrt(&cov_a);
    let inner = &sa * &cov_b * &sa;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let mean_term = (mu_a - mu_b).norm_squared();
    Ok((mean_term + cov_a.trace() + cov_b.trace() - 2.0 * cross).max(0.0))
}

/// Polynomial kernel `(xᵀy / d + 1)³`.
pub fn kid_kernel(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() as f64;
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    (dot / d + 1.0).powi(3)
}

/// Unbiased MMD² with the cubic polynomial kernel; within-set diagonal
/// terms are excluded.
pub fn compute_kid(a: &FeatureSet, b: &FeatureSet) -> Result<f64, EvalError> {
    check_pair(a, b)?;
    let within = |s: &FeatureSet| {
        let mut sum = 0.0;
        for i in 0..s.n {
            for j in i + 1..s.n {
                sum += kid_kernel(s.row(i), s.row(j));
            }
        }
        2.0 * sum / (s.n as f64 * (s.n as f64 - 1.0))
    };
    let mut cross = 0.0;
    for i in 0..a.n {
        for j in 0..b.n {
            cross += kid_kernel(a.row(i), b.row(j));
        }
    }
    Ok(within(a) + within(b) - 2.0 * cross / (a.n as f64 * b.n as f64))
}

/// `exp(E_x KL(p(y|x) ‖ p(y)))` over class-probability rows.
pub fn compute_is(probs: &[Vec<f64>]) -> Result<f64, EvalError> {
    let c = probs.first().map_or(0, Vec::len);
    if probs.is_empty() || c == 0 {
        return Err(EvalError::NotADistribution(0));
    }
    for (i, row) in probs.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.len() != c || row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(EvalError::NotADistribution(i));
        }
    }
    let n = probs.len() as f64;
    let marginal: Vec<f64> = (0..c).map(|k| probs.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let mean_kl = probs
        .iter()
        .map(|row| {
            row.iter()
                .zip(&marginal)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, m)| p * (p / m).ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        / n;
    Ok(mean_kl.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_at_zero_is_one() {
        assert_eq!(kid_kernel(&[0.0; 4], &[0.0; 4]), 1.0);
    }

    #[test]
    fn covariance_normalisation() {
        let s = FeatureSet::from_rows("s", &[vec![0.0], vec![2.0]]).unwrap();
        let (m, c) = mean_and_covariance(&s);
        assert_eq!(m[0], 1.0);
        assert_eq!(c[(0, 0)], 2.0);
    }

    #[test]
    fn errors() {
        let a = FeatureSet::from_rows("a", &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let b = FeatureSet::from_rows("b", &[vec![0.0], vec![1.0]]).unwrap();
        let one = FeatureSet::from_rows("c", &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(compute_fid(&a, &b), Err(EvalError::DimensionMismatch(2, 1)));
        assert_eq!(compute_kid(&a, &one), Err(EvalError::TooFewSamples(1)));
        assert_eq!(compute_is(&[vec![0.5, 0.6]]), Err(EvalError::NotADistribution(0)));
    }
}
