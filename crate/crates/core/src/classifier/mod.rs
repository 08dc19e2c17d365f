//! Gaussian-kernel SVM trained by sequential minimal optimization, with
//! one-vs-one multiclass voting and confusion-matrix evaluation.

mod model_io;
mod multiclass;
mod smo;

pub use model_io::{load_model, save_model, MODEL_FORMAT_HEADER};
pub use multiclass::{evaluate, train_multiclass, ConfusionMatrix, Evaluation, MulticlassModel, PairModel};
pub use smo::{kkt_violations, solve_smo, SmoSolution};

use crate::bitmeasures::FeatureVector;
use crate::error::{Error, Result};

/// Class identifier.
pub type Label = i64;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: Label,
}

impl Sample {
    pub fn new(features: impl Into<FeatureVector>, label: Label) -> Self {
        Self {
            features: features.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// RBF width in `exp(-gamma * |x - y|^2)`.
    pub gamma: f64,
    /// Box constraint.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Iteration budget, in units of one pair update per training point.
    pub max_passes: usize,
    /// Tie-breaking order of the working-set scan.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0 / 9.0,
            c: 10.0,
            tol: 1e-3,
            max_passes: 200,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("C", self.c), ("tol", self.tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidConfig("max_passes must be positive".into()));
        }
        Ok(())
    }
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    /// `alpha * y`.
    pub coef: f64,
    pub x: FeatureVector,
}

/// Binary decision function `f(x) = sum(coef * K(x_n, x)) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support: Vec<SupportVector>,
    pub bias: f64,
    pub gamma: f64,
}

impl SvmModel {
    pub fn predict_score(&self, x: &FeatureVector) -> f64 {
        self.support
            .iter()
            .map(|sv| sv.coef * rbf_kernel(sv.x.as_slice(), x.as_slice(), self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// `+1` when the score is non-negative, else `-1`.
    pub fn predict_label(&self, x: &FeatureVector) -> Label {
        if self.predict_score(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Trains on samples labelled -1 / +1.
pub fn train_binary(samples: &[Sample], config: &SvmConfig) -> Result<SvmModel> {
    let solution = solve_smo(samples, config)?;
    Ok(solution.into_model(samples, config.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        let x = [0.3, -1.0, 2.0];
        assert_eq!(rbf_kernel(&x, &x, 0.7), 1.0);
        let y = [1.3, -1.0, 2.0];
        assert!((rbf_kernel(&x, &y, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric_and_bounded(
            x in proptest::collection::vec(-5.0f64..5.0, 9),
            y in proptest::collection::vec(-5.0f64..5.0, 9),
            gamma in 0.01f64..3.0,
        ) {
            let a = rbf_kernel(&x, &y, gamma);
            prop_assert_eq!(a, rbf_kernel(&y, &x, gamma));
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
