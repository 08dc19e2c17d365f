use rayon::prelude::*;

use crate::bitmeasures::{FeatureVector, Scaler};
use crate::error::{Error, Result};

use super::{train_binary, Label, Sample, SvmConfig, SvmModel};

/// Binary model for one label pair; a non-negative score votes for `first`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub first: Label,
    pub second: Label,
    pub model: SvmModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    /// Ascending.
    pub labels: Vec<Label>,
    pub scaler: Scaler,
    /// One per unordered pair, in `(labels[a], labels[b])`, `a < b` order.
    pub pairs: Vec<PairModel>,
}

impl MulticlassModel {
    /// Votes over all pair models on the scaled input; ties go to the
    /// smallest label.
    pub fn predict_class(&self, raw: &FeatureVector) -> Label {
        let x = self.scaler.apply(raw);
        let votes = self.votes_scaled(&x);
        let mut best = 0;
        for (n, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = n;
            }
        }
        self.labels[best]
    }

    /// Vote count per label (same order as `labels`) for a scaled input.
    pub fn votes_scaled(&self, x: &FeatureVector) -> Vec<usize> {
        let mut votes = vec![0usize; self.labels.len()];
        for pair in &self.pairs {
            let winner = if pair.model.predict_score(x) >= 0.0 {
                pair.first
            } else {
                pair.second
            };
            votes[self.index_of(winner).expect("pair labels belong to the model")] += 1;
        }
        votes
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }
}

/// Fits the scaler on all of `dataset`, then one binary model per label pair.
pub fn train_multiclass(dataset: &[Sample], config: &SvmConfig) -> Result<MulticlassModel> {
    config.validate()?;
    let mut labels: Vec<Label> = dataset.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::TooFewClasses(labels.len()));
    }
    if let Some(n) = dataset.iter().position(|s| !s.features.is_finite()) {
        return Err(Error::NonFinite(n));
    }
    let raw: Vec<FeatureVector> = dataset.iter().map(|s| s.features).collect();
    let scaler = Scaler::fit(&raw)?;
    let scaled: Vec<Sample> = dataset
        .iter()
        .map(|s| Sample::new(scaler.apply(&s.features), s.label))
        .collect();

    let pair_labels: Vec<(Label, Label)> = labels
        .iter()
        .enumerate()
        .flat_map(|(a, &la)| labels[a + 1..].iter().map(move |&lb| (la, lb)))
        .collect();
    let pairs = pair_labels
        .par_iter()
        .map(|&(first, second)| {
            let subset: Vec<Sample> = scaled
                .iter()
                .filter(|s| s.label == first || s.label == second)
                .map(|s| Sample::new(s.features, if s.label == first { 1 } else { -1 }))
                .collect();
            Ok(PairModel {
                first,
                second,
                model: train_binary(&subset, config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel { labels, scaler, pairs })
}

/// Row-normalised: entry `(i, j)` is the fraction of true class `i`
/// predicted as class `j`. Rows of classes without test samples are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<Label>,
    pub counts: Vec<Vec<usize>>,
    pub rates: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.labels.len()).map(|i| self.rates[i][i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
}

pub fn evaluate(model: &MulticlassModel, test: &[Sample]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let n = model.labels.len();
    let truth = test
        .iter()
        .map(|s| model.index_of(s.label).ok_or(Error::UnknownLabel(s.label)))
        .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<usize> = test
        .par_iter()
        .map(|s| {
            let label = model.predict_class(&s.features);
            model.index_of(label).expect("predictions are model labels")
        })
        .collect();
    let mut counts = vec![vec![0usize; n]; n];
    for (&t, &p) in truth.iter().zip(&predicted) {
        counts[t][p] += 1;
    }
    let rates = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect();
    let correct: usize = (0..n).map(|i| counts[i][i]).sum();
    Ok(Evaluation {
        matrix: ConfusionMatrix {
            labels: model.labels.clone(),
            counts,
            rates,
        },
        accuracy: correct as f64 / test.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::SupportVector;

    fn stub_pair(first: Label, second: Label, bias: f64) -> PairModel {
        PairModel {
            first,
            second,
            model: SvmModel {
                support: Vec::<SupportVector>::new(),
                bias,
                gamma: 1.0,
            },
        }
    }

    #[test]
    fn ties_go_to_the_smallest_label() {
        // Labels 2 and 5 each win one pair; 9 wins none.
        let model = MulticlassModel {
            labels: vec![2, 5, 9],
            scaler: Scaler::identity(),
            pairs: vec![stub_pair(2, 5, -1.0), stub_pair(2, 9, 1.0), stub_pair(5, 9, -1.0)],
        };
        let x = FeatureVector::zeros();
        assert_eq!(model.votes_scaled(&x), vec![1, 1, 1]);
        assert_eq!(model.predict_class(&x), 2);

        // 2 and 5 both collect two votes.
        let tied = MulticlassModel {
            labels: vec![2, 5, 9, 11],
            scaler: Scaler::identity(),
            pairs: vec![
                stub_pair(2, 5, -1.0),
                stub_pair(2, 9, 1.0),
                stub_pair(2, 11, 1.0),
                stub_pair(5, 9, 1.0),
                stub_pair(5, 11, -1.0),
                stub_pair(9, 11, 1.0),
            ],
        };
        assert_eq!(tied.votes_scaled(&x), vec![2, 2, 1, 1]);
        assert_eq!(tied.predict_class(&x), 2);
    }

    fn line_samples(labels: &[Label]) -> Vec<Sample> {
        labels
            .iter()
            .flat_map(|&l| {
                (0..6).map(move |n| {
                    let mut v = [0.0; 9];
                    v[0] = l as f64 * 10.0 + n as f64 * 0.1;
                    v[1] = (n % 3) as f64;
                    Sample::new(v, l)
                })
            })
            .collect()
    }

    #[test]
    fn pair_counts() {
        let cfg = SvmConfig::default();
        let two = train_multiclass(&line_samples(&[0, 1]), &cfg).unwrap();
        assert_eq!(two.pairs.len(), 1);
        for s in line_samples(&[0, 1]) {
            let scaled = two.scaler.apply(&s.features);
            let by_sign = if two.pairs[0].model.predict_score(&scaled) >= 0.0 { 0 } else { 1 };
            assert_eq!(two.predict_class(&s.features), by_sign);
        }
        let eight = train_multiclass(&line_samples(&[0, 1, 2, 3, 4, 5, 6, 7]), &cfg).unwrap();
        assert_eq!(eight.pairs.len(), 28);
        assert_eq!(
            train_multiclass(&line_samples(&[3]), &cfg),
            Err(Error::TooFewClasses(1))
        );
    }

    #[test]
    fn evaluation_examples() {
        let cfg = SvmConfig::default();
        let data = line_samples(&[0, 1, 2]);
        let model = train_multiclass(&data, &cfg).unwrap();
        let ev = evaluate(&model, &data).unwrap();
        assert_eq!(ev.accuracy, 1.0);
        for (i, row) in ev.matrix.rates.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }

        let wrong = vec![Sample::new(data[0].features, 2)];
        let ev = evaluate(&model, &wrong).unwrap();
        assert_eq!(ev.accuracy, 0.0);
        assert_eq!(ev.matrix.rates[2], vec![1.0, 0.0, 0.0]);
        assert_eq!(ev.matrix.rates[0], vec![0.0, 0.0, 0.0]);

        let unknown = vec![Sample::new(data[0].features, 7)];
        assert_eq!(evaluate(&model, &unknown), Err(Error::UnknownLabel(7)));
        assert!(evaluate(&model, &[]).is_err());
    }
}
