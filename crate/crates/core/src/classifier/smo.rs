use crate::error::{Error, Result};
use crate::rng::SplitMix64;

use super::{rbf_kernel, Sample, SupportVector, SvmConfig, SvmModel};

/// Smallest curvature used along a pair direction.
const TAU: f64 = 1e-12;

/// Dual solution of the soft-margin problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SmoSolution {
    pub fn into_model(self, samples: &[Sample], gamma: f64) -> SvmModel {
        let support = samples
            .iter()
            .zip(&self.alphas)
            .filter(|(_, &a)| a > 0.0)
            .map(|(s, &a)| SupportVector {
                coef: a * s.label as f64,
                x: s.features,
            })
            .collect();
        SvmModel {
            support,
            bias: self.bias,
            gamma,
        }
    }
}

/// Solves the SVM dual by SMO with maximal-violating-pair working-set
/// selection (second-order choice of the second index). The stopping rule
/// `max_up - min_low < tol` guarantees every training point satisfies its
/// KKT condition within `tol` once the bias is placed between the bounds.
/// Candidates are scanned in a seeded permutation, so ties among equally
/// violating indices are broken by `config.seed`.
pub fn solve_smo(samples: &[Sample], config: &SvmConfig) -> Result<SmoSolution> {
    config.validate()?;
    for (n, s) in samples.iter().enumerate() {
        if s.label != 1 && s.label != -1 {
            return Err(Error::InvalidBinaryLabel(s.label));
        }
        if !s.features.is_finite() {
            return Err(Error::NonFinite(n));
        }
    }
    if !(samples.iter().any(|s| s.label == 1) && samples.iter().any(|s| s.label == -1)) {
        return Err(Error::SingleClass);
    }

    let n = samples.len();
    let c = config.c;
    let y: Vec<f64> = samples.iter().map(|s| s.label as f64).collect();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf_kernel(samples[i].features.as_slice(), samples[j].features.as_slice(), config.gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let k = |i: usize, j: usize| kernel[i * n + j];

    // Seeded scan order.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(config.seed);
    for t in (1..n).rev() {
        let j = (rng.next_u64() % (t as u64 + 1)) as usize;
        order.swap(t, j);
    }

    let mut alpha = vec![0.0; n];
    // Gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let max_iter = config.max_passes.saturating_mul(n.max(1)).max(1000);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        let mut g_min = f64::INFINITY;
        for &t in &order {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
            }
        }
        if i_sel == usize::MAX || g_max - g_min < config.tol {
            converged = true;
            break;
        }
        let i = i_sel;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for &t in &order {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let a = (k(i, i) + k(t, t) - 2.0 * k(i, t)).max(TAU);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
        iterations += 1;
    }

    // Bias: mean over free vectors, else the midpoint of the feasible interval.
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_n += 1;
        } else {
            let at_upper = alpha[t] >= c;
            // Points that may only move up bound b from below, and vice versa.
            if (y[t] > 0.0) == at_upper {
                ub = ub.min(v);
            } else {
                lb = lb.max(v);
            }
        }
    }
    let bias = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        match (lb.is_finite(), ub.is_finite()) {
            (true, true) => 0.5 * (lb + ub),
            (true, false) => lb,
            (false, true) => ub,
            (false, false) => 0.0,
        }
    };

    Ok(SmoSolution {
        alphas: alpha,
        bias,
        iterations,
        converged,
    })
}

/// Indices of training points violating their KKT condition by more than `tol`
/// under the model's decision function.
pub fn kkt_violations(samples: &[Sample], alphas: &[f64], model: &SvmModel, c: f64, tol: f64) -> Vec<usize> {
    samples
        .iter()
        .zip(alphas)
        .enumerate()
        .filter(|(_, (s, &a))| {
            let margin = s.label as f64 * model.predict_score(&s.features);
            if a <= 0.0 {
                margin < 1.0 - tol
            } else if a >= c {
                margin > 1.0 + tol
            } else {
                (margin - 1.0).abs() > tol
            }
        })
        .map(|(n, _)| n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{train_binary, FeatureVector};
    use super::*;

    fn padded(a: f64, b: f64) -> FeatureVector {
        let mut v = [0.0; 9];
        v[0] = a;
        v[1] = b;
        FeatureVector(v)
    }

    fn xor() -> Vec<Sample> {
        vec![
            Sample::new(padded(0.0, 0.0), -1),
            Sample::new(padded(1.0, 1.0), -1),
            Sample::new(padded(0.0, 1.0), 1),
            Sample::new(padded(1.0, 0.0), 1),
        ]
    }

    fn cfg(gamma: f64, c: f64) -> SvmConfig {
        SvmConfig {
            gamma,
            c,
            ..SvmConfig::default()
        }
    }

    #[test]
    fn separable_pair() {
        let samples = vec![Sample::new(padded(-1.0, 0.0), -1), Sample::new(padded(1.0, 0.0), 1)];
        let model = train_binary(&samples, &cfg(1.0, 10.0)).unwrap();
        for s in &samples {
            assert_eq!(model.predict_label(&s.features), s.label);
        }
    }

    #[test]
    fn xor_is_separated_and_kkt_holds() {
        let samples = xor();
        let config = cfg(1.0, 10.0);
        let sol = solve_smo(&samples, &config).unwrap();
        assert!(sol.converged);
        let alphas = sol.alphas.clone();
        let model = sol.into_model(&samples, config.gamma);
        for s in &samples {
            assert_eq!(model.predict_label(&s.features), s.label);
        }
        assert!(kkt_violations(&samples, &alphas, &model, config.c, config.tol).is_empty());
        let balance: f64 = alphas.iter().zip(&samples).map(|(a, s)| a * s.label as f64).sum();
        assert!(balance.abs() <= 1e-6 * config.c);
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin() {
        let samples = xor();
        let config = cfg(1.0, 10.0);
        let sol = solve_smo(&samples, &config).unwrap();
        let alphas = sol.alphas.clone();
        let model = sol.into_model(&samples, config.gamma);
        for (s, &a) in samples.iter().zip(&alphas) {
            if a > 0.0 && a < config.c {
                let m = s.label as f64 * model.predict_score(&s.features);
                assert!((m - 1.0).abs() <= config.tol, "margin {m}");
            }
        }
        let far = padded(1e3, -1e3);
        assert!((model.predict_score(&far) - model.bias).abs() < 1e-12);
    }

    #[test]
    fn duplicated_training_set_predicts_the_same() {
        let mut samples = Vec::new();
        for n in 0..10 {
            let t = n as f64 * 0.1;
            samples.push(Sample::new(padded(-2.0 + t, t), -1));
            samples.push(Sample::new(padded(2.0 - t, -t), 1));
        }
        let config = cfg(0.5, 10.0);
        let once = train_binary(&samples, &config).unwrap();
        let doubled: Vec<Sample> = samples.iter().chain(&samples).cloned().collect();
        let twice = train_binary(&doubled, &config).unwrap();
        for n in 0..50 {
            let probe = padded(-3.0 + n as f64 * 0.12, (n % 7) as f64 * 0.3 - 1.0);
            assert_eq!(once.predict_label(&probe), twice.predict_label(&probe));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let config = SvmConfig::default();
        let one_class = vec![Sample::new(padded(0.0, 0.0), 1), Sample::new(padded(1.0, 0.0), 1)];
        assert_eq!(solve_smo(&one_class, &config), Err(Error::SingleClass));
        let bad_label = vec![Sample::new(padded(0.0, 0.0), 2), Sample::new(padded(1.0, 0.0), -1)];
        assert_eq!(solve_smo(&bad_label, &config), Err(Error::InvalidBinaryLabel(2)));
        let nan = vec![Sample::new(padded(f64::NAN, 0.0), 1), Sample::new(padded(1.0, 0.0), -1)];
        assert_eq!(solve_smo(&nan, &config), Err(Error::NonFinite(0)));
        assert!(solve_smo(&xor(), &cfg(0.0, 1.0)).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = solve_smo(&xor(), &SvmConfig { seed: 4, ..cfg(1.0, 10.0) }).unwrap();
        let b = solve_smo(&xor(), &SvmConfig { seed: 4, ..cfg(1.0, 10.0) }).unwrap();
        assert_eq!(a, b);
    }
}
