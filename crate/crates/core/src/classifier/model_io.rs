//! Line-oriented text persistence for multiclass models.
//!
//! ```text
//! stegmetrics-svm v1
//! labels <l1> <l2> ...
//! means <9 reals>
//! stddevs <9 reals>
//! pair <labelA> <labelB> <gamma> <b> <n_sv>
//! <alpha_y> <9 reals>          (n_sv lines)
//! ...
//! ```
//!
//! Reals are written with 17 significant digits so that a reload is exact.

use std::fmt::Write as _;

use crate::bitmeasures::{FeatureVector, Scaler, FEATURE_DIM};
use crate::error::{Error, Result};

use super::{Label, MulticlassModel, PairModel, SupportVector, SvmModel};

pub const MODEL_FORMAT_HEADER: &str = "stegmetrics-svm v1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_reals(values: &[f64]) -> String {
    values.iter().map(|&v| real(v)).collect::<Vec<_>>().join(" ")
}

pub fn save_model(model: &MulticlassModel) -> String {
    let mut out = String::new();
    let labels: Vec<String> = model.labels.iter().map(Label::to_string).collect();
    let _ = writeln!(out, "{MODEL_FORMAT_HEADER}");
    let _ = writeln!(out, "labels {}", labels.join(" "));
    let _ = writeln!(out, "means {}", join_reals(&model.scaler.means));
    let _ = writeln!(out, "stddevs {}", join_reals(&model.scaler.stddevs));
    for pair in &model.pairs {
        let m = &pair.model;
        let _ = writeln!(
            out,
            "pair {} {} {} {} {}",
            pair.first,
            pair.second,
            real(m.gamma),
            real(m.bias),
            m.support.len()
        );
        for sv in &m.support {
            let _ = writeln!(out, "{} {}", real(sv.coef), join_reals(sv.x.as_slice()));
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn parse_reals<'a>(tokens: impl Iterator<Item = &'a str>) -> Result<Vec<f64>> {
    tokens
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number {t:?}"))))
        .collect()
}

fn keyed_line<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines.next().ok_or_else(|| bad(format!("missing {key} line")))?;
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(key) {
        return Err(bad(format!("expected {key} line, got {line:?}")));
    }
    Ok(tokens.collect())
}

fn nine(values: Vec<f64>, what: &str) -> Result<[f64; FEATURE_DIM]> {
    values
        .try_into()
        .map_err(|v: Vec<f64>| bad(format!("{what}: expected {FEATURE_DIM} values, got {}", v.len())))
}

pub fn load_model(text: &str) -> Result<MulticlassModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == MODEL_FORMAT_HEADER => {}
        other => return Err(bad(format!("unrecognised header {other:?}"))),
    }
    let labels = keyed_line(&mut lines, "labels")?
        .into_iter()
        .map(|t| t.parse::<Label>().map_err(|_| bad(format!("bad label {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if labels.len() < 2 || labels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("labels must be at least 2, strictly ascending"));
    }
    let means = nine(parse_reals(keyed_line(&mut lines, "means")?.into_iter())?, "means")?;
    let stddevs = nine(parse_reals(keyed_line(&mut lines, "stddevs")?.into_iter())?, "stddevs")?;

    let mut pairs = Vec::new();
    while let Some(line) = lines.next() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 6 || tokens[0] != "pair" {
            return Err(bad(format!("expected pair line, got {line:?}")));
        }
        let label = |t: &str| t.parse::<Label>().map_err(|_| bad(format!("bad label {t:?}")));
        let (first, second) = (label(tokens[1])?, label(tokens[2])?);
        let head = parse_reals(tokens[3..5].iter().copied())?;
        let n_sv: usize = tokens[5].parse().map_err(|_| bad("bad support-vector count"))?;
        let mut support = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            let row = lines.next().ok_or_else(|| bad("missing support vector line"))?;
            let values = parse_reals(row.split_whitespace())?;
            if values.len() != FEATURE_DIM + 1 {
                return Err(bad(format!("support vector line has {} values", values.len())));
            }
            support.push(SupportVector {
                coef: values[0],
                x: FeatureVector(nine(values[1..].to_vec(), "support vector")?),
            });
        }
        pairs.push(PairModel {
            first,
            second,
            model: SvmModel {
                support,
                bias: head[1],
                gamma: head[0],
            },
        });
    }
    let expected = labels.len() * (labels.len() - 1) / 2;
    if pairs.len() != expected {
        return Err(bad(format!("expected {expected} pair models, found {}", pairs.len())));
    }
    let model = MulticlassModel {
        labels,
        scaler: Scaler { means, stddevs },
        pairs,
    };
    for p in &model.pairs {
        if model.index_of(p.first).is_none() || model.index_of(p.second).is_none() {
            return Err(bad(format!("pair ({}, {}) uses unknown labels", p.first, p.second)));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{train_multiclass, Sample, SvmConfig};

    fn model() -> MulticlassModel {
        let samples: Vec<Sample> = (0..24)
            .map(|n| {
                let l = (n % 3) as Label;
                let v: [f64; 9] = std::array::from_fn(|d| l as f64 * 1.7 + ((n * 7 + d * 3) % 11) as f64 / 13.0);
                Sample::new(v, l)
            })
            .collect();
        train_multiclass(&samples, &SvmConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let text = save_model(&m);
        assert!(text.starts_with("stegmetrics-svm v1\nlabels 0 1 2\nmeans "));
        let loaded = load_model(&text).unwrap();
        assert_eq!(loaded, m);
        assert_eq!(save_model(&loaded), text);
    }

    #[test]
    fn rejects_damaged_files() {
        let text = save_model(&model());
        assert!(load_model("").is_err());
        assert!(load_model(&text.replacen("v1", "v9", 1)).is_err());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(load_model(&truncated).is_err());
        assert!(load_model(&text.replacen("means", "meens", 1)).is_err());
    }
}
