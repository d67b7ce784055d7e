//! Scoring detections against ground truth, plus descriptive statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::detect::Label;
use crate::graph::DirectedGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvaluateError {
    #[error("label sets differ: {missing_in_truth} predicted id(s) lack truth (e.g. {example_missing_truth:?}), {missing_in_prediction} truth id(s) lack a prediction (e.g. {example_missing_prediction:?})")]
    NodeSetMismatch {
        missing_in_truth: usize,
        missing_in_prediction: usize,
        example_missing_truth: Vec<String>,
        example_missing_prediction: Vec<String>,
    },
    #[error("bin width must be at least 1")]
    ZeroBinWidth,
}

/// 2×2 counts with zombie as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The matrix obtained by swapping the roles of prediction and truth.
    pub fn transpose(&self) -> Self {
        ConfusionMatrix { tp: self.tp, fn_: self.fp, fp: self.fn_, tn: self.tn }
    }
}

/// Counts `(truth, predicted)` pairs over the common node set. Both maps must
/// cover exactly the same ids.
pub fn confusion<K: Ord + Display>(
    predicted: &BTreeMap<K, Label>,
    truth: &BTreeMap<K, Label>,
) -> Result<ConfusionMatrix, EvaluateError> {
    let missing_truth: Vec<&K> = predicted.keys().filter(|k| !truth.contains_key(k)).collect();
    let missing_prediction: Vec<&K> = truth.keys().filter(|k| !predicted.contains_key(k)).collect();
    if !missing_truth.is_empty() || !missing_prediction.is_empty() {
        let sample = |ids: &[&K]| ids.iter().take(5).map(|k| k.to_string()).collect();
        return Err(EvaluateError::NodeSetMismatch {
            missing_in_truth: missing_truth.len(),
            missing_in_prediction: missing_prediction.len(),
            example_missing_truth: sample(&missing_truth),
            example_missing_prediction: sample(&missing_prediction),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (key, &p) in predicted {
        match (truth[key], p) {
            (Label::Zombie, Label::Zombie) => cm.tp += 1,
            (Label::Zombie, Label::Normal) => cm.fn_ += 1,
            (Label::Normal, Label::Zombie) => cm.fp += 1,
            (Label::Normal, Label::Normal) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// A ratio that is undefined when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Defined(f64),
    Undefined,
}

impl Metric {
    fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Defined(v) => serializer.serialize_f64(*v),
            Metric::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSet {
    pub accuracy: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let precision = Metric::ratio(cm.tp, cm.tp + cm.fp);
    let recall = Metric::ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Metric::Defined(p), Metric::Defined(r)) if p + r > 0.0 => Metric::Defined(2.0 * p * r / (p + r)),
        _ => Metric::Undefined,
    };
    MetricSet { accuracy: Metric::ratio(cm.tp + cm.tn, cm.total()), precision, recall, f1 }
}

/// Zombie count per region, sorted by count (descending) then region name.
/// Zombies whose region is unknown count under `"unknown"`.
pub fn region_distribution<'a>(zombie_regions: impl IntoIterator<Item = Option<&'a str>>) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for region in zombie_regions {
        let region = region.map(str::trim).filter(|r| !r.is_empty()).unwrap_or("unknown");
        *counts.entry(region).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(r, c)| (r.to_string(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Histogram of total degree (in + out). Only nonempty bins are listed, as
/// `(lower bound, count)` in increasing order; counts sum to the node count.
pub fn degree_histogram(g: &DirectedGraph, bin_width: u64) -> Result<Vec<(u64, usize)>, EvaluateError> {
    if bin_width == 0 {
        return Err(EvaluateError::ZeroBinWidth);
    }
    let mut bins: BTreeMap<u64, usize> = BTreeMap::new();
    for u in g.nodes() {
        let (din, dout) = g.degrees(u);
        let degree = (din + dout) as u64;
        *bins.entry(degree / bin_width * bin_width).or_default() += 1;
    }
    Ok(bins.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, InputArc};
    use proptest::prelude::*;

    fn labels(zombies: &[bool]) -> BTreeMap<u32, Label> {
        zombies
            .iter()
            .enumerate()
            .map(|(i, &z)| (i as u32, if z { Label::Zombie } else { Label::Normal }))
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let truth = labels(&[true, false, true, false, false, true, false, false, false, true]);
        let cm = confusion(&truth, &truth).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        let m = metrics(&cm);
        assert_eq!(m.accuracy, Metric::Defined(1.0));
        assert_eq!(m.f1, Metric::Defined(1.0));
    }

    #[test]
    fn all_predicted_normal() {
        let truth = labels(&[true, true, true, false, false, false, false, false, false, false]);
        let predicted = labels(&[false; 10]);
        let cm = confusion(&predicted, &truth).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(0, 3, 0, 7));
        let m = metrics(&cm);
        assert_eq!(m.precision, Metric::Undefined);
        assert_eq!(m.recall, Metric::Defined(0.0));
        assert_eq!(m.f1, Metric::Undefined);
    }

    #[test]
    fn all_wrong_has_zero_accuracy() {
        let cm = confusion(&labels(&[true, false, false]), &labels(&[false, true, true])).unwrap();
        assert_eq!(metrics(&cm).accuracy, Metric::Defined(0.0));
    }

    #[test]
    fn labelled_sample_arithmetic() {
        let cm = ConfusionMatrix::new(41, 17, 9, 33);
        assert_eq!(cm.total(), 100);
        let m = metrics(&cm);
        assert_eq!(m.accuracy, Metric::Defined(0.74));
        assert_eq!(m.precision, Metric::Defined(0.82));
        assert!((m.recall.value().unwrap() - 41.0 / 58.0).abs() < 1e-15);
        assert!((m.recall.value().unwrap() - 0.7069).abs() < 1e-4);
    }

    #[test]
    fn mismatch_lists_ids() {
        let err = confusion(&labels(&[true, false]), &labels(&[true])).unwrap_err();
        match err {
            EvaluateError::NodeSetMismatch { missing_in_truth, example_missing_truth, .. } => {
                assert_eq!(missing_in_truth, 1);
                assert_eq!(example_missing_truth, vec!["1".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undefined_serializes_as_string() {
        let m = metrics(&ConfusionMatrix::new(0, 0, 0, 4));
        let json = serde_json::to_value(m).unwrap();
        assert_eq!(json["precision"], "undefined");
        assert_eq!(json["accuracy"], 1.0);
    }

    #[test]
    fn regions() {
        let zombies = [Some("Beijing"), Some("Shanghai"), Some("Beijing"), Some("Beijing")];
        assert_eq!(
            region_distribution(zombies),
            vec![("Beijing".to_string(), 3), ("Shanghai".to_string(), 1)]
        );
        assert_eq!(region_distribution([None]), vec![("unknown".to_string(), 1)]);
    }

    #[test]
    fn histograms() {
        let (g, _) = build_graph(&[InputArc::new(0, 1, true)], 2).unwrap();
        assert_eq!(degree_histogram(&g, 1).unwrap(), vec![(2, 2)]);
        let arcs: Vec<InputArc> = (1..=5).map(|v| InputArc::new(0, v, false)).collect();
        let (g, _) = build_graph(&arcs, 6).unwrap();
        assert_eq!(degree_histogram(&g, 1).unwrap(), vec![(1, 5), (5, 1)]);
        assert_eq!(degree_histogram(&g, 4).unwrap(), vec![(0, 5), (4, 1)]);
        assert!(degree_histogram(&g, 0).is_err());
    }

    proptest! {
        #[test]
        fn transpose_swaps_errors(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let predicted = labels(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let truth = labels(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let cm = confusion(&predicted, &truth).unwrap();
            prop_assert_eq!(cm.total(), pairs.len() as u64);
            prop_assert_eq!(confusion(&truth, &predicted).unwrap(), cm.transpose());
            prop_assert_eq!(metrics(&cm).accuracy, Metric::Defined((cm.tp + cm.tn) as f64 / cm.total() as f64));
        }

        #[test]
        fn histogram_counts_sum_to_n(arcs in prop::collection::vec((0u32..30, 0u32..30), 0..200), width in 1u64..10) {
            let arcs: Vec<InputArc> = arcs.into_iter().map(|(s, t)| InputArc::new(s, t, false)).collect();
            let (g, _) = build_graph(&arcs, 30).unwrap();
            let hist = degree_histogram(&g, width).unwrap();
            prop_assert_eq!(hist.iter().map(|b| b.1).sum::<usize>(), 30);
            for u in g.nodes() {
                let d = (g.in_degree(u) + g.out_degree(u)) as u64;
                prop_assert!(hist.iter().any(|&(lo, c)| c > 0 && lo <= d && d < lo + width));
            }
        }
    }
}
