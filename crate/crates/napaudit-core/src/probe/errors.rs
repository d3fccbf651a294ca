use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::dataset::{ProbeDataset, Split};
use super::model::ProbeModel;
use super::train::predict;
use crate::groups::{GroupKey, Schema, Variable};

/// How often examples of one group are predicted as one specific other group.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub label: GroupKey,
    pub prediction: GroupKey,
    pub count: usize,
    pub label_total: usize,
    /// `100 · count / label_total`.
    pub error_rate_pct: f64,
    pub differing: Vec<Variable>,
}

/// Most frequent confusions among `(label, prediction)` class pairs, ranked by
/// rate, then absolute count, then class order of label and prediction.
pub fn error_table_from_pairs(pairs: &[(usize, usize)], schema: &Schema, top_k: usize) -> Vec<ErrorRecord> {
    let mut per_label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut confusions: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(y, p) in pairs {
        *per_label.entry(y).or_default() += 1;
        if y != p {
            *confusions.entry((y, p)).or_default() += 1;
        }
    }
    let mut rows: Vec<ErrorRecord> = confusions
        .into_iter()
        .map(|((y, p), count)| {
            let total = per_label[&y];
            let (label, prediction) = (schema.key_for_class(y), schema.key_for_class(p));
            ErrorRecord {
                label,
                prediction,
                count,
                label_total: total,
                error_rate_pct: 100.0 * count as f64 / total as f64,
                differing: label.differing(&prediction),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.error_rate_pct
            .total_cmp(&a.error_rate_pct)
            .then(b.count.cmp(&a.count))
            .then(schema.class_index(a.label).cmp(&schema.class_index(b.label)))
            .then(schema.class_index(a.prediction).cmp(&schema.class_index(b.prediction)))
    });
    rows.truncate(top_k);
    rows
}

/// Frequent errors of a trained probe on one split.
pub fn error_table(
    model: &ProbeModel,
    pd: &ProbeDataset,
    split: Split,
    schema: &Schema,
    top_k: usize,
) -> Vec<ErrorRecord> {
    error_table_from_pairs(&predict(model, pd, split), schema, top_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn reported_rate_format() {
        let s = Schema::fairface();
        let y = s.class_index(s.key("Southeast Asian", "30-39", "Male").unwrap());
        let p = s.class_index(s.key("Southeast Asian", "40-49", "Male").unwrap());
        let mut pairs = vec![(y, y); 115 - 18];
        pairs.extend(core::iter::repeat_n((y, p), 18));
        let t = error_table_from_pairs(&pairs, &s, 10);
        assert_eq!(t.len(), 1);
        assert_eq!(alloc::format!("{:.2}", t[0].error_rate_pct), "15.65");
        assert_eq!(t[0].differing, vec![Variable::Age]);
    }

    #[test]
    fn perfect_predictions_give_empty_table() {
        let pairs: Vec<(usize, usize)> = (0..20).map(|i| (i % 7, i % 7)).collect();
        assert!(error_table_from_pairs(&pairs, &Schema::fairface(), 10).is_empty());
    }

    #[test]
    fn rates_sum_to_one_minus_recall() {
        let pairs = vec![(0, 0), (0, 1), (0, 2), (0, 2), (1, 1), (1, 0)];
        let t = error_table_from_pairs(&pairs, &Schema::fairface(), 100);
        let sum: f64 = t
            .iter()
            .filter(|r| r.label == Schema::fairface().key_for_class(0))
            .map(|r| r.error_rate_pct)
            .sum();
        assert!((sum - 100.0 * (1.0 - 0.25)).abs() < 1e-12);
    }
}
