use serde::{Deserialize, Serialize};

use super::MlError;

/// How per-class statistics are folded into the headline numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Sensitivity, precision, recall and F1 refer to `positive`;
    /// specificity is the recall of the other class.
    Binary { positive: usize },
    /// Sensitivity, specificity, precision, recall, F1 and AUC are
    /// unweighted means over classes (AUC one-vs-rest).
    Multiclass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_samples: usize,
    pub per_class_recall: Vec<f64>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Index of the largest probability; ties go to the lowest index.
pub fn predicted_class(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Rank-sum AUC with mid-ranks for tied scores.
fn mann_whitney_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Scores predictions against true class indices. `y_prob` rows hold one
/// probability per class; the predicted class is their argmax.
pub fn compute_metrics(y_true: &[usize], y_prob: &[Vec<f64>], task: Task) -> Result<MetricsReport, MlError> {
    if y_true.len() != y_prob.len() {
        return Err(MlError::LabelCount {
            rows: y_prob.len(),
            labels: y_true.len(),
        });
    }
    let n = y_true.len();
    if n == 0 {
        return Err(MlError::Empty);
    }
    let k = y_prob[0].len();
    if k < 2 {
        return Err(MlError::TooFewClasses(k));
    }
    for (i, row) in y_prob.iter().enumerate() {
        let valid = row.len() == k
            && row.iter().all(|p| (0.0..=1.0).contains(p))
            && (row.iter().sum::<f64>() - 1.0).abs() <= 1e-6;
        if !valid {
            return Err(MlError::BadProbabilities(i));
        }
    }
    if let Some(&c) = y_true.iter().find(|&&c| c >= k) {
        return Err(MlError::ClassIndex { class: c, n_classes: k });
    }
    if let Task::Binary { positive } = task {
        if k != 2 || positive >= 2 {
            return Err(MlError::ClassIndex {
                class: positive,
                n_classes: k,
            });
        }
    }

    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, p) in y_true.iter().zip(y_prob) {
        confusion[t][predicted_class(p)] += 1;
    }
    let support: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
    if let Some(c) = support.iter().position(|&s| s == 0) {
        return Err(MlError::AbsentClass(c));
    }
    let predicted: Vec<usize> = (0..k).map(|c| confusion.iter().map(|r| r[c]).sum()).collect();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();

    let recall: Vec<f64> = (0..k).map(|c| ratio(confusion[c][c], support[c])).collect();
    let precision: Vec<f64> = (0..k).map(|c| ratio(confusion[c][c], predicted[c])).collect();
    let specificity: Vec<f64> = (0..k)
        .map(|c| {
            let negatives = n - support[c];
            let false_pos = predicted[c] - confusion[c][c];
            ratio(negatives - false_pos, negatives)
        })
        .collect();
    let auc_for = |c: usize| {
        let scores: Vec<f64> = y_prob.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
        mann_whitney_auc(&scores, &pos)
    };

    let balanced_accuracy = mean(&recall);
    let (sensitivity, spec, prec, rec, f1, auc) = match task {
        Task::Binary { positive } => (
            recall[positive],
            recall[1 - positive],
            precision[positive],
            recall[positive],
            harmonic(precision[positive], recall[positive]),
            auc_for(positive),
        ),
        Task::Multiclass => {
            let f1s: Vec<f64> = (0..k).map(|c| harmonic(precision[c], recall[c])).collect();
            let aucs: Vec<f64> = (0..k).map(auc_for).collect();
            (
                balanced_accuracy,
                mean(&specificity),
                mean(&precision),
                balanced_accuracy,
                mean(&f1s),
                mean(&aucs),
            )
        }
    };
    Ok(MetricsReport {
        accuracy: ratio(correct, n),
        balanced_accuracy,
        sensitivity,
        specificity: spec,
        auc,
        precision: prec,
        recall: rec,
        f1,
        n_samples: n,
        per_class_recall: recall,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard(pred: &[usize], k: usize) -> Vec<Vec<f64>> {
        pred.iter()
            .map(|&c| (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn four_sample_example() {
        let m = compute_metrics(&[1, 1, 0, 0], &hard(&[1, 0, 0, 0], 2), Task::Binary { positive: 1 }).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.sensitivity, 0.5);
        assert_eq!(m.specificity, 1.0);
        assert_eq!(m.balanced_accuracy, 0.75);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.f1, 2.0 / 3.0);
        assert_eq!(m.confusion, vec![vec![2, 0], vec![1, 1]]);
    }

    #[test]
    fn auc_extremes() {
        let ranked = vec![vec![0.1, 0.9], vec![0.4, 0.6], vec![0.6, 0.4], vec![0.8, 0.2]];
        let m = compute_metrics(&[1, 1, 0, 0], &ranked, Task::Binary { positive: 1 }).unwrap();
        assert_eq!(m.auc, 1.0);
        let constant = vec![vec![0.5, 0.5]; 4];
        let m = compute_metrics(&[1, 1, 0, 0], &constant, Task::Binary { positive: 1 }).unwrap();
        assert_eq!(m.auc, 0.5);
        let m = compute_metrics(&[1, 1, 0, 0], &ranked, Task::Binary { positive: 0 }).unwrap();
        assert_eq!(m.auc, 1.0);
    }

    #[test]
    fn auc_with_partial_ties() {
        // Positive scores {0.8, 0.5}, negative {0.5, 0.2}: 3.5 of 4 pairs.
        let probs = vec![vec![0.2, 0.8], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.8, 0.2]];
        let m = compute_metrics(&[1, 1, 0, 0], &probs, Task::Binary { positive: 1 }).unwrap();
        assert_eq!(m.auc, 0.875);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(predicted_class(&[0.5, 0.5]), 0);
        assert_eq!(predicted_class(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn balanced_equals_macro_recall_on_five_classes() {
        let truth = [0, 0, 0, 1, 1, 2, 2, 2, 2, 3, 4, 4, 4, 4, 4];
        let pred = [0, 1, 0, 1, 1, 2, 0, 2, 3, 3, 4, 4, 2, 4, 0];
        let m = compute_metrics(&truth, &hard(&pred, 5), Task::Multiclass).unwrap();
        let mut recalls = Vec::new();
        for c in 0..5 {
            let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
            let hits = members.iter().filter(|&&i| pred[i] == c).count();
            recalls.push(hits as f64 / members.len() as f64);
        }
        let macro_recall = recalls.iter().sum::<f64>() / 5.0;
        assert_eq!(m.balanced_accuracy, macro_recall);
        assert_eq!(m.recall, macro_recall);
        assert_eq!(m.per_class_recall, recalls);
        assert_eq!(m.accuracy, 10.0 / 15.0);
    }

    #[test]
    fn balanced_classes_make_balanced_accuracy_equal_accuracy() {
        let truth = [0, 0, 1, 1, 2, 2];
        let m = compute_metrics(&truth, &hard(&[0, 2, 1, 1, 0, 2], 3), Task::Multiclass).unwrap();
        assert!((m.balanced_accuracy - m.accuracy).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let p = hard(&[0, 1], 2);
        assert!(matches!(
            compute_metrics(&[0, 0], &p, Task::Multiclass),
            Err(MlError::AbsentClass(1))
        ));
        assert!(matches!(
            compute_metrics(&[0], &p, Task::Multiclass),
            Err(MlError::LabelCount { .. })
        ));
        assert!(matches!(
            compute_metrics(&[0, 2], &p, Task::Multiclass),
            Err(MlError::ClassIndex { .. })
        ));
        assert!(matches!(
            compute_metrics(&[0, 1], &[vec![0.7, 0.7], vec![0.0, 1.0]], Task::Multiclass),
            Err(MlError::BadProbabilities(0))
        ));
        assert!(matches!(
            compute_metrics(&[0, 1], &p, Task::Binary { positive: 2 }),
            Err(MlError::ClassIndex { .. })
        ));
    }

    #[test]
    fn all_metrics_lie_in_unit_interval() {
        let truth = [0, 1, 2, 0, 1, 2, 2];
        let probs = vec![
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.1, 0.8],
            vec![0.3, 0.3, 0.4],
            vec![0.2, 0.7, 0.1],
            vec![0.3, 0.4, 0.3],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
        ];
        let m = compute_metrics(&truth, &probs, Task::Multiclass).unwrap();
        for v in [
            m.accuracy,
            m.balanced_accuracy,
            m.sensitivity,
            m.specificity,
            m.auc,
            m.precision,
            m.recall,
            m.f1,
        ] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
