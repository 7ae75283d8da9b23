//! Precision, recall and macro-averaged F1 over string class labels.

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sorted union of gold and predicted labels; indexes `confusion`.
    pub labels: Vec<String>,
    /// `confusion[g][p]` counts items with gold label `g` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    /// One entry per gold class, sorted by label.
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Panics if the slices differ in length or are empty.
    pub fn compute<G: AsRef<str>, P: AsRef<str>>(gold: &[G], pred: &[P]) -> Self {
        assert_eq!(gold.len(), pred.len(), "gold and predicted lengths differ");
        assert!(!gold.is_empty(), "no items to evaluate");
        let gold_set: BTreeSet<&str> = gold.iter().map(AsRef::as_ref).collect();
        let labels: Vec<String> = gold_set
            .iter()
            .copied()
            .chain(pred.iter().map(AsRef::as_ref))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(String::from)
            .collect();
        let pos = |l: &str| labels.binary_search_by(|x| x.as_str().cmp(l)).unwrap();
        let k = labels.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (g, p) in gold.iter().zip(pred) {
            confusion[pos(g.as_ref())][pos(p.as_ref())] += 1;
        }
        let per_class: Vec<ClassScores> = gold_set
            .iter()
            .map(|&l| {
                let c = pos(l);
                let tp = confusion[c][c];
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let support: usize = confusion[c].iter().sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    label: l.to_string(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64;
        EvalReport {
            labels,
            confusion,
            per_class,
            macro_f1,
        }
    }
}

/// Unweighted mean of per-class F1 over the classes present in `gold`.
pub fn macro_f1<G: AsRef<str>, P: AsRef<str>>(gold: &[G], pred: &[P]) -> f64 {
    EvalReport::compute(gold, pred).macro_f1
}
