//! Confusion matrices, k-fold and leave-one-subject-out cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::features::FeatureTable;
use crate::knn::{fit, Weighting};
use crate::seed::{derive_seed, rng};

/// Rows are the true class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Summary statistics. Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    /// Square matrix with the given class names.
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(invalid!("confusion matrix must be {0}x{0}", classes.len()));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| invalid!("unknown class '{label}'"))
    }

    pub fn record(&mut self, truth: &str, predicted: &str) -> Result<()> {
        let (t, p) = (self.index(truth)?, self.index(predicted)?);
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Element-wise sum; both matrices must share the class list.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.classes != other.classes {
            return Err(invalid!("cannot merge confusion matrices over different classes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(invalid!("confusion matrix is empty"));
    }
    let n = cm.classes.len();
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = (0..n)
        .map(|c| ratio(cm.counts[c][c], (0..n).map(|r| cm.counts[r][c]).sum()))
        .collect();
    let recall = (0..n)
        .map(|r| ratio(cm.counts[r][r], cm.counts[r].iter().sum()))
        .collect();
    Ok(Metrics {
        accuracy: cm.correct() as f64 / total as f64,
        precision,
        recall,
    })
}

fn labels_of(table: &FeatureTable) -> Result<Vec<&str>> {
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.label
                .as_deref()
                .ok_or_else(|| invalid!("row {i} has no label"))
        })
        .collect()
}

/// Trains on `train`, predicts `test`, tallies into a matrix over `classes`.
fn evaluate_split(
    table: &FeatureTable,
    classes: &[String],
    train: &[usize],
    test: &[usize],
    k: usize,
    weighting: Weighting,
) -> Result<ConfusionMatrix> {
    let model = fit(&table.subset(train), k, weighting)?;
    let mut cm = ConfusionMatrix::new(classes.to_vec());
    for &i in test {
        let row = &table.rows[i];
        let p = model.predict_row(row)?;
        cm.record(row.label.as_deref().unwrap_or_default(), &p.label)?;
    }
    Ok(cm)
}

/// Stratified fold index of every row.
///
/// Each class is shuffled with its own derived seed and dealt round-robin,
/// continuing the deal where the previous class stopped so fold sizes stay
/// balanced.
pub fn stratified_folds(table: &FeatureTable, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(invalid!("need at least 2 folds, got {folds}"));
    }
    let labels = labels_of(table)?;
    let n = labels.len();
    if folds > n {
        return Err(invalid!("{folds} folds but only {n} rows"));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    // Leave-one-out needs no stratification.
    if folds < n {
        if let Some((class, rows)) = by_class.iter().find(|(_, rows)| rows.len() < folds) {
            return Err(invalid!(
                "class '{class}' has {} rows, too few to stratify into {folds} folds",
                rows.len()
            ));
        }
    }
    let mut assignment = vec![0; n];
    let mut next = 0;
    for (ci, rows) in by_class.values().enumerate() {
        let mut rows = rows.clone();
        rows.shuffle(&mut rng(derive_seed(seed, "fold", ci as u64)));
        for i in rows {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold cross-validation; folds run through `exec`.
pub fn kfold_cv(
    table: &FeatureTable,
    folds: usize,
    k: usize,
    weighting: Weighting,
    seed: u64,
    exec: Exec,
) -> Result<ConfusionMatrix> {
    let assignment = stratified_folds(table, folds, seed)?;
    let classes = table.classes();
    let parts = exec.try_map(&(0..folds).collect::<Vec<_>>(), |&f| {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..table.len()).partition(|&i| assignment[i] == f);
        evaluate_split(table, &classes, &train, &test, k, weighting)
    })?;
    let mut cm = ConfusionMatrix::new(classes);
    for p in &parts {
        cm.merge(p)?;
    }
    Ok(cm)
}

/// Result of holding out each subject in turn.
#[derive(Debug, Clone, PartialEq)]
pub struct LosoResult {
    /// `(subject, accuracy)` sorted by subject.
    pub per_subject: Vec<(String, f64)>,
    pub pooled: ConfusionMatrix,
}

impl LosoResult {
    pub fn mean_accuracy(&self) -> f64 {
        self.per_subject.iter().map(|(_, a)| a).sum::<f64>() / self.per_subject.len() as f64
    }
}

pub fn loso_cv(table: &FeatureTable, k: usize, weighting: Weighting, exec: Exec) -> Result<LosoResult> {
    labels_of(table)?;
    let mut subjects: Vec<&str> = Vec::with_capacity(table.len());
    for (i, r) in table.rows.iter().enumerate() {
        subjects.push(
            r.subject_id
                .as_deref()
                .ok_or_else(|| invalid!("row {i} has no subject_id"))?,
        );
    }
    let mut distinct = subjects.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(invalid!("leave-one-subject-out needs at least 2 subjects"));
    }
    let classes = table.classes();
    let parts = exec.try_map(&distinct, |&s| {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..table.len()).partition(|&i| subjects[i] == s);
        evaluate_split(table, &classes, &train, &test, k, weighting)
            .map_err(|e| match e {
                Error::InvalidTrainingSet(m) => {
                    Error::InvalidTrainingSet(format!("without subject '{s}': {m}"))
                }
                other => other,
            })
    })?;
    let mut pooled = ConfusionMatrix::new(classes);
    let mut per_subject = Vec::with_capacity(parts.len());
    for (s, cm) in distinct.iter().zip(&parts) {
        pooled.merge(cm)?;
        per_subject.push((s.to_string(), cm.correct() as f64 / cm.total() as f64));
    }
    Ok(LosoResult { per_subject, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureKind, FeatureRow};
    use rand::Rng;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn table_iv_recall() {
        // Rows are truth: 97 of 100 neutral windows and 99 of 100 angry ones
        // are classified correctly.
        let cm = ConfusionMatrix::from_counts(names(&["neutral", "angry"]), vec![vec![97, 3], vec![1, 99]]).unwrap();
        let m = metrics(&cm).unwrap();
        assert_eq!(m.recall, vec![Some(0.97), Some(0.99)]);
        assert_eq!(m.precision, vec![Some(97.0 / 98.0), Some(99.0 / 102.0)]);
        assert_eq!(m.accuracy, 0.98);
    }

    #[test]
    fn table_v_accuracy() {
        let cm = ConfusionMatrix::from_counts(names(&["a", "b"]), vec![vec![85, 15], vec![20, 80]]).unwrap();
        assert_eq!(metrics(&cm).unwrap().accuracy, 0.825);
    }

    #[test]
    fn identity_and_degenerate() {
        let cm = ConfusionMatrix::from_counts(names(&["a", "b", "c"]), vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let m = metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.precision.iter().chain(&m.recall).all(|x| *x == Some(1.0)));

        let cm = ConfusionMatrix::from_counts(names(&["a", "b"]), vec![vec![5, 0], vec![0, 0]]).unwrap();
        let m = metrics(&cm).unwrap();
        assert_eq!(m.recall[1], None);
        assert_eq!(m.precision[1], None);
        assert!(metrics(&ConfusionMatrix::new(names(&["a", "b"]))).is_err());
    }

    fn blobs(seed: u64, subjects: usize, per_class: usize, shift: f64) -> FeatureTable {
        let mut r = crate::seed::rng(seed);
        let mut t = FeatureTable::new(FeatureKind::DEFAULT.to_vec()).unwrap();
        for s in 0..subjects {
            let offset = shift * s as f64;
            for (label, centre) in [("a", 0.0), ("b", 3.0)] {
                for _ in 0..per_class {
                    t.rows.push(FeatureRow {
                        values: vec![centre + offset + r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)],
                        label: Some(label.into()),
                        subject_id: Some(format!("s{s}")),
                    });
                }
            }
        }
        t
    }

    #[test]
    fn leave_one_out_on_four_points() {
        let mut t = FeatureTable::new(vec![FeatureKind::Mean]).unwrap();
        for (v, l) in [(0.0, "a"), (0.1, "a"), (10.0, "b"), (10.1, "b")] {
            t.rows.push(FeatureRow { values: vec![v], label: Some(l.into()), subject_id: None });
        }
        let cm = kfold_cv(&t, 4, 1, Weighting::Uniform, 1, Exec::Sequential).unwrap();
        assert_eq!(metrics(&cm).unwrap().accuracy, 1.0);
        assert!(kfold_cv(&t, 3, 1, Weighting::Uniform, 1, Exec::Sequential).is_err());
        assert!(kfold_cv(&t, 1, 1, Weighting::Uniform, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let t = blobs(1, 1, 25, 0.0);
        let a = stratified_folds(&t, 10, 7).unwrap();
        assert_eq!(a, stratified_folds(&t, 10, 7).unwrap());
        assert_ne!(a, stratified_folds(&t, 10, 8).unwrap());
        for f in 0..10 {
            let in_fold: Vec<usize> = (0..t.len()).filter(|&i| a[i] == f).collect();
            assert!(in_fold.len() == 5);
            let a_rows = in_fold.iter().filter(|&&i| t.rows[i].label.as_deref() == Some("a")).count();
            assert!((2..=3).contains(&a_rows));
        }
        let x = kfold_cv(&t, 10, 6, Weighting::InverseDistance, 3, Exec::Parallel).unwrap();
        assert_eq!(x, kfold_cv(&t, 10, 6, Weighting::InverseDistance, 3, Exec::Sequential).unwrap());
        assert_eq!(x.total(), 50);
    }

    #[test]
    fn duplicated_points_k1_perfect() {
        let base = blobs(2, 1, 20, 0.0);
        let mut t = base.clone();
        t.rows.extend(base.rows.iter().cloned());
        t.rows.extend(base.rows.iter().cloned());
        let cm = kfold_cv(&t, 2, 1, Weighting::Uniform, 5, Exec::Sequential).unwrap();
        assert_eq!(metrics(&cm).unwrap().accuracy, 1.0);
    }

    #[test]
    fn loso_behaviour() {
        let same = blobs(3, 2, 40, 0.0);
        let kf = metrics(&kfold_cv(&same, 10, 6, Weighting::InverseDistance, 1, Exec::Sequential).unwrap()).unwrap().accuracy;
        let lo = loso_cv(&same, 6, Weighting::InverseDistance, Exec::Sequential).unwrap();
        assert_eq!(lo.per_subject.len(), 2);
        assert!((kf - metrics(&lo.pooled).unwrap().accuracy).abs() < 0.10);

        // Subject s1 is shifted by 1.5 units, halfway toward the other class.
        let shifted = blobs(4, 2, 40, 1.5);
        let lo = loso_cv(&shifted, 6, Weighting::InverseDistance, Exec::Sequential).unwrap();
        let own = metrics(&kfold_cv(&shifted.subset(&(80..160).collect::<Vec<_>>()), 10, 6, Weighting::InverseDistance, 1, Exec::Sequential).unwrap()).unwrap().accuracy;
        assert!(lo.per_subject[1].1 < own);

        let one = blobs(5, 1, 10, 0.0);
        assert!(loso_cv(&one, 1, Weighting::Uniform, Exec::Sequential).is_err());
        let mut anon = one.clone();
        anon.rows[0].subject_id = None;
        assert!(loso_cv(&anon, 1, Weighting::Uniform, Exec::Sequential).is_err());
    }
}
