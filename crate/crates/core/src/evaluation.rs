//! Confusion matrices and derived metrics, seeded splits, SMOTE
//! oversampling, and stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::features::FeatureMatrix;
use crate::gas::FaultLabel;
use crate::gbt::{GbtConfig, GbtModel};
use crate::{Error, Result};

const N: usize = FaultLabel::COUNT;

/// Seeded generator for `stream`; distinct streams are independent.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rows are actual classes, columns predicted, both in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N]; N],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; N]; N]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn record(&mut self, actual: FaultLabel, predicted: FaultLabel) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self
            .counts
            .iter_mut()
            .flatten()
            .zip(other.counts.iter().flatten())
        {
            *a += b;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0; N]; N];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        ConfusionMatrix { counts: t }
    }
}

pub fn confusion(actual: &[FaultLabel], predicted: &[FaultLabel]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData("no labels to compare".into()));
    }
    let mut m = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        m.record(a, p);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub sensitivity: [f64; N],
    pub precision: [f64; N],
    pub f1: [f64; N],
    pub accuracy: f64,
    /// Mean F1 over classes that occur as actual or predicted labels.
    pub macro_f1: f64,
    pub kappa: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(matrix: &ConfusionMatrix) -> Result<EvalReport> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::InsufficientData("confusion matrix is empty".into()));
    }
    let mut sensitivity = [0.0; N];
    let mut precision = [0.0; N];
    let mut f1 = [0.0; N];
    let (mut f1_sum, mut present) = (0.0, 0usize);
    let mut chance = 0u128;
    for c in 0..N {
        let tp = matrix.counts[c][c];
        let (row, col) = (matrix.row_sum(c), matrix.col_sum(c));
        sensitivity[c] = ratio(tp, row);
        precision[c] = ratio(tp, col);
        // Harmonic mean of precision and recall, 2TP / (row + col).
        f1[c] = ratio(2 * tp, row + col);
        if row + col > 0 {
            f1_sum += f1[c];
            present += 1;
        }
        chance += row as u128 * col as u128;
    }
    let p_o = ratio(matrix.trace(), total);
    let p_e = chance as f64 / (total as f64 * total as f64);
    let kappa = if p_e == 1.0 {
        1.0
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(EvalReport {
        matrix: matrix.clone(),
        sensitivity,
        precision,
        f1,
        accuracy: p_o,
        macro_f1: f1_sum / present as f64,
        kappa,
    })
}

/// Seeded shuffle of `0..n` cut at `round(n * train_frac)` (halves round up).
pub fn train_test_split_indices(
    n: usize,
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InsufficientData(format!("cannot split {n} samples")));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let n_train = (n as f64 * train_frac).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InsufficientData(format!(
            "split of {n} samples at {train_frac} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, 0));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn train_test_split<T: Clone>(
    data: &[T],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    let (tr, te) = train_test_split_indices(data.len(), train_frac, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| data[i].clone()).collect();
    Ok((pick(&tr), pick(&te)))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Synthetic minority oversampling.
///
/// Every class is raised to the majority count. A synthetic row is
/// `x + u * (nn - x)` where `x` is a random member of its class, `nn` one of
/// its `k_neighbors` nearest same-class rows (Euclidean, ties by position),
/// and `u` uniform in `[0, 1)`. The input rows come first, unmodified, then
/// the synthetic rows grouped by class in canonical order.
pub fn smote(
    rows: &[Vec<f64>],
    labels: &[FaultLabel],
    k_neighbors: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<FaultLabel>)> {
    if rows.len() != labels.len() {
        return Err(Error::invalid("rows and labels differ in length"));
    }
    if k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be at least 1"));
    }
    let mut members: [Vec<usize>; N] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        members[l.index()].push(i);
    }
    if let Some(c) = members.iter().position(|m| m.len() == 1) {
        return Err(Error::CannotInterpolate(FaultLabel::ALL[c].to_string()));
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);

    let mut out_rows = rows.to_vec();
    let mut out_labels = labels.to_vec();
    let mut rng = rng_for(seed, 0);
    for (c, class) in members.iter().enumerate() {
        let need = target.saturating_sub(class.len());
        if class.is_empty() || need == 0 {
            continue;
        }
        let kk = k_neighbors.min(class.len() - 1);
        let neighbours: Vec<Vec<usize>> = class
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = class
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(&rows[i], &rows[j]), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(kk).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..need {
            let pos = rng.gen_range(0..class.len());
            let base = &rows[class[pos]];
            let nn = &rows[neighbours[pos][rng.gen_range(0..kk)]];
            let u: f64 = rng.gen();
            out_rows.push(base.iter().zip(nn).map(|(x, y)| x + u * (y - x)).collect());
            out_labels.push(FaultLabel::ALL[c]);
        }
    }
    Ok((out_rows, out_labels))
}

/// Fold index for every sample, stratified by class.
///
/// Each class is shuffled and dealt round-robin, continuing from where the
/// previous class stopped so fold sizes stay within one of each other.
/// Every present class needs at least `folds` members, except in
/// leave-one-out (`folds == n`).
pub fn stratified_folds(labels: &[FaultLabel], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if folds < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > n {
        return Err(Error::InsufficientData(format!(
            "{folds} folds requested for {n} samples"
        )));
    }
    let mut members: [Vec<usize>; N] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        members[l.index()].push(i);
    }
    if folds < n {
        for (c, m) in members.iter().enumerate() {
            if !m.is_empty() && m.len() < folds {
                return Err(Error::Stratification {
                    class: FaultLabel::ALL[c].to_string(),
                    count: m.len(),
                    folds,
                });
            }
        }
    }
    let mut rng = rng_for(seed, 0);
    let mut assignment = vec![0; n];
    let mut next = 0;
    for m in members.iter_mut() {
        m.shuffle(&mut rng);
        for &i in m.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    /// Metrics of the confusion matrix summed over all out-of-fold
    /// predictions.
    pub pooled: EvalReport,
    pub assignment: Vec<usize>,
    pub seed: u64,
    pub smote: bool,
}

pub const SMOTE_NEIGHBORS: usize = 5;

/// Stratified k-fold cross-validation of the classifier on a feature matrix.
/// With `use_smote`, only the training folds are oversampled.
pub fn kfold_cv(
    features: &FeatureMatrix,
    folds: usize,
    seed: u64,
    use_smote: bool,
    config: &GbtConfig,
) -> Result<CvReport> {
    let labels = features.require_labels()?;
    let assignment = stratified_folds(&labels, folds, seed)?;
    let reports: Vec<(ConfusionMatrix, EvalReport)> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let (mut tr_x, mut tr_y, mut te_x, mut te_y) = (vec![], vec![], vec![], vec![]);
            for (i, &f) in assignment.iter().enumerate() {
                let (x, y) = if f == fold {
                    (&mut te_x, &mut te_y)
                } else {
                    (&mut tr_x, &mut tr_y)
                };
                x.push(features.rows[i].clone());
                y.push(labels[i]);
            }
            let fold_seed: u64 = rng_for(seed, fold as u64 + 1).gen();
            if use_smote {
                (tr_x, tr_y) = smote(&tr_x, &tr_y, SMOTE_NEIGHBORS, fold_seed)?;
            }
            let model = GbtModel::train(&tr_x, &tr_y, config, fold_seed)?;
            let predicted = model.predict_many(&te_x)?;
            let m = confusion(&te_y, &predicted)?;
            let r = metrics(&m)?;
            Ok((m, r))
        })
        .collect::<Result<_>>()?;

    let mut pooled = ConfusionMatrix::default();
    for (m, _) in &reports {
        pooled.merge(m);
    }
    Ok(CvReport {
        folds: reports.into_iter().map(|(_, r)| r).collect(),
        pooled: metrics(&pooled)?,
        assignment,
        seed,
        smote: use_smote,
    })
}
