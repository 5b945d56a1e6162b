//! PRC feature vectors and the search for the best number of ranked
//! parameters.

use rayon::prelude::*;
use serde::Serialize;

use crate::evaluation::{confusion, metrics, train_test_split_indices};
use crate::gas::{FaultLabel, GasSample, N_PARAMS};
use crate::gbt::{GbtConfig, GbtModel};
use crate::itd::{itd_single_stage, DEFAULT_ALPHA};
use crate::ranking::RankOrder;
use crate::{Error, Result};

/// Feature counts explored by the reference search.
pub const K_MIN: usize = 18;
pub const K_MAX: usize = 37;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<FaultLabel>>,
    pub k: usize,
    pub rank_order: RankOrder,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// All labels, or an error naming the first unlabeled sample.
    pub fn require_labels(&self) -> Result<Vec<FaultLabel>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::invalid(format!("sample {id:?} has no label"))))
            .collect()
    }
}

/// The sample's first `k` ranked parameters, in rank order.
pub fn ranked_params(sample: &GasSample, rank_order: &RankOrder, k: usize) -> Vec<f64> {
    let p = sample.params();
    rank_order.as_slice()[..k]
        .iter()
        .map(|&n| p.get(n))
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if !(2..=N_PARAMS).contains(&k) {
        return Err(Error::invalid(format!("k must lie in 2..=37, got {k}")));
    }
    Ok(())
}

/// PRC coefficients of one sample: single-stage ITD of its `k` ranked
/// parameters.
pub fn prc_features(sample: &GasSample, rank_order: &RankOrder, k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let signal = ranked_params(sample, rank_order, k);
    Ok(itd_single_stage(&signal, DEFAULT_ALPHA)?.prc)
}

pub fn build_features(
    samples: &[GasSample],
    rank_order: &RankOrder,
    k: usize,
) -> Result<FeatureMatrix> {
    check_k(k)?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to featurize".into()));
    }
    let rows = samples
        .iter()
        .map(|s| prc_features(s, rank_order, k))
        .collect::<Result<_>>()?;
    Ok(FeatureMatrix {
        ids: samples.iter().map(|s| s.id.clone()).collect(),
        rows,
        labels: samples.iter().map(|s| s.label).collect(),
        k,
        rank_order: rank_order.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSearchParams {
    pub k_min: usize,
    pub k_max: usize,
    pub split_seed: u64,
    pub train_frac: f64,
    pub config: GbtConfig,
}

impl Default for KSearchParams {
    fn default() -> Self {
        KSearchParams {
            k_min: K_MIN,
            k_max: K_MAX,
            split_seed: 0,
            train_frac: 0.85,
            config: GbtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSearchResult {
    /// `(k, holdout accuracy)` in ascending `k`.
    pub accuracy_curve: Vec<(usize, f64)>,
    /// Smallest `k` attaining the best accuracy.
    pub best_k: usize,
    pub seed: u64,
}

/// Holdout accuracy for every `k` in `k_min..=k_max` on one shared seeded
/// split.
pub fn optimal_k_search(
    samples: &[GasSample],
    rank_order: &RankOrder,
    params: &KSearchParams,
) -> Result<KSearchResult> {
    if params.k_min > params.k_max {
        return Err(Error::invalid(format!(
            "k_min {} exceeds k_max {}",
            params.k_min, params.k_max
        )));
    }
    check_k(params.k_min)?;
    check_k(params.k_max)?;
    let labels: Vec<FaultLabel> = samples
        .iter()
        .map(|s| {
            s.label
                .ok_or_else(|| Error::invalid(format!("sample {:?} has no label", s.id)))
        })
        .collect::<Result<_>>()?;
    let (train, test) =
        train_test_split_indices(samples.len(), params.train_frac, params.split_seed)?;
    let pick = |ix: &[usize]| -> Vec<FaultLabel> { ix.iter().map(|&i| labels[i]).collect() };
    let (train_y, test_y) = (pick(&train), pick(&test));

    let accuracy_curve: Vec<(usize, f64)> = (params.k_min..=params.k_max)
        .into_par_iter()
        .map(|k| {
            let fm = build_features(samples, rank_order, k)?;
            let rows = |ix: &[usize]| -> Vec<Vec<f64>> {
                ix.iter().map(|&i| fm.rows[i].clone()).collect()
            };
            let model =
                GbtModel::train(&rows(&train), &train_y, &params.config, params.split_seed)?;
            let predicted = model.predict_many(&rows(&test))?;
            let acc = metrics(&confusion(&test_y, &predicted)?)?.accuracy;
            Ok((k, acc))
        })
        .collect::<Result<_>>()?;

    let mut best = accuracy_curve[0];
    for &(k, acc) in &accuracy_curve[1..] {
        if acc > best.1 {
            best = (k, acc);
        }
    }
    Ok(KSearchResult {
        accuracy_curve,
        best_k: best.0,
        seed: params.split_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::canonical_rank_order;

    fn row1() -> GasSample {
        GasSample::new(
            "r1",
            [292.0, 346.0, 32.0, 313.0, 196.0],
            Some(FaultLabel::D2),
        )
        .unwrap()
    }

    #[test]
    fn features_follow_rank_order() {
        let order = canonical_rank_order();
        let fm = build_features(&[row1()], &order, 24).unwrap();
        let p = row1().params();
        let expected_signal: Vec<f64> = [
            28, 24, 1, 27, 31, 37, 26, 35, 36, 3, 32, 2, 34, 4, 5, 33, 21, 14, 19, 20, 13, 10, 23,
            6,
        ]
        .iter()
        .map(|&n| p.get(n))
        .collect();
        assert_eq!(ranked_params(&row1(), &order, 24), expected_signal);
        let prc = itd_single_stage(&expected_signal, 0.5).unwrap().prc;
        assert_eq!(fm.rows[0], prc);
        assert_eq!(fm.k, 24);
    }

    #[test]
    fn equal_ranked_params_give_zero_row() {
        // Equal gases make params 1..=5 all 0.2, so a rank order starting
        // with them yields a constant signal.
        let s = GasSample::new("eq", [3.0; 5], None).unwrap();
        let order = RankOrder::new((1..=37).collect()).unwrap();
        assert_eq!(prc_features(&s, &order, 5).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn k_bounds_and_empty_input() {
        let order = canonical_rank_order();
        assert!(build_features(&[row1()], &order, 38).is_err());
        assert!(build_features(&[row1()], &order, 1).is_err());
        assert!(build_features(&[], &order, 20).is_err());
    }

    #[test]
    fn search_rejects_unlabeled_and_tiny() {
        let order = canonical_rank_order();
        let mut s = row1();
        s.label = None;
        let params = KSearchParams::default();
        assert!(optimal_k_search(&[row1(), s], &order, &params).is_err());
        assert!(optimal_k_search(&[row1()], &order, &params).is_err());
    }
}
