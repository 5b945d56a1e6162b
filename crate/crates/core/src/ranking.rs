//! Skewness ranking of the ratio parameters and one-way ANOVA.

use serde::{Deserialize, Serialize};

use crate::gas::{FaultLabel, GasSample, N_PARAMS};
use crate::special::f_sf;
use crate::{Error, Result};

/// Selection order of the 37 parameters published with the method
/// (lowest skewness first). Its first 24 entries form the reference
/// feature set.
pub const CANONICAL_ORDER: [usize; N_PARAMS] = [
    28, 24, 1, 27, 31, 37, 26, 35, 36, 3, 32, 2, 34, 4, 5, 33, 21, 14, 19, 20, 13, 10, 23, 6, 22,
    15, 18, 17, 7, 8, 16, 11, 9, 12, 25, 30, 29,
];

/// A permutation of parameter numbers 1..=37; position 0 is the lowest
/// skewness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankOrder(Vec<usize>);

impl RankOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if order.len() != N_PARAMS {
            return Err(Error::invalid(format!(
                "rank order has {} entries, expected {N_PARAMS}",
                order.len()
            )));
        }
        let mut seen = [false; N_PARAMS];
        for &p in &order {
            if !(1..=N_PARAMS).contains(&p) || std::mem::replace(&mut seen[p - 1], true) {
                return Err(Error::invalid(format!(
                    "rank order is not a permutation of 1..=37 (offending entry {p})"
                )));
            }
        }
        Ok(RankOrder(order))
    }

    pub fn canonical() -> Self {
        RankOrder(CANONICAL_ORDER.to_vec())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for RankOrder {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        RankOrder::new(v)
    }
}

impl From<RankOrder> for Vec<usize> {
    fn from(r: RankOrder) -> Self {
        r.0
    }
}

pub fn canonical_rank_order() -> RankOrder {
    RankOrder::canonical()
}

/// Population Fisher-Pearson skewness `m3 / m2^1.5`; zero for constant data.
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "skewness needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        return Ok(0.0);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Ranked parameters together with the skewness each was ranked by.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub order: RankOrder,
    /// `skewness[i]` belongs to parameter `i + 1`.
    pub skewness: [f64; N_PARAMS],
}

/// Per-parameter skewness over the dataset, then ascending sort with ties
/// broken by parameter number.
pub fn rank_params_detailed(dataset: &[GasSample]) -> Result<Ranking> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData(
            "cannot rank an empty dataset".into(),
        ));
    }
    let params: Vec<_> = dataset.iter().map(GasSample::params).collect();
    let mut skew = [0.0; N_PARAMS];
    for (i, s) in skew.iter_mut().enumerate() {
        let column: Vec<f64> = params.iter().map(|p| p.as_slice()[i]).collect();
        // A single sample has no spread; treat it like constant data.
        *s = if column.len() < 2 {
            0.0
        } else {
            skewness(&column)?
        };
    }
    let mut order: Vec<usize> = (1..=N_PARAMS).collect();
    order.sort_by(|&a, &b| skew[a - 1].total_cmp(&skew[b - 1]).then(a.cmp(&b)));
    Ok(Ranking {
        order: RankOrder(order),
        skewness: skew,
    })
}

pub fn rank_params(dataset: &[GasSample]) -> Result<RankOrder> {
    rank_params_detailed(dataset).map(|r| r.order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
}

/// One-way ANOVA across `groups`.
///
/// Zero within-group variance with nonzero between-group variance yields
/// `f = +inf, p = 0`; fully identical values yield `f = 0, p = 1`.
pub fn anova_pvalue(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData(
            "ANOVA needs at least 2 groups".into(),
        ));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InsufficientData("ANOVA group is empty".into()));
    }
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "ANOVA needs more observations ({n}) than groups ({k})"
        )));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("ANOVA input contains non-finite values"));
    }

    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let (mut ss_between, mut ss_within) = (0.0, 0.0);
    for g in groups {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (mean - grand).powi(2);
        ss_within += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    let df_between = k - 1;
    let df_within = n - k;

    let (f, p) = if ss_within == 0.0 {
        if ss_between == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_sf(f, df_between as f64, df_within as f64))
    };
    Ok(AnovaResult {
        f_statistic: f,
        p_value: p,
        df_between,
        df_within,
    })
}

/// Per-column ANOVA of a feature matrix grouped by label; classes absent
/// from `labels` are skipped.
pub fn feature_anova(rows: &[Vec<f64>], labels: &[FaultLabel]) -> Result<Vec<AnovaResult>> {
    if rows.len() != labels.len() {
        return Err(Error::invalid("rows and labels differ in length"));
    }
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| {
            let mut groups = vec![Vec::new(); FaultLabel::COUNT];
            for (row, l) in rows.iter().zip(labels) {
                groups[l.index()].push(row[j]);
            }
            groups.retain(|g| !g.is_empty());
            anova_pvalue(&groups)
        })
        .collect()
}
