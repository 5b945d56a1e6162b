//! Multiclass gradient-boosted regression trees with second-order
//! (gradient + hessian) split scoring and L2-regularized leaves.
//!
//! Each boosting round fits one tree per class against the softmax
//! gradients `g = p - y` and hessians `h = p(1 - p)` evaluated at the
//! start of the round. Splits are found by exact greedy enumeration over
//! sorted distinct feature values.

use serde::{Deserialize, Serialize};

use crate::gas::FaultLabel;
use crate::{Error, Result};

const N_CLASSES: usize = FaultLabel::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Minimum gain required to keep a split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub n_classes: usize,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            n_classes: N_CLASSES,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && self.max_depth >= 1
            && self.lambda >= 0.0
            && self.gamma >= 0.0
            && self.min_child_weight >= 0.0
            && self.n_classes == N_CLASSES;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid classifier config {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Direction taken by a missing (NaN) value.
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// A regression tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { weight } => return weight,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = row[feature];
                    let go_left = if v.is_nan() {
                        default_left
                    } else {
                        v < threshold
                    };
                    i = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub config: GbtConfig,
    /// Initial logit shared by every class.
    pub base_score: f64,
    pub n_features: usize,
    pub class_order: Vec<FaultLabel>,
    /// Recorded for reproducibility; training draws no random numbers.
    pub seed: u64,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<Tree>>,
}

struct Grad {
    g: f64,
    h: f64,
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    /// Per feature, row indices sorted by value (ties by row index).
    sorted: &'a [Vec<usize>],
    grads: &'a [Grad],
    config: &'a GbtConfig,
    nodes: Vec<Node>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// A threshold strictly above `lo` and at most `hi`, so that `lo` routes left
/// and `hi` routes right under `value < threshold`.
fn split_threshold(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

impl TreeBuilder<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -self.config.learning_rate * g / (h + self.config.lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.config.lambda)
    }

    fn best_split(&self, member: &[bool], g_total: f64, h_total: f64) -> Option<BestSplit> {
        let cfg = self.config;
        let parent = self.score(g_total, h_total);
        let mut best: Option<BestSplit> = None;
        for (feature, order) in self.sorted.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            let mut prev: Option<usize> = None;
            for &i in order.iter().filter(|&&i| member[i]) {
                if let Some(p) = prev {
                    let (lo, hi) = (self.rows[p][feature], self.rows[i][feature]);
                    if hi > lo {
                        let (gr, hr) = (g_total - gl, h_total - hl);
                        if hl >= cfg.min_child_weight && hr >= cfg.min_child_weight {
                            let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent)
                                - cfg.gamma;
                            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                                best = Some(BestSplit {
                                    gain,
                                    feature,
                                    threshold: split_threshold(lo, hi),
                                });
                            }
                        }
                    }
                }
                gl += self.grads[i].g;
                hl += self.grads[i].h;
                prev = Some(i);
            }
        }
        best
    }

    fn build(&mut self, member: Vec<bool>, depth: usize) -> usize {
        let (g, h) = member
            .iter()
            .zip(self.grads)
            .filter(|(m, _)| **m)
            .fold((0.0, 0.0), |(g, h), (_, gr)| (g + gr.g, h + gr.h));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            weight: self.leaf_weight(g, h),
        });
        if depth >= self.config.max_depth {
            return id;
        }
        let Some(split) = self.best_split(&member, g, h) else {
            return id;
        };
        let mut left_member = vec![false; member.len()];
        let mut right_member = vec![false; member.len()];
        for (i, _) in member.iter().enumerate().filter(|(_, m)| **m) {
            if self.rows[i][split.feature] < split.threshold {
                left_member[i] = true;
            } else {
                right_member[i] = true;
            }
        }
        let left = self.build(left_member, depth + 1);
        let right = self.build(right_member, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: true,
            left,
            right,
        };
        id
    }
}

fn softmax(logits: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.map(|z| (z - max).exp());
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let width = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InsufficientData("empty feature matrix".into()))?;
    if width == 0 {
        return Err(Error::InsufficientData(
            "feature matrix has no columns".into(),
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::invalid(format!(
                "row {i} has {} features, expected {width}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(width)
}

impl GbtModel {
    /// An ensemble with no trees; predicts the uniform distribution.
    pub fn empty(config: GbtConfig, n_features: usize) -> Self {
        GbtModel {
            config,
            base_score: 0.5,
            n_features,
            class_order: FaultLabel::ALL.to_vec(),
            seed: 0,
            trees: Vec::new(),
        }
    }

    pub fn train(
        rows: &[Vec<f64>],
        labels: &[FaultLabel],
        config: &GbtConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if config.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        let width = check_rows(rows)?;
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let first = labels[0];
        if labels.iter().all(|&l| l == first) {
            return Err(Error::DegenerateLabels(format!(
                "all {} training labels are {first}",
                labels.len()
            )));
        }

        let sorted: Vec<Vec<usize>> = (0..width)
            .map(|f| {
                let mut idx: Vec<usize> = (0..rows.len()).collect();
                idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();

        let mut model = GbtModel::empty(config.clone(), width);
        model.seed = seed;
        let mut logits = vec![[model.base_score; N_CLASSES]; rows.len()];

        for _ in 0..config.rounds {
            let probs: Vec<_> = logits.iter().map(softmax).collect();
            let mut round = Vec::with_capacity(N_CLASSES);
            for class in 0..N_CLASSES {
                let grads: Vec<Grad> = probs
                    .iter()
                    .zip(labels)
                    .map(|(p, l)| {
                        let y = if l.index() == class { 1.0 } else { 0.0 };
                        Grad {
                            g: p[class] - y,
                            h: p[class] * (1.0 - p[class]),
                        }
                    })
                    .collect();
                let mut builder = TreeBuilder {
                    rows,
                    sorted: &sorted,
                    grads: &grads,
                    config,
                    nodes: Vec::new(),
                };
                builder.build(vec![true; rows.len()], 0);
                round.push(Tree {
                    nodes: builder.nodes,
                });
            }
            for (z, row) in logits.iter_mut().zip(rows) {
                for (class, tree) in round.iter().enumerate() {
                    z[class] += tree.predict(row);
                }
            }
            model.trees.push(round);
        }
        Ok(model)
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::invalid(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.n_features
            )));
        }
        Ok(())
    }

    fn logits(&self, row: &[f64], rounds: usize) -> [f64; N_CLASSES] {
        let mut z = [self.base_score; N_CLASSES];
        for round in self.trees.iter().take(rounds) {
            for (zc, tree) in z.iter_mut().zip(round) {
                *zc += tree.predict(row);
            }
        }
        z
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; N_CLASSES]> {
        self.check_row(row)?;
        Ok(softmax(&self.logits(row, self.trees.len())))
    }

    pub fn predict(&self, row: &[f64]) -> Result<FaultLabel> {
        self.predict_proba(row).map(|p| argmax_label(&p))
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<FaultLabel>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Mean multiclass log-loss on `(rows, labels)` after each boosting
    /// round; entry 0 is the untrained ensemble.
    pub fn log_loss_by_round(&self, rows: &[Vec<f64>], labels: &[FaultLabel]) -> Result<Vec<f64>> {
        for r in rows {
            self.check_row(r)?;
        }
        let mut z = vec![[self.base_score; N_CLASSES]; rows.len()];
        let loss = |z: &[[f64; N_CLASSES]]| {
            z.iter()
                .zip(labels)
                .map(|(zi, l)| -softmax(zi)[l.index()].ln())
                .sum::<f64>()
                / rows.len() as f64
        };
        let mut out = vec![loss(&z)];
        for round in &self.trees {
            for (zi, row) in z.iter_mut().zip(rows) {
                for (zc, tree) in zi.iter_mut().zip(round) {
                    *zc += tree.predict(row);
                }
            }
            out.push(loss(&z));
        }
        Ok(out)
    }
}

/// Index of the largest probability; ties go to the earlier class.
pub fn argmax_label(p: &[f64; N_CLASSES]) -> FaultLabel {
    let mut best = 0;
    for c in 1..N_CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    FaultLabel::ALL[best]
}
