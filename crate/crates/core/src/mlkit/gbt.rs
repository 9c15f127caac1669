use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{logistic_grad_hess, logistic_loss, sigmoid, softmax, softmax_grad_hess, softmax_loss};
use super::{FeatureMatrix, MlError};

/// Ridge added to the hessian sum in leaf values and split gains.
pub const HESSIAN_RIDGE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtHyperparams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    pub subsample: f64,
    pub colsample_per_tree: f64,
    pub seed: u64,
}

impl Default for GbtHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_depth: 5,
            n_estimators: 300,
            subsample: 0.9,
            colsample_per_tree: 0.9,
            seed: 0,
        }
    }
}

impl GbtHyperparams {
    pub fn validate(&self) -> Result<(), MlError> {
        let bad = |m: &str| Err(MlError::Hyperparams(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        if !(self.colsample_per_tree > 0.0 && self.colsample_per_tree <= 1.0) {
            return bad("colsample_per_tree must lie in (0, 1]");
        }
        Ok(())
    }
}

/// A regression tree node. Rows with `x[feature] < threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        value: f64,
    },
}

impl Node {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if row[*feature] < *threshold { left } else { right },
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn visit_splits(&self, f: &mut impl FnMut(usize, f64)) {
        if let Node::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }
}

/// One boosted tree; `output` is the score it contributes to (always 0 for
/// binary models, the class index for multiclass ones).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub round: usize,
    pub output: usize,
    pub root: Node,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Class labels in sorted order; probability columns follow it.
    pub classes: Vec<String>,
    pub n_features: usize,
    /// Initial raw score per output: the log-odds of the second class for
    /// binary models, log class frequencies for multiclass ones.
    pub base_score: Vec<f64>,
    pub trees: Vec<Tree>,
    /// Total split gain per feature index.
    pub importances: Vec<f64>,
    pub hyperparams: GbtHyperparams,
    /// Mean training loss before the first round and after every round.
    #[serde(default)]
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn n_outputs(&self) -> usize {
        self.base_score.len()
    }

    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut s = self.base_score.clone();
        for t in &self.trees {
            s[t.output] += t.root.predict(row);
        }
        s
    }

    fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let s = self.raw_scores(row);
        if self.classes.len() == 2 {
            let p = sigmoid(s[0]);
            vec![1.0 - p, p]
        } else {
            softmax(&s)
        }
    }
}

fn mean_loss(scores: &[f64], y: &[usize], n_out: usize) -> f64 {
    let total: f64 = if n_out == 1 {
        scores.iter().zip(y).map(|(&s, &c)| logistic_loss(s, c as f64)).sum()
    } else {
        scores.chunks(n_out).zip(y).map(|(s, &c)| softmax_loss(s, c)).sum()
    };
    total / y.len() as f64
}

fn split_gain(gl: f64, hl: f64, g: f64, h: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (gl * gl / (hl + HESSIAN_RIDGE) + gr * gr / (hr + HESSIAN_RIDGE) - g * g / (h + HESSIAN_RIDGE))
}

/// A threshold `t` with `lo < t <= hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct ArenaNode {
    g: f64,
    h: f64,
    split: Option<(Candidate, usize, usize)>,
}

const NO_NODE: u32 = u32::MAX;

struct Grower<'a> {
    /// Per feature: `(row, value)` sorted by value, then row.
    sorted: &'a [Vec<(u32, f64)>],
    x: &'a FeatureMatrix,
    max_depth: usize,
    learning_rate: f64,
}

impl Grower<'_> {
    /// Best split of every open node (ids `level_start..`) along `feature`.
    fn scan_feature(
        &self,
        feature: usize,
        node_of: &[u32],
        level_start: usize,
        open: &[ArenaNode],
        g: &[f64],
        h: &[f64],
    ) -> Vec<Option<Candidate>> {
        let n = open.len();
        let mut gl = vec![0.0; n];
        let mut hl = vec![0.0; n];
        let mut last: Vec<Option<f64>> = vec![None; n];
        let mut best: Vec<Option<Candidate>> = vec![None; n];
        for &(row, v) in &self.sorted[feature] {
            let id = node_of[row as usize];
            if id == NO_NODE {
                continue;
            }
            let k = id as usize - level_start;
            if let Some(prev) = last[k] {
                if v > prev {
                    let gain = split_gain(gl[k], hl[k], open[k].g, open[k].h);
                    if best[k].is_none_or(|b| gain > b.gain) {
                        best[k] = Some(Candidate {
                            gain,
                            feature,
                            threshold: midpoint(prev, v),
                        });
                    }
                }
            }
            gl[k] += g[row as usize];
            hl[k] += h[row as usize];
            last[k] = Some(v);
        }
        best
    }

    fn grow(&self, rows: &[usize], features: &[usize], g: &[f64], h: &[f64]) -> Node {
        let mut node_of = vec![NO_NODE; self.x.rows()];
        let (mut g0, mut h0) = (0.0, 0.0);
        for &r in rows {
            node_of[r] = 0;
            g0 += g[r];
            h0 += h[r];
        }
        let mut arena = vec![ArenaNode {
            g: g0,
            h: h0,
            split: None,
        }];
        let mut level_start = 0;
        for _depth in 0..self.max_depth {
            let level_end = arena.len();
            if level_start == level_end {
                break;
            }
            let open = &arena[level_start..level_end];
            let per_feature: Vec<Vec<Option<Candidate>>> = features
                .par_iter()
                .map(|&f| self.scan_feature(f, &node_of, level_start, open, g, h))
                .collect();
            // Features are visited in ascending index order, so on equal
            // gain the lowest feature index wins.
            let mut chosen: Vec<Option<Candidate>> = vec![None; open.len()];
            for cands in &per_feature {
                for (slot, c) in chosen.iter_mut().zip(cands) {
                    if let Some(c) = c {
                        if c.gain > 0.0 && slot.is_none_or(|s| c.gain > s.gain) {
                            *slot = Some(*c);
                        }
                    }
                }
            }
            let mut child_of: Vec<Option<(usize, usize)>> = vec![None; open.len()];
            for (k, c) in chosen.iter().enumerate() {
                if let Some(c) = c {
                    let left = arena.len();
                    arena.push(ArenaNode {
                        g: 0.0,
                        h: 0.0,
                        split: None,
                    });
                    arena.push(ArenaNode {
                        g: 0.0,
                        h: 0.0,
                        split: None,
                    });
                    arena[level_start + k].split = Some((*c, left, left + 1));
                    child_of[k] = Some((left, left + 1));
                }
            }
            for &r in rows {
                let id = node_of[r];
                if id == NO_NODE {
                    continue;
                }
                let k = id as usize - level_start;
                match (chosen[k], child_of[k]) {
                    (Some(c), Some((l, rt))) => {
                        let child = if self.x.get(r, c.feature) < c.threshold { l } else { rt };
                        arena[child].g += g[r];
                        arena[child].h += h[r];
                        node_of[r] = child as u32;
                    }
                    _ => node_of[r] = NO_NODE,
                }
            }
            level_start = level_end;
        }
        self.to_node(&arena, 0)
    }

    fn to_node(&self, arena: &[ArenaNode], id: usize) -> Node {
        let n = &arena[id];
        match n.split {
            Some((c, l, r)) => Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                gain: c.gain,
                left: Box::new(self.to_node(arena, l)),
                right: Box::new(self.to_node(arena, r)),
            },
            None => Node::Leaf {
                value: -self.learning_rate * n.g / (n.h + HESSIAN_RIDGE),
            },
        }
    }
}

fn draw_subset(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<usize> {
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    if k == n {
        return (0..n).collect();
    }
    let mut v = sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Fits a boosted-tree classifier. Labels are sorted to fix the class order.
pub fn train_gbt<S: AsRef<str>>(x: &FeatureMatrix, y: &[S], hp: &GbtHyperparams) -> Result<GbtModel, MlError> {
    hp.validate()?;
    if y.len() != x.rows() {
        return Err(MlError::LabelCount {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in y {
        *counts.entry(l.as_ref()).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(MlError::TooFewClasses(counts.len()));
    }
    if let Some((c, &n)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(MlError::SmallClass {
            class: c.to_string(),
            count: n,
        });
    }
    let classes: Vec<String> = counts.keys().map(|s| s.to_string()).collect();
    let y_idx: Vec<usize> = y
        .iter()
        .map(|l| {
            classes
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .expect("label indexed")
        })
        .collect();

    let n = x.rows();
    let n_out = if classes.len() == 2 { 1 } else { classes.len() };
    let freq: Vec<f64> = counts.values().map(|&c| c as f64 / n as f64).collect();
    let base_score: Vec<f64> = if n_out == 1 {
        vec![(freq[1] / freq[0]).ln()]
    } else {
        freq.iter().map(|p| p.ln()).collect()
    };

    let sorted: Vec<Vec<(u32, f64)>> = (0..x.cols())
        .into_par_iter()
        .map(|f| {
            let mut col: Vec<(u32, f64)> = (0..n).map(|r| (r as u32, x.get(r, f))).collect();
            col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            col
        })
        .collect();
    let grower = Grower {
        sorted: &sorted,
        x,
        max_depth: hp.max_depth,
        learning_rate: hp.learning_rate,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut trees = Vec::with_capacity(hp.n_estimators * n_out);
    let mut importances = vec![0.0; x.cols()];
    let mut train_loss = vec![mean_loss(&scores, &y_idx, n_out)];
    let mut g = vec![vec![0.0; n]; n_out];
    let mut h = vec![vec![0.0; n]; n_out];

    for round in 0..hp.n_estimators {
        let rows = draw_subset(&mut rng, n, hp.subsample);
        for i in 0..n {
            if n_out == 1 {
                let (gi, hi) = logistic_grad_hess(scores[i], y_idx[i] as f64);
                g[0][i] = gi;
                h[0][i] = hi;
            } else {
                for (k, (gi, hi)) in softmax_grad_hess(&scores[i * n_out..(i + 1) * n_out], y_idx[i])
                    .into_iter()
                    .enumerate()
                {
                    g[k][i] = gi;
                    h[k][i] = hi;
                }
            }
        }
        for output in 0..n_out {
            let features = draw_subset(&mut rng, x.cols(), hp.colsample_per_tree);
            let root = grower.grow(&rows, &features, &g[output], &h[output]);
            root.visit_splits(&mut |f, gain| importances[f] += gain);
            for i in 0..n {
                scores[i * n_out + output] += root.predict(x.row(i));
            }
            trees.push(Tree { round, output, root });
        }
        train_loss.push(mean_loss(&scores, &y_idx, n_out));
    }

    Ok(GbtModel {
        classes,
        n_features: x.cols(),
        base_score,
        trees,
        importances,
        hyperparams: hp.clone(),
        train_loss,
    })
}

/// Class probabilities per row, columns in `m.classes` order.
pub fn predict_proba(m: &GbtModel, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, MlError> {
    if x.cols() != m.n_features {
        return Err(MlError::FeatureCount {
            expected: m.n_features,
            found: x.cols(),
        });
    }
    Ok((0..x.rows()).map(|r| m.probabilities(x.row(r))).collect())
}

/// Every feature index with its total gain, by decreasing gain and then
/// increasing index.
pub fn feature_importance(m: &GbtModel) -> Vec<(usize, f64)> {
    let mut ranking: Vec<(usize, f64)> = m.importances.iter().copied().enumerate().collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranking
}
