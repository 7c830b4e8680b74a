//! CART tree growth over presorted feature columns.
//!
//! One builder serves both classification trees (Gini or entropy on class
//! weights) and the regression trees used by boosting (variance of the
//! residuals, Newton-step leaves). Samples carry weights so bootstrap
//! duplicates are counted without copying rows.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hyper::{Criterion, Splitter};

/// Node arrays; `feature[i] < 0` marks a leaf. Children of node `i` are
/// `left[i]` (x ≤ threshold) and `right[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// P(on) for classification nodes, the Newton step for regression nodes.
    pub value: Vec<f64>,
    /// Weighted (off, on) counts; empty for regression trees.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_counts: Vec<[f64; 2]>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.feature.iter().filter(|&&f| f < 0).count()
    }

    fn leaf_of(&self, row: &[f64]) -> usize {
        let mut node = 0;
        while self.feature[node] >= 0 {
            let f = self.feature[node] as usize;
            node = if row[f] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
        node
    }

    pub fn value(&self, row: &[f64]) -> f64 {
        self.value[self.leaf_of(row)]
    }

    /// Majority class of the reached leaf; a tied leaf votes 0.
    pub fn label(&self, row: &[f64]) -> u8 {
        u8::from(self.value(row) > 0.5)
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, d)) = stack.pop() {
            if self.feature[node] < 0 {
                max = max.max(d);
            } else {
                stack.push((self.left[node] as usize, d + 1));
                stack.push((self.right[node] as usize, d + 1));
            }
        }
        max
    }

    pub(crate) fn check(&self, n_features: usize) -> Result<(), String> {
        let n = self.n_nodes();
        if n == 0 {
            return Err("tree has no nodes".into());
        }
        let lens = [self.threshold.len(), self.left.len(), self.right.len(), self.value.len()];
        if lens.iter().any(|&l| l != n) || !(self.class_counts.is_empty() || self.class_counts.len() == n) {
            return Err("tree node arrays differ in length".into());
        }
        for i in 0..n {
            if self.feature[i] >= 0 {
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                if self.feature[i] as usize >= n_features || l <= i || r <= i || l >= n || r >= n {
                    return Err(format!("node {i} has an invalid split or child reference"));
                }
            }
        }
        Ok(())
    }
}

/// Feature columns plus, per feature, sample indices sorted by value.
pub(crate) struct Presorted {
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: ArrayView2<f64>) -> Self {
        let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let order = cols
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        Presorted { cols, order }
    }

    pub(crate) fn n_features(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn n_samples(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    pub(crate) fn for_each_row(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut row = vec![0.0; self.n_features()];
        for i in 0..self.n_samples() {
            for (r, col) in row.iter_mut().zip(&self.cols) {
                *r = col[i];
            }
            f(i, &row);
        }
    }
}

pub(crate) enum Target<'a> {
    Class { y: &'a [u8], criterion: Criterion },
    Regress { g: &'a [f64], h: &'a [f64] },
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub max_features: usize,
    pub splitter: Splitter,
}

/// Sufficient statistics of a node. Classification: `[w_off, w_on, 0, 0]`.
/// Regression: `[w, Σwg, Σwg², Σwh]`.
type Stats = [f64; 4];

impl Target<'_> {
    fn add(&self, s: &mut Stats, i: usize, w: f64) {
        match self {
            Target::Class { y, .. } => s[usize::from(y[i])] += w,
            Target::Regress { g, h } => {
                s[0] += w;
                s[1] += w * g[i];
                s[2] += w * g[i] * g[i];
                s[3] += w * h[i];
            }
        }
    }

    fn weight(&self, s: &Stats) -> f64 {
        match self {
            Target::Class { .. } => s[0] + s[1],
            Target::Regress { .. } => s[0],
        }
    }

    fn impurity(&self, s: &Stats) -> f64 {
        match self {
            Target::Class { criterion, .. } => {
                let w = s[0] + s[1];
                let (p0, p1) = (s[0] / w, s[1] / w);
                match criterion {
                    Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
                    Criterion::Entropy => -[p0, p1]
                        .iter()
                        .filter(|&&p| p > 0.0)
                        .map(|p| p * p.log2())
                        .sum::<f64>(),
                }
            }
            Target::Regress { .. } => (s[2] / s[0] - (s[1] / s[0]).powi(2)).max(0.0),
        }
    }

    fn leaf_value(&self, s: &Stats) -> f64 {
        match self {
            Target::Class { .. } => s[1] / (s[0] + s[1]),
            Target::Regress { .. } => s[1] / (s[3] + 1e-12),
        }
    }
}

pub fn gini(counts: [f64; 2]) -> f64 {
    Target::Class { y: &[], criterion: Criterion::Gini }.impurity(&[counts[0], counts[1], 0.0, 0.0])
}

pub fn entropy(counts: [f64; 2]) -> f64 {
    Target::Class { y: &[], criterion: Criterion::Entropy }.impurity(&[counts[0], counts[1], 0.0, 0.0])
}

fn sub(a: &Stats, b: &Stats) -> Stats {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Frame {
    node: usize,
    lo: usize,
    hi: usize,
    depth: usize,
    stats: Stats,
}

/// Grows one tree. `weights` gives each sample's multiplicity; samples with
/// zero weight are left out entirely.
pub(crate) fn grow<R: Rng>(
    data: &Presorted,
    target: &Target,
    weights: Option<&[f64]>,
    params: &GrowParams,
    rng: &mut R,
) -> Tree {
    let n = data.n_samples();
    let d = data.n_features();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);

    let mut order: Vec<Vec<u32>> = match weights {
        None => data.order.clone(),
        Some(ws) => data
            .order
            .iter()
            .map(|o| o.iter().copied().filter(|&i| ws[i as usize] > 0.0).collect())
            .collect(),
    };
    let active = order.first().map_or(0, Vec::len);

    let mut root = [0.0; 4];
    for &i in order.first().map_or(&[][..], |o| &o[..]) {
        target.add(&mut root, i as usize, w(i as usize));
    }

    let mut tree = Tree {
        feature: Vec::new(),
        threshold: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        value: Vec::new(),
        class_counts: Vec::new(),
    };
    let classify = matches!(target, Target::Class { .. });
    let push_node = |tree: &mut Tree, s: &Stats| {
        tree.feature.push(-1);
        tree.threshold.push(0.0);
        tree.left.push(0);
        tree.right.push(0);
        tree.value.push(target.leaf_value(s));
        if classify {
            tree.class_counts.push([s[0], s[1]]);
        }
        tree.feature.len() - 1
    };

    let root_id = push_node(&mut tree, &root);
    let mut goes_left = vec![false; n];
    let mut buffer: Vec<u32> = Vec::with_capacity(active);
    let mut features: Vec<usize> = (0..d).collect();
    let mut stack = vec![Frame { node: root_id, lo: 0, hi: active, depth: 0, stats: root }];

    while let Some(frame) = stack.pop() {
        let Frame { node, lo, hi, depth, stats } = frame;
        if hi - lo < 2 || params.max_depth.is_some_and(|m| depth >= m) || is_pure(target, &order[0][lo..hi]) {
            continue;
        }

        let candidates: &[usize] = if params.max_features >= d {
            &features
        } else {
            features.sort_unstable();
            let (chosen, _) = features.partial_shuffle(rng, params.max_features);
            chosen.sort_unstable();
            chosen
        };

        let parent_imp = target.impurity(&stats);
        let parent_w = target.weight(&stats);
        let mut best: Option<Split> = None;
        for &f in candidates {
            let col = &data.cols[f];
            let seg = &order[f][lo..hi];
            let found = match params.splitter {
                Splitter::Best => best_threshold(target, col, seg, &w, &stats, parent_imp, parent_w),
                Splitter::Random => random_threshold(target, col, seg, &w, &stats, parent_imp, parent_w, rng),
            };
            if let Some((threshold, gain)) = found {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split { feature: f, threshold, gain });
                }
            }
        }
        let Some(split) = best else { continue };

        let col = &data.cols[split.feature];
        let mut left_stats = [0.0; 4];
        for &i in &order[split.feature][lo..hi] {
            let i = i as usize;
            goes_left[i] = col[i] <= split.threshold;
            if goes_left[i] {
                target.add(&mut left_stats, i, w(i));
            }
        }
        let mut mid = lo;
        for o in order.iter_mut() {
            buffer.clear();
            let seg = &mut o[lo..hi];
            let mut k = 0;
            for p in 0..seg.len() {
                let i = seg[p];
                if goes_left[i as usize] {
                    seg[k] = i;
                    k += 1;
                } else {
                    buffer.push(i);
                }
            }
            seg[k..].copy_from_slice(&buffer);
            mid = lo + k;
        }

        let right_stats = sub(&stats, &left_stats);
        let l = push_node(&mut tree, &left_stats);
        let r = push_node(&mut tree, &right_stats);
        tree.feature[node] = split.feature as i32;
        tree.threshold[node] = split.threshold;
        tree.left[node] = l as u32;
        tree.right[node] = r as u32;
        stack.push(Frame { node: r, lo: mid, hi, depth: depth + 1, stats: right_stats });
        stack.push(Frame { node: l, lo, hi: mid, depth: depth + 1, stats: left_stats });
    }
    tree
}

fn is_pure(target: &Target, seg: &[u32]) -> bool {
    match target {
        Target::Class { y, .. } => {
            let first = y[seg[0] as usize];
            seg.iter().all(|&i| y[i as usize] == first)
        }
        Target::Regress { g, .. } => {
            let first = g[seg[0] as usize];
            seg.iter().all(|&i| g[i as usize] == first)
        }
    }
}

fn gain_of(target: &Target, left: &Stats, parent: &Stats, parent_imp: f64, parent_w: f64) -> f64 {
    let right = sub(parent, left);
    let (wl, wr) = (target.weight(left), target.weight(&right));
    parent_imp - (wl * target.impurity(left) + wr * target.impurity(&right)) / parent_w
}

/// Scans midpoints between consecutive distinct values; the first of equal
/// gains wins, so lower thresholds take precedence.
fn best_threshold(
    target: &Target,
    col: &[f64],
    seg: &[u32],
    w: &impl Fn(usize) -> f64,
    parent: &Stats,
    parent_imp: f64,
    parent_w: f64,
) -> Option<(f64, f64)> {
    let mut left = [0.0; 4];
    let mut best: Option<(f64, f64)> = None;
    for p in 0..seg.len() - 1 {
        let i = seg[p] as usize;
        target.add(&mut left, i, w(i));
        let (a, b) = (col[i], col[seg[p + 1] as usize]);
        if b <= a {
            continue;
        }
        let gain = gain_of(target, &left, parent, parent_imp, parent_w);
        if best.is_none_or(|(_, g)| gain > g) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some((threshold, gain));
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn random_threshold<R: Rng>(
    target: &Target,
    col: &[f64],
    seg: &[u32],
    w: &impl Fn(usize) -> f64,
    parent: &Stats,
    parent_imp: f64,
    parent_w: f64,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let (min, max) = (col[seg[0] as usize], col[seg[seg.len() - 1] as usize]);
    if max <= min {
        return None;
    }
    let threshold = rng.random_range(min..max);
    let mut left = [0.0; 4];
    for &i in seg {
        let i = i as usize;
        if col[i] > threshold {
            break;
        }
        target.add(&mut left, i, w(i));
    }
    Some((threshold, gain_of(target, &left, parent, parent_imp, parent_w)))
}
