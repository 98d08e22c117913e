//! CART decision trees (Gini impurity) and bagged random forests.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PixelSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    /// Samples with `features[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        probability: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Random feature subset size per split; `None` uses all four.
    pub features_per_split: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
    split_at: usize,
}

/// Best split of `idx` over `features`, maximizing
/// `sum_children (pos^2 + neg^2) / n_child` (equivalently minimizing the
/// weighted Gini impurity). Features are tried in ascending order and values
/// ascending, replacing only on strict improvement, so ties keep the lowest
/// feature index and smallest split value.
fn best_split(samples: &[PixelSample], idx: &mut [usize], features: &[usize], min_leaf: usize) -> Option<(Candidate, Vec<usize>)> {
    let n = idx.len();
    let total_pos = idx.iter().filter(|&&i| samples[i].truth).count();
    let mut best: Option<(Candidate, Vec<usize>)> = None;
    for &f in features {
        idx.sort_unstable_by(|&a, &b| samples[a].features[f].total_cmp(&samples[b].features[f]));
        let mut pos_left = 0usize;
        let mut found: Option<Candidate> = None;
        for p in 0..n - 1 {
            if samples[idx[p]].truth {
                pos_left += 1;
            }
            let (a, b) = (samples[idx[p]].features[f], samples[idx[p + 1]].features[f]);
            if a == b {
                continue;
            }
            let n_left = p + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let neg_left = n_left - pos_left;
            let pos_right = total_pos - pos_left;
            let neg_right = n_right - pos_right;
            let sq = |x: usize| (x * x) as f64;
            let score = (sq(pos_left) + sq(neg_left)) / n_left as f64 + (sq(pos_right) + sq(neg_right)) / n_right as f64;
            if found.as_ref().is_none_or(|c| score > c.score) {
                let mut threshold = 0.5 * (a + b);
                if threshold >= b {
                    threshold = a;
                }
                found = Some(Candidate {
                    score,
                    feature: f,
                    threshold,
                    split_at: n_left,
                });
            }
        }
        if let Some(c) = found {
            if best.as_ref().is_none_or(|(b, _)| c.score > b.score) {
                best = Some((c, idx.to_vec()));
            }
        }
    }
    best
}

impl DecisionTree {
    pub fn fit(samples: &[PixelSample], params: &TreeParams) -> Result<Self> {
        Self::fit_indices(samples, (0..samples.len()).collect(), params, None)
    }

    fn fit_indices(samples: &[PixelSample], root: Vec<usize>, params: &TreeParams, mut rng: Option<&mut ChaCha8Rng>) -> Result<Self> {
        if root.is_empty() {
            return Err(Error::Training("empty sample set".into()));
        }
        let min_leaf = params.min_leaf.max(1);
        let mut nodes = vec![TreeNode::Leaf {
            probability: 0.0,
            samples: 0,
        }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((node, mut idx, depth)) = stack.pop() {
            let n = idx.len();
            let pos = idx.iter().filter(|&&i| samples[i].truth).count();
            let leaf = TreeNode::Leaf {
                probability: pos as f64 / n as f64,
                samples: n,
            };
            let can_split = pos != 0 && pos != n && n >= 2 * min_leaf && params.max_depth.is_none_or(|d| depth < d);
            if !can_split {
                nodes[node] = leaf;
                continue;
            }
            let features: Vec<usize> = match (params.features_per_split, rng.as_deref_mut()) {
                (Some(k), Some(rng)) if k < 4 => {
                    let mut f = index::sample(rng, 4, k).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => vec![0, 1, 2, 3],
            };
            match best_split(samples, &mut idx, &features, min_leaf) {
                None => nodes[node] = leaf,
                Some((c, sorted)) => {
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(TreeNode::Leaf { probability: 0.0, samples: 0 });
                    nodes.push(TreeNode::Leaf { probability: 0.0, samples: 0 });
                    nodes[node] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    let right_idx = sorted[c.split_at..].to_vec();
                    let mut left_idx = sorted;
                    left_idx.truncate(c.split_at);
                    stack.push((right, right_idx, depth + 1));
                    stack.push((left, left_idx, depth + 1));
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn probability(&self, f: &[f64; 4]) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { probability, .. } => return *probability,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if f[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, f: &[f64; 4]) -> bool {
        self.probability(f) >= 0.5
    }

    /// Depth of the deepest leaf (root = 0).
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, d)) = stack.pop() {
            match &self.nodes[node] {
                TreeNode::Leaf { .. } => max = max.max(d),
                TreeNode::Split { left, right, .. } => {
                    stack.push((*left, d + 1));
                    stack.push((*right, d + 1));
                }
            }
        }
        max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
}

impl RandomForest {
    /// Each tree grows on its own seeded bootstrap sample with a random
    /// feature subset drawn at every split.
    pub fn fit(samples: &[PixelSample], n_trees: usize, params: &TreeParams, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Training("empty sample set".into()));
        }
        if n_trees == 0 {
            return Err(Error::Training("forest needs at least one tree".into()));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let tree_seeds: Vec<u64> = (0..n_trees).map(|_| master.gen()).collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let n = samples.len();
                let boot: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                DecisionTree::fit_indices(samples, boot, params, Some(&mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees, tree_seeds })
    }

    pub fn votes(&self, f: &[f64; 4]) -> usize {
        self.trees.iter().filter(|t| t.predict(f)).count()
    }

    /// Majority vote; an even split counts as plume.
    pub fn predict(&self, f: &[f64; 4]) -> bool {
        2 * self.votes(f) >= self.trees.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unconstrained() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
        }
    }

    fn leaf(p: f64) -> DecisionTree {
        DecisionTree {
            nodes: vec![TreeNode::Leaf { probability: p, samples: 1 }],
        }
    }

    #[test]
    fn xor_is_fit_exactly() {
        let samples: Vec<PixelSample> = [(0.0, 0.0, false), (0.0, 1.0, true), (1.0, 0.0, true), (1.0, 1.0, false)]
            .iter()
            .map(|&(a, b, t)| PixelSample { features: [a, b, 0.0, 0.0], truth: t })
            .collect();
        let tree = DecisionTree::fit(&samples, &unconstrained()).unwrap();
        assert!(samples.iter().all(|s| tree.predict(&s.features) == s.truth));
    }

    #[test]
    fn ties_pick_lowest_feature_and_value() {
        // features 0 and 1 are identical, so every split ties across them
        let samples: Vec<PixelSample> = (0..6)
            .map(|i| {
                let v = i as f64 / 5.0;
                PixelSample { features: [v, v, 0.0, 0.0], truth: i >= 3 }
            })
            .collect();
        let tree = DecisionTree::fit(&samples, &unconstrained()).unwrap();
        match &tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn forest_tie_goes_to_plume() {
        let mut trees = vec![leaf(1.0); 10];
        trees.extend(vec![leaf(0.0); 10]);
        let forest = RandomForest {
            tree_seeds: vec![0; 20],
            trees,
        };
        assert_eq!(forest.votes(&[0.0; 4]), 10);
        assert!(forest.predict(&[0.0; 4]));
    }

    #[test]
    fn forest_is_seeded() {
        let samples: Vec<PixelSample> = (0..300)
            .map(|i| {
                let v = (i * 7 % 300) as f64 / 300.0;
                PixelSample { features: [v, 1.0 - v, (v * 3.0) % 1.0, 0.5], truth: v > 0.4 }
            })
            .collect();
        let p = TreeParams { max_depth: Some(6), min_leaf: 5, features_per_split: Some(2) };
        let a = RandomForest::fit(&samples, 5, &p, 9).unwrap();
        let b = RandomForest::fit(&samples, 5, &p, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 5);
    }

    fn consistent_samples(raw: Vec<(u8, u8, u8, u8, bool)>) -> Vec<PixelSample> {
        // consistent: identical feature vectors share one label (first wins)
        let mut seen = std::collections::HashMap::new();
        raw.into_iter()
            .map(|(a, b, c, d, t)| {
                let key = (a % 8, b % 8, c % 8, d % 8);
                let truth = *seen.entry(key).or_insert(t);
                PixelSample {
                    features: [key.0 as f64 / 7.0, key.1 as f64 / 7.0, key.2 as f64 / 7.0, key.3 as f64 / 7.0],
                    truth,
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn unconstrained_tree_fits_training_set(raw in proptest::collection::vec(any::<(u8, u8, u8, u8, bool)>(), 1..200)) {
            let samples = consistent_samples(raw);
            let tree = DecisionTree::fit(&samples, &unconstrained()).unwrap();
            for s in &samples {
                prop_assert_eq!(tree.predict(&s.features), s.truth);
            }
        }

        #[test]
        fn depth_limit_respected(raw in proptest::collection::vec(any::<(u8, u8, u8, u8, bool)>(), 1..200), d in 0usize..5) {
            let samples = consistent_samples(raw);
            let p = TreeParams { max_depth: Some(d), min_leaf: 1, features_per_split: None };
            let tree = DecisionTree::fit(&samples, &p).unwrap();
            prop_assert!(tree.depth() <= d);
        }
    }
}
