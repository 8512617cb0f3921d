use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Matrix;
use super::gain::best_split_rows;
use super::HyperParams;

/// One node of a tree stored in pre-order. An internal node's left child
/// is always the next node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Node {
    Internal {
        feature: usize,
        /// Go left iff `count <= threshold`.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        distribution: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf distribution reached by `x`.
    pub fn leaf(&self, x: &[u32]) -> &[f64; 3] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] as f64 <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Check pre-order layout, child links, feature bounds and leaf
    /// distributions.
    pub(crate) fn validate(&self, dim: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        // Walk in pre-order; every node must be visited once, in index order.
        let mut next = 0usize;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i != next || i >= self.nodes.len() {
                return Err(format!("node {i} out of pre-order position (expected {next})"));
            }
            next += 1;
            match &self.nodes[i] {
                Node::Leaf { distribution } => {
                    let sum: f64 = distribution.iter().sum();
                    if distribution.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                        return Err(format!("node {i}: invalid distribution {distribution:?}"));
                    }
                }
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= dim {
                        return Err(format!("node {i}: feature {feature} >= dimension {dim}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    if *left != i + 1 || *right <= *left {
                        return Err(format!("node {i}: bad children {left}/{right}"));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        if next != self.nodes.len() {
            return Err(format!("{} unreachable nodes", self.nodes.len() - next));
        }
        Ok(())
    }
}

/// Per-tree random stream: the forest seed mixed with a hash of the tree
/// index, so trees are independent of how many others are grown.
pub(crate) fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    // splitmix64 finalizer
    let mut z = (tree_index as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(seed ^ z)
}

pub(crate) struct Grown {
    pub tree: Tree,
    pub bootstrap: Vec<usize>,
    /// Weighted gain per feature: sum of node gain times node share.
    pub importance: Vec<f64>,
}

pub(crate) fn grow(m: &Matrix, hp: &HyperParams, tree_index: usize) -> Grown {
    let mut rng = tree_rng(hp.seed, tree_index);
    let n = m.rows();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let k = hp.features_per_split_for(m.dim);
    let mut g = Grower {
        m,
        hp,
        k,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; m.dim],
        scratch: Vec::new(),
        root_size: n as f64,
    };
    let mut rows = bootstrap.clone();
    g.node(&mut rows, 0);
    Grown {
        tree: Tree { nodes: g.nodes },
        bootstrap,
        importance: g.importance,
    }
}

struct Grower<'a> {
    m: &'a Matrix,
    hp: &'a HyperParams,
    k: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    scratch: Vec<(u32, u8)>,
    root_size: f64,
}

impl Grower<'_> {
    fn node(&mut self, rows: &mut [usize], depth: usize) {
        let mut counts = [0u64; 3];
        for &r in rows.iter() {
            counts[self.m.labels[r] as usize] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.hp.max_depth.is_some_and(|d| depth >= d);
        let too_small = rows.len() < 2 * self.hp.min_samples_leaf;
        let split = if pure || depth_capped || too_small {
            None
        } else {
            let mut features = sample(&mut self.rng, self.m.dim, self.k).into_vec();
            features.sort_unstable();
            best_split_rows(self.m, rows, &features, self.hp.min_samples_leaf, &mut self.scratch)
        };
        let Some(split) = split else {
            let n = rows.len() as f64;
            self.nodes.push(Node::Leaf {
                distribution: counts.map(|c| c as f64 / n),
            });
            return;
        };
        self.importance[split.feature] += split.gain * rows.len() as f64 / self.root_size;
        let at = self.nodes.len();
        self.nodes.push(Node::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: at + 1,
            right: 0,
        });
        // Stable partition keeps the row order deterministic.
        let (f, t) = (split.feature, split.threshold);
        let mut left: Vec<usize> = Vec::with_capacity(rows.len());
        let mut right: Vec<usize> = Vec::new();
        for &r in rows.iter() {
            if self.m.get(r, f) as f64 <= t {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        self.node(&mut left, depth + 1);
        let right_at = self.nodes.len();
        if let Node::Internal { right: r, .. } = &mut self.nodes[at] {
            *r = right_at;
        }
        self.node(&mut right, depth + 1);
    }
}
