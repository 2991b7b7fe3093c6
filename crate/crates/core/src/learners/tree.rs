//! CART decision tree, built greedily.
//!
//! Classification nodes are scored by Gini impurity and regression nodes by
//! variance (sum of squared deviations). Candidate thresholds are the
//! midpoints between consecutive distinct sorted values of a feature; rows with
//! `feature <= threshold` go left. Among equally good splits the lowest feature
//! index wins, then the lowest threshold.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeTask {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// A chosen split and the summed child impurity it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Classification: `n_l·gini_l + n_r·gini_r`. Regression: `sse_l + sse_r`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: Node,
    params: TreeParams,
    task: TreeTask,
    n_features: usize,
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    task: TreeTask,
    params: TreeParams,
    n_features: usize,
    // For classification: targets mapped to dense class ids.
    class_of: Vec<usize>,
    classes: Vec<f64>,
}

impl DecisionTree {
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[f64],
        task: TreeTask,
        params: TreeParams,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Arity("cannot fit a tree on zero records".into()));
        }
        if rows.len() != targets.len() {
            return Err(Error::Arity(format!(
                "{} feature rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let n_features = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::Arity(format!(
                "feature rows have mixed arity ({} and {})",
                n_features,
                r.len()
            )));
        }
        if rows.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTarget("tree inputs must be finite".into()));
        }

        let mut classes: Vec<f64> = Vec::new();
        let mut class_of = Vec::new();
        if task == TreeTask::Classification {
            classes = targets.to_vec();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            class_of = targets
                .iter()
                .map(|t| classes.partition_point(|c| c < t))
                .collect();
        }
        let builder = Builder {
            rows,
            targets,
            task,
            params,
            n_features,
            class_of,
            classes,
        };
        let idx: Vec<usize> = (0..rows.len()).collect();
        let root = builder.grow(&idx, 0);
        Ok(Self {
            root,
            params,
            task,
            n_features,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Arity(format!(
                "input has {} features, tree was trained on {}",
                x.len(),
                self.n_features
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return Ok(*value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn task(&self) -> TreeTask {
        self.task
    }
}

impl Builder<'_> {
    fn grow(&self, idx: &[usize], depth: usize) -> Node {
        let leaf = || Node::Leaf {
            value: self.leaf_value(idx),
        };
        if depth >= self.params.max_depth
            || idx.len() < self.params.min_samples_split.max(2)
            || self.is_pure(idx)
        {
            return leaf();
        }
        let Some(split) = self.best_split(idx) else {
            return leaf();
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&l, depth + 1)),
            right: Box::new(self.grow(&r, depth + 1)),
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.targets[idx[0]];
        idx.iter().all(|&i| self.targets[i] == first)
    }

    fn leaf_value(&self, idx: &[usize]) -> f64 {
        match self.task {
            TreeTask::Regression => {
                idx.iter().map(|&i| self.targets[i]).sum::<f64>() / idx.len() as f64
            }
            TreeTask::Classification => {
                let mut counts = vec![0usize; self.classes.len()];
                for &i in idx {
                    counts[self.class_of[i]] += 1;
                }
                // First maximal count in ascending class order.
                let best =
                    counts
                        .iter()
                        .enumerate()
                        .fold((0, 0), |acc, (c, &n)| if n > acc.1 { (c, n) } else { acc });
                self.classes[best.0]
            }
        }
    }

    fn best_split(&self, idx: &[usize]) -> Option<SplitChoice> {
        let mut best: Option<SplitChoice> = None;
        let mut order = idx.to_vec();
        for feature in 0..self.n_features {
            order.sort_by(|&a, &b| self.rows[a][feature].total_cmp(&self.rows[b][feature]));
            let mut sweep = Sweep::new(self, &order);
            for k in 1..order.len() {
                sweep.move_left(self, order[k - 1]);
                let lo = self.rows[order[k - 1]][feature];
                let hi = self.rows[order[k]][feature];
                if lo == hi {
                    continue;
                }
                let threshold = lo + (hi - lo) / 2.0;
                let cost = sweep.cost();
                let better = match best {
                    None => true,
                    Some(b) => cost < b.cost - 1e-12 * (1.0 + b.cost.abs()),
                };
                if better {
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        cost,
                    });
                }
            }
        }
        best
    }
}

/// Running left/right statistics while sweeping sorted rows.
struct Sweep {
    n_left: usize,
    n_right: usize,
    counts_left: Vec<usize>,
    counts_right: Vec<usize>,
    sum_left: f64,
    sum_right: f64,
    sq_left: f64,
    sq_right: f64,
    task: TreeTask,
}

impl Sweep {
    fn new(b: &Builder<'_>, order: &[usize]) -> Self {
        let mut s = Sweep {
            n_left: 0,
            n_right: order.len(),
            counts_left: vec![0; b.classes.len()],
            counts_right: vec![0; b.classes.len()],
            sum_left: 0.0,
            sum_right: 0.0,
            sq_left: 0.0,
            sq_right: 0.0,
            task: b.task,
        };
        for &i in order {
            match b.task {
                TreeTask::Classification => s.counts_right[b.class_of[i]] += 1,
                TreeTask::Regression => {
                    s.sum_right += b.targets[i];
                    s.sq_right += b.targets[i] * b.targets[i];
                }
            }
        }
        s
    }

    fn move_left(&mut self, b: &Builder<'_>, i: usize) {
        self.n_left += 1;
        self.n_right -= 1;
        match self.task {
            TreeTask::Classification => {
                self.counts_left[b.class_of[i]] += 1;
                self.counts_right[b.class_of[i]] -= 1;
            }
            TreeTask::Regression => {
                let y = b.targets[i];
                self.sum_left += y;
                self.sum_right -= y;
                self.sq_left += y * y;
                self.sq_right -= y * y;
            }
        }
    }

    fn cost(&self) -> f64 {
        match self.task {
            TreeTask::Classification => {
                gini_mass(&self.counts_left, self.n_left)
                    + gini_mass(&self.counts_right, self.n_right)
            }
            TreeTask::Regression => {
                let sse = |sum: f64, sq: f64, n: usize| (sq - sum * sum / n as f64).max(0.0);
                sse(self.sum_left, self.sq_left, self.n_left)
                    + sse(self.sum_right, self.sq_right, self.n_right)
            }
        }
    }
}

/// `n · gini = n - Σ c² / n`.
fn gini_mass(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: usize = counts.iter().map(|c| c * c).sum();
    n as f64 - sq as f64 / n as f64
}
