//! Binary CART classifier: Gini splits at midpoints, Laplace-smoothed leaf
//! confidence, and a box-drawn rule listing.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis};
use crate::ensemble::Classifier;
use crate::error::{Error, Result};
use crate::store::decimal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    #[serde(with = "decimal")]
    pub min_gini_decrease: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        Self { max_depth: 5, min_leaf: 5, min_gini_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub a: usize,
    pub n: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.a + self.n
    }

    pub fn add(&mut self, d: Diagnosis) {
        match d {
            Diagnosis::A => self.a += 1,
            Diagnosis::N => self.n += 1,
        }
    }

    /// Majority label; ties go to A.
    pub fn majority(&self) -> Diagnosis {
        if self.a >= self.n {
            Diagnosis::A
        } else {
            Diagnosis::N
        }
    }

    /// `(n_majority + 1) / (n + 2)`.
    pub fn laplace_confidence(&self) -> f64 {
        (self.a.max(self.n) + 1) as f64 / (self.total() + 2) as f64
    }

    pub fn gini(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (pa, pn) = (self.a as f64 / n, self.n as f64 / n);
        1.0 - pa * pa - pn * pn
    }

    fn sum_sq(&self) -> u128 {
        (self.a as u128).pow(2) + (self.n as u128).pow(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CartNode {
    Split {
        feature: String,
        #[serde(with = "decimal")]
        threshold: f64,
        counts: ClassCounts,
        left: Box<CartNode>,
        right: Box<CartNode>,
    },
    Leaf {
        label: Diagnosis,
        #[serde(with = "decimal")]
        confidence: f64,
        counts: ClassCounts,
    },
}

impl CartNode {
    fn leaf(counts: ClassCounts) -> Self {
        CartNode::Leaf { label: counts.majority(), confidence: counts.laplace_confidence(), counts }
    }

    pub fn counts(&self) -> ClassCounts {
        match self {
            CartNode::Split { counts, .. } | CartNode::Leaf { counts, .. } => *counts,
        }
    }

    pub fn mode(&self) -> Diagnosis {
        match self {
            CartNode::Leaf { label, .. } => *label,
            CartNode::Split { counts, .. } => counts.majority(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            CartNode::Leaf { .. } => 0,
            CartNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CartNode::Leaf { .. } => 1,
            CartNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    pub schema: Vec<String>,
    pub params: CartParams,
    pub training_size: usize,
    pub root: CartNode,
}

/// The winning split at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

/// Exact split score: sum over children of `(a² + n²) / size`, held as a
/// fraction so equal-quality candidates compare equal. Larger is better.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: ClassCounts, right: ClassCounts) -> Self {
        let (nl, nr) = (left.total() as u128, right.total() as u128);
        Score { num: left.sum_sq() * nr + right.sum_sq() * nl, den: nl * nr }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // keep `hi` strictly on the right of the threshold
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Best Gini split of `rows`, scanning every feature and every midpoint
/// between consecutive distinct values. Ties keep the lower feature index,
/// then the smaller threshold. Candidates leaving fewer than `min_leaf`
/// samples on either side are skipped.
pub fn best_split(x: &[Vec<f64>], y: &[Diagnosis], rows: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let mut parent = ClassCounts::default();
    for &r in rows {
        parent.add(y[r]);
    }
    let n = rows.len();
    let width = x.first().map_or(0, Vec::len);
    let mut best: Option<(Score, usize, f64)> = None;
    let mut order = rows.to_vec();
    for f in 0..width {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left = ClassCounts::default();
        for i in 0..n.saturating_sub(1) {
            left.add(y[order[i]]);
            let (lo, hi) = (x[order[i]][f], x[order[i + 1]][f]);
            let n_left = i + 1;
            if lo == hi || n_left < min_leaf.max(1) || n - n_left < min_leaf.max(1) {
                continue;
            }
            let right = ClassCounts { a: parent.a - left.a, n: parent.n - left.n };
            let score = Score::new(left, right);
            if best.as_ref().is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater) {
                best = Some((score, f, midpoint(lo, hi)));
            }
        }
    }
    best.map(|(score, feature, threshold)| SplitChoice {
        feature,
        threshold,
        decrease: parent.gini() - (n as f64 - score.as_f64()) / n as f64,
    })
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Diagnosis],
    schema: &'a [String],
    params: CartParams,
}

impl Grower<'_> {
    fn grow(&self, rows: &[usize], depth: usize) -> CartNode {
        let mut counts = ClassCounts::default();
        for &r in rows {
            counts.add(self.y[r]);
        }
        if counts.a == 0 || counts.n == 0 || depth >= self.params.max_depth {
            return CartNode::leaf(counts);
        }
        let Some(split) = best_split(self.x, self.y, rows, self.params.min_leaf) else {
            return CartNode::leaf(counts);
        };
        if split.decrease < self.params.min_gini_decrease {
            return CartNode::leaf(counts);
        }
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][split.feature] <= split.threshold);
        CartNode::Split {
            feature: self.schema[split.feature].clone(),
            threshold: split.threshold,
            counts,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

impl CartModel {
    pub fn train(train: &Dataset, params: CartParams) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidDataset("empty training set".into()));
        }
        if params.min_leaf == 0 {
            return Err(Error::InvalidArgument("min_leaf must be at least 1".into()));
        }
        let x: Vec<Vec<f64>> = train.samples().iter().map(|s| s.features.clone()).collect();
        let y = train.labels();
        let rows: Vec<usize> = (0..x.len()).collect();
        let grower = Grower { x: &x, y: &y, schema: train.schema(), params };
        Ok(Self {
            schema: train.schema().to_vec(),
            params,
            training_size: train.len(),
            root: grower.grow(&rows, 0),
        })
    }

    /// The leaf a sample is routed to (`<=` goes left).
    pub fn leaf_for(&self, features: &[f64]) -> Result<&CartNode> {
        if features.len() != self.schema.len() {
            return Err(Error::DimensionMismatch { expected: self.schema.len(), found: features.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                CartNode::Leaf { .. } => return Ok(node),
                CartNode::Split { feature, threshold, left, right, .. } => {
                    let j = self
                        .schema
                        .iter()
                        .position(|s| s == feature)
                        .ok_or_else(|| Error::UnknownFeature(feature.clone()))?;
                    node = if features[j] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<(Diagnosis, f64)> {
        match self.leaf_for(features)? {
            CartNode::Leaf { label, confidence, .. } => Ok((*label, *confidence)),
            CartNode::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    pub fn rules(&self) -> String {
        render_rules(&self.root)
    }
}

impl Classifier for CartModel {
    fn name(&self) -> &str {
        "cart"
    }

    fn schema(&self) -> &[String] {
        &self.schema
    }

    fn predict(&self, features: &[f64]) -> Result<(Diagnosis, f64)> {
        CartModel::predict(self, features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Le,
    Gt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub feature: String,
    pub op: Comparison,
    pub threshold: f64,
}

/// One line of a rule listing.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleLine {
    pub depth: usize,
    /// `None` only for the single line of a one-leaf tree.
    pub condition: Option<Condition>,
    pub mode: Diagnosis,
    pub leaf: Option<Diagnosis>,
}

const ROOT_LEAF: &str = "(root)";

/// Flattens the tree into listing lines (thresholds kept at full precision).
pub fn rule_lines(root: &CartNode) -> Vec<RuleLine> {
    fn walk(node: &CartNode, depth: usize, out: &mut Vec<RuleLine>) {
        if let CartNode::Split { feature, threshold, left, right, .. } = node {
            for (child, op) in [(left, Comparison::Le), (right, Comparison::Gt)] {
                let leaf = matches!(**child, CartNode::Leaf { .. }).then(|| child.mode());
                out.push(RuleLine {
                    depth,
                    condition: Some(Condition { feature: feature.clone(), op, threshold: *threshold }),
                    mode: child.mode(),
                    leaf,
                });
                walk(child, depth + 1, out);
            }
        }
    }
    if let CartNode::Leaf { label, .. } = root {
        return vec![RuleLine { depth: 0, condition: None, mode: *label, leaf: Some(*label) }];
    }
    let mut out = Vec::new();
    walk(root, 0, &mut out);
    out
}

/// Renders listing lines. Top-level conditions carry no connector; deeper
/// ones are drawn with `├──` / `└──` branches.
pub fn format_rule_lines(lines: &[RuleLine]) -> String {
    let mut out = String::new();
    // open[d] is true while an ancestor at depth d still has a sibling below
    let mut open: Vec<bool> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let last_sibling = !lines[i + 1..]
            .iter()
            .take_while(|l| l.depth >= line.depth)
            .any(|l| l.depth == line.depth);
        open.truncate(line.depth);
        let mut prefix = String::new();
        for d in 1..line.depth {
            prefix.push_str(if open.get(d).copied().unwrap_or(false) { "│   " } else { "    " });
        }
        if line.depth > 0 {
            prefix.push_str(if last_sibling { "└── " } else { "├── " });
        }
        open.resize(line.depth, false);
        open.push(!last_sibling);

        let head = match &line.condition {
            None => ROOT_LEAF.to_string(),
            Some(c) => {
                let op = match c.op {
                    Comparison::Le => "<=",
                    Comparison::Gt => ">",
                };
                format!("{} {op} {:.3}", c.feature, c.threshold)
            }
        };
        let _ = write!(out, "{prefix}{head} [ Mode: {} ]", line.mode);
        if let Some(l) = line.leaf {
            let _ = write!(out, " ⇒ {l}");
        }
        out.push('\n');
    }
    out
}

pub fn render_rules(root: &CartNode) -> String {
    format_rule_lines(&rule_lines(root))
}

/// Parses a listing produced by [`render_rules`].
pub fn parse_rules(text: &str) -> Result<Vec<RuleLine>> {
    let bad = |i: usize, msg: &str| Error::record(i + 1, format!("rule listing: {msg}"));
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let body_start = raw
            .char_indices()
            .find(|(_, c)| !matches!(c, '│' | '├' | '└' | '─' | ' '))
            .map(|(b, _)| b)
            .ok_or_else(|| bad(i, "no content"))?;
        let prefix_chars = raw[..body_start].chars().count();
        if prefix_chars % 4 != 0 {
            return Err(bad(i, "misaligned indentation"));
        }
        let body = &raw[body_start..];
        let (body, leaf) = match body.split_once(" ⇒ ") {
            Some((b, l)) => (b, Some(l.trim().parse::<Diagnosis>().map_err(|_| bad(i, "leaf label"))?)),
            None => (body, None),
        };
        let (head, mode) = body
            .strip_suffix(" ]")
            .and_then(|b| b.rsplit_once(" [ Mode: "))
            .ok_or_else(|| bad(i, "missing mode"))?;
        let mode: Diagnosis = mode.parse().map_err(|_| bad(i, "mode label"))?;
        let condition = if head == ROOT_LEAF {
            None
        } else {
            let (feature, op, thr) = if let Some((f, t)) = head.rsplit_once(" <= ") {
                (f, Comparison::Le, t)
            } else if let Some((f, t)) = head.rsplit_once(" > ") {
                (f, Comparison::Gt, t)
            } else {
                return Err(bad(i, "missing comparison"));
            };
            let threshold = thr.parse().map_err(|_| bad(i, "threshold"))?;
            Some(Condition { feature: feature.to_string(), op, threshold })
        };
        out.push(RuleLine { depth: prefix_chars / 4, condition, mode, leaf });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    fn one_d(points: &[(f64, Diagnosis)]) -> Dataset {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(v, d))| Sample { id: i.to_string(), diagnosis: d, features: vec![v] })
            .collect();
        Dataset::new(vec!["x".into()], samples).unwrap()
    }

    #[test]
    fn pure_root_is_a_leaf() {
        let ds = one_d(&[(0.1, Diagnosis::N), (0.4, Diagnosis::N), (0.9, Diagnosis::N)]);
        let m = CartModel::train(&ds, CartParams::default()).unwrap();
        assert_eq!(m.root, CartNode::Leaf {
            label: Diagnosis::N,
            confidence: 4.0 / 5.0,
            counts: ClassCounts { a: 0, n: 3 }
        });
        assert_eq!(m.predict(&[0.5]).unwrap(), (Diagnosis::N, 0.8));
    }

    #[test]
    fn midpoint_split() {
        use Diagnosis::*;
        let ds = one_d(&[(0.1, N), (0.2, N), (0.8, A), (0.9, A)]);
        let p = CartParams { min_leaf: 1, ..Default::default() };
        let m = CartModel::train(&ds, p).unwrap();
        match &m.root {
            CartNode::Split { threshold, left, right, .. } => {
                assert_eq!(*threshold, 0.5);
                assert_eq!(left.counts(), ClassCounts { a: 0, n: 2 });
                assert_eq!(right.counts(), ClassCounts { a: 2, n: 0 });
            }
            leaf => panic!("expected split, got {leaf:?}"),
        }
        assert_eq!(m.predict(&[0.5]).unwrap().0, N);
        assert_eq!(m.predict(&[0.51]).unwrap().0, A);
        assert!(m.predict(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn laplace_confidences() {
        assert_eq!(ClassCounts { a: 9, n: 1 }.laplace_confidence(), 10.0 / 12.0);
        assert_eq!(ClassCounts { a: 100, n: 0 }.laplace_confidence(), 101.0 / 102.0);
        assert_eq!(ClassCounts { a: 3, n: 3 }.majority(), Diagnosis::A);
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        use Diagnosis::*;
        let ds = one_d(&[(0.1, N), (0.2, N), (0.8, A), (0.9, A)]);
        let m = CartModel::train(&ds, CartParams { min_leaf: 3, ..Default::default() }).unwrap();
        assert!(matches!(m.root, CartNode::Leaf { label: A, .. }));
    }

    #[test]
    fn empty_training_set() {
        let ds = Dataset::new(vec!["x".into()], vec![]);
        assert!(ds.is_err());
    }

    #[test]
    fn single_leaf_listing() {
        let root = CartNode::leaf(ClassCounts { a: 1, n: 4 });
        let text = render_rules(&root);
        assert_eq!(text.lines().count(), 1);
        assert!(text.trim_end().ends_with("⇒ N"));
        assert_eq!(format_rule_lines(&parse_rules(&text).unwrap()), text);
    }

    #[test]
    fn depth_one_listing() {
        let root = CartNode::Split {
            feature: "radius".into(),
            threshold: 0.519849,
            counts: ClassCounts { a: 10, n: 20 },
            left: Box::new(CartNode::leaf(ClassCounts { a: 2, n: 18 })),
            right: Box::new(CartNode::leaf(ClassCounts { a: 8, n: 2 })),
        };
        assert_eq!(
            render_rules(&root),
            "radius <= 0.520 [ Mode: N ] ⇒ N\nradius > 0.520 [ Mode: A ] ⇒ A\n"
        );
    }

    #[test]
    fn nested_listing_shape() {
        let leaf = |a, n| Box::new(CartNode::leaf(ClassCounts { a, n }));
        let inner = CartNode::Split {
            feature: "texture".into(),
            threshold: 0.4,
            counts: ClassCounts { a: 3, n: 5 },
            left: leaf(0, 5),
            right: leaf(3, 0),
        };
        let mid = CartNode::Split {
            feature: "compactness".into(),
            threshold: 0.3,
            counts: ClassCounts { a: 5, n: 15 },
            left: Box::new(inner),
            right: leaf(2, 10),
        };
        let root = CartNode::Split {
            feature: "radius".into(),
            threshold: 0.5,
            counts: ClassCounts { a: 15, n: 17 },
            left: Box::new(mid),
            right: leaf(10, 2),
        };
        let text = render_rules(&root);
        let expected = "\
radius <= 0.500 [ Mode: N ]
├── compactness <= 0.300 [ Mode: N ]
│   ├── texture <= 0.400 [ Mode: N ] ⇒ N
│   └── texture > 0.400 [ Mode: A ] ⇒ A
└── compactness > 0.300 [ Mode: N ] ⇒ N
radius > 0.500 [ Mode: A ] ⇒ A
";
        assert_eq!(text, expected);
        let parsed = parse_rules(&text).unwrap();
        assert_eq!(parsed, rule_lines(&root));
        assert_eq!(format_rule_lines(&parsed), text);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rules("radius <= x [ Mode: N ]").is_err());
        assert!(parse_rules("radius 0.5 [ Mode: N ]").is_err());
        assert!(parse_rules("radius <= 0.5").is_err());
    }
}
