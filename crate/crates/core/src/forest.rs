//! Decision trees, their compilation into fixed-length comparison paths, and
//! the model file format.
//!
//! A comparison `(feature, t, v)` holds for input `x` when `x <= t` (v = 1)
//! or `x > t` (v = 0). Thresholds and inputs are `ν`-bit integers, so
//! `(t = 2^ν - 1, v = 1)` always holds and `(t = 2^ν - 1, v = 0)` never does.
//!
//! Binary paths (honest-but-curious mode) accept iff every comparison holds.
//! Ternary paths (malicious mode) carry a terminal comparison: all
//! non-terminal comparisons holding yields +1 or -1 by the terminal, any other
//! pattern yields 0.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("tree {tree} is deeper than the path length {delta}")]
    TooDeep { tree: usize, delta: usize },
    #[error("path length must be at least 1")]
    ZeroDepth,
    #[error("chi = {chi} is below the path length {len}")]
    ChiTooSmall { chi: usize, len: usize },
    #[error("threshold {t} does not fit in {nu} bits")]
    ThresholdRange { t: u32, nu: u8 },
    #[error("input {x} for feature {feature} does not fit in {nu} bits")]
    InputRange { feature: usize, x: u32, nu: u8 },
    #[error("feature {0} is outside the input vector")]
    MissingFeature(usize),
    #[error("raw input lacks feature `{0}`")]
    MissingRaw(String),
    #[error("calibration for `{0}` has max <= min")]
    BadCalibration(String),
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Comparison {
    pub feature: usize,
    pub t: u32,
    pub v: u8,
}

impl Comparison {
    pub fn holds(&self, x: u32) -> bool {
        (x <= self.t) == (self.v == 1)
    }

    pub fn always_true(feature: usize, nu: u8) -> Self {
        Comparison {
            feature,
            t: max_value(nu),
            v: 1,
        }
    }

    pub fn always_false(feature: usize, nu: u8) -> Self {
        Comparison {
            feature,
            t: max_value(nu),
            v: 0,
        }
    }

    /// Same threshold, opposite direction: holds exactly when `self` fails.
    pub fn inverted(&self) -> Self {
        Comparison {
            v: 1 - self.v,
            ..*self
        }
    }
}

pub fn max_value(nu: u8) -> u32 {
    assert!((1..=16).contains(&nu), "ν = {nu} outside 1..=16");
    (1u32 << nu) - 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tree {
    Leaf {
        accept: bool,
    },
    Split {
        feature: usize,
        threshold: u32,
        le: Box<Tree>,
        gt: Box<Tree>,
    },
}

impl Tree {
    pub fn leaf(accept: bool) -> Self {
        Tree::Leaf { accept }
    }

    pub fn split(feature: usize, threshold: u32, le: Tree, gt: Tree) -> Self {
        Tree::Split {
            feature,
            threshold,
            le: Box::new(le),
            gt: Box::new(gt),
        }
    }

    /// Number of comparisons on the longest root-to-leaf walk.
    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 0,
            Tree::Split { le, gt, .. } => 1 + le.depth().max(gt.depth()),
        }
    }

    pub fn predict(&self, x: &[u32]) -> bool {
        match self {
            Tree::Leaf { accept } => *accept,
            Tree::Split {
                feature,
                threshold,
                le,
                gt,
            } => {
                if x[*feature] <= *threshold {
                    le.predict(x)
                } else {
                    gt.predict(x)
                }
            }
        }
    }

    fn check_thresholds(&self, nu: u8) -> Result<(), ForestError> {
        match self {
            Tree::Leaf { .. } => Ok(()),
            Tree::Split {
                threshold, le, gt, ..
            } => {
                if *threshold > max_value(nu) {
                    return Err(ForestError::ThresholdRange { t: *threshold, nu });
                }
                le.check_thresholds(nu)?;
                gt.check_thresholds(nu)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Binary,
    Ternary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    #[serde(default = "positive")]
    pub polarity: i8,
    pub nodes: Vec<Comparison>,
    /// Terminal node position (ternary mode).
    #[serde(default)]
    pub terminal: usize,
    /// Source tree, absent for always-accepting paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<usize>,
}

fn positive() -> i8 {
    1
}

impl Path {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn satisfied(&self, x: &[u32]) -> bool {
        self.nodes.iter().zip(x).all(|(c, &xi)| c.holds(xi))
    }

    /// Ternary outcome before polarity, on the per-position inputs `x`.
    pub fn ternary_outcome(&self, x: &[u32]) -> i64 {
        let rest = self
            .nodes
            .iter()
            .zip(x)
            .enumerate()
            .all(|(j, (c, &xi))| j == self.terminal || c.holds(xi));
        match (rest, self.nodes[self.terminal].holds(x[self.terminal])) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => -1,
        }
    }

    /// Applies `perm` to node positions: new position `j` holds old node
    /// `perm[j]`.
    pub fn permute(&mut self, perm: &[usize]) {
        let nodes = perm.iter().map(|&j| self.nodes[j]).collect();
        self.terminal = perm
            .iter()
            .position(|&j| j == self.terminal)
            .expect("permutation covers the terminal");
        self.nodes = nodes;
    }
}

/// Extracts one padded path per accepting leaf. Greater-than branches are
/// visited first.
pub fn compile_binary(trees: &[Tree], delta: usize, nu: u8) -> Result<Vec<Path>, ForestError> {
    if delta == 0 {
        return Err(ForestError::ZeroDepth);
    }
    let mut out = Vec::new();
    for (ti, tree) in trees.iter().enumerate() {
        if tree.depth() > delta {
            return Err(ForestError::TooDeep { tree: ti, delta });
        }
        tree.check_thresholds(nu)?;
        let mut prefix = Vec::new();
        walk_binary(tree, &mut prefix, &mut |nodes: &[Comparison]| {
            let mut nodes = nodes.to_vec();
            let pad_feature = nodes.last().map_or(0, |c| c.feature);
            nodes.resize(delta, Comparison::always_true(pad_feature, nu));
            out.push(Path {
                polarity: 1,
                nodes,
                terminal: delta - 1,
                tree: Some(ti),
            });
        });
    }
    Ok(out)
}

fn walk_binary(tree: &Tree, prefix: &mut Vec<Comparison>, emit: &mut impl FnMut(&[Comparison])) {
    match tree {
        Tree::Leaf { accept: true } => emit(prefix),
        Tree::Leaf { accept: false } => {}
        Tree::Split {
            feature,
            threshold,
            le,
            gt,
        } => {
            for (child, v) in [(gt, 0u8), (le, 1u8)] {
                prefix.push(Comparison {
                    feature: *feature,
                    t: *threshold,
                    v,
                });
                walk_binary(child, prefix, emit);
                prefix.pop();
            }
        }
    }
}

/// Completes every tree to depth `delta` and emits its `2^(delta-1)`
/// ternary paths with uniform random polarities.
pub fn compile_ternary<R: Rng>(
    trees: &[Tree],
    delta: usize,
    nu: u8,
    rng: &mut R,
) -> Result<Vec<Path>, ForestError> {
    if delta == 0 {
        return Err(ForestError::ZeroDepth);
    }
    let mut out = Vec::new();
    for (ti, tree) in trees.iter().enumerate() {
        tree.check_thresholds(nu)?;
        let mut prefix = Vec::new();
        walk_ternary(tree, delta, 0, nu, &mut prefix, &mut |nodes: Vec<Comparison>| {
            out.push(Path {
                polarity: 1,
                terminal: delta - 1,
                nodes,
                tree: Some(ti),
            })
        })
        .map_err(|()| ForestError::TooDeep { tree: ti, delta })?;
    }
    assign_polarities(&mut out, rng);
    Ok(out)
}

/// `remaining` counts the nodes still to place on the current path,
/// terminal included.
fn walk_ternary(
    tree: &Tree,
    remaining: usize,
    parent_feature: usize,
    nu: u8,
    prefix: &mut Vec<Comparison>,
    emit: &mut impl FnMut(Vec<Comparison>),
) -> Result<(), ()> {
    if remaining == 1 {
        let terminal = match tree {
            Tree::Leaf { accept } => constant(*accept, parent_feature, nu),
            Tree::Split {
                feature,
                threshold,
                le,
                gt,
            } => match (&**le, &**gt) {
                (Tree::Leaf { accept: l }, Tree::Leaf { accept: g }) => match (l, g) {
                    (true, false) => Comparison {
                        feature: *feature,
                        t: *threshold,
                        v: 1,
                    },
                    (false, true) => Comparison {
                        feature: *feature,
                        t: *threshold,
                        v: 0,
                    },
                    (both, _) => constant(*both, *feature, nu),
                },
                _ => return Err(()),
            },
        };
        let mut nodes = prefix.clone();
        nodes.push(terminal);
        emit(nodes);
        return Ok(());
    }
    let branches: [(Comparison, &Tree); 2] = match tree {
        Tree::Split {
            feature,
            threshold,
            le,
            gt,
        } => [
            (
                Comparison {
                    feature: *feature,
                    t: *threshold,
                    v: 0,
                },
                gt,
            ),
            (
                Comparison {
                    feature: *feature,
                    t: *threshold,
                    v: 1,
                },
                le,
            ),
        ],
        // A leaf reached early sits behind an always-true node; the
        // impossible branch repeats the leaf so every level doubles.
        Tree::Leaf { .. } => [
            (Comparison::always_false(parent_feature, nu), tree),
            (Comparison::always_true(parent_feature, nu), tree),
        ],
    };
    for (c, child) in branches {
        prefix.push(c);
        walk_ternary(child, remaining - 1, c.feature, nu, prefix, emit)?;
        prefix.pop();
    }
    Ok(())
}

fn constant(accept: bool, feature: usize, nu: u8) -> Comparison {
    if accept {
        Comparison::always_true(feature, nu)
    } else {
        Comparison::always_false(feature, nu)
    }
}

pub fn assign_polarities<R: Rng>(paths: &mut [Path], rng: &mut R) {
    for p in paths {
        p.polarity = if rng.gen::<bool>() { 1 } else { -1 };
    }
}

/// Re-draws polarities until `|#(+1) - #(-1)| <= slack`.
pub fn assign_balanced_polarities<R: Rng>(paths: &mut [Path], slack: usize, rng: &mut R) {
    loop {
        assign_polarities(paths, rng);
        let pos = paths.iter().filter(|p| p.polarity > 0).count();
        if pos.abs_diff(paths.len() - pos) <= slack {
            return;
        }
    }
}

/// Extends each path to `chi` nodes with always-true comparisons, drawing
/// features the path does not use yet before repeating, then shuffles node
/// positions.
pub fn add_dummies<R: Rng>(
    paths: &mut [Path],
    chi: usize,
    n_features: usize,
    nu: u8,
    rng: &mut R,
) -> Result<(), ForestError> {
    for p in paths.iter_mut() {
        if chi < p.len() {
            return Err(ForestError::ChiTooSmall { chi, len: p.len() });
        }
        let used: BTreeSet<usize> = p.nodes.iter().map(|c| c.feature).collect();
        let mut pool: Vec<usize> = (0..n_features.max(1))
            .filter(|f| !used.contains(f))
            .collect();
        pool.extend(0..n_features.max(1));
        let missing = chi - p.len();
        for f in pool.into_iter().cycle().take(missing) {
            p.nodes.push(Comparison::always_true(f, nu));
        }
        let mut perm: Vec<usize> = (0..chi).collect();
        perm.shuffle(rng);
        p.permute(&perm);
    }
    Ok(())
}

/// Appends `count` paths of `len` always-true comparisons, scoring +1 on
/// every input.
pub fn add_always_accepting<R: Rng>(
    paths: &mut Vec<Path>,
    count: usize,
    len: usize,
    n_features: usize,
    nu: u8,
    rng: &mut R,
) {
    for _ in 0..count {
        let nodes = (0..len)
            .map(|j| Comparison::always_true(j % n_features.max(1), nu))
            .collect();
        paths.push(Path {
            polarity: if rng.gen::<bool>() { 1 } else { -1 },
            nodes,
            terminal: rng.gen_range(0..len),
            tree: None,
        });
    }
}

/// Server model: the compiled paths plus public parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestModel {
    pub mode: Mode,
    #[serde(rename = "P")]
    pub p: usize,
    pub delta: usize,
    pub nu: u8,
    pub tau: i64,
    #[serde(rename = "T")]
    pub trees: usize,
    #[serde(default)]
    pub chi: Option<usize>,
    /// Size of the feature universe (input vector length).
    #[serde(default)]
    pub features: usize,
    #[serde(default)]
    pub always_accepting: usize,
    pub paths: Vec<Path>,
}

impl ForestModel {
    pub fn binary(trees: &[Tree], delta: usize, nu: u8, features: usize) -> Result<Self, ForestError> {
        let paths = compile_binary(trees, delta, nu)?;
        Ok(ForestModel {
            mode: Mode::Binary,
            p: paths.len(),
            delta,
            nu,
            tau: trees.len().div_ceil(2).max(1) as i64,
            trees: trees.len(),
            chi: None,
            features,
            always_accepting: 0,
            paths,
        })
    }

    pub fn ternary<R: Rng>(
        trees: &[Tree],
        delta: usize,
        nu: u8,
        features: usize,
        always_accepting: usize,
        rng: &mut R,
    ) -> Result<Self, ForestError> {
        let mut paths = compile_ternary(trees, delta, nu, rng)?;
        add_always_accepting(&mut paths, always_accepting, delta, features, nu, rng);
        Ok(ForestModel {
            mode: Mode::Ternary,
            p: paths.len(),
            delta,
            nu,
            tau: always_accepting.max(1) as i64,
            trees: trees.len(),
            chi: None,
            features,
            always_accepting,
            paths,
        })
    }

    pub fn with_tau(mut self, tau: i64) -> Self {
        self.tau = tau;
        self
    }

    /// Sets `τ = ⌈Γ·T⌉` for a ratio `Γ` (binary mode).
    pub fn with_ratio(mut self, gamma: f64) -> Self {
        self.tau = ((gamma * self.trees as f64).ceil() as i64).max(1);
        self
    }

    pub fn with_dummies<R: Rng>(mut self, chi: usize, rng: &mut R) -> Result<Self, ForestError> {
        add_dummies(&mut self.paths, chi, self.features, self.nu, rng)?;
        self.chi = Some(chi);
        Ok(self)
    }

    /// Nodes per path as encoded (`χ` with dummies, else `δ`).
    pub fn path_len(&self) -> usize {
        self.chi.unwrap_or(self.delta)
    }

    /// Largest honest ternary score, the top of the acceptance window.
    pub fn max_score(&self) -> i64 {
        (self.trees + self.always_accepting) as i64
    }

    /// Total comparison nodes `m`.
    pub fn node_count(&self) -> usize {
        self.paths.iter().map(Path::len).sum()
    }

    pub fn validate(&self) -> Result<(), ForestError> {
        let bad = |m: String| Err(ForestError::Inconsistent(m));
        if self.p != self.paths.len() {
            return bad(format!("P = {} but {} paths", self.p, self.paths.len()));
        }
        let len = self.path_len();
        let max = max_value(self.nu);
        for (i, p) in self.paths.iter().enumerate() {
            if p.len() != len {
                return bad(format!("path {i} has {} nodes, expected {len}", p.len()));
            }
            if p.terminal >= len {
                return bad(format!("path {i} terminal {} out of range", p.terminal));
            }
            if p.polarity != 1 && p.polarity != -1 {
                return bad(format!("path {i} polarity {}", p.polarity));
            }
            for c in &p.nodes {
                if c.t > max {
                    return Err(ForestError::ThresholdRange { t: c.t, nu: self.nu });
                }
                if c.v > 1 {
                    return bad(format!("path {i} has direction bit {}", c.v));
                }
                if self.features > 0 && c.feature >= self.features {
                    return Err(ForestError::MissingFeature(c.feature));
                }
            }
        }
        if self.tau < 1 {
            return bad(format!("tau = {} must be at least 1", self.tau));
        }
        Ok(())
    }

    /// Public layout: feature index per (path, position).
    pub fn layout(&self) -> Vec<Vec<usize>> {
        self.paths
            .iter()
            .map(|p| p.nodes.iter().map(|c| c.feature).collect())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        let m: ForestModel = serde_json::from_str(s).map_err(|e| e.to_string())?;
        m.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

/// Resolves a feature vector into the per-(path, position) inputs
/// `x_{i,j}` through the public layout.
pub fn resolve(layout: &[Vec<usize>], x: &[u32], nu: u8) -> Result<Vec<Vec<u32>>, ForestError> {
    let max = max_value(nu);
    layout
        .iter()
        .map(|row| {
            row.iter()
                .map(|&f| {
                    let xi = *x.get(f).ok_or(ForestError::MissingFeature(f))?;
                    if xi > max {
                        return Err(ForestError::InputRange { feature: f, x: xi, nu });
                    }
                    Ok(xi)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCalibration {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub features: Vec<FeatureCalibration>,
}

/// Affine map of each raw value onto `[0, 2^ν - 1]`, floor-rounded and
/// clamped.
pub fn quantize(
    raw: &HashMap<String, f64>,
    nu: u8,
    cal: &Calibration,
) -> Result<Vec<u32>, ForestError> {
    let top = max_value(nu);
    cal.features
        .iter()
        .map(|f| {
            let v = *raw
                .get(&f.name)
                .ok_or_else(|| ForestError::MissingRaw(f.name.clone()))?;
            if !(f.max > f.min) {
                return Err(ForestError::BadCalibration(f.name.clone()));
            }
            Ok(quantize_value(v, f.min, f.max, top))
        })
        .collect()
}

pub fn quantize_value(v: f64, min: f64, max: f64, top: u32) -> u32 {
    let frac = ((v - min) / (max - min)).clamp(0.0, 1.0);
    ((frac * top as f64).floor() as u32).min(top)
}

/// Random trees for tests and benchmarks.
pub mod gen {
    use super::*;

    /// Tree of depth at most `depth` over `features` features; roughly half
    /// of the internal nodes stop early.
    pub fn random_tree<R: Rng>(rng: &mut R, depth: usize, features: usize, nu: u8) -> Tree {
        if depth == 0 || rng.gen_ratio(1, 4) {
            return Tree::leaf(rng.gen());
        }
        Tree::split(
            rng.gen_range(0..features),
            rng.gen_range(0..max_value(nu)),
            random_tree(rng, depth - 1, features, nu),
            random_tree(rng, depth - 1, features, nu),
        )
    }

    pub fn random_forest<R: Rng>(
        rng: &mut R,
        trees: usize,
        depth: usize,
        features: usize,
        nu: u8,
    ) -> Vec<Tree> {
        (0..trees)
            .map(|_| random_tree(rng, depth, features, nu))
            .collect()
    }

    pub fn random_input<R: Rng>(rng: &mut R, features: usize, nu: u8) -> Vec<u32> {
        (0..features).map(|_| rng.gen_range(0..=max_value(nu))).collect()
    }
}

/// The example tree used in the documentation: features 1, 2, 4, 5, 6 with
/// thresholds `t_f = f`.
pub fn example_tree() -> Tree {
    let n4 = Tree::split(4, 4, Tree::leaf(false), Tree::leaf(true));
    let n2 = Tree::split(2, 2, Tree::leaf(false), n4);
    let n6 = Tree::split(6, 6, Tree::leaf(false), Tree::leaf(true));
    let n5 = Tree::split(5, 5, Tree::leaf(true), n6);
    Tree::split(1, 1, n5, n2)
}
