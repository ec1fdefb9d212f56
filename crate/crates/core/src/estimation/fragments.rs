use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::derivation::DerivedTree;
use crate::grammar::{NodeKind, TreeNode};
use crate::models::{DopModel, Fragment, Slg4Params};

use super::EstimationError;

pub const DEFAULT_MAX_DEPTH: usize = 4;
pub const DEFAULT_MAX_FRAGMENTS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FragmentOptions {
    /// `None` means unbounded.
    pub max_depth: Option<usize>,
    /// Per-tree guard against combinatorial blowup.
    pub max_fragments: u64,
}

impl Default for FragmentOptions {
    fn default() -> Self {
        FragmentOptions { max_depth: Some(DEFAULT_MAX_DEPTH), max_fragments: DEFAULT_MAX_FRAGMENTS }
    }
}

impl FragmentOptions {
    pub fn depth(max_depth: usize) -> Self {
        FragmentOptions { max_depth: Some(max_depth), ..Self::default() }
    }

    pub fn unbounded() -> Self {
        FragmentOptions { max_depth: None, ..Self::default() }
    }
}

fn is_nonterminal(n: &TreeNode) -> bool {
    n.kind == NodeKind::Interior
}

/// How many fragments of depth ≤ `budget` are rooted at `n` (saturating).
fn count_rooted(n: &TreeNode, budget: usize) -> u64 {
    if budget == 0 || !is_nonterminal(n) {
        return 0;
    }
    n.children.iter().filter(|c| is_nonterminal(c)).fold(1u64, |acc, c| acc.saturating_mul(1 + count_rooted(c, budget - 1)))
}

/// Every fragment of depth ≤ `budget` rooted at `n`: the node keeps all
/// children, and each nonterminal child is either cut to an open site or
/// expanded further.
fn rooted(n: &TreeNode, budget: usize) -> Vec<TreeNode> {
    if budget == 0 || !is_nonterminal(n) {
        return Vec::new();
    }
    let mut partial: Vec<Vec<TreeNode>> = vec![Vec::with_capacity(n.children.len())];
    for c in &n.children {
        let options: Vec<TreeNode> = if is_nonterminal(c) {
            let mut opts = vec![TreeNode::substitution(c.label.clone())];
            opts.extend(rooted(c, budget - 1));
            opts
        } else {
            vec![c.clone()]
        };
        partial = partial
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    partial.into_iter().map(|children| TreeNode { label: n.label.clone(), kind: n.kind, adjoinable: n.adjoinable, children }).collect()
}

fn interior_nodes(n: &TreeNode) -> Vec<&TreeNode> {
    n.nodes().into_iter().map(|(_, n)| n).filter(|n| is_nonterminal(n)).collect()
}

/// Fragment counts of a single tree.
pub fn count_fragments_of(t: &DerivedTree, opts: FragmentOptions) -> Result<BTreeMap<Fragment, u64>, u64> {
    let budget = opts.max_depth.unwrap_or_else(|| t.root.depth());
    let nodes = interior_nodes(&t.root);
    let total = nodes.iter().fold(0u64, |acc, n| acc.saturating_add(count_rooted(n, budget)));
    if total > opts.max_fragments {
        return Err(opts.max_fragments);
    }
    let mut out = BTreeMap::new();
    for n in nodes {
        for f in rooted(n, budget) {
            *out.entry(Fragment(f)).or_default() += 1;
        }
    }
    Ok(out)
}

/// Every fragment of every tree, counted with multiplicity. Each occurrence
/// in the corpus counts once, however many derivations the tree has.
pub fn extract_fragments(trees: &[DerivedTree], opts: FragmentOptions) -> Result<BTreeMap<Fragment, u64>, EstimationError> {
    let mut out: BTreeMap<Fragment, u64> = BTreeMap::new();
    for (index, t) in trees.iter().enumerate() {
        let counts = count_fragments_of(t, opts).map_err(|limit| EstimationError::TooManyFragments { index, limit })?;
        for (f, n) in counts {
            *out.entry(f).or_default() += n;
        }
    }
    Ok(out)
}

fn root_totals(counts: &BTreeMap<Fragment, u64>) -> BTreeMap<String, u64> {
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for (f, n) in counts {
        *totals.entry(f.root_label().to_string()).or_default() += n;
    }
    totals
}

/// Relative frequency of each fragment among fragments sharing its root label.
pub fn estimate_dop(trees: &[DerivedTree], opts: FragmentOptions) -> Result<Slg4Params, EstimationError> {
    if trees.is_empty() {
        return Err(EstimationError::EmptyCorpus);
    }
    let counts = extract_fragments(trees, opts)?;
    let totals = root_totals(&counts);
    let fragments =
        counts.into_iter().map(|(f, n)| {
            let p = n as f64 / totals[f.root_label()] as f64;
            (f, p)
        });
    Ok(DopModel { fragments: fragments.collect() })
}

pub fn estimate_dop_exact(trees: &[DerivedTree], opts: FragmentOptions) -> Result<DopModel<BigRational>, EstimationError> {
    if trees.is_empty() {
        return Err(EstimationError::EmptyCorpus);
    }
    let counts = extract_fragments(trees, opts)?;
    let totals = root_totals(&counts);
    let fragments = counts.into_iter().map(|(f, n)| {
        let p = BigRational::new(BigInt::from(n), BigInt::from(totals[f.root_label()]));
        (f, p)
    });
    Ok(DopModel { fragments: fragments.collect() })
}
