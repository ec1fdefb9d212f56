use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul};

use num_traits::{One, ToPrimitive, Zero};

use crate::derivation::DerivedTree;
use crate::grammar::{Markers, NodeKind, TreeNode, Violation};
use crate::syntax::SyntaxError;

use super::NORMALIZATION_TOLERANCE;

/// A phrase-structure subtree in which every node either keeps all of its
/// children or is cut to an open substitution site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fragment(pub TreeNode);

impl Fragment {
    pub fn root_label(&self) -> &str {
        &self.0.label
    }

    pub fn depth(&self) -> usize {
        self.0.depth()
    }

    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        Ok(Fragment(TreeNode::parse(text, Markers::Fragment)?))
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_bracket())
    }
}

/// Stochastic tree-substitution grammar: fragment probabilities normalized per
/// root label. Generic over the number type so the same recursion can run on
/// floats or exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct DopModel<P> {
    pub fragments: BTreeMap<Fragment, P>,
}

pub type Slg4Params = DopModel<f64>;

impl<P> Default for DopModel<P> {
    fn default() -> Self {
        DopModel { fragments: BTreeMap::new() }
    }
}

impl<P> DopModel<P> {
    fn by_root(&self) -> HashMap<&str, Vec<(&Fragment, &P)>> {
        let mut idx: HashMap<&str, Vec<(&Fragment, &P)>> = HashMap::new();
        for (f, p) in &self.fragments {
            idx.entry(f.root_label()).or_default().push((f, p));
        }
        idx
    }
}

impl<P: ToPrimitive> DopModel<P> {
    pub fn check_well_formed(&self) -> Vec<Violation> {
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        let mut out = Vec::new();
        for (f, p) in &self.fragments {
            let p = p.to_f64().unwrap_or(f64::NAN);
            if !p.is_finite() || p < 0.0 {
                out.push(Violation::error(format!("slg4 frag {f}: invalid probability {p}")));
            }
            if f.0.kind != NodeKind::Interior {
                out.push(Violation::error(format!("slg4 frag {f}: fragment root must be an interior node")));
            }
            *sums.entry(f.root_label()).or_default() += p;
        }
        for (label, total) in sums {
            if total.is_nan() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                out.push(Violation::error(format!("slg4 root {label}: probabilities sum to {}", super::format_prob(total))));
            }
        }
        out
    }
}

/// Total probability of `t` summed over all of its fragment derivations.
/// Trees containing a node no fragment covers score zero.
pub fn score_derived_tree_dop<P>(model: &DopModel<P>, t: &DerivedTree) -> P
where
    P: Clone + Zero + One + Add<Output = P> + Mul<Output = P>,
{
    let idx = model.by_root();
    let mut memo = HashMap::new();
    inside(&idx, &t.root, &mut memo)
}

fn inside<P>(idx: &HashMap<&str, Vec<(&Fragment, &P)>>, node: &TreeNode, memo: &mut HashMap<*const TreeNode, P>) -> P
where
    P: Clone + Zero + One + Add<Output = P> + Mul<Output = P>,
{
    let key = node as *const TreeNode;
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut total = P::zero();
    if let Some(cands) = idx.get(node.label.as_str()) {
        for (frag, p) in cands {
            let mut open = Vec::new();
            if matches(&frag.0, node, &mut open) {
                let mut term = (*p).clone();
                for site in open {
                    term = term * inside(idx, site, memo);
                }
                total = total + term;
            }
        }
    }
    memo.insert(key, total.clone());
    total
}

/// Does fragment node `f` match tree node `n`? Open sites are collected.
fn matches<'t>(f: &TreeNode, n: &'t TreeNode, open: &mut Vec<&'t TreeNode>) -> bool {
    if f.label != n.label {
        return false;
    }
    match f.kind {
        NodeKind::Terminal => n.kind == NodeKind::Terminal,
        NodeKind::SubstitutionSite => {
            if n.kind == NodeKind::Interior {
                open.push(n);
                true
            } else {
                false
            }
        }
        NodeKind::Interior => {
            n.kind == NodeKind::Interior
                && f.children.len() == n.children.len()
                && f.children.iter().zip(&n.children).all(|(fc, nc)| matches(fc, nc, open))
        }
        NodeKind::FootNode => false,
    }
}
