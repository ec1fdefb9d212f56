//! Parameterizations of the four model levels and their well-formedness
//! conditions.
//!
//! * Level 1 conditions each choice on the label of the node being filled.
//! * Level 2 conditions on the host tree and node address.
//! * Level 3 assigns one probability to each complete expansion of a tree.
//! * Level 4 is a stochastic tree-substitution grammar over treebank fragments.

mod dop;
mod io;
mod lift;
mod score;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::address::NodeAddress;
use crate::derivation::{DerivationError, Op};
use crate::events::{MetaProduction, Outcome};
use crate::grammar::{Grammar, NodeKind, TreeKind, Violation};

pub use dop::{score_derived_tree_dop, DopModel, Fragment, Slg4Params};
pub use io::{format_prob, parse_params, render_params, ParamsError};
pub use lift::{lift_slg1, lift_slg2, Lifted};
pub use score::{score_derivation, score_expansions, score_sites, DerivationScorer, ExpansionModel, SiteModel};

/// Tolerance for a distribution to count as summing to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no parameters for context {0}")]
    MissingContext(String),
    #[error("ill-formed parameters: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    IllFormed(Vec<Violation>),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
}

/// A conditional distribution over outcomes for one context.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<O: Ord> {
    pub probs: BTreeMap<O, f64>,
}

impl<O: Ord> Default for Distribution<O> {
    fn default() -> Self {
        Distribution { probs: BTreeMap::new() }
    }
}

impl<O: Ord> FromIterator<(O, f64)> for Distribution<O> {
    fn from_iter<I: IntoIterator<Item = (O, f64)>>(iter: I) -> Self {
        Distribution { probs: iter.into_iter().collect() }
    }
}

impl<O: Ord> Distribution<O> {
    pub fn set(&mut self, outcome: O, p: f64) {
        self.probs.insert(outcome, p);
    }

    /// Probability of `outcome`; zero outside the support.
    pub fn prob(&self, outcome: &O) -> f64 {
        self.probs.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn get(&self, outcome: &O) -> Option<f64> {
        self.probs.get(outcome).copied()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, f64)> {
        self.probs.iter().map(|(o, &p)| (o, p))
    }

    fn violations(&self, what: &dyn fmt::Display, out: &mut Vec<Violation>) {
        for &p in self.probs.values() {
            if !p.is_finite() || p < 0.0 {
                out.push(Violation::error(format!("{what}: invalid probability {p}")));
            }
        }
        let total = self.total();
        if total.is_nan() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            out.push(Violation::error(format!("{what}: probabilities sum to {}", format_prob(total))));
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Slg1Params {
    /// Node label -> initial trees.
    pub sub: BTreeMap<String, Distribution<Outcome>>,
    /// Node label -> auxiliary trees and STOP.
    pub adj: BTreeMap<String, Distribution<Outcome>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Slg2Params {
    pub sub: BTreeMap<(String, NodeAddress), Distribution<Outcome>>,
    pub adj: BTreeMap<(String, NodeAddress), Distribution<Outcome>>,
    /// Choice of the derivation's root tree.
    pub root: Distribution<Outcome>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Slg3Params {
    pub expand: BTreeMap<String, Distribution<MetaProduction>>,
    pub root: Distribution<Outcome>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Slg1(Slg1Params),
    Slg2(Slg2Params),
    Slg3(Slg3Params),
    Slg4(Slg4Params),
}

impl Params {
    pub fn level(&self) -> u8 {
        match self {
            Params::Slg1(_) => 1,
            Params::Slg2(_) => 2,
            Params::Slg3(_) => 3,
            Params::Slg4(_) => 4,
        }
    }

    /// Violations of the normalization conditions; label and tree-kind
    /// consistency is checked too when a grammar is supplied.
    pub fn check_well_formed(&self, g: Option<&Grammar>) -> Vec<Violation> {
        match self {
            Params::Slg1(p) => p.check_well_formed(g),
            Params::Slg2(p) => p.check_well_formed(g),
            Params::Slg3(p) => p.check_well_formed(g),
            Params::Slg4(p) => p.check_well_formed(),
        }
    }

    pub fn as_scorer(&self) -> Option<&dyn DerivationScorer> {
        match self {
            Params::Slg1(p) => Some(p),
            Params::Slg2(p) => Some(p),
            Params::Slg3(p) => Some(p),
            Params::Slg4(_) => None,
        }
    }
}

/// Checks that `outcome` may fill a node labelled `label` via `op`.
fn check_outcome(g: &Grammar, what: &dyn fmt::Display, label: &str, op: Op, outcome: &Outcome, out: &mut Vec<Violation>) {
    match (outcome, op) {
        (Outcome::Stop, Op::Sub) => out.push(Violation::error(format!("{what}: STOP is not a substitution outcome"))),
        (Outcome::Stop, Op::Adj) => {}
        (Outcome::Tree(name), op) => match g.trees.get(name) {
            None => out.push(Violation::error(format!("{what}: unknown tree `{name}`"))),
            Some(t) => {
                let want = if op == Op::Sub { TreeKind::Initial } else { TreeKind::Auxiliary };
                if t.kind != want {
                    out.push(Violation::error(format!("{what}: `{name}` is {} but the operation is {op}", t.kind)));
                }
                if t.root.label != label {
                    out.push(Violation::error(format!(
                        "{what}: `{name}` is rooted in {} but the context is {label}",
                        t.root.label
                    )));
                }
            }
        },
    }
}

fn check_stop_in_sub(d: &Distribution<Outcome>, what: &dyn fmt::Display, out: &mut Vec<Violation>) {
    if d.probs.contains_key(&Outcome::Stop) {
        out.push(Violation::error(format!("{what}: STOP is not a substitution outcome")));
    }
}

impl Slg1Params {
    pub fn check_well_formed(&self, g: Option<&Grammar>) -> Vec<Violation> {
        let mut out = Vec::new();
        for (op, table) in [(Op::Sub, &self.sub), (Op::Adj, &self.adj)] {
            for (label, d) in table {
                let what = format!("slg1 {op} {label}");
                d.violations(&what, &mut out);
                match g {
                    Some(g) => d.probs.keys().for_each(|o| check_outcome(g, &what, label, op, o, &mut out)),
                    None if op == Op::Sub => check_stop_in_sub(d, &what, &mut out),
                    None => {}
                }
            }
        }
        out
    }
}

impl Slg2Params {
    pub fn check_well_formed(&self, g: Option<&Grammar>) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.root.is_empty() {
            let what = "slg2 root".to_string();
            self.root.violations(&what, &mut out);
            match g {
                Some(g) => {
                    let start = g.start_symbol.clone();
                    self.root.probs.keys().for_each(|o| check_outcome(g, &what, &start, Op::Sub, o, &mut out));
                }
                None => check_stop_in_sub(&self.root, &what, &mut out),
            }
        }
        for (op, table) in [(Op::Sub, &self.sub), (Op::Adj, &self.adj)] {
            for ((host, addr), d) in table {
                let what = format!("slg2 {op} {host}@{addr}");
                d.violations(&what, &mut out);
                let Some(g) = g else {
                    if op == Op::Sub {
                        check_stop_in_sub(d, &what, &mut out);
                    }
                    continue;
                };
                let Some(node) = g.trees.get(host).and_then(|t| t.root.get(addr)) else {
                    out.push(Violation::error(format!("{what}: no such node in the grammar")));
                    continue;
                };
                let kind_ok = match op {
                    Op::Sub => node.kind == NodeKind::SubstitutionSite,
                    Op::Adj => node.kind == NodeKind::Interior && node.adjoinable,
                };
                if !kind_ok {
                    out.push(Violation::error(format!("{what}: node does not admit {op}")));
                }
                d.probs.keys().for_each(|o| check_outcome(g, &what, &node.label, op, o, &mut out));
            }
        }
        out
    }
}

impl Slg3Params {
    pub fn check_well_formed(&self, g: Option<&Grammar>) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.root.is_empty() {
            let what = "slg3 root".to_string();
            self.root.violations(&what, &mut out);
            match g {
                Some(g) => {
                    let start = g.start_symbol.clone();
                    self.root.probs.keys().for_each(|o| check_outcome(g, &what, &start, Op::Sub, o, &mut out));
                }
                None => check_stop_in_sub(&self.root, &what, &mut out),
            }
        }
        for (mother, d) in &self.expand {
            let what = format!("slg3 expand {mother}");
            d.violations(&what, &mut out);
            for m in d.probs.keys() {
                if &m.mother != mother {
                    out.push(Violation::error(format!("{what}: expansion of `{}` filed under `{mother}`", m.mother)));
                }
                let Some(g) = g else { continue };
                let here = format!("{what} {}", m.expansion_string());
                out.extend(m.check_against(g).into_iter().map(|v| Violation::error(format!("{here}: {}", v.message))));
                let Ok(tree) = g.tree(mother) else { continue };
                for (addr, filler) in &m.substitutions {
                    if let Some(n) = tree.root.get(addr) {
                        check_outcome(g, &here, &n.label, Op::Sub, &Outcome::tree(filler.clone()), &mut out);
                    }
                }
                for (addr, auxes) in &m.adjunctions {
                    if let Some(n) = tree.root.get(addr) {
                        for a in auxes {
                            check_outcome(g, &here, &n.label, Op::Adj, &Outcome::tree(a.clone()), &mut out);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::derivation::tests::g0;

    pub(crate) fn dist(pairs: &[(&str, f64)]) -> Distribution<Outcome> {
        pairs.iter().map(|(o, p)| (o.parse().unwrap(), *p)).collect()
    }

    /// Hand-set level-1 parameters for the example grammar.
    pub(crate) fn g0_slg1() -> Slg1Params {
        let mut p = Slg1Params::default();
        p.sub.insert("S".into(), dist(&[("alpha1", 1.0)]));
        p.sub.insert("NP".into(), dist(&[("alpha2", 0.5), ("alpha3", 0.5)]));
        p.sub.insert("Det".into(), dist(&[("delta", 1.0)]));
        p.adj.insert("VP".into(), dist(&[("beta", 0.2), ("STOP", 0.8)]));
        for l in ["S", "V", "NP", "N", "Det", "Adj"] {
            p.adj.insert(l.into(), dist(&[("STOP", 1.0)]));
        }
        p
    }

    #[test]
    fn forced_normalization_passes() {
        let mut p = Slg1Params::default();
        p.sub.insert("NP".into(), dist(&[("alpha2", 0.6), ("alpha3", 0.4)]));
        assert!(p.check_well_formed(Some(&g0())).is_empty());
    }

    #[test]
    fn short_sum_is_flagged() {
        let mut p = Slg1Params::default();
        p.sub.insert("NP".into(), dist(&[("alpha2", 0.6), ("alpha3", 0.3)]));
        let v = p.check_well_formed(None);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("slg1 sub NP"), "{}", v[0]);
        assert!(v[0].message.contains("0.9"));
    }

    #[test]
    fn adjunction_with_stop_passes() {
        let mut p = Slg1Params::default();
        p.adj.insert("VP".into(), dist(&[("beta", 0.2), ("STOP", 0.8)]));
        assert!(p.check_well_formed(Some(&g0())).is_empty());
        assert!(g0_slg1().check_well_formed(Some(&g0())).is_empty());
    }

    #[test]
    fn label_contradictions() {
        let g = g0();
        let mut p = Slg1Params::default();
        p.sub.insert("NP".into(), dist(&[("delta", 1.0)]));
        p.adj.insert("NP".into(), dist(&[("beta", 0.5), ("STOP", 0.5)]));
        let v = p.check_well_formed(Some(&g));
        assert_eq!(v.len(), 2, "{v:?}");
        let mut p = Slg2Params::default();
        p.sub.insert(("alpha1".into(), "2".parse().unwrap()), dist(&[("alpha2", 1.0)]));
        assert!(!p.check_well_formed(Some(&g)).is_empty());
    }
}
