//! Derivation trees, their file format, validation and composition into
//! derived phrase-structure trees.
//!
//! A derivation is written as nested groups, one per line in a corpus file:
//!
//! ```text
//! (alpha1 (1 sub (alpha2)) (2 adj (beta)) (2.2 sub (alpha3 (1 sub (delta)))))
//! ```

use std::fmt;

use thiserror::Error;

use crate::address::NodeAddress;
use crate::grammar::{Grammar, GrammarError, Markers, NodeKind, TreeKind, TreeNode, Violation};
use crate::syntax::{self, SExpr, SyntaxError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Sub,
    Adj,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Sub => "sub",
            Op::Adj => "adj",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub addr: NodeAddress,
    pub op: Op,
    pub child: DerivationTree,
}

/// A node of a derivation tree: the elementary tree used and what was
/// attached into it. Edges are kept sorted by address; adjunctions sharing
/// an address keep their surface order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivationTree {
    pub tree: String,
    edges: Vec<Edge>,
}

#[derive(Debug, Error)]
pub enum DerivationError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("invalid derivation: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("corpus entry {index}: {source}")]
    Entry { index: usize, source: Box<DerivationError> },
}

impl DerivationTree {
    pub fn leaf(tree: impl Into<String>) -> Self {
        DerivationTree { tree: tree.into(), edges: Vec::new() }
    }

    pub fn new(tree: impl Into<String>, edges: Vec<Edge>) -> Self {
        let mut d = DerivationTree::leaf(tree);
        for e in edges {
            d.push(e);
        }
        d
    }

    /// Adds an edge after any existing edges at the same or a smaller address.
    pub fn push(&mut self, edge: Edge) {
        let at = self.edges.partition_point(|e| e.addr <= edge.addr);
        self.edges.insert(at, edge);
    }

    pub fn with(mut self, addr: &str, op: Op, child: DerivationTree) -> Self {
        let addr = addr.parse().expect("valid address literal");
        self.push(Edge { addr, op, child });
        self
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Adjoined children at `addr`, in surface order.
    pub fn adjunctions_at<'a>(&'a self, addr: &'a NodeAddress) -> impl Iterator<Item = &'a DerivationTree> + 'a {
        self.edges.iter().filter(move |e| e.op == Op::Adj && &e.addr == addr).map(|e| &e.child)
    }

    pub fn node_count(&self) -> usize {
        1 + self.edges.iter().map(|e| e.child.node_count()).sum::<usize>()
    }

    /// Every derivation-tree node in pre-order.
    pub fn nodes(&self) -> Vec<&DerivationTree> {
        let mut out = vec![self];
        for e in &self.edges {
            out.extend(e.child.nodes());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DerivationError> {
        Self::parse_at(text, 1)
    }

    fn parse_at(text: &str, line: usize) -> Result<Self, DerivationError> {
        Ok(Self::from_sexpr(&syntax::read_one(text, line)?)?)
    }

    fn from_sexpr(e: &SExpr) -> Result<Self, SyntaxError> {
        match e {
            SExpr::Atom(name, _) => Ok(DerivationTree::leaf(name.clone())),
            SExpr::Str(_, p) => Err(SyntaxError::new(*p, "expected a tree name")),
            SExpr::List(items, p) => {
                let Some((SExpr::Atom(name, _), rest)) = items.split_first() else {
                    return Err(SyntaxError::new(*p, "derivation node must start with a tree name"));
                };
                let mut d = DerivationTree::leaf(name.clone());
                for item in rest {
                    let SExpr::List(parts, ep) = item else {
                        return Err(SyntaxError::new(item.pos(), "expected `(addr op child)`"));
                    };
                    let [SExpr::Atom(addr, ap), SExpr::Atom(op, op_pos), child] = parts.as_slice() else {
                        return Err(SyntaxError::new(*ep, "expected `(addr op child)`"));
                    };
                    let addr = addr.parse().map_err(|e| SyntaxError::new(*ap, format!("{e}")))?;
                    let op = match op.as_str() {
                        "sub" => Op::Sub,
                        "adj" => Op::Adj,
                        other => {
                            return Err(SyntaxError::new(*op_pos, format!("unknown operation `{other}`")))
                        }
                    };
                    d.edges.push(Edge { addr, op, child: Self::from_sexpr(child)? });
                }
                if d.edges.windows(2).any(|w| w[0].addr > w[1].addr) {
                    // file order is authoritative only among equal addresses
                    d.edges.sort_by(|a, b| a.addr.cmp(&b.addr));
                }
                Ok(d)
            }
        }
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.tree)?;
        for e in &self.edges {
            write!(f, " ({} {} {})", e.addr, e.op, e.child)?;
        }
        f.write_str(")")
    }
}

/// Parses a derivation corpus: one derivation per non-blank, non-comment line.
pub fn parse_corpus(text: &str) -> Result<Vec<DerivationTree>, DerivationError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let d = DerivationTree::parse_at(line, i + 1)
            .map_err(|e| DerivationError::Entry { index: out.len(), source: Box::new(e) })?;
        out.push(d);
    }
    Ok(out)
}

pub fn render_corpus(corpus: &[DerivationTree]) -> String {
    corpus.iter().map(|d| format!("{d}\n")).collect()
}

/// Checks a derivation against the grammar. Unknown tree names are an error;
/// everything else is reported as violations.
pub fn validate_derivation(g: &Grammar, d: &DerivationTree) -> Result<Vec<Violation>, DerivationError> {
    let mut out = Vec::new();
    validate_node(g, d, &mut out)?;
    Ok(out)
}

fn validate_node(g: &Grammar, d: &DerivationTree, out: &mut Vec<Violation>) -> Result<(), DerivationError> {
    let host = g.tree(&d.tree)?;
    for e in &d.edges {
        let child = g.tree(&e.child.tree)?;
        let here = format!("{}@{}", d.tree, e.addr);
        match host.root.get(&e.addr) {
            None => out.push(Violation::error(format!("{here}: no such node"))),
            Some(node) => match e.op {
                Op::Sub => {
                    if node.kind != NodeKind::SubstitutionSite {
                        out.push(Violation::error(format!("{here}: substitution at a non-substitution node")));
                    }
                    if child.kind != TreeKind::Initial {
                        out.push(Violation::error(format!("{here}: auxiliary tree `{}` used with Sub", child.name)));
                    }
                    if child.root.label != node.label {
                        out.push(Violation::error(format!(
                            "{here}: `{}` rooted in {} cannot fill a {} site",
                            child.name, child.root.label, node.label
                        )));
                    }
                }
                Op::Adj => {
                    if node.kind != NodeKind::Interior || !node.adjoinable {
                        out.push(Violation::error(format!("{here}: adjunction at a non-adjoinable node")));
                    }
                    if child.kind != TreeKind::Auxiliary {
                        out.push(Violation::error(format!("{here}: initial tree `{}` used with Adj", child.name)));
                    }
                    if child.root.label != node.label {
                        out.push(Violation::error(format!(
                            "{here}: `{}` rooted in {} cannot adjoin at a {} node",
                            child.name, child.root.label, node.label
                        )));
                    }
                }
            },
        }
    }
    for (addr, n) in host.root.nodes() {
        if n.kind != NodeKind::SubstitutionSite {
            continue;
        }
        let subs = d.edges.iter().filter(|e| e.op == Op::Sub && e.addr == addr).count();
        if subs == 0 {
            out.push(Violation::error(format!("{}@{addr}: unfilled substitution site", d.tree)));
        } else if subs > 1 {
            out.push(Violation::error(format!("{}@{addr}: {subs} substitutions at one site", d.tree)));
        }
    }
    for e in &d.edges {
        validate_node(g, &e.child, out)?;
    }
    Ok(())
}

pub(crate) fn ensure_valid(g: &Grammar, d: &DerivationTree) -> Result<(), DerivationError> {
    let v = validate_derivation(g, d)?;
    if v.is_empty() {
        Ok(())
    } else {
        Err(DerivationError::Invalid(v))
    }
}

/// A phrase-structure tree produced by a derivation (or read from a treebank).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivedTree {
    pub root: TreeNode,
}

impl DerivedTree {
    pub fn is_complete(&self) -> bool {
        self.root.is_complete()
    }

    pub fn terminal_yield(&self) -> Vec<&str> {
        self.root.terminal_yield()
    }

    pub fn sentence(&self) -> String {
        self.terminal_yield().join(" ")
    }

    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        Ok(DerivedTree { root: TreeNode::parse(text, Markers::None)? })
    }
}

impl fmt::Display for DerivedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root.to_bracket())
    }
}

/// Parses a derived-tree corpus: one bracketed tree per line.
pub fn parse_tree_corpus(text: &str) -> Result<Vec<DerivedTree>, SyntaxError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .map(|(i, l)| Ok(DerivedTree { root: TreeNode::from_sexpr(&syntax::read_one(l, i + 1)?, Markers::None)? }))
        .collect()
}

/// Composes the derived tree of a valid derivation.
pub fn derive(g: &Grammar, d: &DerivationTree) -> Result<DerivedTree, DerivationError> {
    ensure_valid(g, d)?;
    Ok(DerivedTree { root: instantiate(g, d)? })
}

fn instantiate(g: &Grammar, d: &DerivationTree) -> Result<TreeNode, DerivationError> {
    let host = g.tree(&d.tree)?;
    build(g, d, &host.root, NodeAddress::root())
}

fn build(g: &Grammar, d: &DerivationTree, node: &TreeNode, addr: NodeAddress) -> Result<TreeNode, DerivationError> {
    let mut current = match node.kind {
        NodeKind::SubstitutionSite => {
            let edge = d
                .edges
                .iter()
                .find(|e| e.op == Op::Sub && e.addr == addr)
                .expect("validated derivation fills every substitution site");
            return instantiate(g, &edge.child);
        }
        NodeKind::Interior => {
            let children = node
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| build(g, d, c, addr.child(i as u32 + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            TreeNode { children, ..node.clone() }
        }
        _ => node.clone(),
    };
    let auxiliaries: Vec<TreeNode> =
        d.adjunctions_at(&addr).map(|c| instantiate(g, c)).collect::<Result<_, _>>()?;
    if !auxiliaries.is_empty() {
        current = nest_adjunctions(current, auxiliaries);
    }
    Ok(current)
}

/// Wraps `target` in the adjoined trees. The first adjunction in edge order
/// ends up outermost.
fn nest_adjunctions(target: TreeNode, auxiliaries: Vec<TreeNode>) -> TreeNode {
    auxiliaries.into_iter().rev().fold(target, |inner, mut aux| {
        let filled = replace_foot(&mut aux, inner);
        debug_assert!(filled, "auxiliary tree without a foot");
        aux
    })
}

fn replace_foot(node: &mut TreeNode, excised: TreeNode) -> bool {
    let mut slot = Some(excised);
    fn go(n: &mut TreeNode, slot: &mut Option<TreeNode>) -> bool {
        if n.kind == NodeKind::FootNode {
            *n = slot.take().expect("single foot");
            return true;
        }
        n.children.iter_mut().any(|c| go(c, slot))
    }
    go(node, &mut slot)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    pub(crate) const G0: &str = include_str!("../fixtures/g0.slg");

    pub(crate) fn g0() -> Grammar {
        parse_grammar(G0).unwrap()
    }

    /// alpha1 with alpha2 as subject, alpha3 (+delta) as object.
    pub(crate) fn d1() -> DerivationTree {
        DerivationTree::leaf("alpha1")
            .with("1", Op::Sub, DerivationTree::leaf("alpha2"))
            .with("2.2", Op::Sub, DerivationTree::leaf("alpha3").with("1", Op::Sub, DerivationTree::leaf("delta")))
    }

    /// d1 plus beta adjoined at the VP.
    pub(crate) fn d2() -> DerivationTree {
        d1().with("2", Op::Adj, DerivationTree::leaf("beta"))
    }

    /// Subject and object swapped relative to d1.
    pub(crate) fn d3() -> DerivationTree {
        DerivationTree::leaf("alpha1")
            .with("1", Op::Sub, DerivationTree::leaf("alpha3").with("1", Op::Sub, DerivationTree::leaf("delta")))
            .with("2.2", Op::Sub, DerivationTree::leaf("alpha2"))
    }

    #[test]
    fn parse_and_render_round_trip() {
        let text = "(alpha1 (1 sub (alpha2)) (2 adj (beta)) (2.2 sub (alpha3 (1 sub (delta)))))";
        let d = DerivationTree::parse(text).unwrap();
        assert_eq!(d, d2());
        assert_eq!(d.to_string(), text);
        assert_eq!(DerivationTree::parse("(alpha1 (1 sub alpha2) (2.2 sub (alpha3 (1 sub delta))))").unwrap(), d1());
        assert!(DerivationTree::parse("(alpha1 (1 subst (alpha2)))").is_err());
        assert!(DerivationTree::parse("(alpha1 (0 sub (alpha2)))").is_err());
    }

    #[test]
    fn same_address_adjunctions_keep_file_order() {
        let d = DerivationTree::parse("(a (2 adj (x)) (1 sub (n)) (2 adj (y)))").unwrap();
        let names: Vec<_> = d.edges().iter().map(|e| e.child.tree.as_str()).collect();
        assert_eq!(names, ["n", "x", "y"]);
    }

    #[test]
    fn fig3_derivation_is_valid() {
        let g = g0();
        assert!(validate_derivation(&g, &d2()).unwrap().is_empty());
        assert!(validate_derivation(&g, &d3()).unwrap().is_empty());
    }

    #[test]
    fn initial_tree_used_with_adjunction() {
        let g = g0();
        let d = d1().with("2", Op::Adj, DerivationTree::leaf("alpha2"));
        let v = validate_derivation(&g, &d).unwrap();
        assert!(v.iter().any(|v| v.message.contains("initial tree `alpha2` used with Adj")), "{v:?}");
    }

    #[test]
    fn unfilled_substitution_site() {
        let g = g0();
        let d = DerivationTree::leaf("alpha1").with("2.2", Op::Sub, DerivationTree::leaf("alpha2"));
        let v = validate_derivation(&g, &d).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("alpha1@1: unfilled"));
    }

    #[test]
    fn other_violations() {
        let g = g0();
        let d = d1().with("1", Op::Sub, DerivationTree::leaf("alpha2"));
        assert!(validate_derivation(&g, &d).unwrap().iter().any(|v| v.message.contains("2 substitutions")));
        let d = d1().with("7", Op::Adj, DerivationTree::leaf("beta"));
        assert!(validate_derivation(&g, &d).unwrap().iter().any(|v| v.message.contains("no such node")));
        let d = d1().with("2.1.1", Op::Adj, DerivationTree::leaf("beta"));
        assert!(!validate_derivation(&g, &d).unwrap().is_empty());
        let d = DerivationTree::leaf("alpha1")
            .with("1", Op::Sub, DerivationTree::leaf("delta"))
            .with("2.2", Op::Sub, DerivationTree::leaf("alpha2"));
        assert!(validate_derivation(&g, &d).unwrap().iter().any(|v| v.message.contains("cannot fill")));
        assert!(matches!(
            validate_derivation(&g, &DerivationTree::leaf("gamma")),
            Err(DerivationError::Grammar(GrammarError::UnknownTree(_)))
        ));
    }

    #[test]
    fn derive_fig3_yield() {
        let g = g0();
        let t = derive(&g, &d2()).unwrap();
        assert!(t.is_complete());
        // beta's foot is its left daughter, so the adverb follows the VP
        assert_eq!(t.sentence(), "John drives the car slowly");
        assert_eq!(
            t.to_string(),
            r#"(S (NP (N "John")) (VP (VP (V "drives") (NP (Det "the") (N "car"))) (Adj "slowly")))"#
        );
        assert_eq!(derive(&g, &d3()).unwrap().sentence(), "the car drives John");
    }

    #[test]
    fn derive_without_adjunction_is_plain_substitution() {
        let g = g0();
        let t = derive(&g, &d1()).unwrap();
        assert_eq!(t.to_string(), r#"(S (NP (N "John")) (VP (V "drives") (NP (Det "the") (N "car"))))"#);
    }

    #[test]
    fn adjunction_order_changes_derived_tree() {
        let g = parse_grammar(&format!("{G0}\ntree gamma auxiliary\n(VP (Adv \"often\") VP*)\n")).unwrap();
        let x = d1().with("2", Op::Adj, DerivationTree::leaf("beta")).with("2", Op::Adj, DerivationTree::leaf("gamma"));
        let y = d1().with("2", Op::Adj, DerivationTree::leaf("gamma")).with("2", Op::Adj, DerivationTree::leaf("beta"));
        let tx = derive(&g, &x).unwrap();
        let ty = derive(&g, &y).unwrap();
        assert_ne!(tx, ty);
        // first edge is outermost
        assert_eq!(tx.root.get(&"2".parse().unwrap()).unwrap().children[1].label, "Adj");
        assert_eq!(ty.root.get(&"2".parse().unwrap()).unwrap().children[0].label, "Adv");
        assert_eq!(tx.sentence(), "John often drives the car slowly");
        assert_eq!(ty.sentence(), "John often drives the car slowly");
    }

    #[test]
    fn invalid_derivation_is_not_derived() {
        let g = g0();
        assert!(matches!(derive(&g, &DerivationTree::leaf("alpha1")), Err(DerivationError::Invalid(_))));
    }

    #[test]
    fn corpus_round_trip() {
        let corpus = vec![d1(), d2(), d3()];
        let text = render_corpus(&corpus);
        assert_eq!(parse_corpus(&format!("# header\n\n{text}")).unwrap(), corpus);
        let err = parse_corpus("(alpha1)\n(alpha1 (1 sub").unwrap_err();
        assert!(matches!(err, DerivationError::Entry { index: 1, .. }));
    }

    #[test]
    fn tree_corpus() {
        let trees = parse_tree_corpus("(S (A \"a\") (B \"b\"))\n\n(A \"a\")\n").unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].sentence(), "a b");
        assert!(parse_tree_corpus("(S A! (B \"b\"))").is_err());
    }
}
