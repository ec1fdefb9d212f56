//! Elementary trees, grammars, and the grammar file format.
//!
//! A grammar file is line oriented:
//!
//! ```text
//! # comment
//! start S
//! tree alpha1 initial anchor=drives family=transitive
//! (S NP! (VP (V "drives") NP!))
//! tree beta auxiliary
//! (VP VP* (Adj "slowly"))
//! ```
//!
//! `Label!` is a substitution site, `Label*` a foot node, `"word"` a terminal
//! and `(Label^na ...)` an interior node that does not accept adjunction.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::address::NodeAddress;
use crate::syntax::{self, Pos, Reader, SExpr, SyntaxError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Interior,
    SubstitutionSite,
    FootNode,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub label: String,
    pub kind: NodeKind,
    pub adjoinable: bool,
    pub children: Vec<TreeNode>,
}

/// Which node markers a bracketed tree may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Markers {
    /// Grammar trees: `!`, `*` and `^na`.
    Grammar,
    /// DOP fragments: open sites written `!`, nothing else.
    Fragment,
    /// Derived phrase-structure trees: no markers at all.
    None,
}

impl TreeNode {
    pub fn interior(label: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode { label: label.into(), kind: NodeKind::Interior, adjoinable: true, children }
    }

    pub fn substitution(label: impl Into<String>) -> Self {
        TreeNode {
            label: label.into(),
            kind: NodeKind::SubstitutionSite,
            adjoinable: false,
            children: Vec::new(),
        }
    }

    pub fn foot(label: impl Into<String>) -> Self {
        TreeNode { label: label.into(), kind: NodeKind::FootNode, adjoinable: false, children: Vec::new() }
    }

    pub fn terminal(word: impl Into<String>) -> Self {
        TreeNode { label: word.into(), kind: NodeKind::Terminal, adjoinable: false, children: Vec::new() }
    }

    pub fn non_adjoinable(mut self) -> Self {
        self.adjoinable = false;
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Follows a Gorn address from this node.
    pub fn get(&self, addr: &NodeAddress) -> Option<&TreeNode> {
        let mut node = self;
        for &i in addr.path() {
            node = node.children.get(i as usize - 1)?;
        }
        Some(node)
    }

    pub fn get_mut(&mut self, addr: &NodeAddress) -> Option<&mut TreeNode> {
        let mut node = self;
        for &i in addr.path() {
            node = node.children.get_mut(i as usize - 1)?;
        }
        Some(node)
    }

    /// All nodes with their addresses, in pre-order (which is address order).
    pub fn nodes(&self) -> Vec<(NodeAddress, &TreeNode)> {
        fn go<'a>(n: &'a TreeNode, addr: NodeAddress, out: &mut Vec<(NodeAddress, &'a TreeNode)>) {
            out.push((addr.clone(), n));
            for (i, c) in n.children.iter().enumerate() {
                go(c, addr.child(i as u32 + 1), out);
            }
        }
        let mut out = Vec::new();
        go(self, NodeAddress::root(), &mut out);
        out
    }

    /// Frontier terminal strings, left to right.
    pub fn terminal_yield(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.kind == NodeKind::Terminal {
            out.push(&self.label);
        }
        for c in &self.children {
            c.collect_yield(out);
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// True when the frontier consists of terminals only.
    pub fn is_complete(&self) -> bool {
        match self.kind {
            NodeKind::Terminal => true,
            NodeKind::SubstitutionSite | NodeKind::FootNode => false,
            NodeKind::Interior => !self.children.is_empty() && self.children.iter().all(|c| c.is_complete()),
        }
    }

    pub fn from_sexpr(e: &SExpr, markers: Markers) -> Result<TreeNode, SyntaxError> {
        match e {
            SExpr::Str(s, _) => Ok(TreeNode::terminal(s.clone())),
            SExpr::Atom(a, pos) => {
                if markers != Markers::None {
                    if let Some(label) = a.strip_suffix('!') {
                        check_label(label, *pos)?;
                        return Ok(TreeNode::substitution(label));
                    }
                }
                if markers == Markers::Grammar {
                    if let Some(label) = a.strip_suffix('*') {
                        check_label(label, *pos)?;
                        return Ok(TreeNode::foot(label));
                    }
                }
                Err(SyntaxError::new(
                    *pos,
                    format!("bare label `{a}`: interior nodes need children, terminals need quotes"),
                ))
            }
            SExpr::List(items, pos) => {
                let Some((head, rest)) = items.split_first() else {
                    return Err(SyntaxError::new(*pos, "empty node `()`"));
                };
                let SExpr::Atom(head, hpos) = head else {
                    return Err(SyntaxError::new(head.pos(), "node must start with a label"));
                };
                let (label, adjoinable) = match head.strip_suffix("^na") {
                    Some(l) if markers == Markers::Grammar => (l, false),
                    _ => (head.as_str(), true),
                };
                check_label(label, *hpos)?;
                if rest.is_empty() {
                    return Err(SyntaxError::new(*pos, format!("interior node `{label}` has no children")));
                }
                let children =
                    rest.iter().map(|c| TreeNode::from_sexpr(c, markers)).collect::<Result<Vec<_>, _>>()?;
                Ok(TreeNode { label: label.to_string(), kind: NodeKind::Interior, adjoinable, children })
            }
        }
    }

    pub fn parse(text: &str, markers: Markers) -> Result<TreeNode, SyntaxError> {
        TreeNode::from_sexpr(&syntax::read_one(text, 1)?, markers)
    }

    /// Bracketed rendering with grammar markers.
    pub fn to_bracket(&self) -> String {
        let mut s = String::new();
        self.write_bracket(&mut s, None);
        s
    }

    fn write_bracket(&self, out: &mut String, erase_anchor: Option<&str>) {
        match self.kind {
            NodeKind::Terminal => match erase_anchor {
                Some(a) if a == self.label => out.push_str("<>"),
                _ => out.push_str(&syntax::quote(&self.label)),
            },
            NodeKind::SubstitutionSite => {
                out.push_str(&self.label);
                out.push('!');
            }
            NodeKind::FootNode => {
                out.push_str(&self.label);
                out.push('*');
            }
            NodeKind::Interior => {
                out.push('(');
                out.push_str(&self.label);
                if !self.adjoinable {
                    out.push_str("^na");
                }
                for c in &self.children {
                    out.push(' ');
                    c.write_bracket(out, erase_anchor);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracket())
    }
}

fn check_label(label: &str, pos: Pos) -> Result<(), SyntaxError> {
    if label.is_empty() || label.contains(['!', '*', '^', '{', '}', '[', ']', ';', '>', '@', ',']) {
        return Err(SyntaxError::new(pos, format!("invalid label `{label}`")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeKind {
    Initial,
    Auxiliary,
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeKind::Initial => "initial",
            TreeKind::Auxiliary => "auxiliary",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryTree {
    pub name: String,
    pub kind: TreeKind,
    pub root: TreeNode,
    pub anchor: Option<String>,
    pub family: Option<String>,
    pub template: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: duplicate tree name `{name}`")]
    DuplicateTree { name: String, pos: Pos },
    #[error("auxiliary tree `{name}` has {count} foot nodes, expected exactly 1")]
    FootCount { name: String, count: usize },
    #[error("initial tree `{name}` contains a foot node")]
    FootInInitial { name: String },
    #[error("foot label `{foot}` of `{name}` differs from its root label `{root}`")]
    FootLabel { name: String, foot: String, root: String },
    #[error("tree `{name}`: anchor `{anchor}` must label exactly one terminal, found {count}")]
    AnchorMismatch { name: String, anchor: String, count: usize },
    #[error("tree `{name}` has no node at address {addr}")]
    AddressOutOfRange { name: String, addr: NodeAddress },
    #[error("unknown tree `{0}`")]
    UnknownTree(String),
}

impl ElementaryTree {
    /// Builds a tree, inferring the anchor when the tree has exactly one
    /// terminal and deriving the template id from the anchor-erased structure.
    pub fn new(name: impl Into<String>, kind: TreeKind, root: TreeNode) -> Result<Self, GrammarError> {
        let name = name.into();
        let terminals: Vec<&str> = root.terminal_yield();
        let anchor = if terminals.len() == 1 { Some(terminals[0].to_string()) } else { None };
        let mut tree =
            ElementaryTree { name, kind, root, anchor, family: None, template: String::new() };
        tree.check_shape()?;
        tree.template = tree.structural_template();
        Ok(tree)
    }

    pub fn with_anchor(mut self, anchor: impl Into<String>) -> Result<Self, GrammarError> {
        self.anchor = Some(anchor.into());
        self.check_shape()?;
        self.template = self.structural_template();
        Ok(self)
    }

    pub fn with_family(mut self, family: impl Into<String>) -> Self {
        self.family = Some(family.into());
        self
    }

    pub fn with_template(mut self, template: impl Into<String>) -> Self {
        self.template = template.into();
        self
    }

    /// Checks the foot node and anchor invariants.
    pub fn check_shape(&self) -> Result<(), GrammarError> {
        let nodes = self.root.nodes();
        let feet: Vec<&TreeNode> =
            nodes.iter().map(|(_, n)| *n).filter(|n| n.kind == NodeKind::FootNode).collect();
        match self.kind {
            TreeKind::Initial if !feet.is_empty() => {
                return Err(GrammarError::FootInInitial { name: self.name.clone() })
            }
            TreeKind::Auxiliary if feet.len() != 1 => {
                return Err(GrammarError::FootCount { name: self.name.clone(), count: feet.len() })
            }
            TreeKind::Auxiliary if feet[0].label != self.root.label => {
                return Err(GrammarError::FootLabel {
                    name: self.name.clone(),
                    foot: feet[0].label.clone(),
                    root: self.root.label.clone(),
                })
            }
            _ => {}
        }
        if let Some(anchor) = &self.anchor {
            let count = nodes
                .iter()
                .filter(|(_, n)| n.kind == NodeKind::Terminal && &n.label == anchor)
                .count();
            if count != 1 {
                return Err(GrammarError::AnchorMismatch {
                    name: self.name.clone(),
                    anchor: anchor.clone(),
                    count,
                });
            }
        }
        Ok(())
    }

    /// Canonical rendering with the anchor string erased.
    pub fn unanchored_structure(&self) -> String {
        let mut s = format!("{} ", self.kind);
        self.root.write_bracket(&mut s, self.anchor.as_deref());
        s
    }

    fn structural_template(&self) -> String {
        let digest = Sha256::digest(self.unanchored_structure().as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("t{hex}")
    }

    pub fn root_label(&self) -> &str {
        &self.root.label
    }

    /// Family id, defaulting to the tree's own name.
    pub fn family_id(&self) -> &str {
        self.family.as_deref().unwrap_or(&self.name)
    }

    pub fn foot_address(&self) -> Option<NodeAddress> {
        self.root.nodes().into_iter().find(|(_, n)| n.kind == NodeKind::FootNode).map(|(a, _)| a)
    }
}

/// Looks up the node at `addr`.
pub fn node_at<'t>(tree: &'t ElementaryTree, addr: &NodeAddress) -> Result<&'t TreeNode, GrammarError> {
    tree.root
        .get(addr)
        .ok_or_else(|| GrammarError::AddressOutOfRange { name: tree.name.clone(), addr: addr.clone() })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sites {
    pub substitution: Vec<(NodeAddress, String)>,
    pub adjunction: Vec<(NodeAddress, String)>,
}

/// Substitution sites and adjoinable nodes, each in address order.
pub fn sites_of(tree: &ElementaryTree) -> Sites {
    let mut sites = Sites::default();
    for (addr, n) in tree.root.nodes() {
        match n.kind {
            NodeKind::SubstitutionSite => sites.substitution.push((addr, n.label.clone())),
            NodeKind::Interior if n.adjoinable => sites.adjunction.push((addr, n.label.clone())),
            _ => {}
        }
    }
    sites
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub trees: BTreeMap<String, ElementaryTree>,
    pub start_symbol: String,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar { trees: BTreeMap::new(), start_symbol: "S".to_string() }
    }
}

impl Grammar {
    pub fn new(start_symbol: impl Into<String>) -> Self {
        Grammar { trees: BTreeMap::new(), start_symbol: start_symbol.into() }
    }

    pub fn add(&mut self, tree: ElementaryTree) -> Result<(), GrammarError> {
        if self.trees.contains_key(&tree.name) {
            return Err(GrammarError::DuplicateTree { name: tree.name, pos: Pos { line: 0, col: 0 } });
        }
        self.trees.insert(tree.name.clone(), tree);
        Ok(())
    }

    pub fn tree(&self, name: &str) -> Result<&ElementaryTree, GrammarError> {
        self.trees.get(name).ok_or_else(|| GrammarError::UnknownTree(name.to_string()))
    }

    /// Trees of `kind` whose root carries `label`, in name order.
    pub fn trees_rooted(&self, label: &str, kind: TreeKind) -> impl Iterator<Item = &ElementaryTree> + '_ {
        let label = label.to_string();
        self.trees.values().filter(move |t| t.kind == kind && t.root.label == label)
    }

    pub fn template_of(&self, name: &str) -> Option<&str> {
        self.trees.get(name).map(|t| t.template.as_str())
    }

    pub fn family_of(&self, name: &str) -> Option<&str> {
        self.trees.get(name).map(|t| t.family_id())
    }
}

pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut grammar = Grammar::default();
    let line_starts: Vec<usize> =
        std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1)).collect();
    let mut line = 0usize;
    let mut seen_tree = false;
    while line < line_starts.len() {
        let start = line_starts[line];
        let end = line_starts.get(line + 1).copied().unwrap_or(text.len());
        let raw = &text[start..end];
        let content = raw.split('#').next().unwrap_or("").trim();
        let lineno = line + 1;
        line += 1;
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let pos = Pos { line: lineno, col: raw.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1 };
        match words.next() {
            Some("start") => {
                if seen_tree {
                    return Err(SyntaxError::new(pos, "`start` must precede all trees").into());
                }
                let sym = words.next().ok_or_else(|| SyntaxError::new(pos, "`start` needs a symbol"))?;
                if words.next().is_some() {
                    return Err(SyntaxError::new(pos, "trailing input after start symbol").into());
                }
                grammar.start_symbol = sym.to_string();
            }
            Some("tree") => {
                seen_tree = true;
                let name = words.next().ok_or_else(|| SyntaxError::new(pos, "`tree` needs a name"))?;
                let kind = match words.next() {
                    Some("initial") => TreeKind::Initial,
                    Some("auxiliary") => TreeKind::Auxiliary,
                    other => {
                        return Err(SyntaxError::new(
                            pos,
                            format!("expected `initial` or `auxiliary`, got `{}`", other.unwrap_or("")),
                        )
                        .into())
                    }
                };
                let (mut anchor, mut family, mut template) = (None, None, None);
                for attr in words {
                    let Some((k, v)) = attr.split_once('=') else {
                        return Err(SyntaxError::new(pos, format!("bad attribute `{attr}`")).into());
                    };
                    let slot = match k {
                        "anchor" => &mut anchor,
                        "family" => &mut family,
                        "template" => &mut template,
                        _ => return Err(SyntaxError::new(pos, format!("unknown attribute `{k}`")).into()),
                    };
                    if v.is_empty() {
                        return Err(SyntaxError::new(pos, format!("empty value for `{k}`")).into());
                    }
                    *slot = Some(v.to_string());
                }
                // the tree structure follows, possibly over several lines
                let body_start = line_starts.get(line).copied().unwrap_or(text.len());
                let mut reader = Reader::new(&text[body_start..], line + 1);
                let expr = reader.read()?;
                let after = body_start + reader.offset();
                let line_end = text[after..].find('\n').map(|i| after + i).unwrap_or(text.len());
                let rest = text[after..line_end].trim();
                if !rest.is_empty() && !rest.starts_with('#') {
                    return Err(SyntaxError::new(reader.pos(), "trailing input after tree").into());
                }
                line = line_starts.partition_point(|&s| s <= line_end);
                let root = TreeNode::from_sexpr(&expr, Markers::Grammar)?;
                let mut tree = ElementaryTree::new(name, kind, root)?;
                if let Some(a) = anchor {
                    tree = tree.with_anchor(a)?;
                }
                if let Some(f) = family {
                    tree = tree.with_family(f);
                }
                if let Some(t) = template {
                    tree = tree.with_template(t);
                }
                if grammar.trees.contains_key(name) {
                    return Err(GrammarError::DuplicateTree { name: name.to_string(), pos });
                }
                grammar.trees.insert(name.to_string(), tree);
            }
            Some(other) => {
                return Err(SyntaxError::new(pos, format!("expected `start` or `tree`, got `{other}`")).into())
            }
            None => unreachable!(),
        }
    }
    Ok(grammar)
}

pub fn render_grammar(g: &Grammar) -> String {
    let mut out = format!("start {}\n", g.start_symbol);
    for t in g.trees.values() {
        out.push_str(&format!("\ntree {} {}", t.name, t.kind));
        if let Some(a) = &t.anchor {
            out.push_str(&format!(" anchor={a}"));
        }
        if let Some(f) = &t.family {
            out.push_str(&format!(" family={f}"));
        }
        out.push_str(&format!(" template={}\n{}\n", t.template, t.root.to_bracket()));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

impl Violation {
    pub fn error(message: impl Into<String>) -> Self {
        Violation { severity: Severity::Error, message: message.into() }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Violation { severity: Severity::Warning, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks every grammar invariant. Unfillable substitution sites are
/// reported as warnings, everything else as errors.
pub fn validate_grammar(g: &Grammar) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.trees_rooted(&g.start_symbol, TreeKind::Initial).next().is_none() {
        out.push(Violation::error(format!("no initial tree rooted in start symbol `{}`", g.start_symbol)));
    }
    let mut by_template: BTreeMap<&str, Vec<&ElementaryTree>> = BTreeMap::new();
    for (key, t) in &g.trees {
        if key != &t.name {
            out.push(Violation::error(format!("tree stored under `{key}` is named `{}`", t.name)));
        }
        if let Err(e) = t.check_shape() {
            out.push(Violation::error(e.to_string()));
        }
        for (addr, n) in t.root.nodes() {
            if n.kind != NodeKind::Interior && !n.children.is_empty() {
                out.push(Violation::error(format!("{}@{addr}: leaf node `{}` has children", t.name, n.label)));
            }
            if n.kind == NodeKind::Interior && n.children.is_empty() {
                out.push(Violation::error(format!("{}@{addr}: interior node `{}` has no children", t.name, n.label)));
            }
            if n.kind != NodeKind::Interior && n.adjoinable {
                out.push(Violation::error(format!("{}@{addr}: non-interior node marked adjoinable", t.name)));
            }
            if n.kind == NodeKind::SubstitutionSite
                && g.trees_rooted(&n.label, TreeKind::Initial).next().is_none()
            {
                out.push(Violation::warning(format!(
                    "{}@{addr}: substitution site `{}` cannot be filled by any initial tree",
                    t.name, n.label
                )));
            }
        }
        by_template.entry(&t.template).or_default().push(t);
    }
    for (tpl, trees) in by_template {
        let first = trees[0].unanchored_structure();
        for t in &trees[1..] {
            if t.unanchored_structure() != first {
                out.push(Violation::error(format!(
                    "template `{tpl}` shared by `{}` and `{}` with different structure",
                    trees[0].name, t.name
                )));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG1: &str = r#"
# trees of the example grammar
start S
tree alpha1 initial
(S NP! (VP (V "drives") NP!))
tree alpha2 initial
(NP (N "John"))
tree alpha3 initial
(NP Det! (N "car"))
tree beta auxiliary
(VP VP* (Adj "slowly"))
"#;

    fn a(s: &str) -> NodeAddress {
        s.parse().unwrap()
    }

    #[test]
    fn parses_initial_tree_with_anchor() {
        let g = parse_grammar("tree a2 initial\n(NP (N \"John\"))\n").unwrap();
        let t = &g.trees["a2"];
        assert_eq!(t.kind, TreeKind::Initial);
        assert_eq!(t.root.label, "NP");
        assert_eq!(t.anchor.as_deref(), Some("John"));
        assert_eq!(node_at(t, &a("1.1")).unwrap().kind, NodeKind::Terminal);
        assert_eq!(node_at(t, &a("1.1")).unwrap().label, "John");
    }

    #[test]
    fn parses_auxiliary_tree_foot() {
        let g = parse_grammar("tree b auxiliary\n(VP VP* (Adj \"slowly\"))").unwrap();
        assert_eq!(g.trees["b"].foot_address(), Some(a("1")));
    }

    #[test]
    fn rejects_auxiliary_without_foot() {
        let err = parse_grammar("tree bad auxiliary\n(VP (Adj \"x\"))").unwrap_err();
        assert_eq!(err, GrammarError::FootCount { name: "bad".into(), count: 0 });
    }

    #[test]
    fn rejects_foot_label_mismatch_and_duplicates() {
        assert!(matches!(
            parse_grammar("tree b auxiliary\n(VP NP* (Adj \"x\"))"),
            Err(GrammarError::FootLabel { .. })
        ));
        assert!(matches!(
            parse_grammar("tree a initial\n(NP (N \"x\"))\ntree a initial\n(NP (N \"y\"))"),
            Err(GrammarError::DuplicateTree { pos: Pos { line: 3, .. }, .. })
        ));
        assert!(matches!(
            parse_grammar("tree a initial\n(NP NP* (N \"x\"))"),
            Err(GrammarError::FootInInitial { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_grammar("start S\ntree a initial\n(NP (N John))").unwrap_err();
        let GrammarError::Syntax(e) = err else { panic!("{err:?}") };
        assert_eq!(e.pos, Pos { line: 3, col: 8 });
        let err = parse_grammar("tree a initial\n(NP (N \"x\")").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax(_)));
        let err = parse_grammar("tree a sideways\n(NP (N \"x\"))").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax(SyntaxError { pos: Pos { line: 1, .. }, .. })));
    }

    #[test]
    fn multi_line_trees_and_headers() {
        let g = parse_grammar(
            "start TOP\ntree t initial anchor=x family=f template=T1\n(TOP\n  (A^na \"x\")  # c\n  B!)\n",
        )
        .unwrap();
        assert_eq!(g.start_symbol, "TOP");
        let t = &g.trees["t"];
        assert_eq!(t.family.as_deref(), Some("f"));
        assert_eq!(t.template, "T1");
        assert!(!t.root.children[0].adjoinable);
        assert!(parse_grammar("tree t initial anchor=y\n(A \"x\")").is_err());
    }

    #[test]
    fn node_at_fig1() {
        let g = parse_grammar(FIG1).unwrap();
        let a1 = &g.trees["alpha1"];
        assert_eq!(node_at(a1, &NodeAddress::root()).unwrap().label, "S");
        let n = node_at(a1, &a("2.2")).unwrap();
        assert_eq!((n.label.as_str(), n.kind), ("NP", NodeKind::SubstitutionSite));
        assert!(matches!(
            node_at(&g.trees["alpha2"], &a("3")),
            Err(GrammarError::AddressOutOfRange { .. })
        ));
    }

    #[test]
    fn sites_fig1() {
        let g = parse_grammar(FIG1).unwrap();
        let s = sites_of(&g.trees["alpha1"]);
        assert_eq!(s.substitution, vec![(a("1"), "NP".into()), (a("2.2"), "NP".into())]);
        assert!(s.adjunction.contains(&(a("2"), "VP".into())));
        assert_eq!(
            s.adjunction,
            vec![(a("eps"), "S".into()), (a("2"), "VP".into()), (a("2.1"), "V".into())]
        );
        let s = sites_of(&g.trees["alpha2"]);
        assert!(s.substitution.is_empty());
        assert_eq!(s.adjunction, vec![(a("eps"), "NP".into()), (a("1"), "N".into())]);
        let g = parse_grammar("tree t initial\n(S \"x\")").unwrap();
        let s = sites_of(&g.trees["t"]);
        assert!(s.substitution.is_empty());
        assert_eq!(s.adjunction, vec![(a("eps"), "S".into())]);
    }

    #[test]
    fn validate_fig1_with_and_without_det() {
        let g = parse_grammar(FIG1).unwrap();
        let v = validate_grammar(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].severity, Severity::Warning);
        assert!(v[0].message.contains("Det"));
        let g = parse_grammar(&format!("{FIG1}\ntree delta initial\n(Det \"the\")")).unwrap();
        assert!(validate_grammar(&g).is_empty());
        let v = validate_grammar(&Grammar::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].severity, Severity::Error);
    }

    #[test]
    fn templates_shared_up_to_anchor() {
        let g = parse_grammar(
            "tree j initial\n(NP (N \"John\"))\ntree m initial\n(NP (N \"Mary\"))\ntree c initial\n(NP Det! (N \"car\"))",
        )
        .unwrap();
        assert_eq!(g.trees["j"].template, g.trees["m"].template);
        assert_ne!(g.trees["j"].template, g.trees["c"].template);
        let mut g2 = g.clone();
        let bad = g2.trees["c"].clone().with_template(g.trees["j"].template.clone());
        g2.trees.insert("c".into(), bad);
        assert!(validate_grammar(&g2).iter().any(|v| v.message.contains("template")));
    }

    #[test]
    fn render_round_trip_fig1() {
        let g = parse_grammar(FIG1).unwrap();
        let text = render_grammar(&g);
        assert_eq!(parse_grammar(&text).unwrap(), g);
    }
}
