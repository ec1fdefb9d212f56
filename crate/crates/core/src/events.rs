//! Decomposition of derivations into probabilistic choice events.
//!
//! Every derivation is a sequence of choices: which initial tree starts it,
//! which initial tree fills each substitution site, and which auxiliary trees
//! (terminated by [`Outcome::Stop`]) adjoin at each adjoinable node. Level 1
//! conditions those choices on the node label, level 2 on the host tree and
//! address, and level 3 bundles all choices made inside one elementary tree
//! into a [`MetaProduction`].

use std::collections::BTreeMap;
use std::fmt;

use crate::address::NodeAddress;
use crate::derivation::{ensure_valid, DerivationError, DerivationTree, Op};
use crate::grammar::{sites_of, Grammar, Violation};
use crate::syntax::SyntaxError;
use crate::syntax::Pos;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Tree(String),
    Stop,
}

impl Outcome {
    pub fn tree(name: impl Into<String>) -> Self {
        Outcome::Tree(name.into())
    }

    pub fn tree_name(&self) -> Option<&str> {
        match self {
            Outcome::Tree(t) => Some(t),
            Outcome::Stop => None,
        }
    }

    /// Applies `f` to the tree name, leaving STOP alone.
    pub fn map_tree(&self, f: impl FnOnce(&str) -> String) -> Outcome {
        match self {
            Outcome::Tree(t) => Outcome::Tree(f(t)),
            Outcome::Stop => Outcome::Stop,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Tree(t) => f.write_str(t),
            Outcome::Stop => f.write_str("STOP"),
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s == "STOP" { Outcome::Stop } else { Outcome::Tree(s.to_string()) })
    }
}

/// Where a choice is made: the virtual start site, or a node of a host tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    Root,
    Node { host: String, addr: NodeAddress },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteContext {
    pub site: Site,
    pub label: String,
    pub op: Op,
}

impl SiteContext {
    pub fn root(start_symbol: impl Into<String>) -> Self {
        SiteContext { site: Site::Root, label: start_symbol.into(), op: Op::Sub }
    }

    pub fn node(host: impl Into<String>, addr: NodeAddress, label: impl Into<String>, op: Op) -> Self {
        SiteContext { site: Site::Node { host: host.into(), addr }, label: label.into(), op }
    }

    pub fn level1(&self) -> Context {
        Context::Label { label: self.label.clone(), op: self.op }
    }

    pub fn level2(&self) -> Context {
        match &self.site {
            Site::Root => Context::Root { start: self.label.clone() },
            Site::Node { host, addr } => Context::Site { host: host.clone(), addr: addr.clone(), op: self.op },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteEvent {
    pub context: SiteContext,
    pub outcome: Outcome,
}

/// One complete expansion of an elementary tree: a filler for every
/// substitution site and an ordered (possibly empty) adjunction sequence for
/// every adjoinable node. Empty sequences are not stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetaProduction {
    pub mother: String,
    pub substitutions: BTreeMap<NodeAddress, String>,
    pub adjunctions: BTreeMap<NodeAddress, Vec<String>>,
}

impl MetaProduction {
    pub fn new(mother: impl Into<String>) -> Self {
        MetaProduction { mother: mother.into(), substitutions: BTreeMap::new(), adjunctions: BTreeMap::new() }
    }

    /// Reads the expansion off one derivation-tree node.
    pub fn of_node(d: &DerivationTree) -> Self {
        let mut m = MetaProduction::new(d.tree.clone());
        for e in d.edges() {
            match e.op {
                Op::Sub => {
                    m.substitutions.insert(e.addr.clone(), e.child.tree.clone());
                }
                Op::Adj => m.adjunctions.entry(e.addr.clone()).or_default().push(e.child.tree.clone()),
            }
        }
        m
    }

    pub fn adjunctions_at(&self, addr: &NodeAddress) -> &[String] {
        self.adjunctions.get(addr).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Daughter tree names in address order.
    pub fn daughters(&self) -> Vec<&str> {
        let mut entries: Vec<(&NodeAddress, &str)> =
            self.substitutions.iter().map(|(a, t)| (a, t.as_str())).collect();
        for (a, ts) in &self.adjunctions {
            entries.extend(ts.iter().map(|t| (a, t.as_str())));
        }
        entries.sort_by(|x, y| x.0.cmp(y.0));
        entries.into_iter().map(|(_, t)| t).collect()
    }

    /// Renames every tree (mother and daughters) through `f`.
    pub fn map_names(&self, f: impl Fn(&str) -> String) -> MetaProduction {
        MetaProduction {
            mother: f(&self.mother),
            substitutions: self.substitutions.iter().map(|(a, t)| (a.clone(), f(t))).collect(),
            adjunctions: self.adjunctions.iter().map(|(a, ts)| (a.clone(), ts.iter().map(|t| f(t)).collect())).collect(),
        }
    }

    /// Checks that the expansion covers exactly the mother's sites.
    pub fn check_against(&self, g: &Grammar) -> Vec<Violation> {
        let mut out = Vec::new();
        let Ok(mother) = g.tree(&self.mother) else {
            return vec![Violation::error(format!("unknown mother tree `{}`", self.mother))];
        };
        let sites = sites_of(mother);
        for (addr, _) in &sites.substitution {
            if !self.substitutions.contains_key(addr) {
                out.push(Violation::error(format!("{}@{addr}: expansion leaves site unfilled", self.mother)));
            }
        }
        for addr in self.substitutions.keys() {
            if !sites.substitution.iter().any(|(a, _)| a == addr) {
                out.push(Violation::error(format!("{}@{addr}: not a substitution site", self.mother)));
            }
        }
        for addr in self.adjunctions.keys() {
            if !sites.adjunction.iter().any(|(a, _)| a == addr) {
                out.push(Violation::error(format!("{}@{addr}: not an adjoinable node", self.mother)));
            }
        }
        out
    }

    /// The level-1/2 choice events made inside this expansion, in address
    /// order: one per substitution site, and for every adjoinable node its
    /// adjunctions followed by STOP.
    pub fn site_events(&self, g: &Grammar) -> Result<Vec<SiteEvent>, DerivationError> {
        let mother = g.tree(&self.mother)?;
        let sites = sites_of(mother);
        let mut slots: Vec<(&NodeAddress, &String, Op)> = sites
            .substitution
            .iter()
            .map(|(a, l)| (a, l, Op::Sub))
            .chain(sites.adjunction.iter().map(|(a, l)| (a, l, Op::Adj)))
            .collect();
        slots.sort();
        let mut out = Vec::new();
        for (addr, label, op) in slots {
            let ctx = SiteContext::node(self.mother.clone(), addr.clone(), label.clone(), op);
            match op {
                Op::Sub => {
                    let filler = self.substitutions.get(addr).ok_or_else(|| {
                        DerivationError::Invalid(vec![Violation::error(format!(
                            "{}@{addr}: unfilled substitution site",
                            self.mother
                        ))])
                    })?;
                    out.push(SiteEvent { context: ctx, outcome: Outcome::tree(filler.clone()) });
                }
                Op::Adj => {
                    for t in self.adjunctions_at(addr) {
                        out.push(SiteEvent { context: ctx.clone(), outcome: Outcome::tree(t.clone()) });
                    }
                    out.push(SiteEvent { context: ctx, outcome: Outcome::Stop });
                }
            }
        }
        Ok(out)
    }

    /// `{1>alpha2; 2>[beta]; 2.2>alpha3}`
    pub fn expansion_string(&self) -> String {
        let mut parts: Vec<(&NodeAddress, String)> =
            self.substitutions.iter().map(|(a, t)| (a, format!("{a}>{t}"))).collect();
        parts.extend(self.adjunctions.iter().map(|(a, ts)| (a, format!("{a}>[{}]", ts.join(",")))));
        parts.sort_by(|x, y| x.0.cmp(y.0));
        let body: Vec<String> = parts.into_iter().map(|(_, s)| s).collect();
        format!("{{{}}}", body.join("; "))
    }

    pub fn parse_expansion(mother: &str, text: &str) -> Result<Self, SyntaxError> {
        let at = |msg: String| SyntaxError::new(Pos { line: 1, col: 1 }, msg);
        let body = text
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| at(format!("expansion must be braced: `{text}`")))?;
        let mut m = MetaProduction::new(mother);
        for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (addr, rhs) = part.split_once('>').ok_or_else(|| at(format!("expected `addr>tree` in `{part}`")))?;
            let addr: NodeAddress = addr.trim().parse().map_err(|e| at(format!("{e}")))?;
            let rhs = rhs.trim();
            if let Some(list) = rhs.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let names: Vec<String> =
                    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
                if !names.is_empty() {
                    m.adjunctions.insert(addr, names);
                }
            } else if rhs.is_empty() {
                return Err(at(format!("missing filler in `{part}`")));
            } else {
                m.substitutions.insert(addr, rhs.to_string());
            }
        }
        Ok(m)
    }
}

impl fmt::Display for MetaProduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.mother, self.expansion_string())
    }
}

/// Conditioning context of an event at some level.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    /// Level 1: node label and operation.
    Label { label: String, op: Op },
    /// Level 2: host tree, address and operation.
    Site { host: String, addr: NodeAddress, op: Op },
    /// Level 2/3: the start symbol, choosing the derivation's root tree.
    Root { start: String },
    /// Level 3: the tree being expanded.
    Mother(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventOutcome {
    Choice(Outcome),
    Expansion(MetaProduction),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub level: u8,
    pub context: Context,
    pub outcome: EventOutcome,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.context {
            Context::Label { label, op } => write!(f, "({label}, {op})")?,
            Context::Site { host, addr, op } => write!(f, "({host}, {addr}, {op})")?,
            Context::Root { start } => write!(f, "(root {start})")?,
            Context::Mother(m) => write!(f, "({m})")?,
        }
        match &self.outcome {
            EventOutcome::Choice(o) => write!(f, " -> {o}"),
            EventOutcome::Expansion(m) => write!(f, " -> {}", m.expansion_string()),
        }
    }
}

/// One meta-production per derivation-tree node, in pre-order.
pub fn extract_meta_productions(g: &Grammar, d: &DerivationTree) -> Result<Vec<MetaProduction>, DerivationError> {
    ensure_valid(g, d)?;
    Ok(d.nodes().into_iter().map(MetaProduction::of_node).collect())
}

/// All choice events of a valid derivation: the root choice first, then each
/// node's events in pre-order.
pub fn extract_site_events(g: &Grammar, d: &DerivationTree) -> Result<Vec<SiteEvent>, DerivationError> {
    let metas = extract_meta_productions(g, d)?;
    let mut out = vec![SiteEvent { context: SiteContext::root(g.start_symbol.clone()), outcome: Outcome::tree(d.tree.clone()) }];
    for m in &metas {
        out.extend(m.site_events(g)?);
    }
    Ok(out)
}

/// Events at the requested granularity (1, 2 or 3). Level 3 yields one
/// expansion event per derivation-tree node and omits the root choice.
pub fn extract_events(g: &Grammar, d: &DerivationTree, level: u8) -> Result<Vec<Event>, DerivationError> {
    match level {
        1 | 2 => Ok(extract_site_events(g, d)?
            .into_iter()
            .map(|e| Event {
                level,
                context: if level == 1 { e.context.level1() } else { e.context.level2() },
                outcome: EventOutcome::Choice(e.outcome),
            })
            .collect()),
        3 => Ok(extract_meta_productions(g, d)?
            .into_iter()
            .map(|m| Event { level, context: Context::Mother(m.mother.clone()), outcome: EventOutcome::Expansion(m) })
            .collect()),
        other => panic!("event level must be 1, 2 or 3, got {other}"),
    }
}

/// Coarsens a level-2 context to level 1.
pub fn project_to_level1(g: &Grammar, ctx: &Context) -> Option<Context> {
    match ctx {
        Context::Root { start } => Some(Context::Label { label: start.clone(), op: Op::Sub }),
        Context::Site { host, addr, op } => {
            let node = g.trees.get(host)?.root.get(addr)?;
            Some(Context::Label { label: node.label.clone(), op: *op })
        }
        Context::Label { .. } => Some(ctx.clone()),
        Context::Mother(_) => None,
    }
}
