//! Backoff smoothing. Three coarsenings of the event space are available:
//!
//! * `anchor`: trees are replaced by their unanchored template,
//! * `family`: trees are replaced by their family id,
//! * `level`: the smoothed model one level down.
//!
//! They are combined by fixed-weight linear interpolation along a configured
//! chain. Stage `i` gets weight `λ(t_{i+1}) · Π_{j≤i} (1 − λ(t_j))`; stages
//! without the context drop out and the remaining weights are renormalized.
//! The chain bottoms out in the relative-frequency level-1 template model,
//! which must cover every context the grammar can reach.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::address::NodeAddress;
use crate::derivation::{DerivationError, DerivationTree, Op};
use crate::estimation::Counts;
use crate::events::{extract_meta_productions, extract_site_events, MetaProduction, Outcome, Site, SiteContext};
use crate::grammar::{sites_of, Grammar, TreeKind};
use crate::models::{score_expansions, score_sites, DerivationScorer, ExpansionModel, ModelError, SiteModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    Anchor,
    Family,
    Level,
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Anchor => "anchor",
            Technique::Family => "family",
            Technique::Level => "level",
        })
    }
}

impl FromStr for Technique {
    type Err = SmoothingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "anchor" => Ok(Technique::Anchor),
            "family" => Ok(Technique::Family),
            "level" => Ok(Technique::Level),
            other => Err(SmoothingError::Config(format!("unknown backoff technique `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackoffConfig {
    pub lambda_anchor: f64,
    pub lambda_family: f64,
    pub lambda_level: f64,
    pub order: Vec<Technique>,
}

impl Default for BackoffConfig {
    fn default() -> Self {
        BackoffConfig {
            lambda_anchor: 0.8,
            lambda_family: 0.8,
            lambda_level: 0.9,
            order: vec![Technique::Anchor, Technique::Family, Technique::Level],
        }
    }
}

impl BackoffConfig {
    pub fn lambda(&self, t: Technique) -> f64 {
        match t {
            Technique::Anchor => self.lambda_anchor,
            Technique::Family => self.lambda_family,
            Technique::Level => self.lambda_level,
        }
    }

    pub fn set_lambda(&mut self, t: Technique, v: f64) {
        match t {
            Technique::Anchor => self.lambda_anchor = v,
            Technique::Family => self.lambda_family = v,
            Technique::Level => self.lambda_level = v,
        }
    }

    pub fn validate(&self) -> Result<(), SmoothingError> {
        for t in [Technique::Anchor, Technique::Family, Technique::Level] {
            let l = self.lambda(t);
            if !(0.0..=1.0).contains(&l) {
                return Err(SmoothingError::Config(format!("lambda_{t} = {l} is outside [0, 1]")));
            }
        }
        let distinct: BTreeSet<_> = self.order.iter().collect();
        if distinct.len() != self.order.len() {
            return Err(SmoothingError::Config("backoff order repeats a technique".into()));
        }
        Ok(())
    }

    /// `key = value` lines: `lambda_anchor`, `lambda_family`, `lambda_level`
    /// and `order` (comma separated). Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, SmoothingError> {
        let mut c = BackoffConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| SmoothingError::Config(format!("line {}: {m}", i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<f64>().map_err(|_| bad(format!("`{v}` is not a number")));
            match k {
                "lambda_anchor" => c.lambda_anchor = num()?,
                "lambda_family" => c.lambda_family = num()?,
                "lambda_level" => c.lambda_level = num()?,
                "order" => {
                    c.order = v.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Interpolation weight of each chain position; index 0 is the primary model.
    fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.order.len() + 1);
        let mut rest = 1.0;
        for t in &self.order {
            let l = self.lambda(*t);
            out.push(rest * l);
            rest *= 1.0 - l;
        }
        out.push(rest);
        out
    }
}

#[derive(Debug, Error)]
pub enum SmoothingError {
    #[error("bad smoothing configuration: {0}")]
    Config(String),
    #[error("the level-1 template model has no data for {}", .0.join(", "))]
    Coverage(Vec<String>),
    #[error("nothing to smooth: the corpus is empty")]
    EmptyCorpus,
    #[error("corpus entry {index}: {source}")]
    Entry { index: usize, source: DerivationError },
    #[error("smoothing supports levels 1 to 3, got {0}")]
    Level(u8),
}

/// Conditioning context inside one stage table. Fields unused by a stage
/// stay empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    root: bool,
    host: Option<String>,
    addr: Option<NodeAddress>,
    label: String,
    op: Op,
}

impl Key {
    fn label(label: &str, op: Op) -> Key {
        Key { root: false, host: None, addr: None, label: label.to_string(), op }
    }
}

/// Add-one smoothed P(tree | class) for a partition of the trees.
#[derive(Clone, Debug, Default)]
struct Emission {
    class: BTreeMap<String, String>,
    prob: BTreeMap<String, f64>,
}

impl Emission {
    fn new(g: &Grammar, uses: &BTreeMap<String, u64>, class_of: impl Fn(&crate::grammar::ElementaryTree) -> String) -> Self {
        let class: BTreeMap<String, String> = g.trees.values().map(|t| (t.name.clone(), class_of(t))).collect();
        let mut totals: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for (t, c) in &class {
            let e = totals.entry(c.as_str()).or_default();
            e.0 += uses.get(t).copied().unwrap_or(0);
            e.1 += 1;
        }
        let prob = class
            .iter()
            .map(|(t, c)| {
                let (n, members) = totals[c.as_str()];
                (t.clone(), (uses.get(t).copied().unwrap_or(0) + 1) as f64 / (n + members) as f64)
            })
            .collect();
        Emission { class, prob }
    }

    fn class_outcome(&self, o: &Outcome) -> Option<Outcome> {
        match o {
            Outcome::Stop => Some(Outcome::Stop),
            Outcome::Tree(t) => self.class.get(t).map(|c| Outcome::Tree(c.clone())),
        }
    }

    fn emit(&self, o: &Outcome) -> f64 {
        match o {
            Outcome::Stop => 1.0,
            Outcome::Tree(t) => self.prob.get(t).copied().unwrap_or(0.0),
        }
    }

    fn rename(&self, t: &str) -> String {
        self.class.get(t).cloned().unwrap_or_else(|| t.to_string())
    }
}

fn lookup(c: &Counts<Key, Outcome>, key: &Key, o: &Outcome) -> Option<f64> {
    let total = c.context_total(key);
    (total > 0).then(|| c.get(key, o) as f64 / total as f64)
}

fn mix(weights: &[f64], stages: &[Option<f64>]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (w, p) in weights.iter().zip(stages) {
        if let Some(p) = p {
            num += w * p;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Outcomes the grammar allows in a (label, op) context.
pub fn licensed_outcomes(g: &Grammar, label: &str, op: Op) -> Vec<Outcome> {
    let kind = if op == Op::Sub { TreeKind::Initial } else { TreeKind::Auxiliary };
    let mut out: Vec<Outcome> = g.trees_rooted(label, kind).map(|t| Outcome::tree(t.name.clone())).collect();
    if op == Op::Adj {
        out.push(Outcome::Stop);
    }
    out
}

/// Every (label, op) context some derivation over `g` can visit.
fn reachable_contexts(g: &Grammar) -> BTreeSet<(String, Op)> {
    let mut out = BTreeSet::new();
    out.insert((g.start_symbol.clone(), Op::Sub));
    for t in g.trees.values() {
        let s = sites_of(t);
        out.extend(s.substitution.into_iter().map(|(_, l)| (l, Op::Sub)));
        out.extend(s.adjunction.into_iter().map(|(_, l)| (l, Op::Adj)));
    }
    out
}

/// A smoothed model at level 1, 2 or 3. Never reports a missing context for
/// trees and labels of its grammar.
#[derive(Clone, Debug)]
pub struct SmoothedModel {
    pub level: u8,
    pub config: BackoffConfig,
    grammar: Grammar,
    primary: Counts<Key, Outcome>,
    anchor: Counts<Key, Outcome>,
    family: Counts<Key, Outcome>,
    expansions: Counts<String, MetaProduction>,
    template_expansions: Counts<String, MetaProduction>,
    templates: Emission,
    families: Emission,
    /// Relative-frequency level-1 template model with deterministic contexts
    /// filled in; the end of every chain.
    terminal: Counts<Key, Outcome>,
    lower: Option<Box<SmoothedModel>>,
}

/// Counts everything every level needs from one pass over the corpus.
struct Tables {
    sites: Vec<(SiteContext, Outcome)>,
    metas: Vec<MetaProduction>,
    roots: Vec<String>,
}

fn tabulate(g: &Grammar, corpus: &[DerivationTree]) -> Result<Tables, SmoothingError> {
    if corpus.is_empty() {
        return Err(SmoothingError::EmptyCorpus);
    }
    let mut t = Tables { sites: Vec::new(), metas: Vec::new(), roots: Vec::new() };
    for (index, d) in corpus.iter().enumerate() {
        let wrap = |source| SmoothingError::Entry { index, source };
        t.sites.extend(extract_site_events(g, d).map_err(wrap)?.into_iter().map(|e| (e.context, e.outcome)));
        t.metas.extend(extract_meta_productions(g, d).map_err(wrap)?);
        t.roots.push(d.tree.clone());
    }
    Ok(t)
}

/// Builds the smoothed model of `level` from a corpus.
pub fn build_smoothed(
    g: &Grammar,
    corpus: &[DerivationTree],
    level: u8,
    config: &BackoffConfig,
) -> Result<SmoothedModel, SmoothingError> {
    config.validate()?;
    if !(1..=3).contains(&level) {
        return Err(SmoothingError::Level(level));
    }
    let tables = tabulate(g, corpus)?;
    build_from(g, &tables, level, config)
}

fn build_from(g: &Grammar, t: &Tables, level: u8, config: &BackoffConfig) -> Result<SmoothedModel, SmoothingError> {
    let mut uses: BTreeMap<String, u64> = BTreeMap::new();
    for (_, o) in &t.sites {
        if let Outcome::Tree(name) = o {
            *uses.entry(name.clone()).or_default() += 1;
        }
    }
    let templates = Emission::new(g, &uses, |t| t.template.clone());
    let families = Emission::new(g, &uses, |t| t.family_id().to_string());

    let lower = match level {
        1 => None,
        l => Some(Box::new(build_from(g, t, l - 1, config)?)),
    };

    // level-2 style keys for the site tables
    let site_key = |ctx: &SiteContext, host_map: &dyn Fn(&str) -> String, keep_addr: bool| -> Key {
        match &ctx.site {
            Site::Root => Key { root: true, host: None, addr: None, label: ctx.label.clone(), op: ctx.op },
            Site::Node { host, addr } => Key {
                root: false,
                host: Some(host_map(host)),
                addr: keep_addr.then(|| addr.clone()),
                label: ctx.label.clone(),
                op: ctx.op,
            },
        }
    };

    let mut primary = Counts::default();
    let mut anchor = Counts::default();
    let mut family = Counts::default();
    let mut terminal = Counts::default();
    for (ctx, o) in &t.sites {
        let l1 = Key::label(&ctx.label, ctx.op);
        let tmpl = templates.class_outcome(o).expect("outcome tree is in the grammar");
        let fam = families.class_outcome(o).expect("outcome tree is in the grammar");
        terminal.add(l1.clone(), tmpl.clone(), 1);
        match level {
            1 => {
                primary.add(l1.clone(), o.clone(), 1);
                anchor.add(l1.clone(), tmpl, 1);
                family.add(l1, fam, 1);
            }
            2 => {
                primary.add(site_key(ctx, &|h| h.to_string(), true), o.clone(), 1);
                anchor.add(site_key(ctx, &|h| templates.rename(h), true), tmpl, 1);
                family.add(site_key(ctx, &|h| families.rename(h), false), fam, 1);
            }
            _ => {}
        }
    }

    // fill contexts with a single licensed outcome, then demand coverage
    let mut gaps = Vec::new();
    for (label, op) in reachable_contexts(g) {
        let key = Key::label(&label, op);
        if terminal.context_total(&key) > 0 {
            continue;
        }
        match licensed_outcomes(g, &label, op).as_slice() {
            [only] => terminal.add(key, templates.class_outcome(only).unwrap(), 1),
            _ => gaps.push(format!("{op} {label}")),
        }
    }
    if !gaps.is_empty() {
        return Err(SmoothingError::Coverage(gaps));
    }

    let mut expansions = Counts::default();
    let mut template_expansions = Counts::default();
    let mut root = Counts::default();
    if level == 3 {
        for m in &t.metas {
            expansions.add(m.mother.clone(), m.clone(), 1);
            let tm = m.map_names(|n| templates.rename(n));
            template_expansions.add(tm.mother.clone(), tm, 1);
        }
        let key = Key { root: true, host: None, addr: None, label: g.start_symbol.clone(), op: Op::Sub };
        for r in &t.roots {
            root.add(key.clone(), Outcome::tree(r.clone()), 1);
        }
    }

    Ok(SmoothedModel {
        level,
        config: config.clone(),
        grammar: g.clone(),
        primary: if level == 3 { root } else { primary },
        anchor,
        family,
        expansions,
        template_expansions,
        templates,
        families,
        terminal,
        lower,
    })
}

impl SmoothedModel {
    fn terminal_prob(&self, label: &str, op: Op, o: &Outcome) -> f64 {
        let key = Key::label(label, op);
        match self.templates.class_outcome(o) {
            Some(t) => lookup(&self.terminal, &key, &t).unwrap_or(0.0) * self.templates.emit(o),
            None => 0.0,
        }
    }

    fn stage_site(&self, tech: Technique, ctx: &SiteContext, o: &Outcome) -> Option<f64> {
        let node_key = |host: String, keep_addr: bool| -> Key {
            match &ctx.site {
                Site::Root => Key { root: true, host: None, addr: None, label: ctx.label.clone(), op: ctx.op },
                Site::Node { addr, .. } => Key {
                    root: false,
                    host: Some(host),
                    addr: keep_addr.then(|| addr.clone()),
                    label: ctx.label.clone(),
                    op: ctx.op,
                },
            }
        };
        let host = match &ctx.site {
            Site::Node { host, .. } => host.as_str(),
            Site::Root => "",
        };
        let l1 = self.level == 1;
        match tech {
            Technique::Anchor => {
                let key = if l1 { Key::label(&ctx.label, ctx.op) } else { node_key(self.templates.rename(host), true) };
                let c = self.templates.class_outcome(o)?;
                lookup(&self.anchor, &key, &c).map(|p| p * self.templates.emit(o))
            }
            Technique::Family => {
                let key = if l1 { Key::label(&ctx.label, ctx.op) } else { node_key(self.families.rename(host), false) };
                let c = self.families.class_outcome(o)?;
                // the family emission must stay within trees that fit the site
                let p = lookup(&self.family, &key, &c)?;
                Some(p * self.family_emit(o, &ctx.label, ctx.op))
            }
            Technique::Level => Some(match &self.lower {
                Some(m) => m.smooth_prob(ctx, o),
                None => self.terminal_prob(&ctx.label, ctx.op, o),
            }),
        }
    }

    /// Add-one P(tree | family, label, kind).
    fn family_emit(&self, o: &Outcome, label: &str, op: Op) -> f64 {
        let Outcome::Tree(t) = o else { return 1.0 };
        let Some(fam) = self.families.class.get(t) else { return 0.0 };
        let kind = if op == Op::Sub { TreeKind::Initial } else { TreeKind::Auxiliary };
        let members: Vec<&str> = self
            .grammar
            .trees
            .values()
            .filter(|x| x.kind == kind && x.root.label == label && self.families.class.get(&x.name) == Some(fam))
            .map(|x| x.name.as_str())
            .collect();
        if !members.contains(&t.as_str()) {
            return 0.0;
        }
        // the family emission table already holds add-one estimates over the
        // whole family; restrict and renormalize
        let total: f64 = members.iter().map(|m| self.families.prob[*m]).sum();
        self.families.prob[t.as_str()] / total
    }

    /// Smoothed probability of a site choice (levels 1 and 2).
    pub fn smooth_prob(&self, ctx: &SiteContext, o: &Outcome) -> f64 {
        let primary_key = match (self.level, &ctx.site) {
            (1, _) => Key::label(&ctx.label, ctx.op),
            (_, Site::Root) => Key { root: true, host: None, addr: None, label: ctx.label.clone(), op: ctx.op },
            (_, Site::Node { host, addr }) => Key {
                root: false,
                host: Some(host.clone()),
                addr: Some(addr.clone()),
                label: ctx.label.clone(),
                op: ctx.op,
            },
        };
        let mut stages = vec![lookup(&self.primary, &primary_key, o)];
        stages.extend(self.config.order.iter().map(|t| self.stage_site(*t, ctx, o)));
        mix(&self.config.weights(), &stages).unwrap_or_else(|| self.terminal_prob(&ctx.label, ctx.op, o))
    }

    /// The smoothed distribution of a (label, op) context over its licensed outcomes.
    pub fn distribution(&self, ctx: &SiteContext) -> BTreeMap<Outcome, f64> {
        licensed_outcomes(&self.grammar, &ctx.label, ctx.op).into_iter().map(|o| {
            let p = self.smooth_prob(ctx, &o);
            (o, p)
        }).collect()
    }

    fn lower_prob(&self, m: &MetaProduction) -> f64 {
        let lower = self.lower.as_ref().expect("level-3 model has a lower level");
        m.site_events(&self.grammar)
            .map(|es| es.iter().map(|e| lower.smooth_prob(&e.context, &e.outcome)).product())
            .unwrap_or(0.0)
    }

    /// Smoothed P(expansion | mother) at level 3.
    pub fn expansion_prob(&self, m: &MetaProduction) -> f64 {
        let primary = {
            let total = self.expansions.context_total(&m.mother);
            (total > 0).then(|| self.expansions.get(&m.mother, m) as f64 / total as f64)
        };
        let stages: Vec<Option<f64>> = std::iter::once(primary)
            .chain(self.config.order.iter().map(|t| match t {
                Technique::Anchor => {
                    let tm = m.map_names(|n| self.templates.rename(n));
                    let total = self.template_expansions.context_total(&tm.mother);
                    (total > 0).then(|| {
                        let emit: f64 = m.daughters().iter().map(|d| self.templates.emit(&Outcome::tree(*d))).product();
                        self.template_expansions.get(&tm.mother, &tm) as f64 / total as f64 * emit
                    })
                }
                Technique::Family => None,
                Technique::Level => Some(self.lower_prob(m)),
            }))
            .collect();
        mix(&self.config.weights(), &stages).unwrap_or_else(|| self.lower_prob(m))
    }

    /// Smoothed probability that the derivation starts with `tree`.
    pub fn root_prob(&self, tree: &str) -> f64 {
        let ctx = SiteContext::root(self.grammar.start_symbol.clone());
        let o = Outcome::tree(tree);
        match (&self.lower, self.level) {
            (Some(lower), 3) => {
                let key = Key { root: true, host: None, addr: None, label: ctx.label.clone(), op: Op::Sub };
                let stages: Vec<Option<f64>> = std::iter::once(lookup(&self.primary, &key, &o))
                    .chain(self.config.order.iter().map(|t| (*t == Technique::Level).then(|| lower.smooth_prob(&ctx, &o))))
                    .collect();
                mix(&self.config.weights(), &stages).unwrap_or_else(|| lower.smooth_prob(&ctx, &o))
            }
            _ => self.smooth_prob(&ctx, &o),
        }
    }
}

impl SiteModel for SmoothedModel {
    fn site_prob(&self, ctx: &SiteContext, outcome: &Outcome) -> Result<f64, ModelError> {
        Ok(self.smooth_prob(ctx, outcome))
    }
}

impl ExpansionModel for SmoothedModel {
    fn root_prob(&self, _g: &Grammar, tree: &str) -> Result<f64, ModelError> {
        Ok(SmoothedModel::root_prob(self, tree))
    }

    fn expansion_log_prob(&self, _g: &Grammar, m: &MetaProduction) -> Result<f64, ModelError> {
        Ok(self.expansion_prob(m).ln())
    }
}

impl DerivationScorer for SmoothedModel {
    fn log_prob(&self, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
        if self.level == 3 {
            score_expansions(self, g, d)
        } else {
            score_sites(self, g, d)
        }
    }
}

/// All site contexts of `g`: the root plus every (tree, address, op).
pub fn site_contexts(g: &Grammar) -> Vec<SiteContext> {
    let mut out = vec![SiteContext::root(g.start_symbol.clone())];
    for t in g.trees.values() {
        let s = sites_of(t);
        out.extend(s.substitution.into_iter().map(|(a, l)| SiteContext::node(t.name.clone(), a, l, Op::Sub)));
        out.extend(s.adjunction.into_iter().map(|(a, l)| SiteContext::node(t.name.clone(), a, l, Op::Adj)));
    }
    out
}
