//! Relative-frequency estimation from derivation corpora, DOP fragment
//! extraction, and sampling from a model's generative process.
//!
//! Counting is exact (`u64`); division happens only when parameters are
//! emitted, either as floats or as exact rationals.

mod fragments;
mod sample;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::derivation::{DerivationError, DerivationTree, Op};
use crate::events::{extract_meta_productions, extract_site_events, Context, MetaProduction, Outcome};
use crate::grammar::Grammar;
use crate::models::{Distribution, ModelError, Params, Slg1Params, Slg2Params, Slg3Params};

pub use fragments::{
    count_fragments_of, estimate_dop, estimate_dop_exact, extract_fragments, FragmentOptions, DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_FRAGMENTS,
};
pub use sample::{sample_corpus, sample_derivation, sample_with};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("nothing to estimate: the corpus is empty")]
    EmptyCorpus,
    #[error("corpus entry {index}: {source}")]
    Entry { index: usize, source: DerivationError },
    #[error("tree {index} has more than {limit} fragments")]
    TooManyFragments { index: usize, limit: u64 },
    #[error("sampling budget of {max_nodes} derivation nodes exceeded")]
    BudgetExceeded { max_nodes: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsupported level {0}")]
    Level(u8),
}

/// Counts of outcomes per context. Merging is a commutative reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts<C: Ord, O: Ord> {
    table: BTreeMap<C, BTreeMap<O, u64>>,
}

impl<C: Ord, O: Ord> Default for Counts<C, O> {
    fn default() -> Self {
        Counts { table: BTreeMap::new() }
    }
}

impl<C: Ord + Clone, O: Ord + Clone> Counts<C, O> {
    pub fn add(&mut self, context: C, outcome: O, n: u64) {
        *self.table.entry(context).or_default().entry(outcome).or_default() += n;
    }

    pub fn merge(&mut self, other: &Counts<C, O>) {
        for (c, row) in &other.table {
            for (o, n) in row {
                self.add(c.clone(), o.clone(), *n);
            }
        }
    }

    pub fn get(&self, context: &C, outcome: &O) -> u64 {
        self.table.get(context).and_then(|r| r.get(outcome)).copied().unwrap_or(0)
    }

    pub fn context_total(&self, context: &C) -> u64 {
        self.table.get(context).map(|r| r.values().sum()).unwrap_or(0)
    }

    pub fn row(&self, context: &C) -> Option<&BTreeMap<O, u64>> {
        self.table.get(context)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &C> {
        self.table.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&C, &BTreeMap<O, u64>)> {
        self.table.iter()
    }

    /// Re-keys contexts and outcomes, pooling counts that collide.
    pub fn map<C2: Ord + Clone, O2: Ord + Clone>(&self, fc: impl Fn(&C) -> C2, fo: impl Fn(&O) -> O2) -> Counts<C2, O2> {
        let mut out = Counts::default();
        for (c, row) in &self.table {
            for (o, n) in row {
                out.add(fc(c), fo(o), *n);
            }
        }
        out
    }

    pub fn distribution(&self, context: &C) -> Option<Distribution<O>> {
        let row = self.table.get(context)?;
        let total: u64 = row.values().sum();
        Some(row.iter().map(|(o, &n)| (o.clone(), n as f64 / total as f64)).collect())
    }

    pub fn exact_distribution(&self, context: &C) -> Option<BTreeMap<O, BigRational>> {
        let row = self.table.get(context)?;
        let total: u64 = row.values().sum();
        Some(
            row.iter()
                .map(|(o, &n)| (o.clone(), BigRational::new(BigInt::from(n), BigInt::from(total))))
                .collect(),
        )
    }
}

/// Event counts of a corpus at one level. Root choices are filed under
/// [`Context::Root`] at levels 2 and 3 and under the start label at level 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventCounts {
    pub level: u8,
    pub sites: Counts<Context, Outcome>,
    pub expansions: Counts<String, MetaProduction>,
}

impl EventCounts {
    pub fn new(level: u8) -> Self {
        EventCounts { level, sites: Counts::default(), expansions: Counts::default() }
    }

    pub fn add_derivation(&mut self, g: &Grammar, d: &DerivationTree) -> Result<(), DerivationError> {
        match self.level {
            3 => {
                let metas = extract_meta_productions(g, d)?;
                self.sites.add(Context::Root { start: g.start_symbol.clone() }, Outcome::tree(d.tree.clone()), 1);
                for m in metas {
                    self.expansions.add(m.mother.clone(), m, 1);
                }
            }
            level => {
                for e in extract_site_events(g, d)? {
                    let ctx = if level == 1 { e.context.level1() } else { e.context.level2() };
                    self.sites.add(ctx, e.outcome, 1);
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &EventCounts) {
        assert_eq!(self.level, other.level, "merging counts of different levels");
        self.sites.merge(&other.sites);
        self.expansions.merge(&other.expansions);
    }

    /// Renames trees everywhere they occur (contexts, outcomes, expansions).
    pub fn rename(&self, f: impl Fn(&str) -> String) -> EventCounts {
        let sites = self.sites.map(
            |c| match c {
                Context::Site { host, addr, op } => Context::Site { host: f(host), addr: addr.clone(), op: *op },
                Context::Mother(m) => Context::Mother(f(m)),
                other => other.clone(),
            },
            |o| o.map_tree(&f),
        );
        let expansions = self.expansions.map(|m| f(m), |m| m.map_names(&f));
        EventCounts { level: self.level, sites, expansions }
    }

    /// Relative-frequency parameters.
    pub fn to_params(&self) -> Params {
        match self.level {
            1 => {
                let mut p = Slg1Params::default();
                for ctx in self.sites.contexts() {
                    if let Context::Label { label, op } = ctx {
                        let table = if *op == Op::Sub { &mut p.sub } else { &mut p.adj };
                        table.insert(label.clone(), self.sites.distribution(ctx).unwrap());
                    }
                }
                Params::Slg1(p)
            }
            2 => {
                let mut p = Slg2Params::default();
                for ctx in self.sites.contexts() {
                    let d = self.sites.distribution(ctx).unwrap();
                    match ctx {
                        Context::Site { host, addr, op: Op::Sub } => {
                            p.sub.insert((host.clone(), addr.clone()), d);
                        }
                        Context::Site { host, addr, op: Op::Adj } => {
                            p.adj.insert((host.clone(), addr.clone()), d);
                        }
                        Context::Root { .. } => p.root = d,
                        _ => {}
                    }
                }
                Params::Slg2(p)
            }
            _ => {
                let mut p = Slg3Params::default();
                for ctx in self.sites.contexts() {
                    if let Context::Root { .. } = ctx {
                        p.root = self.sites.distribution(ctx).unwrap();
                    }
                }
                for mother in self.expansions.contexts() {
                    p.expand.insert(mother.clone(), self.expansions.distribution(mother).unwrap());
                }
                Params::Slg3(p)
            }
        }
    }
}

/// Validates and counts a whole corpus. Errors carry the entry index.
pub fn count_events(g: &Grammar, corpus: &[DerivationTree], level: u8) -> Result<EventCounts, EstimationError> {
    if !(1..=3).contains(&level) {
        return Err(EstimationError::Level(level));
    }
    if corpus.is_empty() {
        return Err(EstimationError::EmptyCorpus);
    }
    let mut counts = EventCounts::new(level);
    for (index, d) in corpus.iter().enumerate() {
        counts.add_derivation(g, d).map_err(|source| EstimationError::Entry { index, source })?;
    }
    Ok(counts)
}

/// P(outcome | context) = count(context, outcome) / count(context). Contexts
/// the corpus never visits are absent.
pub fn estimate(g: &Grammar, corpus: &[DerivationTree], level: u8) -> Result<Params, EstimationError> {
    Ok(count_events(g, corpus, level)?.to_params())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::tests::{d1, d2, d3, g0};
    use num_traits::{One, Zero};

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn fixture_level1_counts() {
        let g = g0();
        let counts = count_events(&g, &[d1(), d2(), d3()], 1).unwrap();
        let np = Context::Label { label: "NP".into(), op: Op::Sub };
        let vp = Context::Label { label: "VP".into(), op: Op::Adj };
        assert_eq!(counts.sites.context_total(&np), 6);
        assert_eq!(counts.sites.context_total(&vp), 5);
        let exact = counts.sites.exact_distribution(&np).unwrap();
        assert_eq!(exact[&Outcome::tree("alpha2")], ratio(1, 2));
        let exact = counts.sites.exact_distribution(&vp).unwrap();
        assert_eq!(exact[&Outcome::tree("beta")], ratio(1, 5));
        assert_eq!(exact[&Outcome::Stop], ratio(4, 5));

        let Params::Slg1(p) = counts.to_params() else { panic!() };
        assert_eq!(p.sub["NP"].prob(&Outcome::tree("alpha3")), 0.5);
        assert_eq!(p.adj["VP"].prob(&Outcome::tree("beta")), 0.2);
        assert_eq!(p.sub["S"].prob(&Outcome::tree("alpha1")), 1.0);
        assert!(p.check_well_formed(Some(&g)).is_empty());
    }

    #[test]
    fn single_derivation_gives_point_masses() {
        let g = g0();
        for level in 2..=3 {
            let p = estimate(&g, &[d1()], level).unwrap();
            assert!(p.check_well_formed(Some(&g)).is_empty());
            match p {
                Params::Slg2(p) => p.sub.values().chain(p.adj.values()).for_each(|d| assert_eq!(d.probs.len(), 1)),
                Params::Slg3(p) => p.expand.values().for_each(|d| assert_eq!(d.probs.len(), 1)),
                _ => unreachable!(),
            }
        }
        // at level 1 both NP sites of D1 share one context
        let Params::Slg1(p) = estimate(&g, &[d1()], 1).unwrap() else { panic!() };
        assert_eq!(p.sub["NP"].probs.len(), 2);
        assert!(p.sub.iter().filter(|(l, _)| *l != "NP").chain(&p.adj).all(|(_, d)| d.probs.len() == 1));
    }

    #[test]
    fn level3_expansion_share() {
        let g = g0();
        let counts = count_events(&g, &[d1(), d2(), d3()], 3).unwrap();
        let m = MetaProduction::of_node(&d2());
        let exact = counts.expansions.exact_distribution(&"alpha1".to_string()).unwrap();
        assert_eq!(exact.len(), 3);
        assert_eq!(exact[&m], ratio(1, 3));
        let Params::Slg3(p) = counts.to_params() else { panic!() };
        assert_eq!(p.root.prob(&Outcome::tree("alpha1")), 1.0);
        assert!((p.expand["alpha1"].prob(&m) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_entry_reports_index() {
        let g = g0();
        let bad = DerivationTree::leaf("alpha1");
        match estimate(&g, &[d1(), bad], 1) {
            Err(EstimationError::Entry { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(estimate(&g, &[], 2), Err(EstimationError::EmptyCorpus)));
    }

    #[test]
    fn merge_order_does_not_matter() {
        let g = g0();
        let corpus = [d1(), d2(), d3(), d2()];
        let whole = count_events(&g, &corpus, 2).unwrap();
        let mut a = count_events(&g, &corpus[2..], 2).unwrap();
        a.merge(&count_events(&g, &corpus[..2], 2).unwrap());
        let mut b = count_events(&g, &corpus[..1], 2).unwrap();
        b.merge(&count_events(&g, &corpus[1..], 2).unwrap());
        assert_eq!(whole, a);
        assert_eq!(whole, b);
    }

    #[test]
    fn level1_is_weighted_marginal_of_level2() {
        let g = g0();
        let corpus = [d1(), d2(), d3(), d2(), d1()];
        let c1 = count_events(&g, &corpus, 1).unwrap();
        let c2 = count_events(&g, &corpus, 2).unwrap();
        for ctx1 in c1.sites.contexts() {
            let p1 = c1.sites.exact_distribution(ctx1).unwrap();
            let mut weighted: BTreeMap<Outcome, BigRational> = BTreeMap::new();
            let mut weight = BigRational::zero();
            for ctx2 in c2.sites.contexts() {
                if crate::events::project_to_level1(&g, ctx2).as_ref() != Some(ctx1) {
                    continue;
                }
                let w = BigRational::from_integer(c2.sites.context_total(ctx2).into());
                for (o, p) in c2.sites.exact_distribution(ctx2).unwrap() {
                    *weighted.entry(o).or_insert_with(BigRational::zero) += &w * p;
                }
                weight += w;
            }
            let marginal: BTreeMap<Outcome, BigRational> =
                weighted.into_iter().map(|(o, p)| (o, p / &weight)).collect();
            assert_eq!(p1, marginal, "{ctx1:?}");
            assert_eq!(marginal.values().fold(BigRational::zero(), |a, b| a + b), BigRational::one());
        }
    }

    #[test]
    fn rename_pools_counts() {
        let g = g0();
        let counts = count_events(&g, &[d1(), d2(), d3()], 1).unwrap();
        let np = Context::Label { label: "NP".into(), op: Op::Sub };
        let pooled = counts.rename(|t| if t.starts_with("alpha") { "a".into() } else { t.into() });
        assert_eq!(pooled.sites.get(&np, &Outcome::tree("a")), 6);
    }
}
