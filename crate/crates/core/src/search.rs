//! Bounded exhaustive enumeration of derivations, used as an exact oracle for
//! normalization, sentence probabilities and n-best ranking on small grammars.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::derivation::{derive, DerivationTree, Edge, Op};
use crate::grammar::{sites_of, Grammar, TreeKind};
use crate::models::{DerivationScorer, ModelError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Upper bound on derivation-tree nodes.
    pub max_tree_uses: usize,
    /// `None` leaves adjunction sequences bounded only by `max_tree_uses`.
    pub max_adj_per_node: Option<usize>,
    pub max_yield: Option<usize>,
}

impl SearchBounds {
    pub fn uses(max_tree_uses: usize) -> Self {
        SearchBounds { max_tree_uses, max_adj_per_node: None, max_yield: None }
    }

    pub fn with_max_adj(mut self, n: usize) -> Self {
        self.max_adj_per_node = Some(n);
        self
    }

    pub fn with_max_yield(mut self, n: usize) -> Self {
        self.max_yield = Some(n);
        self
    }
}

type Options = Rc<Vec<(DerivationTree, usize)>>;

struct Enumerator<'g> {
    g: &'g Grammar,
    max_adj: Option<usize>,
    initial: BTreeMap<&'g str, Vec<&'g str>>,
    auxiliary: BTreeMap<&'g str, Vec<&'g str>>,
    memo: HashMap<(&'g str, usize), Options>,
}

impl<'g> Enumerator<'g> {
    fn new(g: &'g Grammar, max_adj: Option<usize>) -> Self {
        let mut initial: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut auxiliary: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        // trees iterate in name order, so option lists are sorted
        for t in g.trees.values() {
            let by = if t.kind == TreeKind::Initial { &mut initial } else { &mut auxiliary };
            by.entry(t.root.label.as_str()).or_default().push(t.name.as_str());
        }
        Enumerator { g, max_adj, initial, auxiliary, memo: HashMap::new() }
    }

    /// All derivations rooted in `tree` with at most `budget` nodes, with
    /// their sizes, in canonical order.
    fn rooted(&mut self, tree: &'g str, budget: usize) -> Options {
        if let Some(hit) = self.memo.get(&(tree, budget)) {
            return hit.clone();
        }
        let out = if budget == 0 { Vec::new() } else { self.expand(tree, budget) };
        let out = Rc::new(out);
        self.memo.insert((tree, budget), out.clone());
        out
    }

    fn expand(&mut self, tree: &'g str, budget: usize) -> Vec<(DerivationTree, usize)> {
        let et = &self.g.trees[tree];
        let sites = sites_of(et);
        let mut slots: Vec<_> = sites
            .substitution
            .into_iter()
            .map(|(a, l)| (a, l, Op::Sub))
            .chain(sites.adjunction.into_iter().map(|(a, l)| (a, l, Op::Adj)))
            .collect();
        slots.sort();
        let mut partial: Vec<(Vec<Edge>, usize)> = vec![(Vec::new(), 1)];
        for (addr, label, op) in slots {
            let mut next = Vec::new();
            for (edges, used) in partial {
                let room = budget - used;
                let fills = match op {
                    Op::Sub => self.substitutions(&label, room),
                    Op::Adj => self.sequences(&label, room),
                };
                for (children, size) in fills {
                    let mut e = edges.clone();
                    e.extend(children.into_iter().map(|child| Edge { addr: addr.clone(), op, child }));
                    next.push((e, used + size));
                }
            }
            partial = next;
            if partial.is_empty() {
                break;
            }
        }
        partial.into_iter().map(|(edges, size)| (DerivationTree::new(tree, edges), size)).collect()
    }

    fn substitutions(&mut self, label: &str, room: usize) -> Vec<(Vec<DerivationTree>, usize)> {
        let names = self.initial.get(label).cloned().unwrap_or_default();
        let mut out = Vec::new();
        for name in names {
            for (d, s) in self.rooted(name, room).iter() {
                out.push((vec![d.clone()], *s));
            }
        }
        out
    }

    /// Adjunction sequences at one node, shorter sequences first.
    fn sequences(&mut self, label: &str, room: usize) -> Vec<(Vec<DerivationTree>, usize)> {
        let names = self.auxiliary.get(label).cloned().unwrap_or_default();
        let mut singles: Vec<(DerivationTree, usize)> = Vec::new();
        for name in &names {
            singles.extend(self.rooted(name, room).iter().cloned());
        }
        let max_len = self.max_adj.unwrap_or(usize::MAX).min(room);
        let mut out = vec![(Vec::new(), 0)];
        let mut frontier: Vec<(Vec<DerivationTree>, usize)> = vec![(Vec::new(), 0)];
        for _ in 0..max_len {
            let mut longer = Vec::new();
            for (seq, size) in &frontier {
                for (d, s) in &singles {
                    if size + s <= room {
                        let mut seq = seq.clone();
                        seq.push(d.clone());
                        longer.push((seq, size + s));
                    }
                }
            }
            if longer.is_empty() {
                break;
            }
            out.extend(longer.iter().cloned());
            frontier = longer;
        }
        out
    }
}

/// Every valid complete derivation within the bounds, each exactly once, in
/// canonical order: root tree name, then slots by address with options by
/// tree name and shorter adjunction sequences first.
pub fn enumerate_derivations(g: &Grammar, b: SearchBounds) -> Vec<DerivationTree> {
    let mut en = Enumerator::new(g, b.max_adj_per_node);
    let roots: Vec<&str> = g.trees_rooted(&g.start_symbol, TreeKind::Initial).map(|t| t.name.as_str()).collect();
    let mut out = Vec::new();
    for r in roots {
        out.extend(en.rooted(r, b.max_tree_uses).iter().map(|(d, _)| d.clone()));
    }
    if let Some(n) = b.max_yield {
        out.retain(|d| derive(g, d).map(|t| t.terminal_yield().len() <= n).unwrap_or(false));
    }
    out
}

/// Probability of `d`, with contexts the model lacks counting as zero.
fn prob(m: &(impl DerivationScorer + ?Sized), g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
    match m.log_prob(g, d) {
        Ok(lp) => Ok(lp.exp()),
        Err(ModelError::MissingContext(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Total probability of all derivations within the bounds.
pub fn total_mass(m: &(impl DerivationScorer + ?Sized), g: &Grammar, b: SearchBounds) -> Result<f64, ModelError> {
    enumerate_derivations(g, b).iter().map(|d| prob(m, g, d)).sum()
}

fn matching<'a>(g: &Grammar, sentence: &[&str], all: &'a [DerivationTree]) -> Vec<&'a DerivationTree> {
    all.iter()
        .filter(|d| derive(g, d).map(|t| t.terminal_yield() == sentence).unwrap_or(false))
        .collect()
}

/// Sum of the probabilities of every enumerated derivation yielding `sentence`.
pub fn sentence_probability(
    m: &(impl DerivationScorer + ?Sized),
    g: &Grammar,
    sentence: &[&str],
    b: SearchBounds,
) -> Result<f64, ModelError> {
    let all = enumerate_derivations(g, b);
    matching(g, sentence, &all).into_iter().map(|d| prob(m, g, d)).sum()
}

/// The `k` most probable derivations of `sentence` with their log-probabilities.
/// Ties keep canonical enumeration order.
pub fn nbest(
    m: &(impl DerivationScorer + ?Sized),
    g: &Grammar,
    sentence: &[&str],
    k: usize,
    b: SearchBounds,
) -> Result<Vec<(DerivationTree, f64)>, ModelError> {
    let all = enumerate_derivations(g, b);
    let mut scored = Vec::new();
    for d in matching(g, sentence, &all) {
        let lp = match m.log_prob(g, d) {
            Ok(lp) => lp,
            Err(ModelError::MissingContext(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        scored.push((d.clone(), lp));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(k);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::tests::{d2, g0};
    use crate::derivation::validate_derivation;
    use crate::grammar::parse_grammar;
    use crate::models::tests::{dist, g0_slg1};
    use crate::models::{score_derivation, Slg1Params};
    use std::collections::HashSet;

    #[test]
    fn no_adjunction_count() {
        // (alpha2, alpha2) uses 3 trees, (alpha2, alpha3) and (alpha3, alpha2)
        // use 4 with delta; (alpha3, alpha3) needs 5
        let ds = enumerate_derivations(&g0(), SearchBounds::uses(4).with_max_adj(0));
        assert_eq!(ds.len(), 3);
        assert_eq!(enumerate_derivations(&g0(), SearchBounds::uses(5).with_max_adj(0)).len(), 4);
    }

    #[test]
    fn siteless_grammar_has_one_derivation() {
        let g = parse_grammar("start S\ntree only initial\n(S^na (V \"go\"))\n").unwrap();
        let g2 = parse_grammar("start S\ntree only initial\n(S (V \"go\"))\n").unwrap();
        assert_eq!(enumerate_derivations(&g, SearchBounds::uses(5)), vec![DerivationTree::leaf("only")]);
        assert_eq!(enumerate_derivations(&g2, SearchBounds::uses(5)).len(), 1);
    }

    #[test]
    fn tiny_bounds_give_nothing() {
        assert!(enumerate_derivations(&g0(), SearchBounds::uses(2)).is_empty());
        assert!(enumerate_derivations(&g0(), SearchBounds::uses(0)).is_empty());
    }

    #[test]
    fn enumerations_are_valid_and_distinct() {
        let g = g0();
        let ds = enumerate_derivations(&g, SearchBounds::uses(7));
        let set: HashSet<_> = ds.iter().collect();
        assert_eq!(set.len(), ds.len());
        for d in &ds {
            assert!(validate_derivation(&g, d).unwrap().is_empty(), "{d}");
            assert!(d.node_count() <= 7);
        }
        assert_eq!(ds, enumerate_derivations(&g, SearchBounds::uses(7)));
    }

    #[test]
    fn mass_at_six_uses() {
        // beta-count tail of the subcritical VP process limits the bounded mass
        let mass = total_mass(&g0_slg1(), &g0(), SearchBounds::uses(6)).unwrap();
        assert!((mass - 0.962816).abs() < 1e-12, "{mass}");
        let mut prev = 0.0;
        for n in 1..=9 {
            let m = total_mass(&g0_slg1(), &g0(), SearchBounds::uses(n)).unwrap();
            assert!(m >= prev && m <= 1.0 + 1e-9);
            prev = m;
        }
    }

    #[test]
    fn sentence_with_adverb() {
        let g = g0();
        let p = g0_slg1();
        let s: Vec<&str> = "John drives the car slowly".split(' ').collect();
        let b = SearchBounds::uses(6);
        let got = sentence_probability(&p, &g, &s, b).unwrap();
        assert!((got - 0.032).abs() < 1e-15);
        let best = nbest(&p, &g, &s, 5, b).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].0, d2());
        assert_eq!(sentence_probability(&p, &g, &["John", "flies"], b).unwrap(), 0.0);
    }

    #[test]
    fn sentence_probabilities_partition_the_mass() {
        let g = g0();
        let p = g0_slg1();
        let b = SearchBounds::uses(6);
        let all = enumerate_derivations(&g, b);
        let mut by_yield: BTreeMap<String, f64> = BTreeMap::new();
        for d in &all {
            *by_yield.entry(derive(&g, d).unwrap().sentence()).or_default() += score_derivation(&p, &g, d).unwrap().exp();
        }
        let mut total = 0.0;
        for (s, mass) in &by_yield {
            let words: Vec<&str> = s.split(' ').collect();
            let sp = sentence_probability(&p, &g, &words, b).unwrap();
            assert!((sp - mass).abs() < 1e-15);
            total += sp;
        }
        assert!((total - total_mass(&p, &g, b).unwrap()).abs() < 1e-12);
    }

    fn ambiguous() -> (Grammar, Slg1Params) {
        let g = parse_grammar(
            "start S\ntree s1 initial\n(S NP! (VP (V \"runs\")))\ntree s2 initial\n(S (NP (N \"John\")) (VP (V \"runs\")))\n\
             tree np initial\n(NP (N \"John\"))\n",
        )
        .unwrap();
        let mut p = Slg1Params::default();
        p.sub.insert("NP".into(), dist(&[("np", 1.0)]));
        for l in ["S", "NP", "VP", "V", "N"] {
            p.adj.insert(l.into(), dist(&[("STOP", 1.0)]));
        }
        (g, p)
    }

    #[test]
    fn ranking_follows_root_probabilities() {
        let (g, mut p) = ambiguous();
        let s = ["John", "runs"];
        let b = SearchBounds::uses(3);
        p.sub.insert("S".into(), dist(&[("s1", 0.7), ("s2", 0.3)]));
        let best = nbest(&p, &g, &s, 2, b).unwrap();
        assert_eq!(best.iter().map(|(d, _)| d.tree.as_str()).collect::<Vec<_>>(), ["s1", "s2"]);
        p.sub.insert("S".into(), dist(&[("s1", 0.3), ("s2", 0.7)]));
        let best = nbest(&p, &g, &s, 2, b).unwrap();
        assert_eq!(best.iter().map(|(d, _)| d.tree.as_str()).collect::<Vec<_>>(), ["s2", "s1"]);
        assert_eq!(nbest(&p, &g, &s, 10, b).unwrap().len(), 2);
        assert_eq!(nbest(&p, &g, &s, 1, b).unwrap()[..], best[..1]);
    }

    #[test]
    fn ties_keep_canonical_order() {
        let (g, mut p) = ambiguous();
        p.sub.insert("S".into(), dist(&[("s1", 0.5), ("s2", 0.5)]));
        let best = nbest(&p, &g, &["John", "runs"], 2, SearchBounds::uses(3)).unwrap();
        assert_eq!(best[0].0.tree, "s1");
        assert_eq!(best[0].1, best[1].1);
    }

    #[test]
    fn yield_bound_filters() {
        let g = g0();
        let ds = enumerate_derivations(&g, SearchBounds::uses(6).with_max_yield(4));
        assert!(ds.iter().all(|d| derive(&g, d).unwrap().terminal_yield().len() <= 4));
        // John drives John, with and without one adverb, and the two one-article orders
        assert_eq!(ds.len(), 4);
    }
}
