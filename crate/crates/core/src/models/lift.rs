use crate::derivation::Op;
use crate::events::{MetaProduction, Outcome, SiteContext};
use crate::grammar::{sites_of, Grammar, TreeKind};

use super::{Distribution, ExpansionModel, ModelError, SiteModel, Slg1Params, Slg2Params};

/// Copies each label distribution to every (tree, address) context carrying
/// that label, keeping only outcomes the grammar allows there.
pub fn lift_slg1(p: &Slg1Params, g: &Grammar) -> Result<Slg2Params, ModelError> {
    let v = p.check_well_formed(None);
    if !v.is_empty() {
        return Err(ModelError::IllFormed(v));
    }
    let restrict = |d: &Distribution<Outcome>, label: &str, op: Op| -> Distribution<Outcome> {
        let want = if op == Op::Sub { TreeKind::Initial } else { TreeKind::Auxiliary };
        let kept: Distribution<Outcome> = d
            .iter()
            .filter(|(o, _)| match o {
                Outcome::Stop => op == Op::Adj,
                Outcome::Tree(t) => g.trees.get(t).is_some_and(|t| t.kind == want && t.root.label == label),
            })
            .map(|(o, p)| (o.clone(), p))
            .collect();
        let mass = kept.total();
        if mass > 0.0 && (mass - d.total()).abs() > super::NORMALIZATION_TOLERANCE {
            kept.iter().map(|(o, p)| (o.clone(), p / mass)).collect()
        } else {
            kept
        }
    };
    let mut out = Slg2Params::default();
    if let Some(d) = p.sub.get(&g.start_symbol) {
        out.root = restrict(d, &g.start_symbol, Op::Sub);
    }
    for tree in g.trees.values() {
        let sites = sites_of(tree);
        for (addr, label) in sites.substitution {
            if let Some(d) = p.sub.get(&label) {
                out.sub.insert((tree.name.clone(), addr), restrict(d, &label, Op::Sub));
            }
        }
        for (addr, label) in sites.adjunction {
            if let Some(d) = p.adj.get(&label) {
                out.adj.insert((tree.name.clone(), addr), restrict(d, &label, Op::Adj));
            }
        }
    }
    Ok(out)
}

/// The expansion model induced by a site model: an expansion's probability is
/// the product of its site choices, each adjunction sequence closed by STOP.
/// The support is infinite, so probabilities are computed on demand.
#[derive(Clone, Debug)]
pub struct Lifted<M>(pub M);

pub fn lift_slg2(p: &Slg2Params) -> Result<Lifted<&Slg2Params>, ModelError> {
    let v = p.check_well_formed(None);
    if !v.is_empty() {
        return Err(ModelError::IllFormed(v));
    }
    Ok(Lifted(p))
}

impl<M: SiteModel> ExpansionModel for Lifted<M> {
    fn root_prob(&self, g: &Grammar, tree: &str) -> Result<f64, ModelError> {
        self.0.site_prob(&SiteContext::root(g.start_symbol.clone()), &Outcome::tree(tree))
    }

    fn expansion_log_prob(&self, g: &Grammar, m: &MetaProduction) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for e in m.site_events(g)? {
            total += self.0.site_prob(&e.context, &e.outcome)?.ln();
        }
        Ok(total)
    }
}

impl<M: SiteModel> super::DerivationScorer for Lifted<M> {
    fn log_prob(&self, g: &Grammar, d: &crate::derivation::DerivationTree) -> Result<f64, ModelError> {
        super::score_expansions(self, g, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::tests::{d1, d2, d3, g0};
    use crate::models::score_derivation;
    use crate::models::tests::{dist, g0_slg1};

    #[test]
    fn lift_copies_label_distribution_to_sites() {
        let g = g0();
        let p2 = lift_slg1(&g0_slg1(), &g).unwrap();
        let subj = &p2.sub[&("alpha1".to_string(), "1".parse().unwrap())];
        let obj = &p2.sub[&("alpha1".to_string(), "2.2".parse().unwrap())];
        assert_eq!(subj.prob(&Outcome::tree("alpha2")), 0.5);
        assert_eq!(obj.prob(&Outcome::tree("alpha2")), 0.5);
        assert_eq!(p2.root, dist(&[("alpha1", 1.0)]));
        assert!(p2.check_well_formed(Some(&g)).is_empty());
    }

    #[test]
    fn lift_preserves_scores() {
        let g = g0();
        let p1 = g0_slg1();
        let p2 = lift_slg1(&p1, &g).unwrap();
        let p3 = lift_slg2(&p2).unwrap();
        for d in [d1(), d2(), d3()] {
            let s1 = score_derivation(&p1, &g, &d).unwrap();
            let s2 = score_derivation(&p2, &g, &d).unwrap();
            let s3 = score_derivation(&p3, &g, &d).unwrap();
            assert!((s1 - s2).abs() <= 1e-12);
            assert!((s2 - s3).abs() <= 1e-12);
        }
        assert!((score_derivation(&p3, &g, &d2()).unwrap().exp() - 0.032).abs() < 1e-15);
    }

    #[test]
    fn lift_renormalizes_only_when_restriction_drops_mass() {
        let g = g0();
        let mut p1 = g0_slg1();
        // delta has the wrong label for NP sites and is dropped by the restriction
        p1.sub.insert("NP".into(), dist(&[("alpha2", 0.3), ("alpha3", 0.3), ("delta", 0.4)]));
        let p2 = lift_slg1(&p1, &g).unwrap();
        let d = &p2.sub[&("alpha1".to_string(), "1".parse().unwrap())];
        assert!((d.prob(&Outcome::tree("alpha2")) - 0.5).abs() < 1e-15);
        assert!(d.get(&Outcome::tree("delta")).is_none());
    }

    #[test]
    fn lift_rejects_ill_formed_input() {
        let g = g0();
        let mut p1 = g0_slg1();
        p1.sub.insert("NP".into(), dist(&[("alpha2", 0.6), ("alpha3", 0.3)]));
        assert!(matches!(lift_slg1(&p1, &g), Err(ModelError::IllFormed(_))));
    }
}
