use crate::derivation::{DerivationTree, Op};
use crate::events::{extract_meta_productions, extract_site_events, MetaProduction, Outcome, Site, SiteContext};
use crate::grammar::Grammar;

use super::{ModelError, Slg1Params, Slg2Params, Slg3Params};

/// A model that assigns a probability to each individual site choice.
pub trait SiteModel {
    fn site_prob(&self, ctx: &SiteContext, outcome: &Outcome) -> Result<f64, ModelError>;
}

/// A model over complete tree expansions.
pub trait ExpansionModel {
    fn root_prob(&self, g: &Grammar, tree: &str) -> Result<f64, ModelError>;
    fn expansion_log_prob(&self, g: &Grammar, m: &MetaProduction) -> Result<f64, ModelError>;
}

/// Anything that can put a log-probability on a derivation.
pub trait DerivationScorer {
    fn log_prob(&self, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError>;
}

impl<T: SiteModel + ?Sized> SiteModel for &T {
    fn site_prob(&self, ctx: &SiteContext, outcome: &Outcome) -> Result<f64, ModelError> {
        (**self).site_prob(ctx, outcome)
    }
}

/// Sum of log-probabilities of every choice event in `d`.
pub fn score_sites<M: SiteModel + ?Sized>(m: &M, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in extract_site_events(g, d)? {
        total += m.site_prob(&e.context, &e.outcome)?.ln();
    }
    Ok(total)
}

/// Root choice plus one expansion term per derivation-tree node.
pub fn score_expansions<M: ExpansionModel + ?Sized>(m: &M, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
    let metas = extract_meta_productions(g, d)?;
    let mut total = m.root_prob(g, &d.tree)?.ln();
    for meta in &metas {
        total += m.expansion_log_prob(g, meta)?;
    }
    Ok(total)
}

/// Log-probability of a valid, complete derivation. A zero-probability choice
/// gives negative infinity; a context the model has no parameters for is an
/// error.
pub fn score_derivation(m: &(impl DerivationScorer + ?Sized), g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
    m.log_prob(g, d)
}

fn missing(ctx: &SiteContext) -> ModelError {
    let what = match &ctx.site {
        Site::Root => format!("root {}", ctx.label),
        Site::Node { host, addr } => format!("{host}@{addr} ({})", ctx.label),
    };
    ModelError::MissingContext(format!("{} {what}", ctx.op))
}

impl SiteModel for Slg1Params {
    fn site_prob(&self, ctx: &SiteContext, outcome: &Outcome) -> Result<f64, ModelError> {
        let table = if ctx.op == Op::Sub { &self.sub } else { &self.adj };
        table
            .get(&ctx.label)
            .map(|d| d.prob(outcome))
            .ok_or_else(|| ModelError::MissingContext(format!("{} {}", ctx.op, ctx.label)))
    }
}

impl SiteModel for Slg2Params {
    fn site_prob(&self, ctx: &SiteContext, outcome: &Outcome) -> Result<f64, ModelError> {
        let d = match &ctx.site {
            Site::Root => Some(&self.root).filter(|d| !d.is_empty()),
            Site::Node { host, addr } => {
                let table = if ctx.op == Op::Sub { &self.sub } else { &self.adj };
                table.get(&(host.clone(), addr.clone()))
            }
        };
        d.map(|d| d.prob(outcome)).ok_or_else(|| missing(ctx))
    }
}

impl ExpansionModel for Slg3Params {
    fn root_prob(&self, g: &Grammar, tree: &str) -> Result<f64, ModelError> {
        if self.root.is_empty() {
            return Err(ModelError::MissingContext(format!("root {}", g.start_symbol)));
        }
        Ok(self.root.prob(&Outcome::tree(tree)))
    }

    fn expansion_log_prob(&self, _g: &Grammar, m: &MetaProduction) -> Result<f64, ModelError> {
        let d = self
            .expand
            .get(&m.mother)
            .ok_or_else(|| ModelError::MissingContext(format!("expand {}", m.mother)))?;
        // the expansion space is infinite, so an unlisted expansion is unknown rather than impossible
        d.get(m)
            .map(f64::ln)
            .ok_or_else(|| ModelError::MissingContext(format!("expand {} {}", m.mother, m.expansion_string())))
    }
}

impl DerivationScorer for Slg1Params {
    fn log_prob(&self, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
        score_sites(self, g, d)
    }
}

impl DerivationScorer for Slg2Params {
    fn log_prob(&self, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
        score_sites(self, g, d)
    }
}

impl DerivationScorer for Slg3Params {
    fn log_prob(&self, g: &Grammar, d: &DerivationTree) -> Result<f64, ModelError> {
        score_expansions(self, g, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::tests::{d1, d2, d3, g0};
    use crate::models::tests::{dist, g0_slg1};
    use crate::models::Distribution;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fixture_scores() {
        let g = g0();
        let p = g0_slg1();
        // 0.25 * (1/5)(4/5) * (4/5)
        assert!(rel(score_derivation(&p, &g, &d2()).unwrap().exp(), 0.032) < 1e-12);
        // 0.25 * (4/5)
        assert!(rel(score_derivation(&p, &g, &d1()).unwrap().exp(), 0.2) < 1e-12);
        assert!(rel(score_derivation(&p, &g, &d3()).unwrap().exp(), 0.2) < 1e-12);
    }

    #[test]
    fn zero_probability_is_negative_infinity() {
        let g = g0();
        let mut p = g0_slg1();
        p.adj.insert("VP".into(), dist(&[("STOP", 1.0)]));
        assert_eq!(score_derivation(&p, &g, &d2()).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn missing_context_is_an_error() {
        let g = g0();
        let mut p = g0_slg1();
        p.sub.remove("Det");
        assert!(matches!(score_derivation(&p, &g, &d1()), Err(ModelError::MissingContext(_))));
    }

    #[test]
    fn level3_unseen_expansion_is_missing() {
        let g = g0();
        let mut p = Slg3Params { root: dist(&[("alpha1", 1.0)]), ..Default::default() };
        let m = MetaProduction::of_node(&d1());
        p.expand.insert("alpha1".into(), [(m, 1.0)].into_iter().collect::<Distribution<_>>());
        for t in ["alpha2", "alpha3", "delta"] {
            p.expand.insert(t.into(), [(MetaProduction::new(t), 1.0)].into_iter().collect());
        }
        let delta_expansion = MetaProduction::parse_expansion("alpha3", "{1>delta}").unwrap();
        p.expand.insert("alpha3".into(), [(delta_expansion, 1.0)].into_iter().collect());
        assert_eq!(score_derivation(&p, &g, &d1()).unwrap(), 0.0);
        assert!(matches!(score_derivation(&p, &g, &d3()), Err(ModelError::MissingContext(_))));
    }
}
