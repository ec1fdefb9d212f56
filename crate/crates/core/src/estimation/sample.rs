use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derivation::{DerivationTree, Edge, Op};
use crate::events::{MetaProduction, Outcome, Site, SiteContext};
use crate::grammar::{sites_of, Grammar};
use crate::models::{Distribution, ModelError, Params, Slg1Params, Slg2Params, Slg3Params};

use super::EstimationError;

fn draw<'a, O: Ord, R: Rng + ?Sized>(d: &'a Distribution<O>, rng: &mut R) -> Option<&'a O> {
    let u: f64 = rng.gen::<f64>() * d.total();
    let mut acc = 0.0;
    let mut last = None;
    for (o, p) in d.iter() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(o);
        if u < acc {
            return Some(o);
        }
    }
    last
}

/// Distribution lookup for the two site-level parameterizations.
trait SiteTable {
    fn table(&self, ctx: &SiteContext) -> Option<&Distribution<Outcome>>;
}

impl SiteTable for Slg1Params {
    fn table(&self, ctx: &SiteContext) -> Option<&Distribution<Outcome>> {
        if ctx.op == Op::Sub { self.sub.get(&ctx.label) } else { self.adj.get(&ctx.label) }
    }
}

impl SiteTable for Slg2Params {
    fn table(&self, ctx: &SiteContext) -> Option<&Distribution<Outcome>> {
        match &ctx.site {
            Site::Root => Some(&self.root).filter(|d| !d.is_empty()),
            Site::Node { host, addr } => {
                let key = (host.clone(), addr.clone());
                if ctx.op == Op::Sub { self.sub.get(&key) } else { self.adj.get(&key) }
            }
        }
    }
}

fn choose<T: SiteTable, R: Rng + ?Sized>(p: &T, ctx: &SiteContext, rng: &mut R) -> Result<Outcome, EstimationError> {
    p.table(ctx)
        .and_then(|d| draw(d, rng))
        .cloned()
        .ok_or_else(|| ModelError::MissingContext(format!("{} {}", ctx.op, ctx.label)).into())
}

/// Pending derivation nodes live in an arena so deep derivations do not
/// recurse; they are assembled bottom-up once sampling finishes.
struct Arena {
    names: Vec<String>,
    edges: Vec<Vec<(crate::address::NodeAddress, Op, usize)>>,
    max_nodes: usize,
}

impl Arena {
    fn push(&mut self, name: String) -> Result<usize, EstimationError> {
        if self.names.len() >= self.max_nodes {
            return Err(EstimationError::BudgetExceeded { max_nodes: self.max_nodes });
        }
        self.names.push(name);
        self.edges.push(Vec::new());
        Ok(self.names.len() - 1)
    }

    fn assemble(mut self) -> DerivationTree {
        let mut built: Vec<Option<DerivationTree>> = vec![None; self.names.len()];
        // children are always created after their parent
        for i in (0..self.names.len()).rev() {
            let edges = std::mem::take(&mut self.edges[i])
                .into_iter()
                .map(|(addr, op, c)| Edge { addr, op, child: built[c].take().expect("child assembled") })
                .collect();
            built[i] = Some(DerivationTree::new(std::mem::take(&mut self.names[i]), edges));
        }
        built[0].take().expect("root assembled")
    }
}

fn sample_sites<T: SiteTable, R: Rng + ?Sized>(
    p: &T,
    g: &Grammar,
    rng: &mut R,
    max_nodes: usize,
) -> Result<DerivationTree, EstimationError> {
    let mut arena = Arena { names: Vec::new(), edges: Vec::new(), max_nodes };
    let root = choose(p, &SiteContext::root(g.start_symbol.clone()), rng)?;
    let root = root.tree_name().ok_or_else(|| ModelError::MissingContext("root choice is STOP".into()))?;
    arena.push(root.to_string())?;
    let mut next = 0;
    while next < arena.names.len() {
        let host = arena.names[next].clone();
        let tree = g.tree(&host).map_err(|e| ModelError::Derivation(e.into()))?;
        let sites = sites_of(tree);
        let mut slots: Vec<_> = sites
            .substitution
            .iter()
            .map(|(a, l)| (a, l, Op::Sub))
            .chain(sites.adjunction.iter().map(|(a, l)| (a, l, Op::Adj)))
            .collect();
        slots.sort();
        for (addr, label, op) in slots {
            let ctx = SiteContext::node(host.clone(), addr.clone(), label.clone(), op);
            loop {
                match choose(p, &ctx, rng)? {
                    Outcome::Stop => break,
                    Outcome::Tree(t) => {
                        let child = arena.push(t)?;
                        arena.edges[next].push((addr.clone(), op, child));
                        if op == Op::Sub {
                            break;
                        }
                    }
                }
            }
        }
        next += 1;
    }
    Ok(arena.assemble())
}

fn sample_expansions<R: Rng + ?Sized>(
    p: &Slg3Params,
    g: &Grammar,
    rng: &mut R,
    max_nodes: usize,
) -> Result<DerivationTree, EstimationError> {
    let mut arena = Arena { names: Vec::new(), edges: Vec::new(), max_nodes };
    let root = draw(&p.root, rng)
        .and_then(Outcome::tree_name)
        .ok_or_else(|| ModelError::MissingContext(format!("root {}", g.start_symbol)))?;
    arena.push(root.to_string())?;
    let mut next = 0;
    while next < arena.names.len() {
        let mother = &arena.names[next];
        let m: &MetaProduction = p
            .expand
            .get(mother)
            .and_then(|d| draw(d, rng))
            .ok_or_else(|| ModelError::MissingContext(format!("expand {mother}")))?;
        let mut attach: Vec<_> = m.substitutions.iter().map(|(a, t)| (a, Op::Sub, t)).collect();
        for (a, ts) in &m.adjunctions {
            attach.extend(ts.iter().map(|t| (a, Op::Adj, t)));
        }
        for (addr, op, t) in attach {
            let child = arena.push(t.clone())?;
            arena.edges[next].push((addr.clone(), op, child));
        }
        next += 1;
    }
    Ok(arena.assemble())
}

/// One derivation from the model's generative process using `rng`.
pub fn sample_with<R: Rng + ?Sized>(
    params: &Params,
    g: &Grammar,
    rng: &mut R,
    max_nodes: usize,
) -> Result<DerivationTree, EstimationError> {
    match params {
        Params::Slg1(p) => sample_sites(p, g, rng, max_nodes),
        Params::Slg2(p) => sample_sites(p, g, rng, max_nodes),
        Params::Slg3(p) => sample_expansions(p, g, rng, max_nodes),
        Params::Slg4(_) => Err(EstimationError::Level(4)),
    }
}

/// Deterministic in `seed`.
pub fn sample_derivation(params: &Params, g: &Grammar, seed: u64, max_nodes: usize) -> Result<DerivationTree, EstimationError> {
    sample_with(params, g, &mut ChaCha8Rng::seed_from_u64(seed), max_nodes)
}

/// `n` derivations from one seeded stream.
pub fn sample_corpus(
    params: &Params,
    g: &Grammar,
    seed: u64,
    n: usize,
    max_nodes: usize,
) -> Result<Vec<DerivationTree>, EstimationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_with(params, g, &mut rng, max_nodes)).collect()
}
