#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use slg::derivation::{DerivationTree, Op};
use slg::events::{Outcome, Site};
use slg::grammar::{parse_grammar, Grammar};
use slg::models::{parse_params, Distribution, Params, Slg1Params, Slg2Params};
use slg::smoothing::{licensed_outcomes, site_contexts};

pub const G0_TEXT: &str = include_str!("../../fixtures/g0.slg");
pub const G0_CORPUS: &str = include_str!("../../fixtures/g0_corpus.drv");

pub const D1: &str = "(alpha1 (1 sub (alpha2)) (2.2 sub (alpha3 (1 sub (delta)))))";
pub const D2: &str = "(alpha1 (1 sub (alpha2)) (2 adj (beta)) (2.2 sub (alpha3 (1 sub (delta)))))";

/// Hand-set level-1 parameters for G0: NP split evenly, beta adjoins at VP
/// with probability 0.2, every other adjunction context stops.
pub const G0_SLG1: &str = "\
slg1 sub S alpha1 1
slg1 sub NP alpha2 0.5
slg1 sub NP alpha3 0.5
slg1 sub Det delta 1
slg1 adj VP beta 0.2
slg1 adj VP STOP 0.8
slg1 adj S STOP 1
slg1 adj V STOP 1
slg1 adj NP STOP 1
slg1 adj N STOP 1
slg1 adj Det STOP 1
slg1 adj Adj STOP 1
";

pub fn g0() -> Grammar {
    parse_grammar(G0_TEXT).unwrap()
}

pub fn g0_slg1() -> Params {
    parse_params(G0_SLG1).unwrap()
}

pub fn d(text: &str) -> DerivationTree {
    DerivationTree::parse(text).unwrap()
}

/// A random positive distribution; adjunction contexts give STOP at least
/// half the mass so sampling stays subcritical.
pub fn random_dist(rng: &mut ChaCha8Rng, outcomes: &[Outcome]) -> Distribution<Outcome> {
    let trees: Vec<&Outcome> = outcomes.iter().filter(|o| **o != Outcome::Stop).collect();
    let has_stop = trees.len() < outcomes.len();
    let stop = if has_stop { if trees.is_empty() { 1.0 } else { rng.gen_range(0.5..0.95) } } else { 0.0 };
    let weights: Vec<f64> = trees.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    let mut out: Distribution<Outcome> = trees.iter().zip(&weights).map(|(o, w)| ((*o).clone(), (1.0 - stop) * w / sum)).collect();
    if has_stop {
        out.set(Outcome::Stop, stop);
    }
    out
}

/// Random level-1 parameters over every reachable (label, op) context.
pub fn random_slg1(rng: &mut ChaCha8Rng, g: &Grammar) -> Slg1Params {
    let mut p = Slg1Params::default();
    for ctx in site_contexts(g) {
        let table = if ctx.op == Op::Sub { &mut p.sub } else { &mut p.adj };
        if !table.contains_key(&ctx.label) {
            let d = random_dist(rng, &licensed_outcomes(g, &ctx.label, ctx.op));
            table.insert(ctx.label.clone(), d);
        }
    }
    p
}

/// Random level-2 parameters over every site of `g`.
pub fn random_slg2(rng: &mut ChaCha8Rng, g: &Grammar) -> Slg2Params {
    let mut p = Slg2Params::default();
    for ctx in site_contexts(g) {
        let d = random_dist(rng, &licensed_outcomes(g, &ctx.label, ctx.op));
        match ctx.site {
            Site::Root => p.root = d,
            Site::Node { host, addr } => {
                let table = if ctx.op == Op::Sub { &mut p.sub } else { &mut p.adj };
                table.insert((host, addr), d);
            }
        }
    }
    p
}

/// Random grammar text: S, NP and D initial trees plus a few auxiliary
/// trees. Every substitution site can be filled.
pub fn random_grammar_text(rng: &mut ChaCha8Rng) -> String {
    let mut n = 0usize;
    let mut word = || {
        n += 1;
        format!("w{n}")
    };
    let mut trees: Vec<(String, &str, String)> = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let vp = if rng.gen_bool(0.2) { "VP^na" } else { "VP" };
        let body = match rng.gen_range(0..3) {
            0 => format!("(S NP! ({vp} (V \"{}\") NP!))", word()),
            1 => format!("(S NP! ({vp} (V \"{}\")))", word()),
            _ => format!("(S ({vp} (V \"{}\") NP!))", word()),
        };
        trees.push((format!("s{}", trees.len()), "initial", body));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let body = match rng.gen_range(0..3) {
            0 => format!("(NP (N \"{}\"))", word()),
            1 => format!("(NP D! (N \"{}\"))", word()),
            _ => format!("(NP (N \"{}\") (PP (P \"{}\") NP!))", word(), word()),
        };
        trees.push((format!("n{}", trees.len()), "initial", body));
    }
    for _ in 0..rng.gen_range(1..=2) {
        trees.push((format!("d{}", trees.len()), "initial", format!("(D \"{}\")", word())));
    }
    for _ in 0..rng.gen_range(0..=3) {
        let body = match rng.gen_range(0..5) {
            0 => format!("(VP VP* (Adv \"{}\"))", word()),
            1 => format!("(VP (Adv \"{}\") VP*)", word()),
            2 => format!("(NP (A \"{}\") NP*)", word()),
            3 => format!("(S S* (C \"{}\"))", word()),
            _ => format!("(VP VP* (PP (P \"{}\") NP!))", word()),
        };
        trees.push((format!("b{}", trees.len()), "auxiliary", body));
    }
    let mut text = String::from("start S\n");
    for (name, kind, body) in trees {
        text.push_str(&format!("tree {name} {kind}\n{body}\n"));
    }
    text
}

pub fn random_grammar(rng: &mut ChaCha8Rng) -> Grammar {
    let text = random_grammar_text(rng);
    parse_grammar(&text).unwrap_or_else(|e| panic!("generated grammar does not parse: {e}\n{text}"))
}
