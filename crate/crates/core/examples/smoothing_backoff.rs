//! Back off from sparse tree statistics to shared templates, then score a
//! derivation whose trees never occur in training.

use slg::derivation::{parse_corpus, DerivationTree};
use slg::grammar::parse_grammar;
use slg::models::score_derivation;
use slg::smoothing::{build_smoothed, BackoffConfig};

fn main() {
    let text = format!(
        "{}\ntree alpha2b initial anchor=Mary\n(NP (N \"Mary\"))\ntree alpha1b initial anchor=sees\n(S NP! (VP (V \"sees\") NP!))\n",
        include_str!("../fixtures/g0.slg")
    );
    let g = parse_grammar(&text).unwrap();
    let train = parse_corpus(include_str!("../fixtures/g0_corpus.drv")).unwrap();
    let unseen = DerivationTree::parse("(alpha1b (1 sub (alpha2b)) (2.2 sub (alpha2)))").unwrap();
    for order in ["anchor,family,level", "family,anchor,level"] {
        let cfg = BackoffConfig::parse(&format!("order = {order}")).unwrap();
        for level in 1..=3 {
            let m = build_smoothed(&g, &train, level, &cfg).unwrap();
            let p = score_derivation(&m, &g, &unseen).unwrap().exp();
            println!("order {order}, level {level}: P(unseen) = {p:.4e}");
        }
    }
}
