//! Two modifiers adjoined at the same node in either order: identical under
//! any level-2 model, distinguishable at level 3.

use slg::derivation::DerivationTree;
use slg::estimation::estimate;
use slg::grammar::parse_grammar;
use slg::models::score_derivation;

fn main() {
    let g = parse_grammar(
        "start S\ntree verb initial\n(S NP! (VP (V \"left\")))\ntree name initial\n(NP (N \"Kim\"))\n\
         tree manner auxiliary\n(VP VP* (PP (P \"with\") (N \"haste\")))\n\
         tree time auxiliary\n(VP VP* (PP (P \"on\") (N \"monday\")))\n",
    )
    .unwrap();
    let a = DerivationTree::parse("(verb (1 sub (name)) (2 adj (manner)) (2 adj (time)))").unwrap();
    let b = DerivationTree::parse("(verb (1 sub (name)) (2 adj (time)) (2 adj (manner)))").unwrap();
    let corpus = vec![a.clone(), a.clone(), a.clone(), b.clone()];
    for level in 2..=3 {
        let p = estimate(&g, &corpus, level).unwrap();
        let m = p.as_scorer().unwrap();
        let (pa, pb) = (score_derivation(m, &g, &a).unwrap().exp(), score_derivation(m, &g, &b).unwrap().exp());
        println!("level {level}: manner-first {pa:.4}, time-first {pb:.4}");
    }
}
