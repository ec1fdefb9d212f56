//! Parse the example grammar, validate it and compose a derivation.

use slg::derivation::{derive, DerivationTree};
use slg::grammar::{parse_grammar, validate_grammar};

fn main() {
    let g = parse_grammar(include_str!("../fixtures/g0.slg")).expect("fixture grammar parses");
    println!("{} trees, {} violations", g.trees.len(), validate_grammar(&g).len());
    let d = DerivationTree::parse("(alpha1 (1 sub (alpha2)) (2 adj (beta)) (2.2 sub (alpha3 (1 sub (delta)))))").unwrap();
    let t = derive(&g, &d).expect("valid derivation");
    println!("derivation: {d}");
    println!("derived:    {t}");
    println!("sentence:   {}", t.sentence());
}
