//! Bounded enumeration, sentence probability and n-best parsing.

use slg::grammar::parse_grammar;
use slg::models::parse_params;
use slg::search::{enumerate_derivations, nbest, sentence_probability, total_mass, SearchBounds};

fn main() {
    let g = parse_grammar(include_str!("../fixtures/g0.slg")).unwrap();
    let p = parse_params(
        "slg1 sub S alpha1 1\nslg1 sub NP alpha2 0.5\nslg1 sub NP alpha3 0.5\nslg1 sub Det delta 1\n\
         slg1 adj VP beta 0.2\nslg1 adj VP STOP 0.8\nslg1 adj S STOP 1\nslg1 adj V STOP 1\n\
         slg1 adj NP STOP 1\nslg1 adj N STOP 1\nslg1 adj Det STOP 1\nslg1 adj Adj STOP 1\n",
    )
    .unwrap();
    let m = p.as_scorer().unwrap();
    for n in 3..=8 {
        let b = SearchBounds::uses(n);
        println!("uses <= {n}: {:>3} derivations, mass {:.6}", enumerate_derivations(&g, b).len(), total_mass(m, &g, b).unwrap());
    }
    let b = SearchBounds::uses(7);
    let s = ["John", "drives", "the", "car", "slowly"];
    println!("P({}) = {}", s.join(" "), sentence_probability(m, &g, &s, b).unwrap());
    for (d, lp) in nbest(m, &g, &s, 3, b).unwrap() {
        println!("{:.4}  {d}", lp.exp());
    }
}
