//! Score derivations with hand-set level-1 parameters, then with their
//! level-2 and level-3 lifts.

use slg::derivation::{parse_corpus};
use slg::grammar::parse_grammar;
use slg::models::{lift_slg1, lift_slg2, parse_params, score_derivation, Params};

const PARAMS: &str = "\
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

fn main() {
    let g = parse_grammar(include_str!("../fixtures/g0.slg")).unwrap();
    let Params::Slg1(p1) = parse_params(PARAMS).unwrap() else { unreachable!() };
    let p2 = lift_slg1(&p1, &g).unwrap();
    let p3 = lift_slg2(&p2).unwrap();
    for d in parse_corpus(include_str!("../fixtures/g0_corpus.drv")).unwrap() {
        let s1 = score_derivation(&p1, &g, &d).unwrap().exp();
        let s2 = score_derivation(&p2, &g, &d).unwrap().exp();
        let s3 = score_derivation(&p3, &g, &d).unwrap().exp();
        println!("{s1:.6} {s2:.6} {s3:.6}  {d}");
    }
}
