//! Sample a corpus from known parameters and recover them by relative
//! frequency.

use slg::estimation::{estimate, sample_corpus};
use slg::grammar::parse_grammar;
use slg::models::{parse_params, render_params};

fn main() {
    let g = parse_grammar(include_str!("../fixtures/g0.slg")).unwrap();
    let truth = parse_params(
        "slg1 sub S alpha1 1\nslg1 sub NP alpha2 0.7\nslg1 sub NP alpha3 0.3\nslg1 sub Det delta 1\n\
         slg1 adj VP beta 0.25\nslg1 adj VP STOP 0.75\nslg1 adj S STOP 1\nslg1 adj V STOP 1\n\
         slg1 adj NP STOP 1\nslg1 adj N STOP 1\nslg1 adj Det STOP 1\nslg1 adj Adj STOP 1\n",
    )
    .unwrap();
    let corpus = sample_corpus(&truth, &g, 1, 5000, 1000).unwrap();
    println!("sampled {} derivations; first: {}", corpus.len(), corpus[0]);
    for level in 1..=2 {
        let est = estimate(&g, &corpus, level).unwrap();
        println!("-- level {level} estimate");
        print!("{}", render_params(&est));
    }
}
