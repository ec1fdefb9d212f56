//! Sample from a model where subject and object types are coupled and
//! detect the dependency with a chi-square test.

use slg::estimation::sample_corpus;
use slg::grammar::parse_grammar;
use slg::models::parse_params;
use slg::stats::{chi_square, dependency_table, Classifier, Selector};

fn main() {
    let g = parse_grammar(
        "start S\ntree sees initial\n(S NP! (VP (V \"sees\") NP!))\n\
         tree pron initial\n(NP (Pro \"she\"))\ntree name initial\n(NP (N \"Mary\"))\n",
    )
    .unwrap();
    let coupled = parse_params(
        "slg3 root sees 1\n\
         slg3 expand sees {1>pron; 2.2>name} 0.4\nslg3 expand sees {1>name; 2.2>pron} 0.4\n\
         slg3 expand sees {1>pron; 2.2>pron} 0.1\nslg3 expand sees {1>name; 2.2>name} 0.1\n\
         slg3 expand pron {} 1\nslg3 expand name {} 1\n",
    )
    .unwrap();
    let corpus = sample_corpus(&coupled, &g, 5, 300, 100).unwrap();
    let row: Selector = "tree:sees@1".parse().unwrap();
    let col: Selector = "tree:sees@2.2".parse().unwrap();
    let t = dependency_table(&g, &corpus, &row, &col, Classifier::Tree).unwrap();
    print!("{t}");
    let r = chi_square(&t).unwrap();
    println!("chi2 = {:.3}, df = {}, p = {:.3e}", r.statistic, r.df, r.p_value);
}
