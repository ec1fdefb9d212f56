//! Fragment extraction and tree probabilities under the fragment model,
//! in floating point and exact rationals.

use slg::derivation::DerivedTree;
use slg::estimation::{estimate_dop, estimate_dop_exact, extract_fragments, FragmentOptions};
use slg::models::score_derived_tree_dop;

fn main() {
    let small = DerivedTree::parse(r#"(S (A "a") (B "b"))"#).unwrap();
    for (f, n) in extract_fragments(std::slice::from_ref(&small), FragmentOptions::depth(2)).unwrap() {
        println!("{n}  {f}");
    }
    let corpus = [
        DerivedTree::parse(r#"(S (NP "she") (VP (V "runs")))"#).unwrap(),
        DerivedTree::parse(r#"(S (NP "he") (VP (V "walks")))"#).unwrap(),
    ];
    let float = estimate_dop(&corpus, FragmentOptions::default()).unwrap();
    let exact = estimate_dop_exact(&corpus, FragmentOptions::unbounded()).unwrap();
    let novel = DerivedTree::parse(r#"(S (NP "she") (VP (V "walks")))"#).unwrap();
    for t in corpus.iter().chain([&novel]) {
        println!("{t}: {:.6} (exact {})", score_derived_tree_dop(&float, t), score_derived_tree_dop(&exact, t));
    }
}
