//! Extracts the pairwise feature vector for one coreferring and one
//! non-coreferring pair and prints every populated feature.

use cdcr::features::FeatureExtractor;
use cdcr::synth::{generate, SynthConfig};

fn main() {
    let (corpus, store) = generate(&SynthConfig::day_per_subtopic(7));
    let x = FeatureExtractor::with_all_features(&corpus, &store);
    let actions = corpus.actions();
    let a = actions[0];
    let same = actions[1..]
        .iter()
        .copied()
        .find(|&b| corpus.gold_cluster(b) == corpus.gold_cluster(a) && b.doc != a.doc)
        .expect("a cross-document partner");
    let other = actions[1..]
        .iter()
        .copied()
        .find(|&b| corpus.gold_cluster(b) != corpus.gold_cluster(a) && b.doc != a.doc)
        .expect("a non-coreferring mention");
    println!("{} features", x.schema().len());
    for b in [same, other] {
        println!(
            "\n{} vs {} ({})",
            corpus.mention_key(a),
            corpus.mention_key(b),
            corpus.link_type(a, b).as_str()
        );
        let v = x.extract(a, b);
        for (i, name) in x.schema().names().iter().enumerate() {
            if let Some(value) = v.get(i) {
                println!("  {name}\t{value:.4}");
            }
        }
    }
}
