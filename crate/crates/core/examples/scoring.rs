//! Scores a response partition with MUC, B³, CEAFe and LEA, round-trips it
//! through the CoNLL format and aggregates scores across corpora.

use cdcr::metrics::conll::{read_conll_keyed, write_conll};
use cdcr::metrics::{harmonic_aggregate, score, Score};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key = vec![
        vec!["d1/m1", "d2/m4", "d3/m2"],
        vec!["d1/m2"],
        vec!["d2/m1", "d3/m1"],
    ];
    let response = vec![
        vec!["d1/m1", "d2/m4"],
        vec!["d3/m2", "d1/m2"],
        vec!["d2/m1", "d3/m1"],
    ];
    let report = score(&key, &response)?;
    print!("{}", report.to_tsv());

    let owned: Vec<Vec<String>> = response
        .iter()
        .map(|c| c.iter().map(|m| m.to_string()).collect())
        .collect();
    let conll = write_conll("all", &owned);
    println!("\n{conll}");
    let back = read_conll_keyed(&conll)?;
    assert_eq!(
        score(
            &key.iter()
                .map(|c| c.iter().map(|m| m.to_string()).collect())
                .collect::<Vec<Vec<String>>>(),
            &back
        )?,
        report
    );

    // Harmonic mean per component; one weak corpus pulls the aggregate down.
    let per_corpus = [
        Score::from_pr(0.8, 0.6),
        Score::from_pr(0.7, 0.5),
        Score::from_pr(0.3, 0.1),
    ];
    let agg = harmonic_aggregate(&per_corpus);
    println!(
        "aggregate LEA P {:.3} R {:.3} F1 {:.3}",
        agg.precision, agg.recall, agg.f1
    );
    Ok(())
}
