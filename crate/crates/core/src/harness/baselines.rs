//! Lemma-matching baselines with optional document preclustering.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::clustering::{agglomerative_at, Clustering, DistanceMatrix, Linkage};
use crate::corpus::{Corpus, Document};
use crate::features::tfidf::{document_tokens, SparseVector, TfIdfModel};
use crate::metrics::cross_document_score;

/// Hour thresholds searched by [`tune_delta`] for [`DeltaVariant::Time`].
pub const TIME_GRID_HOURS: [f64; 8] = [6.0, 12.0, 24.0, 48.0, 96.0, 168.0, 336.0, 672.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaVariant {
    Tfidf,
    Time,
}

impl DeltaVariant {
    pub fn grid(&self) -> Vec<f64> {
        match self {
            DeltaVariant::Tfidf => (1..=19).map(|i| (i * 5) as f64 / 100.0).collect(),
            DeltaVariant::Time => TIME_GRID_HOURS.to_vec(),
        }
    }
}

fn lemma_key(corpus: &Corpus, r: crate::corpus::ActionRef) -> Result<String, HarnessError> {
    corpus
        .mention(r)
        .lemma
        .as_ref()
        .map(|l| l.to_lowercase())
        .ok_or_else(|| HarnessError::MissingLemma(corpus.mention_key(r)))
}

/// Lemma clusters formed independently inside each group of document
/// indices.
pub fn lemma_within(corpus: &Corpus, groups: &[Vec<usize>]) -> Result<Clustering, HarnessError> {
    let mut group_of = vec![0usize; corpus.documents.len()];
    for (g, docs) in groups.iter().enumerate() {
        for &d in docs {
            group_of[d] = g;
        }
    }
    let mut classes: BTreeMap<(usize, String), Vec<String>> = BTreeMap::new();
    for r in corpus.actions() {
        let key = (group_of[r.doc], lemma_key(corpus, r)?);
        classes.entry(key).or_default().push(corpus.mention_key(r));
    }
    Ok(Clustering::new(classes.into_values().collect())?)
}

/// Action mentions sharing a case-folded lemma, across the whole corpus.
pub fn lemma_baseline(corpus: &Corpus) -> Result<Clustering, HarnessError> {
    lemma_within(corpus, &[(0..corpus.documents.len()).collect()])
}

fn groups_from_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}

/// Document groups from average-linkage cosine distance on tf-idf, cut
/// at `delta`.
pub fn tfidf_document_groups(corpus: &Corpus, delta: f64) -> Vec<Vec<usize>> {
    let tfidf = TfIdfModel::fit(&corpus.documents);
    let vectors: Vec<SparseVector> = corpus
        .documents
        .iter()
        .map(|d| {
            tfidf
                .vectorize(document_tokens(d))
                .unwrap_or_else(SparseVector::empty)
        })
        .collect();
    let ids = corpus.documents.iter().map(|d| d.doc_id.clone()).collect();
    let matrix = DistanceMatrix::from_fn(ids, |i, j| vectors[i].cosine_distance(&vectors[j]));
    groups_from_labels(&agglomerative_at(&matrix, Linkage::Average, delta))
}

pub fn lemma_delta(corpus: &Corpus, delta: f64) -> Result<Clustering, HarnessError> {
    lemma_within(corpus, &tfidf_document_groups(corpus, delta))
}

/// First temporal expression in document order, else the publication date.
pub fn document_date(doc: &Document) -> Option<NaiveDateTime> {
    doc.timex
        .iter()
        .min_by_key(|t| (t.sentence, t.token_span.start, t.token_span.end))
        .map(|t| t.value.datetime())
        .or_else(|| doc.publish_date.as_ref().map(|p| p.datetime()))
}

/// Document groups from average-linkage hour differences, cut at
/// `delta_hours`. Undated documents stay alone.
pub fn time_document_groups(corpus: &Corpus, delta_hours: f64) -> Vec<Vec<usize>> {
    let dated: Vec<(usize, NaiveDateTime)> = corpus
        .documents
        .iter()
        .enumerate()
        .filter_map(|(i, d)| document_date(d).map(|t| (i, t)))
        .collect();
    let ids = dated
        .iter()
        .map(|&(i, _)| corpus.documents[i].doc_id.clone())
        .collect();
    let matrix = DistanceMatrix::from_fn(ids, |i, j| {
        (dated[i].1 - dated[j].1).num_seconds().abs() as f64 / 3600.0
    });
    let mut groups: Vec<Vec<usize>> =
        groups_from_labels(&agglomerative_at(&matrix, Linkage::Average, delta_hours))
            .into_iter()
            .map(|g| g.into_iter().map(|k| dated[k].0).collect())
            .collect();
    let mut is_dated = vec![false; corpus.documents.len()];
    for &(i, _) in &dated {
        is_dated[i] = true;
    }
    groups.extend(
        (0..corpus.documents.len())
            .filter(|&i| !is_dated[i])
            .map(|i| vec![i]),
    );
    groups
}

pub fn lemma_time(corpus: &Corpus, delta_hours: f64) -> Result<Clustering, HarnessError> {
    lemma_within(corpus, &time_document_groups(corpus, delta_hours))
}

pub fn lemma_variant(
    corpus: &Corpus,
    variant: DeltaVariant,
    delta: f64,
) -> Result<Clustering, HarnessError> {
    match variant {
        DeltaVariant::Tfidf => lemma_delta(corpus, delta),
        DeltaVariant::Time => lemma_time(corpus, delta),
    }
}

/// Grid value with the best cross-document LEA F1 on `train`; ties go to
/// the earliest grid value.
pub fn tune_delta(train: &Corpus, variant: DeltaVariant) -> Result<f64, HarnessError> {
    let mut best: Option<(f64, f64)> = None;
    for delta in variant.grid() {
        let response = lemma_variant(train, variant, delta)?;
        let f1 = cross_document_score(train, response.clusters())?.lea.f1;
        if best.map_or(true, |(_, b)| f1 > b) {
            best = Some((delta, f1));
        }
    }
    Ok(best.expect("nonempty grid").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Mention, MentionKind, TimeValue, TimexSpan, TokenSpan};

    fn doc(id: &str, words: &[&str], lemmas: &[&str]) -> Document {
        Document {
            doc_id: id.into(),
            topic: "t".into(),
            subtopic: "s".into(),
            publish_date: None,
            sentences: vec![words.iter().map(|w| w.to_string()).collect()],
            mentions: lemmas
                .iter()
                .enumerate()
                .map(|(i, l)| Mention {
                    mention_id: format!("m{i}"),
                    kind: MentionKind::Action,
                    sentence: 0,
                    token_span: TokenSpan::new(i, i + 1),
                    cluster_id: Some(format!("{l}-{id}")),
                    anchor: None,
                    subtype: None,
                    lemma: Some(l.to_string()),
                })
                .collect(),
            timex: vec![],
            entity_links: vec![],
            srl: vec![],
        }
    }

    fn corpus(documents: Vec<Document>) -> Corpus {
        Corpus {
            corpus_id: "fixture".into(),
            documents,
        }
    }

    #[test]
    fn lemma_classes() {
        let c = corpus(vec![doc(
            "d",
            &["Attack", "attacked", "strike"],
            &["Attack", "attack", "strike"],
        )]);
        let got = lemma_baseline(&c).unwrap();
        assert_eq!(
            got.clusters(),
            &[
                vec!["d/m0".to_string(), "d/m1".into()],
                vec!["d/m2".to_string()]
            ]
        );
        let distinct = corpus(vec![doc("d", &["a", "b", "c"], &["a", "b", "c"])]);
        assert_eq!(lemma_baseline(&distinct).unwrap().len(), 3);
    }

    #[test]
    fn missing_lemma_names_the_mention() {
        let mut c = corpus(vec![doc("d", &["a", "b"], &["a", "b"])]);
        c.documents[0].mentions[1].lemma = None;
        match lemma_baseline(&c) {
            Err(HarnessError::MissingLemma(m)) => assert_eq!(m, "d/m1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delta_extremes() {
        let c = corpus(vec![
            doc("a", &["fire", "house", "burn"], &["burn"]),
            doc("b", &["fire", "forest", "burn"], &["burn"]),
            doc("c", &["vote", "senate", "pass"], &["burn"]),
        ]);
        assert_eq!(lemma_delta(&c, 1.0).unwrap(), lemma_baseline(&c).unwrap());
        assert_eq!(lemma_delta(&c, 0.0).unwrap().len(), 3);
    }

    #[test]
    fn disjoint_topics_form_document_clusters() {
        let c = corpus(vec![
            doc("a1", &["quake", "tremor", "richter"], &["x"]),
            doc("a2", &["quake", "tremor", "magnitude"], &["x"]),
            doc("b1", &["election", "ballot", "vote"], &["x"]),
            doc("b2", &["election", "ballot", "poll"], &["x"]),
        ]);
        assert_eq!(tfidf_document_groups(&c, 0.9), vec![vec![0, 1], vec![2, 3]]);
    }

    fn dated(id: &str, timex: Option<&str>, publish: Option<&str>) -> Document {
        let mut d = doc(id, &["w", "x"], &["go"]);
        d.timex = timex
            .into_iter()
            .map(|t| TimexSpan {
                sentence: 0,
                token_span: TokenSpan::new(1, 2),
                value: TimeValue::parse(t).unwrap(),
            })
            .collect();
        d.publish_date = publish.map(|p| TimeValue::parse(p).unwrap());
        d
    }

    #[test]
    fn time_groups() {
        let same = corpus(vec![
            dated("a", Some("2020-01-01"), None),
            dated("b", Some("2020-01-01"), None),
        ]);
        assert_eq!(time_document_groups(&same, 1.0), vec![vec![0, 1]]);
        let apart = corpus(vec![
            dated("a", Some("2020-01-01"), None),
            dated("b", Some("2020-01-31"), None),
        ]);
        assert_eq!(time_document_groups(&apart, 24.0).len(), 2);
    }

    #[test]
    fn first_timex_wins_over_publish_date() {
        // a: timex Jan 1 (publish Mar 1 ignored); b: publish Jan 1 only; c: undated.
        let c = corpus(vec![
            dated("a", Some("2020-01-01"), Some("2020-03-01")),
            dated("b", None, Some("2020-01-01T06:00")),
            dated("c", None, None),
        ]);
        assert_eq!(
            document_date(&c.documents[0]),
            Some(TimeValue::parse("2020-01-01").unwrap().datetime())
        );
        assert_eq!(time_document_groups(&c, 12.0), vec![vec![0, 1], vec![2]]);
        assert_eq!(
            time_document_groups(&c, 1.0),
            vec![vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn tuning_prefers_first_best_value() {
        let c = corpus(vec![
            dated("a", Some("2020-01-01"), None),
            dated("b", Some("2020-01-01"), None),
        ]);
        // Every grid value merges both same-day documents, so all tie.
        assert_eq!(tune_delta(&c, DeltaVariant::Time).unwrap(), 6.0);
    }
}
