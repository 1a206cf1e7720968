//! TF-IDF vectors over document regions.
//!
//! Tokens are lowercased but not re-tokenized. Term weights are raw counts
//! times the smoothed idf `ln((1 + N) / (1 + df)) + 1`; vectors are
//! L2-normalized so that cosine similarity is a dot product.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::corpus::Document;

#[derive(Clone, Debug, PartialEq)]
pub struct TfIdfModel {
    vocabulary: HashMap<String, u32>,
    document_frequency: Vec<u32>,
    documents: usize,
}

/// Sparse L2-normalized vector sorted by term id.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector(Vec::new())
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    /// Cosine similarity in `[0, 1]` (both vectors are unit-norm).
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        self.dot(other).clamp(0.0, 1.0)
    }

    pub fn cosine_distance(&self, other: &SparseVector) -> f64 {
        1.0 - self.cosine(other)
    }
}

pub fn document_tokens(doc: &Document) -> impl Iterator<Item = &str> {
    doc.sentences.iter().flatten().map(String::as_str)
}

pub fn sentence_tokens(doc: &Document, sentence: usize) -> impl Iterator<Item = &str> {
    doc.sentences[sentence].iter().map(String::as_str)
}

/// Tokens of the five sentences centered on `sentence` (clipped at the
/// document boundaries).
pub fn window_tokens(doc: &Document, sentence: usize) -> impl Iterator<Item = &str> {
    let lo = sentence.saturating_sub(2);
    let hi = (sentence + 3).min(doc.sentences.len());
    doc.sentences[lo..hi].iter().flatten().map(String::as_str)
}

impl TfIdfModel {
    pub fn fit<'a>(documents: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut vocabulary: HashMap<String, u32> = HashMap::new();
        let mut document_frequency: Vec<u32> = Vec::new();
        let mut documents_seen = 0;
        for doc in documents {
            documents_seen += 1;
            let terms: HashSet<String> = document_tokens(doc).map(str::to_lowercase).collect();
            let mut terms: Vec<String> = terms.into_iter().collect();
            terms.sort();
            for t in terms {
                let next = vocabulary.len() as u32;
                let id = *vocabulary.entry(t).or_insert(next);
                if id as usize == document_frequency.len() {
                    document_frequency.push(0);
                }
                document_frequency[id as usize] += 1;
            }
        }
        Self {
            vocabulary,
            document_frequency,
            documents: documents_seen,
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn document_count(&self) -> usize {
        self.documents
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        let id = *self.vocabulary.get(&term.to_lowercase())?;
        Some(self.idf_of(id))
    }

    fn idf_of(&self, id: u32) -> f64 {
        let n = self.documents as f64;
        let df = self.document_frequency[id as usize] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Unit-norm tf-idf vector of a token region; `None` when no token is in
    /// the vocabulary.
    pub fn vectorize<'t>(&self, tokens: impl IntoIterator<Item = &'t str>) -> Option<SparseVector> {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(&id) = self.vocabulary.get(&t.to_lowercase()) {
                *counts.entry(id).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(id, tf)| (id, tf * self.idf_of(id)))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        for e in &mut entries {
            e.1 /= norm;
        }
        Some(SparseVector(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, sentences: &[&str]) -> Document {
        Document {
            doc_id: id.into(),
            topic: "t".into(),
            subtopic: "s".into(),
            publish_date: None,
            sentences: sentences
                .iter()
                .map(|s| s.split_whitespace().map(String::from).collect())
                .collect(),
            mentions: vec![],
            timex: vec![],
            entity_links: vec![],
            srl: vec![],
        }
    }

    /// Dense reference computation over an explicit vocabulary.
    fn oracle_cosine(docs: &[Vec<&str>], a: &[&str], b: &[&str]) -> f64 {
        let mut vocab: Vec<&str> = docs.iter().flatten().copied().collect();
        vocab.sort();
        vocab.dedup();
        let n = docs.len() as f64;
        let weights = |region: &[&str]| -> Vec<f64> {
            vocab
                .iter()
                .map(|t| {
                    let tf = region.iter().filter(|x| *x == t).count() as f64;
                    let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                    tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
                })
                .collect()
        };
        let (wa, wb) = (weights(a), weights(b));
        let dot: f64 = wa.iter().zip(&wb).map(|(x, y)| x * y).sum();
        let na: f64 = wa.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = wb.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn identical_documents_have_similarity_one() {
        let d = [
            doc("a", &["police shot man"]),
            doc("b", &["police shot man"]),
        ];
        let m = TfIdfModel::fit(&d);
        let (x, y) = (
            m.vectorize(document_tokens(&d[0])).unwrap(),
            m.vectorize(document_tokens(&d[1])).unwrap(),
        );
        assert!((x.cosine(&y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabularies_have_similarity_zero() {
        let d = [
            doc("a", &["earthquake hits"]),
            doc("b", &["team wins final"]),
        ];
        let m = TfIdfModel::fit(&d);
        let (x, y) = (
            m.vectorize(document_tokens(&d[0])).unwrap(),
            m.vectorize(document_tokens(&d[1])).unwrap(),
        );
        assert_eq!(x.cosine(&y), 0.0);
    }

    #[test]
    fn three_document_fixture_matches_dense_oracle() {
        let texts = [
            "a gunman shot two people in Ohio . police arrived",
            "police say the gunman shot a clerk",
            "the team won the final in Berlin",
        ];
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| doc(&i.to_string(), &[t]))
            .collect();
        let lowered: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
        let toks: Vec<Vec<&str>> = lowered
            .iter()
            .map(|t| t.split_whitespace().collect())
            .collect();
        let m = TfIdfModel::fit(&docs);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let got = m
                .vectorize(document_tokens(&docs[i]))
                .unwrap()
                .cosine(&m.vectorize(document_tokens(&docs[j])).unwrap());
            let want = oracle_cosine(&toks, &toks[i], &toks[j]);
            assert!((got - want).abs() < 1e-12, "{i},{j}: {got} vs {want}");
        }
        assert!(m.idf("GUNMAN").is_some());
    }

    #[test]
    fn empty_region_has_no_vector() {
        let d = [doc("a", &["x y"])];
        let m = TfIdfModel::fit(&d);
        assert!(m.vectorize(["unseen"]).is_none());
        assert!(m.vectorize(std::iter::empty()).is_none());
    }

    #[test]
    fn window_is_centered_and_clipped() {
        let d = doc("a", &["s0", "s1", "s2", "s3", "s4", "s5"]);
        assert_eq!(window_tokens(&d, 0).collect::<Vec<_>>(), ["s0", "s1", "s2"]);
        assert_eq!(
            window_tokens(&d, 3).collect::<Vec<_>>(),
            ["s1", "s2", "s3", "s4", "s5"]
        );
    }
}
