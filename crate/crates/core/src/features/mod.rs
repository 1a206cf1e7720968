//! Mention-pair feature extraction.
//!
//! Every feature is a symmetric function of two per-mention profiles, so a
//! pair's vector does not depend on its orientation. Absent values (missing
//! lemma, unresolved time or location, missing vectors, empty regions) are
//! `None`; learners see them either natively (trees) or as a zero sentinel
//! plus a presence flag (linear model).

pub mod anchors;
pub mod embedding;
pub mod io;
pub mod spatial;
pub mod string;
pub mod temporal;
pub mod tfidf;

use std::collections::HashMap;
use std::sync::Arc;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ActionRef, Corpus, EntityLink};
use crate::embeddings::{cosine, kb_key, mention_key, sentence_key, VectorStore};
use crate::sampler::MentionPair;
use embedding::{action_entity, cosine_stats, region_entities, EntityRegion};
use spatial::{haversine_km, hierarchy_match, PlaceStrategy, HIERARCHY_CAP};
use string::string_features;
use temporal::{resolve_times, unit_distances, TimeStrategy, UNITS};
use tfidf::{document_tokens, sentence_tokens, window_tokens, SparseVector, TfIdfModel};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("malformed feature file: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureFamily {
    String,
    Tfidf,
    SentenceEmbedding,
    ActionEmbedding,
    Spatial,
    Temporal,
    Wikidata,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 7] = [
        FeatureFamily::String,
        FeatureFamily::Tfidf,
        FeatureFamily::SentenceEmbedding,
        FeatureFamily::ActionEmbedding,
        FeatureFamily::Spatial,
        FeatureFamily::Temporal,
        FeatureFamily::Wikidata,
    ];

    pub fn prefix(&self) -> &'static str {
        match self {
            FeatureFamily::String => "string",
            FeatureFamily::Tfidf => "tfidf",
            FeatureFamily::SentenceEmbedding => "sentence-embedding",
            FeatureFamily::ActionEmbedding => "action-embedding",
            FeatureFamily::Spatial => "spatial",
            FeatureFamily::Temporal => "temporal",
            FeatureFamily::Wikidata => "wikidata",
        }
    }

    /// Canonical feature names of this family, `<family>/<feature>`.
    pub fn names(&self) -> Vec<String> {
        let local: Vec<String> = match self {
            FeatureFamily::String => [
                "is-surface-form-identical",
                "is-lemma-identical",
                "surface-form-mlipns-distance",
                "surface-form-levenshtein-distance",
            ]
            .map(String::from)
            .to_vec(),
            FeatureFamily::Tfidf => [
                "document-similarity",
                "surrounding-sentence-similarity",
                "sentence-context-similarity",
            ]
            .map(String::from)
            .to_vec(),
            FeatureFamily::SentenceEmbedding => ["surrounding-sentence", "doc-start"]
                .map(String::from)
                .to_vec(),
            FeatureFamily::ActionEmbedding => vec!["action-mention".to_string()],
            FeatureFamily::Spatial => PlaceStrategy::ALL
                .iter()
                .flat_map(|s| {
                    ["geo-hierarchy-match", "geodesic-distance"]
                        .map(|m| format!("distance-{}-level-{m}", s.name()))
                })
                .collect(),
            FeatureFamily::Temporal => TimeStrategy::ALL
                .iter()
                .flat_map(|s| UNITS.map(|(u, _)| format!("distance-{}-level-{u}", s.name())))
                .collect(),
            FeatureFamily::Wikidata => std::iter::once("action-mention".to_string())
                .chain(EntityRegion::ALL.iter().flat_map(|r| {
                    ["mean", "variance", "min", "max"].map(|s| format!("{}-{s}", r.name()))
                }))
                .collect(),
        };
        local
            .into_iter()
            .map(|n| format!("{}/{n}", self.prefix()))
            .collect()
    }
}

/// Ordered feature names shared by every vector of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl FeatureSchema {
    pub fn new(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, index }
    }

    pub fn for_families(families: &[FeatureFamily]) -> Self {
        let mut fams = families.to_vec();
        fams.sort();
        fams.dedup();
        Self::new(fams.iter().flat_map(|f| f.names()).collect())
    }

    pub fn full() -> Self {
        Self::for_families(&FeatureFamily::ALL)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn get(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.values[i].is_some()
    }

    /// Value with absent entries replaced by the sentinel 0.
    pub fn value_or_sentinel(&self, i: usize) -> f64 {
        self.values[i].unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub schema: Arc<FeatureSchema>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(schema: Arc<FeatureSchema>, rows: Vec<FeatureVector>) -> Self {
        Self { schema, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r.values[j])
    }

    /// Projects onto the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix, FeatureError> {
        let cols: Vec<usize> = names
            .iter()
            .map(|n| {
                self.schema
                    .position(n)
                    .ok_or_else(|| FeatureError::UnknownFeature(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureVector {
                values: cols.iter().map(|&c| r.values[c]).collect(),
            })
            .collect();
        Ok(FeatureMatrix {
            schema: Arc::new(FeatureSchema::new(names.to_vec())),
            rows,
        })
    }

    /// Rows at the given indices.
    pub fn take(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Everything the pair features need from one mention, precomputed.
#[derive(Clone, Debug)]
struct Profile<'a> {
    surface: String,
    lemma: Option<String>,
    tfidf: [Option<SparseVector>; 3],
    times: [Option<NaiveDateTime>; 6],
    places: [Option<&'a EntityLink>; 5],
    action_vec: Option<&'a [f32]>,
    sentence_vecs: [Option<&'a [f32]>; 2],
    kb_action: Option<&'a [f32]>,
    kb_regions: [Vec<&'a [f32]>; 4],
}

impl<'a> Profile<'a> {
    fn build(corpus: &'a Corpus, r: ActionRef, tfidf: &TfIdfModel, store: &'a VectorStore) -> Self {
        let doc = corpus.document(r);
        let m = corpus.mention(r);
        let kb = |id: &str| store.get(&kb_key(id));
        Profile {
            surface: doc.surface(m),
            lemma: m.lemma.clone(),
            tfidf: [
                tfidf.vectorize(document_tokens(doc)),
                tfidf.vectorize(sentence_tokens(doc, m.sentence)),
                tfidf.vectorize(window_tokens(doc, m.sentence)),
            ],
            times: resolve_times(doc, m),
            places: spatial::resolve_places(doc, m),
            action_vec: store.get(&mention_key(&doc.doc_id, &m.mention_id)),
            sentence_vecs: [
                store.get(&sentence_key(&doc.doc_id, m.sentence)),
                store.get(&sentence_key(&doc.doc_id, 0)),
            ],
            kb_action: action_entity(doc, m).and_then(kb),
            kb_regions: EntityRegion::ALL.map(|region| {
                region_entities(doc, m, region)
                    .into_iter()
                    .filter_map(kb)
                    .collect()
            }),
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn similarity(a: Option<&[f32]>, b: Option<&[f32]>) -> Option<f64> {
    cosine(a?, b?)
}

fn family_values(
    family: FeatureFamily,
    a: &Profile<'_>,
    b: &Profile<'_>,
    out: &mut Vec<Option<f64>>,
) {
    match family {
        FeatureFamily::String => {
            let s = string_features(
                &a.surface,
                &b.surface,
                a.lemma.as_deref(),
                b.lemma.as_deref(),
            );
            out.push(Some(flag(s.surface_identical)));
            out.push(s.lemma_identical.map(flag));
            out.push(Some(s.mlipns as f64));
            out.push(Some(s.levenshtein as f64));
        }
        FeatureFamily::Tfidf => {
            for i in 0..3 {
                out.push(match (&a.tfidf[i], &b.tfidf[i]) {
                    (Some(x), Some(y)) => Some(x.cosine(y)),
                    _ => None,
                });
            }
        }
        FeatureFamily::SentenceEmbedding => {
            for i in 0..2 {
                out.push(similarity(a.sentence_vecs[i], b.sentence_vecs[i]));
            }
        }
        FeatureFamily::ActionEmbedding => out.push(similarity(a.action_vec, b.action_vec)),
        FeatureFamily::Spatial => {
            for i in 0..PlaceStrategy::ALL.len() {
                match (a.places[i], b.places[i]) {
                    (Some(x), Some(y)) => {
                        out.push(hierarchy_match(x, y, HIERARCHY_CAP).map(|s| s as f64));
                        out.push(
                            x.coordinates()
                                .zip(y.coordinates())
                                .map(|(p, q)| haversine_km(p, q)),
                        );
                    }
                    _ => out.extend([None, None]),
                }
            }
        }
        FeatureFamily::Temporal => {
            for i in 0..TimeStrategy::ALL.len() {
                match (a.times[i], b.times[i]) {
                    (Some(x), Some(y)) => out.extend(unit_distances(x, y).map(|d| Some(d as f64))),
                    _ => out.extend([None; 5]),
                }
            }
        }
        FeatureFamily::Wikidata => {
            out.push(similarity(a.kb_action, b.kb_action));
            for i in 0..EntityRegion::ALL.len() {
                match cosine_stats(&a.kb_regions[i], &b.kb_regions[i]) {
                    Some(s) => out.extend([s.mean, s.variance, s.min, s.max].map(Some)),
                    None => out.extend([None; 4]),
                }
            }
        }
    }
}

/// Computes feature vectors for pairs of action mentions of one corpus.
pub struct FeatureExtractor<'a> {
    schema: Arc<FeatureSchema>,
    families: Vec<FeatureFamily>,
    profiles: HashMap<ActionRef, Profile<'a>>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(
        corpus: &'a Corpus,
        tfidf: &TfIdfModel,
        store: &'a VectorStore,
        families: &[FeatureFamily],
    ) -> Self {
        let mut families = families.to_vec();
        families.sort();
        families.dedup();
        let profiles = corpus
            .actions()
            .into_par_iter()
            .map(|r| (r, Profile::build(corpus, r, tfidf, store)))
            .collect();
        Self {
            schema: Arc::new(FeatureSchema::for_families(&families)),
            families,
            profiles,
        }
    }

    /// Fits the tf-idf model on the corpus documents and enables every
    /// feature family.
    pub fn with_all_features(corpus: &'a Corpus, store: &'a VectorStore) -> Self {
        let tfidf = TfIdfModel::fit(&corpus.documents);
        Self::new(corpus, &tfidf, store, &FeatureFamily::ALL)
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn extract(&self, a: ActionRef, b: ActionRef) -> FeatureVector {
        let (pa, pb) = (&self.profiles[&a], &self.profiles[&b]);
        let mut values = Vec::with_capacity(self.schema.len());
        for &f in &self.families {
            family_values(f, pa, pb, &mut values);
        }
        FeatureVector { values }
    }

    pub fn extract_pairs(&self, pairs: &[(ActionRef, ActionRef)]) -> FeatureMatrix {
        let rows = pairs.par_iter().map(|&(a, b)| self.extract(a, b)).collect();
        FeatureMatrix::new(self.schema.clone(), rows)
    }

    pub fn extract_labeled(&self, pairs: &[MentionPair]) -> FeatureMatrix {
        let refs: Vec<(ActionRef, ActionRef)> = pairs.iter().map(|p| (p.a, p.b)).collect();
        self.extract_pairs(&refs)
    }
}

/// Full feature vector of a single pair (every family).
pub fn extract_all(
    a: ActionRef,
    b: ActionRef,
    corpus: &Corpus,
    tfidf: &TfIdfModel,
    store: &VectorStore,
) -> FeatureVector {
    let (pa, pb) = (
        Profile::build(corpus, a, tfidf, store),
        Profile::build(corpus, b, tfidf, store),
    );
    let mut values = Vec::new();
    for f in FeatureFamily::ALL {
        family_values(f, &pa, &pb, &mut values);
    }
    FeatureVector { values }
}
