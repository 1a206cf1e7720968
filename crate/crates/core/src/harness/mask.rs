//! Ablation by replacing event component tokens with random dummies.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{Corpus, Document, MentionKind, SpanRef, TokenSpan};
use crate::embeddings::{mention_key, sentence_key, VectorStore};

pub const DUMMY_LEN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskComponent {
    Action,
    Participants,
    Time,
    Location,
    PublishDate,
}

impl std::str::FromStr for MaskComponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "action" => Ok(MaskComponent::Action),
            "participants" => Ok(MaskComponent::Participants),
            "time" => Ok(MaskComponent::Time),
            "location" => Ok(MaskComponent::Location),
            "publish-date" | "publish_date" => Ok(MaskComponent::PublishDate),
            _ => Err(format!("unknown mask component `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub components: BTreeSet<MaskComponent>,
    #[serde(default)]
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(components: impl IntoIterator<Item = MaskComponent>, seed: u64) -> Self {
        Self {
            components: components.into_iter().collect(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.components.is_empty() {
            return Err(HarnessError::Config(
                "mask spec selects no components".into(),
            ));
        }
        Ok(())
    }

    fn has(&self, c: MaskComponent) -> bool {
        self.components.contains(&c)
    }
}

/// Spans to be masked: gold mentions of the selected kinds plus linked
/// entities and temporal expressions of the matching kind.
fn masked_spans(doc: &Document, spec: &MaskSpec) -> Vec<SpanRef> {
    let span = |sentence, token_span| SpanRef {
        sentence,
        token_span,
    };
    let mut out: Vec<SpanRef> = doc
        .mentions
        .iter()
        .filter(|m| match m.kind {
            MentionKind::Action => spec.has(MaskComponent::Action),
            MentionKind::Participant => spec.has(MaskComponent::Participants),
            MentionKind::Time => spec.has(MaskComponent::Time),
            MentionKind::Location => spec.has(MaskComponent::Location),
        })
        .map(|m| span(m.sentence, m.token_span))
        .collect();
    if spec.has(MaskComponent::Time) {
        out.extend(doc.timex.iter().map(|t| span(t.sentence, t.token_span)));
    }
    for e in &doc.entity_links {
        let selected = if e.is_location() {
            spec.has(MaskComponent::Location)
        } else {
            spec.has(MaskComponent::Participants)
        };
        if selected {
            out.push(span(e.sentence, e.token_span));
        }
    }
    out
}

fn hits(spans: &[SpanRef], sentence: usize, token_span: &TokenSpan) -> bool {
    spans
        .iter()
        .any(|s| s.sentence == sentence && s.token_span.overlaps(token_span))
}

fn dummy(rng: &mut ChaCha8Rng, taken: &mut HashSet<String>) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    loop {
        let token: String = (0..DUMMY_LEN)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
            .collect();
        if taken.insert(token.to_lowercase()) {
            return token;
        }
    }
}

/// Replaces every token of a masked span with a fresh dummy token, unique
/// across the corpus (case-insensitively), and drops annotations that
/// overlap masked spans. Structure and cluster ids are preserved; action
/// lemmas become the masked surface form.
pub fn mask_corpus(corpus: &Corpus, spec: &MaskSpec) -> Result<Corpus, HarnessError> {
    spec.validate()?;
    let mut taken: HashSet<String> = corpus
        .documents
        .iter()
        .flat_map(|d| d.sentences.iter().flatten())
        .map(|t| t.to_lowercase())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = corpus.clone();
    for doc in &mut out.documents {
        let spans = masked_spans(doc, spec);
        let mut positions: BTreeSet<(usize, usize)> = BTreeSet::new();
        for s in &spans {
            positions.extend((s.token_span.start..s.token_span.end).map(|t| (s.sentence, t)));
        }
        for (s, t) in positions {
            doc.sentences[s][t] = dummy(&mut rng, &mut taken);
        }
        doc.timex
            .retain(|x| !hits(&spans, x.sentence, &x.token_span));
        doc.entity_links
            .retain(|x| !hits(&spans, x.sentence, &x.token_span));
        for frame in &mut doc.srl {
            frame
                .args
                .retain(|a| !hits(&spans, a.sentence, &a.token_span));
        }
        if spec.has(MaskComponent::Action) {
            let surfaces: Vec<String> = doc
                .mentions
                .iter()
                .map(|m| doc.tokens(m.sentence, m.token_span).join(" "))
                .collect();
            for (m, surface) in doc.mentions.iter_mut().zip(surfaces) {
                if m.kind == MentionKind::Action {
                    m.lemma = Some(surface);
                }
            }
        }
        if spec.has(MaskComponent::PublishDate) {
            doc.publish_date = None;
        }
    }
    Ok(out)
}

/// Drops precomputed vectors whose source text was masked: sentence
/// vectors of every sentence with a masked token and action vectors in
/// those sentences.
pub fn mask_store(store: &VectorStore, corpus: &Corpus, spec: &MaskSpec) -> VectorStore {
    let mut out = store.clone();
    for doc in &corpus.documents {
        let sentences: BTreeSet<usize> =
            masked_spans(doc, spec).iter().map(|s| s.sentence).collect();
        for &s in &sentences {
            out.remove(&sentence_key(&doc.doc_id, s));
        }
        for m in doc
            .mentions
            .iter()
            .filter(|m| sentences.contains(&m.sentence))
        {
            out.remove(&mention_key(&doc.doc_id, &m.mention_id));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityLink, Mention, SrlArg, SrlFrame, SrlRole, TimeValue, TimexSpan};

    fn fixture() -> Corpus {
        let mention =
            |id: &str, kind, sentence, span: (usize, usize), lemma: Option<&str>| Mention {
                mention_id: id.into(),
                kind,
                sentence,
                token_span: span.into(),
                cluster_id: (kind == MentionKind::Action).then(|| "c".to_string()),
                anchor: (kind != MentionKind::Action).then(|| "a0".to_string()),
                subtype: None,
                lemma: lemma.map(String::from),
            };
        let words = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        Corpus {
            corpus_id: "m".into(),
            documents: vec![Document {
                doc_id: "d".into(),
                topic: "t".into(),
                subtopic: "s".into(),
                publish_date: TimeValue::parse("2020-05-01"),
                sentences: vec![
                    words("Rebels attacked Kabul on Monday"),
                    words("The attack killed ten"),
                ],
                mentions: vec![
                    mention("a0", MentionKind::Action, 0, (1, 2), Some("attack")),
                    mention("p0", MentionKind::Participant, 0, (0, 1), None),
                    mention("l0", MentionKind::Location, 0, (2, 3), None),
                    mention("a1", MentionKind::Action, 1, (0, 2), Some("attack")),
                ],
                timex: vec![TimexSpan {
                    sentence: 0,
                    token_span: (4, 5).into(),
                    value: TimeValue::parse("2020-05-04").unwrap(),
                }],
                entity_links: vec![EntityLink {
                    sentence: 0,
                    token_span: (2, 3).into(),
                    kb_id: "Kabul".into(),
                    lat: Some(34.5),
                    lon: Some(69.2),
                    hierarchy: vec![],
                }],
                srl: vec![SrlFrame {
                    predicate: SpanRef {
                        sentence: 0,
                        token_span: (1, 2).into(),
                    },
                    args: vec![
                        SrlArg {
                            role: SrlRole::Participant,
                            sentence: 0,
                            token_span: (0, 1).into(),
                        },
                        SrlArg {
                            role: SrlRole::Time,
                            sentence: 0,
                            token_span: (3, 5).into(),
                        },
                    ],
                }],
            }],
        }
    }

    #[test]
    fn two_token_span_gets_two_fresh_tokens() {
        let c = fixture();
        let m = mask_corpus(&c, &MaskSpec::new([MaskComponent::Action], 3)).unwrap();
        let s = &m.documents[0].sentences;
        let (x, y) = (&s[1][0], &s[1][1]);
        assert_ne!(x, y);
        for t in [x, y] {
            assert_eq!(t.len(), 5);
            assert!(t.chars().all(|ch| ch.is_ascii_alphabetic()));
            let count = s
                .iter()
                .flatten()
                .filter(|u| u.eq_ignore_ascii_case(t))
                .count();
            assert_eq!(count, 1);
        }
        assert_eq!(
            m.documents[0].mentions[3].lemma.as_deref(),
            Some(format!("{x} {y}").as_str())
        );
        assert_eq!(s[0][0], "Rebels");
    }

    #[test]
    fn deterministic_and_structure_preserving() {
        let c = fixture();
        let spec = MaskSpec::new(
            [
                MaskComponent::Action,
                MaskComponent::Time,
                MaskComponent::Location,
            ],
            9,
        );
        let a = mask_corpus(&c, &spec).unwrap();
        assert_eq!(a.to_json(), mask_corpus(&c, &spec).unwrap().to_json());
        assert_ne!(
            a.to_json(),
            mask_corpus(&c, &MaskSpec { seed: 10, ..spec })
                .unwrap()
                .to_json()
        );
        let (before, after) = (&c.documents[0], &a.documents[0]);
        assert_eq!(before.mentions.len(), after.mentions.len());
        for (x, y) in before.mentions.iter().zip(&after.mentions) {
            assert_eq!(
                (x.sentence, x.token_span, &x.cluster_id),
                (y.sentence, y.token_span, &y.cluster_id)
            );
        }
        for (x, y) in before.sentences.iter().zip(&after.sentences) {
            assert_eq!(x.len(), y.len());
        }
        assert!(after.timex.is_empty() && after.entity_links.is_empty());
        assert_eq!(after.srl[0].args.len(), 1);
        assert_eq!(after.publish_date, before.publish_date);
    }

    #[test]
    fn publish_date_and_participants() {
        let c = fixture();
        let m = mask_corpus(
            &c,
            &MaskSpec::new([MaskComponent::PublishDate, MaskComponent::Participants], 0),
        )
        .unwrap();
        let d = &m.documents[0];
        assert!(d.publish_date.is_none());
        assert_ne!(d.sentences[0][0], "Rebels");
        assert!(d.srl[0].args.iter().all(|a| a.role != SrlRole::Participant));
        assert_eq!(d.timex.len(), 1);
    }

    #[test]
    fn empty_spec_is_rejected() {
        assert!(mask_corpus(&fixture(), &MaskSpec::new([], 0)).is_err());
    }

    #[test]
    fn store_loses_vectors_of_masked_sentences() {
        let c = fixture();
        let mut store = VectorStore::new();
        for key in ["d/a0", "d/a1", "d/sent/0", "d/sent/1"] {
            store.insert(key.into(), vec![1.0, 0.0]).unwrap();
        }
        let spec = MaskSpec::new([MaskComponent::Time], 0);
        let m = mask_store(&store, &c, &spec);
        assert!(m.get("d/sent/0").is_none() && m.get("d/a0").is_none());
        assert!(m.get("d/sent/1").is_some() && m.get("d/a1").is_some());
    }
}
