//! Seeded synthetic corpora in which coreference is exactly "same lemma
//! and same day".

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Corpus, Document, EntityLink, Mention, MentionKind, SplitSpec, TimeValue, TimexSpan, TokenSpan,
};
use crate::embeddings::{kb_key, mention_key, sentence_key, VectorStore};

const VERBS: [&str; 40] = [
    "attack",
    "bomb",
    "shoot",
    "arrest",
    "rescue",
    "evacuate",
    "protest",
    "strike",
    "raid",
    "storm",
    "block",
    "burn",
    "crash",
    "flood",
    "kidnap",
    "release",
    "sign",
    "vote",
    "elect",
    "resign",
    "charge",
    "convict",
    "sentence",
    "fine",
    "launch",
    "close",
    "open",
    "ban",
    "seize",
    "destroy",
    "injure",
    "kill",
    "wound",
    "escape",
    "surrender",
    "negotiate",
    "announce",
    "deny",
    "confirm",
    "report",
];

const CITIES: [(&str, f64, f64, &str); 8] = [
    ("Lyon", 45.76, 4.84, "France"),
    ("Porto", 41.15, -8.61, "Portugal"),
    ("Graz", 47.07, 15.44, "Austria"),
    ("Turin", 45.07, 7.69, "Italy"),
    ("Ghent", 51.05, 3.72, "Belgium"),
    ("Malmo", 55.60, 13.00, "Sweden"),
    ("Brno", 49.20, 16.61, "Czechia"),
    ("Cork", 51.90, -8.47, "Ireland"),
];

/// How documents map onto subtopics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthShape {
    /// One subtopic per day; coreference never crosses subtopics.
    DayPerSubtopic,
    /// Subtopics cut across days and carry their own filler vocabulary, so
    /// most coreference links cross subtopics.
    CrossSubtopic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub corpus_id: String,
    pub shape: SynthShape,
    pub days: usize,
    /// Documents written about each day; with [`SynthShape::CrossSubtopic`]
    /// this is also the number of subtopics.
    pub docs_per_day: usize,
    pub events_per_day: usize,
    pub mentions_per_doc: usize,
    /// Probability that an event reuses the lemma of an event on another day.
    pub ambiguity: f64,
    pub topics: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// 24 documents, 192 action mentions, one subtopic per day.
    pub fn day_per_subtopic(seed: u64) -> Self {
        Self {
            corpus_id: "synth-day".into(),
            shape: SynthShape::DayPerSubtopic,
            days: 4,
            docs_per_day: 6,
            events_per_day: 3,
            mentions_per_doc: 8,
            ambiguity: 0.3,
            topics: 2,
            dim: 16,
            seed,
        }
    }

    /// 21 documents in 3 subtopics spanning 7 days.
    pub fn cross_subtopic(seed: u64) -> Self {
        Self {
            corpus_id: "synth-cross".into(),
            shape: SynthShape::CrossSubtopic,
            days: 7,
            docs_per_day: 3,
            events_per_day: 3,
            mentions_per_doc: 8,
            ambiguity: 0.3,
            topics: 1,
            dim: 16,
            seed,
        }
    }
}

struct Event {
    lemma: &'static str,
    day: usize,
}

fn inflect(lemma: &str, rng: &mut ChaCha8Rng) -> String {
    let stem = lemma.strip_suffix('e').unwrap_or(lemma);
    match rng.gen_range(0..4) {
        0 => lemma.to_string(),
        1 => format!("{lemma}s"),
        2 => format!("{stem}ed"),
        _ => format!("{stem}ing"),
    }
}

fn unit_noise(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

fn plus(a: &[f32], b: &[f32], scale: f32) -> Vec<f32> {
    a.iter().zip(b).map(|(x, y)| x + scale * y).collect()
}

fn events(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Event> {
    let mut fresh: Vec<&'static str> = VERBS.to_vec();
    fresh.shuffle(rng);
    let mut out: Vec<Event> = Vec::new();
    for day in 0..config.days {
        let mut today: BTreeSet<&str> = BTreeSet::new();
        for _ in 0..config.events_per_day {
            let reusable: Vec<&'static str> = out
                .iter()
                .filter(|e| e.day != day && !today.contains(e.lemma))
                .map(|e| e.lemma)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let lemma = if !reusable.is_empty() && rng.gen_bool(config.ambiguity) {
                reusable[rng.gen_range(0..reusable.len())]
            } else {
                fresh.pop().expect("verb list covers all fresh events")
            };
            today.insert(lemma);
            out.push(Event { lemma, day });
        }
    }
    out
}

/// Generates the corpus and its embedding sidecar.
pub fn generate(config: &SynthConfig) -> (Corpus, VectorStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let events = events(config, &mut rng);
    let start = NaiveDate::from_ymd_opt(2021, 5, 3).expect("valid date");
    let day_city: Vec<usize> = (0..config.days)
        .map(|d| (d * 3 + config.seed as usize) % CITIES.len())
        .collect();
    let lemma_vec: Vec<(&str, Vec<f32>)> = VERBS
        .iter()
        .map(|v| (*v, unit_noise(&mut rng, config.dim)))
        .collect();
    let vec_of = |lemma: &str| {
        &lemma_vec
            .iter()
            .find(|(l, _)| *l == lemma)
            .expect("known verb")
            .1
    };
    let subtopics = match config.shape {
        SynthShape::DayPerSubtopic => config.days,
        SynthShape::CrossSubtopic => config.docs_per_day,
    };
    let filler: Vec<Vec<String>> = (0..subtopics)
        .map(|s| (0..12).map(|w| format!("w{s}x{w}")).collect())
        .collect();
    let common: Vec<String> = ["the", "a", "of", "and", "on", "was", "after", "near"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut store = VectorStore::new();
    for (name, ..) in CITIES {
        let v = unit_noise(&mut rng, config.dim);
        store.insert(kb_key(name), v).expect("consistent dimension");
    }
    let mut documents = Vec::new();
    for day in 0..config.days {
        let today: Vec<usize> = (0..events.len())
            .filter(|&e| events[e].day == day)
            .collect();
        let date = start + Duration::days(day as i64);
        let date_text = date.format("%Y-%m-%d").to_string();
        let (city, lat, lon, country) = CITIES[day_city[day]];
        for p in 0..config.docs_per_day {
            let subtopic = match config.shape {
                SynthShape::DayPerSubtopic => day,
                SynthShape::CrossSubtopic => p,
            };
            let topic = match config.shape {
                SynthShape::DayPerSubtopic => day * config.topics / config.days,
                SynthShape::CrossSubtopic => 0,
            };
            let doc_id = format!("d{day:02}{p}");
            let mut order: Vec<usize> = today.clone();
            while order.len() < config.mentions_per_doc {
                order.push(today[rng.gen_range(0..today.len())]);
            }
            order.shuffle(&mut rng);
            let mut doc = Document {
                doc_id: doc_id.clone(),
                topic: format!("t{topic}"),
                subtopic: format!("t{topic}s{subtopic}"),
                publish_date: TimeValue::parse(&date_text),
                sentences: Vec::new(),
                mentions: Vec::new(),
                timex: Vec::new(),
                entity_links: Vec::new(),
                srl: Vec::new(),
            };
            for (s, &e) in order.iter().enumerate() {
                let ev = &events[e];
                let words = &filler[subtopic];
                let mut tokens: Vec<String> = (0..6)
                    .map(|_| words[rng.gen_range(0..words.len())].clone())
                    .collect();
                tokens.insert(
                    rng.gen_range(0..=tokens.len()),
                    common[rng.gen_range(0..common.len())].clone(),
                );
                let action_at = tokens.len();
                tokens.push(inflect(ev.lemma, &mut rng));
                tokens.push("on".into());
                let time_at = tokens.len();
                tokens.push(date_text.clone());
                tokens.push("in".into());
                let place_at = tokens.len();
                tokens.push(city.to_string());
                tokens.extend((0..4).map(|_| words[rng.gen_range(0..words.len())].clone()));
                let action_id = format!("a{s}");
                doc.mentions.push(Mention {
                    mention_id: action_id.clone(),
                    kind: MentionKind::Action,
                    sentence: s,
                    token_span: TokenSpan::new(action_at, action_at + 1),
                    cluster_id: Some(format!("{}@{}", ev.lemma, day)),
                    anchor: None,
                    subtype: None,
                    lemma: Some(ev.lemma.to_string()),
                });
                for (kind, at, prefix) in [
                    (MentionKind::Time, time_at, "t"),
                    (MentionKind::Location, place_at, "l"),
                ] {
                    doc.mentions.push(Mention {
                        mention_id: format!("{prefix}{s}"),
                        kind,
                        sentence: s,
                        token_span: TokenSpan::new(at, at + 1),
                        cluster_id: None,
                        anchor: Some(action_id.clone()),
                        subtype: None,
                        lemma: None,
                    });
                }
                doc.timex.push(TimexSpan {
                    sentence: s,
                    token_span: TokenSpan::new(time_at, time_at + 1),
                    value: TimeValue::parse(&date_text).expect("valid date"),
                });
                doc.entity_links.push(EntityLink {
                    sentence: s,
                    token_span: TokenSpan::new(place_at, place_at + 1),
                    kb_id: city.to_string(),
                    lat: Some(lat),
                    lon: Some(lon),
                    hierarchy: vec![country.to_string()],
                });
                doc.sentences.push(tokens);
                let base = vec_of(ev.lemma);
                let n1 = unit_noise(&mut rng, config.dim);
                let n2 = unit_noise(&mut rng, config.dim);
                store
                    .insert(mention_key(&doc_id, &action_id), plus(base, &n1, 0.3))
                    .expect("consistent dimension");
                store
                    .insert(sentence_key(&doc_id, s), plus(base, &n2, 0.6))
                    .expect("consistent dimension");
            }
            documents.push(doc);
        }
    }
    (
        Corpus {
            corpus_id: config.corpus_id.clone(),
            documents,
        },
        store,
    )
}

/// Document-level split that keeps every day in every split for
/// [`SynthShape::DayPerSubtopic`] (each day's documents are cut into three
/// equal runs for train, dev and test) and splits whole days for [`SynthShape::CrossSubtopic`] (the last
/// two days are test, the day before is dev).
pub fn split(config: &SynthConfig) -> SplitSpec {
    let (mut train, mut dev, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for day in 0..config.days {
        for p in 0..config.docs_per_day {
            let id = format!("d{day:02}{p}");
            let part = match config.shape {
                SynthShape::DayPerSubtopic => match 3 * p / config.docs_per_day {
                    0 => &mut train,
                    1 => &mut dev,
                    _ => &mut test,
                },
                SynthShape::CrossSubtopic if day + 2 >= config.days => &mut test,
                SynthShape::CrossSubtopic if day + 3 == config.days => &mut dev,
                SynthShape::CrossSubtopic => &mut train,
            };
            part.push(id);
        }
    }
    SplitSpec::Explicit { train, dev, test }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_corpus_is_valid_and_seeded() {
        for config in [
            SynthConfig::day_per_subtopic(1),
            SynthConfig::cross_subtopic(1),
        ] {
            let (c, s) = generate(&config);
            c.validate().unwrap();
            let (c2, s2) = generate(&config);
            assert_eq!(c.to_json(), c2.to_json());
            assert_eq!(s.to_jsonl(), s2.to_jsonl());
            assert_eq!(c.documents.len(), config.days * config.docs_per_day);
            assert_eq!(
                c.actions().len(),
                config.days * config.docs_per_day * config.mentions_per_doc
            );
        }
    }

    #[test]
    fn coreference_is_lemma_and_day() {
        let (c, _) = generate(&SynthConfig::day_per_subtopic(4));
        let actions = c.actions();
        for &a in &actions {
            for &b in &actions {
                let same_day = c.document(a).publish_date == c.document(b).publish_date;
                let same_lemma = c.mention(a).lemma == c.mention(b).lemma;
                assert_eq!(
                    c.gold_cluster(a) == c.gold_cluster(b),
                    same_day && same_lemma
                );
            }
        }
    }

    #[test]
    fn some_lemmas_span_days() {
        let (c, _) = generate(&SynthConfig::day_per_subtopic(0));
        let clusters = c.gold_clusters();
        let lemmas: BTreeSet<&str> = clusters
            .iter()
            .map(|k| c.mention(k[0]).lemma.as_deref().unwrap())
            .collect();
        assert!(lemmas.len() < clusters.len());
    }
}
