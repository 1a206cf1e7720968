//! Corpus data model: topic → subtopic → document hierarchy with gold event
//! mentions and the auxiliary annotations (timex, entity links, SRL) that the
//! feature extractors consume.
//!
//! The interchange format is a single JSON document per corpus. Token spans
//! are half-open `[start, end)` pairs relative to a sentence.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid corpus at {location}: {message}")]
    Invalid { location: String, message: String },
    #[error("unknown mention `{0}`")]
    UnknownMention(String),
    #[error("mention `{0}` is not an action mention")]
    NotAnAction(String),
    #[error("split specification: {0}")]
    Split(String),
    #[error("id collision after namespacing: {0}")]
    Collision(String),
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Invalid {
        location: location.into(),
        message: message.into(),
    }
}

/// Half-open token range `[start, end)` inside one sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<(usize, usize)> for TokenSpan {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<TokenSpan> for (usize, usize) {
    fn from(span: TokenSpan) -> Self {
        (span.start, span.end)
    }
}

/// A normalized calendar value. Keeps the original text so that a corpus
/// survives a load/save cycle unchanged; date-only values resolve to midnight.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimeValue {
    text: String,
    at: NaiveDateTime,
}

impl TimeValue {
    pub fn parse(text: &str) -> Option<Self> {
        parse_iso(text).map(|at| Self {
            text: text.to_string(),
            at,
        })
    }

    pub fn from_datetime(at: NaiveDateTime) -> Self {
        Self {
            text: at.format("%Y-%m-%dT%H:%M").to_string(),
            at,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn datetime(&self) -> NaiveDateTime {
        self.at
    }
}

fn parse_iso(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(at) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(at);
        }
    }
    if let Some((date, hour)) = text.split_once('T') {
        if hour.len() == 2 {
            let h: u32 = hour.parse().ok()?;
            return NaiveDate::parse_from_str(date, "%Y-%m-%d")
                .ok()?
                .and_hms_opt(h, 0, 0);
        }
        return None;
    }
    let padded = match text.len() {
        4 => format!("{text}-01-01"),
        7 => format!("{text}-01"),
        _ => text.to_string(),
    };
    NaiveDate::parse_from_str(&padded, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

impl Serialize for TimeValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for TimeValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        TimeValue::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("unparseable time value `{text}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Action,
    Participant,
    Time,
    Location,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub kind: MentionKind,
    pub sentence: usize,
    pub token_span: TokenSpan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimexSpan {
    pub sentence: usize,
    pub token_span: TokenSpan,
    pub value: TimeValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    pub sentence: usize,
    pub token_span: TokenSpan,
    pub kb_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    /// Ancestors from specific to general (subdivision, ..., country).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hierarchy: Vec<String>,
}

impl EntityLink {
    /// Locations are the links carrying coordinates or a geographic hierarchy.
    pub fn is_location(&self) -> bool {
        self.lat.is_some() || !self.hierarchy.is_empty()
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.lat.zip(self.lon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrlRole {
    Participant,
    Time,
    Location,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpanRef {
    pub sentence: usize,
    pub token_span: TokenSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlArg {
    pub role: SrlRole,
    pub sentence: usize,
    pub token_span: TokenSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate: SpanRef,
    pub args: Vec<SrlArg>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub topic: String,
    pub subtopic: String,
    #[serde(default)]
    pub publish_date: Option<TimeValue>,
    pub sentences: Vec<Vec<String>>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
    #[serde(default)]
    pub timex: Vec<TimexSpan>,
    #[serde(default)]
    pub entity_links: Vec<EntityLink>,
    #[serde(default)]
    pub srl: Vec<SrlFrame>,
}

impl Document {
    pub fn tokens(&self, sentence: usize, span: TokenSpan) -> &[String] {
        &self.sentences[sentence][span.start..span.end]
    }

    /// Space-joined tokens of a mention.
    pub fn surface(&self, mention: &Mention) -> String {
        self.tokens(mention.sentence, mention.token_span).join(" ")
    }

    pub fn mention(&self, mention_id: &str) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.mention_id == mention_id)
    }
}

/// Position of an action mention inside a corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionRef {
    pub doc: usize,
    pub mention: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkType {
    WithinDocument,
    WithinSubtopic,
    CrossSubtopic,
    CrossTopic,
}

impl LinkType {
    pub const ALL: [LinkType; 4] = [
        LinkType::WithinDocument,
        LinkType::WithinSubtopic,
        LinkType::CrossSubtopic,
        LinkType::CrossTopic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LinkType::WithinDocument => "within-document",
            LinkType::WithinSubtopic => "within-subtopic",
            LinkType::CrossSubtopic => "cross-subtopic",
            LinkType::CrossTopic => "cross-topic",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub corpus_id: String,
    pub documents: Vec<Document>,
}

/// Parses and validates a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Corpus::from_json(&text)
}

impl Corpus {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let corpus: Corpus = serde_json::from_str(text)?;
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut doc_ids = HashSet::new();
        for doc in &self.documents {
            let at = |what: String| format!("document `{}`: {what}", doc.doc_id);
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(invalid(at(String::new()), "duplicate document id"));
            }
            let check_span = |sentence: usize, span: TokenSpan, what: String| {
                if span.start >= span.end {
                    return Err(invalid(at(what), "token span must satisfy start < end"));
                }
                match doc.sentences.get(sentence) {
                    None => Err(invalid(
                        at(what),
                        format!("sentence {sentence} out of range"),
                    )),
                    Some(tokens) if span.end > tokens.len() => Err(invalid(
                        at(what),
                        format!(
                            "span [{}, {}) exceeds sentence length {}",
                            span.start,
                            span.end,
                            tokens.len()
                        ),
                    )),
                    _ => Ok(()),
                }
            };

            let mut kinds: HashMap<&str, MentionKind> = HashMap::new();
            for m in &doc.mentions {
                if kinds.insert(m.mention_id.as_str(), m.kind).is_some() {
                    return Err(invalid(
                        at(format!("mention `{}`", m.mention_id)),
                        "duplicate mention id",
                    ));
                }
            }
            for m in &doc.mentions {
                let what = format!("mention `{}`", m.mention_id);
                check_span(m.sentence, m.token_span, what.clone())?;
                match m.kind {
                    MentionKind::Action => {
                        if m.anchor.is_some() {
                            return Err(invalid(
                                at(what),
                                "action mentions cannot carry an anchor",
                            ));
                        }
                    }
                    _ => {
                        if m.cluster_id.is_some() {
                            return Err(invalid(
                                at(what),
                                "only action mentions carry a cluster id",
                            ));
                        }
                        if let Some(anchor) = &m.anchor {
                            match kinds.get(anchor.as_str()) {
                                Some(MentionKind::Action) => {}
                                Some(_) => {
                                    return Err(invalid(
                                        at(what),
                                        format!("anchor `{anchor}` is not an action mention"),
                                    ))
                                }
                                None => {
                                    return Err(invalid(
                                        at(what),
                                        format!(
                                            "anchor `{anchor}` does not exist in this document"
                                        ),
                                    ))
                                }
                            }
                        }
                    }
                }
            }
            for (i, t) in doc.timex.iter().enumerate() {
                check_span(t.sentence, t.token_span, format!("timex #{i}"))?;
            }
            for (i, e) in doc.entity_links.iter().enumerate() {
                let what = format!("entity link #{i} (`{}`)", e.kb_id);
                check_span(e.sentence, e.token_span, what.clone())?;
                if e.lat.is_some() != e.lon.is_some() {
                    return Err(invalid(at(what), "lat and lon must be given together"));
                }
                if let Some((lat, lon)) = e.coordinates() {
                    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                        return Err(invalid(at(what), "coordinates out of range"));
                    }
                }
            }
            for (i, f) in doc.srl.iter().enumerate() {
                check_span(
                    f.predicate.sentence,
                    f.predicate.token_span,
                    format!("srl frame #{i} predicate"),
                )?;
                for (j, a) in f.args.iter().enumerate() {
                    check_span(a.sentence, a.token_span, format!("srl frame #{i} arg #{j}"))?;
                }
            }
        }
        Ok(())
    }

    /// All action mentions in canonical order: document, sentence, token offset.
    pub fn actions(&self) -> Vec<ActionRef> {
        let mut out = Vec::new();
        for (d, doc) in self.documents.iter().enumerate() {
            let mut refs: Vec<usize> = doc
                .mentions
                .iter()
                .enumerate()
                .filter(|(_, m)| m.kind == MentionKind::Action)
                .map(|(i, _)| i)
                .collect();
            refs.sort_by(|&a, &b| {
                let (ma, mb) = (&doc.mentions[a], &doc.mentions[b]);
                (ma.sentence, ma.token_span, &ma.mention_id).cmp(&(
                    mb.sentence,
                    mb.token_span,
                    &mb.mention_id,
                ))
            });
            out.extend(
                refs.into_iter()
                    .map(|mention| ActionRef { doc: d, mention }),
            );
        }
        out
    }

    pub fn document(&self, r: ActionRef) -> &Document {
        &self.documents[r.doc]
    }

    pub fn mention(&self, r: ActionRef) -> &Mention {
        &self.documents[r.doc].mentions[r.mention]
    }

    /// Corpus-wide mention key `<doc_id>/<mention_id>`.
    pub fn mention_key(&self, r: ActionRef) -> String {
        format!(
            "{}/{}",
            self.documents[r.doc].doc_id,
            self.mention(r).mention_id
        )
    }

    /// Gold cluster of an action; actions without a cluster id are singletons
    /// keyed by their mention key.
    pub fn gold_cluster(&self, r: ActionRef) -> String {
        match &self.mention(r).cluster_id {
            Some(c) => c.clone(),
            None => format!("singleton:{}", self.mention_key(r)),
        }
    }

    pub fn find_action(&self, key: &str) -> Result<ActionRef, CorpusError> {
        for (d, doc) in self.documents.iter().enumerate() {
            if let Some(rest) = key
                .strip_prefix(doc.doc_id.as_str())
                .and_then(|r| r.strip_prefix('/'))
            {
                if let Some(i) = doc.mentions.iter().position(|m| m.mention_id == rest) {
                    if doc.mentions[i].kind != MentionKind::Action {
                        return Err(CorpusError::NotAnAction(key.to_string()));
                    }
                    return Ok(ActionRef { doc: d, mention: i });
                }
            }
        }
        Err(CorpusError::UnknownMention(key.to_string()))
    }

    /// Hierarchy distance between two action mentions.
    pub fn link_type(&self, a: ActionRef, b: ActionRef) -> LinkType {
        if a.doc == b.doc {
            return LinkType::WithinDocument;
        }
        let (da, db) = (&self.documents[a.doc], &self.documents[b.doc]);
        if da.topic != db.topic {
            LinkType::CrossTopic
        } else if da.subtopic != db.subtopic {
            LinkType::CrossSubtopic
        } else {
            LinkType::WithinSubtopic
        }
    }

    /// [`Corpus::link_type`] by mention key.
    pub fn link_type_of(&self, a: &str, b: &str) -> Result<LinkType, CorpusError> {
        Ok(self.link_type(self.find_action(a)?, self.find_action(b)?))
    }

    /// Gold partition of the action mentions as clusters of mention refs,
    /// ordered by first member.
    pub fn gold_clusters(&self) -> Vec<Vec<ActionRef>> {
        let mut by_id: BTreeMap<String, Vec<ActionRef>> = BTreeMap::new();
        for r in self.actions() {
            by_id.entry(self.gold_cluster(r)).or_default().push(r);
        }
        let mut clusters: Vec<Vec<ActionRef>> = by_id.into_values().collect();
        clusters.sort_by_key(|c| c[0]);
        clusters
    }

    /// Action mentions sharing an identical span with another action mention
    /// of the same document (coordinated events annotated on one verb).
    pub fn superimposed_actions(&self) -> Vec<String> {
        let mut out = Vec::new();
        for doc in &self.documents {
            let mut seen: HashMap<(usize, TokenSpan), usize> = HashMap::new();
            for m in doc
                .mentions
                .iter()
                .filter(|m| m.kind == MentionKind::Action)
            {
                *seen.entry((m.sentence, m.token_span)).or_default() += 1;
            }
            for m in doc
                .mentions
                .iter()
                .filter(|m| m.kind == MentionKind::Action)
            {
                if seen[&(m.sentence, m.token_span)] > 1 {
                    out.push(format!("{}/{}", doc.doc_id, m.mention_id));
                }
            }
        }
        out
    }

    /// Removes superimposed action mentions together with the components
    /// anchored to them.
    pub fn drop_superimposed(&self) -> Corpus {
        let flagged: HashSet<String> = self.superimposed_actions().into_iter().collect();
        let mut out = self.clone();
        for doc in &mut out.documents {
            let doc_id = doc.doc_id.clone();
            let removed: HashSet<String> = doc
                .mentions
                .iter()
                .filter(|m| flagged.contains(&format!("{doc_id}/{}", m.mention_id)))
                .map(|m| m.mention_id.clone())
                .collect();
            doc.mentions.retain(|m| {
                !removed.contains(&m.mention_id)
                    && m.anchor.as_ref().map_or(true, |a| !removed.contains(a))
            });
        }
        out
    }

    /// Keeps the documents selected by `keep` (in corpus order).
    pub fn subset(&self, keep: impl Fn(&Document) -> bool) -> Corpus {
        Corpus {
            corpus_id: self.corpus_id.clone(),
            documents: self.documents.iter().filter(|d| keep(d)).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub within_document: u64,
    pub within_subtopic: u64,
    pub cross_subtopic: u64,
    pub cross_topic: u64,
}

impl LinkCounts {
    pub fn get(&self, t: LinkType) -> u64 {
        match t {
            LinkType::WithinDocument => self.within_document,
            LinkType::WithinSubtopic => self.within_subtopic,
            LinkType::CrossSubtopic => self.cross_subtopic,
            LinkType::CrossTopic => self.cross_topic,
        }
    }

    pub fn get_mut(&mut self, t: LinkType) -> &mut u64 {
        match t {
            LinkType::WithinDocument => &mut self.within_document,
            LinkType::WithinSubtopic => &mut self.within_subtopic,
            LinkType::CrossSubtopic => &mut self.cross_subtopic,
            LinkType::CrossTopic => &mut self.cross_topic,
        }
    }

    pub fn total(&self) -> u64 {
        LinkType::ALL.iter().map(|&t| self.get(t)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub topics: usize,
    pub subtopics: usize,
    pub documents: usize,
    pub sentences: usize,
    pub event_mentions: usize,
    pub clusters: usize,
    pub singletons: usize,
    /// Unordered coreferring action-mention pairs by link type.
    pub coreference_links: LinkCounts,
    /// Unordered non-coreferring action-mention pairs by link type.
    pub non_coreferring_pairs: LinkCounts,
}

impl StatsReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("statistic\tvalue\n");
        for (k, v) in [
            ("topics", self.topics),
            ("subtopics", self.subtopics),
            ("documents", self.documents),
            ("sentences", self.sentences),
            ("event mentions", self.event_mentions),
            ("clusters", self.clusters),
            ("singletons", self.singletons),
        ] {
            s.push_str(&format!("{k}\t{v}\n"));
        }
        for t in LinkType::ALL {
            s.push_str(&format!("{t} links\t{}\n", self.coreference_links.get(t)));
        }
        s
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Corpus statistics. Pair counts are computed combinatorially from group
/// sizes, not by pair enumeration.
pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let actions = corpus.actions();
    let topics: BTreeSet<&str> = corpus.documents.iter().map(|d| d.topic.as_str()).collect();
    let subtopics: BTreeSet<(&str, &str)> = corpus
        .documents
        .iter()
        .map(|d| (d.topic.as_str(), d.subtopic.as_str()))
        .collect();

    // Sizes of action groups at each hierarchy level, overall and per cluster.
    let mut per_doc: HashMap<usize, u64> = HashMap::new();
    let mut per_sub: HashMap<(&str, &str), u64> = HashMap::new();
    let mut per_topic: HashMap<&str, u64> = HashMap::new();
    let mut c_doc: HashMap<(String, usize), u64> = HashMap::new();
    let mut c_sub: HashMap<(String, &str, &str), u64> = HashMap::new();
    let mut c_topic: HashMap<(String, &str), u64> = HashMap::new();
    let mut c_all: HashMap<String, u64> = HashMap::new();
    for &r in &actions {
        let d = &corpus.documents[r.doc];
        let c = corpus.gold_cluster(r);
        *per_doc.entry(r.doc).or_default() += 1;
        *per_sub.entry((&d.topic, &d.subtopic)).or_default() += 1;
        *per_topic.entry(&d.topic).or_default() += 1;
        *c_doc.entry((c.clone(), r.doc)).or_default() += 1;
        *c_sub.entry((c.clone(), &d.topic, &d.subtopic)).or_default() += 1;
        *c_topic.entry((c.clone(), &d.topic)).or_default() += 1;
        *c_all.entry(c).or_default() += 1;
    }
    let sum2 = |it: &mut dyn Iterator<Item = u64>| it.map(choose2).sum::<u64>();
    let n = actions.len() as u64;
    let all = [
        sum2(&mut per_doc.values().copied()),
        sum2(&mut per_sub.values().copied()),
        sum2(&mut per_topic.values().copied()),
        choose2(n),
    ];
    let coref = [
        sum2(&mut c_doc.values().copied()),
        sum2(&mut c_sub.values().copied()),
        sum2(&mut c_topic.values().copied()),
        sum2(&mut c_all.values().copied()),
    ];
    let mut links = LinkCounts::default();
    let mut non = LinkCounts::default();
    for (i, t) in LinkType::ALL.into_iter().enumerate() {
        let prev_all = if i == 0 { 0 } else { all[i - 1] };
        let prev_coref = if i == 0 { 0 } else { coref[i - 1] };
        *links.get_mut(t) = coref[i] - prev_coref;
        *non.get_mut(t) = (all[i] - prev_all) - (coref[i] - prev_coref);
    }

    StatsReport {
        topics: topics.len(),
        subtopics: subtopics.len(),
        documents: corpus.documents.len(),
        sentences: corpus.documents.iter().map(|d| d.sentences.len()).sum(),
        event_mentions: actions.len(),
        clusters: c_all.len(),
        singletons: c_all.values().filter(|&&m| m == 1).count(),
        coreference_links: links,
        non_coreferring_pairs: non,
    }
}

/// How documents are assigned to train/dev/test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Explicit document id lists.
    Explicit {
        train: Vec<String>,
        dev: Vec<String>,
        test: Vec<String>,
    },
    /// Topic label lists.
    ByTopic {
        train: Vec<String>,
        dev: Vec<String>,
        test: Vec<String>,
    },
    /// Shuffled subtopics assigned so that the splits hold roughly the given
    /// percentages of all documents.
    Percent {
        train: f64,
        dev: f64,
        test: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

/// Partitions a corpus by document. Clusters spanning splits are truncated:
/// each split keeps only its own mentions.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits, CorpusError> {
    let mut assignment: HashMap<&str, usize> = HashMap::new();
    match spec {
        SplitSpec::Explicit { train, dev, test } => {
            let known: HashSet<&str> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
            for (part, ids) in [train, dev, test].into_iter().enumerate() {
                for id in ids {
                    if !known.contains(id.as_str()) {
                        return Err(CorpusError::Split(format!("unknown document `{id}`")));
                    }
                    if assignment.insert(id.as_str(), part).is_some() {
                        return Err(CorpusError::Split(format!(
                            "document `{id}` assigned twice"
                        )));
                    }
                }
            }
        }
        SplitSpec::ByTopic { train, dev, test } => {
            let known: HashSet<&str> = corpus.documents.iter().map(|d| d.topic.as_str()).collect();
            let mut topic_part: HashMap<&str, usize> = HashMap::new();
            for (part, topics) in [train, dev, test].into_iter().enumerate() {
                for t in topics {
                    if !known.contains(t.as_str()) {
                        return Err(CorpusError::Split(format!("unknown topic `{t}`")));
                    }
                    if topic_part.insert(t.as_str(), part).is_some() {
                        return Err(CorpusError::Split(format!("topic `{t}` assigned twice")));
                    }
                }
            }
            for d in &corpus.documents {
                if let Some(&p) = topic_part.get(d.topic.as_str()) {
                    assignment.insert(d.doc_id.as_str(), p);
                }
            }
        }
        SplitSpec::Percent {
            train,
            dev,
            test,
            seed,
        } => {
            let total = train + dev + test;
            if !(total > 0.0) || [train, dev, test].iter().any(|p| **p < 0.0) {
                return Err(CorpusError::Split(
                    "percentages must be nonnegative with a positive sum".into(),
                ));
            }
            let mut groups: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
            for d in &corpus.documents {
                groups
                    .entry((d.topic.as_str(), d.subtopic.as_str()))
                    .or_default()
                    .push(d.doc_id.as_str());
            }
            let mut groups: Vec<Vec<&str>> = groups.into_values().collect();
            groups.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let n = corpus.documents.len() as f64;
            let bounds = [train / total * n, (train + dev) / total * n];
            let mut assigned = 0.0;
            for g in groups {
                let part = if assigned < bounds[0] {
                    0
                } else if assigned < bounds[1] {
                    1
                } else {
                    2
                };
                assigned += g.len() as f64;
                for id in g {
                    assignment.insert(id, part);
                }
            }
        }
    }
    if let Some(d) = corpus
        .documents
        .iter()
        .find(|d| !assignment.contains_key(d.doc_id.as_str()))
    {
        return Err(CorpusError::Split(format!(
            "document `{}` is not assigned to any split",
            d.doc_id
        )));
    }
    let part = |p: usize| corpus.subset(|d| assignment[d.doc_id.as_str()] == p);
    Ok(Splits {
        train: part(0),
        dev: part(1),
        test: part(2),
    })
}

/// Disjoint union of corpora. Document ids, topics and cluster ids are
/// prefixed with the source corpus id so that no cross-corpus links arise.
pub fn merge_corpora(corpora: &[Corpus]) -> Result<Corpus, CorpusError> {
    let mut seen = HashSet::new();
    let mut documents = Vec::new();
    for c in corpora {
        for d in &c.documents {
            let mut d = d.clone();
            d.doc_id = format!("{}/{}", c.corpus_id, d.doc_id);
            d.topic = format!("{}/{}", c.corpus_id, d.topic);
            for m in &mut d.mentions {
                if let Some(cid) = &m.cluster_id {
                    m.cluster_id = Some(format!("{}/{cid}", c.corpus_id));
                }
            }
            if !seen.insert(d.doc_id.clone()) {
                return Err(CorpusError::Collision(d.doc_id));
            }
            documents.push(d);
        }
    }
    let corpus_id = corpora
        .iter()
        .map(|c| c.corpus_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(Corpus {
        corpus_id,
        documents,
    })
}
