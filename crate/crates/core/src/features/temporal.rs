//! Temporal distance between the time points resolved for two mentions.

use chrono::NaiveDateTime;

use super::anchors::{
    closest_preceding, component_spans, first_in_document, nearest_in_sentence, overlapping,
};
use crate::corpus::{Document, Mention, SrlRole, TimexSpan};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeStrategy {
    DocumentPublish,
    Document,
    Srl,
    Sentence,
    ClosestPrecedingSentence,
    ClosestOverall,
}

impl TimeStrategy {
    pub const ALL: [TimeStrategy; 6] = [
        TimeStrategy::DocumentPublish,
        TimeStrategy::Document,
        TimeStrategy::Srl,
        TimeStrategy::Sentence,
        TimeStrategy::ClosestPrecedingSentence,
        TimeStrategy::ClosestOverall,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TimeStrategy::DocumentPublish => "document-publish",
            TimeStrategy::Document => "document",
            TimeStrategy::Srl => "srl",
            TimeStrategy::Sentence => "sentence",
            TimeStrategy::ClosestPrecedingSentence => "closest-preceding-sentence",
            TimeStrategy::ClosestOverall => "closest-overall",
        }
    }
}

/// Field names and unit lengths in seconds.
pub const UNITS: [(&str, i64); 5] = [
    ("year", 365 * 86_400),
    ("month", 30 * 86_400),
    ("week", 7 * 86_400),
    ("day", 86_400),
    ("hour", 3_600),
];

fn timex_pos(t: &TimexSpan) -> (usize, crate::corpus::TokenSpan) {
    (t.sentence, t.token_span)
}

/// One time point per strategy, in [`TimeStrategy::ALL`] order.
pub fn resolve_times(doc: &Document, action: &Mention) -> [Option<NaiveDateTime>; 6] {
    let at = |t: Option<&TimexSpan>| t.map(|t| t.value.datetime());
    let srl = component_spans(doc, action)
        .into_iter()
        .filter(|(role, _)| *role == SrlRole::Time)
        .find_map(|(_, span)| overlapping(&doc.timex, timex_pos, span))
        .map(|t| t.value.datetime());
    let sentence = at(nearest_in_sentence(
        &doc.timex,
        timex_pos,
        action.sentence,
        action.token_span.start,
    ));
    let preceding = at(closest_preceding(&doc.timex, timex_pos, action.sentence));
    [
        doc.publish_date.as_ref().map(|p| p.datetime()),
        at(first_in_document(&doc.timex, timex_pos)),
        srl,
        sentence,
        preceding,
        srl.or(sentence).or(preceding),
    ]
}

/// `|a - b|` floored to whole years, months, weeks, days and hours.
pub fn unit_distances(a: NaiveDateTime, b: NaiveDateTime) -> [u64; 5] {
    let seconds = (a - b).num_seconds().unsigned_abs();
    UNITS.map(|(_, unit)| seconds / unit as u64)
}
