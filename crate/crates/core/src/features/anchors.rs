//! Locating annotations relative to an action mention.

use crate::corpus::{Document, Mention, MentionKind, SpanRef, SrlRole, TokenSpan};

/// Component spans attached to an action: gold components anchored to it
/// first, then arguments of SRL frames whose predicate overlaps the action.
pub fn component_spans(doc: &Document, action: &Mention) -> Vec<(SrlRole, SpanRef)> {
    let mut out = Vec::new();
    for m in &doc.mentions {
        if m.anchor.as_deref() != Some(action.mention_id.as_str()) {
            continue;
        }
        let role = match m.kind {
            MentionKind::Participant => SrlRole::Participant,
            MentionKind::Time => SrlRole::Time,
            MentionKind::Location => SrlRole::Location,
            MentionKind::Action => continue,
        };
        out.push((
            role,
            SpanRef {
                sentence: m.sentence,
                token_span: m.token_span,
            },
        ));
    }
    for frame in &doc.srl {
        if frame.predicate.sentence == action.sentence
            && frame.predicate.token_span.overlaps(&action.token_span)
        {
            out.extend(frame.args.iter().map(|a| {
                (
                    a.role,
                    SpanRef {
                        sentence: a.sentence,
                        token_span: a.token_span,
                    },
                )
            }));
        }
    }
    out
}

/// Earliest item in document order.
pub fn first_in_document<T>(items: &[T], pos: impl Fn(&T) -> (usize, TokenSpan)) -> Option<&T> {
    items.iter().min_by_key(|x| {
        let (s, span) = pos(x);
        (s, span.start, span.end)
    })
}

/// Item in `sentence` whose start is closest to `start`; ties go to the
/// earlier span.
pub fn nearest_in_sentence<T>(
    items: &[T],
    pos: impl Fn(&T) -> (usize, TokenSpan),
    sentence: usize,
    start: usize,
) -> Option<&T> {
    items
        .iter()
        .filter(|x| pos(x).0 == sentence)
        .min_by_key(|x| {
            let span = pos(x).1;
            (span.start.abs_diff(start), span.start, span.end)
        })
}

/// Last item located in a sentence before `sentence`.
pub fn closest_preceding<T>(
    items: &[T],
    pos: impl Fn(&T) -> (usize, TokenSpan),
    sentence: usize,
) -> Option<&T> {
    items
        .iter()
        .filter(|x| pos(x).0 < sentence)
        .max_by_key(|x| {
            let (s, span) = pos(x);
            (s, span.start, std::cmp::Reverse(span.end))
        })
}

/// First item overlapping the given span.
pub fn overlapping<T>(
    items: &[T],
    pos: impl Fn(&T) -> (usize, TokenSpan),
    at: SpanRef,
) -> Option<&T> {
    items.iter().find(|x| {
        let (s, span) = pos(x);
        s == at.sentence && span.overlaps(&at.token_span)
    })
}
