//! Spatial distance between locations resolved for two mentions.

use super::anchors::{
    closest_preceding, component_spans, first_in_document, nearest_in_sentence, overlapping,
};
use crate::corpus::{Document, EntityLink, Mention, SrlRole, TokenSpan};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Upward steps (summed over both sides) after which a hierarchy match is
/// considered absent.
pub const HIERARCHY_CAP: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaceStrategy {
    Document,
    Srl,
    Sentence,
    ClosestPrecedingSentence,
    ClosestOverall,
}

impl PlaceStrategy {
    pub const ALL: [PlaceStrategy; 5] = [
        PlaceStrategy::Document,
        PlaceStrategy::Srl,
        PlaceStrategy::Sentence,
        PlaceStrategy::ClosestPrecedingSentence,
        PlaceStrategy::ClosestOverall,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlaceStrategy::Document => "document",
            PlaceStrategy::Srl => "srl",
            PlaceStrategy::Sentence => "sentence",
            PlaceStrategy::ClosestPrecedingSentence => "closest-preceding-sentence",
            PlaceStrategy::ClosestOverall => "closest-overall",
        }
    }
}

fn link_pos(e: &&EntityLink) -> (usize, TokenSpan) {
    (e.sentence, e.token_span)
}

/// One location per strategy, in [`PlaceStrategy::ALL`] order.
pub fn resolve_places<'d>(doc: &'d Document, action: &Mention) -> [Option<&'d EntityLink>; 5] {
    let places: Vec<&EntityLink> = doc
        .entity_links
        .iter()
        .filter(|e| e.is_location())
        .collect();
    let srl = component_spans(doc, action)
        .into_iter()
        .filter(|(role, _)| *role == SrlRole::Location)
        .find_map(|(_, span)| overlapping(&places, link_pos, span))
        .copied();
    let sentence =
        nearest_in_sentence(&places, link_pos, action.sentence, action.token_span.start).copied();
    let preceding = closest_preceding(&places, link_pos, action.sentence).copied();
    [
        first_in_document(&places, link_pos).copied(),
        srl,
        sentence,
        preceding,
        srl.or(sentence).or(preceding),
    ]
}

/// Great-circle distance between two `(lat, lon)` points in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2)
        + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Fewest upward steps, summed over both sides, until the two chains
/// `[kb_id, ancestors...]` share an entity. `None` beyond `cap`.
pub fn hierarchy_match(a: &EntityLink, b: &EntityLink, cap: usize) -> Option<usize> {
    let chain = |e: &EntityLink| -> Vec<String> {
        std::iter::once(e.kb_id.clone())
            .chain(e.hierarchy.iter().cloned())
            .collect()
    };
    let (ca, cb) = (chain(a), chain(b));
    let mut best: Option<usize> = None;
    for (i, x) in ca.iter().enumerate() {
        for (j, y) in cb.iter().enumerate() {
            if x == y && i + j <= cap && best.map_or(true, |b| i + j < b) {
                best = Some(i + j);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn place(kb: &str, hierarchy: &[&str]) -> EntityLink {
        EntityLink {
            sentence: 0,
            token_span: TokenSpan::new(0, 1),
            kb_id: kb.into(),
            lat: None,
            lon: None,
            hierarchy: hierarchy.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn identical_coordinates_have_zero_distance() {
        assert_eq!(haversine_km((48.1, 11.5), (48.1, 11.5)), 0.0);
    }

    #[test]
    fn quarter_of_the_equator() {
        let d = haversine_km((0.0, 0.0), (0.0, 90.0));
        let closed_form = std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM;
        assert!((d - closed_form).abs() < 1e-9);
        assert!((d - 10007.5).abs() < 0.1);
    }

    #[test]
    fn hierarchy_steps() {
        let munich = place("Munich", &["Upper_Bavaria", "Bavaria", "Germany"]);
        let berlin = place("Berlin", &["Germany"]);
        let paris = place("Paris", &["Île-de-France", "France"]);
        assert_eq!(hierarchy_match(&munich, &munich, HIERARCHY_CAP), Some(0));
        assert_eq!(hierarchy_match(&munich, &berlin, HIERARCHY_CAP), Some(4));
        assert_eq!(hierarchy_match(&munich, &berlin, 3), None);
        assert_eq!(hierarchy_match(&munich, &paris, HIERARCHY_CAP), None);
    }
}
