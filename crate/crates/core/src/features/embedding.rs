//! Similarities between precomputed vectors: action mention spans,
//! sentences and linked knowledge-base entities.

use super::anchors::component_spans;
use crate::corpus::{Document, EntityLink, Mention};
use crate::embeddings::cosine;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineStats {
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregates all `|a| × |b|` pairwise cosines. `None` when either set is
/// empty.
pub fn cosine_stats(a: &[&[f32]], b: &[&[f32]]) -> Option<CosineStats> {
    let sims: Vec<f64> = a
        .iter()
        .flat_map(|x| b.iter().filter_map(move |y| cosine(x, y)))
        .collect();
    if sims.is_empty() {
        return None;
    }
    let n = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / n;
    let variance = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Some(CosineStats {
        mean,
        variance,
        min: sims.iter().copied().fold(f64::INFINITY, f64::min),
        max: sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Entity regions compared with [`cosine_stats`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityRegion {
    SemanticRoleArgs,
    SurroundingSentence,
    SentenceContext,
    DocStart,
}

impl EntityRegion {
    pub const ALL: [EntityRegion; 4] = [
        EntityRegion::SemanticRoleArgs,
        EntityRegion::SurroundingSentence,
        EntityRegion::SentenceContext,
        EntityRegion::DocStart,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EntityRegion::SemanticRoleArgs => "semantic-role-args",
            EntityRegion::SurroundingSentence => "surrounding-sentence",
            EntityRegion::SentenceContext => "sentence-context",
            EntityRegion::DocStart => "doc-start",
        }
    }
}

fn dedup_ids<'d>(links: impl Iterator<Item = &'d EntityLink>) -> Vec<&'d str> {
    let mut out: Vec<&str> = Vec::new();
    for l in links {
        if !out.contains(&l.kb_id.as_str()) {
            out.push(&l.kb_id);
        }
    }
    out
}

/// Entity linked on the action span itself.
pub fn action_entity<'d>(doc: &'d Document, action: &Mention) -> Option<&'d str> {
    doc.entity_links
        .iter()
        .find(|e| e.sentence == action.sentence && e.token_span.overlaps(&action.token_span))
        .map(|e| e.kb_id.as_str())
}

/// Distinct entity ids of a region, in document order of first occurrence.
pub fn region_entities<'d>(
    doc: &'d Document,
    action: &Mention,
    region: EntityRegion,
) -> Vec<&'d str> {
    let s = action.sentence;
    match region {
        EntityRegion::SemanticRoleArgs => {
            let spans = component_spans(doc, action);
            dedup_ids(doc.entity_links.iter().filter(|e| {
                spans.iter().any(|(_, sp)| {
                    sp.sentence == e.sentence && sp.token_span.overlaps(&e.token_span)
                })
            }))
        }
        EntityRegion::SurroundingSentence => {
            dedup_ids(doc.entity_links.iter().filter(|e| e.sentence == s))
        }
        EntityRegion::SentenceContext => {
            let (lo, hi) = (s.saturating_sub(2), s + 2);
            dedup_ids(
                doc.entity_links
                    .iter()
                    .filter(|e| (lo..=hi).contains(&e.sentence)),
            )
        }
        EntityRegion::DocStart => dedup_ids(doc.entity_links.iter().filter(|e| e.sentence < 3)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similarity() {
        let v: &[f32] = &[0.2, 0.7, -0.1];
        let s = cosine_stats(&[v], &[v]).unwrap();
        assert!(
            (s.mean - 1.0).abs() < 1e-12
                && (s.min - 1.0).abs() < 1e-12
                && (s.max - 1.0).abs() < 1e-12
        );
        assert!(s.variance.abs() < 1e-12);
    }

    #[test]
    fn orthogonal_units() {
        let s = cosine_stats(&[&[1.0, 0.0]], &[&[0.0, 1.0]]).unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn two_by_three_matches_explicit_loop() {
        let a: Vec<Vec<f32>> = vec![vec![1.0, 0.0, 0.0], vec![0.6, 0.8, 0.0]];
        let b: Vec<Vec<f32>> = vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.6, 0.8],
        ];
        let mut sims = vec![];
        for x in &a {
            for y in &b {
                let dot: f32 = x.iter().zip(y).map(|(p, q)| p * q).sum();
                let nx: f32 = x.iter().map(|p| p * p).sum::<f32>().sqrt();
                let ny: f32 = y.iter().map(|p| p * p).sum::<f32>().sqrt();
                sims.push((dot / (nx * ny)) as f64);
            }
        }
        assert_eq!(sims.len(), 6);
        let mean = sims.iter().sum::<f64>() / 6.0;
        let var = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 6.0;
        let ar: Vec<&[f32]> = a.iter().map(Vec::as_slice).collect();
        let br: Vec<&[f32]> = b.iter().map(Vec::as_slice).collect();
        let s = cosine_stats(&ar, &br).unwrap();
        assert!((s.mean - mean).abs() < 1e-6);
        assert!((s.variance - var).abs() < 1e-6);
        assert!((s.min - sims.iter().cloned().fold(1.0, f64::min)).abs() < 1e-6);
        assert!((s.max - sims.iter().cloned().fold(0.0, f64::max)).abs() < 1e-6);
        assert!(cosine_stats(&ar, &[]).is_none());
    }
}
