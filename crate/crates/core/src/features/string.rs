//! String distances between the surface forms of two action mentions.

/// Parameters of the MLIPNS match rule: a pair matches when, after forgiving
/// up to `max_mismatches` mismatching positions, the remaining mismatch ratio
/// is at most `threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mlipns {
    pub threshold: f64,
    pub max_mismatches: usize,
}

impl Default for Mlipns {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            max_mismatches: 2,
        }
    }
}

impl Mlipns {
    pub fn is_match(&self, a: &str, b: &str) -> bool {
        if a == b {
            return true;
        }
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        if a.is_empty() || b.is_empty() {
            return false;
        }
        // Hamming distance over the shared prefix plus the length difference.
        let mut hamming =
            a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
        let mut len = a.len().max(b.len());
        for _ in 0..=self.max_mismatches {
            if len == 0 || hamming as f64 / len as f64 <= self.threshold {
                return true;
            }
            hamming = hamming.saturating_sub(1);
            len -= 1;
        }
        false
    }

    /// Binary distance: 0 on match, 1 otherwise.
    pub fn distance(&self, a: &str, b: &str) -> u8 {
        u8::from(!self.is_match(a, b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StringFeatures {
    pub surface_identical: bool,
    /// `None` when either lemma is unknown.
    pub lemma_identical: Option<bool>,
    pub levenshtein: usize,
    pub mlipns: u8,
}

/// Compares two surface forms (case-folded) and optional lemmas.
pub fn string_features(
    surface_a: &str,
    surface_b: &str,
    lemma_a: Option<&str>,
    lemma_b: Option<&str>,
) -> StringFeatures {
    let (a, b) = (surface_a.to_lowercase(), surface_b.to_lowercase());
    StringFeatures {
        surface_identical: a == b,
        lemma_identical: lemma_a
            .zip(lemma_b)
            .map(|(x, y)| x.to_lowercase() == y.to_lowercase()),
        levenshtein: strsim::levenshtein(&a, &b),
        mlipns: Mlipns::default().distance(&a, &b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct statement of the rule: some number j <= max_mismatches of
    // forgiven positions brings the ratio under the threshold.
    fn mlipns_oracle(a: &str, b: &str, threshold: f64, max_mismatches: usize) -> bool {
        if a == b {
            return true;
        }
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        if a.is_empty() || b.is_empty() {
            return false;
        }
        let longest = a.len().max(b.len()) as i64;
        let mut ham = (a.len() as i64 - b.len() as i64).abs();
        for i in 0..a.len().min(b.len()) {
            if a[i] != b[i] {
                ham += 1;
            }
        }
        (0..=max_mismatches as i64).any(|j| {
            let len = longest - j;
            len < 1 || ((ham - j).max(0) as f64) / (len as f64) <= threshold
        })
    }

    #[test]
    fn identical_surface_forms() {
        let f = string_features("beat", "beat", Some("beat"), Some("beat"));
        assert!(f.surface_identical);
        assert_eq!(f.lemma_identical, Some(true));
        assert_eq!(f.levenshtein, 0);
        assert_eq!(f.mlipns, 0);
    }

    #[test]
    fn single_substitution() {
        let f = string_features("win", "won", None, Some("win"));
        assert_eq!(f.levenshtein, 1);
        assert_eq!(f.lemma_identical, None);
        assert!(!f.surface_identical);
    }

    #[test]
    fn victory_vs_win_matches_oracle() {
        let expected = mlipns_oracle("victory", "win", 0.25, 2);
        assert!(!expected);
        assert_eq!(Mlipns::default().distance("victory", "win"), 1);
        // One mismatch (the length difference) over length 9.
        assert_eq!(Mlipns::default().distance("shootings", "shooting"), 0);
    }

    proptest! {
        #[test]
        fn mlipns_agrees_with_oracle(a in "[a-d]{0,8}", b in "[a-d]{0,8}") {
            let m = Mlipns::default();
            prop_assert_eq!(m.is_match(&a, &b), mlipns_oracle(&a, &b, 0.25, 2));
            prop_assert_eq!(m.is_match(&a, &b), m.is_match(&b, &a));
        }

        #[test]
        fn levenshtein_triangle_inequality(a in "[a-e]{0,10}", b in "[a-e]{0,10}", c in "[a-e]{0,10}") {
            let d = |x: &str, y: &str| string_features(x, y, None, None).levenshtein;
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
            prop_assert_eq!(d(&a, &b), d(&b, &a));
        }
    }
}
