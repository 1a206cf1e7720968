//! CoNLL coreference files.
//!
//! The writer emits one token line per mention: `<doc>\t<index>\t<mention>\t(<cluster>)`,
//! mentions sorted by id, clusters numbered by first mention. The reader
//! accepts any whitespace-separated layout whose last column carries the
//! bracket annotation (`(7)`, `(7`, `7)`, `-`, `|`-separated), and names a
//! mention `<doc>:<first line>-<last line>` with line indices counted within
//! its document. `read_conll_keyed` reads the writer's own layout back with
//! the mention keys from the third column.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::MetricsError;

/// Serializes a partition as a single CoNLL document.
pub fn write_conll(document: &str, partition: &[Vec<String>]) -> String {
    let mut clusters: Vec<Vec<&String>> = partition
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let mut c: Vec<&String> = c.iter().collect();
            c.sort();
            c
        })
        .collect();
    clusters.sort();
    let mut rows: Vec<(&String, usize)> = clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |m| (*m, i)))
        .collect();
    rows.sort();
    let mut out = format!("#begin document ({document}); part 000\n");
    for (line, (m, c)) in rows.iter().enumerate() {
        let _ = writeln!(out, "{document}\t{line}\t{m}\t({c})");
    }
    out.push_str("#end document\n");
    out
}

/// Mentions named by line position; see the module docs.
pub fn read_conll(text: &str) -> Result<Vec<Vec<String>>, MetricsError> {
    let mut clusters: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    let mut document: Option<String> = None;
    let mut line_no = 0usize;
    let mut open: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: &str| MetricsError::Conll {
            line: i + 1,
            message: message.to_string(),
        };
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("#begin document") {
            if document.is_some() {
                return Err(err("nested document"));
            }
            document = Some(rest.trim().to_string());
            line_no = 0;
            open.clear();
            continue;
        }
        if line.starts_with("#end document") {
            if open.values().any(|v| !v.is_empty()) {
                return Err(err("unclosed mention"));
            }
            document = None;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let doc = document
            .as_ref()
            .ok_or_else(|| err("token outside a document"))?;
        let tag = line.split_whitespace().last().unwrap_or("-");
        if tag != "-" {
            for part in tag.split('|') {
                let starts = part.starts_with('(');
                let ends = part.ends_with(')');
                let id = part.trim_start_matches('(').trim_end_matches(')');
                if id.is_empty() || !(starts || ends) {
                    return Err(err("bad coreference tag"));
                }
                let first = if starts {
                    line_no
                } else {
                    open.get_mut(id)
                        .and_then(Vec::pop)
                        .ok_or_else(|| err("closing an unopened mention"))?
                };
                if ends {
                    clusters
                        .entry((doc.clone(), id.to_string()))
                        .or_default()
                        .push(format!("{doc}:{first}-{line_no}"));
                } else {
                    open.entry(id.to_string()).or_default().push(line_no);
                }
            }
        }
        line_no += 1;
    }
    if document.is_some() {
        return Err(MetricsError::Conll {
            line: text.lines().count(),
            message: "missing #end document".into(),
        });
    }
    Ok(clusters.into_values().collect())
}

/// Inverse of [`write_conll`]: every token line is `<doc> <index> <mention>
/// (<cluster>)`, and mentions keep their names.
pub fn read_conll_keyed(text: &str) -> Result<Vec<Vec<String>>, MetricsError> {
    let mut clusters: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    let mut document: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let err = |message: &str| MetricsError::Conll {
            line: i + 1,
            message: message.to_string(),
        };
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("#begin document") {
            document = Some(rest.trim().to_string());
            continue;
        }
        if line.starts_with("#end document") {
            document = None;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let doc = document
            .as_ref()
            .ok_or_else(|| err("token outside a document"))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [_, _, mention, tag] = cols[..] else {
            return Err(err("expected four columns"));
        };
        let id = tag
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .filter(|t| !t.is_empty() && !t.contains(['(', ')', '|']))
            .ok_or_else(|| err("expected a single-token cluster tag"))?;
        clusters
            .entry((doc.clone(), id.to_string()))
            .or_default()
            .push(mention.to_string());
    }
    Ok(clusters.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::score;

    #[test]
    fn round_trip_preserves_scores() {
        let key: Vec<Vec<String>> = vec![
            vec!["d1/m1".into(), "d2/m1".into()],
            vec!["d1/m2".into()],
            vec!["d2/m2".into(), "d2/m3".into()],
        ];
        let resp: Vec<Vec<String>> = vec![
            vec!["d1/m1".into(), "d2/m1".into(), "d1/m2".into()],
            vec!["d2/m2".into()],
            vec!["d2/m3".into()],
        ];
        let k = read_conll(&write_conll("all", &key)).unwrap();
        let r = read_conll(&write_conll("all", &resp)).unwrap();
        assert_eq!(score(&k, &r).unwrap(), score(&key, &resp).unwrap());
    }

    #[test]
    fn keyed_reader_inverts_writer() {
        let p: Vec<Vec<String>> = vec![vec!["d1/m1".into(), "d2/m1".into()], vec!["d1/m2".into()]];
        let mut back = read_conll_keyed(&write_conll("all", &p)).unwrap();
        back.sort();
        assert_eq!(back, p);
        assert!(read_conll_keyed("#begin document (x);\nx 0 a (1\n#end document\n").is_err());
        assert!(read_conll_keyed("#begin document (x);\nx 0 (1)\n#end document\n").is_err());
    }

    #[test]
    fn multi_token_and_nested_mentions() {
        let text =
            "#begin document (x);\nx 0 a (1\nx 1 b (2)|1)\nx 2 c -\nx 3 d (2)\n#end document\n";
        let mut p = read_conll(text).unwrap();
        p.sort();
        assert_eq!(
            p,
            vec![
                vec!["(x);:0-1".to_string()],
                vec!["(x);:1-1".to_string(), "(x);:3-3".to_string()]
            ]
        );
        assert!(read_conll("#begin document (x);\nx 0 a (1\n#end document\n").is_err());
    }
}
