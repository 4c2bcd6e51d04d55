//! Perception traces: the order in which a reader is modeled to take in the
//! text and image entities of a generated document.
//!
//! The reader starts with the headline. Each headline entity is read and, if
//! it is depicted, the gaze switches to its image region right away. Each
//! summary sentence is then read in full, followed by a look at the image
//! regions of depicted entities that the trace has not shown yet. An image
//! region is viewed at most once per document.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::GeneratedDocument;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Text,
    Image,
}

impl Modality {
    pub fn suffix(self) -> &'static str {
        match self {
            Modality::Text => "#t",
            Modality::Image => "#i",
        }
    }
}

/// An entity as seen in one modality. Serializes as `<entity>#t` or
/// `<entity>#i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModalToken {
    entity: String,
    modality: Modality,
}

impl ModalToken {
    pub fn new(entity: impl Into<String>, modality: Modality) -> Result<Self> {
        let entity = entity.into();
        validate_entity(&entity)?;
        Ok(Self { entity, modality })
    }

    pub fn text(entity: impl Into<String>) -> Result<Self> {
        Self::new(entity, Modality::Text)
    }

    pub fn image(entity: impl Into<String>) -> Result<Self> {
        Self::new(entity, Modality::Image)
    }

    pub fn entity(&self) -> &str {
        &self.entity
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }
}

fn validate_entity(entity: &str) -> Result<()> {
    let bad = |message: &str| {
        Err(Error::InvalidToken {
            token: entity.to_string(),
            message: message.to_string(),
        })
    };
    if entity.is_empty() {
        return bad("empty entity name");
    }
    if entity.contains('#') {
        return bad("entity names may not contain `#`");
    }
    if entity.chars().any(char::is_whitespace) {
        return bad("entity names may not contain whitespace");
    }
    Ok(())
}

impl fmt::Display for ModalToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.entity, self.modality.suffix())
    }
}

impl FromStr for ModalToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (entity, modality) = if let Some(e) = s.strip_suffix("#t") {
            (e, Modality::Text)
        } else if let Some(e) = s.strip_suffix("#i") {
            (e, Modality::Image)
        } else {
            return Err(Error::InvalidToken {
                token: s.to_string(),
                message: "missing `#t` or `#i` suffix".into(),
            });
        };
        ModalToken::new(entity, modality)
    }
}

/// Splits a serialized token into entity and modality without validating the
/// entity part. Returns `None` for untagged strings.
pub fn split_tag(token: &str) -> Option<(&str, Modality)> {
    token
        .strip_suffix("#t")
        .map(|e| (e, Modality::Text))
        .or_else(|| token.strip_suffix("#i").map(|e| (e, Modality::Image)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerceptionTrace {
    pub doc_id: String,
    pub tokens: Vec<ModalToken>,
}

impl PerceptionTrace {
    pub fn token_strings(&self) -> Vec<String> {
        self.tokens.iter().map(ToString::to_string).collect()
    }
}

/// Walks a generated document in modeled reading order.
pub fn extract_trace(doc: &GeneratedDocument) -> Result<PerceptionTrace> {
    if doc.headline_entities.is_empty() {
        return Err(Error::Document {
            doc_id: doc.doc_id.clone(),
            message: "empty headline".into(),
        });
    }
    let mut tokens = Vec::new();
    let mut viewed: HashSet<&str> = HashSet::new();

    for entity in &doc.headline_entities {
        tokens.push(ModalToken::text(entity.as_str())?);
        if doc.depicted_entities.contains(entity) && viewed.insert(entity.as_str()) {
            tokens.push(ModalToken::image(entity.as_str())?);
        }
    }

    for sentence in &doc.summary_sentences {
        for entity in &sentence.entities {
            tokens.push(ModalToken::text(entity.as_str())?);
        }
        for entity in &sentence.entities {
            if doc.depicted_entities.contains(entity) && viewed.insert(entity.as_str()) {
                tokens.push(ModalToken::image(entity.as_str())?);
            }
        }
    }

    Ok(PerceptionTrace {
        doc_id: doc.doc_id.clone(),
        tokens,
    })
}

pub fn extract_traces(docs: &[GeneratedDocument]) -> Result<Vec<PerceptionTrace>> {
    docs.iter().map(extract_trace).collect()
}

/// One trace per line: `<doc_id>\t<token> <token> ...`.
pub fn render_traces(traces: &[PerceptionTrace]) -> Result<String> {
    let mut out = String::new();
    for t in traces {
        if t.doc_id.contains(['\t', '\n', '\r']) {
            return Err(Error::Document {
                doc_id: t.doc_id.clone(),
                message: "doc_id may not contain tabs or newlines".into(),
            });
        }
        for token in &t.tokens {
            validate_entity(token.entity())?;
        }
        out.push_str(&t.doc_id);
        out.push('\t');
        out.push_str(&t.token_strings().join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_traces(text: &str) -> Result<Vec<PerceptionTrace>> {
    let mut traces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (doc_id, rest) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `<doc_id>\\t<tokens>`".into()))?;
        let tokens = rest
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<ModalToken>()
                    .map_err(|e| parse_err(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        traces.push(PerceptionTrace {
            doc_id: doc_id.to_string(),
            tokens,
        });
    }
    Ok(traces)
}

pub fn write_traces(traces: &[PerceptionTrace], path: &Path) -> Result<()> {
    crate::io::write_atomic(path, render_traces(traces)?.as_bytes())
}

pub fn read_traces(path: &Path) -> Result<Vec<PerceptionTrace>> {
    parse_traces(&crate::io::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SummarySentence;
    use proptest::prelude::*;

    fn gdoc(headline: &[&str], sentences: &[&[&str]], depicted: &[&str]) -> GeneratedDocument {
        GeneratedDocument {
            doc_id: "d".into(),
            headline_text: headline.join(" "),
            headline_entities: headline.iter().map(|s| s.to_string()).collect(),
            summary_sentences: sentences
                .iter()
                .map(|s| SummarySentence {
                    text: s.join(" "),
                    entities: s.iter().map(|e| e.to_string()).collect(),
                })
                .collect(),
            depicted_entities: depicted.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn strs(t: &PerceptionTrace) -> Vec<String> {
        t.token_strings()
    }

    #[test]
    fn dog_and_ball_walk() {
        let t = extract_trace(&gdoc(&["dog"], &[&["dog", "ball"]], &["dog", "ball"])).unwrap();
        assert_eq!(strs(&t), ["dog#t", "dog#i", "dog#t", "ball#t", "ball#i"]);
    }

    #[test]
    fn headline_only() {
        let t = extract_trace(&gdoc(&["cat"], &[], &["cat"])).unwrap();
        assert_eq!(strs(&t), ["cat#t", "cat#i"]);
    }

    #[test]
    fn undepicted_entities_have_no_image_token() {
        let t = extract_trace(&gdoc(&["sky"], &[&["sky"]], &[])).unwrap();
        assert_eq!(strs(&t), ["sky#t", "sky#t"]);
    }

    #[test]
    fn two_entity_headline_interleaves() {
        let t = extract_trace(&gdoc(
            &["man", "horse"],
            &[&["horse", "field", "field"], &["man", "hat", "field"]],
            &["man", "horse", "field", "hat"],
        ))
        .unwrap();
        assert_eq!(
            strs(&t),
            [
                "man#t", "man#i", "horse#t", "horse#i", "horse#t", "field#t", "field#t", "field#i",
                "man#t", "hat#t", "field#t", "hat#i"
            ]
        );
    }

    #[test]
    fn empty_headline_is_an_error() {
        assert!(extract_trace(&gdoc(&[], &[&["a"]], &["a"])).is_err());
    }

    #[test]
    fn hash_in_entity_rejected_on_write() {
        assert!(ModalToken::text("a#b").is_err());
        let forged = PerceptionTrace {
            doc_id: "x".into(),
            tokens: vec![ModalToken {
                entity: "a#b".into(),
                modality: Modality::Text,
            }],
        };
        assert!(render_traces(&[forged]).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_traces("a\tdog#t\nb\tcat#x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_traces("no tab here\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn header_scale_file() {
        let traces: Vec<PerceptionTrace> = (0..55_237)
            .map(|i| PerceptionTrace {
                doc_id: format!("doc{i}"),
                tokens: vec![
                    ModalToken::text("dog").unwrap(),
                    ModalToken::image("dog").unwrap(),
                ],
            })
            .collect();
        let text = render_traces(&traces).unwrap();
        assert_eq!(parse_traces(&text).unwrap().len(), 55_237);
    }

    fn arb_doc() -> impl Strategy<Value = GeneratedDocument> {
        let entity = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]);
        (
            prop::collection::vec(entity.clone(), 1..3),
            prop::collection::vec(prop::collection::vec(entity.clone(), 1..5), 0..6),
            prop::collection::btree_set(entity, 0..6),
        )
            .prop_map(|(h, s, dep)| GeneratedDocument {
                doc_id: "p".into(),
                headline_text: String::new(),
                headline_entities: h.into_iter().map(String::from).collect(),
                summary_sentences: s
                    .into_iter()
                    .map(|e| SummarySentence {
                        text: String::new(),
                        entities: e.into_iter().map(String::from).collect(),
                    })
                    .collect(),
                depicted_entities: dep.into_iter().map(String::from).collect(),
            })
    }

    proptest! {
        #[test]
        fn trace_invariants(doc in arb_doc()) {
            let t = extract_trace(&doc).unwrap();
            let mut seen_text = HashSet::new();
            let mut seen_image = HashSet::new();
            for tok in &t.tokens {
                match tok.modality() {
                    Modality::Text => { seen_text.insert(tok.entity().to_string()); }
                    Modality::Image => {
                        prop_assert!(seen_image.insert(tok.entity().to_string()), "image twice");
                        prop_assert!(seen_text.contains(tok.entity()), "image before text");
                        prop_assert!(doc.depicted_entities.contains(tok.entity()));
                    }
                }
            }
            let text_seq: Vec<&str> = t.tokens.iter()
                .filter(|x| x.modality() == Modality::Text)
                .map(ModalToken::entity)
                .collect();
            let expected: Vec<&str> = doc.headline_entities.iter()
                .chain(doc.summary_sentences.iter().flat_map(|s| &s.entities))
                .map(String::as_str)
                .collect();
            prop_assert_eq!(text_seq, expected);
            prop_assert_eq!(extract_trace(&doc).unwrap(), t.clone());
            let round = parse_traces(&render_traces(std::slice::from_ref(&t)).unwrap()).unwrap();
            prop_assert_eq!(round, vec![t]);
        }
    }
}
