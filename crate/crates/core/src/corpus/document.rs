use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::salience::{build_salience_graph, extract_headline, extract_summary, DegreeSum};
use super::SceneGraphDocument;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarySentence {
    pub text: String,
    /// Entity names in mention order; repeats are meaningful.
    pub entities: Vec<String>,
}

/// Headline, summary and the set of entities visible in the image.
///
/// Generated documents always carry a two-entity headline; hand-written
/// documents may use any non-empty headline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedDocument {
    pub doc_id: String,
    pub headline_text: String,
    pub headline_entities: Vec<String>,
    pub summary_sentences: Vec<SummarySentence>,
    pub depicted_entities: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadlineMode {
    /// Shortest region caption naming both entities, template otherwise.
    #[default]
    PreferRegion,
    /// Always `"<subject> <predicate> <object>"`.
    Template,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateOptions {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub headline: HeadlineMode,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            min_sentences: 3,
            max_sentences: 5,
            headline: HeadlineMode::PreferRegion,
        }
    }
}

pub fn generate_document(
    doc: &SceneGraphDocument,
    opts: &GenerateOptions,
) -> Result<GeneratedDocument> {
    let graph = build_salience_graph(doc)?;
    let headline = extract_headline(&graph, doc, opts.headline == HeadlineMode::PreferRegion)?;
    let summary = extract_summary(
        &graph,
        doc,
        opts.min_sentences,
        opts.max_sentences,
        &DegreeSum,
    )?;
    Ok(GeneratedDocument {
        doc_id: doc.doc_id.clone(),
        headline_text: headline.text,
        headline_entities: headline.entities,
        summary_sentences: summary
            .into_iter()
            .map(|(text, entities)| SummarySentence { text, entities })
            .collect(),
        depicted_entities: doc
            .objects
            .iter()
            .filter(|o| o.depicted)
            .map(|o| o.name.clone())
            .collect(),
    })
}

#[derive(Debug, Default)]
pub struct GenerateOutcome {
    pub documents: Vec<GeneratedDocument>,
    /// Documents that could not be turned into a headline + summary, with
    /// the reason.
    pub skipped: Vec<(String, String)>,
}

/// Generates a document for every input that has salience structure and
/// regions; the rest are reported in `skipped`.
pub fn generate_documents(docs: &[SceneGraphDocument], opts: &GenerateOptions) -> GenerateOutcome {
    let mut out = GenerateOutcome::default();
    for doc in docs {
        match generate_document(doc, opts) {
            Ok(d) => out.documents.push(d),
            Err(e) => {
                log::warn!("skipping {}: {e}", doc.doc_id);
                out.skipped.push((doc.doc_id.clone(), e.to_string()));
            }
        }
    }
    out
}

pub fn render_generated(docs: &[GeneratedDocument]) -> Result<String> {
    let mut s = String::new();
    for d in docs {
        s.push_str(&serde_json::to_string(d).map_err(|e| Error::Serialize(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_generated(text: &str) -> Result<Vec<GeneratedDocument>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_generated(docs: &[GeneratedDocument], path: &Path) -> Result<()> {
    crate::io::write_atomic(path, render_generated(docs)?.as_bytes())
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedDocument>> {
    parse_generated(&crate::io::read_to_string(path)?)
}
