//! Scene-graph input records, entity filtering and document generation.

mod document;
mod salience;

pub use document::{
    generate_document, generate_documents, parse_generated, read_generated, render_generated,
    write_generated, GenerateOptions, GenerateOutcome, GeneratedDocument, HeadlineMode,
    SummarySentence,
};
pub use salience::{
    build_salience_graph, extract_headline, extract_summary, DegreeSum, Headline, RegionScorer,
    SalienceGraph,
};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneObject {
    pub id: String,
    pub name: String,
    /// True when the object carries a bounding box in the input.
    pub depicted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relationship {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub text: String,
    pub object_ids: Vec<String>,
}

/// One annotated image: objects, their relationships and region captions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneGraphDocument {
    pub doc_id: String,
    pub objects: Vec<SceneObject>,
    pub relationships: Vec<Relationship>,
    pub regions: Vec<Region>,
}

impl SceneGraphDocument {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn name_index(&self) -> HashMap<&str, &str> {
        self.objects
            .iter()
            .map(|o| (o.id.as_str(), o.name.as_str()))
            .collect()
    }

    /// Entity names mentioned by a region, in mention order, repeats kept.
    pub fn region_mentions(&self, region: &Region) -> Vec<String> {
        let names = self.name_index();
        region
            .object_ids
            .iter()
            .filter_map(|id| names.get(id.as_str()).map(|n| n.to_string()))
            .collect()
    }

    pub fn entity_names(&self) -> BTreeSet<&str> {
        self.objects.iter().map(|o| o.name.as_str()).collect()
    }

    /// Mention count per entity name: one per object annotation plus one per
    /// region reference to an object with that name.
    pub fn mention_counts(&self) -> BTreeMap<String, usize> {
        let names = self.name_index();
        let mut counts = BTreeMap::new();
        for o in &self.objects {
            *counts.entry(o.name.clone()).or_default() += 1;
        }
        for region in &self.regions {
            for id in &region.object_ids {
                if let Some(name) = names.get(id.as_str()) {
                    *counts.entry(name.to_string()).or_default() += 1;
                }
            }
        }
        counts
    }

    fn validate(&self) -> Result<()> {
        let ids: HashSet<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        let check = |id: &str, context: &'static str| {
            if ids.contains(id) {
                Ok(())
            } else {
                Err(Error::DanglingReference {
                    doc_id: self.doc_id.clone(),
                    object_id: id.to_string(),
                    context,
                })
            }
        };
        for rel in &self.relationships {
            check(&rel.subject, "relationship subject")?;
            check(&rel.object, "relationship object")?;
        }
        for region in &self.regions {
            for id in &region.object_ids {
                check(id, "region mention")?;
            }
        }
        Ok(())
    }
}

/// Lowercases and trims an entity name. Internal whitespace runs become a
/// single `_` because trace and vector files are whitespace-delimited.
/// Spelling is otherwise left as annotated.
pub fn normalize_name(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Deserialize)]
struct RawObject {
    id: String,
    name: String,
    #[serde(default)]
    bbox: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct RawRelationship {
    subject: String,
    predicate: String,
    object: String,
}

#[derive(Deserialize)]
struct RawRegion {
    text: String,
    #[serde(default)]
    object_ids: Vec<String>,
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    relationships: Vec<RawRelationship>,
    #[serde(default)]
    regions: Vec<RawRegion>,
}

fn parse_record(line_no: usize, line: &str) -> Result<SceneGraphDocument> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            doc_id: "?".into(),
            field: "<record>".into(),
            message: e.to_string(),
        })?;
    let doc_id = value
        .get("doc_id")
        .and_then(|v| v.as_str())
        .unwrap_or("?")
        .to_string();
    let raw: RawDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::MalformedRecord {
            line: line_no,
            doc_id: doc_id.clone(),
            field: path,
            message: e.into_inner().to_string(),
        }
    })?;

    let mut seen = HashSet::new();
    let mut objects = Vec::with_capacity(raw.objects.len());
    for (i, o) in raw.objects.into_iter().enumerate() {
        let name = normalize_name(&o.name);
        if name.is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                doc_id,
                field: format!("objects[{i}].name"),
                message: "empty name after normalization".into(),
            });
        }
        if !seen.insert(o.id.clone()) {
            return Err(Error::MalformedRecord {
                line: line_no,
                doc_id,
                field: format!("objects[{i}].id"),
                message: format!("duplicate object id `{}`", o.id),
            });
        }
        objects.push(SceneObject {
            id: o.id,
            name,
            depicted: o.bbox.is_some_and(|b| !b.is_null()),
        });
    }
    let doc = SceneGraphDocument {
        doc_id: raw.doc_id,
        objects,
        relationships: raw
            .relationships
            .into_iter()
            .map(|r| Relationship {
                subject: r.subject,
                predicate: r.predicate.trim().to_string(),
                object: r.object,
            })
            .collect(),
        regions: raw
            .regions
            .into_iter()
            .map(|r| Region {
                text: r.text.trim().to_string(),
                object_ids: r.object_ids,
            })
            .collect(),
    };
    doc.validate()?;
    Ok(doc)
}

/// Parses line-delimited JSON scene-graph records. Blank lines are skipped.
pub fn parse_scene_graphs(text: &str) -> Result<Vec<SceneGraphDocument>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_record(i + 1, l))
        .collect()
}

pub fn load_scene_graphs(path: &Path) -> Result<Vec<SceneGraphDocument>> {
    parse_scene_graphs(&crate::io::read_to_string(path)?)
}

/// Frequency thresholds for [`filter_entities`]. A threshold of zero behaves
/// like one, since every retained object contributes at least one mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterThresholds {
    pub min_total: usize,
    pub min_per_doc: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            min_total: 1000,
            min_per_doc: 5,
        }
    }
}

/// Keeps only entities that are in `vocab` (all names when `None`) and are
/// mentioned at least `min_total` times corpus-wide and `min_per_doc` times in
/// the document at hand. Removed objects take their relationships and region
/// mentions with them; documents left with fewer than two distinct entities
/// are dropped.
///
/// Dropping a document lowers the corpus totals of its remaining entities, so
/// the pass repeats until nothing changes. The result is a fixpoint and
/// filtering again is a no-op.
pub fn filter_entities(
    docs: &[SceneGraphDocument],
    vocab: Option<&HashSet<String>>,
    thresholds: FilterThresholds,
) -> Vec<SceneGraphDocument> {
    let mut current = docs.to_vec();
    loop {
        let per_doc: Vec<BTreeMap<String, usize>> = current
            .iter()
            .map(SceneGraphDocument::mention_counts)
            .collect();
        let mut totals: HashMap<&str, usize> = HashMap::new();
        for counts in &per_doc {
            for (name, c) in counts {
                *totals.entry(name.as_str()).or_default() += c;
            }
        }
        let next: Vec<SceneGraphDocument> = current
            .iter()
            .zip(&per_doc)
            .filter_map(|(doc, counts)| {
                let keep = |name: &str| {
                    vocab.is_none_or(|v| v.contains(name))
                        && totals.get(name).copied().unwrap_or(0) >= thresholds.min_total
                        && counts.get(name).copied().unwrap_or(0) >= thresholds.min_per_doc
                };
                retain_entities(doc, keep)
            })
            .collect();
        if next == current {
            return next;
        }
        current = next;
    }
}

fn retain_entities(
    doc: &SceneGraphDocument,
    keep: impl Fn(&str) -> bool,
) -> Option<SceneGraphDocument> {
    let objects: Vec<SceneObject> = doc
        .objects
        .iter()
        .filter(|o| keep(&o.name))
        .cloned()
        .collect();
    let kept: HashSet<&str> = objects.iter().map(|o| o.id.as_str()).collect();
    let distinct: HashSet<&str> = objects.iter().map(|o| o.name.as_str()).collect();
    if distinct.len() < 2 {
        return None;
    }
    let relationships = doc
        .relationships
        .iter()
        .filter(|r| kept.contains(r.subject.as_str()) && kept.contains(r.object.as_str()))
        .cloned()
        .collect();
    let regions = doc
        .regions
        .iter()
        .map(|r| Region {
            text: r.text.clone(),
            object_ids: r
                .object_ids
                .iter()
                .filter(|id| kept.contains(id.as_str()))
                .cloned()
                .collect(),
        })
        .collect();
    Some(SceneGraphDocument {
        doc_id: doc.doc_id.clone(),
        objects,
        relationships,
        regions,
    })
}

/// Reads a vocabulary file: one entity name per line, `#` comments allowed.
pub fn load_vocab(path: &Path) -> Result<HashSet<String>> {
    Ok(crate::io::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_name)
        .collect())
}
