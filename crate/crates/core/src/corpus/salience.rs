//! Degree-centrality salience over the per-image entity graph.

use std::collections::{BTreeMap, BTreeSet};

use super::{Region, SceneGraphDocument};
use crate::error::{Error, Result};

/// Undirected, unweighted graph over the entity names of one document.
/// Parallel relationships collapse into a single edge; relationships between
/// two objects of the same name are not edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SalienceGraph {
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

impl SalienceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) {
        self.adjacency.entry(name.to_string()).or_default();
    }

    pub fn add_edge(&mut self, a: &str, b: &str) {
        self.add_node(a);
        self.add_node(b);
        if a == b {
            return;
        }
        self.adjacency.get_mut(a).unwrap().insert(b.to_string());
        self.adjacency.get_mut(b).unwrap().insert(a.to_string());
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(String::as_str)
    }

    pub fn neighbors(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.adjacency.get(name)
    }

    pub fn contains_edge(&self, a: &str, b: &str) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(b))
    }

    /// Number of distinct neighbours; zero for unknown names.
    pub fn degree(&self, name: &str) -> usize {
        self.adjacency.get(name).map_or(0, BTreeSet::len)
    }

    /// Each undirected edge once, as a lexicographically sorted pair, in
    /// ascending pair order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.adjacency.iter().flat_map(|(a, ns)| {
            ns.iter()
                .filter(move |b| a.as_str() < b.as_str())
                .map(move |b| (a.as_str(), b.as_str()))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }
}

/// Builds the salience graph: every object name is a node, every
/// relationship links the names of its endpoints.
pub fn build_salience_graph(doc: &SceneGraphDocument) -> Result<SalienceGraph> {
    if doc.relationships.is_empty() {
        return Err(Error::NoSalienceStructure {
            doc_id: doc.doc_id.clone(),
        });
    }
    let mut graph = SalienceGraph::new();
    for o in &doc.objects {
        graph.add_node(&o.name);
    }
    for rel in &doc.relationships {
        let (Some(s), Some(o)) = (doc.object(&rel.subject), doc.object(&rel.object)) else {
            continue;
        };
        graph.add_edge(&s.name, &o.name);
    }
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Headline {
    /// The winning edge as a sorted pair.
    pub pair: (String, String),
    pub text: String,
    /// The pair in the order the entities appear in `text`.
    pub entities: Vec<String>,
    /// Whether `text` is a region caption (true) or a template (false).
    pub from_region: bool,
}

/// Picks the linked pair with the largest total degree. Ties go to the
/// lexicographically smallest sorted pair. When `prefer_region` is set the
/// text is the shortest region caption mentioning both entities, otherwise
/// (or when no such region exists) it is `"<subject> <predicate> <object>"`
/// from the first relationship connecting them.
pub fn extract_headline(
    graph: &SalienceGraph,
    doc: &SceneGraphDocument,
    prefer_region: bool,
) -> Result<Headline> {
    let mut best: Option<((&str, &str), usize)> = None;
    for (a, b) in graph.edges() {
        let total = graph.degree(a) + graph.degree(b);
        if best.is_none_or(|(_, t)| total > t) {
            best = Some(((a, b), total));
        }
    }
    let ((a, b), _) = best.ok_or_else(|| Error::Document {
        doc_id: doc.doc_id.clone(),
        message: "salience graph has no edge".into(),
    })?;
    let pair = (a.to_string(), b.to_string());

    if prefer_region {
        let caption = doc
            .regions
            .iter()
            .filter(|r| {
                let names = mentions_set(doc, r);
                names.contains(a) && names.contains(b)
            })
            .min_by_key(|r| r.text.chars().count());
        if let Some(region) = caption {
            let entities = order_by_text(&region.text, [a, b]);
            return Ok(Headline {
                pair,
                text: region.text.clone(),
                entities,
                from_region: true,
            });
        }
    }

    let rel = doc
        .relationships
        .iter()
        .find_map(|r| {
            let s = doc.object(&r.subject)?;
            let o = doc.object(&r.object)?;
            let hit = (s.name == a && o.name == b) || (s.name == b && o.name == a);
            hit.then_some((s.name.as_str(), r.predicate.as_str(), o.name.as_str()))
        })
        .expect("edge without relationship");
    Ok(Headline {
        pair,
        text: format!("{} {} {}", rel.0, rel.1, rel.2),
        entities: vec![rel.0.to_string(), rel.2.to_string()],
        from_region: false,
    })
}

fn mentions_set<'a>(doc: &'a SceneGraphDocument, region: &Region) -> BTreeSet<&'a str> {
    region
        .object_ids
        .iter()
        .filter_map(|id| doc.object(id).map(|o| o.name.as_str()))
        .collect()
}

/// Orders names by their first occurrence in `text`; names not found keep
/// their given order after the found ones.
fn order_by_text<const N: usize>(text: &str, names: [&str; N]) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut keyed: Vec<(usize, usize, &str)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let needle = n.replace('_', " ");
            let pos = lower
                .find(n)
                .or_else(|| lower.find(&needle))
                .unwrap_or(usize::MAX);
            (pos, i, *n)
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, _, n)| n.to_string()).collect()
}

/// Scores a candidate region for summary selection.
pub trait RegionScorer {
    fn score(&self, graph: &SalienceGraph, entities: &BTreeSet<String>) -> f64;
}

/// Sum of degree centrality over the distinct entities a region mentions.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegreeSum;

impl RegionScorer for DegreeSum {
    fn score(&self, graph: &SalienceGraph, entities: &BTreeSet<String>) -> f64 {
        entities.iter().map(|e| graph.degree(e) as f64).sum()
    }
}

/// One selected summary sentence: region text plus the entity names it
/// mentions, in mention order.
pub type SelectedSentence = (String, Vec<String>);

/// Greedy salience-ranked summary. Regions that mention at least one entity
/// are ranked by `scorer` (stable, so ties keep region order) and taken in
/// turn unless every entity they mention is already covered. Selection stops
/// at `max_sentences`. If fewer than `min_sentences` regions mention any
/// entity, all of them are returned in rank order.
pub fn extract_summary<S: RegionScorer + ?Sized>(
    graph: &SalienceGraph,
    doc: &SceneGraphDocument,
    min_sentences: usize,
    max_sentences: usize,
    scorer: &S,
) -> Result<Vec<SelectedSentence>> {
    if doc.regions.is_empty() {
        return Err(Error::Document {
            doc_id: doc.doc_id.clone(),
            message: "no regions to summarize".into(),
        });
    }
    let mut candidates: Vec<(f64, &Region, Vec<String>, BTreeSet<String>)> = doc
        .regions
        .iter()
        .filter_map(|r| {
            let mentions = doc.region_mentions(r);
            if mentions.is_empty() {
                return None;
            }
            let set: BTreeSet<String> = mentions.iter().cloned().collect();
            Some((scorer.score(graph, &set), r, mentions, set))
        })
        .collect();
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));

    if candidates.len() < min_sentences {
        return Ok(candidates
            .into_iter()
            .map(|(_, r, m, _)| (r.text.clone(), m))
            .collect());
    }

    let mut covered: BTreeSet<String> = BTreeSet::new();
    let mut selected = Vec::new();
    for (_, region, mentions, set) in candidates {
        if selected.len() >= max_sentences {
            break;
        }
        if set.is_subset(&covered) {
            continue;
        }
        covered.extend(set);
        selected.push((region.text.clone(), mentions));
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{obj, region, rel};

    fn doc(rels: &[(&str, &str, &str)], regions: Vec<Region>) -> SceneGraphDocument {
        let mut names: Vec<&str> = rels.iter().flat_map(|(s, _, o)| [*s, *o]).collect();
        for r in &regions {
            names.extend(r.object_ids.iter().map(String::as_str));
        }
        names.sort();
        names.dedup();
        SceneGraphDocument {
            doc_id: "t".into(),
            objects: names.iter().map(|n| obj(n, n)).collect(),
            relationships: rels.iter().map(|(s, p, o)| rel(s, p, o)).collect(),
            regions,
        }
    }

    #[test]
    fn single_edge() {
        let g = build_salience_graph(&doc(&[("a", "on", "b")], vec![])).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(g.edges().collect::<Vec<_>>(), [("a", "b")]);
        assert_eq!((g.degree("a"), g.degree("b")), (1, 1));
    }

    #[test]
    fn path_degrees() {
        let g =
            build_salience_graph(&doc(&[("a", "on", "b"), ("b", "near", "c")], vec![])).unwrap();
        assert_eq!((g.degree("a"), g.degree("b"), g.degree("c")), (1, 2, 1));
    }

    #[test]
    fn parallel_relationships_collapse() {
        let g =
            build_salience_graph(&doc(&[("a", "on", "b"), ("b", "under", "a")], vec![])).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!((g.degree("a"), g.degree("b")), (1, 1));
    }

    #[test]
    fn no_relationships_is_an_error() {
        let err = build_salience_graph(&doc(&[], vec![region("x", &["x"])])).unwrap_err();
        assert!(err.to_string().contains("no salience structure"));
    }

    #[test]
    fn path_tie_breaks_to_smallest_pair() {
        let d = doc(&[("b", "on", "c"), ("a", "on", "b")], vec![]);
        let g = build_salience_graph(&d).unwrap();
        // totals: a-b = 1+2, b-c = 2+1
        let h = extract_headline(&g, &d, true).unwrap();
        assert_eq!(h.pair, ("a".into(), "b".into()));
        assert_eq!(h.text, "a on b");
        assert!(!h.from_region);
    }

    #[test]
    fn star_tie_breaks_to_l1_s() {
        let d = doc(
            &[("s", "has", "l3"), ("s", "has", "l2"), ("s", "has", "l1")],
            vec![],
        );
        let g = build_salience_graph(&d).unwrap();
        let h = extract_headline(&g, &d, true).unwrap();
        assert_eq!(h.pair, ("l1".into(), "s".into()));
        assert_eq!(h.entities, ["s", "l1"]);
    }

    #[test]
    fn headline_prefers_shortest_caption() {
        let d = doc(
            &[("x", "near", "y")],
            vec![
                region("a long caption about y and x together", &["x", "y"]),
                region("y by x", &["y", "x"]),
                region("x", &["x"]),
            ],
        );
        let g = build_salience_graph(&d).unwrap();
        let h = extract_headline(&g, &d, true).unwrap();
        assert_eq!(h.text, "y by x");
        assert_eq!(h.entities, ["y", "x"]);
        assert!(h.from_region);
        let t = extract_headline(&g, &d, false).unwrap();
        assert_eq!(t.text, "x near y");
    }

    #[test]
    fn self_loops_only_means_no_headline() {
        let mut d = doc(&[("a", "on", "b")], vec![]);
        d.objects[1].name = "a".into();
        let g = build_salience_graph(&d).unwrap();
        assert!(extract_headline(&g, &d, true).is_err());
    }

    #[test]
    fn headline_is_optimal_by_enumeration() {
        let d = doc(
            &[
                ("a", "r", "b"),
                ("a", "r", "c"),
                ("c", "r", "d"),
                ("d", "r", "e"),
                ("c", "r", "e"),
                ("e", "r", "f"),
            ],
            vec![],
        );
        let g = build_salience_graph(&d).unwrap();
        let h = extract_headline(&g, &d, false).unwrap();
        let chosen = g.degree(&h.pair.0) + g.degree(&h.pair.1);
        for (x, y) in g.edges() {
            assert!(g.degree(x) + g.degree(y) <= chosen);
        }
        // c and e both have degree 3
        assert_eq!(h.pair, ("c".into(), "e".into()));
    }

    #[test]
    fn summary_skips_redundant_regions() {
        // degrees: a=4 (b,c,d,e), b=2, c=2, d=1, e=1 ... build disjoint sets
        // scoring 8, 6, 6, 2 via hand-chosen degrees.
        //   p: deg 4 (q1..q4)      -> region {p, r} with r deg 4 => 8
        //   s: deg 3, t: deg 3     -> region {s, t} => 6
        //   u: deg 3, v: deg 3     -> region {u, v} => 6
        //   w: deg 2               -> region {w} => 2
        let rels = [
            ("p", "x", "q1"),
            ("p", "x", "q2"),
            ("p", "x", "q3"),
            ("p", "x", "q4"),
            ("r", "x", "q1"),
            ("r", "x", "q2"),
            ("r", "x", "q3"),
            ("r", "x", "q4"),
            ("s", "x", "t"),
            ("s", "x", "q5"),
            ("s", "x", "q6"),
            ("t", "x", "q5"),
            ("t", "x", "q6"),
            ("u", "x", "v"),
            ("u", "x", "q7"),
            ("u", "x", "q8"),
            ("v", "x", "q7"),
            ("v", "x", "q8"),
            ("w", "x", "q9"),
            ("w", "x", "q10"),
        ];
        let regions = vec![
            region("w alone", &["w"]),
            region("p and r", &["p", "r"]),
            region("dup p", &["p"]),
            region("s and t", &["s", "t"]),
            region("dup r p", &["r", "p"]),
            region("u and v", &["u", "v"]),
            region("dup t", &["t"]),
            region("dup v u", &["v", "u"]),
            region("dup w", &["w"]),
            region("dup s", &["s"]),
        ];
        let d = doc(&rels, regions);
        let g = build_salience_graph(&d).unwrap();
        let scores: Vec<usize> = ["p", "r", "s", "t", "u", "v", "w"]
            .iter()
            .map(|n| g.degree(n))
            .collect();
        assert_eq!(scores, [4, 4, 3, 3, 3, 3, 2]);
        let out = extract_summary(&g, &d, 3, 5, &DegreeSum).unwrap();
        let texts: Vec<&str> = out.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(texts, ["p and r", "s and t", "u and v", "w alone"]);
    }

    #[test]
    fn fewer_than_min_returns_all() {
        let d = doc(
            &[("a", "on", "b")],
            vec![region("a", &["a"]), region("again a", &["a"])],
        );
        let g = build_salience_graph(&d).unwrap();
        assert_eq!(extract_summary(&g, &d, 3, 5, &DegreeSum).unwrap().len(), 2);
    }

    #[test]
    fn total_redundancy_yields_one_sentence() {
        let d = doc(
            &[("a", "on", "b")],
            vec![
                region("a one", &["a"]),
                region("a two", &["a"]),
                region("a three", &["a"]),
                region("a four", &["a"]),
            ],
        );
        let g = build_salience_graph(&d).unwrap();
        let out = extract_summary(&g, &d, 3, 5, &DegreeSum).unwrap();
        assert_eq!(out, vec![("a one".to_string(), vec!["a".to_string()])]);
    }

    #[test]
    fn summary_caps_at_max() {
        let rels: Vec<(String, String)> = (0..8).map(|i| ("hub".into(), format!("n{i}"))).collect();
        let rels: Vec<(&str, &str, &str)> = rels
            .iter()
            .map(|(a, b)| (a.as_str(), "x", b.as_str()))
            .collect();
        let names: Vec<String> = (0..8).map(|i| format!("n{i}")).collect();
        let regions = names.iter().map(|n| region(n, &[n.as_str()])).collect();
        let d = doc(&rels, regions);
        let g = build_salience_graph(&d).unwrap();
        assert_eq!(extract_summary(&g, &d, 3, 5, &DegreeSum).unwrap().len(), 5);
    }

    #[test]
    fn zero_regions_is_an_error() {
        let d = doc(&[("a", "on", "b")], vec![]);
        let g = build_salience_graph(&d).unwrap();
        assert!(extract_summary(&g, &d, 3, 5, &DegreeSum).is_err());
    }
}
