//! Affinity propagation against labels frozen from scikit-learn on the same
//! similarity matrices and preference.

use perceptrace::eval::{
    affinity_propagation, median_off_diagonal, negative_squared_distances, AffinityConfig,
    ClusteringResult, Preference,
};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    points: Vec<Vec<f64>>,
    preference: f64,
    labels: Vec<usize>,
    exemplars: Vec<usize>,
}

#[derive(Deserialize)]
struct Reference {
    cases: Vec<Case>,
}

fn load() -> Reference {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ap_reference.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn same_partition(ours: &ClusteringResult, theirs: &[usize]) -> bool {
    let n = theirs.len();
    (0..n).all(|i| (0..n).all(|j| (ours.labels[i] == ours.labels[j]) == (theirs[i] == theirs[j])))
}

#[test]
fn matches_frozen_labels() {
    for case in load().cases {
        let s = negative_squared_distances(&case.points);
        let median = median_off_diagonal(&s);
        assert!(
            (median - case.preference).abs() <= 1e-9 * case.preference.abs().max(1.0),
            "{}: {median} vs {}",
            case.name,
            case.preference
        );
        let cfg = AffinityConfig {
            preference: Preference::Value(case.preference),
            ..AffinityConfig::default()
        };
        let r = affinity_propagation(&s, &cfg).unwrap();
        assert!(r.converged, "{}", case.name);
        assert_eq!(r.n_clusters, case.exemplars.len(), "{}", case.name);
        assert!(
            same_partition(&r, &case.labels),
            "{}: {:?} vs {:?}",
            case.name,
            r.labels,
            case.labels
        );
        let mut ours = r.exemplars.clone();
        ours.sort_unstable();
        assert_eq!(ours, case.exemplars, "{}", case.name);
    }
}

#[test]
fn median_preference_is_the_default() {
    for case in load().cases {
        let s = negative_squared_distances(&case.points);
        let by_default = affinity_propagation(&s, &AffinityConfig::default()).unwrap();
        assert!(same_partition(&by_default, &case.labels), "{}", case.name);
    }
}
