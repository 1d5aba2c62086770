use std::collections::HashSet;

use super::{ProductGraph, RawTriple};

/// Drop every training triple that mentions a title or value text appearing in
/// any test triple, so train and test entities are disjoint. Attribute ids are
/// kept; entity sets and the vocabulary are rebuilt from what remains.
pub fn build_inductive_split(graph: &ProductGraph, test: &[RawTriple]) -> ProductGraph {
    let test_entities: HashSet<&str> = test
        .iter()
        .flat_map(|t| [t.title.as_str(), t.value.as_str()])
        .collect();
    let kept = graph
        .triples()
        .iter()
        .filter(|t| !test_entities.contains(t.title.as_str()) && !test_entities.contains(t.value.as_str()))
        .cloned()
        .collect();
    ProductGraph::assemble(kept, graph.attributes().to_vec(), graph.stopwords().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Stopwords;

    fn graph(rows: &[(&str, &str, &str)]) -> ProductGraph {
        let raw = rows.iter().map(|(t, a, v)| RawTriple::new(*t, *a, *v)).collect();
        ProductGraph::from_raw(raw, Stopwords::none()).unwrap()
    }

    #[test]
    fn shared_title_removed() {
        let g = graph(&[("p1", "a", "v1"), ("p2", "a", "v2")]);
        let out = build_inductive_split(&g, &[RawTriple::new("p1", "a", "v3")]);
        assert_eq!(out.len(), 1);
        assert_eq!(out.triples()[0].title, "p2");
    }

    #[test]
    fn shared_value_removed() {
        let g = graph(&[("p1", "a", "v1"), ("p2", "a", "v2")]);
        let out = build_inductive_split(&g, &[RawTriple::new("p9", "a", "v2")]);
        assert_eq!(out.len(), 1);
        assert_eq!(out.triples()[0].value, "v1");
    }

    #[test]
    fn disjoint_test_is_identity() {
        let g = graph(&[("p1", "a", "v1"), ("p2", "a", "v2")]);
        let out = build_inductive_split(&g, &[RawTriple::new("p9", "a", "v9")]);
        assert_eq!(out, g);
    }
}
