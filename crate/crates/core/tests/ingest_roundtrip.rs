use mskg_core::graph::{Edge, Graph, Node, NodeLabel, RelationType};
use mskg_core::ingest::{export_graph, load_bytes, load_tables, validate_manifest, ExportFormat, Manifest};
use mskg_core::synthetic::{generate, SyntheticConfig};
use proptest::prelude::*;

const LABELS: [NodeLabel; 4] = [
    NodeLabel::Manufacturer,
    NodeLabel::Service,
    NodeLabel::Certification,
    NodeLabel::Location,
];

fn build(nodes: &[(usize, String, Option<u8>)], edges: &[(usize, usize, usize, u16)]) -> Graph {
    let mut g = Graph::new();
    let mut ids: Vec<(NodeLabel, String)> = Vec::new();
    for (l, name, wd) in nodes {
        let label = LABELS[*l];
        let mut n = Node::new(label, name);
        if let (NodeLabel::Service, Some(q)) = (label, wd) {
            n = n.with_wikidata(format!("Q{q}"));
        }
        if let Ok(id) = g.add_node(n) {
            ids.push((label, id));
        }
    }
    for &(r, a, b, w) in edges {
        let rel = RelationType::ALL[r];
        let (sl, dl) = rel.signature();
        let src: Vec<&String> = ids.iter().filter(|x| x.0 == sl).map(|x| &x.1).collect();
        let dst: Vec<&String> = ids.iter().filter(|x| x.0 == dl).map(|x| &x.1).collect();
        if src.is_empty() || dst.is_empty() {
            continue;
        }
        let _ = g.add_edge(Edge::new(
            src[a % src.len()].clone(),
            dst[b % dst.len()].clone(),
            rel,
            w as f64 / 1000.0,
        ));
    }
    g.freeze();
    g
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    let name = "[a-zA-Z0-9 ._\\-\t\\\\é]{1,12}";
    (
        prop::collection::vec((0usize..4, name, prop::option::of(1u8..50)), 0..25),
        prop::collection::vec((0usize..4, 0usize..100, 0usize..100, 0u16..=1000), 0..60),
    )
        .prop_map(|(n, e)| build(&n, &e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn records_roundtrip(g in graph_strategy()) {
        let bytes = export_graph(&g, ExportFormat::CanonicalRecords);
        let (back, rep) = load_bytes(&bytes, None).unwrap();
        prop_assert_eq!(rep.nodes, g.node_count());
        prop_assert_eq!(rep.relationships, g.edge_count());
        prop_assert_eq!(rep.defaulted_weights, 0);
        prop_assert_eq!(export_graph(&back, ExportFormat::CanonicalRecords), bytes);
        prop_assert_eq!(back.stats(), g.stats());
    }

    #[test]
    fn tables_roundtrip(g in graph_strategy()) {
        let nodes = String::from_utf8(export_graph(&g, ExportFormat::NodeTable)).unwrap();
        let edges = String::from_utf8(export_graph(&g, ExportFormat::EdgeTable)).unwrap();
        let back = load_tables(&nodes, &edges).unwrap();
        prop_assert_eq!(
            export_graph(&back, ExportFormat::CanonicalRecords),
            export_graph(&g, ExportFormat::CanonicalRecords)
        );
        back.validate().unwrap();
    }

    #[test]
    fn loading_is_idempotent_on_its_own_output(g in graph_strategy()) {
        let once = export_graph(&g, ExportFormat::CanonicalRecords);
        let (a, ra) = load_bytes(&once, None).unwrap();
        let (b, rb) = load_bytes(&once, None).unwrap();
        prop_assert_eq!(ra, rb);
        prop_assert_eq!(export_graph(&a, ExportFormat::EdgeTable), export_graph(&b, ExportFormat::EdgeTable));
    }
}

#[test]
fn synthetic_full_scale_loads_against_manifest() {
    let s = generate(&SyntheticConfig::default()).unwrap();
    let bytes = export_graph(&s.graph, ExportFormat::CanonicalRecords);
    let m = Manifest::table3();
    let (g, rep) = load_bytes(&bytes, Some(&m)).unwrap();
    assert!(validate_manifest(&g, &m).is_clean());
    assert_eq!(rep.nodes as u64, m.total_nodes());
    assert_eq!(rep.sha256.len(), 64);
}
