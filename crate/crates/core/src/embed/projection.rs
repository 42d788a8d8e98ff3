use crate::graph::{Graph, NodeLabel, RelationType};

/// Undirected weighted graph over Manufacturer and Service nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    ids: Vec<String>,
    labels: Vec<NodeLabel>,
    /// Neighbors sorted by index, with edge weights.
    adj: Vec<Vec<(u32, f64)>>,
}

impl Projection {
    /// Builds from explicit undirected edges `(a, b, weight)`; repeated pairs
    /// keep the larger weight and self-loops are ignored.
    pub fn from_edges(ids: Vec<String>, labels: Vec<NodeLabel>, edges: &[(usize, usize, f64)]) -> Self {
        assert_eq!(ids.len(), labels.len(), "one label per id");
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ids.len()];
        for &(a, b, w) in edges {
            if a == b {
                continue;
            }
            adj[a].push((b as u32, w));
            adj[b].push((a as u32, w));
        }
        for row in &mut adj {
            row.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.total_cmp(&x.1)));
            row.dedup_by_key(|e| e.0);
        }
        Projection { ids, labels, adj }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn label(&self, i: usize) -> NodeLabel {
        self.labels[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let row = &self.adj[a];
        row.binary_search_by_key(&(b as u32), |e| e.0).ok().map(|k| row[k].1)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.weight(a, b).is_some()
    }

    /// Manufacturers with no incident edge.
    pub fn isolated_manufacturers(&self) -> Vec<&str> {
        (0..self.len())
            .filter(|&i| self.labels[i] == NodeLabel::Manufacturer && self.adj[i].is_empty())
            .map(|i| self.ids[i].as_str())
            .collect()
    }
}

/// Manufacturer and Service nodes (in graph order) joined by `provides` and
/// `subclass_of` edges, direction dropped, weights kept.
pub fn build_projection(graph: &Graph) -> Projection {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut slot = vec![usize::MAX; graph.node_count()];
    for idx in graph.node_indices() {
        let n = graph.node_at(idx);
        if matches!(n.label, NodeLabel::Manufacturer | NodeLabel::Service) {
            slot[idx.index()] = ids.len();
            ids.push(n.id.clone());
            labels.push(n.label);
        }
    }
    let mut edges = Vec::new();
    for idx in graph.node_indices() {
        for rel in [RelationType::Provides, RelationType::SubclassOf] {
            for (dst, w) in graph.out_edges(idx, rel) {
                edges.push((slot[idx.index()], slot[dst.index()], w));
            }
        }
    }
    Projection::from_edges(ids, labels, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Node};

    #[test]
    fn single_provides_edge() {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Manufacturer, "a.com")).unwrap();
        g.add_node(Node::new(NodeLabel::Service, "milling")).unwrap();
        g.add_node(Node::new(NodeLabel::Location, "Ohio")).unwrap();
        g.add_node(Node::new(NodeLabel::Manufacturer, "lonely.com")).unwrap();
        g.add_edge(Edge::new("a.com", "milling", RelationType::Provides, 0.8)).unwrap();
        g.add_edge(Edge::new("a.com", "ohio", RelationType::LocatedIn, 1.0)).unwrap();
        let p = build_projection(&g);
        assert_eq!(p.len(), 3);
        assert_eq!(p.edge_count(), 1);
        assert_eq!(p.weight(0, 1), Some(0.8));
        assert_eq!(p.weight(1, 0), Some(0.8));
        assert_eq!(p.isolated_manufacturers(), vec!["lonely.com"]);
    }

    #[test]
    fn locations_only_is_empty() {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Location, "Ohio")).unwrap();
        assert!(build_projection(&g).is_empty());
    }
}
