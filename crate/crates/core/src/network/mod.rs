//! Interaction graphs between authors and influence metrics over them.

mod pagerank;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Post;

pub use pagerank::{centrality, pagerank, top_influencers, Centrality, PageRankParams};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("graph has no nodes")]
    EmptyGraph,
}

impl NetworkError {
    pub fn code(&self) -> &'static str {
        match self {
            NetworkError::EmptyGraph => "EMPTY_GRAPH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Reply,
    Mention,
    Share,
}

/// Directed edge from the interacting author to the author interacted with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionGraph {
    /// Sorted author ids.
    pub nodes: Vec<String>,
    /// Sorted by `(from, to, kind)`.
    pub edges: Vec<Edge>,
}

impl InteractionGraph {
    /// Build from explicit edges; parallel edges of one kind merge.
    pub fn from_edges<I>(nodes: impl IntoIterator<Item = String>, edges: I) -> Self
    where
        I: IntoIterator<Item = (String, String, EdgeKind, u64)>,
    {
        let mut node_set: BTreeSet<String> = nodes.into_iter().collect();
        let mut acc: BTreeMap<(String, String, EdgeKind), u64> = BTreeMap::new();
        for (from, to, kind, weight) in edges {
            node_set.insert(from.clone());
            node_set.insert(to.clone());
            if from != to && weight > 0 {
                *acc.entry((from, to, kind)).or_insert(0) += weight;
            }
        }
        InteractionGraph {
            nodes: node_set.into_iter().collect(),
            edges: acc
                .into_iter()
                .map(|((from, to, kind), weight)| Edge {
                    from,
                    to,
                    kind,
                    weight,
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_weight(&self, from: &str, to: &str, kind: EdgeKind) -> u64 {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to && e.kind == kind)
            .map_or(0, |e| e.weight)
    }
}

/// Reply edges for posts whose parent resolves to another author's post in
/// the same set, and one mention edge per mention. Authorless posts
/// contribute nothing; mentioned accounts become nodes.
pub fn build_graph(posts: &[Post]) -> InteractionGraph {
    let author_of: HashMap<&str, &str> = posts
        .iter()
        .filter_map(|p| p.author.as_deref().map(|a| (p.id.as_str(), a)))
        .collect();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for post in posts {
        let Some(author) = post.author.as_deref() else {
            continue;
        };
        nodes.push(author.to_string());
        if let Some(parent_author) = post
            .parent_id
            .as_deref()
            .and_then(|pid| author_of.get(pid))
        {
            edges.push((author.to_string(), parent_author.to_string(), EdgeKind::Reply, 1));
        }
        for mention in &post.mentions {
            edges.push((author.to_string(), mention.clone(), EdgeKind::Mention, 1));
        }
    }
    InteractionGraph::from_edges(nodes, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub in_degree: u64,
    pub out_degree: u64,
    pub pagerank: f64,
}

/// Node/edge list for force-layout rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
}

pub fn export_graph(graph: &InteractionGraph, metrics: &BTreeMap<String, Centrality>) -> GraphExport {
    GraphExport {
        nodes: graph
            .nodes
            .iter()
            .map(|id| {
                let c = metrics.get(id).copied().unwrap_or_default();
                GraphNode {
                    id: id.clone(),
                    in_degree: c.in_degree,
                    out_degree: c.out_degree,
                    pagerank: c.pagerank,
                }
            })
            .collect(),
        edges: graph.edges.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dataset, PostSchema, SourceFormat};

    pub(crate) fn posts(rows: &[(&str, &str, Option<&str>, &str)]) -> Vec<Post> {
        let mut body = String::from("id,text,timestamp,author,parent_id,mentions\n");
        for (id, author, parent, mentions) in rows {
            body.push_str(&format!(
                "{id},text {id},2024-01-01,{author},{},\"{mentions}\"\n",
                parent.unwrap_or("")
            ));
        }
        parse_dataset(body.as_bytes(), SourceFormat::Csv, &PostSchema::default())
            .unwrap()
            .0
    }

    #[test]
    fn single_reply_edge() {
        let g = build_graph(&posts(&[("1", "A", None, ""), ("2", "B", Some("1"), "")]));
        assert_eq!(g.nodes, ["A", "B"]);
        assert_eq!(
            g.edges,
            vec![Edge {
                from: "B".into(),
                to: "A".into(),
                kind: EdgeKind::Reply,
                weight: 1
            }]
        );
    }

    #[test]
    fn repeated_replies_accumulate() {
        let g = build_graph(&posts(&[
            ("1", "A", None, ""),
            ("2", "B", Some("1"), ""),
            ("3", "B", Some("1"), ""),
        ]));
        assert_eq!(g.edge_weight("B", "A", EdgeKind::Reply), 2);
    }

    #[test]
    fn self_replies_and_self_mentions_dropped() {
        let g = build_graph(&posts(&[("1", "A", None, "@A"), ("2", "A", Some("1"), "")]));
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes, ["A"]);
    }

    #[test]
    fn mentions_create_nodes() {
        let g = build_graph(&posts(&[("1", "A", None, "@B @C")]));
        assert_eq!(g.nodes, ["A", "B", "C"]);
        assert_eq!(g.edge_weight("A", "C", EdgeKind::Mention), 1);
    }

    #[test]
    fn planted_reply_tree() {
        // root r by U0; U1..U4 reply to r; U5, U6 reply to U1's post; U0 replies to U5
        let mut rows = vec![("r", "U0", None, "")];
        let ids = ["a", "b", "c", "d"];
        let authors = ["U1", "U2", "U3", "U4"];
        for (id, author) in ids.iter().zip(authors) {
            rows.push((id, author, Some("r"), ""));
        }
        rows.push(("e", "U5", Some("a"), ""));
        rows.push(("f", "U6", Some("a"), ""));
        rows.push(("g", "U0", Some("e"), ""));
        rows.push(("h", "U5", Some("a"), "@U2"));
        rows.push(("i", "U7", Some("missing"), ""));
        let g = build_graph(&posts(&rows));
        let got: Vec<_> = g
            .edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), e.kind, e.weight))
            .collect();
        assert_eq!(
            got,
            vec![
                ("U0", "U5", EdgeKind::Reply, 1),
                ("U1", "U0", EdgeKind::Reply, 1),
                ("U2", "U0", EdgeKind::Reply, 1),
                ("U3", "U0", EdgeKind::Reply, 1),
                ("U4", "U0", EdgeKind::Reply, 1),
                ("U5", "U1", EdgeKind::Reply, 2),
                ("U5", "U2", EdgeKind::Mention, 1),
                ("U6", "U1", EdgeKind::Reply, 1),
            ]
        );
        assert_eq!(g.nodes.len(), 8);
    }

    #[test]
    fn order_does_not_matter() {
        let mut p = posts(&[
            ("1", "A", None, "@C"),
            ("2", "B", Some("1"), ""),
            ("3", "C", Some("2"), "@A"),
        ]);
        let g = build_graph(&p);
        p.reverse();
        assert_eq!(build_graph(&p), g);
    }
}
