use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{InteractionGraph, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankParams {
    pub damping: f64,
    /// Stop once the L1 change between sweeps drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Centrality {
    /// Sum of incoming edge weights.
    pub in_degree: u64,
    /// Sum of outgoing edge weights.
    pub out_degree: u64,
    pub pagerank: f64,
}

/// PageRank over weighted adjacency lists of `n` nodes.
///
/// `adj[i]` lists `(j, w)` for edges `i → j`. Transitions are proportional
/// to weight; nodes without outgoing weight spread their mass uniformly.
pub fn pagerank(n: usize, adj: &[Vec<(usize, f64)>], params: PageRankParams) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let d = params.damping;
    let nf = n as f64;
    let out_weight: Vec<f64> = adj.iter().map(|es| es.iter().map(|e| e.1).sum()).collect();
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] <= 0.0).map(|i| rank[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (i, edges) in adj.iter().enumerate() {
            if out_weight[i] > 0.0 {
                let share = d * rank[i] / out_weight[i];
                for &(j, w) in edges {
                    next[j] += share * w;
                }
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < params.tol {
            break;
        }
    }
    rank
}

/// Degrees and PageRank for every node of the graph.
pub fn centrality(
    graph: &InteractionGraph,
    params: PageRankParams,
) -> Result<BTreeMap<String, Centrality>, NetworkError> {
    if graph.is_empty() {
        return Err(NetworkError::EmptyGraph);
    }
    let index: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = graph.nodes.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut in_deg = vec![0u64; n];
    let mut out_deg = vec![0u64; n];
    for e in &graph.edges {
        let (i, j) = (index[e.from.as_str()], index[e.to.as_str()]);
        adj[i].push((j, e.weight as f64));
        out_deg[i] += e.weight;
        in_deg[j] += e.weight;
    }
    let ranks = pagerank(n, &adj, params);
    Ok(graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, id)| {
            (
                id.clone(),
                Centrality {
                    in_degree: in_deg[i],
                    out_degree: out_deg[i],
                    pagerank: ranks[i],
                },
            )
        })
        .collect())
}

/// The `n` highest-PageRank nodes; ties by in-degree, then id.
pub fn top_influencers(
    metrics: &BTreeMap<String, Centrality>,
    n: usize,
) -> Vec<(String, Centrality)> {
    let mut ranked: Vec<(String, Centrality)> =
        metrics.iter().map(|(k, v)| (k.clone(), *v)).collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        b.pagerank
            .total_cmp(&a.pagerank)
            .then(b.in_degree.cmp(&a.in_degree))
            .then_with(|| ia.cmp(ib))
    });
    ranked.truncate(n);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EdgeKind;

    fn graph(nodes: &[&str], edges: &[(&str, &str, u64)]) -> InteractionGraph {
        InteractionGraph::from_edges(
            nodes.iter().map(|s| s.to_string()),
            edges
                .iter()
                .map(|(a, b, w)| (a.to_string(), b.to_string(), EdgeKind::Reply, *w)),
        )
    }

    /// Dense-matrix power iteration to a much tighter tolerance.
    fn dense_oracle(n: usize, edges: &[(usize, usize, f64)], d: f64) -> Vec<f64> {
        let mut m = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            m[i][j] += w;
        }
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            let out: f64 = m[i].iter().sum();
            for j in 0..n {
                let p = if out > 0.0 { m[i][j] / out } else { 1.0 / n as f64 };
                g[i][j] = d * p + (1.0 - d) / n as f64;
            }
        }
        let mut r = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| r[i] * g[i][j]).sum()).collect();
            let delta: f64 = r.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            r = next;
            if delta < 1e-15 {
                break;
            }
        }
        r
    }

    #[test]
    fn two_cycle_is_even() {
        let c = centrality(&graph(&[], &[("A", "B", 1), ("B", "A", 1)]), PageRankParams::default()).unwrap();
        assert!((c["A"].pagerank - 0.5).abs() < 1e-12);
        assert!((c["B"].pagerank - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_nodes_are_uniform() {
        let c = centrality(&graph(&["A", "B", "C"], &[]), PageRankParams::default()).unwrap();
        for v in c.values() {
            assert!((v.pagerank - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn star_hub_wins_and_matches_oracle() {
        let g = graph(&[], &[("A", "H", 1), ("B", "H", 1), ("C", "H", 1)]);
        let c = centrality(&g, PageRankParams::default()).unwrap();
        let hub = c["H"].pagerank;
        assert!(c.iter().filter(|(k, _)| *k != "H").all(|(_, v)| v.pagerank < hub));
        // nodes sorted: A B C H
        let oracle = dense_oracle(4, &[(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)], 0.85);
        for (i, id) in ["A", "B", "C", "H"].iter().enumerate() {
            assert!((c[*id].pagerank - oracle[i]).abs() < 1e-6);
        }
        assert_eq!(top_influencers(&c, 10)[0].0, "H");
        assert_eq!(top_influencers(&c, 10).len(), 4);
    }

    #[test]
    fn empty_graph_errors() {
        let err = centrality(&InteractionGraph::default(), PageRankParams::default()).unwrap_err();
        assert_eq!(err.code(), "EMPTY_GRAPH");
    }

    #[test]
    fn weights_shift_mass() {
        let g = graph(&[], &[("A", "B", 3), ("A", "C", 1)]);
        let c = centrality(&g, PageRankParams::default()).unwrap();
        assert!(c["B"].pagerank > c["C"].pagerank);
        assert_eq!(c["A"].out_degree, 4);
        assert_eq!(c["B"].in_degree, 3);
    }

    #[test]
    fn two_community_hubs_lead() {
        let mut edges = Vec::new();
        let names: Vec<String> = (0..10).map(|i| format!("a{i}")).chain((0..10).map(|i| format!("b{i}"))).collect();
        for i in 1..10 {
            edges.push((names[i].clone(), names[0].clone(), 1));
            edges.push((names[10 + i].clone(), names[10].clone(), 1));
            edges.push((names[i].clone(), names[(i % 9) + 1].clone(), 1));
        }
        edges.push((names[0].clone(), names[10].clone(), 1));
        edges.push((names[10].clone(), names[0].clone(), 1));
        let g = InteractionGraph::from_edges(
            Vec::new(),
            edges.into_iter().map(|(a, b, w)| (a, b, EdgeKind::Mention, w)),
        );
        let c = centrality(&g, PageRankParams::default()).unwrap();
        let top: Vec<_> = top_influencers(&c, 3).into_iter().map(|(id, _)| id).collect();
        assert!(top.contains(&"a0".to_string()) && top.contains(&"b0".to_string()), "{top:?}");
    }

    #[test]
    fn relabeling_preserves_score_multiset() {
        let g1 = graph(&[], &[("A", "B", 2), ("B", "C", 1), ("C", "A", 1), ("D", "A", 1)]);
        let g2 = graph(&[], &[("z", "y", 2), ("y", "x", 1), ("x", "z", 1), ("w", "z", 1)]);
        let mut s1: Vec<f64> = centrality(&g1, PageRankParams::default()).unwrap().values().map(|c| c.pagerank).collect();
        let mut s2: Vec<f64> = centrality(&g2, PageRankParams::default()).unwrap().values().map(|c| c.pagerank).collect();
        s1.sort_by(f64::total_cmp);
        s2.sort_by(f64::total_cmp);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s1.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
