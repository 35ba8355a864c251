//! Seeded random instances for property checks and demos.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::calculus::Field;
use crate::error::Result;
use crate::space::{build_graph_space_with_nodes, m_boundary, Domain, Node, Space};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphSpec {
    pub nodes: usize,
    /// Probability of each non-tree edge.
    pub density: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    /// Probability that a node carries a self-loop.
    pub loops: f64,
}

impl GraphSpec {
    pub fn new(nodes: usize) -> Self {
        Self {
            nodes,
            density: 0.25,
            min_weight: 0.1,
            max_weight: 2.0,
            loops: 0.1,
        }
    }
}

/// Random spanning tree plus independent extra edges; always connected.
pub fn random_graph<R: Rng>(rng: &mut R, spec: &GraphSpec) -> Result<Space> {
    let n = spec.nodes.max(2);
    let mut order: Vec<Node> = (0..n).collect();
    order.shuffle(rng);
    let weight = |rng: &mut R| rng.random_range(spec.min_weight..=spec.max_weight);
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        edges.push((parent, order[i], weight(rng)));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(spec.density) {
                edges.push((a, b, weight(rng)));
            }
        }
        if rng.random_bool(spec.loops) {
            edges.push((a, a, weight(rng)));
        }
    }
    build_graph_space_with_nodes(n, &edges)
}

/// Random proper subset of roughly `fraction` of the nodes, at least one.
pub fn random_domain<R: Rng>(rng: &mut R, space: &Space, fraction: f64) -> Result<Domain> {
    let n = space.node_count();
    let mut nodes: Vec<Node> = (0..n).collect();
    nodes.shuffle(rng);
    let k = ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut omega = nodes[..k].to_vec();
    omega.sort_unstable();
    m_boundary(space, &omega)
}

/// Independent uniform values on `nodes`.
pub fn random_field<R: Rng>(rng: &mut R, nodes: &[Node], lo: f64, hi: f64) -> Field {
    Field::from_fn(nodes, |_| rng.random_range(lo..hi))
}
