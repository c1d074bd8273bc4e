//! Random networks and inputs for property checks and the verify suites.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::{Activation, Edge, LayeredNet, Matrix, Network, Node, NodeId, Role};

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, gaussian_vector(rng, rows * cols)).expect("finite gaussian entries")
}

/// Fully connected net `input_dim → hidden[0] → … → 1` with standard normal
/// weights.
pub fn random_layered(
    rng: &mut impl Rng,
    input_dim: usize,
    hidden: &[usize],
    activation: Activation,
) -> LayeredNet {
    let mut cols = input_dim;
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    for &rows in hidden.iter().chain(std::iter::once(&1)) {
        layers.push(gaussian_matrix(rng, rows, cols));
        cols = rows;
    }
    LayeredNet::new(layers, activation).expect("chained shapes")
}

/// Random DAG in which every hidden node lies on an input→output path.
///
/// Nodes are numbered inputs first, then hidden, then the output; edges only
/// go from lower to higher ids, so skip connections appear freely. Each
/// hidden node gets one edge from an earlier node and one to a later node,
/// then random extra edges are added up to `max_edges`. The hidden count is
/// capped so the spine fits into the edge budget.
pub fn random_dag(
    rng: &mut impl Rng,
    num_inputs: usize,
    hidden: usize,
    max_edges: usize,
    activation: Activation,
) -> Network {
    assert!(num_inputs >= 1 && max_edges >= 1);
    let hidden = hidden.min((max_edges - 1) / 2);
    let total = num_inputs + hidden + 1;
    let output = total - 1;
    let mut nodes: Vec<Node> = (0..num_inputs)
        .map(|i| Node {
            id: NodeId(i),
            role: Role::Input(i),
        })
        .collect();
    nodes.extend((num_inputs..output).map(|i| Node {
        id: NodeId(i),
        role: Role::Hidden,
    }));
    nodes.push(Node {
        id: NodeId(output),
        role: Role::Output,
    });

    let mut pairs = std::collections::BTreeSet::new();
    for h in num_inputs..output {
        pairs.insert((rng.random_range(0..h), h));
        pairs.insert((h, rng.random_range(h + 1..total)));
    }
    if !pairs.iter().any(|&(_, d)| d == output) {
        pairs.insert((rng.random_range(0..output), output));
    }
    let candidates: Vec<(usize, usize)> = (0..output)
        .flat_map(|s| ((s + 1).max(num_inputs)..total).map(move |d| (s, d)))
        .collect();
    let mut attempts = 0;
    while pairs.len() < max_edges && attempts < 4 * max_edges {
        if let Some(&pair) = candidates.choose(rng) {
            pairs.insert(pair);
        }
        attempts += 1;
    }
    let edges = pairs
        .into_iter()
        .map(|(s, d)| Edge {
            src: NodeId(s),
            dst: NodeId(d),
            weight: gaussian(rng),
        })
        .collect();
    Network::new(num_inputs, activation, false, nodes, edges).expect("valid random DAG")
}
