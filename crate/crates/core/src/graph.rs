//! Feedforward networks as weighted DAGs and as layered matrix stacks.
//!
//! A [`Network`] is an arbitrary DAG with `D` input nodes, any number of
//! hidden nodes and a single linear output node. A [`LayeredNet`] is the
//! fully connected special case `f(x) = W_d σ(W_{d-1} σ(… σ(W_1 x)))`.
//! Both are immutable once built; rewrites produce new values.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};

/// Element-wise activation applied at hidden nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `max(z, 0)`
    Relu,
    /// `min(max(z, 0), 1)`
    Ramp,
    /// `z`
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Ramp => z.clamp(0.0, 1.0),
            Activation::Identity => z,
        }
    }

    /// `σ(c·z) = c·σ(z)` for every `c ≥ 0`.
    pub fn is_positively_homogeneous(self) -> bool {
        matches!(self, Activation::Relu | Activation::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Ramp => "ramp",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Input coordinate `i` (zero based).
    Input(usize),
    Hidden,
    Output,
}

impl Role {
    pub fn is_input(self) -> bool {
        matches!(self, Role::Input(_))
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Input(i) => write!(f, "input:{i}"),
            Role::Hidden => f.write_str("hidden"),
            Role::Output => f.write_str("output"),
        }
    }
}

impl std::str::FromStr for Role {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hidden" => Ok(Role::Hidden),
            "output" => Ok(Role::Output),
            _ => s
                .strip_prefix("input:")
                .and_then(|i| i.parse().ok())
                .map(Role::Input)
                .ok_or_else(|| NetError::InvalidNetwork(format!("unknown node role {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// A feedforward network over a weighted DAG.
///
/// Invariants checked at construction: node ids are unique, inputs are
/// exactly `input:0 … input:D-1`, there is one output node, inputs have no
/// incoming edges, the output has no outgoing edges, edges reference
/// existing nodes with no duplicate `(src, dst)` pairs, and the graph is
/// acyclic. Hidden nodes that lie on no input→output path are allowed here
/// and removed by [`crate::rebalance::prune_dead`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct Network {
    num_inputs: usize,
    bias_input: bool,
    activation: Activation,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: BTreeMap<NodeId, usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    order: Vec<usize>,
    inputs: Vec<usize>,
    output: usize,
}

impl Network {
    pub fn new(
        num_inputs: usize,
        activation: Activation,
        bias_input: bool,
        mut nodes: Vec<Node>,
        mut edges: Vec<Edge>,
    ) -> Result<Self> {
        if bias_input && num_inputs == 0 {
            return Err(NetError::InvalidNetwork(
                "bias_input requires at least one input".into(),
            ));
        }
        nodes.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| (e.src, e.dst));

        let mut index = BTreeMap::new();
        let mut inputs = vec![usize::MAX; num_inputs];
        let mut output = None;
        for (pos, node) in nodes.iter().enumerate() {
            if index.insert(node.id, pos).is_some() {
                return Err(NetError::InvalidNetwork(format!(
                    "duplicate node id {}",
                    node.id
                )));
            }
            match node.role {
                Role::Input(i) => {
                    if i >= num_inputs {
                        return Err(NetError::InvalidNetwork(format!(
                            "input index {i} out of range for {num_inputs} inputs"
                        )));
                    }
                    if inputs[i] != usize::MAX {
                        return Err(NetError::InvalidNetwork(format!(
                            "input {i} declared twice"
                        )));
                    }
                    inputs[i] = pos;
                }
                Role::Output => {
                    if output.replace(pos).is_some() {
                        return Err(NetError::InvalidNetwork("more than one output node".into()));
                    }
                }
                Role::Hidden => {}
            }
        }
        if let Some(i) = inputs.iter().position(|&p| p == usize::MAX) {
            return Err(NetError::InvalidNetwork(format!("input {i} missing")));
        }
        let output = output.ok_or_else(|| NetError::InvalidNetwork("no output node".into()))?;

        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if k > 0 && (edges[k - 1].src, edges[k - 1].dst) == (e.src, e.dst) {
                return Err(NetError::InvalidNetwork(format!(
                    "duplicate edge {} -> {}",
                    e.src, e.dst
                )));
            }
            if !e.weight.is_finite() {
                return Err(NetError::InvalidNetwork(format!(
                    "non-finite weight on {} -> {}",
                    e.src, e.dst
                )));
            }
            let s = *index
                .get(&e.src)
                .ok_or_else(|| NetError::InvalidNetwork(format!("unknown node {}", e.src)))?;
            let d = *index
                .get(&e.dst)
                .ok_or_else(|| NetError::InvalidNetwork(format!("unknown node {}", e.dst)))?;
            if nodes[d].role.is_input() {
                return Err(NetError::InvalidNetwork(format!(
                    "input {} has an incoming edge",
                    e.dst
                )));
            }
            if nodes[s].role == Role::Output {
                return Err(NetError::InvalidNetwork(format!(
                    "output {} has an outgoing edge",
                    e.src
                )));
            }
            outgoing[s].push(k);
            incoming[d].push(k);
        }

        let order = topological_positions(&nodes, &edges, &index, &incoming, &outgoing)?;
        Ok(Network {
            num_inputs,
            bias_input,
            activation,
            nodes,
            edges,
            index,
            incoming,
            outgoing,
            order,
            inputs,
            output,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn bias_input(&self) -> bool {
        self.bias_input
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Nodes sorted by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges sorted by `(src, dst)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn role(&self, id: NodeId) -> Option<Role> {
        self.index.get(&id).map(|&p| self.nodes[p].role)
    }

    pub fn output_id(&self) -> NodeId {
        self.nodes[self.output].id
    }

    pub fn input_id(&self, i: usize) -> NodeId {
        self.nodes[self.inputs[i]].id
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        let list = self
            .index
            .get(&id)
            .map(|&p| self.incoming[p].as_slice())
            .unwrap_or(&[]);
        list.iter().map(move |&k| &self.edges[k])
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        let list = self
            .index
            .get(&id)
            .map(|&p| self.outgoing[p].as_slice())
            .unwrap_or(&[]);
        list.iter().map(move |&k| &self.edges[k])
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.index.get(&id).map_or(0, |&p| self.incoming[p].len())
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.index.get(&id).map_or(0, |&p| self.outgoing[p].len())
    }

    /// Deterministic topological order; among ready nodes the smallest id
    /// goes first.
    pub fn topological_order(&self) -> Vec<NodeId> {
        self.order.iter().map(|&p| self.nodes[p].id).collect()
    }

    /// Length (in edges) of the longest directed path.
    pub fn depth(&self) -> usize {
        let mut dist = vec![0usize; self.nodes.len()];
        for &p in &self.order {
            for &k in &self.outgoing[p] {
                let d = self.index[&self.edges[k].dst];
                dist[d] = dist[d].max(dist[p] + 1);
            }
        }
        dist.into_iter().max().unwrap_or(0)
    }

    /// Maximum in-degree over all nodes.
    pub fn width(&self) -> usize {
        self.incoming.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn longest_paths(&self) -> LongestPaths {
        let n = self.nodes.len();
        let mut from_inputs: Vec<Option<usize>> = vec![None; n];
        for &p in &self.inputs {
            from_inputs[p] = Some(0);
        }
        for &p in &self.order {
            if let Some(d) = from_inputs[p] {
                for &k in &self.outgoing[p] {
                    let q = self.index[&self.edges[k].dst];
                    from_inputs[q] = Some(from_inputs[q].map_or(d + 1, |v| v.max(d + 1)));
                }
            }
        }
        let mut to_output: Vec<Option<usize>> = vec![None; n];
        to_output[self.output] = Some(0);
        for &p in self.order.iter().rev() {
            for &k in &self.outgoing[p] {
                let q = self.index[&self.edges[k].dst];
                if let Some(d) = to_output[q] {
                    to_output[p] = Some(to_output[p].map_or(d + 1, |v| v.max(d + 1)));
                }
            }
        }
        LongestPaths {
            ids: self.nodes.iter().map(|n| n.id).collect(),
            from_inputs,
            to_output,
        }
    }

    /// Forward propagation. Hidden nodes apply the activation; the output
    /// node is the plain weighted sum of its inputs.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.num_inputs, self.bias_input)?;
        let mut value = vec![0.0; self.nodes.len()];
        for &p in &self.order {
            value[p] = match self.nodes[p].role {
                Role::Input(i) => x[i],
                role => {
                    let z: f64 = self.incoming[p]
                        .iter()
                        .map(|&k| {
                            let e = &self.edges[k];
                            e.weight * value[self.index[&e.src]]
                        })
                        .sum();
                    if role == Role::Output {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                }
            };
        }
        Ok(value[self.output])
    }

    pub fn largest_id(&self) -> NodeId {
        self.nodes.last().map(|n| n.id).unwrap_or(NodeId(0))
    }
}

/// Longest-path distances from the inputs and to the output, per node.
#[derive(Debug, Clone)]
pub struct LongestPaths {
    ids: Vec<NodeId>,
    from_inputs: Vec<Option<usize>>,
    to_output: Vec<Option<usize>>,
}

impl LongestPaths {
    fn pos(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Longest path from any input node; `None` if no input reaches `id`.
    pub fn from_inputs(&self, id: NodeId) -> Option<usize> {
        self.pos(id).and_then(|p| self.from_inputs[p])
    }

    /// Longest path to the output; `None` if the output is unreachable.
    pub fn to_output(&self, id: NodeId) -> Option<usize> {
        self.pos(id).and_then(|p| self.to_output[p])
    }
}

fn topological_positions(
    nodes: &[Node],
    edges: &[Edge],
    index: &BTreeMap<NodeId, usize>,
    incoming: &[Vec<usize>],
    outgoing: &[Vec<usize>],
) -> Result<Vec<usize>> {
    let mut pending: Vec<usize> = incoming.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(p, _)| Reverse(p))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    // Positions are sorted by id, so the smallest position is the smallest id.
    while let Some(Reverse(p)) = ready.pop() {
        order.push(p);
        for &k in &outgoing[p] {
            let q = index[&edges[k].dst];
            pending[q] -= 1;
            if pending[q] == 0 {
                ready.push(Reverse(q));
            }
        }
    }
    if order.len() != nodes.len() {
        let stuck = pending.iter().position(|&c| c > 0).unwrap_or(0);
        return Err(NetError::Cyclic(nodes[stuck].id));
    }
    Ok(order)
}

fn check_input(x: &[f64], dim: usize, bias_input: bool) -> Result<()> {
    if x.len() != dim {
        return Err(NetError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if bias_input && x[0] != 1.0 {
        return Err(NetError::BiasCoordinate(x[0]));
    }
    Ok(())
}

/// Dense row-major matrix. Row `j` holds the incoming weights of unit `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NetError::InvalidNetwork(format!(
                "empty {rows}x{cols} matrix"
            )));
        }
        if data.len() != rows * cols {
            return Err(NetError::InvalidNetwork(format!(
                "{rows}x{cols} matrix given {} entries",
                data.len()
            )));
        }
        if data.iter().any(|w| !w.is_finite()) {
            return Err(NetError::InvalidNetwork("non-finite matrix entry".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NetError::InvalidNetwork("ragged matrix rows".into()));
        }
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.data[i * self.cols + j] = w;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.cols)
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|w| w * c).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.iter_rows()
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

/// Layered fully connected network `W_d σ(W_{d-1} σ(… σ(W_1 x)))`.
///
/// Hidden layers may have different widths; adjacent matrices must chain
/// (`cols(W_{k+1}) = rows(W_k)`) and the last matrix has one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayeredJson", into = "LayeredJson")]
pub struct LayeredNet {
    layers: Vec<Matrix>,
    activation: Activation,
    bias_input: bool,
}

impl LayeredNet {
    pub fn new(layers: Vec<Matrix>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(NetError::InvalidNetwork(
                "layered net needs at least one layer".into(),
            ));
        }
        for k in 1..layers.len() {
            if layers[k].cols() != layers[k - 1].rows() {
                return Err(NetError::InvalidNetwork(format!(
                    "layer {} has {} columns but layer {} has {} rows",
                    k + 1,
                    layers[k].cols(),
                    k,
                    layers[k - 1].rows()
                )));
            }
        }
        let last = layers.last().map_or(0, Matrix::rows);
        if last != 1 {
            return Err(NetError::InvalidNetwork(format!(
                "output layer has {last} rows, expected 1"
            )));
        }
        Ok(LayeredNet {
            layers,
            activation,
            bias_input: false,
        })
    }

    pub fn from_rows(layers: Vec<Vec<Vec<f64>>>, activation: Activation) -> Result<Self> {
        let layers = layers
            .into_iter()
            .map(Matrix::from_rows)
            .collect::<Result<Vec<_>>>()?;
        LayeredNet::new(layers, activation)
    }

    /// Marks input coordinate 0 as the fixed bias coordinate `x[0] = 1`.
    pub fn with_bias_input(mut self, bias_input: bool) -> Self {
        self.bias_input = bias_input;
        self
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bias_input(&self) -> bool {
        self.bias_input
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    /// Maximum in-degree of the materialized DAG.
    pub fn width(&self) -> usize {
        self.layers.iter().map(Matrix::cols).max().unwrap_or(0)
    }

    /// Replaces the layers, keeping activation and bias flag.
    pub fn with_layers(&self, layers: Vec<Matrix>) -> Result<Self> {
        Ok(LayeredNet::new(layers, self.activation)?.with_bias_input(self.bias_input))
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.input_dim(), self.bias_input)?;
        let (last, hidden) = self.layers.split_last().expect("non-empty");
        let mut h = x.to_vec();
        for w in hidden {
            h = w.apply(&h);
            h.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        }
        Ok(last.apply(&h)[0])
    }

    /// Materializes the DAG, zero weights included. Inputs get ids
    /// `0..D`, then each layer's units in row order, the output last.
    pub fn to_dag(&self) -> Network {
        let d_in = self.input_dim();
        let mut nodes: Vec<Node> = (0..d_in)
            .map(|i| Node {
                id: NodeId(i),
                role: Role::Input(i),
            })
            .collect();
        let mut edges = Vec::new();
        let mut prev: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
        let mut next_id = d_in;
        for (k, w) in self.layers.iter().enumerate() {
            let role = if k + 1 == self.layers.len() {
                Role::Output
            } else {
                Role::Hidden
            };
            let mut current = Vec::with_capacity(w.rows());
            for j in 0..w.rows() {
                let id = NodeId(next_id);
                next_id += 1;
                nodes.push(Node { id, role });
                for (i, &src) in prev.iter().enumerate() {
                    edges.push(Edge {
                        src,
                        dst: id,
                        weight: w.get(j, i),
                    });
                }
                current.push(id);
            }
            prev = current;
        }
        Network::new(d_in, self.activation, self.bias_input, nodes, edges)
            .expect("layered nets always materialize to valid DAGs")
    }
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    role: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    src: usize,
    dst: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    inputs: usize,
    #[serde(default)]
    bias_input: bool,
    activation: Activation,
    nodes: Vec<NodeJson>,
    edges: Vec<EdgeJson>,
}

impl TryFrom<NetworkJson> for Network {
    type Error = NetError;

    fn try_from(j: NetworkJson) -> Result<Self> {
        let nodes = j
            .nodes
            .into_iter()
            .map(|n| {
                Ok(Node {
                    id: NodeId(n.id),
                    role: n.role.parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = j
            .edges
            .into_iter()
            .map(|e| Edge {
                src: NodeId(e.src),
                dst: NodeId(e.dst),
                weight: e.w,
            })
            .collect();
        Network::new(j.inputs, j.activation, j.bias_input, nodes, edges)
    }
}

impl From<Network> for NetworkJson {
    fn from(n: Network) -> Self {
        NetworkJson {
            inputs: n.num_inputs,
            bias_input: n.bias_input,
            activation: n.activation,
            nodes: n
                .nodes
                .iter()
                .map(|x| NodeJson {
                    id: x.id.0,
                    role: x.role.to_string(),
                })
                .collect(),
            edges: n
                .edges
                .iter()
                .map(|e| EdgeJson {
                    src: e.src.0,
                    dst: e.dst.0,
                    w: e.weight,
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LayeredJson {
    activation: Activation,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bias_input: bool,
    layers: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<LayeredJson> for LayeredNet {
    type Error = NetError;

    fn try_from(j: LayeredJson) -> Result<Self> {
        Ok(LayeredNet::from_rows(j.layers, j.activation)?.with_bias_input(j.bias_input))
    }
}

impl From<LayeredNet> for LayeredJson {
    fn from(l: LayeredNet) -> Self {
        LayeredJson {
            activation: l.activation,
            bias_input: l.bias_input,
            layers: l.layers.iter().map(Matrix::to_rows).collect(),
        }
    }
}

/// Anything that maps a full input vector to a scalar output.
pub trait Forward {
    fn forward(&self, x: &[f64]) -> Result<f64>;
}

impl Forward for Network {
    fn forward(&self, x: &[f64]) -> Result<f64> {
        Network::forward(self, x)
    }
}

impl Forward for LayeredNet {
    fn forward(&self, x: &[f64]) -> Result<f64> {
        LayeredNet::forward(self, x)
    }
}

/// Mutable working copy used by the graph rewrites.
#[derive(Debug, Clone)]
pub(crate) struct Draft {
    pub num_inputs: usize,
    pub bias_input: bool,
    pub activation: Activation,
    pub roles: BTreeMap<NodeId, Role>,
    weights: BTreeMap<(NodeId, NodeId), f64>,
    preds: BTreeMap<NodeId, BTreeSet<NodeId>>,
    succs: BTreeMap<NodeId, BTreeSet<NodeId>>,
    next_id: usize,
}

impl Draft {
    pub fn from_network(net: &Network) -> Self {
        let mut draft = Draft {
            num_inputs: net.num_inputs,
            bias_input: net.bias_input,
            activation: net.activation,
            roles: BTreeMap::new(),
            weights: BTreeMap::new(),
            preds: BTreeMap::new(),
            succs: BTreeMap::new(),
            next_id: net.largest_id().0 + 1,
        };
        for n in &net.nodes {
            draft.add_node(n.id, n.role);
        }
        for e in &net.edges {
            draft.set_edge(e.src, e.dst, e.weight);
        }
        draft
    }

    pub fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn add_node(&mut self, id: NodeId, role: Role) {
        self.roles.insert(id, role);
        self.preds.entry(id).or_default();
        self.succs.entry(id).or_default();
        self.next_id = self.next_id.max(id.0 + 1);
    }

    pub fn remove_node(&mut self, id: NodeId) {
        for p in self.preds.remove(&id).unwrap_or_default() {
            self.weights.remove(&(p, id));
            if let Some(s) = self.succs.get_mut(&p) {
                s.remove(&id);
            }
        }
        for s in self.succs.remove(&id).unwrap_or_default() {
            self.weights.remove(&(id, s));
            if let Some(p) = self.preds.get_mut(&s) {
                p.remove(&id);
            }
        }
        self.roles.remove(&id);
    }

    pub fn set_edge(&mut self, src: NodeId, dst: NodeId, w: f64) {
        self.weights.insert((src, dst), w);
        self.succs.entry(src).or_default().insert(dst);
        self.preds.entry(dst).or_default().insert(src);
    }

    pub fn remove_edge(&mut self, src: NodeId, dst: NodeId) -> Option<f64> {
        let w = self.weights.remove(&(src, dst))?;
        if let Some(s) = self.succs.get_mut(&src) {
            s.remove(&dst);
        }
        if let Some(p) = self.preds.get_mut(&dst) {
            p.remove(&src);
        }
        Some(w)
    }

    pub fn weight_mut(&mut self, src: NodeId, dst: NodeId) -> Option<&mut f64> {
        self.weights.get_mut(&(src, dst))
    }

    /// `(src, weight)` pairs of the incoming edges of `id`, sorted by src.
    pub fn in_edges(&self, id: NodeId) -> Vec<(NodeId, f64)> {
        self.preds
            .get(&id)
            .map(|ps| ps.iter().map(|&p| (p, self.weights[&(p, id)])).collect())
            .unwrap_or_default()
    }

    /// `(dst, weight)` pairs of the outgoing edges of `id`, sorted by dst.
    pub fn out_edges(&self, id: NodeId) -> Vec<(NodeId, f64)> {
        self.succs
            .get(&id)
            .map(|ss| ss.iter().map(|&s| (s, self.weights[&(id, s)])).collect())
            .unwrap_or_default()
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn finish(self) -> Result<Network> {
        let nodes = self
            .roles
            .iter()
            .map(|(&id, &role)| Node { id, role })
            .collect();
        let edges = self
            .weights
            .iter()
            .map(|(&(src, dst), &weight)| Edge { src, dst, weight })
            .collect();
        Network::new(
            self.num_inputs,
            self.activation,
            self.bias_input,
            nodes,
            edges,
        )
    }
}
