//! Structural rewrites: duplicating shared units into a tree, subdividing
//! edges until a DAG is layered, and placing two layered nets side by side.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{NetError, Result};
use crate::graph::{Draft, LayeredNet, Matrix, Network, NodeId, Role};
use crate::norms::{layer_norms, NormParams};

pub const DEFAULT_MAX_NODES: usize = 1_000_000;

/// One node created by [`treeify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CopyRecord {
    pub copy: NodeId,
    pub original: NodeId,
    pub consumer: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Treeified {
    pub net: Network,
    pub copies: usize,
    pub provenance: Vec<CopyRecord>,
}

/// Duplicates every hidden node with out-degree above one, one copy per
/// consumer, each carrying the full incoming edge set. Nodes are handled in
/// reverse topological order so that a predecessor sees the copies of its
/// consumers. Afterwards every hidden node has out-degree at most one and
/// the multiset of input→output paths (with their weights) is unchanged.
///
/// Copies receive fresh ids above the largest existing id, assigned in
/// processing order with consumers taken by increasing id.
pub fn treeify(net: &Network, max_nodes: usize) -> Result<Treeified> {
    let mut draft = Draft::from_network(net);
    let mut provenance = Vec::new();
    let mut pending: Vec<NodeId> = net.topological_order();
    pending.retain(|&id| net.role(id) == Some(Role::Hidden));
    while let Some(id) = pending.pop() {
        let outs = draft.out_edges(id);
        if outs.len() <= 1 {
            continue;
        }
        let ins = draft.in_edges(id);
        for (consumer, w) in outs {
            let copy = draft.fresh_id();
            draft.add_node(copy, Role::Hidden);
            for &(src, wi) in &ins {
                draft.set_edge(src, copy, wi);
            }
            draft.set_edge(copy, consumer, w);
            provenance.push(CopyRecord {
                copy,
                original: id,
                consumer,
            });
        }
        draft.remove_node(id);
        if draft.node_count() > max_nodes {
            return Err(NetError::SizeCap {
                nodes: draft.node_count(),
                cap: max_nodes,
            });
        }
    }
    Ok(Treeified {
        copies: provenance.len(),
        net: draft.finish()?,
        provenance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layerized {
    pub layered: LayeredNet,
    /// Set when an edge leaving a (non-bias) input node was subdivided: the
    /// inserted ReLU passes the input unchanged only when it is non-negative.
    pub nonnegative_inputs_required: bool,
    pub subdivisions: usize,
    /// Node ids behind the rows of each layer; the last entry is the output.
    pub units: Vec<Vec<NodeId>>,
}

/// Converts a DAG whose longest path has length `d` into a layered net of
/// depth `d`. While some edge `u→v` satisfies `d_in(u) + d_out(v) < d − 1`,
/// the smallest such `(u, v)` is replaced by `u→ṽ→v` with weights `√|w|`
/// and `sign(w)·√|w|`. Node `v` then sits in layer `d_in(v)` and missing
/// connections become zero weights.
pub fn layerize(net: &Network, d: usize, max_nodes: usize) -> Result<Layerized> {
    if !net.activation().is_positively_homogeneous() {
        return Err(NetError::NonHomogeneous(net.activation().name()));
    }
    let paths = net.longest_paths();
    for n in net.nodes() {
        if n.role == Role::Hidden
            && (paths.from_inputs(n.id).is_none() || paths.to_output(n.id).is_none())
        {
            return Err(NetError::DeadNode(n.id));
        }
    }
    if net.depth() != d {
        return Err(NetError::DepthMismatch {
            expected: d,
            got: net.depth(),
        });
    }
    let bias = net.bias_input().then(|| net.input_id(0));

    let mut current = net.clone();
    let mut subdivisions = 0;
    let mut nonnegative_inputs_required = false;
    loop {
        let paths = current.longest_paths();
        let violating = current.edges().iter().find(|e| {
            match (paths.from_inputs(e.src), paths.to_output(e.dst)) {
                (Some(a), Some(b)) => a + b + 1 < d,
                _ => false,
            }
        });
        let Some(&edge) = violating else { break };
        let mut draft = Draft::from_network(&current);
        draft.remove_edge(edge.src, edge.dst);
        let mid = draft.fresh_id();
        draft.add_node(mid, Role::Hidden);
        let root = edge.weight.abs().sqrt();
        draft.set_edge(edge.src, mid, root);
        draft.set_edge(mid, edge.dst, if edge.weight < 0.0 { -root } else { root });
        if draft.node_count() > max_nodes {
            return Err(NetError::SizeCap {
                nodes: draft.node_count(),
                cap: max_nodes,
            });
        }
        if current.role(edge.src).is_some_and(Role::is_input) && Some(edge.src) != bias {
            nonnegative_inputs_required = true;
        }
        subdivisions += 1;
        current = draft.finish()?;
    }

    let paths = current.longest_paths();
    let mut units: Vec<Vec<NodeId>> = vec![Vec::new(); d + 1];
    units[0] = (0..current.num_inputs())
        .map(|i| current.input_id(i))
        .collect();
    for n in current.nodes() {
        if !n.role.is_input() {
            let level = paths.from_inputs(n.id).ok_or(NetError::DeadNode(n.id))?;
            units[level].push(n.id);
        }
    }
    let level_of = |id: NodeId| paths.from_inputs(id).expect("live node");
    for e in current.edges() {
        if level_of(e.dst) != level_of(e.src) + 1 {
            return Err(NetError::NotSublayered {
                src: e.src,
                dst: e.dst,
            });
        }
    }
    let mut layers = Vec::with_capacity(d);
    for k in 1..=d {
        let (prev, rows) = (&units[k - 1], &units[k]);
        let column: BTreeMap<NodeId, usize> =
            prev.iter().enumerate().map(|(j, &id)| (id, j)).collect();
        let mut w = Matrix::zeros(rows.len(), prev.len());
        for (i, &dst) in rows.iter().enumerate() {
            for e in current.incoming(dst) {
                w.set(i, column[&e.src], e.weight);
            }
        }
        layers.push(w);
    }
    let layered =
        LayeredNet::new(layers, current.activation())?.with_bias_input(current.bias_input());
    Ok(Layerized {
        layered,
        nonnegative_inputs_required,
        subdivisions,
        units: units.split_off(1),
    })
}

/// `α·U + (1 − α)·V` as a single layered net of the same depth, with the two
/// networks side by side. See [`weighted_sum`].
pub fn convex_combine(
    u: &LayeredNet,
    v: &LayeredNet,
    alpha: f64,
    params: NormParams,
) -> Result<LayeredNet> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(NetError::Domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    weighted_sum(u, v, alpha, 1.0 - alpha, params)
}

/// `s·U + t·V` as one layered net: the first layers are stacked, middle
/// layers are block diagonal and the output row is the concatenation.
///
/// With `a = |s|γ(U)`, `b = |t|γ(V)` and `κ = (d−1)/q + 1/p`, each side's
/// layer `i` is rescaled to group norm `a^{e_i}` (resp. `b^{e_i}`) where
/// `e_i = 1/(qκ)` below the output and `e_d = 1/(pκ)`. The result has
/// `γ_{p,q} = (a^{1/κ} + b^{1/κ})^κ`, which is at most `a + b` whenever
/// `κ ≤ 1`. A side with zero coefficient is zeroed and the other side keeps
/// its weights, with the coefficient applied to its output row.
pub fn weighted_sum(
    u: &LayeredNet,
    v: &LayeredNet,
    s: f64,
    t: f64,
    params: NormParams,
) -> Result<LayeredNet> {
    for net in [u, v] {
        if !net.activation().is_positively_homogeneous() {
            return Err(NetError::NonHomogeneous(net.activation().name()));
        }
    }
    if u.activation() != v.activation() {
        return Err(NetError::InvalidNetwork(
            "networks use different activations".into(),
        ));
    }
    if u.depth() != v.depth() {
        return Err(NetError::DepthMismatch {
            expected: u.depth(),
            got: v.depth(),
        });
    }
    if u.input_dim() != v.input_dim() {
        return Err(NetError::DimensionMismatch {
            expected: u.input_dim(),
            got: v.input_dim(),
        });
    }
    if !(s.is_finite() && t.is_finite()) {
        return Err(NetError::Domain("coefficients must be finite".into()));
    }
    let d = u.depth();
    let bias_input = u.bias_input() || v.bias_input();
    let uu = side_layers(u, s, t == 0.0, params)?;
    let vv = side_layers(v, t, s == 0.0, params)?;

    if d == 1 {
        let row: Vec<f64> = uu[0]
            .row(0)
            .iter()
            .zip(vv[0].row(0))
            .map(|(a, b)| a + b)
            .collect();
        return Ok(
            LayeredNet::new(vec![Matrix::from_rows(vec![row])?], u.activation())?
                .with_bias_input(bias_input),
        );
    }
    let mut layers = Vec::with_capacity(d);
    let mut first = uu[0].to_rows();
    first.extend(vv[0].to_rows());
    layers.push(Matrix::from_rows(first)?);
    for i in 1..d - 1 {
        let (a, b) = (&uu[i], &vv[i]);
        let mut w = Matrix::zeros(a.rows() + b.rows(), a.cols() + b.cols());
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                w.set(r, c, a.get(r, c));
            }
        }
        for r in 0..b.rows() {
            for c in 0..b.cols() {
                w.set(a.rows() + r, a.cols() + c, b.get(r, c));
            }
        }
        layers.push(w);
    }
    let mut out = uu[d - 1].row(0).to_vec();
    out.extend_from_slice(vv[d - 1].row(0));
    layers.push(Matrix::from_rows(vec![out])?);
    Ok(LayeredNet::new(layers, u.activation())?.with_bias_input(bias_input))
}

/// Layers of one side of [`weighted_sum`], with the coefficient folded in.
fn side_layers(
    net: &LayeredNet,
    coef: f64,
    alone: bool,
    params: NormParams,
) -> Result<Vec<Matrix>> {
    let d = net.depth();
    if coef == 0.0 {
        return Ok(net
            .layers()
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect());
    }
    let mut layers = net.layers().to_vec();
    if alone {
        if coef != 1.0 {
            layers[d - 1] = layers[d - 1].scaled(coef);
        }
        return Ok(layers);
    }
    let norms = layer_norms(net, params);
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(NetError::ZeroNormLayer(i));
    }
    let ln_a = coef.abs().ln() + norms.iter().map(|n| n.ln()).sum::<f64>();
    let kappa = (d - 1) as f64 * params.inv_q() + 1.0 / params.p();
    for (i, (w, n)) in layers.iter_mut().zip(&norms).enumerate() {
        let e = if i + 1 < d {
            params.inv_q() / kappa
        } else {
            1.0 / (params.p() * kappa)
        };
        let mut c = (e * ln_a - n.ln()).exp();
        if i + 1 == d && coef < 0.0 {
            c = -c;
        }
        *w = w.scaled(c);
    }
    Ok(layers)
}
