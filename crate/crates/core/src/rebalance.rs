//! Function-preserving rescalings that exploit `σ(c·z) = c·σ(z)` for `c ≥ 0`.

use std::collections::BTreeSet;

use crate::error::{NetError, Result};
use crate::graph::{Draft, LayeredNet, Matrix, Network, NodeId, Role};
use crate::norms::{layer_norms, lp_norm, NormParams};

/// Relative distance from 1 below which a scale factor is treated as exactly 1,
/// so balanced or unitized inputs come back bit-identical.
const UNIT_SLACK: f64 = 4.0 * f64::EPSILON;

fn require_homogeneous(act: crate::graph::Activation) -> Result<()> {
    if act.is_positively_homogeneous() {
        Ok(())
    } else {
        Err(NetError::NonHomogeneous(act.name()))
    }
}

/// Rescales every layer to the common group norm `γ^{1/d}`, where `γ` is the
/// product of the layer norms. The computed function and `γ` are unchanged
/// while `μ_{p,q}` drops to its minimum `d^{1/q} γ^{1/d}`.
///
/// A layer with zero norm makes the function identically zero; the all-zero
/// net of the same shape is returned in that case.
pub fn balance_layers(net: &LayeredNet, params: NormParams) -> Result<LayeredNet> {
    require_homogeneous(net.activation())?;
    let norms = layer_norms(net, params);
    if norms.contains(&0.0) {
        let zeros = net
            .layers()
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect();
        return net.with_layers(zeros);
    }
    let logs: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let target = logs.iter().sum::<f64>() / logs.len() as f64;
    let layers = net
        .layers()
        .iter()
        .zip(&logs)
        .map(|(w, ln)| {
            let c = (target - ln).exp();
            if (c - 1.0).abs() <= UNIT_SLACK {
                w.clone()
            } else {
                w.scaled(c)
            }
        })
        .collect();
    net.with_layers(layers)
}

/// Per-unit balancing of a depth-2 net: each hidden unit's incoming `ℓ_p`
/// norm and the magnitude of its output weight are both set to their
/// geometric mean. Units whose incoming row or output weight is zero
/// contribute nothing to the function and are zeroed entirely.
///
/// With `p = 2` this is the weight setting where `μ_{2,2}² = 2 ν_2`.
pub fn balance_units(net: &LayeredNet, p: f64) -> Result<LayeredNet> {
    require_homogeneous(net.activation())?;
    if net.depth() != 2 {
        return Err(NetError::DepthMismatch {
            expected: 2,
            got: net.depth(),
        });
    }
    NormParams::new(p, p)?;
    let mut first = net.layers()[0].clone();
    let mut out = net.layers()[1].clone();
    for j in 0..first.rows() {
        let r = lp_norm(first.row(j), p);
        let o = out.get(0, j).abs();
        if r == 0.0 || o == 0.0 {
            first.row_mut(j).iter_mut().for_each(|w| *w = 0.0);
            out.set(0, j, 0.0);
            continue;
        }
        let c = (o / r).sqrt();
        if (c - 1.0).abs() <= UNIT_SLACK {
            continue;
        }
        first.row_mut(j).iter_mut().for_each(|w| *w *= c);
        out.set(0, j, out.get(0, j) / c);
    }
    net.with_layers(vec![first, out])
}

/// Normalizes every internal node to unit incoming `ℓ_p` norm in one
/// topological pass: incoming weights are divided by the node's norm `c`
/// and outgoing weights multiplied by it. Nodes with `c = 0` output zero and
/// are pruned together with everything that becomes dead.
pub fn unitize_units(net: &Network, p: f64) -> Result<Network> {
    require_homogeneous(net.activation())?;
    NormParams::new(p, p)?;
    let mut draft = Draft::from_network(net);
    for id in net.topological_order() {
        if draft.roles.get(&id) != Some(&Role::Hidden) {
            continue;
        }
        let incoming = draft.in_edges(id);
        let w: Vec<f64> = incoming.iter().map(|&(_, w)| w).collect();
        let c = lp_norm(&w, p);
        if c == 0.0 {
            draft.remove_node(id);
            continue;
        }
        if (c - 1.0).abs() <= UNIT_SLACK {
            continue;
        }
        for (src, _) in incoming {
            *draft.weight_mut(src, id).expect("edge exists") /= c;
        }
        for (dst, _) in draft.out_edges(id) {
            *draft.weight_mut(id, dst).expect("edge exists") *= c;
        }
    }
    Ok(prune_dead(&draft.finish()?))
}

/// Removes hidden nodes that lie on no input→output path. Pruning is
/// structural: zero-weight edges still count as connections.
pub fn prune_dead(net: &Network) -> Network {
    let order = net.topological_order();
    let mut forward: BTreeSet<NodeId> = BTreeSet::new();
    for &id in &order {
        let reached = matches!(net.role(id), Some(Role::Input(_)))
            || net.incoming(id).any(|e| forward.contains(&e.src));
        if reached {
            forward.insert(id);
        }
    }
    let mut backward: BTreeSet<NodeId> = BTreeSet::new();
    for &id in order.iter().rev() {
        if id == net.output_id() || net.outgoing(id).any(|e| backward.contains(&e.dst)) {
            backward.insert(id);
        }
    }
    let keep = |id: NodeId| {
        net.role(id) != Some(Role::Hidden) || (forward.contains(&id) && backward.contains(&id))
    };
    if net.nodes().iter().all(|n| keep(n.id)) {
        return net.clone();
    }
    let nodes = net.nodes().iter().copied().filter(|n| keep(n.id)).collect();
    let edges = net
        .edges()
        .iter()
        .copied()
        .filter(|e| keep(e.src) && keep(e.dst))
        .collect();
    Network::new(
        net.num_inputs(),
        net.activation(),
        net.bias_input(),
        nodes,
        edges,
    )
    .expect("pruning a valid network keeps it valid")
}
