//! Magnitude measures on network weights: the additive group norm `μ_{p,q}`,
//! the multiplicative per-layer group norm `γ_{p,q}`, the path norm `φ_p`
//! and the convex-net measure `ν_p`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{NetError, Result};
use crate::graph::{Activation, LayeredNet, Matrix, Network, Role};

/// Group-norm exponents: `p` for the incoming-weight vector of each unit,
/// `q` across units. `p` must be finite; `q = ∞` selects per-unit control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    p: f64,
    q: f64,
}

impl NormParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(NetError::InvalidParams(format!(
                "p must satisfy 1 <= p < inf, got {p}"
            )));
        }
        if q.is_nan() || q < 1.0 {
            return Err(NetError::InvalidParams(format!(
                "q must satisfy q >= 1, got {q}"
            )));
        }
        Ok(NormParams { p, q })
    }

    pub fn per_unit(p: f64) -> Result<Self> {
        NormParams::new(p, f64::INFINITY)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Dual exponent, `1/p + 1/p* = 1`.
    pub fn p_star(&self) -> f64 {
        dual_exponent(self.p)
    }

    /// `1/q`, zero for `q = ∞`.
    pub fn inv_q(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            1.0 / self.q
        }
    }

    /// `1/p*`, i.e. `1 - 1/p`.
    pub fn inv_p_star(&self) -> f64 {
        1.0 - 1.0 / self.p
    }
}

pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn serialize_exponent<S: SerializeStruct>(
    s: &mut S,
    key: &'static str,
    v: f64,
) -> std::result::Result<(), S::Error> {
    if v.is_infinite() {
        s.serialize_field(key, "inf")
    } else {
        s.serialize_field(key, &v)
    }
}

/// Field serializer writing an exponent as a number, or `"inf"`.
pub fn serialize_exponent_value<S: Serializer>(
    v: &f64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl Serialize for NormParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("NormParams", 3)?;
        s.serialize_field("p", &self.p)?;
        serialize_exponent(&mut s, "q", self.q)?;
        serialize_exponent(&mut s, "p_star", self.p_star())?;
        s.end()
    }
}

/// `ℓ_p` norm of a vector, `p ∈ [1, ∞]`. Entries are scaled by the largest
/// magnitude first so large `p` cannot overflow.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 || p.is_infinite() {
        return max;
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

/// Row-wise group norm `‖W‖_{p,q}`: the `ℓ_q` norm of the rows' `ℓ_p` norms.
pub fn group_norm(w: &Matrix, params: NormParams) -> f64 {
    let rows: Vec<f64> = w.iter_rows().map(|r| lp_norm(r, params.p)).collect();
    lp_norm(&rows, params.q)
}

/// Anything whose weights split into per-unit incoming groups.
pub trait UnitGroups {
    /// `ℓ_p` norm of the incoming weights of every non-input unit.
    fn unit_norms(&self, p: f64) -> Vec<f64>;
}

impl UnitGroups for Network {
    fn unit_norms(&self, p: f64) -> Vec<f64> {
        self.nodes()
            .iter()
            .filter(|n| !n.role.is_input())
            .map(|n| {
                let w: Vec<f64> = self.incoming(n.id).map(|e| e.weight).collect();
                lp_norm(&w, p)
            })
            .collect()
    }
}

impl UnitGroups for LayeredNet {
    fn unit_norms(&self, p: f64) -> Vec<f64> {
        self.layers()
            .iter()
            .flat_map(|w| w.iter_rows().map(move |r| lp_norm(r, p)))
            .collect()
    }
}

/// `μ_{p,q}`: `ℓ_q` aggregation over all units of their incoming `ℓ_p` norms.
pub fn mu_pq<N: UnitGroups + ?Sized>(net: &N, params: NormParams) -> f64 {
    lp_norm(&net.unit_norms(params.p), params.q)
}

pub fn layer_norms(net: &LayeredNet, params: NormParams) -> Vec<f64> {
    net.layers().iter().map(|w| group_norm(w, params)).collect()
}

/// Product of `ℓ`-norms accumulated in the log domain; zero short-circuits.
pub(crate) fn log_product(factors: &[f64]) -> f64 {
    if factors.contains(&0.0) {
        return 0.0;
    }
    factors.iter().map(|f| f.ln()).sum::<f64>().exp()
}

/// `γ_{p,q}`: product over layers of the row-wise group norms.
pub fn gamma_pq(net: &LayeredNet, params: NormParams) -> f64 {
    log_product(&layer_norms(net, params))
}

/// `γ_{p,q}` of a sublayered DAG, layers assigned by longest distance from
/// the inputs. Missing edges count as zero weights, so this equals
/// `gamma_pq` of the zero-padded layered network.
pub fn sublayered_gamma(net: &Network, params: NormParams) -> Result<f64> {
    let paths = net.longest_paths();
    let depth = net.depth();
    let mut layers: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    for n in net.nodes() {
        if n.role.is_input() {
            continue;
        }
        let level = paths.from_inputs(n.id).ok_or(NetError::DeadNode(n.id))?;
        let w: Vec<f64> = net.incoming(n.id).map(|e| e.weight).collect();
        layers[level].push(lp_norm(&w, params.p));
    }
    for e in net.edges() {
        let (Some(a), Some(b)) = (paths.from_inputs(e.src), paths.from_inputs(e.dst)) else {
            return Err(NetError::DeadNode(e.src));
        };
        if b != a + 1 {
            return Err(NetError::NotSublayered {
                src: e.src,
                dst: e.dst,
            });
        }
    }
    if paths.from_inputs(net.output_id()) != Some(depth) {
        return Err(NetError::NotSublayered {
            src: net.output_id(),
            dst: net.output_id(),
        });
    }
    let norms: Vec<f64> = layers[1..].iter().map(|l| lp_norm(l, params.q)).collect();
    Ok(log_product(&norms))
}

/// Per-unit `γ_{p,∞}` of a DAG: nodes are grouped by their longest distance
/// from the inputs and each group contributes its largest incoming `ℓ_p`
/// norm. After unit normalization this equals the path norm.
pub fn per_unit_gamma(net: &Network, p: f64) -> Result<f64> {
    if net.depth() == 0 {
        return Ok(0.0);
    }
    let paths = net.longest_paths();
    let mut levels = vec![0.0f64; net.depth() + 1];
    for n in net.nodes() {
        if n.role.is_input() {
            continue;
        }
        let level = paths.from_inputs(n.id).ok_or(NetError::DeadNode(n.id))?;
        let w: Vec<f64> = net.incoming(n.id).map(|e| e.weight).collect();
        levels[level] = levels[level].max(lp_norm(&w, p));
    }
    Ok(log_product(&levels[1..]))
}

/// Path norm `φ_p`: the `ℓ_p` aggregation over every input→output path of
/// the product of its weights. One topological pass with
/// `ψ(v) = Σ_{u→v} |w|^p ψ(u)`, kept as `ln ψ`.
pub fn path_norm(net: &Network, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(NetError::InvalidParams(format!(
            "path norm needs 1 <= p < inf, got {p}"
        )));
    }
    let order = net.topological_order();
    let mut log_psi = std::collections::BTreeMap::new();
    for id in order {
        let lp = match net.role(id) {
            Some(Role::Input(_)) => 0.0,
            _ => {
                let terms: Vec<f64> = net
                    .incoming(id)
                    .filter(|e| e.weight != 0.0)
                    .map(|e| p * e.weight.abs().ln() + log_psi[&e.src])
                    .filter(|t: &f64| t.is_finite())
                    .collect();
                log_sum_exp(&terms)
            }
        };
        log_psi.insert(id, lp);
    }
    Ok((log_psi[&net.output_id()] / p).exp())
}

pub fn path_norm_layered(net: &LayeredNet, p: f64) -> Result<f64> {
    path_norm(&net.to_dag(), p)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ν_p` of a depth-2 ReLU net: rescale every hidden unit to unit incoming
/// `ℓ_p` norm, pushing the scale into its output weight, and return the
/// `ℓ_1` norm of the output layer. Units with a zero incoming row compute 0
/// and are dropped.
pub fn nu_p(net: &LayeredNet, p: f64) -> Result<f64> {
    if net.depth() != 2 {
        return Err(NetError::DepthMismatch {
            expected: 2,
            got: net.depth(),
        });
    }
    if net.activation() != Activation::Relu {
        return Err(NetError::NonHomogeneous(net.activation().name()));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(NetError::InvalidParams(format!(
            "nu_p needs 1 <= p < inf, got {p}"
        )));
    }
    let (first, out) = (&net.layers()[0], &net.layers()[1]);
    Ok(first
        .iter_rows()
        .zip(out.row(0))
        .map(|(row, v)| {
            let c = lp_norm(row, p);
            if c == 0.0 {
                0.0
            } else {
                (v * c).abs()
            }
        })
        .sum())
}

/// Summary of the measures of one weight setting.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub phi: f64,
    pub depth: usize,
    pub params: NormParams,
}

impl NormReport {
    pub fn for_network(net: &Network, params: NormParams) -> Result<Self> {
        Ok(NormReport {
            mu: mu_pq(net, params),
            gamma: None,
            phi: path_norm(net, params.p)?,
            depth: net.depth(),
            params,
        })
    }

    pub fn for_layered(net: &LayeredNet, params: NormParams) -> Result<Self> {
        Ok(NormReport {
            mu: mu_pq(net, params),
            gamma: Some(gamma_pq(net, params)),
            phi: path_norm_layered(net, params.p)?,
            depth: net.depth(),
            params,
        })
    }
}
