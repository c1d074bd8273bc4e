//! Explicit networks: hypercube shattering nets, intersections of halfspaces
//! over the hypercube, and the two small convex-hull sets used to show that
//! the hull of a ReLU class is not closed under the positive part.
//!
//! All builders use a bias coordinate: inputs are `(1, x_1, …, x_D)`.

use serde::Serialize;

use crate::error::{NetError, Result};
use crate::graph::{Activation, LayeredNet, Matrix};
use crate::norms::{gamma_pq, NormParams};

/// Largest input dimension accepted by the shattering builder (`2^D` units).
pub const MAX_SHATTER_DIM: usize = 4;

/// `x ∈ {±1}^D` for vertex `j`: coordinate `k` is `+1` iff bit `k` of `j` is set.
pub fn hypercube_vertex(dim: usize, j: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| if j >> k & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// All `2^D` vertices as full network inputs `(1, x)`, in vertex-index order.
pub fn hypercube_inputs(dim: usize) -> Vec<Vec<f64>> {
    (0..1usize << dim)
        .map(|j| {
            let mut x = vec![1.0];
            x.extend(hypercube_vertex(dim, j));
            x
        })
        .collect()
}

/// Labeling number `index` of `m` points: point `i` gets `+1` iff bit `i` is set.
pub fn labeling(m: usize, index: u64) -> Vec<f64> {
    (0..m)
        .map(|i| if index >> i & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShatterSpec {
    pub dim: usize,
    pub depth: usize,
    pub width: usize,
    pub params: NormParams,
}

impl ShatterSpec {
    pub fn new(dim: usize, depth: usize, width: usize, params: NormParams) -> Result<Self> {
        if dim == 0 || dim > MAX_SHATTER_DIM {
            return Err(NetError::Domain(format!(
                "shattering needs 1 <= D <= {MAX_SHATTER_DIM}, got {dim}"
            )));
        }
        if depth < 2 {
            return Err(NetError::Domain(format!(
                "shattering needs depth >= 2, got {depth}"
            )));
        }
        if width == 0 {
            return Err(NetError::Domain("width H must be at least 1".into()));
        }
        Ok(ShatterSpec {
            dim,
            depth,
            width,
            params,
        })
    }

    pub fn points(&self) -> usize {
        1 << self.dim
    }

    /// `D^{1/p} m^{1/p+1/q} H^{−(d−2)[1/p* − 1/q]_+}`, the norm of the
    /// construction without the bias weights.
    pub fn gamma_formula(&self) -> f64 {
        let (p, inv_q) = (self.params.p(), self.params.inv_q());
        let m = self.points() as f64;
        let e = (self.params.inv_p_star() - inv_q).max(0.0);
        (self.dim as f64).powf(1.0 / p)
            * m.powf(1.0 / p + inv_q)
            * (self.width as f64).powf(-((self.depth - 2) as f64) * e)
    }
}

/// Depth-`d` ReLU net realizing `labels` on the hypercube with unit margin.
///
/// Unit `j` of the first layer has weights `(−(D−1), u_j)` and outputs 1 at
/// vertex `u_j` and 0 at every other vertex; the second layer carries the
/// labels. For `d > 2` the value `f` is carried upward by `H` units computing
/// `[f]_+` and `H` computing `[−f]_+`, recombined with weights `±1/H`.
pub fn shattering_layers(spec: &ShatterSpec, labels: &[f64]) -> Result<LayeredNet> {
    let m = spec.points();
    if labels.len() != m {
        return Err(NetError::InvalidLabels(format!(
            "expected {m} labels, got {}",
            labels.len()
        )));
    }
    if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(NetError::InvalidLabels(format!(
            "labels must be +1 or -1, got {y}"
        )));
    }
    let dim = spec.dim;
    let first: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut row = vec![-((dim - 1) as f64)];
            row.extend(hypercube_vertex(dim, j));
            row
        })
        .collect();
    let mut layers = vec![Matrix::from_rows(first)?];
    if spec.depth == 2 {
        layers.push(Matrix::from_rows(vec![labels.to_vec()])?);
    } else {
        let h = spec.width;
        let mut carried = labels.to_vec();
        let average: Vec<f64> = (0..2 * h)
            .map(|i| {
                if i < h {
                    1.0 / h as f64
                } else {
                    -1.0 / h as f64
                }
            })
            .collect();
        for _ in 2..spec.depth {
            let neg: Vec<f64> = carried.iter().map(|w| -w).collect();
            let rows: Vec<Vec<f64>> = (0..2 * h)
                .map(|i| if i < h { carried.clone() } else { neg.clone() })
                .collect();
            layers.push(Matrix::from_rows(rows)?);
            carried = average.clone();
        }
        layers.push(Matrix::from_rows(vec![average])?);
    }
    Ok(LayeredNet::new(layers, Activation::Relu)?.with_bias_input(true))
}

/// Smallest value of `y_i f(x_i)` over the sample.
pub fn min_margin(net: &LayeredNet, inputs: &[Vec<f64>], labels: &[f64]) -> Result<f64> {
    if inputs.len() != labels.len() {
        return Err(NetError::InvalidLabels(format!(
            "{} points but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    inputs
        .iter()
        .zip(labels)
        .map(|(x, y)| net.forward(x).map(|f| y * f))
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
}

/// Depth-2 net over `(1, x)` that outputs `+1` when `⟨w_i, x⟩ > 0` for every
/// row `w_i` of `normals` and at most `−1` otherwise, for `x ∈ {±1}^D`.
///
/// Per halfspace there are two units `[⟨w_i,x⟩]_+` and `[⟨w_i,x⟩ − 1]_+`
/// whose difference is the 0/1 indicator; one extra unit reads the bias.
/// The output is `2·Σ_i (g⁺_i − g⁻_i) + 1 − 2k`.
pub fn halfspace_intersection_net(normals: &[Vec<f64>]) -> Result<LayeredNet> {
    let k = normals.len();
    let dim = normals.first().map_or(0, Vec::len);
    if k == 0 || dim == 0 {
        return Err(NetError::Domain(
            "need at least one normal of positive dimension".into(),
        ));
    }
    for w in normals {
        if w.len() != dim {
            return Err(NetError::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        if let Some(v) = w.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(NetError::Domain(format!(
                "normal entries must be +1 or -1, got {v}"
            )));
        }
    }
    let mut first = Vec::with_capacity(2 * k + 1);
    let mut out = Vec::with_capacity(2 * k + 1);
    for w in normals {
        for (offset, sign) in [(0.0, 2.0), (-1.0, -2.0)] {
            let mut row = vec![offset];
            row.extend_from_slice(w);
            first.push(row);
            out.push(sign);
        }
    }
    let mut bias_row = vec![0.0; dim + 1];
    bias_row[0] = 1.0;
    first.push(bias_row);
    out.push(1.0 - 2.0 * k as f64);
    let layers = vec![Matrix::from_rows(first)?, Matrix::from_rows(vec![out])?];
    Ok(LayeredNet::new(layers, Activation::Relu)?.with_bias_input(true))
}

/// Norm accounting for [`halfspace_intersection_net`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfspaceGamma {
    /// `γ_{p,q}` of the full network.
    pub measured: f64,
    /// `γ_{p,q}` with the bias column and the bias unit removed:
    /// `2·D^{1/p}(2k)^{1/p+1/q}`.
    pub core: f64,
    pub bias_slack: f64,
    /// `D^{1/p}(2k)^{1/q+1/p}`, the count for unit output weights.
    pub formula: f64,
    /// `4·D^{1/p}·k²`.
    pub bound: f64,
}

pub fn halfspace_gamma(net: &LayeredNet, params: NormParams) -> Result<HalfspaceGamma> {
    let [first, out] = net.layers() else {
        return Err(NetError::DepthMismatch {
            expected: 2,
            got: net.depth(),
        });
    };
    let units = first.rows() - 1;
    let dim = first.cols() - 1;
    let core_first: Vec<Vec<f64>> = first
        .iter_rows()
        .take(units)
        .map(|r| r[1..].to_vec())
        .collect();
    let core_out = out.row(0)[..units].to_vec();
    let core = LayeredNet::new(
        vec![
            Matrix::from_rows(core_first)?,
            Matrix::from_rows(vec![core_out])?,
        ],
        net.activation(),
    )?;
    let measured = gamma_pq(net, params);
    let core = gamma_pq(&core, params);
    let (p, inv_q) = (params.p(), params.inv_q());
    let k = (units / 2) as f64;
    let d_root = (dim as f64).powf(1.0 / p);
    Ok(HalfspaceGamma {
        measured,
        core,
        bias_slack: measured - core,
        formula: d_root * (2.0 * k).powf(inv_q + 1.0 / p),
        bound: 4.0 * d_root * k * k,
    })
}

/// The two vertex sets over `m = 3` points: `H` and its positive-part image
/// `H'`, which is strictly larger than `H`.
pub fn counterexample_sets() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let h = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
    let mut h_plus = h.clone();
    h_plus.push(vec![0.5, 0.0, 0.0]);
    (h, h_plus)
}
