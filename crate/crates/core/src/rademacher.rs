//! Empirical Rademacher complexity `E_ξ (1/m) sup_f |Σ_i ξ_i f(x_i)|`:
//! exact enumeration for convex hulls and norm-bounded linear classes, the
//! closed-form upper bounds for layered ReLU classes, an optimization-based
//! lower bound, and a unit-margin shattering checker.
//!
//! Sign vectors are enumerated in fixed chunks of 1024 and chunk sums are
//! added in index order, so results do not depend on the rayon pool size.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::labeling;
use crate::error::{NetError, Result};
use crate::graph::Forward;
use crate::norms::{dual_exponent, lp_norm, NormParams};
use crate::sample::gaussian;

pub const MAX_EXACT_POINTS: usize = 24;
pub const MAX_OPT_POINTS: usize = 16;
pub const MAX_SHATTER_POINTS: usize = 16;
pub const MONTE_CARLO_DRAWS: usize = 100_000;
pub const SHATTER_TOL: f64 = 1e-9;
pub const DEFINITION: &str = "E_xi (1/m) sup_f |sum_i xi_i f(x_i)|";

const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.is_empty() || dim == 0 {
            return Err(NetError::InvalidSamples(
                "need at least one point of positive dimension".into(),
            ));
        }
        if let Some(x) = points.iter().find(|x| x.len() != dim) {
            return Err(NetError::InvalidSamples(format!(
                "points have mixed dimensions {dim} and {}",
                x.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(NetError::InvalidSamples(
                "coordinates must be finite".into(),
            ));
        }
        Ok(SampleSet { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `max_i ‖x_i‖_r`.
    pub fn max_norm(&self, r: f64) -> f64 {
        self.points
            .iter()
            .map(|x| lp_norm(x, r))
            .fold(0.0, f64::max)
    }

    /// `‖X‖_{2,r}`: the `ℓ_r` norm over coordinates of the per-coordinate
    /// `ℓ_2` norms across the sample.
    pub fn mixed_norm(&self, r: f64) -> f64 {
        let cols: Vec<f64> = (0..self.dim())
            .map(|j| {
                let col: Vec<f64> = self.points.iter().map(|x| x[j]).collect();
                lp_norm(&col, 2.0)
            })
            .collect();
        lp_norm(&cols, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnum,
    ClosedFormLinear,
    UpperBoundThm1,
    UpperBoundCor2,
    UpperBoundAntisym,
    UpperBoundLinearLemma,
    OptLowerBound,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExactEnum => "exact-enum",
            Method::ClosedFormLinear => "closed-form-linear",
            Method::UpperBoundThm1 => "upper-bound-thm1",
            Method::UpperBoundCor2 => "upper-bound-cor2",
            Method::UpperBoundAntisym => "upper-bound-antisym",
            Method::UpperBoundLinearLemma => "upper-bound-linear-lemma",
            Method::OptLowerBound => "opt-lower-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherReport {
    pub value: f64,
    pub method: Method,
    pub definition: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    /// Intermediate quantities and alternative forms, keyed by name.
    pub terms: BTreeMap<String, f64>,
}

impl RademacherReport {
    fn new(value: f64, method: Method) -> Self {
        RademacherReport {
            value,
            method,
            definition: DEFINITION,
            seed: None,
            standard_error: None,
            terms: BTreeMap::new(),
        }
    }

    fn term(mut self, name: &str, value: f64) -> Self {
        self.terms.insert(name.to_string(), value);
        self
    }
}

/// Sum of `f(k, ξ)` over sign vectors. With `fix_first` the first sign is
/// held at `+1` and the remaining `m − 1` bits of `k` give the others.
fn sum_over_signs<F>(m: usize, fix_first: bool, f: F) -> f64
where
    F: Fn(u64, &[f64]) -> f64 + Sync,
{
    let free = if fix_first { m - 1 } else { m };
    let count = 1u64 << free;
    let chunks = count.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut xi = vec![1.0; m];
            let offset = usize::from(fix_first);
            let mut sum = 0.0;
            for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
                for b in 0..free {
                    xi[b + offset] = if k >> b & 1 == 1 { 1.0 } else { -1.0 };
                }
                sum += f(k, &xi);
            }
            sum
        })
        .collect();
    partial.iter().sum()
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(NetError::Domain(format!("need 1 <= p < inf, got {p}")))
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(NetError::Domain(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

/// Rademacher complexity of the convex hull of evaluation vectors
/// `h = (h(x_1), …, h(x_m))`. For each sign vector the supremum over the
/// hull is reached at a vertex. `terms["sup_total"]` is the sum of the
/// per-sign suprema over all `2^m` sign vectors.
pub fn exact_rademacher_hull(vertices: &[Vec<f64>]) -> Result<RademacherReport> {
    let set = SampleSet::new(vertices.to_vec())?;
    let m = set.dim();
    if m > MAX_EXACT_POINTS {
        return Err(NetError::TooManyPoints {
            m,
            max: MAX_EXACT_POINTS,
        });
    }
    let total = sum_over_signs(m, false, |_, xi| {
        vertices
            .iter()
            .map(|h| h.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
    });
    let signs = (1u64 << m) as f64;
    Ok(
        RademacherReport::new(total / signs / m as f64, Method::ExactEnum)
            .term("sup_total", total)
            .term("sign_vectors", signs),
    )
}

/// `γ · E_ξ (1/m) ‖Σ ξ_i x_i‖_{p*}`, the complexity of `{x ↦ ⟨w,x⟩ : ‖w‖_p ≤ γ}`.
/// Exact by enumeration for `m ≤ 24` (the sign of `ξ_1` can be fixed),
/// otherwise a Monte Carlo estimate over `10^5` draws with its standard error.
pub fn linear_rademacher_exact(
    s: &SampleSet,
    p: f64,
    gamma: f64,
    seed: u64,
) -> Result<RademacherReport> {
    check_exponent(p)?;
    check_scale("gamma", gamma)?;
    let (m, r) = (s.len(), dual_exponent(p));
    let norm_of_sum = |xi: &[f64]| {
        let mut v = vec![0.0; s.dim()];
        for (x, &e) in s.points().iter().zip(xi) {
            for (vj, xj) in v.iter_mut().zip(x) {
                *vj += e * xj;
            }
        }
        lp_norm(&v, r)
    };
    if m <= MAX_EXACT_POINTS {
        let total = sum_over_signs(m, true, |_, xi| norm_of_sum(xi));
        let mean = total / (1u64 << (m - 1)) as f64;
        return Ok(
            RademacherReport::new(gamma * mean / m as f64, Method::ClosedFormLinear)
                .term("expected_dual_norm", mean),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = vec![0.0; m];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..MONTE_CARLO_DRAWS {
        for e in xi.iter_mut() {
            *e = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let v = norm_of_sum(&xi);
        sum += v;
        sum_sq += v * v;
    }
    let n = MONTE_CARLO_DRAWS as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let mut report = RademacherReport::new(gamma * mean / m as f64, Method::ClosedFormLinear)
        .term("expected_dual_norm", mean)
        .term("draws", n);
    report.seed = Some(seed);
    report.standard_error = Some(gamma * (var / n).sqrt() / m as f64);
    Ok(report)
}

/// Upper bounds on the linear class `‖w‖_p ≤ γ`. Every valid form is put in
/// `terms` and the smallest one is reported:
///
/// * `p ≤ 2`: `√(γ² min{p*, 4 log 2D} max‖x‖²_{p*} / m)` and, for `p > 1`,
///   `γ √p* ‖X‖_{2,p*} / m`;
/// * `p > 2`: `√2 γ ‖X‖_{2,p*} / m` and `√2 γ max‖x‖_{p*} / m^{1/p}`.
pub fn linear_rademacher_bound(s: &SampleSet, p: f64, gamma: f64) -> Result<RademacherReport> {
    check_exponent(p)?;
    check_scale("gamma", gamma)?;
    let (m, dim, r) = (s.len() as f64, s.dim() as f64, dual_exponent(p));
    let mut forms: Vec<(&str, f64)> = Vec::new();
    if p <= 2.0 {
        let c = r.min(4.0 * (2.0 * dim).ln());
        forms.push((
            "lemma",
            (gamma * gamma * c * s.max_norm(r).powi(2) / m).sqrt(),
        ));
        if r.is_finite() {
            forms.push(("khintchine", gamma * r.sqrt() * s.mixed_norm(r) / m));
        }
    } else {
        forms.push(("mixed", 2f64.sqrt() * gamma * s.mixed_norm(r) / m));
        forms.push((
            "max_form",
            2f64.sqrt() * gamma * s.max_norm(r) / m.powf(1.0 / p),
        ));
    }
    let value = forms.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let mut report = RademacherReport::new(value, Method::UpperBoundLinearLemma);
    for (name, v) in forms {
        report = report.term(name, v);
    }
    Ok(report)
}

/// What the network class is bounded by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "measure", content = "value")]
pub enum Capacity {
    Gamma(f64),
    Mu(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkBound {
    pub depth: usize,
    /// Hidden width `H`; required when `q > p*`.
    pub width: Option<usize>,
    pub params: NormParams,
    pub capacity: Capacity,
}

/// Upper bound for depth-`d` layered ReLU nets with `γ_{p,q} ≤ γ` (or
/// `μ_{p,q} ≤ μ`). The front factor is `γ (2 H^e)^{d−1}` with
/// `e = [1/p* − 1/q]_+`, or `μ^d (2 H^e / d^{1/q})^{d−1}` in the `μ` form;
/// it multiplies the linear-class complexity at `γ = 1`, both the exact
/// value (for `m ≤ 24`) and the closed-form bound, and the smaller product
/// is reported. When `q ≤ p*` the exponent vanishes and no width is needed.
pub fn network_rademacher_bound(b: &NetworkBound, s: &SampleSet) -> Result<RademacherReport> {
    if b.depth == 0 {
        return Err(NetError::Domain("depth must be at least 1".into()));
    }
    let params = b.params;
    let e = (params.inv_p_star() - params.inv_q()).max(0.0);
    let (method, h_factor) = if e == 0.0 {
        (Method::UpperBoundCor2, 1.0)
    } else {
        let h = b.width.ok_or_else(|| {
            NetError::Domain(
                "q > p* requires the hidden width H (bracket [1/p* - 1/q]_+ > 0)".into(),
            )
        })?;
        if h == 0 {
            return Err(NetError::Domain("hidden width H must be at least 1".into()));
        }
        (Method::UpperBoundThm1, (h as f64).powf(e))
    };
    let d = b.depth as f64;
    let front = match b.capacity {
        Capacity::Gamma(g) => {
            check_scale("gamma", g)?;
            g * (2.0 * h_factor).powf(d - 1.0)
        }
        Capacity::Mu(mu) => {
            check_scale("mu", mu)?;
            mu.powf(d) * (2.0 * h_factor / d.powf(params.inv_q())).powf(d - 1.0)
        }
    };
    let lin_bound = linear_rademacher_bound(s, params.p(), 1.0)?.value;
    let mut report = RademacherReport::new(front * lin_bound, method)
        .term("front_factor", front)
        .term("linear_bound", lin_bound)
        .term("via_linear_bound", front * lin_bound);
    if s.len() <= MAX_EXACT_POINTS {
        let lin_exact = linear_rademacher_exact(s, params.p(), 1.0, 0)?.value;
        report = report
            .term("linear_exact", lin_exact)
            .term("via_linear_exact", front * lin_exact);
        report.value = report.value.min(front * lin_exact);
    }
    Ok(report)
}

/// Bound for depth-`d` nets with an antisymmetric 1-Lipschitz activation
/// and `μ_{1,∞} ≤ μ`: `√(4 μ^{2d} log(2D) max‖x‖²_∞ / m)`. There is no
/// `4^{d−1}` factor. `terms["constant_two"]` holds the same expression with
/// 2 in place of 4.
pub fn antisym_bound(depth: usize, mu: f64, s: &SampleSet) -> Result<RademacherReport> {
    if depth == 0 {
        return Err(NetError::Domain("depth must be at least 1".into()));
    }
    check_scale("mu", mu)?;
    let (m, dim) = (s.len() as f64, s.dim() as f64);
    let core =
        mu.powf(2.0 * depth as f64) * (2.0 * dim).ln() * s.max_norm(f64::INFINITY).powi(2) / m;
    Ok(
        RademacherReport::new((4.0 * core).sqrt(), Method::UpperBoundAntisym)
            .term("constant_two", (2.0 * core).sqrt()),
    )
}

/// Search settings for [`empirical_rademacher_lower`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundConfig {
    pub depth: usize,
    /// Hidden width `H` (unused when `depth = 1`).
    pub width: usize,
    pub params: NormParams,
    pub gamma: f64,
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl LowerBoundConfig {
    pub fn new(depth: usize, width: usize, params: NormParams, gamma: f64, seed: u64) -> Self {
        LowerBoundConfig {
            depth,
            width,
            params,
            gamma,
            restarts: 32,
            steps: 200,
            seed,
        }
    }
}

/// Lower bound on the complexity of depth-`d` ReLU nets with
/// `γ_{p,q} ≤ γ`: for every sign vector (with `ξ_1 = +1`, by symmetry) a
/// multi-restart local search looks for weights maximizing
/// `|Σ ξ_i f_W(x_i)|`, and the per-sign maxima are averaged.
///
/// Each step tries a full Frank–Wolfe step on one layer (rows moved to the
/// `ℓ_p` dual direction of their gradient), a damped Frank–Wolfe step of
/// size `0.5·0.9^t` on all layers, and a Gaussian perturbation of the same
/// relative size; candidates are rescaled layer-wise back to the cap and the
/// best is kept if it improves. Every value found is attained by a feasible
/// net, so the average never exceeds the true complexity. Each sign vector
/// draws from its own ChaCha stream.
pub fn empirical_rademacher_lower(
    cfg: &LowerBoundConfig,
    s: &SampleSet,
) -> Result<RademacherReport> {
    let m = s.len();
    if m > MAX_OPT_POINTS {
        return Err(NetError::TooManyPoints {
            m,
            max: MAX_OPT_POINTS,
        });
    }
    if cfg.depth == 0 || (cfg.depth > 1 && cfg.width == 0) {
        return Err(NetError::Domain("need depth >= 1 and width >= 1".into()));
    }
    check_scale("gamma", cfg.gamma)?;
    let mut report = RademacherReport::new(0.0, Method::OptLowerBound)
        .term("restarts", cfg.restarts as f64)
        .term("steps", cfg.steps as f64);
    report.seed = Some(cfg.seed);
    if cfg.gamma == 0.0 || cfg.restarts == 0 {
        return Ok(report);
    }
    let search = Search::new(cfg, s);
    let total = sum_over_signs(m, true, |k, xi| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k);
        search.best(xi, &mut rng)
    });
    report.value = total / (1u64 << (m - 1)) as f64;
    Ok(report)
}

/// Dense layers as `(rows, cols, row-major data)`.
type Layers = Vec<(usize, usize, Vec<f64>)>;

struct Search<'a> {
    cfg: &'a LowerBoundConfig,
    points: &'a [Vec<f64>],
    shapes: Vec<(usize, usize)>,
    /// Per-layer group norm after projection, `γ^{1/d}`.
    layer_norm: f64,
}

impl<'a> Search<'a> {
    fn new(cfg: &'a LowerBoundConfig, s: &'a SampleSet) -> Self {
        let (d, h, dim) = (cfg.depth, cfg.width, s.dim());
        let shapes = if d == 1 {
            vec![(1, dim)]
        } else {
            let mut v = vec![(h, dim)];
            v.extend(std::iter::repeat_n((h, h), d - 2));
            v.push((1, h));
            v
        };
        Search {
            cfg,
            points: s.points(),
            shapes,
            layer_norm: cfg.gamma.powf(1.0 / d as f64),
        }
    }

    fn best(&self, xi: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        let mut best = 0.0f64;
        for _ in 0..self.cfg.restarts {
            let init: Layers = self
                .shapes
                .iter()
                .map(|&(r, c)| (r, c, (0..r * c).map(|_| gaussian(rng)).collect()))
                .collect();
            let Some(mut w) = self.project(init) else {
                continue;
            };
            let mut value = self.objective(&w, xi);
            for t in 0..self.cfg.steps {
                let step = 0.5 * 0.9f64.powi(t as i32);
                let grad = self.gradient(&w, xi);
                let candidates = [
                    self.frank_wolfe(&w, &grad, 1.0, Some(t % self.shapes.len())),
                    self.frank_wolfe(&w, &grad, step, None),
                    self.perturb(&w, step, rng),
                ];
                for c in candidates.into_iter().flatten() {
                    let v = self.objective(&c, xi);
                    if v > value {
                        value = v;
                        w = c;
                    }
                }
            }
            best = best.max(value);
        }
        best
    }

    fn row_norm(&self, row: &[f64]) -> f64 {
        lp_norm(row, self.cfg.params.p())
    }

    fn group_norm(&self, (rows, cols, data): &(usize, usize, Vec<f64>)) -> f64 {
        let norms: Vec<f64> = (0..*rows)
            .map(|i| self.row_norm(&data[i * cols..(i + 1) * cols]))
            .collect();
        lp_norm(&norms, self.cfg.params.q())
    }

    /// Rescales each layer to group norm `γ^{1/d}`; `None` if a layer is zero.
    fn project(&self, mut w: Layers) -> Option<Layers> {
        for layer in w.iter_mut() {
            let n = self.group_norm(layer);
            if n == 0.0 || !n.is_finite() {
                return None;
            }
            let c = self.layer_norm / n;
            layer.2.iter_mut().for_each(|v| *v *= c);
        }
        Some(w)
    }

    /// Per-point activations, input first and the scalar output last.
    fn activations(&self, w: &Layers, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (k, (rows, cols, data)) in w.iter().enumerate() {
            let prev = &acts[k];
            let mut z: Vec<f64> = (0..*rows)
                .map(|i| {
                    data[i * cols..(i + 1) * cols]
                        .iter()
                        .zip(prev)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            if k + 1 < w.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    fn signed_sum(&self, w: &Layers, xi: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(xi)
            .map(|(x, e)| e * self.activations(w, x).last().unwrap()[0])
            .sum()
    }

    fn objective(&self, w: &Layers, xi: &[f64]) -> f64 {
        self.signed_sum(w, xi).abs() / self.points.len() as f64
    }

    /// Gradient of `|Σ ξ_i f(x_i)|`, with the sign of the sum taken as `+1` at 0.
    fn gradient(&self, w: &Layers, xi: &[f64]) -> Vec<Vec<f64>> {
        let sign = if self.signed_sum(w, xi) < 0.0 {
            -1.0
        } else {
            1.0
        };
        let mut grad: Vec<Vec<f64>> = w.iter().map(|(r, c, _)| vec![0.0; r * c]).collect();
        for (x, e) in self.points.iter().zip(xi) {
            let acts = self.activations(w, x);
            let mut delta = vec![sign * e];
            for k in (0..w.len()).rev() {
                let (rows, cols, data) = &w[k];
                let input = &acts[k];
                for i in 0..*rows {
                    for j in 0..*cols {
                        grad[k][i * cols + j] += delta[i] * input[j];
                    }
                }
                if k == 0 {
                    break;
                }
                delta = (0..*cols)
                    .map(|j| {
                        if input[j] > 0.0 {
                            (0..*rows).map(|i| data[i * cols + j] * delta[i]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        grad
    }

    /// Moves every row (of `only`, or of all layers) a fraction `step`
    /// toward the unit-`ℓ_p` direction best aligned with its gradient,
    /// scaled to the row's current norm.
    fn frank_wolfe(
        &self,
        w: &Layers,
        grad: &[Vec<f64>],
        step: f64,
        only: Option<usize>,
    ) -> Option<Layers> {
        let mut out = w.clone();
        let p = self.cfg.params.p();
        for (k, (rows, cols, data)) in out.iter_mut().enumerate() {
            if only.is_some_and(|o| o != k) {
                continue;
            }
            let fallback = self.layer_norm / (*rows as f64).powf(self.cfg.params.inv_q());
            for i in 0..*rows {
                let g = &grad[k][i * *cols..(i + 1) * *cols];
                let Some(dir) = dual_direction(g, p) else {
                    continue;
                };
                let row = &mut data[i * *cols..(i + 1) * *cols];
                let n = lp_norm(row, p);
                let n = if n > 0.0 { n } else { fallback };
                for (v, u) in row.iter_mut().zip(&dir) {
                    *v = (1.0 - step) * *v + step * n * u;
                }
            }
        }
        self.project(out)
    }

    fn perturb(&self, w: &Layers, scale: f64, rng: &mut ChaCha8Rng) -> Option<Layers> {
        let mut out = w.clone();
        for (_, _, data) in out.iter_mut() {
            let rms = (data.iter().map(|v| v * v).sum::<f64>() / data.len() as f64).sqrt();
            for v in data.iter_mut() {
                *v += scale * rms * gaussian(rng);
            }
        }
        self.project(out)
    }
}

/// Unit `ℓ_p` vector `u` with `⟨u, g⟩ = ‖g‖_{p*}`; `None` for `g = 0`.
fn dual_direction(g: &[f64], p: f64) -> Option<Vec<f64>> {
    let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if gmax == 0.0 {
        return None;
    }
    if p == 1.0 {
        let j = g.iter().position(|v| v.abs() == gmax).expect("max exists");
        let mut u = vec![0.0; g.len()];
        u[j] = g[j].signum();
        return Some(u);
    }
    let r = dual_exponent(p);
    let mut u: Vec<f64> = g
        .iter()
        .map(|v| v.signum() * (v.abs() / gmax).powf(r - 1.0))
        .collect();
    let n = lp_norm(&u, p);
    u.iter_mut().for_each(|v| *v /= n);
    Some(u)
}

/// Which labelings [`shatter_check`] tries.
#[derive(Debug, Clone, PartialEq)]
pub enum Labelings {
    All,
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShatterCheck {
    /// `min_i y_i f(x_i)` for each labeling, in order.
    pub worst_margins: Vec<f64>,
    pub min_margin: f64,
    pub failures: usize,
    pub passed: bool,
}

/// Builds a net for every labeling and checks `y_i f(x_i) ≥ 1 − 1e−9` on
/// every point. `inputs` are full network inputs (including any bias
/// coordinate). With [`Labelings::All`], labeling `k` gives point `i` the
/// label `+1` iff bit `i` of `k` is set.
pub fn shatter_check<N, B>(
    builder: B,
    inputs: &[Vec<f64>],
    labelings: &Labelings,
) -> Result<ShatterCheck>
where
    N: Forward,
    B: Fn(&[f64]) -> Result<N> + Sync,
{
    let m = inputs.len();
    if m == 0 {
        return Err(NetError::InvalidSamples("no points to shatter".into()));
    }
    let margin = |labels: &[f64]| -> Result<f64> {
        let net = builder(labels)?;
        inputs
            .iter()
            .zip(labels)
            .try_fold(
                f64::INFINITY,
                |acc, (x, y)| Ok(acc.min(y * net.forward(x)?)),
            )
    };
    let worst: Vec<f64> = match labelings {
        Labelings::All => {
            if m > MAX_SHATTER_POINTS {
                return Err(NetError::TooManyPoints {
                    m,
                    max: MAX_SHATTER_POINTS,
                });
            }
            (0..1u64 << m)
                .into_par_iter()
                .map(|k| margin(&labeling(m, k)))
                .collect::<Result<_>>()?
        }
        Labelings::List(list) => {
            for labels in list {
                if labels.len() != m || labels.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(NetError::InvalidLabels(format!(
                        "each labeling needs {m} entries of +1 or -1"
                    )));
                }
            }
            list.par_iter().map(|l| margin(l)).collect::<Result<_>>()?
        }
    };
    let failures = worst
        .iter()
        .filter(|&&v| v.is_nan() || v < 1.0 - SHATTER_TOL)
        .count();
    let min_margin = worst.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ShatterCheck {
        worst_margins: worst,
        min_margin,
        failures,
        passed: failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{
        counterexample_sets, hypercube_inputs, shattering_layers, ShatterSpec,
    };

    fn params(p: f64, q: f64) -> NormParams {
        NormParams::new(p, q).unwrap()
    }

    fn set(points: Vec<Vec<f64>>) -> SampleSet {
        SampleSet::new(points).unwrap()
    }

    #[test]
    fn hull_counterexample() {
        let (h, hp) = counterexample_sets();
        let a = exact_rademacher_hull(&h).unwrap();
        let b = exact_rademacher_hull(&hp).unwrap();
        assert_eq!(a.terms["sup_total"], 12.0);
        assert_eq!(b.terms["sup_total"], 13.0);
        assert_eq!(a.value, 12.0 / 24.0);
        assert_eq!(b.value, 13.0 / 24.0);
        assert!(b.value > a.value);
        assert_eq!(exact_rademacher_hull(&[vec![0.0; 3]]).unwrap().value, 0.0);
    }

    #[test]
    fn hull_ignores_interior_and_sign() {
        let (h, _) = counterexample_sets();
        let mut inner = h.clone();
        inner.push(vec![0.5, 0.5, 1.0]);
        assert_eq!(
            exact_rademacher_hull(&inner).unwrap().value,
            exact_rademacher_hull(&h).unwrap().value
        );
        let neg: Vec<Vec<f64>> = h.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        assert_eq!(
            exact_rademacher_hull(&neg).unwrap().value,
            exact_rademacher_hull(&h).unwrap().value
        );
        assert!(matches!(
            exact_rademacher_hull(&[vec![1.0; 25]]),
            Err(NetError::TooManyPoints { .. })
        ));
    }

    #[test]
    fn linear_exact_examples() {
        let one = set(vec![vec![3.0, 4.0]]);
        assert_eq!(
            linear_rademacher_exact(&one, 2.0, 1.0, 0).unwrap().value,
            5.0
        );
        let two = set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = linear_rademacher_exact(&two, 2.0, 1.0, 0).unwrap().value;
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let scaled = set(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(
            linear_rademacher_exact(&scaled, 2.0, 1.0, 0).unwrap().value,
            2.0 * v
        );
    }

    #[test]
    fn linear_monte_carlo_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![gaussian(&mut rng), gaussian(&mut rng)])
            .collect();
        let s = set(pts);
        let mc = linear_rademacher_exact(&s, 2.0, 1.0, 9).unwrap();
        let se = mc.standard_error.unwrap();
        assert!(se > 0.0 && mc.seed == Some(9));
        assert_eq!(mc, linear_rademacher_exact(&s, 2.0, 1.0, 9).unwrap());
        let bound = linear_rademacher_bound(&s, 2.0, 1.0).unwrap().value;
        assert!(mc.value <= bound);
    }

    #[test]
    fn linear_bound_forms() {
        let s = set(vec![vec![0.5], vec![-2.0]]);
        let b = linear_rademacher_bound(&s, 2.0, 1.0).unwrap();
        assert!((b.terms["lemma"] - (2.0 * 4.0 / 2.0f64).sqrt()).abs() < 1e-15);
        let b2 = linear_rademacher_bound(&s, 2.0, 2.0).unwrap();
        assert_eq!(b2.value, 2.0 * b.value);
        let b3 = linear_rademacher_bound(&s, 3.0, 1.0).unwrap();
        assert!(b3.terms.contains_key("mixed") && b3.terms.contains_key("max_form"));
        assert!(linear_rademacher_bound(&s, 0.5, 1.0).is_err());
    }

    #[test]
    fn exact_below_linear_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let m = 1 + trial % 12;
            let dim = 1 + trial % 6;
            let p = [1.0, 1.5, 2.0, 3.0][trial % 4];
            let s = set((0..m)
                .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
                .collect());
            let exact = linear_rademacher_exact(&s, p, 1.3, 0).unwrap().value;
            let bound = linear_rademacher_bound(&s, p, 1.3).unwrap();
            for (name, v) in &bound.terms {
                assert!(exact <= v * (1.0 + 1e-12), "{name}: {exact} > {v}");
            }
        }
    }

    #[test]
    fn network_bound_forms() {
        let s = set(vec![vec![1.0, -1.0], vec![0.5, 2.0]]);
        let lin = linear_rademacher_bound(&s, 2.0, 1.0).unwrap().value;
        let d1 = network_rademacher_bound(
            &NetworkBound {
                depth: 1,
                width: None,
                params: params(2.0, 2.0),
                capacity: Capacity::Gamma(3.0),
            },
            &s,
        )
        .unwrap();
        assert_eq!(d1.method, Method::UpperBoundCor2);
        assert_eq!(d1.terms["front_factor"], 3.0);
        assert_eq!(d1.terms["via_linear_bound"], 3.0 * lin);

        let thm1 = NetworkBound {
            depth: 2,
            width: Some(4),
            params: params(2.0, f64::INFINITY),
            capacity: Capacity::Gamma(1.0),
        };
        let r = network_rademacher_bound(&thm1, &s).unwrap();
        assert_eq!(r.method, Method::UpperBoundThm1);
        assert!((r.terms["front_factor"] - 4.0).abs() < 1e-15);
        assert!(network_rademacher_bound(
            &NetworkBound {
                width: None,
                ..thm1
            },
            &s
        )
        .is_err());

        let cor = NetworkBound {
            depth: 3,
            width: Some(5),
            params: params(2.0, 2.0),
            capacity: Capacity::Gamma(1.0),
        };
        let a = network_rademacher_bound(&cor, &s).unwrap();
        let b = network_rademacher_bound(&NetworkBound { width: None, ..cor }, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn antisym_examples() {
        let s = set(vec![vec![1.0, -3.0], vec![0.5, 2.0]]);
        let a1 = antisym_bound(1, 1.0, &s).unwrap().value;
        assert_eq!(antisym_bound(4, 1.0, &s).unwrap().value, a1);
        let base = antisym_bound(3, 1.5, &s).unwrap().value;
        let doubled = antisym_bound(3, 3.0, &s).unwrap().value;
        assert!((doubled / base - 8.0).abs() < 1e-12);
        for d in 2..5 {
            let mu = 1.7;
            let thm1 = network_rademacher_bound(
                &NetworkBound {
                    depth: d,
                    width: None,
                    params: params(1.0, f64::INFINITY),
                    capacity: Capacity::Mu(mu),
                },
                &s,
            )
            .unwrap();
            assert!(antisym_bound(d, mu, &s).unwrap().value < thm1.terms["via_linear_bound"]);
        }
    }

    #[test]
    fn lower_bound_recovers_linear() {
        let s = set(vec![
            vec![1.0, -0.5, 2.0],
            vec![0.3, 1.0, -1.0],
            vec![-2.0, 0.1, 0.4],
        ]);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let mut cfg = LowerBoundConfig::new(1, 1, params(p, 2.0), 2.5, 42);
            cfg.restarts = 2;
            cfg.steps = 5;
            let low = empirical_rademacher_lower(&cfg, &s).unwrap().value;
            let exact = linear_rademacher_exact(&s, p, 2.5, 0).unwrap().value;
            assert!((low / exact - 1.0).abs() < 1e-6, "p={p}: {low} vs {exact}");
        }
    }

    #[test]
    fn lower_bound_sandwich_and_determinism() {
        let s = set(vec![
            vec![1.0, -0.5],
            vec![0.3, 1.0],
            vec![-2.0, 0.1],
            vec![0.7, 0.7],
        ]);
        let pq = params(2.0, 2.0);
        let mut cfg = LowerBoundConfig::new(2, 3, pq, 1.5, 7);
        cfg.restarts = 3;
        cfg.steps = 30;
        let low = empirical_rademacher_lower(&cfg, &s).unwrap();
        assert!(low.value > 0.0);
        let up = network_rademacher_bound(
            &NetworkBound {
                depth: 2,
                width: Some(3),
                params: pq,
                capacity: Capacity::Gamma(1.5),
            },
            &s,
        )
        .unwrap();
        assert!(low.value <= up.value);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| empirical_rademacher_lower(&cfg, &s).unwrap());
        assert_eq!(single, low);
        let zero = LowerBoundConfig { gamma: 0.0, ..cfg };
        assert_eq!(empirical_rademacher_lower(&zero, &s).unwrap().value, 0.0);
    }

    #[test]
    fn shatter_check_cases() {
        let spec = ShatterSpec::new(2, 2, 1, params(2.0, 2.0)).unwrap();
        let inputs = hypercube_inputs(2);
        let ok = shatter_check(|y| shattering_layers(&spec, y), &inputs, &Labelings::All).unwrap();
        assert!(ok.passed && ok.worst_margins.len() == 16 && ok.min_margin >= 1.0);

        let constant = Labelings::List(vec![vec![1.0; 4], vec![-1.0; 4]]);
        assert!(
            shatter_check(|y| shattering_layers(&spec, y), &inputs, &constant)
                .unwrap()
                .passed
        );

        let flipped = |y: &[f64]| {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            shattering_layers(&spec, &neg)
        };
        let bad = shatter_check(flipped, &inputs, &Labelings::All).unwrap();
        assert!(!bad.passed && bad.failures == 16 && bad.min_margin <= -1.0);
    }
}
