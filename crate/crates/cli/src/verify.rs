//! The `verify` suites. Each suite draws from its own seed stream, derived
//! from the global seed and the suite name, so suites are independent of
//! each other and of the order they run in.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use netcap_core::constructions::{
    counterexample_sets, halfspace_gamma, halfspace_intersection_net, hypercube_inputs,
    hypercube_vertex, labeling, shattering_layers, ShatterSpec,
};
use netcap_core::norms::{
    gamma_pq, lp_norm, mu_pq, nu_p, path_norm, path_norm_layered, per_unit_gamma, NormParams,
};
use netcap_core::rademacher::{
    empirical_rademacher_lower, exact_rademacher_hull, linear_rademacher_bound,
    linear_rademacher_exact, network_rademacher_bound, shatter_check, Capacity, Labelings,
    LowerBoundConfig, NetworkBound, SampleSet,
};
use netcap_core::rebalance::{balance_layers, balance_units, prune_dead, unitize_units};
use netcap_core::sample::{gaussian_vector, random_dag, random_layered};
use netcap_core::transforms::{convex_combine, layerize, treeify, weighted_sum, DEFAULT_MAX_NODES};
use netcap_core::{Activation, LayeredNet, Network, NodeId, Role};

use crate::report::{Case, VerifyReport};

pub const SUITES: [&str; 7] = [
    "balancing",
    "path-equivalence",
    "transforms",
    "convexity",
    "shattering",
    "rademacher-sandwich",
    "convexnn-equivalence",
];

/// Tolerance for norm identities. Function equality uses `--tol-rel`.
pub const NORM_TOL: f64 = 1e-12;

const PS: [f64; 3] = [1.0, 1.5, 2.0];
const QS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Runs one suite, or every suite for `"all"`.
pub fn run(suite: &str, seed: u64, tol_rel: f64) -> Result<VerifyReport> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        bail!(
            "unknown suite '{suite}' (expected one of {}, all)",
            SUITES.join(", ")
        );
    };
    let per_suite: Vec<Vec<Case>> = names
        .par_iter()
        .map(|name| run_one(name, seed, tol_rel))
        .collect::<Result<_>>()?;
    Ok(VerifyReport::new(
        suite,
        seed,
        tol_rel,
        per_suite.into_iter().flatten().collect(),
    ))
}

fn run_one(name: &str, seed: u64, tol_rel: f64) -> Result<Vec<Case>> {
    let mut rng = suite_rng(seed, name);
    match name {
        "balancing" => balancing(&mut rng, tol_rel),
        "path-equivalence" => path_equivalence(&mut rng, tol_rel),
        "transforms" => transforms(&mut rng, tol_rel),
        "convexity" => convexity(&mut rng, tol_rel),
        "shattering" => shattering(&mut rng),
        "rademacher-sandwich" => rademacher_sandwich(&mut rng),
        "convexnn-equivalence" => convexnn_equivalence(&mut rng, tol_rel),
        _ => unreachable!("suite names are checked by run"),
    }
}

/// `ChaCha8` seeded with `splitmix64(seed ^ fnv1a(name))`.
pub fn suite_rng(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(name)))
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if a == b {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative error with a unit floor on the scale, for network outputs that
/// can sit near zero.
fn fn_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// How far `lhs ≤ rhs` is violated, relative to `rhs`.
fn violation(lhs: f64, rhs: f64) -> f64 {
    if lhs <= rhs {
        0.0
    } else {
        (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Largest value, with NaN counted as infinitely bad.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| {
        if v.is_nan() {
            f64::INFINITY
        } else {
            acc.max(v)
        }
    })
}

fn combo(i: usize) -> NormParams {
    NormParams::new(PS[i % 3], QS[(i / 3) % 3]).expect("valid exponents")
}

fn random_hidden(rng: &mut ChaCha8Rng, depth: usize, max_width: usize) -> Vec<usize> {
    (1..depth)
        .map(|_| rng.random_range(1..=max_width))
        .collect()
}

fn output_gap<F, G>(rng: &mut ChaCha8Rng, dim: usize, samples: usize, f: F, g: G) -> Result<f64>
where
    F: Fn(&[f64]) -> netcap_core::Result<f64>,
    G: Fn(&[f64]) -> netcap_core::Result<f64>,
{
    let mut gap: f64 = 0.0;
    for _ in 0..samples {
        let x = gaussian_vector(rng, dim);
        gap = worst([gap, fn_err(f(&x)?, g(&x)?)]);
    }
    Ok(gap)
}

fn balancing(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Case>> {
    const S: &str = "balancing";
    const NETS: usize = 200;
    let (mut identity, mut invariant, mut ineq, mut func, mut idem) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..NETS {
        let depth = 1 + i % 5;
        let params = combo(i / 5);
        let dim = rng.random_range(1..=4);
        let hidden = random_hidden(rng, depth, 6);
        let net = random_layered(rng, dim, &hidden, Activation::Relu);
        let d = depth as f64;
        let (mu, gamma) = (mu_pq(&net, params), gamma_pq(&net, params));
        ineq = worst([
            ineq,
            violation(gamma, (mu / d.powf(params.inv_q())).powf(d)),
        ]);

        let b = balance_layers(&net, params)?;
        let mu_b = mu_pq(&b, params);
        identity = worst([
            identity,
            rel_err(mu_b, d.powf(params.inv_q()) * gamma.powf(1.0 / d)),
        ]);
        invariant = worst([invariant, rel_err(gamma_pq(&b, params), gamma)]);
        func = worst([
            func,
            output_gap(rng, dim, 5, |x| b.forward(x), |x| net.forward(x))?,
        ]);
        let again = balance_layers(&b, params)?;
        let drift = b
            .layers()
            .iter()
            .zip(again.layers())
            .flat_map(|(x, y)| x.entries().iter().zip(y.entries()))
            .map(|(&x, &y)| rel_err(x, y));
        idem = worst([idem, worst(drift)]);
    }
    let desc =
        |what: &str| format!("{what}; {NETS} relu nets, d in 1..5, H in 1..6, 9 (p,q) pairs");
    Ok(vec![
        Case::new(
            S,
            "mu-identity",
            desc("max relative error of mu against d^(1/q) gamma^(1/d) after balancing"),
            "balanced nets attain the minimal mu",
            identity,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "gamma-invariant",
            desc("max relative change of gamma under balancing"),
            "balancing rescales layers without changing gamma",
            invariant,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "inequality",
            desc("max relative violation of gamma <= (mu / d^(1/q))^d before balancing"),
            "gamma is bounded by the AM-GM bound on mu",
            ineq,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "function",
            desc("max output error after balancing, 5 gaussian inputs per net"),
            "positive homogeneity of relu",
            func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "idempotent",
            desc("max relative weight change when balancing a balanced net"),
            "balanced nets are fixed points",
            idem,
            0.0,
            NORM_TOL,
        ),
    ])
}

/// A layered net viewed as a DAG with roughly a quarter of its edges removed
/// and dead units pruned.
fn thinned_layered_dag(rng: &mut ChaCha8Rng) -> Network {
    loop {
        let depth = rng.random_range(1..=4);
        let dim = rng.random_range(1..=3);
        let hidden = random_hidden(rng, depth, 4);
        let full = random_layered(rng, dim, &hidden, Activation::Relu).to_dag();
        let kept = full
            .edges()
            .iter()
            .filter(|_| rng.random_bool(0.75))
            .copied()
            .collect();
        let net = Network::new(
            full.num_inputs(),
            Activation::Relu,
            false,
            full.nodes().to_vec(),
            kept,
        )
        .expect("subgraph of a valid DAG");
        let net = prune_dead(&net);
        if net.in_degree(net.output_id()) > 0 {
            return net;
        }
    }
}

fn hidden_norm_gap(net: &Network, p: f64) -> f64 {
    worst(
        net.nodes()
            .iter()
            .filter(|n| n.role == Role::Hidden)
            .map(|n| {
                let w: Vec<f64> = net.incoming(n.id).map(|e| e.weight).collect();
                (lp_norm(&w, p) - 1.0).abs()
            }),
    )
}

/// Sum over all input→output paths of `|Π w|^p`, by explicit recursion.
fn path_norm_by_enumeration(net: &Network, p: f64) -> f64 {
    fn walk(net: &Network, id: NodeId, acc: f64, p: f64) -> f64 {
        if net.role(id) == Some(Role::Output) {
            return acc;
        }
        net.outgoing(id)
            .map(|e| walk(net, e.dst, acc * e.weight.abs().powf(p), p))
            .sum()
    }
    let total: f64 = (0..net.num_inputs())
        .map(|i| walk(net, net.input_id(i), 1.0, p))
        .sum();
    total.powf(1.0 / p)
}

fn small_dag(rng: &mut ChaCha8Rng) -> Network {
    let inputs = rng.random_range(1..=3);
    let hidden = rng.random_range(0..=5);
    random_dag(rng, inputs, hidden, 12, Activation::Relu)
}

fn path_equivalence(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Case>> {
    const S: &str = "path-equivalence";
    const NETS: usize = 200;
    const INPUTS: usize = 200;
    let (mut per_unit, mut phi_inv, mut unit, mut func, mut dp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..NETS {
        let p = PS[i % 3];
        let net = thinned_layered_dag(rng);
        let u = unitize_units(&net, p)?;
        let phi = path_norm(&u, p)?;
        per_unit = worst([per_unit, rel_err(phi, per_unit_gamma(&u, p)?)]);
        phi_inv = worst([phi_inv, rel_err(phi, path_norm(&net, p)?)]);
        unit = worst([unit, hidden_norm_gap(&u, p)]);
        let dim = net.num_inputs();
        func = worst([
            func,
            output_gap(rng, dim, INPUTS, |x| u.forward(x), |x| net.forward(x))?,
        ]);
    }
    for i in 0..NETS {
        let net = small_dag(rng);
        let p = PS[i % 3];
        dp = worst([
            dp,
            rel_err(path_norm(&net, p)?, path_norm_by_enumeration(&net, p)),
        ]);
    }
    let desc = |what: &str| format!("{what}; {NETS} layered DAGs with about 25% of edges removed");
    Ok(vec![
        Case::new(
            S,
            "phi-equals-per-unit-gamma",
            desc("max relative gap between path norm and per-unit gamma after unitizing"),
            "unitized nets: path norm is the product of per-level unit norms",
            per_unit,
            0.0,
            1e-9,
        ),
        Case::new(
            S,
            "phi-invariant",
            desc("max relative change of the path norm under unitizing"),
            "unitizing keeps every path product",
            phi_inv,
            0.0,
            1e-9,
        ),
        Case::new(
            S,
            "unit-norms",
            desc("max deviation of a hidden unit's incoming norm from 1 after unitizing"),
            "unitizing normalizes every hidden unit",
            unit,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "function",
            desc(&format!("max output error after unitizing, {INPUTS} inputs per net")),
            "positive homogeneity of relu",
            func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "dp-vs-enumeration",
            format!(
                "max relative gap between the path-norm DP and explicit path enumeration; {NETS} random DAGs with at most 12 edges"
            ),
            "path norm is the lp norm of path products",
            dp,
            0.0,
            NORM_TOL,
        ),
    ])
}

fn transforms(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Case>> {
    const S: &str = "transforms";
    const NETS: usize = 100;
    let (mut l_phi, mut l_depth, mut l_func, mut subdivided) = (0.0, 0.0, 0.0, 0);
    for _ in 0..NETS {
        let net = loop {
            let n = small_dag(rng);
            if n.depth() <= 4 {
                break n;
            }
        };
        let l = layerize(&net, net.depth(), DEFAULT_MAX_NODES)?;
        if l.subdivisions > 0 {
            subdivided += 1;
        }
        if l.layered.depth() != net.depth() {
            l_depth += 1.0;
        }
        for p in PS {
            l_phi = worst([
                l_phi,
                rel_err(path_norm_layered(&l.layered, p)?, path_norm(&net, p)?),
            ]);
        }
        for _ in 0..20 {
            let mut x = gaussian_vector(rng, net.num_inputs());
            if l.nonnegative_inputs_required {
                x.iter_mut().for_each(|v| *v = v.abs());
            }
            l_func = worst([l_func, fn_err(l.layered.forward(&x)?, net.forward(&x)?)]);
        }
    }

    let (mut t_deg, mut t_phi, mut t_func, mut copies) = (0.0, 0.0, 0.0, 0);
    for _ in 0..NETS {
        let net = small_dag(rng);
        let t = treeify(&net, DEFAULT_MAX_NODES)?;
        copies += t.copies;
        t_deg += t
            .net
            .nodes()
            .iter()
            .filter(|n| n.role == Role::Hidden && t.net.out_degree(n.id) != 1)
            .count() as f64;
        for p in PS {
            t_phi = worst([t_phi, rel_err(path_norm(&t.net, p)?, path_norm(&net, p)?)]);
        }
        let dim = net.num_inputs();
        t_func = worst([
            t_func,
            output_gap(rng, dim, 20, |x| t.net.forward(x), |x| net.forward(x))?,
        ]);
    }

    let ldesc = |what: &str| {
        format!(
            "{what}; {NETS} DAGs of depth <= 4 with skip edges, {subdivided} needed subdivision"
        )
    };
    let tdesc =
        |what: &str| format!("{what}; {NETS} DAGs with at most 12 edges, {copies} copies made");
    Ok(vec![
        Case::new(
            S,
            "layerize-phi",
            ldesc("max relative change of the path norm for p in {1, 1.5, 2}"),
            "layerizing keeps the path multiset",
            l_phi,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "layerize-depth",
            ldesc("nets whose layered depth differs from the DAG depth"),
            "layerizing keeps depth",
            l_depth,
            0.0,
            0.0,
        ),
        Case::new(
            S,
            "layerize-function",
            ldesc("max output error on the validated input domain, 20 inputs per net"),
            "layerizing keeps the function",
            l_func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "treeify-out-degree",
            tdesc("hidden nodes with out-degree other than 1"),
            "treeified nets are trees below the output",
            t_deg,
            0.0,
            0.0,
        ),
        Case::new(
            S,
            "treeify-phi",
            tdesc("max relative change of the path norm for p in {1, 1.5, 2}"),
            "treeifying keeps the path multiset",
            t_phi,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "treeify-function",
            tdesc("max output error, 20 inputs per net"),
            "treeifying keeps the function",
            t_func,
            0.0,
            tol,
        ),
    ])
}

fn convexity(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Case>> {
    const S: &str = "convexity";
    const PAIRS: usize = 100;
    let (mut func, mut cap, mut formula, mut rows, mut tri_func, mut tri) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut capped = 0;
    for i in 0..PAIRS {
        let depth = 2 + i % 2;
        let params = combo(i / 2);
        let dim = rng.random_range(1..=3);
        let hu = random_hidden(rng, depth, 4);
        let hv = random_hidden(rng, depth, 4);
        let u = random_layered(rng, dim, &hu, Activation::Relu);
        let v = random_layered(rng, dim, &hv, Activation::Relu);
        let alpha: f64 = rng.random();
        let w = convex_combine(&u, &v, alpha, params)?;
        func = worst([
            func,
            output_gap(
                rng,
                dim,
                5,
                |x| w.forward(x),
                |x| Ok(alpha * u.forward(x)? + (1.0 - alpha) * v.forward(x)?),
            )?,
        ]);
        let (gu, gv, gw) = (
            gamma_pq(&u, params),
            gamma_pq(&v, params),
            gamma_pq(&w, params),
        );
        let kappa = (depth - 1) as f64 * params.inv_q() + 1.0 / params.p();
        let (a, b) = (alpha * gu, (1.0 - alpha) * gv);
        let expected = (a.powf(1.0 / kappa) + b.powf(1.0 / kappa)).powf(kappa);
        formula = worst([formula, rel_err(gw, expected)]);
        for k in 0..depth - 1 {
            let want = u.layers()[k].rows() + v.layers()[k].rows();
            if w.layers()[k].rows() != want {
                rows += 1.0;
            }
        }
        let sum = weighted_sum(&u, &v, 1.0, 1.0, params)?;
        tri_func = worst([
            tri_func,
            output_gap(
                rng,
                dim,
                5,
                |x| sum.forward(x),
                |x| Ok(u.forward(x)? + v.forward(x)?),
            )?,
        ]);
        if params.inv_q() <= (1.0 - 1.0 / params.p()) / (depth - 1) as f64 {
            capped += 1;
            cap = worst([cap, violation(gw, gu.max(gv))]);
            tri = worst([tri, violation(gamma_pq(&sum, params), gu + gv)]);
        }
    }
    let desc = |what: &str| format!("{what}; {PAIRS} pairs, d in {{2, 3}}, 9 (p,q) pairs");
    let cdesc =
        |what: &str| format!("{what}; the {capped} of {PAIRS} pairs with 1/q <= (1 - 1/p)/(d - 1)");
    Ok(vec![
        Case::new(
            S,
            "function",
            desc("max error of W(x) against a f(x) + (1 - a) g(x), 5 inputs per pair"),
            "side-by-side nets add their outputs",
            func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "gamma-max",
            cdesc("max relative violation of gamma(W) <= max(gamma(U), gamma(V))"),
            "the gamma ball is convex in function space",
            cap,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "gamma-formula",
            desc("max relative gap between gamma(W) and (a^(1/k) + b^(1/k))^k"),
            "per-layer norm split of the combined net",
            formula,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "hidden-rows",
            desc("hidden layers whose row count is not the sum of the two sides"),
            "widths add",
            rows,
            0.0,
            0.0,
        ),
        Case::new(
            S,
            "sum-function",
            desc("max error of the unweighted sum net against f(x) + g(x)"),
            "side-by-side nets add their outputs",
            tri_func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "triangle",
            cdesc("max relative violation of gamma(U + V) <= gamma(U) + gamma(V)"),
            "gamma satisfies the triangle inequality on the function class",
            tri,
            0.0,
            tol,
        ),
    ])
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn random_signs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

fn shattering(rng: &mut ChaCha8Rng) -> Result<Vec<Case>> {
    const S: &str = "shattering";
    let params = NormParams::new(2.0, 2.0)?;
    let mut cases = Vec::new();
    for dim in 1..=3 {
        let spec = ShatterSpec::new(dim, 2, 1, params)?;
        let check = shatter_check(
            |labels| shattering_layers(&spec, labels),
            &hypercube_inputs(dim),
            &Labelings::All,
        )?;
        let total = 1u64 << spec.points();
        cases.push(Case::new(
            S,
            &format!("all-labelings-D{dim}"),
            format!(
                "margin deficit max(0, 1 - min margin) over all {total} labelings of {{-1,1}}^{dim}; {} failed",
                check.failures
            ),
            "the hypercube is shattered with unit margin",
            (1.0 - check.min_margin).max(0.0),
            0.0,
            1e-9,
        ));
    }

    let mut deep = 0.0;
    let mut configs = 0;
    for dim in 1..=3 {
        let inputs = hypercube_inputs(dim);
        for depth in 3..=5 {
            for width in 1..=3 {
                let m = 1usize << dim;
                let labels = labeling(m, rng.random_range(0..1u64 << m));
                let shallow = shattering_layers(&ShatterSpec::new(dim, 2, 1, params)?, &labels)?;
                let tall =
                    shattering_layers(&ShatterSpec::new(dim, depth, width, params)?, &labels)?;
                for x in &inputs {
                    deep = worst([deep, (tall.forward(x)? - shallow.forward(x)?).abs()]);
                }
                configs += 1;
            }
        }
    }
    cases.push(Case::new(
        S,
        "deep-recursion",
        format!(
            "max |f_d(x) - f_2(x)| over hypercube points; {configs} configs, D in 1..3, d in 3..5, H in 1..3"
        ),
        "carrying [f]_+ and [-f]_+ upward keeps the function",
        deep,
        0.0,
        NORM_TOL,
    ));

    let slope_params = NormParams::new(2.0, 4.0)?;
    let widths = [1usize, 2, 4, 8];
    let (dim, depth) = (2, 4);
    let labels = labeling(4, 0b0110);
    let mut log_h = Vec::new();
    let mut log_gamma = Vec::new();
    for &h in &widths {
        let net = shattering_layers(&ShatterSpec::new(dim, depth, h, slope_params)?, &labels)?;
        log_h.push((h as f64).ln());
        log_gamma.push(gamma_pq(&net, slope_params).ln());
    }
    let expected =
        -((depth - 2) as f64) * (slope_params.inv_p_star() - slope_params.inv_q()).max(0.0);
    cases.push(Case::new(
        S,
        "gamma-slope",
        "least-squares slope of log gamma against log H; D=2, d=4, p=2, q=4, H in {1,2,4,8}",
        "gamma of the construction scales as H^(-(d-2)(1/p* - 1/q))",
        least_squares_slope(&log_h, &log_gamma),
        expected,
        0.25,
    ));

    let mut non_decreasing = 0.0;
    let mut series = 0;
    for (p, q) in [(2.0, 4.0), (2.0, f64::INFINITY), (1.5, f64::INFINITY)] {
        let params = NormParams::new(p, q)?;
        for dim in 1..=3 {
            for depth in [3, 4] {
                let labels = random_signs(rng, 1 << dim);
                let gammas = (1..=6)
                    .map(|h| {
                        let spec = ShatterSpec::new(dim, depth, h, params)?;
                        Ok(gamma_pq(&shattering_layers(&spec, &labels)?, params))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                non_decreasing += gammas
                    .windows(2)
                    .filter(|w| w[1].is_nan() || w[1] >= w[0])
                    .count() as f64;
                series += 1;
            }
        }
    }
    cases.push(Case::new(
        S,
        "gamma-monotone",
        format!(
            "steps H -> H+1 (H in 1..6) where gamma fails to decrease; {series} series with 1/p + 1/q < 1"
        ),
        "wider recursions have smaller gamma",
        non_decreasing,
        0.0,
        0.0,
    ));

    let mut deficit: f64 = 0.0;
    let mut sets = 0;
    for k in 1..=3 {
        for dim in 1..=4 {
            let inputs = hypercube_inputs(dim);
            for _ in 0..20 {
                let normals: Vec<Vec<f64>> = (0..k).map(|_| random_signs(rng, dim)).collect();
                let net = halfspace_intersection_net(&normals)?;
                for (j, x) in inputs.iter().enumerate() {
                    let v = hypercube_vertex(dim, j);
                    let inside = normals
                        .iter()
                        .all(|w| w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() > 0.0);
                    let f = net.forward(x)?;
                    let d = if inside {
                        (f - 1.0).abs()
                    } else {
                        (1.0 + f).max(0.0)
                    };
                    deficit = deficit.max(if d.is_nan() { f64::INFINITY } else { d });
                }
                sets += 1;
            }
        }
    }
    cases.push(Case::new(
        S,
        "halfspaces",
        format!(
            "max margin deficit (|f - 1| inside, [1 + f]_+ outside) on all hypercube points; {sets} sign-normal sets, k <= 3, D <= 4"
        ),
        "intersections of halfspaces are realized with unit margin",
        deficit,
        0.0,
        0.0,
    ));

    let hs_params = NormParams::new(2.0, 2.0)?;
    let mut excess = 0.0;
    for _ in 0..20 {
        let normals: Vec<Vec<f64>> = (0..2).map(|_| random_signs(rng, 3)).collect();
        let g = halfspace_gamma(&halfspace_intersection_net(&normals)?, hs_params)?;
        excess = worst([excess, violation(g.core, g.bound)]);
    }
    cases.push(Case::new(
        S,
        "halfspace-gamma",
        "max relative excess of the bias-free gamma over 4 D^(1/p) k^2; 20 sets, k=2, D=3, p=q=2",
        "norm accounting of the halfspace construction",
        excess,
        0.0,
        0.0,
    ));
    Ok(cases)
}

/// Lower-bound search settings used by the suites; small enough to keep the
/// whole run within a few seconds.
fn search_config(
    depth: usize,
    width: usize,
    params: NormParams,
    gamma: f64,
    seed: u64,
) -> LowerBoundConfig {
    let mut cfg = LowerBoundConfig::new(depth, width, params, gamma, seed);
    cfg.restarts = 4;
    cfg.steps = if depth == 1 { 4 } else { 40 };
    cfg
}

fn rademacher_sandwich(rng: &mut ChaCha8Rng) -> Result<Vec<Case>> {
    const S: &str = "rademacher-sandwich";
    const INSTANCES: usize = 50;
    let mut cases = Vec::new();
    let (h, h_plus) = counterexample_sets();
    let (rh, rh_plus) = (exact_rademacher_hull(&h)?, exact_rademacher_hull(&h_plus)?);
    cases.push(Case::new(
        S,
        "hull-H-total",
        "sum over the 8 sign vectors of the per-sign sup over conv(H)",
        "exact enumeration of the small hull",
        rh.terms["sup_total"],
        12.0,
        0.0,
    ));
    cases.push(Case::new(
        S,
        "hull-H-plus-total",
        "sum over the 8 sign vectors of the per-sign sup over conv(H')",
        "exact enumeration of the positive-part hull",
        rh_plus.terms["sup_total"],
        13.0,
        0.0,
    ));
    cases.push(Case::new(
        S,
        "hull-ordering",
        "1 if R(H') > R(H) strictly, else 0",
        "the positive part of a convex hull can raise complexity",
        if rh_plus.value > rh.value { 1.0 } else { 0.0 },
        1.0,
        0.0,
    ));

    let ps = [1.0, 1.5, 2.0, 3.0];
    let (mut recovery, mut lower_exact, mut exact_lemma, mut lower_net) = (0.0, 0.0, 0.0, 0.0);
    let mut linear_instances = 0;
    let mut probe = None;
    for i in 0..INSTANCES {
        let depth = 1 + i % 2;
        let width = 1 + (i / 2) % 4;
        let m = 2 + i % 9;
        let dim = 1 + i % 3;
        let params = NormParams::new(ps[i % 4], QS[(i / 4) % 3])?;
        let gamma = rng.random_range(0.5..=3.0);
        let s = SampleSet::new((0..m).map(|_| gaussian_vector(rng, dim)).collect())?;
        let cfg = search_config(depth, width, params, gamma, rng.random());
        let lower = empirical_rademacher_lower(&cfg, &s)?.value;
        let exact = linear_rademacher_exact(&s, params.p(), gamma, 0)?.value;
        let lemma = linear_rademacher_bound(&s, params.p(), gamma)?.value;
        exact_lemma = worst([exact_lemma, violation(exact, lemma)]);
        if depth == 1 {
            linear_instances += 1;
            recovery = worst([recovery, rel_err(lower, exact)]);
            lower_exact = worst([lower_exact, violation(lower, exact)]);
        }
        let bound = network_rademacher_bound(
            &NetworkBound {
                depth,
                width: Some(width),
                params,
                capacity: Capacity::Gamma(gamma),
            },
            &s,
        )?;
        lower_net = worst([lower_net, violation(lower, bound.value)]);
        if depth == 2 && probe.is_none() {
            probe = Some((cfg, s));
        }
    }
    let desc = |what: &str| {
        format!("{what}; {INSTANCES} instances, d <= 2, H <= 4, m <= 10, p in {{1, 1.5, 2, 3}}")
    };
    cases.push(Case::new(
        S,
        "linear-recovery",
        format!(
            "max relative gap between the search and the exact linear value; the {linear_instances} depth-1 instances"
        ),
        "the search finds the closed-form sup for linear classes",
        recovery,
        0.0,
        1e-6,
    ));
    cases.push(Case::new(
        S,
        "lower-le-exact",
        format!(
            "max relative violation of lower <= exact; the {linear_instances} depth-1 instances"
        ),
        "lower bound <= exact complexity",
        lower_exact,
        0.0,
        1e-9,
    ));
    cases.push(Case::new(
        S,
        "exact-le-lemma",
        desc("max relative violation of exact linear <= closed-form linear bound"),
        "linear class complexity bound",
        exact_lemma,
        0.0,
        1e-9,
    ));
    cases.push(Case::new(
        S,
        "lower-le-network-bound",
        desc("max relative violation of lower <= network bound"),
        "lower bound <= layered network upper bound",
        lower_net,
        0.0,
        1e-9,
    ));

    let (cfg, s) = probe.expect("suite has depth-2 instances");
    let in_pool = |threads: usize| -> Result<f64> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        Ok(pool.install(|| empirical_rademacher_lower(&cfg, &s))?.value)
    };
    let (one, four) = (in_pool(1)?, in_pool(4)?);
    cases.push(Case::new(
        S,
        "thread-determinism",
        "|lower(1 thread) - lower(4 threads)| on one depth-2 instance",
        "results do not depend on the worker count",
        if one.to_bits() == four.to_bits() {
            0.0
        } else {
            (one - four).abs().max(f64::MIN_POSITIVE)
        },
        0.0,
        0.0,
    ));
    Ok(cases)
}

fn convexnn_equivalence(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Case>> {
    const S: &str = "convexnn-equivalence";
    const NETS: usize = 100;
    let params = NormParams::new(2.0, 2.0)?;
    let (mut identity, mut invariant, mut func, mut amgm) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..NETS {
        let dim = rng.random_range(1..=4);
        let h = rng.random_range(1..=6);
        let net: LayeredNet = random_layered(rng, dim, &[h], Activation::Relu);
        let nu = nu_p(&net, 2.0)?;
        amgm = worst([amgm, violation(nu, mu_pq(&net, params).powi(2) / 2.0)]);
        let b = balance_units(&net, 2.0)?;
        identity = worst([identity, rel_err(mu_pq(&b, params).powi(2), 2.0 * nu)]);
        invariant = worst([invariant, rel_err(nu_p(&b, 2.0)?, nu)]);
        func = worst([
            func,
            output_gap(rng, dim, 5, |x| b.forward(x), |x| net.forward(x))?,
        ]);
    }
    let desc = |what: &str| format!("{what}; {NETS} depth-2 relu nets, H in 1..6");
    Ok(vec![
        Case::new(
            S,
            "mu-squared-twice-nu",
            desc("max relative gap between mu_22^2 and 2 nu_2 after per-unit balancing"),
            "balanced depth-2 nets: mu^2 = 2 nu",
            identity,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "nu-invariant",
            desc("max relative change of nu_2 under per-unit balancing"),
            "nu is rescaling invariant",
            invariant,
            0.0,
            NORM_TOL,
        ),
        Case::new(
            S,
            "function",
            desc("max output error after per-unit balancing, 5 inputs per net"),
            "positive homogeneity of relu",
            func,
            0.0,
            tol,
        ),
        Case::new(
            S,
            "am-gm",
            desc("max relative violation of nu_2 <= mu_22^2 / 2 before balancing"),
            "AM-GM on each unit",
            amgm,
            0.0,
            NORM_TOL,
        ),
    ])
}
