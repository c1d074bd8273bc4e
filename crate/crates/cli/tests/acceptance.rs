//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! output is exactly one PASS/FAIL line per criterion.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use netcap_core::constructions::{
    counterexample_sets, halfspace_intersection_net, hypercube_inputs, hypercube_vertex, labeling,
    shattering_layers, ShatterSpec,
};
use netcap_core::norms::{gamma_pq, mu_pq, nu_p, path_norm, per_unit_gamma, NormParams};
use netcap_core::rademacher::{
    empirical_rademacher_lower, exact_rademacher_hull, linear_rademacher_bound,
    linear_rademacher_exact, network_rademacher_bound, shatter_check, Capacity, Labelings,
    LowerBoundConfig, NetworkBound, SampleSet,
};
use netcap_core::rebalance::{balance_layers, balance_units, unitize_units};
use netcap_core::sample::{gaussian_vector, random_dag, random_layered};
use netcap_core::transforms::{convex_combine, layerize, treeify, DEFAULT_MAX_NODES};
use netcap_core::{Activation, Network, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PS: [f64; 3] = [1.0, 1.5, 2.0];
const QS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn fn_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn counterexample() -> Check {
    let start = Instant::now();
    let (h, h_plus) = counterexample_sets();
    let r = exact_rademacher_hull(&h).map_err(e)?;
    let r_plus = exact_rademacher_hull(&h_plus).map_err(e)?;
    let elapsed = start.elapsed();
    let (t, t_plus) = (r.terms["sup_total"], r_plus.terms["sup_total"]);
    ensure(t == 12.0 && t_plus == 13.0, || {
        format!("totals {t} and {t_plus}")
    })?;
    ensure(r_plus.value > r.value, || "ordering violated".into())?;
    ensure(elapsed < Duration::from_millis(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "sup totals 12 and 13, R(H') = {} > R(H) = {}, {elapsed:?}",
        r_plus.value, r.value
    ))
}

fn balancing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_id, mut worst_ineq) = (0.0f64, 0.0f64);
    for i in 0..225 {
        let depth = 1 + i % 5;
        let params = NormParams::new(PS[(i / 5) % 3], QS[(i / 15) % 3]).map_err(e)?;
        let dim = rng.random_range(1..=4);
        let hidden: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=6)).collect();
        let net = random_layered(&mut rng, dim, &hidden, Activation::Relu);
        let d = depth as f64;
        let (mu, gamma) = (mu_pq(&net, params), gamma_pq(&net, params));
        let cap = (mu / d.powf(params.inv_q())).powf(d);
        worst_ineq = worst_ineq.max(if gamma <= cap { 0.0 } else { rel(gamma, cap) });
        let b = balance_layers(&net, params).map_err(e)?;
        let err = rel(
            mu_pq(&b, params),
            d.powf(params.inv_q()) * gamma.powf(1.0 / d),
        );
        ensure(err <= 1e-12, || {
            format!("net {i}: mu identity error {err:e}")
        })?;
        worst_id = worst_id.max(err);
    }
    ensure(worst_ineq <= 1e-12, || {
        format!("inequality violated by {worst_ineq:e}")
    })?;
    Ok(format!(
        "225 nets, max identity error {worst_id:e}, inequality held"
    ))
}

fn layered_dag(rng: &mut ChaCha8Rng) -> Network {
    loop {
        let depth = rng.random_range(2..=4);
        let dim = rng.random_range(1..=3);
        let hidden: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=4)).collect();
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
        .expect("subgraph");
        let net = netcap_core::rebalance::prune_dead(&net);
        if net.in_degree(net.output_id()) > 0 {
            return net;
        }
    }
}

fn unitize() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut phi_err, mut out_err) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let p = PS[i % 3];
        let net = layered_dag(&mut rng);
        let u = unitize_units(&net, p).map_err(e)?;
        phi_err = phi_err.max(rel(
            path_norm(&u, p).map_err(e)?,
            per_unit_gamma(&u, p).map_err(e)?,
        ));
        for _ in 0..200 {
            let x = gaussian_vector(&mut rng, net.num_inputs());
            out_err = out_err.max(fn_rel(
                u.forward(&x).map_err(e)?,
                net.forward(&x).map_err(e)?,
            ));
        }
    }
    ensure(phi_err <= 1e-9 && out_err <= 1e-9, || {
        format!("phi error {phi_err:e}, output error {out_err:e}")
    })?;
    Ok(format!(
        "200 DAGs x 200 inputs, phi vs per-unit gamma {phi_err:e}, outputs {out_err:e}"
    ))
}

fn small_dag(rng: &mut ChaCha8Rng) -> Network {
    let inputs = rng.random_range(1..=3);
    let hidden = rng.random_range(0..=5);
    random_dag(rng, inputs, hidden, 12, Activation::Relu)
}

fn has_skip(net: &Network) -> bool {
    let paths = net.longest_paths();
    net.edges().iter().any(|edge| {
        let (a, b) = (paths.from_inputs(edge.src), paths.from_inputs(edge.dst));
        matches!((a, b), (Some(a), Some(b)) if b > a + 1)
    })
}

fn layerize_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut phi_err, mut out_err, mut skips) = (0.0f64, 0.0f64, 0);
    for _ in 0..100 {
        let net = loop {
            let n = small_dag(&mut rng);
            if n.depth() <= 4 {
                break n;
            }
        };
        skips += usize::from(has_skip(&net));
        let l = layerize(&net, net.depth(), DEFAULT_MAX_NODES).map_err(e)?;
        let flat = l.layered.to_dag();
        for p in PS {
            phi_err = phi_err.max(rel(
                path_norm(&flat, p).map_err(e)?,
                path_norm(&net, p).map_err(e)?,
            ));
        }
        for _ in 0..20 {
            let mut x = gaussian_vector(&mut rng, net.num_inputs());
            if l.nonnegative_inputs_required {
                x.iter_mut().for_each(|v| *v = v.abs());
            }
            out_err = out_err.max(fn_rel(
                l.layered.forward(&x).map_err(e)?,
                net.forward(&x).map_err(e)?,
            ));
        }
    }
    ensure(phi_err <= 1e-12 && out_err <= 1e-9 && skips > 0, || {
        format!("phi error {phi_err:e}, output error {out_err:e}, {skips} with skips")
    })?;
    Ok(format!(
        "100 DAGs ({skips} with skip edges), phi {phi_err:e}, outputs {out_err:e}"
    ))
}

fn treeify_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut phi_err, mut out_err, mut copies) = (0.0f64, 0.0f64, 0);
    for _ in 0..100 {
        let net = small_dag(&mut rng);
        ensure(net.edges().len() <= 12, || "too many edges".into())?;
        let t = treeify(&net, DEFAULT_MAX_NODES).map_err(e)?;
        copies += t.copies;
        let bad = t
            .net
            .nodes()
            .iter()
            .filter(|n| n.role == Role::Hidden && t.net.out_degree(n.id) != 1)
            .count();
        ensure(bad == 0, || {
            format!("{bad} hidden nodes with out-degree != 1")
        })?;
        for p in PS {
            phi_err = phi_err.max(rel(
                path_norm(&t.net, p).map_err(e)?,
                path_norm(&net, p).map_err(e)?,
            ));
        }
        for _ in 0..20 {
            let x = gaussian_vector(&mut rng, net.num_inputs());
            out_err = out_err.max(fn_rel(
                t.net.forward(&x).map_err(e)?,
                net.forward(&x).map_err(e)?,
            ));
        }
    }
    ensure(phi_err <= 1e-12 && out_err <= 1e-9, || {
        format!("phi error {phi_err:e}, output error {out_err:e}")
    })?;
    Ok(format!(
        "100 DAGs, {copies} copies, out-degree 1, phi {phi_err:e}, outputs {out_err:e}"
    ))
}

fn convexity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut out_err, mut excess, mut capped) = (0.0f64, 0.0f64, 0);
    for i in 0..108 {
        let depth = 2 + i % 2;
        let params = NormParams::new(PS[(i / 2) % 3], QS[(i / 6) % 3]).map_err(e)?;
        let dim = rng.random_range(1..=3);
        let hu: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=4)).collect();
        let hv: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=4)).collect();
        let u = random_layered(&mut rng, dim, &hu, Activation::Relu);
        let v = random_layered(&mut rng, dim, &hv, Activation::Relu);
        let alpha: f64 = rng.random();
        let w = convex_combine(&u, &v, alpha, params).map_err(e)?;
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, dim);
            let want =
                alpha * u.forward(&x).map_err(e)? + (1.0 - alpha) * v.forward(&x).map_err(e)?;
            out_err = out_err.max(fn_rel(w.forward(&x).map_err(e)?, want));
        }
        if params.inv_q() <= (1.0 - 1.0 / params.p()) / (depth - 1) as f64 {
            capped += 1;
            let cap = gamma_pq(&u, params).max(gamma_pq(&v, params));
            excess = excess.max(gamma_pq(&w, params) / cap - 1.0);
        }
    }
    ensure(out_err <= 1e-9 && excess <= 1e-9 && capped > 0, || {
        format!("output error {out_err:e}, gamma excess {excess:e}")
    })?;
    Ok(format!(
        "108 pairs, outputs {out_err:e}, gamma <= max on {capped} eligible pairs"
    ))
}

fn shattering() -> Check {
    let params = NormParams::new(2.0, 2.0).map_err(e)?;
    let mut labelings = 0usize;
    for dim in 1..=3 {
        let spec = ShatterSpec::new(dim, 2, 1, params).map_err(e)?;
        let check = shatter_check(
            |l| shattering_layers(&spec, l),
            &hypercube_inputs(dim),
            &Labelings::All,
        )
        .map_err(e)?;
        ensure(check.passed, || {
            format!("D={dim}: {} labelings failed", check.failures)
        })?;
        labelings += check.worst_margins.len();
    }
    let sweep = NormParams::new(2.0, 4.0).map_err(e)?;
    let labels = labeling(4, 5);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for h in [1usize, 2, 4, 8] {
        let net =
            shattering_layers(&ShatterSpec::new(2, 4, h, sweep).map_err(e)?, &labels).map_err(e)?;
        xs.push((h as f64).ln());
        ys.push(gamma_pq(&net, sweep).ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let expected = -2.0 * (sweep.inv_p_star() - sweep.inv_q());
    ensure((slope - expected).abs() <= 0.25, || {
        format!("slope {slope}, expected {expected}")
    })?;
    Ok(format!(
        "{labelings} labelings realized with unit margin, slope {slope:.6} vs {expected}"
    ))
}

fn halfspaces() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sets = 0;
    for k in 1..=3 {
        for dim in 1..=4 {
            let inputs = hypercube_inputs(dim);
            for _ in 0..20 {
                let normals: Vec<Vec<f64>> = (0..k)
                    .map(|_| {
                        (0..dim)
                            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                            .collect()
                    })
                    .collect();
                let net = halfspace_intersection_net(&normals).map_err(e)?;
                for (j, x) in inputs.iter().enumerate() {
                    let v = hypercube_vertex(dim, j);
                    let inside = normals
                        .iter()
                        .all(|w| w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() > 0.0);
                    let y = if inside { 1.0 } else { -1.0 };
                    let f = net.forward(x).map_err(e)?;
                    ensure(y * f >= 1.0 && (!inside || f == 1.0), || {
                        format!("k={k} D={dim} point {j}: f = {f}")
                    })?;
                }
                sets += 1;
            }
        }
    }
    Ok(format!("{sets} sets, unit margin on every hypercube point"))
}

fn sandwich() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ps = [1.0, 1.5, 2.0, 3.0];
    let (mut recovery, mut worst_gap) = (0.0f64, f64::INFINITY);
    for i in 0..50 {
        let depth = 1 + i % 2;
        let width = 1 + (i / 2) % 4;
        let m = 2 + i % 9;
        let dim = 1 + i % 3;
        let params = NormParams::new(ps[i % 4], QS[(i / 4) % 3]).map_err(e)?;
        let gamma = rng.random_range(0.5..=3.0);
        let s =
            SampleSet::new((0..m).map(|_| gaussian_vector(&mut rng, dim)).collect()).map_err(e)?;
        let mut cfg = LowerBoundConfig::new(depth, width, params, gamma, rng.random());
        cfg.restarts = 4;
        cfg.steps = if depth == 1 { 4 } else { 40 };
        let lower = empirical_rademacher_lower(&cfg, &s).map_err(e)?.value;
        let bound = network_rademacher_bound(
            &NetworkBound {
                depth,
                width: Some(width),
                params,
                capacity: Capacity::Gamma(gamma),
            },
            &s,
        )
        .map_err(e)?;
        let mut uppers = vec![bound.terms["via_linear_bound"]];
        if let Some(v) = bound.terms.get("via_linear_exact") {
            uppers.push(*v);
        }
        if depth == 1 {
            let exact = linear_rademacher_exact(&s, params.p(), gamma, 0)
                .map_err(e)?
                .value;
            let lemma = linear_rademacher_bound(&s, params.p(), gamma)
                .map_err(e)?
                .value;
            recovery = recovery.max(rel(lower, exact));
            uppers.extend([exact, lemma]);
        }
        for up in uppers {
            ensure(lower <= up * (1.0 + 1e-9), || {
                format!("instance {i}: lower {lower} > upper {up}")
            })?;
            worst_gap = worst_gap.min(up - lower);
        }
    }
    ensure(recovery <= 1e-6, || {
        format!("d=1 recovery error {recovery:e}")
    })?;
    Ok(format!(
        "50 instances, lower <= every upper bound, d=1 recovery {recovery:e}"
    ))
}

fn convexnn() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let params = NormParams::new(2.0, 2.0).map_err(e)?;
    let mut err = 0.0f64;
    for _ in 0..100 {
        let dim = rng.random_range(1..=4);
        let h = rng.random_range(1..=6);
        let net = random_layered(&mut rng, dim, &[h], Activation::Relu);
        let b = balance_units(&net, 2.0).map_err(e)?;
        let mu = mu_pq(&b, params);
        err = err.max(rel(mu * mu, 2.0 * nu_p(&net, 2.0).map_err(e)?));
    }
    ensure(err <= 1e-9, || format!("max error {err:e}"))?;
    Ok(format!("100 depth-2 nets, max relative error {err:e}"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let start = Instant::now();
    let mut reports = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("verify{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_netcap"))
            .args(["verify", "--suite", "all", "--seed", "42", "--report"])
            .arg(&path)
            .status()
            .map_err(e)?;
        ensure(status.success(), || {
            format!("run {run} exited with {status}")
        })?;
        reports.push(std::fs::read(&path).map_err(e)?);
    }
    let elapsed = start.elapsed();
    ensure(reports[0] == reports[1], || "reports differ".into())?;
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "two runs byte-identical ({} bytes), {:.1}s total",
        reports[0].len(),
        elapsed.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("counterexample hull totals 12 and 13", counterexample),
        ("balancing identity and inequality", balancing),
        ("unitize path norm and outputs", unitize),
        ("layerize path norm and outputs", layerize_check),
        ("treeify structure, path norm and outputs", treeify_check),
        ("convex combination function and gamma", convexity),
        ("hypercube shattering and gamma slope", shattering),
        ("halfspace intersections with unit margin", halfspaces),
        ("rademacher sandwich", sandwich),
        ("mu^2 = 2 nu after unit balancing", convexnn),
        ("verify determinism and runtime", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
