use netcap_core::graph::{Activation, LayeredNet, Network, NodeId, Role};
use netcap_core::norms::{gamma_pq, mu_pq, nu_p, path_norm, per_unit_gamma, NormParams};
use netcap_core::rebalance::{balance_layers, balance_units, unitize_units};
use netcap_core::sample::{gaussian_vector, random_dag, random_layered};
use netcap_core::transforms::{convex_combine, layerize, treeify, DEFAULT_MAX_NODES};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QS: [f64; 3] = [1.0, 2.0, f64::INFINITY];
const PS: [f64; 3] = [1.0, 1.5, 2.0];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn layered(rng: &mut ChaCha8Rng, max_depth: usize) -> LayeredNet {
    let depth = rng.random_range(1..=max_depth);
    let dim = rng.random_range(1..=4);
    let hidden: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=6)).collect();
    random_layered(rng, dim, &hidden, Activation::Relu)
}

fn dag(rng: &mut ChaCha8Rng) -> Network {
    let inputs = rng.random_range(1..=3);
    let hidden = rng.random_range(0..=5);
    random_dag(rng, inputs, hidden, 12, Activation::Relu)
}

/// Sum over all input→output paths of `|Π w|^p`, by explicit enumeration.
fn path_norm_by_enumeration(net: &Network, p: f64) -> f64 {
    fn walk(net: &Network, id: NodeId, acc: f64, p: f64, total: &mut f64) {
        if net.role(id) == Some(Role::Output) {
            *total += acc;
            return;
        }
        for e in net.outgoing(id) {
            walk(net, e.dst, acc * e.weight.abs().powf(p), p, total);
        }
    }
    let mut total = 0.0;
    for i in 0..net.num_inputs() {
        walk(net, net.input_id(i), 1.0, p, &mut total);
    }
    total.powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dag_view_computes_same_function(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = layered(&mut rng, 4);
        let dag = net.to_dag();
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, net.input_dim());
            prop_assert!(close(dag.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-12));
        }
    }

    #[test]
    fn balancing_reaches_minimal_mu(seed in any::<u64>(), pi in 0usize..3, qi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = layered(&mut rng, 5);
        let params = NormParams::new(PS[pi], QS[qi]).unwrap();
        let d = net.depth() as f64;
        let (mu, gamma) = (mu_pq(&net, params), gamma_pq(&net, params));
        prop_assert!(gamma <= (mu / d.powf(params.inv_q())).powf(d) * (1.0 + 1e-12));

        let b = balance_layers(&net, params).unwrap();
        prop_assert!(rel(gamma_pq(&b, params), gamma) < 1e-12);
        prop_assert!(rel(mu_pq(&b, params), d.powf(params.inv_q()) * gamma.powf(1.0 / d)) < 1e-12);
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, net.input_dim());
            prop_assert!(close(b.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-9));
        }
        prop_assert_eq!(balance_layers(&b, params).unwrap().layers().len(), b.depth());
    }

    #[test]
    fn rescaling_adjacent_layers_keeps_function(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = layered(&mut rng, 4);
        prop_assume!(net.depth() >= 2);
        let k = rng.random_range(0..net.depth() - 1);
        let mut layers = net.layers().to_vec();
        layers[k] = layers[k].scaled(c);
        layers[k + 1] = layers[k + 1].scaled(1.0 / c);
        let moved = net.with_layers(layers).unwrap();
        let x = gaussian_vector(&mut rng, net.input_dim());
        prop_assert!(close(moved.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-9));
    }

    #[test]
    fn path_norm_matches_enumeration(seed in any::<u64>(), pi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = dag(&mut rng);
        let p = PS[pi];
        prop_assert!(rel(path_norm(&net, p).unwrap(), path_norm_by_enumeration(&net, p)) < 1e-12);
    }

    #[test]
    fn unitized_path_norm_is_per_unit_gamma(seed in any::<u64>(), pi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = dag(&mut rng);
        let p = PS[pi];
        let u = unitize_units(&net, p).unwrap();
        let phi = path_norm(&u, p).unwrap();
        prop_assert!(rel(phi, per_unit_gamma(&u, p).unwrap()) < 1e-9);
        prop_assert!(rel(phi, path_norm(&net, p).unwrap()) < 1e-9);
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, net.num_inputs());
            prop_assert!(close(u.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-9));
        }
    }

    #[test]
    fn treeify_keeps_paths(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = dag(&mut rng);
        let t = treeify(&net, DEFAULT_MAX_NODES).unwrap();
        for n in t.net.nodes() {
            if n.role == Role::Hidden {
                prop_assert_eq!(t.net.out_degree(n.id), 1);
            }
        }
        for p in PS {
            prop_assert!(rel(path_norm(&t.net, p).unwrap(), path_norm(&net, p).unwrap()) < 1e-12);
        }
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, net.num_inputs());
            prop_assert!(close(t.net.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-9));
        }
        let again = treeify(&t.net, DEFAULT_MAX_NODES).unwrap();
        prop_assert_eq!(again.copies, 0);
        prop_assert_eq!(again.net, t.net);
    }

    #[test]
    fn layerize_keeps_paths(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = dag(&mut rng);
        let l = layerize(&net, net.depth(), DEFAULT_MAX_NODES).unwrap();
        prop_assert_eq!(l.layered.depth(), net.depth());
        let flat = l.layered.to_dag();
        for p in PS {
            prop_assert!(rel(path_norm(&flat, p).unwrap(), path_norm(&net, p).unwrap()) < 1e-12);
        }
        for _ in 0..5 {
            let mut x = gaussian_vector(&mut rng, net.num_inputs());
            if l.nonnegative_inputs_required {
                x.iter_mut().for_each(|v| *v = v.abs());
            }
            prop_assert!(close(l.layered.forward(&x).unwrap(), net.forward(&x).unwrap(), 1e-9));
        }
    }

    #[test]
    fn convex_combination(seed in any::<u64>(), alpha in 0.0f64..=1.0, pi in 0usize..3, qi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(2..=3);
        let dim = rng.random_range(1..=3);
        let hu: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=4)).collect();
        let hv: Vec<usize> = (1..depth).map(|_| rng.random_range(1..=4)).collect();
        let u = random_layered(&mut rng, dim, &hu, Activation::Relu);
        let v = random_layered(&mut rng, dim, &hv, Activation::Relu);
        let params = NormParams::new(PS[pi], QS[qi]).unwrap();
        let w = convex_combine(&u, &v, alpha, params).unwrap();
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, dim);
            let want = alpha * u.forward(&x).unwrap() + (1.0 - alpha) * v.forward(&x).unwrap();
            prop_assert!(close(w.forward(&x).unwrap(), want, 1e-9));
        }
        if params.inv_q() <= (1.0 - 1.0 / params.p()) / (depth - 1) as f64 {
            let cap = gamma_pq(&u, params).max(gamma_pq(&v, params));
            prop_assert!(gamma_pq(&w, params) <= cap * (1.0 + 1e-9));
        }
    }

    #[test]
    fn unit_balanced_mu_squared_is_twice_nu(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.random_range(1..=4);
        let h = rng.random_range(1..=6);
        let net = random_layered(&mut rng, dim, &[h], Activation::Relu);
        let b = balance_units(&net, 2.0).unwrap();
        let mu = mu_pq(&b, NormParams::new(2.0, 2.0).unwrap());
        prop_assert!(rel(mu * mu, 2.0 * nu_p(&net, 2.0).unwrap()) < 1e-9);
        prop_assert!(rel(nu_p(&b, 2.0).unwrap(), nu_p(&net, 2.0).unwrap()) < 1e-12);
    }
}
