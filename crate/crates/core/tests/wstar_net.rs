use mixopt_core::coerm::GdConfig;
use mixopt_core::domains::make_quadratic_suite;
use mixopt_core::primitives::sample_dirichlet;
use mixopt_core::wstar_net::{train, TrainConfig, TwoLayerNet};
use mixopt_core::{Exec, MixtureWeights, RngStream};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn loss(net: &TwoLayerNet, alpha: &[f64], y: &[f64]) -> f64 {
    let h = net.forward(alpha).unwrap();
    0.5 * h.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

fn perturbed(seed: u64) -> TwoLayerNet {
    let mut net = TwoLayerNet::init(16, 3, 2, seed).unwrap();
    let mut rng = RngStream::new(seed, 77).rng();
    for u in net.hidden_weights_mut() {
        *u += 0.3 * rng.random_range(-1.0..1.0);
    }
    net
}

#[test]
fn output_is_exactly_zero_at_init() {
    let mut rng = RngStream::new(0, 5).rng();
    for i in 0..1000 {
        let net = TwoLayerNet::init(32, 3, 2, i).unwrap();
        let a = sample_dirichlet(3, &mut rng);
        assert!(net.forward(a.as_slice()).unwrap().iter().all(|&h| h == 0.0));
    }
}

#[test]
fn hidden_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(1, 5).rng();
    let h = 1e-6;
    let mut checked = 0;
    let mut seed = 0;
    while checked < 100 {
        seed += 1;
        let net = perturbed(seed);
        let a = sample_dirichlet(3, &mut rng);
        let a = a.as_slice();
        // Skip points where a perturbation could cross a ReLU kink.
        let margin = net
            .hidden_weights()
            .chunks(3)
            .map(|row| row.iter().zip(a).map(|(u, x)| u * x).sum::<f64>().abs())
            .fold(f64::INFINITY, f64::min);
        if margin < 1e-4 {
            continue;
        }
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = net.forward(a).unwrap();
        let res: Vec<f64> = out.iter().zip(&y).map(|(p, q)| p - q).collect();
        let g = net.hidden_grad(a, &res).unwrap();
        let mut fd = vec![0.0; g.len()];
        for (k, slot) in fd.iter_mut().enumerate() {
            let mut p = net.clone();
            let mut q = net.clone();
            p.hidden_weights_mut()[k] += h;
            q.hidden_weights_mut()[k] -= h;
            *slot = (loss(&p, a, &y) - loss(&q, a, &y)) / (2.0 * h);
        }
        let num: f64 = g
            .iter()
            .zip(&fd)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        assert!(num / den <= 1e-5, "relative error {}", num / den);
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permuting_hidden_units_leaves_output_unchanged(seed in 0u64..10_000) {
        let net = perturbed(seed);
        let mut rng = RngStream::new(seed, 6).rng();
        let mut perm: Vec<usize> = (0..16).collect();
        perm.shuffle(&mut rng);
        let j = (seed % 2) as usize;
        let other = net.permute_hidden(j, &perm).unwrap();
        for _ in 0..10 {
            let a = sample_dirichlet(3, &mut rng);
            let x = net.forward(a.as_slice()).unwrap();
            let y = other.forward(a.as_slice()).unwrap();
            prop_assert_eq!(x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            y.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}

#[test]
fn checkpoint_round_trip() {
    let net = perturbed(4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    net.save(&path).unwrap();
    assert_eq!(TwoLayerNet::load(&path).unwrap(), net);
    assert_eq!(
        TwoLayerNet::from_checkpoint(&net.to_checkpoint()).unwrap(),
        net
    );
}

fn small_training(exec: Exec) -> mixopt_core::wstar_net::TrainOutput {
    let suite = make_quadratic_suite(3, 2, 0.5, 1.0, 2).unwrap();
    let mut rng = RngStream::new(2, 7).rng();
    let alphas: Vec<MixtureWeights> = (0..40).map(|_| sample_dirichlet(3, &mut rng)).collect();
    let cfg = TrainConfig {
        width: 32,
        eta: 0.5,
        inner: GdConfig::new(0.5, 2),
        iterations: 60,
        seed: 2,
        record_every: 5,
        test_size: 100,
        exec,
    };
    train(&alphas, &suite, 1.0, &cfg).unwrap()
}

#[test]
fn label_gap_contracts_and_risk_falls() {
    let out = small_training(Exec::Sequential);
    let gaps: Vec<f64> = out.trace.iter().map(|r| r.label_gap_mean).collect();
    // Ten GD steps of size 0.5 separate consecutive records; mu = 0.5.
    let rate = 0.75f64.powi(10);
    assert!(gaps.windows(2).all(|p| p[1] <= rate * p[0] + 1e-12));
    assert!(*gaps.last().unwrap() < 1e-9);
    let first = out.trace.first().unwrap().test_excess_risk;
    let last = out.trace.last().unwrap().test_excess_risk;
    assert!(last < first);
    assert_eq!(out.grad_evals, 40 * 2 * 3 * 60);
}

#[test]
fn training_is_identical_across_exec_modes() {
    let a = small_training(Exec::Sequential);
    let b = small_training(Exec::Parallel);
    assert_eq!(a.net, b.net);
    assert_eq!(a.trace, b.trace);
}
