use mixopt_core::domains::{LossModel, QuadraticSuiteSpec};
use mixopt_core::minimax::{
    self, full_gradients, objective, MinimaxConfig, MinimaxInstance, MinimaxSolver, MinimaxState,
};
use mixopt_core::primitives::sample_dirichlet;
use mixopt_core::{MixtureWeights, RngStream, SmoothAbs};
use proptest::prelude::*;
use rand::Rng;

fn suite(n: usize, d: usize, mu: f64, l: f64, radius: f64, m: usize, seed: u64) -> Vec<LossModel> {
    let mut spec = QuadraticSuiteSpec::new(n, d, mu, l, seed);
    spec.domain_radius = radius;
    spec.sample_count = m;
    spec.build().unwrap()
}

fn instance(seed: u64) -> MinimaxInstance {
    let mut models = suite(4, 3, 0.5, 1.0, 2.0, 50, seed);
    let target = models.remove(0);
    MinimaxInstance::new(target, models, 2.0).unwrap()
}

fn manual(eta: f64, gamma: f64, iterations: usize, seed: u64) -> MinimaxConfig {
    MinimaxConfig {
        eta,
        gamma,
        iterations,
        seed,
        record_every: 1,
        ..MinimaxConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_feasible(seed in 0u64..1000, eta in 1e-3f64..0.5, gamma in 1e-3f64..2.0) {
        let inst = instance(seed);
        let mut solver = MinimaxSolver::new(&inst, manual(eta, gamma, 0, seed)).unwrap();
        for _ in 0..200 {
            solver.step().unwrap();
            let st = solver.state();
            let s: f64 = st.alpha.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(st.alpha.iter().all(|&a| a >= 0.0));
            let r = st.w.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(r <= inst.radius() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn objective_is_strongly_convex_in_alpha(seed in 0u64..1000) {
        let inst = instance(seed);
        let g = SmoothAbs::new(1e-3).unwrap();
        let c = 1.0;
        let m_max = inst.sources().iter().map(|s| s.sample_count()).max().unwrap() as f64;
        let mu = 2.0 * c / m_max;
        let mut rng = RngStream::new(seed, 3).rng();
        let w: Vec<f64> = (0..inst.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = sample_dirichlet(inst.n_sources(), &mut rng);
        let b = sample_dirichlet(inst.n_sources(), &mut rng);
        let fa = objective(&inst, &a, &w, c, g).unwrap();
        let fb = objective(&inst, &b, &w, c, g).unwrap();
        let (ga, _) = full_gradients(&inst, &a, &w, c, g).unwrap();
        let diff: Vec<f64> = b.as_slice().iter().zip(a.as_slice()).map(|(x, y)| x - y).collect();
        let lin: f64 = ga.iter().zip(&diff).map(|(p, q)| p * q).sum();
        let sq: f64 = diff.iter().map(|x| x * x).sum();
        prop_assert!(fb >= fa + lin + 0.5 * mu * sq - 1e-12);
    }
}

#[test]
fn tracking_error_contracts_by_one_minus_beta() {
    let inst = instance(5);
    let beta = 0.3;
    let mut cfg = manual(1e-3, 0.0, 0, 5);
    cfg.beta = beta;
    let alpha = MixtureWeights::uniform(inst.n_sources());
    let w0 = vec![0.4, -0.2, 0.1];
    let mut state = MinimaxState::initial(&inst, alpha, w0.clone()).unwrap();
    let exact = state.z.clone();
    for (k, z) in state.z.iter_mut().enumerate() {
        *z += 1.0 + k as f64;
    }
    let mut solver = MinimaxSolver::with_state(&inst, cfg, state).unwrap();
    let mut err: Vec<f64> = solver
        .state()
        .z
        .iter()
        .zip(&exact)
        .map(|(z, e)| z - e)
        .collect();
    for _ in 0..100 {
        solver.step().unwrap();
        assert_eq!(solver.state().w, w0);
        let next: Vec<f64> = solver
            .state()
            .z
            .iter()
            .zip(&exact)
            .map(|(z, e)| z - e)
            .collect();
        for (n, e) in next.iter().zip(&err) {
            let want = (1.0 - beta) * e;
            assert!((n - want).abs() <= 8.0 * f64::EPSILON * (1.0 + e.abs()));
        }
        err = next;
    }
}

#[test]
fn w_gradient_matches_objective_differences() {
    let inst = instance(11);
    let g = SmoothAbs::new(1e-2).unwrap();
    let mut rng = RngStream::new(11, 0).rng();
    for _ in 0..50 {
        let a = sample_dirichlet(inst.n_sources(), &mut rng);
        let w: Vec<f64> = (0..inst.dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (ga, gw) = full_gradients(&inst, &a, &w, 1.0, g).unwrap();
        let h = 1e-6;
        for k in 0..w.len() {
            let mut p = w.clone();
            let mut q = w.clone();
            p[k] += h;
            q[k] -= h;
            let fd = (objective(&inst, &a, &p, 1.0, g).unwrap()
                - objective(&inst, &a, &q, 1.0, g).unwrap())
                / (2.0 * h);
            assert!((fd - gw[k]).abs() <= 1e-6 * (1.0 + gw[k].abs()));
        }
        let ft = inst.target().risk(&w).unwrap();
        for (j, src) in inst.sources().iter().enumerate() {
            let d = ft - src.risk(&w).unwrap();
            let want = (d * d + 1e-2).sqrt() + 2.0 * a.as_slice()[j] / src.sample_count() as f64;
            assert!((want - ga[j]).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}

fn sliding_medians(xs: &[f64], window: usize) -> Vec<f64> {
    xs.windows(window)
        .step_by(window)
        .map(|w| {
            let mut v = w.to_vec();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect()
}

#[test]
fn stationarity_gap_trends_down() {
    let mut models = suite(6, 10, 0.05, 0.1, 1.0, 1, 0);
    let target = models.remove(0);
    let inst = MinimaxInstance::new(target, models, 1.0).unwrap();
    let g = SmoothAbs::new(1e-4).unwrap();
    let mut cfg = MinimaxConfig::theory_schedule(&inst, 1.0, g, 20_000, 0);
    cfg.record_every = 20;
    let tr = minimax::run(&inst, &cfg).unwrap();
    let gaps: Vec<f64> = tr.records.iter().map(|r| r.gap_sq).collect();
    let meds = sliding_medians(&gaps, 20);
    let ups = meds
        .windows(2)
        .filter(|p| p[1] > p[0] * (1.0 + 1e-9) + 1e-15)
        .count();
    assert!(
        ups as f64 <= 0.1 * (meds.len() - 1) as f64,
        "{ups} increases in {}",
        meds.len()
    );
    assert!(tr.quartile_mean_gap_sq(3) <= 0.25 * tr.quartile_mean_gap_sq(0));
}

#[test]
fn matched_target_pulls_mass_to_its_source() {
    let models = suite(3, 10, 0.5, 1.0, 10.0, 1000, 3);
    let inst = MinimaxInstance::new(models[0].clone(), models, 10.0).unwrap();
    let g = SmoothAbs::new(1e-4).unwrap();
    let c = 1.0;

    // Grid oracle: the simplex point minimising a sampled max over w.
    let mut rng = RngStream::new(3, 9).rng();
    let ws: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let v: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r = 10.0 * rng.random::<f64>();
            v.iter().map(|x| x * r / n).collect()
        })
        .collect();
    let steps = 10;
    let mut best = (f64::INFINITY, vec![]);
    for i in 0..=steps {
        for j in 0..=steps - i {
            let a = vec![
                i as f64 / steps as f64,
                j as f64 / steps as f64,
                (steps - i - j) as f64 / steps as f64,
            ];
            let wts = MixtureWeights::new(a.clone()).unwrap();
            let worst = ws
                .iter()
                .map(|w| objective(&inst, &wts, w, c, g).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            if worst < best.0 {
                best = (worst, a);
            }
        }
    }
    assert_eq!(best.1, vec![1.0, 0.0, 0.0]);

    let mut cfg = manual(1e-3, 1e-2, 5000, 3);
    cfg.smoothing = g;
    cfg.record_every = 50;
    let tr = minimax::run(&inst, &cfg).unwrap();
    assert!(
        tr.final_alpha().as_slice()[0] >= 0.9,
        "{:?}",
        tr.final_alpha()
    );
}
