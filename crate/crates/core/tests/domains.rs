use std::sync::Arc;

use mixopt_core::domains::{
    closed_form_wstar, estimate_constants, load_csv, make_grouped_classification,
    make_quadratic_suite, write_csv, CsvSchema, Dataset, LogisticLoss, LossModel, SoftmaxLoss,
    Standardizer,
};
use mixopt_core::primitives::sample_dirichlet;
use mixopt_core::RngStream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn models() -> Vec<LossModel> {
    let mut out = make_quadratic_suite(2, 4, 0.3, 2.0, 1).unwrap();
    let ds = make_grouped_classification(2, 1, 40, 3).unwrap();
    let pooled = Standardizer::fit(ds.iter()).unwrap();
    let d0 = pooled.apply(&ds[0]);
    let binary = Dataset::new(
        d0.rows().flatten().copied().collect(),
        d0.n_features(),
        d0.labels()
            .iter()
            .map(|&y| if y < 1.5 { 0.0 } else { 1.0 })
            .collect(),
    )
    .unwrap();
    out.push(LossModel::Logistic(
        LogisticLoss::new(Arc::new(binary), 0.1).unwrap(),
    ));
    out.push(LossModel::Softmax(
        SoftmaxLoss::new(Arc::new(d0), 7, 0.1).unwrap(),
    ));
    out
}

fn random_point<R: Rng>(d: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = RngStream::new(2, 0).rng();
    for m in models() {
        for _ in 0..100 {
            let w = random_point(m.dim(), 2.0, &mut rng);
            let g = m.grad(&w).unwrap();
            let h = 1e-5;
            let fd: Vec<f64> = (0..w.len())
                .map(|k| {
                    let mut p = w.clone();
                    let mut q = w.clone();
                    p[k] += h;
                    q[k] -= h;
                    (m.risk(&p).unwrap() - m.risk(&q).unwrap()) / (2.0 * h)
                })
                .collect();
            let rel = norm(&sub(&g, &fd)) / norm(&g).max(1e-8);
            assert!(rel <= 1e-5, "relative error {rel}");
        }
    }
}

#[test]
fn strong_convexity_and_smoothness_witnesses() {
    let mut rng = RngStream::new(4, 0).rng();
    let radius = 5.0;
    for m in models() {
        let c = estimate_constants(&m, radius);
        for _ in 0..200 {
            let w = random_point(m.dim(), radius / (m.dim() as f64).sqrt(), &mut rng);
            let v = random_point(m.dim(), radius / (m.dim() as f64).sqrt(), &mut rng);
            let dg = sub(&m.grad(&w).unwrap(), &m.grad(&v).unwrap());
            let dw = sub(&w, &v);
            let inner: f64 = dg.iter().zip(&dw).map(|(a, b)| a * b).sum();
            assert!(inner >= c.mu_f * norm(&dw).powi(2) - 1e-9);
            assert!(norm(&dg) <= c.l_f * norm(&dw) + 1e-9);
            assert!(norm(&m.grad(&w).unwrap()) <= c.g_f + 1e-9);
        }
    }
}

#[test]
fn single_sample_batches_average_to_full_gradient() {
    let mut rng = RngStream::new(6, 0).rng();
    for m in models().into_iter().filter(|m| !m.is_deterministic()) {
        let w = random_point(m.dim(), 1.0, &mut rng);
        let n = m.sample_count();
        let mut mean_g = vec![0.0; m.dim()];
        let mut mean_f = 0.0;
        for i in 0..n {
            for (a, b) in mean_g.iter_mut().zip(m.grad_minibatch(&w, &[i]).unwrap()) {
                *a += b / n as f64;
            }
            mean_f += m.risk_minibatch(&w, &[i]).unwrap() / n as f64;
        }
        assert!(norm(&sub(&mean_g, &m.grad(&w).unwrap())) < 1e-12);
        assert!((mean_f - m.risk(&w).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn closed_form_wstar_solves_the_normal_equations() {
    let suite = make_quadratic_suite(4, 5, 0.5, 3.0, 8).unwrap();
    let mut rng = RngStream::new(9, 0).rng();
    for _ in 0..50 {
        let alpha = sample_dirichlet(4, &mut rng);
        let mut a = DMatrix::<f64>::zeros(5, 5);
        let mut b = DVector::<f64>::zeros(5);
        for (m, &aj) in suite.iter().zip(alpha.as_slice()) {
            let q = m.as_quadratic().unwrap();
            a += q.matrix() * aj;
            b += q.matrix() * DVector::from_column_slice(q.center()) * aj;
        }
        let oracle = a.lu().solve(&b).unwrap();
        let w = closed_form_wstar(&suite, &alpha, 10.0).unwrap();
        assert!(!w.constrained);
        let err = sub(w.params.as_slice(), oracle.as_slice());
        assert!(norm(&err) < 1e-10);
    }
}

#[test]
fn constrained_wstar_is_a_fixed_point_of_projected_gradient() {
    let suite = make_quadratic_suite(2, 3, 0.5, 1.0, 12).unwrap();
    let alpha = sample_dirichlet(2, &mut RngStream::new(1, 1).rng());
    let free = closed_form_wstar(&suite, &alpha, 100.0).unwrap();
    let radius = 0.5 * norm(free.params.as_slice());
    let w = closed_form_wstar(&suite, &alpha, radius).unwrap();
    assert!(w.constrained);
    let x = w.params.as_slice();
    let mut g = vec![0.0; 3];
    for (m, &aj) in suite.iter().zip(alpha.as_slice()) {
        for (gi, v) in g.iter_mut().zip(m.grad(x).unwrap()) {
            *gi += aj * v;
        }
    }
    let stepped: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - 0.5 * b).collect();
    let back = mixopt_core::primitives::project_ball(&stepped, radius).unwrap();
    assert!(norm(&sub(back.as_slice(), x)) < 1e-9);
}

#[test]
fn csv_round_trip() {
    let ds = make_grouped_classification(1, 1, 25, 5).unwrap().remove(0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_csv(&ds, &path, &["generated".to_string()]).unwrap();
    let back = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn standardizer_centres_pooled_data() {
    let ds = make_grouped_classification(3, 2, 50, 7).unwrap();
    let s = Standardizer::fit(ds.iter()).unwrap();
    let scaled: Vec<Dataset> = ds.iter().map(|d| s.apply(d)).collect();
    let p = scaled[0].n_features();
    let n: usize = scaled.iter().map(|d| d.len()).sum();
    for k in 0..p {
        let col: Vec<f64> = scaled
            .iter()
            .flat_map(|d| d.rows().map(move |r| r[k]))
            .collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-9);
    }
}
