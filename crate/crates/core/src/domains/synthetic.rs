use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::loss::{LossModel, QuadraticLoss};
use crate::error::{check_dim, Error, Result};
use crate::primitives::ball::project_ball_in_place;
use crate::primitives::vector::{dist, norm};
use crate::primitives::{MixtureWeights, ModelParams, RngStream, DEFAULT_DOMAIN_RADIUS};

/// Parameters of a random quadratic suite `f_j(w) = 1/2 (w - c_j)^T A_j (w - c_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSuiteSpec {
    pub n_sources: usize,
    pub dim: usize,
    pub mu: f64,
    pub l: f64,
    pub domain_radius: f64,
    /// Radius of the ball the centres are drawn from. `None` picks
    /// `0.9 * domain_radius * mu / l`, which keeps every `w*(alpha)` interior.
    pub center_radius: Option<f64>,
    /// Nominal sample count `m_j` attached to every quadratic.
    pub sample_count: usize,
    pub seed: u64,
}

impl QuadraticSuiteSpec {
    pub fn new(n_sources: usize, dim: usize, mu: f64, l: f64, seed: u64) -> Self {
        QuadraticSuiteSpec {
            n_sources,
            dim,
            mu,
            l,
            domain_radius: DEFAULT_DOMAIN_RADIUS,
            center_radius: None,
            sample_count: 100,
            seed,
        }
    }

    pub fn interior_center_radius(&self) -> f64 {
        0.9 * self.domain_radius * self.mu / self.l
    }

    pub fn build(&self) -> Result<Vec<LossModel>> {
        if self.n_sources == 0 || self.dim == 0 {
            return Err(Error::invalid("suite needs N >= 1 and d >= 1"));
        }
        if !(self.mu > 0.0) || !(self.l >= self.mu) || !self.l.is_finite() {
            return Err(Error::invalid(format!(
                "curvature must satisfy 0 < mu <= L (got mu={}, L={})",
                self.mu, self.l
            )));
        }
        let center_radius = self
            .center_radius
            .unwrap_or_else(|| self.interior_center_radius());
        if center_radius > self.domain_radius {
            return Err(Error::invalid("centres must lie inside the domain ball"));
        }
        let stream = RngStream::new(self.seed, 0x5155_4144);
        (0..self.n_sources)
            .map(|j| {
                let mut rng = stream.child(j as u64).rng();
                let a = random_spd(self.dim, self.mu, self.l, &mut rng);
                let center = uniform_in_ball(self.dim, center_radius, &mut rng);
                Ok(LossModel::Quadratic(QuadraticLoss::new(
                    a,
                    center,
                    self.sample_count,
                )?))
            })
            .collect()
    }
}

/// `N` random quadratics in dimension `d` with spectra in `[mu, l]` and
/// interior minimisers, using the default domain radius.
pub fn make_quadratic_suite(
    n_sources: usize,
    dim: usize,
    mu: f64,
    l: f64,
    seed: u64,
) -> Result<Vec<LossModel>> {
    QuadraticSuiteSpec::new(n_sources, dim, mu, l, seed).build()
}

fn random_spd<R: Rng + ?Sized>(d: usize, mu: f64, l: f64, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let eig: Vec<f64> = (0..d)
        .map(|k| match (d, k) {
            (1, _) => rng.random_range(mu..=l),
            (_, 0) => mu,
            (_, k) if k == d - 1 => l,
            _ => rng.random_range(mu..=l),
        })
        .collect();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eig)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

fn uniform_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&dir).max(1e-300);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    dir.iter().map(|x| x * r / n).collect()
}

/// Minimiser of the weighted quadratic risk over the domain ball.
#[derive(Debug, Clone, PartialEq)]
pub struct WStar {
    pub params: ModelParams,
    /// The unconstrained solution left the ball and a projected solve was used.
    pub constrained: bool,
}

/// `w*(alpha) = argmin_{||w|| <= radius} sum_j alpha_j f_j(w)` for a quadratic suite.
///
/// Solves `(sum_j alpha_j A_j) w = sum_j alpha_j A_j c_j`; if that point is
/// outside the ball, falls back to projected GD run until successive iterates
/// differ by less than 1e-12.
pub fn closed_form_wstar(
    suite: &[LossModel],
    alpha: &MixtureWeights,
    radius: f64,
) -> Result<WStar> {
    check_dim(suite.len(), alpha.len())?;
    let quads: Vec<&QuadraticLoss> = suite
        .iter()
        .map(|m| {
            m.as_quadratic()
                .ok_or_else(|| Error::invalid("closed-form w* needs a quadratic suite"))
        })
        .collect::<Result<_>>()?;
    let d = quads[0].center().len();
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for (q, &a) in quads.iter().zip(alpha.as_slice()) {
        if a == 0.0 {
            continue;
        }
        h += q.matrix() * a;
        b += q.matrix() * q.center_vec() * a;
    }
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Internal("weighted curvature matrix is singular".into()))?;
    let w = chol.solve(&b);
    if norm(w.as_slice()) <= radius {
        return Ok(WStar {
            params: ModelParams::new(w.as_slice().to_vec(), radius)?,
            constrained: false,
        });
    }

    let step = 1.0 / h.symmetric_eigenvalues().max();
    let mut v = w.as_slice().to_vec();
    project_ball_in_place(&mut v, radius);
    for _ in 0..10_000_000 {
        let g = &h * DVector::from_column_slice(&v) - &b;
        let mut next: Vec<f64> = v
            .iter()
            .zip(g.iter())
            .map(|(x, gi)| x - step * gi)
            .collect();
        project_ball_in_place(&mut next, radius);
        let moved = dist(&next, &v);
        v = next;
        if moved < 1e-12 {
            break;
        }
    }
    Ok(WStar {
        params: ModelParams::new(v, radius)?,
        constrained: true,
    })
}

/// Class sets per group. Three groups follow the 3/3/4 split
/// {0,1,2}, {3,4,5}, {6,7,8,9}; other counts use three classes per group.
pub fn group_class_sets(groups: usize) -> Vec<Vec<usize>> {
    if groups == 3 {
        vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8, 9]]
    } else {
        (0..groups).map(|g| (3 * g..3 * g + 3).collect()).collect()
    }
}

/// Gaussian-blob classification world: one mean per class, domains draw
/// labels from their group's class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedClassification {
    pub class_means: Vec<Vec<f64>>,
    pub class_sets: Vec<Vec<usize>>,
    pub noise: f64,
}

impl GroupedClassification {
    pub const DEFAULT_FEATURES: usize = 6;
    pub const DEFAULT_SEPARATION: f64 = 1.5;
    pub const DEFAULT_NOISE: f64 = 1.0;

    pub fn new<R: Rng + ?Sized>(
        groups: usize,
        n_features: usize,
        separation: f64,
        noise: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if groups == 0 || n_features == 0 {
            return Err(Error::invalid("need at least one group and one feature"));
        }
        let class_sets = group_class_sets(groups);
        let n_classes = class_sets.iter().flatten().max().map_or(0, |m| m + 1);
        let class_means = (0..n_classes)
            .map(|_| {
                (0..n_features)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        separation * z
                    })
                    .collect()
            })
            .collect();
        Ok(GroupedClassification {
            class_means,
            class_sets,
            noise,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_means.len()
    }

    pub fn n_groups(&self) -> usize {
        self.class_sets.len()
    }

    pub fn n_features(&self) -> usize {
        self.class_means[0].len()
    }

    /// A domain whose labels cycle through the union of the given groups'
    /// classes (every class appears when `samples >= #classes`), rows shuffled.
    pub fn sample_domain<R: Rng + ?Sized>(
        &self,
        groups: &[usize],
        samples: usize,
        rng: &mut R,
    ) -> Result<Dataset> {
        if samples == 0 {
            return Err(Error::EmptyDataset);
        }
        let classes: Vec<usize> = groups
            .iter()
            .map(|&g| {
                self.class_sets
                    .get(g)
                    .ok_or_else(|| Error::invalid(format!("group {g} out of range")))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .copied()
            .collect();
        let mut labels: Vec<usize> = (0..samples).map(|i| classes[i % classes.len()]).collect();
        labels.shuffle(rng);
        let p = self.n_features();
        let mut features = Vec::with_capacity(samples * p);
        for &y in &labels {
            for k in 0..p {
                let e: f64 = StandardNormal.sample(rng);
                features.push(self.class_means[y][k] + self.noise * e);
            }
        }
        Dataset::new(features, p, labels.into_iter().map(|y| y as f64).collect())
    }
}

/// `groups * domains_per_group` datasets ordered group by group.
pub fn make_grouped_classification(
    groups: usize,
    domains_per_group: usize,
    samples_per_domain: usize,
    seed: u64,
) -> Result<Vec<Dataset>> {
    if domains_per_group == 0 || samples_per_domain == 0 {
        return Err(Error::invalid("all counts must be at least 1"));
    }
    let stream = RngStream::new(seed, 0x4752_4f55);
    let world = GroupedClassification::new(
        groups,
        GroupedClassification::DEFAULT_FEATURES,
        GroupedClassification::DEFAULT_SEPARATION,
        GroupedClassification::DEFAULT_NOISE,
        &mut stream.rng(),
    )?;
    let mut out = Vec::with_capacity(groups * domains_per_group);
    for g in 0..groups {
        for k in 0..domains_per_group {
            let mut rng = stream.child((g * domains_per_group + k) as u64).rng();
            out.push(world.sample_domain(&[g], samples_per_domain, &mut rng)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_source_wstar_is_center() {
        let suite = make_quadratic_suite(1, 3, 0.5, 2.0, 4).unwrap();
        let w = closed_form_wstar(&suite, &MixtureWeights::uniform(1), 10.0).unwrap();
        let c = suite[0].as_quadratic().unwrap().center();
        for (a, b) in w.params.as_slice().iter().zip(c) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!w.constrained);
    }

    #[test]
    fn vertex_alpha_gives_that_center() {
        let suite = make_quadratic_suite(3, 4, 0.5, 2.0, 9).unwrap();
        for j in 0..3 {
            let w = closed_form_wstar(&suite, &MixtureWeights::vertex(3, j), 10.0).unwrap();
            let c = suite[j].as_quadratic().unwrap().center();
            assert!(dist(w.params.as_slice(), c) < 1e-12);
        }
    }

    #[test]
    fn average_of_identity_centers() {
        let q = |c: Vec<f64>| {
            LossModel::Quadratic(QuadraticLoss::new(DMatrix::identity(2, 2), c, 1).unwrap())
        };
        let suite = vec![q(vec![0.0, 0.0]), q(vec![1.0, 0.0])];
        let w = closed_form_wstar(&suite, &MixtureWeights::uniform(2), 10.0).unwrap();
        assert!((w.params.as_slice()[0] - 0.5).abs() < 1e-15);
        assert!(w.params.as_slice()[1].abs() < 1e-15);
    }

    #[test]
    fn constrained_case_is_flagged_and_on_boundary() {
        let q = LossModel::Quadratic(
            QuadraticLoss::new(DMatrix::identity(2, 2), vec![3.0, 4.0], 1).unwrap(),
        );
        let w = closed_form_wstar(&[q], &MixtureWeights::uniform(1), 1.0).unwrap();
        assert!(w.constrained);
        assert!((w.params.as_slice()[0] - 0.6).abs() < 1e-10);
        assert!((w.params.as_slice()[1] - 0.8).abs() < 1e-10);
    }

    #[test]
    fn spectra_within_bounds() {
        let suite = make_quadratic_suite(4, 5, 0.3, 3.0, 11).unwrap();
        for m in &suite {
            let ev = m
                .as_quadratic()
                .unwrap()
                .matrix()
                .clone()
                .symmetric_eigenvalues();
            assert!(ev.min() >= 0.3 - 1e-9 && ev.max() <= 3.0 + 1e-9);
        }
    }

    #[test]
    fn suite_is_seed_stable() {
        let a = make_quadratic_suite(3, 4, 0.5, 2.0, 5).unwrap();
        let b = make_quadratic_suite(3, 4, 0.5, 2.0, 5).unwrap();
        assert_eq!(a, b);
        let c = make_quadratic_suite(3, 4, 0.5, 2.0, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_curvature_rejected() {
        assert!(make_quadratic_suite(2, 2, 2.0, 1.0, 0).is_err());
        assert!(make_quadratic_suite(2, 2, 0.0, 1.0, 0).is_err());
        assert!(make_quadratic_suite(0, 2, 0.5, 1.0, 0).is_err());
    }

    #[test]
    fn grouped_shape_and_label_sets() {
        let ds = make_grouped_classification(3, 5, 100, 1).unwrap();
        assert_eq!(ds.len(), 15);
        assert!(ds.iter().all(|d| d.len() == 100));
        let sets = group_class_sets(3);
        for g in 0..3 {
            for k in 0..5 {
                assert_eq!(ds[g * 5 + k].classes(), sets[g]);
            }
        }
        for g in 0..3 {
            for h in (g + 1)..3 {
                let a = ds[g * 5].classes();
                let b = ds[h * 5].classes();
                assert!(a.iter().all(|c| !b.contains(c)));
            }
        }
    }
}
