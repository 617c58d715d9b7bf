//! Co-component ERM: many `alpha`-weighted risks `f_alpha = sum_j alpha_j f_j`
//! sharing the same components. Provides the projected-GD inner solver,
//! naive batch solving with gradient-evaluation accounting, and an
//! empirical audit of the Lipschitz constant of `alpha -> w*(alpha)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domains::{closed_form_wstar, suite_constants, LossModel};
use crate::error::{check_dim, Error, Result};
use crate::minimax::{fmt_f64, write_table};
use crate::parallel::Exec;
use crate::primitives::ball::project_ball_in_place;
use crate::primitives::vector::{axpy, dist, norm};
use crate::primitives::{sample_dirichlet, MixtureWeights, ModelParams, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    /// Step size; `1/L_f` gives the standard linear rate.
    pub step: f64,
    /// Number of steps K.
    pub steps: usize,
    /// Stop early once the projected step moves less than `tolerance * step`.
    pub tolerance: Option<f64>,
}

impl GdConfig {
    pub fn new(step: f64, steps: usize) -> Self {
        GdConfig {
            step,
            steps,
            tolerance: None,
        }
    }

    /// `step = 1/l_f`.
    pub fn unit(l_f: f64, steps: usize) -> Self {
        GdConfig::new(1.0 / l_f, steps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("GD step size must be positive"));
        }
        Ok(())
    }

    /// Steps needed so that `(1 - mu/L)^K * initial <= target`.
    pub fn steps_for_accuracy(mu_f: f64, l_f: f64, initial: f64, target: f64) -> usize {
        let rate = 1.0 - mu_f / l_f;
        if rate <= 0.0 || initial <= target {
            return 1;
        }
        ((target / initial).ln() / rate.ln()).ceil().max(1.0) as usize
    }
}

/// `sum_j alpha_j f_j(w)`.
pub fn weighted_risk(suite: &[LossModel], alpha: &MixtureWeights, w: &[f64]) -> Result<f64> {
    check_dim(suite.len(), alpha.len())?;
    let mut total = 0.0;
    for (f, &a) in suite.iter().zip(alpha.as_slice()) {
        if a != 0.0 {
            total += a * f.risk(w)?;
        }
    }
    Ok(total)
}

/// `sum_j alpha_j grad f_j(w)`.
pub fn weighted_grad(suite: &[LossModel], alpha: &MixtureWeights, w: &[f64]) -> Result<Vec<f64>> {
    check_dim(suite.len(), alpha.len())?;
    if let Some(f) = suite.first() {
        check_dim(f.dim(), w.len())?;
    }
    let mut g = vec![0.0; w.len()];
    for (f, &a) in suite.iter().zip(alpha.as_slice()) {
        if a != 0.0 {
            f.add_weighted_grad(w, a, &mut g);
        }
    }
    Ok(g)
}

/// One projected step `P_W(v - step * grad f_alpha(v))`.
pub fn gd_step(
    v: &[f64],
    alpha: &MixtureWeights,
    suite: &[LossModel],
    radius: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let g = weighted_grad(suite, alpha, v)?;
    let mut next = v.to_vec();
    axpy(-step, &g, &mut next);
    project_ball_in_place(&mut next, radius);
    Ok(next)
}

/// K steps of projected gradient descent on `f_alpha` from `v0`.
pub fn gd_solve(
    v0: &ModelParams,
    alpha: &MixtureWeights,
    suite: &[LossModel],
    cfg: &GdConfig,
) -> Result<ModelParams> {
    Ok(gd_solve_counted(v0, alpha, suite, cfg)?.0)
}

/// Like [`gd_solve`], also returning the number of steps actually taken.
pub fn gd_solve_counted(
    v0: &ModelParams,
    alpha: &MixtureWeights,
    suite: &[LossModel],
    cfg: &GdConfig,
) -> Result<(ModelParams, usize)> {
    cfg.validate()?;
    if suite.is_empty() {
        return Err(Error::invalid("empty suite"));
    }
    check_dim(suite[0].dim(), v0.dim())?;
    let radius = v0.domain_radius();
    let mut v = v0.as_slice().to_vec();
    let mut taken = 0;
    for _ in 0..cfg.steps {
        let next = gd_step(&v, alpha, suite, radius, cfg.step)?;
        taken += 1;
        let moved = dist(&next, &v);
        v = next;
        if let Some(tol) = cfg.tolerance {
            if moved <= tol * cfg.step {
                break;
            }
        }
    }
    Ok((ModelParams::new(v, radius)?, taken))
}

/// Solutions of M weighted ERMs and what they cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSolution {
    pub solutions: Vec<ModelParams>,
    /// Per-target gradient evaluations (one per source per step).
    pub grad_evals: Vec<u64>,
}

impl BatchSolution {
    pub fn total_grad_evals(&self) -> u64 {
        self.grad_evals.iter().sum()
    }

    /// Columns `alpha_0..alpha_{N-1},w_0..w_{d-1},grad_evals`.
    pub fn write_csv(
        &self,
        alphas: &[MixtureWeights],
        path: impl AsRef<Path>,
        comments: &[String],
    ) -> Result<()> {
        let n = alphas.first().map_or(0, |a| a.len());
        let d = self.solutions.first().map_or(0, |w| w.dim());
        let mut header: Vec<String> = (0..n).map(|j| format!("alpha_{j}")).collect();
        header.extend((0..d).map(|k| format!("w_{k}")));
        header.push("grad_evals".into());
        let rows = alphas
            .iter()
            .zip(&self.solutions)
            .zip(&self.grad_evals)
            .map(|((a, w), g)| {
                let mut cells: Vec<String> = a.as_slice().iter().map(|x| fmt_f64(*x)).collect();
                cells.extend(w.as_slice().iter().map(|x| fmt_f64(*x)));
                cells.push(g.to_string());
                cells
            });
        write_table(path.as_ref(), comments, &header, rows)
    }
}

/// Solves every weighted ERM independently from the origin.
pub fn solve_batch(
    alphas: &[MixtureWeights],
    suite: &[LossModel],
    radius: f64,
    cfg: &GdConfig,
    exec: Exec,
) -> Result<BatchSolution> {
    if alphas.is_empty() {
        return Err(Error::invalid("need at least one mixture weight"));
    }
    if suite.is_empty() {
        return Err(Error::invalid("empty suite"));
    }
    let start = ModelParams::zeros(suite[0].dim(), radius);
    let n = suite.len() as u64;
    let results = exec.map(alphas, |a| gd_solve_counted(&start, a, suite, cfg));
    let mut solutions = Vec::with_capacity(alphas.len());
    let mut grad_evals = Vec::with_capacity(alphas.len());
    for r in results {
        let (w, steps) = r?;
        solutions.push(w);
        grad_evals.push(steps as u64 * n);
    }
    Ok(BatchSolution {
        solutions,
        grad_evals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAudit {
    pub pairs: usize,
    pub max_ratio: f64,
    /// `sqrt(N) G_f / mu_f`.
    pub bound: f64,
    pub violations: usize,
}

impl LipschitzAudit {
    pub fn margin(&self) -> f64 {
        self.bound - self.max_ratio
    }

    pub fn check(&self) -> Result<()> {
        if self.violations == 0 {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "{} of {} pairs exceed the Lipschitz bound {} (max ratio {})",
                self.violations, self.pairs, self.bound, self.max_ratio
            )))
        }
    }
}

/// Samples `pairs` Dirichlet(1) pairs and compares
/// `||w*(a) - w*(a')|| / ||a - a'||` against `sqrt(N) G_f / mu_f`, using the
/// closed-form minimiser. Requires interior minimisers.
pub fn lipschitz_audit(
    suite: &[LossModel],
    radius: f64,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzAudit> {
    let c = suite_constants(suite, radius)?;
    let n = suite.len();
    let bound = (n as f64).sqrt() * c.g_f / c.mu_f;
    let mut rng = RngStream::new(seed, 0x4c49_5053).rng();
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    let mut counted = 0;
    for _ in 0..pairs {
        let a = sample_dirichlet(n, &mut rng);
        let b = sample_dirichlet(n, &mut rng);
        let da = dist(a.as_slice(), b.as_slice());
        if da == 0.0 {
            continue;
        }
        let wa = closed_form_wstar(suite, &a, radius)?;
        let wb = closed_form_wstar(suite, &b, radius)?;
        if wa.constrained || wb.constrained {
            return Err(Error::invalid(
                "Lipschitz audit needs interior minimisers; enlarge the domain radius",
            ));
        }
        let ratio = dist(wa.params.as_slice(), wb.params.as_slice()) / da;
        max_ratio = max_ratio.max(ratio);
        if ratio > bound {
            violations += 1;
        }
        counted += 1;
    }
    Ok(LipschitzAudit {
        pairs: counted,
        max_ratio,
        bound,
        violations,
    })
}

/// `||w|| <= radius` for every solution.
pub fn all_feasible(solutions: &[ModelParams]) -> bool {
    solutions
        .iter()
        .all(|w| norm(w.as_slice()) <= w.domain_radius() + 1e-9)
}
