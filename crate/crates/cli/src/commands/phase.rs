//! Cost of solving M weighted ERMs directly versus training a predictor
//! once and evaluating it M times. Costs are counted in single-source
//! gradient evaluations; one network forward pass counts as one unit.

use mixopt_core::coerm::{solve_batch, GdConfig};
use mixopt_core::domains::{closed_form_wstar, suite_constants};
use mixopt_core::primitives::vector::{dist, dist_sq};
use mixopt_core::wstar_net::{train, TrainConfig};
use mixopt_core::Exec;
use serde::{Deserialize, Serialize};

use super::{dirichlet_batch, for_seeds};
use crate::config::{ExperimentConfig, PhaseSection};
use crate::{Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub m: usize,
    pub solve_cost: u64,
    pub learn_cost: u64,
    pub solve_max_error: f64,
    pub learn_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRun {
    pub seed: u64,
    /// GD steps per direct solve.
    pub steps: usize,
    /// Measured cost of one direct solve.
    pub per_solve_cost: f64,
    pub train_cost: u64,
    pub points: Vec<PhasePoint>,
    /// Smallest grid M where learning is cheaper.
    pub crossover_m: Option<usize>,
    /// `train_cost / (per_solve_cost - 1)`.
    pub formula_crossover: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub runs: Vec<PhaseRun>,
}

pub fn run_seed(sec: &PhaseSection, seed: u64) -> Result<PhaseRun> {
    let n = sec.suite.n_sources;
    let suite = sec.suite.spec(n, seed).build()?;
    let radius = sec.suite.radius;
    let c = suite_constants(&suite, radius)?;
    let steps = GdConfig::steps_for_accuracy(c.mu_f, c.l_f, radius, sec.accuracy);
    let gd = GdConfig::unit(c.l_f, steps);

    let train_alphas = dirichlet_batch(n, sec.n_train, seed, 0x5048_5452);
    let tcfg = TrainConfig {
        width: sec.width,
        eta: sec.eta,
        inner: GdConfig::unit(c.l_f, sec.inner_steps),
        iterations: sec.iterations,
        seed,
        record_every: 0,
        test_size: 0,
        exec: Exec::Sequential,
    };
    let trained = train(&train_alphas, &suite, radius, &tcfg)?;
    let train_cost = trained.grad_evals;

    let mut points = Vec::with_capacity(sec.grid.len());
    for &m in &sec.grid {
        let alphas = dirichlet_batch(n, m, seed, 0x5048_5400 ^ m as u64);
        let batch = solve_batch(&alphas, &suite, radius, &gd, Exec::Sequential)?;
        let mut solve_max_error: f64 = 0.0;
        let mut sq = 0.0;
        for (a, w) in alphas.iter().zip(&batch.solutions) {
            let exact = closed_form_wstar(&suite, a, radius)?;
            solve_max_error = solve_max_error.max(dist(w.as_slice(), exact.params.as_slice()));
            let h = trained.net.forward(a.as_slice())?;
            sq += dist_sq(&h, exact.params.as_slice());
        }
        points.push(PhasePoint {
            m,
            solve_cost: batch.total_grad_evals(),
            learn_cost: train_cost + m as u64,
            solve_max_error,
            learn_rmse: (sq / m as f64).sqrt(),
        });
    }
    let per_solve_cost = (steps * n) as f64;
    let crossover_m = points
        .iter()
        .find(|p| p.learn_cost < p.solve_cost)
        .map(|p| p.m);
    Ok(PhaseRun {
        seed,
        steps,
        per_solve_cost,
        train_cost,
        points,
        crossover_m,
        formula_crossover: train_cost as f64 / (per_solve_cost - 1.0),
    })
}

pub fn cmd_phase(cfg: &ExperimentConfig, out: &Output) -> Result<PhaseSummary> {
    let sec = &cfg.phase;
    let runs = for_seeds(cfg.exec, &cfg.seeds, |seed| run_seed(sec, seed))?;
    for run in &runs {
        out.write_csv(
            &format!("phase_costs_seed{}.csv", run.seed),
            &[
                "M",
                "solve_cost",
                "learn_cost",
                "solve_max_error",
                "learn_rmse",
            ],
            run.points.iter().map(|p| {
                vec![
                    p.m.to_string(),
                    p.solve_cost.to_string(),
                    p.learn_cost.to_string(),
                    crate::output::fmt(p.solve_max_error),
                    crate::output::fmt(p.learn_rmse),
                ]
            }),
        )?;
    }
    let summary = PhaseSummary { runs };
    out.write_json("phase_summary.json", &summary)?;
    Ok(summary)
}
