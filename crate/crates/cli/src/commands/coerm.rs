use mixopt_core::coerm::{all_feasible, lipschitz_audit, solve_batch, GdConfig, LipschitzAudit};
use mixopt_core::domains::{closed_form_wstar, suite_constants};
use mixopt_core::primitives::vector::dist;
use serde::{Deserialize, Serialize};

use super::{dirichlet_batch, for_seeds};
use crate::config::ExperimentConfig;
use crate::{HarnessError, Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoermRun {
    pub seed: u64,
    pub n_targets: usize,
    pub steps: usize,
    pub step_size: f64,
    pub total_grad_evals: u64,
    /// Largest distance of a GD solution to the closed-form minimiser.
    pub max_error: f64,
    pub all_feasible: bool,
    pub lipschitz: Option<LipschitzAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoermSummary {
    pub runs: Vec<CoermRun>,
}

pub fn cmd_coerm(cfg: &ExperimentConfig, out: &Output) -> Result<CoermSummary> {
    let sec = &cfg.coerm;
    let results = for_seeds(cfg.exec, &cfg.seeds, |seed| {
        let suite = sec.suite.spec(sec.suite.n_sources, seed).build()?;
        let radius = sec.suite.radius;
        let c = suite_constants(&suite, radius)?;
        let steps = sec
            .steps
            .unwrap_or_else(|| GdConfig::steps_for_accuracy(c.mu_f, c.l_f, radius, sec.accuracy));
        let gd = GdConfig::unit(c.l_f, steps);
        let alphas = dirichlet_batch(sec.suite.n_sources, sec.n_targets, seed, 0x434f_4552);
        let batch = solve_batch(&alphas, &suite, radius, &gd, mixopt_core::Exec::Sequential)?;
        let mut max_error: f64 = 0.0;
        for (a, w) in alphas.iter().zip(&batch.solutions) {
            let exact = closed_form_wstar(&suite, a, radius)?;
            max_error = max_error.max(dist(w.as_slice(), exact.params.as_slice()));
        }
        let lipschitz = if sec.lipschitz_pairs > 0 {
            Some(lipschitz_audit(&suite, radius, sec.lipschitz_pairs, seed)?)
        } else {
            None
        };
        let run = CoermRun {
            seed,
            n_targets: sec.n_targets,
            steps,
            step_size: gd.step,
            total_grad_evals: batch.total_grad_evals(),
            max_error,
            all_feasible: all_feasible(&batch.solutions),
            lipschitz,
        };
        Ok((alphas, batch, run))
    })?;

    let mut runs = Vec::with_capacity(results.len());
    for (alphas, batch, run) in results {
        let path = out.path(&format!("coerm_seed{}.csv", run.seed));
        batch.write_csv(&alphas, &path, &out.comments())?;
        runs.push(run);
    }
    let summary = CoermSummary { runs };
    out.write_json("coerm_summary.json", &summary)?;
    for r in &summary.runs {
        if let Some(a) = &r.lipschitz {
            a.check()?;
        }
        if !r.all_feasible {
            return Err(HarnessError::Invariant(format!(
                "seed {}: a solution left the domain ball",
                r.seed
            )));
        }
    }
    Ok(summary)
}
