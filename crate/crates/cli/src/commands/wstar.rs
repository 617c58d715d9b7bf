use mixopt_core::coerm::GdConfig;
use mixopt_core::domains::suite_constants;
use mixopt_core::wstar_net::{train, write_trace_csv, TestSet, TrainConfig, TrainOutput};
use mixopt_core::Exec;
use serde::{Deserialize, Serialize};

use super::{dirichlet_batch, for_seeds};
use crate::config::{ExperimentConfig, WstarSection};
use crate::{Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WstarRun {
    pub seed: u64,
    pub n_train: usize,
    pub width: usize,
    pub iterations: usize,
    /// Mean `||h(alpha) - w*(alpha)||^2` on the held-out set.
    pub excess_risk: f64,
    pub final_empirical_risk: f64,
    pub final_label_gap_mean: f64,
    pub label_grad_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WstarSummary {
    pub runs: Vec<WstarRun>,
}

/// Trains on `n_train` Dirichlet mixtures and scores on a fresh test set.
pub fn run_seed(sec: &WstarSection, seed: u64, exec: Exec) -> Result<(TrainOutput, WstarRun)> {
    let suite = sec.suite.spec(sec.suite.n_sources, seed).build()?;
    let radius = sec.suite.radius;
    let c = suite_constants(&suite, radius)?;
    let alphas = dirichlet_batch(sec.suite.n_sources, sec.n_train, seed, 0x5753_5452);
    let tcfg = TrainConfig {
        width: sec.width,
        eta: sec.eta,
        inner: GdConfig::unit(c.l_f, sec.inner_steps),
        iterations: sec.iterations,
        seed,
        record_every: sec.record_every,
        test_size: sec.test_size,
        exec,
    };
    let trained = train(&alphas, &suite, radius, &tcfg)?;
    let test = TestSet::sample(&suite, radius, sec.test_size, seed ^ 0x7e57)?;
    let excess = test.excess_risk(|a| trained.net.forward(a).expect("dimension checked"), exec);
    let last = trained.trace.last();
    let run = WstarRun {
        seed,
        n_train: sec.n_train,
        width: sec.width,
        iterations: sec.iterations,
        excess_risk: excess,
        final_empirical_risk: last.map_or(f64::NAN, |r| r.empirical_risk),
        final_label_gap_mean: last.map_or(f64::NAN, |r| r.label_gap_mean),
        label_grad_evals: trained.grad_evals,
    };
    Ok((trained, run))
}

pub fn cmd_wstar(cfg: &ExperimentConfig, out: &Output) -> Result<WstarSummary> {
    let sec = &cfg.wstar;
    let results = for_seeds(cfg.exec, &cfg.seeds, |seed| {
        run_seed(sec, seed, Exec::Sequential)
    })?;
    let mut runs = Vec::with_capacity(results.len());
    for (trained, run) in results {
        let trace = out.path(&format!("wstar_trace_seed{}.csv", run.seed));
        write_trace_csv(&trained.trace, &trace, &out.comments())?;
        let ck = out.path(&format!("wstar_net_seed{}.json", run.seed));
        trained.net.save(&ck)?;
        runs.push(run);
    }
    let summary = WstarSummary { runs };
    out.write_json("wstar_summary.json", &summary)?;
    Ok(summary)
}
