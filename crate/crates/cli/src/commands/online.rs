use mixopt_core::coerm::GdConfig;
use mixopt_core::domains::suite_constants;
use mixopt_core::online::{
    run_stream, steps_for_label_error, uniform_stream, OnlineConfig, StreamResult,
};
use serde::{Deserialize, Serialize};

use super::for_seeds;
use crate::config::{ExperimentConfig, OnlineSection};
use crate::{Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub t: u64,
    pub centers: usize,
    pub min_margin: f64,
    pub constant_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRun {
    pub seed: u64,
    pub horizon: usize,
    pub p: f64,
    pub steps: usize,
    pub average_loss: f64,
    pub cumulative_regret: f64,
    pub label_count: u64,
    pub centers: usize,
    pub audits: Vec<AuditPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub runs: Vec<OnlineRun>,
}

/// Plays an i.i.d. uniform stream; K defaults to the smallest count whose
/// GD error bound from the origin is below `label_error`.
pub fn run_seed(sec: &OnlineSection, seed: u64) -> Result<(StreamResult, OnlineRun)> {
    let suite = sec.suite.spec(sec.suite.n_sources, seed).build()?;
    let radius = sec.suite.radius;
    let c = suite_constants(&suite, radius)?;
    let steps = sec
        .steps
        .unwrap_or_else(|| steps_for_label_error(c.mu_f, c.l_f, radius, sec.label_error));
    let ocfg = OnlineConfig {
        p: sec.p,
        inner: GdConfig::unit(c.l_f, steps),
        strict_listing: sec.strict_listing,
    };
    let alphas = uniform_stream(sec.suite.n_sources, sec.horizon, seed);
    let res = run_stream(&alphas, &suite, radius, &ocfg, seed, &sec.checkpoints)?;
    let run = OnlineRun {
        seed,
        horizon: sec.horizon,
        p: sec.p,
        steps,
        average_loss: res.average_loss(sec.horizon)?,
        cumulative_regret: res.cumulative_regret(),
        label_count: res.label_count(),
        centers: res.state.centers().len(),
        audits: res
            .audits
            .iter()
            .map(|(t, a)| AuditPoint {
                t: *t,
                centers: a.centers,
                min_margin: a.min_margin,
                constant_fit: a.constant_fit,
            })
            .collect(),
    };
    Ok((res, run))
}

pub fn cmd_online(cfg: &ExperimentConfig, out: &Output) -> Result<OnlineSummary> {
    let sec = &cfg.online;
    let results = for_seeds(cfg.exec, &cfg.seeds, |seed| run_seed(sec, seed))?;
    let mut runs = Vec::with_capacity(results.len());
    for (res, run) in results {
        let path = out.path(&format!("online_log_seed{}.csv", run.seed));
        res.write_log_csv(&path, &out.comments())?;
        runs.push(run);
    }
    let summary = OnlineSummary { runs };
    out.write_json("online_summary.json", &summary)?;
    Ok(summary)
}
