use mixopt_core::minimax::{self, MinimaxConfig, MinimaxInstance, Trajectory};
use mixopt_core::{Exec, SmoothAbs};
use serde::{Deserialize, Serialize};

use super::for_seeds;
use crate::config::{ExperimentConfig, MixtureSection, Preset, Schedule};
use crate::{Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRun {
    pub seed: u64,
    pub eta: f64,
    pub gamma: f64,
    pub final_alpha: Vec<f64>,
    pub mean_gap_sq_first_quartile: f64,
    pub mean_gap_sq_last_quartile: f64,
    pub final_objective: f64,
    pub final_unrelaxed_objective: f64,
    /// Source the target copies (preset runs only) and the mass on it.
    pub matched_source: Option<usize>,
    pub matched_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    pub runs: Vec<MixtureRun>,
}

/// Draws `n_sources + 1` quadratics; the first becomes the target unless a
/// preset replaces it.
pub fn build_instance(sec: &MixtureSection, seed: u64) -> Result<MinimaxInstance> {
    let mut models = sec.suite.spec(sec.suite.n_sources + 1, seed).build()?;
    let mut target = models.remove(0);
    if sec.preset == Some(Preset::QuadraticMatch) {
        target = models[0].clone();
    }
    Ok(MinimaxInstance::new(target, models, sec.suite.radius)?)
}

pub fn minimax_config(
    sec: &MixtureSection,
    inst: &MinimaxInstance,
    seed: u64,
) -> Result<MinimaxConfig> {
    let smoothing = SmoothAbs::new(sec.smoothing)?;
    let mut cfg = MinimaxConfig::theory_schedule(inst, sec.reg_c, smoothing, sec.iterations, seed);
    if sec.schedule == Schedule::Manual {
        cfg.eta = sec.eta;
        cfg.gamma = sec.gamma;
    }
    cfg.beta = sec.beta;
    cfg.batch_size = sec.batch_size;
    cfg.record_every = sec.record_every;
    cfg.exec = Exec::Sequential;
    Ok(cfg)
}

pub fn run_seed(sec: &MixtureSection, seed: u64) -> Result<(Trajectory, MixtureRun)> {
    let inst = build_instance(sec, seed)?;
    let cfg = minimax_config(sec, &inst, seed)?;
    let tr = minimax::run(&inst, &cfg)?;
    let alpha = tr.final_alpha();
    let w = &tr.final_state.w;
    let matched = (sec.preset == Some(Preset::QuadraticMatch)).then_some(0);
    let run = MixtureRun {
        seed,
        eta: cfg.eta,
        gamma: cfg.gamma,
        final_alpha: alpha.as_slice().to_vec(),
        mean_gap_sq_first_quartile: tr.quartile_mean_gap_sq(0),
        mean_gap_sq_last_quartile: tr.quartile_mean_gap_sq(3),
        final_objective: minimax::objective(&inst, &alpha, w, cfg.reg_c, cfg.smoothing)?,
        final_unrelaxed_objective: minimax::unrelaxed_objective(&inst, &alpha, w, cfg.reg_c)?,
        matched_source: matched,
        matched_mass: matched.map(|j| alpha.as_slice()[j]),
    };
    Ok((tr, run))
}

pub fn cmd_mixture(cfg: &ExperimentConfig, out: &Output) -> Result<MixtureSummary> {
    let sec = &cfg.mixture;
    let results = for_seeds(cfg.exec, &cfg.seeds, |seed| run_seed(sec, seed))?;
    let mut runs = Vec::with_capacity(results.len());
    for (tr, run) in results {
        let path = out.path(&format!("mixture_seed{}.csv", run.seed));
        tr.write_csv(&path, &out.comments())?;
        runs.push(run);
    }
    let summary = MixtureSummary { runs };
    out.write_json("mixture_summary.json", &summary)?;
    Ok(summary)
}
