//! Grouped classification: 3 groups of classes, several source domains per
//! group, and a fresh target domain drawn from one group. Three ways of
//! training a softmax classifier for the target are compared on its
//! held-out split:
//!
//! * learned: mixture weights from the descent-ascent solver, then the
//!   weighted source ERM;
//! * uniform: the same ERM with equal weights;
//! * target only: ERM on the target's own training split.

use std::sync::Arc;

use mixopt_core::coerm::{gd_solve, GdConfig};
use mixopt_core::domains::{
    suite_constants, Dataset, GroupedClassification, LossModel, SoftmaxLoss, Standardizer,
};
use mixopt_core::minimax::{self, MinimaxConfig, MinimaxInstance, MinimaxSolver, MinimaxState};
use mixopt_core::primitives::DEFAULT_DOMAIN_RADIUS;
use mixopt_core::{Exec, MixtureWeights, ModelParams, RngStream, SmoothAbs};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GroupedSection};
use crate::output::fmt;
use crate::{Output, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedCondition {
    pub target_group: usize,
    pub seed: u64,
    pub learned: f64,
    pub uniform: f64,
    pub target_only: f64,
    /// Learned weight on the target's own group.
    pub learned_group_mass: f64,
    pub learned_alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub target_group: usize,
    pub learned: f64,
    pub uniform: f64,
    pub target_only: f64,
    pub learned_group_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSummary {
    pub conditions: Vec<GroupedCondition>,
    pub by_group: Vec<GroupMeans>,
    /// Mean of `learned - uniform` over every condition.
    pub aggregate_gap: f64,
}

struct World {
    sources: Vec<Dataset>,
    target_train: Dataset,
    target_test: Dataset,
    n_classes: usize,
}

fn build_world(sec: &GroupedSection, target_group: usize, seed: u64) -> Result<World> {
    let stream = RngStream::new(seed, 0x4752_5044);
    let world = GroupedClassification::new(
        sec.groups,
        sec.n_features,
        sec.separation,
        sec.noise,
        &mut stream.child(0).rng(),
    )?;
    let mut sources = Vec::with_capacity(sec.groups * sec.domains_per_group);
    for g in 0..sec.groups {
        for k in 0..sec.domains_per_group {
            let idx = (g * sec.domains_per_group + k) as u64;
            let ds = world.sample_domain(
                &[g],
                sec.samples_per_domain,
                &mut stream.child(1 + idx).rng(),
            )?;
            sources.push(ds.split(sec.train_fraction)?.0);
        }
    }
    let target = world.sample_domain(
        &[target_group],
        sec.samples_per_domain,
        &mut stream.child(1_000_000 + target_group as u64).rng(),
    )?;
    let (target_train, target_test) = target.split(sec.train_fraction)?;
    let scaler = Standardizer::fit(sources.iter().chain([&target_train]))?;
    Ok(World {
        sources: sources.iter().map(|d| scaler.apply(d)).collect(),
        target_train: scaler.apply(&target_train),
        target_test: scaler.apply(&target_test),
        n_classes: world.n_classes(),
    })
}

fn softmax(ds: &Dataset, classes: usize, reg: f64) -> Result<LossModel> {
    Ok(LossModel::Softmax(SoftmaxLoss::new(
        Arc::new(ds.clone()),
        classes,
        reg,
    )?))
}

fn erm(suite: &[LossModel], alpha: &MixtureWeights, steps: usize) -> Result<ModelParams> {
    let c = suite_constants(suite, DEFAULT_DOMAIN_RADIUS)?;
    let start = ModelParams::zeros(suite[0].dim(), DEFAULT_DOMAIN_RADIUS);
    Ok(gd_solve(
        &start,
        alpha,
        suite,
        &GdConfig::unit(c.l_f, steps),
    )?)
}

pub fn run_condition(
    sec: &GroupedSection,
    target_group: usize,
    seed: u64,
) -> Result<GroupedCondition> {
    let w = build_world(sec, target_group, seed)?;
    let sources: Vec<LossModel> = w
        .sources
        .iter()
        .map(|d| softmax(d, w.n_classes, sec.reg))
        .collect::<Result<_>>()?;
    let target = softmax(&w.target_train, w.n_classes, sec.reg)?;
    let scorer = SoftmaxLoss::new(Arc::new(w.target_test.clone()), w.n_classes, sec.reg)?;

    let inst = MinimaxInstance::new(target.clone(), sources.clone(), DEFAULT_DOMAIN_RADIUS)?;
    let mcfg = MinimaxConfig {
        batch_size: sec.batch_size,
        beta: sec.beta,
        eta: sec.eta,
        gamma: sec.gamma,
        reg_c: sec.reg_c,
        iterations: sec.minimax_iterations,
        smoothing: SmoothAbs::new(sec.smoothing)?,
        seed: seed ^ (target_group as u64) << 32,
        record_every: sec.minimax_iterations,
        exec: Exec::Sequential,
    };
    // w = 0 is a stationary point here: every softmax risk equals log K, so
    // all tracked differences vanish and so does the w-gradient.
    let mut rng = RngStream::new(seed, 0x5730_494e)
        .child(target_group as u64)
        .rng();
    let w0: Vec<f64> = (0..inst.dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sec.w_init_scale * z
        })
        .collect();
    let state = MinimaxState::initial(&inst, MixtureWeights::uniform(sources.len()), w0)?;
    let solver = MinimaxSolver::with_state(&inst, mcfg, state)?;
    let alpha = minimax::run_from(solver)?.final_alpha();

    let learned = erm(&sources, &alpha, sec.erm_steps)?;
    let uniform = erm(
        &sources,
        &MixtureWeights::uniform(sources.len()),
        sec.erm_steps,
    )?;
    let own = erm(
        std::slice::from_ref(&target),
        &MixtureWeights::uniform(1),
        sec.erm_steps,
    )?;

    let lo = target_group * sec.domains_per_group;
    let mass = alpha.as_slice()[lo..lo + sec.domains_per_group]
        .iter()
        .sum();
    Ok(GroupedCondition {
        target_group,
        seed,
        learned: scorer.accuracy(learned.as_slice(), &w.target_test),
        uniform: scorer.accuracy(uniform.as_slice(), &w.target_test),
        target_only: scorer.accuracy(own.as_slice(), &w.target_test),
        learned_group_mass: mass,
        learned_alpha: alpha.into_inner(),
    })
}

/// Every (target group, seed) condition, in group-major order.
pub fn run_grouped(sec: &GroupedSection, seeds: &[u64], exec: Exec) -> Result<GroupedSummary> {
    let jobs: Vec<(usize, u64)> = (0..sec.groups)
        .flat_map(|g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let conditions: Vec<GroupedCondition> = exec
        .map(&jobs, |&(g, s)| run_condition(sec, g, s))
        .into_iter()
        .collect::<Result<_>>()?;
    let by_group = (0..sec.groups)
        .map(|g| {
            let rows: Vec<&GroupedCondition> =
                conditions.iter().filter(|c| c.target_group == g).collect();
            let mean = |f: fn(&GroupedCondition) -> f64| {
                rows.iter().map(|c| f(c)).sum::<f64>() / rows.len() as f64
            };
            GroupMeans {
                target_group: g,
                learned: mean(|c| c.learned),
                uniform: mean(|c| c.uniform),
                target_only: mean(|c| c.target_only),
                learned_group_mass: mean(|c| c.learned_group_mass),
            }
        })
        .collect();
    let aggregate_gap = conditions
        .iter()
        .map(|c| c.learned - c.uniform)
        .sum::<f64>()
        / conditions.len() as f64;
    Ok(GroupedSummary {
        conditions,
        by_group,
        aggregate_gap,
    })
}

pub fn cmd_grouped(cfg: &ExperimentConfig, out: &Output) -> Result<GroupedSummary> {
    let summary = run_grouped(&cfg.grouped, &cfg.seeds, cfg.exec)?;
    out.write_csv(
        "grouped_accuracy.csv",
        &[
            "target_group",
            "seed",
            "learned",
            "uniform",
            "target_only",
            "learned_group_mass",
        ],
        summary.conditions.iter().map(|c| {
            vec![
                c.target_group.to_string(),
                c.seed.to_string(),
                fmt(c.learned),
                fmt(c.uniform),
                fmt(c.target_only),
                fmt(c.learned_group_mass),
            ]
        }),
    )?;
    out.write_json("grouped_summary.json", &summary)?;
    Ok(summary)
}
