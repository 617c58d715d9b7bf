//! Experiment configuration: a TOML file with one table per subcommand.
//!
//! ```toml
//! seeds = [0, 1, 2]
//!
//! [online]
//! horizon = 2048
//! p = 0.5
//!
//! [online.suite]
//! n_sources = 2
//! dim = 3
//! ```
//!
//! Every field has a default, unknown keys are rejected.

use std::path::{Path, PathBuf};

use mixopt_core::domains::{GroupedClassification, QuadraticSuiteSpec, DEFAULT_REG};
use mixopt_core::minimax::MinimaxConfig;
use mixopt_core::primitives::DEFAULT_DOMAIN_RADIUS;
use mixopt_core::{Exec, SmoothAbs};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mixture,
    Coerm,
    Wstar,
    Online,
    Grouped,
    Phase,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Mixture => "mixture",
            Kind::Coerm => "coerm",
            Kind::Wstar => "wstar",
            Kind::Online => "online",
            Kind::Grouped => "grouped",
            Kind::Phase => "phase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Output directory; `--out` wins.
    pub out: Option<PathBuf>,
    /// Worker pool for independent seeds and conditions.
    pub exec: Exec,
    pub mixture: MixtureSection,
    pub coerm: CoermSection,
    pub wstar: WstarSection,
    pub online: OnlineSection,
    pub grouped: GroupedSection,
    pub phase: PhaseSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![0],
            out: None,
            exec: Exec::default(),
            mixture: MixtureSection::default(),
            coerm: CoermSection::default(),
            wstar: WstarSection::default(),
            online: OnlineSection::default(),
            grouped: GroupedSection::default(),
            phase: PhaseSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies command-line overrides; flags win over the file.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if out.is_some() {
            self.out = out;
        }
        self
    }

    pub fn validate(&self, kind: Kind) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(cfg_err("seeds", "list must be non-empty"));
        }
        match kind {
            Kind::Mixture => self.mixture.validate(),
            Kind::Coerm => self.coerm.validate(),
            Kind::Wstar => self.wstar.validate(),
            Kind::Online => self.online.validate(),
            Kind::Grouped => self.grouped.validate(),
            Kind::Phase => self.phase.validate(),
        }
    }

    /// The part of the config that determines a subcommand's outputs.
    pub fn effective(&self, kind: Kind) -> serde_json::Value {
        let section = match kind {
            Kind::Mixture => serde_json::to_value(&self.mixture),
            Kind::Coerm => serde_json::to_value(&self.coerm),
            Kind::Wstar => serde_json::to_value(&self.wstar),
            Kind::Online => serde_json::to_value(&self.online),
            Kind::Grouped => serde_json::to_value(&self.grouped),
            Kind::Phase => serde_json::to_value(&self.phase),
        }
        .expect("config sections serialise");
        serde_json::json!({
            "kind": kind.name(),
            "seeds": self.seeds,
            kind.name(): section,
        })
    }
}

fn cfg_err(field: &str, msg: &str) -> HarnessError {
    HarnessError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: usize) -> Result<(), HarnessError> {
    if v == 0 {
        return Err(cfg_err(field, "must be positive"));
    }
    Ok(())
}

fn positive_f(field: &str, v: f64) -> Result<(), HarnessError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(cfg_err(field, "must be a positive number"));
    }
    Ok(())
}

/// A random quadratic suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub n_sources: usize,
    pub dim: usize,
    pub mu: f64,
    pub l: f64,
    pub radius: f64,
    pub sample_count: usize,
}

impl SuiteSection {
    fn new(n_sources: usize, dim: usize, mu: f64, l: f64, radius: f64) -> Self {
        SuiteSection {
            n_sources,
            dim,
            mu,
            l,
            radius,
            sample_count: 100,
        }
    }

    pub fn spec(&self, n_models: usize, seed: u64) -> QuadraticSuiteSpec {
        let mut s = QuadraticSuiteSpec::new(n_models, self.dim, self.mu, self.l, seed);
        s.domain_radius = self.radius;
        s.sample_count = self.sample_count;
        s
    }

    fn validate(&self, prefix: &str) -> Result<(), HarnessError> {
        positive(&format!("{prefix}.n_sources"), self.n_sources)?;
        positive(&format!("{prefix}.dim"), self.dim)?;
        positive(&format!("{prefix}.sample_count"), self.sample_count)?;
        positive_f(&format!("{prefix}.mu"), self.mu)?;
        positive_f(&format!("{prefix}.radius"), self.radius)?;
        if !(self.l >= self.mu) || !self.l.is_finite() {
            return Err(cfg_err(&format!("{prefix}.l"), "must be finite and >= mu"));
        }
        Ok(())
    }
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection::new(3, 2, 0.5, 1.0, DEFAULT_DOMAIN_RADIUS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Step sizes from the convergence theorem's constants.
    Theory,
    /// `eta` and `gamma` as given.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The target is an exact copy of source 0.
    QuadraticMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSection {
    /// Sources; one extra quadratic is drawn as the target.
    pub suite: SuiteSection,
    pub preset: Option<Preset>,
    pub reg_c: f64,
    pub smoothing: f64,
    pub beta: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub record_every: usize,
    pub schedule: Schedule,
    pub eta: f64,
    pub gamma: f64,
}

impl Default for MixtureSection {
    fn default() -> Self {
        let mut suite = SuiteSection::new(5, 10, 0.05, 0.1, 1.0);
        suite.sample_count = 1;
        MixtureSection {
            suite,
            preset: None,
            reg_c: MinimaxConfig::DEFAULT_REG_C,
            smoothing: SmoothAbs::DEFAULT_C,
            beta: MinimaxConfig::DEFAULT_BETA,
            batch_size: 1,
            iterations: 20_000,
            record_every: 20,
            schedule: Schedule::Theory,
            eta: 1e-2,
            gamma: 1e-2,
        }
    }
}

impl MixtureSection {
    /// Settings under which the matching source should win clearly: a weak
    /// `alpha^T M alpha` term and well separated quadratics.
    pub fn quadratic_match() -> Self {
        let mut suite = SuiteSection::new(5, 10, 0.5, 1.0, DEFAULT_DOMAIN_RADIUS);
        suite.sample_count = 1000;
        MixtureSection {
            suite,
            preset: Some(Preset::QuadraticMatch),
            iterations: 5000,
            record_every: 50,
            schedule: Schedule::Manual,
            eta: 1e-3,
            gamma: 1e-2,
            ..MixtureSection::default()
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        self.suite.validate("mixture.suite")?;
        positive_f("mixture.reg_c", self.reg_c)?;
        positive_f("mixture.smoothing", self.smoothing)?;
        positive("mixture.batch_size", self.batch_size)?;
        positive("mixture.iterations", self.iterations)?;
        positive("mixture.record_every", self.record_every)?;
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(cfg_err("mixture.beta", "must lie in (0, 1]"));
        }
        if self.schedule == Schedule::Manual {
            positive_f("mixture.eta", self.eta)?;
            positive_f("mixture.gamma", self.gamma)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoermSection {
    pub suite: SuiteSection,
    /// Number of target mixtures M.
    pub n_targets: usize,
    /// GD steps K; `None` picks enough for `accuracy`.
    pub steps: Option<usize>,
    pub accuracy: f64,
    /// Pairs for the Lipschitz audit (0 skips it).
    pub lipschitz_pairs: usize,
}

impl Default for CoermSection {
    fn default() -> Self {
        CoermSection {
            suite: SuiteSection::new(3, 4, 0.5, 1.0, DEFAULT_DOMAIN_RADIUS),
            n_targets: 100,
            steps: None,
            accuracy: 1e-6,
            lipschitz_pairs: 1000,
        }
    }
}

impl CoermSection {
    fn validate(&self) -> Result<(), HarnessError> {
        self.suite.validate("coerm.suite")?;
        positive("coerm.n_targets", self.n_targets)?;
        if let Some(k) = self.steps {
            positive("coerm.steps", k)?;
        }
        positive_f("coerm.accuracy", self.accuracy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WstarSection {
    pub suite: SuiteSection,
    /// Training mixtures n.
    pub n_train: usize,
    /// Hidden width m.
    pub width: usize,
    /// Outer iterations T.
    pub iterations: usize,
    pub eta: f64,
    /// Label-refinement GD steps K per outer iteration.
    pub inner_steps: usize,
    pub test_size: usize,
    pub record_every: usize,
}

impl Default for WstarSection {
    fn default() -> Self {
        WstarSection {
            suite: SuiteSection::new(3, 2, 0.5, 1.0, 1.0),
            n_train: 100,
            width: 512,
            iterations: 500,
            eta: 0.5,
            inner_steps: 5,
            test_size: 1000,
            record_every: 50,
        }
    }
}

impl WstarSection {
    fn validate(&self) -> Result<(), HarnessError> {
        self.suite.validate("wstar.suite")?;
        positive("wstar.n_train", self.n_train)?;
        positive("wstar.width", self.width)?;
        if !self.width.is_multiple_of(2) {
            return Err(cfg_err("wstar.width", "must be even"));
        }
        positive("wstar.iterations", self.iterations)?;
        positive("wstar.inner_steps", self.inner_steps)?;
        positive("wstar.test_size", self.test_size)?;
        positive("wstar.record_every", self.record_every)?;
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(cfg_err("wstar.eta", "must lie in (0, 1/2]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineSection {
    pub suite: SuiteSection,
    /// Stream length T.
    pub horizon: usize,
    pub p: f64,
    /// Target distance of GD pseudo-labels to `w*`; sets K unless `steps`
    /// is given.
    pub label_error: f64,
    pub steps: Option<usize>,
    pub strict_listing: bool,
    /// Rounds at which the packing is audited (the last round always is).
    pub checkpoints: Vec<u64>,
}

impl Default for OnlineSection {
    fn default() -> Self {
        OnlineSection {
            suite: SuiteSection::new(2, 2, 0.5, 1.0, DEFAULT_DOMAIN_RADIUS),
            horizon: 4096,
            p: 1.0,
            label_error: 1e-6,
            steps: None,
            strict_listing: false,
            checkpoints: vec![512, 1024, 2048],
        }
    }
}

impl OnlineSection {
    fn validate(&self) -> Result<(), HarnessError> {
        self.suite.validate("online.suite")?;
        positive("online.horizon", self.horizon)?;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(cfg_err("online.p", "must lie in [0, 1]"));
        }
        positive_f("online.label_error", self.label_error)?;
        if let Some(k) = self.steps {
            positive("online.steps", k)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupedSection {
    pub groups: usize,
    pub domains_per_group: usize,
    pub samples_per_domain: usize,
    pub n_features: usize,
    pub separation: f64,
    pub noise: f64,
    pub train_fraction: f64,
    /// L2 penalty of the softmax losses.
    pub reg: f64,
    /// GD steps for every weighted ERM.
    pub erm_steps: usize,
    pub minimax_iterations: usize,
    pub batch_size: usize,
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
    pub reg_c: f64,
    pub smoothing: f64,
    /// Standard deviation of the Gaussian starting point of `w`.
    pub w_init_scale: f64,
}

impl Default for GroupedSection {
    fn default() -> Self {
        GroupedSection {
            groups: 3,
            domains_per_group: 5,
            samples_per_domain: 100,
            n_features: GroupedClassification::DEFAULT_FEATURES,
            separation: GroupedClassification::DEFAULT_SEPARATION,
            noise: GroupedClassification::DEFAULT_NOISE,
            train_fraction: 0.8,
            reg: DEFAULT_REG,
            erm_steps: 200,
            minimax_iterations: 2000,
            batch_size: 16,
            eta: 0.05,
            gamma: 0.5,
            beta: MinimaxConfig::DEFAULT_BETA,
            reg_c: MinimaxConfig::DEFAULT_REG_C,
            smoothing: 1e-2,
            w_init_scale: 0.5,
        }
    }
}

impl GroupedSection {
    fn validate(&self) -> Result<(), HarnessError> {
        positive("grouped.groups", self.groups)?;
        positive("grouped.domains_per_group", self.domains_per_group)?;
        positive("grouped.samples_per_domain", self.samples_per_domain)?;
        positive("grouped.n_features", self.n_features)?;
        positive_f("grouped.separation", self.separation)?;
        positive_f("grouped.noise", self.noise)?;
        positive_f("grouped.reg", self.reg)?;
        positive("grouped.erm_steps", self.erm_steps)?;
        positive("grouped.minimax_iterations", self.minimax_iterations)?;
        positive("grouped.batch_size", self.batch_size)?;
        positive_f("grouped.eta", self.eta)?;
        positive_f("grouped.gamma", self.gamma)?;
        positive_f("grouped.reg_c", self.reg_c)?;
        positive_f("grouped.smoothing", self.smoothing)?;
        positive_f("grouped.w_init_scale", self.w_init_scale)?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(cfg_err("grouped.train_fraction", "must lie in (0, 1)"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(cfg_err("grouped.beta", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub suite: SuiteSection,
    /// Values of M.
    pub grid: Vec<usize>,
    /// Accuracy each direct solve is run to.
    pub accuracy: f64,
    pub n_train: usize,
    pub width: usize,
    pub iterations: usize,
    pub inner_steps: usize,
    pub eta: f64,
    pub test_size: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            suite: SuiteSection::new(3, 2, 0.5, 1.0, 1.0),
            grid: vec![1, 10, 100, 1000, 10_000],
            accuracy: 1e-6,
            n_train: 50,
            width: 128,
            iterations: 200,
            inner_steps: 1,
            eta: 0.5,
            test_size: 500,
        }
    }
}

impl PhaseSection {
    fn validate(&self) -> Result<(), HarnessError> {
        self.suite.validate("phase.suite")?;
        if self.grid.is_empty() || self.grid.contains(&0) {
            return Err(cfg_err(
                "phase.grid",
                "must be a non-empty list of positive counts",
            ));
        }
        positive_f("phase.accuracy", self.accuracy)?;
        positive("phase.n_train", self.n_train)?;
        positive("phase.width", self.width)?;
        if !self.width.is_multiple_of(2) {
            return Err(cfg_err("phase.width", "must be even"));
        }
        positive("phase.iterations", self.iterations)?;
        positive("phase.inner_steps", self.inner_steps)?;
        positive("phase.test_size", self.test_size)?;
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(cfg_err("phase.eta", "must lie in (0, 1/2]"));
        }
        Ok(())
    }
}
