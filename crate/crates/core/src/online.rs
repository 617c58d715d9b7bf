//! Label-efficient online regression of `alpha -> w*(alpha)` over the simplex.
//!
//! Each round the learner predicts from the nearest ball of a greedy packing
//! whose radius shrinks as `eps_t = t^(-1/(1+N))`, then with probability `p`
//! pays for a pseudo-label computed by K projected-GD steps from the origin.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coerm::{gd_solve, GdConfig};
use crate::domains::{closed_form_wstar, LossModel};
use crate::error::{check_dim, Error, Result};
use crate::minimax::{fmt_f64, write_table};
use crate::primitives::vector::{axpy, dist, dist_sq};
use crate::primitives::{MixtureWeights, ModelParams, RngStream};

/// `t^(-1/(1+N))`.
pub fn radius(t: u64, n_sources: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::invalid("round index starts at 1"));
    }
    Ok((t as f64).powf(-1.0 / (1.0 + n_sources as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub point: Vec<f64>,
    pub label_sum: Vec<f64>,
    /// Entries in the ball's label list.
    pub label_count: u64,
    /// Round at which the center was created.
    pub created_round: u64,
}

impl Center {
    fn new(point: Vec<f64>, d: usize, round: u64) -> Self {
        Center {
            point,
            label_sum: vec![0.0; d],
            label_count: 0,
            created_round: round,
        }
    }

    /// Mean of the stored labels, `None` if the list is empty.
    pub fn mean_label(&self) -> Option<Vec<f64>> {
        if self.label_count == 0 {
            return None;
        }
        let k = self.label_count as f64;
        Some(self.label_sum.iter().map(|s| s / k).collect())
    }
}

/// Index of the nearest center and its distance; ties go to the lowest index.
pub fn nearest_center(centers: &[Center], point: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centers.iter().enumerate() {
        let d2 = dist_sq(&c.point, point);
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, d2)| (i, d2.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    /// Label probability p.
    pub p: f64,
    /// Pseudo-label solver (K steps from the origin).
    pub inner: GdConfig,
    /// Store a zero vector when no label is drawn instead of skipping.
    #[serde(default)]
    pub strict_listing: bool,
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!(
                "label probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub t: u64,
    pub eps_t: f64,
    pub prediction: Vec<f64>,
    /// Ball the point joined (new or existing).
    pub active_center: usize,
    pub created_center: bool,
    pub label_drawn: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingState {
    n_sources: usize,
    d: usize,
    radius: f64,
    cfg: OnlineConfig,
    cold_start: Vec<f64>,
    centers: Vec<Center>,
    t: u64,
    labels_drawn: u64,
}

impl PackingState {
    /// Empty packing; the cold-start prediction is `(1/d) 1`.
    pub fn new(n_sources: usize, d: usize, radius: f64, cfg: OnlineConfig) -> Result<Self> {
        cfg.validate()?;
        if n_sources == 0 || d == 0 {
            return Err(Error::invalid("need N >= 1 and d >= 1"));
        }
        Ok(PackingState {
            n_sources,
            d,
            radius,
            cfg,
            cold_start: vec![1.0 / d as f64; d],
            centers: Vec::new(),
            t: 0,
            labels_drawn: 0,
        })
    }

    pub fn with_cold_start(mut self, v: Vec<f64>) -> Result<Self> {
        check_dim(self.d, v.len())?;
        self.cold_start = v;
        Ok(self)
    }

    pub fn centers(&self) -> &[Center] {
        &self.centers
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Number of rounds with `Z_t = 1`.
    pub fn labels_drawn(&self) -> u64 {
        self.labels_drawn
    }

    pub fn config(&self) -> &OnlineConfig {
        &self.cfg
    }

    /// Plays one round on `alpha`.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        alpha: &MixtureWeights,
        rng: &mut R,
        suite: &[LossModel],
    ) -> Result<RoundOutcome> {
        check_dim(self.n_sources, alpha.len())?;
        check_dim(self.n_sources, suite.len())?;
        let a = alpha.as_slice();
        self.t += 1;
        let t = self.t;
        let eps = radius(t, self.n_sources)?;

        let (active, created, prediction) = match nearest_center(&self.centers, a) {
            None => {
                self.centers.push(Center::new(a.to_vec(), self.d, t));
                (0, true, self.cold_start.clone())
            }
            Some((s, gap)) => {
                let prediction = self.centers[s]
                    .mean_label()
                    .unwrap_or_else(|| self.cold_start.clone());
                if gap <= eps {
                    (s, false, prediction)
                } else {
                    self.centers.push(Center::new(a.to_vec(), self.d, t));
                    (self.centers.len() - 1, true, prediction)
                }
            }
        };

        let drawn = rng.random_bool(self.cfg.p);
        if drawn {
            self.labels_drawn += 1;
            let start = ModelParams::zeros(self.d, self.radius);
            let label = gd_solve(&start, alpha, suite, &self.cfg.inner)?;
            let c = &mut self.centers[active];
            axpy(1.0, label.as_slice(), &mut c.label_sum);
            c.label_count += 1;
        } else if self.cfg.strict_listing {
            self.centers[active].label_count += 1;
        }

        Ok(RoundOutcome {
            t,
            eps_t: eps,
            prediction,
            active_center: active,
            created_center: created,
            label_drawn: drawn,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingAudit {
    pub centers: usize,
    /// Smallest `dist - eps(created_round of the later center)` over pairs.
    pub min_margin: f64,
    pub violations: usize,
    /// `centers * eps_T^N`, the empirical packing constant.
    pub constant_fit: f64,
}

/// Checks that every pair of centers is farther apart than the radius active
/// when the later one was created.
pub fn packing_audit(centers: &[Center], n_sources: usize, round: u64) -> Result<PackingAudit> {
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for (i, ci) in centers.iter().enumerate() {
        for cj in &centers[i + 1..] {
            let later = ci.created_round.max(cj.created_round);
            let margin = dist(&ci.point, &cj.point) - radius(later, n_sources)?;
            min_margin = min_margin.min(margin);
            if margin <= 0.0 {
                violations += 1;
            }
        }
    }
    let eps_t = radius(round.max(1), n_sources)?;
    let audit = PackingAudit {
        centers: centers.len(),
        min_margin,
        violations,
        constant_fit: centers.len() as f64 * eps_t.powi(n_sources as i32),
    };
    if violations > 0 {
        return Err(Error::Invariant(format!(
            "packing violated by {violations} center pairs (min margin {min_margin})"
        )));
    }
    Ok(audit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamLogRow {
    pub t: u64,
    pub eps_t: f64,
    pub active_center: usize,
    pub created: bool,
    pub z_t: bool,
    pub loss: f64,
    pub label_count_total: u64,
}

#[derive(Debug, Clone)]
pub struct StreamResult {
    pub log: Vec<StreamLogRow>,
    pub state: PackingState,
    /// Audits taken at the requested checkpoints.
    pub audits: Vec<(u64, PackingAudit)>,
}

impl StreamResult {
    pub fn losses(&self) -> Vec<f64> {
        self.log.iter().map(|r| r.loss).collect()
    }

    /// Cumulative loss; the comparator `w*` has zero loss, so this is also
    /// the regret.
    pub fn cumulative_regret(&self) -> f64 {
        self.log.iter().map(|r| r.loss).sum()
    }

    pub fn label_count(&self) -> u64 {
        self.state.labels_drawn()
    }

    /// `(1/T) sum_{t <= T} loss_t` over the first `horizon` rounds.
    pub fn average_loss(&self, horizon: usize) -> Result<f64> {
        if horizon == 0 || horizon > self.log.len() {
            return Err(Error::invalid(format!(
                "horizon {horizon} outside 1..={}",
                self.log.len()
            )));
        }
        Ok(self.log[..horizon].iter().map(|r| r.loss).sum::<f64>() / horizon as f64)
    }

    /// Writes `t,eps_t,active_center,created,Z_t,loss,label_count_total`.
    pub fn write_log_csv(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let header: Vec<String> = [
            "t",
            "eps_t",
            "active_center",
            "created",
            "Z_t",
            "loss",
            "label_count_total",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows = self.log.iter().map(|r| {
            vec![
                r.t.to_string(),
                fmt_f64(r.eps_t),
                r.active_center.to_string(),
                u8::from(r.created).to_string(),
                u8::from(r.z_t).to_string(),
                fmt_f64(r.loss),
                r.label_count_total.to_string(),
            ]
        });
        write_table(path.as_ref(), comments, &header, rows)
    }
}

/// Runs the protocol over `alphas` on a quadratic suite, scoring each
/// prediction against the closed-form `w*`. The packing is audited at every
/// round listed in `checkpoints` and after the final round.
pub fn run_stream(
    alphas: &[MixtureWeights],
    suite: &[LossModel],
    radius_w: f64,
    cfg: &OnlineConfig,
    seed: u64,
    checkpoints: &[u64],
) -> Result<StreamResult> {
    if suite.is_empty() {
        return Err(Error::invalid("empty suite"));
    }
    if suite.iter().any(|m| m.as_quadratic().is_none()) {
        return Err(Error::invalid("online losses need a quadratic suite"));
    }
    let d = suite[0].dim();
    let mut state = PackingState::new(suite.len(), d, radius_w, *cfg)?;
    let mut rng = RngStream::new(seed, 0x4f4e_4c4e).rng();
    let mut log = Vec::with_capacity(alphas.len());
    let mut audits = Vec::new();
    for alpha in alphas {
        let out = state.observe(alpha, &mut rng, suite)?;
        let truth = closed_form_wstar(suite, alpha, radius_w)?;
        let loss = dist_sq(&out.prediction, truth.params.as_slice());
        log.push(StreamLogRow {
            t: out.t,
            eps_t: out.eps_t,
            active_center: out.active_center,
            created: out.created_center,
            z_t: out.label_drawn,
            loss,
            label_count_total: state.labels_drawn(),
        });
        let last = out.t == alphas.len() as u64;
        if last || checkpoints.contains(&out.t) {
            let audit = packing_audit(state.centers(), state.n_sources(), out.t)?;
            audits.push((out.t, audit));
        }
    }
    Ok(StreamResult { log, state, audits })
}

/// `T` i.i.d. uniform (Dirichlet(1)) points on the N-simplex.
pub fn uniform_stream(n_sources: usize, horizon: usize, seed: u64) -> Vec<MixtureWeights> {
    let mut rng = RngStream::new(seed, 0x5354_524d).rng();
    (0..horizon)
        .map(|_| crate::primitives::sample_dirichlet(n_sources, &mut rng))
        .collect()
}

/// K such that GD from the origin reaches `target` distance to `w*`, with
/// step `1/L_f` and initial distance at most the domain diameter.
pub fn steps_for_label_error(mu_f: f64, l_f: f64, radius_w: f64, target: f64) -> usize {
    GdConfig::steps_for_accuracy(mu_f, l_f, 2.0 * radius_w, target)
}
