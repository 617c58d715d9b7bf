//! Mixture-weight estimation by stochastic corrected gradient
//! descent-ascent.
//!
//! Solves
//!
//! ```text
//! min_{alpha in simplex} max_{||w|| <= R}
//!     F(alpha, w) = sum_j alpha_j g(f_T(w) - f_j(w)) + C alpha^T M alpha
//! ```
//!
//! with `g(x) = sqrt(x^2 + c)` and `M = diag(1/m_j)`. Because `g` is applied
//! to a difference of empirical risks, naive minibatch gradients are biased;
//! each source keeps a tracking scalar `z_j` that follows
//! `f_T(w^t) - f_j(w^t)` through a corrected recursion evaluated on the same
//! minibatch at `w^t` and `w^{t-1}`.

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{draw_batch, suite_constants, CurvatureConstants, LossModel};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::parallel::Exec;
use crate::primitives::ball::project_ball_in_place;
use crate::primitives::vector::{axpy, norm_sq};
use crate::primitives::{
    project_simplex, MixtureWeights, RngStream, SmoothAbs, DEFAULT_DOMAIN_RADIUS,
};

/// A target domain, N source domains and the parameter ball W.
#[derive(Debug, Clone)]
pub struct MinimaxInstance {
    target: LossModel,
    sources: Vec<LossModel>,
    radius: f64,
}

impl MinimaxInstance {
    pub fn new(target: LossModel, sources: Vec<LossModel>, radius: f64) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("at least one source domain is required"));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("domain radius must be positive"));
        }
        let d = target.dim();
        for s in &sources {
            check_dim(d, s.dim())?;
        }
        Ok(MinimaxInstance {
            target,
            sources,
            radius,
        })
    }

    pub fn target(&self) -> &LossModel {
        &self.target
    }

    pub fn sources(&self) -> &[LossModel] {
        &self.sources
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Diagonal of `M`: `1/m_j`.
    pub fn m_diag(&self) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| 1.0 / s.sample_count() as f64)
            .collect()
    }

    /// Worst-case curvature constants over the target and all sources.
    pub fn constants(&self) -> CurvatureConstants {
        suite_constants(
            std::iter::once(&self.target).chain(self.sources.iter()),
            self.radius,
        )
        .expect("instance holds at least one loss")
    }

    fn inner_values(&self, w: &[f64]) -> Vec<f64> {
        let ft = self.target.eval_value(w, None);
        self.sources
            .iter()
            .map(|s| ft - s.eval_value(w, None))
            .collect()
    }
}

/// Hyper-parameters of the descent-ascent iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxConfig {
    /// Minibatch size B.
    pub batch_size: usize,
    /// Correction mixing weight beta in (0, 1].
    pub beta: f64,
    /// Step size on alpha (descent).
    pub eta: f64,
    /// Step size on w (ascent). Zero freezes w.
    pub gamma: f64,
    /// Scale C of the `alpha^T M alpha` term.
    pub reg_c: f64,
    pub iterations: usize,
    pub smoothing: SmoothAbs,
    pub seed: u64,
    /// Record objective and gap every this many iterations.
    pub record_every: usize,
    #[serde(default)]
    pub exec: Exec,
}

impl MinimaxConfig {
    pub const DEFAULT_BETA: f64 = 0.1;
    pub const DEFAULT_REG_C: f64 = 1.0;

    /// The convergence-theorem schedule with unit constants:
    /// `eta = mu / L^2`, `gamma = mu^3 / (N G_g^2 G_f^2 L^2)` where
    /// `L = max(4 G_f^2 L_g + 2 G_g L_f, 2C/m_min)` and `mu = 2C/m_max`.
    pub fn theory_schedule(
        instance: &MinimaxInstance,
        reg_c: f64,
        smoothing: SmoothAbs,
        iterations: usize,
        seed: u64,
    ) -> Self {
        let s = ScheduleConstants::compute(instance, reg_c, smoothing);
        MinimaxConfig {
            batch_size: 1,
            beta: Self::DEFAULT_BETA,
            eta: s.eta(),
            gamma: s.gamma(instance.n_sources()),
            reg_c,
            iterations,
            smoothing,
            seed,
            record_every: 10,
            exec: Exec::Sequential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta must lie in (0, 1]"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid("eta must be a nonnegative finite number"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma must be a nonnegative finite number"));
        }
        if !(self.reg_c > 0.0) {
            return Err(Error::invalid("C must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        Ok(())
    }
}

/// Smoothness and strong-convexity constants of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub loss: CurvatureConstants,
    pub g_g: f64,
    pub l_g: f64,
    /// Smoothness of F.
    pub l: f64,
    /// Strong convexity of F in alpha.
    pub mu: f64,
}

impl ScheduleConstants {
    pub fn compute(instance: &MinimaxInstance, reg_c: f64, smoothing: SmoothAbs) -> Self {
        let loss = instance.constants();
        let counts: Vec<usize> = instance.sources.iter().map(|s| s.sample_count()).collect();
        let m_min = *counts.iter().min().unwrap() as f64;
        let m_max = *counts.iter().max().unwrap() as f64;
        let g_g = smoothing.lipschitz();
        let l_g = smoothing.smoothness();
        let l = (4.0 * loss.g_f * loss.g_f * l_g + 2.0 * g_g * loss.l_f).max(2.0 * reg_c / m_min);
        ScheduleConstants {
            loss,
            g_g,
            l_g,
            l,
            mu: 2.0 * reg_c / m_max,
        }
    }

    pub fn eta(&self) -> f64 {
        self.mu / (self.l * self.l)
    }

    pub fn gamma(&self, n_sources: usize) -> f64 {
        self.mu.powi(3)
            / (n_sources as f64 * self.g_g.powi(2) * self.loss.g_f.powi(2) * self.l.powi(2))
    }
}

/// Full iterate state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxState {
    pub alpha: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prev: Vec<f64>,
    /// Tracking values, one per source.
    pub z: Vec<f64>,
    pub t: usize,
}

impl MinimaxState {
    /// `w^0 = w^{-1} = w0`, `z_j^0 = f_T(w0) - f_j(w0)` (full batch).
    pub fn initial(
        instance: &MinimaxInstance,
        alpha0: MixtureWeights,
        w0: Vec<f64>,
    ) -> Result<Self> {
        check_dim(instance.n_sources(), alpha0.len())?;
        check_dim(instance.dim(), w0.len())?;
        check_finite(&w0, "initial w")?;
        let mut w = w0;
        project_ball_in_place(&mut w, instance.radius);
        let z = instance.inner_values(&w);
        Ok(MinimaxState {
            alpha: alpha0.into_inner(),
            w_prev: w.clone(),
            w,
            z,
            t: 0,
        })
    }

    pub fn alpha(&self) -> MixtureWeights {
        MixtureWeights::new(self.alpha.clone()).expect("iterates stay on the simplex")
    }
}

/// Stepper owning the state and one random stream per domain.
pub struct MinimaxSolver<'a> {
    instance: &'a MinimaxInstance,
    config: MinimaxConfig,
    state: MinimaxState,
    target_rng: ChaCha8Rng,
    source_rngs: Vec<ChaCha8Rng>,
}

impl<'a> MinimaxSolver<'a> {
    /// Starts from uniform alpha and `w = 0`.
    pub fn new(instance: &'a MinimaxInstance, config: MinimaxConfig) -> Result<Self> {
        let state = MinimaxState::initial(
            instance,
            MixtureWeights::uniform(instance.n_sources()),
            vec![0.0; instance.dim()],
        )?;
        Self::with_state(instance, config, state)
    }

    pub fn with_state(
        instance: &'a MinimaxInstance,
        config: MinimaxConfig,
        state: MinimaxState,
    ) -> Result<Self> {
        config.validate()?;
        check_dim(instance.n_sources(), state.alpha.len())?;
        check_dim(instance.n_sources(), state.z.len())?;
        check_dim(instance.dim(), state.w.len())?;
        check_dim(instance.dim(), state.w_prev.len())?;
        let base = RngStream::new(config.seed, 0x4d49_4e4d);
        let target_rng = base.child(0).rng();
        let source_rngs = (0..instance.n_sources())
            .map(|j| base.child(j as u64 + 1).rng())
            .collect();
        Ok(MinimaxSolver {
            instance,
            config,
            state,
            target_rng,
            source_rngs,
        })
    }

    pub fn state(&self) -> &MinimaxState {
        &self.state
    }

    pub fn config(&self) -> &MinimaxConfig {
        &self.config
    }

    pub fn into_state(self) -> MinimaxState {
        self.state
    }

    /// One iteration: resample, update tracking values, ascend in w using
    /// the new `z`, descend in alpha using the old `z`.
    pub fn step(&mut self) -> Result<()> {
        let inst = self.instance;
        let cfg = &self.config;
        let g = cfg.smoothing;
        let n = inst.n_sources();
        let st = &self.state;

        let batch_t = draw_batch(&inst.target, cfg.batch_size, &mut self.target_rng, true)?;
        let batches: Vec<Vec<usize>> = inst
            .sources
            .iter()
            .zip(self.source_rngs.iter_mut())
            .map(|(s, rng)| draw_batch(s, cfg.batch_size, rng, true))
            .collect::<Result<_>>()?;

        let ft_now = inst.target.eval_value(&st.w, Some(&batch_t));
        let ft_prev = inst.target.eval_value(&st.w_prev, Some(&batch_t));
        let gt_now = inst.target.eval_grad(&st.w, Some(&batch_t));

        struct SourceEval {
            now: f64,
            prev: f64,
            grad: Vec<f64>,
        }
        let evals: Vec<SourceEval> = cfg.exec.map_range(n, |j| {
            let s = &inst.sources[j];
            let b = &batches[j];
            SourceEval {
                now: s.eval_value(&st.w, Some(b)),
                prev: s.eval_value(&st.w_prev, Some(b)),
                grad: s.eval_grad(&st.w, Some(b)),
            }
        });

        let beta = cfg.beta;
        let z_next: Vec<f64> = evals
            .iter()
            .zip(&st.z)
            .map(|(e, &z)| {
                let diff_now = ft_now - e.now;
                let diff_prev = ft_prev - e.prev;
                (1.0 - beta) * (z + diff_now - diff_prev) + beta * diff_now
            })
            .collect();
        check_finite(&z_next, "tracking values")?;

        let mut g_w = vec![0.0; inst.dim()];
        for ((e, &zj), &aj) in evals.iter().zip(&z_next).zip(&st.alpha) {
            let coef = aj * g.deriv(zj);
            if coef == 0.0 {
                continue;
            }
            axpy(coef, &gt_now, &mut g_w);
            axpy(-coef, &e.grad, &mut g_w);
        }
        let mut w_next = st.w.clone();
        axpy(cfg.gamma, &g_w, &mut w_next);
        project_ball_in_place(&mut w_next, inst.radius);

        let m_diag = inst.m_diag();
        let alpha_step: Vec<f64> = st
            .alpha
            .iter()
            .zip(&st.z)
            .zip(&m_diag)
            .map(|((&a, &z), &minv)| a - cfg.eta * (g.value(z) + 2.0 * cfg.reg_c * minv * a))
            .collect();
        let alpha_next = project_simplex(&alpha_step)?.into_inner();

        let state = &mut self.state;
        state.w_prev = std::mem::replace(&mut state.w, w_next);
        state.alpha = alpha_next;
        state.z = z_next;
        state.t += 1;
        Ok(())
    }
}

/// `F(alpha, w)` evaluated with full-batch risks.
pub fn objective(
    instance: &MinimaxInstance,
    alpha: &MixtureWeights,
    w: &[f64],
    reg_c: f64,
    g: SmoothAbs,
) -> Result<f64> {
    check_dim(instance.n_sources(), alpha.len())?;
    check_dim(instance.dim(), w.len())?;
    let inner = instance.inner_values(w);
    let m = instance.m_diag();
    let a = alpha.as_slice();
    let disc: f64 = a.iter().zip(&inner).map(|(aj, d)| aj * g.value(*d)).sum();
    let quad: f64 = a.iter().zip(&m).map(|(aj, mj)| aj * aj * mj).sum();
    Ok(disc + reg_c * quad)
}

/// The unrelaxed bound `sum_j alpha_j |f_T(w) - f_j(w)| + C sqrt(sum_j alpha_j^2 / m_j)`,
/// for reporting only.
pub fn unrelaxed_objective(
    instance: &MinimaxInstance,
    alpha: &MixtureWeights,
    w: &[f64],
    reg_c: f64,
) -> Result<f64> {
    check_dim(instance.n_sources(), alpha.len())?;
    check_dim(instance.dim(), w.len())?;
    let inner = instance.inner_values(w);
    let m = instance.m_diag();
    let a = alpha.as_slice();
    let disc: f64 = a.iter().zip(&inner).map(|(aj, d)| aj * d.abs()).sum();
    let quad: f64 = a.iter().zip(&m).map(|(aj, mj)| aj * aj * mj).sum();
    Ok(disc + reg_c * quad.sqrt())
}

/// Exact full-batch `(grad_alpha F, grad_w F)`.
pub fn full_gradients(
    instance: &MinimaxInstance,
    alpha: &MixtureWeights,
    w: &[f64],
    reg_c: f64,
    g: SmoothAbs,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(instance.n_sources(), alpha.len())?;
    check_dim(instance.dim(), w.len())?;
    let inner = instance.inner_values(w);
    let m = instance.m_diag();
    let a = alpha.as_slice();
    let grad_alpha = inner
        .iter()
        .zip(a)
        .zip(&m)
        .map(|((d, aj), mj)| g.value(*d) + 2.0 * reg_c * mj * aj)
        .collect();
    let gt = instance.target.eval_grad(w, None);
    let mut grad_w = vec![0.0; w.len()];
    for ((s, d), aj) in instance.sources.iter().zip(&inner).zip(a) {
        let coef = aj * g.deriv(*d);
        if coef == 0.0 {
            continue;
        }
        axpy(coef, &gt, &mut grad_w);
        axpy(-coef, &s.eval_grad(w, None), &mut grad_w);
    }
    Ok((grad_alpha, grad_w))
}

/// Displacement of one exact projected descent-ascent step, scaled by the
/// step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryGap {
    pub alpha_component: Vec<f64>,
    pub w_component: Vec<f64>,
    pub squared_norm: f64,
}

pub fn stationary_gap(
    instance: &MinimaxInstance,
    alpha: &MixtureWeights,
    w: &[f64],
    eta: f64,
    gamma: f64,
    reg_c: f64,
    g: SmoothAbs,
) -> Result<StationaryGap> {
    if !(eta > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid("stationary gap needs positive step sizes"));
    }
    let (ga, gw) = full_gradients(instance, alpha, w, reg_c, g)?;
    let a = alpha.as_slice();
    let stepped: Vec<f64> = a.iter().zip(&ga).map(|(x, gx)| x - eta * gx).collect();
    let proj_a = project_simplex(&stepped)?;
    let alpha_component: Vec<f64> = a
        .iter()
        .zip(proj_a.as_slice())
        .map(|(x, p)| (x - p) / eta)
        .collect();
    let mut stepped_w = w.to_vec();
    axpy(gamma, &gw, &mut stepped_w);
    project_ball_in_place(&mut stepped_w, instance.radius);
    let w_component: Vec<f64> = w
        .iter()
        .zip(&stepped_w)
        .map(|(x, p)| (x - p) / gamma)
        .collect();
    let squared_norm = norm_sq(&alpha_component) + norm_sq(&w_component);
    Ok(StationaryGap {
        alpha_component,
        w_component,
        squared_norm,
    })
}

/// One recorded trajectory point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub objective: f64,
    pub gap_sq: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub final_state: MinimaxState,
}

impl Trajectory {
    pub fn final_alpha(&self) -> MixtureWeights {
        self.final_state.alpha()
    }

    /// Post-initialisation records (t >= 1).
    fn stepped(&self) -> Vec<&TrajectoryRecord> {
        self.records.iter().filter(|r| r.t >= 1).collect()
    }

    /// Mean gap^2 over the recorded iterates `t >= 1`.
    pub fn mean_gap_sq(&self) -> f64 {
        mean(self.stepped().iter().map(|r| r.gap_sq))
    }

    /// Mean gap^2 over quartile `q` (0..4) of the recorded iterates.
    pub fn quartile_mean_gap_sq(&self, q: usize) -> f64 {
        assert!(q < 4);
        let recs = self.stepped();
        let n = recs.len();
        if n == 0 {
            return f64::NAN;
        }
        let lo = q * n / 4;
        let hi = ((q + 1) * n / 4).max(lo + 1).min(n);
        mean(recs[lo..hi].iter().map(|r| r.gap_sq))
    }

    /// Columns `t,objective,gap_sq,alpha_0..alpha_{N-1}`.
    pub fn write_csv(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let n = self.final_state.alpha.len();
        let mut header = vec!["t".to_string(), "objective".into(), "gap_sq".into()];
        header.extend((0..n).map(|j| format!("alpha_{j}")));
        let rows = self.records.iter().map(|r| {
            let mut cells = vec![r.t.to_string(), fmt_f64(r.objective), fmt_f64(r.gap_sq)];
            cells.extend(r.alpha.iter().map(|a| fmt_f64(*a)));
            cells
        });
        write_table(path.as_ref(), comments, &header, rows)
    }
}

/// Runs `config.iterations` steps from the default start, recording the
/// full-batch objective and stationary gap at `t = 0`, every
/// `record_every` steps and at the end.
pub fn run(instance: &MinimaxInstance, config: &MinimaxConfig) -> Result<Trajectory> {
    let solver = MinimaxSolver::new(instance, config.clone())?;
    run_from(solver)
}

pub fn run_from(mut solver: MinimaxSolver<'_>) -> Result<Trajectory> {
    let cfg = solver.config.clone();
    let inst = solver.instance;
    let record = |st: &MinimaxState| -> Result<TrajectoryRecord> {
        let alpha = st.alpha();
        let objective = objective(inst, &alpha, &st.w, cfg.reg_c, cfg.smoothing)?;
        let gap_sq = if cfg.eta > 0.0 && cfg.gamma > 0.0 {
            stationary_gap(
                inst,
                &alpha,
                &st.w,
                cfg.eta,
                cfg.gamma,
                cfg.reg_c,
                cfg.smoothing,
            )?
            .squared_norm
        } else {
            f64::NAN
        };
        Ok(TrajectoryRecord {
            t: st.t,
            objective,
            gap_sq,
            alpha: st.alpha.clone(),
        })
    };

    let mut records = vec![record(solver.state())?];
    for k in 1..=cfg.iterations {
        solver.step()?;
        if k % cfg.record_every == 0 || k == cfg.iterations {
            records.push(record(solver.state())?);
        }
    }
    Ok(Trajectory {
        records,
        final_state: solver.into_state(),
    })
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Shortest round-trip float formatting.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn write_table(
    path: &Path,
    comments: &[String],
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    for c in comments {
        writeln!(out, "# {c}").map_err(io_err)?;
    }
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        MinimaxConfig {
            batch_size: 1,
            beta: Self::DEFAULT_BETA,
            eta: 1e-2,
            gamma: 1e-2,
            reg_c: Self::DEFAULT_REG_C,
            iterations: 1000,
            smoothing: SmoothAbs::default(),
            seed: 0,
            record_every: 10,
            exec: Exec::Sequential,
        }
    }
}

/// Domain radius used when an instance is built without an explicit one.
pub const DEFAULT_RADIUS: f64 = DEFAULT_DOMAIN_RADIUS;

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::domains::{make_quadratic_suite, QuadraticLoss};

    fn quad(a: f64, center: Vec<f64>, m: usize) -> LossModel {
        let d = center.len();
        LossModel::Quadratic(QuadraticLoss::new(DMatrix::identity(d, d) * a, center, m).unwrap())
    }

    #[test]
    fn objective_at_matching_vertex() {
        let sources = vec![quad(1.0, vec![0.0, 0.0], 10), quad(2.0, vec![1.0, 0.0], 20)];
        let target = sources[1].clone();
        let inst = MinimaxInstance::new(target, sources, 10.0).unwrap();
        let g = SmoothAbs::new(1e-4).unwrap();
        let f = objective(&inst, &MixtureWeights::vertex(2, 1), &[0.3, -0.7], 1.0, g).unwrap();
        assert!((f - (0.01 + 1.0 / 20.0)).abs() < 1e-15);
    }

    #[test]
    fn objective_with_identical_sources_and_no_regulariser_term() {
        let src = quad(1.0, vec![0.5], 10);
        let inst =
            MinimaxInstance::new(src.clone(), vec![src.clone(), src.clone(), src], 10.0).unwrap();
        let g = SmoothAbs::new(1e-4).unwrap();
        let alpha = MixtureWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        // C = 0 is not a valid config but the evaluator accepts it
        let f = objective(&inst, &alpha, &[1.0], 0.0, g).unwrap();
        assert!((f - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_iterations_returns_initialisation() {
        let suite = make_quadratic_suite(3, 2, 0.5, 1.0, 1).unwrap();
        let inst = MinimaxInstance::new(suite[0].clone(), suite, 10.0).unwrap();
        let cfg = MinimaxConfig {
            iterations: 0,
            ..Default::default()
        };
        let tr = run(&inst, &cfg).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.final_state.t, 0);
        assert_eq!(tr.final_alpha(), MixtureWeights::uniform(3));
        assert_eq!(tr.final_state.w, vec![0.0, 0.0]);
    }

    #[test]
    fn beta_one_resamples_without_correction() {
        let suite = make_quadratic_suite(2, 3, 0.5, 1.5, 2).unwrap();
        let target = make_quadratic_suite(1, 3, 0.5, 1.5, 3).unwrap().remove(0);
        let inst = MinimaxInstance::new(target, suite, 10.0).unwrap();
        let cfg = MinimaxConfig {
            beta: 1.0,
            ..Default::default()
        };
        let mut state =
            MinimaxState::initial(&inst, MixtureWeights::uniform(2), vec![0.1, 0.2, 0.3]).unwrap();
        state.z = vec![42.0, -7.0];
        let mut solver = MinimaxSolver::with_state(&inst, cfg, state).unwrap();
        solver.step().unwrap();
        let w = solver.state().w_prev.clone();
        let expected = inst.inner_values(&w);
        assert_eq!(solver.state().z, expected);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            MinimaxConfig {
                batch_size: 0,
                ..Default::default()
            },
            MinimaxConfig {
                beta: 0.0,
                ..Default::default()
            },
            MinimaxConfig {
                beta: 1.5,
                ..Default::default()
            },
            MinimaxConfig {
                reg_c: 0.0,
                ..Default::default()
            },
            MinimaxConfig {
                eta: -1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn quartile_means_partition_records() {
        let recs: Vec<TrajectoryRecord> = (0..=8)
            .map(|t| TrajectoryRecord {
                t,
                objective: 0.0,
                gap_sq: t as f64,
                alpha: vec![1.0],
            })
            .collect();
        let tr = Trajectory {
            records: recs,
            final_state: MinimaxState {
                alpha: vec![1.0],
                w: vec![],
                w_prev: vec![],
                z: vec![0.0],
                t: 8,
            },
        };
        assert_eq!(tr.quartile_mean_gap_sq(0), 1.5);
        assert_eq!(tr.quartile_mean_gap_sq(3), 7.5);
        assert_eq!(tr.mean_gap_sq(), 4.5);
    }
}
