//! Learning `alpha -> w*(alpha)` with a vector-valued two-layer ReLU network
//!
//! ```text
//! h(alpha)_j = a_j^T relu(U^j alpha),   j = 1..d
//! ```
//!
//! Only the hidden matrices `U^j` (m x N) are trained; the output weights
//! `a_j` are fixed signs `+-1/sqrt(m)`. At initialisation the second half of
//! every `U^j` copies the first half and the paired output weights have
//! opposite signs, so the network is identically zero.
//!
//! Training alternates one full-batch GD step on
//! `(1/n) sum_i ||h(alpha_i) - w_i||^2` with K projected-GD refinement steps
//! of every label `w_i` towards `w*(alpha_i)`.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coerm::{gd_solve, GdConfig};
use crate::domains::{closed_form_wstar, LossModel};
use crate::error::{check_dim, Error, Result};
use crate::minimax::{fmt_f64, write_table};
use crate::parallel::Exec;
use crate::primitives::vector::{axpy, dist, dist_sq, dot};
use crate::primitives::{sample_dirichlet, MixtureWeights, ModelParams, RngStream};

/// Two-layer ReLU network `R^N -> R^d` of even width `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    d: usize,
    m: usize,
    n_in: usize,
    /// Output signs, `d * m`, row `j` is `a_j`.
    a: Vec<f64>,
    /// Hidden weights, `d * m * n_in`, laid out `[j][r][k]`.
    u: Vec<f64>,
}

impl TwoLayerNet {
    /// Symmetric initialisation: rows `r` and `m/2 + r` of every `U^j` share
    /// one standard Gaussian draw; `a_j` is `+1/sqrt(m)` on the first half
    /// and `-1/sqrt(m)` on the second.
    pub fn init(m: usize, n_in: usize, d: usize, seed: u64) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "network width must be even, got {m}"
            )));
        }
        if n_in == 0 || d == 0 {
            return Err(Error::invalid(
                "network needs N >= 1 inputs and d >= 1 outputs",
            ));
        }
        let half = m / 2;
        let mut rng = RngStream::new(seed, 0x4e45_5457).rng();
        let mut u = vec![0.0; d * m * n_in];
        for j in 0..d {
            for r in 0..half {
                for k in 0..n_in {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    u[(j * m + r) * n_in + k] = x;
                    u[(j * m + r + half) * n_in + k] = x;
                }
            }
        }
        let s = 1.0 / (m as f64).sqrt();
        let a = (0..d * m)
            .map(|i| if i % m < half { s } else { -s })
            .collect();
        Ok(TwoLayerNet { d, m, n_in, a, u })
    }

    /// Builds a network from explicit weights, checking the sign structure.
    pub fn from_parts(d: usize, m: usize, n_in: usize, a: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "network width must be even, got {m}"
            )));
        }
        check_dim(d * m, a.len())?;
        check_dim(d * m * n_in, u.len())?;
        let s = 1.0 / (m as f64).sqrt();
        for j in 0..d {
            let row = &a[j * m..(j + 1) * m];
            if row.iter().any(|&x| x != s && x != -s) {
                return Err(Error::invalid("output weights must be exactly +-1/sqrt(m)"));
            }
            if row.iter().filter(|&&x| x > 0.0).count() != m / 2 {
                return Err(Error::invalid("output weights must be half positive"));
            }
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("hidden weights must be finite"));
        }
        Ok(TwoLayerNet { d, m, n_in, a, u })
    }

    pub fn output_dim(&self) -> usize {
        self.d
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn input_dim(&self) -> usize {
        self.n_in
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.a
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.u
    }

    pub fn hidden_weights_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    fn hidden_row(&self, j: usize, r: usize) -> &[f64] {
        let start = (j * self.m + r) * self.n_in;
        &self.u[start..start + self.n_in]
    }

    /// `h(alpha)`.
    ///
    /// Each coordinate sums the positive-sign and negative-sign units
    /// separately, each in ascending order of activation. The result is
    /// invariant under any permutation of hidden units, and a network whose
    /// positive and negative halves carry the same activations outputs
    /// exactly zero.
    pub fn forward(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_in, alpha.len())?;
        Ok(self.forward_unchecked(alpha))
    }

    pub(crate) fn forward_unchecked(&self, alpha: &[f64]) -> Vec<f64> {
        self.forward_impl(alpha, true)
    }

    /// Same split sum in unit order; used inside training where
    /// permutation invariance is not needed.
    fn forward_unsorted(&self, alpha: &[f64]) -> Vec<f64> {
        self.forward_impl(alpha, false)
    }

    fn forward_impl(&self, alpha: &[f64], sorted: bool) -> Vec<f64> {
        let half = self.m / 2;
        let mut pos = Vec::with_capacity(half);
        let mut neg = Vec::with_capacity(half);
        let scale = 1.0 / (self.m as f64).sqrt();
        (0..self.d)
            .map(|j| {
                pos.clear();
                neg.clear();
                for r in 0..self.m {
                    let act = dot(self.hidden_row(j, r), alpha).max(0.0);
                    if self.a[j * self.m + r] > 0.0 {
                        pos.push(act);
                    } else {
                        neg.push(act);
                    }
                }
                if sorted {
                    pos.sort_unstable_by(f64::total_cmp);
                    neg.sort_unstable_by(f64::total_cmp);
                }
                let sp: f64 = pos.iter().sum();
                let sn: f64 = neg.iter().sum();
                (sp - sn) * scale
            })
            .collect()
    }

    /// Gradient of `1/2 ||h(alpha) - y||^2` with respect to every `U^j`,
    /// given `residual = h(alpha) - y`. Row `r` of block `j` is
    /// `a_j(r) * 1{u_r^j . alpha > 0} * residual_j * alpha`.
    pub fn hidden_grad(&self, alpha: &[f64], residual: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_in, alpha.len())?;
        check_dim(self.d, residual.len())?;
        let mut out = vec![0.0; self.u.len()];
        self.add_hidden_grad(alpha, residual, 1.0, &mut out);
        Ok(out)
    }

    fn add_hidden_grad(&self, alpha: &[f64], residual: &[f64], weight: f64, out: &mut [f64]) {
        for j in 0..self.d {
            if residual[j] == 0.0 {
                continue;
            }
            for r in 0..self.m {
                if dot(self.hidden_row(j, r), alpha) > 0.0 {
                    let coef = weight * self.a[j * self.m + r] * residual[j];
                    let start = (j * self.m + r) * self.n_in;
                    for (o, x) in out[start..start + self.n_in].iter_mut().zip(alpha) {
                        *o += coef * x;
                    }
                }
            }
        }
    }

    /// Reorders the hidden units of output `j` (rows of `U^j` together with
    /// their output signs): new unit `r` is old unit `perm[r]`.
    pub fn permute_hidden(&self, j: usize, perm: &[usize]) -> Result<Self> {
        check_dim(self.m, perm.len())?;
        let mut seen = vec![false; self.m];
        for &p in perm {
            if p >= self.m || seen[p] {
                return Err(Error::invalid("not a permutation"));
            }
            seen[p] = true;
        }
        let mut out = self.clone();
        for (r, &p) in perm.iter().enumerate() {
            out.a[j * self.m + r] = self.a[j * self.m + p];
            let dst = (j * self.m + r) * self.n_in;
            out.u[dst..dst + self.n_in].copy_from_slice(self.hidden_row(j, p));
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            d: self.d,
            m: self.m,
            n: self.n_in,
            a: self.a.chunks(self.m).map(|c| c.to_vec()).collect(),
            u: (0..self.d)
                .map(|j| {
                    (0..self.m)
                        .map(|r| self.hidden_row(j, r).to_vec())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.a.len() != ck.d || ck.u.len() != ck.d {
            return Err(Error::invalid("checkpoint arrays disagree with d"));
        }
        let mut a = Vec::with_capacity(ck.d * ck.m);
        let mut u = Vec::with_capacity(ck.d * ck.m * ck.n);
        for j in 0..ck.d {
            check_dim(ck.m, ck.a[j].len())?;
            check_dim(ck.m, ck.u[j].len())?;
            a.extend_from_slice(&ck.a[j]);
            for row in &ck.u[j] {
                check_dim(ck.n, row.len())?;
                u.extend_from_slice(row);
            }
        }
        TwoLayerNet::from_parts(ck.d, ck.m, ck.n, a, u)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&self.to_checkpoint())
            .map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("bad checkpoint: {e}")))?;
        TwoLayerNet::from_checkpoint(&ck)
    }
}

/// JSON checkpoint: `{d, m, N, a: [[+-1/sqrt(m)]], U: [[[real]]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden width m (even).
    pub width: usize,
    /// Outer learning rate, at most 1/2.
    pub eta: f64,
    /// Inner label-refinement solver (step gamma, K steps).
    pub inner: GdConfig,
    /// Outer iterations T.
    pub iterations: usize,
    pub seed: u64,
    /// Trace every this many outer iterations (0 disables the trace).
    pub record_every: usize,
    /// Size of the fixed held-out set used for the traced excess risk
    /// (0 skips it).
    pub test_size: usize,
    #[serde(default)]
    pub exec: Exec,
}

impl TrainConfig {
    pub const DEFAULT_WIDTH: usize = 512;

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || !self.width.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "network width must be even, got {}",
                self.width
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::invalid("outer learning rate must lie in (0, 1/2]"));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub empirical_risk: f64,
    pub label_gap_mean: f64,
    pub test_excess_risk: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub net: TwoLayerNet,
    pub labels: Vec<ModelParams>,
    pub trace: Vec<TraceRow>,
    /// Gradient evaluations spent refining labels (one per source per step).
    pub grad_evals: u64,
}

/// Writes `t,empirical_risk,label_gap_mean,test_excess_risk`.
pub fn write_trace_csv(
    trace: &[TraceRow],
    path: impl AsRef<Path>,
    comments: &[String],
) -> Result<()> {
    let header: Vec<String> = ["t", "empirical_risk", "label_gap_mean", "test_excess_risk"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = trace.iter().map(|r| {
        vec![
            r.t.to_string(),
            fmt_f64(r.empirical_risk),
            fmt_f64(r.label_gap_mean),
            fmt_f64(r.test_excess_risk),
        ]
    });
    write_table(path.as_ref(), comments, &header, rows)
}

/// `(1/n) sum_i ||h(alpha_i) - y_i||^2`.
pub fn empirical_risk(
    net: &TwoLayerNet,
    alphas: &[MixtureWeights],
    labels: &[&[f64]],
    exec: Exec,
) -> f64 {
    let errs = exec.map_range(alphas.len(), |i| {
        dist_sq(&net.forward_unchecked(alphas[i].as_slice()), labels[i])
    });
    errs.iter().sum::<f64>() / alphas.len() as f64
}

/// Bilevel training on mixture weights `alphas`, labels starting at the
/// origin and refined in place across outer iterations.
pub fn train(
    alphas: &[MixtureWeights],
    suite: &[LossModel],
    radius: f64,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if suite.is_empty() {
        return Err(Error::invalid("empty suite"));
    }
    let n_src = suite.len();
    let d = suite[0].dim();
    for a in alphas {
        check_dim(n_src, a.len())?;
    }
    let exec = cfg.exec;
    let mut net = TwoLayerNet::init(cfg.width, n_src, d, cfg.seed)?;
    let mut labels: Vec<ModelParams> = vec![ModelParams::zeros(d, radius); alphas.len()];
    let mut grad_evals = 0u64;

    let quadratic = suite.iter().all(|m| m.as_quadratic().is_some());
    let truth: Option<Vec<Vec<f64>>> = if quadratic {
        Some(
            alphas
                .iter()
                .map(|a| closed_form_wstar(suite, a, radius).map(|w| w.params.into_inner()))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let test_set = if quadratic && cfg.test_size > 0 {
        Some(TestSet::sample(
            suite,
            radius,
            cfg.test_size,
            cfg.seed ^ 0x7e57,
        )?)
    } else {
        None
    };

    let mut trace = Vec::new();
    let mut record = |t: usize, net: &TwoLayerNet, labels: &[ModelParams]| {
        if cfg.record_every == 0 || alphas.is_empty() {
            return;
        }
        let label_refs: Vec<&[f64]> = labels.iter().map(|w| w.as_slice()).collect();
        let empirical = empirical_risk(net, alphas, &label_refs, exec);
        let gap = match &truth {
            Some(ws) => {
                labels
                    .iter()
                    .zip(ws)
                    .map(|(w, s)| dist(w.as_slice(), s))
                    .sum::<f64>()
                    / labels.len() as f64
            }
            None => f64::NAN,
        };
        let test = test_set.as_ref().map_or(f64::NAN, |ts| {
            ts.excess_risk(|a| net.forward_unchecked(a), exec)
        });
        trace.push(TraceRow {
            t,
            empirical_risk: empirical,
            label_gap_mean: gap,
            test_excess_risk: test,
        });
    };

    if !alphas.is_empty() {
        record(0, &net, &labels);
    }
    let n = alphas.len();
    for t in 1..=cfg.iterations {
        if n == 0 {
            break;
        }
        // Outer step: mean gradient of the squared loss, factor 2/n. Each
        // hidden row accumulates over samples in index order.
        let residuals: Vec<Vec<f64>> = exec.map_range(n, |i| {
            let h = net.forward_unsorted(alphas[i].as_slice());
            h.iter()
                .zip(labels[i].as_slice())
                .map(|(x, y)| x - y)
                .collect()
        });
        let coef = cfg.eta * 2.0 / n as f64;
        let (m, n_in) = (net.m, net.n_in);
        let rows: Vec<Vec<f64>> = exec.map_range(d * m, |jr| {
            let j = jr / m;
            let row = &net.u[jr * n_in..(jr + 1) * n_in];
            let mut g = vec![0.0; n_in];
            for (alpha, res) in alphas.iter().zip(&residuals) {
                let a = alpha.as_slice();
                if res[j] != 0.0 && dot(row, a) > 0.0 {
                    axpy(res[j], a, &mut g);
                }
            }
            let sign = net.a[jr];
            row.iter()
                .zip(&g)
                .map(|(u, gk)| u - coef * sign * gk)
                .collect()
        });
        for (jr, row) in rows.into_iter().enumerate() {
            net.u[jr * n_in..(jr + 1) * n_in].copy_from_slice(&row);
        }

        // Inner step: K projected-GD steps per label, warm-started.
        let refined = exec.map_range(n, |i| gd_solve(&labels[i], &alphas[i], suite, &cfg.inner));
        for (slot, r) in labels.iter_mut().zip(refined) {
            *slot = r?;
        }
        grad_evals += (n * cfg.inner.steps * n_src) as u64;

        if cfg.record_every > 0 && (t % cfg.record_every == 0 || t == cfg.iterations) {
            record(t, &net, &labels);
        }
    }

    Ok(TrainOutput {
        net,
        labels,
        trace,
        grad_evals,
    })
}

/// Held-out mixture weights with their exact minimisers.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub alphas: Vec<MixtureWeights>,
    pub targets: Vec<Vec<f64>>,
}

impl TestSet {
    /// `size` Dirichlet(1) draws on a quadratic suite.
    pub fn sample(suite: &[LossModel], radius: f64, size: usize, seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed, 0x5445_5354).rng();
        let alphas: Vec<MixtureWeights> = (0..size)
            .map(|_| sample_dirichlet(suite.len(), &mut rng))
            .collect();
        let targets = alphas
            .iter()
            .map(|a| closed_form_wstar(suite, a, radius).map(|w| w.params.into_inner()))
            .collect::<Result<_>>()?;
        Ok(TestSet { alphas, targets })
    }

    /// Mean `||predict(alpha) - w*(alpha)||^2` over the set.
    pub fn excess_risk<F>(&self, predict: F, exec: Exec) -> f64
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
    {
        let errs = exec.map_range(self.alphas.len(), |i| {
            dist_sq(&predict(self.alphas[i].as_slice()), &self.targets[i])
        });
        errs.iter().sum::<f64>() / self.alphas.len().max(1) as f64
    }
}

/// Monte-Carlo estimate of `E ||h(alpha) - w*(alpha)||^2` for
/// `alpha ~ Dirichlet(1)`, with the closed-form minimiser as ground truth.
pub fn excess_risk(
    net: &TwoLayerNet,
    suite: &[LossModel],
    radius: f64,
    n_test: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(suite.len(), net.input_dim())?;
    if n_test == 0 {
        return Err(Error::invalid("n_test must be positive"));
    }
    let ts = TestSet::sample(suite, radius, n_test, seed)?;
    Ok(ts.excess_risk(|a| net.forward_unchecked(a), Exec::default()))
}
