use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::primitives::vector::{axpy, dot, norm_sq};

/// Default L2 regulariser for the classification losses.
pub const DEFAULT_REG: f64 = 0.1;

/// `f(w) = 1/2 (w - c)^T A (w - c)` with `A` symmetric positive definite.
///
/// Carries a nominal sample count so it can stand in for an empirical risk
/// in objectives that weight sources by `1/m_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    a: DMatrix<f64>,
    center: Vec<f64>,
    sample_count: usize,
}

impl QuadraticLoss {
    pub fn new(a: DMatrix<f64>, center: Vec<f64>, sample_count: usize) -> Result<Self> {
        let d = center.len();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: a.nrows(),
            });
        }
        if sample_count == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-10 * a.amax().max(1.0) {
            return Err(Error::invalid("quadratic matrix is not symmetric"));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::invalid("quadratic matrix is not positive definite"));
        }
        Ok(QuadraticLoss {
            a,
            center,
            sample_count,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.center.len();
        (0..d)
            .map(|i| (0..d).map(|k| self.a[(i, k)] * v[k]).sum())
            .collect()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let diff: Vec<f64> = w.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        0.5 * dot(&diff, &self.apply(&diff))
    }

    /// `out += weight * A (w - c)` without allocating.
    fn add_gradient(&self, w: &[f64], weight: f64, out: &mut [f64]) {
        let d = self.center.len();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let mut s = 0.0;
            for k in 0..d {
                s += self.a[(i, k)] * (w[k] - self.center[k]);
            }
            *o += weight * s;
        }
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = w.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        self.apply(&diff)
    }

    pub(crate) fn center_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.center)
    }
}

/// Binary logistic loss with intercept and L2 penalty. Labels > 0.5 are the
/// positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLoss {
    data: Arc<Dataset>,
    reg: f64,
}

impl LogisticLoss {
    pub fn new(data: Arc<Dataset>, reg: f64) -> Result<Self> {
        if !(reg > 0.0) {
            return Err(Error::invalid("logistic loss needs a positive regulariser"));
        }
        Ok(LogisticLoss { data, reg })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    fn margin(&self, w: &[f64], i: usize) -> (f64, f64) {
        let p = self.data.n_features();
        let x = self.data.row(i);
        let score = dot(&w[..p], x) + w[p];
        let y = if self.data.label(i) > 0.5 { 1.0 } else { -1.0 };
        (y, score)
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        let (y, s) = self.margin(w, i);
        softplus(-y * s)
    }

    fn add_sample_grad(&self, w: &[f64], i: usize, weight: f64, out: &mut [f64]) {
        let p = self.data.n_features();
        let (y, s) = self.margin(w, i);
        let coef = -y * sigmoid(-y * s) * weight;
        for (o, x) in out[..p].iter_mut().zip(self.data.row(i)) {
            *o += coef * x;
        }
        out[p] += coef;
    }
}

/// Multinomial logistic (softmax cross-entropy) loss over `classes` classes,
/// one weight block of width `p + 1` per class, with L2 penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxLoss {
    data: Arc<Dataset>,
    classes: usize,
    reg: f64,
}

impl SoftmaxLoss {
    pub fn new(data: Arc<Dataset>, classes: usize, reg: f64) -> Result<Self> {
        if !(reg > 0.0) {
            return Err(Error::invalid("softmax loss needs a positive regulariser"));
        }
        if classes < 2 {
            return Err(Error::invalid("softmax loss needs at least two classes"));
        }
        if data
            .labels()
            .iter()
            .any(|&y| y < 0.0 || y as usize >= classes)
        {
            return Err(Error::invalid("label outside the declared class range"));
        }
        Ok(SoftmaxLoss { data, classes, reg })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    fn scores_for(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let p = x.len();
        (0..self.classes)
            .map(|k| {
                let block = &w[k * (p + 1)..(k + 1) * (p + 1)];
                dot(&block[..p], x) + block[p]
            })
            .collect()
    }

    /// Arg-max class for a raw feature row.
    pub fn predict(&self, w: &[f64], x: &[f64]) -> usize {
        argmax(&self.scores_for(w, x))
    }

    /// Fraction of rows of `data` classified correctly by `w`.
    pub fn accuracy(&self, w: &[f64], data: &Dataset) -> f64 {
        let hits = (0..data.len())
            .filter(|&i| self.predict(w, data.row(i)) == data.label(i) as usize)
            .count();
        hits as f64 / data.len() as f64
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        let s = self.scores_for(w, self.data.row(i));
        let y = self.data.label(i) as usize;
        log_sum_exp(&s) - s[y]
    }

    fn add_sample_grad(&self, w: &[f64], i: usize, weight: f64, out: &mut [f64]) {
        let x = self.data.row(i);
        let p = x.len();
        let s = self.scores_for(w, x);
        let lse = log_sum_exp(&s);
        let y = self.data.label(i) as usize;
        for k in 0..self.classes {
            let prob = (s[k] - lse).exp();
            let coef = (prob - if k == y { 1.0 } else { 0.0 }) * weight;
            let block = &mut out[k * (p + 1)..(k + 1) * (p + 1)];
            for (o, xv) in block[..p].iter_mut().zip(x) {
                *o += coef * xv;
            }
            block[p] += coef;
        }
    }
}

/// A per-domain empirical risk `f_j` with value and gradient oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    Quadratic(QuadraticLoss),
    Logistic(LogisticLoss),
    Softmax(SoftmaxLoss),
}

impl LossModel {
    pub fn dim(&self) -> usize {
        match self {
            LossModel::Quadratic(q) => q.center.len(),
            LossModel::Logistic(l) => l.data.n_features() + 1,
            LossModel::Softmax(s) => s.classes * (s.data.n_features() + 1),
        }
    }

    /// m_j: dataset size, or the nominal count of a quadratic.
    pub fn sample_count(&self) -> usize {
        match self {
            LossModel::Quadratic(q) => q.sample_count,
            LossModel::Logistic(l) => l.data.len(),
            LossModel::Softmax(s) => s.data.len(),
        }
    }

    /// True when minibatch oracles equal the full-batch ones.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, LossModel::Quadratic(_))
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticLoss> {
        match self {
            LossModel::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    pub fn risk(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        Ok(self.eval_value(w, None))
    }

    pub fn grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        Ok(self.eval_grad(w, None))
    }

    /// Mean loss over `batch` (indices may repeat) plus the regulariser.
    pub fn risk_minibatch(&self, w: &[f64], batch: &[usize]) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        self.check_batch(batch)?;
        Ok(self.eval_value(w, Some(batch)))
    }

    pub fn grad_minibatch(&self, w: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        self.check_batch(batch)?;
        Ok(self.eval_grad(w, Some(batch)))
    }

    fn check_batch(&self, batch: &[usize]) -> Result<()> {
        if self.is_deterministic() {
            return Ok(());
        }
        if batch.is_empty() {
            return Err(Error::invalid("minibatch must hold at least one index"));
        }
        let m = self.sample_count();
        if batch.iter().any(|&i| i >= m) {
            return Err(Error::invalid("minibatch index out of range"));
        }
        Ok(())
    }

    pub(crate) fn eval_value(&self, w: &[f64], batch: Option<&[usize]>) -> f64 {
        match self {
            LossModel::Quadratic(q) => q.value(w),
            LossModel::Logistic(l) => {
                mean_over(l.data.len(), batch, |i| l.sample_loss(w, i)) + 0.5 * l.reg * norm_sq(w)
            }
            LossModel::Softmax(s) => {
                mean_over(s.data.len(), batch, |i| s.sample_loss(w, i)) + 0.5 * s.reg * norm_sq(w)
            }
        }
    }

    /// `out += weight * grad f(w)` over all samples.
    pub(crate) fn add_weighted_grad(&self, w: &[f64], weight: f64, out: &mut [f64]) {
        match self {
            LossModel::Quadratic(q) => q.add_gradient(w, weight, out),
            _ => axpy(weight, &self.eval_grad(w, None), out),
        }
    }

    pub(crate) fn eval_grad(&self, w: &[f64], batch: Option<&[usize]>) -> Vec<f64> {
        match self {
            LossModel::Quadratic(q) => q.gradient(w),
            LossModel::Logistic(l) => {
                accumulate_grad(w, l.reg, l.data.len(), batch, |i, wt, out| {
                    l.add_sample_grad(w, i, wt, out)
                })
            }
            LossModel::Softmax(s) => {
                accumulate_grad(w, s.reg, s.data.len(), batch, |i, wt, out| {
                    s.add_sample_grad(w, i, wt, out)
                })
            }
        }
    }
}

/// Draws a minibatch of `size` indices into a model's samples. With
/// replacement the draws are i.i.d. uniform; without, a uniformly random
/// subset returned in ascending order. Quadratic models get an empty batch.
pub fn draw_batch<R: Rng + ?Sized>(
    model: &LossModel,
    size: usize,
    rng: &mut R,
    with_replacement: bool,
) -> Result<Vec<usize>> {
    if model.is_deterministic() {
        return Ok(Vec::new());
    }
    let m = model.sample_count();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if with_replacement {
        Ok((0..size).map(|_| rng.random_range(0..m)).collect())
    } else {
        if size > m {
            return Err(Error::invalid(
                "batch larger than dataset without replacement",
            ));
        }
        let mut idx = rand::seq::index::sample(rng, m, size).into_vec();
        idx.sort_unstable();
        Ok(idx)
    }
}

fn mean_over(m: usize, batch: Option<&[usize]>, f: impl Fn(usize) -> f64) -> f64 {
    match batch {
        None => (0..m).map(&f).sum::<f64>() / m as f64,
        Some(b) => b.iter().map(|&i| f(i)).sum::<f64>() / b.len() as f64,
    }
}

fn accumulate_grad(
    w: &[f64],
    reg: f64,
    m: usize,
    batch: Option<&[usize]>,
    add: impl Fn(usize, f64, &mut [f64]),
) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    match batch {
        None => {
            let wt = 1.0 / m as f64;
            for i in 0..m {
                add(i, wt, &mut out);
            }
        }
        Some(b) => {
            let wt = 1.0 / b.len() as f64;
            for &i in b {
                add(i, wt, &mut out);
            }
        }
    }
    for (o, wi) in out.iter_mut().zip(w) {
        *o += reg * wi;
    }
    out
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + s.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::RngStream;

    fn identity_quadratic(center: Vec<f64>) -> LossModel {
        let d = center.len();
        LossModel::Quadratic(QuadraticLoss::new(DMatrix::identity(d, d), center, 10).unwrap())
    }

    fn toy_logistic() -> LossModel {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![(i as f64) * 0.3 - 1.2, ((i * 7) % 5) as f64 * 0.4 - 0.8])
            .collect();
        let labels = (0..10).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let ds = Dataset::from_rows(&rows, labels).unwrap();
        LossModel::Logistic(LogisticLoss::new(Arc::new(ds), 0.1).unwrap())
    }

    #[test]
    fn quadratic_minimum_and_value() {
        let q = identity_quadratic(vec![0.3, -0.2]);
        assert_eq!(q.risk(&[0.3, -0.2]).unwrap(), 0.0);
        let q0 = identity_quadratic(vec![0.0, 0.0]);
        assert_eq!(q0.risk(&[1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let q = identity_quadratic(vec![0.0, 0.0]);
        assert!(matches!(
            q.risk(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn logistic_matches_scalar_loop() {
        let model = toy_logistic();
        let LossModel::Logistic(l) = &model else {
            unreachable!()
        };
        let w = [0.4, -0.7, 0.2];
        // independent per-sample evaluation
        let mut total = 0.0;
        for i in 0..10 {
            let x = l.data().row(i);
            let y = if l.data().label(i) > 0.5 { 1.0 } else { -1.0 };
            let s = w[0] * x[0] + w[1] * x[1] + w[2];
            total += (1.0 + (-y * s).exp()).ln();
        }
        let expected = total / 10.0 + 0.05 * (0.16 + 0.49 + 0.04);
        assert!((model.risk(&w).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn quadratic_minibatch_ignores_batch() {
        let q = identity_quadratic(vec![1.0, 2.0]);
        let w = [0.5, 0.5];
        assert_eq!(q.risk(&w).unwrap(), q.risk_minibatch(&w, &[]).unwrap());
        assert_eq!(q.grad(&w).unwrap(), q.grad_minibatch(&w, &[3, 3]).unwrap());
    }

    #[test]
    fn full_batch_without_replacement_is_exact() {
        let model = toy_logistic();
        let mut rng = RngStream::new(3, 0).rng();
        let batch = draw_batch(&model, 10, &mut rng, false).unwrap();
        let w = [0.1, 0.2, -0.3];
        assert_eq!(
            model.risk(&w).unwrap(),
            model.risk_minibatch(&w, &batch).unwrap()
        );
    }

    #[test]
    fn empty_batch_rejected_for_data_losses() {
        let model = toy_logistic();
        assert!(model.risk_minibatch(&[0.0; 3], &[]).is_err());
        let mut rng = RngStream::new(3, 0).rng();
        assert!(draw_batch(&model, 0, &mut rng, true).is_err());
        assert!(draw_batch(&model, 11, &mut rng, false).is_err());
    }

    #[test]
    fn logistic_rejects_zero_reg() {
        let ds = Dataset::from_rows(&[vec![1.0]], vec![1.0]).unwrap();
        assert!(LogisticLoss::new(Arc::new(ds), 0.0).is_err());
    }

    #[test]
    fn quadratic_rejects_indefinite_or_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticLoss::new(bad, vec![0.0, 0.0], 1).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticLoss::new(asym, vec![0.0, 0.0], 1).is_err());
    }

    #[test]
    fn softmax_prediction_and_accuracy() {
        let ds = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![1.0, 0.0]).unwrap();
        let s = SoftmaxLoss::new(Arc::new(ds.clone()), 2, 0.1).unwrap();
        // class 1 score = x, class 0 score = -x
        let w = [-1.0, 0.0, 1.0, 0.0];
        assert_eq!(s.predict(&w, &[2.0]), 1);
        assert_eq!(s.accuracy(&w, &ds), 1.0);
    }
}
