use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// Absolute tolerance on `sum(alpha) == 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex weighting N source domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    /// Validates nonnegativity and unit mass.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mixture weights need at least one entry"));
        }
        check_finite(&values, "mixture weights")?;
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(MixtureWeights(values))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1);
        MixtureWeights(vec![1.0 / n as f64; n])
    }

    /// Standard basis vector e_j.
    pub fn vertex(n: usize, j: usize) -> Self {
        assert!(j < n);
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        MixtureWeights(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for MixtureWeights {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-based thresholding: with `u` sorted descending, the support size is
/// the largest `k` with `u_k - (sum_{i<=k} u_i - 1)/k > 0` and the output is
/// `max(v - theta, 0)`.
pub fn project_simplex(v: &[f64]) -> Result<MixtureWeights> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    check_finite(v, "simplex projection input")?;

    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if uk - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }

    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // One renormalisation pass absorbs the rounding left by the threshold.
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for x in out.iter_mut() {
            *x /= total;
        }
    }
    Ok(MixtureWeights(out))
}
