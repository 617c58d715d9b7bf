use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled sample set stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_features == 0 {
            return Err(Error::invalid("dataset needs at least one feature column"));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::invalid(format!(
                "{} feature values do not fill {} rows of width {}",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.len() != labels.len() {
            return Err(Error::invalid("row count and label count differ"));
        }
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::invalid("ragged feature rows"));
        }
        Dataset::new(rows.concat(), n_features, labels)
    }

    /// m_j, the number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    /// Sorted distinct class labels.
    pub fn classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.labels.iter().map(|&y| y as usize).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(features, self.n_features, labels)
    }

    /// First `train_fraction` of rows for training, rest held out.
    pub fn split(&self, train_fraction: f64) -> Result<(Dataset, Dataset)> {
        let n_train = ((self.len() as f64) * train_fraction).round() as usize;
        if n_train == 0 || n_train >= self.len() {
            return Err(Error::invalid("split leaves an empty side"));
        }
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.len()).collect();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }

    /// Largest row norm after appending the intercept feature.
    pub(crate) fn max_augmented_norm(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().map(|x| x * x).sum::<f64>() + 1.0).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Per-feature affine map to zero mean / unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits on the pooled rows of all `datasets`, so every domain shares one map.
    pub fn fit<'a>(datasets: impl IntoIterator<Item = &'a Dataset>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sum_sq: Vec<f64> = Vec::new();
        for ds in datasets {
            if sum.is_empty() {
                sum = vec![0.0; ds.n_features()];
                sum_sq = vec![0.0; ds.n_features()];
            }
            if ds.n_features() != sum.len() {
                return Err(Error::DimensionMismatch {
                    expected: sum.len(),
                    got: ds.n_features(),
                });
            }
            for row in ds.rows() {
                for (k, &x) in row.iter().enumerate() {
                    sum[k] += x;
                    sum_sq[k] += x * x;
                }
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let scale = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / nf - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let p = ds.n_features();
        let features = ds
            .features
            .iter()
            .enumerate()
            .map(|(i, x)| (x - self.mean[i % p]) / self.scale[i % p])
            .collect();
        Dataset {
            features,
            n_features: p,
            labels: ds.labels.clone(),
        }
    }
}
