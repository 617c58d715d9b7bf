use serde::{Deserialize, Serialize};

use super::vector::norm;
use crate::error::{check_finite, Error, Result};

pub const DEFAULT_DOMAIN_RADIUS: f64 = 10.0;

/// Model parameters `w` living in the origin-centred L2 ball of
/// radius `domain_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    values: Vec<f64>,
    domain_radius: f64,
}

impl ModelParams {
    pub fn new(values: Vec<f64>, domain_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0) || !domain_radius.is_finite() {
            return Err(Error::invalid("domain radius must be positive and finite"));
        }
        check_finite(&values, "model parameters")?;
        if norm(&values) > domain_radius + 1e-9 {
            return Err(Error::invalid(
                "model parameters lie outside the domain ball",
            ));
        }
        Ok(ModelParams {
            values,
            domain_radius,
        })
    }

    pub fn zeros(dim: usize, domain_radius: f64) -> Self {
        ModelParams {
            values: vec![0.0; dim],
            domain_radius,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for ModelParams {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Projection onto `{w : ||w|| <= radius}`.
pub fn project_ball(v: &[f64], radius: f64) -> Result<ModelParams> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("ball radius must be positive and finite"));
    }
    check_finite(v, "ball projection input")?;
    Ok(ModelParams {
        values: project_ball_raw(v, radius),
        domain_radius: radius,
    })
}

pub(crate) fn project_ball_raw(v: &[f64], radius: f64) -> Vec<f64> {
    let n = norm(v);
    if n <= radius {
        v.to_vec()
    } else {
        let s = radius / n;
        v.iter().map(|x| x * s).collect()
    }
}

pub(crate) fn project_ball_in_place(v: &mut [f64], radius: f64) {
    let n = norm(v);
    if n > radius {
        let s = radius / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}
