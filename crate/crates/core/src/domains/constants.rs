use serde::{Deserialize, Serialize};

use super::loss::LossModel;
use crate::error::{Error, Result};
use crate::primitives::vector::norm;

/// Lipschitz, smoothness and strong-convexity constants of a loss over the
/// domain ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureConstants {
    /// Bound on the gradient norm over W.
    pub g_f: f64,
    pub l_f: f64,
    pub mu_f: f64,
}

impl CurvatureConstants {
    pub fn condition_number(&self) -> f64 {
        self.l_f / self.mu_f
    }
}

/// Constants for one loss over `{||w|| <= radius}`.
///
/// Quadratics use the exact spectrum. For the logistic and softmax losses
/// with augmented feature norm at most `R`, the per-sample Hessians are
/// bounded by `R^2/4` and `R^2/2` respectively and per-sample gradients by
/// `R` and `sqrt(2) R`; the L2 penalty adds `reg` to both curvatures and
/// `reg * radius` to the gradient bound.
pub fn estimate_constants(model: &LossModel, radius: f64) -> CurvatureConstants {
    match model {
        LossModel::Quadratic(q) => {
            let ev = q.matrix().clone().symmetric_eigenvalues();
            let l_f = ev.max();
            CurvatureConstants {
                g_f: l_f * (radius + norm(q.center())),
                l_f,
                mu_f: ev.min(),
            }
        }
        LossModel::Logistic(l) => {
            let r = l.data().max_augmented_norm();
            CurvatureConstants {
                g_f: r + l.reg() * radius,
                l_f: 0.25 * r * r + l.reg(),
                mu_f: l.reg(),
            }
        }
        LossModel::Softmax(s) => {
            let r = s.data().max_augmented_norm();
            CurvatureConstants {
                g_f: std::f64::consts::SQRT_2 * r + s.reg() * radius,
                l_f: 0.5 * r * r + s.reg(),
                mu_f: s.reg(),
            }
        }
    }
}

/// Worst-case constants over a collection: max G_f, max L_f, min mu_f.
pub fn suite_constants<'a>(
    models: impl IntoIterator<Item = &'a LossModel>,
    radius: f64,
) -> Result<CurvatureConstants> {
    let mut out: Option<CurvatureConstants> = None;
    for m in models {
        let c = estimate_constants(m, radius);
        out = Some(match out {
            None => c,
            Some(o) => CurvatureConstants {
                g_f: o.g_f.max(c.g_f),
                l_f: o.l_f.max(c.l_f),
                mu_f: o.mu_f.min(c.mu_f),
            },
        });
    }
    out.ok_or_else(|| Error::invalid("no loss models given"))
}
