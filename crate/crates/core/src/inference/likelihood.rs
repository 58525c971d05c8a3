use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::inference::AggregatedPoint;
use crate::models::{Baseline, ModelFamily};

/// Points prepared for repeated Gaussian log-likelihood evaluation of one family.
#[derive(Debug, Clone)]
pub struct Likelihood {
    family: ModelFamily,
    dsc0: f64,
    x: Vec<f64>,
    ln_x: Vec<f64>,
    y: Vec<f64>,
    inv_two_var: Vec<f64>,
    /// Σ −ln(√(2π) σ_i)
    log_norm: f64,
}

impl Likelihood {
    pub fn new(points: &[AggregatedPoint], family: ModelFamily, base: Baseline) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("likelihood needs at least one point".into()));
        }
        let mut log_norm = 0.0;
        for p in points {
            if !(p.sem > 0.0) {
                return Err(Error::Argument(format!(
                    "point `{}` has sem {} (must be > 0)",
                    p.dataset_id, p.sem
                )));
            }
            if family.needs_positive_x() && !(p.fid > 0.0) {
                return Err(Error::Domain(format!(
                    "{family} is undefined at x = {} (point `{}`)",
                    p.fid, p.dataset_id
                )));
            }
            log_norm -= (2.0 * PI).sqrt().ln() + p.sem.ln();
        }
        Ok(Self {
            family,
            dsc0: base.dsc0(),
            x: points.iter().map(|p| p.fid).collect(),
            ln_x: points.iter().map(|p| p.fid.ln()).collect(),
            y: points.iter().map(|p| p.mean).collect(),
            inv_two_var: points.iter().map(|p| 0.5 / (p.sem * p.sem)).collect(),
            log_norm,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Natural-log likelihood at `params`; no prior check.
    #[inline]
    pub fn log_likelihood(&self, params: &[f64]) -> f64 {
        let mut chi = 0.0;
        for i in 0..self.x.len() {
            let r = self.y[i] - self.dsc0 - self.family.improvement(params, self.x[i], self.ln_x[i]);
            chi += r * r * self.inv_two_var[i];
        }
        self.log_norm - chi
    }
}

/// Σ_i [−ln(√(2π) σ_i) − (y_i − M(x_i, θ))² / (2σ_i²)].
pub fn log_likelihood(
    points: &[AggregatedPoint],
    family: ModelFamily,
    params: &[f64],
    base: Baseline,
) -> Result<f64> {
    if params.len() != family.n_params() {
        return Err(Error::Argument(format!(
            "{family} takes {} parameters, got {}",
            family.n_params(),
            params.len()
        )));
    }
    Ok(Likelihood::new(points, family, base)?.log_likelihood(params))
}
