//! Bounded maximum-likelihood fitting.
//!
//! Nelder-Mead runs in the unit cube of the prior box, with every trial point
//! clipped back into the cube. Starts come from a Halton sequence so the fit is
//! reproducible without a seed.

use crate::error::{Error, Result};
use crate::inference::{AggregatedPoint, Likelihood};
use crate::models::{Baseline, ModelFamily, PriorBox};

pub const DEFAULT_STARTS: usize = 32;

const HALTON_BASES: [u32; 6] = [2, 3, 5, 7, 11, 13];
const MAX_ITER_PER_DIM: usize = 1000;
const F_TOL: f64 = 1e-13;
const X_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: ModelFamily,
    pub params: Vec<f64>,
    pub log_likelihood: f64,
}

/// Element `index` (1-based) of the radical inverse sequence in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= b as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

fn clip_unit(v: &mut [f64]) {
    for t in v {
        *t = t.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over the unit cube from `start`. Returns (point, value).
pub fn nelder_mead_unit<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], step: f64) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut s0 = start.to_vec();
    clip_unit(&mut s0);
    simplex.push(s0.clone());
    for i in 0..d {
        let mut v = s0.clone();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let eval = |p: &mut Vec<f64>| {
        clip_unit(p);
        f(p)
    };

    for _ in 0..MAX_ITER_PER_DIM * d.max(1) {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[d]);
        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= F_TOL * (best.abs() + F_TOL) && spread <= X_TOL {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let mut reflected = along(-1.0);
        let fr = eval(&mut reflected);
        if fr < values[0] {
            let mut expanded = along(-2.0);
            let fe = eval(&mut expanded);
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
            continue;
        }
        let (mut contracted, fc) = if fr < values[d] {
            let mut c = along(-0.5);
            let fc = eval(&mut c);
            (c, fc)
        } else {
            let mut c = along(0.5);
            let fc = eval(&mut c);
            (c, fc)
        };
        if fc < values[d].min(fr) {
            clip_unit(&mut contracted);
            simplex[d] = contracted;
            values[d] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=d {
            let mut v: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&mut v);
            simplex[i] = v;
        }
    }
    let (i, &v) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is non-empty");
    (simplex[i].clone(), v)
}

/// Multi-start maximization without the point-count check.
pub(crate) fn maximize(lik: &Likelihood, priors: &PriorBox, starts: usize) -> (Vec<f64>, f64) {
    let d = priors.dim();
    let neg = |u: &[f64]| -lik.log_likelihood(&priors.from_unit(u));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 1..=starts.max(1) as u64 {
        let start: Vec<f64> = (0..d).map(|j| halton(s, HALTON_BASES[j % HALTON_BASES.len()])).collect();
        let (mut u, mut v) = nelder_mead_unit(&neg, &start, 0.1);
        // restart once from the optimum to escape a collapsed simplex
        let (u2, v2) = nelder_mead_unit(&neg, &u, 0.01);
        if v2 <= v {
            u = u2;
            v = v2;
        }
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((u, v));
        }
    }
    let (u, v) = best.expect("at least one start");
    (priors.from_unit(&u), -v)
}

/// Maximum-likelihood parameters within the prior box.
pub fn best_fit(
    points: &[AggregatedPoint],
    family: ModelFamily,
    priors: &PriorBox,
    base: Baseline,
) -> Result<FitResult> {
    best_fit_with_starts(points, family, priors, base, DEFAULT_STARTS)
}

pub fn best_fit_with_starts(
    points: &[AggregatedPoint],
    family: ModelFamily,
    priors: &PriorBox,
    base: Baseline,
    starts: usize,
) -> Result<FitResult> {
    if priors.dim() != family.n_params() {
        return Err(Error::Argument(format!(
            "{family} has {} parameters but the prior box has {} axes",
            family.n_params(),
            priors.dim()
        )));
    }
    if points.len() < family.n_params() {
        return Err(Error::Fit(format!(
            "{family} has {} parameters but only {} points",
            family.n_params(),
            points.len()
        )));
    }
    let lik = Likelihood::new(points, family, base)?;
    let (params, log_likelihood) = maximize(&lik, priors, starts);
    if !log_likelihood.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite log-likelihood {log_likelihood} at {params:?}"
        )));
    }
    Ok(FitResult {
        family,
        params,
        log_likelihood,
    })
}
