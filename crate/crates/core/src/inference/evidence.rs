//! Model evidence under uniform box priors.
//!
//! The evidence is `(1/ΠR_i) ∫ L(θ) dθ` over the prior box. Two estimators are
//! provided:
//!
//! * `Grid`: product trapezoid rule, summed in log space. The likelihood of a
//!   few well-measured points is usually concentrated in a small corner of the
//!   box, so the grid is first placed on the whole box and then re-placed on
//!   the bounding box of nodes within [`SUPPORT_NATS`] of the best value seen,
//!   padded by one node spacing. This repeats until the window stops moving.
//!   Mass outside the final window is below `exp(-SUPPORT_NATS)` of the peak.
//! * `MonteCarlo`: plain uniform sampling of the whole box, with a standard
//!   error. It shares nothing with the grid path and serves as a cross-check.
//!
//! Results are reported as log₁₀ evidence.

use std::f64::consts::LN_10;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::fit::{maximize, DEFAULT_STARTS};
use crate::inference::{AggregatedPoint, Likelihood};
use crate::models::{Baseline, Interval, ModelFamily, PriorBox};
use crate::rng;

/// Nodes within this many nats of the peak define the integration window.
pub const SUPPORT_NATS: f64 = 20.0;

pub const DEFAULT_MC_SAMPLES: usize = 200_000;

const MAX_WINDOW_PASSES: usize = 16;
const MC_CHUNK: usize = 4096;
const MC_TAG: u64 = 0x4d43_4556;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceMethod {
    Grid,
    MonteCarlo,
}

impl std::fmt::Display for EvidenceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvidenceMethod::Grid => "grid",
            EvidenceMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadSpec {
    /// Nodes per axis; `None` picks 201 for one or two parameters, 101 for three.
    Grid { nodes: Option<usize> },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::Grid { nodes: None }
    }
}

impl QuadSpec {
    pub fn monte_carlo(seed: u64) -> Self {
        QuadSpec::MonteCarlo {
            samples: DEFAULT_MC_SAMPLES,
            seed,
        }
    }
}

pub fn default_nodes(dim: usize) -> usize {
    if dim <= 2 {
        201
    } else {
        101
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceResult {
    pub log10_evidence: f64,
    pub method: EvidenceMethod,
    /// Grid nodes in the final pass, or Monte Carlo samples.
    pub nodes_or_samples: usize,
    /// Standard error of `log10_evidence` (Monte Carlo only).
    pub mc_standard_error: Option<f64>,
    /// Largest log₁₀ likelihood over the evaluated nodes or samples.
    pub max_log10_likelihood: f64,
    /// Where the grid was finally placed (grid only).
    pub window: Option<Vec<Interval>>,
}

/// log₁₀ K for model 1 against model 2, with equal model priors.
pub fn log10_bayes_factor(e1: &EvidenceResult, e2: &EvidenceResult) -> f64 {
    e1.log10_evidence - e2.log10_evidence
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    const EMPTY: LogSum = LogSum {
        max: f64::NEG_INFINITY,
        scaled: 0.0,
    };

    #[inline]
    fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.scaled += (v - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    fn merge(mut self, other: LogSum) -> LogSum {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
            self
        } else {
            LogSum {
                max: other.max,
                scaled: other.scaled + self.scaled * (self.max - other.max).exp(),
            }
        }
    }

    fn ln(self) -> f64 {
        self.max + self.scaled.ln()
    }
}

struct Axis {
    lo: f64,
    step: f64,
    // ln of trapezoid weights
    ln_w: Vec<f64>,
}

impl Axis {
    fn new(iv: Interval, nodes: usize) -> Axis {
        let step = iv.range() / (nodes - 1) as f64;
        let ln_w = (0..nodes)
            .map(|i| {
                let w = if i == 0 || i == nodes - 1 { 0.5 * step } else { step };
                w.ln()
            })
            .collect();
        Axis {
            lo: iv.lo,
            step,
            ln_w,
        }
    }

    #[inline]
    fn node(&self, i: usize, hi: f64) -> f64 {
        // pin the last node exactly to the upper bound
        if i + 1 == self.ln_w.len() {
            hi
        } else {
            self.lo + i as f64 * self.step
        }
    }
}

struct SlicePass {
    sum: LogSum,
    max_ll: f64,
    argmax: Vec<f64>,
    // per axis (min index, max index) of nodes above the support threshold
    support: Option<Vec<(usize, usize)>>,
    bad: Option<(Vec<f64>, f64)>,
}

struct GridPass {
    ln_integral: f64,
    max_ll: f64,
    argmax: Vec<f64>,
    support: Option<Vec<(usize, usize)>>,
}

fn grid_pass(lik: &Likelihood, window: &[Interval], nodes: usize, threshold: f64) -> Result<GridPass> {
    let d = window.len();
    let axes: Vec<Axis> = window.iter().map(|&iv| Axis::new(iv, nodes)).collect();
    let inner: usize = nodes.pow((d - 1) as u32);

    let slices: Vec<SlicePass> = (0..nodes)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; d];
            let mut theta = vec![0.0; d];
            let mut out = SlicePass {
                sum: LogSum::EMPTY,
                max_ll: f64::NEG_INFINITY,
                argmax: Vec::new(),
                support: None,
                bad: None,
            };
            idx[0] = i0;
            for flat in 0..inner {
                let mut rest = flat;
                for a in (1..d).rev() {
                    idx[a] = rest % nodes;
                    rest /= nodes;
                }
                let mut ln_w = 0.0;
                for a in 0..d {
                    theta[a] = axes[a].node(idx[a], window[a].hi);
                    ln_w += axes[a].ln_w[idx[a]];
                }
                let ll = lik.log_likelihood(&theta);
                if !ll.is_finite() {
                    out.bad = Some((theta.clone(), ll));
                    return out;
                }
                out.sum.add(ll + ln_w);
                if ll > out.max_ll {
                    out.max_ll = ll;
                    out.argmax.clone_from(&theta);
                }
                if ll >= threshold {
                    let s = out.support.get_or_insert_with(|| idx.iter().map(|&i| (i, i)).collect());
                    for (b, &i) in s.iter_mut().zip(&idx) {
                        b.0 = b.0.min(i);
                        b.1 = b.1.max(i);
                    }
                }
            }
            out
        })
        .collect();

    // fixed-order reduction keeps the result independent of scheduling
    let mut sum = LogSum::EMPTY;
    let mut max_ll = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let mut support: Option<Vec<(usize, usize)>> = None;
    for s in slices {
        if let Some((theta, ll)) = s.bad {
            return Err(Error::Numerical(format!(
                "non-finite log-likelihood {ll} at θ = {theta:?}"
            )));
        }
        sum = sum.merge(s.sum);
        if s.max_ll > max_ll {
            max_ll = s.max_ll;
            argmax = s.argmax;
        }
        if let Some(b) = s.support {
            support = Some(match support {
                None => b,
                Some(a) => a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| (x.0.min(y.0), x.1.max(y.1)))
                    .collect(),
            });
        }
    }
    Ok(GridPass {
        ln_integral: sum.ln(),
        max_ll,
        argmax,
        support,
    })
}

fn next_window(
    pass: &GridPass,
    window: &[Interval],
    prior: &PriorBox,
    nodes: usize,
    anchor: &[f64],
) -> Vec<Interval> {
    window
        .iter()
        .zip(prior.axes())
        .enumerate()
        .map(|(a, (w, p))| {
            let step = w.range() / (nodes - 1) as f64;
            let (mut lo, mut hi) = (anchor[a], anchor[a]);
            if let Some(s) = &pass.support {
                lo = lo.min(w.lo + s[a].0 as f64 * step);
                hi = hi.max(w.lo + s[a].1 as f64 * step);
            }
            Interval {
                lo: (lo - step).max(p.lo),
                hi: (hi + step).min(p.hi),
            }
        })
        .collect()
}

fn volume(w: &[Interval]) -> f64 {
    w.iter().map(Interval::range).product()
}

fn grid_evidence(lik: &Likelihood, prior: &PriorBox, nodes: usize) -> Result<EvidenceResult> {
    if nodes < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 nodes per axis, got {nodes}")));
    }
    let d = prior.dim();
    let (mle, mle_ll) = maximize(lik, prior, DEFAULT_STARTS);
    let mut window: Vec<Interval> = prior.axes().to_vec();
    let mut pass = grid_pass(lik, &window, nodes, mle_ll - SUPPORT_NATS)?;
    for _ in 1..MAX_WINDOW_PASSES {
        let (anchor, peak) = if pass.max_ll > mle_ll {
            (pass.argmax.as_slice(), pass.max_ll)
        } else {
            (mle.as_slice(), mle_ll)
        };
        let next = next_window(&pass, &window, prior, nodes, anchor);
        let inside = next
            .iter()
            .zip(&window)
            .all(|(n, w)| n.lo >= w.lo - 1e-12 * w.range() && n.hi <= w.hi + 1e-12 * w.range());
        let candidate = if inside {
            if volume(&next) >= 0.5 * volume(&window) {
                break;
            }
            next
        } else {
            // support reaches the window edge: widen, never shrink, in this pass
            next.iter()
                .zip(&window)
                .map(|(n, w)| Interval {
                    lo: n.lo.min(w.lo),
                    hi: n.hi.max(w.hi),
                })
                .collect()
        };
        if candidate.iter().any(|iv| !(iv.range() > 0.0)) {
            break;
        }
        window = candidate;
        pass = grid_pass(lik, &window, nodes, peak - SUPPORT_NATS)?;
    }
    let ln_evidence = pass.ln_integral - prior.volume().ln();
    Ok(EvidenceResult {
        log10_evidence: ln_evidence / LN_10,
        method: EvidenceMethod::Grid,
        nodes_or_samples: nodes.pow(d as u32),
        mc_standard_error: None,
        max_log10_likelihood: pass.max_ll / LN_10,
        window: Some(window),
    })
}

fn mc_evidence(lik: &Likelihood, prior: &PriorBox, samples: usize, seed: u64) -> Result<EvidenceResult> {
    if samples < 2 {
        return Err(Error::Argument("Monte Carlo needs at least 2 samples".into()));
    }
    let d = prior.dim();
    let chunks = samples.div_ceil(MC_CHUNK);
    let lls: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::tagged_stream(seed, MC_TAG, c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut u = vec![0.0; d];
            (0..n)
                .map(|_| {
                    u.iter_mut().for_each(|t| *t = r.random::<f64>());
                    lik.log_likelihood(&prior.from_unit(&u))
                })
                .collect()
        })
        .collect();
    let lls: Vec<f64> = lls.into_iter().flatten().collect();
    if let Some(bad) = lls.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite log-likelihood {bad} in Monte Carlo")));
    }
    let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = lls.len() as f64;
    let (s1, s2) = lls.iter().fold((0.0, 0.0), |(a, b), &v| {
        let e = (v - max).exp();
        (a + e, b + e * e)
    });
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let se_mean = (var / n).sqrt();
    Ok(EvidenceResult {
        log10_evidence: (max + mean.ln()) / LN_10,
        method: EvidenceMethod::MonteCarlo,
        nodes_or_samples: samples,
        mc_standard_error: Some(se_mean / (mean * LN_10)),
        max_log10_likelihood: max / LN_10,
        window: None,
    })
}

/// log₁₀ evidence of `family` under a uniform prior box.
pub fn log_evidence(
    points: &[AggregatedPoint],
    family: ModelFamily,
    priors: &PriorBox,
    base: Baseline,
    quad: &QuadSpec,
) -> Result<EvidenceResult> {
    if priors.dim() != family.n_params() {
        return Err(Error::Argument(format!(
            "{family} has {} parameters but the prior box has {} axes",
            family.n_params(),
            priors.dim()
        )));
    }
    if priors.dim() > 3 {
        return Err(Error::Argument("evidence supports at most 3 parameters".into()));
    }
    let lik = Likelihood::new(points, family, base)?;
    match *quad {
        QuadSpec::Grid { nodes } => {
            grid_evidence(&lik, priors, nodes.unwrap_or_else(|| default_nodes(priors.dim())))
        }
        QuadSpec::MonteCarlo { samples, seed } => mc_evidence(&lik, priors, samples, seed),
    }
}
