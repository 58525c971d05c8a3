//! Candidate curves relating augmentation FID to mean DSC, their uniform
//! priors, and the WGAN loss helpers.
//!
//! Every family predicts `DSC₀ + improvement(x)`:
//!
//! | family | improvement            | parameters  |
//! |--------|------------------------|-------------|
//! | `f`    | `c`                    | `c`         |
//! | `g`    | `m·x + c`              | `m, c`      |
//! | `h`    | `A·exp(-½((ln x − μ)/σ)²)` | `A, mu, sigma` |
//! | `k`    | `a/x + c`              | `a, c`      |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelFamily {
    Constant,
    Linear,
    LogNormal,
    Reciprocal,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Constant,
        ModelFamily::Linear,
        ModelFamily::LogNormal,
        ModelFamily::Reciprocal,
    ];

    pub fn letter(self) -> char {
        match self {
            ModelFamily::Constant => 'f',
            ModelFamily::Linear => 'g',
            ModelFamily::LogNormal => 'h',
            ModelFamily::Reciprocal => 'k',
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Constant => &["c"],
            ModelFamily::Linear => &["m", "c"],
            ModelFamily::LogNormal => &["A", "mu", "sigma"],
            ModelFamily::Reciprocal => &["a", "c"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// True if the family needs `x > 0`.
    pub fn needs_positive_x(self) -> bool {
        matches!(self, ModelFamily::LogNormal | ModelFamily::Reciprocal)
    }

    /// Improvement over the baseline, given `x` and `ln x`. No validation.
    #[inline]
    pub(crate) fn improvement(self, p: &[f64], x: f64, ln_x: f64) -> f64 {
        match self {
            ModelFamily::Constant => p[0],
            ModelFamily::Linear => p[0] * x + p[1],
            ModelFamily::LogNormal => {
                let (a, mu, sigma) = (p[0], p[1], p[2]);
                if sigma == 0.0 {
                    // limit of the bump as its width vanishes
                    return if ln_x == mu { a } else { 0.0 };
                }
                let z = (ln_x - mu) / sigma;
                a * (-0.5 * z * z).exp()
            }
            ModelFamily::Reciprocal => p[0] / x + p[1],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "f" | "constant" => Ok(ModelFamily::Constant),
            "g" | "linear" => Ok(ModelFamily::Linear),
            "h" | "lognormal" | "log-normal" => Ok(ModelFamily::LogNormal),
            "k" | "reciprocal" => Ok(ModelFamily::Reciprocal),
            other => Err(Error::Argument(format!("unknown model family `{other}`"))),
        }
    }
}

/// Mean DSC of the unaugmented model.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Baseline(f64);

impl Baseline {
    pub fn new(dsc0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dsc0) {
            return Err(Error::Argument(format!("baseline DSC must lie in [0, 1), got {dsc0}")));
        }
        Ok(Self(dsc0))
    }

    pub fn dsc0(self) -> f64 {
        self.0
    }
}

/// Evaluates a family at FID `x`.
pub fn eval_model(family: ModelFamily, params: &[f64], x: f64, base: Baseline) -> Result<f64> {
    if params.len() != family.n_params() {
        return Err(Error::Argument(format!(
            "{family} takes {} parameters, got {}",
            family.n_params(),
            params.len()
        )));
    }
    if family.needs_positive_x() && !(x > 0.0) {
        return Err(Error::Domain(format!("{family} is undefined at x = {x}")));
    }
    Ok(base.dsc0() + family.improvement(params, x, x.ln()))
}

/// Closed interval prior for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn range(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// Independent uniform priors over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorBox {
    axes: Vec<Interval>,
}

impl PriorBox {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Argument("prior box needs at least one axis".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Argument(format!(
                    "prior axis {i} needs lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            axes: bounds.iter().map(|&(lo, hi)| Interval { lo, hi }).collect(),
        })
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Product of axis ranges.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Interval::range).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.axes.len() && self.axes.iter().zip(p).all(|(a, &v)| a.contains(v))
    }

    /// Maps a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .zip(u)
            .map(|(a, &t)| a.clamp(a.lo + t * a.range()))
            .collect()
    }

    pub fn to_unit(&self, p: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .zip(p)
            .map(|(a, &v)| (v - a.lo) / a.range())
            .collect()
    }
}

/// Uniform priors for each family given the baseline.
pub fn default_priors(family: ModelFamily, base: Baseline) -> Result<PriorBox> {
    let headroom = (0.0, 1.0 - base.dsc0());
    match family {
        ModelFamily::Constant => PriorBox::new(&[headroom]),
        ModelFamily::Linear => PriorBox::new(&[(-0.01, 0.0), headroom]),
        ModelFamily::LogNormal => PriorBox::new(&[headroom, (0.0, 5.0), (0.0, 5.0)]),
        ModelFamily::Reciprocal => PriorBox::new(&[(0.0, 1.0), headroom]),
    }
}

/// A family with concrete parameters, written as `h(A=0.057,mu=4.552,sigma=0.467)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub params: Vec<f64>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, params: Vec<f64>) -> Result<Self> {
        if params.len() != family.n_params() {
            return Err(Error::Argument(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                params.len()
            )));
        }
        Ok(Self { family, params })
    }

    pub fn eval(&self, x: f64, base: Baseline) -> Result<f64> {
        eval_model(self.family, &self.params, x, base)
    }

    /// Parses `name=value` pairs for a known family, in any order.
    pub fn parse_params(family: ModelFamily, text: &str) -> Result<Self> {
        let names = family.param_names();
        let mut values = vec![None; names.len()];
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("expected name=value, got `{part}`")))?;
            let slot = names
                .iter()
                .position(|n| *n == name.trim())
                .ok_or_else(|| Error::Argument(format!("{family} has no parameter `{name}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad value `{value}` for `{name}`")))?;
            values[slot] = Some(v);
        }
        let params = values
            .into_iter()
            .zip(names)
            .map(|(v, n)| v.ok_or_else(|| Error::Argument(format!("missing parameter `{n}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, params)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, (n, v)) in self.family.param_names().iter().zip(&self.params).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .filter(|_| s.ends_with(')'))
            .ok_or_else(|| Error::Argument(format!("expected `family(name=value,...)`, got `{s}`")))?;
        let family: ModelFamily = s[..open].parse()?;
        Self::parse_params(family, &s[open + 1..s.len() - 1])
    }
}

/// Critic and generator losses of a Wasserstein GAN:
/// `L_C = −(mean(real) − mean(fake))`, `L_G = −mean(fake)`.
pub fn wgan_losses(real_scores: &[f64], fake_scores: &[f64]) -> Result<(f64, f64)> {
    if real_scores.is_empty() || fake_scores.is_empty() {
        return Err(Error::Argument("critic score vectors must be non-empty".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (r, f) = (mean(real_scores), mean(fake_scores));
    Ok((-(r - f), -f))
}
