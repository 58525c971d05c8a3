use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentationKind {
    HorizontalFlip,
    /// Blur with σ drawn uniformly per image from `[sigma_min, sigma_max]`.
    GaussianBlur { sigma_min: f64, sigma_max: f64 },
    /// Additive normal noise with one scale drawn per image from `[scale_min, scale_max]`.
    AdditiveNoise { scale_min: f64, scale_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec {
    pub kind: AugmentationKind,
    pub seed: u64,
}

fn check_range(what: &str, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
        return Err(Error::Argument(format!(
            "{what} range [{lo}, {hi}] must be finite, non-negative and ordered"
        )));
    }
    Ok(())
}

impl AugmentationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AugmentationKind::HorizontalFlip => Ok(()),
            AugmentationKind::GaussianBlur {
                sigma_min,
                sigma_max,
            } => check_range("blur sigma", sigma_min, sigma_max),
            AugmentationKind::AdditiveNoise {
                scale_min,
                scale_max,
            } => check_range("noise scale", scale_min, scale_max),
        }
    }

    /// Short name used in dataset ids.
    pub fn tag(&self) -> &'static str {
        match self {
            AugmentationKind::HorizontalFlip => "hflip",
            AugmentationKind::GaussianBlur { .. } => "blur",
            AugmentationKind::AdditiveNoise { .. } => "noise",
        }
    }
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }
}

/// `hflip`, `blur:<min>,<max>` or `noise:<min>,<max>`.
impl fmt::Display for AugmentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AugmentationKind::HorizontalFlip => f.write_str("hflip"),
            AugmentationKind::GaussianBlur {
                sigma_min,
                sigma_max,
            } => write!(f, "blur:{sigma_min},{sigma_max}"),
            AugmentationKind::AdditiveNoise {
                scale_min,
                scale_max,
            } => write!(f, "noise:{scale_min},{scale_max}"),
        }
    }
}

impl FromStr for AugmentationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (s, None),
        };
        let pair = |p: Option<&str>| -> Result<(f64, f64)> {
            let p = p.ok_or_else(|| Error::Argument(format!("`{name}` needs `:min,max`")))?;
            let mut it = p.split(',').map(|v| v.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Argument(format!("bad range `{p}` for `{name}`"))),
            }
        };
        let kind = match name {
            "hflip" if params.is_none() => AugmentationKind::HorizontalFlip,
            "blur" => {
                let (sigma_min, sigma_max) = pair(params)?;
                AugmentationKind::GaussianBlur {
                    sigma_min,
                    sigma_max,
                }
            }
            "noise" => {
                let (scale_min, scale_max) = pair(params)?;
                AugmentationKind::AdditiveNoise {
                    scale_min,
                    scale_max,
                }
            }
            _ => return Err(Error::Argument(format!("unknown augmentation `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// `<kind> seed=<n>`, as written to manifest provenance lines.
impl fmt::Display for AugmentationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed={}", self.kind, self.seed)
    }
}

impl FromStr for AugmentationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, seed) = s
            .trim()
            .rsplit_once(" seed=")
            .ok_or_else(|| Error::Argument(format!("spec `{s}` lacks ` seed=<n>`")))?;
        let seed = seed
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad seed in `{s}`")))?;
        AugmentationSpec::new(kind.parse()?, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        for text in ["hflip seed=1", "blur:0.01,0.2 seed=42", "noise:10,80 seed=0"] {
            let spec: AugmentationSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!("blur:0.2,0.01".parse::<AugmentationKind>().is_err());
        assert!("noise:-1,3".parse::<AugmentationKind>().is_err());
        assert!("blur".parse::<AugmentationKind>().is_err());
        assert!("rotate:1,2".parse::<AugmentationKind>().is_err());
        assert!("hflip:1,2".parse::<AugmentationKind>().is_err());
    }
}
