use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::inference::SampleRecord;

/// Mean DSC of one dataset with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedPoint {
    pub dataset_id: String,
    pub fid: f64,
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

impl AggregatedPoint {
    pub fn new(dataset_id: impl Into<String>, fid: f64, mean: f64, sem: f64, n: usize) -> Result<Self> {
        let dataset_id = dataset_id.into();
        if !(sem > 0.0 && sem.is_finite()) {
            return Err(Error::Argument(format!(
                "point `{dataset_id}` needs sem > 0, got {sem}"
            )));
        }
        if !(fid.is_finite() && mean.is_finite()) {
            return Err(Error::Argument(format!("point `{dataset_id}` is not finite")));
        }
        Ok(Self {
            dataset_id,
            fid,
            mean,
            sem,
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOptions {
    /// Lower bound applied to the sem; `None` makes a zero sem an error.
    pub jitter_floor: Option<f64>,
    /// Datasets with fewer samples than this get a warning.
    pub recommended_n: usize,
    /// Flag a dataset whose smallest sample sits this many sample standard
    /// deviations below its mean.
    pub outlier_sds: f64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            jitter_floor: Some(1e-6),
            recommended_n: 30,
            outlier_sds: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    FewSamples { dataset_id: String, n: usize },
    JitterApplied { dataset_id: String, raw_sem: f64, floor: f64 },
    LowOutlier { dataset_id: String, min: f64, mean: f64, sd: f64 },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::FewSamples { dataset_id, n } => {
                write!(f, "{dataset_id}: only {n} samples (30 or more recommended)")
            }
            Diagnostic::JitterApplied {
                dataset_id,
                raw_sem,
                floor,
            } => write!(f, "{dataset_id}: sem {raw_sem:e} raised to jitter floor {floor:e}"),
            Diagnostic::LowOutlier {
                dataset_id,
                min,
                mean,
                sd,
            } => write!(
                f,
                "{dataset_id}: minimum sample {min} is {:.1} sd below the mean {mean}",
                (mean - min) / sd
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    /// Sorted by FID, then dataset id.
    pub points: Vec<AggregatedPoint>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Groups samples by dataset and reduces each group to mean and standard error
/// (n−1 sample deviation over √n). The result does not depend on record order.
pub fn aggregate(samples: &[SampleRecord], opts: &AggregateOptions) -> Result<Aggregation> {
    let mut groups: BTreeMap<&str, Vec<&SampleRecord>> = BTreeMap::new();
    for s in samples {
        groups.entry(&s.dataset_id).or_default().push(s);
    }
    let mut points = Vec::with_capacity(groups.len());
    let mut diagnostics = Vec::new();
    for (id, recs) in groups {
        let n = recs.len();
        if n < 2 {
            return Err(Error::SampleSize {
                what: format!("dataset `{id}`"),
                needed: 2,
                got: n,
            });
        }
        let fid = recs[0].fid;
        if let Some(r) = recs.iter().find(|r| (r.fid - fid).abs() > 1e-9 * fid) {
            return Err(Error::dataset(
                id,
                format!("inconsistent fid values {fid} and {}", r.fid),
            ));
        }
        // sorted so summation order never depends on input order
        let mut values: Vec<f64> = recs.iter().map(|r| r.avg_dsc).collect();
        values.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        let raw_sem = sd / (n as f64).sqrt();

        if n < opts.recommended_n {
            log::warn!("dataset `{id}` has {n} samples; 30 or more are recommended");
            diagnostics.push(Diagnostic::FewSamples {
                dataset_id: id.to_string(),
                n,
            });
        }
        if sd > 0.0 && (mean - values[0]) > opts.outlier_sds * sd {
            diagnostics.push(Diagnostic::LowOutlier {
                dataset_id: id.to_string(),
                min: values[0],
                mean,
                sd,
            });
        }
        let sem = match opts.jitter_floor {
            Some(floor) if raw_sem < floor => {
                log::warn!("dataset `{id}`: sem {raw_sem:e} raised to jitter floor {floor:e}");
                diagnostics.push(Diagnostic::JitterApplied {
                    dataset_id: id.to_string(),
                    raw_sem,
                    floor,
                });
                floor
            }
            _ if raw_sem <= 0.0 => {
                return Err(Error::Numerical(format!(
                    "dataset `{id}` has zero spread (sem = 0); set a jitter floor to use it"
                )));
            }
            _ => raw_sem,
        };
        points.push(AggregatedPoint::new(id, fid, mean, sem, n)?);
    }
    points.sort_by(|a, b| a.fid.total_cmp(&b.fid).then_with(|| a.dataset_id.cmp(&b.dataset_id)));
    Ok(Aggregation {
        points,
        diagnostics,
    })
}
