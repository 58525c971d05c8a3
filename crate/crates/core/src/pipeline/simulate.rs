use std::collections::{BTreeMap, BTreeSet};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::SampleRecord;
use crate::models::{default_priors, Baseline, ModelSpec};
use crate::pipeline::{SweepPlan, Task};
use crate::rng;

/// Synthetic run results: every task draws `avg_dsc ~ N(model(fid), noise_sd)`,
/// clamped to `[0, 1]`. Each task has its own random stream, so output does
/// not depend on the number of worker threads.
pub fn simulate_runs(
    plan: &SweepPlan,
    model: &ModelSpec,
    base: Baseline,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::Argument(format!("noise sd must be >= 0, got {noise_sd}")));
    }
    let priors = default_priors(model.family, base)?;
    if !priors.contains(&model.params) {
        return Err(Error::Argument(format!("{model} lies outside the default prior box")));
    }
    plan.validate()?;
    plan.tasks()
        .par_iter()
        .map(|t| {
            let fid = t.fid.ok_or_else(|| Error::Config {
                line: 0,
                reason: format!("dataset `{}` has no fid; set dataset.{}.fid", t.dataset, t.dataset),
            })?;
            let mean = model.eval(fid, base)?;
            let z: f64 = StandardNormal.sample(&mut rng::stream(seed, t.index as u64));
            let v = (mean + noise_sd * z).clamp(0.0, 1.0);
            SampleRecord::new(&t.record_id, fid, t.repeat, v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coverage {
    /// Planned tasks with no record, as (record id, run index).
    pub missing: Vec<(String, u32)>,
    /// Tasks with more than one record.
    pub duplicated: Vec<(String, u32)>,
    /// Records that match no planned task.
    pub unexpected: Vec<(String, u32)>,
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.duplicated.is_empty() && self.unexpected.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_complete() {
            return Ok(());
        }
        let show = |v: &[(String, u32)]| {
            let mut s: Vec<String> = v.iter().take(10).map(|(id, r)| format!("{id}#{r}")).collect();
            if v.len() > 10 {
                s.push(format!("... {} more", v.len() - 10));
            }
            s.join(", ")
        };
        Err(Error::dataset(
            "samples",
            format!(
                "plan coverage incomplete: missing [{}]; duplicated [{}]; unexpected [{}]",
                show(&self.missing),
                show(&self.duplicated),
                show(&self.unexpected)
            ),
        ))
    }
}

/// Checks that every planned task has exactly one record.
pub fn check_coverage(tasks: &[Task], records: &[SampleRecord]) -> Coverage {
    let planned: BTreeSet<(String, u32)> = tasks.iter().map(|t| (t.record_id.clone(), t.repeat)).collect();
    let mut counts: BTreeMap<(String, u32), usize> = BTreeMap::new();
    for r in records {
        *counts.entry((r.dataset_id.clone(), r.run_index)).or_default() += 1;
    }
    let mut cov = Coverage::default();
    for key in &planned {
        match counts.get(key) {
            None => cov.missing.push(key.clone()),
            Some(&n) if n > 1 => cov.duplicated.push(key.clone()),
            _ => {}
        }
    }
    cov.unexpected = counts.keys().filter(|k| !planned.contains(*k)).cloned().collect();
    cov
}
