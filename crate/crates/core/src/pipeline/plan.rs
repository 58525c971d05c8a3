use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng;

const TASK_SEED_TAG: u64 = 0x7461_736b;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Increments are cumulative image counts.
    CountSweep,
    /// Increments are percentages of the base dataset size.
    FidSweep,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::CountSweep => "count",
            SweepKind::FidSweep => "fid",
        })
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "count" | "count_sweep" | "CountSweep" => Ok(SweepKind::CountSweep),
            "fid" | "fid_sweep" | "FidSweep" => Ok(SweepKind::FidSweep),
            other => Err(format!("unknown sweep kind `{other}` (expected count or fid)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDataset {
    pub id: String,
    /// FID of the augmentation source against the real data, if known.
    pub fid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: SweepKind,
    pub base_size: u32,
    pub increments: Vec<u32>,
    pub datasets: Vec<PlanDataset>,
    pub samples_per_point: u32,
    pub seed: u64,
}

/// One training run to be performed.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub index: usize,
    /// Identifier used in sample records, `<dataset>/+<increment>`.
    pub record_id: String,
    pub dataset: String,
    pub increment: u32,
    pub repeat: u32,
    pub seed: u64,
    pub fid: Option<f64>,
}

/// `dataset/+increment`
pub fn record_id(dataset: &str, increment: u32) -> String {
    format!("{dataset}/+{increment}")
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::Config { line: 0, reason };
        if self.increments.is_empty() {
            return Err(bad("no increments".into()));
        }
        if let Some(w) = self.increments.windows(2).find(|w| w[0] >= w[1]) {
            return Err(bad(format!("increments must be strictly increasing ({} then {})", w[0], w[1])));
        }
        if self.kind == SweepKind::FidSweep && self.increments.iter().any(|&p| p == 0 || p > 100) {
            return Err(bad("fid sweep increments are percentages in 1..=100".into()));
        }
        if self.datasets.is_empty() {
            return Err(bad("no datasets".into()));
        }
        if self.samples_per_point == 0 {
            return Err(bad("samples_per_point must be at least 1".into()));
        }
        for d in &self.datasets {
            if d.id.is_empty() || d.id.contains('/') || d.id.contains(',') {
                return Err(bad(format!("bad dataset id `{}`", d.id)));
            }
            if let Some(f) = d.fid {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(bad(format!("dataset `{}` fid must be > 0", d.id)));
                }
            }
        }
        Ok(())
    }

    pub fn n_tasks(&self) -> usize {
        self.datasets.len() * self.increments.len() * self.samples_per_point as usize
    }

    /// Images added at an increment.
    pub fn added_images(&self, increment: u32) -> u32 {
        match self.kind {
            SweepKind::CountSweep => increment,
            SweepKind::FidSweep => (u64::from(self.base_size) * u64::from(increment)).div_ceil(100) as u32,
        }
    }

    /// The run matrix, increment-major, then dataset, then repeat.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::with_capacity(self.n_tasks());
        for &inc in &self.increments {
            for d in &self.datasets {
                for repeat in 0..self.samples_per_point {
                    let index = out.len();
                    out.push(Task {
                        index,
                        record_id: record_id(&d.id, inc),
                        dataset: d.id.clone(),
                        increment: inc,
                        repeat,
                        seed: rng::tagged_stream(self.seed, TASK_SEED_TAG, index as u64).next_u64(),
                        fid: d.fid,
                    });
                }
            }
        }
        out
    }

    pub fn to_config(&self) -> String {
        let list = |v: Vec<String>| v.join(", ");
        let mut s = format!(
            "kind = {}\nbase_size = {}\nincrements = {}\ndatasets = {}\nsamples_per_point = {}\nseed = {}\n",
            self.kind,
            self.base_size,
            list(self.increments.iter().map(u32::to_string).collect()),
            list(self.datasets.iter().map(|d| d.id.clone()).collect()),
            self.samples_per_point,
            self.seed
        );
        for d in &self.datasets {
            if let Some(f) = d.fid {
                s.push_str(&format!("dataset.{}.fid = {f}\n", d.id));
            }
        }
        s
    }
}

fn list<T: FromStr>(v: &str, line: usize, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| Error::Config {
                line,
                reason: format!("bad entry `{s}` in `{key}`"),
            })
        })
        .collect()
}

/// Parses a flat `key = value` plan file.
///
/// ```text
/// kind = fid
/// base_size = 650
/// increments = 25, 50, 75, 99
/// datasets = hflip, blur, synthetic
/// samples_per_point = 30
/// seed = 7
/// dataset.hflip.fid = 13.58
/// ```
pub fn plan_sweep(config: &str) -> Result<SweepPlan> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut kind = None;
    let mut base_size = 650;
    let mut increments = None;
    let mut ids: Option<(usize, Vec<String>)> = None;
    let mut samples = 30;
    let mut seed = 0;
    let mut fids: BTreeMap<String, (usize, f64)> = BTreeMap::new();

    for (i, raw) in config.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Config { line, reason };
        let (key, value) = text
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `key = value`, got `{text}`")))?;
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(format!("`{key}` already set on line {prev}")));
        }
        let num = |what: &str| -> Result<u64> {
            value.parse().map_err(|_| err(format!("`{what}` must be a non-negative integer, got `{value}`")))
        };
        match key {
            "kind" => kind = Some(value.parse::<SweepKind>().map_err(err)?),
            "base_size" => {
                base_size = u32::try_from(num(key)?).map_err(|_| err("base_size too large".into()))?
            }
            "increments" => increments = Some(list::<u32>(value, line, key)?),
            "datasets" => ids = Some((line, list::<String>(value, line, key)?)),
            "samples_per_point" => {
                samples = u32::try_from(num(key)?).map_err(|_| err("samples_per_point too large".into()))?
            }
            "seed" => seed = num(key)?,
            _ => {
                let fid_key = key
                    .strip_prefix("dataset.")
                    .and_then(|k| k.strip_suffix(".fid"))
                    .filter(|id| !id.is_empty());
                match fid_key {
                    Some(id) => {
                        let f: f64 = value.parse().map_err(|_| err(format!("bad fid `{value}`")))?;
                        fids.insert(id.to_string(), (line, f));
                    }
                    None => return Err(err(format!("unknown key `{key}`"))),
                }
            }
        }
    }

    let missing = |field: &str| Error::Config {
        line: 0,
        reason: format!("missing `{field}`"),
    };
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let increments = increments.ok_or_else(|| missing("increments"))?;
    let (ids_line, ids) = ids.ok_or_else(|| missing("datasets"))?;
    if let Some((id, (line, _))) = fids.iter().find(|(id, _)| !ids.contains(id)) {
        return Err(Error::Config {
            line: *line,
            reason: format!("fid given for unlisted dataset `{id}`"),
        });
    }
    let mut uniq = ids.clone();
    uniq.sort();
    uniq.dedup();
    if uniq.len() != ids.len() {
        return Err(Error::Config {
            line: ids_line,
            reason: "duplicate dataset id".into(),
        });
    }
    let plan = SweepPlan {
        kind,
        base_size,
        datasets: ids
            .into_iter()
            .map(|id| PlanDataset {
                fid: fids.get(&id).map(|&(_, f)| f),
                id,
            })
            .collect(),
        increments,
        samples_per_point: samples,
        seed,
    };
    plan.validate().map_err(|e| match e {
        Error::Config { reason, .. } => {
            let line = if reason.starts_with("increments") {
                seen.get("increments").copied().unwrap_or(0)
            } else if reason.starts_with("samples_per_point") {
                seen.get("samples_per_point").copied().unwrap_or(0)
            } else {
                0
            };
            Error::Config { line, reason }
        }
        other => other,
    })?;
    Ok(plan)
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<SweepPlan> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    plan_sweep(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FID: &str = "kind = fid\nincrements = 25, 50, 75, 99\ndatasets = a, b, c\nsamples_per_point = 30\nseed = 3\n";

    #[test]
    fn fid_sweep_matrix() {
        let p = plan_sweep(FID).unwrap();
        let t = p.tasks();
        assert_eq!(t.len(), 360);
        assert_eq!(p.base_size, 650);
        assert_eq!(t[0].record_id, "a/+25");
        assert_eq!(t[359].record_id, "c/+99");
        assert_eq!(p.added_images(25), 163);
        let mut seeds: Vec<u64> = t.iter().map(|t| t.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 360);
    }

    #[test]
    fn count_sweep_groups() {
        let p = plan_sweep("kind = count\nincrements = 650, 1300\ndatasets = synth\nsamples_per_point = 5").unwrap();
        let mut groups: Vec<u32> = p.tasks().iter().map(|t| t.increment).collect();
        groups.dedup();
        assert_eq!(groups, vec![650, 1300]);
        assert_eq!(p.added_images(1300), 1300);
    }

    #[test]
    fn errors_carry_lines() {
        let e = plan_sweep("kind = fid\nincrements = 50, 25\ndatasets = a\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = plan_sweep("kind = fid\nincrements = 25\ndatasets = a\nbogus\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }), "{e}");
        let e = plan_sweep("kind = fid\nincrements = 25\ndatasets = a\ndataset.z.fid = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }), "{e}");
        let e = plan_sweep("kind = fid\nincrements = 25, x\ndatasets = a\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        assert!(plan_sweep("increments = 25\ndatasets = a\n").is_err());
        assert!(plan_sweep("kind = fid\nincrements = 25\ndatasets = a\nsamples_per_point = 0\n").is_err());
        assert!(plan_sweep("kind = fid\nkind = count\n").is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = format!("{FID}dataset.a.fid = 13.58 # hflip\ndataset.c.fid = 71.89\n");
        let p = plan_sweep(&text).unwrap();
        assert_eq!(p.datasets[0].fid, Some(13.58));
        assert_eq!(p.datasets[1].fid, None);
        assert_eq!(plan_sweep(&p.to_config()).unwrap(), p);
    }
}
