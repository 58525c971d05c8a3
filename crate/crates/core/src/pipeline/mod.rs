//! Sweep plans, results ingestion, a run simulator and report files.

mod plan;
mod report;
mod simulate;

use std::fs;
use std::path::{Path, PathBuf};

use crate::augment::DatasetManifest;
use crate::error::{Error, Result};
use crate::features::{embed_dataset, is_feature_file, load_features, EmbedderSpec, FeatureSet};
use crate::inference::{read_samples, SampleRecord};

pub use plan::{load_plan, plan_sweep, record_id, PlanDataset, SweepKind, SweepPlan, Task};
pub use report::{
    build_report, log_space, render_report, series_label, split_series, CurveFit, Report, ReportOptions, Series,
    BEST_FIT_FILE, CURVE_POINTS,
};
pub use simulate::{check_coverage, simulate_runs, Coverage};

/// Validated sample records from a CSV file.
pub fn ingest_results(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    read_samples(path)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Argument("worker count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Prediction/truth mask files to compare. Two files give one pair; two
/// directories are matched by `.pgm` file name.
pub fn mask_pairs(pred: &Path, truth: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    match (pred.is_dir(), truth.is_dir()) {
        (false, false) => Ok(vec![(pred.to_path_buf(), truth.to_path_buf())]),
        (true, true) => {
            let list = |dir: &Path| -> Result<Vec<PathBuf>> {
                let mut v: Vec<PathBuf> = fs::read_dir(dir)
                    .map_err(|e| Error::io(dir, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
                    .collect();
                v.sort();
                Ok(v)
            };
            let preds = list(pred)?;
            let truths = list(truth)?;
            if preds.is_empty() {
                return Err(Error::dataset(pred.display().to_string(), "no .pgm masks"));
            }
            let mut out = Vec::with_capacity(preds.len());
            for p in preds {
                let name = p.file_name().expect("listed file has a name");
                let t = truth.join(name);
                if !truths.contains(&t) {
                    return Err(Error::dataset(
                        name.to_string_lossy(),
                        format!("no matching mask in {}", truth.display()),
                    ));
                }
                out.push((p, t));
            }
            if out.len() != truths.len() {
                return Err(Error::dataset(
                    truth.display().to_string(),
                    format!("{} truth masks but {} predictions", truths.len(), out.len()),
                ));
            }
            Ok(out)
        }
        _ => Err(Error::Argument("--pred and --truth must both be files or both be directories".into())),
    }
}

/// Features from a feature file, or by embedding the images of a manifest.
pub fn load_feature_source(path: &Path, embedder: &EmbedderSpec) -> Result<FeatureSet> {
    if is_feature_file(path) {
        let fs = load_features(path)?;
        if fs.dim() != embedder.dim() {
            log::info!("{}: feature dim {} overrides embedder dim {}", path.display(), fs.dim(), embedder.dim());
        }
        return Ok(fs);
    }
    embed_dataset(&DatasetManifest::load(path)?, embedder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{pnm, BinaryMask};

    #[test]
    fn worker_pool_sizes() {
        assert_eq!(with_workers(Some(3), rayon::current_num_threads).unwrap(), 3);
        assert!(with_workers(Some(0), || ()).is_err());
    }

    #[test]
    fn pairs_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let (p, t) = (dir.path().join("p"), dir.path().join("t"));
        fs::create_dir_all(&p).unwrap();
        fs::create_dir_all(&t).unwrap();
        let m = BinaryMask::filled(2, 2, true);
        for name in ["b.pgm", "a.pgm"] {
            pnm::write_mask(p.join(name), &m).unwrap();
            pnm::write_mask(t.join(name), &m).unwrap();
        }
        let pairs = mask_pairs(&p, &t).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[0].0.ends_with("a.pgm") && pairs[0].1.ends_with("a.pgm"));
        fs::remove_file(t.join("b.pgm")).unwrap();
        assert!(mask_pairs(&p, &t).is_err());
        assert!(mask_pairs(&p, &t.join("a.pgm")).is_err());
    }
}
