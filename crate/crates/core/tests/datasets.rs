use std::fs;
use std::path::Path;

use augmetric::augment::{
    build_augmented_dataset, build_augmented_dataset_with_params, AppliedParams, AugmentationKind,
    AugmentationSpec, DatasetManifest, ManifestEntry, MANIFEST_FILE,
};
use augmetric::features::{embed_dataset, fit_gaussian, save_features, EmbedderSpec};
use augmetric::frechet_distance;
use augmetric::imgcore::{pnm, BinaryMask, GrayImage};
use augmetric::inference::{aggregate, AggregateOptions};
use augmetric::models::{Baseline, ModelSpec};
use augmetric::pipeline::{build_report, check_coverage, load_feature_source, plan_sweep, simulate_runs, ReportOptions};

fn write_source(dir: &Path, n: usize) -> DatasetManifest {
    let mut entries = Vec::new();
    for i in 0..n {
        let scan = GrayImage::from_fn(24, 16, |x, y| ((x * 11 + y * 5 + i * 17) % 256) as u8);
        let mask = BinaryMask::from_fn(24, 16, |x, y| x < 8 + i && y > 3);
        let (s, m) = (format!("scan{i}.pgm"), format!("mask{i}.pgm"));
        pnm::write_pgm(dir.join(&s), &scan).unwrap();
        pnm::write_mask(dir.join(&m), &mask).unwrap();
        entries.push(ManifestEntry {
            scan: s.into(),
            mask: m.into(),
        });
    }
    let m = DatasetManifest::new("real", dir, entries, None).unwrap();
    m.save(dir.join("real.txt")).unwrap();
    m
}

#[test]
fn flip_dataset_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 5);
    let spec = AugmentationSpec::new(AugmentationKind::HorizontalFlip, 0).unwrap();
    let out = dir.path().join("flip");
    let m = build_augmented_dataset(&src, &spec, &out).unwrap();
    assert_eq!(m.len(), 5);
    assert_eq!(m.id, "real+hflip");
    let reloaded = DatasetManifest::load(out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(reloaded.provenance, Some(spec));
    assert_eq!(reloaded.entries(), m.entries());
    for (a, b) in src.entries().iter().zip(m.entries()) {
        let orig = pnm::read_mask(src.resolve(&a.mask)).unwrap();
        let flipped = pnm::read_mask(m.resolve(&b.mask)).unwrap();
        assert_eq!(orig.hflip(), flipped);
    }
}

#[test]
fn blur_dataset_params_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 6);
    let spec: AugmentationSpec = "blur:0.01,0.2 seed=9".parse().unwrap();
    let (m1, params) = build_augmented_dataset_with_params(&src, &spec, dir.path().join("b1")).unwrap();
    for p in params {
        match p {
            AppliedParams::Blur { sigma } => assert!((0.01..=0.2).contains(&sigma)),
            other => panic!("unexpected {other:?}"),
        }
    }
    let m2 = build_augmented_dataset(&src, &spec, dir.path().join("b2")).unwrap();
    for ((a, b), orig) in m1.entries().iter().zip(m2.entries()).zip(src.entries()) {
        assert_eq!(fs::read(m1.resolve(&a.scan)).unwrap(), fs::read(m2.resolve(&b.scan)).unwrap());
        // blur leaves masks unchanged
        assert_eq!(fs::read(m1.resolve(&a.mask)).unwrap(), fs::read(src.resolve(&orig.mask)).unwrap());
    }
}

#[test]
fn noise_output_within_range_and_fid_positive() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 8);
    let spec = AugmentationSpec::new(AugmentationKind::AdditiveNoise { scale_min: 10.0, scale_max: 80.0 }, 3).unwrap();
    let noisy = build_augmented_dataset(&src, &spec, dir.path().join("noise")).unwrap();
    let emb = EmbedderSpec::Reference { dim: 6, seed: 1 };
    let a = fit_gaussian(&embed_dataset(&src, &emb).unwrap()).unwrap();
    let b = fit_gaussian(&embed_dataset(&noisy, &emb).unwrap()).unwrap();
    assert!(frechet_distance(&a, &b).unwrap().value > 0.0);
    assert!(frechet_distance(&a, &a).unwrap().value < 1e-9);
}

#[test]
fn feature_files_and_manifests_are_interchangeable() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 4);
    let emb = EmbedderSpec::Reference { dim: 5, seed: 2 };
    let direct = embed_dataset(&src, &emb).unwrap();
    let feat = dir.path().join("real.feat");
    save_features(&direct, &feat).unwrap();
    let from_file = load_feature_source(&feat, &emb).unwrap();
    let from_manifest = load_feature_source(&dir.path().join("real.txt"), &emb).unwrap();
    assert_eq!(from_file.rows(), direct.rows());
    assert_eq!(from_manifest.rows(), direct.rows());
}

#[test]
fn duplicated_content_duplicates_rows() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 3);
    // the same images again under new names
    let mut entries = src.entries().to_vec();
    for (i, e) in src.entries().iter().enumerate() {
        let (s, m) = (format!("copy_scan{i}.pgm"), format!("copy_mask{i}.pgm"));
        fs::copy(src.resolve(&e.scan), dir.path().join(&s)).unwrap();
        fs::copy(src.resolve(&e.mask), dir.path().join(&m)).unwrap();
        entries.push(ManifestEntry {
            scan: s.into(),
            mask: m.into(),
        });
    }
    let doubled = DatasetManifest::new("doubled", dir.path(), entries, None).unwrap();
    let emb = EmbedderSpec::Reference { dim: 4, seed: 0 };
    let a = embed_dataset(&src, &emb).unwrap();
    let b = embed_dataset(&doubled, &emb).unwrap();
    assert_eq!(b.len(), 6);
    assert_eq!(&b.rows()[..3], a.rows());
    assert_eq!(&b.rows()[3..], a.rows());
}

#[test]
fn missing_image_names_entry() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), 3);
    fs::remove_file(dir.path().join("scan1.pgm")).unwrap();
    let spec = AugmentationSpec::new(AugmentationKind::HorizontalFlip, 0).unwrap();
    let err = build_augmented_dataset(&src, &spec, dir.path().join("out")).unwrap_err();
    assert!(err.to_string().contains("entry 1"), "{err}");
}

#[test]
fn simulated_sweep_to_report() {
    let plan = plan_sweep(
        "kind = fid\nincrements = 25, 50\ndatasets = flip, noise, synth\nsamples_per_point = 30\nseed = 2\n\
         dataset.flip.fid = 13.58\ndataset.noise.fid = 39.78\ndataset.synth.fid = 95\n",
    )
    .unwrap();
    assert_eq!(plan.tasks().len(), 180);
    let base = Baseline::new(0.5).unwrap();
    let model: ModelSpec = "h(A=0.057,mu=4.552,sigma=0.467)".parse().unwrap();
    let mut recs = simulate_runs(&plan, &model, base, 0.016, 5).unwrap();
    assert!(check_coverage(&plan.tasks(), &recs).is_complete());
    let agg = aggregate(&recs, &AggregateOptions::default()).unwrap();
    assert_eq!(agg.points.len(), 6);

    let dir = tempfile::tempdir().unwrap();
    let report = build_report(&recs, base, &ReportOptions::default(), dir.path()).unwrap();
    assert_eq!(report.comparisons.len(), 2);
    assert_eq!(report.fits.len(), 2);
    let best = fs::read_to_string(dir.path().join("best_fit.csv")).unwrap();
    assert_eq!(best.lines().count(), 3);
    assert!(best.starts_with("Curve,A,mu,sigma\n+25,"));
    let plot = fs::read_to_string(dir.path().join("plot_+50.csv")).unwrap();
    assert_eq!(plot.lines().count(), 1 + 3 + 200);

    recs.retain(|r| !(r.dataset_id == "noise/+50" && r.run_index == 7));
    let cov = check_coverage(&plan.tasks(), &recs);
    assert_eq!(cov.missing, vec![("noise/+50".to_string(), 7)]);
    assert!(cov.into_result().is_err());
}
