//! Fixtures shared by the benchmarks.

use augmetric::imgcore::{BinaryMask, GrayImage};
use augmetric::inference::AggregatedPoint;
use augmetric::models::{eval_model, Baseline, ModelFamily};
use augmetric::nalgebra::{DMatrix, DVector};
use augmetric::rng::stream;
use augmetric::FeatureDistribution;
use rand::Rng;

/// Random Gaussian with a well-conditioned full covariance.
pub fn distribution(dim: usize, seed: u64) -> FeatureDistribution {
    let mut r = stream(seed, 0);
    let a = DMatrix::from_fn(dim, dim, |_, _| r.random_range(-1.0..1.0));
    let cov = (&a * a.transpose()) / dim as f64 + DMatrix::identity(dim, dim) * 0.05;
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
    FeatureDistribution::new(mean, cov, 1000).expect("valid fixture")
}

pub fn noise_image(side: usize, seed: u64) -> GrayImage {
    let mut r = stream(seed, 1);
    GrayImage::from_fn(side, side, |_, _| r.random())
}

pub fn blob_mask(side: usize, cx: f64, cy: f64, radius: f64) -> BinaryMask {
    BinaryMask::from_fn(side, side, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dx * dx + dy * dy <= radius * radius
    })
}

/// Points on the log-normal curve at `n` log-spaced FIDs with a little jitter.
pub fn curve_points(n: usize, sem: f64, seed: u64) -> (Vec<AggregatedPoint>, Baseline) {
    let base = Baseline::new(0.5).expect("valid baseline");
    let mut r = stream(seed, 2);
    let pts = (0..n)
        .map(|i| {
            let x = 13.0 * 20f64.powf(i as f64 / (n - 1).max(1) as f64);
            let y = eval_model(ModelFamily::LogNormal, &[0.057, 4.552, 0.467], x, base).expect("valid model")
                + r.random_range(-sem..sem);
            AggregatedPoint::new(format!("p{i}"), x, y, sem, 30).expect("valid point")
        })
        .collect();
    (pts, base)
}
