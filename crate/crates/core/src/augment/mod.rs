//! Standard augmentations (flip, blur, additive noise) and augmented dataset construction.

mod manifest;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::{pnm, BinaryMask, GrayImage, PackedImage, Raster};
use crate::rng;

pub use manifest::{DatasetManifest, ManifestEntry, MANIFEST_HEADER};
pub use spec::{AugmentationKind, AugmentationSpec};

/// Types that can be mirrored left to right.
pub trait HorizontalFlip {
    fn hflip(&self) -> Self;
}

impl<T: Copy> HorizontalFlip for Raster<T> {
    fn hflip(&self) -> Self {
        Raster::hflip(self)
    }
}

impl HorizontalFlip for PackedImage {
    fn hflip(&self) -> Self {
        PackedImage::hflip(self)
    }
}

pub fn hflip<T: HorizontalFlip>(img: &T) -> T {
    img.hflip()
}

/// Normalized discrete Gaussian of radius ⌈3σ⌉. σ = 0 gives the identity kernel.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Argument(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0]);
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    Ok(k)
}

/// Mirror index into `0..n`, repeating the edge sample (`d c b a | a b c d | d c b a`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

fn convolve_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[reflect(x as isize + k as isize - r, width)])
                .sum();
        }
    }
    out
}

fn convolve_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[reflect(y as isize + k as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Separable Gaussian blur with reflected borders, rounded back to 8 bits.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma)?;
    if kernel.len() == 1 || img.is_empty() {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let blurred = convolve_cols(&convolve_rows(&src, w, h, &kernel), w, h, &kernel);
    GrayImage::new(w, h, blurred.into_iter().map(to_byte).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOutcome {
    pub image: GrayImage,
    pub scale: f64,
    /// The noisy image was flat, so it was mapped to all zeros.
    pub degenerate: bool,
}

/// Adds `scale × N(0,1)` per pixel, with one `scale` drawn uniformly from
/// `[scale_min, scale_max]`, then min-max rescales the result onto `[0, 255]`.
pub fn add_noise<R: Rng + ?Sized>(
    img: &GrayImage,
    scale_min: f64,
    scale_max: f64,
    rng: &mut R,
) -> Result<NoiseOutcome> {
    AugmentationKind::AdditiveNoise {
        scale_min,
        scale_max,
    }
    .validate()?;
    let scale = rng.random_range(scale_min..=scale_max);
    let noisy: Vec<f64> = img
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            f64::from(v) + scale * z
        })
        .collect();
    let (lo, hi) = noisy
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (w, h) = img.dims();
    if !(hi > lo) {
        log::warn!("noise renormalization is degenerate (flat image); writing zeros");
        return Ok(NoiseOutcome {
            image: GrayImage::filled(w, h, 0),
            scale,
            degenerate: true,
        });
    }
    let image = GrayImage::new(
        w,
        h,
        noisy
            .into_iter()
            .map(|v| to_byte((v - lo) / (hi - lo) * 255.0))
            .collect(),
    )?;
    Ok(NoiseOutcome {
        image,
        scale,
        degenerate: false,
    })
}

/// Per-image parameters actually drawn for one augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppliedParams {
    Flip,
    Blur { sigma: f64 },
    Noise { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub scan: GrayImage,
    pub mask: BinaryMask,
    pub params: AppliedParams,
}

/// Augments image number `index` of a dataset. The random stream depends only on
/// `(spec.seed, index)`.
pub fn augment_pair(
    spec: &AugmentationSpec,
    index: usize,
    scan: &GrayImage,
    mask: &BinaryMask,
) -> Result<Augmented> {
    scan.ensure_same_dims(mask)?;
    let mut rng = rng::stream(spec.seed, index as u64);
    Ok(match spec.kind {
        AugmentationKind::HorizontalFlip => Augmented {
            scan: scan.hflip(),
            mask: mask.hflip(),
            params: AppliedParams::Flip,
        },
        AugmentationKind::GaussianBlur {
            sigma_min,
            sigma_max,
        } => {
            let sigma = rng.random_range(sigma_min..=sigma_max);
            Augmented {
                scan: gaussian_blur(scan, sigma)?,
                mask: mask.clone(),
                params: AppliedParams::Blur { sigma },
            }
        }
        AugmentationKind::AdditiveNoise {
            scale_min,
            scale_max,
        } => {
            let out = add_noise(scan, scale_min, scale_max, &mut rng)?;
            Augmented {
                scan: out.image,
                mask: mask.clone(),
                params: AppliedParams::Noise { scale: out.scale },
            }
        }
    })
}

pub const MANIFEST_FILE: &str = "manifest.txt";

fn scan_name(i: usize) -> PathBuf {
    format!("scan_{i:05}.pgm").into()
}

fn mask_name(i: usize) -> PathBuf {
    format!("mask_{i:05}.pgm").into()
}

/// Writes one augmented copy of every entry in `src` into `out_dir`, plus
/// `manifest.txt` recording the spec. Returns the new manifest.
pub fn build_augmented_dataset(
    src: &DatasetManifest,
    spec: &AugmentationSpec,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    build_augmented_dataset_with_params(src, spec, out_dir).map(|(m, _)| m)
}

/// Like [`build_augmented_dataset`], also returning the per-image parameters.
pub fn build_augmented_dataset_with_params(
    src: &DatasetManifest,
    spec: &AugmentationSpec,
    out_dir: impl AsRef<Path>,
) -> Result<(DatasetManifest, Vec<AppliedParams>)> {
    spec.kind.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let results: Vec<Result<(ManifestEntry, AppliedParams)>> = src
        .entries()
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let scan_path = src.resolve(&entry.scan);
            let mask_path = src.resolve(&entry.mask);
            let named = |e: Error| Error::dataset(format!("entry {i} ({})", entry.scan.display()), e);
            let scan = pnm::read_pgm(&scan_path).map_err(named)?;
            let mask = pnm::read_mask(&mask_path).map_err(named)?;
            let out = augment_pair(spec, i, &scan, &mask).map_err(named)?;
            let new = ManifestEntry {
                scan: scan_name(i),
                mask: mask_name(i),
            };
            pnm::write_pgm(out_dir.join(&new.scan), &out.scan).map_err(named)?;
            pnm::write_mask(out_dir.join(&new.mask), &out.mask).map_err(named)?;
            Ok((new, out.params))
        })
        .collect();

    let mut entries = Vec::with_capacity(results.len());
    let mut params = Vec::with_capacity(results.len());
    for r in results {
        let (e, p) = r?;
        entries.push(e);
        params.push(p);
    }
    let manifest = DatasetManifest::new(
        format!("{}+{}", src.id, spec.kind.tag()),
        out_dir,
        entries,
        Some(*spec),
    )?;
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok((manifest, params))
}
