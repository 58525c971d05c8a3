//! Image embeddings, feature files and Gaussian summaries of feature sets.
//!
//! The built-in reference embedder is a fixed random projection of a 32×32
//! area-pooled thumbnail. It stands in for a pretrained network so distances
//! can be computed without downloading weights; features computed elsewhere
//! (for example 2048-d Inception pool features) can be loaded from a feature
//! file instead.
//!
//! Feature file layout, little-endian:
//!
//! ```text
//! b"FEAT"  u16 version = 1  u32 count  u32 dim  count×dim f32 (row-major)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::augment::DatasetManifest;
use crate::error::{Error, Result};
use crate::frechet::FeatureDistribution;
use crate::imgcore::{pnm, GrayImage};
use crate::rng;

pub const THUMB_SIDE: usize = 32;
pub const THUMB_LEN: usize = THUMB_SIDE * THUMB_SIDE;

const FEAT_MAGIC: &[u8; 4] = b"FEAT";
const FEAT_VERSION: u16 = 1;
const FEAT_HEADER_LEN: usize = 4 + 2 + 4 + 4;

const EMBEDDER_TAG: u64 = 0x454d_4245_4444_4552;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    rows: Vec<Vec<f32>>,
    pub source_id: String,
}

impl FeatureSet {
    pub fn new(dim: usize, rows: Vec<Vec<f32>>, source_id: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("feature dimension must be positive".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::Argument(format!(
                "feature row {i} has length {}, expected {dim}",
                r.len()
            )));
        }
        Ok(Self {
            dim,
            rows,
            source_id: source_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f32>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderSpec {
    /// Seeded random projection of the pooled thumbnail.
    Reference { dim: usize, seed: u64 },
    /// Features computed elsewhere and stored in a feature file.
    External { path: PathBuf, dim: usize },
}

impl EmbedderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EmbedderSpec::Reference { dim, .. } | EmbedderSpec::External { dim, .. } => *dim,
        }
    }
}

/// Area-weighted overlap of output cell `i` of `out` cells with the `n` input samples.
fn pooling_weights(n: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / out as f64;
    (0..out)
        .map(|i| {
            let (a, b) = (i as f64 * scale, (i + 1) as f64 * scale);
            let first = a.floor() as usize;
            let last = (b.ceil() as usize).min(n);
            (first..last)
                .filter_map(|j| {
                    let overlap = (b.min((j + 1) as f64) - a.max(j as f64)) / scale;
                    (overlap > 0.0).then_some((j, overlap))
                })
                .collect()
        })
        .collect()
}

/// Pools an image to 32×32 by area-weighted means and scales intensities to [0, 1].
pub fn thumbnail(img: &GrayImage) -> Result<Vec<f64>> {
    if img.is_empty() {
        return Err(Error::Argument("cannot embed a zero-area image".into()));
    }
    let (w, h) = img.dims();
    let wx = pooling_weights(w, THUMB_SIDE);
    let wy = pooling_weights(h, THUMB_SIDE);
    let mut out = Vec::with_capacity(THUMB_LEN);
    for row_w in &wy {
        for col_w in &wx {
            let mut acc = 0.0;
            for &(y, ay) in row_w {
                for &(x, ax) in col_w {
                    acc += ay * ax * f64::from(img.get(x, y));
                }
            }
            out.push(acc / 255.0);
        }
    }
    Ok(out)
}

/// Reference embedder: `dim × 1024` projection with N(0, 1/1024) entries.
#[derive(Debug, Clone)]
pub struct ReferenceEmbedder {
    projection: DMatrix<f64>,
}

impl ReferenceEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Argument(format!("embedder dim must be >= 2, got {dim}")));
        }
        let mut rng = rng::tagged_stream(seed, EMBEDDER_TAG, 0);
        let scale = 1.0 / (THUMB_LEN as f64).sqrt();
        // row-major draw order so the matrix is independent of storage layout
        let mut entries = Vec::with_capacity(dim * THUMB_LEN);
        for _ in 0..dim * THUMB_LEN {
            let z: f64 = StandardNormal.sample(&mut rng);
            entries.push(z * scale);
        }
        Ok(Self {
            projection: DMatrix::from_row_slice(dim, THUMB_LEN, &entries),
        })
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn embed(&self, img: &GrayImage) -> Result<Vec<f32>> {
        let thumb = DVector::from_vec(thumbnail(img)?);
        Ok((&self.projection * thumb).iter().map(|&v| v as f32).collect())
    }
}

pub fn embedder_for(spec: &EmbedderSpec) -> Result<ReferenceEmbedder> {
    match spec {
        EmbedderSpec::Reference { dim, seed } => ReferenceEmbedder::new(*dim, *seed),
        EmbedderSpec::External { path, .. } => Err(Error::Argument(format!(
            "external features cannot be computed; load {} instead",
            path.display()
        ))),
    }
}

/// Embeds a single image. Builds the projection each call; prefer
/// [`ReferenceEmbedder`] when embedding many images.
pub fn embed(img: &GrayImage, spec: &EmbedderSpec) -> Result<Vec<f32>> {
    embedder_for(spec)?.embed(img)
}

pub fn embed_images(images: &[GrayImage], embedder: &ReferenceEmbedder, source_id: &str) -> Result<FeatureSet> {
    let rows = images
        .par_iter()
        .map(|img| embedder.embed(img))
        .collect::<Result<Vec<_>>>()?;
    FeatureSet::new(embedder.dim(), rows, source_id)
}

/// One feature row per manifest entry, in manifest order.
pub fn embed_dataset(manifest: &DatasetManifest, spec: &EmbedderSpec) -> Result<FeatureSet> {
    if let EmbedderSpec::External { path, dim } = spec {
        let fs = load_features(path)?;
        if fs.dim() != *dim {
            return Err(Error::Format(format!(
                "{} holds {}-d features, expected {dim}",
                path.display(),
                fs.dim()
            )));
        }
        return Ok(fs);
    }
    let embedder = embedder_for(spec)?;
    let rows = manifest
        .entries()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let path = manifest.resolve(&e.scan);
            pnm::read_pgm(&path)
                .and_then(|img| embedder.embed(&img))
                .map_err(|err| Error::dataset(format!("entry {i} ({})", path.display()), err))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureSet::new(embedder.dim(), rows, manifest.id.clone())
}

pub fn encode_features(fs: &FeatureSet) -> Result<Vec<u8>> {
    let count = u32::try_from(fs.len()).map_err(|_| Error::Argument("too many rows".into()))?;
    let dim = u32::try_from(fs.dim()).map_err(|_| Error::Argument("dimension too large".into()))?;
    let mut out = Vec::with_capacity(FEAT_HEADER_LEN + 4 * fs.len() * fs.dim());
    out.extend_from_slice(FEAT_MAGIC);
    out.extend_from_slice(&FEAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for row in fs.rows() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8], source_id: &str) -> Result<FeatureSet> {
    if bytes.len() < FEAT_HEADER_LEN {
        return Err(Error::Format("feature file header truncated".into()));
    }
    if &bytes[..4] != FEAT_MAGIC {
        return Err(Error::Format("bad feature file magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FEAT_VERSION {
        return Err(Error::Format(format!("unsupported feature file version {version}")));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (count, dim) = (word(6), word(10));
    if dim == 0 {
        return Err(Error::Format("feature dimension is zero".into()));
    }
    let payload = &bytes[FEAT_HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("feature file header overflows".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "feature payload is {} bytes, header implies {expected} ({count}×{dim} f32)",
            payload.len()
        )));
    }
    let rows = payload
        .chunks_exact(4 * dim)
        .map(|row| {
            row.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    FeatureSet::new(dim, rows, source_id)
}

pub fn save_features(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(fs)?).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_features(&bytes, &id)
}

/// True if the file starts with the feature-file magic.
pub fn is_feature_file(path: impl AsRef<Path>) -> bool {
    use std::io::Read;
    let mut magic = [0u8; 4];
    fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .is_ok()
        && &magic == FEAT_MAGIC
}

/// Sample mean and unbiased (n−1) covariance, in f64.
pub fn fit_gaussian(fs: &FeatureSet) -> Result<FeatureDistribution> {
    let n = fs.len();
    if n < 2 {
        return Err(Error::SampleSize {
            what: format!("covariance of `{}`", fs.source_id),
            needed: 2,
            got: n,
        });
    }
    let d = fs.dim();
    let x = DMatrix::from_fn(n, d, |i, j| f64::from(fs.rows()[i][j]));
    let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.sum() / n as f64));
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    // gemm does not guarantee bitwise symmetry
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    FeatureDistribution::new(mean, cov, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thumbnail_at_native_size_scales_pixels() {
        let img = GrayImage::from_fn(32, 32, |x, y| ((x * 7 + y * 3) % 256) as u8);
        let t = thumbnail(&img).unwrap();
        for (a, &b) in t.iter().zip(img.data()) {
            assert!((a - f64::from(b) / 255.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pooling_is_area_weighted() {
        // 64 → 32 averages pairs; 48 → 32 mixes 1.5 samples per cell
        let w = pooling_weights(64, 32);
        assert_eq!(w[3], vec![(6, 0.5), (7, 0.5)]);
        let w = pooling_weights(48, 32);
        let total: f64 = w[1].iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(w[1].len(), 2);
        // upsampling keeps whole-sample weights
        let w = pooling_weights(8, 32);
        assert_eq!(w[5], vec![(1, 1.0)]);
    }

    #[test]
    fn constant_image_thumbnail() {
        let t = thumbnail(&GrayImage::filled(45, 17, 51)).unwrap();
        assert!(t.iter().all(|&v| (v - 0.2).abs() < 1e-12));
    }

    #[test]
    fn zero_area_rejected() {
        let img = GrayImage::new(0, 5, vec![]).unwrap();
        assert!(thumbnail(&img).is_err());
    }

    #[test]
    fn embedding_is_deterministic_and_linear() {
        let spec = EmbedderSpec::Reference { dim: 8, seed: 3 };
        let img = GrayImage::from_fn(40, 40, |x, y| ((x ^ y) * 5 % 256) as u8);
        assert_eq!(embed(&img, &spec).unwrap(), embed(&img, &spec).unwrap());
        let zero = embed(&GrayImage::filled(40, 40, 0), &spec).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_matches_direct_product() {
        let emb = ReferenceEmbedder::new(4, 11).unwrap();
        let img = GrayImage::from_fn(32, 32, |x, y| ((x * 13 + y * 29) % 256) as u8);
        let got = emb.embed(&img).unwrap();
        let p = emb.projection();
        for (r, &g) in got.iter().enumerate() {
            let direct: f64 = (0..THUMB_LEN)
                .map(|k| p[(r, k)] * f64::from(img.data()[k]) / 255.0)
                .sum();
            assert!((f64::from(g) - direct).abs() <= 1e-6 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn external_spec_cannot_embed() {
        let spec = EmbedderSpec::External {
            path: "x.feat".into(),
            dim: 2048,
        };
        assert!(embed(&GrayImage::filled(2, 2, 0), &spec).is_err());
        assert!(ReferenceEmbedder::new(1, 0).is_err());
    }

    #[test]
    fn header_contract_and_errors() {
        let fs = FeatureSet::new(2048, vec![vec![0.5; 2048]; 3], "x").unwrap();
        let bytes = encode_features(&fs).unwrap();
        assert_eq!(&bytes[..6], b"FEAT\x01\x00");
        assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2048u32.to_le_bytes());
        let back = decode_features(&bytes, "x").unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.dim(), 2048);

        assert!(decode_features(&bytes[..bytes.len() - 1], "x").is_err());
        let mut bad = bytes.clone();
        bad[0] = b'G';
        assert!(decode_features(&bad, "x").is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(decode_features(&bad, "x").is_err());
        assert!(decode_features(b"FEAT", "x").is_err());
    }

    #[test]
    fn gaussian_by_hand() {
        let fs = FeatureSet::new(2, vec![vec![0.0, 0.0], vec![2.0, 2.0]], "x").unwrap();
        let g = fit_gaussian(&fs).unwrap();
        assert_eq!(g.mean().as_slice(), &[1.0, 1.0]);
        assert_eq!(g.cov().as_slice(), &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(g.n(), 2);
    }

    #[test]
    fn identical_rows_zero_covariance() {
        let fs = FeatureSet::new(3, vec![vec![1.0, -2.0, 4.0]; 5], "x").unwrap();
        let g = fit_gaussian(&fs).unwrap();
        assert!(g.cov().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_rejected() {
        let fs = FeatureSet::new(2, vec![vec![1.0, 2.0]], "x").unwrap();
        assert!(matches!(fit_gaussian(&fs), Err(Error::SampleSize { .. })));
    }

    proptest! {
        #[test]
        fn feature_file_round_trip(rows in proptest::collection::vec(proptest::collection::vec(any::<f32>(), 3), 0..6)) {
            let fs = FeatureSet::new(3, rows, "p").unwrap();
            let back = decode_features(&encode_features(&fs).unwrap(), "p").unwrap();
            // compare bit patterns so NaN payloads count
            let bits = |f: &FeatureSet| f.rows().iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&fs));
            prop_assert_eq!(back.len(), fs.len());
        }

        #[test]
        fn gaussian_is_permutation_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f32..10.0, 3), 2..12),
            rot in 0usize..12,
        ) {
            let a = fit_gaussian(&FeatureSet::new(3, rows.clone(), "a").unwrap()).unwrap();
            let mut permuted = rows.clone();
            let k = rot % permuted.len();
            permuted.rotate_left(k);
            permuted.reverse();
            let b = fit_gaussian(&FeatureSet::new(3, permuted, "b").unwrap()).unwrap();
            prop_assert!((a.mean() - b.mean()).amax() < 1e-12);
            prop_assert!((a.cov() - b.cov()).amax() < 1e-10);
        }
    }
}
