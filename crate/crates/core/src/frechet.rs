//! Fréchet distance between Gaussian summaries of two feature sets (FID).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance for covariance inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues below `-EIGEN_CLAMP_REL × λ_max` are counted as clamped mass.
pub const EIGEN_CLAMP_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDistribution {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    n: usize,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Argument(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("matrix has non-finite entries".into()));
    }
    let scale = m.amax();
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Argument(format!(
            "matrix is not symmetric: max |S - Sᵀ| = {asym:e} (scale {scale:e})"
        )));
    }
    Ok(())
}

impl FeatureDistribution {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleSize {
                what: "feature distribution".into(),
                needed: 2,
                got: n,
            });
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Shape {
                left: (mean.len(), 1),
                right: (cov.nrows(), cov.ncols()),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("mean has non-finite entries".into()));
        }
        check_symmetric(&cov)?;
        Ok(Self { mean, cov, n })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone)]
pub struct PsdSqrt {
    pub root: DMatrix<f64>,
    /// Sum of |λ| over eigenvalues below the clamp threshold.
    pub clamped_mass: f64,
    pub clamped_count: usize,
}

/// Square root of a symmetric positive semidefinite matrix via eigendecomposition.
///
/// The input is symmetrized first; negative eigenvalues are set to zero and the
/// ones below `-1e-10·λ_max` are reported in `clamped_mass`.
pub fn sqrt_psd(s: &DMatrix<f64>) -> Result<PsdSqrt> {
    check_symmetric(s)?;
    if s.nrows() == 0 {
        return Ok(PsdSqrt {
            root: s.clone(),
            clamped_mass: 0.0,
            clamped_count: 0,
        });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let floor = -EIGEN_CLAMP_REL * lambda_max;
    let mut clamped_mass = 0.0;
    let mut clamped_count = 0;
    let roots = eig.eigenvalues.map(|l| {
        if l < floor {
            clamped_mass += -l;
            clamped_count += 1;
        }
        l.max(0.0).sqrt()
    });
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * roots[j]);
    let mut root = &scaled * v.transpose();
    symmetrize(&mut root);
    Ok(PsdSqrt {
        root,
        clamped_mass,
        clamped_count,
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidResult {
    pub value: f64,
    /// |μ_r − μ_s|²
    pub mean_term: f64,
    /// Tr(Σ_r + Σ_s − 2(Σ_r Σ_s)^½), floored at zero.
    pub trace_term: f64,
    pub clamped_negative_eigenvalue_mass: f64,
}

/// FID between two Gaussians. The cross term is computed as
/// Tr((Σ_r^½ Σ_s Σ_r^½)^½), which equals Tr((Σ_r Σ_s)^½) for PSD inputs and
/// only needs square roots of symmetric matrices.
pub fn frechet_distance(r: &FeatureDistribution, s: &FeatureDistribution) -> Result<FidResult> {
    if r.dim() != s.dim() {
        return Err(Error::Shape {
            left: (r.dim(), r.dim()),
            right: (s.dim(), s.dim()),
        });
    }
    let mean_term = (r.mean() - s.mean()).norm_squared();
    let root_r = sqrt_psd(r.cov())?;
    let mut inner = &root_r.root * s.cov() * &root_r.root;
    symmetrize(&mut inner);
    let cross = sqrt_psd(&inner)?;
    let raw_trace = r.cov().trace() + s.cov().trace() - 2.0 * cross.root.trace();
    let trace_term = raw_trace.max(0.0);
    Ok(FidResult {
        value: mean_term + trace_term,
        mean_term,
        trace_term,
        clamped_negative_eigenvalue_mass: root_r.clamped_mass + cross.clamped_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(mean: &[f64], cov: DMatrix<f64>) -> FeatureDistribution {
        FeatureDistribution::new(DVector::from_column_slice(mean), cov, 10).unwrap()
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((sqrt_psd(&id).unwrap().root - &id).amax() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrt_psd(&d).unwrap();
        assert!((r.root - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))).amax() < 1e-14);
        assert_eq!(r.clamped_count, 0);
    }

    #[test]
    fn negative_eigenvalues_are_reported() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5, -1e-14]));
        let r = sqrt_psd(&m).unwrap();
        assert_eq!(r.clamped_count, 1);
        assert!((r.clamped_mass - 0.5).abs() < 1e-15);
        assert!((r.root[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(r.root[(1, 1)], 0.0);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(sqrt_psd(&m), Err(Error::Argument(_))));
        assert!(FeatureDistribution::new(DVector::zeros(2), m, 5).is_err());
    }

    #[test]
    fn one_dimensional_closed_form() {
        let a = dist(&[0.0], DMatrix::from_element(1, 1, 1.0));
        let b = dist(&[2.0], DMatrix::from_element(1, 1, 1.0));
        let f = frechet_distance(&a, &b).unwrap();
        assert!((f.value - 4.0).abs() < 1e-12);
        assert!((f.mean_term - 4.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let a = dist(&[0.0], DMatrix::from_element(1, 1, 1.0));
        let b = dist(&[0.0, 0.0], DMatrix::identity(2, 2));
        assert!(matches!(frechet_distance(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn rank_deficient_self_distance() {
        // rank one covariance from two samples
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        let a = dist(&[1.0, 1.0], cov);
        assert!(frechet_distance(&a, &a).unwrap().value < 1e-6);
    }

    fn spd(dim: usize, seed: u64) -> DMatrix<f64> {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 0);
        let g = DMatrix::from_fn(dim, dim + 3, |_, _| rng.random_range(-1.0..1.0));
        let mut m = &g * g.transpose() / dim as f64;
        symmetrize(&mut m);
        m
    }

    proptest! {
        #[test]
        fn symmetric_in_arguments(dim in 1usize..8, s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = dist(&vec![0.3; dim], spd(dim, s1));
            let b = dist(&vec![-0.1; dim], spd(dim, s2));
            let ab = frechet_distance(&a, &b).unwrap().value;
            let ba = frechet_distance(&b, &a).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-8 * ab.abs().max(1e-12));
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn equal_covariances_leave_mean_term(dim in 1usize..8, seed in any::<u64>(), shift in -3.0f64..3.0) {
            let cov = spd(dim, seed);
            let a = dist(&vec![0.0; dim], cov.clone());
            let b = dist(&vec![shift; dim], cov);
            let f = frechet_distance(&a, &b).unwrap();
            prop_assert!((f.value - shift * shift * dim as f64).abs() < 1e-8 * (1.0 + f.value));
        }

        #[test]
        fn permutation_invariant(dim in 2usize..7, s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..6) {
            let (ca, cb) = (spd(dim, s1), spd(dim, s2));
            let ma: Vec<f64> = (0..dim).map(|i| i as f64 * 0.1).collect();
            let mb: Vec<f64> = (0..dim).map(|i| 1.0 - i as f64 * 0.2).collect();
            let perm: Vec<usize> = (0..dim).map(|i| (i + k) % dim).collect();
            let pm = |m: &[f64]| perm.iter().map(|&p| m[p]).collect::<Vec<_>>();
            let pc = |c: &DMatrix<f64>| DMatrix::from_fn(dim, dim, |i, j| c[(perm[i], perm[j])]);
            let f1 = frechet_distance(&dist(&ma, ca.clone()), &dist(&mb, cb.clone())).unwrap().value;
            let f2 = frechet_distance(&dist(&pm(&ma), pc(&ca)), &dist(&pm(&mb), pc(&cb))).unwrap().value;
            prop_assert!((f1 - f2).abs() < 1e-9 * (1.0 + f1));
        }
    }
}
