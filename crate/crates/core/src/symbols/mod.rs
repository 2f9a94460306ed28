//! Coefficient fields, symbol assembly, constant-rank verification and the
//! pointwise kernel projector `P(x, λ)` and its companion `Q(x, λ)`.

pub mod catalog;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, rank_tolerance, sorted_svd};

pub use catalog::{ConstantCoefficients, ModulatedCoefficients, ScaledDivergence};

/// Space dimension `N`, field dimension `d`, equation dimension `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub space: usize,
    pub field: usize,
    pub equations: usize,
}

/// The coefficient matrices `A^i(x) ∈ R^{l×d}`, `i = 1..N`, of a first-order operator
/// `𝒜v = Σ A^i(x) ∂v/∂x_i`.
pub trait CoefficientField: Send + Sync {
    fn label(&self) -> String;
    fn dims(&self) -> Dims;
    /// `N` matrices of shape `l × d`.
    fn coefficients(&self, x: &[f64]) -> Vec<DMatrix<f64>>;
    /// Upper bound on the Lipschitz constant of each `A^i`.
    fn lipschitz_bound(&self) -> f64;
    fn is_constant(&self) -> bool {
        false
    }
}

fn checked_coefficients(coeffs: &dyn CoefficientField, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let dims = coeffs.dims();
    if x.len() != dims.space {
        return Err(Error::Config(format!(
            "point has dimension {}, operator `{}` expects {}",
            x.len(),
            coeffs.label(),
            dims.space
        )));
    }
    let mats = coeffs.coefficients(x);
    if mats.len() != dims.space || mats.iter().any(|m| m.shape() != (dims.equations, dims.field)) {
        return Err(Error::Config(format!(
            "operator `{}` returned coefficients of the wrong shape",
            coeffs.label()
        )));
    }
    Ok(mats)
}

fn combine(mats: &[DMatrix<f64>], lambda: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (m, &l) in mats.iter().zip(lambda) {
        if l != 0.0 {
            out += m * l;
        }
    }
    out
}

/// `𝔸(x, λ) = Σ_i A^i(x) λ_i`.
pub fn assemble_symbol(coeffs: &dyn CoefficientField, x: &[f64], lambda: &[f64]) -> Result<DMatrix<f64>> {
    let mats = checked_coefficients(coeffs, x)?;
    if lambda.len() != mats.len() {
        return Err(Error::Config(format!(
            "direction has dimension {}, expected {}",
            lambda.len(),
            mats.len()
        )));
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Usage("direction must be finite".into()));
    }
    Ok(combine(&mats, lambda))
}

/// Symbol with coefficients frozen at a point `x0`.
#[derive(Debug, Clone)]
pub struct FrozenSymbol {
    pub x0: Vec<f64>,
    pub rank: usize,
    matrices: Vec<DMatrix<f64>>,
}

impl FrozenSymbol {
    /// Freezes `coeffs` at `x0`; the rank is taken from the symbol at the first coordinate direction.
    pub fn new(coeffs: &dyn CoefficientField, x0: &[f64]) -> Result<Self> {
        let matrices = checked_coefficients(coeffs, x0)?;
        let mut e1 = vec![0.0; matrices.len()];
        e1[0] = 1.0;
        let rank = numerical_rank(&sorted_svd(&combine(&matrices, &e1)).singular);
        Ok(Self {
            x0: x0.to_vec(),
            rank,
            matrices,
        })
    }

    pub fn with_rank(coeffs: &dyn CoefficientField, x0: &[f64], rank: usize) -> Result<Self> {
        let mut s = Self::new(coeffs, x0)?;
        s.rank = rank;
        Ok(s)
    }

    pub fn dims(&self) -> Dims {
        Dims {
            space: self.matrices.len(),
            field: self.matrices[0].ncols(),
            equations: self.matrices[0].nrows(),
        }
    }

    pub fn matrix(&self, lambda: &[f64]) -> DMatrix<f64> {
        combine(&self.matrices, lambda)
    }

    pub fn coefficients(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn projector(&self, lambda: &[f64]) -> Result<DMatrix<f64>> {
        kernel_projector(&self.matrix(lambda), self.rank).map_err(|e| self.locate(e, lambda))
    }

    pub fn q_operator(&self, lambda: &[f64]) -> Result<DMatrix<f64>> {
        q_operator(&self.matrix(lambda), self.rank).map_err(|e| self.locate(e, lambda))
    }

    fn locate(&self, e: Error, lambda: &[f64]) -> Error {
        match e {
            Error::RankViolation { expected, found, .. } => Error::RankViolation {
                expected,
                found,
                x: self.x0.clone(),
                lambda: lambda.to_vec(),
            },
            other => other,
        }
    }
}

fn checked_svd(s: &DMatrix<f64>, r: usize) -> Result<crate::linalg::SortedSvd> {
    let svd = sorted_svd(s);
    let found = numerical_rank(&svd.singular);
    if found != r {
        return Err(Error::RankViolation {
            expected: r,
            found,
            x: Vec::new(),
            lambda: Vec::new(),
        });
    }
    Ok(svd)
}

/// Orthogonal projector onto `ker S` for a matrix of numerical rank `r`.
pub fn kernel_projector(s: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let svd = checked_svd(s, r)?;
    let d = s.ncols();
    let v = svd.right.columns(0, r);
    Ok(DMatrix::identity(d, d) - &v * v.transpose())
}

/// Moore-Penrose pseudo-inverse `S⁺` of a rank-`r` matrix: `S⁺S = I - P` and
/// `S⁺` vanishes on `(Range S)^⊥`.
pub fn q_operator(s: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let svd = checked_svd(s, r)?;
    let mut out = DMatrix::zeros(s.ncols(), s.nrows());
    for k in 0..r {
        let v = svd.right.column(k);
        let u = svd.left.column(k);
        out += (v * u.transpose()) / svd.singular[k];
    }
    Ok(out)
}

/// Outcome of a sampled constant-rank check.
#[derive(Debug, Clone)]
pub struct RankCertificate {
    /// Consensus (most frequent) rank over all samples.
    pub rank: usize,
    /// Smallest `σ_r / max(σ_{r+1}, σ_max·√ε)` over samples of consensus rank.
    pub min_gap: f64,
    pub gap_threshold: f64,
    pub sample_count: usize,
    pub passed: bool,
    /// First sample whose rank differs from the consensus: `(x, λ, rank)`.
    pub failure_witness: Option<(Vec<f64>, Vec<f64>, usize)>,
    /// A sample attaining the consensus rank, for contrast with the failure witness.
    pub consensus_witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Checks that `rank 𝔸(x, λ)` is the same for every sampled `x` and unit `λ`.
pub fn verify_constant_rank(
    coeffs: &dyn CoefficientField,
    x_samples: &[Vec<f64>],
    lambda_samples: &[Vec<f64>],
    gap_threshold: f64,
) -> Result<RankCertificate> {
    if x_samples.is_empty() || lambda_samples.is_empty() {
        return Err(Error::Usage("constant-rank check needs nonempty sample sets".into()));
    }
    let mut records = Vec::with_capacity(x_samples.len() * lambda_samples.len());
    for x in x_samples {
        let mats = checked_coefficients(coeffs, x)?;
        for lambda in lambda_samples {
            let svd = sorted_svd(&combine(&mats, lambda));
            let rank = numerical_rank(&svd.singular);
            let smax = svd.singular.first().copied().unwrap_or(0.0);
            let floor = (smax * rank_tolerance()).max(f64::MIN_POSITIVE);
            let gap = if rank == 0 {
                f64::INFINITY
            } else {
                let next = svd.singular.get(rank).copied().unwrap_or(0.0);
                svd.singular[rank - 1] / next.max(floor)
            };
            records.push((x, lambda, rank, gap));
        }
    }
    let max_rank = records.iter().map(|r| r.2).max().unwrap_or(0);
    let mut counts = vec![0usize; max_rank + 1];
    for r in &records {
        counts[r.2] += 1;
    }
    // ties resolve to the larger rank
    let consensus = (0..=max_rank).rev().max_by_key(|&k| counts[k]).unwrap_or(0);
    let failure = records
        .iter()
        .find(|r| r.2 != consensus)
        .map(|r| (r.0.clone(), r.1.clone(), r.2));
    let min_gap = records
        .iter()
        .filter(|r| r.2 == consensus)
        .map(|r| r.3)
        .fold(f64::INFINITY, f64::min);
    let consensus_witness = records
        .iter()
        .find(|r| r.2 == consensus)
        .map(|r| (r.0.clone(), r.1.clone()));
    Ok(RankCertificate {
        rank: consensus,
        min_gap,
        gap_threshold,
        sample_count: records.len(),
        passed: failure.is_none() && min_gap >= gap_threshold,
        failure_witness: failure,
        consensus_witness,
    })
}

/// Deterministic and random unit directions in `R^n`.
///
/// The deterministic part consists of the signed coordinate axes followed by
/// `fibonacci` Fibonacci-sphere points (uniform angles in 2-D, golden spiral in 3-D);
/// `random` Gaussian directions drawn from `seed` are appended.
pub fn sphere_samples(n: usize, fibonacci: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            out.push(e);
        }
    }
    match n {
        1 => {}
        2 => {
            for j in 0..fibonacci {
                let t = 2.0 * PI * (j as f64 + 0.5) / fibonacci as f64;
                out.push(vec![t.cos(), t.sin()]);
            }
        }
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            for j in 0..fibonacci {
                let z = 1.0 - 2.0 * (j as f64 + 0.5) / fibonacci as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * j as f64;
                out.push(vec![rho * phi.cos(), rho * phi.sin(), z]);
            }
        }
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0;
    while drawn < random {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(v.into_iter().map(|a| a / norm).collect());
            drawn += 1;
        }
    }
    out
}

/// Points of a uniform `per_axis^n` lattice on `(-½, ½)^n` plus `random` uniform points.
pub fn cell_samples(n: usize, per_axis: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = per_axis.pow(n as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut x = Vec::with_capacity(n);
        for _ in 0..n {
            x.push(-0.5 + (rem % per_axis) as f64 / per_axis as f64);
            rem /= per_axis;
        }
        out.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..random {
        out.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
    }
    out
}

/// Largest sampled `‖A^i(x) - A^i(y)‖_F / |x - y|` over consecutive sample pairs.
pub fn lipschitz_estimate(coeffs: &dyn CoefficientField, samples: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for pair in samples.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let dist = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist < 1e-12 {
            continue;
        }
        let ax = coeffs.coefficients(x);
        let ay = coeffs.coefficients(y);
        for (a, b) in ax.iter().zip(&ay) {
            worst = worst.max(crate::linalg::frobenius(&(a - b)) / dist);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn assemble_divergence_and_scaled() {
        let div = ConstantCoefficients::div2d();
        assert_eq!(assemble_symbol(&div, &[0.1, 0.2], &[0.0, 1.0]).unwrap(), row(&[0.0, 1.0]));
        let scaled = ScaledDivergence::constant(2.0).unwrap();
        assert_eq!(assemble_symbol(&scaled, &[0.3, 0.0], &[1.0, 0.0]).unwrap(), row(&[2.0, 0.0]));
        let zero = assemble_symbol(&ConstantCoefficients::elliptic2d(), &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 2));
    }

    #[test]
    fn assemble_rejects_wrong_dimensions() {
        let div = ConstantCoefficients::div2d();
        assert!(matches!(assemble_symbol(&div, &[0.0], &[1.0, 0.0]), Err(Error::Config(_))));
        assert!(matches!(assemble_symbol(&div, &[0.0, 0.0], &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn constant_rank_catalog() {
        let xs = cell_samples(2, 4, 4, 1);
        let ls = sphere_samples(2, 64, 64, 2);
        let c = verify_constant_rank(&ConstantCoefficients::div2d(), &xs, &ls, 1e3).unwrap();
        assert!(c.passed);
        assert_eq!(c.rank, 1);
        let c = verify_constant_rank(&ConstantCoefficients::scalar_curl2d(), &xs, &ls, 1e3).unwrap();
        assert!(c.passed && c.rank == 1);
        let c = verify_constant_rank(&ScaledDivergence::sine(0.5).unwrap(), &xs, &ls, 1e3).unwrap();
        assert!(c.passed && c.rank == 1);
        let c = verify_constant_rank(&ConstantCoefficients::elliptic2d(), &xs, &ls, 1e3).unwrap();
        assert!(c.passed && c.rank == 2);
    }

    #[test]
    fn diagonal_symbol_fails_with_witness() {
        let xs = vec![vec![0.0, 0.0]];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ls = vec![vec![1.0, 0.0], vec![s, s], vec![-s, s]];
        let c = verify_constant_rank(&ConstantCoefficients::diag_nonconstant_rank(), &xs, &ls, 1e3).unwrap();
        assert!(!c.passed);
        assert_eq!(c.rank, 2);
        let (_, lambda, rank) = c.failure_witness.unwrap();
        assert_eq!(lambda, vec![1.0, 0.0]);
        assert_eq!(rank, 1);
        // the default sampler includes the axes, so the failure is found there too
        let c = verify_constant_rank(
            &ConstantCoefficients::diag_nonconstant_rank(),
            &cell_samples(2, 2, 0, 0),
            &sphere_samples(2, 16, 16, 0),
            1e3,
        )
        .unwrap();
        assert!(!c.passed);
    }

    #[test]
    fn empty_samples_are_a_usage_error() {
        let div = ConstantCoefficients::div2d();
        assert!(matches!(
            verify_constant_rank(&div, &[], &[vec![1.0, 0.0]], 1.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn projector_examples() {
        let p = kernel_projector(&row(&[0.0, 1.0]), 1).unwrap();
        assert!(max_abs(&(p - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))) < 1e-15);
        let p = kernel_projector(&DMatrix::identity(3, 3), 3).unwrap();
        assert!(max_abs(&p) < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = kernel_projector(&row(&[s, s]), 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(max_abs(&(p - expected)) < 1e-15);
    }

    #[test]
    fn projector_rank_mismatch() {
        assert!(matches!(kernel_projector(&row(&[0.0, 1.0]), 0), Err(Error::RankViolation { .. })));
        assert!(matches!(q_operator(&row(&[0.0, 0.0]), 1), Err(Error::RankViolation { .. })));
    }

    #[test]
    fn q_operator_examples() {
        let q = q_operator(&row(&[0.0, 2.0]), 1).unwrap();
        assert!(max_abs(&(q - DMatrix::from_column_slice(2, 1, &[0.0, 0.5]))) < 1e-15);
        let q = q_operator(&DMatrix::identity(2, 2), 2).unwrap();
        assert!(max_abs(&(q - DMatrix::identity(2, 2))) < 1e-15);
        let s = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0]);
        let diff = q_operator(&(&s * 2.0), 2).unwrap() - q_operator(&s, 2).unwrap() * 0.5;
        assert!(max_abs(&diff) < 1e-14);
    }

    #[test]
    fn frozen_symbol_detects_rank_from_first_axis() {
        let f = FrozenSymbol::new(&ConstantCoefficients::div2d(), &[0.0, 0.0]).unwrap();
        assert_eq!(f.rank, 1);
        assert_eq!(f.dims().field, 2);
        let f = FrozenSymbol::new(&ConstantCoefficients::diag_nonconstant_rank(), &[0.0, 0.0]).unwrap();
        assert!(matches!(f.projector(&[1.0, 1.0]), Err(Error::RankViolation { x, .. }) if x == vec![0.0, 0.0]));
    }

    #[test]
    fn lipschitz_estimates_stay_below_bound() {
        let xs = cell_samples(2, 16, 64, 9);
        for op in [ScaledDivergence::sine(0.5).unwrap(), ScaledDivergence::sine(-0.3).unwrap()] {
            let est = lipschitz_estimate(&op, &xs);
            assert!(est <= op.lipschitz_bound() * (1.0 + 1e-9), "{est}");
        }
        assert_eq!(lipschitz_estimate(&ConstantCoefficients::div2d(), &xs), 0.0);
    }

    #[test]
    fn registry_resolves_catalog() {
        let reg = catalog::registry();
        for name in ["div2d", "scalar-curl2d", "scaled-div2d", "scaled-div2d(0.25)", "elliptic2d", "diag-nonconstant-rank", "const-div2d(2)"] {
            assert!(reg.build(name).is_ok(), "{name}");
        }
        assert!(reg.build("div3d").is_err());
        assert!(reg.build("scaled-div2d(1.5)").is_err());
    }
}
