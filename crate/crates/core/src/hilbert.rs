//! Finite-dimensional inner-product machinery.
//!
//! A [`MetricSpace`] is an `N`-dimensional ambient coefficient space together
//! with a basis `B = {φₙ}` (the columns of the basis-change matrix `S`) that is
//! *declared* orthonormal. That declaration fixes the inner product uniquely:
//! `⟨ψ, φ⟩₊ = ψ† η φ` with metric `η = (S S†)⁻¹`.

use std::sync::Arc;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Header, MatrixDoc};
use crate::linalg::{self, CMat, CVec, C64};
use crate::sampling;

/// Which coefficient system a [`StateVector`] is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    /// Coefficients `aₙ` in the eigenbasis `B`.
    Eigen,
    /// Coefficients in the orthonormal ambient frame.
    Ambient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    coeffs: CVec,
    basis: BasisTag,
}

impl StateVector {
    pub fn new(coeffs: CVec, basis: BasisTag) -> Result<Self> {
        if !coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("state vector has non-finite entries".into()));
        }
        Ok(Self { coeffs, basis })
    }

    pub fn ambient(coeffs: CVec) -> Result<Self> {
        Self::new(coeffs, BasisTag::Ambient)
    }

    pub fn eigen(coeffs: CVec) -> Result<Self> {
        Self::new(coeffs, BasisTag::Eigen)
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// The role a space plays in the equivalence construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceRole {
    /// The PT-symmetric Hilbert space with `⟨·,·⟩₊`.
    Physical,
    /// Truncated `l₂`.
    Sequence,
    /// Truncated `L²(ℝ)` in a fixed orthonormal basis.
    Conventional,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    /// Largest accepted condition number of `S`.
    pub max_condition: f64,
    /// Invariant tolerance before scaling by `cond(S)`.
    pub tolerance: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            max_condition: 1e12,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    role: SpaceRole,
    metric: CMat,
    basis_change: CMat,
    basis_inverse: CMat,
    condition: f64,
}

/// Measured violations of the [`MetricSpace`] invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricInvariants {
    pub hermitian_violation: f64,
    pub min_eigenvalue: f64,
    /// `max |S†ηS − I|`
    pub gram_deviation: f64,
    /// `max |η S S† − I|`
    pub inverse_deviation: f64,
    pub condition: f64,
}

impl MetricInvariants {
    pub fn holds(&self, tolerance: f64) -> bool {
        let tol = tolerance * self.condition.max(1.0);
        self.hermitian_violation <= tol
            && self.min_eigenvalue > 0.0
            && self.gram_deviation <= tol
            && self.inverse_deviation <= tol * self.condition.max(1.0)
    }
}

/// Builds the space in which the columns of `s` are orthonormal.
pub fn build_metric(s: &CMat) -> Result<MetricSpace> {
    MetricSpace::from_basis(s, SpaceRole::Physical, &MetricConfig::default())
}

impl MetricSpace {
    pub fn from_basis(s: &CMat, role: SpaceRole, config: &MetricConfig) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::DimensionMismatch {
                expected: s.nrows(),
                found: s.ncols(),
            });
        }
        if s.nrows() == 0 {
            return Err(Error::InvalidInput("basis-change matrix is empty".into()));
        }
        let condition = linalg::condition_number(s);
        if !condition.is_finite() || condition > config.max_condition {
            return Err(Error::IllConditioned {
                cond: condition,
                bound: config.max_condition,
            });
        }
        let basis_inverse = linalg::inverse(s).map_err(|_| Error::IllConditioned {
            cond: condition,
            bound: config.max_condition,
        })?;
        // η = (S S†)⁻¹ = S⁻† S⁻¹
        let metric = linalg::hermitian_part(&(basis_inverse.adjoint() * &basis_inverse));
        let space = Self {
            role,
            metric,
            basis_change: s.clone(),
            basis_inverse,
            condition,
        };
        space.check(config)?;
        Ok(space)
    }

    /// The standard coefficient space: `S = η = I`.
    pub fn euclidean(dim: usize, role: SpaceRole) -> Self {
        Self {
            role,
            metric: CMat::identity(dim, dim),
            basis_change: CMat::identity(dim, dim),
            basis_inverse: CMat::identity(dim, dim),
            condition: 1.0,
        }
    }

    /// Reassembles a space from stored parts, re-validating every invariant.
    pub fn from_parts(role: SpaceRole, metric: CMat, basis_change: CMat, config: &MetricConfig) -> Result<Self> {
        let dim = basis_change.nrows();
        if !basis_change.is_square() || metric.nrows() != dim || metric.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: metric.nrows(),
            });
        }
        if !linalg::is_finite(&metric) {
            return Err(Error::InvalidInput("metric has non-finite entries".into()));
        }
        let rebuilt = Self::from_basis(&basis_change, role, config)?;
        let scale = linalg::max_abs(&rebuilt.metric).max(1.0);
        let diff = linalg::max_abs(&(&metric - &rebuilt.metric)) / scale;
        let tol = config.tolerance * rebuilt.condition.powi(2).max(1.0);
        if diff > tol {
            return Err(Error::InvalidInput(format!(
                "stored metric disagrees with (S S†)⁻¹ by {diff:.3e} (tolerance {tol:.3e})"
            )));
        }
        Ok(Self { metric, ..rebuilt })
    }

    pub fn role(&self) -> SpaceRole {
        self.role
    }

    pub fn with_role(mut self, role: SpaceRole) -> Self {
        self.role = role;
        self
    }

    pub fn dim(&self) -> usize {
        self.basis_change.nrows()
    }

    pub fn metric(&self) -> &CMat {
        &self.metric
    }

    pub fn basis_change(&self) -> &CMat {
        &self.basis_change
    }

    pub fn basis_inverse(&self) -> &CMat {
        &self.basis_inverse
    }

    /// `η⁻¹ = S S†`, available without inverting `η`.
    pub fn metric_inverse(&self) -> CMat {
        &self.basis_change * self.basis_change.adjoint()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_euclidean(&self) -> bool {
        linalg::identity_deviation(&self.metric) == 0.0
    }

    /// `φₙ` as an ambient state.
    pub fn basis_vector(&self, n: usize) -> StateVector {
        StateVector {
            coeffs: self.basis_change.column(n).into_owned(),
            basis: BasisTag::Ambient,
        }
    }

    /// Ambient coefficients of `Σ aₙ φₙ`.
    pub fn from_eigen_coeffs(&self, a: &CVec) -> Result<StateVector> {
        self.expect_dim(a.len())?;
        StateVector::ambient(&self.basis_change * a)
    }

    /// Eigenbasis coefficients `aₙ` of an ambient state.
    pub fn to_eigen_coeffs(&self, psi: &StateVector) -> Result<CVec> {
        self.expect_ambient(psi)?;
        Ok(&self.basis_inverse * psi.coeffs())
    }

    pub fn invariants(&self) -> MetricInvariants {
        let gram = self.basis_change.adjoint() * &self.metric * &self.basis_change;
        let inv = &self.metric * self.metric_inverse();
        MetricInvariants {
            hermitian_violation: linalg::hermitian_violation(&self.metric)
                / linalg::max_abs(&self.metric).max(f64::MIN_POSITIVE),
            min_eigenvalue: linalg::min_hermitian_eigenvalue(&self.metric),
            gram_deviation: linalg::identity_deviation(&gram),
            inverse_deviation: linalg::identity_deviation(&inv),
            condition: self.condition,
        }
    }

    fn check(&self, config: &MetricConfig) -> Result<()> {
        let inv = self.invariants();
        if inv.min_eigenvalue <= 0.0 || Cholesky::new(self.metric.clone()).is_none() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: inv.min_eigenvalue,
            });
        }
        if !inv.holds(config.tolerance) {
            return Err(Error::InvalidInput(format!(
                "metric invariants violated: {inv:?} at tolerance {:.3e}",
                config.tolerance
            )));
        }
        Ok(())
    }

    pub(crate) fn expect_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    fn expect_ambient(&self, psi: &StateVector) -> Result<()> {
        if psi.basis() != BasisTag::Ambient {
            return Err(Error::InvalidInput(
                "expected ambient coefficients, got eigenbasis coefficients".into(),
            ));
        }
        self.expect_dim(psi.len())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct MetricSpaceDoc {
    role: SpaceRole,
    dim: usize,
    condition: f64,
    metric: MatrixDoc,
    basis_change: MatrixDoc,
}

impl MetricSpaceDoc {
    pub(crate) fn from_space(space: &MetricSpace) -> Self {
        Self {
            role: space.role,
            dim: space.dim(),
            condition: space.condition,
            metric: MatrixDoc::from_matrix(&space.metric),
            basis_change: MatrixDoc::from_matrix(&space.basis_change),
        }
    }

    pub(crate) fn into_space(self) -> Result<MetricSpace> {
        if self.dim == 0 {
            return Err(Error::Schema("metric space dimension must be positive".into()));
        }
        let metric = self.metric.to_square(self.dim)?;
        let basis_change = self.basis_change.to_square(self.dim)?;
        MetricSpace::from_parts(self.role, metric, basis_change, &MetricConfig::default())
    }
}

#[derive(Serialize, Deserialize)]
struct MetricSpaceFile {
    #[serde(flatten)]
    header: Header,
    #[serde(flatten)]
    space: MetricSpaceDoc,
}

#[derive(Serialize, Deserialize)]
struct LinearMapFile {
    #[serde(flatten)]
    header: Header,
    matrix: MatrixDoc,
    domain: MetricSpaceDoc,
    codomain: MetricSpaceDoc,
}

impl MetricSpace {
    pub fn to_json(&self) -> Result<String> {
        io::to_json(&MetricSpaceFile {
            header: Header::new("metric_space"),
            space: MetricSpaceDoc::from_space(self),
        })
    }

    /// Parses and re-validates a stored space.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: MetricSpaceFile = io::from_json(bytes)?;
        io::check_header(&file.header, "metric_space")?;
        file.space.into_space()
    }
}

impl LinearMap {
    pub fn to_json(&self) -> Result<String> {
        io::to_json(&LinearMapFile {
            header: Header::new("linear_map"),
            matrix: MatrixDoc::from_matrix(&self.matrix),
            domain: MetricSpaceDoc::from_space(&self.domain),
            codomain: MetricSpaceDoc::from_space(&self.codomain),
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: LinearMapFile = io::from_json(bytes)?;
        io::check_header(&file.header, "linear_map")?;
        let matrix = file.matrix.to_matrix()?;
        Self::new(
            matrix,
            Arc::new(file.domain.into_space()?),
            Arc::new(file.codomain.into_space()?),
        )
    }
}

/// `⟨ψ, φ⟩₊ = ψ† η φ`.
pub fn inner_product_plus(psi: &StateVector, phi: &StateVector, space: &MetricSpace) -> Result<C64> {
    space.expect_ambient(psi)?;
    space.expect_ambient(phi)?;
    Ok(psi.coeffs().dotc(&(space.metric() * phi.coeffs())))
}

pub fn norm_plus(psi: &StateVector, space: &MetricSpace) -> Result<f64> {
    Ok(inner_product_plus(psi, psi, space)?.re.max(0.0).sqrt())
}

/// Entry `(m, n)` is `⟨v_m, v_n⟩₊`.
pub fn gram_matrix(vectors: &[StateVector], space: &MetricSpace) -> Result<CMat> {
    for v in vectors {
        space.expect_ambient(v)?;
    }
    let k = vectors.len();
    let images: Vec<CVec> = vectors.iter().map(|v| space.metric() * v.coeffs()).collect();
    let mut gram = CMat::zeros(k, k);
    for m in 0..k {
        for n in 0..k {
            gram[(m, n)] = vectors[m].coeffs().dotc(&images[n]);
        }
    }
    Ok(gram)
}

/// A linear map between two metric spaces, acting on ambient coefficients.
#[derive(Clone, Debug)]
pub struct LinearMap {
    matrix: CMat,
    domain: Arc<MetricSpace>,
    codomain: Arc<MetricSpace>,
}

impl LinearMap {
    pub fn new(matrix: CMat, domain: Arc<MetricSpace>, codomain: Arc<MetricSpace>) -> Result<Self> {
        if matrix.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: matrix.nrows(),
            });
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::InvalidInput("linear map has non-finite entries".into()));
        }
        Ok(Self {
            matrix,
            domain,
            codomain,
        })
    }

    /// An operator acting within one space.
    pub fn operator(matrix: CMat, space: Arc<MetricSpace>) -> Result<Self> {
        Self::new(matrix, space.clone(), space)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn domain(&self) -> &Arc<MetricSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<MetricSpace> {
        &self.codomain
    }

    /// Metric-aware adjoint `L* = η₁⁻¹ L† η₂`.
    pub fn adjoint_matrix(&self) -> CMat {
        self.domain.metric_inverse() * self.matrix.adjoint() * self.codomain.metric()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.domain.expect_ambient(psi)?;
        StateVector::ambient(&self.matrix * psi.coeffs())
    }
}

pub const DEFAULT_SAMPLES: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiticityReport {
    pub hermitian: bool,
    /// `max |ηA − A†η| / max |ηA|`
    pub matrix_violation: f64,
    /// Largest `|Im⟨ψ, Aψ⟩₊| / ⟨ψ, ψ⟩₊` over random states.
    pub sampled_imag_ratio: f64,
    /// The same quantity for the extremal vector of the anti-Hermitian part.
    pub extremal_imag_ratio: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

/// Tests `ηA = A†η` and probes `Im⟨ψ, Aψ⟩₊` on random states.
pub fn is_hermitian_wrt(a: &CMat, space: &MetricSpace, tol: f64, seed: u64) -> Result<HermiticityReport> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    space.expect_dim(a.nrows())?;
    let eta = space.metric();
    let eta_a = eta * a;
    let defect = &eta_a - a.adjoint() * eta;
    let matrix_violation = linalg::max_abs(&defect) / linalg::max_abs(&eta_a).max(f64::MIN_POSITIVE);

    let imag_ratio = |psi: &CVec| -> f64 {
        let num = psi.dotc(&(eta * (a * psi)));
        let den = psi.dotc(&(eta * psi)).re;
        if den > 0.0 {
            num.im.abs() / den
        } else {
            0.0
        }
    };

    let mut sampled_imag_ratio: f64 = 0.0;
    for k in 0..DEFAULT_SAMPLES {
        let mut rng = sampling::substream(seed, k as u64);
        let psi = sampling::random_vector(&mut rng, space.dim());
        sampled_imag_ratio = sampled_imag_ratio.max(imag_ratio(&psi));
    }

    // Im⟨ψ,Aψ⟩₊ = ψ†Bψ with B = (ηA − A†η)/2i; its extreme over ⟨ψ,ψ⟩₊ = 1 is
    // the top generalized eigenvector of (B, η).
    let extremal_imag_ratio = match extremal_antihermitian_vector(&defect, eta) {
        Some(v) => imag_ratio(&v),
        None => 0.0,
    };

    Ok(HermiticityReport {
        hermitian: matrix_violation <= tol,
        matrix_violation,
        sampled_imag_ratio,
        extremal_imag_ratio,
        samples: DEFAULT_SAMPLES + 1,
        seed,
        tolerance: tol,
    })
}

fn extremal_antihermitian_vector(defect: &CMat, eta: &CMat) -> Option<CVec> {
    let b = defect * C64::new(0.0, -0.5);
    let chol = Cholesky::new(eta.clone())?;
    let l = chol.l();
    let y = l.solve_lower_triangular(&b)?;
    let m = linalg::hermitian_part(&l.solve_lower_triangular(&y.adjoint())?);
    let eigen = m.symmetric_eigen();
    let (k, _) = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))?;
    let u = eigen.eigenvectors.column(k).into_owned();
    l.adjoint().solve_upper_triangular(&u)
}

impl HermiticityReport {
    /// Worst violation of realness found, random or extremal.
    pub fn max_imag_ratio(&self) -> f64 {
        self.sampled_imag_ratio.max(self.extremal_imag_ratio)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitarityReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    /// Largest `|⟨Lψ,Lφ⟩₂ − ⟨ψ,φ⟩₁| / (‖ψ‖₁‖φ‖₁)` over sampled pairs.
    pub c1_violation: f64,
    /// `max |L*L − I|`
    pub c2_violation: f64,
    /// `max |Gram(L B₁) − I|`, infinite when `L` cannot be a bijection.
    pub c3_violation: f64,
    pub pairs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl UnitarityReport {
    pub fn unitary(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }

    pub fn consistent(&self) -> bool {
        self.c1 == self.c2 && self.c2 == self.c3
    }
}

pub const UNITARITY_PAIRS: usize = 100;

/// Evaluates the three equivalent unitarity conditions for `l`.
pub fn check_unitary(l: &LinearMap, tol: f64, seed: u64) -> Result<UnitarityReport> {
    let dom = l.domain();
    let cod = l.codomain();

    let c2_violation = if dom.dim() == cod.dim() {
        linalg::identity_deviation(&(l.adjoint_matrix() * l.matrix()))
    } else {
        f64::INFINITY
    };

    let mut c1_violation: f64 = 0.0;
    for k in 0..UNITARITY_PAIRS {
        let mut rng = sampling::substream(seed, k as u64);
        let psi = StateVector::ambient(sampling::random_vector(&mut rng, dom.dim()))?;
        let phi = StateVector::ambient(sampling::random_vector(&mut rng, dom.dim()))?;
        let before = inner_product_plus(&psi, &phi, dom)?;
        let after = inner_product_plus(&l.apply(&psi)?, &l.apply(&phi)?, cod)?;
        let scale = norm_plus(&psi, dom)? * norm_plus(&phi, dom)?;
        if scale > 0.0 {
            c1_violation = c1_violation.max((after - before).norm() / scale);
        }
    }

    let c3_violation = if dom.dim() == cod.dim() {
        let images: Vec<StateVector> = (0..dom.dim())
            .map(|n| l.apply(&dom.basis_vector(n)))
            .collect::<Result<_>>()?;
        linalg::identity_deviation(&gram_matrix(&images, cod)?)
    } else {
        f64::INFINITY
    };

    Ok(UnitarityReport {
        c1: c1_violation <= tol,
        c2: c2_violation <= tol,
        c3: c3_violation <= tol,
        c1_violation,
        c2_violation,
        c3_violation,
        pairs: UNITARITY_PAIRS,
        seed,
        tolerance: tol,
    })
}

/// `K_mn = ⟨φₘ, A φₙ⟩₊` in the declared-orthonormal basis of `space`.
pub fn matrix_representation(a: &CMat, space: &MetricSpace) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    space.expect_dim(a.nrows())?;
    let s = space.basis_change();
    Ok(s.adjoint() * space.metric() * a * s)
}

/// Inverse of [`matrix_representation`]: `A = S K S⁻¹`.
pub fn operator_from_representation(k: &CMat, space: &MetricSpace) -> Result<CMat> {
    space.expect_dim(k.nrows())?;
    space.expect_dim(k.ncols())?;
    Ok(space.basis_change() * k * space.basis_inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_diag};
    use proptest::prelude::*;

    fn random_space(seed: u64, n: usize) -> MetricSpace {
        let mut rng = sampling::rng(seed);
        build_metric(&sampling::random_well_conditioned(&mut rng, n)).unwrap()
    }

    #[test]
    fn basis_vectors_have_unit_norm() {
        let space = random_space(1, 5);
        for n in 0..5 {
            let phi = space.basis_vector(n);
            let ip = inner_product_plus(&phi, &phi, &space).unwrap();
            assert!((ip - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn coefficient_arithmetic() {
        let space = random_space(2, 3);
        let a = CVec::from_vec(vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let psi = space.from_eigen_coeffs(&a).unwrap();
        let ip = inner_product_plus(&psi, &psi, &space).unwrap();
        assert!((ip - 5.0).norm() < 1e-12);
    }

    #[test]
    fn inner_product_matches_coefficient_solve() {
        let mut rng = sampling::rng(3);
        let s = sampling::random_matrix(&mut rng, 4, 4);
        let space = build_metric(&s).unwrap();
        let psi = sampling::random_vector(&mut rng, 4);
        let phi = sampling::random_vector(&mut rng, 4);
        // oracle: solve S c = ψ by LU and take the Euclidean product of coefficients
        let lu = s.clone().lu();
        let cpsi = lu.solve(&psi).unwrap();
        let cphi = lu.solve(&phi).unwrap();
        let expected = cpsi.dotc(&cphi);
        let got = inner_product_plus(
            &StateVector::ambient(psi).unwrap(),
            &StateVector::ambient(phi).unwrap(),
            &space,
        )
        .unwrap();
        assert!((got - expected).norm() < 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn metric_of_identity_and_diagonal() {
        let space = build_metric(&CMat::identity(3, 3)).unwrap();
        assert!(linalg::identity_deviation(space.metric()) < 1e-15);
        let space = build_metric(&real_diag(&[2.0, 1.0])).unwrap();
        assert!((space.metric()[(0, 0)] - 0.25).norm() < 1e-15);
        assert!((space.metric()[(1, 1)] - 1.0).norm() < 1e-15);
        assert!(space.metric()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn metric_from_random_basis_orthonormalizes_it() {
        let mut rng = sampling::rng(4);
        let s = sampling::random_matrix(&mut rng, 3, 3);
        let space = build_metric(&s).unwrap();
        // oracle: η from an explicit inverse of S S†
        let eta = linalg::inverse(&(&s * s.adjoint())).unwrap();
        assert!(linalg::max_abs(&(&eta - space.metric())) < 1e-10 * space.condition_number().powi(2));
        let gram = s.adjoint() * &eta * &s;
        assert!(linalg::identity_deviation(&gram) < 1e-10 * space.condition_number());
    }

    #[test]
    fn singular_basis_is_rejected_with_condition_estimate() {
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        match build_metric(&s) {
            Err(Error::IllConditioned { cond, .. }) => assert!(cond > 1e12),
            other => panic!("expected IllConditioned, got {other:?}"),
        }
        let s = CMat::identity(2, 3);
        assert!(matches!(build_metric(&s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gram_of_basis_and_of_zero_vector() {
        let space = random_space(5, 4);
        let basis: Vec<_> = (0..4).map(|n| space.basis_vector(n)).collect();
        let g = gram_matrix(&basis, &space).unwrap();
        assert!(linalg::identity_deviation(&g) < 1e-10 * space.condition_number());

        let zero = StateVector::ambient(CVec::zeros(4)).unwrap();
        let g = gram_matrix(&[zero], &space).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert_eq!(g[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn gram_of_two_vectors_matches_sandwich() {
        let space = random_space(6, 3);
        let mut rng = sampling::rng(60);
        let u = sampling::random_vector(&mut rng, 3);
        let v = sampling::random_vector(&mut rng, 3);
        let g = gram_matrix(
            &[StateVector::ambient(u.clone()).unwrap(), StateVector::ambient(v.clone()).unwrap()],
            &space,
        )
        .unwrap();
        let eta = space.metric();
        let oracle = [[u.dotc(&(eta * &u)), u.dotc(&(eta * &v))], [v.dotc(&(eta * &u)), v.dotc(&(eta * &v))]];
        for m in 0..2 {
            for n in 0..2 {
                assert!((g[(m, n)] - oracle[m][n]).norm() < 1e-12);
            }
        }
        assert!(linalg::hermitian_violation(&g) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let space = random_space(7, 3);
        let psi = StateVector::ambient(CVec::zeros(2)).unwrap();
        let phi = StateVector::ambient(CVec::zeros(3)).unwrap();
        assert!(matches!(
            inner_product_plus(&psi, &phi, &space),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn hermiticity_simple_cases() {
        let space = MetricSpace::euclidean(2, SpaceRole::Physical);
        let r = is_hermitian_wrt(&CMat::identity(2, 2), &space, 1e-8, 1).unwrap();
        assert!(r.hermitian);
        let a = linalg::diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let r = is_hermitian_wrt(&a, &space, 1e-8, 1).unwrap();
        assert!(!r.hermitian);
        assert!(r.max_imag_ratio() > 0.5);
    }

    #[test]
    fn similarity_with_real_spectrum_is_hermitian_in_its_metric() {
        // ηA = S⁻†S⁻¹ S D S⁻¹ = S⁻† D S⁻¹ and A†η = S⁻† D S† S⁻† S⁻¹ = S⁻† D S⁻¹
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.5), c(0.0, 0.3), c(1.0, -0.2)]);
        let space = build_metric(&s).unwrap();
        let a = &s * real_diag(&[1.5, 4.0]) * space.basis_inverse();
        let expected = space.basis_inverse().adjoint() * real_diag(&[1.5, 4.0]) * space.basis_inverse();
        assert!(linalg::max_abs(&(space.metric() * &a - &expected)) < 1e-12);
        let r = is_hermitian_wrt(&a, &space, 1e-10, 9).unwrap();
        assert!(r.hermitian, "{r:?}");
        assert!(r.max_imag_ratio() < 1e-12);
        // but A is not Hermitian in the Euclidean sense
        assert!(linalg::hermitian_violation(&a) > 1e-2);
    }

    #[test]
    fn unitarity_of_identity_and_scaled_identity() {
        let space = Arc::new(random_space(8, 3));
        let id = LinearMap::operator(CMat::identity(3, 3), space.clone()).unwrap();
        let r = check_unitary(&id, 1e-10, 1).unwrap();
        assert!(r.unitary() && r.consistent(), "{r:?}");
        let twice = LinearMap::operator(CMat::identity(3, 3) * c(2.0, 0.0), space).unwrap();
        let r = check_unitary(&twice, 1e-10, 1).unwrap();
        assert!(!r.c1 && !r.c2 && !r.c3, "{r:?}");
    }

    #[test]
    fn representation_matches_similarity_transform() {
        let mut rng = sampling::rng(10);
        let s = sampling::random_well_conditioned(&mut rng, 4);
        let space = build_metric(&s).unwrap();
        let a = sampling::random_matrix(&mut rng, 4, 4);
        let k = matrix_representation(&a, &space).unwrap();
        // oracle: S⁻¹ A S via an LU solve
        let oracle = s.clone().lu().solve(&(&a * &s)).unwrap();
        assert!(linalg::max_abs(&(&k - &oracle)) < 1e-10);
        let back = operator_from_representation(&k, &space).unwrap();
        assert!(linalg::max_abs(&(&back - &a)) < 1e-10);
        let k_id = matrix_representation(&CMat::identity(4, 4), &space).unwrap();
        assert!(linalg::identity_deviation(&k_id) < 1e-10);
        let d = [c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.5), c(3.0, 0.0)];
        let eig_op = &s * linalg::diag(&d) * space.basis_inverse();
        let k = matrix_representation(&eig_op, &space).unwrap();
        assert!(linalg::max_abs(&(&k - linalg::diag(&d))) < 1e-10);
    }

    fn arb_seed() -> impl Strategy<Value = u64> {
        any::<u64>()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn form_is_sesquilinear_and_hermitian(seed in arb_seed(), n in 1usize..6) {
            let space = random_space(seed, n);
            let mut rng = sampling::rng(seed ^ 0xabcdef);
            let psi = StateVector::ambient(sampling::random_vector(&mut rng, n)).unwrap();
            let phi = sampling::random_vector(&mut rng, n);
            let chi = sampling::random_vector(&mut rng, n);
            let a = sampling::complex_normal(&mut rng);
            let b = sampling::complex_normal(&mut rng);
            let comb = StateVector::ambient(&phi * a + &chi * b).unwrap();
            let phi = StateVector::ambient(phi).unwrap();
            let chi = StateVector::ambient(chi).unwrap();
            let lhs = inner_product_plus(&psi, &comb, &space).unwrap();
            let rhs = a * inner_product_plus(&psi, &phi, &space).unwrap()
                + b * inner_product_plus(&psi, &chi, &space).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            let swapped = inner_product_plus(&phi, &psi, &space).unwrap();
            let direct = inner_product_plus(&psi, &phi, &space).unwrap();
            prop_assert!((swapped - direct.conj()).norm() <= 1e-12 * (1.0 + direct.norm()));
        }

        #[test]
        fn form_is_positive(seed in arb_seed()) {
            let space = random_space(seed, 4);
            let mut rng = sampling::rng(seed.wrapping_add(1));
            for _ in 0..1000 {
                let psi = StateVector::ambient(sampling::random_vector(&mut rng, 4)).unwrap();
                prop_assert!(inner_product_plus(&psi, &psi, &space).unwrap().re > 0.0);
            }
        }

        #[test]
        fn metric_invariants_hold(seed in arb_seed(), n in 1usize..7) {
            let space = random_space(seed, n);
            let inv = space.invariants();
            prop_assert!(inv.hermitian_violation < 1e-12);
            prop_assert!(inv.min_eigenvalue > 0.0);
            prop_assert!(inv.gram_deviation < 1e-10 * inv.condition);
        }

        #[test]
        fn realness_theorem(seed in arb_seed(), n in 2usize..6) {
            let space = random_space(seed, n);
            let mut rng = sampling::rng(seed ^ 77);
            let energies: Vec<f64> = (0..n).map(|k| k as f64 + 0.5).collect();
            let herm = space.basis_change() * real_diag(&energies) * space.basis_inverse();
            let r = is_hermitian_wrt(&herm, &space, 1e-8, seed).unwrap();
            prop_assert!(r.hermitian);
            prop_assert!(r.max_imag_ratio() < 1e-8);

            let g = sampling::random_matrix(&mut rng, n, n);
            let r = is_hermitian_wrt(&g, &space, 1e-8, seed).unwrap();
            prop_assert!(!r.hermitian);
            prop_assert!(r.max_imag_ratio() > 1e-8);
        }

        #[test]
        fn hermitian_iff_representation_is_hermitian(seed in arb_seed(), n in 2usize..6) {
            let space = random_space(seed, n);
            let mut rng = sampling::rng(seed ^ 99);
            let k_herm = sampling::random_hermitian(&mut rng, n);
            let a = operator_from_representation(&k_herm, &space).unwrap();
            prop_assert!(is_hermitian_wrt(&a, &space, 1e-8, seed).unwrap().hermitian);

            let a = sampling::random_matrix(&mut rng, n, n);
            let k = matrix_representation(&a, &space).unwrap();
            let rep_hermitian = linalg::hermitian_violation(&k) <= 1e-8 * linalg::max_abs(&k);
            let op_hermitian = is_hermitian_wrt(&a, &space, 1e-8, seed).unwrap().hermitian;
            prop_assert_eq!(rep_hermitian, op_hermitian);
            prop_assert!(!op_hermitian);
        }
    }
}
