//! The unitary maps `U`, `𝒰` and the equivalent Hermitian Hamiltonian `h`.
//!
//! In the position pathway the eigenfunctions are known as coefficient columns
//! `S` in an orthonormal frame, `ℋ` carries `η = (SS†)⁻¹`, and both maps have the
//! matrix `S†η = S⁻¹`; they differ in their codomain (`l₂` versus the ambient
//! `L²` model with basis `F = {Φₙ}`). In the coefficient pathway only `Eₙ` and
//! observable matrices are transported and `𝒰` is the identity on indices.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    check_unitary, is_hermitian_wrt, matrix_representation, LinearMap, MetricConfig, MetricSpace, MetricSpaceDoc,
    SpaceRole, StateVector, UnitarityReport,
};
use crate::io::{self, Header, MatrixDoc};
use crate::linalg::{self, CMat, CVec, C64};
use crate::oscillator::eigenbasis_matrix;
use crate::sampling;
use crate::spectrum::{Backend, Spectrum, SpectrumDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathway {
    /// Abstract: `𝒰 φₙ = Φₙ` by definition, no position-space data.
    Coefficient,
    /// Through the eigenbasis coefficient matrix `S`.
    Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    /// Matrix elements `⟨φₘ, O φₙ⟩₊`.
    Pt,
    /// Matrix elements `⟨Φₘ|o|Φₙ⟩`.
    Conventional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToConventional,
    ToPt,
}

/// Relative tolerance on `|O − O†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A Hermitian matrix in the eigenbasis (or, equivalently, in `F`).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableMatrix {
    entries: CMat,
    picture: Picture,
}

impl ObservableMatrix {
    pub fn new(entries: CMat, picture: Picture) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if !linalg::is_finite(&entries) {
            return Err(Error::InvalidInput("observable has non-finite entries".into()));
        }
        let violation = linalg::hermitian_violation(&entries) / linalg::max_abs(&entries).max(1.0);
        if violation > HERMITIAN_TOL {
            return Err(Error::NonHermitian(violation));
        }
        Ok(Self { entries, picture })
    }

    pub fn pt(entries: CMat) -> Result<Self> {
        Self::new(entries, Picture::Pt)
    }

    pub fn conventional(entries: CMat) -> Result<Self> {
        Self::new(entries, Picture::Conventional)
    }

    pub fn identity(dim: usize, picture: Picture) -> Self {
        Self {
            entries: CMat::identity(dim, dim),
            picture,
        }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleConfig {
    /// Bundles with `cond(S)` above this are refused.
    pub max_condition: f64,
    /// Verification tolerance before scaling by `cond(S)`.
    pub tolerance: f64,
    /// Reality tolerance applied to the spectrum.
    pub reality_tol: f64,
    /// Oscillator truncation used to expand shooting eigenfunctions.
    pub n_trunc: Option<usize>,
    /// Force a pathway; by default the position pathway is used whenever available.
    pub pathway: Option<Pathway>,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            max_condition: 1e8,
            tolerance: 1e-8,
            reality_tol: 1e-8,
            n_trunc: None,
            pathway: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceBundle {
    spectrum: Spectrum,
    pathway: Pathway,
    space_h: Arc<MetricSpace>,
    /// Orthonormal columns (oscillator coefficients) spanning the eigenbasis.
    frame: Option<CMat>,
    u_map: LinearMap,
    cal_u_map: LinearMap,
    h: Vec<f64>,
    tolerance: f64,
}

/// `U`: ambient coefficients of `ψ` ↦ `(⟨φₙ, ψ⟩₊)ₙ`.
pub fn build_u(space_h: &Arc<MetricSpace>) -> Result<LinearMap> {
    let seq = Arc::new(MetricSpace::euclidean(space_h.dim(), SpaceRole::Sequence));
    LinearMap::new(row_functionals(space_h), space_h.clone(), seq)
}

/// `𝒰`: `φₙ ↦ Φₙ`, written in the `F` basis of the ambient `L²` model.
pub fn build_cal_u(space_h: &Arc<MetricSpace>) -> Result<LinearMap> {
    let conv = Arc::new(MetricSpace::euclidean(space_h.dim(), SpaceRole::Conventional));
    LinearMap::new(row_functionals(space_h), space_h.clone(), conv)
}

/// Row `n` is the functional `ψ ↦ ⟨φₙ, ψ⟩₊ = (S†η ψ)ₙ`.
fn row_functionals(space: &MetricSpace) -> CMat {
    space.basis_change().adjoint() * space.metric()
}

/// `h = diag(E₀, …, E_{n−1})`, refusing non-real spectra.
pub fn build_h(spectrum: &Spectrum, n: usize, reality_tol: f64) -> Result<Vec<f64>> {
    let energies = spectrum.real_energies(reality_tol)?;
    if energies.len() < n {
        return Err(Error::NotEnoughLevels {
            requested: n,
            available: energies.len(),
        });
    }
    Ok(energies[..n].to_vec())
}

/// `H^(B)_mn = Eₙ δ_mn`, with its Hermiticity checked.
pub fn hamiltonian_matrix_rep(spectrum: &Spectrum, reality_tol: f64) -> Result<CMat> {
    let energies = spectrum.real_energies(reality_tol)?;
    let rep = linalg::real_diag(&energies);
    let violation = linalg::hermitian_violation(&rep);
    if violation != 0.0 {
        return Err(Error::NonHermitian(violation));
    }
    Ok(rep)
}

/// `H^(amb) = S diag(Eₙ) S⁻¹`: the Hamiltonian acting on ambient coefficients.
pub fn ambient_hamiltonian(space_h: &MetricSpace, energies: &[f64]) -> Result<CMat> {
    if energies.len() != space_h.dim() {
        return Err(Error::DimensionMismatch {
            expected: space_h.dim(),
            found: energies.len(),
        });
    }
    Ok(space_h.basis_change() * linalg::real_diag(energies) * space_h.basis_inverse())
}

/// `O^(amb) = S O S⁻¹`.
pub fn ambient_operator(space_h: &MetricSpace, o: &ObservableMatrix) -> Result<CMat> {
    if o.dim() != space_h.dim() {
        return Err(Error::DimensionMismatch {
            expected: space_h.dim(),
            found: o.dim(),
        });
    }
    Ok(space_h.basis_change() * o.entries() * space_h.basis_inverse())
}

impl EquivalenceBundle {
    pub fn build(spectrum: Spectrum, config: &BundleConfig) -> Result<Self> {
        let energies = spectrum.real_energies(config.reality_tol)?;
        if energies.is_empty() {
            return Err(Error::InvalidInput("spectrum has no levels".into()));
        }
        let pathway = match config.pathway {
            Some(p) => p,
            None if position_available(&spectrum) => Pathway::Position,
            None => Pathway::Coefficient,
        };
        let (space, frame) = match pathway {
            Pathway::Coefficient => (MetricSpace::euclidean(energies.len(), SpaceRole::Physical), None),
            Pathway::Position => {
                let n_trunc = spectrum
                    .truncation()
                    .or(config.n_trunc)
                    .unwrap_or(2 * energies.len());
                let basis = eigenbasis_matrix(&spectrum, n_trunc)?;
                let metric_config = MetricConfig {
                    max_condition: config.max_condition,
                    ..MetricConfig::default()
                };
                (
                    MetricSpace::from_basis(&basis.s, SpaceRole::Physical, &metric_config)?,
                    Some(basis.frame),
                )
            }
        };
        let space_h = Arc::new(space);
        let tolerance = config.tolerance * space_h.condition_number().max(1.0);
        Ok(Self {
            u_map: build_u(&space_h)?,
            cal_u_map: build_cal_u(&space_h)?,
            h: build_h(&spectrum, space_h.dim(), config.reality_tol)?,
            spectrum,
            pathway,
            space_h,
            frame,
            tolerance,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn pathway(&self) -> Pathway {
        self.pathway
    }

    pub fn space_h(&self) -> &Arc<MetricSpace> {
        &self.space_h
    }

    pub fn frame(&self) -> Option<&CMat> {
        self.frame.as_ref()
    }

    pub fn u_map(&self) -> &LinearMap {
        &self.u_map
    }

    pub fn cal_u_map(&self) -> &LinearMap {
        &self.cal_u_map
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn h_diagonal(&self) -> &[f64] {
        &self.h
    }

    pub fn h_matrix(&self) -> CMat {
        linalg::real_diag(&self.h)
    }

    /// `cond(S)`; 1 in the coefficient pathway.
    pub fn condition_number(&self) -> f64 {
        self.space_h.condition_number()
    }

    /// Verification tolerance, already scaled by `cond(S)`.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Replaces `h` without re-validation. Used to demonstrate that the
    /// verification detects an inconsistent conventional description.
    pub fn with_conventional_hamiltonian(mut self, h: Vec<f64>) -> Result<Self> {
        if h.len() != self.h.len() {
            return Err(Error::DimensionMismatch {
                expected: self.h.len(),
                found: h.len(),
            });
        }
        self.h = h;
        Ok(self)
    }

    /// `Ψ = 𝒰ψ` for an ambient state of `ℋ`.
    pub fn to_conventional_state(&self, psi: &StateVector) -> Result<CVec> {
        Ok(self.cal_u_map.apply(psi)?.coeffs().clone())
    }

    /// `S diag(Eₙ) S⁻¹` from the spectrum (not from `h`).
    pub fn ambient_hamiltonian(&self) -> Result<CMat> {
        ambient_hamiltonian(&self.space_h, &self.spectrum_energies())
    }

    fn spectrum_energies(&self) -> Vec<f64> {
        self.spectrum.levels[..self.h.len()].iter().map(|l| l.energy.re).collect()
    }

    /// Transports an observable between the pictures.
    ///
    /// Since `𝒰φₙ = Φₙ` the matrix elements coincide; the result is the same
    /// matrix retagged, after checking `o = 𝒰 O^(amb) 𝒰⁻¹` on the ambient actions.
    pub fn map_observable(&self, o: &ObservableMatrix, direction: Direction) -> Result<ObservableMatrix> {
        let target = match direction {
            Direction::ToConventional => Picture::Conventional,
            Direction::ToPt => Picture::Pt,
        };
        let deviation = self.observable_transport_deviation(o)?;
        if deviation > self.tolerance {
            return Err(Error::InvalidInput(format!(
                "observable transport deviates by {deviation:.3e} (tolerance {:.3e})",
                self.tolerance
            )));
        }
        Ok(ObservableMatrix {
            entries: o.entries.clone(),
            picture: target,
        })
    }

    /// `max |𝒰 (S O S⁻¹) 𝒰⁻¹ − o| / max(1, |o|)` where `o` has the entries of `O`.
    pub fn observable_transport_deviation(&self, o: &ObservableMatrix) -> Result<f64> {
        let amb = ambient_operator(&self.space_h, o)?;
        let cal_u = self.cal_u_map.matrix();
        let conv = cal_u * amb * self.space_h.basis_change();
        Ok(linalg::max_abs(&(conv - o.entries())) / linalg::max_abs(o.entries()).max(1.0))
    }

    /// Evaluates every bundle invariant.
    pub fn verify(&self, seed: u64) -> Result<BundleReport> {
        let tol = self.tolerance;
        let mut checks = Vec::new();
        let mut push = |name: &str, violation: f64, tolerance: f64| {
            checks.push(Check {
                name: name.to_string(),
                violation,
                tolerance,
                passed: violation <= tolerance,
            });
        };
        let space = &self.space_h;
        let inv = space.invariants();
        push("metric hermitian", inv.hermitian_violation, tol);
        push("metric positive definite", if inv.min_eigenvalue > 0.0 { 0.0 } else { f64::INFINITY }, 0.0);
        push("eigenbasis gram = I", inv.gram_deviation, tol);

        let u = check_unitary(&self.u_map, tol, seed)?;
        let cal_u = check_unitary(&self.cal_u_map, tol, sampling::substream_seed(seed, 1))?;
        for (label, r) in [("U", &u), ("calU", &cal_u)] {
            push(&format!("{label} C1 inner products"), r.c1_violation, tol);
            push(&format!("{label} C2 adjoint identity"), r.c2_violation, tol);
            push(&format!("{label} C3 basis image gram"), r.c3_violation, tol);
        }
        let images = self.cal_u_map.matrix() * space.basis_change();
        push("calU phi_n = Phi_n", linalg::identity_deviation(&images), tol);

        let h_amb = self.ambient_hamiltonian()?;
        let h_conv = self.cal_u_map.matrix() * &h_amb * space.basis_change();
        let h = self.h_matrix();
        let scale = self.h.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
        push("h = calU H calU^-1", level_scaled_deviation(&h_conv, &self.h), tol);
        push("h hermitian", linalg::hermitian_violation(&h), 0.0);
        let rep = matrix_representation(&h_amb, space)?;
        push("H^(B) = diag(E)", level_scaled_deviation(&rep, &self.h), tol);
        let herm = is_hermitian_wrt(&h_amb, space, tol, sampling::substream_seed(seed, 2))?;
        push("eta H = H^dag eta", herm.matrix_violation, tol);
        push("Im<psi,H psi>+ sampled", herm.max_imag_ratio() / scale, tol);
        let (eig, _) = linalg::eig(&h_amb)?;
        push("spectrum preserved", spectral_distance(&eig, &self.h), tol);

        Ok(BundleReport {
            pathway: self.pathway,
            condition: space.condition_number(),
            tolerance: tol,
            seed,
            u_unitarity: u,
            cal_u_unitarity: cal_u,
            checks,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_json(&BundleDoc {
            header: Header::new("equivalence_bundle"),
            pathway: self.pathway,
            tolerance: self.tolerance,
            spectrum: SpectrumDoc::from_spectrum(&self.spectrum),
            space_h: MetricSpaceDoc::from_space(&self.space_h),
            frame: self.frame.as_ref().map(MatrixDoc::from_matrix),
            u_map: MatrixDoc::from_matrix(self.u_map.matrix()),
            cal_u_map: MatrixDoc::from_matrix(self.cal_u_map.matrix()),
            h: self.h.clone(),
        })
    }

    /// Parses a stored bundle and checks it against its own spectrum and space.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: BundleDoc = io::from_json(bytes)?;
        io::check_header(&doc.header, "equivalence_bundle")?;
        let spectrum = doc.spectrum.into_spectrum()?;
        let space_h = Arc::new(doc.space_h.into_space()?);
        let dim = space_h.dim();
        if !(doc.tolerance.is_finite() && doc.tolerance > 0.0) {
            return Err(Error::Schema("tolerance must be positive".into()));
        }
        let u = build_u(&space_h)?;
        let cal_u = build_cal_u(&space_h)?;
        for (name, stored, built) in [("u_map", &doc.u_map, &u), ("cal_u_map", &doc.cal_u_map, &cal_u)] {
            let m = stored.to_square(dim)?;
            let dev = linalg::max_abs(&(m - built.matrix())) / linalg::max_abs(built.matrix()).max(1.0);
            if dev > doc.tolerance {
                return Err(Error::Schema(format!("{name} disagrees with the stored metric by {dev:.3e}")));
            }
        }
        let h = build_h(&spectrum, dim, 1e-8)?;
        if h.len() != doc.h.len() || h.iter().zip(&doc.h).any(|(a, b)| a != b) {
            return Err(Error::Schema("h does not match the spectrum".into()));
        }
        let frame = doc.frame.as_ref().map(MatrixDoc::to_matrix).transpose()?;
        if let Some(f) = &frame {
            if f.ncols() != dim {
                return Err(Error::Schema("frame width differs from the space dimension".into()));
            }
        }
        Ok(Self {
            spectrum,
            pathway: doc.pathway,
            space_h,
            frame,
            u_map: u,
            cal_u_map: cal_u,
            h,
            tolerance: doc.tolerance,
        })
    }
}

fn position_available(spectrum: &Spectrum) -> bool {
    match spectrum.backend {
        Backend::OscillatorBasis => spectrum.eigenvectors.is_some(),
        Backend::Shooting => {
            spectrum.potential.epsilon < 2.0
                && spectrum.contour.map(|c| c.is_real_axis()).unwrap_or(false)
                && spectrum.eigenfunctions.len() == spectrum.len()
        }
    }
}

/// Largest distance from each expected eigenvalue to the nearest computed one.
/// `max |Aₘₙ − Eₙδₘₙ| / (1 + max(|Eₘ|, |Eₙ|))`
pub fn level_scaled_deviation(a: &CMat, energies: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (m, em) in energies.iter().enumerate() {
        for (n, en) in energies.iter().enumerate() {
            let target = if m == n { *en } else { 0.0 };
            let d = (a[(m, n)] - target).norm() / (1.0 + em.abs().max(en.abs()));
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest relative distance from an expected level to the nearest computed eigenvalue.
fn spectral_distance(computed: &[C64], expected: &[f64]) -> f64 {
    expected
        .iter()
        .map(|&e| computed.iter().map(|z| (z - e).norm()).fold(f64::INFINITY, f64::min) / (1.0 + e.abs()))
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    #[serde(flatten)]
    header: Header,
    pathway: Pathway,
    tolerance: f64,
    spectrum: SpectrumDoc,
    space_h: MetricSpaceDoc,
    #[serde(default)]
    frame: Option<MatrixDoc>,
    u_map: MatrixDoc,
    cal_u_map: MatrixDoc,
    h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleReport {
    pub pathway: Pathway,
    pub condition: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub u_unitarity: UnitarityReport,
    pub cal_u_unitarity: UnitarityReport,
    pub checks: Vec<Check>,
}

impl BundleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pathway: {:?}", self.pathway);
        let _ = writeln!(out, "cond(S): {}", io::fmt_sig(self.condition));
        let _ = writeln!(out, "tolerance: {}", io::fmt_sig(self.tolerance));
        let _ = writeln!(out, "seed: {}", self.seed);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}: violation {} (tolerance {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                io::fmt_sig(c.violation),
                io::fmt_sig(c.tolerance)
            );
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}
