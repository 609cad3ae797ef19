//! Time evolution and expectation values in the PT and conventional pictures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equivalence::{Direction, EquivalenceBundle, ObservableMatrix, Picture};
use crate::error::{Error, Result};
use crate::hilbert::{inner_product_plus, StateVector};
use crate::io;
use crate::linalg::{CMat, CVec, C64};
use crate::sampling;
use crate::spectrum::Spectrum;

/// Tolerance on `|Im 𝒪| / (1 + |𝒪|)` before an expectation value is refused.
pub const REALITY_TOL: f64 = 1e-10;

/// Eigenbasis coefficients `cₙ(t)` of a state evolving from `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState {
    pub coeffs: CVec,
    pub t0: f64,
    pub t: f64,
}

impl EvolutionState {
    pub fn new(coeffs: CVec, t0: f64) -> Result<Self> {
        if !coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidInput("state has non-finite entries".into()));
        }
        Ok(Self { coeffs, t0, t: t0 })
    }

    /// `Σ|cₙ|²`, which equals `⟨ψ, ψ⟩₊`.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.norm_squared()
    }
}

fn energies_for(spectrum: &Spectrum, len: usize) -> Result<Vec<f64>> {
    let energies = spectrum.real_energies(1e-8)?;
    if len > energies.len() {
        return Err(Error::NotEnoughLevels {
            requested: len,
            available: energies.len(),
        });
    }
    Ok(energies[..len].to_vec())
}

fn propagate(coeffs: &CVec, energies: &[f64], dt: f64) -> CVec {
    CVec::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(energies)
            .map(|(c, e)| c * C64::from_polar(1.0, -e * dt)),
    )
}

/// `cₙ(t) = e^{−iEₙ(t − t_s)} cₙ(t_s)` where `t_s` is the state's current time.
pub fn evolve(state: &EvolutionState, spectrum: &Spectrum, t: f64) -> Result<EvolutionState> {
    let energies = energies_for(spectrum, state.coeffs.len())?;
    Ok(EvolutionState {
        coeffs: propagate(&state.coeffs, &energies, t - state.t),
        t0: state.t0,
        t,
    })
}

fn real_part_checked(z: C64) -> Result<f64> {
    if z.im.abs() > REALITY_TOL * (1.0 + z.re.abs()) {
        return Err(Error::NonHermitian(z.im.abs()));
    }
    Ok(z.re)
}

/// `c(t)† O c(t) / c(t₀)† c(t₀)` (PT picture, eigenbasis coefficients).
pub fn expectation_pt(o: &ObservableMatrix, state: &EvolutionState, spectrum: &Spectrum, t: f64) -> Result<f64> {
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    if o.dim() != state.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: state.coeffs.len(),
            found: o.dim(),
        });
    }
    let c = evolve(state, spectrum, t)?.coeffs;
    real_part_checked(c.dotc(&(o.entries() * &c)) / norm)
}

/// `⟨Ψ(t)|o|Ψ(t)⟩ / ⟨Ψ(t₀)|Ψ(t₀)⟩` with `Ψ(t) = e^{−i(t−t₀)h} Ψ(t₀)`.
pub fn expectation_conventional(
    o: &ObservableMatrix,
    bundle: &EquivalenceBundle,
    psi0: &CVec,
    t0: f64,
    t: f64,
) -> Result<f64> {
    let norm = psi0.norm_squared();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    if o.dim() != bundle.dim() || psi0.len() != bundle.dim() {
        return Err(Error::DimensionMismatch {
            expected: bundle.dim(),
            found: if o.dim() != bundle.dim() { o.dim() } else { psi0.len() },
        });
    }
    let psi = propagate(psi0, bundle.h_diagonal(), t - t0);
    real_part_checked(psi.dotc(&(o.entries() * &psi)) / norm)
}

/// `c† A c / c† c` with no reality check, for arbitrary (possibly non-Hermitian) `A`.
pub fn raw_expectation(a: &CMat, c: &CVec) -> Result<C64> {
    let norm = c.norm_squared();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(c.dotc(&(a * c)) / norm)
}

/// Largest `|Im c†Ac| / c†c` over `samples` random states; returns the state attaining it.
pub fn search_non_real_expectation(a: &CMat, samples: usize, seed: u64) -> Result<(CVec, f64)> {
    let mut best = (CVec::zeros(a.nrows()), 0.0);
    for k in 0..samples {
        let mut rng = sampling::substream(seed, k as u64);
        let c = sampling::random_vector(&mut rng, a.nrows());
        let im = raw_expectation(a, &c)?.im.abs();
        if im > best.1 {
            best = (c, im);
        }
    }
    Ok(best)
}

/// `t_k = T (2^k − 1) / (2^{K−1} − 1)` for `k < K`, so `t_0 = 0` and `t_{K−1} = T`.
pub fn geometric_times(span: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let top = 2f64.powi(count as i32 - 1) - 1.0;
            (0..count).map(|k| span * (2f64.powi(k as i32) - 1.0) / top).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationGrid {
    pub observables: Vec<ObservableMatrix>,
    /// Eigenbasis coefficients of `ψ(t₀)`.
    pub states: Vec<CVec>,
    pub times: Vec<f64>,
    pub t0: f64,
    pub seed: u64,
}

impl VerificationGrid {
    /// Seeded random Hermitian observables and random states.
    pub fn random(dim: usize, observables: usize, states: usize, times: Vec<f64>, seed: u64) -> Result<Self> {
        let mut rng = sampling::rng(seed);
        let obs = (0..observables)
            .map(|_| ObservableMatrix::pt(sampling::random_hermitian(&mut rng, dim)))
            .collect::<Result<Vec<_>>>()?;
        let sts = (0..states).map(|_| sampling::random_vector(&mut rng, dim)).collect();
        Ok(Self {
            observables: obs,
            states: sts,
            times,
            t0: 0.0,
            seed,
        })
    }

    /// 5 observables, 5 states, 7 times spaced geometrically in `[0, 10]`.
    pub fn standard(dim: usize, seed: u64) -> Result<Self> {
        Self::random(dim, 5, 5, geometric_times(10.0, 7), seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleResult {
    pub observable: usize,
    pub state: usize,
    pub t: f64,
    pub pt: f64,
    pub conventional: f64,
    pub deviation: f64,
    /// Larger of the two imaginary parts before they were discarded.
    pub imag: f64,
    /// `|⟨ψ(t),ψ(t)⟩₊ / ⟨ψ(t₀),ψ(t₀)⟩₊ − 1|`
    pub norm_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub tolerance: f64,
    pub seed: u64,
    pub condition: f64,
    pub max_deviation: f64,
    pub max_imag: f64,
    pub max_norm_drift: f64,
    pub passed: bool,
    pub triples: Vec<TripleResult>,
}

impl EquivalenceReport {
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            #[serde(flatten)]
            header: io::Header,
            #[serde(flatten)]
            report: &'a EquivalenceReport,
        }
        io::to_json(&Doc {
            header: io::Header::new("equivalence_report"),
            report: self,
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(flatten)]
            header: io::Header,
            #[serde(flatten)]
            report: EquivalenceReport,
        }
        let doc: Doc = io::from_json(bytes)?;
        io::check_header(&doc.header, "equivalence_report")?;
        Ok(doc.report)
    }

    /// Columns `t, O_pt, O_conv, |Δ|, |Im|`, one row per triple.
    pub fn to_csv(&self) -> String {
        io::csv_table(
            &["t", "o_pt", "o_conv", "abs_delta", "abs_im"],
            self.triples
                .iter()
                .map(|r| vec![r.t, r.pt, r.conventional, r.deviation, r.imag]),
        )
    }
}

/// Evaluates the PT expectation value through the ambient `η` pipeline and the
/// conventional one through `Ψ = 𝒰ψ` and `h`, on every (observable, state, time) triple.
pub fn verify_equivalence(bundle: &EquivalenceBundle, grid: &VerificationGrid, tol: f64) -> Result<EquivalenceReport> {
    if grid.observables.is_empty() || grid.states.is_empty() || grid.times.is_empty() {
        return Err(Error::InvalidInput("verification grid must be nonempty".into()));
    }
    let space = bundle.space_h();
    let dim = bundle.dim();
    let energies = energies_for(bundle.spectrum(), dim)?;
    let s = space.basis_change();
    let s_inv = space.basis_inverse();

    let ambient_ops: Vec<CMat> = grid
        .observables
        .iter()
        .map(|o| {
            if o.picture() != Picture::Pt {
                return Err(Error::InvalidInput("verification observables must be given in the PT picture".into()));
            }
            Ok(s * o.entries() * s_inv)
        })
        .collect::<Result<_>>()?;
    let conventional: Vec<ObservableMatrix> = grid
        .observables
        .iter()
        .map(|o| bundle.map_observable(o, Direction::ToConventional))
        .collect::<Result<_>>()?;
    let initial: Vec<(StateVector, CVec, f64)> = grid
        .states
        .iter()
        .map(|c| {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
            let psi = space.from_eigen_coeffs(c)?;
            let big_psi = bundle.to_conventional_state(&psi)?;
            let norm = inner_product_plus(&psi, &psi, space)?.re;
            if norm <= 0.0 {
                return Err(Error::ZeroState);
            }
            Ok((psi, big_psi, norm))
        })
        .collect::<Result<_>>()?;

    let mut index = Vec::new();
    for oi in 0..grid.observables.len() {
        for si in 0..grid.states.len() {
            for &t in &grid.times {
                index.push((oi, si, t));
            }
        }
    }
    let triples: Vec<TripleResult> = index
        .par_iter()
        .map(|&(oi, si, t)| -> Result<TripleResult> {
            let (psi, big_psi, norm) = &initial[si];
            let dt = t - grid.t0;
            // e^{−iH dt} on ambient coefficients: S e^{−iE dt} S⁻¹
            let a = propagate(&(s_inv * psi.coeffs()), &energies, dt);
            let psi_t = StateVector::ambient(s * a)?;
            let o_psi = StateVector::ambient(&ambient_ops[oi] * psi_t.coeffs())?;
            let pt = inner_product_plus(&psi_t, &o_psi, space)? / *norm;
            let norm_t = inner_product_plus(&psi_t, &psi_t, space)?.re;

            let big_t = propagate(big_psi, bundle.h_diagonal(), dt);
            let conv = big_t.dotc(&(conventional[oi].entries() * &big_t)) / big_psi.norm_squared();

            Ok(TripleResult {
                observable: oi,
                state: si,
                t,
                pt: pt.re,
                conventional: conv.re,
                deviation: (pt.re - conv.re).abs(),
                imag: pt.im.abs().max(conv.im.abs()),
                norm_drift: (norm_t / norm - 1.0).abs(),
            })
        })
        .collect::<Result<_>>()?;

    let max_deviation = triples.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let max_imag = triples.iter().map(|r| r.imag).fold(0.0, f64::max);
    let max_norm_drift = triples.iter().map(|r| r.norm_drift).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        tolerance: tol,
        seed: grid.seed,
        condition: bundle.condition_number(),
        max_deviation,
        max_imag,
        max_norm_drift,
        passed: max_deviation < tol && max_imag < tol,
        triples,
    })
}
