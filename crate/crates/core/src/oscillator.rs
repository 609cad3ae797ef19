//! Harmonic-oscillator basis backend and eigenbasis coefficient matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, I};
use crate::potential::PotentialSpec;
use crate::spectrum::{is_real_level, Backend, GridInfo, Level, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorConfig {
    /// Keep only the lowest this many real levels.
    pub n_levels: Option<usize>,
    /// Eigenvalues with `|Im E| ≥ reality_tol·(1 + |E|)` are discarded as truncation artefacts.
    pub reality_tol: f64,
    /// Converged when every error estimate is below `convergence_tol·(1 + |E|)`.
    pub convergence_tol: f64,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        Self {
            n_levels: None,
            reality_tol: 1e-8,
            convergence_tol: 1e-8,
        }
    }
}

fn check_supported(potential: &PotentialSpec) -> Result<u32> {
    potential.validate()?;
    match potential.integer_epsilon() {
        Some(e) if e < 2 => Ok(e),
        Some(_) => Err(Error::UnsupportedBasis(format!(
            "ε = {} ≥ 2: the Stokes wedges no longer contain the real axis, so a real-axis \
             truncation does not approximate the contour eigenproblem; use the shooting backend",
            potential.epsilon
        ))),
        None => Err(Error::UnsupportedBasis(format!(
            "ε = {} is not an integer: matrix elements of (ix)^ε are only available for polynomial potentials",
            potential.epsilon
        ))),
    }
}

/// Position operator `(a + a†)/√2` on the first `n` oscillator states.
fn position_matrix(n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        x[(k, k + 1)] = v;
        x[(k + 1, k)] = v;
    }
    x
}

/// `H = p² + μx² + λx²(ix)^ε` in the first `n_trunc` unit-frequency oscillator states.
pub fn hamiltonian_matrix(potential: &PotentialSpec, n_trunc: usize) -> Result<CMat> {
    let eps = check_supported(potential)?;
    if n_trunc == 0 {
        return Err(Error::InvalidInput("n_trunc must be positive".into()));
    }
    let big = n_trunc + 4;
    let x = position_matrix(big);
    let x2 = &x * &x;
    let poly = &x2 * (potential.mu - 1.0);
    let coupling = I.powi(eps as i32) * potential.lambda;
    let top = if eps == 1 { &x2 * &x } else { x2.clone() };

    let mut h = CMat::zeros(n_trunc, n_trunc);
    for r in 0..n_trunc {
        for c in 0..n_trunc {
            h[(r, c)] = C64::new(poly[(r, c)], 0.0) + coupling * top[(r, c)];
        }
        h[(r, r)] += C64::new((2 * r + 1) as f64, 0.0);
    }
    Ok(h)
}

struct Diagonalized {
    levels: Vec<(C64, usize)>,
    vectors: CMat,
    discarded: usize,
}

fn diagonalize(potential: &PotentialSpec, n_trunc: usize, config: &OscillatorConfig) -> Result<(CMat, Diagonalized)> {
    let h = hamiltonian_matrix(potential, n_trunc)?;
    let (values, vectors) = linalg::eig(&h)?;
    let mut levels: Vec<(C64, usize)> = values
        .iter()
        .enumerate()
        .filter(|(_, e)| is_real_level(**e, config.reality_tol))
        .map(|(i, e)| (*e, i))
        .collect();
    let discarded = values.len() - levels.len();
    levels.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
    if let Some(n) = config.n_levels {
        if levels.len() < n {
            return Err(Error::NotEnoughLevels {
                requested: n,
                available: levels.len(),
            });
        }
        levels.truncate(n);
    }
    Ok((
        h,
        Diagonalized {
            levels,
            vectors,
            discarded,
        },
    ))
}

/// Scales a column to unit norm with its largest-magnitude entry real positive.
fn fix_column(mut v: nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= C64::new(norm, 0.0);
    }
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    v
}

/// Diagonalizes `H` at `n_trunc` and `n_trunc / 2`, keeping the real eigenvalues.
pub fn diagonalize_oscillator_basis(
    potential: &PotentialSpec,
    n_trunc: usize,
    config: &OscillatorConfig,
) -> Result<Spectrum> {
    if n_trunc < 2 {
        return Err(Error::InvalidInput("n_trunc must be at least 2".into()));
    }
    if let Some(n) = config.n_levels {
        if n_trunc < 2 * n {
            return Err(Error::InvalidInput(format!(
                "n_trunc = {n_trunc} is below twice the {n} requested levels"
            )));
        }
    }
    let (h, full) = diagonalize(potential, n_trunc, config)?;
    let half = hamiltonian_matrix(potential, n_trunc / 2)?;
    let (half_values, _) = linalg::eig(&half)?;

    let mut levels = Vec::with_capacity(full.levels.len());
    let mut vectors = CMat::zeros(n_trunc, full.levels.len());
    for (col, &(e, idx)) in full.levels.iter().enumerate() {
        let v = fix_column(full.vectors.column(idx).into_owned());
        let residual = (&h * &v - &v * e).norm();
        let error_estimate = half_values
            .iter()
            .map(|z| (z - e).norm())
            .fold(f64::INFINITY, f64::min);
        vectors.set_column(col, &v);
        levels.push(Level {
            energy: e,
            residual,
            error_estimate,
        });
    }
    let converged = !levels.is_empty()
        && levels
            .iter()
            .all(|l| l.error_estimate < config.convergence_tol * (1.0 + l.energy.norm()));

    Ok(Spectrum {
        potential: *potential,
        backend: Backend::OscillatorBasis,
        contour: None,
        grid: GridInfo::Truncation {
            n_trunc,
            discarded_complex: full.discarded,
        },
        levels,
        eigenvectors: Some(vectors),
        eigenfunctions: Vec::new(),
        converged,
    })
}

/// Coefficients of the eigenbasis in an orthonormal frame of its span.
///
/// `frame` is `N × M` with orthonormal columns (oscillator coefficients), and
/// column `n` of `s` holds the frame coefficients of `φₙ`, so `frame · s` are the
/// oscillator coefficients of the eigenfunctions themselves. When all `N` levels are
/// retained the frame is a unitary change of basis and `s` is upper triangular.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub s: CMat,
    pub frame: CMat,
}

impl EigenBasis {
    /// Oscillator-basis coefficient columns of the eigenfunctions.
    pub fn coefficients(&self) -> CMat {
        &self.frame * &self.s
    }
}

/// Builds the basis-change matrix `S` of a spectrum in the oscillator basis of size `n_trunc`.
pub fn eigenbasis_matrix(spectrum: &Spectrum, n_trunc: usize) -> Result<EigenBasis> {
    let coefficients = match spectrum.backend {
        Backend::OscillatorBasis => {
            let v = spectrum
                .eigenvectors
                .as_ref()
                .ok_or_else(|| Error::PathwayUnavailable("spectrum carries no eigenvectors".into()))?;
            if v.nrows() != n_trunc {
                return Err(Error::DimensionMismatch {
                    expected: n_trunc,
                    found: v.nrows(),
                });
            }
            v.clone()
        }
        Backend::Shooting => {
            let on_axis = spectrum.contour.map(|c| c.is_real_axis()).unwrap_or(false);
            if spectrum.potential.epsilon >= 2.0 || !on_axis {
                return Err(Error::PathwayUnavailable(
                    "eigenfunctions are not sampled on the real axis; the position-space pathway needs \
                     a real-axis contour (ε < 2), use the coefficient pathway instead"
                        .into(),
                ));
            }
            if spectrum.eigenfunctions.len() != spectrum.len() {
                return Err(Error::PathwayUnavailable("spectrum carries no eigenfunction samples".into()));
            }
            let mut m = CMat::zeros(n_trunc, spectrum.len());
            for (col, f) in spectrum.eigenfunctions.iter().enumerate() {
                let c = hermite_coefficients(&f.x, &f.phi, &f.arclength, n_trunc);
                m.set_column(col, &fix_column(nalgebra::DVector::from_vec(c)));
            }
            m
        }
    };
    let m = coefficients.ncols();
    if m == 0 || m > n_trunc {
        return Err(Error::InvalidInput(format!(
            "{m} levels cannot span a subspace of the {n_trunc}-dimensional oscillator space"
        )));
    }
    let (frame, s) = linalg::qr_positive(&coefficients);
    Ok(EigenBasis { s, frame })
}

/// Normalized Hermite function `Φₖ(x)` for `k < n` at real `x`, by the three-term recurrence.
pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-x * x / 2.0).exp();
    out.push(cur);
    for k in 0..n - 1 {
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `∫ Φₖ(x) φ(x) dx` by the trapezoid rule on real-axis samples.
fn hermite_coefficients(x: &[C64], phi: &[C64], arclength: &[f64], n: usize) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); n];
    for i in 0..x.len() {
        let left = if i > 0 { arclength[i] - arclength[i - 1] } else { 0.0 };
        let right = if i + 1 < x.len() { arclength[i + 1] - arclength[i] } else { 0.0 };
        let w = 0.5 * (left + right);
        for (ck, hk) in c.iter_mut().zip(hermite_functions(x[i].re, n)) {
            *ck += phi[i] * (hk * w);
        }
    }
    c
}
