//! Computed spectra and their provenance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Header, MatrixDoc};
use crate::linalg::{CMat, C64};
use crate::potential::{Contour, PotentialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Shooting,
    OscillatorBasis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(with = "io::complex")]
    pub energy: C64,
    /// `|D(E)|` for shooting, `‖Hv − Ev‖` for the matrix backend.
    pub residual: f64,
    pub error_estimate: f64,
}

/// An eigenfunction sampled along the contour, left endpoint to right endpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionSamples {
    pub arclength: Vec<f64>,
    #[serde(with = "io::complex_vec")]
    pub x: Vec<C64>,
    #[serde(with = "io::complex_vec")]
    pub phi: Vec<C64>,
}

impl EigenfunctionSamples {
    pub fn to_csv(&self) -> String {
        io::csv_table(
            &["arclength", "re_x", "im_x", "re_phi", "im_phi"],
            self.arclength
                .iter()
                .zip(&self.x)
                .zip(&self.phi)
                .map(|((s, x), p)| vec![*s, x.re, x.im, p.re, p.im]),
        )
    }
}

/// How the spectrum was discretized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridInfo {
    Adaptive { rtol: f64, tail_rtol: f64 },
    Fixed { steps: usize, tail_rtol: f64 },
    Truncation { n_trunc: usize, discarded_complex: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub potential: PotentialSpec,
    pub backend: Backend,
    pub contour: Option<Contour>,
    pub grid: GridInfo,
    /// Ascending real part.
    pub levels: Vec<Level>,
    /// Oscillator-basis coefficient columns, one per level.
    pub eigenvectors: Option<CMat>,
    pub eigenfunctions: Vec<EigenfunctionSamples>,
    pub converged: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn truncation(&self) -> Option<usize> {
        match self.grid {
            GridInfo::Truncation { n_trunc, .. } => Some(n_trunc),
            _ => None,
        }
    }

    /// `|Im Eₙ| < tol·(1 + |Re Eₙ|)` for every level.
    pub fn is_real(&self, tol: f64) -> bool {
        self.levels.iter().all(|l| is_real_level(l.energy, tol))
    }

    /// Real parts, refusing any level that fails the reality test.
    pub fn real_energies(&self, tol: f64) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(n, l)| {
                if is_real_level(l.energy, tol) {
                    Ok(l.energy.re)
                } else {
                    Err(Error::ComplexSpectrum {
                        level: n,
                        re: l.energy.re,
                        im: l.energy.im,
                    })
                }
            })
            .collect()
    }

    /// Human-readable descriptions of violated invariants (empty when all hold).
    pub fn invariant_violations(&self, reality_tol: f64, residual_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (n, l) in self.levels.iter().enumerate() {
            if !is_real_level(l.energy, reality_tol) {
                out.push(format!("level {n}: |Im E| = {:.3e} violates reality", l.energy.im.abs()));
            }
            if !(l.residual <= residual_tol) {
                out.push(format!("level {n}: residual {:.3e} exceeds {residual_tol:.1e}", l.residual));
            }
        }
        for (n, pair) in self.levels.windows(2).enumerate() {
            if !(pair[1].energy.re > pair[0].energy.re) {
                out.push(format!("levels {n} and {}: real parts not strictly increasing", n + 1));
            }
        }
        if self.potential.mu == 0.0 && self.potential.lambda == 1.0 {
            for (n, l) in self.levels.iter().enumerate() {
                if !(l.energy.re > 0.0) {
                    out.push(format!("level {n}: Re E = {} is not positive", l.energy.re));
                }
            }
        }
        out
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::from("n,re_E,im_E,residual,error_estimate\n");
        for (n, l) in self.levels.iter().enumerate() {
            out.push_str(&format!(
                "{n},{},{},{},{}\n",
                io::fmt_sig(l.energy.re),
                io::fmt_sig(l.energy.im),
                io::fmt_sig(l.residual),
                io::fmt_sig(l.error_estimate)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_json(&SpectrumDoc::from_spectrum(self))
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        io::from_json::<SpectrumDoc>(bytes)?.into_spectrum()
    }

    /// Structural checks applied to any spectrum read from storage.
    pub fn validate_structure(&self) -> Result<()> {
        self.potential.validate()?;
        for l in &self.levels {
            if !(l.energy.re.is_finite() && l.energy.im.is_finite()) {
                return Err(Error::Schema("non-finite eigenvalue".into()));
            }
        }
        if let Some(v) = &self.eigenvectors {
            if v.ncols() != self.levels.len() {
                return Err(Error::Schema(format!(
                    "{} eigenvector columns for {} levels",
                    v.ncols(),
                    self.levels.len()
                )));
            }
            if let Some(n) = self.truncation() {
                if v.nrows() != n {
                    return Err(Error::Schema(format!("{} eigenvector rows for truncation {n}", v.nrows())));
                }
            }
        }
        for f in &self.eigenfunctions {
            if f.arclength.len() != f.x.len() || f.x.len() != f.phi.len() {
                return Err(Error::Schema("eigenfunction sample columns differ in length".into()));
            }
        }
        if !self.eigenfunctions.is_empty() && self.eigenfunctions.len() != self.levels.len() {
            return Err(Error::Schema("eigenfunction count differs from level count".into()));
        }
        Ok(())
    }
}

pub fn is_real_level(e: C64, tol: f64) -> bool {
    e.im.abs() < tol * (1.0 + e.re.abs())
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SpectrumDoc {
    #[serde(flatten)]
    header: Header,
    potential: PotentialSpec,
    backend: Backend,
    #[serde(default)]
    contour: Option<Contour>,
    grid: GridInfo,
    levels: Vec<Level>,
    #[serde(default)]
    eigenvectors: Option<MatrixDoc>,
    #[serde(default)]
    eigenfunctions: Vec<EigenfunctionSamples>,
    converged: bool,
}

impl SpectrumDoc {
    pub(crate) fn from_spectrum(s: &Spectrum) -> Self {
        Self {
            header: Header::new("spectrum"),
            potential: s.potential,
            backend: s.backend,
            contour: s.contour,
            grid: s.grid.clone(),
            levels: s.levels.clone(),
            eigenvectors: s.eigenvectors.as_ref().map(MatrixDoc::from_matrix),
            eigenfunctions: s.eigenfunctions.clone(),
            converged: s.converged,
        }
    }

    pub(crate) fn into_spectrum(self) -> Result<Spectrum> {
        io::check_header(&self.header, "spectrum")?;
        let eigenvectors = self.eigenvectors.as_ref().map(MatrixDoc::to_matrix).transpose()?;
        let s = Spectrum {
            potential: self.potential,
            backend: self.backend,
            contour: self.contour,
            grid: self.grid,
            levels: self.levels,
            eigenvectors,
            eigenfunctions: self.eigenfunctions,
            converged: self.converged,
        };
        s.validate_structure()?;
        Ok(s)
    }
}
