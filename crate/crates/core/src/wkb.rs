//! Leading-order WKB estimates used to seed the eigenvalue search.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

/// WKB estimate of `Eₙ` for `p² + λx²(ix)^ε`:
///
/// ```text
/// Eₙ ≈ λ^{2/(ε+4)} [Γ(3/2 + 1/(ε+2)) √π (n + 1/2) / (sin(π/(ε+2)) Γ(1 + 1/(ε+2)))]^{(2ε+4)/(ε+4)}
/// ```
///
/// The `μx²` term is ignored unless it is the only term, in which case the
/// oscillator levels `√μ(2n+1)` are returned.
pub fn wkb_energy(potential: &PotentialSpec, n: usize) -> Result<f64> {
    let eps = potential.epsilon;
    if potential.lambda > 0.0 {
        let a = 1.0 / (eps + 2.0);
        let base = gamma(1.5 + a) * PI.sqrt() * (n as f64 + 0.5) / ((PI * a).sin() * gamma(1.0 + a));
        let exponent = (2.0 * eps + 4.0) / (eps + 4.0);
        Ok(potential.lambda.powf(2.0 / (eps + 4.0)) * base.powf(exponent))
    } else if potential.lambda == 0.0 && potential.mu > 0.0 {
        Ok(potential.mu.sqrt() * (2.0 * n as f64 + 1.0))
    } else {
        Err(Error::InvalidInput(format!(
            "no WKB seed for mu = {}, lambda = {}",
            potential.mu, potential.lambda
        )))
    }
}

pub fn wkb_energies(potential: &PotentialSpec, count: usize) -> Result<Vec<f64>> {
    (0..count).map(|n| wkb_energy(potential, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_case_is_exact() {
        let p = PotentialSpec::standard(0.0).unwrap();
        for n in 0..6 {
            assert!((wkb_energy(&p, n).unwrap() - (2 * n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_seeds_are_close() {
        let p = PotentialSpec::standard(1.0).unwrap();
        let e0 = wkb_energy(&p, 0).unwrap();
        assert!((e0 - 1.156).abs() / 1.156 < 0.1);
        let e3 = wkb_energy(&p, 3).unwrap();
        assert!((e3 - 11.314).abs() / 11.314 < 0.02);
    }
}
