//! The potential family, its Stokes wedges, and two-ray integration contours.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, I};

/// `v(x) = −μx² − λx^{2+ε}`, evaluated as `V(x) := v(ix) = μx² + λx²(ix)^ε`.
///
/// The defaults `μ = 0`, `λ = 1` give `H = p² + x²(ix)^ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub epsilon: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl PotentialSpec {
    pub fn new(epsilon: f64, mu: f64, lambda: f64) -> Result<Self> {
        let spec = Self { epsilon, mu, lambda };
        spec.validate()?;
        Ok(spec)
    }

    /// `H = p² + x²(ix)^ε`.
    pub fn standard(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.mu.is_finite() && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("potential parameters must be finite".into()));
        }
        if self.epsilon < 0.0 {
            return Err(Error::NegativeEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// `ε` as an integer when it is one.
    pub fn integer_epsilon(&self) -> Option<u32> {
        (self.epsilon.fract() == 0.0 && self.epsilon <= 64.0).then_some(self.epsilon as u32)
    }

    /// `(ix)^ε` on the principal branch; the cut lies on the positive imaginary `x` axis.
    pub fn ix_pow(&self, x: C64) -> C64 {
        let z = I * x;
        match self.integer_epsilon() {
            Some(n) => z.powi(n as i32),
            None if z == C64::new(0.0, 0.0) => C64::new(0.0, 0.0),
            None => z.powf(self.epsilon),
        }
    }

    /// `V(x) = μx² + λx²(ix)^ε`
    pub fn eval(&self, x: C64) -> C64 {
        let x2 = x * x;
        x2 * (self.mu + self.lambda * self.ix_pow(x))
    }

    /// `V'(x) = 2μx + λ(2+ε)x(ix)^ε`
    pub fn derivative(&self, x: C64) -> C64 {
        x * (2.0 * self.mu + self.lambda * (2.0 + self.epsilon) * self.ix_pow(x))
    }

    /// Growth exponent of `|V|` along a ray.
    pub fn degree(&self) -> f64 {
        if self.lambda != 0.0 {
            2.0 + self.epsilon
        } else {
            2.0
        }
    }
}

/// Angular sectors in which the recessive solution decays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesWedges {
    pub center_right: f64,
    pub center_left: f64,
    pub opening: f64,
}

impl StokesWedges {
    pub fn contains_right(&self, theta: f64) -> bool {
        angle_distance(theta, self.center_right) < 0.5 * self.opening
    }

    pub fn contains_left(&self, theta: f64) -> bool {
        angle_distance(theta, self.center_left) < 0.5 * self.opening
    }
}

/// Wedge centers `−επ/(2ε+8)`, `−π + επ/(2ε+8)` and opening `2π/(ε+4)`.
pub fn stokes_wedges(epsilon: f64) -> Result<StokesWedges> {
    if !epsilon.is_finite() {
        return Err(Error::InvalidInput("epsilon must be finite".into()));
    }
    if epsilon < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    let center_right = -epsilon * PI / (2.0 * epsilon + 8.0);
    Ok(StokesWedges {
        center_right,
        center_left: -PI - center_right,
        opening: 2.0 * PI / (epsilon + 4.0),
    })
}

/// `|a − b|` folded into `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Default ratio `|V(endpoint)| / |E|` demanded at the ray ends.
pub const DEFAULT_DECAY_FACTOR: f64 = 1e3;

/// Two rays `x = junction + r e^{iθ}`, `0 ≤ r ≤ ray_length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub theta_left: f64,
    pub theta_right: f64,
    #[serde(with = "crate::io::complex")]
    pub junction: C64,
    pub ray_length: f64,
}

impl Contour {
    pub fn new(theta_left: f64, theta_right: f64, junction: C64, ray_length: f64) -> Self {
        Self {
            theta_left,
            theta_right,
            junction,
            ray_length,
        }
    }

    /// Rays along the wedge centers, long enough that `|V| ≥ decay_factor·max(|E|, 1)`
    /// at both endpoints for every `|E| ≤ energy_scale`.
    pub fn centered(potential: &PotentialSpec, energy_scale: f64, decay_factor: f64) -> Result<Self> {
        let w = stokes_wedges(potential.epsilon)?;
        Self::with_angles(potential, w.center_left, w.center_right, C64::new(0.0, 0.0), energy_scale, decay_factor)
    }

    /// Rays at the given angles with the ray length chosen as in [`Contour::centered`].
    pub fn with_angles(
        potential: &PotentialSpec,
        theta_left: f64,
        theta_right: f64,
        junction: C64,
        energy_scale: f64,
        decay_factor: f64,
    ) -> Result<Self> {
        let target = decay_factor * energy_scale.abs().max(1.0);
        let mut contour = Self::new(theta_left, theta_right, junction, 1.0);
        let strength = potential.lambda.abs().max(potential.mu.abs());
        if strength == 0.0 {
            return Err(Error::InvalidContour("potential vanishes identically".into()));
        }
        let mut r = (target / strength).powf(1.0 / potential.degree()).max(1.0);
        for _ in 0..200 {
            contour.ray_length = r;
            if contour.endpoint_ratio(potential, energy_scale) >= decay_factor {
                return Ok(contour);
            }
            r *= 1.05;
        }
        Err(Error::InvalidContour(format!(
            "no ray length up to {r:.3e} reaches |V| / |E| = {decay_factor:.1e}"
        )))
    }

    pub fn point(&self, side: Side, r: f64) -> C64 {
        self.junction + C64::from_polar(r, self.angle(side))
    }

    pub fn angle(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.theta_left,
            Side::Right => self.theta_right,
        }
    }

    pub fn direction(&self, side: Side) -> C64 {
        C64::from_polar(1.0, self.angle(side))
    }

    /// `min |V(endpoint)| / max(|E|, 1)` over both rays.
    pub fn endpoint_ratio(&self, potential: &PotentialSpec, energy_scale: f64) -> f64 {
        let e = energy_scale.abs().max(1.0);
        [Side::Left, Side::Right]
            .iter()
            .map(|&side| potential.eval(self.point(side, self.ray_length)).norm() / e)
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that both rays lie strictly inside their wedges and are long enough.
    pub fn validate(&self, potential: &PotentialSpec, energy_scale: f64, decay_factor: f64) -> Result<()> {
        if !(self.theta_left.is_finite()
            && self.theta_right.is_finite()
            && self.junction.re.is_finite()
            && self.junction.im.is_finite()
            && self.ray_length.is_finite()
            && self.ray_length > 0.0)
        {
            return Err(Error::InvalidContour("non-finite or non-positive contour parameters".into()));
        }
        let w = stokes_wedges(potential.epsilon)?;
        if !w.contains_right(self.theta_right) {
            return Err(Error::InvalidContour(format!(
                "right ray angle {:.6} is outside the wedge centred at {:.6} with opening {:.6}",
                self.theta_right, w.center_right, w.opening
            )));
        }
        if !w.contains_left(self.theta_left) {
            return Err(Error::InvalidContour(format!(
                "left ray angle {:.6} is outside the wedge centred at {:.6} with opening {:.6}",
                self.theta_left, w.center_left, w.opening
            )));
        }
        if self.junction.im > 0.0 {
            return Err(Error::InvalidContour(
                "junction must not lie above the real axis (branch cut of (ix)^ε)".into(),
            ));
        }
        let ratio = self.endpoint_ratio(potential, energy_scale);
        if ratio < decay_factor {
            return Err(Error::InvalidContour(format!(
                "ray length {:.4} gives |V|/|E| = {ratio:.3e} below the required {decay_factor:.1e}",
                self.ray_length
            )));
        }
        Ok(())
    }

    /// Invariant under `x → −x*`: mirrored angles and a junction on the imaginary axis.
    pub fn is_pt_symmetric(&self) -> bool {
        angle_distance(self.theta_left, -PI - self.theta_right) < 1e-12 && self.junction.re.abs() < 1e-12
    }

    /// Both rays on the real axis through the origin.
    pub fn is_real_axis(&self) -> bool {
        angle_distance(self.theta_right, 0.0) < 1e-12
            && angle_distance(self.theta_left, PI) < 1e-12
            && self.junction.norm() < 1e-12
    }
}
