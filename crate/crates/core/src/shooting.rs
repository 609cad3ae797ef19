//! Contour shooting: recessive solutions from both ray ends matched at the junction.
//!
//! Far out on each ray the logarithmic derivative `w = φ'/φ` obeys a Riccati
//! equation that is integrated in a stretched variable `s`, with `ds/dr ≈ |√V|`,
//! so the step count stays bounded as the ray grows. Once `|V − E|` is comparable
//! to `E` the pair `(φ, φ')` is integrated linearly down to the junction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ode::{integrate, StepControl};
use crate::potential::{Contour, PotentialSpec, Side, DEFAULT_DECAY_FACTOR};
use crate::spectrum::{Backend, EigenfunctionSamples, GridInfo, Level, Spectrum};
use crate::wkb::wkb_energies;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingConfig {
    /// Step control of the matching region near the junction.
    pub control: StepControl,
    /// Relative tolerance of the Riccati tail (always adaptive).
    pub tail_rtol: f64,
    /// The tail ends where `|V − E| < switch_factor·(1 + |E|)`.
    pub switch_factor: f64,
    pub residual_tol: f64,
    /// Scan points per level window.
    pub scan_points: usize,
    pub max_iterations: usize,
    /// Largest relative local error tolerated under fixed steps.
    pub fixed_error_limit: f64,
    /// Convergence threshold on the per-level error estimate (relative to `1 + |E|`).
    pub convergence_tol: f64,
    pub eigenfunctions: bool,
    /// Uniform spacing in `r` of recorded eigenfunction samples.
    pub sample_spacing: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            control: StepControl::Adaptive { rtol: 1e-10, atol: 1e-12 },
            tail_rtol: 1e-11,
            switch_factor: 4.0,
            residual_tol: 1e-8,
            scan_points: 16,
            max_iterations: 60,
            fixed_error_limit: 1e-2,
            convergence_tol: 1e-8,
            eigenfunctions: true,
            sample_spacing: 0.05,
        }
    }
}

impl ShootingConfig {
    fn coarse(&self) -> Self {
        let control = match self.control {
            StepControl::Adaptive { rtol, atol } => StepControl::Adaptive {
                rtol: rtol * 32.0,
                atol: atol * 32.0,
            },
            StepControl::Fixed { steps } => StepControl::Fixed { steps: (steps / 2).max(1) },
        };
        Self {
            control,
            tail_rtol: self.tail_rtol * 32.0,
            fixed_error_limit: f64::INFINITY,
            eigenfunctions: false,
            ..*self
        }
    }

    fn grid_info(&self) -> GridInfo {
        match self.control {
            StepControl::Adaptive { rtol, .. } => GridInfo::Adaptive {
                rtol,
                tail_rtol: self.tail_rtol,
            },
            StepControl::Fixed { steps } => GridInfo::Fixed {
                steps,
                tail_rtol: self.tail_rtol,
            },
        }
    }
}

/// Rays at the wedge centers, long enough for the lowest `n_levels` levels.
pub fn default_contour(potential: &PotentialSpec, n_levels: usize) -> Result<Contour> {
    Contour::centered(potential, energy_scale(potential, n_levels)?, DEFAULT_DECAY_FACTOR)
}

/// Upper bound on the energies sought for `n_levels` levels.
pub fn energy_scale(potential: &PotentialSpec, n_levels: usize) -> Result<f64> {
    let seeds = wkb_energies(potential, n_levels.max(1) + 1)?;
    Ok(seeds.last().copied().unwrap_or(1.0).abs() * 1.5 + 1.0)
}

/// Normalized Wronskian mismatch `D(E)` at the junction under the given step control.
pub fn shoot(e: C64, potential: &PotentialSpec, contour: &Contour, control: StepControl) -> Result<C64> {
    let config = ShootingConfig {
        control,
        ..ShootingConfig::default()
    };
    shoot_with(e, potential, contour, &config)
}

pub fn shoot_with(e: C64, potential: &PotentialSpec, contour: &Contour, config: &ShootingConfig) -> Result<C64> {
    Ok(Shooter::new(potential, contour, config).discriminant(e, false)?.d)
}

struct SideRun {
    /// `(φ, φ')` at the junction, up to a positive scale.
    u: [C64; 2],
    /// `(r, log φ)` with `log φ = 0` at the start of the matching region.
    samples: Vec<(f64, C64)>,
}

struct Evaluation {
    d: C64,
    left: SideRun,
    right: SideRun,
}

struct Shooter<'a> {
    potential: &'a PotentialSpec,
    contour: &'a Contour,
    config: &'a ShootingConfig,
    sqrt_mu: f64,
    sqrt_lambda: f64,
    q: f64,
}

impl<'a> Shooter<'a> {
    fn new(potential: &'a PotentialSpec, contour: &'a Contour, config: &'a ShootingConfig) -> Self {
        Self {
            potential,
            contour,
            config,
            sqrt_mu: potential.mu.abs().sqrt(),
            sqrt_lambda: potential.lambda.abs().sqrt(),
            q: (2.0 + potential.epsilon) / 2.0,
        }
    }

    fn rho(&self, r: f64) -> f64 {
        1.0 + self.sqrt_mu * r + self.sqrt_lambda * r.powf(self.q)
    }

    fn stretch(&self, r: f64) -> f64 {
        r + self.sqrt_mu * r * r / 2.0 + self.sqrt_lambda * r.powf(self.q + 1.0) / (self.q + 1.0)
    }

    fn switch_radius(&self, e: C64) -> f64 {
        const SCAN: usize = 400;
        let big = self.contour.ray_length;
        let threshold = self.config.switch_factor * (1.0 + e.norm());
        let mut best: f64 = 0.0;
        for side in [Side::Left, Side::Right] {
            for k in (0..=SCAN).rev() {
                let r = big * k as f64 / SCAN as f64;
                if (self.potential.eval(self.contour.point(side, r)) - e).norm() < threshold {
                    best = best.max(r);
                    break;
                }
            }
        }
        best
    }

    fn discriminant(&self, e: C64, record: bool) -> Result<Evaluation> {
        let r_sw = self.switch_radius(e);
        let left = self.side(e, Side::Left, r_sw, record)?;
        let right = self.side(e, Side::Right, r_sw, record)?;
        let [pl, dl] = left.u;
        let [pr, dr] = right.u;
        let nl = (pl.norm_sqr() + dl.norm_sqr()).sqrt();
        let nr = (pr.norm_sqr() + dr.norm_sqr()).sqrt();
        let d = (pl * dr - dl * pr) / (nl * nr);
        Ok(Evaluation { d, left, right })
    }

    fn side(&self, e: C64, side: Side, r_sw: f64, record: bool) -> Result<SideRun> {
        let dir = self.contour.direction(side);
        let big = self.contour.ray_length;
        let spacing = record.then_some(self.config.sample_spacing);
        let mut samples = Vec::new();

        let (w_sw, log_sw) = if r_sw < big {
            let x = self.contour.point(side, big);
            let v = self.potential.eval(x);
            let mut k = (v - e).sqrt();
            if (k * dir).re < 0.0 {
                k = -k;
            }
            let w0 = -k - self.potential.derivative(x) / (4.0 * k * k);
            let f = |_s: f64, y: &[C64; 3]| -> [C64; 3] {
                let r = y[0].re.max(0.0);
                let rho = self.rho(r);
                let x = self.contour.point(side, r);
                let w = y[1];
                [
                    C64::new(1.0 / rho, 0.0),
                    dir * (self.potential.eval(x) - e - w * w) / rho,
                    dir * w / rho,
                ]
            };
            let tol = self.config.tail_rtol;
            let mut y = [C64::new(big, 0.0), w0, C64::new(0.0, 0.0)];
            for (a, b, on_grid) in breakpoints(big, r_sw, spacing) {
                y = integrate(
                    f,
                    self.stretch(a),
                    self.stretch(b),
                    y,
                    StepControl::Adaptive { rtol: tol, atol: tol },
                    [true, true, false],
                    |_, y| {
                        if y[1].re.is_finite() && y[1].im.is_finite() {
                            Ok(())
                        } else {
                            Err(Error::Overflow {
                                r: y[0].re,
                                side: side.name(),
                            })
                        }
                    },
                )?
                .y;
                if on_grid {
                    samples.push((b, y[2]));
                }
            }
            (y[1], y[2])
        } else {
            let x = self.contour.point(side, big);
            let mut k = (self.potential.eval(x) - e).sqrt();
            if (k * dir).re < 0.0 {
                k = -k;
            }
            (-k, C64::new(0.0, 0.0))
        };
        for s in &mut samples {
            s.1 -= log_sw;
        }

        let f = |r: f64, y: &[C64; 2]| -> [C64; 2] {
            let x = self.contour.point(side, r);
            [dir * y[1], dir * (self.potential.eval(x) - e) * y[0]]
        };
        let mut log_scale = 0.0;
        let mut max_local_error: f64 = 0.0;
        let mut y = [C64::new(1.0, 0.0), w_sw];
        for (a, b, on_grid) in breakpoints(r_sw, 0.0, spacing) {
            let lin = integrate(f, a, b, y, self.config.control, [true, true], |r, y| {
                let n = (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
                if !n.is_finite() {
                    return Err(Error::Overflow { r, side: side.name() });
                }
                if !(1e-50..=1e50).contains(&n) {
                    y[0] /= n;
                    y[1] /= n;
                    log_scale += n.ln();
                }
                Ok(())
            })?;
            max_local_error = max_local_error.max(lin.max_local_error);
            y = lin.y;
            if on_grid {
                samples.push((b, y[0].ln() + log_scale));
            }
        }
        if let StepControl::Fixed { steps } = self.config.control {
            if max_local_error > self.config.fixed_error_limit {
                return Err(Error::StepsTooSmall {
                    steps,
                    estimate: max_local_error,
                    tolerance: self.config.fixed_error_limit,
                });
            }
        }
        Ok(SideRun { u: y, samples })
    }
}

/// Segments `(a, b, b_on_grid)` covering `from → to` (descending), split at multiples of `spacing`.
fn breakpoints(from: f64, to: f64, spacing: Option<f64>) -> Vec<(f64, f64, bool)> {
    let Some(h) = spacing else {
        return if from > to { vec![(from, to, false)] } else { Vec::new() };
    };
    let mut out = Vec::new();
    let mut a = from;
    let mut j = (from / h).floor() as i64;
    if (j as f64) * h >= from {
        j -= 1;
    }
    while (j as f64) * h > to {
        let b = j as f64 * h;
        out.push((a, b, true));
        a = b;
        j -= 1;
    }
    if a > to {
        let on_grid = (to / h - (to / h).round()).abs() < 1e-9;
        out.push((a, to, on_grid));
    }
    out
}

/// Lowest `n_levels` eigenvalues on `contour`, seeded by WKB estimates.
pub fn find_eigenvalues(
    potential: &PotentialSpec,
    contour: &Contour,
    n_levels: usize,
    config: &ShootingConfig,
) -> Result<Spectrum> {
    if n_levels == 0 {
        return Err(Error::InvalidInput("n_levels must be at least 1".into()));
    }
    potential.validate()?;
    let seeds = wkb_energies(potential, n_levels + 1)?;
    contour.validate(potential, seeds[n_levels], DEFAULT_DECAY_FACTOR)?;

    let shooter = Shooter::new(potential, contour, config);
    let coarse_config = config.coarse();
    let coarse = Shooter::new(potential, contour, &coarse_config);

    let found: Vec<Result<(Level, Option<EigenfunctionSamples>)>> = (0..n_levels)
        .into_par_iter()
        .map(|n| {
            let below = if n == 0 { seeds[0] } else { seeds[n] - seeds[n - 1] };
            let above = seeds[n + 1] - seeds[n];
            let lo = seeds[n] - 0.5 * below;
            let hi = seeds[n] + 0.5 * above;
            let e = locate(&shooter, n, lo, hi, seeds[n], config)?;
            let eval = shooter.discriminant(e, config.eigenfunctions)?;
            let residual = eval.d.norm();
            if !(residual <= config.residual_tol) {
                return Err(Error::RootSearch {
                    level: n,
                    lo,
                    hi,
                    reason: format!("residual |D| = {residual:.3e} above tolerance"),
                    profile: scan_profile(&shooter, lo, hi, config.scan_points)?,
                });
            }
            let e_coarse = secant(&coarse, e, e + 1e-6 * (1.0 + e.norm()), config)?;
            let error_estimate = (e - e_coarse).norm() + 1e-13 * (1.0 + e.norm());
            let samples = config
                .eigenfunctions
                .then(|| assemble_eigenfunction(contour, &eval));
            Ok((
                Level {
                    energy: e,
                    residual,
                    error_estimate,
                },
                samples,
            ))
        })
        .collect();

    let mut pairs = Vec::with_capacity(n_levels);
    for r in found {
        pairs.push(r?);
    }
    pairs.sort_by(|a, b| a.0.energy.re.total_cmp(&b.0.energy.re));
    for (i, pair) in pairs.windows(2).enumerate() {
        let (a, b) = (pair[0].0, pair[1].0);
        let resolution = 1e-6 * (1.0 + a.energy.norm()) + 10.0 * (a.error_estimate + b.error_estimate);
        if (a.energy - b.energy).norm() < resolution {
            return Err(Error::Degenerate {
                first: i,
                second: i + 1,
                energy: a.energy.re,
            });
        }
    }
    let converged = pairs
        .iter()
        .all(|(l, _)| l.error_estimate < config.convergence_tol * (1.0 + l.energy.norm()));
    let (levels, eigenfunctions): (Vec<Level>, Vec<Option<EigenfunctionSamples>>) = pairs.into_iter().unzip();

    Ok(Spectrum {
        potential: *potential,
        backend: Backend::Shooting,
        contour: Some(*contour),
        grid: config.grid_info(),
        levels,
        eigenvectors: None,
        eigenfunctions: eigenfunctions.into_iter().flatten().collect(),
        converged,
    })
}

/// `|D|` on `k` evenly spaced real energies across `[lo, hi]`.
fn scan_profile(shooter: &Shooter, lo: f64, hi: f64, k: usize) -> Result<Vec<(f64, f64)>> {
    let k = k.max(2);
    (0..k)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (k - 1) as f64;
            Ok((e, shooter.discriminant(C64::new(e, 0.0), false)?.d.norm()))
        })
        .collect()
}

fn locate(shooter: &Shooter, level: usize, lo: f64, hi: f64, seed: f64, config: &ShootingConfig) -> Result<C64> {
    let width = hi - lo;
    let (wlo, whi) = (lo - 0.25 * width, hi + 0.25 * width);
    let mut profile = Vec::new();
    for refinement in [1usize, 4] {
        let k = (config.scan_points * refinement).max(4);
        let grid: Vec<f64> = (0..k).map(|i| lo + width * i as f64 / (k - 1) as f64).collect();
        let values = grid
            .iter()
            .map(|&e| shooter.discriminant(C64::new(e, 0.0), false).map(|ev| ev.d))
            .collect::<Result<Vec<_>>>()?;
        profile = grid.iter().zip(&values).map(|(&e, d)| (e, d.norm())).collect();

        let reference = values
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = if reference.norm() > 0.0 { reference / reference.norm() } else { C64::new(1.0, 0.0) };
        let projected: Vec<f64> = values.iter().map(|d| (d * phase.conj()).re).collect();

        let mut starts: Vec<(f64, f64)> = (0..k - 1)
            .filter(|&i| projected[i] * projected[i + 1] <= 0.0)
            .map(|i| (grid[i], grid[i + 1]))
            .collect();
        starts.sort_by(|a, b| ((a.0 + a.1) / 2.0 - seed).abs().total_cmp(&((b.0 + b.1) / 2.0 - seed).abs()));
        let best = (0..k).min_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm())).unwrap_or(0);
        starts.push((grid[best], grid[best] + width / (4.0 * k as f64)));

        for (a, b) in starts {
            if let Ok(e) = secant(shooter, C64::new(a, 0.0), C64::new(b, 0.0), config) {
                if e.re >= wlo && e.re <= whi && e.im.abs() < width {
                    return Ok(e);
                }
            }
        }
    }
    Err(Error::RootSearch {
        level,
        lo,
        hi,
        reason: "no root of the discriminant inside the window".into(),
        profile,
    })
}

fn secant(shooter: &Shooter, mut e0: C64, mut e1: C64, config: &ShootingConfig) -> Result<C64> {
    let mut d0 = shooter.discriminant(e0, false)?.d;
    let mut d1 = shooter.discriminant(e1, false)?.d;
    for _ in 0..config.max_iterations {
        if d1 == C64::new(0.0, 0.0) {
            return Ok(e1);
        }
        let denom = d1 - d0;
        if denom == C64::new(0.0, 0.0) {
            break;
        }
        let e2 = e1 - d1 * (e1 - e0) / denom;
        if !(e2.re.is_finite() && e2.im.is_finite()) {
            break;
        }
        let step = (e2 - e1).norm();
        e0 = e1;
        d0 = d1;
        e1 = e2;
        d1 = shooter.discriminant(e1, false)?.d;
        if step <= 1e-12 * (1.0 + e1.norm()) {
            return Ok(e1);
        }
    }
    Err(Error::RootSearch {
        level: 0,
        lo: e1.re,
        hi: e1.re,
        reason: "secant iteration did not converge".into(),
        profile: Vec::new(),
    })
}

/// Joins both sides at the junction, normalizes to unit arclength `L²` norm,
/// and fixes the phase so that `φ(junction)` (or `φ'` when `φ` vanishes there) is real positive.
fn assemble_eigenfunction(contour: &Contour, eval: &Evaluation) -> EigenfunctionSamples {
    let big = contour.ray_length;
    let [pl, dl] = eval.left.u;
    let [pr, dr] = eval.right.u;
    let nl = (pl.norm_sqr() + dl.norm_sqr()).sqrt();
    let nr = (pr.norm_sqr() + dr.norm_sqr()).sqrt();
    let use_value = (pl.norm() / nl).min(pr.norm() / nr) > 0.1;

    // log of φ at the junction relative to the start of each side's matching region
    let junction_log = |run: &SideRun| run.samples.last().map(|s| s.1).unwrap_or_default();
    let (shift_l, shift_r) = if use_value {
        (junction_log(&eval.left), junction_log(&eval.right))
    } else {
        // match φ' instead: φ'/φ at the junction is u[1]/u[0]
        (
            junction_log(&eval.left) + (dl / pl).ln(),
            junction_log(&eval.right) + (dr / pr).ln(),
        )
    };

    let mut arclength = Vec::new();
    let mut x = Vec::new();
    let mut logs = Vec::new();
    for &(r, lg) in &eval.left.samples {
        arclength.push(big - r);
        x.push(contour.point(Side::Left, r));
        logs.push(lg - shift_l);
    }
    for &(r, lg) in eval.right.samples.iter().rev() {
        if r == 0.0 && !arclength.is_empty() {
            continue;
        }
        arclength.push(big + r);
        x.push(contour.point(Side::Right, r));
        logs.push(lg - shift_r);
    }
    let mut phi: Vec<C64> = logs.iter().map(|l| l.exp()).collect();
    for p in &mut phi {
        if !(p.re.is_finite() && p.im.is_finite()) {
            *p = C64::new(0.0, 0.0);
        }
    }

    let peak = phi.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let keep = |p: &C64| p.norm() > 1e-30 * peak;
    let first = phi.iter().position(keep).unwrap_or(0);
    let last = phi.iter().rposition(keep).map_or(phi.len(), |i| i + 1);
    let arclength = arclength[first..last].to_vec();
    let x = x[first..last].to_vec();
    let mut phi = phi[first..last].to_vec();
    let mut norm2 = 0.0;
    for i in 1..phi.len() {
        norm2 += 0.5 * (phi[i].norm_sqr() + phi[i - 1].norm_sqr()) * (arclength[i] - arclength[i - 1]);
    }
    let scale = if norm2 > 0.0 { 1.0 / norm2.sqrt() } else { 1.0 };
    for p in &mut phi {
        *p *= scale;
    }
    EigenfunctionSamples { arclength, x, phi }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::linalg::c;

    #[test]
    fn discriminant_vanishes_on_harmonic_levels() {
        let p = PotentialSpec::standard(0.0).unwrap();
        let ct = default_contour(&p, 3).unwrap();
        let control = ShootingConfig::default().control;
        assert!(shoot(c(1.0, 0.0), &p, &ct, control).unwrap().norm() < 1e-6);
        assert!(shoot(c(2.0, 0.0), &p, &ct, control).unwrap().norm() > 1e-2);
    }

    #[test]
    fn harmonic_levels() {
        let p = PotentialSpec::standard(0.0).unwrap();
        let ct = default_contour(&p, 3).unwrap();
        let s = find_eigenvalues(&p, &ct, 3, &ShootingConfig::default()).unwrap();
        for (n, l) in s.levels.iter().enumerate() {
            assert!((l.energy - c((2 * n + 1) as f64, 0.0)).norm() < 1e-8);
            assert!(l.error_estimate < 1e-6);
        }
        assert_eq!(s.eigenfunctions.len(), 3);
    }

    #[test]
    fn ground_state_is_node_free_and_normalized() {
        let p = PotentialSpec::standard(0.0).unwrap();
        let ct = Contour::with_angles(&p, -PI, 0.0, c(0.0, 0.0), energy_scale(&p, 1).unwrap(), 1e3).unwrap();
        let s = find_eigenvalues(&p, &ct, 1, &ShootingConfig::default()).unwrap();
        let f = &s.eigenfunctions[0];
        let norm: f64 = f
            .arclength
            .windows(2)
            .zip(f.phi.windows(2))
            .map(|(s, p)| 0.5 * (s[1] - s[0]) * (p[0].norm_sqr() + p[1].norm_sqr()))
            .sum();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
        // exp(−x²/2)/π^{1/4} at x = 0
        let mid = f.x.iter().position(|x| x.norm() < 1e-9).unwrap();
        assert!((f.phi[mid].re - PI.powf(-0.25)).abs() < 1e-6);
    }

    #[test]
    fn too_few_fixed_steps_is_an_error() {
        let p = PotentialSpec::standard(1.0).unwrap();
        let ct = default_contour(&p, 1).unwrap();
        let config = ShootingConfig {
            control: StepControl::Fixed { steps: 1 },
            ..ShootingConfig::default()
        };
        assert!(matches!(
            find_eigenvalues(&p, &ct, 1, &config),
            Err(Error::StepsTooSmall { .. })
        ));
    }

    #[test]
    fn coarse_config_relaxes_resolution() {
        let c = ShootingConfig {
            control: StepControl::Fixed { steps: 40 },
            ..ShootingConfig::default()
        }
        .coarse();
        assert_eq!(c.control, StepControl::Fixed { steps: 20 });
        assert!(!c.eigenfunctions);
    }
}
