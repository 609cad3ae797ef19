//! Dormand–Prince 5(4) integration of small complex systems.

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Error-controlled steps with mixed relative/absolute tolerance.
    Adaptive { rtol: f64, atol: f64 },
    /// Uniform steps; the embedded estimate is only reported.
    Fixed { steps: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct Integration<const N: usize> {
    pub y: [C64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// Largest relative local error estimate over accepted steps.
    pub max_local_error: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ for the embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let s = h * coef;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `mask` selects the components that enter the error norm. `observer` runs
/// after every accepted step and may rescale the state in place.
pub fn integrate<const N: usize, F, O>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [C64; N],
    control: StepControl,
    mask: [bool; N],
    mut observer: O,
) -> Result<Integration<N>>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
    O: FnMut(f64, &mut [C64; N]) -> Result<()>,
{
    let span = t1 - t0;
    let mut out = Integration {
        y: y0,
        accepted: 0,
        rejected: 0,
        max_local_error: 0.0,
    };
    if span == 0.0 {
        return Ok(out);
    }
    let dir = span.signum();

    let (rtol, atol, fixed_steps) = match control {
        StepControl::Adaptive { rtol, atol } => (rtol, atol, None),
        StepControl::Fixed { steps } => (0.0, 0.0, Some(steps.max(1))),
    };

    let error_norm = |y: &[C64; N], ynew: &[C64; N], err: &[C64; N], relative_only: bool| -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..N {
            if !mask[i] {
                continue;
            }
            let scale = if relative_only {
                y[i].norm().max(ynew[i].norm()).max(1e-300)
            } else {
                atol + rtol * y[i].norm().max(ynew[i].norm())
            };
            worst = worst.max(err[i].norm() / scale);
        }
        worst
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = match fixed_steps {
        Some(n) => span / n as f64,
        None => dir * (span.abs() / 100.0),
    };
    let mut steps_taken = 0usize;

    loop {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let last = match fixed_steps {
            Some(n) => steps_taken + 1 == n,
            None => (h.abs() >= remaining.abs()) || (remaining.abs() - h.abs()) < 1e-12 * span.abs(),
        };
        if last {
            h = remaining;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let ynew = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &ynew);
        let zero = [C64::new(0.0, 0.0); N];
        let err = axpy(
            &zero,
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );

        if fixed_steps.is_some() {
            out.max_local_error = out.max_local_error.max(error_norm(&y, &ynew, &err, true));
            t = if last { t1 } else { t + h };
            y = ynew;
            steps_taken += 1;
            out.accepted += 1;
            observer(t, &mut y)?;
            k1 = f(t, &y);
            if last {
                break;
            }
            continue;
        }

        let e = error_norm(&y, &ynew, &err, false);
        if !e.is_finite() {
            h *= 0.2;
            out.rejected += 1;
        } else if e <= 1.0 {
            t = if last { t1 } else { t + h };
            y = ynew;
            out.accepted += 1;
            out.max_local_error = out.max_local_error.max(e * rtol);
            let rescaled_before = y;
            observer(t, &mut y)?;
            k1 = if rescaled_before == y { k7 } else { f(t, &y) };
            if last {
                break;
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            out.rejected += 1;
            h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h.abs() < 1e-14 * t.abs().max(span.abs()) {
            return Err(Error::StepSizeUnderflow { s: t, h });
        }
        if out.accepted + out.rejected > 50_000_000 {
            return Err(Error::StepSizeUnderflow { s: t, h });
        }
    }
    out.y = y;
    Ok(out)
}
