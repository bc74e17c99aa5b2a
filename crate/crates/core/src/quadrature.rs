//! Composite Simpson quadrature.

use crate::error::{Error, Result};

const START_INTERVALS: usize = 32;
const MAX_INTERVALS: usize = 1 << 22;

/// Composite Simpson rule with `intervals` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// Composite Simpson with interval doubling until the Richardson estimate
/// drops below `tol` or the interval budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_budget(f, a, b, tol, MAX_INTERVALS)
}

/// [`integrate`] with an explicit cap on the number of subintervals.
pub fn integrate_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    if a == b {
        return Ok(0.0);
    }
    let mut n = START_INTERVALS;
    let mut prev = simpson(&f, a, b, n);
    while n < max_intervals {
        n *= 2;
        let next = simpson(&f, a, b, n);
        if crate::math::abs(next - prev) <= 15.0 * tol {
            return Ok(next + (next - prev) / 15.0);
        }
        prev = next;
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 2);
        assert!((v - (15.0 / 4.0 - 3.0 + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn sine_converges() {
        let v = integrate(crate::math::sin, 0.0, core::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
    }
}
