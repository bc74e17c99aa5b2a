//! The Weierstraß function `W_β(x) = Σ 2^{-nβ} cos(2^n π x)` and its primitive.
//!
//! Phases are reduced exactly: `2^n x mod 2` is obtained by repeated
//! doubling of `x mod 2`, which is exact in binary floating point. Once the
//! phase hits zero the remaining cosine terms are all one and their
//! geometric tail is added in closed form.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

/// Default truncation tolerance for the series.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierstrassSpec {
    beta: f64,
    tol: f64,
    terms: u32,
    ratio: f64,
}

impl WeierstrassSpec {
    /// Truncated series with tail bound `tol`, for `0 < β <= 1`.
    pub fn new(beta: f64, tol: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidExponent(beta));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        let ratio = math::exp2(-beta);
        let n = math::ceil(math::log2(1.0 / (tol * (1.0 - ratio))) / beta).max(1.0);
        Ok(Self { beta, tol, terms: n as u32, ratio })
    }

    pub fn with_default_tol(beta: f64) -> Result<Self> {
        Self::new(beta, DEFAULT_TOL)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Number of summed terms `N`; the omitted tail is at most `tol`.
    pub fn terms(&self) -> u32 {
        self.terms
    }

    fn tail(&self, weight: f64, from: u32) -> f64 {
        // sum_{m=from}^{N-1} ratio^m given weight = ratio^from
        let left = (self.terms - from) as i32;
        weight * (1.0 - libm::pow(self.ratio, left as f64)) / (1.0 - self.ratio)
    }

    /// `W_β(x)` truncated to `terms()` terms.
    pub fn value(&self, x: f64) -> f64 {
        let mut r = reduce(x);
        let mut w = 1.0;
        let mut acc = 0.0;
        for n in 0..self.terms {
            if r == 0.0 {
                return acc + self.tail(w, n);
            }
            acc += w * math::cos(PI * centered(r));
            r = double(r);
            w *= self.ratio;
        }
        acc
    }

    /// Primitive `F(x) = Σ 2^{-nβ} sin(2^n π x) / (2^n π)`, with `F(0) = 0`.
    pub fn primitive(&self, x: f64) -> f64 {
        let mut r = reduce(x);
        let mut w = 1.0 / PI;
        let mut acc = 0.0;
        for _ in 0..self.terms {
            if r == 0.0 {
                break;
            }
            acc += w * math::sin(PI * centered(r));
            r = double(r);
            w *= self.ratio * 0.5;
        }
        acc
    }

    /// `W_β(0)` for the truncated series.
    pub fn at_zero(&self) -> f64 {
        self.tail(1.0, 0)
    }
}

fn reduce(x: f64) -> f64 {
    let mut r = libm::fmod(x, 2.0);
    if r < 0.0 {
        r += 2.0;
    }
    if r >= 2.0 {
        r -= 2.0;
    }
    r
}

#[inline]
fn double(r: f64) -> f64 {
    let d = 2.0 * r;
    if d >= 2.0 {
        d - 2.0
    } else {
        d
    }
}

#[inline]
fn centered(r: f64) -> f64 {
    if r > 1.0 {
        r - 2.0
    } else {
        r
    }
}

/// Hölder constant used for the Weierstraß composites:
/// `π / (1 - 2^{β-1}) + 3 / (1 - 2^{-β})`, finite only for `0 < β < 1`.
pub fn lw_constant(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::InvalidExponent(beta));
    }
    if beta >= 1.0 {
        return Err(Error::UnboundedConstant(beta));
    }
    Ok(PI / (1.0 - math::exp2(beta - 1.0)) + 3.0 / (1.0 - math::exp2(-beta)))
}

/// Bound on the β-Hölder quotient of `W_β`:
/// `π / (1 - 2^{β-1}) + 2 / (1 - 2^{-β})`.
pub fn holder_quotient_bound(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::InvalidExponent(beta));
    }
    if beta >= 1.0 {
        return Err(Error::UnboundedConstant(beta));
    }
    Ok(PI / (1.0 - math::exp2(beta - 1.0)) + 2.0 / (1.0 - math::exp2(-beta)))
}
