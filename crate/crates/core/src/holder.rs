//! Grid estimate of the modified Hölder norm
//! `‖p‖_{β,β*,U} = Σ_{k<=r} ‖p^{(k)}‖_U + sup |p^{(r)}(x) - p^{(r)}(y)| / |x - y|^{β-r}`
//! with `r` the largest integer strictly below `min(β, β*)`.
//!
//! Derivative sup norms are exact for polynomial pieces; the quotient uses
//! all pairs of a 512-point interior grid, so the result is a lower bound of
//! the true norm. It is `∞` whenever `p^{(r)}` fails to exist on `U`, and when
//! the quotient exponent exceeds one (or `β = ∞`) the quotient is `0` for a
//! constant `p^{(r)}` and `∞` otherwise.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::piecewise::{extremes_interior, horner, Piece, PiecewiseFunction};

pub const GRID_POINTS: usize = 512;
const JUMP_TOL: f64 = 1e-12;

struct Seg<'a> {
    a: f64,
    b: f64,
    piece: Option<&'a Piece>,
}

impl Seg<'_> {
    fn has_weier(&self) -> bool {
        self.piece.is_some_and(|p| p.weier.is_some_and(|w| w.scale != 0.0))
    }
    fn deriv_poly(&self, k: usize) -> Vec<f64> {
        match self.piece {
            Some(p) => p.poly_derivative(k),
            None => alloc::vec![0.0],
        }
    }
    fn deriv(&self, k: usize, x: f64) -> f64 {
        match self.piece {
            Some(p) if k == 0 => p.value(x),
            _ => horner(&self.deriv_poly(k), x),
        }
    }
}

/// Strict floor: the largest integer `r < x`, for `x > 0`.
pub fn strict_floor(x: f64) -> usize {
    (math::ceil(x) as i64 - 1).max(0) as usize
}

fn segments(f: &PiecewiseFunction, lo: f64, hi: f64) -> Vec<Seg<'_>> {
    let mut out = Vec::new();
    let mut cursor = lo;
    f.for_each_overlap(lo, hi, |a, b, p| {
        if a > cursor {
            out.push(Seg { a: cursor, b: a, piece: None });
        }
        out.push(Seg { a, b, piece: Some(p) });
        cursor = b;
    });
    if cursor < hi {
        out.push(Seg { a: cursor, b: hi, piece: None });
    }
    out
}

fn seg_at<'s, 'a>(segs: &'s [Seg<'a>], x: f64) -> &'s Seg<'a> {
    let i = segs.partition_point(|s| s.b < x).min(segs.len() - 1);
    &segs[i]
}

/// Grid estimate of `‖f‖_{β,β*,(lo,hi)}`; `beta` may be `f64::INFINITY`.
pub fn modified_holder_norm(f: &PiecewiseFunction, beta: f64, beta_star: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidExponent(beta));
    }
    if !(beta_star > 0.0 && beta_star.is_finite()) {
        return Err(Error::InvalidExponent(beta_star));
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let r = strict_floor(beta.min(beta_star));
    let segs = segments(f, lo, hi);

    if r >= 1 && segs.iter().any(|s| s.has_weier()) {
        return Ok(f64::INFINITY);
    }
    for w in segs.windows(2) {
        let x = w[0].b;
        for k in 0..=r {
            let l = w[0].deriv(k, x);
            let rr = w[1].deriv(k, x);
            if math::abs(l - rr) > JUMP_TOL * l.abs().max(1.0) {
                return Ok(f64::INFINITY);
            }
        }
    }

    let mut total = 0.0;
    for k in 0..=r {
        let mut sup: f64 = 0.0;
        for s in &segs {
            if k == 0 && s.has_weier() {
                let n = 2048;
                for i in 0..=n {
                    sup = sup.max(math::abs(s.deriv(0, s.a + (s.b - s.a) * i as f64 / n as f64)));
                }
            } else {
                let c = s.deriv_poly(k);
                sup = sup.max(math::abs(horner(&c, s.a))).max(math::abs(horner(&c, s.b)));
                extremes_interior(&c, s.a, s.b, &mut |v: f64| sup = sup.max(math::abs(v)));
            }
        }
        total += sup;
    }

    let constant_top = {
        let mut value: Option<f64> = None;
        segs.iter().all(|s| {
            if s.has_weier() {
                return false;
            }
            let c = s.deriv_poly(r);
            if c.iter().skip(1).any(|&v| v != 0.0) {
                return false;
            }
            match value {
                None => {
                    value = Some(c[0]);
                    true
                }
                Some(v) => math::abs(v - c[0]) <= JUMP_TOL,
            }
        })
    };
    let e = beta - r as f64;
    let quotient = if !beta.is_finite() || e > 1.0 {
        if constant_top {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        let step = (hi - lo) / GRID_POINTS as f64;
        let xs: Vec<f64> = (0..GRID_POINTS).map(|i| lo + (i as f64 + 0.5) * step).collect();
        let ds: Vec<f64> = xs.iter().map(|&x| seg_at(&segs, x).deriv(r, x)).collect();
        let mut q: f64 = 0.0;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                let v = math::abs(ds[i] - ds[j]) / math::powf(xs[j] - xs[i], e);
                q = q.max(v);
            }
        }
        q
    };
    Ok(total + quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::AnalyticDensity;
    use alloc::vec;

    #[test]
    fn strict_floor_examples() {
        assert_eq!(strict_floor(1.0), 0);
        assert_eq!(strict_floor(0.5), 0);
        assert_eq!(strict_floor(2.0), 1);
        assert_eq!(strict_floor(1.5), 1);
    }

    #[test]
    fn affine_norms() {
        let f = PiecewiseFunction::new(vec![Piece::polynomial(-1.0, 2.0, vec![1.0, 2.0])]);
        // β = 1: sup |f| on (0, 1) = 3, Lipschitz quotient 2
        let v = modified_holder_norm(&f, 1.0, 2.0, 0.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-9, "{v}");
        // β = ∞: r = 1, sup |f| + sup |f'| = 3 + 2, f' constant
        assert_eq!(modified_holder_norm(&f, f64::INFINITY, 2.0, 0.0, 1.0).unwrap(), 5.0);
        // β = 3 > β*: exponent 2 with constant derivative
        assert_eq!(modified_holder_norm(&f, 3.0, 2.0, 0.0, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn kink_behaviour() {
        let p = AnalyticDensity::peak_triangular();
        let f = p.function();
        // Lipschitz across the kink: sup 2, quotient 4
        let v = modified_holder_norm(f, 1.0, 2.0, 0.25, 0.75).unwrap();
        assert!((v - 6.0).abs() < 1e-9, "{v}");
        assert_eq!(modified_holder_norm(f, 1.5, 2.0, 0.25, 0.75).unwrap(), f64::INFINITY);
        // away from the kink the peak is affine, hence ∞-smooth
        assert!(modified_holder_norm(f, f64::INFINITY, 2.0, 0.6, 0.9).unwrap().is_finite());
    }

    #[test]
    fn quadratic_beyond_beta_star() {
        let f = PiecewiseFunction::new(vec![Piece::polynomial(-1.0, 2.0, vec![0.0, 0.0, 1.0])]);
        assert_eq!(modified_holder_norm(&f, f64::INFINITY, 2.0, 0.0, 1.0).unwrap(), f64::INFINITY);
        // β = 2: r = 1, sup |x²| + sup |2x| + Lipschitz of 2x
        let v = modified_holder_norm(&f, 2.0, 2.0, 0.0, 1.0).unwrap();
        assert!((v - 5.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn composite_within_budget() {
        for &b in &[0.3, 0.5, 0.8] {
            let p = AnalyticDensity::weierstrass_composite(0.0, b).unwrap();
            let budget = p.budgets()[0];
            for (lo, hi) in [(-0.5, 0.5), (-1.9, -0.9), (0.01, 0.02)] {
                let v = modified_holder_norm(p.function(), b, 2.0, lo, hi).unwrap();
                assert!(v <= budget.l, "β={b} ({lo},{hi}): {v} > {}", budget.l);
            }
            assert_eq!(modified_holder_norm(p.function(), 1.5, 2.0, -0.5, 0.5).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = PiecewiseFunction::new(vec![]);
        assert!(modified_holder_norm(&f, 0.0, 2.0, 0.0, 1.0).is_err());
        assert!(modified_holder_norm(&f, 1.0, 2.0, 1.0, 1.0).is_err());
        assert_eq!(modified_holder_norm(&f, 1.0, 2.0, 0.0, 1.0).unwrap(), 0.0);
    }
}
