//! Piecewise analytic functions on the real line.
//!
//! Each piece carries a polynomial (coefficients in absolute `x`) plus an
//! optional scaled, shifted Weierstraß term. Outside all pieces the function
//! is zero. Piece boundaries are treated as the non-smooth points.

use alloc::vec::Vec;

use crate::weierstrass::WeierstrassSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierTerm {
    pub scale: f64,
    pub center: f64,
    pub spec: WeierstrassSpec,
}

impl WeierTerm {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.scale * self.spec.value(x - self.center)
    }
    #[inline]
    fn primitive(&self, x: f64) -> f64 {
        self.scale * self.spec.primitive(x - self.center)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    /// `poly[i]` multiplies `x^i`.
    pub poly: Vec<f64>,
    pub weier: Option<WeierTerm>,
}

impl Piece {
    pub fn polynomial(lo: f64, hi: f64, poly: Vec<f64>) -> Self {
        Self { lo, hi, poly, weier: None }
    }

    pub fn degree(&self) -> usize {
        let mut d = self.poly.len();
        while d > 0 && self.poly[d - 1] == 0.0 {
            d -= 1;
        }
        d.saturating_sub(1)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let p = horner(&self.poly, x);
        match &self.weier {
            Some(w) => p + w.value(x),
            None => p,
        }
    }

    /// Integral over `[a, b]`, assumed inside the piece.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let p = poly_integral(&self.poly, a, b);
        match &self.weier {
            Some(w) => p + (w.primitive(b) - w.primitive(a)),
            None => p,
        }
    }

    /// `k`-th derivative of the polynomial part.
    pub fn poly_derivative(&self, k: usize) -> Vec<f64> {
        let mut c = self.poly.clone();
        for _ in 0..k {
            if c.len() <= 1 {
                return alloc::vec![0.0];
            }
            c = c.iter().enumerate().skip(1).map(|(i, v)| v * i as f64).collect();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        c
    }
}

#[inline]
pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Coefficients of `q(u) = p(a + u)`.
pub fn taylor_shift(c: &[f64], a: f64) -> Vec<f64> {
    let mut q = c.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            q[j] += a * q[j + 1];
        }
    }
    q
}

/// Exact integral of a polynomial over `[a, b]`, expanded about `a`.
pub fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    if c.is_empty() || a == b {
        return 0.0;
    }
    let q = taylor_shift(c, a);
    let l = b - a;
    let mut acc = 0.0;
    let mut pw = l;
    for (i, v) in q.iter().enumerate() {
        acc += v * pw / (i as f64 + 1.0);
        pw *= l;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    pieces: Vec<Piece>,
}

impl PiecewiseFunction {
    /// Pieces must be sorted and non-overlapping (touching ends allowed).
    pub fn new(pieces: Vec<Piece>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| w[0].hi <= w[1].lo));
        debug_assert!(pieces.iter().all(|p| p.lo < p.hi));
        Self { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece holding `x`; the left piece wins at a shared end.
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.hi < x);
        (i < self.pieces.len() && self.pieces[i].lo <= x).then_some(i)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].value(x),
            None => 0.0,
        }
    }

    /// Exact integral over `[a, b]` up to the Weierstraß truncation.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let start = self.pieces.partition_point(|p| p.hi <= a);
        let mut acc = 0.0;
        for p in &self.pieces[start..] {
            if p.lo >= b {
                break;
            }
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if hi > lo {
                acc += p.integral(lo, hi);
            }
        }
        acc
    }

    /// Finite piece boundaries, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for p in &self.pieces {
            for x in [p.lo, p.hi] {
                if x.is_finite() && v.last().is_none_or(|&l| l != x) {
                    v.push(x);
                }
            }
        }
        v
    }

    /// Calls `f(lo, hi, piece)` for each piece overlapping `[a, b]`, clipped.
    pub fn for_each_overlap<'a, F: FnMut(f64, f64, &'a Piece)>(&'a self, a: f64, b: f64, mut f: F) {
        let start = self.pieces.partition_point(|p| p.hi <= a);
        for p in &self.pieces[start..] {
            if p.lo >= b {
                break;
            }
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if hi > lo {
                f(lo, hi, p);
            }
        }
    }

    /// Minimum and maximum over the closed interval `[a, b]`.
    ///
    /// Exact for polynomial pieces of degree at most two; Weierstraß pieces
    /// are scanned on a 2048-point grid plus the end points.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        push(self.value(a));
        push(self.value(b));
        let mut covered = a;
        self.for_each_overlap(a, b, |l, h, p| {
            if l > covered {
                push(0.0);
            }
            covered = h;
            push(p.value(l));
            push(p.value(h));
            if p.weier.is_some() {
                let n = 2048;
                for i in 1..n {
                    push(p.value(l + (h - l) * i as f64 / n as f64));
                }
            } else {
                extremes_interior(&p.poly, l, h, &mut push);
            }
        });
        if covered < b {
            push(0.0);
        }
        (lo, hi)
    }
}

/// Pushes interior critical values of a polynomial on `(a, b)`.
pub(crate) fn extremes_interior<F: FnMut(f64)>(c: &[f64], a: f64, b: f64, push: &mut F) {
    let d = {
        let mut d = c.len();
        while d > 0 && c[d - 1] == 0.0 {
            d -= 1;
        }
        d
    };
    match d {
        0..=2 => {}
        3 => {
            let v = -c[1] / (2.0 * c[2]);
            if v > a && v < b {
                push(horner(c, v));
            }
        }
        _ => {
            let n = 4096;
            for i in 1..n {
                push(horner(c, a + (b - a) * i as f64 / n as f64));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn taylor_shift_round_trip() {
        let c = [1.0, -2.0, 3.0, 0.5];
        let q = taylor_shift(&c, 1.5);
        for &u in &[-1.0, 0.0, 0.3, 2.0] {
            assert!((horner(&q, u) - horner(&c, 1.5 + u)).abs() < 1e-12);
        }
    }

    #[test]
    fn poly_integral_exact() {
        // int_0^2 (1 + x^2) dx = 2 + 8/3
        assert!((poly_integral(&[1.0, 0.0, 1.0], 0.0, 2.0) - (2.0 + 8.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn value_and_integral() {
        let f = PiecewiseFunction::new(vec![
            Piece::polynomial(0.0, 0.5, vec![0.0, 4.0]),
            Piece::polynomial(0.5, 1.0, vec![4.0, -4.0]),
        ]);
        assert_eq!(f.value(0.5), 2.0);
        assert_eq!(f.value(-0.1), 0.0);
        assert!((f.integral(-1.0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(f.breakpoints(), vec![0.0, 0.5, 1.0]);
        let (lo, hi) = f.range_on(0.25, 0.75);
        assert_eq!((lo, hi), (1.0, 2.0));
        let (lo, _) = f.range_on(0.9, 1.5);
        assert_eq!(lo, 0.0);
    }
}
