//! Compactly supported kernels on `[-1, 1]` and the convolution oracles.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::math;
use crate::piecewise::{horner, PiecewiseFunction};
use crate::quadrature::integrate;

/// Highest moment order supported by [`kernel_moment`].
pub const MAX_MOMENT: u32 = 12;
const MOMENT_ZERO: f64 = 1e-9;

/// Polynomial segment of a kernel, `coeffs[i]` multiplying `x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

/// A bounded kernel supported on `[-1, 1]`, piecewise polynomial, with its
/// metadata computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    name: String,
    segments: Vec<Segment>,
    order: u32,
    total_variation: f64,
    norm_l1: f64,
    norm_l2_sq: f64,
    norm_sup: f64,
}

/// One line of a kernel self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Kernel {
    /// `K(x) = 1/2` on `[-1, 1]`, closed support.
    pub fn rectangular() -> Self {
        Self::from_segments("rectangular", vec![Segment { lo: -1.0, hi: 1.0, coeffs: vec![0.5] }])
            .expect("rectangular kernel is valid")
    }

    /// `K(x) = 3/4 (1 - x^2)` on `[-1, 1]`.
    pub fn epanechnikov() -> Self {
        Self::from_segments(
            "epanechnikov",
            vec![Segment { lo: -1.0, hi: 1.0, coeffs: vec![0.75, 0.0, -0.75] }],
        )
        .expect("epanechnikov kernel is valid")
    }

    /// Builds a kernel from sorted, contiguous segments covering `[-1, 1]`.
    pub fn from_segments(name: &str, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidConfiguration("kernel without segments".to_string()));
        }
        let ok = segments.first().map(|s| s.lo) == Some(-1.0)
            && segments.last().map(|s| s.hi) == Some(1.0)
            && segments.windows(2).all(|w| w[0].hi == w[1].lo)
            && segments.iter().all(|s| s.lo < s.hi && !s.coeffs.is_empty());
        if !ok {
            return Err(Error::InvalidConfiguration(format!(
                "kernel {name}: segments must tile [-1, 1]"
            )));
        }
        let mut k = Self {
            name: name.to_string(),
            segments,
            order: 0,
            total_variation: 0.0,
            norm_l1: 0.0,
            norm_l2_sq: 0.0,
            norm_sup: 0.0,
        };
        k.order = k.infer_order()?;
        k.total_variation = k.compute_tv();
        k.norm_l1 = k.segment_integral(|_, v| math::abs(v))?;
        k.norm_l2_sq = k.segment_integral(|_, v| v * v)?;
        k.norm_sup = k.compute_sup();
        Ok(k)
    }

    /// Returns a copy whose declared order is overwritten. Used for fault
    /// injection: [`Kernel::certify`] must then report a failure.
    pub fn with_declared_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
    pub fn support_radius(&self) -> f64 {
        1.0
    }
    /// Largest `l` such that the moments `1..=l` vanish.
    pub fn order(&self) -> u32 {
        self.order
    }
    /// Maximal smoothness the kernel can exploit, `order + 1`.
    pub fn beta_star(&self) -> f64 {
        self.order as f64 + 1.0
    }
    pub fn total_variation(&self) -> f64 {
        self.total_variation
    }
    pub fn norm_l1(&self) -> f64 {
        self.norm_l1
    }
    pub fn norm_l2_sq(&self) -> f64 {
        self.norm_l2_sq
    }
    pub fn norm_sup(&self) -> f64 {
        self.norm_sup
    }

    /// Value if the kernel is a single constant segment.
    pub fn constant_value(&self) -> Option<f64> {
        match self.segments.as_slice() {
            [s] if s.coeffs.iter().skip(1).all(|&c| c == 0.0) => Some(s.coeffs[0]),
            _ => None,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        if !(x.abs() <= 1.0) {
            return 0.0;
        }
        for s in &self.segments {
            if x <= s.hi {
                return horner(&s.coeffs, x);
            }
        }
        0.0
    }

    fn segment_integral<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for s in &self.segments {
            acc += integrate(|x| f(x, horner(&s.coeffs, x)), s.lo, s.hi, 1e-15)?;
        }
        Ok(acc)
    }

    fn infer_order(&self) -> Result<u32> {
        let mut order = 0;
        for j in 1..=MAX_MOMENT {
            if math::abs(kernel_moment(self, j)?) <= MOMENT_ZERO {
                order = j;
            } else {
                break;
            }
        }
        Ok(order)
    }

    /// Critical points of each segment plus its end points.
    fn sample_points(s: &Segment) -> Vec<f64> {
        let d: Vec<f64> = s.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        let mut pts = vec![s.lo];
        if !d.is_empty() && d.iter().any(|&c| c != 0.0) {
            let n = 4096;
            let step = (s.hi - s.lo) / n as f64;
            let mut xa = s.lo;
            let mut fa = horner(&d, xa);
            for i in 1..=n {
                let xb = s.lo + i as f64 * step;
                let fb = horner(&d, xb);
                if fa == 0.0 && i > 1 {
                    pts.push(xa);
                } else if fa * fb < 0.0 {
                    let (mut a, mut b) = (xa, xb);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if horner(&d, a) * horner(&d, m) <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    pts.push(0.5 * (a + b));
                }
                xa = xb;
                fa = fb;
            }
        }
        pts.push(s.hi);
        pts
    }

    fn compute_tv(&self) -> f64 {
        let mut tv = 0.0;
        let mut left = 0.0;
        for s in &self.segments {
            tv += math::abs(horner(&s.coeffs, s.lo) - left);
            let pts = Self::sample_points(s);
            for w in pts.windows(2) {
                tv += math::abs(horner(&s.coeffs, w[1]) - horner(&s.coeffs, w[0]));
            }
            left = horner(&s.coeffs, s.hi);
        }
        tv + math::abs(left)
    }

    fn compute_sup(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| Self::sample_points(s).into_iter().map(move |x| math::abs(horner(&s.coeffs, x))))
            .fold(0.0, f64::max)
    }

    /// Recomputes the metadata and checks it against the stored values.
    pub fn certify(&self) -> Vec<KernelCheck> {
        let mut out = Vec::new();
        let mass = self.segment_integral(|_, v| v).unwrap_or(f64::NAN);
        out.push(KernelCheck {
            name: "unit-mass",
            passed: math::abs(mass - 1.0) <= 1e-10,
            detail: format!("integral {mass:.12}"),
        });
        let mut vanish = true;
        for j in 1..=self.order.min(MAX_MOMENT) {
            let m = kernel_moment(self, j).unwrap_or(f64::NAN);
            if !(math::abs(m) <= MOMENT_ZERO) {
                vanish = false;
                out.push(KernelCheck {
                    name: "order",
                    passed: false,
                    detail: format!("declared order {} but moment {j} = {m:.3e}", self.order),
                });
                break;
            }
        }
        if vanish {
            let next = if self.order < MAX_MOMENT {
                kernel_moment(self, self.order + 1).unwrap_or(f64::NAN)
            } else {
                1.0
            };
            out.push(KernelCheck {
                name: "order",
                passed: math::abs(next) > MOMENT_ZERO,
                detail: format!("order {}, next moment {next:.6}", self.order),
            });
        }
        let tv = self.compute_tv();
        out.push(KernelCheck {
            name: "total-variation",
            passed: math::abs(tv - self.total_variation) <= 1e-9 && tv > 0.0,
            detail: format!("TV {tv:.9}"),
        });
        let l1 = self.segment_integral(|_, v| math::abs(v)).unwrap_or(f64::NAN);
        out.push(KernelCheck {
            name: "l1-norm",
            passed: math::abs(l1 - self.norm_l1) <= 1e-10,
            detail: format!("L1 {l1:.9}"),
        });
        let sup = self.compute_sup();
        out.push(KernelCheck {
            name: "sup-norm",
            passed: math::abs(sup - self.norm_sup) <= 1e-12,
            detail: format!("sup {sup:.9}"),
        });
        out.push(KernelCheck {
            name: "support",
            passed: self.evaluate(1.0 + 1e-12) == 0.0 && self.evaluate(-1.0 - 1e-12) == 0.0,
            detail: "vanishes outside [-1, 1]".to_string(),
        });
        out
    }
}

/// `∫ x^j K(x) dx` by composite quadrature, for `j <= 12`.
pub fn kernel_moment(k: &Kernel, j: u32) -> Result<f64> {
    if j > MAX_MOMENT {
        return Err(Error::UnsupportedMoment(j));
    }
    k.segment_integral(|x, v| libm::pow(x, j as f64) * v)
}

/// `(K_h * f)(s) = ∫ K(x) f(s + h x) dx`.
///
/// Segments where the kernel is constant are integrated exactly through the
/// primitives of `f` (the Weierstraß primitive included). Other segments use
/// adaptive composite Simpson split at every break point of `f`.
pub fn convolve_at(k: &Kernel, f: &PiecewiseFunction, h: f64, s: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    let mut acc = 0.0;
    let mut err: Option<Error> = None;
    for seg in &k.segments {
        let a = s + h * seg.lo;
        let b = s + h * seg.hi;
        let constant = seg.coeffs.iter().skip(1).all(|&c| c == 0.0);
        f.for_each_overlap(a, b, |lo, hi, piece| {
            if constant {
                acc += seg.coeffs[0] * piece.integral(lo, hi) / h;
            } else {
                let g = |y: f64| horner(&seg.coeffs, (y - s) / h) * piece.value(y) / h;
                match integrate(g, lo, hi, tol) {
                    Ok(v) => acc += v,
                    Err(e) => err = Some(e),
                }
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

/// `sup_s |(K_g * f)(s) - f(s)|` over the grid `lo, lo + step, ..., hi`.
pub fn sup_abs_bias(
    k: &Kernel,
    f: &PiecewiseFunction,
    g: f64,
    lo: f64,
    hi: f64,
    grid_step: f64,
) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if !(grid_step > 0.0) || grid_step > (hi - lo) / 16.0 {
        return Err(Error::InvalidGridStep { step: grid_step, len: hi - lo });
    }
    let n = math::floor((hi - lo) / grid_step) as usize;
    let mut worst: f64 = 0.0;
    for i in 0..=n + 1 {
        let s = if i <= n { lo + i as f64 * grid_step } else { hi };
        let b = math::abs(convolve_at(k, f, g, s, 1e-12)? - f.value(s));
        worst = worst.max(b);
    }
    Ok(worst)
}
