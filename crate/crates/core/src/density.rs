//! Closed-form test densities.
//!
//! * Weierstraß composites: `1/6 + c_β W_β(x - t)` on `|x - t| <= 2` with
//!   affine flanks down to zero at `|x - t| = 10/3`, `c_β = (1 - 2^{-β})/12`.
//! * Tent: `1/4 - |x - t|/16` on `|x - t| <= 4`.
//! * Peak: `4x` on `[0, 1/2]`, `4(1 - x)` on `[1/2, 1]`.
//! * Uniform on `[0, 1]`.
//! * Perturbed hypotheses: a base with a bump removed at `t` and added back at
//!   `t + 9/4`, flattening the density on a ball around `t`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use rand_core::RngCore;

use crate::calibration::{optimal_bandwidth, CalibrationPlan};
use crate::error::{Error, Result};
use crate::holder::modified_holder_norm;
use crate::kernel::{convolve_at, Kernel};
use crate::math;
use crate::piecewise::{Piece, PiecewiseFunction, WeierTerm};
use crate::quadrature::{integrate, integrate_with_budget};
use crate::weierstrass::{holder_quotient_bound, lw_constant, WeierstrassSpec};

const KL_MAX_INTERVALS: usize = 1 << 18;

/// Offset of the compensating bump.
pub const BUMP_OFFSET: f64 = 9.0 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    Constant,
    Affine,
    Polynomial(usize),
    Weierstrass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    One,
    Two,
}

/// Certified bound `‖p‖_{β,U} <= l` on the open window `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderBudget {
    pub beta: f64,
    pub l: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Weierstrass { t: f64, beta: f64 },
    Tent { t: f64 },
    Peak,
    Uniform,
    Perturbed { base: Box<Construction>, radius: f64 },
}

impl Construction {
    fn weierstrass_beta(&self) -> Option<f64> {
        match self {
            Construction::Weierstrass { beta, .. } => Some(*beta),
            Construction::Perturbed { base, .. } => base.weierstrass_beta(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDensity {
    name: String,
    function: PiecewiseFunction,
    support: (f64, f64),
    sup_bound: f64,
    budgets: Vec<HolderBudget>,
    construction: Construction,
}

fn affine(lo: f64, hi: f64, a: f64, b: f64) -> Piece {
    Piece::polynomial(lo, hi, vec![a, b])
}

fn constant(lo: f64, hi: f64, c: f64) -> Piece {
    Piece::polynomial(lo, hi, vec![c])
}

impl AnalyticDensity {
    /// Weierstraß composite centered at `t`, for `0 < β < 1`.
    pub fn weierstrass_composite(t: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidExponent(beta));
        }
        let spec = WeierstrassSpec::with_default_tol(beta)?;
        let c = (1.0 - math::exp2(-beta)) / 12.0;
        let pieces = Self::composite_pieces(t, spec, c, None);
        let l = 0.25 + c * holder_quotient_bound(beta)?;
        Ok(Self {
            name: format!("weierstrass:{beta}:{t}"),
            function: PiecewiseFunction::new(pieces),
            support: (t - 10.0 / 3.0, t + 10.0 / 3.0),
            sup_bound: 0.26,
            budgets: vec![HolderBudget { beta, l, lo: t - 2.0, hi: t + 2.0 }],
            construction: Construction::Weierstrass { t, beta },
        })
    }

    fn composite_pieces(t: f64, spec: WeierstrassSpec, c: f64, bump: Option<f64>) -> Vec<Piece> {
        let w = WeierTerm { scale: c, center: t, spec };
        let body = |lo: f64, hi: f64| Piece { lo, hi, poly: vec![1.0 / 6.0], weier: Some(w) };
        // left flank 1/4 + 3/16 (x - t + 2), right flank 1/4 - 3/16 (x - t - 2)
        let left = (0.25 + 3.0 / 16.0 * (2.0 - t), 3.0 / 16.0);
        let right = (0.25 + 3.0 / 16.0 * (2.0 + t), -3.0 / 16.0);
        let (lo, hi) = (t - 10.0 / 3.0, t + 10.0 / 3.0);
        let mut v = vec![affine(lo, t - 2.0, left.0, left.1)];
        match bump {
            None => {
                v.push(body(t - 2.0, t + 2.0));
                v.push(affine(t + 2.0, hi, right.0, right.1));
            }
            Some(g) => {
                let flat = 1.0 / 6.0 + c * spec.value(g);
                let a = t + BUMP_OFFSET;
                let cw = c * spec.value(g);
                v.push(body(t - 2.0, t - g));
                v.push(constant(t - g, t + g, flat));
                v.push(body(t + g, t + 2.0));
                v.push(affine(t + 2.0, a - g, right.0, right.1));
                v.push(Piece {
                    lo: a - g,
                    hi: a + g,
                    poly: vec![right.0 - cw, right.1],
                    weier: Some(WeierTerm { scale: c, center: a, spec }),
                });
                v.push(affine(a + g, hi, right.0, right.1));
            }
        }
        v
    }

    /// Tent `1/4 - |x - t|/16` on `[t - 4, t + 4]`.
    pub fn tent(t: f64) -> Self {
        Self {
            name: format!("tent:{t}"),
            function: PiecewiseFunction::new(Self::tent_pieces(t, None)),
            support: (t - 4.0, t + 4.0),
            sup_bound: 0.25,
            budgets: vec![HolderBudget { beta: 1.0, l: 5.0 / 16.0, lo: t - 4.0, hi: t + 4.0 }],
            construction: Construction::Tent { t },
        }
    }

    fn tent_pieces(t: f64, bump: Option<f64>) -> Vec<Piece> {
        let s = 1.0 / 16.0;
        let up = (0.25 - s * t, s);
        let down = (0.25 + s * t, -s);
        match bump {
            None => vec![affine(t - 4.0, t, up.0, up.1), affine(t, t + 4.0, down.0, down.1)],
            Some(g) => {
                let a = t + BUMP_OFFSET;
                vec![
                    affine(t - 4.0, t - g, up.0, up.1),
                    constant(t - g, t + g, 0.25 - s * g),
                    affine(t + g, a - g, down.0, down.1),
                    // slope -1/16 + 1/16
                    constant(a - g, a, 0.25 - s * (BUMP_OFFSET - g)),
                    affine(a, a + g, down.0 + s * (g + a), -2.0 * s),
                    affine(a + g, t + 4.0, down.0, down.1),
                ]
            }
        }
    }

    /// `4x` on `[0, 1/2]`, `4(1 - x)` on `[1/2, 1]`.
    pub fn peak_triangular() -> Self {
        Self {
            name: "peak".to_string(),
            function: PiecewiseFunction::new(vec![affine(0.0, 0.5, 0.0, 4.0), affine(0.5, 1.0, 4.0, -4.0)]),
            support: (0.0, 1.0),
            sup_bound: 2.0,
            budgets: vec![HolderBudget { beta: 1.0, l: 6.0, lo: f64::NEG_INFINITY, hi: f64::INFINITY }],
            construction: Construction::Peak,
        }
    }

    /// Uniform density on `[0, 1]`.
    pub fn uniform() -> Self {
        Self {
            name: "uniform".to_string(),
            function: PiecewiseFunction::new(vec![constant(0.0, 1.0, 1.0)]),
            support: (0.0, 1.0),
            sup_bound: 1.0,
            budgets: vec![HolderBudget { beta: f64::INFINITY, l: 1.0, lo: 0.0, hi: 1.0 }],
            construction: Construction::Uniform,
        }
    }

    /// Perturbed hypothesis for sample size `n`.
    ///
    /// Weierstraß bases use the radius `g = n^{-1/(2β+1)}/4` (variant one) or
    /// `(2 L_W(β))^{-1/β} g` (variant two). Tent bases use `g = n^{-1/3}/4`
    /// and `g/2`.
    pub fn perturbed(base: &AnalyticDensity, n: u64, variant: Variant) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidConstants(format!("n = {n} < 4")));
        }
        let nf = n as f64;
        let radius = match &base.construction {
            Construction::Weierstrass { beta, .. } => {
                let g = 0.25 * math::powf(nf, -1.0 / (2.0 * beta + 1.0));
                match variant {
                    Variant::One => g,
                    Variant::Two => math::powf(2.0 * lw_constant(*beta)?, -1.0 / beta) * g,
                }
            }
            Construction::Tent { .. } => {
                let g = 0.25 * math::powf(nf, -1.0 / 3.0);
                match variant {
                    Variant::One => g,
                    Variant::Two => 0.5 * g,
                }
            }
            _ => {
                return Err(Error::InvalidConfiguration(format!(
                    "{} cannot be perturbed",
                    base.name
                )))
            }
        };
        let mut p = Self::perturbed_with_radius(base, radius)?;
        let tag = match variant {
            Variant::One => "perturbed1",
            Variant::Two => "perturbed2",
        };
        p.name = format!("{tag}:{}:{n}", base.name);
        Ok(p)
    }

    /// Perturbation with an explicit bump radius.
    pub fn perturbed_with_radius(base: &AnalyticDensity, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::ConstructionOverlap { radius });
        }
        let (pieces, sup_bound) = match &base.construction {
            Construction::Weierstrass { t, beta } => {
                // the compensating bump must stay inside the right flank
                if radius >= 0.25 {
                    return Err(Error::ConstructionOverlap { radius });
                }
                let spec = WeierstrassSpec::with_default_tol(*beta)?;
                let c = (1.0 - math::exp2(-beta)) / 12.0;
                (Self::composite_pieces(*t, spec, c, Some(radius)), 0.5)
            }
            Construction::Tent { t } => {
                if radius >= 1.0 {
                    return Err(Error::ConstructionOverlap { radius });
                }
                (Self::tent_pieces(*t, Some(radius)), 0.25)
            }
            _ => {
                return Err(Error::InvalidConfiguration(format!(
                    "{} cannot be perturbed",
                    base.name
                )))
            }
        };
        Ok(Self {
            name: format!("perturbed:{}:{radius}", base.name),
            function: PiecewiseFunction::new(pieces),
            support: base.support,
            sup_bound,
            budgets: base.budgets.clone(),
            construction: Construction::Perturbed { base: Box::new(base.construction.clone()), radius },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn function(&self) -> &PiecewiseFunction {
        &self.function
    }
    pub fn support(&self) -> (f64, f64) {
        self.support
    }
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
    pub fn budgets(&self) -> &[HolderBudget] {
        &self.budgets
    }
    pub fn construction(&self) -> &Construction {
        &self.construction
    }
    /// Stored construction exponent for Weierstraß members.
    pub fn weierstrass_beta(&self) -> Option<f64> {
        self.construction.weierstrass_beta()
    }
    /// Bump radius of a perturbed hypothesis.
    pub fn bump_radius(&self) -> Option<f64> {
        match &self.construction {
            Construction::Perturbed { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        self.function.value(x)
    }

    /// Pieces with their kinds.
    pub fn pieces(&self) -> Vec<(f64, f64, PieceKind)> {
        self.function
            .pieces()
            .iter()
            .map(|p| {
                let kind = match &p.weier {
                    Some(w) => PieceKind::Weierstrass(w.spec.beta()),
                    None => match p.degree() {
                        0 => PieceKind::Constant,
                        1 => PieceKind::Affine,
                        d => PieceKind::Polynomial(d),
                    },
                };
                (p.lo, p.hi, kind)
            })
            .collect()
    }

    /// Non-smooth points: every piece boundary.
    pub fn kinks(&self) -> Vec<f64> {
        self.function.breakpoints()
    }

    /// Total mass, integrated exactly piece by piece.
    pub fn mass(&self) -> f64 {
        self.function.integral(self.support.0, self.support.1)
    }

    /// `m` i.i.d. draws by rejection from the uniform proposal on
    /// `support × [0, sup_bound]`. Each proposal consumes two uniforms from
    /// `rng`, first the abscissa then the height.
    pub fn sample<R: RngCore>(&self, m: usize, rng: &mut R) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::EmptySample);
        }
        let (lo, hi) = self.support;
        let width = hi - lo;
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let x = lo + width * unit_f64(rng);
            let y = self.sup_bound * unit_f64(rng);
            let v = self.evaluate(x);
            if v > self.sup_bound {
                return Err(Error::CorruptDensity { x, value: v, bound: self.sup_bound });
            }
            if y < v {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// Uniform draw on `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// `β_{n,p}(t)` for piecewise polynomial densities; Weierstraß members return
/// their construction exponent.
pub fn local_exponent(p: &AnalyticDensity, plan: &CalibrationPlan, t: f64) -> Result<f64> {
    if let Some(beta) = p.weierstrass_beta() {
        return Ok(beta);
    }
    if p.function.pieces().iter().any(|q| q.weier.is_some()) {
        return Err(Error::OracleUnavailable(p.name.clone()));
    }
    let d = p
        .kinks()
        .iter()
        .map(|k| math::abs(t - k))
        .fold(f64::INFINITY, f64::min);
    let reach = math::exp2(-(plan.j_min as f64));
    if d >= reach {
        return Ok(f64::INFINITY);
    }
    if d <= optimal_bandwidth(plan, 1.0)? {
        return Ok(1.0);
    }
    let x = math::ln(d / reach) / math::ln(plan.log_ratio());
    let beta = 0.5 * (1.0 / x - 1.0);
    Ok(beta.min(plan.params.beta_star_high))
}

/// Tests the admissibility conditions at `(t, h)` for exponent `beta`.
///
/// For `u = h` or `u = 2h`: (a) the modified Hölder norm on `B(t, u)` is at
/// most `L*` (a stored budget with exponent at least `beta` covering the
/// ball certifies this, otherwise the grid estimate decides), and (b) the
/// rectangular-kernel bias on `B(t, u - g)` reaches `g^β / log n` for every
/// dyadic `g <= u/8` down to `2^{-j_max}`.
pub fn admissibility_check(
    p: &AnalyticDensity,
    plan: &CalibrationPlan,
    kernel: &Kernel,
    t: f64,
    h: f64,
    beta: f64,
) -> Result<bool> {
    let beta_star = plan.params.beta_star_high;
    let ok_beta = beta == f64::INFINITY || (beta >= plan.params.beta_star_low && beta <= beta_star);
    if !ok_beta {
        return Err(Error::InvalidExponent(beta));
    }
    if !(h > 0.0) || h > math::exp2(-(plan.j_min as f64)) {
        return Err(Error::InvalidBandwidth(h));
    }
    let log_n = math::ln(plan.params.n as f64);
    let g_min = math::exp2(-(plan.j_max as f64));
    for u in [h, 2.0 * h] {
        let (lo, hi) = (t - u, t + u);
        let certified = p
            .budgets
            .iter()
            .any(|b| b.beta >= beta && b.l <= plan.params.l_star && b.lo <= lo && b.hi >= hi && u <= 0.5);
        let smooth = certified
            || modified_holder_norm(&p.function, beta, beta_star, lo, hi)? <= plan.params.l_star;
        if !smooth {
            continue;
        }
        let mut all = true;
        let mut g = u / 8.0;
        while g >= g_min && beta.is_finite() {
            let target = math::powf(g, beta) / log_n;
            if !bias_reaches(kernel, &p.function, g, t, u - g, target)? {
                all = false;
                break;
            }
            g *= 0.5;
        }
        if all {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `|(K_g * f)(s) - f(s)| >= target` somewhere on the grid of step
/// `g/64` over `[t - r, t + r]`, scanning outward from `t`.
fn bias_reaches(k: &Kernel, f: &PiecewiseFunction, g: f64, t: f64, r: f64, target: f64) -> Result<bool> {
    let step = g / 64.0;
    let n = math::floor(r / step) as i64;
    for i in 0..=n {
        for s in [t + i as f64 * step, t - i as f64 * step] {
            let b = math::abs(convolve_at(k, f, g, s, 1e-12)? - f.value(s));
            if b >= target {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// `KL(p, q) = ∫ p log(p/q)` by composite Simpson between the union of both
/// densities' break points, integrating `p log(p/q) - p + q` over the union
/// of the supports. Intervals where the two agree contribute zero.
///
/// Integrands involving Weierstraß pieces are not smooth, so the Richardson
/// stopping rule may exhaust its budget of `2^18` subintervals per cell; the
/// finest estimate is then returned.
pub fn kl_divergence(p: &AnalyticDensity, q: &AnalyticDensity, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let mut cuts: Vec<f64> = p.kinks();
    cuts.extend(q.kinks());
    // the union of both supports, where q integrates to one
    let (lo, hi) = (p.support.0.min(q.support.0), p.support.1.max(q.support.1));
    cuts.retain(|x| *x >= lo && *x <= hi);
    cuts.extend([p.support.0, p.support.1, q.support.0, q.support.1]);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    cuts.dedup();
    let cells = cuts.len().saturating_sub(1).max(1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // absolute continuity probe on a coarse grid of the cell
        for i in 1..64 {
            let x = a + (b - a) * i as f64 / 64.0;
            if p.evaluate(x) > 0.0 && q.evaluate(x) <= 0.0 {
                return Err(Error::DivergenceInfinite(x));
            }
        }
        let mid = 0.5 * (a + b);
        let same = (0..=32).all(|i| {
            let x = a + (b - a) * i as f64 / 32.0;
            p.evaluate(x) == q.evaluate(x)
        }) && p.function.piece_index(mid).map(|i| &p.function.pieces()[i])
            == q.function.piece_index(mid).map(|i| &q.function.pieces()[i]);
        if same {
            continue;
        }
        // p log(p/q) - p + q is pointwise nonnegative and integrates to the
        // same value when both masses are one; without the linear terms the
        // first-order parts of nearby densities cancel only up to quadrature
        // error.
        let f = |x: f64| {
            let pv = p.evaluate(x);
            let qv = q.evaluate(x);
            if pv <= 0.0 {
                qv
            } else {
                pv * math::ln(pv / qv) - pv + qv
            }
        };
        total += integrate_with_budget(f, a, b, tol / cells, KL_MAX_INTERVALS)?;
    }
    Ok(total)
}

/// `c₈(β) = 48 L² 4^{-(2β+1)} 2^{2β} ((1 - 2^{-β})/12)²` with `L = L_W(β)`.
pub fn c8(beta: f64) -> Result<f64> {
    let l = lw_constant(beta)?;
    let c = (1.0 - math::exp2(-beta)) / 12.0;
    Ok(48.0 * l * l * math::powf(4.0, -(2.0 * beta + 1.0)) * math::powf(2.0, 2.0 * beta) * c * c)
}

/// Bound on `n KL(p₂, p₁)` for the tent pair: `2/(3·32²) + 1/32`.
pub const TENT_PAIR_KL_BOUND: f64 = 2.0 / (3.0 * 1024.0) + 1.0 / 32.0;

/// Looks a density up by its command-line name.
///
/// Accepted forms: `weierstrass:<beta>:<t>`, `perturbed1:<beta>:<n>`,
/// `perturbed2:<beta>:<n>`, `tent:<t>`, `peak`, `uniform`. Perturbed names
/// with `beta < 1` use the Weierstraß composite at `t = 1/2`, `beta = 1`
/// the tent at `t = 1/2`.
pub fn by_name(name: &str) -> Result<AnalyticDensity> {
    let parts: Vec<&str> = name.split(':').collect();
    let bad = || Error::InvalidConfiguration(format!("unknown density '{name}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["peak"] => Ok(AnalyticDensity::peak_triangular()),
        ["uniform"] => Ok(AnalyticDensity::uniform()),
        ["tent", t] => Ok(AnalyticDensity::tent(num(t)?)),
        ["weierstrass", b, t] => AnalyticDensity::weierstrass_composite(num(t)?, num(b)?),
        [kind @ ("perturbed1" | "perturbed2"), b, n] => {
            let beta = num(b)?;
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let base = if beta == 1.0 {
                AnalyticDensity::tent(0.5)
            } else {
                AnalyticDensity::weierstrass_composite(0.5, beta)?
            };
            let v = if *kind == "perturbed1" { Variant::One } else { Variant::Two };
            let mut p = AnalyticDensity::perturbed(&base, n, v)?;
            p.name = name.to_string();
            Ok(p)
        }
        _ => Err(bad()),
    }
}

/// Simpson check of the total mass, independent of the exact primitives.
pub fn mass_by_quadrature(p: &AnalyticDensity, tol: f64) -> Result<f64> {
    let mut cuts = p.kinks();
    cuts.push(p.support.0);
    cuts.push(p.support.1);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(|x| p.evaluate(x), w[0], w[1], tol)?;
    }
    Ok(total)
}
