//! Sample-size dependent constants of the procedure.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::math;

/// Desk-scale defaults for practical mode.
pub mod defaults {
    pub const EPSILON: f64 = 0.25;
    pub const BETA_STAR_LOW: f64 = 0.9;
    pub const L_STAR: f64 = 1.0;
    pub const M_LOWER: f64 = 1.0 / 12.0;
    pub const C1: f64 = 3.0;
    pub const KAPPA2: f64 = 1.0;
    /// Threshold constant from the uniform-density calibration
    /// (`locband calibrate-c2`, n = 2^14, 50 replications).
    pub const C2: f64 = 0.65;
    /// Largest mesh a plan may request.
    pub const MAX_MESH: f64 = 2147483648.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Hard constraints; violations are errors.
    Theory,
    /// Violations become warnings and degenerate grids are clamped.
    Practical,
}

/// User-facing knobs of a calibration plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanParams {
    pub n: u64,
    pub epsilon: f64,
    pub beta_star_low: f64,
    pub beta_star_high: f64,
    pub l_star: f64,
    pub m_lower: f64,
    pub c1: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c2: f64,
    pub mode: Mode,
}

impl PlanParams {
    pub fn practical(n: u64, kernel: &Kernel) -> Self {
        let b = defaults::BETA_STAR_LOW;
        Self {
            n,
            epsilon: defaults::EPSILON,
            beta_star_low: b,
            beta_star_high: kernel.beta_star(),
            l_star: defaults::L_STAR,
            m_lower: defaults::M_LOWER,
            c1: defaults::C1,
            kappa1: (1.0 / (2.0 * b)).max(0.5),
            kappa2: defaults::KAPPA2,
            c2: defaults::C2,
            mode: Mode::Practical,
        }
    }

    /// Same knobs for another sample size.
    pub fn with_n(&self, n: u64) -> Self {
        Self { n, ..self.clone() }
    }
}

/// Everything the estimator, selector and band need for one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPlan {
    pub params: PlanParams,
    pub n_tilde: u64,
    pub j_min: u32,
    pub j_max: u32,
    /// Number of mesh cells `M`; the mesh width is `1 / M`.
    pub mesh_count: u64,
    pub delta_n: f64,
    pub u_n: f64,
    pub m_n: f64,
    pub c3: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub kernel_tv: f64,
    pub warnings: Vec<String>,
}

impl CalibrationPlan {
    pub fn log_n_tilde(&self) -> f64 {
        math::ln(self.n_tilde as f64)
    }
    /// `log ñ / ñ`.
    pub fn log_ratio(&self) -> f64 {
        self.log_n_tilde() / self.n_tilde as f64
    }
    pub fn mesh_point(&self, k: i64) -> f64 {
        k as f64 / self.mesh_count as f64
    }
    pub fn j_values(&self) -> core::ops::RangeInclusive<u32> {
        self.j_min..=self.j_max
    }
    /// Selector threshold `c₂ √(log ñ 2^m / ñ)` without the `c₂`.
    pub fn threshold_scale(&self, m: u32) -> f64 {
        math::sqrt(self.log_ratio() * math::exp2(m as f64))
    }
    /// Exponent of the log factor in the width bound, `(c₁ log 2 - 1) / 2`.
    pub fn gamma_tilde(&self) -> f64 {
        0.5 * (self.params.c1 * LN_2 - 1.0)
    }
}

fn theory_or_warn(mode: Mode, warnings: &mut Vec<String>, msg: String) -> Result<()> {
    match mode {
        Mode::Theory => Err(Error::InvalidConstants(msg)),
        Mode::Practical => {
            warnings.push(msg);
            Ok(())
        }
    }
}

/// Derives the plan; theory mode rejects constants outside the admissible
/// region, practical mode records warnings instead.
pub fn derive_plan(params: &PlanParams, kernel: &Kernel) -> Result<CalibrationPlan> {
    let p = params;
    if p.n < 4 {
        return Err(Error::InvalidConstants(format!("n = {} < 4", p.n)));
    }
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err(Error::InvalidConstants(format!("epsilon = {} outside (0, 1)", p.epsilon)));
    }
    if !(p.beta_star_low > 0.0 && p.beta_star_low <= p.beta_star_high) {
        return Err(Error::InvalidConstants(format!(
            "need 0 < beta_star_low <= beta_star_high, got {} and {}",
            p.beta_star_low, p.beta_star_high
        )));
    }
    for (name, v) in [("l_star", p.l_star), ("m_lower", p.m_lower), ("c1", p.c1), ("kappa1", p.kappa1), ("kappa2", p.kappa2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidConstants(format!("{name} = {v} must be positive")));
        }
    }
    if !(p.c2 > 0.0) {
        return Err(Error::InvalidConstants(format!("c2 = {} must be positive", p.c2)));
    }
    let mut warnings = Vec::new();
    if p.beta_star_high != kernel.beta_star() {
        warnings.push(format!("beta_star_high = {} but kernel supports {}", p.beta_star_high, kernel.beta_star()));
    }
    let b = p.beta_star_low;
    let c1_min = 2.0 / (b * LN_2);
    if !(p.c1 > c1_min) {
        theory_or_warn(p.mode, &mut warnings, format!("c1 = {} must exceed {c1_min:.6}", p.c1))?;
    }
    if !(p.kappa1 >= 1.0 / (2.0 * b)) {
        theory_or_warn(p.mode, &mut warnings, format!("kappa1 = {} must be at least {:.6}", p.kappa1, 1.0 / (2.0 * b)))?;
    }
    let k2_min = p.c1 * LN_2 + 4.0;
    if !(p.kappa2 > k2_min) {
        theory_or_warn(p.mode, &mut warnings, format!("kappa2 = {} must exceed {k2_min:.6}", p.kappa2))?;
    }

    let n_tilde = p.n / 2;
    let nt = n_tilde as f64;
    let log_nt = math::ln(nt);

    let j_min = math::ceil(math::log2(2.0 / p.epsilon).max(2.0)) as i64;
    let j_max_raw = math::floor(math::log2(nt / math::powf(log_nt, p.kappa2)));
    let j_max_i = if j_max_raw.is_finite() { j_max_raw as i64 } else { i64::MIN };
    let j_max = if j_max_i < j_min {
        match p.mode {
            Mode::Theory => return Err(Error::EmptyBandwidthGrid { j_min, j_max: j_max_i }),
            Mode::Practical => {
                warnings.push(format!("bandwidth grid empty (j_max = {j_max_i}); clamped to j_min"));
                j_min
            }
        }
    } else {
        j_max_i
    };

    let raw = math::exp2(j_min as f64 / b)
        * math::powf(log_nt / nt, -p.kappa1)
        * math::powf(log_nt, 2.0 / b);
    let mesh = math::ceil(raw);
    if !(mesh <= defaults::MAX_MESH) {
        return Err(Error::MeshOverflow(raw));
    }
    let mesh_count = (mesh as u64).max(1);

    let mut u_n = p.c1 * math::ln(log_nt);
    if !(u_n > 0.0) {
        theory_or_warn(p.mode, &mut warnings, format!("undersmoothing shift u_n = {u_n:.6} is not positive"))?;
        u_n = 0.0;
    }

    let delta_n = 1.0 / mesh_count as f64;
    let (a_n, b_n) = if mesh_count >= 2 { normalizers(delta_n, kernel.total_variation())? } else {
        return Err(Error::InvalidMesh(delta_n));
    };
    Ok(CalibrationPlan {
        params: p.clone(),
        n_tilde,
        j_min: j_min as u32,
        j_max: j_max as u32,
        mesh_count,
        delta_n,
        u_n,
        m_n: u_n / 2.0,
        c3: core::f64::consts::SQRT_2 / kernel.total_variation(),
        a_n,
        b_n,
        kernel_tv: kernel.total_variation(),
        warnings,
    })
}

/// Gumbel normalizers `(a_n, b_n)` for mesh width `delta` and kernel total
/// variation `tv`.
pub fn normalizers(delta: f64, tv: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidMesh(delta));
    }
    if !(tv > 0.0 && tv.is_finite()) {
        return Err(Error::InvalidConstants(format!("total variation {tv} must be positive")));
    }
    let c3 = core::f64::consts::SQRT_2 / tv;
    let l = -2.0 * math::ln(delta);
    let r = math::sqrt(l);
    let a = c3 * r;
    let b = (3.0 / c3) * (r - (math::ln(-math::ln(delta)) + math::ln(4.0 * PI)) / (2.0 * r));
    Ok((a, b))
}

/// Quantile of the standard Gumbel law, `-log(-log p)`.
pub fn gumbel_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(-math::ln(-math::ln(p)))
}

/// `h_{β,n} = 2^{-j_min} (log ñ / ñ)^{1/(2β+1)}`; `β = ∞` gives `2^{-j_min}`.
pub fn optimal_bandwidth(plan: &CalibrationPlan, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidExponent(beta));
    }
    let base = math::exp2(-(plan.j_min as f64));
    if beta == f64::INFINITY {
        return Ok(base);
    }
    Ok(base * math::powf(plan.log_ratio(), 1.0 / (2.0 * beta + 1.0)))
}

/// Critical value `q_n(α) = √L* q_{1-α/2} / a_n + b_n`.
pub fn band_halfwidth_quantile(plan: &CalibrationPlan, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    Ok(math::sqrt(plan.params.l_star) * gumbel_quantile(1.0 - alpha / 2.0)? / plan.a_n + plan.b_n)
}
