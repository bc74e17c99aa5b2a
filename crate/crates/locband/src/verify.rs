//! Deterministic inequality suite.
//!
//! Every item reports a margin; positive means slack, negative a violation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;

use locband_core::density::{c8, kl_divergence, TENT_PAIR_KL_BOUND};
use locband_core::holder::modified_holder_norm;
use locband_core::piecewise::{Piece, PiecewiseFunction, WeierTerm};
use locband_core::weierstrass::holder_quotient_bound;
use locband_core::{sup_abs_bias, AnalyticDensity, Kernel, Result, Variant, WeierstrassSpec};

use crate::brownian::{monte_carlo_moment, random_configurations};

pub const SUITES: [&str; 9] = ["kernel", "lemma39", "holder", "lemma44", "a1", "a2", "a3", "a4", "kl"];

/// Exponents of the bias ladders and the Hölder check.
pub const BETAS: [f64; 4] = [0.3, 0.5, 0.8, 1.0];
/// Center radius `h` of the bias ladders.
pub const LADDER_RADIUS: f64 = 0.125;
/// Ladder `g = 2^-5, ..., 2^-9`.
pub const LADDER: [i32; 5] = [5, 6, 7, 8, 9];
pub const HOLDER_PAIRS: usize = 10_000;
pub const A1_SWEEP: usize = 10_000;
pub const A1_SWEEP_SLACK: f64 = 1e-12;
pub const A1_MC_CONFIGS: usize = 20;
pub const A1_MC_GRID: u64 = 1 << 16;
pub const A1_MC_PATHS: usize = 400_000;
pub const A1_MC_TOL: f64 = 0.05;
pub const KL_TOL: f64 = 1e-8;
pub const KL_NS: [u64; 3] = [100, 1000, 10_000];
const SEED: u64 = 0x10c_ba4d;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyItem {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub items: Vec<VerifyItem>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyItem> {
        self.items.iter().filter(|i| !i.passed)
    }

    pub fn suite(&self, s: &str) -> Vec<&VerifyItem> {
        self.items.iter().filter(|i| i.suite == s).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,item,passed,margin,detail\n");
        for i in &self.items {
            let _ = writeln!(s, "{},{},{},{},\"{}\"", i.suite, i.name, i.passed, i.margin, i.detail.replace('"', "'"));
        }
        s
    }
}

fn item(suite: &'static str, name: impl Into<String>, margin: f64, detail: String) -> VerifyItem {
    VerifyItem { suite, name: name.into(), passed: margin >= 0.0, margin, detail }
}

/// Runs the selected suites (all when `only` is empty) against `kernel`.
pub fn verify_inequalities(kernel: &Kernel, only: &[String]) -> Result<VerifyReport> {
    for s in only {
        if !SUITES.contains(&s.as_str()) {
            return Err(locband_core::Error::InvalidConfiguration(format!("unknown suite '{s}'")));
        }
    }
    let want = |s: &str| only.is_empty() || only.iter().any(|o| o == s);
    let mut items = Vec::new();
    if want("kernel") {
        items.extend(kernel_items(kernel));
    }
    if want("lemma39") {
        items.extend(lemma39(kernel)?);
    }
    if want("holder") {
        items.extend(holder_items()?);
    }
    if want("lemma44") {
        items.extend(lemma44(kernel)?);
    }
    if want("a1") {
        items.extend(a1()?);
    }
    if want("a2") {
        items.push(a2());
    }
    if want("a3") {
        items.push(a3());
    }
    if want("a4") {
        items.extend(a4(kernel)?);
    }
    if want("kl") {
        items.extend(kl()?);
    }
    Ok(VerifyReport { items })
}

fn kernel_items(kernel: &Kernel) -> Vec<VerifyItem> {
    kernel
        .certify()
        .into_iter()
        .map(|c| VerifyItem {
            suite: "kernel",
            name: c.name.to_string(),
            passed: c.passed,
            margin: if c.passed { 0.0 } else { -1.0 },
            detail: c.detail,
        })
        .collect()
}

/// The bare `W_β` as a piecewise function on `[-4, 4]`.
pub fn raw_weierstrass(beta: f64) -> Result<PiecewiseFunction> {
    let spec = WeierstrassSpec::with_default_tol(beta)?;
    Ok(PiecewiseFunction::new(vec![Piece {
        lo: -4.0,
        hi: 4.0,
        poly: vec![0.0],
        weier: Some(WeierTerm { scale: 1.0, center: 0.0, spec }),
    }]))
}

/// `(g, bias)` over the ladder, each on `B(0, h - g)` with grid step `g/64`.
fn bias_ladder(kernel: &Kernel, f: &PiecewiseFunction) -> Result<Vec<(f64, f64)>> {
    LADDER
        .par_iter()
        .map(|&e| {
            let g = (-(e as f64)).exp2();
            let r = LADDER_RADIUS - g;
            Ok((g, sup_abs_bias(kernel, f, g, -r, r, g / 64.0)?))
        })
        .collect()
}

/// Bias of `W_β` reaches `(4/π - 1) g^β` at every rung.
fn lemma39(kernel: &Kernel) -> Result<Vec<VerifyItem>> {
    let c = 4.0 / PI - 1.0;
    BETAS
        .iter()
        .map(|&beta| {
            let f = raw_weierstrass(beta)?;
            let ladder = bias_ladder(kernel, &f)?;
            let (g, worst) = ladder
                .iter()
                .map(|&(g, b)| (g, b / (c * g.powf(beta)) - 1.0))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("ladder");
            Ok(item("lemma39", format!("beta={beta}"), worst, format!("tightest rung g={g}, bias/bound-1={worst:.4}")))
        })
        .collect()
}

/// Sampled Hölder quotient of `W_β` under `π/(1-2^{β-1}) + 2/(1-2^{-β})`.
fn holder_items() -> Result<Vec<VerifyItem>> {
    BETAS
        .iter()
        .map(|&beta| {
            let spec = WeierstrassSpec::with_default_tol(beta)?;
            let bound = holder_quotient_bound(beta).unwrap_or(f64::INFINITY);
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ beta.to_bits());
            let u = Uniform::new(0.0f64, 1.0).expect("range");
            let mut worst: f64 = 0.0;
            for _ in 0..HOLDER_PAIRS {
                let x = -2.0 + 4.0 * u.sample(&mut rng);
                let d = 10f64.powf(-8.0 * u.sample(&mut rng));
                let q = (spec.value(x + d) - spec.value(x)).abs() / d.powf(beta);
                worst = worst.max(q);
            }
            let margin = if bound.is_finite() { 1.0 - worst / bound } else { f64::INFINITY };
            Ok(item("holder", format!("beta={beta}"), margin, format!("max quotient {worst:.4} vs bound {bound:.4}")))
        })
        .collect()
}

/// Bias of composites under `L ‖K‖₁ g^β`; affine pieces have no bias.
fn lemma44(kernel: &Kernel) -> Result<Vec<VerifyItem>> {
    let mut out = Vec::new();
    for beta in [0.3, 0.5, 0.8] {
        let p = AnalyticDensity::weierstrass_composite(0.0, beta)?;
        let l = p.budgets()[0].l;
        let ladder = bias_ladder(kernel, p.function())?;
        let worst = ladder
            .iter()
            .map(|&(g, b)| 1.0 - b / (l * kernel.norm_l1() * g.powf(beta)))
            .fold(f64::INFINITY, f64::min);
        out.push(item("lemma44", format!("composite beta={beta}"), worst, format!("budget L={l:.4}")));
    }
    let peak = AnalyticDensity::peak_triangular();
    let mut worst: f64 = 0.0;
    for e in LADDER {
        let g = (-(e as f64)).exp2();
        worst = worst.max(sup_abs_bias(kernel, peak.function(), g, 0.1, 0.4 - g, g / 64.0)?);
    }
    out.push(item("lemma44", "affine", 1e-10 - worst, format!("max bias {worst:e}")));
    Ok(out)
}

fn a1() -> Result<Vec<VerifyItem>> {
    let configs = random_configurations(A1_SWEEP, 2, 4096, 0.0, SEED);
    let mut worst = f64::NEG_INFINITY;
    for c in &configs {
        worst = worst.max(c.moment()?);
    }
    let sweep = item(
        "a1",
        "sweep",
        4.0 + A1_SWEEP_SLACK - worst,
        format!("max second moment {worst} over {A1_SWEEP} configurations"),
    );
    let mc_configs = random_configurations(A1_MC_CONFIGS, 4, 16, 0.25, SEED + 1);
    let errs: Vec<f64> = mc_configs
        .iter()
        .enumerate()
        .map(|(i, c)| Ok((monte_carlo_moment(c, A1_MC_GRID, A1_MC_PATHS, SEED + 2 + i as u64)? - c.moment()?).abs()))
        .collect::<Result<_>>()?;
    let e = errs.iter().cloned().fold(0.0, f64::max);
    let mc = item("a1", "monte-carlo", A1_MC_TOL - e, format!("max |MC - closed form| {e:.4} over {A1_MC_CONFIGS} configurations"));
    Ok(vec![sweep, mc])
}

/// `e^x - 1 <= 2x` on a grid of `[0, 1]`.
fn a2() -> VerifyItem {
    let n = 10_000;
    let worst = (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            x.exp_m1() - 2.0 * x
        })
        .fold(f64::NEG_INFINITY, f64::max);
    item("a2", "exp", 0.0 - worst, format!("max e^x-1-2x = {worst:e}"))
}

/// `1 - sin(x)/x <= x²/6` on a grid of `[-10, 10]` without 0.
fn a3() -> VerifyItem {
    let n = 20_000;
    let worst = (0..=n)
        .filter(|&i| 2 * i != n)
        .map(|i| {
            let x = -10.0 + 20.0 * i as f64 / n as f64;
            1.0 - x.sin() / x - x * x / 6.0
        })
        .fold(f64::NEG_INFINITY, f64::max);
    item("a3", "sinc", -worst, format!("max 1-sin(x)/x-x^2/6 = {worst:e}"))
}

/// Grid estimates of the modified norm are nondecreasing in `β` on windows
/// of length at most one.
fn a4(kernel: &Kernel) -> Result<Vec<VerifyItem>> {
    let zoo: Vec<(AnalyticDensity, f64, f64)> = vec![
        (AnalyticDensity::peak_triangular(), 0.2, 0.8),
        (AnalyticDensity::uniform(), 0.1, 0.9),
        (AnalyticDensity::tent(0.5), 0.0, 1.0),
        (AnalyticDensity::weierstrass_composite(0.0, 0.3)?, -0.5, 0.5),
        (AnalyticDensity::weierstrass_composite(0.0, 0.7)?, 1.4, 2.4),
    ];
    let mut betas: Vec<f64> = (1..=25).map(|i| i as f64 / 10.0).collect();
    betas.push(f64::INFINITY);
    let bs = kernel.beta_star();
    zoo.iter()
        .map(|(p, lo, hi)| {
            let norms: Vec<f64> =
                betas.iter().map(|&b| modified_holder_norm(p.function(), b, bs, *lo, *hi)).collect::<Result<_>>()?;
            let mut worst = f64::INFINITY;
            for w in norms.windows(2) {
                let m = if w[1] == f64::INFINITY { f64::INFINITY } else { w[1] - w[0] };
                worst = worst.min(m);
            }
            Ok(item("a4", p.name().to_string(), worst, format!("window [{lo}, {hi}]")))
        })
        .collect()
}

fn kl() -> Result<Vec<VerifyItem>> {
    let mut jobs: Vec<(f64, u64)> = Vec::new();
    for beta in [0.3, 0.5, 0.8] {
        for n in KL_NS {
            jobs.push((beta, n));
        }
    }
    let mut out: Vec<VerifyItem> = jobs
        .par_iter()
        .map(|&(beta, n)| {
            let p0 = AnalyticDensity::weierstrass_composite(0.5, beta)?;
            let p1 = AnalyticDensity::perturbed(&p0, n, Variant::One)?;
            let v = n as f64 * kl_divergence(&p1, &p0, KL_TOL)?;
            let bound = c8(beta)?;
            Ok(item("kl", format!("part1 beta={beta} n={n}"), 1.0 - v / bound, format!("n KL = {v:e}, c8 = {bound:e}")))
        })
        .collect::<Result<_>>()?;
    for n in KL_NS {
        let t = AnalyticDensity::tent(0.5);
        let p1 = AnalyticDensity::perturbed(&t, n, Variant::One)?;
        let p2 = AnalyticDensity::perturbed(&t, n, Variant::Two)?;
        let v = n as f64 * kl_divergence(&p2, &p1, KL_TOL)?;
        out.push(item(
            "kl",
            format!("part2 n={n}"),
            1.0 - v / TENT_PAIR_KL_BOUND,
            format!("n KL = {v:e}, bound = {TENT_PAIR_KL_BOUND:e}"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        let k = Kernel::rectangular();
        let r = verify_inequalities(&k, &["a2".into(), "a3".into(), "kernel".into(), "a4".into()]).unwrap();
        assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.suite("a3").len(), 1);
    }

    #[test]
    fn falsified_order_fails_kernel_suite() {
        let k = Kernel::rectangular().with_declared_order(2);
        let r = verify_inequalities(&k, &["kernel".into()]).unwrap();
        assert!(r.failures().any(|i| i.name == "order"));
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(verify_inequalities(&Kernel::rectangular(), &["zz".into()]).is_err());
    }

    #[test]
    fn raw_weierstrass_values() {
        let f = raw_weierstrass(1.0).unwrap();
        assert!((f.value(0.0) - 2.0).abs() < 1e-10);
        assert!(f.value(1.0).abs() < 1e-10);
    }
}
