//! Seeded Monte Carlo experiments.
//!
//! Replication `r` of sub-experiment `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `(i << 32) | r`, so any row
//! can be regenerated alone and the order in which replications run does not
//! matter.

use std::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use locband_core::calibration::{derive_plan, normalizers, CalibrationPlan, PlanParams};
use locband_core::density::local_exponent;
use locband_core::selector::{admissibility_scores, profile_from_scores};
use locband_core::{
    band_at, build_band, build_kde_table, covers_truth, reference_global_band, select_profile, split_sample,
    theoretical_window, AnalyticDensity, ConfidenceBand, Half, Kernel, Result,
};

/// Per-replication records plus summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            params: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn stat(&mut self, key: impl Into<String>, value: f64) {
        self.summary.push((key.into(), value));
    }

    fn plan_params(&mut self, prefix: &str, plan: &CalibrationPlan) {
        for (k, v) in crate::io::plan_to_pairs(plan) {
            self.params.push((format!("{prefix}{k}"), v));
        }
        for w in &plan.warnings {
            if !self.warnings.contains(w) {
                self.warnings.push(w.clone());
            }
        }
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn param_value(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Records as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Parameter block, summary and warnings as `key=value` lines.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment={}", self.name);
        for (k, v) in &self.params {
            let _ = writeln!(s, "{k}={v}");
        }
        for (k, v) in &self.summary {
            let _ = writeln!(s, "summary.{k}={v}");
        }
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning.{i}={w}");
        }
        s
    }
}

/// Generator for replication `rep` of sub-experiment `sub`.
pub fn stream(seed: u64, sub: u32, rep: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sub as u64) << 32) | rep as u64);
    rng
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// One replication of the full pipeline: sample, split, select on `χ₂`,
/// build the band on `χ₁`.
pub fn fit_band(
    density: &AnalyticDensity,
    plan: &CalibrationPlan,
    kernel: &Kernel,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, ConfidenceBand)> {
    let data = density.sample(plan.params.n as usize, rng)?;
    let split = split_sample(&data)?;
    let table = build_kde_table(&split, plan, kernel, Half::Second)?;
    let profile = select_profile(&table, plan)?;
    let band = build_band(&split, &profile, plan, kernel, alpha)?;
    Ok((data, band))
}

/// Simultaneous coverage of the locally adaptive band.
pub fn run_coverage(
    density: &AnalyticDensity,
    plan: &CalibrationPlan,
    kernel: &Kernel,
    alpha: f64,
    reps: u32,
    seed: u64,
) -> Result<ExperimentReport> {
    coverage_sub(density, plan, kernel, alpha, reps, seed, 0)
}

fn coverage_sub(
    density: &AnalyticDensity,
    plan: &CalibrationPlan,
    kernel: &Kernel,
    alpha: f64,
    reps: u32,
    seed: u64,
    sub: u32,
) -> Result<ExperimentReport> {
    if reps == 0 {
        return Err(locband_core::Error::InvalidConfiguration("reps must be at least 1".into()));
    }
    let mut report = ExperimentReport::new(
        "coverage",
        &["n", "rep", "covered", "mean_halfwidth", "min_halfwidth", "max_halfwidth", "width_law_error"],
    );
    report.param("density", density.name());
    report.param("alpha", alpha);
    report.param("reps", reps);
    report.param("seed", seed);
    report.plan_params("plan.", plan);
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, sub, rep);
            let (_, band) = fit_band(density, plan, kernel, alpha, &mut rng)?;
            let hw: Vec<f64> = band.cells.iter().map(|c| c.halfwidth).collect();
            let law = band
                .cells
                .iter()
                .map(|c| ((2.0 * c.halfwidth) / band.width_law(c.h_loc) - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(vec![
                plan.params.n as f64,
                rep as f64,
                if covers_truth(&band, density) { 1.0 } else { 0.0 },
                mean(&hw),
                hw.iter().cloned().fold(f64::INFINITY, f64::min),
                hw.iter().cloned().fold(0.0, f64::max),
                law,
            ])
        })
        .collect::<Result<_>>()?;
    report.rows = rows;
    let cov = report.column("covered").expect("column");
    report.stat("coverage", mean(&cov));
    report.stat("mean_halfwidth", mean(&report.column("mean_halfwidth").expect("column")));
    report.stat("width_law_error", report.column("width_law_error").expect("column").into_iter().fold(0.0, f64::max));
    Ok(report)
}

/// Coverage for several sample sizes with the same knobs; sub-experiment
/// `i` uses stream block `i`.
pub fn run_coverage_trend(
    density: &AnalyticDensity,
    params: &PlanParams,
    ns: &[u64],
    kernel: &Kernel,
    alpha: f64,
    reps: u32,
    seed: u64,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "coverage",
        &["n", "rep", "covered", "mean_halfwidth", "min_halfwidth", "max_halfwidth", "width_law_error"],
    );
    report.param("density", density.name());
    report.param("alpha", alpha);
    report.param("reps", reps);
    report.param("seed", seed);
    for (i, &n) in ns.iter().enumerate() {
        let plan = derive_plan(&params.with_n(n), kernel)?;
        let sub = coverage_sub(density, &plan, kernel, alpha, reps, seed, i as u32)?;
        report.plan_params(&format!("plan.{n}."), &plan);
        report.stat(format!("coverage_n{n}"), sub.summary_value("coverage").expect("stat"));
        report.stat(format!("mean_halfwidth_n{n}"), sub.summary_value("mean_halfwidth").expect("stat"));
        report.rows.extend(sub.rows);
    }
    Ok(report)
}

/// Normalized widths at the probes: `width(t) (log ñ / ñ)^{-β/(2β+1)}` with
/// `β` from the oracle, against the bound `(log ñ)^{γ̃}`, plus the ratio of
/// the width at the smoothest probe to the width at the roughest one.
pub fn run_adaptivity(
    density: &AnalyticDensity,
    plans: &[CalibrationPlan],
    kernel: &Kernel,
    alpha: f64,
    reps: u32,
    seed: u64,
    probes: &[f64],
) -> Result<ExperimentReport> {
    if probes.len() < 2 {
        return Err(locband_core::Error::InvalidConfiguration("need at least two probes".into()));
    }
    let mut report = ExperimentReport::new(
        "adaptivity",
        &["n", "rep", "probe", "beta", "width", "normalized_width", "bound", "within", "global_width"],
    );
    report.param("density", density.name());
    report.param("alpha", alpha);
    report.param("reps", reps);
    report.param("seed", seed);
    report.param("probes", probes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "));
    for (i, plan) in plans.iter().enumerate() {
        let n = plan.params.n;
        report.plan_params(&format!("plan.{n}."), plan);
        let betas: Vec<f64> = probes.iter().map(|&t| local_exponent(density, plan, t)).collect::<Result<_>>()?;
        let rough = (0..probes.len()).min_by(|&a, &b| betas[a].total_cmp(&betas[b])).expect("probes");
        let smooth = (0..probes.len()).max_by(|&a, &b| betas[a].total_cmp(&betas[b])).expect("probes");
        let bound = plan.log_n_tilde().powf(plan.gamma_tilde());
        let per_rep: Vec<Vec<Vec<f64>>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(seed, i as u32, rep);
                let data = density.sample(n as usize, &mut rng)?;
                let split = split_sample(&data)?;
                let table = build_kde_table(&split, plan, kernel, Half::Second)?;
                let profile = select_profile(&table, plan)?;
                let local = build_band(&split, &profile, plan, kernel, alpha)?;
                let global = reference_global_band(&split, plan, kernel, alpha)?;
                probes
                    .iter()
                    .zip(&betas)
                    .map(|(&t, &beta)| {
                        let (lo, hi) = band_at(&local, t)?;
                        let (glo, ghi) = band_at(&global, t)?;
                        let width = hi - lo;
                        let rate = if beta.is_finite() { beta / (2.0 * beta + 1.0) } else { 0.5 };
                        let norm = width * plan.log_ratio().powf(-rate);
                        Ok(vec![
                            n as f64,
                            rep as f64,
                            t,
                            beta,
                            width,
                            norm,
                            bound,
                            if norm <= bound { 1.0 } else { 0.0 },
                            ghi - glo,
                        ])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut all_within = 0usize;
        let mut ratios = Vec::with_capacity(reps as usize);
        for rows in &per_rep {
            if rows.iter().all(|r| r[7] == 1.0) {
                all_within += 1;
            }
            ratios.push(rows[smooth][4] / rows[rough][4]);
        }
        for (pi, &t) in probes.iter().enumerate() {
            let within: Vec<f64> = per_rep.iter().map(|r| r[pi][7]).collect();
            let norm: Vec<f64> = per_rep.iter().map(|r| r[pi][5]).collect();
            let local_narrower: Vec<f64> =
                per_rep.iter().map(|r| if r[pi][4] <= r[pi][8] { 1.0 } else { 0.0 }).collect();
            report.stat(format!("within_fraction_n{n}_t{t}"), mean(&within));
            report.stat(format!("mean_normalized_width_n{n}_t{t}"), mean(&norm));
            report.stat(format!("local_not_wider_fraction_n{n}_t{t}"), mean(&local_narrower));
        }
        report.stat(format!("bound_n{n}"), bound);
        report.stat(format!("all_within_fraction_n{n}"), all_within as f64 / reps as f64);
        report.stat(format!("mean_ratio_n{n}"), mean(&ratios));
        for rows in per_rep {
            report.rows.extend(rows);
        }
    }
    let means: Vec<f64> = plans
        .iter()
        .map(|p| report.summary_value(&format!("mean_ratio_n{}", p.params.n)).expect("stat"))
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    report.stat("ratio_strictly_decreasing", if decreasing { 1.0 } else { 0.0 });
    Ok(report)
}

/// Fraction of `(replication, mesh point)` pairs with `ĵ` inside the window
/// `[k_n, j̄ + 1]` of the oracle exponent.
pub fn run_window_check(
    density: &AnalyticDensity,
    plan: &CalibrationPlan,
    kernel: &Kernel,
    reps: u32,
    seed: u64,
) -> Result<ExperimentReport> {
    let m = plan.mesh_count as i64;
    let windows: Vec<(f64, i64)> = (0..=m)
        .into_par_iter()
        .map(|k| theoretical_window(density, plan, plan.mesh_point(k)))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("window", &["rep", "points", "hits", "below", "above", "hit_fraction"]);
    report.param("density", density.name());
    report.param("reps", reps);
    report.param("seed", seed);
    report.plan_params("plan.", plan);
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, 0, rep);
            let data = density.sample(plan.params.n as usize, &mut rng)?;
            let split = split_sample(&data)?;
            let table = build_kde_table(&split, plan, kernel, Half::Second)?;
            let profile = select_profile(&table, plan)?;
            let (mut hits, mut below, mut above) = (0usize, 0usize, 0usize);
            for (j, &(lo, hi)) in profile.j_hat.iter().zip(&windows) {
                let j = *j as f64;
                if j < lo {
                    below += 1;
                } else if j > hi as f64 {
                    above += 1;
                } else {
                    hits += 1;
                }
            }
            let pts = windows.len() as f64;
            Ok(vec![rep as f64, pts, hits as f64, below as f64, above as f64, hits as f64 / pts])
        })
        .collect::<Result<_>>()?;
    report.rows = rows;
    let hits: f64 = report.column("hits").expect("column").iter().sum();
    let pts: f64 = report.column("points").expect("column").iter().sum();
    report.stat("hit_fraction", hits / pts);
    report.stat("below_fraction", report.column("below").expect("column").iter().sum::<f64>() / pts);
    report.stat("above_fraction", report.column("above").expect("column").iter().sum::<f64>() / pts);
    Ok(report)
}

/// Standard Gumbel distribution function.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and `cdf`.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((((i + 1) as f64) / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Maxima of `m` i.i.d. `N(0, TV(K)²/2)` variables, normalized as
/// `a_n (max - b_n / 3)` with `δ_n = 1/m`, against the standard Gumbel law.
pub fn run_gumbel_calibration(kernel: &Kernel, m: u32, reps: u32, seed: u64) -> Result<ExperimentReport> {
    if m < 16 {
        return Err(locband_core::Error::InvalidConfiguration(format!("m = {m} < 16")));
    }
    let tv = kernel.total_variation();
    let (a_n, b_n) = normalizers(1.0 / m as f64, tv)?;
    let sigma = tv / std::f64::consts::SQRT_2;
    let mut report = ExperimentReport::new("gumbel", &["rep", "maximum", "statistic"]);
    report.param("kernel", kernel.name());
    report.param("m", m);
    report.param("reps", reps);
    report.param("seed", seed);
    report.param("a_n", a_n);
    report.param("b_n", b_n);
    report.rows = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, 0, rep);
            let mx = (0..m)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .fold(f64::NEG_INFINITY, f64::max);
            vec![rep as f64, mx, a_n * (mx - b_n / 3.0)]
        })
        .collect();
    let stats = report.column("statistic").expect("column");
    report.stat("ks_distance", ks_distance(&stats, gumbel_cdf));
    report.stat("mean_statistic", mean(&stats));
    Ok(report)
}

/// The threshold calibration: smallest `c₂` on a grid of step `step` such
/// that, for the uniform density, `ĵ <= j_min + 2` at a fraction `target`
/// of the pooled mesh points.
///
/// `ĵ <= j_min + 2` holds at `k` exactly when the admissibility score of
/// `j_min + 2` at `k` is at most `c₂`, so the scores are pooled once and
/// the grid is searched on them.
pub fn calibrate_c2(
    kernel: &Kernel,
    params: &PlanParams,
    reps: u32,
    seed: u64,
    step: f64,
    target: f64,
) -> Result<ExperimentReport> {
    let density = AnalyticDensity::uniform();
    let plan = derive_plan(params, kernel)?;
    let row = 2usize.min((plan.j_max - plan.j_min) as usize);
    let mut report = ExperimentReport::new("calibrate-c2", &["rep", "points", "score_q95", "score_max"]);
    report.param("density", density.name());
    report.param("reps", reps);
    report.param("seed", seed);
    report.param("step", step);
    report.param("target", target);
    report.plan_params("plan.", &plan);
    let pooled: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, 0, rep);
            let data = density.sample(plan.params.n as usize, &mut rng)?;
            let split = split_sample(&data)?;
            let table = build_kde_table(&split, &plan, kernel, Half::Second)?;
            let scores = admissibility_scores(&table, &plan)?;
            Ok(scores[row].clone())
        })
        .collect::<Result<_>>()?;
    for (rep, s) in pooled.iter().enumerate() {
        let mut v = s.clone();
        v.sort_by(f64::total_cmp);
        let q = v[((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        report.rows.push(vec![rep as f64, v.len() as f64, q, *v.last().expect("nonempty")]);
    }
    let mut all: Vec<f64> = pooled.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    let total = all.len() as f64;
    let mut i = 1u32;
    let c2 = loop {
        let c2 = i as f64 * step;
        let ok = all.partition_point(|s| *s <= c2) as f64 / total;
        if ok >= target {
            break c2;
        }
        i += 1;
    };
    // cross-check through the selector itself on the first replication
    if reps > 0 {
        let mut rng = stream(seed, 0, 0);
        let data = density.sample(plan.params.n as usize, &mut rng)?;
        let split = split_sample(&data)?;
        let table = build_kde_table(&split, &plan, kernel, Half::Second)?;
        let scores = admissibility_scores(&table, &plan)?;
        let prof = profile_from_scores(&scores, &plan, c2, Half::Second, table.fingerprint());
        let frac = prof.j_hat.iter().filter(|&&j| j <= plan.j_min + 2).count() as f64 / prof.j_hat.len() as f64;
        report.stat("first_rep_fraction_at_c2", frac);
    }
    report.stat("c2", c2);
    report.stat("pooled_points", total);
    Ok(report)
}
