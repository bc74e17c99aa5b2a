//! Localized Lepski selection on the mesh.
//!
//! `j` is admissible at mesh point `t` when for all `m > m' > j + 2` in `J_n`
//! and all mesh points `s` with `|s - t| < (7/8) 2^{-j}`,
//! `|p̂(s, m) - p̂(s, m')| <= c₂ √(log ñ 2^m / ñ)`.
//! The admissible set is upward closed, so `ĵ(t) = min A(t)` is found by
//! binary search over precomputed scores.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::calibration::{optimal_bandwidth, CalibrationPlan};
use crate::density::{local_exponent, AnalyticDensity};
use crate::error::{Error, Result};
use crate::estimator::{ball_steps, Half, KdeTable};
use crate::math;

/// Selected exponents `ĵ(kδ)` for `k = 0..=M` and cell bandwidths
/// `h_loc(k) = 2^{-u_n} 2^{-max(ĵ((k-1)δ), ĵ(kδ))}` for `k = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthProfile {
    pub j_hat: Vec<u32>,
    pub h_loc: Vec<f64>,
    pub u_n: f64,
    pub(crate) source: Half,
    pub(crate) fingerprint: u64,
}

impl BandwidthProfile {
    /// `h_loc` of cell `k` (1-based).
    pub fn cell_bandwidth(&self, k: usize) -> f64 {
        self.h_loc[k - 1]
    }
    pub fn source(&self) -> Half {
        self.source
    }
}

/// Normalized deviation `|p̂(s,m) - p̂(s,m')| / √(log ñ 2^m / ñ)`.
#[inline]
fn ratio(table: &KdeTable, plan: &CalibrationPlan, s: i64, m: u32, mp: u32) -> f64 {
    let a = table.get(s, m).expect("table covers the selector margin");
    let b = table.get(s, mp).expect("table covers the selector margin");
    math::abs(a - b) / plan.threshold_scale(m)
}

fn mesh_index(plan: &CalibrationPlan, t: f64) -> Result<i64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OffMesh(t));
    }
    let m = plan.mesh_count as f64;
    let k = libm::round(t * m) as i64;
    if plan.mesh_point(k) != t && math::abs(k as f64 - t * m) > 1e-9 {
        return Err(Error::OffMesh(t));
    }
    Ok(k)
}

fn check_table(table: &KdeTable, plan: &CalibrationPlan) -> Result<()> {
    if table.j_range() != (plan.j_min, plan.j_max) || table.mesh_count() != plan.mesh_count {
        return Err(Error::InvalidConfiguration("table was built for another plan".into()));
    }
    let need = ball_steps(plan.mesh_count, plan.j_min);
    let (lo, hi) = table.index_range();
    if lo > -need {
        return Err(Error::TableCoverage(-need));
    }
    if hi < plan.mesh_count as i64 + need {
        return Err(Error::TableCoverage(plan.mesh_count as i64 + need));
    }
    Ok(())
}

/// Admissible exponents at mesh point `t`, by direct enumeration of every
/// condition.
pub fn admissible_set(t: f64, table: &KdeTable, plan: &CalibrationPlan) -> Result<Vec<u32>> {
    check_table(table, plan)?;
    let k = mesh_index(plan, t)?;
    let c2 = plan.params.c2;
    let mut out = Vec::new();
    for j in plan.j_values() {
        let r = ball_steps(plan.mesh_count, j);
        let mut ok = true;
        'outer: for mp in j + 3..=plan.j_max {
            for m in mp + 1..=plan.j_max {
                for s in k - r..=k + r {
                    if !(ratio(table, plan, s, m, mp) <= c2) {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok {
            out.push(j);
        }
    }
    Ok(out)
}

/// `scores[j - j_min][k]` is the smallest `c₂` for which `j` is admissible at
/// mesh index `k = 0..=M` (`-∞` when no condition applies).
pub fn admissibility_scores(table: &KdeTable, plan: &CalibrationPlan) -> Result<Vec<Vec<f64>>> {
    check_table(table, plan)?;
    let (lo, hi) = table.index_range();
    let len = (hi - lo + 1) as usize;
    let mm = plan.mesh_count as i64;
    let rows = (plan.j_max - plan.j_min + 1) as usize;
    let mut scores = alloc::vec![Vec::new(); rows];
    // e[s] = max over the pairs with m' >= j + 3, built from the top down
    let mut e = alloc::vec![f64::NEG_INFINITY; len];
    for j in plan.j_values().rev() {
        let mp = j + 3;
        if mp < plan.j_max {
            for m in mp + 1..=plan.j_max {
                let scale = plan.threshold_scale(m);
                let (a, b) = (table.row(m), table.row(mp));
                for i in 0..len {
                    let v = math::abs(a[i] - b[i]) / scale;
                    if v > e[i] {
                        e[i] = v;
                    }
                }
            }
        }
        let r = ball_steps(plan.mesh_count, j);
        scores[(j - plan.j_min) as usize] = window_max(&e, (0 - lo) as usize, mm as usize, r as usize);
    }
    Ok(scores)
}

/// Sliding maximum of `v` over `[c - r, c + r]` for `c = start..=start + count`.
fn window_max(v: &[f64], start: usize, count: usize, r: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = start - r;
    for c in start..=start + count {
        while next <= c + r {
            while dq.back().is_some_and(|&b| v[b] <= v[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + r < c) {
            dq.pop_front();
        }
        out.push(v[*dq.front().expect("window is never empty")]);
    }
    out
}

/// Selected exponents at every mesh point and the undersmoothed cell
/// bandwidths. The table must come from `χ₂`.
pub fn select_profile(table: &KdeTable, plan: &CalibrationPlan) -> Result<BandwidthProfile> {
    let scores = admissibility_scores(table, plan)?;
    Ok(profile_from_scores(&scores, plan, plan.params.c2, table.half(), table.fingerprint()))
}

/// Profile for an arbitrary threshold from precomputed scores.
pub fn profile_from_scores(
    scores: &[Vec<f64>],
    plan: &CalibrationPlan,
    c2: f64,
    source: Half,
    fingerprint: u64,
) -> BandwidthProfile {
    let m = plan.mesh_count as usize;
    let j_hat: Vec<u32> = (0..=m)
        .map(|k| {
            // scores are nonincreasing in j, so admissibility is a suffix
            let first = scores.partition_point(|row| !(row[k] <= c2));
            plan.j_min + first.min(scores.len() - 1) as u32
        })
        .collect();
    let shrink = math::exp2(-plan.u_n);
    let h_loc = (1..=m)
        .map(|k| shrink * math::exp2(-(j_hat[k - 1].max(j_hat[k]) as f64)))
        .collect();
    BandwidthProfile { j_hat, h_loc, u_n: plan.u_n, source, fingerprint }
}

/// Window `(j̄ - m_n, j̄ + 1)` with `j̄ = ⌊log₂(1/h̄)⌋ + 1` and `h̄` the
/// optimal bandwidth at the oracle exponent.
pub fn theoretical_window(p: &AnalyticDensity, plan: &CalibrationPlan, t: f64) -> Result<(f64, i64)> {
    let beta = local_exponent(p, plan, t)?;
    let h_bar = optimal_bandwidth(plan, beta)?;
    let j_bar = math::floor(math::log2(1.0 / h_bar)) as i64 + 1;
    Ok((j_bar as f64 - plan.m_n, j_bar + 1))
}
