//! Piecewise-constant confidence band on `[0, 1]`.
//!
//! Cell `k` is `[(k-1)δ, kδ)` (the last cell is closed at 1). Its center is
//! the `χ₁` estimate at `kδ` with bandwidth `h_loc(k)` and its halfwidth is
//! `q_n(α) / √(ñ h_loc(k))`.

use alloc::vec::Vec;

use crate::calibration::{band_halfwidth_quantile, optimal_bandwidth, CalibrationPlan};
use crate::density::AnalyticDensity;
use crate::error::{Error, Result};
use crate::estimator::{kde_sorted, Half, SplitSample};
use crate::kernel::Kernel;
use crate::math;
use crate::selector::BandwidthProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct BandCell {
    pub k: u64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub center: f64,
    pub halfwidth: f64,
    pub h_loc: f64,
    /// `ĵ` at the cell's end points; `None` for the fixed-bandwidth band.
    pub j_hat_left: Option<u32>,
    pub j_hat_right: Option<u32>,
}

impl BandCell {
    pub fn lo(&self) -> f64 {
        self.center - self.halfwidth
    }
    pub fn hi(&self) -> f64 {
        self.center + self.halfwidth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub cells: Vec<BandCell>,
    pub alpha: f64,
    pub q_n: f64,
    pub mesh_count: u64,
    pub n_tilde: u64,
}

impl ConfidenceBand {
    /// `2 q_n / √(ñ h)`.
    pub fn width_law(&self, h: f64) -> f64 {
        2.0 * self.q_n / math::sqrt(self.n_tilde as f64 * h)
    }
}

fn assemble(
    split: &SplitSample,
    plan: &CalibrationPlan,
    k: &Kernel,
    alpha: f64,
    bandwidth: impl Fn(usize) -> (f64, Option<u32>, Option<u32>),
) -> Result<ConfidenceBand> {
    let q_n = band_halfwidth_quantile(plan, alpha)?;
    let m = plan.mesh_count;
    let nt = split.n_tilde() as f64;
    let cells = (1..=m as usize)
        .map(|c| {
            let (h, jl, jr) = bandwidth(c);
            let t = plan.mesh_point(c as i64);
            BandCell {
                k: c as u64,
                t_lo: plan.mesh_point(c as i64 - 1),
                t_hi: t,
                center: kde_sorted(split.chi1(), t, h, k),
                halfwidth: q_n / math::sqrt(nt * h),
                h_loc: h,
                j_hat_left: jl,
                j_hat_right: jr,
            }
        })
        .collect();
    Ok(ConfidenceBand { cells, alpha, q_n, mesh_count: m, n_tilde: split.n_tilde() as u64 })
}

/// The locally adaptive band. The profile must have been selected on `χ₂` of
/// the same split.
pub fn build_band(
    split: &SplitSample,
    profile: &BandwidthProfile,
    plan: &CalibrationPlan,
    k: &Kernel,
    alpha: f64,
) -> Result<ConfidenceBand> {
    if profile.source != Half::Second || profile.fingerprint != split.fingerprint(Half::Second) {
        return Err(Error::CrossSampleContamination);
    }
    if profile.h_loc.len() as u64 != plan.mesh_count || split.n_tilde() as u64 != plan.n_tilde {
        return Err(Error::InvalidConfiguration("profile does not match the plan".into()));
    }
    assemble(split, plan, k, alpha, |c| {
        (profile.h_loc[c - 1], Some(profile.j_hat[c - 1]), Some(profile.j_hat[c]))
    })
}

/// Same construction with the fixed bandwidth `h_{β_*,n} 2^{-u_n}` everywhere.
pub fn reference_global_band(split: &SplitSample, plan: &CalibrationPlan, k: &Kernel, alpha: f64) -> Result<ConfidenceBand> {
    if split.n_tilde() as u64 != plan.n_tilde {
        return Err(Error::InvalidConfiguration("split does not match the plan".into()));
    }
    let h = optimal_bandwidth(plan, plan.params.beta_star_low)? * math::exp2(-plan.u_n);
    assemble(split, plan, k, alpha, |_| (h, None, None))
}

/// Index of the cell holding `t`: right-open cells, last one closed.
pub fn cell_index(band: &ConfidenceBand, t: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfDomain(t));
    }
    let m = band.mesh_count as i64;
    let point = |k: i64| k as f64 / m as f64;
    let mut i = math::floor(t * m as f64) as i64;
    if i < m && point(i + 1) <= t {
        i += 1;
    }
    if i > 0 && point(i) > t {
        i -= 1;
    }
    Ok(i.min(m - 1) as usize)
}

/// `(lo, hi)` of the band at `t`.
pub fn band_at(band: &ConfidenceBand, t: f64) -> Result<(f64, f64)> {
    let c = &band.cells[cell_index(band, t)?];
    Ok((c.lo(), c.hi()))
}

/// Whether every cell's range of `p` lies inside that cell's interval.
pub fn covers_truth(band: &ConfidenceBand, p: &AnalyticDensity) -> bool {
    band.cells.iter().all(|c| {
        let (mn, mx) = p.function().range_on(c.t_lo, c.t_hi);
        c.lo() <= mn && mx <= c.hi()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{derive_plan, PlanParams};
    use crate::estimator::{build_kde_table, split_sample};
    use crate::selector::select_profile;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: u64, seed: u64) -> (SplitSample, CalibrationPlan, BandwidthProfile, Kernel) {
        let k = Kernel::rectangular();
        let plan = derive_plan(&PlanParams::practical(n, &k), &k).unwrap();
        let data = AnalyticDensity::peak_triangular().sample(n as usize, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let s = split_sample(&data).unwrap();
        let t = build_kde_table(&s, &plan, &k, Half::Second).unwrap();
        let p = select_profile(&t, &plan).unwrap();
        (s, plan, p, k)
    }

    #[test]
    fn halfwidth_example() {
        // ñ = 1024, h = 0.01, q = 8.0338
        let v = 8.0338 / (1024.0f64 * 0.01).sqrt();
        assert!((v - 2.5106).abs() < 1e-4);
    }

    #[test]
    fn tiling_and_width_law() {
        let (s, plan, prof, k) = setup(4096, 1);
        let b = build_band(&s, &prof, &plan, &k, 0.1).unwrap();
        assert_eq!(b.cells.len() as u64, plan.mesh_count);
        assert_eq!(b.cells[0].t_lo, 0.0);
        assert_eq!(b.cells.last().unwrap().t_hi, 1.0);
        for w in b.cells.windows(2) {
            assert_eq!(w[0].t_hi, w[1].t_lo);
        }
        for c in &b.cells {
            assert!(c.halfwidth > 0.0);
            let lhs = 2.0 * c.halfwidth * (b.n_tilde as f64 * c.h_loc).sqrt();
            assert!((lhs - 2.0 * b.q_n).abs() < 1e-12);
            assert_eq!(2.0 * c.halfwidth, b.width_law(c.h_loc));
        }
        let (c1, c2) = (&b.cells[3], &b.cells[10]);
        assert!((c1.halfwidth / c2.halfwidth - (c2.h_loc / c1.h_loc).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn band_at_conventions() {
        let (s, plan, prof, k) = setup(4096, 2);
        let b = build_band(&s, &prof, &plan, &k, 0.1).unwrap();
        let m = plan.mesh_count as usize;
        assert_eq!(band_at(&b, 0.0).unwrap(), (b.cells[0].lo(), b.cells[0].hi()));
        assert_eq!(band_at(&b, 1.0).unwrap(), (b.cells[m - 1].lo(), b.cells[m - 1].hi()));
        for kk in [1usize, 17, m / 2, m - 1] {
            let t = plan.mesh_point(kk as i64);
            assert_eq!(cell_index(&b, t).unwrap(), kk, "k={kk}");
        }
        assert_eq!(band_at(&b, 1.5), Err(Error::OutOfDomain(1.5)));
    }

    #[test]
    fn provenance_is_enforced() {
        let (s, plan, _, k) = setup(4096, 3);
        let t1 = build_kde_table(&s, &plan, &k, Half::First).unwrap();
        let wrong = select_profile(&t1, &plan).unwrap();
        assert_eq!(build_band(&s, &wrong, &plan, &k, 0.1), Err(Error::CrossSampleContamination));
        let (other, _, prof_other, _) = setup(4096, 4);
        let _ = other;
        assert_eq!(build_band(&s, &prof_other, &plan, &k, 0.1), Err(Error::CrossSampleContamination));
    }

    #[test]
    fn alpha_monotone_and_coverage_extremes() {
        let (s, plan, prof, k) = setup(4096, 5);
        let a = build_band(&s, &prof, &plan, &k, 0.01).unwrap();
        let b = build_band(&s, &prof, &plan, &k, 0.5).unwrap();
        assert!(a.cells.iter().zip(&b.cells).all(|(x, y)| x.halfwidth >= y.halfwidth));
        let peak = AnalyticDensity::peak_triangular();
        let mut wide = a.clone();
        wide.cells.iter_mut().for_each(|c| c.halfwidth = 1e6);
        assert!(covers_truth(&wide, &peak));
        let u = AnalyticDensity::uniform();
        let mut off = a.clone();
        off.cells.iter_mut().for_each(|c| {
            c.halfwidth = 0.1;
            c.center = 1.0 + 0.2;
        });
        assert!(!covers_truth(&off, &u));
    }

    #[test]
    fn coverage_matches_dense_grid() {
        let peak = AnalyticDensity::peak_triangular();
        for seed in 0..20 {
            let (s, plan, prof, k) = setup(1024, 100 + seed);
            let mut b = build_band(&s, &prof, &plan, &k, 0.1).unwrap();
            // shrink to make both outcomes occur
            let f = 0.05 + 0.05 * seed as f64;
            b.cells.iter_mut().for_each(|c| c.halfwidth *= f);
            let dense = (0..=10_000).all(|i| {
                let t = i as f64 / 10_000.0;
                let (lo, hi) = band_at(&b, t).unwrap();
                lo <= peak.evaluate(t) && peak.evaluate(t) <= hi
            });
            // the dense grid can only miss violations
            if dense != covers_truth(&b, &peak) {
                assert!(dense && !covers_truth(&b, &peak));
            }
        }
    }

    #[test]
    fn global_band_is_flat() {
        let (s, plan, prof, k) = setup(4096, 6);
        let g = reference_global_band(&s, &plan, &k, 0.1).unwrap();
        let w = g.cells[0].halfwidth;
        assert!(g.cells.iter().all(|c| c.halfwidth == w));
        let l = build_band(&s, &prof, &plan, &k, 0.1).unwrap();
        for (a, b) in l.cells.iter().zip(&g.cells) {
            if a.h_loc == b.h_loc {
                assert_eq!(a.halfwidth, b.halfwidth);
            }
        }
    }
}
