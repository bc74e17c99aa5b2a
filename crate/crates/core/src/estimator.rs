//! Sample splitting and kernel density estimates on the mesh.

use alloc::vec::Vec;

use crate::calibration::CalibrationPlan;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Half {
    /// `χ₁`, used for the band centers.
    First,
    /// `χ₂`, used for bandwidth selection.
    Second,
}

/// The two halves of a sample, each sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    chi1: Vec<f64>,
    chi2: Vec<f64>,
    fingerprints: [u64; 2],
}

impl SplitSample {
    pub fn chi1(&self) -> &[f64] {
        &self.chi1
    }
    pub fn chi2(&self) -> &[f64] {
        &self.chi2
    }
    pub fn half(&self, h: Half) -> &[f64] {
        match h {
            Half::First => &self.chi1,
            Half::Second => &self.chi2,
        }
    }
    pub fn n_tilde(&self) -> usize {
        self.chi1.len()
    }
    /// Content hash of one half, used to tie tables and profiles to it.
    pub fn fingerprint(&self, h: Half) -> u64 {
        match h {
            Half::First => self.fingerprints[0],
            Half::Second => self.fingerprints[1],
        }
    }
}

fn fnv1a(xs: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for x in xs {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn sort(v: &mut [f64]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
}

/// First `ñ = ⌊n/2⌋` points form `χ₁`, the next `ñ` form `χ₂`; an odd last
/// point is dropped.
pub fn split_sample(data: &[f64]) -> Result<SplitSample> {
    if data.len() < 4 {
        return Err(Error::InsufficientData(data.len()));
    }
    if let Some(index) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteData { index });
    }
    let m = data.len() / 2;
    let mut chi1 = data[..m].to_vec();
    let mut chi2 = data[m..2 * m].to_vec();
    sort(&mut chi1);
    sort(&mut chi2);
    let fingerprints = [fnv1a(&chi1), fnv1a(&chi2)];
    Ok(SplitSample { chi1, chi2, fingerprints })
}

/// `(1/m) Σ h^{-1} K((X_i - t)/h)` by direct summation.
pub fn kde_at(half: &[f64], t: f64, h: f64, k: &Kernel) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidBandwidth(h));
    }
    if half.is_empty() {
        return Err(Error::EmptySample);
    }
    let acc: f64 = half.iter().map(|&x| k.evaluate((x - t) / h)).sum();
    Ok(acc / (h * half.len() as f64))
}

/// Same estimate for sorted data, visiting only points within `[t - h, t + h]`.
/// For a constant kernel the sum is `c · count`, which equals the direct sum
/// exactly.
pub fn kde_sorted(sorted: &[f64], t: f64, h: f64, k: &Kernel) -> f64 {
    let lo = sorted.partition_point(|&x| (x - t) / h < -1.0);
    let hi = sorted.partition_point(|&x| (x - t) / h <= 1.0);
    let acc = match k.constant_value() {
        Some(c) => c * (hi - lo) as f64,
        None => sorted[lo..hi].iter().map(|&x| k.evaluate((x - t) / h)).sum(),
    };
    acc / (h * sorted.len() as f64)
}

/// Number of mesh steps `i` with `i δ < (7/8) 2^{-j}`, i.e. `i 2^{j+3} < 7M`.
pub fn ball_steps(mesh_count: u64, j: u32) -> i64 {
    let m7 = 7u128 * mesh_count as u128;
    ((m7 - 1) >> (j + 3)) as i64
}

/// Estimates `p̂(kδ, 2^{-j})` for every mesh index `k` in `[-r, M + r]` (with
/// `r` the selector's ball margin at `j_min`) and every `j` in `J_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeTable {
    half: Half,
    fingerprint: u64,
    first_index: i64,
    len: usize,
    j_min: u32,
    j_max: u32,
    mesh_count: u64,
    values: Vec<f64>,
}

impl KdeTable {
    pub fn half(&self) -> Half {
        self.half
    }
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
    pub fn mesh_count(&self) -> u64 {
        self.mesh_count
    }
    pub fn index_range(&self) -> (i64, i64) {
        (self.first_index, self.first_index + self.len as i64 - 1)
    }
    pub fn j_range(&self) -> (u32, u32) {
        (self.j_min, self.j_max)
    }
    /// Row of estimates at exponent `j`, indexed from `index_range().0`.
    pub fn row(&self, j: u32) -> &[f64] {
        let r = (j - self.j_min) as usize;
        &self.values[r * self.len..(r + 1) * self.len]
    }
    /// Estimate at mesh index `k` and exponent `j`.
    pub fn get(&self, k: i64, j: u32) -> Option<f64> {
        if j < self.j_min || j > self.j_max {
            return None;
        }
        let i = k - self.first_index;
        (i >= 0 && (i as usize) < self.len).then(|| self.row(j)[i as usize])
    }
}

pub fn build_kde_table(split: &SplitSample, plan: &CalibrationPlan, k: &Kernel, half: Half) -> Result<KdeTable> {
    if plan.j_max < plan.j_min {
        return Err(Error::EmptyBandwidthGrid { j_min: plan.j_min as i64, j_max: plan.j_max as i64 });
    }
    let data = split.half(half);
    let m = plan.mesh_count;
    let margin = ball_steps(m, plan.j_min);
    let first_index = -margin;
    let len = (m as i64 + 2 * margin + 1) as usize;
    let rows = (plan.j_max - plan.j_min + 1) as usize;
    let mut values = Vec::with_capacity(rows * len);
    for j in plan.j_values() {
        let h = math::exp2(-(j as f64));
        for i in 0..len {
            let s = plan.mesh_point(first_index + i as i64);
            values.push(kde_sorted(data, s, h, k));
        }
    }
    Ok(KdeTable {
        half,
        fingerprint: split.fingerprint(half),
        first_index,
        len,
        j_min: plan.j_min,
        j_max: plan.j_max,
        mesh_count: m,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{derive_plan, PlanParams};
    use alloc::vec;

    #[test]
    fn split_examples() {
        let data: Vec<f64> = (0..9).map(|i| (9 - i) as f64).collect();
        let s = split_sample(&data).unwrap();
        assert_eq!(s.n_tilde(), 4);
        assert_eq!(s.chi1(), &[6.0, 7.0, 8.0, 9.0]);
        assert_eq!(s.chi2(), &[2.0, 3.0, 4.0, 5.0]);
        let s8 = split_sample(&data[..8]).unwrap();
        assert_eq!(s8.n_tilde(), 4);
        assert_eq!(split_sample(&data[..3]), Err(Error::InsufficientData(3)));
        assert_eq!(split_sample(&[1.0, f64::NAN, 0.0, 0.0]), Err(Error::NonFiniteData { index: 1 }));
    }

    #[test]
    fn kde_examples() {
        let k = Kernel::rectangular();
        assert_eq!(kde_at(&[0.3], 0.3, 0.5, &k).unwrap(), 1.0);
        assert_eq!(kde_at(&[2.0, -2.0], 0.0, 0.5, &k).unwrap(), 0.0);
        // boundary point gets the kernel's closed-support value
        assert_eq!(kde_at(&[0.5], 0.0, 0.5, &k).unwrap(), 1.0);
        assert!(kde_at(&[0.5], 0.0, 0.0, &k).is_err());
        // five points against a hand-written oracle
        let xs = [0.1, 0.25, 0.4, 0.42, 0.9];
        let oracle = |t: f64, h: f64| {
            let mut c = 0.0;
            for x in xs {
                if ((x - t) / h).abs() <= 1.0 {
                    c += 0.5 / h;
                }
            }
            c / 5.0
        };
        for (t, h) in [(0.3, 0.1), (0.41, 0.02), (0.0, 1.0)] {
            assert!((kde_at(&xs, t, h, &k).unwrap() - oracle(t, h)).abs() < 1e-14);
        }
    }

    #[test]
    fn sorted_path_matches_direct() {
        let xs: Vec<f64> = (0..500).map(|i| ((i * 7919) % 1000) as f64 / 997.0).collect();
        let mut sorted = xs.clone();
        sort(&mut sorted);
        for k in [Kernel::rectangular(), Kernel::epanechnikov()] {
            for i in 0..50 {
                let t = i as f64 / 49.0;
                let h = 0.01 + 0.003 * i as f64;
                let a = kde_at(&xs, t, h, &k).unwrap();
                let b = kde_sorted(&sorted, t, h, &k);
                assert!((a - b).abs() <= 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn ball_steps_examples() {
        // 7/8 * 2^-3 = 0.109375; with M = 100 the largest i with i/100 < 0.109375 is 10
        assert_eq!(ball_steps(100, 3), 10);
        // exact tie excluded: M = 64, j = 3 -> 7*64/64 = 7 steps would hit the radius
        assert_eq!(ball_steps(64, 3), 6);
        assert_eq!(ball_steps(4, 6), 0);
    }

    #[test]
    fn table_matches_kde_at() {
        let k = Kernel::rectangular();
        let data: Vec<f64> = (0..4096).map(|i| ((i as f64 * 0.618034) % 1.0).powi(2)).collect();
        let s = split_sample(&data).unwrap();
        let plan = derive_plan(&PlanParams::practical(4096, &k), &k).unwrap();
        let t = build_kde_table(&s, &plan, &k, Half::Second).unwrap();
        let (lo, hi) = t.index_range();
        for i in 0..100i64 {
            let idx = lo + (i * 7919) % (hi - lo + 1);
            let j = plan.j_min + (i as u32 % (plan.j_max - plan.j_min + 1));
            let direct = kde_at(s.chi2(), plan.mesh_point(idx), (-(j as f64)).exp2(), &k).unwrap();
            assert!((t.get(idx, j).unwrap() - direct).abs() <= 1e-12);
        }
        assert!(t.get(hi + 1, plan.j_min).is_none());
        assert_eq!(t.half(), Half::Second);
        let _ = vec![0];
    }
}
