//! Second moment of the difference process `W̃_{k,l}(z)` built from one
//! Brownian motion `W`:
//!
//! ```text
//! W̃_{k,l}(z) = h_k^{-1/2} {W(kδ - z h_k) - W(kδ + z h_k)}
//!            + h_l^{-1/2} {W(lδ + z h_l) - W(lδ - z h_l)}
//! ```
//!
//! Expanding the square gives ten covariance terms, each `min(s, t)` for two
//! of the four time points.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use locband_core::{Error, Result};

/// Time points `(kδ - z h_k, kδ + z h_k, lδ - z h_l, lδ + z h_l)`.
pub fn time_points(h_k: f64, h_l: f64, k: i64, l: i64, delta: f64, z: f64) -> [f64; 4] {
    let (a, b) = (k as f64 * delta, l as f64 * delta);
    [a - z * h_k, a + z * h_k, b - z * h_l, b + z * h_l]
}

/// `E W̃_{k,l}(z)²` as the sum of the ten covariance terms.
pub fn tilde_w_second_moment(h_k: f64, h_l: f64, k: i64, l: i64, delta: f64, z: f64) -> Result<f64> {
    if !(h_k > 0.0 && h_l > 0.0) {
        return Err(Error::InvalidBandwidth(h_k.min(h_l)));
    }
    if !(0.0..=1.0).contains(&z) || !(delta > 0.0) {
        return Err(Error::InvalidConfiguration(format!("z = {z}, delta = {delta}")));
    }
    let t = time_points(h_k, h_l, k, l, delta, z);
    if let Some(bad) = t.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidConfiguration(format!("negative Brownian time {bad}")));
    }
    Ok(moment_at_times(t, h_k, h_l))
}

pub(crate) fn moment_at_times(t: [f64; 4], h_k: f64, h_l: f64) -> f64 {
    let [km, kp, lm, lp] = t;
    let cov = f64::min;
    let r = (h_k * h_l).sqrt();
    let e1 = cov(km, km) / h_k;
    let e2 = -2.0 * cov(km, kp) / h_k;
    let e3 = 2.0 * cov(km, lp) / r;
    let e4 = -2.0 * cov(km, lm) / r;
    let e5 = cov(kp, kp) / h_k;
    let e6 = -2.0 * cov(kp, lp) / r;
    let e7 = 2.0 * cov(kp, lm) / r;
    let e8 = cov(lp, lp) / h_l;
    let e9 = -2.0 * cov(lp, lm) / h_l;
    let e10 = cov(lm, lm) / h_l;
    // grouped so that the exactly cancelling cases come out as exact zeros
    (e1 + e2 + e5) + (e10 + e9 + e8) + ((e3 + e4) + (e7 + e6))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub h_k: f64,
    pub h_l: f64,
    pub k: i64,
    pub l: i64,
    pub delta: f64,
    pub z: f64,
}

impl Configuration {
    pub fn moment(&self) -> Result<f64> {
        tilde_w_second_moment(self.h_k, self.h_l, self.k, self.l, self.delta, self.z)
    }
}

/// Random configurations with `M ∈ [m_lo, m_hi]`, mesh indices in `1..=M`,
/// bandwidths in `(0, min(kδ, 1/4)]` and `z ∈ [0, 1]`, so every time point
/// is nonnegative.
pub fn random_configurations(count: usize, m_lo: u64, m_hi: u64, h_floor: f64, seed: u64) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    (0..count)
        .map(|_| {
            let m = m_lo + (unit.sample(&mut rng) * (m_hi - m_lo + 1) as f64) as u64;
            let m = m.min(m_hi);
            let delta = 1.0 / m as f64;
            let idx = |rng: &mut ChaCha8Rng| 1 + ((unit.sample(rng) * m as f64) as i64).min(m as i64 - 1);
            let k = idx(&mut rng);
            let l = idx(&mut rng);
            let cap = |i: i64| (i as f64 * delta).min(0.25);
            let hk = cap(k) * (h_floor + (1.0 - h_floor) * (1.0 - unit.sample(&mut rng)));
            let hl = cap(l) * (h_floor + (1.0 - h_floor) * (1.0 - unit.sample(&mut rng)));
            Configuration { h_k: hk, h_l: hl, k, l, delta, z: unit.sample(&mut rng) }
        })
        .collect()
}

/// Monte Carlo estimate of `E W̃²` from Brownian paths sampled on a uniform
/// grid of `grid` steps over `[0, max time]`; time points snap to the
/// nearest grid node. Each path only needs the increments between the four
/// snapped nodes.
pub fn monte_carlo_moment(c: &Configuration, grid: u64, paths: usize, seed: u64) -> Result<f64> {
    let t = time_points(c.h_k, c.h_l, c.k, c.l, c.delta, c.z);
    if t.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidConfiguration("negative Brownian time".into()));
    }
    let horizon = t.iter().cloned().fold(0.0, f64::max);
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let dt = horizon / grid as f64;
    let node = |x: f64| ((x / dt).round() as u64).min(grid);
    let nodes = [node(t[0]), node(t[1]), node(t[2]), node(t[3])];
    let mut order: Vec<u64> = nodes.to_vec();
    order.sort_unstable();
    order.dedup();
    let (sk, sl) = (1.0 / c.h_k.sqrt(), 1.0 / c.h_l.sqrt());
    let weights = [sk, -sk, -sl, sl];
    let chunks = 64usize;
    let per = paths.div_ceil(chunks);
    let sum: f64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let mut acc = 0.0;
            let mut w = vec![0.0; order.len()];
            for _ in 0..per {
                let mut prev = 0u64;
                let mut level = 0.0;
                for (slot, &n) in order.iter().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    level += z * (((n - prev) as f64) * dt).sqrt();
                    prev = n;
                    w[slot] = level;
                }
                let at = |n: u64| w[order.binary_search(&n).expect("node is present")];
                let v: f64 = (0..4).map(|i| weights[i] * at(nodes[i])).sum();
                acc += v * v;
            }
            acc
        })
        .sum();
    Ok(sum / (per * chunks) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: the process is a difference of two normalized
    /// Brownian increments over `[kδ - zh_k, kδ + zh_k]` and
    /// `[lδ - zh_l, lδ + zh_l]`, so its variance is `2z + 2z` minus twice
    /// the overlap of the intervals over `√(h_k h_l)`.
    fn overlap_form(c: &Configuration) -> f64 {
        let t = time_points(c.h_k, c.h_l, c.k, c.l, c.delta, c.z);
        let overlap = (t[1].min(t[3]) - t[0].max(t[2])).max(0.0);
        4.0 * c.z - 2.0 * overlap / (c.h_k * c.h_l).sqrt()
    }

    #[test]
    fn trivial_cases_vanish() {
        assert_eq!(tilde_w_second_moment(0.1, 0.1, 5, 5, 0.05, 0.7).unwrap(), 0.0);
        assert_eq!(tilde_w_second_moment(0.1, 0.03, 5, 9, 0.05, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_intervals_give_four_z() {
        let v = tilde_w_second_moment(0.01, 0.02, 10, 40, 0.01, 0.5).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn negative_time_rejected() {
        assert!(matches!(
            tilde_w_second_moment(0.5, 0.1, 1, 3, 0.1, 1.0),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn antisymmetric_in_the_pair() {
        for c in random_configurations(200, 4, 64, 0.0, 3) {
            let a = c.moment().unwrap();
            let b = tilde_w_second_moment(c.h_l, c.h_k, c.l, c.k, c.delta, c.z).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_overlap_form() {
        for c in random_configurations(2000, 2, 4096, 0.0, 11) {
            let a = c.moment().unwrap();
            let b = overlap_form(&c);
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{c:?}: {a} vs {b}");
        }
    }

    #[test]
    fn small_monte_carlo_agrees() {
        let c = Configuration { h_k: 0.1, h_l: 0.05, k: 3, l: 4, delta: 0.05, z: 0.8 };
        let mc = monte_carlo_moment(&c, 1 << 16, 100_000, 5).unwrap();
        let exact = c.moment().unwrap();
        assert!((mc - exact).abs() < 0.05, "{mc} vs {exact}");
    }
}
