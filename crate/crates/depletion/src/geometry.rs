//! Hard-core Mayer functions, d-dimensional ball volumes and the periodic box.
//!
//! The mixture has small spheres of radius `r` and big spheres of radius `R`
//! with pair exclusion distances `2r` (small-small), `2R` (big-big) and
//! `R + r` (big-small). All indicator conventions are strict: a pair overlaps
//! iff its minimum-image distance is strictly below the exclusion distance.

use crate::error::{Error, Result};
use crate::estimate::{sample_mean, CoefficientEstimate, McConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Periodic box `(-L/2, L/2]^d` with the minimum-image metric.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoxMetric {
    pub d: usize,
    pub length: f64,
    pub periodic: bool,
}

impl BoxMetric {
    pub fn new(d: usize, length: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::invalid("box length must be positive"));
        }
        Ok(BoxMetric {
            d,
            length,
            periodic: true,
        })
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.d as i32)
    }

    /// Minimum-image component difference, in `(-L/2, L/2]`.
    pub fn delta(&self, a: f64, b: f64) -> f64 {
        if !self.periodic {
            return a - b;
        }
        let mut d = (a - b) % self.length;
        if d > 0.5 * self.length {
            d -= self.length;
        } else if d <= -0.5 * self.length {
            d += self.length;
        }
        d
    }

    pub fn distance_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        debug_assert_eq!(y.len(), self.d);
        (0..self.d)
            .map(|i| {
                let d = self.delta(x[i], y[i]);
                d * d
            })
            .sum()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.distance_sq(x, y).sqrt()
    }
}

/// Radii of the two sphere species, `0 < r < R`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SphereSpecies {
    /// Small-sphere radius r.
    pub small: f64,
    /// Big-sphere radius R.
    pub big: f64,
}

impl SphereSpecies {
    pub fn new(small: f64, big: f64) -> Result<Self> {
        if !(small.is_finite() && big.is_finite()) || small <= 0.0 || big <= 0.0 {
            return Err(Error::invalid("radii must be positive"));
        }
        if small >= big {
            return Err(Error::invalid("small radius must be below the big radius"));
        }
        Ok(SphereSpecies { small, big })
    }

    /// Exclusion distance for a pair kind: 2R, 2r or R + r.
    pub fn excluded_distance(&self, kind: PairKind) -> f64 {
        match kind {
            PairKind::BigBig => 2.0 * self.big,
            PairKind::SmallSmall => 2.0 * self.small,
            PairKind::BigSmall => self.big + self.small,
        }
    }
}

/// The three hard-core pair channels (`ll`, `ss`, `ls`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    BigBig,
    SmallSmall,
    BigSmall,
}

/// Volume of the d-ball of given radius.
///
/// Evaluates `pi^{d/2} radius^d / Gamma(d/2 + 1)` through the dimensional
/// recursion `v_d = v_{d-2} * 2 pi radius^2 / d`.
pub fn ball_volume(d: usize, radius: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("ball dimension must be at least 1"));
    }
    if radius < 0.0 {
        return Err(Error::invalid("ball radius must be nonnegative"));
    }
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 * radius };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI * radius * radius / k as f64;
        k += 2;
    }
    Ok(v)
}

/// Volume of the spherical shell `B_{R+r} \ B_{R-r}`.
pub fn shell_volume(d: usize, big: f64, small: f64) -> Result<f64> {
    if !small.is_finite() || small <= 0.0 {
        return Err(Error::invalid("shell requires a positive small radius"));
    }
    if small > big {
        return Err(Error::invalid("shell requires r <= R"));
    }
    Ok(ball_volume(d, big + small)? - ball_volume(d, big - small)?)
}

/// Hard-core Mayer function: -1 on overlap, 0 otherwise.
pub fn mayer(
    kind: PairKind,
    x: &[f64],
    y: &[f64],
    metric: &BoxMetric,
    species: &SphereSpecies,
) -> f64 {
    let excl = species.excluded_distance(kind);
    if metric.distance_sq(x, y) < excl * excl {
        -1.0
    } else {
        0.0
    }
}

/// Checks that big centers are pairwise at distance >= 2R (hard-core admissible).
pub fn check_admissible(
    big_centers: &[Vec<f64>],
    metric: &BoxMetric,
    species: &SphereSpecies,
) -> Result<()> {
    let excl = species.excluded_distance(PairKind::BigBig);
    for (i, p) in big_centers.iter().enumerate() {
        if p.len() != metric.d {
            return Err(Error::invalid("position dimension mismatch"));
        }
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("positions must be finite"));
        }
        for q in big_centers.iter().skip(i + 1) {
            if metric.distance_sq(p, q) < excl * excl {
                return Err(Error::InadmissibleConfiguration(format!(
                    "big spheres closer than 2R = {excl}"
                )));
            }
        }
    }
    Ok(())
}

/// Monte Carlo estimate of the available volume of the small spheres,
/// `|Lambda~(p)| = int prod_j (1 + f_ls(p_j, q)) dq`.
///
/// Deterministic for a fixed `(seed, shard count)`. An empty configuration
/// returns `|Lambda|` exactly with zero variance.
pub fn free_volume(
    big_centers: &[Vec<f64>],
    metric: &BoxMetric,
    species: &SphereSpecies,
    samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    check_admissible(big_centers, metric, species)?;
    let excl = species.excluded_distance(PairKind::BigSmall);
    let excl_sq = excl * excl;
    let l = metric.length;
    let stats = sample_mean(&McConfig::new(samples, seed), |rng| {
        let mut q = [0.0f64; 3];
        for c in q.iter_mut().take(metric.d) {
            *c = (rng.gen::<f64>() - 0.5) * l;
        }
        let free = big_centers
            .iter()
            .all(|p| metric.distance_sq(p, &q[..metric.d]) >= excl_sq);
        if free {
            1.0
        } else {
            0.0
        }
    });
    Ok(stats.estimate(metric.volume()))
}

/// Exact available volume in d = 1: the circle minus the union of the
/// excluded arcs `(p_j - (R+r), p_j + (R+r))`.
pub fn free_volume_exact_1d(
    big_centers: &[f64],
    metric: &BoxMetric,
    species: &SphereSpecies,
) -> Result<f64> {
    if metric.d != 1 {
        return Err(Error::invalid("exact free volume requires d = 1"));
    }
    if !big_centers.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid("positions must be finite"));
    }
    let half = species.excluded_distance(PairKind::BigSmall);
    let arcs: Vec<(f64, f64)> = big_centers.iter().map(|&p| (p - half, p + half)).collect();
    Ok(metric.length - circle_union_measure(&arcs, metric.length))
}

/// Measure of a union of arcs on a circle of circumference `l`.
pub(crate) fn circle_union_measure(arcs: &[(f64, f64)], l: f64) -> f64 {
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in arcs {
        if b - a >= l {
            return l;
        }
        let start = a.rem_euclid(l);
        let end = start + (b - a);
        if end <= l {
            segments.push((start, end));
        } else {
            segments.push((start, l));
            segments.push((0.0, end - l));
        }
    }
    segments.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in segments {
        match current {
            None => current = Some((a, b)),
            Some((ca, cb)) => {
                if a <= cb {
                    current = Some((ca, cb.max(b)));
                } else {
                    total += cb - ca;
                    current = Some((a, b));
                }
            }
        }
    }
    if let Some((ca, cb)) = current {
        total += cb - ca;
    }
    total
}

/// Complement of the excluded arcs on the circle: the free segments for
/// small-sphere centers, as `(start, length)` pairs. Returns `None` when the
/// whole circle is free (no big spheres).
pub(crate) fn free_arcs_1d(
    big_centers: &[f64],
    l: f64,
    half_width: f64,
) -> Option<Vec<(f64, f64)>> {
    if big_centers.is_empty() {
        return None;
    }
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for &p in big_centers {
        let a = p - half_width;
        let width = 2.0 * half_width;
        if width >= l {
            return Some(Vec::new());
        }
        let start = a.rem_euclid(l);
        let end = start + width;
        if end <= l {
            segments.push((start, end));
        } else {
            segments.push((start, l));
            segments.push((0.0, end - l));
        }
    }
    // Segments are pre-split at the wrap point, so they all lie in [0, l];
    // merge overlaps, then read the free gaps off, including the one that
    // wraps from the last segment back to the first.
    segments.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in segments {
        match merged.last_mut() {
            Some((_, cb)) if a <= *cb => *cb = cb.max(b),
            _ => merged.push((a, b)),
        }
    }
    let mut free = Vec::new();
    for i in 0..merged.len() {
        let gap_start = merged[i].1;
        let next_start = if i + 1 < merged.len() {
            merged[i + 1].0
        } else {
            merged[0].0 + l
        };
        let gap = next_start - gap_start;
        if gap > 1e-14 {
            free.push((gap_start.rem_euclid(l), gap));
        }
    }
    Some(free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn ball_volume_known_values() {
        assert!((ball_volume(1, 1.5).unwrap() - 3.0).abs() < 1e-14);
        assert!((ball_volume(3, 1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_volume(2, 2.0).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ball_volume_rejects_bad_input() {
        assert!(ball_volume(0, 1.0).is_err());
        assert!(ball_volume(3, -0.1).is_err());
    }

    #[test]
    fn shell_volume_cases() {
        let v = shell_volume(3, 1.0, 0.1).unwrap();
        let expected = 4.0 * PI / 3.0 * (1.1f64.powi(3) - 0.9f64.powi(3));
        assert!((v - expected).abs() < 1e-12);
        assert!((shell_volume(1, 1.0, 0.5).unwrap() - 2.0).abs() < 1e-14);
        // Inner ball degenerates at r = R.
        let v = shell_volume(2, 1.0, 1.0).unwrap();
        assert!((v - ball_volume(2, 2.0).unwrap()).abs() < 1e-12);
        assert!(shell_volume(2, 1.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn ball_volume_monotone_and_homogeneous(d in 1usize..5, r in 0.1f64..3.0, s in 1.01f64..2.0) {
            let v = ball_volume(d, r).unwrap();
            let vs = ball_volume(d, r * s).unwrap();
            prop_assert!(vs > v);
            prop_assert!((vs / v - s.powi(d as i32)).abs() < 1e-9 * s.powi(d as i32));
        }
    }

    fn setup() -> (BoxMetric, SphereSpecies) {
        (
            BoxMetric::new(3, 10.0).unwrap(),
            SphereSpecies::new(0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn mayer_overlap_conventions() {
        let (metric, species) = setup();
        let p = vec![0.0, 0.0, 0.0];
        assert_eq!(mayer(PairKind::BigBig, &p, &p, &metric, &species), -1.0);
        // Boundary is open: exactly 2r apart does not overlap.
        let q = vec![1.0, 0.0, 0.0];
        assert_eq!(mayer(PairKind::SmallSmall, &p, &q, &metric, &species), 0.0);
        let q = vec![1.25, 0.0, 0.0];
        assert_eq!(mayer(PairKind::BigSmall, &p, &q, &metric, &species), -1.0);
    }

    proptest! {
        #[test]
        fn mayer_is_symmetric_indicator(
            x in prop::array::uniform3(-5.0f64..5.0),
            y in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let (metric, species) = setup();
            for kind in [PairKind::BigBig, PairKind::SmallSmall, PairKind::BigSmall] {
                let f = mayer(kind, &x, &y, &metric, &species);
                prop_assert!(f == 0.0 || f == -1.0);
                prop_assert_eq!(f, mayer(kind, &y, &x, &metric, &species));
            }
        }
    }

    #[test]
    fn min_image_within_half_box() {
        let metric = BoxMetric::new(1, 10.0).unwrap();
        // The wrapped displacement is the short way around, signed.
        assert!((metric.delta(4.9, -4.9) + 0.2).abs() < 1e-12);
        assert!((metric.distance(&[4.9], &[-4.9]) - 0.2).abs() < 1e-12);
        // Component stays in (-L/2, L/2].
        assert!((metric.delta(2.5, -2.5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn free_volume_empty_is_exact() {
        let (metric, species) = setup();
        let est = free_volume(&[], &metric, &species, 100, 7).unwrap();
        assert_eq!(est.value, 1000.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn free_volume_single_ball_matches_subtraction() {
        let (metric, species) = setup();
        let centers = vec![vec![0.0, 0.0, 0.0]];
        let est = free_volume(&centers, &metric, &species, 400_000, 11).unwrap();
        let expected = metric.volume() - ball_volume(3, 1.5).unwrap();
        assert!(
            (est.value - expected).abs() <= 3.0 * est.std_error,
            "estimate {} vs {expected} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn free_volume_two_sided_bound() {
        let (metric, species) = setup();
        let centers = vec![vec![-2.0, 0.0, 0.0], vec![2.0, 1.0, 0.0]];
        let est = free_volume(&centers, &metric, &species, 400_000, 13).unwrap();
        let lower = metric.volume() - 2.0 * ball_volume(3, 1.5).unwrap();
        let upper = metric.volume() - 2.0 * ball_volume(3, 1.0).unwrap();
        assert!(est.value >= lower - 3.0 * est.std_error);
        assert!(est.value <= upper + 3.0 * est.std_error);
    }

    #[test]
    fn free_volume_rejects_overlapping_bigs() {
        let (metric, species) = setup();
        let centers = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        assert!(matches!(
            free_volume(&centers, &metric, &species, 10, 1),
            Err(Error::InadmissibleConfiguration(_))
        ));
    }

    #[test]
    fn free_volume_sharding_invariance() {
        let (metric, species) = setup();
        let centers = vec![vec![0.0, 0.0, 0.0]];
        let a = free_volume(&centers, &metric, &species, 10_000, 3).unwrap();
        let b = free_volume(&centers, &metric, &species, 10_000, 3).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn exact_1d_free_volume() {
        let metric = BoxMetric::new(1, 20.0).unwrap();
        let species = SphereSpecies::new(0.25, 1.0).unwrap();
        // One big: removes exactly 2(R+r).
        let v = free_volume_exact_1d(&[0.0], &metric, &species).unwrap();
        assert!((v - (20.0 - 2.5)).abs() < 1e-12);
        // Two overlapping arcs merge; union smaller than the sum.
        let v2 = free_volume_exact_1d(&[0.0, 2.0], &metric, &species).unwrap();
        assert!((v2 - (20.0 - (2.0 + 2.5))).abs() < 1e-12);
        // Wrap-around arc.
        let v3 = free_volume_exact_1d(&[9.9], &metric, &species).unwrap();
        assert!((v3 - 17.5).abs() < 1e-12);
    }

    #[test]
    fn free_arcs_partition_the_circle() {
        let metric = BoxMetric::new(1, 20.0).unwrap();
        let species = SphereSpecies::new(0.25, 1.0).unwrap();
        for centers in [vec![0.0], vec![-6.0, 0.0, 6.0], vec![9.0, -9.0]] {
            let arcs = free_arcs_1d(&centers, metric.length, 1.25).unwrap();
            let total: f64 = arcs.iter().map(|&(_, len)| len).sum();
            let exact = free_volume_exact_1d(&centers, &metric, &species).unwrap();
            assert!(
                (total - exact).abs() < 1e-10,
                "arcs {arcs:?} total {total} vs {exact}"
            );
        }
    }
}
