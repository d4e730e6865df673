//! Finite-volume abstract-polymer machinery for the small spheres.
//!
//! A polymer is a label subset `V` of the small spheres with `|V| >= 2`; its
//! activity is the normalized connected-cluster integral in the presence of
//! the big-sphere configuration. Clouds are tuples of polymers with
//! positions, where a label appearing in two polymers carries two
//! independent coordinates. On top sit the Ursell functions, the exact
//! abstract-polymer partition function for tiny label counts, the truncated
//! cluster expansion of `log Z` with a rigorous geometric tail bound, and
//! the summability check of the expansion.
//!
//! This module is a verification harness: exhaustive polymer enumeration is
//! only feasible for a handful of labels, which is all the oracle tests need.

use crate::error::{Error, Result};
use crate::estimate::{sample_mean, McConfig};
use crate::geometry::{self, BoxMetric, PairKind, SphereSpecies};
use crate::graphs::{pair_index, Enumerator};
use crate::{Ensemble, ExclusionReading, ModelParams};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::OnceLock;

/// Largest label count for exhaustive polymer enumeration.
pub const MAX_LABELS: usize = 6;

/// Label subset of the small spheres with cardinality at least two.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Polymer {
    labels: BTreeSet<usize>,
    mask: u16,
}

impl Polymer {
    pub fn new(labels: impl IntoIterator<Item = usize>) -> Result<Self> {
        let labels: BTreeSet<usize> = labels.into_iter().collect();
        if labels.len() < 2 {
            return Err(Error::invalid("a polymer has at least two labels"));
        }
        if labels.iter().any(|&l| l >= 16) {
            return Err(Error::invalid("labels must be below 16"));
        }
        let mask = labels.iter().fold(0u16, |m, &l| m | (1 << l));
        Ok(Polymer { labels, mask })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().copied()
    }

    pub fn mask(&self) -> u16 {
        self.mask
    }

    pub fn intersects(&self, other: &Polymer) -> bool {
        self.mask & other.mask != 0
    }
}

fn connected_masks_cached(n: usize) -> &'static [u32] {
    static CACHE: OnceLock<Vec<Vec<u32>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        let e = Enumerator {
            n_max: MAX_LABELS,
            bipartite_max: MAX_LABELS,
        };
        (0..=MAX_LABELS)
            .map(|n| if n == 0 { vec![] } else { e.connected_masks(n).unwrap() })
            .collect()
    });
    &cache[n]
}

/// Ursell function of a polymer tuple: the signed connected-graph sum over
/// the intersection pattern, `sum_{g in C_n} prod_{ij in g} (-1[Vi cap Vj])`.
/// Returns 1 for a single polymer.
pub fn ursell(polymers: &[Polymer]) -> Result<f64> {
    let n = polymers.len();
    if n == 0 {
        return Err(Error::invalid("ursell needs at least one polymer"));
    }
    if n > MAX_LABELS {
        return Err(Error::limit(format!("ursell capped at {MAX_LABELS} polymers")));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let mut inter = 0u32;
    for j in 1..n {
        for i in 0..j {
            if polymers[i].intersects(&polymers[j]) {
                inter |= 1 << pair_index(i, j);
            }
        }
    }
    Ok(ursell_from_mask(n, inter))
}

/// Ursell value from an intersection-edge mask.
pub(crate) fn ursell_from_mask(n: usize, inter: u32) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let mut total = 0i64;
    for &g in connected_masks_cached(n) {
        if g & !inter == 0 {
            total += if g.count_ones().is_multiple_of(2) { 1 } else { -1 };
        }
    }
    total as f64
}

/// A cloud: an ordered tuple of polymers with per-(polymer, label)
/// coordinates. The same label appearing in two polymers carries two
/// independent coordinates, which is exactly how repeated polymers are
/// integrated.
#[derive(Debug, Clone)]
pub struct Cloud {
    groups: Vec<CloudGroup>,
}

#[derive(Debug, Clone)]
struct CloudGroup {
    labels: Vec<usize>,
    coords: Vec<Vec<f64>>,
}

impl Cloud {
    pub fn from_polymers(parts: Vec<(Polymer, Vec<Vec<f64>>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("a cloud holds at least one polymer"));
        }
        let mut groups = Vec::with_capacity(parts.len());
        for (p, coords) in parts {
            if coords.len() != p.len() {
                return Err(Error::invalid("one coordinate per polymer label"));
            }
            groups.push(CloudGroup {
                labels: p.labels().collect(),
                coords,
            });
        }
        Ok(Cloud { groups })
    }

    /// The augmented single-particle cloud consisting of one small sphere.
    pub fn single_particle(coord: Vec<f64>) -> Self {
        Cloud {
            groups: vec![CloudGroup {
                labels: vec![0],
                coords: vec![coord],
            }],
        }
    }

    /// `|Y|`: the number of distinct labels across the polymers.
    pub fn size(&self) -> usize {
        let mut labels = BTreeSet::new();
        for g in &self.groups {
            labels.extend(g.labels.iter().copied());
        }
        labels.len()
    }

    pub fn coords(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.groups.iter().flat_map(|g| g.coords.iter())
    }
}

/// Link between a big sphere at `p` and a cloud:
/// `prod over all (polymer, label) coordinates of (1 + f_ls) - 1`,
/// which is -1 if any coordinate overlaps `p` and 0 otherwise.
pub fn cloud_link(p: &[f64], cloud: &Cloud, metric: &BoxMetric, species: &SphereSpecies) -> f64 {
    for q in cloud.coords() {
        if geometry::mayer(PairKind::BigSmall, p, q, metric, species) == -1.0 {
            return -1.0;
        }
    }
    0.0
}

/// How a polymer activity integral is evaluated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum QuadratureSpec {
    /// Composite midpoint on a fixed grid (d = 1 only); the error is
    /// Richardson-estimated from the half-resolution grid and must stay
    /// below `tolerance`.
    Midpoint1d { cells: usize, tolerance: f64 },
    /// Plain Monte Carlo over the box.
    MonteCarlo { samples: u64, seed: u64 },
}

/// Activity of a polymer in the presence of the big spheres:
/// `(|Lambda| / |Lambda~(p)|)^{|V|} int sum_{g in C_|V|} prod f_ss
///  prod_k prod_j (1 + f_ls(p_j, q_k)) prod dq_k / |Lambda|`.
pub fn polymer_activity(
    v: &Polymer,
    big_centers: &[Vec<f64>],
    metric: &BoxMetric,
    species: &SphereSpecies,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let m = v.len();
    if m > 4 {
        return Err(Error::limit("activity integrals capped at |V| = 4"));
    }
    match *quad {
        QuadratureSpec::Midpoint1d { cells, tolerance } => {
            if metric.d != 1 {
                return Err(Error::invalid("midpoint quadrature requires d = 1"));
            }
            let centers: Vec<f64> = big_centers.iter().map(|p| p[0]).collect();
            let coarse = activity_integral_1d(m, &centers, metric, species, cells);
            let fine = activity_integral_1d(m, &centers, metric, species, 2 * cells);
            let err = (fine - coarse).abs();
            if err > tolerance {
                return Err(Error::PrecisionFailure(format!(
                    "activity quadrature error {err:.3e} above tolerance {tolerance:.3e}"
                )));
            }
            // The indicator integrand makes midpoint first-order at overlap
            // boundaries; the halving step cancels the linear bias.
            let extrapolated = 2.0 * fine - coarse;
            let ratio = metric.length / geometry::free_volume_exact_1d(&centers, metric, species)?;
            Ok(ratio.powi(m as i32) * extrapolated)
        }
        QuadratureSpec::MonteCarlo { samples, seed } => {
            let free = if metric.d == 1 {
                let centers: Vec<f64> = big_centers.iter().map(|p| p[0]).collect();
                geometry::free_volume_exact_1d(&centers, metric, species)?
            } else {
                geometry::free_volume(big_centers, metric, species, samples, seed ^ 0x5eed)?.value
            };
            let ratio = metric.length.powi(metric.d as i32) / free;
            let masks = connected_masks_cached(m);
            let excl_ss = species.excluded_distance(PairKind::SmallSmall);
            let excl_ls = species.excluded_distance(PairKind::BigSmall);
            let l = metric.length;
            let d = metric.d;
            let stats = sample_mean(&McConfig::new(samples, seed), |rng| {
                let mut q = [[0.0f64; 3]; 4];
                for coord in q.iter_mut().take(m) {
                    for c in coord.iter_mut().take(d) {
                        *c = (rng.gen::<f64>() - 0.5) * l;
                    }
                }
                for p in big_centers {
                    for coord in q.iter().take(m) {
                        if metric.distance_sq(p, &coord[..d]) < excl_ls * excl_ls {
                            return 0.0;
                        }
                    }
                }
                let mut overlap = 0u32;
                for j in 1..m {
                    for i in 0..j {
                        if metric.distance_sq(&q[i][..d], &q[j][..d]) < excl_ss * excl_ss {
                            overlap |= 1 << pair_index(i, j);
                        }
                    }
                }
                signed_subgraph_sum(masks, overlap)
            });
            Ok(ratio.powi(m as i32) * stats.mean())
        }
    }
}

/// `sum_{g in family, g subset of overlap} (-1)^{|E(g)|}`.
#[inline]
pub(crate) fn signed_subgraph_sum(masks: &[u32], overlap: u32) -> f64 {
    let mut total = 0i64;
    for &g in masks {
        if g & !overlap == 0 {
            total += if g.count_ones().is_multiple_of(2) { 1 } else { -1 };
        }
    }
    total as f64
}

fn activity_integral_1d(
    m: usize,
    big_centers: &[f64],
    metric: &BoxMetric,
    species: &SphereSpecies,
    cells: usize,
) -> f64 {
    let l = metric.length;
    let h = l / cells as f64;
    let excl_ls = species.excluded_distance(PairKind::BigSmall);
    let excl_ss = species.excluded_distance(PairKind::SmallSmall);
    // Availability of each grid midpoint with respect to the big spheres.
    let avail: Vec<bool> = (0..cells)
        .map(|c| {
            let x = -0.5 * l + (c as f64 + 0.5) * h;
            big_centers
                .iter()
                .all(|&p| metric.delta(x, p).abs() >= excl_ls)
        })
        .collect();
    // Signed subgraph sums indexed by the pairwise-overlap mask.
    let masks = connected_masks_cached(m);
    let table_size = 1usize << (m * (m - 1) / 2);
    let mut table = vec![0.0f64; table_size];
    for (mask, slot) in table.iter_mut().enumerate() {
        *slot = signed_subgraph_sum(masks, mask as u32);
    }
    let mut sum = 0.0f64;
    let mut idx = vec![0usize; m];
    let x = |c: usize| -0.5 * l + (c as f64 + 0.5) * h;
    loop {
        if idx.iter().all(|&c| avail[c]) {
            let mut overlap = 0u32;
            for j in 1..m {
                for i in 0..j {
                    if metric.delta(x(idx[i]), x(idx[j])).abs() < excl_ss {
                        overlap |= 1 << pair_index(i, j);
                    }
                }
            }
            sum += table[overlap as usize];
        }
        // Advance the mixed-radix counter.
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < cells {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == m {
                return sum * (h / l).powi(m as i32);
            }
        }
    }
}

/// Table of activities for every polymer over `[n_labels]`.
#[derive(Debug, Clone)]
pub struct ActivityTable {
    n_labels: usize,
    entries: Vec<(u16, f64)>,
}

impl ActivityTable {
    /// Build from a per-polymer evaluator over all subsets with `|V| >= 2`.
    pub fn from_fn(
        n_labels: usize,
        mut f: impl FnMut(&Polymer) -> Result<f64>,
    ) -> Result<Self> {
        if n_labels > MAX_LABELS {
            return Err(Error::limit(format!(
                "exhaustive polymer enumeration capped at {MAX_LABELS} labels"
            )));
        }
        let mut entries = Vec::new();
        for mask in 0u16..(1 << n_labels) {
            if mask.count_ones() >= 2 {
                let polymer = Polymer::new((0..n_labels).filter(|&l| mask >> l & 1 == 1))?;
                entries.push((mask, f(&polymer)?));
            }
        }
        Ok(ActivityTable { n_labels, entries })
    }

    /// Activities of all polymers of `[n_labels]` in the presence of the
    /// given big spheres.
    pub fn compute(
        n_labels: usize,
        big_centers: &[Vec<f64>],
        metric: &BoxMetric,
        species: &SphereSpecies,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        ActivityTable::from_fn(n_labels, |p| {
            polymer_activity(p, big_centers, metric, species, quad)
        })
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn entries(&self) -> &[(u16, f64)] {
        &self.entries
    }

    /// `sum_V |zeta(V)|`.
    fn total_abs(&self) -> f64 {
        self.entries.iter().map(|(_, z)| z.abs()).sum()
    }

    /// `max_V sum_{V' cap V != 0} |zeta(V')|`.
    fn max_neighbor_sum(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(m, _)| {
                self.entries
                    .iter()
                    .filter(|&&(m2, _)| m & m2 != 0)
                    .map(|(_, z)| z.abs())
                    .sum()
            })
            .fold(0.0, f64::max)
    }

    /// `max_i sum_{V owns i} |zeta(V)| e^{(b+c)|V|}`, the weighted pinned sum
    /// entering the summability check.
    fn pinned_weighted_sum(&self, weight: f64) -> f64 {
        (0..self.n_labels)
            .map(|i| {
                self.entries
                    .iter()
                    .filter(|&&(m, _)| m >> i & 1 == 1)
                    .map(|&(m, z)| z.abs() * (weight * m.count_ones() as f64).exp())
                    .sum()
            })
            .fold(0.0, f64::max)
    }
}

/// Weights of the summability conditions, nonnegative.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ConvergenceParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a < 0.0 || b < 0.0 || c < 0.0 {
            return Err(Error::invalid("convergence weights must be nonnegative"));
        }
        Ok(ConvergenceParams { a, b, c })
    }
}

/// Truncated cluster expansion of `log Z` with its tail bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSeries {
    pub value: f64,
    pub tail_bound: f64,
    pub order: usize,
    /// `e * max_V sum_{V' cap V} |zeta(V')|`; the geometric tail ratio,
    /// valid when below one.
    pub ratio: f64,
    /// Margin of the weighted summability check (positive means it holds).
    pub kp_margin: f64,
}

/// Truncated cluster expansion
/// `sum_{n <= order} (1/n!) sum_{(V_1..V_n)} phi^T(V_1..V_n) prod zeta(V_i)`
/// over ordered tuples with repetition.
///
/// The tail bound is elementary: `|phi^T|` is at most the number of spanning
/// trees of the intersection graph, so the order-n stratum is bounded by
/// `n^{n-2}/n! * S * D^{n-1} <= (S/D) (eD)^n / n^2` with
/// `S = sum |zeta|` and `D = max_V sum_{V' cap V} |zeta'|`, and the tail past
/// `order` sums geometrically when `eD < 1`.
pub fn cluster_log_z(
    table: &ActivityTable,
    weights: &ConvergenceParams,
    order: usize,
    allow_out_of_domain: bool,
) -> Result<ClusterSeries> {
    if order == 0 {
        return Err(Error::invalid("expansion order must be at least 1"));
    }
    let bc = weights.b + weights.c;
    let kp_margin = bc - table.pinned_weighted_sum(bc);
    let d = table.max_neighbor_sum();
    let ratio = std::f64::consts::E * d;
    if kp_margin < 0.0 && !allow_out_of_domain {
        return Err(Error::NotInDomain(format!(
            "weighted polymer sum exceeds b + c by {:.3e}",
            -kp_margin
        )));
    }
    let n_polymers = table.entries.len();
    if n_polymers > 0 && (n_polymers as f64).powi(order as i32) > 5e7 {
        return Err(Error::limit("tuple enumeration too large at this order"));
    }
    let mut value = 0.0;
    let mut tuple: Vec<usize> = Vec::with_capacity(order);
    let mut factorial = 1.0;
    for n in 1..=order {
        factorial *= n as f64;
        let mut stratum = 0.0;
        sum_tuples(table, n, &mut tuple, &mut stratum);
        value += stratum / factorial;
    }
    let s = table.total_abs();
    let tail_bound = if table.entries.is_empty() || s == 0.0 {
        0.0
    } else if ratio < 1.0 {
        (s / d) * ratio.powi(order as i32 + 1)
            / ((1.0 - ratio) * ((order + 1) * (order + 1)) as f64)
    } else {
        f64::INFINITY
    };
    Ok(ClusterSeries {
        value,
        tail_bound,
        order,
        ratio,
        kp_margin,
    })
}

fn sum_tuples(table: &ActivityTable, n: usize, tuple: &mut Vec<usize>, acc: &mut f64) {
    if tuple.len() == n {
        let mut inter = 0u32;
        let mut product = 1.0;
        for (j, &tj) in tuple.iter().enumerate() {
            product *= table.entries[tj].1;
            for (i, &ti) in tuple.iter().enumerate().take(j) {
                if table.entries[ti].0 & table.entries[tj].0 != 0 {
                    inter |= 1 << pair_index(i, j);
                }
            }
        }
        *acc += ursell_from_mask(n, inter) * product;
        return;
    }
    for i in 0..table.entries.len() {
        tuple.push(i);
        sum_tuples(table, n, tuple, acc);
        tuple.pop();
    }
}

/// Exact abstract polymer partition function
/// `Xi = sum over collections of pairwise-disjoint polymers of prod zeta`.
pub fn polymer_partition_function(table: &ActivityTable) -> f64 {
    let full = (1u32 << table.n_labels) - 1;
    let mut memo = vec![f64::NAN; (full + 1) as usize];
    xi_recursive(table, full, &mut memo)
}

fn xi_recursive(table: &ActivityTable, available: u32, memo: &mut [f64]) -> f64 {
    if available == 0 {
        return 1.0;
    }
    if !memo[available as usize].is_nan() {
        return memo[available as usize];
    }
    let lowest = available.trailing_zeros();
    let rest = available & !(1 << lowest);
    // Either the lowest label is in no polymer, or in exactly one.
    let mut xi = xi_recursive(table, rest, memo);
    for &(mask, z) in &table.entries {
        let mask = mask as u32;
        if mask >> lowest & 1 == 1 && mask & !available == 0 {
            xi += z * xi_recursive(table, available & !mask, memo);
        }
    }
    memo[available as usize] = xi;
    xi
}

/// Finite-volume coefficient `B_empty(k)` of the small-sphere expansion,
/// from the exact polymer partition functions on the sublabel sets:
/// `B(k) = (|Lambda|^k / k!) sum_{S subset [k+1]} (-1)^{k+1-|S|} ln Xi_S`,
/// where `Xi_S` uses only polymers inside `S` and the per-polymer activity
/// is `cluster_integral(|V|)`.
pub fn b_empty_coefficient(
    k: usize,
    volume: f64,
    cluster_integral: &dyn Fn(usize) -> f64,
) -> Result<f64> {
    let n = k + 1;
    if n > MAX_LABELS {
        return Err(Error::limit(format!(
            "coefficient extraction capped at k + 1 = {MAX_LABELS} labels"
        )));
    }
    let mut total = 0.0;
    for s in 0u16..(1 << n) {
        let size = s.count_ones() as usize;
        let table = ActivityTable {
            n_labels: n,
            entries: (0..(1u16 << n))
                .filter(|m| m.count_ones() >= 2 && m & !s == 0)
                .map(|m| (m, cluster_integral(m.count_ones() as usize)))
                .collect(),
        };
        let xi = polymer_partition_function(&table);
        if !xi.is_finite() || xi <= 0.0 {
            return Err(Error::NotInDomain(
                "polymer partition function not positive".into(),
            ));
        }
        let sign = if (n - size).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * xi.ln();
    }
    let mut k_fact = 1.0;
    for i in 2..=k {
        k_fact *= i as f64;
    }
    Ok(volume.powi(k as i32) / k_fact * total)
}

/// Report of the small-sphere summability condition
/// `2 N_r / (|Lambda| - N_R |B_{R+r}|) |B| e^{2(b+c)+1} < c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpReport {
    pub holds: bool,
    pub lhs: f64,
    /// `c - lhs`; positive when the condition holds.
    pub margin: f64,
    pub reading: ExclusionReading,
}

/// Evaluate the summability condition of the small-sphere expansion.
/// `reading` selects the excluded volume `|B_2R|` (as printed) or `|B_2r|`.
pub fn kp_check(
    params: &ModelParams,
    weights: &ConvergenceParams,
    reading: ExclusionReading,
) -> Result<KpReport> {
    let d = params.d;
    let excl = reading.volume(d, &params.species)?;
    let b_rr = geometry::ball_volume(d, params.species.big + params.species.small)?;
    let density = match params.ensemble {
        Ensemble::Finite {
            n_small,
            n_big,
            box_len,
        } => {
            let volume = box_len.powi(d as i32);
            let denom = volume - n_big as f64 * b_rr;
            if denom <= 0.0 {
                return Err(Error::invalid(
                    "big spheres leave no room: |Lambda| - N_R |B_{R+r}| <= 0",
                ));
            }
            n_small as f64 / denom
        }
        Ensemble::Limit { rho_small, rho_big } => {
            let denom = 1.0 - rho_big * b_rr;
            if denom <= 0.0 {
                return Err(Error::invalid("rho_R |B_{R+r}| must stay below one"));
            }
            rho_small / denom
        }
    };
    let lhs = 2.0 * density * excl * (2.0 * (weights.b + weights.c) + 1.0).exp();
    Ok(KpReport {
        holds: lhs < weights.c,
        lhs,
        margin: weights.c - lhs,
        reading,
    })
}
