//! Monte Carlo and exact evaluation of the thermodynamic-limit cluster
//! coefficients: the irreducible coefficients `beta_n`, the adjustment
//! coefficients `A_inf(k; rho)`, the one-big coefficients `B1_inf(s)`, the
//! cloud factors `C(p_J; rho_r)` and the big-sphere coefficients
//! `B*(n; rho_r)`.
//!
//! Every stochastic integral samples free coordinates uniformly from the
//! smallest cube guaranteed to contain the support of the integrand bond
//! chains and rescales by the cube volume. The integrand iterates
//! pre-enumerated labeled graph lists in edge-mask form, short-circuiting on
//! zero bonds. Density dependence is kept analytic wherever possible: the
//! `C` and `B*` evaluators expose density-independent kernels so that grid
//! sweeps over `(rho_r, rho_R)` share one set of sampled integrals.

use crate::error::{Error, Result};
use crate::estimate::{sample_mean, CoefficientEstimate, McConfig, Truncation};
use crate::geometry::ball_volume;
use crate::graphs::{pair_index, Enumerator};
use crate::polymers::{signed_subgraph_sum, ursell, Polymer};
use crate::BoundSide;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[inline]
fn flat_dist_sq(x: &[f64], y: &[f64], d: usize) -> f64 {
    (0..d).map(|i| (x[i] - y[i]) * (x[i] - y[i])).sum()
}

#[inline]
fn fill_cube(rng: &mut rand_chacha::ChaCha8Rng, coord: &mut [f64], d: usize, center: &[f64], half: f64) {
    for i in 0..d {
        coord[i] = center[i] + (rng.gen::<f64>() - 0.5) * 2.0 * half;
    }
}

/// Exact irreducible coefficient for hard rods: `-(n+1) a^n / n`.
///
/// Inverts the Tonks equation of state `beta p = rho / (1 - a rho)` through
/// the irreducible-coefficient relation, providing the d = 1 oracle.
pub fn beta_n_exact_1d(n: usize, a: f64) -> f64 {
    let n_f = n as f64;
    -(n_f + 1.0) / n_f * a.powi(n as i32)
}

/// Monte Carlo estimate of the irreducible coefficient
/// `beta_n = (1/n!) sum_{g in B_{n+1}} int prod f_ss dq`, with `q_{n+1} = 0`
/// and the free coordinates sampled from `[-2rn, 2rn]^d`.
pub fn beta_n(n: usize, d: usize, r: f64, samples: u64, seed: u64) -> Result<CoefficientEstimate> {
    if n == 0 || n > 4 {
        return Err(Error::limit("beta_n supported for 1 <= n <= 4"));
    }
    if d == 0 || d > 3 {
        return Err(Error::invalid("dimension must be 1, 2 or 3"));
    }
    let masks = Enumerator::default().two_connected_masks(n + 1)?;
    let a = 2.0 * r;
    let half = a * n as f64;
    let a_sq = a * a;
    let origin = [0.0f64; 3];
    let stats = sample_mean(&McConfig::new(samples, seed), |rng| {
        let mut q = [[0.0f64; 3]; 5];
        for coord in q.iter_mut().take(n) {
            fill_cube(rng, coord, d, &origin, half);
        }
        // q[n] stays at the origin.
        let mut overlap = 0u32;
        for j in 1..=n {
            for i in 0..j {
                if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                    overlap |= 1 << pair_index(i, j);
                }
            }
        }
        signed_subgraph_sum(&masks, overlap)
    });
    let volume = (2.0 * half).powi(d as i32).powi(n as i32);
    Ok(stats
        .estimate(volume / factorial(n))
        .with_truncation(Truncation::new().with("n", n as i64).with("d", d as i64)))
}

/// Pinned connected-cluster integral
/// `I(m) = int sum_{g in C_m} prod f_ss dq_1..dq_{m-1}` with `q_m = 0`.
pub fn connected_integral(
    m: usize,
    d: usize,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    if !(2..=6).contains(&m) {
        return Err(Error::limit("connected integrals supported for 2 <= m <= 6"));
    }
    let masks = Enumerator::default().connected_masks(m)?;
    let a = 2.0 * r;
    let free = m - 1;
    let half = a * free as f64;
    let a_sq = a * a;
    let origin = [0.0f64; 3];
    let stats = sample_mean(&McConfig::new(samples, seed), |rng| {
        let mut q = [[0.0f64; 3]; 6];
        for coord in q.iter_mut().take(free) {
            fill_cube(rng, coord, d, &origin, half);
        }
        let mut overlap = 0u32;
        for j in 1..m {
            for i in 0..j {
                if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                    overlap |= 1 << pair_index(i, j);
                }
            }
        }
        signed_subgraph_sum(&masks, overlap)
    });
    let volume = (2.0 * half).powi(d as i32).powi(free as i32);
    Ok(stats
        .estimate(volume)
        .with_truncation(Truncation::new().with("m", m as i64).with("d", d as i64)))
}

/// One collection of the starred cover sum together with its Ursell weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverCollection {
    pub polymers: Vec<BTreeSet<usize>>,
    pub ursell: f64,
}

/// The starred cover sum over `[k+1]`: all unordered collections of
/// distinct polymers (subsets with at least two labels) whose union is
/// `[k+1]` and whose sizes satisfy the tree-like overlap count
/// `|union| = sum (|V_i| - 1) + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverSum {
    pub k: usize,
    pub collections: Vec<CoverCollection>,
}

/// Enumerate the starred cover sum for `[k+1]`.
pub fn cover_sum(k: usize) -> Result<CoverSum> {
    if k == 0 || k > 5 {
        return Err(Error::limit("cover sums supported for 1 <= k <= 5"));
    }
    let n = k + 1;
    let full: u16 = (1 << n) - 1;
    let subsets: Vec<u16> = (0..=full).filter(|m| m.count_ones() >= 2).collect();
    let mut collections = Vec::new();
    let mut chosen: Vec<u16> = Vec::new();
    enumerate_covers(&subsets, 0, full, k, 0, &mut chosen, &mut collections)?;
    Ok(CoverSum { k, collections })
}

fn enumerate_covers(
    subsets: &[u16],
    start: usize,
    full: u16,
    k: usize,
    excess: usize,
    chosen: &mut Vec<u16>,
    out: &mut Vec<CoverCollection>,
) -> Result<()> {
    let union = chosen.iter().fold(0u16, |u, &m| u | m);
    if excess == k {
        if union == full {
            let polymers: Vec<Polymer> = chosen
                .iter()
                .map(|&m| Polymer::new((0..16).filter(|&b| m >> b & 1 == 1)))
                .collect::<Result<_>>()?;
            let phi = ursell(&polymers)?;
            out.push(CoverCollection {
                polymers: chosen
                    .iter()
                    .map(|&m| (0..16).filter(|&b| m >> b & 1 == 1).collect())
                    .collect(),
                ursell: phi,
            });
        }
        return Ok(());
    }
    for (i, &s) in subsets.iter().enumerate().skip(start) {
        let add = s.count_ones() as usize - 1;
        if excess + add <= k {
            chosen.push(s);
            enumerate_covers(subsets, i + 1, full, k, excess + add, chosen, out)?;
            chosen.pop();
        }
    }
    Ok(())
}

/// Which reading of the adjustment coefficient to evaluate.
///
/// As printed, the connected-graph integral factor and the starred cover
/// sum multiply independently. The coupled variant keeps the per-polymer
/// cluster integrals inside the cover sum, the form the finite-volume
/// power counting actually produces; it differs from the printed one from
/// `k = 2` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AInfVariant {
    #[default]
    Printed,
    Coupled,
}

/// Density-independent pieces of the adjustment coefficients.
#[derive(Debug, Clone)]
pub struct AKernel {
    pub variant: AInfVariant,
    pub k_max: usize,
    /// `(1/k!) sum_{g in C_{k+1}} int prod f_ss`, indexed by `k - 1`.
    graph: Vec<CoefficientEstimate>,
    /// Pinned connected integrals per polymer size (coupled variant).
    integrals: Vec<CoefficientEstimate>,
    covers: Vec<CoverSum>,
}

/// Sample the density-independent kernels of `A_inf(k; .)` for `k <= k_max`.
pub fn a_kernel(
    k_max: usize,
    d: usize,
    r: f64,
    variant: AInfVariant,
    samples: u64,
    seed: u64,
) -> Result<AKernel> {
    if k_max == 0 || k_max > 4 {
        return Err(Error::limit("A_inf supported for 1 <= k <= 4"));
    }
    let mc = McConfig::new(samples, seed);
    let mut graph = Vec::new();
    let mut covers = Vec::new();
    for k in 1..=k_max {
        let sub = mc.split(k as u64);
        graph.push(connected_integral(k + 1, d, r, sub.samples, sub.seed)?.scaled(1.0 / factorial(k)));
        covers.push(cover_sum(k)?);
    }
    let mut integrals = Vec::new();
    if variant == AInfVariant::Coupled {
        for m in 2..=k_max + 1 {
            let sub = mc.split(100 + m as u64);
            integrals.push(connected_integral(m, d, r, sub.samples, sub.seed)?);
        }
    }
    Ok(AKernel {
        variant,
        k_max,
        graph,
        integrals,
        covers,
    })
}

/// Evaluate `A_inf(k; rho)` from sampled kernels.
///
/// Printed form: `(1/k!) [sum_{g in C_{k+1}} int prod f_ss] x
/// sum* phi^T [(1/(1-rho))^{k+n} - 1]`, `n` the polymer count of each
/// qualifying collection. The coupled variant keeps the per-polymer cluster
/// integrals inside the cover sum. Zero for `rho = 0`.
pub fn a_from_kernel(kernel: &AKernel, k: usize, rho: f64) -> Result<CoefficientEstimate> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("A_inf requires 0 <= rho < 1"));
    }
    if k == 0 || k > kernel.k_max {
        return Err(Error::limit("k outside the sampled kernel range"));
    }
    let covers = &kernel.covers[k - 1];
    let truncation = Truncation::new().with("k", k as i64).with(
        "variant",
        match kernel.variant {
            AInfVariant::Printed => 0,
            AInfVariant::Coupled => 1,
        },
    );
    let bracket = |n_polymers: usize| (1.0 / (1.0 - rho)).powi((k + n_polymers) as i32) - 1.0;
    match kernel.variant {
        AInfVariant::Printed => {
            let cover_factor: f64 = covers
                .collections
                .iter()
                .map(|c| c.ursell * bracket(c.polymers.len()))
                .sum();
            Ok(kernel.graph[k - 1]
                .scaled(cover_factor)
                .with_truncation(truncation))
        }
        AInfVariant::Coupled => {
            let mut value = 0.0;
            let mut var = 0.0;
            for c in &covers.collections {
                let weight = c.ursell * bracket(c.polymers.len()) / factorial(k);
                let parts: Vec<&CoefficientEstimate> = c
                    .polymers
                    .iter()
                    .map(|v| &kernel.integrals[v.len() - 2])
                    .collect();
                let product: f64 = parts.iter().map(|e| e.value).product();
                value += weight * product;
                // First-order error propagation through the product.
                let mut term_var = 0.0;
                for (i, e) in parts.iter().enumerate() {
                    let others: f64 = parts
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, o)| o.value)
                        .product();
                    term_var += (e.std_error * others).powi(2);
                }
                var += weight * weight * term_var;
            }
            Ok(CoefficientEstimate {
                value,
                std_error: var.sqrt(),
                samples: kernel.graph[k - 1].samples,
                truncation,
            })
        }
    }
}

/// Adjustment coefficient `A_inf(k; rho)`; see [`a_from_kernel`].
pub fn a_inf(
    k: usize,
    rho: f64,
    d: usize,
    r: f64,
    samples: u64,
    seed: u64,
    variant: AInfVariant,
) -> Result<CoefficientEstimate> {
    if k == 0 || k > 4 {
        return Err(Error::limit("A_inf supported for 1 <= k <= 4"));
    }
    let kernel = a_kernel(k, d, r, variant, samples, seed)?;
    a_from_kernel(&kernel, k, rho)
}

/// Density-independent brackets of the one-big coefficients:
/// `beta_s |B_{R+r}| + (1/s!) T_s` per order `s`.
#[derive(Debug, Clone)]
pub struct B1Kernel {
    pub s_max: usize,
    brackets: Vec<CoefficientEstimate>,
    b_rr: f64,
}

/// Sample the one-big brackets for `1 <= s <= s_max`.
pub fn b1_kernel(
    s_max: usize,
    d: usize,
    r: f64,
    big_r: f64,
    samples: u64,
    seed: u64,
) -> Result<B1Kernel> {
    if s_max > 3 {
        return Err(Error::limit("B1_inf supported for s <= 3"));
    }
    let b_rr = ball_volume(d, big_r + r)?;
    let mc = McConfig::new(samples, seed);
    let mut brackets = Vec::new();
    for s in 1..=s_max {
        let beta = beta_n(s, d, r, mc.samples, mc.split(2 * s as u64).seed)?;
        let graph_term = b1_graph_sum(s, d, r, big_r, &mc.split(2 * s as u64 + 1))?;
        brackets.push(beta.scaled(b_rr).add(&graph_term.scaled(1.0 / factorial(s))));
    }
    Ok(B1Kernel {
        s_max,
        brackets,
        b_rr,
    })
}

/// Evaluate `B1_inf(s)` from a sampled kernel by attaching the prefactor
/// `(1 - rho_R |B|)^{-(s+1)}` for the requested bound side.
pub fn b1_from_kernel(
    kernel: &B1Kernel,
    s: usize,
    d: usize,
    r: f64,
    big_r: f64,
    rho_big: f64,
    side: BoundSide,
) -> Result<CoefficientEstimate> {
    let prefactor = b1_prefactor(s, d, big_r, r, rho_big, side)?;
    let truncation = Truncation::new().with("s", s as i64).with(
        "side",
        match side {
            BoundSide::Upper => 0,
            BoundSide::Lower => 1,
        },
    );
    if s == 0 {
        return Ok(CoefficientEstimate::exact(-kernel.b_rr)
            .scaled(prefactor)
            .with_truncation(truncation));
    }
    if s > kernel.s_max {
        return Err(Error::limit("s outside the sampled kernel range"));
    }
    Ok(kernel.brackets[s - 1].scaled(prefactor).with_truncation(truncation))
}

/// One-big coefficient
/// `B1_inf(s) = (1 - rho_R |B|)^{-(s+1)} [beta_s |B_{R+r}| + (1/s!) T_s]`,
/// where `T_s` sums the two-species two-connected graphs with one big
/// vertex pinned at the origin and `s + 1` small vertices, and `|B|` is
/// `|B_{R+r}|` for the upper bound and `|B_R|` for the lower one.
///
/// `s = 0` is the single-particle cloud term `-(1 - rho_R |B|)^{-1} |B_{R+r}|`.
#[allow(clippy::too_many_arguments)]
pub fn b1_inf(
    s: usize,
    d: usize,
    r: f64,
    big_r: f64,
    rho_big: f64,
    samples: u64,
    seed: u64,
    side: BoundSide,
) -> Result<CoefficientEstimate> {
    if s > 3 {
        return Err(Error::limit("B1_inf supported for s <= 3"));
    }
    let kernel = b1_kernel(s, d, r, big_r, samples, seed)?;
    b1_from_kernel(&kernel, s, d, r, big_r, rho_big, side)
}

fn b1_prefactor(
    s: usize,
    d: usize,
    big_r: f64,
    r: f64,
    rho_big: f64,
    side: BoundSide,
) -> Result<f64> {
    let ball = match side {
        BoundSide::Upper => ball_volume(d, big_r + r)?,
        BoundSide::Lower => ball_volume(d, big_r)?,
    };
    let base = 1.0 - rho_big * ball;
    if base <= 0.0 {
        return Err(Error::invalid(
            "prefactor base 1 - rho_R |B| must be positive",
        ));
    }
    Ok(base.powi(-(s as i32 + 1)))
}

/// `T_s = sum_{b in B_{1,s+1}} int prod (ss or ls bonds) dq_1..dq_{s+1}`,
/// big vertex pinned at the origin.
fn b1_graph_sum(s: usize, d: usize, r: f64, big_r: f64, mc: &McConfig) -> Result<CoefficientEstimate> {
    // Vertex 0 is the big sphere; vertices 1..=s+1 are small.
    let masks = Enumerator::default().two_connected_masks(s + 2)?;
    let m = s + 1;
    let a = 2.0 * r;
    let ls = big_r + r;
    let half = ls + a * s as f64;
    let a_sq = a * a;
    let ls_sq = ls * ls;
    let origin = [0.0f64; 3];
    let stats = sample_mean(mc, |rng| {
        let mut q = [[0.0f64; 3]; 5];
        for coord in q.iter_mut().take(m) {
            fill_cube(rng, coord, d, &origin, half);
        }
        let mut overlap = 0u32;
        for (v, coord) in q.iter().enumerate().take(m) {
            // ls bond to the pinned big vertex 0; graph vertex v + 1.
            if flat_dist_sq(coord, &origin, d) < ls_sq {
                overlap |= 1 << pair_index(0, v + 1);
            }
        }
        for j in 1..m {
            for i in 0..j {
                if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                    overlap |= 1 << pair_index(i + 1, j + 1);
                }
            }
        }
        signed_subgraph_sum(&masks, overlap)
    });
    let volume = (2.0 * half).powi(d as i32).powi(m as i32);
    Ok(stats
        .estimate(volume)
        .with_truncation(Truncation::new().with("s", s as i64)))
}

/// One `(l, k)` term of the one-big series, evaluated through the
/// two-species two-connected route: `l = 1` gives `-beta_k |B_{R+r}|`
/// (with `beta_0 = 1`), `l >= 2` gives
/// `(1/(l+k)!) sum over B_{1,l+k} with big degree l`.
#[allow(clippy::too_many_arguments)]
pub fn b1_route_term(
    l: usize,
    k: usize,
    d: usize,
    r: f64,
    big_r: f64,
    samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    if l == 0 {
        return Err(Error::invalid("white multiplicity l starts at 1"));
    }
    if l + k > 5 {
        return Err(Error::limit("B1 route terms supported for l + k <= 5"));
    }
    let truncation = Truncation::new().with("l", l as i64).with("k", k as i64);
    let b_rr = ball_volume(d, big_r + r)?;
    if l == 1 {
        let beta = if k == 0 {
            CoefficientEstimate::exact(1.0)
        } else {
            beta_n(k, d, r, samples, seed)?
        };
        return Ok(beta.scaled(-b_rr).with_truncation(truncation));
    }
    // All two-connected graphs on {big} + [l + k] whose big vertex has
    // degree exactly l.
    let n_vertices = l + k + 1;
    let masks: Vec<u32> = Enumerator::default()
        .two_connected_masks(n_vertices)?
        .into_iter()
        .filter(|&mask| {
            (1..n_vertices)
                .filter(|&v| mask >> pair_index(0, v) & 1 == 1)
                .count()
                == l
        })
        .collect();
    let m = l + k;
    let a = 2.0 * r;
    let ls = big_r + r;
    let half = ls + a * (m - 1) as f64;
    let a_sq = a * a;
    let ls_sq = ls * ls;
    let origin = [0.0f64; 3];
    let stats = sample_mean(&McConfig::new(samples, seed), |rng| {
        let mut q = [[0.0f64; 3]; 6];
        for coord in q.iter_mut().take(m) {
            fill_cube(rng, coord, d, &origin, half);
        }
        let mut overlap = 0u32;
        for (v, coord) in q.iter().enumerate().take(m) {
            if flat_dist_sq(coord, &origin, d) < ls_sq {
                overlap |= 1 << pair_index(0, v + 1);
            }
        }
        for j in 1..m {
            for i in 0..j {
                if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                    overlap |= 1 << pair_index(i + 1, j + 1);
                }
            }
        }
        signed_subgraph_sum(&masks, overlap)
    });
    let volume = (2.0 * half).powi(d as i32).powi(m as i32);
    Ok(stats
        .estimate(volume / factorial(m))
        .with_truncation(truncation))
}

/// Density-independent `(l, k)` kernels of a cloud factor for a fixed big
/// configuration: `I(l, k) = (1/(l! k!)) int [white-assignment sum] x
/// [articulation-free graph sum] dq`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudKernel {
    pub l_max: usize,
    pub k_max: usize,
    pub terms: Vec<((usize, usize), CoefficientEstimate)>,
}

/// Truncation caps for cloud factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudCaps {
    pub l_max: usize,
    pub k_max: usize,
}

impl CloudCaps {
    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::invalid("l_max starts at 1"));
        }
        if self.l_max + self.k_max > 5 {
            return Err(Error::limit("cloud truncation capped at l_max + k_max <= 5"));
        }
        Ok(())
    }
}

/// Sample the density-independent kernels of `C(p_J; rho_r)`.
#[allow(clippy::too_many_arguments)]
pub fn cloud_kernel(
    big_positions: &[Vec<f64>],
    d: usize,
    r: f64,
    big_r: f64,
    caps: CloudCaps,
    samples: u64,
    seed: u64,
) -> Result<CloudKernel> {
    if big_positions.is_empty() {
        return Err(Error::invalid("a cloud factor needs at least one big sphere"));
    }
    if big_positions.len() > 3 {
        return Err(Error::limit("cloud factors supported for |J| <= 3"));
    }
    caps.validate()?;
    let mc = McConfig::new(samples, seed);
    let mut terms = Vec::new();
    for l in 1..=caps.l_max {
        for k in 0..=caps.k_max {
            if l + k > 5 {
                continue;
            }
            let sub = mc.split((l * 16 + k) as u64);
            let est = cloud_term(big_positions, d, r, big_r, l, k, &sub)?;
            terms.push(((l, k), est));
        }
    }
    Ok(CloudKernel {
        l_max: caps.l_max,
        k_max: caps.k_max,
        terms,
    })
}

/// One `(l, k)` kernel: white vertices `q_1..q_l` carry the covering
/// assignment sum of ls bonds to the bigs, black vertices `q_{l+1}..q_{l+k}`
/// join through the articulation-free ss-graph sum.
fn cloud_term(
    big_positions: &[Vec<f64>],
    d: usize,
    r: f64,
    big_r: f64,
    l: usize,
    k: usize,
    mc: &McConfig,
) -> Result<CoefficientEstimate> {
    let m = l + k;
    let af_masks = Enumerator::default().articulation_free_masks(m, l)?;
    let n_big = big_positions.len();
    let a = 2.0 * r;
    let ls = big_r + r;
    let a_sq = a * a;
    let ls_sq = ls * ls;
    let center: Vec<f64> = big_positions[0].clone();
    let half = ls + a * (m.max(1) - 1) as f64;
    let stats = sample_mean(mc, |rng| {
        let mut q = [[0.0f64; 3]; 5];
        for coord in q.iter_mut().take(m) {
            fill_cube(rng, coord, d, &center, half);
        }
        // ls bonds between whites and bigs.
        let mut bond = [[0.0f64; 3]; 5];
        for (w, row) in bond.iter_mut().enumerate().take(l) {
            for (j, p) in big_positions.iter().enumerate() {
                row[j] = if flat_dist_sq(&q[w], p, d) < ls_sq {
                    -1.0
                } else {
                    0.0
                };
            }
        }
        let white_sum = covering_assignment_sum(&bond, l, n_big);
        if white_sum == 0.0 {
            return 0.0;
        }
        let mut overlap = 0u32;
        for j in 1..m {
            for i in 0..j {
                if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                    overlap |= 1 << pair_index(i, j);
                }
            }
        }
        white_sum * signed_subgraph_sum(&af_masks, overlap)
    });
    let volume = (2.0 * half).powi(d as i32).powi(m as i32);
    Ok(stats
        .estimate(volume / (factorial(l) * factorial(k)))
        .with_truncation(Truncation::new().with("l", l as i64).with("k", k as i64)))
}

/// Sum over assignments of nonempty big subsets `S_w` to each white vertex
/// such that every big is covered:
/// `sum_{T subset J} (-1)^{|T|} prod_w [prod_{j not in T} (1 + b_{w,j}) - 1]`.
fn covering_assignment_sum(bond: &[[f64; 3]; 5], l: usize, n_big: usize) -> f64 {
    let mut total = 0.0;
    for t in 0u32..(1 << n_big) {
        let sign = if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let mut product = 1.0;
        for row in bond.iter().take(l) {
            let mut factor = 1.0;
            for (j, b) in row.iter().enumerate().take(n_big) {
                if t >> j & 1 == 0 {
                    factor *= 1.0 + b;
                }
            }
            product *= factor - 1.0;
            if product == 0.0 {
                break;
            }
        }
        total += sign * product;
    }
    total
}

/// Evaluate a truncated cloud factor from its kernels:
/// `C = sum_{l,k} (rho_r / (1 - rho_R |B_R|))^{k+l} I(l, k)`.
pub fn cloud_factor_from_kernel(
    kernel: &CloudKernel,
    rho_r: f64,
    rho_big: f64,
    d: usize,
    big_r: f64,
) -> Result<CoefficientEstimate> {
    let denom = 1.0 - rho_big * ball_volume(d, big_r)?;
    if denom <= 0.0 {
        return Err(Error::invalid("rho_R |B_R| must stay below one"));
    }
    let dens = rho_r / denom;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for &((l, k), ref est) in &kernel.terms {
        let w = dens.powi((l + k) as i32);
        value += w * est.value;
        var += (w * est.std_error).powi(2);
        samples = samples.max(est.samples);
    }
    Ok(CoefficientEstimate {
        value,
        std_error: var.sqrt(),
        samples,
        truncation: Truncation::new()
            .with("l_max", kernel.l_max as i64)
            .with("k_max", kernel.k_max as i64),
    })
}

/// Truncated cloud factor `C(p_J; rho_r)` for a fixed configuration of big
/// spheres sharing one cloud.
#[allow(clippy::too_many_arguments)]
pub fn c_factor(
    big_positions: &[Vec<f64>],
    rho_r: f64,
    rho_big: f64,
    d: usize,
    r: f64,
    big_r: f64,
    caps: CloudCaps,
    samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    let kernel = cloud_kernel(big_positions, d, r, big_r, caps, samples, seed)?;
    cloud_factor_from_kernel(&kernel, rho_r, rho_big, d, big_r)
}

/// Density-independent kernels of `B*(n; rho_r)`: for each graph of the
/// big-two-connected class and each assignment of `(l, k)` truncation
/// indices to its clouds, the sampled big-position integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BStarKernel {
    pub n: usize,
    pub k_max: usize,
    pub caps: CloudCaps,
    /// `(power of the small-sphere density factor, integral estimate)`.
    pub terms: Vec<(u32, CoefficientEstimate)>,
}

/// Sample the kernels of `B*(n; rho_r) = (1/n!) sum_k (1/k!)
/// sum_{g in B*_{n+1,k}} int prod f_ll prod_J C(p_J) dp`, `p_{n+1} = 0`.
#[allow(clippy::too_many_arguments)]
pub fn b_star_kernel(
    n: usize,
    d: usize,
    r: f64,
    big_r: f64,
    k_max: usize,
    caps: CloudCaps,
    samples: u64,
    seed: u64,
) -> Result<BStarKernel> {
    if n == 0 || n > 2 {
        return Err(Error::limit("B* supported for n in {1, 2}"));
    }
    if k_max > 2 {
        return Err(Error::limit("B* cloud count capped at k_max <= 2"));
    }
    caps.validate()?;
    let mc = McConfig::new(samples, seed);
    let enumerator = Enumerator::default();
    let mut terms: Vec<(u32, CoefficientEstimate)> = Vec::new();
    let mut graph_tag = 0u64;
    for k in 0..=k_max {
        let members = enumerator.big_two_connected(n + 1, k)?;
        for (graph, hyper) in members {
            graph_tag += 1;
            // Big-big edges of the graph.
            let big_edges: Vec<(usize, usize)> = graph
                .edges
                .iter()
                .copied()
                .filter(|&(x, y)| x <= n && y <= n)
                .collect();
            let hyperedges: Vec<Vec<usize>> = hyper
                .0
                .iter()
                .map(|s| s.iter().copied().collect())
                .collect();
            // All (l, k) assignments per cloud.
            let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
            for _ in 0..k {
                let mut next = Vec::new();
                for combo in &combos {
                    for l in 1..=caps.l_max {
                        for kk in 0..=caps.k_max {
                            if l + kk > 5 {
                                continue;
                            }
                            let mut c = combo.clone();
                            c.push((l, kk));
                            next.push(c);
                        }
                    }
                }
                combos = next;
            }
            for (combo_tag, combo) in combos.iter().enumerate() {
                let sub = mc.split(graph_tag * 1024 + combo_tag as u64);
                let est = b_star_term(
                    n,
                    d,
                    r,
                    big_r,
                    &big_edges,
                    &hyperedges,
                    combo,
                    &sub,
                )?;
                let power: u32 = combo.iter().map(|&(l, kk)| (l + kk) as u32).sum();
                let scale = 1.0 / (factorial(n) * factorial(k));
                terms.push((power, est.scaled(scale)));
            }
        }
    }
    Ok(BStarKernel {
        n,
        k_max,
        caps,
        terms,
    })
}

/// One sampled term: big positions jointly with all cloud coordinates.
#[allow(clippy::too_many_arguments)]
fn b_star_term(
    n: usize,
    d: usize,
    r: f64,
    big_r: f64,
    big_edges: &[(usize, usize)],
    hyperedges: &[Vec<usize>],
    cloud_lk: &[(usize, usize)],
    mc: &McConfig,
) -> Result<CoefficientEstimate> {
    let a = 2.0 * r;
    let ls = big_r + r;
    let ll = 2.0 * big_r;
    let a_sq = a * a;
    let ls_sq = ls * ls;
    let ll_sq = ll * ll;
    let caps_span = cloud_lk
        .iter()
        .map(|&(l, k)| l + k)
        .max()
        .unwrap_or(1);
    // Hop length between linked bigs: direct ll bond or a cloud bridge.
    let bridge = 2.0 * ls + a * (caps_span.max(1) - 1) as f64;
    let hop = ll.max(bridge);
    let big_half = hop * n as f64;
    let cloud_half = ls + a * (caps_span.max(1) - 1) as f64;
    // Per-cloud AF families.
    let af_masks: Vec<Vec<u32>> = cloud_lk
        .iter()
        .map(|&(l, k)| Enumerator::default().articulation_free_masks(l + k, l))
        .collect::<Result<_>>()?;
    let origin = [0.0f64; 3];
    let stats = sample_mean(mc, |rng| {
        // Bigs 0..n-1 free, big n pinned at the origin.
        let mut p = [[0.0f64; 3]; 4];
        for coord in p.iter_mut().take(n) {
            fill_cube(rng, coord, d, &origin, big_half);
        }
        // p[n] = origin already.
        let mut value = 1.0;
        for &(x, y) in big_edges {
            if flat_dist_sq(&p[x], &p[y], d) < ll_sq {
                value = -value;
            } else {
                return 0.0;
            }
        }
        for (cloud, &(l, k)) in cloud_lk.iter().enumerate() {
            let bigs = &hyperedges[cloud];
            let m = l + k;
            let center = p[bigs[0]];
            let mut q = [[0.0f64; 3]; 5];
            for coord in q.iter_mut().take(m) {
                fill_cube(rng, coord, d, &center, cloud_half);
            }
            let mut bond = [[0.0f64; 3]; 5];
            for (w, row) in bond.iter_mut().enumerate().take(l) {
                for (j, &b) in bigs.iter().enumerate() {
                    row[j] = if flat_dist_sq(&q[w], &p[b], d) < ls_sq {
                        -1.0
                    } else {
                        0.0
                    };
                }
            }
            let white_sum = covering_assignment_sum(&bond, l, bigs.len());
            if white_sum == 0.0 {
                return 0.0;
            }
            let mut overlap = 0u32;
            for j in 1..m {
                for i in 0..j {
                    if flat_dist_sq(&q[i], &q[j], d) < a_sq {
                        overlap |= 1 << pair_index(i, j);
                    }
                }
            }
            let af = signed_subgraph_sum(&af_masks[cloud], overlap);
            if af == 0.0 {
                return 0.0;
            }
            value *= white_sum * af / (factorial(l) * factorial(k));
            // Cloud coordinate volume factor folded in per cloud.
            value *= (2.0 * cloud_half).powi(d as i32).powi(m as i32);
        }
        value
    });
    let big_volume = (2.0 * big_half).powi(d as i32).powi(n as i32);
    Ok(stats
        .estimate(big_volume)
        .with_truncation(Truncation::new().with("n", n as i64).with("clouds", cloud_lk.len() as i64)))
}

/// Evaluate `B*(n; rho_r)` from its kernels at given densities.
pub fn b_star_from_kernel(
    kernel: &BStarKernel,
    rho_r: f64,
    rho_big: f64,
    d: usize,
    big_r: f64,
) -> Result<CoefficientEstimate> {
    let denom = 1.0 - rho_big * ball_volume(d, big_r)?;
    if denom <= 0.0 {
        return Err(Error::invalid("rho_R |B_R| must stay below one"));
    }
    let dens = rho_r / denom;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for &(power, ref est) in &kernel.terms {
        let w = dens.powi(power as i32);
        value += w * est.value;
        var += (w * est.std_error).powi(2);
        samples = samples.max(est.samples);
    }
    Ok(CoefficientEstimate {
        value,
        std_error: var.sqrt(),
        samples,
        truncation: Truncation::new()
            .with("n", kernel.n as i64)
            .with("k_max", kernel.k_max as i64)
            .with("l_max", kernel.caps.l_max as i64)
            .with("c_k_max", kernel.caps.k_max as i64),
    })
}

/// Big-sphere coefficient `B*(n; rho_r)` at the given densities.
#[allow(clippy::too_many_arguments)]
pub fn b_star(
    n: usize,
    rho_r: f64,
    rho_big: f64,
    d: usize,
    r: f64,
    big_r: f64,
    k_max: usize,
    caps: CloudCaps,
    samples: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    let kernel = b_star_kernel(n, d, r, big_r, k_max, caps, samples, seed)?;
    b_star_from_kernel(&kernel, rho_r, rho_big, d, big_r)
}
