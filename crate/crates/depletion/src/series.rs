//! Assembly of the finite-volume and thermodynamic-limit free-energy
//! bounds for the mixture, plus the convergence-domain analysis.
//!
//! The free energy decomposes as `ideal - (F0 + A + F1 + F2)`:
//! the pure small-sphere series `F0`, the adjustment series `A` carrying
//! the available-volume ratio, the one-big series `F1` (whose leading
//! single-particle cloud term is kept in exact logarithmic form), and the
//! shared big-sphere series `F2` over the `B*` coefficients. The upper
//! bound carries `|B_{R+r}|` in the ratio arguments, the lower bound
//! `|B_R|`.
//!
//! Every report records the joint truncation; terms from different
//! truncations never mix.

use crate::error::{Error, Result};
use crate::estimate::{CoefficientEstimate, McConfig, Truncation};
use crate::geometry::{ball_volume, shell_volume, SphereSpecies};
use crate::integrals::{
    a_from_kernel, a_kernel, b1_from_kernel, b1_kernel, b_star_from_kernel, b_star_kernel,
    beta_n, AInfVariant, AKernel, B1Kernel, BStarKernel, CloudCaps,
};
use crate::polymers::{kp_check, ConvergenceParams, KpReport};
use crate::{BoundSide, Ensemble, ExclusionReading, ModelParams};
use serde::{Deserialize, Serialize};

/// Canonical falling-factorial weight
/// `P(n) = (N-1)(N-2)...(N-n) / V^n` for `n < N`, zero otherwise.
pub fn falling_factorial_weight(volume: f64, n_particles: u64, order: usize) -> f64 {
    if order as u64 >= n_particles {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 1..=order as u64 {
        p *= (n_particles - i) as f64 / volume;
    }
    p
}

/// Joint truncation of the four series terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    /// `F0` and the beta table extend to this order.
    pub beta_order: usize,
    /// `A` series order in `k`.
    pub a_order: usize,
    /// `F1` series order in `s` (the exact s = 0 cloud term is always kept).
    pub b1_order: usize,
    /// `F2` series order in `n` (at most 2).
    pub bstar_order: usize,
    /// Cloud count cap inside `B*`.
    pub bstar_k_max: usize,
    /// `(l, k)` caps of every cloud factor.
    pub cloud_caps: CloudCaps,
}

impl TruncationSpec {
    pub fn record(&self) -> Truncation {
        Truncation::new()
            .with("beta_order", self.beta_order as i64)
            .with("a_order", self.a_order as i64)
            .with("b1_order", self.b1_order as i64)
            .with("bstar_order", self.bstar_order as i64)
            .with("bstar_k_max", self.bstar_k_max as i64)
            .with("c_l_max", self.cloud_caps.l_max as i64)
            .with("c_k_max", self.cloud_caps.k_max as i64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_order == 0 || self.beta_order > 4 {
            return Err(Error::limit("beta_order must be in 1..=4"));
        }
        if self.a_order == 0 || self.a_order > 4 {
            return Err(Error::limit("a_order must be in 1..=4"));
        }
        if self.b1_order > 3 {
            return Err(Error::limit("b1_order must be at most 3"));
        }
        if self.bstar_order > 2 {
            return Err(Error::limit("bstar_order must be at most 2"));
        }
        if self.bstar_k_max > 2 {
            return Err(Error::limit("bstar_k_max must be at most 2"));
        }
        self.cloud_caps.validate()
    }
}

/// All sampled, density-independent inputs of the bound assembly, tied to
/// one truncation and one seed. Grid sweeps reuse a single set so every
/// grid point shares the same sampled integrals.
#[derive(Debug, Clone)]
pub struct SeriesKernels {
    pub d: usize,
    pub species: SphereSpecies,
    pub spec: TruncationSpec,
    pub betas: Vec<CoefficientEstimate>,
    a: AKernel,
    b1: B1Kernel,
    bstar: Vec<BStarKernel>,
}

/// Sample every kernel the bound assembly needs.
pub fn compute_kernels(
    d: usize,
    species: SphereSpecies,
    spec: &TruncationSpec,
    variant: AInfVariant,
    mc: &McConfig,
) -> Result<SeriesKernels> {
    spec.validate()?;
    let mut betas = Vec::new();
    for n in 1..=spec.beta_order {
        let sub = mc.split(n as u64);
        betas.push(beta_n(n, d, species.small, sub.samples, sub.seed)?);
    }
    let a = a_kernel(
        spec.a_order,
        d,
        species.small,
        variant,
        mc.samples,
        mc.split(11).seed,
    )?;
    let b1 = b1_kernel(
        spec.b1_order.max(1),
        d,
        species.small,
        species.big,
        mc.samples,
        mc.split(12).seed,
    )?;
    let mut bstar = Vec::new();
    for n in 1..=spec.bstar_order {
        bstar.push(b_star_kernel(
            n,
            d,
            species.small,
            species.big,
            spec.bstar_k_max,
            spec.cloud_caps,
            mc.samples,
            mc.split(20 + n as u64).seed,
        )?);
    }
    Ok(SeriesKernels {
        d,
        species,
        spec: *spec,
        betas,
        a,
        b1,
        bstar,
    })
}

/// One side of the free-energy sandwich.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeEnergyReport {
    pub bound_kind: BoundSide,
    /// Entropic part: `rho (log rho - 1)` terms in limit mode, exact log
    /// factorials at finite volume.
    pub ideal: f64,
    pub f0: CoefficientEstimate,
    pub a_term: CoefficientEstimate,
    pub f1: CoefficientEstimate,
    pub f2: CoefficientEstimate,
    /// `ideal - (f0 + a_term + f1 + f2)`.
    pub value: CoefficientEstimate,
    pub truncation: Truncation,
}

/// `F0(rho_r) = sum_{n <= order} beta_n rho^{n+1} / (n+1)` with propagated
/// sampling errors. `domain` is the summability check of the pure
/// small-sphere expansion; evaluation outside it requires the override.
pub fn f0(
    rho_r: f64,
    order: usize,
    betas: &[CoefficientEstimate],
    domain: &KpReport,
    allow_out_of_domain: bool,
) -> Result<CoefficientEstimate> {
    if rho_r < 0.0 {
        return Err(Error::invalid("density must be nonnegative"));
    }
    if order > betas.len() {
        return Err(Error::invalid("order exceeds the available beta table"));
    }
    if !domain.holds && !allow_out_of_domain {
        return Err(Error::NotInDomain(format!(
            "small-sphere summability margin {:.3e}",
            domain.margin
        )));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, beta) in betas.iter().take(order).enumerate() {
        let n = i + 1;
        let w = rho_r.powi(n as i32 + 1) / (n as f64 + 1.0);
        value += w * beta.value;
        var += (w * beta.std_error).powi(2);
    }
    Ok(CoefficientEstimate {
        value,
        std_error: var.sqrt(),
        samples: betas.iter().map(|b| b.samples).max().unwrap_or(0),
        truncation: Truncation::new().with("beta_order", order as i64),
    })
}

/// Density and volume data of one evaluation point, shared by both modes.
struct EvalPoint {
    rho_r: f64,
    rho_big: f64,
    /// Weight of the k-th order small-sphere term (falling factorial at
    /// finite volume, plain power in the limit), including `rho_r`.
    small_weight: Vec<f64>,
    /// Same for the big-sphere series.
    big_weight: Vec<f64>,
    ideal: f64,
}

fn eval_point(params: &ModelParams, spec: &TruncationSpec) -> EvalPoint {
    let max_order = spec.beta_order.max(spec.a_order).max(spec.bstar_order) + 1;
    match params.ensemble {
        Ensemble::Limit { rho_small, rho_big } => {
            let ideal_of = |rho: f64| if rho > 0.0 { rho * (rho.ln() - 1.0) } else { 0.0 };
            EvalPoint {
                rho_r: rho_small,
                rho_big,
                small_weight: (0..=max_order)
                    .map(|k| rho_small.powi(k as i32 + 1))
                    .collect(),
                big_weight: (0..=max_order)
                    .map(|k| rho_big.powi(k as i32 + 1))
                    .collect(),
                ideal: ideal_of(rho_small) + ideal_of(rho_big),
            }
        }
        Ensemble::Finite {
            n_small,
            n_big,
            box_len,
        } => {
            let volume = box_len.powi(params.d as i32);
            let ln_fact = |n: u64| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
            let ideal = -(n_small as f64 * volume.ln() - ln_fact(n_small)
                + n_big as f64 * volume.ln()
                - ln_fact(n_big))
                / volume;
            EvalPoint {
                rho_r: n_small as f64 / volume,
                rho_big: n_big as f64 / volume,
                small_weight: (0..=max_order)
                    .map(|k| {
                        n_small as f64 / volume * falling_factorial_weight(volume, n_small, k)
                    })
                    .collect(),
                big_weight: (0..=max_order)
                    .map(|k| n_big as f64 / volume * falling_factorial_weight(volume, n_big, k))
                    .collect(),
                ideal,
            }
        }
    }
}

/// Options of the bound assembly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundOptions {
    pub reading: ExclusionReading,
    pub allow_out_of_domain: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            reading: ExclusionReading::BigBall,
            allow_out_of_domain: false,
        }
    }
}

/// Assemble the lower and upper free-energy bounds at one parameter point
/// from shared kernels. Checks the convergence conditions first.
pub fn free_energy_bounds(
    params: &ModelParams,
    weights: &ConvergenceParams,
    spec: &TruncationSpec,
    kernels: &SeriesKernels,
    options: &BoundOptions,
) -> Result<(FreeEnergyReport, FreeEnergyReport)> {
    if kernels.spec != *spec {
        return Err(Error::invalid(
            "kernel truncation differs from the requested truncation",
        ));
    }
    let domain = convergence_check(params, weights, options.reading)?;
    if !domain.holds && !options.allow_out_of_domain {
        return Err(Error::NotInDomain(format!(
            "convergence margins c1 = {:.3e}, c2 = {:.3e}, kp = {:.3e}",
            domain.c1_margin, domain.c2_margin, domain.kp.margin
        )));
    }
    let lower = assemble(params, spec, kernels, BoundSide::Lower)?;
    let upper = assemble(params, spec, kernels, BoundSide::Upper)?;
    Ok((lower, upper))
}

fn ratio_argument(
    params: &ModelParams,
    side: BoundSide,
) -> Result<f64> {
    let ball = match side {
        BoundSide::Upper => ball_volume(params.d, params.species.big + params.species.small)?,
        BoundSide::Lower => ball_volume(params.d, params.species.big)?,
    };
    let x = params.rho_big() * ball;
    if x >= 1.0 {
        return Err(Error::invalid("rho_R |B| must stay below one"));
    }
    Ok(x)
}

fn assemble(
    params: &ModelParams,
    spec: &TruncationSpec,
    kernels: &SeriesKernels,
    side: BoundSide,
) -> Result<FreeEnergyReport> {
    if spec.beta_order > kernels.betas.len() {
        return Err(Error::invalid("beta table shorter than the requested order"));
    }
    let point = eval_point(params, spec);
    let x = ratio_argument(params, side)?;
    let truncation = spec.record();

    // F0 with the mode-dependent weights (falling factorials at finite
    // volume, plain powers in the limit).
    let f0_term = {
        let mut value = 0.0;
        let mut var = 0.0;
        let mut samples = 0;
        for (i, beta) in kernels.betas.iter().take(spec.beta_order).enumerate() {
            let k = i + 1;
            let w = point.small_weight[k] / (k as f64 + 1.0);
            value += w * beta.value;
            var += (w * beta.std_error).powi(2);
            samples = samples.max(beta.samples);
        }
        CoefficientEstimate {
            value,
            std_error: var.sqrt(),
            samples,
            truncation: truncation.clone(),
        }
    };

    let mut a_value = 0.0;
    let mut a_var = 0.0;
    for k in 1..=spec.a_order {
        let est = a_from_kernel(&kernels.a, k, x)?;
        let w = point.small_weight[k] / (k as f64 + 1.0);
        a_value += w * est.value;
        a_var += (w * est.std_error).powi(2);
    }
    let a_term = CoefficientEstimate {
        value: a_value,
        std_error: a_var.sqrt(),
        samples: kernels.betas.first().map(|b| b.samples).unwrap_or(0),
        truncation: truncation.clone(),
    };

    // F1: the single-particle cloud term is the exact available-volume
    // logarithm; the s >= 1 terms carry the effective small density.
    let mut f1_value = point.rho_r * (1.0 - x).ln();
    let mut f1_var = 0.0;
    let dens = point.rho_r / (1.0 - x);
    for s in 1..=spec.b1_order {
        let est = b1_from_kernel(
            &kernels.b1,
            s,
            params.d,
            params.species.small,
            params.species.big,
            params.rho_big(),
            side,
        )?;
        let w = point.rho_big * dens.powi(s as i32 + 1) / (s as f64 + 1.0);
        f1_value += w * est.value;
        f1_var += (w * est.std_error).powi(2);
    }
    let f1 = CoefficientEstimate {
        value: f1_value,
        std_error: f1_var.sqrt(),
        samples: 0,
        truncation: truncation.clone(),
    };

    // F2: shared between the two bounds.
    let mut f2_value = 0.0;
    let mut f2_var = 0.0;
    for (i, kernel) in kernels.bstar.iter().enumerate() {
        let n = i + 1;
        if n > spec.bstar_order {
            break;
        }
        let est = b_star_from_kernel(
            kernel,
            point.rho_r,
            point.rho_big,
            params.d,
            params.species.big,
        )?;
        let w = point.big_weight[n] / (n as f64 + 1.0);
        f2_value += w * est.value;
        f2_var += (w * est.std_error).powi(2);
    }
    let f2 = CoefficientEstimate {
        value: f2_value,
        std_error: f2_var.sqrt(),
        samples: 0,
        truncation: truncation.clone(),
    };

    let value = CoefficientEstimate {
        value: point.ideal - (f0_term.value + a_term.value + f1.value + f2.value),
        std_error: (f0_term.std_error.powi(2)
            + a_term.std_error.powi(2)
            + f1.std_error.powi(2)
            + f2.std_error.powi(2))
        .sqrt(),
        samples: 0,
        truncation: truncation.clone(),
    };
    Ok(FreeEnergyReport {
        bound_kind: side,
        ideal: point.ideal,
        f0: f0_term,
        a_term,
        f1,
        f2,
        value,
        truncation,
    })
}

/// The interaction part of the bounds: lower and upper series for
/// `(1/|Lambda|) log Z_hat`. The lower `log Z_hat` series carries the
/// `|B_{R+r}|` ratio argument and corresponds to the upper free-energy
/// bound; the upper series carries `|B_R|`.
pub fn log_zhat_bounds(
    params: &ModelParams,
    spec: &TruncationSpec,
    kernels: &SeriesKernels,
) -> Result<(CoefficientEstimate, CoefficientEstimate)> {
    if kernels.spec != *spec {
        return Err(Error::invalid(
            "kernel truncation differs from the requested truncation",
        ));
    }
    let lower_f = assemble(params, spec, kernels, BoundSide::Lower)?;
    let upper_f = assemble(params, spec, kernels, BoundSide::Upper)?;
    let series = |report: &FreeEnergyReport| CoefficientEstimate {
        value: report.a_term.value + report.f1.value + report.f2.value,
        std_error: (report.a_term.std_error.powi(2)
            + report.f1.std_error.powi(2)
            + report.f2.std_error.powi(2))
        .sqrt(),
        samples: 0,
        truncation: report.truncation.clone(),
    };
    // The upper free-energy report holds the lower log Z_hat series.
    Ok((series(&upper_f), series(&lower_f)))
}

/// Margins of the convergence conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainReport {
    pub c1_lhs: f64,
    /// `a - c1_lhs`.
    pub c1_margin: f64,
    pub c2_lhs: f64,
    /// `b - c2_lhs`.
    pub c2_margin: f64,
    pub kp: KpReport,
    pub holds: bool,
}

/// Evaluate the two tree-graph conditions
/// `e^{b+c} |shell| N_r / (|Lambda| - N_R |B_{R+r}|) + e^a |B_2R| N_R / |Lambda| <= a`
/// and `e^a |shell| N_R / |Lambda| <= b`, plus the small-sphere
/// summability condition.
pub fn convergence_check(
    params: &ModelParams,
    weights: &ConvergenceParams,
    reading: ExclusionReading,
) -> Result<DomainReport> {
    let d = params.d;
    let shell = shell_volume(d, params.species.big, params.species.small)?;
    let b_2r = ball_volume(d, 2.0 * params.species.big)?;
    let b_rr = ball_volume(d, params.species.big + params.species.small)?;
    let rho_big = params.rho_big();
    let effective_small = match params.ensemble {
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
    let c1_lhs = (weights.b + weights.c).exp() * shell * effective_small
        + weights.a.exp() * b_2r * rho_big;
    let c2_lhs = weights.a.exp() * shell * rho_big;
    let kp = kp_check(params, weights, reading)?;
    let c1_margin = weights.a - c1_lhs;
    let c2_margin = weights.b - c2_lhs;
    Ok(DomainReport {
        c1_lhs,
        c1_margin,
        c2_lhs,
        c2_margin,
        holds: c1_margin >= 0.0 && c2_margin >= 0.0 && kp.holds,
        kp,
    })
}

/// Largest admissible big-sphere packing `rho_R |B_2R|` against the big
/// radius, with `a` tied to the surface term
/// `a = alpha |shell| rho_r_eff`. Returns `(R, max rho_R |B_2R|)` pairs.
///
/// The effective small density couples to the answer through the
/// available-volume ratio, so one fixed-point iteration refines it.
pub fn admissible_density_curve(
    d: usize,
    r: f64,
    big_grid: &[f64],
    rho_r: f64,
    alpha: f64,
    b: f64,
    c: f64,
) -> Result<Vec<(f64, f64)>> {
    if alpha <= (b + c).exp() {
        return Err(Error::invalid("alpha must exceed e^{b+c}"));
    }
    if rho_r < 0.0 {
        return Err(Error::invalid("density must be nonnegative"));
    }
    let mut last = 0.0;
    for &big in big_grid {
        if big <= r {
            return Err(Error::invalid("grid radii must exceed r"));
        }
        if big < last {
            return Err(Error::invalid("grid radii must increase"));
        }
        last = big;
    }
    let mut curve = Vec::with_capacity(big_grid.len());
    for &big in big_grid {
        let shell = shell_volume(d, big, r)?;
        let b_2r_big = ball_volume(d, 2.0 * big)?;
        let b_rr = ball_volume(d, big + r)?;
        let bound_at = |rho_big: f64| -> f64 {
            let denom = (1.0 - rho_big * b_rr).max(f64::MIN_POSITIVE);
            let eff = rho_r / denom;
            let a = alpha * shell * eff;
            if rho_r == 0.0 {
                // The a-branch degenerates; only the b-condition survives.
                return b * (-a).exp() * b_2r_big / shell;
            }
            let first = (alpha - (b + c).exp()) * shell * eff;
            let second = b * b_2r_big / shell;
            (-a).exp() * first.min(second)
        };
        let first_pass = bound_at(0.0);
        let refined = bound_at(first_pass / b_2r_big);
        curve.push((big, refined));
    }
    Ok(curve)
}
