//! Trend properties of the free-energy bounds: the upper/lower discrepancy
//! shrinks with the size ratio r/R, and finite-volume reports approach the
//! limit-mode report as the box grows.

use depletion::estimate::McConfig;
use depletion::geometry::SphereSpecies;
use depletion::integrals::CloudCaps;
use depletion::polymers::ConvergenceParams;
use depletion::series::{compute_kernels, free_energy_bounds, BoundOptions, TruncationSpec};
use depletion::{Ensemble, ModelParams};

fn spec() -> TruncationSpec {
    TruncationSpec {
        beta_order: 2,
        a_order: 2,
        b1_order: 1,
        bstar_order: 1,
        bstar_k_max: 1,
        cloud_caps: CloudCaps { l_max: 2, k_max: 1 },
    }
}

fn weights() -> ConvergenceParams {
    ConvergenceParams::new(0.3, 0.05, 0.5).unwrap()
}

#[test]
fn discrepancy_shrinks_as_small_radius_vanishes() {
    // Fixed R and densities, r decreasing along a grid: the upper - lower
    // gap is driven by |B_{R+r}| - |B_R| and must fall monotonically.
    let rho_r = 0.003;
    let rho_big = 0.002;
    let mut last_gap = f64::INFINITY;
    for r_small in [0.4, 0.3, 0.2, 0.1] {
        let species = SphereSpecies::new(r_small, 1.0).unwrap();
        let kernels = compute_kernels(
            1,
            species,
            &spec(),
            Default::default(),
            &McConfig::new(40_000, 311),
        )
        .unwrap();
        let params = ModelParams::new(
            1,
            species,
            Ensemble::Limit {
                rho_small: rho_r,
                rho_big,
            },
        )
        .unwrap();
        let (lower, upper) = free_energy_bounds(
            &params,
            &weights(),
            &spec(),
            &kernels,
            &BoundOptions::default(),
        )
        .unwrap();
        let gap = upper.value.value - lower.value.value;
        assert!(gap >= 0.0, "ordering violated at r = {r_small}");
        assert!(
            gap < last_gap,
            "gap {gap} did not shrink at r = {r_small} (was {last_gap})"
        );
        last_gap = gap;
    }
}

#[test]
fn finite_volume_reports_approach_the_limit() {
    // Fixed densities, growing box: the finite-volume report approaches
    // the limit-mode report, consistently with a 1/|Lambda| rate.
    let species = SphereSpecies::new(0.25, 1.0).unwrap();
    let kernels = compute_kernels(
        1,
        species,
        &spec(),
        Default::default(),
        &McConfig::new(40_000, 313),
    )
    .unwrap();
    let rho_r = 0.0025;
    let rho_big = 0.00125;
    let limit_params = ModelParams::new(
        1,
        species,
        Ensemble::Limit {
            rho_small: rho_r,
            rho_big,
        },
    )
    .unwrap();
    let (limit_lower, _) = free_energy_bounds(
        &limit_params,
        &weights(),
        &spec(),
        &kernels,
        &BoundOptions::default(),
    )
    .unwrap();
    let mut gaps = Vec::new();
    for box_len in [800.0, 1600.0, 3200.0] {
        let params = ModelParams::new(
            1,
            species,
            Ensemble::Finite {
                n_small: (rho_r * box_len) as u64,
                n_big: (rho_big * box_len) as u64,
                box_len,
            },
        )
        .unwrap();
        let (lower, _) = free_energy_bounds(
            &params,
            &weights(),
            &spec(),
            &kernels,
            &BoundOptions::default(),
        )
        .unwrap();
        gaps.push((lower.value.value - limit_lower.value.value).abs());
    }
    assert!(
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        "finite-volume reports must approach the limit: {gaps:?}"
    );
    // Rate check on the doubling grid: each doubling should at least
    // halve-ish the distance (log-log slope near -1, within +-0.3 means
    // ratios between 2^0.7 and 2^1.3).
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (1.4..=3.2).contains(&ratio),
            "doubling ratio {ratio} outside the 1/volume window"
        );
    }
}
