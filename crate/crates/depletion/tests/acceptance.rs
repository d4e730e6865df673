//! Acceptance suite: every release-gating property of the toolkit, one
//! test per criterion, each printing a single pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use depletion::estimate::McConfig;
use depletion::geometry::{ball_volume, shell_volume, SphereSpecies};
use depletion::graphs::{articulation_vertices, cut_points, Enumerator};
use depletion::integrals::{
    b1_route_term, b_star, beta_n, beta_n_exact_1d, cloud_kernel, CloudCaps,
};
use depletion::oracle::{sandwich_test, tree_graph_check, OracleBudget, TinyInstance};
use depletion::polymers::{
    b_empty_coefficient, cluster_log_z, ActivityTable, ConvergenceParams, QuadratureSpec,
};
use depletion::series::{
    admissible_density_curve, compute_kernels, free_energy_bounds, BoundOptions, TruncationSpec,
};
use depletion::{Ensemble, ModelParams};
use std::collections::BTreeSet;

const R_SMALL: f64 = 0.25;
const R_BIG: f64 = 1.0;
const ROD: f64 = 0.5; // a = 2r

fn species() -> SphereSpecies {
    SphereSpecies::new(R_SMALL, R_BIG).unwrap()
}

fn report(id: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {id}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

/// Labeled connected-graph counts from the classical subtraction
/// recurrence; independent of the enumerator.
fn connected_count(n: usize) -> u64 {
    fn binom(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let mut r = 1u64;
        for i in 0..k {
            r = r * (n - i) / (i + 1);
        }
        r
    }
    let mut c = vec![0u64; n + 1];
    for m in 1..=n {
        let total = 1u64 << (m * (m - 1) / 2);
        let sum: u64 = (1..m)
            .map(|k| binom(m as u64 - 1, k as u64 - 1) * c[k] * (1u64 << ((m - k) * (m - k - 1) / 2)))
            .sum();
        c[m] = total - sum;
    }
    c[n]
}

#[test]
fn criterion_1_graph_family_counts() {
    let e = Enumerator::default();
    let mut detail = String::new();
    let mut pass = true;

    // Two-connected labeled counts, frozen from the cut-point filter over
    // the full edge-subset enumeration (independently cross-checked by the
    // Tarjan route in the unit tests).
    let two_connected_expected = [(2usize, 1u64), (3, 1), (4, 10), (5, 238)];
    for n in 1..=5usize {
        let got = e.connected_masks(n).unwrap().len() as u64;
        let want = connected_count(n);
        pass &= got == want;
        if n == 4 {
            detail.push_str(&format!("C_4 = {got}, "));
            pass &= got == 38;
        }
    }
    for (n, want) in two_connected_expected {
        let got = e.two_connected_masks(n).unwrap().len() as u64;
        pass &= got == want;
        if n == 4 {
            detail.push_str(&format!("B_4 = {got}, "));
        }
    }

    // Articulation vertices equal cut points whenever the white set is
    // empty, exhaustively for up to 6 vertices.
    let empty = BTreeSet::new();
    let mut checked = 0u64;
    for n in 2..=6usize {
        for g in e.connected(n).unwrap() {
            let arts = articulation_vertices(&g, &empty).unwrap();
            let cuts = cut_points(&g).unwrap();
            if arts != cuts {
                pass = false;
            }
            checked += 1;
        }
    }
    detail.push_str(&format!("articulation = cut-points on {checked} graphs"));
    report("1 graph-family-counts", pass, &detail);
}

#[test]
fn criterion_2_tonks_oracle() {
    let mut pass = true;
    let mut detail = String::new();
    for n in 1..=3usize {
        let est = beta_n(n, 1, R_SMALL, 1_000_000, 7_001).unwrap();
        let exact = beta_n_exact_1d(n, ROD);
        let sigma = est.std_error.max(1e-12);
        let dev = (est.value - exact).abs() / sigma;
        detail.push_str(&format!("beta_{n}: {:.5} vs {:.5} ({dev:.2} sigma); ", est.value, exact));
        pass &= dev <= 3.0;
    }
    report("2 tonks-oracle", pass, &detail);
}

#[test]
fn criterion_3_tree_graph_domination() {
    let mut pass = true;
    let mut detail = String::new();
    for n in 2..=5usize {
        let rep = tree_graph_check(n, 10_000, 42 + n as u64).unwrap();
        pass &= rep.violations == 0;
        detail.push_str(&format!(
            "n = {n}: {} violations, max ratio {:.3}; ",
            rep.violations, rep.max_ratio
        ));
    }
    report("3 tree-graph-domination", pass, &detail);
}

#[test]
fn criterion_4_cluster_vs_oracle() {
    // d = 1, N_r = 3, L/a = 40.
    let l = 20.0;
    let metric = depletion::geometry::BoxMetric::new(1, l).unwrap();
    let sp = species();
    let weights = ConvergenceParams::new(0.3, 0.05, 0.5).unwrap();
    let order = 3;
    let inst = TinyInstance::new(1, l, sp, 3, 0, OracleBudget::Quadrature { cells: 4096 }).unwrap();

    let series_at = |cells: usize, bigs: &[Vec<f64>]| {
        let quad = QuadratureSpec::Midpoint1d {
            cells,
            tolerance: 1e-2,
        };
        let table = ActivityTable::compute(3, bigs, &metric, &sp, &quad).unwrap();
        cluster_log_z(&table, &weights, order, false).unwrap()
    };

    let mut pass = true;
    let mut detail = String::new();

    // No big spheres: against the exact ring partition function.
    let exact_empty = depletion::oracle::brute_z_empty(&inst).unwrap().value.ln();
    let coarse = series_at(160, &[]);
    let fine = series_at(320, &[]);
    let quad_budget = (fine.value - coarse.value).abs() + 1e-9;
    let gap = (fine.value - exact_empty).abs();
    let budget = fine.tail_bound + quad_budget;
    pass &= gap <= budget;
    detail.push_str(&format!(
        "empty: gap {gap:.2e} within tail {:.2e} + quad {quad_budget:.2e}; ",
        fine.tail_bound
    ));

    // One big sphere at the origin: the series absorbs the exact
    // available-volume factor (|free| / |Lambda|)^3.
    let exact_p = depletion::oracle::brute_z_p(&inst, &[vec![0.0]])
        .unwrap()
        .value
        .ln();
    let ratio_term =
        3.0 * (depletion::geometry::free_volume_exact_1d(&[0.0], &metric, &sp).unwrap() / l).ln();
    let coarse = series_at(160, &[vec![0.0]]);
    let fine = series_at(320, &[vec![0.0]]);
    let quad_budget = (fine.value - coarse.value).abs() + 1e-9;
    let gap = (fine.value + ratio_term - exact_p).abs();
    let budget = fine.tail_bound + quad_budget;
    pass &= gap <= budget;
    detail.push_str(&format!(
        "one big: gap {gap:.2e} within tail {:.2e} + quad {quad_budget:.2e}",
        fine.tail_bound
    ));
    report("4 cluster-vs-oracle", pass, &detail);
}

fn desk_truncation() -> TruncationSpec {
    TruncationSpec {
        beta_order: 2,
        a_order: 2,
        b1_order: 1,
        bstar_order: 1,
        bstar_k_max: 1,
        cloud_caps: CloudCaps { l_max: 2, k_max: 1 },
    }
}

#[test]
fn criterion_5_sandwich_property() {
    let sp = species();
    let weights = ConvergenceParams::new(0.3, 0.05, 0.5).unwrap();
    let spec = desk_truncation();
    let mc = McConfig::new(150_000, 2_024);
    let mut pass = true;
    let mut detail = String::new();

    // Finite-volume instances: N_r = 2, N_R in {1, 2}, dilute.
    for n_big in [1u64, 2] {
        let inst = TinyInstance::new(
            1,
            320.0,
            sp,
            2,
            n_big,
            OracleBudget::Quadrature { cells: 4096 },
        )
        .unwrap();
        let rep = sandwich_test(&inst, &spec, &weights, &mc).unwrap();
        pass &= rep.holds && !rep.skipped;
        detail.push_str(&format!(
            "N_R = {n_big}: {:.3e} <= {:.3e} <= {:.3e}; ",
            rep.lower, rep.exact, rep.upper
        ));
    }

    // Limit-mode grid with shared kernels (hence shared seeds).
    let kernels = compute_kernels(1, sp, &spec, Default::default(), &mc).unwrap();
    let mut grid_ok = 0u32;
    for i in 0..10 {
        for j in 0..10 {
            let rho_r = 5e-4 + i as f64 * 5e-4;
            let rho_big = 5e-4 + j as f64 * 5e-4;
            let params = ModelParams::new(
                1,
                sp,
                Ensemble::Limit {
                    rho_small: rho_r,
                    rho_big,
                },
            )
            .unwrap();
            let (lower, upper) = free_energy_bounds(
                &params,
                &weights,
                &spec,
                &kernels,
                &BoundOptions::default(),
            )
            .unwrap();
            if upper.value.value >= lower.value.value {
                grid_ok += 1;
            }
        }
    }
    pass &= grid_ok == 100;
    detail.push_str(&format!("grid ordering {grid_ok}/100"));
    report("5 sandwich-property", pass, &detail);
}

#[test]
fn criterion_6_finite_volume_rate() {
    // Exact finite-volume coefficients from the polymer partition
    // functions with closed-form rod cluster integrals
    // I(m) = (-1)^(m-1) (m a)^(m-1), against the limit coefficients.
    let rod_integral = |m: usize| -> f64 {
        let v = (m as f64 * ROD).powi(m as i32 - 1);
        if m.is_multiple_of(2) {
            -v
        } else {
            v
        }
    };
    let mut pass = true;
    let mut detail = String::new();
    for k in 1..=2usize {
        let mut points = Vec::new();
        for l in [10.0f64, 20.0, 40.0] {
            let c = |m: usize| rod_integral(m) / l.powi(m as i32 - 1);
            let coeff = b_empty_coefficient(k, l, &c).unwrap();
            let diff = (coeff - beta_n_exact_1d(k, ROD)).abs();
            points.push((l.ln(), diff.ln()));
        }
        // Least-squares slope over the three volumes.
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        pass &= (-1.3..=-0.7).contains(&slope);
        detail.push_str(&format!("k = {k}: slope {slope:.3}; "));
    }
    report("6 finite-volume-rate", pass, &detail);
}

#[test]
fn criterion_7_surface_order_domain() {
    // Closed-form curve; regression over the largest decade of the R grid.
    let rho_r = 0.002;
    let alpha = 2.5;
    let (b, c) = (0.3, 0.3);
    let grid: Vec<f64> = (0..=40)
        .map(|i| 10f64.powf(i as f64 * 2.0 / 40.0)) // R from 1 to 100
        .collect();
    let curve = admissible_density_curve(3, R_SMALL, &grid, rho_r, alpha, b, c).unwrap();
    let decade: Vec<(f64, f64)> = curve
        .iter()
        .filter(|&&(r, _)| r >= 10.0)
        .map(|&(r, v)| {
            let shell = shell_volume(3, r, R_SMALL).unwrap();
            (shell * rho_r, v.ln())
        })
        .collect();
    let n = decade.len() as f64;
    let sx: f64 = decade.iter().map(|p| p.0).sum();
    let sy: f64 = decade.iter().map(|p| p.1).sum();
    let sxx: f64 = decade.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = decade.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = decade.iter().map(|p| p.1 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let r2 = {
        let num = n * sxy - sx * sy;
        num * num / ((n * sxx - sx * sx) * (n * syy - sy * sy))
    };
    let pass = slope < 0.0 && r2 > 0.95;
    report(
        "7 surface-order-domain",
        pass,
        &format!("slope {slope:.3} (vs -alpha = -2.5), R^2 = {r2:.4} over {} points", decade.len()),
    );
}

#[test]
fn criterion_8_cross_coefficient_consistency() {
    let mut pass = true;
    let mut detail = String::new();

    // C with |J| = 1 against the one-big series, term by term at matched
    // truncation. The two sides enumerate different graph families
    // (articulation-free with a white set vs two-species two-connected).
    let caps = CloudCaps { l_max: 2, k_max: 1 };
    let kernel = cloud_kernel(&[vec![0.0]], 1, R_SMALL, R_BIG, caps, 600_000, 19).unwrap();
    for ((l, k), c_est) in &kernel.terms {
        let b_est = b1_route_term(*l, *k, 1, R_SMALL, R_BIG, 600_000, 977).unwrap();
        let sigma = c_est.combined_sigma(&b_est).max(1e-9);
        let dev = (c_est.value - b_est.value).abs() / sigma;
        pass &= dev <= 3.0;
        detail.push_str(&format!("(l,k)=({l},{k}): {dev:.2} sigma; "));
    }

    // B*(1, .) at k = 0 reproduces -|B_2R|.
    let est = b_star(
        1,
        0.0,
        0.0,
        1,
        R_SMALL,
        R_BIG,
        0,
        CloudCaps { l_max: 1, k_max: 0 },
        600_000,
        23,
    )
    .unwrap();
    let expected = -ball_volume(1, 2.0 * R_BIG).unwrap();
    let dev = (est.value - expected).abs() / est.std_error.max(1e-12);
    pass &= dev <= 3.0;
    detail.push_str(&format!("B*(1; k=0) = {:.4} vs {expected} ({dev:.2} sigma)", est.value));
    report("8 cross-coefficient-consistency", pass, &detail);
}
