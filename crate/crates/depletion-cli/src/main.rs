//! Batch front-end: coefficient tables, free-energy bound sweeps,
//! convergence-domain curves and the oracle verification suites.
//!
//! Exit codes: 0 success or recorded skip, 1 usage error, 2 precision
//! failure (including failed verification), 3 resource limit.

mod artifacts;
mod config;

use artifacts::{fmt, Sink};
use clap::{Parser, Subcommand};
use config::RunConfig;
use depletion::geometry::ball_volume;
use depletion::integrals::{a_inf, b1_inf, b_star, beta_n, beta_n_exact_1d, cloud_kernel};
use depletion::oracle::{sandwich_test, tree_graph_check, OracleBudget, TinyInstance};
use depletion::polymers::kp_check;
use depletion::series::{
    admissible_density_curve, compute_kernels, convergence_check, free_energy_bounds,
    BoundOptions,
};
use depletion::{BoundSide, Ensemble, Error as LibError, ModelParams};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "depletion",
    version,
    about = "Canonical-ensemble cluster expansion toolkit for binary hard-sphere mixtures"
)]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the sample budget.
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumeration counts of the labeled graph families, with optional
    /// golden listings in canonical text form.
    Graphs {
        /// Largest vertex count to enumerate.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Also write the canonical listing of the families at n.
        #[arg(long)]
        list: bool,
    },
    /// Irreducible coefficient table beta_n.
    Beta {
        #[arg(long)]
        d: Option<usize>,
        /// Largest order (at most 4).
        #[arg(long = "n-max", default_value_t = 3)]
        n_max: usize,
    },
    /// Thermodynamic-limit coefficient tables (A_inf, B1_inf, C terms, B*).
    Coeffs,
    /// Free-energy bound sweep over the configured density grid
    /// (limit mode) or a single finite-volume report.
    FreeEnergy,
    /// Convergence-condition margins and the admissible-density curve.
    Domain,
    /// Oracle verification suites.
    Verify {
        /// One of: sandwich, tree-graph, tonks, kp, all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        d: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Lib(LibError),
    Io(std::io::Error),
    Verification(String),
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let mut config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: invalid-config: {msg}");
            return 1;
        }
    };
    if let Some(seed) = cli.seed {
        config.mc.seed = seed;
    }
    if let Some(samples) = cli.samples {
        config.mc.samples = samples;
    }
    let outcome = match &cli.command {
        Command::Graphs { n, list } => cmd_graphs(&config, &cli.out, *n, *list),
        Command::Beta { d, n_max } => cmd_beta(&config, &cli.out, *d, *n_max),
        Command::Coeffs => cmd_coeffs(&config, &cli.out),
        Command::FreeEnergy => cmd_free_energy(&config, &cli.out),
        Command::Domain => cmd_domain(&config, &cli.out),
        Command::Verify { suite, d } => cmd_verify(&config, &cli.out, suite, *d),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            1
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: io: {e}");
            1
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: verification-failed: {msg}");
            2
        }
        Err(Failure::Lib(e)) => match e {
            LibError::NotInDomain(msg) => {
                println!("skip: not-in-domain: {msg}");
                0
            }
            LibError::PrecisionFailure(msg) => {
                eprintln!("error: precision-failure: {msg}");
                2
            }
            LibError::ResourceLimit(msg) => {
                eprintln!("error: resource-limit: {msg}");
                3
            }
            LibError::InvalidArgument(msg) => {
                eprintln!("error: invalid-argument: {msg}");
                1
            }
            LibError::InadmissibleConfiguration(msg) => {
                eprintln!("error: inadmissible-configuration: {msg}");
                1
            }
        },
    }
}

fn cmd_graphs(config: &RunConfig, out: &std::path::Path, n: usize, list: bool) -> Result<(), Failure> {
    use depletion::graphs::Enumerator;
    let sink = Sink::new(out, "graphs", config)?;
    let e = Enumerator::default();
    let mut rows = Vec::new();
    #[derive(Serialize)]
    struct CountRow {
        n: usize,
        connected: u64,
        two_connected: u64,
    }
    let mut json_rows = Vec::new();
    for m in 1..=n {
        let mut connected = 0u64;
        e.visit_connected(m, |_| connected += 1)?;
        let mut two_connected = 0u64;
        if m >= 2 {
            e.visit_two_connected(m, |_| two_connected += 1)?;
        }
        println!("n={m}: {connected} connected, {two_connected} two-connected");
        rows.push(vec![m.to_string(), connected.to_string(), two_connected.to_string()]);
        json_rows.push(CountRow {
            n: m,
            connected,
            two_connected,
        });
    }
    sink.write_csv("graphs.csv", &["n", "connected", "two_connected"], &rows)?;
    sink.write_json("graphs.json", &json_rows)?;
    if list {
        if n > 5 {
            return Err(Failure::Lib(LibError::ResourceLimit(
                "golden listings capped at n = 5".into(),
            )));
        }
        let mut text = String::new();
        text.push_str(&format!("# connected graphs on {n} vertices\n"));
        for g in e.connected(n)? {
            text.push_str(&g.canonical_text());
            text.push('\n');
        }
        text.push_str(&format!("# two-connected graphs on {n} vertices\n"));
        for g in e.two_connected(n)? {
            text.push_str(&g.canonical_text());
            text.push('\n');
        }
        std::fs::write(sink.dir.join("graphs_listing.txt"), text)?;
    }
    Ok(())
}

fn cmd_beta(
    config: &RunConfig,
    out: &std::path::Path,
    d: Option<usize>,
    n_max: usize,
) -> Result<(), Failure> {
    let d = d.unwrap_or(config.model.d);
    let sink = Sink::new(out, "beta", config)?;
    let mc = config.mc_config();
    let r = config.model.r_small;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    #[derive(Serialize)]
    struct BetaRow {
        n: usize,
        d: usize,
        value: f64,
        std_error: f64,
        samples: u64,
        truncation: String,
        exact_1d: Option<f64>,
    }
    for n in 1..=n_max {
        let est = beta_n(n, d, r, mc.samples, mc.split(n as u64).seed)?;
        let exact = (d == 1).then(|| beta_n_exact_1d(n, 2.0 * r));
        println!(
            "beta_{n} (d={d}) = {:.6} +- {:.6}{}",
            est.value,
            est.std_error,
            exact.map_or(String::new(), |e| format!(" (exact 1d {e:.6})"))
        );
        rows.push(vec![
            n.to_string(),
            d.to_string(),
            fmt(est.value),
            fmt(est.std_error),
            est.samples.to_string(),
            est.truncation.to_string(),
            exact.map_or(String::new(), fmt),
        ]);
        json_rows.push(BetaRow {
            n,
            d,
            value: est.value,
            std_error: est.std_error,
            samples: est.samples,
            truncation: est.truncation.to_string(),
            exact_1d: exact,
        });
    }
    sink.write_csv(
        "beta.csv",
        &["n", "d", "value", "std_error", "samples", "truncation", "exact_1d"],
        &rows,
    )?;
    sink.write_json("beta.json", &json_rows)?;
    Ok(())
}

#[derive(Serialize)]
struct CoeffRow {
    kind: String,
    index: String,
    side: String,
    value: f64,
    std_error: f64,
    samples: u64,
    truncation: String,
}

fn coeff_row(kind: &str, index: String, side: &str, est: &depletion::CoefficientEstimate) -> CoeffRow {
    CoeffRow {
        kind: kind.into(),
        index,
        side: side.into(),
        value: est.value,
        std_error: est.std_error,
        samples: est.samples,
        truncation: est.truncation.to_string(),
    }
}

fn cmd_coeffs(config: &RunConfig, out: &std::path::Path) -> Result<(), Failure> {
    let sink = Sink::new(out, "coeffs", config)?;
    let mc = config.mc_config();
    let spec = config.truncation_spec();
    let model = &config.model;
    let species = config.species();
    let mut rows = Vec::new();

    let x_upper = model.rho_big * ball_volume(model.d, species.big + species.small)?;
    for k in 1..=spec.a_order {
        let est = a_inf(
            k,
            x_upper,
            model.d,
            species.small,
            mc.samples,
            mc.split(300 + k as u64).seed,
            config.a_variant(),
        )?;
        rows.push(coeff_row("a_inf", format!("k={k}"), "upper", &est));
    }
    for s in 0..=spec.b1_order {
        for side in [BoundSide::Upper, BoundSide::Lower] {
            let est = b1_inf(
                s,
                model.d,
                species.small,
                species.big,
                model.rho_big,
                mc.samples,
                mc.split(400 + s as u64).seed,
                side,
            )?;
            let side_name = match side {
                BoundSide::Upper => "upper",
                BoundSide::Lower => "lower",
            };
            rows.push(coeff_row("b1_inf", format!("s={s}"), side_name, &est));
        }
    }
    let kernel = cloud_kernel(
        &[vec![0.0; model.d]],
        model.d,
        species.small,
        species.big,
        spec.cloud_caps,
        mc.samples,
        mc.split(500).seed,
    )?;
    for ((l, k), est) in &kernel.terms {
        rows.push(coeff_row("c_term", format!("l={l},k={k}"), "shared", est));
    }
    for n in 1..=spec.bstar_order {
        let est = b_star(
            n,
            model.rho_small,
            model.rho_big,
            model.d,
            species.small,
            species.big,
            spec.bstar_k_max,
            spec.cloud_caps,
            mc.samples,
            mc.split(600 + n as u64).seed,
        )?;
        rows.push(coeff_row("b_star", format!("n={n}"), "shared", &est));
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.clone(),
                r.index.clone(),
                r.side.clone(),
                fmt(r.value),
                fmt(r.std_error),
                r.samples.to_string(),
                r.truncation.clone(),
            ]
        })
        .collect();
    sink.write_csv(
        "coeffs.csv",
        &["kind", "index", "side", "value", "std_error", "samples", "truncation"],
        &csv_rows,
    )?;
    sink.write_json("coeffs.json", &rows)?;
    println!("coeffs: {} rows written", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    rho_small: f64,
    rho_big: f64,
    in_domain: bool,
    lower: Option<f64>,
    upper: Option<f64>,
    lower_error: Option<f64>,
    upper_error: Option<f64>,
    c1_margin: f64,
    c2_margin: f64,
    kp_margin: f64,
}

fn cmd_free_energy(config: &RunConfig, out: &std::path::Path) -> Result<(), Failure> {
    let sink = Sink::new(out, "free-energy", config)?;
    let spec = config.truncation_spec();
    let weights = config.weights();
    let mc = config.mc_config();
    let kernels = compute_kernels(
        config.model.d,
        config.species(),
        &spec,
        config.a_variant(),
        &mc,
    )?;
    let options = BoundOptions {
        reading: config.reading(),
        allow_out_of_domain: config.flags.allow_out_of_domain,
    };

    let points: Vec<(f64, f64)> = if config.model.mode == "finite" {
        vec![(0.0, 0.0)] // placeholder; finite mode evaluates the config point
    } else {
        let g = &config.grid;
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![lo]
            } else {
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let mut pts = Vec::new();
        for &rr in &lin(g.rho_small_min, g.rho_small_max, g.rho_small_points) {
            for &rb in &lin(g.rho_big_min, g.rho_big_max, g.rho_big_points) {
                pts.push((rr, rb));
            }
        }
        pts
    };

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let mut violations = 0usize;
    for (rr, rb) in points {
        let params = if config.model.mode == "finite" {
            config.params()?
        } else {
            ModelParams::new(
                config.model.d,
                config.species(),
                Ensemble::Limit {
                    rho_small: rr,
                    rho_big: rb,
                },
            )?
        };
        let domain = convergence_check(&params, &weights, options.reading)?;
        let row = match free_energy_bounds(&params, &weights, &spec, &kernels, &options) {
            Ok((lower, upper)) => {
                if upper.value.value < lower.value.value {
                    violations += 1;
                }
                SweepRow {
                    rho_small: params.rho_small(),
                    rho_big: params.rho_big(),
                    in_domain: domain.holds,
                    lower: Some(lower.value.value),
                    upper: Some(upper.value.value),
                    lower_error: Some(lower.value.std_error),
                    upper_error: Some(upper.value.std_error),
                    c1_margin: domain.c1_margin,
                    c2_margin: domain.c2_margin,
                    kp_margin: domain.kp.margin,
                }
            }
            Err(LibError::NotInDomain(_)) => {
                skipped += 1;
                SweepRow {
                    rho_small: params.rho_small(),
                    rho_big: params.rho_big(),
                    in_domain: false,
                    lower: None,
                    upper: None,
                    lower_error: None,
                    upper_error: None,
                    c1_margin: domain.c1_margin,
                    c2_margin: domain.c2_margin,
                    kp_margin: domain.kp.margin,
                }
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.rho_small),
                fmt(r.rho_big),
                r.in_domain.to_string(),
                r.lower.map_or(String::new(), fmt),
                r.upper.map_or(String::new(), fmt),
                r.lower_error.map_or(String::new(), fmt),
                r.upper_error.map_or(String::new(), fmt),
                fmt(r.c1_margin),
                fmt(r.c2_margin),
                fmt(r.kp_margin),
            ]
        })
        .collect();
    sink.write_csv(
        "free_energy.csv",
        &[
            "rho_small",
            "rho_big",
            "in_domain",
            "lower",
            "upper",
            "lower_error",
            "upper_error",
            "c1_margin",
            "c2_margin",
            "kp_margin",
        ],
        &csv_rows,
    )?;
    sink.write_json("free_energy.json", &rows)?;
    println!(
        "free-energy: {} points, {skipped} skipped (out of domain), {violations} ordering violations",
        rows.len()
    );
    Ok(())
}

fn cmd_domain(config: &RunConfig, out: &std::path::Path) -> Result<(), Failure> {
    let sink = Sink::new(out, "domain", config)?;
    let params = config.params()?;
    let weights = config.weights();
    let report = convergence_check(&params, &weights, config.reading())?;
    println!(
        "margins: c1 = {:.4e}, c2 = {:.4e}, kp = {:.4e} ({})",
        report.c1_margin,
        report.c2_margin,
        report.kp.margin,
        if report.holds { "holds" } else { "fails" }
    );
    let curve_cfg = &config.domain_curve;
    let grid: Vec<f64> = (0..curve_cfg.points)
        .map(|i| {
            let t = i as f64 / (curve_cfg.points.max(2) - 1) as f64;
            curve_cfg.r_big_min * (curve_cfg.r_big_max / curve_cfg.r_big_min).powf(t)
        })
        .collect();
    let curve = admissible_density_curve(
        curve_cfg.d,
        config.model.r_small,
        &grid,
        config.model.rho_small,
        curve_cfg.alpha,
        weights.b,
        weights.c,
    )?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|&(r, v)| vec![fmt(r), fmt(v)])
        .collect();
    sink.write_csv("domain_curve.csv", &["r_big", "max_rho_big_b2r"], &rows)?;
    #[derive(Serialize)]
    struct DomainArtifact {
        c1_lhs: f64,
        c1_margin: f64,
        c2_lhs: f64,
        c2_margin: f64,
        kp_lhs: f64,
        kp_margin: f64,
        holds: bool,
        curve: Vec<(f64, f64)>,
    }
    sink.write_json(
        "domain.json",
        &DomainArtifact {
            c1_lhs: report.c1_lhs,
            c1_margin: report.c1_margin,
            c2_lhs: report.c2_lhs,
            c2_margin: report.c2_margin,
            kp_lhs: report.kp.lhs,
            kp_margin: report.kp.margin,
            holds: report.holds,
            curve,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SuiteResult {
    suite: String,
    pass: bool,
    detail: String,
}

fn cmd_verify(
    config: &RunConfig,
    out: &std::path::Path,
    suite: &str,
    d: Option<usize>,
) -> Result<(), Failure> {
    let sink = Sink::new(out, "verify", config)?;
    let d = d.unwrap_or(config.model.d);
    let mc = config.mc_config();
    let known = ["sandwich", "tree-graph", "tonks", "kp", "all"];
    if !known.contains(&suite) {
        return Err(Failure::Usage(format!(
            "unknown suite {suite}; expected one of {known:?}"
        )));
    }
    let mut results: Vec<SuiteResult> = Vec::new();

    if suite == "tonks" || suite == "all" {
        if d != 1 {
            return Err(Failure::Usage("the tonks suite requires d = 1".into()));
        }
        let mut pass = true;
        let mut detail = String::new();
        for n in 1..=3usize {
            let est = beta_n(n, 1, config.model.r_small, mc.samples.max(200_000), mc.split(n as u64).seed)?;
            let exact = beta_n_exact_1d(n, 2.0 * config.model.r_small);
            let dev = (est.value - exact).abs() / est.std_error.max(1e-12);
            pass &= dev <= 3.0;
            detail.push_str(&format!("beta_{n}: {dev:.2} sigma; "));
        }
        results.push(SuiteResult {
            suite: "tonks".into(),
            pass,
            detail,
        });
    }

    if suite == "tree-graph" || suite == "all" {
        let mut pass = true;
        let mut detail = String::new();
        for n in 2..=5usize {
            let rep = tree_graph_check(n, 10_000, mc.seed + n as u64)?;
            pass &= rep.violations == 0;
            detail.push_str(&format!("n={n}: {} violations; ", rep.violations));
        }
        results.push(SuiteResult {
            suite: "tree-graph".into(),
            pass,
            detail,
        });
    }

    if suite == "sandwich" || suite == "all" {
        if d != 1 {
            return Err(Failure::Usage("the sandwich suite requires d = 1".into()));
        }
        let mut pass = true;
        let mut detail = String::new();
        let spec = config.truncation_spec();
        for n_big in [1u64, 2] {
            let inst = TinyInstance::new(
                1,
                config.model.box_len,
                config.species(),
                config.model.n_small,
                n_big,
                OracleBudget::Quadrature { cells: 4096 },
            )?;
            let rep = sandwich_test(&inst, &spec, &config.weights(), &mc)?;
            pass &= rep.holds;
            detail.push_str(&format!(
                "N_R={n_big}: {} ({:.3e} <= {:.3e} <= {:.3e}); ",
                if rep.skipped {
                    "skipped"
                } else if rep.holds {
                    "holds"
                } else {
                    "violated"
                },
                rep.lower,
                rep.exact,
                rep.upper
            ));
        }
        results.push(SuiteResult {
            suite: "sandwich".into(),
            pass,
            detail,
        });
    }

    if suite == "kp" || suite == "all" {
        let weights = config.weights();
        let empty = ModelParams::new(
            config.model.d,
            config.species(),
            Ensemble::Finite {
                n_small: 0,
                n_big: 0,
                box_len: config.model.box_len,
            },
        )?;
        let empty_report = kp_check(&empty, &weights, config.reading())?;
        let mut pass = empty_report.holds;
        // Margin must fall monotonically with the small-sphere count.
        let mut last = f64::INFINITY;
        for n_small in [0u64, 1, 2, 4] {
            let params = ModelParams::new(
                config.model.d,
                config.species(),
                Ensemble::Finite {
                    n_small,
                    n_big: config.model.n_big,
                    box_len: config.model.box_len,
                },
            )?;
            let m = kp_check(&params, &weights, config.reading())?.margin;
            pass &= m < last || n_small == 0;
            last = m;
        }
        results.push(SuiteResult {
            suite: "kp".into(),
            pass,
            detail: format!("empty margin {:.4e}, monotone in N_r", empty_report.margin),
        });
    }

    for r in &results {
        println!("suite {}: {} — {}", r.suite, if r.pass { "ok" } else { "failed" }, r.detail);
    }
    sink.write_json("verify.json", &results)?;
    let csv_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.suite.clone(), r.pass.to_string(), r.detail.clone()])
        .collect();
    sink.write_csv("verify.csv", &["suite", "pass", "detail"], &csv_rows)?;
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Verification(
            results
                .iter()
                .filter(|r| !r.pass)
                .map(|r| r.suite.clone())
                .collect::<Vec<_>>()
                .join(","),
        ))
    }
}
