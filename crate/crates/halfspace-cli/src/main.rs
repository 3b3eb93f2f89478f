//! Command-line interface to the `halfspace` crate: orbital counting,
//! heat kernels, ball-average transforms, and their verification sweeps.
//!
//! Exit codes: `0` on success, `1` when a verification check fails, `2` on
//! usage or computation errors.

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use halfspace::counting_experiments::{counting_table, exponent_sweep, sandwich_suite, write_csv};
use halfspace::delsarte_verification::{
    delsarte_ball_check, laplacian_eigenfunction_check, radial_closed_form_h3, radial_ode_solve,
    spherical_mean_check,
};
use halfspace::group_orbits::{enumerate_orbit, orbital_count_oracle};
use halfspace::groups::resolve_group;
use halfspace::heat_kernels::{
    heat_kernel_h3, heat_kernel_quotient, log_heat_gradient_h3, mass_residual, monotonicity_check,
    semigroup_residual,
};
use halfspace::selberg_transform::{
    decay_constant_check, nu_direct, nu_ode, nu_theta, spectral_bound_report,
};
use halfspace::Point;

/// Version tag carried by every JSON report.
const SCHEMA_VERSION: u32 = 1;

/// Acceptance threshold for Monte Carlo z-scores.
const Z_LIMIT: f64 = 4.0;

#[derive(Parser)]
#[command(
    name = "halfspace",
    version,
    about = "Orbital counting, heat kernels, and ball-average transforms on hyperbolic space"
)]
struct Cli {
    /// TOML file with defaults for `seed`, `threads`, `epsilon`, `samples`.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (results are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Optional defaults loaded from `--config`.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    epsilon: Option<f64>,
    samples: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Route {
    Direct,
    Theta,
    Ode,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Count orbit points of a group inside a hyperbolic ball.
    Count {
        /// Bundled group name or path to a group JSON file.
        #[arg(long)]
        group: String,
        /// Ball center coordinates, comma-separated (default: basepoint).
        #[arg(long)]
        x: Option<String>,
        /// Orbit basepoint coordinates (default: same as the center).
        #[arg(long)]
        y: Option<String>,
        /// Ball radius.
        #[arg(long)]
        rho: f64,
        /// Also run the unpruned reference enumeration to this word length
        /// and compare.
        #[arg(long)]
        oracle_length: Option<usize>,
    },
    /// Heat kernel values and identities (free kernel, quotient kernel,
    /// total mass, semigroup residual, time monotonicity).
    Heat {
        /// Heat time.
        #[arg(long)]
        t: f64,
        /// Distance for the free kernel (prints value and log-gradient).
        #[arg(long)]
        rho: Option<f64>,
        /// Group for the quotient kernel.
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Certified tail tolerance for the quotient kernel.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Check stochastic completeness (total mass 1) at time `t`.
        #[arg(long)]
        mass: bool,
        /// Check the semigroup identity: `t1,t2,distance`.
        #[arg(long, value_name = "T1,T2,D")]
        semigroup: Option<String>,
        /// Check on-diagonal monotonicity of the quotient kernel along this
        /// time grid (requires --group).
        #[arg(long, value_name = "GRID")]
        monotonicity: Option<String>,
    },
    /// Eigenvalue `ν_ρ(λ)` of the ball-average operator.
    Nu {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
        /// Computation route (default: all three, with agreement check).
        #[arg(long, value_enum, default_value = "all")]
        route: Route,
    },
    /// Monte Carlo and finite-difference checks of the mean-value
    /// identities for Laplace eigenfunctions.
    VerifyDelsarte {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
        /// Eigenfunction evaluation point (default: basepoint).
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Mesh for the discrete-Laplacian eigenfunction check.
        #[arg(long, default_value = "1e-2")]
        mesh: f64,
    },
    /// Asymptotic-regime sweeps for `ν_ρ` along a radius grid.
    VerifySpectral {
        #[arg(long)]
        dim: usize,
        /// Regime-splitting exponent β in the cut `β ln ρ / ρ`.
        #[arg(long)]
        beta: f64,
        #[arg(long, value_name = "GRID")]
        rho_grid: String,
        /// λ samples per regime per radius.
        #[arg(long, default_value = "48")]
        lambda_resolution: usize,
        /// Also fit the two-regime exponential constants at this `λ0`.
        #[arg(long)]
        lambda0: Option<f64>,
    },
    /// Sandwich-inequality sweep for the orbital counting function.
    Sandwich {
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, value_name = "GRID")]
        delta_grid: String,
        #[arg(long, value_name = "GRID")]
        rho_grid: String,
        /// Pointwise configurations per (δ, ρ) pair.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Counting table relating `N`, the quotient heat kernel, and the ball
    /// volume; emits CSV.
    Experiment {
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long, value_name = "GRID")]
        rho_grid: String,
        /// Certified tail tolerance for the heat values.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Output CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orbit growth exponent along a radius grid.
    Exponent {
        #[arg(long)]
        group: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long, value_name = "GRID")]
        rho_grid: String,
    },
}

fn parse_point(text: &str) -> anyhow::Result<Point> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid point `{text}`"))?;
    Ok(Point::new(&coords)?)
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("invalid grid `{text}`"))?;
    if grid.is_empty() {
        bail!("empty grid `{text}`");
    }
    Ok(grid)
}

fn point_or_basepoint(text: &Option<String>, dim: usize) -> anyhow::Result<Point> {
    match text {
        Some(t) => parse_point(t),
        None => Ok(Point::basepoint(dim)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Execute the selected command. `Ok(true)` means every requested check
/// passed (or the command was purely informational).
fn run(cli: Cli) -> anyhow::Result<bool> {
    let config: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(config.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed_default = config.seed.unwrap_or(0);
    let epsilon_default = config.epsilon.unwrap_or(1e-10);
    let samples_default = config.samples.unwrap_or(100_000);

    match cli.command {
        Command::Count {
            group,
            x,
            y,
            rho,
            oracle_length,
        } => {
            let g = resolve_group(&group)?;
            let x = point_or_basepoint(&x, g.dimension())?;
            let y = match &y {
                Some(t) => parse_point(t)?,
                None => x,
            };
            let ball = enumerate_orbit(&g, &x, &y, rho)?;
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "count",
                "group": g.name(),
                "rho": rho,
                "count": ball.points.len(),
                "complete": ball.complete,
            });
            let mut passed = true;
            if let Some(len) = oracle_length {
                let oracle = orbital_count_oracle(&g, &x, &y, rho, len)?;
                report["oracle_count"] = json!(oracle);
                report["oracle_agrees"] = json!(oracle == ball.points.len());
                passed = oracle == ball.points.len();
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(passed)
        }

        Command::Heat {
            t,
            rho,
            group,
            x,
            y,
            epsilon,
            mass,
            semigroup,
            monotonicity,
        } => {
            let epsilon = epsilon.unwrap_or(epsilon_default);
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "heat",
                "t": t,
            });
            let mut passed = true;
            if let Some(rho) = rho {
                report["free"] = json!({
                    "rho": rho,
                    "value": heat_kernel_h3(rho, t)?,
                });
                if rho > 0.0 {
                    report["free"]["log_gradient"] = json!(log_heat_gradient_h3(rho, t)?);
                }
            }
            if let Some(group) = &group {
                let g = resolve_group(group)?;
                let x = point_or_basepoint(&x, g.dimension())?;
                let y = match &y {
                    Some(t) => parse_point(t)?,
                    None => x,
                };
                let hv = heat_kernel_quotient(&g, &x, &y, t, epsilon)?;
                report["quotient"] = json!({
                    "group": g.name(),
                    "value": hv.value,
                    "tail_bound": hv.tail_bound,
                    "epsilon": epsilon,
                });
                if let Some(grid) = &monotonicity {
                    let grid = parse_grid(grid)?;
                    let mono = monotonicity_check(&g, &x, &grid, epsilon)?;
                    passed &= mono.non_increasing;
                    report["monotonicity"] = serde_json::to_value(&mono)?;
                }
            } else if monotonicity.is_some() {
                bail!("--monotonicity requires --group");
            }
            if mass {
                let residual = mass_residual(t)?;
                passed &= residual < 1e-8;
                report["mass_residual"] = json!(residual);
            }
            if let Some(spec) = &semigroup {
                let parts = parse_grid(spec)?;
                if parts.len() != 3 {
                    bail!("--semigroup expects `t1,t2,distance`");
                }
                let residual = semigroup_residual(parts[0], parts[1], parts[2])?;
                passed &= residual < 1e-4;
                report["semigroup_residual"] = json!(residual);
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(passed)
        }

        Command::Nu {
            dim,
            lambda,
            rho,
            route,
        } => {
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "nu",
                "dim": dim,
                "lambda": lambda,
                "rho": rho,
            });
            let mut passed = true;
            match route {
                Route::Direct => {
                    report["direct"] = serde_json::to_value(nu_direct(dim, lambda, rho)?)?
                }
                Route::Theta => {
                    report["theta"] = serde_json::to_value(nu_theta(dim, lambda, rho)?)?
                }
                Route::Ode => report["ode"] = serde_json::to_value(nu_ode(dim, lambda, rho)?)?,
                Route::All => {
                    let a = nu_direct(dim, lambda, rho)?;
                    let b = nu_theta(dim, lambda, rho)?;
                    let c = nu_ode(dim, lambda, rho)?;
                    let spread = (a.nu - b.nu)
                        .abs()
                        .max((a.nu - c.nu).abs())
                        .max((b.nu - c.nu).abs());
                    passed = spread < 1e-6;
                    report["direct"] = serde_json::to_value(a)?;
                    report["theta"] = serde_json::to_value(b)?;
                    report["ode"] = serde_json::to_value(c)?;
                    report["route_spread"] = json!(spread);
                    report["routes_agree"] = json!(passed);
                }
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(passed)
        }

        Command::VerifyDelsarte {
            dim,
            lambda,
            rho,
            x,
            samples,
            seed,
            mesh,
        } => {
            let samples = samples.unwrap_or(samples_default);
            let seed = seed.unwrap_or(seed_default);
            let x = point_or_basepoint(&x, dim)?;
            let sphere = spherical_mean_check(dim, lambda, &x, rho, samples, seed)?;
            let ball = delsarte_ball_check(dim, lambda, &x, rho, samples, seed.wrapping_add(1))?;
            let laplacian = laplacian_eigenfunction_check(dim, lambda, &x, mesh)?;
            let mut passed = sphere.max_z() < Z_LIMIT
                && ball.max_z() < Z_LIMIT
                && (laplacian.order - 2.0).abs() < 0.5;
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "verify-delsarte",
                "dim": dim,
                "lambda": lambda,
                "rho": rho,
                "sphere_mean": serde_json::to_value(&sphere)?,
                "ball_mean": serde_json::to_value(&ball)?,
                "laplacian": serde_json::to_value(&laplacian)?,
                "z_limit": Z_LIMIT,
            });
            if dim == 3 {
                let ode = radial_ode_solve(3, lambda, rho)?.evaluate(rho)?;
                let closed = radial_closed_form_h3(lambda, rho)?;
                let err = (ode - closed).abs();
                passed &= err < 1e-8;
                report["closed_form_error"] = json!(err);
            }
            report["passed"] = json!(passed);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(passed)
        }

        Command::VerifySpectral {
            dim,
            beta,
            rho_grid,
            lambda_resolution,
            lambda0,
        } => {
            let grid = parse_grid(&rho_grid)?;
            let sweep = spectral_bound_report(dim, beta, &grid, lambda_resolution)?;
            let mut passed = sweep.small_lambda_decreasing()
                && sweep.small_lambda_below_envelope(3.0)
                && sweep.large_lambda_bounded_within(2.0);
            let mut report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "verify-spectral",
                "report": serde_json::to_value(&sweep)?,
                "small_lambda_decreasing": sweep.small_lambda_decreasing(),
                "small_lambda_below_3x_envelope": sweep.small_lambda_below_envelope(3.0),
                "large_lambda_bounded_within_2x": sweep.large_lambda_bounded_within(2.0),
            });
            if let Some(lambda0) = lambda0 {
                let fit = decay_constant_check(dim, lambda0, &grid)?;
                passed &= fit.stable();
                report["constants"] = serde_json::to_value(&fit)?;
                report["constants_stable"] = json!(fit.stable());
            }
            report["passed"] = json!(passed);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(passed)
        }

        Command::Sandwich {
            group,
            x,
            y,
            delta_grid,
            rho_grid,
            samples,
            seed,
        } => {
            let g = resolve_group(&group)?;
            let x = point_or_basepoint(&x, g.dimension())?;
            let y = match &y {
                Some(t) => parse_point(t)?,
                None => x,
            };
            let deltas = parse_grid(&delta_grid)?;
            let rhos = parse_grid(&rho_grid)?;
            let samples = samples.unwrap_or(25);
            let seed = seed.unwrap_or(seed_default);
            let report = sandwich_suite(&g, &x, &y, &deltas, &rhos, samples, seed)?;
            let passed = report.pointwise_violations == 0 && report.averaged_violations == 0;
            let envelope = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "sandwich",
                "group": g.name(),
                "seed": seed,
                "report": serde_json::to_value(&report)?,
                "passed": passed,
            });
            println!("{}", serde_json::to_string_pretty(&envelope)?);
            Ok(passed)
        }

        Command::Experiment {
            group,
            x,
            rho_grid,
            epsilon,
            out,
        } => {
            let g = resolve_group(&group)?;
            let x = point_or_basepoint(&x, g.dimension())?;
            let grid = parse_grid(&rho_grid)?;
            let epsilon = epsilon.unwrap_or(epsilon_default);
            let rows = counting_table(&g, &x, &grid, epsilon)?;
            match &out {
                Some(path) => {
                    let file = File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&rows, file)?;
                    eprintln!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(true)
        }

        Command::Exponent { group, x, rho_grid } => {
            let g = resolve_group(&group)?;
            let x = point_or_basepoint(&x, g.dimension())?;
            let grid = parse_grid(&rho_grid)?;
            let report = exponent_sweep(&g, &x, &grid)?;
            let envelope = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "exponent",
                "group": g.name(),
                "report": serde_json::to_value(&report)?,
            });
            println!("{}", serde_json::to_string_pretty(&envelope)?);
            Ok(true)
        }
    }
}
