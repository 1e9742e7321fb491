//! Front end of the `szego` tool: batch computation of monomial norms,
//! partial Szegő kernels and their expansion coefficients for a configured
//! Reinhardt domain.

pub mod config;
pub mod tables;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use szego_core::asymptotics::{expansion_report, ln_a0_laplacian, LEADING_POWER_NOTICE};
use szego_core::measure::BoundaryIntegrator;
use szego_core::szego::{interior_rescale, partial_szego, InteriorRescale};
use szego_core::{
    AsymptoticCoefficients, ComplexPoint, ExpansionReport, NormTable, ReinhardtDomain, Route,
};

use config::{ConfigError, Overrides, RouteChoice, RunConfig};
use tables::{load_or_compute, Source, TOOL_VERSION};

/// Samples used by the domain validation checks.
const VALIDATION_SAMPLES: usize = 64;

#[derive(Parser)]
#[command(
    name = "szego",
    version,
    about = "Partial Szegő kernels of homogeneous Reinhardt domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check homogeneity, monotonicity, plurisubharmonicity and curvature.
    Validate(CommonArgs),
    /// Compute (or reuse) monomial norm tables for every k in range.
    Norms(CommonArgs),
    /// Evaluate the diagonal kernel at the configured point.
    Szego(CommonArgs),
    /// Closed-form expansion coefficients at the configured point.
    Coeffs(CommonArgs),
    /// Fit the expansion from computed kernels and compare with closed forms.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    route: Option<RouteChoice>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress and summary lines; files and JSON are unaffected.
    #[arg(long, short)]
    quiet: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig, Failure> {
        let overrides = Overrides {
            k_min: self.k_min,
            k_max: self.k_max,
            nodes: self.nodes,
            route: self.route,
            workers: self.workers,
            out: self.out.clone(),
        };
        Ok(RunConfig::load(&self.config, &overrides)?)
    }
}

/// Process outcome other than success, each with its own exit code.
#[derive(Debug)]
enum Failure {
    /// A check or verification did not pass: exit 1.
    Check(String),
    /// Bad configuration or arguments: exit 2.
    Config(String),
    /// A quadrature or root solve did not converge: exit 3.
    NonConvergence(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::NonConvergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Config(m) | Failure::NonConvergence(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<szego_core::Error> for Failure {
    fn from(e: szego_core::Error) -> Self {
        use szego_core::Error as E;
        match e {
            E::QuadratureNonConvergence { .. } | E::RootNonConvergence { .. } => {
                Failure::NonConvergence(e.to_string())
            }
            E::Syntax { .. }
            | E::VariableOutOfRange { .. }
            | E::DimensionMismatch { .. }
            | E::InvalidDomain(_)
            | E::InvalidArgument(_) => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => run(a, validate),
        Command::Norms(a) => run(a, norms),
        Command::Szego(a) => run(a, szego),
        Command::Coeffs(a) => run(a, coeffs),
        Command::Verify(a) => run(a, verify),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("szego: {}", f.message());
            f.exit_code()
        }
    }
}

/// Shared setup: configuration, worker pool and domain.
struct Context {
    config: RunConfig,
    domain: ReinhardtDomain,
    hash: String,
    quiet: bool,
}

impl Context {
    fn progress(&self, line: std::fmt::Arguments<'_>) {
        if !self.quiet {
            eprintln!("{line}");
        }
    }

    fn summary(&self, line: std::fmt::Arguments<'_>) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

fn run(args: &CommonArgs, command: fn(&Context) -> Result<(), Failure>) -> Result<(), Failure> {
    let config = args.load()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Failure::Config(format!("worker pool: {e}")))?;
    let domain = config
        .build_domain()
        .map_err(|e| Failure::Config(format!("domain: {e}")))?;
    let hash = config.config_hash(&domain);
    let ctx = Context {
        config,
        domain,
        hash,
        quiet: args.quiet,
    };
    pool.install(|| command(&ctx))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Check(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

/// Metadata lines that start every CSV the tool writes.
fn csv_preamble(config_hash: &str) -> String {
    format!("# tool_version: {TOOL_VERSION}\n# config_hash: {config_hash}\n")
}

fn output_dir(config: &RunConfig) -> Result<&Path, Failure> {
    fs::create_dir_all(&config.out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", config.out.display())))?;
    Ok(&config.out)
}

fn validate(ctx: &Context) -> Result<(), Failure> {
    let report = ctx.domain.validate(VALIDATION_SAMPLES);
    print_json(&json!({
        "passed": report.passed(),
        "failures": report.failures(),
        "checks": report.checks,
    }))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "domain validation failed: {}",
            report.failures().join(", ")
        )))
    }
}

/// Norm tables for every route and k, reusing files in the output dir.
fn all_tables(ctx: &Context) -> Result<Vec<(Route, Vec<NormTable>)>, Failure> {
    let dir = output_dir(&ctx.config)?;
    let mut out = Vec::new();
    for route in ctx.config.route.routes() {
        let integrator = BoundaryIntegrator::new(&ctx.domain, route, ctx.config.quadrature)?;
        let mut tables = Vec::new();
        for k in ctx.config.ks() {
            let (table, source) = load_or_compute(dir, &integrator, k, &ctx.hash)?;
            let origin = match source {
                Source::Cache => "cached",
                Source::Computed => "computed",
            };
            ctx.progress(format_args!(
                "{} k={k}: {} norms {origin}, max rel err {:.2e}",
                route.name(),
                table.len(),
                table.max_rel_err()
            ));
            if let Some((index, error)) = table.failures().first() {
                return Err(Failure::from(error.clone())
                    .with_context(&format!("{} norm of {index} at k = {k}", route.name())));
            }
            tables.push(table);
        }
        out.push((route, tables));
    }
    if let [(_, boundary), (_, projective)] = out.as_slice() {
        let (summary, worst) = consistency_summary(boundary, projective, &ctx.hash);
        write_file(&dir.join("norms_consistency.csv"), &summary)?;
        ctx.progress(format_args!(
            "route consistency: max |log-norm difference| = {worst:.3e}"
        ));
    }
    Ok(out)
}

impl Failure {
    fn with_context(self, context: &str) -> Self {
        match self {
            Failure::Check(m) => Failure::Check(format!("{context}: {m}")),
            Failure::Config(m) => Failure::Config(format!("{context}: {m}")),
            Failure::NonConvergence(m) => Failure::NonConvergence(format!("{context}: {m}")),
        }
    }
}

/// Largest `|log‖x^J‖²_boundary − log‖x^J‖²_projective|` per k.
fn consistency_summary(
    boundary: &[NormTable],
    projective: &[NormTable],
    config_hash: &str,
) -> (String, f64) {
    let mut text = csv_preamble(config_hash);
    text.push_str("k,count,max_abs_log_diff\n");
    let mut worst = 0.0f64;
    for (b, p) in boundary.iter().zip(projective) {
        let diff = b
            .entries()
            .filter_map(|(index, e)| p.get(index).map(|q| (e.log_norm - q.log_norm).abs()))
            .fold(0.0f64, f64::max);
        worst = worst.max(diff);
        let _ = writeln!(text, "{},{},{:e}", b.k(), b.len(), diff);
    }
    (text, worst)
}

fn norms(ctx: &Context) -> Result<(), Failure> {
    let tables = all_tables(ctx)?;
    for (route, list) in &tables {
        let count: usize = list.iter().map(NormTable::len).sum();
        ctx.summary(format_args!(
            "{}: {count} norms over {} degrees",
            route.name(),
            list.len()
        ));
    }
    Ok(())
}

/// Evaluation point for kernels: boundary projection of the configured point
/// plus the rescale back to it when the point is interior.
struct KernelPoint {
    boundary: ComplexPoint,
    rescale: Option<InteriorRescale>,
}

fn kernel_point(ctx: &Context) -> Result<KernelPoint, Failure> {
    let x = ctx.config.point()?;
    if x.dim() != ctx.domain.dim() {
        return Err(Failure::Config(format!(
            "point has {} coordinates, the domain needs {}",
            x.dim(),
            ctx.domain.dim()
        )));
    }
    let rescale = interior_rescale(&ctx.domain, &x)?;
    if (rescale.rho - 1.0).abs() <= szego_core::asymptotics::BOUNDARY_TOL {
        return Ok(KernelPoint {
            boundary: x,
            rescale: None,
        });
    }
    if rescale.rho > 1.0 {
        return Err(Failure::Config(format!(
            "point lies outside the domain: rho = {}",
            rescale.rho
        )));
    }
    Ok(KernelPoint {
        boundary: rescale.projection.clone(),
        rescale: Some(rescale),
    })
}

fn rescale_json(r: &Option<InteriorRescale>) -> serde_json::Value {
    match r {
        None => serde_json::Value::Null,
        Some(r) => json!({
            "rho": r.rho,
            "projection_re": r.projection.coords().iter().map(|c| c.re).collect::<Vec<_>>(),
            "projection_im": r.projection.coords().iter().map(|c| c.im).collect::<Vec<_>>(),
            "log_factor_per_k": 2.0 / r.l * r.rho.ln(),
        }),
    }
}

fn kernels(ctx: &Context, point: &KernelPoint) -> Result<Vec<(Route, Vec<f64>)>, Failure> {
    all_tables(ctx)?
        .into_iter()
        .map(|(route, tables)| {
            let values = tables
                .iter()
                .map(|t| partial_szego(&ctx.domain, t.k(), &point.boundary, t))
                .collect::<Result<Vec<f64>, _>>()?;
            Ok((route, values))
        })
        .collect()
}

fn szego(ctx: &Context) -> Result<(), Failure> {
    let point = kernel_point(ctx)?;
    let ks = ctx.config.ks();
    let mut csv = csv_preamble(&ctx.hash);
    csv.push_str("route,k,pi_k_boundary,pi_k\n");
    let mut routes = Vec::new();
    for (route, values) in kernels(ctx, &point)? {
        let at_point: Vec<f64> = ks
            .iter()
            .zip(&values)
            .map(|(&k, v)| match &point.rescale {
                Some(r) => (r.log_factor(k) + v.ln()).exp(),
                None => *v,
            })
            .collect();
        for ((k, b), p) in ks.iter().zip(&values).zip(&at_point) {
            let _ = writeln!(csv, "{},{k},{b:e},{p:e}", route.name());
        }
        routes.push(json!({
            "route": route.name(),
            "ks": ks,
            "pi_k_boundary": values,
            "pi_k": at_point,
        }));
    }
    write_file(&output_dir(&ctx.config)?.join("szego.csv"), &csv)?;
    print_json(&json!({
        "tool_version": TOOL_VERSION,
        "config_hash": ctx.hash,
        "interior_rescale": rescale_json(&point.rescale),
        "routes": routes,
    }))
}

fn coeffs(ctx: &Context) -> Result<(), Failure> {
    let point = kernel_point(ctx)?;
    let c = AsymptoticCoefficients::at(&ctx.domain, &point.boundary)?;
    let laplacian = ln_a0_laplacian(&ctx.domain, &point.boundary)?;
    print_json(&json!({
        "tool_version": TOOL_VERSION,
        "a0": c.a0,
        "a1": c.a1,
        "leading_power": c.leading_power,
        "laplacian_ln_a0": {
            "jet": laplacian.jet,
            "finite_difference": laplacian.finite_difference,
        },
        "interior_rescale": rescale_json(&point.rescale),
        "warnings": [LEADING_POWER_NOTICE],
    }))
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    tool_version: &'a str,
    config_hash: &'a str,
    route: &'a str,
    passed: bool,
    failures: Vec<String>,
    interior_rescale: serde_json::Value,
    #[serde(flatten)]
    expansion: &'a ExpansionReport,
}

/// NaN errors count as failures.
fn exceeds(value: f64, tol: f64) -> bool {
    value.is_nan() || value > tol
}

fn verify(ctx: &Context) -> Result<(), Failure> {
    let point = kernel_point(ctx)?;
    let closed = AsymptoticCoefficients::at(&ctx.domain, &point.boundary)?;
    let ks = ctx.config.ks();
    let n = ctx.domain.n();
    let dir = output_dir(&ctx.config)?.to_path_buf();
    let mut failed = Vec::new();
    for (route, values) in kernels(ctx, &point)? {
        let report = expansion_report(&closed, &ks, values)?;
        let mut failures = Vec::new();
        let power_err = (report.fitted_power - n as f64).abs();
        if exceeds(power_err, ctx.config.power_tol) {
            failures.push(format!(
                "fitted power {:.6} differs from {n} by more than {}",
                report.fitted_power, ctx.config.power_tol
            ));
        }
        if exceeds(report.rel_err_a0, ctx.config.a0_tol) {
            failures.push(format!(
                "a0 relative error {:.3e} exceeds {}",
                report.rel_err_a0, ctx.config.a0_tol
            ));
        }
        if let Some(tol) = ctx.config.a1_tol {
            if exceeds(report.rel_err_a1, tol) {
                failures.push(format!(
                    "a1 relative error {:.3e} exceeds {tol}",
                    report.rel_err_a1
                ));
            }
        }
        let json = VerifyReport {
            tool_version: TOOL_VERSION,
            config_hash: &ctx.hash,
            route: route.name(),
            passed: failures.is_empty(),
            failures: failures.clone(),
            interior_rescale: rescale_json(&point.rescale),
            expansion: &report,
        };
        let text =
            serde_json::to_string_pretty(&json).map_err(|e| Failure::Check(e.to_string()))?;
        write_file(
            &dir.join(format!("verify_{}.json", route.name())),
            &(text + "\n"),
        )?;

        let mut csv = csv_preamble(&ctx.hash);
        let _ = writeln!(csv, "# route: {}", route.name());
        csv.push_str("k,pi_k,a0*k^n + a1*k^(n-1),residual\n");
        for p in &report.residual_curve {
            let _ = writeln!(csv, "{},{:e},{:e},{:e}", p.k, p.pi_k, p.model, p.residual);
        }
        write_file(&dir.join(format!("verify_{}.csv", route.name())), &csv)?;

        ctx.summary(format_args!(
            "{}: power {:.6}, a0 {:.9e} (closed {:.9e}, rel {:.2e}), a1 {:.9e} (closed {:.9e}, rel {:.2e}): {}",
            route.name(),
            report.fitted_power,
            report.fitted_a0,
            report.closed_a0,
            report.rel_err_a0,
            report.fitted_a1,
            report.closed_a1,
            report.rel_err_a1,
            if failures.is_empty() { "pass" } else { "FAIL" }
        ));
        failed.extend(
            failures
                .into_iter()
                .map(|f| format!("{}: {f}", route.name())),
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("; ")))
    }
}
