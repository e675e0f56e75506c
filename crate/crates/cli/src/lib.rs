//! Configuration-driven pipeline runner: wires the radial workbench modules
//! into reproducible runs with a machine-readable report.
//!
//! Exit-code contract: 0 success, 1 completed with failed certifications,
//! 2 configuration/hypothesis rejection, 3 numeric failure.

use nls_core::approx::{self, ApproximateSolution};
use nls_core::decay;
use nls_core::functional::{self, FunctionalContext, LandscapeConstants, Variant};
use nls_core::greens::{self, OmegaShift};
use nls_core::grid::{GridParams, RadialGrid, TestFunction};
use nls_core::problem::{self, ProblemSpec, Regime};
use nls_core::solver::{self, SolutionBundle};
use nls_core::specfun::{green_kernel, KernelParams};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypothesis rejected: {0}")]
    Hypothesis(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Hypothesis(_) => 2,
            RunError::Numeric(_) | RunError::Io(_) => 3,
        }
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numeric(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Construct,
    ConstructU0,
    Landscape,
    Regularity,
    Decay,
    Sweep,
    Kernels,
    Mapcheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_nodes_per_decade")]
    pub nodes_per_decade: usize,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_nodes_per_decade() -> usize {
    300
}
fn default_r_min() -> f64 {
    1e-6
}
fn default_r_max() -> f64 {
    40.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes_per_decade: default_nodes_per_decade(),
            r_min: default_r_min(),
            r_max: default_r_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_grad_tol")]
    pub gradient: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_grad_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    5000
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: default_grad_tol(),
            max_iters: default_max_iters(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelsConfig {
    pub n: usize,
    pub omega: f64,
    #[serde(default = "default_kernel_points")]
    pub points: usize,
}

fn default_kernel_points() -> usize {
    400
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapRow {
    pub q: f64,
    pub r: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// inline problem specification (preferred) or a path to one
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub problem_path: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub out_dir: String,
    #[serde(default)]
    pub seed: u64,
    /// positive-part functional for the positivity pipeline
    #[serde(default)]
    pub positive_part: bool,
    #[serde(default)]
    pub sphere_directions: Option<usize>,
    #[serde(default)]
    pub kernels: Option<KernelsConfig>,
    #[serde(default)]
    pub sweep_ps: Option<Vec<f64>>,
    #[serde(default)]
    pub mapcheck_rows: Option<Vec<MapRow>>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, RunError> {
        serde_json::from_str(s).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn resolve_problem(&self) -> Result<ProblemSpec, RunError> {
        let spec = if let Some(spec) = &self.problem {
            spec.clone()
        } else if let Some(path) = &self.problem_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {path}: {e}")))?;
            ProblemSpec::from_json(&text).map_err(|e| RunError::Config(e.to_string()))?
        } else {
            return Err(RunError::Config("no problem specification given".into()));
        };
        spec.check_well_formed()
            .map_err(|e| RunError::Hypothesis(e.to_string()))?;
        Ok(spec)
    }

    fn canonical_hash(&self) -> String {
        // the hash identifies the mathematical run; the output location is
        // environment plumbing and stays out of it
        let mut canonical = self.clone();
        canonical.out_dir = String::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let mut h = Sha256::new();
        h.update(&bytes);
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One pass/fail line in the report, with a stable machine-readable id.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check_id: String,
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

impl Check {
    fn new(id: &str, pass: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            check_id: id.to_string(),
            pass,
            value,
            detail: detail.into(),
        }
    }
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub report_path: PathBuf,
    pub report_json: String,
}

pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let (payload, checks, csvs) = match config.mode {
        Mode::Kernels => kernels_mode(config)?,
        Mode::Mapcheck => mapcheck_mode(config)?,
        Mode::ConstructU0 => construct_u0_mode(config)?,
        Mode::Landscape => landscape_mode(config)?,
        Mode::Construct | Mode::Decay => construct_mode(config)?,
        Mode::Regularity => regularity_mode(config)?,
        Mode::Sweep => sweep_mode(config)?,
    };
    let all_pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "mode": config.mode,
        "manifest": {
            "config_hash": config.canonical_hash(),
            "crate_version": env!("CARGO_PKG_VERSION"),
            "seed": config.seed,
        },
        "checks": checks,
        "pass": all_pass,
        "payload": payload,
    });
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    let report_path = Path::new(&config.out_dir).join("report.json");
    std::fs::write(&report_path, &report_json)?;
    for (name, content) in csvs {
        std::fs::write(Path::new(&config.out_dir).join(name), content)?;
    }
    Ok(RunOutcome {
        exit_code: if all_pass { 0 } else { 1 },
        report_path,
        report_json,
    })
}

type ModeOutput = (serde_json::Value, Vec<Check>, Vec<(String, String)>);

/// tail-rate fit window: past the midfield, clear of the far boundary
fn decay_window(r_max: f64) -> (f64, f64) {
    (0.375 * r_max, r_max - 6.0)
}

fn build_grid(config: &RunConfig, n: usize, pins: &[f64]) -> Arc<RadialGrid> {
    let mut params = GridParams {
        n,
        r_min: config.grid.r_min,
        nodes_per_decade: config.grid.nodes_per_decade,
        r_max: config.grid.r_max,
        pins: vec![],
    };
    for &p in pins {
        params = params.with_pin(p);
    }
    RadialGrid::new(params)
}

fn kernels_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let kc = config
        .kernels
        .as_ref()
        .ok_or_else(|| RunError::Config("kernels mode needs a kernels section".into()))?;
    let params = KernelParams::new(kc.n, kc.omega).map_err(|e| RunError::Config(e.to_string()))?;
    let mut csv = String::from("r,value\n");
    let mut worst_closed_form: f64 = 0.0;
    let (lo, hi) = (1e-4f64, 30.0f64);
    for k in 0..kc.points {
        let t = k as f64 / (kc.points - 1) as f64;
        let r = lo * (hi / lo).powf(t);
        let g = green_kernel(params, r).map_err(numeric)?;
        csv.push_str(&format!("{r},{g}\n"));
        let closed = match kc.n {
            3 => Some((-kc.omega.sqrt() * r).exp() / (4.0 * std::f64::consts::PI * r)),
            1 => Some((-kc.omega.sqrt() * r).exp() / (2.0 * kc.omega.sqrt())),
            _ => None,
        };
        if let Some(c) = closed {
            worst_closed_form = worst_closed_form.max((g - c).abs() / c);
        }
    }
    let mut checks = vec![];
    if kc.n == 1 || kc.n == 3 {
        checks.push(Check::new(
            "kernel.closed_form",
            worst_closed_form <= 1e-10,
            worst_closed_form,
            "max relative deviation from the closed-form kernel",
        ));
    }
    // scaling identity G_ω(r) = ω^{(n-2)/2} G_1(√ω r) on a deterministic sample
    let mut worst_scaling: f64 = 0.0;
    for k in 0..50 {
        let r = 0.01 + 0.6 * k as f64;
        let lhs = green_kernel(params, r).map_err(numeric)?;
        let rhs = kc.omega.powf((kc.n as f64 - 2.0) / 2.0)
            * green_kernel(KernelParams::new(kc.n, 1.0).unwrap(), kc.omega.sqrt() * r)
                .map_err(numeric)?;
        worst_scaling = worst_scaling.max((lhs - rhs).abs() / rhs.abs());
    }
    checks.push(Check::new(
        "kernel.scaling_identity",
        worst_scaling <= 1e-12,
        worst_scaling,
        "max relative defect of the omega-scaling identity",
    ));
    Ok((
        json!({"n": kc.n, "omega": kc.omega}),
        checks,
        vec![("kernel.csv".to_string(), csv)],
    ))
}

fn mapcheck_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let rows = config
        .mapcheck_rows
        .clone()
        .unwrap_or_else(default_mapcheck_rows);
    let spec = config.resolve_problem()?;
    let grid = build_grid(config, spec.n, &[]);
    let sigma = problem::estimate_sigma(&spec, &grid).map_err(numeric)?;
    let omega = sigma.sigma + 1.0;
    let mut csv = String::from("q,r,k,s,ratio,bound,admissible,pass,reason\n");
    let mut checks = vec![];
    let mut table = vec![];
    for (idx, row) in rows.iter().enumerate() {
        match greens::mapping_property_check(&grid, omega, row.q, row.r, row.k, 6, config.seed + idx as u64)
        {
            Ok(case) => {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},true,{},\n",
                    row.q,
                    row.r,
                    row.k,
                    case.s,
                    case.max_ratio,
                    case.young_bound.map(|b| b.to_string()).unwrap_or_default(),
                    case.pass
                ));
                checks.push(Check::new(
                    &format!("mapcheck.row{idx}.admissible"),
                    case.pass,
                    case.max_ratio,
                    format!("(q={}, r={}, k={}) ratio vs bound", row.q, row.r, row.k),
                ));
                table.push(json!({"row": idx, "case": case}));
            }
            Err(greens::GreensError::Inadmissible(reason)) => {
                csv.push_str(&format!(
                    "{},{},{},,,,false,true,{}\n",
                    row.q, row.r, row.k, reason
                ));
                table.push(json!({"row": idx, "rejected": reason}));
            }
            Err(e) => return Err(numeric(e)),
        }
    }
    Ok((
        json!({"rows": table, "omega": omega}),
        checks,
        vec![("mapcheck.csv".to_string(), csv)],
    ))
}

/// The shipped mapping test matrix: admissible rows across all three cases
/// plus three inadmissible rows, each violating a named condition.
pub fn default_mapcheck_rows() -> Vec<MapRow> {
    vec![
        MapRow { q: 2.0, r: 2.0, k: 0 },      // s = 1, Young bound 1/omega
        MapRow { q: 2.0, r: 2.5, k: 0 },      // s in (1, 3/2)
        MapRow { q: 2.0, r: 6.0, k: 1 },      // s = n/(n-1) marginal case via q in (1, n)
        MapRow { q: 2.0, r: 2.0, k: 1 },      // s = 1
        MapRow { q: 2.0, r: 2.0, k: 2 },      // q = r in (1, ∞)
        MapRow { q: 1.0, r: 3.0, k: 0 },      // s = 3 = n/(n-2) with q = 1: rejected
        MapRow { q: 1.0, r: 1.5, k: 1 },      // s = 3/2 = n/(n-1) with q = 1: rejected
        MapRow { q: 2.0, r: 3.0, k: 2 },      // q != r: rejected
    ]
}

/// validate, normalize Γ(0) to 1, pin the gluing radius, build u₀;
/// returns the solution scale mapping rescaled solutions back
fn supercritical_setup(
    config: &RunConfig,
) -> Result<(ProblemSpec, Arc<RadialGrid>, ApproximateSolution, f64), RunError> {
    let raw = config.resolve_problem()?;
    if raw.mode != Regime::Supercritical {
        return Err(RunError::Hypothesis(
            "this mode needs a supercritical problem".into(),
        ));
    }
    let report = problem::validate_hypotheses(&raw, 128).map_err(numeric)?;
    if !report.pass {
        return Err(RunError::Hypothesis(format!(
            "growth hypotheses rejected: {report:?}"
        )));
    }
    let (spec, scale) = problem::rescale_gamma(&raw).map_err(|e| RunError::Hypothesis(e.to_string()))?;
    let rho = approx::choose_rho(spec.n);
    let grid = build_grid(config, spec.n, &[rho]);
    let u0 = approx::assemble_u0(spec.n, spec.p, &grid).map_err(numeric)?;
    Ok((spec, grid, u0, scale))
}

fn construct_u0_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let (spec, _grid, u0, _scale) = supercritical_setup(config)?;
    let rates = approx::boundary_vanishing_rates(&u0, &[0.002, 0.005, 0.01, 0.02, 0.05, 0.1])
        .map_err(numeric)?;
    let checks = vec![
        Check::new("u0.enclosure", u0.cert.u2.enclosure_ok, u0.cert.u2.enclosure_margin_low, "sub/supersolution enclosure at every node"),
        Check::new("u0.ode_residual", u0.cert.u2.ode_residual <= 1e-8, u0.cert.u2.ode_residual, "plug-in residual of the exterior profile"),
        Check::new("u0.envelope", u0.cert.envelope_ok, u0.cert.envelope_worst, "pointwise power/exponential envelope"),
        Check::new("u0.continuity", u0.cert.continuity_gap <= 1e-8, u0.cert.continuity_gap, "value match at the gluing sphere"),
    ];
    let payload = json!({
        "n": spec.n, "p": spec.p,
        "c_np": u0.c_np, "rho": u0.rho, "c0": u0.c0,
        "jump": u0.jump,
        "certificate": u0.cert,
        "vanishing_rates": rates,
    });
    let csvs = vec![
        ("u0.csv".to_string(), u0.u0.to_csv_string()),
        ("u0_extension.json".to_string(), u0.u0.extension_sidecar_json()),
    ];
    Ok((payload, checks, csvs))
}

fn build_context(
    spec: &ProblemSpec,
    u0: ApproximateSolution,
    positive_part: bool,
) -> Result<FunctionalContext, RunError> {
    let variant = if positive_part {
        Variant::PositivePart
    } else {
        Variant::Signed
    };
    FunctionalContext::new(spec.clone(), u0, variant).map_err(numeric)
}

fn landscape_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let (spec, grid, u0, _scale) = supercritical_setup(config)?;
    let ctx = build_context(&spec, u0, config.positive_part)?;
    let controls = functional::LandscapeControls {
        seed: config.seed,
        ..Default::default()
    };
    let lc = functional::landscape_constants(&ctx, &controls).map_err(numeric)?;
    let dirs = config.sphere_directions.unwrap_or(200);
    let sphere = functional::sphere_check(&ctx, &lc, dirs, config.seed);
    let sigma = problem::estimate_sigma(&spec, &grid).map_err(numeric)?;
    let checks = vec![
        Check::new("landscape.m_positive", lc.m > 0.0, lc.m, "floor of J on the sphere"),
        Check::new(
            "landscape.sphere_min",
            sphere.pass,
            sphere.min_j,
            format!("min J over {} directions vs 0.95 m = {}", sphere.directions, sphere.threshold),
        ),
    ];
    let payload = json!({
        "A": lc.a, "B": lc.b, "A_p": lc.a_p, "C_p": lc.c_p, "D_p": lc.d_p,
        "r0": lc.r0, "m": lc.m, "eps_window": lc.eps_window,
        "min_J_on_sphere": sphere.min_j,
        "hardy_shell_constant": lc.hardy_shell_constant,
        "j3_dual_norm": lc.j3_dual_norm,
        "sigma": sigma.sigma,
        "sphere": sphere,
    });
    Ok((payload, checks, vec![]))
}

/// The standard battery of test functions for the distributional residual:
/// three covering the origin plus annuli across the domain.
pub fn residual_test_functions(grid: &Arc<RadialGrid>) -> Vec<(String, TestFunction)> {
    let mut out: Vec<(String, TestFunction)> = vec![
        ("origin_tight".into(), nls_core::grid::smooth_bump(grid, 0.5)),
        ("origin_mid".into(), nls_core::grid::smooth_bump(grid, 2.0)),
        ("origin_wide".into(), nls_core::grid::smooth_bump(grid, 6.0)),
    ];
    for (k, (c, w)) in [(0.8, 0.5), (1.5, 0.7), (2.5, 1.2), (4.0, 2.0), (8.0, 3.0), (14.0, 5.0), (24.0, 6.0)]
        .iter()
        .enumerate()
    {
        out.push((
            format!("annulus_{k}"),
            nls_core::grid::annulus_bump(grid, *c, *w),
        ));
    }
    out
}

struct ConstructArtifacts {
    spec: ProblemSpec,
    lc: LandscapeConstants,
    sphere: functional::SphereCheck,
    bundle: SolutionBundle,
    sigma: f64,
    solution_scale: f64,
}

fn construct_pipeline(config: &RunConfig) -> Result<(ConstructArtifacts, FunctionalContext), RunError> {
    let (spec, grid, u0, solution_scale) = supercritical_setup(config)?;
    let sigma = problem::estimate_sigma(&spec, &grid).map_err(numeric)?;
    let ctx = build_context(&spec, u0, config.positive_part)?;
    let controls = functional::LandscapeControls {
        seed: config.seed,
        ..Default::default()
    };
    let lc = functional::landscape_constants(&ctx, &controls).map_err(numeric)?;
    let dirs = config.sphere_directions.unwrap_or(200);
    let sphere = functional::sphere_check(&ctx, &lc, dirs, config.seed);
    let bundle = solver::minimize(&ctx, &lc, config.tolerances.gradient, config.tolerances.max_iters)
        .map_err(numeric)?;
    Ok((
        ConstructArtifacts {
            spec,
            lc,
            sphere,
            bundle,
            sigma: sigma.sigma,
            solution_scale,
        },
        ctx,
    ))
}

fn construct_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let (art, ctx) = construct_pipeline(config)?;
    let grid = ctx.grid.clone();
    let bundle = &art.bundle;
    let mut checks = vec![
        Check::new("construct.converged", bundle.converged, bundle.grad_norm, "gradient norm at termination"),
        Check::new(
            "construct.interior",
            bundle.u_tilde_norm_h1 < art.lc.r0 && !bundle.boundary_stuck,
            bundle.u_tilde_norm_h1,
            format!("critical point strictly inside the ball r0 = {}", art.lc.r0),
        ),
        Check::new("construct.sphere_min", art.sphere.pass, art.sphere.min_j, "landscape floor on the sphere"),
    ];
    // distributional residuals over the test-function battery
    let mut residual_rows = vec![];
    let mut worst_rel: f64 = 0.0;
    for (name, phi) in residual_test_functions(&grid) {
        let res = solver::distributional_residual(&bundle.big_u, &phi, &ctx).map_err(numeric)?;
        let u_l1_loc = grid.integrate_shell(
            &bundle.big_u.values().iter().map(|v| v.abs()).collect::<Vec<_>>(),
            grid.r_min(),
            grid.r(grid.index_at_or_below(phi.support.min(grid.r_max()))),
        );
        let scale = phi.c2_norm() * u_l1_loc.max(1e-300);
        let rel = res.abs() / scale;
        worst_rel = worst_rel.max(rel);
        residual_rows.push(json!({"phi": name, "residual": res, "scale": scale, "relative": rel}));
    }
    checks.push(Check::new(
        "construct.distributional_residual",
        worst_rel <= 1e-4,
        worst_rel,
        "max residual over the battery, relative to ‖φ‖_C² ‖U‖_L¹(supp φ)",
    ));
    // singularity and tail
    let fit = solver::singularity_fit(&bundle.big_u, (1e-5, 1e-3)).map_err(numeric)?;
    let target_slope = -2.0 / (art.spec.p - 1.0);
    checks.push(Check::new(
        "construct.singularity_slope",
        (fit.slope - target_slope).abs() <= 0.05,
        fit.slope,
        format!("log-log slope near 0 vs {target_slope}"),
    ));
    checks.push(Check::new(
        "construct.singularity_amplitude",
        (fit.amplitude - ctx.approx.c_np).abs() <= 0.05 * ctx.approx.c_np,
        fit.amplitude,
        format!("amplitude vs c_np = {}", ctx.approx.c_np),
    ));
    let tail = decay::fit_decay(&bundle.big_u, decay_window(grid.r_max())).map_err(numeric)?;
    checks.push(Check::new(
        "construct.decay_rate",
        tail.mu_hat >= 0.9 * art.sigma.sqrt(),
        tail.mu_hat,
        format!("fitted tail rate vs 0.9 sqrt(Sigma) = {}", 0.9 * art.sigma.sqrt()),
    ));
    // Agmon weighted-energy diagnostic
    let mu = 0.8 * art.sigma.sqrt();
    let agmon = decay::agmon_weighted_norm(
        &bundle.big_u,
        mu,
        (2.0 * ctx.approx.rho).max(5.0),
        grid.r_max() / 2.0 - 1.0,
        0.0,
        art.sigma,
    )
    .map_err(numeric)?;
    checks.push(Check::new(
        "construct.agmon_ratio",
        agmon.lhs <= agmon.rhs * 1.1,
        agmon.ratio,
        "weighted-energy inequality at mu = 0.8 sqrt(Sigma)",
    ));
    if config.positive_part {
        let pos = solver::positivity_check(&bundle.big_u, &ctx);
        checks.push(Check::new(
            "construct.positivity",
            pos.pass,
            pos.min_value,
            "min of the positive-part solution over the grid",
        ));
    }
    let mut trace_csv = String::from("iter,J,grad_norm,step\n");
    for (k, row) in bundle.trace.iter().enumerate() {
        trace_csv.push_str(&format!("{k},{},{},{}\n", row.j, row.grad_norm, row.step));
    }
    let payload = json!({
        "n": art.spec.n, "p": art.spec.p,
        "sigma": art.sigma,
        "solution_scale": art.solution_scale,
        "landscape": art.lc,
        "minimize": {
            "converged": bundle.converged,
            "iterations": bundle.iterations,
            "grad_norm": bundle.grad_norm,
            "j_value": bundle.j_value,
            "u_tilde_norm": bundle.u_tilde_norm_h1,
        },
        "residuals": residual_rows,
        "singularity_fit": fit,
        "decay_fit": &tail,
        "agmon": agmon,
    });
    let mut csvs = vec![
        ("U.csv".to_string(), bundle.big_u.to_csv_string()),
        ("U_extension.json".to_string(), bundle.big_u.extension_sidecar_json()),
        ("u_tilde.csv".to_string(), bundle.u_tilde.to_csv_string()),
        ("trace.csv".to_string(), trace_csv),
    ];
    if config.mode == Mode::Decay {
        // weighted-energy table over a mu ladder
        let mut csv = String::from("mu,lhs,rhs,ratio\n");
        let sqrt_sigma = art.sigma.sqrt();
        for k in 1..=18 {
            let mu = 0.05 * k as f64 * sqrt_sigma;
            if let Ok(sides) = decay::agmon_weighted_norm(
                &bundle.big_u,
                mu,
                (2.0 * ctx.approx.rho).max(5.0),
                grid.r_max() / 2.0 - 1.0,
                0.0,
                art.sigma,
            ) {
                csv.push_str(&format!("{mu},{},{},{}\n", sides.lhs, sides.rhs, sides.ratio));
            }
        }
        csvs.push(("decay.csv".to_string(), csv));
        csvs.push((
            "decay_fit.json".to_string(),
            serde_json::to_string_pretty(&tail).expect("fit serializes"),
        ));
        let rows = decay::local_bound_diag(&bundle.big_u, &[5.0, 10.0, 15.0, 20.0, 25.0])
            .map_err(numeric)?;
        csvs.push((
            "local_bounds.csv".to_string(),
            rows.iter().fold(String::from("center,sup_inner,l2_outer,ratio\n"), |mut s, r| {
                s.push_str(&format!("{},{},{},{}\n", r.center, r.sup_inner, r.l2_outer, r.ratio));
                s
            }),
        ));
    }
    Ok((payload, checks, csvs))
}

fn regularity_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let spec = config.resolve_problem()?;
    if spec.mode != Regime::Subcritical {
        return Err(RunError::Hypothesis("regularity mode needs a subcritical problem".into()));
    }
    let grid = build_grid(config, spec.n, &[]);
    let sigma = problem::estimate_sigma(&spec, &grid).map_err(numeric)?;
    let shift = OmegaShift::new(sigma.sigma + 1.0, sigma.sigma / 2.0).map_err(numeric)?;
    let u = greens::ground_state(&spec, &grid, 4.0).map_err(numeric)?;
    let (u_final, report) = greens::bootstrap_regularity(&u, &spec, shift, 5).map_err(numeric)?;
    let fine = grid.refine();
    let strong = greens::strong_residual_on(&u_final, &spec, shift.omega0, &fine).map_err(numeric)?;
    let rep_res = greens::representation_residual(&u_final, &spec, shift).map_err(numeric)?;
    let growth = greens::nonneg_growth_check(&u_final, &spec, &[1.0, 1.5, 2.0, 3.0], 0.5)
        .map_err(numeric)?;
    let checks = vec![
        Check::new("regularity.bootstrap_stable", report.stabilized, *report.sup_norms.last().unwrap(), "sup norms stable under iteration"),
        Check::new(
            "regularity.representation",
            rep_res <= 1e-3 * u_final.weighted_norm(1.0, shift.omega).map_err(numeric)?,
            rep_res,
            "weighted residual of u = T_omega(g_omega)",
        ),
        Check::new("regularity.growth", growth.pass, growth.fitted_exponent, "ball-integral growth exponent <= n"),
    ];
    let payload = json!({
        "sigma": sigma.sigma,
        "omega": shift.omega,
        "bootstrap": report,
        "strong_residual": strong,
        "representation_residual": rep_res,
        "growth": growth,
    });
    let csvs = vec![("u_subcritical.csv".to_string(), u_final.to_csv_string())];
    Ok((payload, checks, csvs))
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    p: f64,
    c_np: f64,
    d_p: f64,
    c_p: f64,
    r0: f64,
    m: f64,
    min_j_on_sphere: f64,
    sphere_pass: bool,
    converged: bool,
    grad_norm: f64,
    singularity_slope: f64,
    mu_hat: f64,
    c_np_dp: f64,
}

fn sweep_mode(config: &RunConfig) -> Result<ModeOutput, RunError> {
    let ps = config
        .sweep_ps
        .clone()
        .unwrap_or_else(|| vec![3.01, 3.02, 3.05, 3.1, 3.2]);
    let base_spec = config.resolve_problem()?;
    use rayon::prelude::*;
    let rows: Vec<Result<SweepRow, RunError>> = ps
        .par_iter()
        .map(|&p| sweep_row(config, &base_spec, p))
        .collect();
    let mut table = Vec::new();
    for row in rows {
        table.push(row?);
    }
    let mut csv = String::from(
        "p,c_np,D_p,C_p,r0,m,min_J_on_sphere,sphere_pass,converged,grad_norm,singularity_slope,mu_hat,c_np_Dp\n",
    );
    for r in &table {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.p, r.c_np, r.d_p, r.c_p, r.r0, r.m, r.min_j_on_sphere, r.sphere_pass, r.converged,
            r.grad_norm, r.singularity_slope, r.mu_hat, r.c_np_dp
        ));
    }
    // trends toward the critical exponent: c_np and C(p) decrease, and so
    // does the product c_np · D(p)
    let decreasing = |vals: &[f64]| vals.windows(2).all(|w| w[0] < w[1] * (1.0 + 1e-12));
    let c_vals: Vec<f64> = table.iter().map(|r| r.c_np).collect();
    let cp_vals: Vec<f64> = table.iter().map(|r| r.c_p).collect();
    let cd_vals: Vec<f64> = table.iter().map(|r| r.c_np_dp).collect();
    let checks = vec![
        Check::new("sweep.c_np_decreasing", decreasing(&c_vals), c_vals[0], "c_np decreases toward the left end"),
        Check::new("sweep.C_p_decreasing", decreasing(&cp_vals), cp_vals[0], "C(p) decreases toward the left end"),
        Check::new("sweep.c_np_Dp_decreasing", decreasing(&cd_vals), cd_vals[0], "c_np D(p) decreases toward the left end"),
    ];
    Ok((json!({"rows": table}), checks, vec![("sweep.csv".to_string(), csv)]))
}

fn sweep_row(config: &RunConfig, base: &ProblemSpec, p: f64) -> Result<SweepRow, RunError> {
    let mut spec = base.clone();
    spec.p = p;
    spec.check_well_formed()
        .map_err(|e| RunError::Hypothesis(e.to_string()))?;
    let row_config = RunConfig {
        problem: Some(spec.clone()),
        problem_path: None,
        seed: config.seed.wrapping_add((p * 1000.0) as u64),
        ..config.clone()
    };
    let (art, ctx) = construct_pipeline(&row_config)?;
    let fit = solver::singularity_fit(&art.bundle.big_u, (1e-5, 1e-3)).map_err(numeric)?;
    let tail = decay::fit_decay(&art.bundle.big_u, decay_window(ctx.grid.r_max())).map_err(numeric)?;
    Ok(SweepRow {
        p,
        c_np: ctx.approx.c_np,
        d_p: art.lc.d_p,
        c_p: art.lc.c_p,
        r0: art.lc.r0,
        m: art.lc.m,
        min_j_on_sphere: art.sphere.min_j,
        sphere_pass: art.sphere.pass,
        converged: art.bundle.converged,
        grad_norm: art.bundle.grad_norm,
        singularity_slope: fit.slope,
        mu_hat: tail.mu_hat,
        c_np_dp: ctx.approx.c_np * art.lc.d_p,
    })
}
