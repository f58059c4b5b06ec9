//! Command-line front end: strict JSON configuration, report emission
//! (report.json / report.txt / CSV / SVG) and exit-code conventions.
//!
//! Exit codes: 0 success, 1 module failure (structured error JSON emitted),
//! 2 inequality certified as not holding, 3 configuration error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;

use crate::criteria::{self, CertificationReport};
use crate::fastdiff::{self, DnleParams, EntropyTrace, U0Spec};
use crate::hardy_construct::{self, ThetaLaplaceProfile};
use crate::optimal_search::{self, RayleighEstimate};
use crate::weights::{Domain, LineWeight, RadialWeightFamily, WeightPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODULE_ERROR: i32 = 1;
pub const EXIT_DOES_NOT_HOLD: i32 = 2;
pub const EXIT_CONFIG_ERROR: i32 = 3;

#[derive(Parser)]
#[command(
    name = "hardy-cert",
    about = "Certify weighted Poincare/Hardy inequalities and simulate fast-diffusion entropy decay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Certify a weighted Poincare inequality on the line.
    CertifyP(CommonArgs),
    /// Certify a radial Hardy-Poincare inequality on R^N.
    CertifyHp(CommonArgs),
    /// Derive a Hardy weight pair from a theta-Laplacian profile.
    DeriveH(CommonArgs),
    /// Estimate an optimal constant by Rayleigh-quotient maximization.
    Estimate(CommonArgs),
    /// Run a parameter sweep of fast-diffusion simulations.
    Sweep(CommonArgs),
    /// Simulate the rescaled fast-diffusion flow and fit the entropy decay.
    Simulate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON configuration (strict schema).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output` field.
    #[arg(long)]
    output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Configuration schemas (unknown fields rejected).
// ---------------------------------------------------------------------------

fn default_budget() -> usize {
    8
}
fn default_n_nodes() -> usize {
    256
}
fn default_span() -> f64 {
    40.0
}
fn default_n_cells() -> usize {
    400
}
fn default_tau_end() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyPConfig {
    pub left: LineWeight,
    pub right: LineWeight,
    pub q: f64,
    /// Support doublings tried when searching for a counterexample.
    #[serde(default = "default_budget")]
    pub counterexample_budget: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyHpConfig {
    pub family: RadialWeightFamily,
    pub q: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveHConfig {
    pub profile: ThetaLaplaceProfile,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateTarget {
    Poincare {
        left: LineWeight,
        right: LineWeight,
        q: f64,
    },
    Hardy {
        w1: RadialWeightFamily,
        w2: RadialWeightFamily,
        q: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub target: EstimateTarget,
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub m: f64,
    pub p: f64,
    pub dimension: u32,
    pub u0: U0Spec,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
    #[serde(default = "default_tau_end")]
    pub tau_end: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m: Vec<f64>,
    pub p: Vec<f64>,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub dimension: u32,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
    #[serde(default = "default_tau_end")]
    pub tau_end: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Plumbing.
// ---------------------------------------------------------------------------

enum CliError {
    Config(String),
    Module(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG_ERROR,
            CliError::Module(_) => EXIT_MODULE_ERROR,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Module(m) => m,
        }
    }
}

fn io_module(e: std::io::Error) -> CliError {
    CliError::Module(format!("io error: {e}"))
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

fn resolve_output(flag: Option<PathBuf>, from_config: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag.or_else(|| from_config.clone()).ok_or_else(|| {
        CliError::Config("no output directory: pass --output or set \"output\" in the config".into())
    })?;
    fs::create_dir_all(&dir).map_err(io_module)?;
    Ok(dir)
}

/// report.json is fully deterministic for a fixed config; the wall-clock
/// timestamp goes to meta.json instead.
fn write_report(
    dir: &Path,
    command: &str,
    config: &impl Serialize,
    result: &impl Serialize,
    text: &str,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_module)?;
    let report = json!({
        "schema": 1,
        "command": command,
        "config": config,
        "result": result,
    });
    let mut body = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Module(format!("serialization: {e}")))?;
    body.push('\n');
    fs::write(dir.join("report.json"), body).map_err(io_module)?;
    fs::write(dir.join("report.txt"), text).map_err(io_module)?;
    let now_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let meta = json!({ "schema": 1, "generated_at_unix_ms": now_ms });
    fs::write(dir.join("meta.json"), format!("{meta}\n")).map_err(io_module)?;
    Ok(())
}

fn write_error_json(dir: &Path, command: &str, message: &str) {
    if fs::create_dir_all(dir).is_ok() {
        let err = json!({ "schema": 1, "command": command, "error": message });
        let _ = fs::write(dir.join("error.json"), format!("{:#}\n", err));
    }
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_module)
}

/// Minimal static SVG 1.1 line plot of y (log10 scale) against x.
fn write_svg_log_plot(
    path: &Path,
    points: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
) -> Result<(), CliError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| (x, y.log10()))
        .collect();
    let (w, h, ml, mb, mt, mr) = (640.0, 480.0, 70.0, 50.0, 20.0, 20.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    if pts.len() >= 2 {
        let (x0, x1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.0), b.max(p.0))
            });
        let (y0, y1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.1), b.max(p.1))
            });
        let (xs, ys) = ((x1 - x0).max(1e-300), (y1 - y0).max(1e-300));
        let px = |x: f64| ml + (x - x0) / xs * (w - ml - mr);
        let py = |y: f64| h - mb - (y - y0) / ys * (h - mb - mt);
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            h - mb,
            w - mr,
            h - mb
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
            h - mb
        );
        for k in 0..=4 {
            let xv = x0 + xs * k as f64 / 4.0;
            let yv = y0 + ys * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{xv:.2}</text>",
                px(xv),
                h - mb + 18.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">1e{yv:.1}</text>",
                ml - 6.0,
                py(yv) + 4.0
            );
        }
        let poly: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
            poly.join(" ")
        );
    } else {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">no positive samples</text>",
            w / 2.0,
            h / 2.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>",
        ml + (w - ml - mr) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{y_label}</text>",
        mt + (h - mb - mt) / 2.0,
        mt + (h - mb - mt) / 2.0
    );
    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(io_module)
}

fn certification_text(report: &CertificationReport) -> String {
    let mut t = String::new();
    let sup = |s: &Option<criteria::SupremumScanResult>| match s {
        None => "n/a".to_string(),
        Some(r) => format!("{:?}", r.value),
    };
    let _ = writeln!(t, "kind         : {:?}", report.kind);
    let _ = writeln!(t, "q            : {}", report.q);
    let _ = writeln!(t, "mass         : {:.12e}", report.mass);
    let _ = writeln!(t, "median       : {:.12e}", report.median);
    let _ = writeln!(t, "B+           : {}", sup(&report.b_plus));
    let _ = writeln!(t, "B-           : {}", sup(&report.b_minus));
    let _ = writeln!(t, "H2           : {}", sup(&report.h2));
    let _ = writeln!(t, "holds        : {}", report.holds);
    if let (Some(lo), Some(up)) = (report.lower_bound, report.upper_bound) {
        let _ = writeln!(t, "bounds       : [{lo:.6e}, {up:.6e}]");
    }
    for n in &report.notes {
        let _ = writeln!(t, "note         : {n}");
    }
    t
}

// ---------------------------------------------------------------------------
// Command implementations.
// ---------------------------------------------------------------------------

fn cmd_certify_p(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: CertifyPConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    let pair = WeightPair {
        left: cfg.left.clone(),
        right: cfg.right.clone(),
        domain: Domain::Line,
        q: cfg.q,
    };
    pair.validate()
        .map_err(|e| CliError::Config(format!("invalid weight pair: {e}")))?;
    let report =
        criteria::certify_poincare_line(&pair).map_err(|e| CliError::Module(e.to_string()))?;
    let mut text = certification_text(&report);
    if !report.holds {
        match optimal_search::counterexample_search(&pair, cfg.counterexample_budget) {
            Ok(witness) => {
                let rows: Vec<Vec<f64>> = witness
                    .grid
                    .iter()
                    .zip(&witness.values)
                    .map(|(&x, &v)| vec![x, v])
                    .collect();
                write_csv(&out.join("counterexample.csv"), "x,value", &rows)?;
                let _ = writeln!(text, "counterexample: counterexample.csv");
            }
            Err(e) => {
                let _ = writeln!(text, "counterexample: not found ({e})");
            }
        }
    }
    write_report(&out, "certify-p", &cfg, &report, &text)?;
    Ok(if report.holds { EXIT_OK } else { EXIT_DOES_NOT_HOLD })
}

fn cmd_certify_hp(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: CertifyHpConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    cfg.family
        .validate()
        .map_err(|e| CliError::Config(format!("invalid weight family: {e}")))?;
    let report = criteria::certify_hardy_poincare(&cfg.family, cfg.q)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let text = certification_text(&report);
    write_report(&out, "certify-hp", &cfg, &report, &text)?;
    Ok(if report.holds { EXIT_OK } else { EXIT_DOES_NOT_HOLD })
}

fn cmd_derive_h(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: DeriveHConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    cfg.profile
        .validate()
        .map_err(|e| CliError::Config(format!("invalid profile: {e}")))?;
    let derivation =
        hardy_construct::derive_hardy(&cfg.profile).map_err(|e| CliError::Module(e.to_string()))?;
    let mut text = String::new();
    let _ = writeln!(text, "C_H          : {:.12e}", derivation.c_h);
    let _ = writeln!(text, "sign         : {:?}", derivation.sign);
    let _ = writeln!(text, "c1           : {:?}", derivation.c1);
    let _ = writeln!(text, "c2           : {:?}", derivation.c2);
    let _ = writeln!(text, "C_H family   : {:?}", derivation.c_h_family);
    let _ = writeln!(text, "optimal      : {}", derivation.optimal);
    let _ = writeln!(text, "condition    : {}", derivation.condition_note);
    write_report(&out, "derive-h", &cfg, &derivation, &text)?;
    Ok(EXIT_OK)
}

fn cmd_estimate(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: EstimateConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    let estimate: RayleighEstimate = match &cfg.target {
        EstimateTarget::Poincare { left, right, q } => {
            let pair = WeightPair {
                left: left.clone(),
                right: right.clone(),
                domain: Domain::Line,
                q: *q,
            };
            pair.validate()
                .map_err(|e| CliError::Config(format!("invalid weight pair: {e}")))?;
            optimal_search::estimate_poincare_constant(&pair, cfg.n_nodes, cfg.span, cfg.seed)
                .map_err(|e| CliError::Module(e.to_string()))?
        }
        EstimateTarget::Hardy { w1, w2, q } => {
            for fam in [w1, w2] {
                fam.validate()
                    .map_err(|e| CliError::Config(format!("invalid weight family: {e}")))?;
            }
            if w1.dimension != w2.dimension {
                return Err(CliError::Config(
                    "hardy estimate needs matching dimensions".into(),
                ));
            }
            let f1 = |r: f64| w1.evaluate_unchecked(r);
            let f2 = |r: f64| w2.evaluate_unchecked(r);
            optimal_search::estimate_hardy_constant(
                &f1,
                &f2,
                w1.dimension,
                *q,
                cfg.n_nodes,
                cfg.span,
                cfg.seed,
            )
            .map_err(|e| CliError::Module(e.to_string()))?
        }
    };
    let rows: Vec<Vec<f64>> = estimate
        .maximizer
        .grid
        .iter()
        .zip(&estimate.maximizer.values)
        .map(|(&x, &v)| vec![x, v])
        .collect();
    write_csv(&out.join("maximizer.csv"), "x,value", &rows)?;
    let mut text = String::new();
    let _ = writeln!(text, "estimate     : {:.12e}", estimate.value);
    let _ = writeln!(text, "method       : {:?}", estimate.method);
    let _ = writeln!(text, "iterations   : {}", estimate.iterations);
    let _ = writeln!(text, "converged    : {}", estimate.converged);
    let _ = writeln!(text, "multiplicity : {}", estimate.multiplicity);
    for n in &estimate.notes {
        let _ = writeln!(text, "note         : {n}");
    }
    write_report(&out, "estimate", &cfg, &estimate, &text)?;
    Ok(EXIT_OK)
}

fn simulate_once(
    m: f64,
    p: f64,
    dimension: u32,
    u0: &U0Spec,
    n_cells: usize,
    tau_end: f64,
    out: &Path,
    config: &impl Serialize,
) -> Result<EntropyTrace, CliError> {
    let d_ref = match *u0 {
        U0Spec::Barenblatt { d } => d,
        U0Spec::Mixture { d0, d1 } => 0.5 * (d0 + d1),
    };
    fs::create_dir_all(out).map_err(io_module)?;
    let params =
        DnleParams::new(m, p, dimension, d_ref).map_err(|e| CliError::Config(e.to_string()))?;
    let trace = fastdiff::run_and_fit(u0, &params, n_cells, tau_end)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let rows: Vec<Vec<f64>> = trace
        .samples
        .iter()
        .map(|s| vec![s.tau, s.entropy, s.fisher, s.l1_distance])
        .collect();
    write_csv(&out.join("trace.csv"), "tau,entropy,fisher,l1_distance", &rows)?;
    let pts: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.tau, s.entropy)).collect();
    write_svg_log_plot(&out.join("plot.svg"), &pts, "tau", "relative entropy")?;
    let mut text = String::new();
    let _ = writeln!(text, "D*           : {:.12e}", trace.d_star);
    let _ = writeln!(text, "stationary   : {}", trace.already_stationary);
    if let (Some(mu), Some(lam), Some(r2)) = (trace.fitted_mu, trace.lambda, trace.fit_r2) {
        let _ = writeln!(text, "fitted mu    : {mu:.6e}");
        let _ = writeln!(text, "lambda       : {lam:.6e}");
        let _ = writeln!(text, "fit r2       : {r2:.6}");
    }
    if let Some(c) = trace.c_ck {
        let _ = writeln!(text, "C_ck         : {c:.6e}");
    }
    let _ = writeln!(text, "mass defect  : {:.3e}", trace.mass_defect);
    let _ = writeln!(text, "samples      : {}", trace.samples.len());
    write_report(out, "simulate", config, &trace, &text)?;
    Ok(trace)
}

fn cmd_simulate(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: SimulateConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    simulate_once(
        cfg.m,
        cfg.p,
        cfg.dimension,
        &cfg.u0,
        cfg.n_cells,
        cfg.tau_end,
        &out,
        &cfg,
    )?;
    Ok(EXIT_OK)
}

fn cmd_sweep(args: CommonArgs) -> Result<i32, CliError> {
    let cfg: SweepConfig = load_config(&args.config)?;
    let out = resolve_output(args.output, &cfg.output)?;
    fs::create_dir_all(&out).map_err(io_module)?;
    let mut runs = Vec::new();
    for &m in &cfg.m {
        for &p in &cfg.p {
            for &d0 in &cfg.d0 {
                for &d1 in &cfg.d1 {
                    runs.push((m, p, d0, d1));
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let threads = std::env::var("HARDY_CERT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t > 0);
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            b = b.num_threads(t);
        }
        b.build()
            .map_err(|e| CliError::Module(format!("thread pool: {e}")))?
    };
    let cfg_ref = &cfg;
    let out_ref = &out;
    let results: Vec<(usize, Result<EntropyTrace, String>)> = pool.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(i, &(m, p, d0, d1))| {
                let dir = out_ref.join(format!("run_{i:03}"));
                let run_cfg = json!({
                    "m": m, "p": p, "d0": d0, "d1": d1,
                    "dimension": cfg_ref.dimension,
                    "n_cells": cfg_ref.n_cells,
                    "tau_end": cfg_ref.tau_end,
                });
                let r = simulate_once(
                    m,
                    p,
                    cfg_ref.dimension,
                    &U0Spec::Mixture { d0, d1 },
                    cfg_ref.n_cells,
                    cfg_ref.tau_end,
                    &dir,
                    &run_cfg,
                )
                .map_err(|e| e.message().to_string());
                if let Err(msg) = &r {
                    write_error_json(&dir, "simulate", msg);
                }
                (i, r)
            })
            .collect()
    });
    let mut text = String::new();
    let mut summary = Vec::new();
    let mut failed = 0usize;
    for (i, r) in &results {
        let (m, p, d0, d1) = runs[*i];
        match r {
            Ok(trace) => {
                let _ = writeln!(
                    text,
                    "run_{i:03}: m={m} p={p} d0={d0} d1={d1} mu={:?} r2={:?}",
                    trace.fitted_mu, trace.fit_r2
                );
                summary.push(json!({
                    "run": format!("run_{i:03}"),
                    "m": m, "p": p, "d0": d0, "d1": d1,
                    "fitted_mu": trace.fitted_mu,
                    "lambda": trace.lambda,
                    "fit_r2": trace.fit_r2,
                    "already_stationary": trace.already_stationary,
                }));
            }
            Err(msg) => {
                failed += 1;
                let _ = writeln!(text, "run_{i:03}: m={m} p={p} d0={d0} d1={d1} FAILED: {msg}");
                summary.push(json!({
                    "run": format!("run_{i:03}"),
                    "m": m, "p": p, "d0": d0, "d1": d1,
                    "error": msg,
                }));
            }
        }
    }
    write_report(&out, "sweep", &cfg, &summary, &text)?;
    if failed > 0 {
        return Err(CliError::Module(format!("{failed} sweep run(s) failed")));
    }
    Ok(EXIT_OK)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage problems are configuration errors, except help/version.
            return if e.use_stderr() { EXIT_CONFIG_ERROR } else { EXIT_OK };
        }
    };
    let (name, result) = match cli.command {
        CliCommand::CertifyP(a) => ("certify-p", cmd_certify_p(a)),
        CliCommand::CertifyHp(a) => ("certify-hp", cmd_certify_hp(a)),
        CliCommand::DeriveH(a) => ("derive-h", cmd_derive_h(a)),
        CliCommand::Estimate(a) => ("estimate", cmd_estimate(a)),
        CliCommand::Sweep(a) => ("sweep", cmd_sweep(a)),
        CliCommand::Simulate(a) => ("simulate", cmd_simulate(a)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let kind = if e.exit_code() == EXIT_CONFIG_ERROR {
                "config"
            } else {
                "module"
            };
            eprintln!(
                "{:#}",
                json!({ "schema": 1, "command": name, "kind": kind, "error": e.message() })
            );
            e.exit_code()
        }
    }
}
