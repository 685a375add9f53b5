//! The five subcommands. Each consumes a validated configuration, runs the
//! corresponding pipeline, and writes its files into the run directory:
//! CSV tables at full precision plus a JSON report with stable field names.

use std::fs;
use std::path::Path;

use annulus_core::conevar::{breaking_path_test, mountain_pass};
use annulus_core::geometry::build_grid;
use annulus_core::orlicz::tm_probe;
use annulus_core::radial::{hardy_ratio, radial_identity_residual, solve_radial};
use annulus_core::stability::{stability_indicator, symmetry_breaking_report, Verdict};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_sweep_value, RunConfig};
use crate::report::{
    sci, write_csv, write_error_file, write_json, CliError, Manifest, SweptValue,
};

/// Resolved invocation context shared by all subcommands.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    pub jobs: usize,
    pub config_path: String,
    pub config_sha256: String,
}

/// Run one non-sweep subcommand.
pub fn dispatch_single(command: &str, ctx: &Ctx) -> Result<(), CliError> {
    match command {
        "radial" => cmd_radial(ctx),
        "stability" => cmd_stability(ctx),
        "mp2d" => cmd_mp2d(ctx),
        "tmprobe" => cmd_tmprobe(ctx),
        other => Err(CliError::Internal(format!(
            "dispatch_single got unexpected command \"{other}\""
        ))),
    }
}

#[derive(Serialize)]
struct RadialReport<'a> {
    nodes: usize,
    energy: f64,
    residual_inf: f64,
    identity_residual: f64,
    hardy_ratio: f64,
    shooting_slope: f64,
    max_u: f64,
    truncated: bool,
    warnings: &'a [String],
}

fn cmd_radial(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let annulus = cfg.annulus();
    let nonlin = cfg.nonlinearity();
    info!("radial: solving on {} nodes", cfg.radial_nodes);
    let profile = solve_radial(&annulus, &nonlin, cfg.radial_nodes, &cfg.radial_options())?;
    let identity_residual = radial_identity_residual(&profile, &nonlin, &annulus)?;
    let hardy = hardy_ratio(&profile, &annulus)?;
    if cfg.wants("csv") {
        let rows = (0..profile.r_nodes().len()).map(|i| {
            format!(
                "{},{},{}",
                sci(profile.r_nodes()[i]),
                sci(profile.u()[i]),
                sci(profile.du()[i])
            )
        });
        write_csv(&ctx.out.join("profile.csv"), "r,u,du", rows)?;
    }
    if cfg.wants("json") {
        let warnings = cfg.warnings();
        write_json(
            &ctx.out.join("report.json"),
            &RadialReport {
                nodes: profile.r_nodes().len(),
                energy: profile.energy(),
                residual_inf: profile.residual_inf(),
                identity_residual,
                hardy_ratio: hardy,
                shooting_slope: profile.slope(),
                max_u: profile.max_u(),
                truncated: cfg.truncated,
                warnings: &warnings,
            },
        )?;
    }
    info!(
        "radial: energy {:.6e}, residual {:.3e}",
        profile.energy(),
        profile.residual_inf()
    );
    Ok(())
}

#[derive(Serialize)]
struct StabilityJson<'a> {
    hardy: f64,
    delta_required: f64,
    delta_certified: f64,
    threshold_satisfied: bool,
    indicator_d: f64,
    angular_factor: f64,
    second_variation: f64,
    cross_check_rel: f64,
    verdict: &'static str,
    truncated: bool,
    warnings: &'a [String],
}

fn cmd_stability(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let annulus = cfg.annulus();
    let nonlin = cfg.nonlinearity();
    info!("stability: radial solve on {} nodes", cfg.radial_nodes);
    let profile = solve_radial(&annulus, &nonlin, cfg.radial_nodes, &cfg.radial_options())?;
    let report = symmetry_breaking_report(&annulus, &nonlin, &profile)?;
    if cfg.wants("json") {
        let warnings = cfg.warnings();
        write_json(
            &ctx.out.join("report.json"),
            &StabilityJson {
                hardy: report.hardy(),
                delta_required: report.delta_required(),
                delta_certified: report.delta_certified(),
                threshold_satisfied: report.threshold_satisfied(),
                indicator_d: report.indicator_d(),
                angular_factor: report.angular_factor(),
                second_variation: report.second_variation(),
                cross_check_rel: report.cross_check_rel(),
                verdict: match report.verdict() {
                    Verdict::Breaking => "Breaking",
                    Verdict::Inconclusive => "Inconclusive",
                },
                truncated: cfg.truncated,
                warnings: &warnings,
            },
        )?;
    }
    if cfg.wants("csv") && cfg.family == "power" {
        // Indicator table over the exponent ladder, pure power p = 𝔭.
        let ladder = if cfg.p_ladder.is_empty() {
            vec![cfg.p.expect("validated power config")]
        } else {
            cfg.p_ladder.clone()
        };
        let mut rows = Vec::with_capacity(ladder.len());
        for &p in &ladder {
            let spec = cfg.pure_power(p)?;
            let prof = solve_radial(&annulus, &spec, cfg.radial_nodes, &cfg.radial_options())?;
            let d = stability_indicator(&prof, &spec, &annulus)?;
            rows.push(format!("{},{}", sci(p), sci(d)));
        }
        write_csv(&ctx.out.join("indicator.csv"), "p,indicator_d", rows)?;
    }
    if cfg.wants("csv") && !cfg.tau_ladder.is_empty() {
        let grid = build_grid(&annulus, cfg.nr, cfg.ntheta)?;
        let mut rows = Vec::with_capacity(cfg.tau_ladder.len());
        for &tau in &cfg.tau_ladder {
            let rec = breaking_path_test(&profile, tau, &grid, &nonlin, &annulus)?;
            let per_tau2 = if tau > 0.0 {
                sci(rec.margin() / (tau * tau))
            } else {
                "nan".into()
            };
            rows.push(format!(
                "{},{},{},{},{per_tau2}",
                sci(tau),
                sci(rec.level_radial()),
                sci(rec.level_perturbed()),
                sci(rec.margin())
            ));
        }
        write_csv(
            &ctx.out.join("margins.csv"),
            "tau,level_radial,level_perturbed,margin,margin_over_tau2",
            rows,
        )?;
    }
    info!(
        "stability: indicator {:.6e}, second variation {:.6e}",
        report.indicator_d(),
        report.second_variation()
    );
    Ok(())
}

#[derive(Serialize)]
struct MpReport<'a> {
    energy: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    is_radial: bool,
    radial_energy: f64,
    level_gap: f64,
    grid_nr: usize,
    grid_ntheta: usize,
    truncated: bool,
    warnings: &'a [String],
}

fn cmd_mp2d(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let annulus = cfg.annulus();
    let nonlin = cfg.nonlinearity();
    let grid = build_grid(&annulus, cfg.nr, cfg.ntheta)?;
    info!(
        "mp2d: {}x{} grid, tolerance {:.1e}",
        cfg.nr, cfg.ntheta, cfg.mp_tol
    );
    let result = mountain_pass(&grid, &nonlin, &annulus, &cfg.mp_options())?;
    let profile = solve_radial(&annulus, &nonlin, cfg.radial_nodes, &cfg.radial_options())?;
    if cfg.wants("csv") {
        let field = result.u().field();
        let mut rows = Vec::with_capacity(cfg.nr * cfg.ntheta);
        for i in 0..cfg.nr {
            for j in 0..cfg.ntheta {
                rows.push(format!(
                    "{},{},{}",
                    sci(grid.r_nodes()[i]),
                    sci(grid.theta_nodes()[j]),
                    sci(field.get(i, j))
                ));
            }
        }
        write_csv(&ctx.out.join("field.csv"), "r,theta,u", rows)?;
        let log_rows = result
            .path_log()
            .iter()
            .map(|(it, level)| format!("{it},{}", sci(*level)));
        write_csv(&ctx.out.join("path_log.csv"), "iteration,level", log_rows)?;
    }
    if cfg.wants("json") {
        let warnings = cfg.warnings();
        write_json(
            &ctx.out.join("report.json"),
            &MpReport {
                energy: result.energy(),
                grad_norm: result.grad_norm(),
                iterations: result.iterations(),
                converged: result.converged(),
                is_radial: result.is_radial(),
                radial_energy: profile.energy(),
                level_gap: profile.energy() - result.energy(),
                grid_nr: cfg.nr,
                grid_ntheta: cfg.ntheta,
                truncated: cfg.truncated,
                warnings: &warnings,
            },
        )?;
    }
    info!(
        "mp2d: candidate level {:.6e} after {} iterations (radial level {:.6e})",
        result.energy(),
        result.iterations(),
        profile.energy()
    );
    Ok(())
}

#[derive(Serialize)]
struct TmReport<'a> {
    samples: usize,
    seed: u64,
    grid_nr: usize,
    grid_ntheta: usize,
    alphas: usize,
    max_modulus_overall: f64,
    saturated_total: usize,
    truncated: bool,
    warnings: &'a [String],
}

fn cmd_tmprobe(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let annulus = cfg.annulus();
    let grid = build_grid(&annulus, cfg.nr, cfg.ntheta)?;
    let ladder: Vec<f64> = if cfg.alpha_ladder.is_empty() {
        (1..=16).map(|i| i as f64 / 10.0).collect()
    } else {
        cfg.alpha_ladder.clone()
    };
    info!(
        "tmprobe: {} exponents, {} samples each, seed {}",
        ladder.len(),
        cfg.probe_samples,
        cfg.seed
    );
    let mut rows = Vec::with_capacity(ladder.len());
    let mut max_overall = 0.0f64;
    let mut saturated_total = 0usize;
    for &alpha in &ladder {
        let summary = tm_probe(&grid, &annulus, alpha, cfg.probe_samples, cfg.seed)?;
        max_overall = max_overall.max(summary.max_modulus());
        saturated_total += summary.saturated_samples();
        rows.push(format!(
            "{},{},{},{}",
            sci(alpha),
            sci(summary.max_modulus()),
            sci(summary.mean_modulus()),
            summary.saturated_samples()
        ));
    }
    if cfg.wants("csv") {
        write_csv(
            &ctx.out.join("probe.csv"),
            "alpha,max_modulus,mean_modulus,saturated_count",
            rows,
        )?;
    }
    if cfg.wants("json") {
        let warnings = cfg.warnings();
        write_json(
            &ctx.out.join("report.json"),
            &TmReport {
                samples: cfg.probe_samples,
                seed: cfg.seed,
                grid_nr: cfg.nr,
                grid_ntheta: cfg.ntheta,
                alphas: ladder.len(),
                max_modulus_overall: max_overall,
                saturated_total,
                truncated: cfg.truncated,
                warnings: &warnings,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    command: &'a str,
    key: &'a str,
    entries: usize,
    succeeded: usize,
    failed: usize,
}

struct EntryOutcome {
    value: f64,
    dir: String,
    status: Result<(), CliError>,
}

/// Fan `sweep_command` out over `sweep_values` of `sweep_key`: one output
/// subdirectory per value, entries run concurrently up to the jobs limit,
/// one failure never aborts the others. An index CSV collects per-entry
/// status and headline metrics.
pub fn cmd_sweep(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let command = cfg.sweep_command.clone().ok_or_else(|| {
        CliError::Config(vec!["sweep_command: required for the sweep subcommand".into()])
    })?;
    let key = cfg.sweep_key.clone().ok_or_else(|| {
        CliError::Config(vec!["sweep_key: required for the sweep subcommand".into()])
    })?;
    if cfg.sweep_values.is_empty() {
        return Err(CliError::Config(vec![
            "sweep_values: need at least one value".into(),
        ]));
    }
    // The key is uniform across entries, so a type mismatch is a config
    // error, not a per-entry failure.
    for &v in &cfg.sweep_values {
        let mut scratch = cfg.clone();
        apply_sweep_value(&mut scratch, &key, v).map_err(|e| CliError::Config(vec![e]))?;
    }
    let jobs = ctx.jobs.max(1).min(cfg.sweep_values.len());
    info!(
        "sweep: {} over {} = {:?}, {} jobs",
        command, key, cfg.sweep_values, jobs
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let entries: Vec<EntryOutcome> = pool.install(|| {
        cfg.sweep_values
            .par_iter()
            .map(|&v| run_entry(ctx, &command, &key, v))
            .collect()
    });

    let metrics = metric_columns(&command);
    let header = format!("index,{key},status,dir,{}", metrics.join(","));
    let rows = entries.iter().enumerate().map(|(i, entry)| {
        let status = match &entry.status {
            Ok(()) => "ok",
            Err(e) => e.kind(),
        };
        let report = entry
            .status
            .is_ok()
            .then(|| fs::read_to_string(ctx.out.join(&entry.dir).join("report.json")).ok())
            .flatten()
            .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok());
        let cells: Vec<String> = metrics
            .iter()
            .map(|name| metric_cell(report.as_ref(), name))
            .collect();
        format!(
            "{i},{},{status},{},{}",
            fmt_value(entry.value),
            entry.dir,
            cells.join(",")
        )
    });
    write_csv(&ctx.out.join("index.csv"), &header, rows)?;

    let succeeded = entries.iter().filter(|e| e.status.is_ok()).count();
    write_json(
        &ctx.out.join("report.json"),
        &SweepReport {
            command: &command,
            key: &key,
            entries: entries.len(),
            succeeded,
            failed: entries.len() - succeeded,
        },
    )?;
    info!("sweep: {succeeded}/{} entries succeeded", entries.len());
    if succeeded == 0 {
        // Nothing worked; surface the first failure as the run's outcome.
        return Err(entries
            .into_iter()
            .find_map(|e| e.status.err())
            .expect("at least one entry failed"));
    }
    Ok(())
}

fn run_entry(ctx: &Ctx, command: &str, key: &str, value: f64) -> EntryOutcome {
    let dirname = format!("{key}={}", fmt_value(value));
    let dir = ctx.out.join(&dirname);
    let outcome = (|| -> Result<(), CliError> {
        fs::create_dir_all(&dir)?;
        let mut cfg = ctx.cfg.clone();
        apply_sweep_value(&mut cfg, key, value).map_err(|e| CliError::Config(vec![e]))?;
        cfg.sweep_command = None;
        cfg.sweep_key = None;
        cfg.sweep_values = Vec::new();
        cfg.out_dir = Some(dir.display().to_string());
        cfg.validate().map_err(CliError::Config)?;
        write_json(
            &dir.join("manifest.json"),
            &Manifest {
                tool: "annulus",
                version: env!("CARGO_PKG_VERSION"),
                command,
                config_path: ctx.config_path.clone(),
                config_sha256: ctx.config_sha256.clone(),
                seed: cfg.seed,
                jobs: 1,
                swept: Some(SweptValue {
                    key: key.into(),
                    value,
                }),
                config: &cfg,
            },
        )?;
        let entry_ctx = Ctx {
            cfg: &cfg,
            out: &dir,
            jobs: 1,
            config_path: ctx.config_path.clone(),
            config_sha256: ctx.config_sha256.clone(),
        };
        dispatch_single(command, &entry_ctx)
    })();
    if let Err(e) = &outcome {
        warn!("sweep entry {dirname} failed: {e}");
        write_error_file(&dir, e);
    }
    EntryOutcome {
        value,
        dir: dirname,
        status: outcome,
    }
}

/// Directory-name-safe rendering of a swept value: integers without a
/// trailing `.0`, extreme magnitudes in exponent form (f64's plain Display
/// would expand 1e-30 to thirty decimal places), the rest as-is.
fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e15) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Headline metrics harvested from each entry's report.json into the index.
fn metric_columns(command: &str) -> &'static [&'static str] {
    match command {
        "radial" => &["energy", "residual_inf", "identity_residual", "hardy_ratio"],
        "stability" => &["indicator_d", "second_variation", "cross_check_rel", "verdict"],
        "mp2d" => &["energy", "grad_norm", "iterations", "converged", "is_radial"],
        _ => &["max_modulus_overall", "saturated_total"],
    }
}

fn metric_cell(report: Option<&serde_json::Value>, name: &str) -> String {
    let Some(value) = report.and_then(|r| r.get(name)) else {
        return String::new();
    };
    match value {
        serde_json::Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
        serde_json::Value::Number(n) => n.as_f64().map(sci).unwrap_or_default(),
        serde_json::Value::Bool(b) => b.to_string(),
        serde_json::Value::String(s) => s.clone(),
        _ => String::new(),
    }
}
