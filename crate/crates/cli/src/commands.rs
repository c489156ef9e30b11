use std::path::PathBuf;
use std::time::Instant;

use spinreset::analysis::{
    estimate_discontinuity, exact_stationary_row, fit_power_law_rows, linear_grid,
    sweep_stationary, Observable, Offset, PowerLawFit, SweepResult, SweepSettings, CRITICAL_POINT,
};
use spinreset::trajectory_sim::run_ensemble;
use spinreset::{DriveParams, SimConfig, WaitingTime};

use crate::args::{
    Direction, EnsembleArgs, FiniteSizeArgs, FitArgs, PhysicsArgs, StationaryArgs, SweepArgs,
    VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{
    emit, ensemble_csv, finite_size_csv, read_sweep_rows, sweep_csv, write_file, RunManifest,
};
use crate::svg::line_plot;
use crate::verify::run_checks;

fn waiting_time(gamma: f64, t_max: Option<f64>) -> CliResult<WaitingTime> {
    Ok(match t_max {
        Some(t) => WaitingTime::chopped(gamma, t)?,
        None => WaitingTime::poisson(gamma)?,
    })
}

fn dist_of(physics: &PhysicsArgs) -> CliResult<WaitingTime> {
    waiting_time(physics.gamma, physics.t_max)
}

/// `start:stop:step`, a comma-separated list, or an empty string.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad grid value `{t}`")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "grid `{s}` must be start:stop:step"
            )));
        }
        return Ok(linear_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)?);
    }
    s.split(',').map(num).collect()
}

pub fn stationary(args: &StationaryArgs) -> CliResult<()> {
    let start = Instant::now();
    let params = DriveParams::new(args.omega, args.delta)?;
    let dist = dist_of(&args.physics)?;
    let row = exact_stationary_row(args.physics.protocol, &dist, args.physics.n_spins, params)?;
    let mut manifest = RunManifest::new("stationary", args, None);
    if args.delta == 0.0 {
        manifest.units = "omega".into();
        manifest
            .notes
            .push("zero detuning: frequencies are in units of Omega".into());
    }
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let csv = sweep_csv(std::slice::from_ref(&row))?;
    emit(&args.output, csv, &row, manifest, &[])
}

pub fn ensemble(args: &EnsembleArgs) -> CliResult<()> {
    let params = DriveParams::new(args.omega, args.delta)?;
    if args.delta == 0.0 {
        return Err(CliError::Validation(
            "ensembles need a nonzero detuning".into(),
        ));
    }
    let mut config = SimConfig::new(
        args.physics.protocol,
        params,
        dist_of(&args.physics)?,
        args.physics.n_spins,
        args.mc.time,
        args.mc.trajectories,
        args.mc.seed,
    );
    if args.grid_points > 1 {
        config = config.with_uniform_grid(args.grid_points);
    }
    config.max_resets_per_trajectory = args.mc.max_resets;
    let stats = run_ensemble(&config)?;
    let mut manifest = RunManifest::new("ensemble", &config, Some(args.mc.seed));
    manifest.wall_time_seconds = stats.wall_time_seconds;
    manifest
        .notes
        .push(format!("total resets: {}", stats.total_resets));
    if stats.finite_flip_extension {
        manifest
            .notes
            .push("conditional-flip protocol at finite N uses the count-flip extension".into());
    }
    if let Some(d) = stats.stationarity() {
        manifest.notes.push(format!(
            "stationarity: last two windows differ by {:.3e} +- {:.3e} ({})",
            d.difference,
            d.stderr,
            if d.consistent {
                "consistent"
            } else {
                "not yet stationary"
            }
        ));
    }
    let csv = ensemble_csv(&stats.points)?;
    emit(&args.output, csv, &stats, manifest, &[])
}

fn svg_paths(prefix: &std::path::Path) -> [(Observable, &'static str, PathBuf); 3] {
    let path = |name: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(format!("_{name}.svg"));
        PathBuf::from(s)
    };
    [
        (Observable::Density, "density", path("density")),
        (Observable::Correlation, "correlation", path("correlation")),
        (Observable::Lqu, "LQU", path("lqu")),
    ]
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let start = Instant::now();
    let grid = parse_grid(&args.grid)?;
    let settings = SweepSettings {
        n_spins: args.physics.n_spins,
        observation_time: args.mc.time,
        n_trajectories: args.mc.trajectories,
        seed: args.mc.seed,
        force_monte_carlo: args.force_monte_carlo,
        max_resets_per_trajectory: args.mc.max_resets,
    };
    let mut result = sweep_stationary(
        args.physics.protocol,
        &dist_of(&args.physics)?,
        &grid,
        &settings,
    )?;
    result.discontinuity = estimate_discontinuity(&result, CRITICAL_POINT).ok();

    let mut manifest = RunManifest::new("sweep", args, Some(args.mc.seed));
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        manifest.notes.push(format!(
            "row {}: {}",
            row.omega_over_delta,
            row.error.as_deref().unwrap_or_default()
        ));
    }
    let mut extra = Vec::new();
    if let Some(prefix) = &args.svg {
        for (obs, label, path) in svg_paths(prefix) {
            let pts: Vec<(f64, f64)> = result
                .rows
                .iter()
                .map(|r| (r.omega_over_delta, r.value(obs).0))
                .collect();
            write_file(&path, line_plot(&pts, "Omega/Delta", label).as_bytes())?;
            extra.push(path);
        }
    }
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let csv = sweep_csv(&result.rows)?;
    emit(&args.output, csv, &result, manifest, &extra)
}

pub fn finite_size(args: &FiniteSizeArgs) -> CliResult<()> {
    let start = Instant::now();
    let grid = parse_grid(&args.grid)?;
    let dist = waiting_time(args.gamma, args.t_max)?;
    let mut results: Vec<SweepResult> = Vec::new();
    for &n in &args.sizes {
        let settings = SweepSettings {
            n_spins: n,
            observation_time: args.time,
            n_trajectories: args.trajectories,
            seed: args.seed,
            force_monte_carlo: true,
            max_resets_per_trajectory: args.max_resets,
        };
        results.push(sweep_stationary(args.protocol, &dist, &grid, &settings)?);
    }
    let blocks: Vec<(String, Vec<_>)> = results
        .iter()
        .map(|r| (r.settings.n_spins.to_string(), r.rows.clone()))
        .collect();
    let mut manifest = RunManifest::new("finite-size", args, Some(args.seed));
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    emit(
        &args.output,
        finite_size_csv(&blocks)?,
        &results,
        manifest,
        &[],
    )
}

pub fn default_offset(
    observable: Observable,
    baseline: Option<f64>,
    direction: Direction,
) -> Offset {
    let b = baseline.unwrap_or(match observable {
        Observable::Density => 0.5,
        Observable::Correlation | Observable::Lqu => 0.0,
    });
    match direction {
        Direction::Above => Offset::Above(b),
        Direction::Below => Offset::Below(b),
    }
}

pub fn fit(args: &FitArgs) -> CliResult<PowerLawFit> {
    let rows = read_sweep_rows(&args.input)?;
    let offset = default_offset(args.observable, args.baseline, args.direction);
    let fit = fit_power_law_rows(
        &rows,
        args.observable,
        args.critical_point,
        args.window,
        offset,
    )?;
    let mut json = serde_json::to_vec_pretty(&fit).map_err(|e| CliError::io("<json>", e))?;
    json.push(b'\n');
    if let Some(out) = &args.out {
        write_file(out, &json)?;
    }
    print!("{}", String::from_utf8_lossy(&json));
    Ok(fit)
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let checks = run_checks(args);
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed > 0 {
        return Err(CliError::Verify { failed });
    }
    Ok(())
}
