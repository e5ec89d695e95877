//! The subcommand runners. Each one resolves its configuration, writes its
//! artifacts into an output directory named by the config's content hash,
//! and finishes with a manifest listing everything it emitted.

use crate::config::{CommandKind, Overrides, Resolved};
use crate::manifest::RunManifest;
use gls_sync::{
    case_frequencies, convergence_time, estimate_bounds, has_local_peak_near, integrate_coupled,
    integrate_master, power_spectrum, run_pipeline, stability_report, sweep_point_recorded,
    write_sweep_csv,
    write_trajectory_csv, ChannelPair, CommsConfig, GlsError, MessageSpec, SweepRow, CONV_EPS,
};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Failure categories mapped onto process exit codes.
#[derive(Debug)]
pub enum AppError {
    /// exit 2: configuration or validation problem
    Config(String),
    /// exit 3: the integration blew past the divergence sentinel
    Numeric(String),
    /// exit 4: filesystem trouble
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numeric(_) => 3,
            AppError::Io(_) => 4,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "error: {m}"),
            AppError::Numeric(m) => write!(f, "error: {m}"),
            AppError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<GlsError> for AppError {
    fn from(e: GlsError) -> Self {
        match e {
            GlsError::Diverged { .. } => AppError::Numeric(e.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<crate::config::ConfigError> for AppError {
    fn from(e: crate::config::ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

pub struct Invocation {
    pub kind: CommandKind,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub overrides: Overrides,
}

pub fn run(inv: &Invocation) -> Result<(), AppError> {
    let raw = match &inv.config_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
            crate::config::parse_str(&text)?
        }
        None => crate::config::parse_str("")?,
    };
    let cfg = crate::config::resolve(inv.kind, raw, &inv.overrides)?;
    let canonical = cfg.canonical();
    let outdir = inv
        .out_dir
        .join(format!("{}-{}", inv.kind.name(), cfg.hash12()));
    fs::create_dir_all(&outdir)?;

    let started = Instant::now();
    let files = match inv.kind {
        CommandKind::Simulate => cmd_simulate(&cfg, &outdir)?,
        CommandKind::Sweep => cmd_sweep(&cfg, &outdir, inv.workers)?,
        CommandKind::Stability => cmd_stability(&cfg, &outdir)?,
        CommandKind::Comms => cmd_comms(&cfg, &outdir)?,
        CommandKind::Spectrum => cmd_spectrum(&cfg, &outdir)?,
    };
    let manifest = RunManifest::new(
        inv.kind.name(),
        canonical,
        files,
        started.elapsed().as_secs_f64(),
    );
    write_file(&outdir, "manifest.json", manifest.to_json().as_bytes())?;
    println!("wrote {}", outdir.display());
    Ok(())
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), AppError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn cmd_simulate(cfg: &Resolved, outdir: &Path) -> Result<Vec<String>, AppError> {
    let traj = integrate_coupled(&cfg.sim)?;
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf).map_err(AppError::from)?;
    write_file(outdir, "trajectory.csv", &buf)?;
    for pair in ChannelPair::ALL {
        let i = pair.index();
        let series: Vec<f64> = traj.e.iter().map(|e| e[i]).collect();
        match convergence_time(&traj.t, &series, CONV_EPS) {
            Some(t) => println!("E{} converged at t = {t}", i + 1),
            None => println!("E{} did not converge below {CONV_EPS}", i + 1),
        }
    }
    Ok(vec!["trajectory.csv".to_string()])
}

fn cmd_sweep(cfg: &Resolved, outdir: &Path, workers: usize) -> Result<Vec<String>, AppError> {
    let grid = cfg.sigma.grid()?;
    let base = cfg.sim;
    let row_sets: Vec<Result<Vec<SweepRow>, GlsError>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| AppError::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            grid.par_iter().map(|s| sweep_point_recorded(&base, *s)).collect()
        })
    } else {
        grid.iter().map(|s| sweep_point_recorded(&base, *s)).collect()
    };
    let mut rows = Vec::with_capacity(grid.len() * 3);
    for set in row_sets {
        rows.extend(set?);
    }
    let result = gls_sync::sync::SweepResult { rows };
    let diverged = result.rows.iter().filter(|r| r.metrics.is_none()).count() / 3;
    let mut buf = Vec::new();
    write_sweep_csv(&result, &mut buf).map_err(AppError::from)?;
    write_file(outdir, "sweep.csv", &buf)?;
    println!("{} sigma points, {} rows", grid.len(), result.rows.len());
    if diverged > 0 {
        println!("{diverged} sigma points diverged; metric cells left empty");
    }
    Ok(vec!["sweep.csv".to_string()])
}

fn cmd_stability(cfg: &Resolved, outdir: &Path) -> Result<Vec<String>, AppError> {
    let report = stability_report(&cfg.sim, cfg.stability_override)?;
    write_file(outdir, "stability.json", report.to_json().as_bytes())?;
    println!(
        "bounds: M = {}, N = {}, P = {}",
        report.bounds.m, report.bounds.n, report.bounds.p
    );
    for (label, conds) in [("symbolic", &report.symbolic), ("k_poly", &report.k_poly)] {
        for (i, c) in conds.iter().enumerate() {
            println!(
                "{label} ({}): {} margin = {}",
                ["i", "ii", "iii"][i],
                if c.holds { "holds" } else { "fails" },
                c.margin
            );
        }
    }
    println!(
        "pd worst-case: {} min minor = {}",
        if report.pd_worstcase.holds {
            "holds"
        } else {
            "fails"
        },
        report.pd_worstcase.min_minor
    );
    Ok(vec!["stability.json".to_string()])
}

fn cmd_comms(cfg: &Resolved, outdir: &Path) -> Result<Vec<String>, AppError> {
    let c = &cfg.comms;
    let freqs = case_frequencies(c.case)?;
    let comms_cfg = CommsConfig {
        sim: cfg.sim,
        messages: freqs.map(|freq| MessageSpec {
            offset: c.offset,
            amplitude: c.amplitude,
            freq,
        }),
        mode: c.mode,
        band_halfwidth: c.band_halfwidth,
        fit_trim: c.fit_trim,
    };
    let out = run_pipeline(&comms_cfg)?;

    let mut buf = Vec::new();
    gls_sync::write_residual_csv(&out.t, &out.residual, &mut buf).map_err(AppError::from)?;
    write_file(outdir, "residual.csv", &buf)?;

    let mut buf = Vec::new();
    gls_sync::spectral::write_spectrum_csv(&out.freqs, &out.power, &mut buf)
        .map_err(AppError::from)?;
    write_file(outdir, "spectrum.csv", &buf)?;

    write_file(
        outdir,
        "fits.json",
        gls_sync::fits_to_json(&out.fits).as_bytes(),
    )?;

    let bin = out.freqs[1] - out.freqs[0];
    for (i, fit) in out.fits.iter().enumerate() {
        let peak = has_local_peak_near(&out.freqs, &out.power, freqs[i], bin);
        println!(
            "message {}: target {} -> fit f = {}, amplitude = {}, adj_r2 = {}{}",
            i + 1,
            freqs[i],
            fit.freq,
            fit.amplitude,
            fit.adj_r2,
            if peak { "" } else { " (no spectral peak)" }
        );
    }
    Ok(vec![
        "residual.csv".to_string(),
        "spectrum.csv".to_string(),
        "fits.json".to_string(),
    ])
}

fn cmd_spectrum(cfg: &Resolved, outdir: &Path) -> Result<Vec<String>, AppError> {
    let traj = integrate_master(&cfg.sim)?;
    let post = traj.suffix(cfg.sim.transient_steps)?;
    let series: Vec<f64> = post.x.iter().map(|x| x[2]).collect();
    let (freqs, power) = power_spectrum(&series, cfg.sim.sample_rate())?;

    let mut buf = Vec::new();
    gls_sync::spectral::write_spectrum_csv(&freqs, &power, &mut buf).map_err(AppError::from)?;
    write_file(outdir, "spectrum.csv", &buf)?;

    let bounds = estimate_bounds(&post)?;
    let (peak_f, _) = freqs
        .iter()
        .zip(&power)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(f, p)| (*f, *p))
        .expect("spectrum is never empty");
    println!(
        "dominant peak f_r = {peak_f} (bin width {})",
        freqs[1] - freqs[0]
    );
    println!("bounds: M = {}, N = {}, P = {}", bounds.m, bounds.n, bounds.p);
    Ok(vec!["spectrum.csv".to_string()])
}
