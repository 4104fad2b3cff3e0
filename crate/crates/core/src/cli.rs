//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | `verify` found a failing invariant |
//! | 2 | usage, config or model-construction error |
//! | 3 | a computation ran out of budget where a definite result was required |
//! | 4 | output could not be written |

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{LoadedConfig, MsetMethod, RunConfig};
use crate::connectivity::{classify, Verdict};
use crate::error::Error;
use crate::io::Artifacts;
use crate::linalg::Vector;
use crate::mandelbrot::raster::describe_map;
use crate::mandelbrot::sweep::with_workers;
use crate::mandelbrot::tiles::contracting_power;
use crate::mandelbrot::{
    boundary_refine, covering_upper_bound, det_fastpath, mset_compute, mset_direct_raster, sweep, tile_ifs,
    ClassificationRaster, MembershipRaster, ParamWindow,
};
use crate::maps::ContractionMap;
use crate::porosity::{dimension_scan_detailed, strong_porosity_probe, ScanRow};
use crate::sets::{attractor_approx_with, chaos_game, AttractorOptions};
use crate::verify::{run_suite, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_OUT: &str = "ifsconn-out";

#[derive(Debug, Parser)]
#[command(name = "ifsconn", version, about = "Attractors and connectedness loci of two-map iterated function systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and scans; 0 uses every core.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Seed; overrides `seed` from the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Determinant shortcut for sweeps and single classifications.
    #[arg(long, global = true, value_enum)]
    pub fastpath: Option<Switch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Cover the attractor of {f, g + w} and report its error bound.
    Attractor,
    /// Decide whether the attractor of {f, g + w} is connected.
    Classify,
    /// Classify every pixel of a parameter window.
    Sweep,
    /// Build the two-digit tile system, classify it and optionally sweep it.
    Tiles,
    /// Membership raster of M_{g,n,D}.
    Mset,
    /// Raster of the covering upper bound for the connectedness locus.
    Covering,
    /// Connected fraction of random translations across dimensions.
    Porosity,
    /// Run the invariant suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Attractor => "attractor",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Tiles => "tiles",
            Command::Mset => "mset",
            Command::Covering => "covering",
            Command::Porosity => "porosity",
            Command::Verify => "verify",
        }
    }
}

/// Failure of a subcommand, already mapped to its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::BudgetExhausted(_) | Error::LatticeOverflow { .. } => EXIT_BUDGET,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub written: Vec<PathBuf>,
    pub code: i32,
}

/// Parses `argv` (including the program name), runs the subcommand, prints
/// its output and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            print!("{}", report.stdout);
            for p in &report.written {
                eprintln!("wrote {}", p.display());
            }
            report.code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    hash: Option<String>,
    seed: u64,
    workers: usize,
    fastpath: Option<bool>,
    out: PathBuf,
    out_given: bool,
}

impl Ctx {
    fn maps(&self) -> Result<(ContractionMap, ContractionMap), Failure> {
        let spec = self.cfg.maps.as_ref().ok_or_else(|| missing("maps"))?;
        Ok(spec.build(self.seed)?)
    }

    fn provenance(&self, command: Command, extra: Value, started: Instant) -> Value {
        let mut p = json!({
            "command": command.name(),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.hash,
            "seed": self.seed,
            "workers": self.workers,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut p, extra) {
            m.extend(e);
        }
        p["timings"] = json!({"total_seconds": started.elapsed().as_secs_f64()});
        p
    }

    fn commit(&self, artifacts: Artifacts) -> Result<Vec<PathBuf>, Failure> {
        artifacts.commit(&self.out).map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })
    }
}

fn missing(block: &str) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("config has no `{block}` block") }
}

/// Runs a parsed command line without printing.
pub fn execute(cli: &Cli) -> Result<Report, Failure> {
    let loaded = match &cli.config {
        Some(p) => Some(LoadedConfig::load(p)?),
        None if cli.command == Command::Verify => None,
        None => {
            return Err(Failure { code: EXIT_CONFIG, message: format!("{} needs --config", cli.command.name()) })
        }
    };
    let (cfg, hash) = match loaded {
        Some(l) => (l.config, Some(l.hash)),
        None => (LoadedConfig::parse(r#"{"version": 1}"#, "default")?.config, None),
    };
    let out_given = cli.out.is_some() || cfg.output.is_some();
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        workers: cli.workers.or(cfg.workers).unwrap_or(0),
        fastpath: cli.fastpath.map(|s| s == Switch::On),
        hash,
        cfg,
        out,
        out_given,
    };
    let started = Instant::now();
    match cli.command {
        Command::Attractor => cmd_attractor(&ctx, started),
        Command::Classify => cmd_classify(&ctx, started),
        Command::Sweep => cmd_sweep(&ctx, started),
        Command::Tiles => cmd_tiles(&ctx, started),
        Command::Mset => cmd_mset(&ctx, started),
        Command::Covering => cmd_covering(&ctx, started),
        Command::Porosity => cmd_porosity(&ctx, started),
        Command::Verify => cmd_verify(&ctx, started),
    }
}

fn vector(v: &[f64], dim: usize) -> Result<Vector, Failure> {
    crate::error::check_dim(dim, v.len())?;
    Ok(Vector::from_column_slice(v))
}

fn cmd_attractor(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.attractor.as_ref().ok_or_else(|| missing("attractor"))?;
    let (f, g) = ctx.maps()?;
    let w = vector(&block.w, f.dim())?;
    let gw = g.translate(w.clone())?;
    let eps = block.eps.get();
    let tol = block.tol.map_or(eps / 4.0, |t| t.get());
    let defaults = AttractorOptions::default();
    let opts = AttractorOptions {
        max_iterations: block.max_iterations.unwrap_or(defaults.max_iterations),
        max_cells: block.max_cells.unwrap_or(defaults.max_cells),
        ..defaults
    };
    let a = attractor_approx_with(&f, &gw, eps, tol, &opts)?;
    let (lo, hi) = a.cover.bounds();
    let summary = json!({
        "eps": eps,
        "tol": a.tol,
        "err": a.err,
        "rate": a.rate,
        "iterations": a.iterations,
        "heuristic": a.heuristic,
        "last_step": a.last_step,
        "tightened": a.tightened,
        "cells": a.cover.len(),
        "bounds": {"lo": lo, "hi": hi},
    });
    let mut art = Artifacts::new();
    art.add("attractor.cells", a.cover.to_text())?;
    let mut extra = json!({
        "maps": {"f": describe_map(&f), "g": describe_map(&g)},
        "w": block.w,
        "attractor": summary.clone(),
    });
    if let Some(n) = block.chaos_points {
        let cloud = chaos_game(&f, &gw, n, ctx.seed)?;
        art.add("chaos.csv", cloud.to_csv())?;
        extra["chaos_points"] = json!(n);
    }
    art.add_json("attractor.json", &ctx.provenance(Command::Attractor, extra, started))?;
    let stdout = format!("cells={} err={:?} iterations={}\n", a.cover.len(), a.err, a.iterations);
    Ok(Report { stdout, written: ctx.commit(art)?, code: EXIT_OK })
}

fn fast_verdict(ctx: &Ctx, f: &ContractionMap, g: &ContractionMap) -> Result<bool, Failure> {
    if !ctx.fastpath.unwrap_or(true) {
        return Ok(false);
    }
    Ok(match (f.as_affine(), g.as_affine()) {
        (Some(a), Some(b)) => det_fastpath(a, b)?,
        _ => false,
    })
}

fn cmd_classify(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.classify.as_ref().ok_or_else(|| missing("classify"))?;
    let (f, g) = ctx.maps()?;
    let w = vector(&block.w, f.dim())?;
    let verdict = if fast_verdict(ctx, &f, &g)? {
        Verdict::fastpath_connected()
    } else {
        classify(&f, &g, &w, &block.policy)?
    };
    let cert = serde_json::to_string_pretty(&verdict.certificate).map_err(|e| Error::Parse(e.to_string()))?;
    let stdout = format!("{}\n{cert}\n", verdict.class);
    let mut written = Vec::new();
    if ctx.out_given {
        let mut art = Artifacts::new();
        let extra = json!({
            "maps": {"f": describe_map(&f), "g": describe_map(&g)},
            "w": block.w,
            "policy": block.policy,
            "verdict": verdict,
        });
        art.add_json("classify.json", &ctx.provenance(Command::Classify, extra, started))?;
        written = ctx.commit(art)?;
    }
    Ok(Report { stdout, written, code: EXIT_OK })
}

fn add_raster(art: &mut Artifacts, stem: &str, r: &ClassificationRaster, ctx: &Ctx) -> Result<(), Failure> {
    art.add(&format!("{stem}.pgm"), r.to_pgm())?;
    art.add(&format!("{stem}.csv"), r.to_csv())?;
    let mut report = r.report.clone();
    report.seed = Some(ctx.seed);
    report.config_hash = ctx.hash.clone();
    art.add_json(&format!("{stem}.json"), &report)?;
    Ok(())
}

fn counts_line(r: &ClassificationRaster) -> String {
    let c = r.counts();
    format!("connected={} disconnected={} unknown={}\n", c.connected, c.disconnected, c.unknown)
}

fn cmd_sweep(ctx: &Ctx, _started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
    let (f, g) = ctx.maps()?;
    let window = block.window.build()?;
    let mut policy = block.policy.clone();
    policy.workers = ctx.workers;
    if let Some(fp) = ctx.fastpath {
        policy.fastpath = fp;
    }
    let raster = sweep(&f, &g, &window, &policy)?;
    let mut art = Artifacts::new();
    add_raster(&mut art, "sweep", &raster, ctx)?;
    let mut stdout = counts_line(&raster);
    if block.refine_depth > 0 {
        let refined = boundary_refine(&f, &g, &raster, block.refine_depth, &policy)?;
        add_raster(&mut art, "refined", &refined, ctx)?;
        stdout.push_str(&format!("refined: {}", counts_line(&refined)));
    }
    Ok(Report { stdout, written: ctx.commit(art)?, code: EXIT_OK })
}

fn cmd_tiles(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.tiles.as_ref().ok_or_else(|| missing("tiles"))?;
    let maps = tile_ifs(&block.tile)?;
    let (f, g) = (&maps[0], &maps[1]);
    let inv = block
        .tile
        .a()?
        .try_inverse()
        .ok_or_else(|| Error::Singular("tile matrix".into()))?;
    let (power, power_norm) = contracting_power(&inv)?;
    let verdict = classify(f, g, &Vector::zeros(f.dim()), &block.policy)?;
    let mut art = Artifacts::new();
    let mut stdout = format!("{}\n", verdict.class);
    if let Some(ws) = &block.window {
        let window = ws.build()?;
        let policy = crate::mandelbrot::SweepPolicy {
            classify: block.policy.clone(),
            fastpath: ctx.fastpath.unwrap_or(true),
            workers: ctx.workers,
        };
        let raster = sweep(f, g, &window, &policy)?;
        add_raster(&mut art, "tiles_sweep", &raster, ctx)?;
        stdout.push_str(&counts_line(&raster));
    }
    let extra = json!({
        "tile": block.tile,
        "contracting_power": power,
        "contracting_norm": power_norm,
        "maps": {"f": describe_map(f), "g": describe_map(g)},
        "policy": block.policy,
        "verdict": verdict,
    });
    art.add_json("tiles.json", &ctx.provenance(Command::Tiles, extra, started))?;
    Ok(Report { stdout, written: ctx.commit(art)?, code: EXIT_OK })
}

fn add_membership(
    art: &mut Artifacts,
    stem: &str,
    r: &MembershipRaster,
    ctx: &Ctx,
    command: Command,
    window: &ParamWindow,
    extra: Value,
    started: Instant,
) -> Result<(), Failure> {
    art.add(&format!("{stem}.pgm"), r.to_pgm())?;
    art.add(&format!("{stem}.csv"), r.to_csv())?;
    let mut extra = extra;
    extra["window"] = serde_json::to_value(window).map_err(|e| Error::Parse(e.to_string()))?;
    extra["members"] = json!(r.count());
    art.add_json(&format!("{stem}.json"), &ctx.provenance(command, extra, started))?;
    Ok(())
}

fn cmd_mset(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.mset.as_ref().ok_or_else(|| missing("mset"))?;
    let (_, g) = ctx.maps()?;
    let ga = g.as_affine().ok_or_else(|| Error::InvalidArgument("mset needs an affine g".into()))?;
    let window = block.window.build()?;
    let d = block.domain.cover(block.eps.get())?;
    let l = ga.linear_part();
    let raster = with_workers(ctx.workers, || match block.method {
        MsetMethod::ClosedForm => mset_compute(l, block.n, &d, &window),
        MsetMethod::Direct => mset_direct_raster(l, block.n, &d, &window),
    })??;
    let extra = json!({
        "g": describe_map(&g),
        "n": block.n,
        "domain": block.domain,
        "eps": block.eps,
        "method": block.method,
    });
    let mut art = Artifacts::new();
    add_membership(&mut art, "mset", &raster, ctx, Command::Mset, &window, extra, started)?;
    let stdout = format!("members={} of {}\n", raster.count(), window.len());
    Ok(Report { stdout, written: ctx.commit(art)?, code: EXIT_OK })
}

fn cmd_covering(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let block = ctx.cfg.covering.as_ref().ok_or_else(|| missing("covering"))?;
    let (f, g) = ctx.maps()?;
    let window = block.window.build()?;
    let raster = with_workers(ctx.workers, || {
        covering_upper_bound(&f, &g, block.k.get(), block.nmax, &window, block.eps.get())
    })??;
    let extra = json!({
        "maps": {"f": describe_map(&f), "g": describe_map(&g)},
        "k": block.k,
        "nmax": block.nmax,
        "eps": block.eps,
    });
    let mut art = Artifacts::new();
    add_membership(&mut art, "covering", &raster, ctx, Command::Covering, &window, extra, started)?;
    let stdout = format!("marked={} of {}\n", raster.count(), window.len());
    Ok(Report { stdout, written: ctx.commit(art)?, code: EXIT_OK })
}

fn cmd_porosity(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let default = crate::config::PorosityBlock::default();
    let block = ctx.cfg.porosity.as_ref().unwrap_or(&default);
    let details = with_workers(ctx.workers, || {
        dimension_scan_detailed(&block.family, block.radius.get(), block.samples, ctx.seed, &block.policy)
    })??;
    let mut csv = String::from(ScanRow::CSV_HEADER);
    csv.push('\n');
    let mut samples = String::new();
    let mut probes = Vec::new();
    for det in &details {
        csv.push_str(&det.row.csv());
        csv.push('\n');
        for s in &det.samples {
            let rec = json!({
                "d": det.row.d,
                "w": s.w.as_slice(),
                "class": s.verdict.class,
                "gap": s.verdict.certificate.gap,
                "within_bound": s.within_bound,
                "in_difference": s.in_difference,
            });
            samples.push_str(&rec.to_string());
            samples.push('\n');
        }
        if let Some(p) = &block.probe {
            let connected: Vec<Vector> = det
                .samples
                .iter()
                .filter(|s| s.verdict.class == crate::connectivity::Class::Connected)
                .map(|s| s.w.clone())
                .collect();
            let x = Vector::zeros(det.row.d);
            let witness = strong_porosity_probe(&connected, &x, p.radius.get(), p.alpha, p.trials, ctx.seed)?;
            probes.push(json!({
                "d": det.row.d,
                "radius": p.radius,
                "alpha": p.alpha,
                "trials": p.trials,
                "points": connected.len(),
                "witness": witness.as_ref().map(|y| y.as_slice().to_vec()),
            }));
        }
    }
    let rows: Vec<&ScanRow> = details.iter().map(|d| &d.row).collect();
    let extra = json!({
        "family": block.family,
        "radius": block.radius,
        "samples": block.samples,
        "policy": block.policy,
        "eps_schedule": block.policy.schedule(),
        "rows": rows,
        "probes": probes,
    });
    let mut art = Artifacts::new();
    art.add("porosity.csv", csv.clone())?;
    art.add("porosity_samples.jsonl", samples)?;
    art.add_json("porosity.json", &ctx.provenance(Command::Porosity, extra, started))?;
    Ok(Report { stdout: csv, written: ctx.commit(art)?, code: EXIT_OK })
}

fn cmd_verify(ctx: &Ctx, started: Instant) -> Result<Report, Failure> {
    let report = with_workers(ctx.workers, || run_suite(ctx.seed))?;
    let mut written = Vec::new();
    if ctx.out_given {
        let mut art = Artifacts::new();
        let extra = json!({"report": report});
        art.add_json("verify.json", &ctx.provenance(Command::Verify, extra, started))?;
        written = ctx.commit(art)?;
    }
    Ok(Report { stdout: report.summary(), written, code: verify_exit_code(&report) })
}

pub fn verify_exit_code(report: &VerifyReport) -> i32 {
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;

    fn write_config(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn missing_config_is_usage_error() {
        assert_eq!(run(["ifsconn", "sweep"]), EXIT_CONFIG);
        assert_eq!(run(["ifsconn", "bogus"]), EXIT_CONFIG);
        assert_eq!(run(["ifsconn", "sweep", "--fastpath", "maybe"]), EXIT_CONFIG);
    }

    #[test]
    fn classify_halves() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"version": 1,
               "maps": {"f": {"scalar": {"dim": 1, "factor": 0.5}}, "g": {"scalar": {"dim": 1, "factor": 0.5}}},
               "classify": {"w": [1.0]}}"#,
        );
        let cli = Cli::try_parse_from(["ifsconn", "classify", "--config", cfg.to_str().unwrap(), "--fastpath", "off"]).unwrap();
        let rep = execute(&cli).unwrap();
        assert!(rep.stdout.starts_with("CONNECTED\n"), "{}", rep.stdout);
        assert!(rep.written.is_empty());
    }

    #[test]
    fn missing_block_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), r#"{"version": 1}"#);
        let code = run(["ifsconn", "mset", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG);
    }
}
