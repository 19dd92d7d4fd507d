use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;

use flightlab_core::{
    crossing_radius_4d, density_grid, fmt12, run_verification, simulate as simulate_path,
    write_density_csv, write_jsonl, write_rate_csv, Error, Family, RateFunction, RngStream,
    VerifyConfig,
};

use crate::config::{load, LawConfig, RatesConfig};
use crate::Opts;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or flags (exit code 2).
    Invalid(anyhow::Error),
    /// The run itself failed (exit code 1).
    Run(anyhow::Error),
    /// A verification finished with verdict FAIL (exit code 1).
    Verdict,
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn run(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Run(e.into())
}

/// Core errors raised after validation are run failures; the rest are
/// configuration problems.
fn classify(e: Error) -> Failure {
    match e {
        Error::InsufficientSamples { .. } | Error::InclusionViolated(_) => run(e),
        _ => invalid(e),
    }
}

pub fn with_threads<F>(threads: Option<usize>, f: F) -> Outcome
where
    F: FnOnce() -> Outcome + Send,
{
    let Some(n) = threads else { return f() };
    if n == 0 {
        return Err(invalid(anyhow!("threads: must be at least 1")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(run)?;
    pool.install(f)
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(run)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>) -> Outcome {
    w.flush().context("writing output").map_err(run)
}

pub fn simulate(opts: &Opts) -> Outcome {
    let cfg: LawConfig = load(opts, Some("samples")).map_err(invalid)?;
    if cfg.points.is_some() {
        return Err(invalid(anyhow!("points: not used by simulate")));
    }
    let Some(samples) = cfg.samples else {
        return Err(invalid(anyhow!("samples: required")));
    };
    if samples == 0 {
        return Err(invalid(anyhow!("samples: must be at least 1")));
    }
    let spec = cfg.spec().map_err(invalid)?;
    let stream = RngStream::new(cfg.seed, 0);
    let paths = (0..samples)
        .into_par_iter()
        .map(|i| simulate_path(&spec, &mut stream.substream(i).rng()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(classify)?;

    let mut w = open_out(opts.out.as_deref())?;
    write_jsonl(&mut w, &spec, &paths)
        .context("writing paths")
        .map_err(run)?;
    finish(w)?;

    let n = paths.len() as f64;
    let mean_norm = paths.iter().map(|p| p.endpoint_norm()).sum::<f64>() / n;
    let mean_changes = paths.iter().map(|p| p.n_changes() as f64).sum::<f64>() / n;
    let summary = format!(
        "paths={} mean_endpoint_norm={} mean_changes={}",
        paths.len(),
        fmt12(mean_norm),
        fmt12(mean_changes)
    );
    if opts.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

pub fn density(opts: &Opts) -> Outcome {
    let cfg: LawConfig = load(opts, None).map_err(invalid)?;
    if cfg.samples.is_some() {
        return Err(invalid(anyhow!("samples: not used by density")));
    }
    let law = cfg.grid_law().map_err(invalid)?;
    let rows = density_grid(&law, cfg.points.unwrap_or(100)).map_err(classify)?;
    let mut w = open_out(opts.out.as_deref())?;
    write_density_csv(&mut w, &rows)
        .context("writing density grid")
        .map_err(run)?;
    finish(w)
}

pub fn rates(opts: &Opts) -> Outcome {
    if opts.seed.is_some() {
        return Err(invalid(anyhow!(
            "seed: rates are deterministic and take no seed"
        )));
    }
    let cfg: RatesConfig = load(opts, None).map_err(invalid)?;
    let RatesConfig {
        lambda,
        c,
        step,
        sigma2,
        ..
    } = cfg;
    if !(step > 0.0 && step <= c) {
        return Err(invalid(anyhow!("step: need 0 < step <= c, got {step}")));
    }
    let mut list = vec![
        RateFunction::standard(2, lambda, c).map_err(classify)?,
        RateFunction::standard(4, lambda, c).map_err(classify)?,
    ];
    let ws = cfg.w.values();
    for &w in &ws {
        list.push(RateFunction::conditional(Family::X, 2, c, w).map_err(classify)?);
        list.push(RateFunction::conditional(Family::Y, 4, c, w).map_err(classify)?);
    }
    if let Some(s2) = sigma2 {
        list.push(RateFunction::brownian(s2).map_err(classify)?);
    }
    let intervals = (c / step).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=intervals)
        .map(|k| c * k as f64 / intervals as f64)
        .collect();

    let mut w = open_out(opts.out.as_deref())?;
    write_rate_csv(&mut w, &list, &grid)
        .context("writing rate grid")
        .map_err(run)?;
    finish(w)?;
    for &w in ws.iter().filter(|&&w| w < lambda) {
        if let Ok(x) = crossing_radius_4d(lambda, c, w) {
            eprintln!(
                "w={}: J_4(.; w) crosses J_4 at r = {} (xi = {})",
                fmt12(w),
                fmt12(x.gamma * c),
                fmt12(x.xi)
            );
        }
    }
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

pub fn verify(opts: &Opts) -> Outcome {
    if opts.points.is_some() || opts.n.is_some() || opts.t.is_some() {
        return Err(invalid(anyhow!(
            "verify takes t_grid and w from the config, not --t/--n/--points"
        )));
    }
    let cfg: VerifyConfig = load(opts, Some("samples_per_t")).map_err(invalid)?;
    cfg.validate().map_err(classify)?;
    let report = run_verification(&cfg).map_err(classify)?;

    let mut w = open_out(opts.out.as_deref())?;
    report
        .write_csv(&mut w)
        .context("writing results")
        .map_err(run)?;
    finish(w)?;
    let summary = serde_json::to_string_pretty(&report.summary_json()).map_err(run)?;
    match &opts.out {
        Some(out) => {
            let path = summary_path(out);
            std::fs::write(&path, format!("{summary}\n"))
                .with_context(|| format!("writing {}", path.display()))
                .map_err(run)?;
            println!("{summary}");
        }
        None => eprintln!("{summary}"),
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}
