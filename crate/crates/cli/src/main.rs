use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use asph_cli::{convergence_study, run_scenario, OutputFormat, Scenario, ScenarioConfig, Study, THREADS_ENV};
use clap::Parser;

/// Runs anisotropic SPH diffusion benchmarks.
#[derive(Debug, Parser)]
#[command(name = "asph", version)]
struct Args {
    /// patch, rectangle, gaussian-diag, gaussian-full or aliev-panfilov-2d.
    #[arg(long)]
    scenario: Option<String>,
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dp: Option<f64>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt_safety: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshots: Option<String>,
    /// Probe position `x,y`.
    #[arg(long)]
    probe: Option<String>,
    /// Diffusion tensor `D11,D12,D22`.
    #[arg(long)]
    diffusion: Option<String>,
    /// Comma-separated halving spacings; runs a resolution study instead of
    /// a single scenario. Accepts `sine` and `quadratic` as well as the
    /// scenario names.
    #[arg(long, value_name = "DP,DP,DP")]
    convergence: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve(args: &Args) -> Result<ScenarioConfig> {
    let named = match args.scenario.as_deref() {
        Some("sine" | "quadratic") if args.convergence.is_some() => Some(Scenario::Patch),
        Some(s) => Some(s.parse::<Scenario>()?),
        None => None,
    };
    let mut cfg = match (&args.config, named) {
        (Some(path), s) => {
            let cfg = ScenarioConfig::from_file(path, s)?;
            if let Some(s) = s.filter(|s| *s != cfg.scenario && args.convergence.is_none()) {
                anyhow::bail!("--scenario {s} conflicts with `scenario = {}` in {}", cfg.scenario, path.display());
            }
            cfg
        }
        (None, Some(s)) => ScenarioConfig::defaults(s),
        (None, None) => anyhow::bail!("either --scenario or --config is required"),
    };
    let overrides: [(&str, Option<String>); 10] = [
        ("dp", args.dp.map(|v| v.to_string())),
        ("ny", args.ny.map(|v| v.to_string())),
        ("ratio", args.ratio.map(|v| v.to_string())),
        ("t_end", args.t_end.map(|v| v.to_string())),
        ("dt_safety", args.dt_safety.map(|v| v.to_string())),
        ("out_dir", args.out_dir.as_ref().map(|p| p.display().to_string())),
        ("format", args.format.map(|f| f.extension().to_owned())),
        ("snapshots", args.snapshots.clone()),
        ("probe", args.probe.clone()),
        ("diffusion", args.diffusion.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
        }
    }
    cfg.validate().map_err(anyhow::Error::msg)?;
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(args: Args) -> Result<()> {
    configure_threads()?;
    let cfg = resolve(&args)?;
    if args.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }
    if let Some(list) = &args.convergence {
        let study: Study = match args.scenario.as_deref() {
            Some(s) => s.parse().map_err(anyhow::Error::msg)?,
            None => Study::Scenario(cfg.scenario),
        };
        let spacings = list
            .split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad spacing `{s}`")))
            .collect::<Result<Vec<_>>>()?;
        let report = convergence_study(study, &cfg, &spacings)?;
        println!("dp,error");
        for (dp, e) in &report.rows {
            println!("{dp:e},{e:.6e}");
        }
        println!("order = {}", report.order_label());
        return Ok(());
    }
    let report = run_scenario(&cfg)?;
    print!("{}", report.metrics.render());
    eprintln!("wrote {} files to {} in {:.2} s", report.files.len(), cfg.out_dir.display(), report.wall_seconds);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
