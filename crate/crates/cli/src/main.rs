use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use softcache_core::catalog::{ingest_catalog, write_bundle};
use softcache_core::oracle::simulate_requests;
use softcache_core::simkit::{run_sweep, solve_scheme, CsvSink, Instance, LoadedInputs, SolveConfig, SweepConfig};
use softcache_core::verify::{self, Scale, SolverSet};

/// Content placement for edge caches with soft cache hits.
#[derive(Parser)]
#[command(name = "softcache", version)]
struct Cli {
    /// Worker threads; defaults to SOFTCACHE_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with one scheme and write the placement.
    Solve(SolveArgs),
    /// Run a parameter sweep and stream the results as CSV.
    Sweep(SweepArgs),
    /// Validate a content file and a relation file and store them as a bundle.
    Ingest(IngestArgs),
    /// Check the solvers against the exhaustive oracle and the objective
    /// properties on random instances.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for `placement.csv` and `summary.json`.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated seeds replacing those from the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    contents: PathBuf,
    #[arg(long)]
    relations: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "small")]
    scale: Scale,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run only these suites.
    #[arg(long)]
    suite: Vec<String>,
    /// Where to write the first counterexample as JSON.
    #[arg(long)]
    counterexample: Option<PathBuf>,
}

/// Verification ran and found a violated bound.
struct VerificationFailed;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Solve(a) => solve(a).map(|()| true),
        Command::Sweep(a) => sweep(a).map(|()| true),
        Command::Ingest(a) => ingest(a).map(|()| true),
        Command::Verify(a) => run_verify(a).map(|r| r.is_ok()),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SOFTCACHE_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .with_context(|| format!("SOFTCACHE_THREADS=`{v}` is not a count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn solve(args: SolveArgs) -> anyhow::Result<()> {
    let mut config = SolveConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let inputs = LoadedInputs::load(&config.scenario)?;
    let instance = Instance::build(&config.scenario, &inputs, config.seed)?;
    let start = Instant::now();
    let run = solve_scheme(&instance, config.scheme)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    run.placement.write_csv(&args.out.join("placement.csv"))?;
    let simulated = if config.scenario.requests > 0 {
        let problem = instance.problem(config.scheme)?;
        Some(simulate_requests(
            &problem,
            &run.placement,
            config.scenario.requests,
            instance.seeds.requests,
        )?)
    } else {
        None
    };
    let summary = serde_json::json!({
        "scheme": config.scheme,
        "seed": config.seed,
        "objective": run.objective,
        "items": run.placement.len(),
        "wall_ms": wall_ms,
        "sim_hit_ratio": simulated.map(|s| s.mean),
        "sim_stderr": simulated.map(|s| s.stderr),
    });
    std::fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    println!("scheme     {}", config.scheme);
    println!("objective  {}", short(run.objective));
    println!("items      {}", run.placement.len());
    println!("wall_ms    {wall_ms:.3}");
    if let Some(s) = simulated {
        println!("simulated  {} ± {}", s.mean, s.stderr);
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut config = SweepConfig::from_path(&args.config)?;
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
        config.validate()?;
    }
    // crash injection for the partial-output tests
    let fail_after: Option<usize> = std::env::var("SOFTCACHE_FAIL_AFTER_ROWS").ok().and_then(|v| v.parse().ok());
    let file = File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut sink = CsvSink::new(BufWriter::new(file));
    let mut rows = 0usize;
    let start = Instant::now();
    run_sweep(&config, |row| {
        sink.write(row)?;
        rows += 1;
        if fail_after == Some(rows) {
            std::process::abort();
        }
        Ok(())
    })?;
    sink.finish()?;
    info!("{rows} rows in {:.1} s", start.elapsed().as_secs_f64());
    eprintln!("wrote {rows} rows to {}", args.out.display());
    Ok(())
}

fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let (catalog, utility) = ingest_catalog(&args.contents, &args.relations)?;
    write_bundle(&args.out, &catalog, &utility)?;
    println!("contents         {}", catalog.num_contents());
    println!("relations        {}", utility.edges()?.len());
    println!("mean degree      {:.4}", utility.mean_related_degree());
    println!("bundle           {}", args.out.display());
    Ok(())
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<Result<(), VerificationFailed>> {
    let solvers = SolverSet::default();
    let report = if args.suite.is_empty() {
        verify::run_all(args.scale, &solvers, args.seed)
    } else {
        let suites = args
            .suite
            .iter()
            .map(|name| verify::run_suite(name, args.scale, &solvers, args.seed))
            .collect::<Result<Vec<_>, _>>()?;
        verify::Report {
            scale: args.scale,
            seed: args.seed,
            suites,
        }
    };
    print!("{report}");
    if report.passed() {
        return Ok(Ok(()));
    }
    if let Some(c) = report.suites.iter().find_map(|s| s.counterexample.as_ref()) {
        let json = serde_json::to_string_pretty(c)?;
        match &args.counterexample {
            Some(path) => write_text(path, &json)?,
            None => eprintln!("{json}"),
        }
        eprintln!(
            "counterexample: suite {} check {} case {}: {}",
            c.suite, c.check, c.case, c.detail
        );
    }
    Ok(Err(VerificationFailed))
}

/// Twelve decimals with trailing zeros dropped, so 0.8999999999999999
/// prints as 0.9.
fn short(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
