use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use twog2t::bench::{emit_csv, run_benchmark, BenchConfig};
use twog2t::group::{PrimeGroup, Ristretto255, ToyGroup, DEFAULT_TOY_ORDER};
use twog2t::lab::{estimate_soundness, test_independence, trial_rng, Strategy};
use twog2t_service::files;
use twog2t_service::outsource::{run_outsource, OutsourceConfig, EXIT_FAILURE};
use twog2t_service::server::{serve_forever, Server, ServerConfig, ServerMode};

#[derive(Parser)]
#[command(name = "twog2t", version, about = "Verifiable MSM outsourcing with two-element responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an outsourcing server.
    Serve(ServeArgs),
    /// Set up (once) and run verified queries against a server.
    Outsource(OutsourceArgs),
    /// Monte Carlo soundness experiment on the toy group.
    AdversaryLab(LabArgs),
    /// Joint distribution test of the key and the merged bases.
    Independence(IndependenceArgs),
    /// Speedup benchmark on Ristretto255; writes CSV.
    Bench(BenchArgs),
    /// Write a random bases file.
    GenBases(GenBasesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Production,
    Toy,
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long, value_enum, default_value = "production")]
    backend: BackendArg,
    /// Toy group order (toy backend only).
    #[arg(long, default_value_t = DEFAULT_TOY_ORDER)]
    q: u64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    #[command(flatten)]
    group: GroupArgs,
    /// Bases for uploads that carry only T.
    #[arg(long)]
    bases_file: Option<PathBuf>,
    #[arg(long, default_value = "honest")]
    server_mode: ServerMode,
    #[arg(long, default_value_t = twog2t_service::store::DEFAULT_CAPACITY)]
    capacity: usize,
}

#[derive(Args)]
struct OutsourceArgs {
    /// Server address. Without it a local server is started.
    #[arg(long)]
    connect: Option<String>,
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    queries: usize,
    /// Secret key file; created on first use, reused afterwards.
    #[arg(long)]
    key_file: Option<PathBuf>,
    /// Bases file; created from the seed if missing.
    #[arg(long)]
    bases_file: Option<PathBuf>,
    /// Makes bases, key and queries deterministic. For testing only.
    #[arg(long)]
    seed: Option<u64>,
    /// Behaviour of the local server (ignored with --connect).
    #[arg(long, default_value = "honest")]
    server_mode: ServerMode,
    /// Upload only T; the server must hold the same bases file.
    #[arg(long)]
    no_upload_bases: bool,
}

#[derive(Args)]
struct LabArgs {
    /// guess_r, partial_sum[:k], random_pair, adaptive_eliminator or honest.
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = DEFAULT_TOY_ORDER)]
    q: u64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    executions: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the key=value report (also printed).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct IndependenceArgs {
    #[arg(long, default_value_t = 11)]
    q: u64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1_210_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, default_value = "10..18", value_parser = parse_exponents)]
    exponents: Exponents,
    #[arg(long, default_value_t = twog2t::bench::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = twog2t::bench::DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Threads for the optimized MSM (1 = sequential engine).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also time the curve library's variable-time MSM.
    #[arg(long)]
    library: bool,
}

#[derive(Args)]
struct GenBasesArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct Exponents(Vec<u32>);

fn parse_exponents(s: &str) -> std::result::Result<Exponents, String> {
    let bad = || format!("expected `a..b` or `a,b,c`, got `{s}`");
    let out: Vec<u32> = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u32, u32) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            (a..=b).collect()
        }
        None => s.split(',').map(|e| e.trim().parse().map_err(|_| bad())).collect::<std::result::Result<_, _>>()?,
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(Exponents(out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Serve(args) => serve(args).map(|()| 0),
        Command::Outsource(args) => outsource(args),
        Command::AdversaryLab(args) => lab(args),
        Command::Independence(args) => independence(args),
        Command::Bench(args) => bench(args),
        Command::GenBases(args) => gen_bases(args).map(|()| 0),
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    fn go<G: PrimeGroup>(group: G, args: &ServeArgs) -> Result<()> {
        let mut config = ServerConfig::new(group.clone());
        config.mode = args.server_mode;
        config.capacity = args.capacity;
        if let Some(path) = &args.bases_file {
            let bases = files::read_bases(path, &group).with_context(|| format!("reading {}", path.display()))?;
            config.default_bases = Some(Arc::new(bases));
        }
        let (backend, mode) = (group.backend().name(), args.server_mode);
        serve_forever(args.listen.as_str(), Arc::new(Server::new(config)), |addr| {
            println!("listening on {addr} ({backend} backend, {mode} mode)");
            let _ = std::io::Write::flush(&mut std::io::stdout());
        })?;
        Ok(())
    }
    match args.group.backend {
        BackendArg::Production => go(Ristretto255, &args),
        BackendArg::Toy => go(ToyGroup::new(args.group.q)?, &args),
    }
}

fn outsource(args: OutsourceArgs) -> Result<i32> {
    let config = OutsourceConfig {
        connect: args.connect,
        n: args.n,
        queries: args.queries,
        key_file: args.key_file,
        bases_file: args.bases_file,
        seed: args.seed,
        server_mode: args.server_mode,
        upload_bases: !args.no_upload_bases,
    };
    let mut stdout = std::io::stdout().lock();
    let report = match args.group.backend {
        BackendArg::Production => run_outsource(Ristretto255, &config, &mut stdout),
        BackendArg::Toy => run_outsource(ToyGroup::new(args.group.q)?, &config, &mut stdout),
    }?;
    Ok(report.exit_code())
}

fn lab(args: LabArgs) -> Result<i32> {
    let strategy: Strategy = args.strategy.parse()?;
    let report = estimate_soundness(args.q, args.n, strategy, args.trials, args.executions, args.seed)?;
    let text = report.to_kv();
    print!("{text}");
    if let Some(path) = &args.report {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if report.pass { 0 } else { 2 })
}

fn independence(args: IndependenceArgs) -> Result<i32> {
    let report = test_independence(args.q, args.n, args.samples, args.seed)?;
    println!("{}", report.summary());
    Ok(if report.pass { 0 } else { 2 })
}

fn bench(args: BenchArgs) -> Result<i32> {
    let config = BenchConfig {
        exponents: args.exponents.0,
        iterations: args.iterations,
        warmup: args.warmup,
        seed: args.seed,
        threads: args.threads,
        library_column: args.library,
    };
    let outcome = run_benchmark(&config)?;
    for skip in &outcome.skipped {
        eprintln!("skipped n={}: {}", skip.n, skip.reason);
    }
    for r in &outcome.records {
        println!(
            "n={:>7}  msm_opt={:.6}s  msm_naive={:.6}s  verify={:.6}s  speedup_opt={:.1}  speedup_naive={:.1}",
            r.n, r.t_msm_optimized, r.t_msm_naive, r.t_verify, r.speedup_opt, r.speedup_naive
        );
    }
    if outcome.records.is_empty() {
        bail!("no size could be measured");
    }
    emit_csv(&outcome.records, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(0)
}

fn gen_bases(args: GenBasesArgs) -> Result<()> {
    fn go<G: PrimeGroup>(group: G, args: &GenBasesArgs) -> Result<()> {
        if args.n == 0 {
            bail!("--n must be positive");
        }
        let mut rng = trial_rng(args.seed, twog2t_service::outsource::BASES_STREAM);
        let bases: Vec<_> = (0..args.n).map(|_| group.random_element(&mut rng)).collect();
        files::write_bases(&args.out, &group, &bases)?;
        Ok(())
    }
    match args.group.backend {
        BackendArg::Production => go(Ristretto255, &args),
        BackendArg::Toy => go(ToyGroup::new(args.group.q)?, &args),
    }
}
