//! `hanabi`: run tournaments, compute behavioral metrics, regress ratings on
//! metrics and serve the human-bot experiment.
//!
//! Results go to files and a one-line JSON summary to stdout. Failures exit
//! nonzero with `{"schema":1,"error":{"kind","message"}}` on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hanabi_core::agents::{default_pool, serve_policy, AgentSpec};
use hanabi_core::harness::{load_pool, read_tournament, run_tournament, write_tournament, TournamentConfig};
use hanabi_core::metrics::{compute_report, read_report_csv, report_hash, write_report_csv, Granularity, MetricsConfig};
use hanabi_core::stats::cohort::DEFAULT_ALPHA;
use hanabi_core::stats::{
    cohort_regressions, read_ratings, synthetic_ratings, write_letter_values_csv, write_ratings,
    write_regressions_csv, AgentRoles, Cohort, ItemCoding, SyntheticSpec,
};
use hanabi_core::KnowledgeMode;
use hanabi_expserver::{AppState, ServerConfig};
use serde_json::json;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "hanabi", version, about = "Two-player Hanabi agent evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play every ordered pairing of the pool and write traces.
    Tournament(TournamentArgs),
    /// Compute the behavioral metrics table from a tournament directory.
    Metrics(MetricsArgs),
    /// Regress teamwork ratings on each metric.
    Regress(RegressArgs),
    /// Generate ratings that follow a planted linear relation to a metric.
    SynthRatings(SynthArgs),
    /// Run the experiment server.
    Serve(ServeArgs),
    /// Answer an external-policy stream with the first legal action.
    #[command(hide = true)]
    EchoPolicy,
}

#[derive(Args)]
struct TournamentArgs {
    /// Tournament TOML; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Games per ordered pairing.
    #[arg(long)]
    games: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Agent pool TOML, replacing the config's agents.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, value_enum)]
    knowledge: Option<Knowledge>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Directory written by `tournament`.
    #[arg(long)]
    traces: PathBuf,
    /// Output CSV; `metrics.csv` inside the trace directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of sampled concept formulas for context independence.
    #[arg(long, default_value_t = MetricsConfig::default().ci_formulas)]
    ci_formulas: usize,
    #[arg(long, default_value_t = 0)]
    ci_seed: u64,
    /// Compute entropies, IC and CI per game instead of per pairing block.
    #[arg(long)]
    per_game: bool,
    /// Recompute labels and contexts under this knowledge mode.
    #[arg(long, value_enum)]
    relabel: Option<Knowledge>,
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    /// Pool the metrics came from, used to tell random and hand-written
    /// bots apart; the default pool when absent.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Keep only this cohort's rows; both by default.
    #[arg(long, value_enum)]
    cohort: Option<CohortArg>,
    #[arg(long, value_enum, default_value_t = Coding::ZeroToSix)]
    coding: Coding,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-bot letter values of the ratings here.
    #[arg(long)]
    quantiles: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    metrics: PathBuf,
    /// Metric column, e.g. "Self-play".
    #[arg(long)]
    metric: String,
    #[arg(long, allow_hyphen_values = true)]
    slope: f64,
    #[arg(long, allow_hyphen_values = true)]
    intercept: f64,
    /// Standard deviation of the Gaussian noise on each rating.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 20)]
    per_bot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Coding::ZeroToSix)]
    coding: Coding,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Server TOML; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_sessions_per_bot: Option<u32>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Knowledge {
    HintsOnly,
    CardCounting,
}

impl From<Knowledge> for KnowledgeMode {
    fn from(k: Knowledge) -> KnowledgeMode {
        match k {
            Knowledge::HintsOnly => KnowledgeMode::HintsOnly,
            Knowledge::CardCounting => KnowledgeMode::CardCounting,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum CohortArg {
    All,
    NoRandom,
}

impl From<CohortArg> for Cohort {
    fn from(c: CohortArg) -> Cohort {
        match c {
            CohortArg::All => Cohort::All,
            CohortArg::NoRandom => Cohort::NoRandom,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Coding {
    ZeroToSix,
    OneToSeven,
}

impl From<Coding> for ItemCoding {
    fn from(c: Coding) -> ItemCoding {
        match c {
            Coding::ZeroToSix => ItemCoding::ZeroToSix,
            Coding::OneToSeven => ItemCoding::OneToSeven,
        }
    }
}

fn print_summary(value: serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{value}")?;
    out.flush()?;
    Ok(())
}

fn tournament(args: TournamentArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => TournamentConfig::load(path)?,
        None => TournamentConfig::default(),
    };
    if let Some(n) = args.games {
        if n == 0 {
            bail!("--games must be positive");
        }
        config.games_per_pairing = n;
    }
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(pool) = args.pool {
        config.agents.clear();
        config.pool_file = Some(pool);
    }
    if let Some(k) = args.knowledge {
        config.knowledge_mode = k.into();
    }
    let (result, batch) = run_tournament(&config)?;
    write_tournament(&args.out, &result, &batch)?;
    print_summary(json!({
        "schema": SCHEMA,
        "config_hash": result.config_hash,
        "games": batch.traces.len(),
        "aborted": batch.aborted.len(),
        "out": args.out,
    }))
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("formulas.json")
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let (result, traces) = read_tournament(&args.traces)?;
    let config = MetricsConfig {
        granularity: if args.per_game { Granularity::Game } else { Granularity::Block },
        ci_formulas: args.ci_formulas,
        ci_seed: args.ci_seed,
        relabel: args.relabel.map(KnowledgeMode::from),
        ..MetricsConfig::default()
    };
    let hash = report_hash(&result.config_hash, &config);
    let (report, sidecar) = compute_report(&traces, &result.config.agents, &config, &hash)?;
    let out = args.out.unwrap_or_else(|| args.traces.join("metrics.csv"));
    write_report_csv(&out, &report)?;
    let sidecar_out = sidecar_path(&out);
    let text = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(&sidecar_out, text + "\n").with_context(|| sidecar_out.display().to_string())?;
    print_summary(json!({
        "schema": SCHEMA,
        "config_hash": hash,
        "rows": report.rows.len(),
        "out": out,
        "formulas": sidecar_out,
    }))
}

fn pool(path: Option<&Path>) -> Result<Vec<AgentSpec>> {
    Ok(match path {
        Some(p) => load_pool(p)?,
        None => default_pool(),
    })
}

fn regress(args: RegressArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    let table = read_report_csv(&args.metrics)?;
    let ratings = read_ratings(&args.ratings)?;
    let roles = AgentRoles::from_pool(&pool(args.pool.as_deref())?);
    let unknown: Vec<&str> =
        ratings.iter().map(|r| r.bot.as_str()).filter(|b| !table.rows.iter().any(|(a, _)| a == b)).collect();
    if let Some(bot) = unknown.first() {
        bail!("ratings name bot {bot:?}, which has no row in {}", args.metrics.display());
    }
    let mut rows = cohort_regressions(&table, &ratings, &roles, args.coding.into(), args.alpha);
    if let Some(c) = args.cohort {
        let cohort = Cohort::from(c);
        rows.retain(|r| r.cohort == cohort);
    }
    write_regressions_csv(&args.out, &rows)?;
    if let Some(q) = &args.quantiles {
        write_letter_values_csv(q, &ratings, args.coding.into())?;
    }
    print_summary(json!({
        "schema": SCHEMA,
        "rows": rows.len(),
        "significant": rows.iter().filter(|r| r.significant == Some(true)).count(),
        "out": args.out,
    }))
}

fn synth_ratings(args: SynthArgs) -> Result<()> {
    let table = read_report_csv(&args.metrics)?;
    let spec = SyntheticSpec {
        metric: args.metric,
        slope: args.slope,
        intercept: args.intercept,
        noise_sd: args.noise,
        participants_per_bot: args.per_bot,
        seed: args.seed,
        coding: args.coding.into(),
    };
    let ratings = synthetic_ratings(&table, &spec)?;
    write_ratings(&args.out, &ratings)?;
    print_summary(json!({ "schema": SCHEMA, "ratings": ratings.len(), "out": args.out }))
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ServerConfig::load(path).map_err(anyhow::Error::msg)?,
        None => ServerConfig::default(),
    };
    config.port = args.port.unwrap_or(config.port);
    config.pool_file = args.pool.or(config.pool_file);
    config.data_dir = args.data.unwrap_or(config.data_dir);
    config.seed = args.seed.or(config.seed);
    config.max_sessions_per_bot = args.max_sessions_per_bot.or(config.max_sessions_per_bot);

    let state = AppState::open(&config).map_err(anyhow::Error::msg)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = hanabi_expserver::bind(&config).await.map_err(anyhow::Error::msg)?;
        print_summary(json!({
            "schema": SCHEMA,
            "listening": listener.local_addr()?.to_string(),
            "data_dir": config.data_dir,
        }))?;
        hanabi_expserver::serve(listener, state, shutdown_signal()).await.map_err(anyhow::Error::msg)
    })
}

fn echo_policy() -> Result<()> {
    let stdin = std::io::stdin().lock();
    serve_policy(stdin, std::io::stdout().lock(), |_, legal| legal[0])?;
    Ok(())
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = json!({ "schema": SCHEMA, "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim(), 2),
    };
    let result = match cli.command {
        Command::Tournament(a) => tournament(a),
        Command::Metrics(a) => metrics(a),
        Command::Regress(a) => regress(a),
        Command::SynthRatings(a) => synth_ratings(a),
        Command::Serve(a) => serve(a),
        Command::EchoPolicy => echo_policy(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail("runtime", &format!("{e:#}"), 1),
    }
}
