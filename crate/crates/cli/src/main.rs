//! `dpc`: generate datasets, run clustering algorithms, evaluate outputs,
//! and sweep hyperparameter grids.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use dpc_core::data::{gen_circles, gen_gmm, GmmGenConfig};
use dpc_core::metrics::f1_score;

use dpc_cli::config::{
    self, print_config_schema, resolve_settings, Algorithm, CommonFlags, DataKind, Settings,
    EXIT_CONFIG, EXIT_RUNTIME,
};
use dpc_cli::formats;
use dpc_cli::runner::{execute, load_data, partition_from_labels};

#[derive(Parser)]
#[command(
    name = "dpc",
    version,
    about = "Online model-based clustering under Dirichlet process mixture models"
)]
struct Cli {
    /// Print the config-file key schema and exit.
    #[arg(long = "help-config")]
    help_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Cluster a dataset and write clustering, trace and summary files.
    Run(RunArgs),
    /// Evaluate a clustering file against a gold-labelled dataset.
    Eval(EvalArgs),
    /// Run a grid of configurations with shuffled replications.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Gmm,
    Circles,
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset family.
    #[arg(value_enum)]
    kind: GenKind,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output path; an `<out>.meta` sidecar records seed and config.
    #[arg(long, short = 'o')]
    out: PathBuf,

    /// Number of points (gmm only).
    #[arg(long, default_value_t = 700)]
    n: usize,

    /// Stick-breaking truncation (gmm only).
    #[arg(long, default_value_t = 100)]
    clusters: usize,

    /// Number of group centres (gmm only).
    #[arg(long, default_value_t = 16)]
    groups: usize,

    #[arg(long = "alpha-dp", default_value_t = 20.0)]
    alpha_dp: f64,

    #[arg(long, default_value_t = 2.0)]
    a: f64,

    #[arg(long, default_value_t = 0.5)]
    b: f64,

    #[arg(long, default_value_t = 0.0)]
    mu: f64,

    #[arg(long, default_value_t = 0.0002)]
    lambda: f64,

    #[arg(long = "perturb-divisor", default_value_t = 125.0)]
    perturb_divisor: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset to cluster.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Dataset flavour.
    #[arg(long, value_enum)]
    kind: Option<DataKind>,

    /// Output prefix: writes `<out>.clusters`, `<out>.trace`, `<out>.summary`.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Clustering file (id,label lines).
    #[arg(long)]
    pred: PathBuf,

    /// Gold-labelled dataset the clustering refers to.
    #[arg(long)]
    gold: PathBuf,

    /// Dataset flavour of the gold file.
    #[arg(long, value_enum, default_value = "points")]
    kind: DataKind,

    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: Option<PathBuf>,

    #[arg(long, value_enum)]
    kind: Option<DataKind>,

    /// Output table (tab-separated, one row per grid point).
    #[arg(long, short = 'o')]
    out: PathBuf,

    /// Independently shuffled replications per grid point.
    #[arg(long, default_value_t = 1)]
    replications: usize,

    /// Comma-separated particle budgets to sweep.
    #[arg(long = "grid-m")]
    grid_m: Option<String>,

    /// Comma-separated proposal budgets to sweep.
    #[arg(long = "grid-m-prime")]
    grid_m_prime: Option<String>,

    /// Comma-separated algorithms to sweep.
    #[arg(long = "grid-algorithm")]
    grid_algorithm: Option<String>,

    #[command(flatten)]
    common: CommonFlags,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(err: anyhow::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: format!("{err:#}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.help_config {
        print_config_schema();
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        None => Err(Failure::config("missing subcommand (try --help)")),
        Some(Command::Generate(args)) => cmd_generate(&args),
        Some(Command::Run(args)) => cmd_run(&args),
        Some(Command::Eval(args)) => cmd_eval(&args),
        Some(Command::Sweep(args)) => cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let (points, describe) = match args.kind {
        GenKind::Gmm => {
            let cfg = GmmGenConfig {
                alpha_dp: args.alpha_dp,
                clusters: args.clusters,
                n_points: args.n,
                n_groups: args.groups,
                a: args.a,
                b: args.b,
                mu: args.mu,
                lambda: args.lambda,
                perturb_divisor: args.perturb_divisor,
                dims: 2,
                seed: args.seed,
            };
            let data = gen_gmm(&cfg);
            (data.points, format!("{cfg:?}"))
        }
        GenKind::Circles => (
            gen_circles(args.seed),
            format!("circles seed={}", args.seed),
        ),
    };
    let n = points.len();
    let dims = points.first().map_or(0, |p| p.coords.len());
    formats::write_points(&args.out, &points).map_err(Failure::runtime)?;
    let meta = vec![
        (
            "kind".to_string(),
            match args.kind {
                GenKind::Gmm => "gmm".to_string(),
                GenKind::Circles => "circles".to_string(),
            },
        ),
        ("seed".to_string(), args.seed.to_string()),
        (
            "config_hash".to_string(),
            format!("{:016x}", fnv1a(&describe)),
        ),
        ("n".to_string(), n.to_string()),
        ("dims".to_string(), dims.to_string()),
    ];
    let meta_path = args.out.with_extension(format!(
        "{}meta",
        args.out
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    formats::write_kv(&meta_path, &meta).map_err(Failure::runtime)?;
    println!("wrote {n} points to {}", args.out.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let settings = resolve_settings(&args.common, args.input.as_deref(), args.kind)
        .map_err(|e| Failure::config(e.to_string()))?;
    let Some(out) = &args.out else {
        return Err(Failure::config("missing --out prefix"));
    };
    let data = load_data(&settings.input, settings.kind, settings.shuffle_seed)
        .map_err(Failure::runtime)?;
    let outcome = execute(&settings, &data).map_err(Failure::runtime)?;

    let with_suffix = |suffix: &str| -> PathBuf {
        let mut s = out.as_os_str().to_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    formats::write_clusters(&with_suffix(".clusters"), &outcome.labels)
        .map_err(Failure::runtime)?;
    formats::write_trace(&with_suffix(".trace"), &outcome.trace).map_err(Failure::runtime)?;
    let summary = outcome.summary_pairs(&settings, data.store.len());
    formats::write_kv(&with_suffix(".summary"), &summary).map_err(Failure::runtime)?;
    formats::print_kv(&summary);
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    // The gold dataset is loaded in file order; predictions are keyed by
    // original ids, so no shuffle alignment is needed.
    let data = load_data(&args.gold, args.kind, None).map_err(Failure::runtime)?;
    let Some(gold) = data.gold.clone() else {
        return Err(Failure::config(format!(
            "{} carries no gold labels",
            args.gold.display()
        )));
    };
    let labels = formats::read_clusters(&args.pred).map_err(Failure::runtime)?;
    let pred = partition_from_labels(&labels, &data.original_ids)
        .map_err(|e| Failure::config(format!("{e:#}")))?;

    // Model settings come from the shared flags; algorithm is irrelevant
    // here, so resolution is done manually.
    let alpha = args.common.alpha.unwrap_or(1.0);
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Failure::config("alpha must be positive"));
    }
    let model_cfg = resolve_settings(
        &with_algorithm(args.common.clone(), Algorithm::Smc),
        Some(&args.gold),
        Some(args.kind),
    )
    .map_err(|e| Failure::config(e.to_string()))?
    .model;
    let model = config::build_model(&model_cfg, args.kind, data.dims, &data.names)
        .map_err(Failure::runtime)?;

    let (precision, recall, f1) =
        dpc_core::metrics::bcubed(&pred, &gold).map_err(|e| Failure::config(e.to_string()))?;
    let log_posterior = dpc_core::metrics::score_clustering(&pred, alpha, &model, &data.store)
        .map_err(|e| Failure::runtime(anyhow!("{e}")))?;
    debug_assert_eq!(f1, f1_score(precision, recall));
    formats::print_kv(&[
        ("precision".into(), format!("{precision:.6}")),
        ("recall".into(), format!("{recall:.6}")),
        ("f1".into(), format!("{f1:.6}")),
        ("log_posterior".into(), format!("{log_posterior:.6}")),
        ("n_clusters".into(), pred.n_clusters().to_string()),
    ]);
    Ok(())
}

fn with_algorithm(mut flags: CommonFlags, algorithm: Algorithm) -> CommonFlags {
    flags.algorithm = Some(algorithm);
    flags
}

fn parse_list<T: std::str::FromStr>(
    raw: &Option<String>,
    what: &str,
) -> Result<Option<Vec<T>>, Failure>
where
    T::Err: std::fmt::Display,
{
    match raw {
        None => Ok(None),
        Some(raw) => raw
            .split(',')
            .map(|item| {
                item.trim()
                    .parse::<T>()
                    .map_err(|e| Failure::config(format!("invalid {what} '{item}': {e}")))
            })
            .collect::<Result<Vec<T>, Failure>>()
            .map(Some),
    }
}

struct CellStats {
    ok: usize,
    failed: usize,
    lp: Vec<f64>,
    f1: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    runtime: Vec<f64>,
    evals: Vec<f64>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let grid_algorithms: Option<Vec<Algorithm>> =
        match parse_list::<String>(&args.grid_algorithm, "algorithm")? {
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| {
                        n.parse()
                            .map_err(|e: config::ConfigError| Failure::config(e.to_string()))
                    })
                    .collect::<Result<_, Failure>>()?,
            ),
            None => None,
        };
    // A grid over algorithms makes the base algorithm flag redundant.
    let mut common = args.common.clone();
    if common.algorithm.is_none() {
        if let Some(list) = &grid_algorithms {
            common.algorithm = list.first().copied();
        }
    }
    let base = resolve_settings(&common, args.input.as_deref(), args.kind)
        .map_err(|e| Failure::config(e.to_string()))?;
    if args.replications == 0 {
        return Err(Failure::config("replications must be at least 1"));
    }
    let algorithms: Vec<Algorithm> = grid_algorithms.unwrap_or_else(|| vec![base.algorithm]);
    let ms: Vec<usize> = parse_list(&args.grid_m, "m")?.unwrap_or_else(|| vec![base.m]);
    let m_primes: Vec<Option<usize>> = match parse_list::<usize>(&args.grid_m_prime, "m-prime")? {
        Some(list) => list.into_iter().map(Some).collect(),
        None => vec![base.m_prime],
    };

    let mut rows = Vec::new();
    let mut counter: u64 = 0;
    for &algorithm in &algorithms {
        for &m in &ms {
            for &m_prime in &m_primes {
                let mut stats = CellStats {
                    ok: 0,
                    failed: 0,
                    lp: Vec::new(),
                    f1: Vec::new(),
                    precision: Vec::new(),
                    recall: Vec::new(),
                    runtime: Vec::new(),
                    evals: Vec::new(),
                };
                for _rep in 0..args.replications {
                    counter += 1;
                    // Replication seeds derive from the master seed by
                    // counter, so the whole sweep is reproducible.
                    let seed = base.seed.wrapping_add(counter);
                    let settings = Settings {
                        algorithm,
                        m,
                        m_prime,
                        seed,
                        shuffle_seed: Some(seed ^ 0x9e3779b97f4a7c15),
                        ..base.clone()
                    };
                    match load_data(&settings.input, settings.kind, settings.shuffle_seed)
                        .and_then(|data| execute(&settings, &data))
                    {
                        Ok(outcome) => {
                            stats.ok += 1;
                            stats.lp.push(outcome.log_posterior);
                            stats.runtime.push(outcome.runtime_secs);
                            stats.evals.push(outcome.main_evals as f64);
                            if let (Some(p), Some(r), Some(f)) =
                                (outcome.precision, outcome.recall, outcome.f1)
                            {
                                stats.precision.push(p);
                                stats.recall.push(r);
                                stats.f1.push(f);
                            }
                        }
                        Err(err) => {
                            stats.failed += 1;
                            eprintln!(
                                "cell algorithm={} m={m} failed: {err:#}",
                                algorithm.as_str()
                            );
                        }
                    }
                }
                rows.push((algorithm, m, m_prime, stats));
            }
        }
    }

    let mut table = String::from(
        "algorithm\tm\tm_prime\treplications\tfailed\tlp_mean\tlp_sd\tf1_mean\tf1_sd\t\
         precision_mean\tprecision_sd\trecall_mean\trecall_sd\truntime_mean\truntime_sd\tevals_mean\n",
    );
    for (algorithm, m, m_prime, stats) in &rows {
        let (lp_m, lp_s) = mean_sd(&stats.lp);
        let (f1_m, f1_s) = mean_sd(&stats.f1);
        let (p_m, p_s) = mean_sd(&stats.precision);
        let (r_m, r_s) = mean_sd(&stats.recall);
        let (rt_m, rt_s) = mean_sd(&stats.runtime);
        let (ev_m, _) = mean_sd(&stats.evals);
        let fmt = |v: f64| {
            if v.is_nan() {
                "-".to_string()
            } else {
                format!("{v:.6}")
            }
        };
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            algorithm.as_str(),
            m,
            m_prime.map_or("-".to_string(), |v| v.to_string()),
            args.replications,
            stats.failed,
            fmt(lp_m),
            fmt(lp_s),
            fmt(f1_m),
            fmt(f1_s),
            fmt(p_m),
            fmt(p_s),
            fmt(r_m),
            fmt(r_s),
            fmt(rt_m),
            fmt(rt_s),
            fmt(ev_m),
        ));
    }
    std::fs::write(&args.out, &table)
        .map_err(|e| Failure::runtime(anyhow!("writing {}: {e}", args.out.display())))?;
    print!("{table}");
    Ok(())
}
