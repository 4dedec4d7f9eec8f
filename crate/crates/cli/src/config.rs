//! Run configuration: flag/flat-file resolution, validation, and model
//! construction.
//!
//! Every option can come from the command line or from a `key = value`
//! config file (`--config`), with command-line flags winning. `dpc
//! --help-config` prints the full key schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::ValueEnum;

use dpc_core::models::{
    fit_bigram_pseudocounts, BigramAlphabet, DirichletBigramModel, LikelihoodModel,
    NigGaussianModel, ScaledModel, UnitModel,
};

/// Exit code for configuration and validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for runtime failures.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! config_bail {
    ($($arg:tt)*) => {
        return Err(ConfigError(format!($($arg)*)))
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Greedy,
    Smc,
    #[value(name = "split-smc")]
    SplitSmc,
    Gibbs,
    Mwg,
    Agglom,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Smc => "smc",
            Algorithm::SplitSmc => "split-smc",
            Algorithm::Gibbs => "gibbs",
            Algorithm::Mwg => "mwg",
            Algorithm::Agglom => "agglom",
        }
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "smc" => Ok(Algorithm::Smc),
            "split-smc" => Ok(Algorithm::SplitSmc),
            "gibbs" => Ok(Algorithm::Gibbs),
            "mwg" => Ok(Algorithm::Mwg),
            "agglom" => Ok(Algorithm::Agglom),
            other => Err(ConfigError(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Points,
    Fragments,
}

impl FromStr for DataKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "points" => Ok(DataKind::Points),
            "fragments" => Ok(DataKind::Fragments),
            other => Err(ConfigError(format!("unknown data kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nig,
    Bigram,
    Unit,
}

impl FromStr for ModelKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "nig" => Ok(ModelKind::Nig),
            "bigram" => Ok(ModelKind::Bigram),
            "unit" => Ok(ModelKind::Unit),
            other => Err(ConfigError(format!("unknown model kind '{other}'"))),
        }
    }
}

/// One likelihood-model description (main or surrogate).
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    pub nig_mu0: Vec<f64>,
    pub nig_lambda: f64,
    pub nig_a: f64,
    pub nig_b: f64,
    pub nig_dims: Option<usize>,
    pub bigram_corpus: Option<PathBuf>,
    pub rescale_c: f64,
    pub case_fold: bool,
    pub log_scale_per_point: f64,
    pub log_scale_per_cluster: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: None,
            nig_mu0: vec![0.0],
            nig_lambda: 0.0002,
            nig_a: 2.0,
            nig_b: 0.5,
            nig_dims: None,
            bigram_corpus: None,
            rescale_c: 1.0,
            case_fold: true,
            log_scale_per_point: 0.0,
            log_scale_per_cluster: 0.0,
        }
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub input: PathBuf,
    pub kind: DataKind,
    pub algorithm: Algorithm,
    pub m: usize,
    pub m_prime: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    pub shuffle_seed: Option<u64>,
    pub budget_secs: Option<f64>,
    pub patience: Option<usize>,
    /// Agglomerative candidate batch; `None` scores every pair.
    pub batch_size: Option<usize>,
    pub accept_threshold: f64,
    pub trace_f1: bool,
    pub model: ModelConfig,
    pub surrogate: Option<ModelConfig>,
}

/// Shared model/algorithm flags; merged over the config file.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct CommonFlags {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub algorithm: Option<Algorithm>,

    /// Particle budget m.
    #[arg(long)]
    pub m: Option<usize>,

    /// Surrogate proposal budget m'.
    #[arg(long = "m-prime")]
    pub m_prime: Option<usize>,

    /// Dirichlet process concentration.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Master seed; all run randomness derives from it.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Shuffle the stream with this seed before running.
    #[arg(long = "shuffle-seed")]
    pub shuffle_seed: Option<u64>,

    /// Wall-clock budget for offline algorithms (seconds).
    #[arg(long = "budget-secs")]
    pub budget_secs: Option<f64>,

    /// Stop offline algorithms after this many unimproved sweeps/iterations
    /// (default: 500 for gibbs/mwg, 100 for batched agglom).
    #[arg(long)]
    pub patience: Option<usize>,

    /// Agglomerative candidate pairs per iteration: a number or "full".
    #[arg(long = "batch-size")]
    pub batch_size: Option<String>,

    /// Merge acceptance threshold on the log Bayes factor.
    #[arg(long = "accept-threshold")]
    pub accept_threshold: Option<f64>,

    /// Record per-step F1 against gold in the trace (true/false).
    #[arg(long = "trace-f1")]
    pub trace_f1: Option<bool>,

    /// Main model kind: nig, bigram, or unit.
    #[arg(long)]
    pub model: Option<String>,

    /// NIG prior mean, comma-separated per dimension (scalar broadcasts).
    #[arg(long = "nig-mu0")]
    pub nig_mu0: Option<String>,

    #[arg(long = "nig-lambda")]
    pub nig_lambda: Option<f64>,

    #[arg(long = "nig-a")]
    pub nig_a: Option<f64>,

    #[arg(long = "nig-b")]
    pub nig_b: Option<f64>,

    #[arg(long = "nig-dims")]
    pub nig_dims: Option<usize>,

    /// Text file with one name per line to fit the bigram prior on;
    /// defaults to the input's own names.
    #[arg(long = "bigram-corpus")]
    pub bigram_corpus: Option<PathBuf>,

    /// Bigram pseudo-count rescale c in (0, 1].
    #[arg(long = "rescale-c")]
    pub rescale_c: Option<f64>,

    /// Case-fold names before bigram scoring (true/false).
    #[arg(long = "case-fold")]
    pub case_fold: Option<bool>,

    #[arg(long = "log-scale-per-point")]
    pub log_scale_per_point: Option<f64>,

    #[arg(long = "log-scale-per-cluster")]
    pub log_scale_per_cluster: Option<f64>,

    /// Surrogate model kind: nig, bigram, unit, or none.
    #[arg(long)]
    pub surrogate: Option<String>,

    #[arg(long = "surrogate-nig-mu0")]
    pub surrogate_nig_mu0: Option<String>,

    #[arg(long = "surrogate-nig-lambda")]
    pub surrogate_nig_lambda: Option<f64>,

    #[arg(long = "surrogate-nig-a")]
    pub surrogate_nig_a: Option<f64>,

    #[arg(long = "surrogate-nig-b")]
    pub surrogate_nig_b: Option<f64>,

    #[arg(long = "surrogate-nig-dims")]
    pub surrogate_nig_dims: Option<usize>,

    #[arg(long = "surrogate-bigram-corpus")]
    pub surrogate_bigram_corpus: Option<PathBuf>,

    #[arg(long = "surrogate-rescale-c")]
    pub surrogate_rescale_c: Option<f64>,

    #[arg(long = "surrogate-log-scale-per-point")]
    pub surrogate_log_scale_per_point: Option<f64>,

    #[arg(long = "surrogate-log-scale-per-cluster")]
    pub surrogate_log_scale_per_cluster: Option<f64>,
}

/// Parsed `key = value` file.
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn empty() -> Self {
        KvFile {
            entries: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                config_bail!("{}:{}: expected 'key = value'", path.display(), lineno + 1);
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KvFile { entries })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError(format!("config key '{key}': {e}"))),
        }
    }

    fn get_raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn known_keys_check(&self) -> Result<(), ConfigError> {
        for key in self.entries.keys() {
            if !SCHEMA.iter().any(|(k, _, _)| k == key) {
                config_bail!("unknown config key '{key}' (see --help-config)");
            }
        }
        Ok(())
    }
}

fn parse_mu0(raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("invalid nig-mu0 component '{f}'")))
        })
        .collect()
}

/// Merges flags over the config file into validated settings.
pub fn resolve_settings(
    flags: &CommonFlags,
    input: Option<&Path>,
    kind: Option<DataKind>,
) -> Result<Settings, ConfigError> {
    let file = match &flags.config {
        Some(path) => KvFile::load(path)?,
        None => KvFile::empty(),
    };
    file.known_keys_check()?;

    let input = match input
        .map(Path::to_path_buf)
        .or_else(|| file.get_raw("input").map(PathBuf::from))
    {
        Some(p) => p,
        None => config_bail!("missing --input"),
    };
    let kind = match kind {
        Some(k) => k,
        None => match file.get_raw("kind") {
            Some(raw) => raw.parse()?,
            None => DataKind::Points,
        },
    };
    let algorithm = match flags.algorithm {
        Some(a) => a,
        None => match file.get_raw("algorithm") {
            Some(raw) => raw.parse()?,
            None => config_bail!("missing --algorithm"),
        },
    };
    let m = flags.m.or(file.get("m")?).unwrap_or(100);
    let m_prime = flags.m_prime.or(file.get("m-prime")?);
    let alpha = flags.alpha.or(file.get("alpha")?).unwrap_or(1.0);
    let seed = flags.seed.or(file.get("seed")?).unwrap_or(0);
    let shuffle_seed = flags.shuffle_seed.or(file.get("shuffle-seed")?);
    let budget_secs = flags.budget_secs.or(file.get("budget-secs")?);
    let patience = flags.patience.or(file.get("patience")?);
    let accept_threshold = flags
        .accept_threshold
        .or(file.get("accept-threshold")?)
        .unwrap_or(0.0);
    let trace_f1 = flags.trace_f1.or(file.get("trace-f1")?).unwrap_or(false);
    let batch_size = match flags
        .batch_size
        .clone()
        .or_else(|| file.get_raw("batch-size").map(str::to_string))
    {
        None => None,
        Some(raw) if raw == "full" => None,
        Some(raw) => match raw.parse::<usize>() {
            Ok(b) if b >= 1 => Some(b),
            _ => config_bail!("batch-size must be a positive integer or 'full'"),
        },
    };

    let model = ModelConfig {
        kind: match flags.model.as_deref().or(file.get_raw("model")) {
            Some(raw) => Some(raw.parse()?),
            None => None,
        },
        nig_mu0: match flags.nig_mu0.as_deref().or(file.get_raw("nig-mu0")) {
            Some(raw) => parse_mu0(raw)?,
            None => vec![0.0],
        },
        nig_lambda: flags
            .nig_lambda
            .or(file.get("nig-lambda")?)
            .unwrap_or(0.0002),
        nig_a: flags.nig_a.or(file.get("nig-a")?).unwrap_or(2.0),
        nig_b: flags.nig_b.or(file.get("nig-b")?).unwrap_or(0.5),
        nig_dims: flags.nig_dims.or(file.get("nig-dims")?),
        bigram_corpus: flags
            .bigram_corpus
            .clone()
            .or_else(|| file.get_raw("bigram-corpus").map(PathBuf::from)),
        rescale_c: flags.rescale_c.or(file.get("rescale-c")?).unwrap_or(1.0),
        case_fold: flags.case_fold.or(file.get("case-fold")?).unwrap_or(true),
        log_scale_per_point: flags
            .log_scale_per_point
            .or(file.get("log-scale-per-point")?)
            .unwrap_or(0.0),
        log_scale_per_cluster: flags
            .log_scale_per_cluster
            .or(file.get("log-scale-per-cluster")?)
            .unwrap_or(0.0),
    };

    let surrogate_kind = match flags.surrogate.as_deref().or(file.get_raw("surrogate")) {
        None | Some("none") => None,
        Some(raw) => Some(raw.parse::<ModelKind>()?),
    };
    let surrogate = surrogate_kind.map(|kind| ModelConfig {
        kind: Some(kind),
        nig_mu0: match flags
            .surrogate_nig_mu0
            .as_deref()
            .or(file.get_raw("surrogate-nig-mu0"))
        {
            Some(raw) => parse_mu0(raw).unwrap_or_else(|_| vec![0.0]),
            None => vec![0.0],
        },
        nig_lambda: flags
            .surrogate_nig_lambda
            .or(file.get("surrogate-nig-lambda").unwrap_or(None))
            .unwrap_or(0.0002),
        nig_a: flags
            .surrogate_nig_a
            .or(file.get("surrogate-nig-a").unwrap_or(None))
            .unwrap_or(2.0),
        nig_b: flags
            .surrogate_nig_b
            .or(file.get("surrogate-nig-b").unwrap_or(None))
            .unwrap_or(0.5),
        nig_dims: flags
            .surrogate_nig_dims
            .or(file.get("surrogate-nig-dims").unwrap_or(None)),
        bigram_corpus: flags
            .surrogate_bigram_corpus
            .clone()
            .or_else(|| file.get_raw("surrogate-bigram-corpus").map(PathBuf::from)),
        rescale_c: flags
            .surrogate_rescale_c
            .or(file.get("surrogate-rescale-c").unwrap_or(None))
            .unwrap_or(1.0),
        case_fold: true,
        log_scale_per_point: flags
            .surrogate_log_scale_per_point
            .or(file.get("surrogate-log-scale-per-point").unwrap_or(None))
            .unwrap_or(0.0),
        log_scale_per_cluster: flags
            .surrogate_log_scale_per_cluster
            .or(file.get("surrogate-log-scale-per-cluster").unwrap_or(None))
            .unwrap_or(0.0),
    });

    let settings = Settings {
        input,
        kind,
        algorithm,
        m,
        m_prime,
        alpha,
        seed,
        shuffle_seed,
        budget_secs,
        patience,
        batch_size,
        accept_threshold,
        trace_f1,
        model,
        surrogate,
    };
    validate(&settings)?;
    Ok(settings)
}

fn validate(s: &Settings) -> Result<(), ConfigError> {
    if s.m < 1 {
        config_bail!("m must be at least 1");
    }
    if s.alpha <= 0.0 || !s.alpha.is_finite() {
        config_bail!("alpha must be positive");
    }
    if let Some(mp) = s.m_prime {
        if mp < 1 {
            config_bail!("m-prime must be at least 1");
        }
    }
    if s.surrogate.is_some()
        && matches!(
            s.algorithm,
            Algorithm::Smc | Algorithm::SplitSmc | Algorithm::Greedy
        )
        && s.m_prime.is_none()
    {
        // m' defaults to m downstream; nothing to reject, but it must be
        // representable.
    }
    if s.algorithm == Algorithm::Mwg && s.surrogate.is_none() {
        config_bail!("algorithm mwg requires a surrogate model");
    }
    if let Some(p) = s.patience {
        if p < 1 {
            config_bail!("patience must be at least 1");
        }
    }
    if let Some(b) = s.budget_secs {
        if b < 0.0 || !b.is_finite() {
            config_bail!("budget-secs must be non-negative");
        }
    }
    for cfg in std::iter::once(&s.model).chain(s.surrogate.iter()) {
        if cfg.rescale_c <= 0.0 || cfg.rescale_c > 1.0 || cfg.rescale_c.is_nan() {
            config_bail!("rescale-c must lie in (0, 1]");
        }
        match cfg.kind {
            Some(ModelKind::Bigram) if s.kind != DataKind::Fragments => {
                config_bail!("bigram models require fragment data (--kind fragments)");
            }
            Some(ModelKind::Nig) if s.kind != DataKind::Points => {
                config_bail!("nig models require point data (--kind points)");
            }
            _ => {}
        }
    }
    Ok(())
}

/// Builds a likelihood model. `data_dims` and `input_names` supply defaults
/// from the loaded dataset (NIG dimensionality, bigram fallback corpus).
pub fn build_model(
    cfg: &ModelConfig,
    data_kind: DataKind,
    data_dims: usize,
    input_names: &[String],
) -> Result<Box<dyn LikelihoodModel>> {
    let kind = cfg.kind.unwrap_or(match data_kind {
        DataKind::Points => ModelKind::Nig,
        DataKind::Fragments => ModelKind::Bigram,
    });
    let base: Box<dyn LikelihoodModel> = match kind {
        ModelKind::Unit => Box::new(UnitModel),
        ModelKind::Nig => {
            let dims = cfg.nig_dims.unwrap_or(data_dims);
            let mu0 = if cfg.nig_mu0.len() == dims {
                cfg.nig_mu0.clone()
            } else if cfg.nig_mu0.len() == 1 {
                vec![cfg.nig_mu0[0]; dims]
            } else {
                anyhow::bail!(
                    "nig-mu0 has {} components but the data has {dims} dimensions",
                    cfg.nig_mu0.len()
                );
            };
            Box::new(
                NigGaussianModel::new(mu0, cfg.nig_lambda, cfg.nig_a, cfg.nig_b)
                    .map_err(|e| anyhow::anyhow!("invalid nig parameters: {e}"))?,
            )
        }
        ModelKind::Bigram => {
            let alphabet = BigramAlphabet::default_names_with_case(cfg.case_fold);
            let model = match &cfg.bigram_corpus {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading bigram corpus {}", path.display()))?;
                    let corpus: Vec<String> = text
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect();
                    fit_bigram_pseudocounts(&corpus, alphabet, cfg.rescale_c)
                        .map_err(|e| anyhow::anyhow!("fitting bigram model: {e}"))?
                }
                None if !input_names.is_empty() => {
                    fit_bigram_pseudocounts(input_names, alphabet, cfg.rescale_c)
                        .map_err(|e| anyhow::anyhow!("fitting bigram model: {e}"))?
                }
                None => DirichletBigramModel::uniform(alphabet, cfg.rescale_c)
                    .map_err(|e| anyhow::anyhow!("building bigram model: {e}"))?,
            };
            Box::new(model)
        }
    };
    if cfg.log_scale_per_point != 0.0 || cfg.log_scale_per_cluster != 0.0 {
        Ok(Box::new(ScaledModel::new(
            base,
            cfg.log_scale_per_point,
            cfg.log_scale_per_cluster,
        )))
    } else {
        Ok(base)
    }
}

/// Config-file schema: key, value syntax, meaning.
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("input", "path", "dataset file to cluster"),
    (
        "kind",
        "points|fragments",
        "dataset flavour (default points)",
    ),
    (
        "algorithm",
        "greedy|smc|split-smc|gibbs|mwg|agglom",
        "clustering algorithm",
    ),
    (
        "m",
        "integer >= 1",
        "particle budget (default 100; greedy forces 1)",
    ),
    (
        "m-prime",
        "integer >= 1",
        "surrogate proposal budget (default m)",
    ),
    ("alpha", "positive real", "DP concentration (default 1.0)"),
    ("seed", "integer", "master seed (default 0)"),
    (
        "shuffle-seed",
        "integer",
        "re-order the stream deterministically before running",
    ),
    (
        "budget-secs",
        "non-negative real",
        "wall-clock budget for offline algorithms",
    ),
    (
        "patience",
        "integer >= 1",
        "unimproved sweeps/iterations before stopping (500 mcmc, 100 agglom)",
    ),
    (
        "batch-size",
        "integer >= 1 | full",
        "agglomerative candidate pairs per iteration (default full)",
    ),
    (
        "accept-threshold",
        "real",
        "log Bayes factor a merge must exceed (default 0)",
    ),
    (
        "trace-f1",
        "true|false",
        "record per-step F1 against gold in the trace",
    ),
    (
        "model",
        "nig|bigram|unit",
        "main model (default nig for points, bigram for fragments)",
    ),
    (
        "nig-mu0",
        "real[,real...]",
        "NIG prior mean; scalar broadcasts (default 0)",
    ),
    (
        "nig-lambda",
        "positive real",
        "NIG mean precision scale (default 0.0002)",
    ),
    (
        "nig-a",
        "positive real",
        "NIG inverse-gamma shape (default 2)",
    ),
    (
        "nig-b",
        "positive real",
        "NIG inverse-gamma rate (default 0.5)",
    ),
    ("nig-dims", "integer", "override data dimensionality"),
    (
        "bigram-corpus",
        "path",
        "one name per line to fit pseudo-counts on (default: input names)",
    ),
    (
        "rescale-c",
        "real in (0,1]",
        "bigram pseudo-count rescale (default 1)",
    ),
    (
        "case-fold",
        "true|false",
        "case-fold names before bigram scoring (default true)",
    ),
    (
        "log-scale-per-point",
        "real",
        "add this to log marginals per member",
    ),
    (
        "log-scale-per-cluster",
        "real",
        "add this to log marginals per cluster",
    ),
    (
        "surrogate",
        "nig|bigram|unit|none",
        "surrogate model for proposals",
    ),
    (
        "surrogate-nig-mu0",
        "real[,real...]",
        "surrogate NIG prior mean",
    ),
    (
        "surrogate-nig-lambda",
        "positive real",
        "surrogate NIG mean precision scale",
    ),
    ("surrogate-nig-a", "positive real", "surrogate NIG shape"),
    ("surrogate-nig-b", "positive real", "surrogate NIG rate"),
    (
        "surrogate-nig-dims",
        "integer",
        "surrogate dimensionality override",
    ),
    ("surrogate-bigram-corpus", "path", "surrogate bigram corpus"),
    (
        "surrogate-rescale-c",
        "real in (0,1]",
        "surrogate bigram rescale",
    ),
    (
        "surrogate-log-scale-per-point",
        "real",
        "surrogate per-member log scale",
    ),
    (
        "surrogate-log-scale-per-cluster",
        "real",
        "surrogate per-cluster log scale",
    ),
];

pub fn print_config_schema() {
    println!("Config file: one `key = value` per line; '#' starts a comment.");
    println!("Command-line flags use the same names and take precedence.\n");
    for (key, value, help) in SCHEMA {
        println!("{key:<32} {value:<28} {help}");
    }
}
