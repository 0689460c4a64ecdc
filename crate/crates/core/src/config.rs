//! Command-line and config-file settings.
//!
//! Precedence is flags, then the config file, then `SCHWARZ_OCP_OUT` (output
//! directory only), then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{DEFAULT_ALPHAS, DEFAULT_DELTAS, DEFAULT_N, TABLE2_ALPHA};
use crate::model::{InitPolicy, OverlapConvention, ProblemKind};

pub const OUT_ENV: &str = "SCHWARZ_OCP_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const VERIFY_SIZES: [usize; 3] = [4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Laplace and control-problem errors and rates versus alpha and delta
    Table1,
    /// Rates of the alpha-dependent elliptic equation
    Table2,
    /// log10 error curves per delta, one file per panel
    Figure3,
    /// Closed-form 1D rate versus gamma for r = 0.4, s = 0.6
    Figure4,
    /// One run for a single alpha and delta
    Single,
    /// Randomized property checks
    Verify,
}

/// Optional settings; anything left unset falls through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Overrides {
    /// Grid intervals per side (even)
    #[arg(long = "N", global = true, value_name = "N")]
    pub n: Option<usize>,
    /// Regularization parameter; repeat for several
    #[arg(long, global = true, value_name = "ALPHA")]
    pub alpha: Vec<f64>,
    /// Overlap layers added to each side; repeat for several
    #[arg(long, global = true, value_name = "DELTA")]
    pub delta: Vec<usize>,
    /// extend-both or half-overlap
    #[arg(long, global = true)]
    pub convention: Option<OverlapConvention>,
    /// zero, ones or random (random uses --seed)
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// Seed for random initial iterates and for `verify`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Stop once the merit drops to this value
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Full sweeps to run (each is a left then a right solve)
    #[arg(long = "max-sweeps", global = true)]
    pub max_sweeps: Option<usize>,
    /// Worker threads; 0 uses every core
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Problem for `single`: ocp, elliptic or alpha-elliptic
    #[arg(long, global = true)]
    pub kind: Option<ProblemKind>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// `self` where set, otherwise `lower`.
    fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            n: self.n.or(lower.n),
            alpha: if self.alpha.is_empty() { lower.alpha } else { self.alpha },
            delta: if self.delta.is_empty() { lower.delta } else { self.delta },
            convention: self.convention.or(lower.convention),
            init: self.init.or(lower.init),
            seed: self.seed.or(lower.seed),
            tol: self.tol.or(lower.tol),
            max_sweeps: self.max_sweeps.or(lower.max_sweeps),
            jobs: self.jobs.or(lower.jobs),
            kind: self.kind.or(lower.kind),
            out: self.out.or(lower.out),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "schwarz-ocp", version, about = "Overlapping Schwarz sweeps for elliptic optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
    /// key=value settings file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub deltas: Vec<usize>,
    pub convention: OverlapConvention,
    pub init: InitPolicy,
    pub seed: u64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub jobs: usize,
    pub kind: ProblemKind,
    pub out: PathBuf,
    /// Grid sizes for `verify`.
    pub verify_sizes: Vec<usize>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("line {line}: bad value `{value}` for `{key}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(str::trim).filter(|v| !v.is_empty()).map(|v| parse_value(key, v, line)).collect()
}

/// Flat `key = value` lines; `#` starts a comment. `alpha` and `delta` take
/// comma-separated lists and accumulate across lines.
pub fn parse_config_file(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config(format!("line {line}: expected key=value, found `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "N" => o.n = Some(parse_value(key, value, line)?),
            "alpha" => o.alpha.extend(parse_list::<f64>(key, value, line)?),
            "delta" => o.delta.extend(parse_list::<usize>(key, value, line)?),
            "convention" => o.convention = Some(parse_value(key, value, line)?),
            "init" => o.init = Some(value.to_string()),
            "seed" => o.seed = Some(parse_value(key, value, line)?),
            "tol" => o.tol = Some(parse_value(key, value, line)?),
            "max_sweeps" | "max-sweeps" => o.max_sweeps = Some(parse_value(key, value, line)?),
            "jobs" => o.jobs = Some(parse_value(key, value, line)?),
            "kind" => o.kind = Some(parse_value(key, value, line)?),
            "out" => o.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
        }
    }
    Ok(o)
}

fn resolve_init(init: Option<&str>, seed: u64) -> Result<InitPolicy> {
    match init {
        None => Ok(InitPolicy::Ones),
        Some("random") => Ok(InitPolicy::Random { seed }),
        Some(s) => s.parse().map_err(|e: Error| Error::Config(format!("--init: {e}"))),
    }
}

/// Applies defaults to the merged layers and validates the result.
pub fn resolve(command: Command, layers: Overrides, env_out: Option<PathBuf>) -> Result<RunConfig> {
    let n_explicit = layers.n.is_some();
    let n = layers.n.unwrap_or(DEFAULT_N);
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("--N must be even and at least 4 (midline split), got {n}")));
    }
    let alphas = match (command, layers.alpha.is_empty()) {
        (_, false) => layers.alpha,
        (Command::Table2, true) => vec![TABLE2_ALPHA],
        (Command::Single, true) => vec![DEFAULT_ALPHAS[0]],
        _ => DEFAULT_ALPHAS.to_vec(),
    };
    let deltas = match (command, layers.delta.is_empty()) {
        (_, false) => layers.delta,
        (Command::Single, true) => vec![1],
        _ => DEFAULT_DELTAS.to_vec(),
    };
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Config(format!("--alpha must be positive, got {a}")));
    }
    if deltas.contains(&0) {
        return Err(Error::Config("--delta must be at least 1".into()));
    }
    if command == Command::Single && (alphas.len() != 1 || deltas.len() != 1) {
        return Err(Error::Config("`single` takes exactly one --alpha and one --delta".into()));
    }
    let tol = layers.tol.unwrap_or(0.0);
    if !(tol >= 0.0) {
        return Err(Error::Config(format!("--tol must be >= 0, got {tol}")));
    }
    let max_sweeps = layers.max_sweeps.unwrap_or(5);
    if max_sweeps == 0 {
        return Err(Error::Config("--max-sweeps must be at least 1".into()));
    }
    let seed = layers.seed.unwrap_or(0);
    Ok(RunConfig {
        command,
        n,
        alphas,
        deltas,
        convention: layers.convention.unwrap_or_default(),
        init: resolve_init(layers.init.as_deref(), seed)?,
        seed,
        tol,
        max_sweeps,
        jobs: layers.jobs.unwrap_or(1),
        kind: layers.kind.unwrap_or(ProblemKind::Ocp),
        out: layers.out.or(env_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        verify_sizes: if n_explicit { vec![n] } else { VERIFY_SIZES.to_vec() },
    })
}

#[derive(Debug)]
pub enum CliError {
    /// Includes `--help` and `--version`, which are not failures.
    Clap(clap::Error),
    Config(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Config(e)
    }
}

fn read_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_file(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses arguments (including the program name) and the optional config file.
pub fn parse_config<I, T>(argv: I) -> std::result::Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Overrides::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    Ok(resolve(cli.command, cli.overrides.over(file), env_out)?)
}
