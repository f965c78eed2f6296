use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors surfaced to the shell, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Unparseable(String),
    #[error("{0}")]
    ConflictingModes(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    ValidationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::ValidationFailed(_) => 5,
            CliError::ConflictingModes(_) => 6,
            CliError::Unparseable(_) => 7,
        }
    }
}

impl From<magicflow::Error> for CliError {
    fn from(e: magicflow::Error) -> Self {
        match e {
            magicflow::Error::Invalid(_) => CliError::Usage(e.to_string()),
            magicflow::Error::Resource(_) => CliError::Resource(e.to_string()),
            magicflow::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Defects,
    Exact,
    Doped,
    Tn,
    Haar,
    Fit,
    Validate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Defects => "defects",
            Mode::Exact => "exact",
            Mode::Doped => "doped",
            Mode::Tn => "tn",
            Mode::Haar => "haar",
            Mode::Fit => "fit",
            Mode::Validate => "validate",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Inclusive depth range `a:b`, or a single depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DepthRange {
    pub start: usize,
    pub end: usize,
}

impl DepthRange {
    pub fn contains(&self, t: usize) -> bool {
        (self.start..=self.end).contains(&t)
    }
}

pub fn parse_depths(s: &str) -> Result<DepthRange, String> {
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{x}' is not a non-negative integer"))
    };
    let (start, end) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let t = num(s)?;
            (t, t)
        }
    };
    if start > end {
        return Err(format!("depth range {s} is empty"));
    }
    Ok(DepthRange { start, end })
}

/// Comma-separated list of sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeList(pub Vec<usize>);

pub fn parse_sizes(s: &str) -> Result<SizeList, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{x}' is not a non-negative integer"))
        })
        .collect::<Result<_, _>>()
        .map(SizeList)
}

#[derive(Debug, Parser)]
#[command(
    name = "magicflow",
    version,
    about = "CSS-entropy growth in random qudit circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate defect subspaces of Z_d^k
    Defects(Flags),
    /// Exact statevector ensemble of brick-wall Haar circuits
    Exact(Flags),
    /// Qubit Clifford circuits doped with T gates
    Doped(Flags),
    /// Annealed CSS entropy from the replica tensor network
    Tn(Flags),
    /// Haar-random saturation values
    Haar(Flags),
    /// Exponential-decay fit of a delta_Y curve
    Fit(Flags),
    /// Tensor network against exact simulation with a 3-stderr gate
    Validate(Flags),
}

impl Command {
    pub fn split(self) -> (Mode, Flags) {
        match self {
            Command::Defects(f) => (Mode::Defects, f),
            Command::Exact(f) => (Mode::Exact, f),
            Command::Doped(f) => (Mode::Doped, f),
            Command::Tn(f) => (Mode::Tn, f),
            Command::Haar(f) => (Mode::Haar, f),
            Command::Fit(f) => (Mode::Fit, f),
            Command::Validate(f) => (Mode::Validate, f),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML file with the same keys; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Qudit dimension
    #[arg(long)]
    pub d: Option<u32>,
    /// Replica count (defects)
    #[arg(long)]
    pub k: Option<usize>,
    /// System sizes, comma separated
    #[arg(long = "N", value_parser = parse_sizes)]
    pub n: Option<SizeList>,
    /// Depths as `a:b` or a single depth
    #[arg(long, value_parser = parse_depths)]
    pub t: Option<DepthRange>,
    /// Bond dimension(s), comma separated
    #[arg(long, value_parser = parse_sizes)]
    pub chi: Option<SizeList>,
    /// Relative singular-value cutoff
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Keep the conserved permutation overlaps exact under truncation
    #[arg(long)]
    pub conserve: Option<bool>,
    /// Ensemble size
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// T gates per layer (doped)
    #[arg(long)]
    pub doping: Option<usize>,
    /// Input CSV (fit)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Base seed; falls back to MAGICFLOW_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for independent realizations and grid points
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<Mode>,
    pub d: Option<u32>,
    pub k: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<SizesValue>,
    pub t: Option<DepthValue>,
    pub chi: Option<SizesValue>,
    pub cutoff: Option<f64>,
    pub conserve: Option<bool>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub doping: Option<usize>,
    pub input: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

const FILE_KEYS: [&str; 15] = [
    "mode", "d", "k", "N", "t", "chi", "cutoff", "conserve", "M", "doping", "input", "seed", "out",
    "format", "threads",
];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SizesValue {
    One(usize),
    Many(Vec<usize>),
}

impl SizesValue {
    fn into_vec(self) -> Vec<usize> {
        match self {
            SizesValue::One(x) => vec![x],
            SizesValue::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DepthValue {
    One(usize),
    Range(String),
}

/// Fully resolved configuration, echoed into the output header.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<DepthRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conserve: Option<bool>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doping: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

impl Mode {
    /// Keys a mode must have after merging.
    fn required(self) -> &'static [&'static str] {
        match self {
            Mode::Defects => &["d", "k"],
            Mode::Exact => &["d", "N", "t", "M"],
            Mode::Doped => &["N", "t", "M"],
            Mode::Tn => &["d", "N", "t", "chi"],
            Mode::Haar => &["d", "N"],
            Mode::Fit => &["input"],
            Mode::Validate => &["d", "N", "t", "M"],
        }
    }

    /// Mode-specific keys a mode accepts beyond the common ones.
    fn optional(self) -> &'static [&'static str] {
        match self {
            Mode::Tn | Mode::Validate => &["cutoff", "conserve", "chi"],
            Mode::Doped => &["doping"],
            Mode::Fit => &["t"],
            _ => &[],
        }
    }

    fn default_format(self) -> Format {
        match self {
            Mode::Fit => Format::Json,
            _ => Format::Csv,
        }
    }
}

const COMMON_KEYS: [&str; 5] = ["seed", "out", "format", "threads", "mode"];

fn present_keys(f: &Flags) -> Vec<&'static str> {
    let mut v = Vec::new();
    let mut push = |cond: bool, k: &'static str| {
        if cond {
            v.push(k);
        }
    };
    push(f.d.is_some(), "d");
    push(f.k.is_some(), "k");
    push(f.n.is_some(), "N");
    push(f.t.is_some(), "t");
    push(f.chi.is_some(), "chi");
    push(f.cutoff.is_some(), "cutoff");
    push(f.conserve.is_some(), "conserve");
    push(f.m.is_some(), "M");
    push(f.doping.is_some(), "doping");
    push(f.input.is_some(), "input");
    v
}

fn read_file(path: &PathBuf) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| {
        CliError::Usage(format!("config {} is not valid TOML: {e}", path.display()))
    })?;
    if let Some(bad) = table.keys().find(|k| !FILE_KEYS.contains(&k.as_str())) {
        return Err(CliError::Usage(format!(
            "unknown key '{bad}' in {}",
            path.display()
        )));
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Unparseable(format!("bad value in {}: {e}", path.display())))
}

/// Merges a config file (if any) with flags; flags win.
pub fn resolve(
    mode: Mode,
    flags: Flags,
    env_seed: Option<String>,
) -> Result<ExperimentConfig, CliError> {
    let file = match &flags.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(m) = file.mode {
        if m != mode {
            return Err(CliError::ConflictingModes(format!(
                "config file is for mode '{m}' but the subcommand is '{mode}'"
            )));
        }
    }
    let mut file_keys = Vec::new();
    {
        let mut push = |cond: bool, k: &'static str| {
            if cond {
                file_keys.push(k);
            }
        };
        push(file.d.is_some(), "d");
        push(file.k.is_some(), "k");
        push(file.n.is_some(), "N");
        push(file.t.is_some(), "t");
        push(file.chi.is_some(), "chi");
        push(file.cutoff.is_some(), "cutoff");
        push(file.conserve.is_some(), "conserve");
        push(file.m.is_some(), "M");
        push(file.doping.is_some(), "doping");
        push(file.input.is_some(), "input");
    }
    let t = match (flags.t, file.t) {
        (Some(t), _) => Some(t),
        (None, Some(DepthValue::One(x))) => Some(DepthRange { start: x, end: x }),
        (None, Some(DepthValue::Range(s))) => {
            Some(parse_depths(&s).map_err(CliError::Unparseable)?)
        }
        (None, None) => None,
    };
    let env_seed =
        match env_seed {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|_| {
                CliError::Unparseable(format!("MAGICFLOW_SEED='{s}' is not a u64"))
            })?),
            None => None,
        };

    let allowed = |k: &str| {
        COMMON_KEYS.contains(&k) || mode.required().contains(&k) || mode.optional().contains(&k)
    };
    for k in present_keys(&flags).into_iter().chain(file_keys) {
        if !allowed(k) {
            return Err(CliError::Usage(format!(
                "'{k}' does not apply to mode '{mode}'"
            )));
        }
    }

    let cfg = ExperimentConfig {
        mode,
        d: flags.d.or(file.d),
        k: flags.k.or(file.k),
        n: flags.n.map(|l| l.0).or(file.n.map(SizesValue::into_vec)),
        t,
        chi: flags
            .chi
            .map(|l| l.0)
            .or(file.chi.map(SizesValue::into_vec)),
        cutoff: flags.cutoff.or(file.cutoff),
        conserve: flags.conserve.or(file.conserve),
        m: flags.m.or(file.m),
        doping: flags.doping.or(file.doping),
        input: flags.input.or(file.input),
        seed: flags.seed.or(file.seed).or(env_seed).unwrap_or(0),
        out: flags.out.or(file.out),
        format: flags
            .format
            .or(file.format)
            .unwrap_or(mode.default_format()),
        threads: flags.threads.or(file.threads).unwrap_or(1),
    };
    let have: BTreeMap<&str, bool> = [
        ("d", cfg.d.is_some()),
        ("k", cfg.k.is_some()),
        ("N", cfg.n.is_some()),
        ("t", cfg.t.is_some()),
        ("chi", cfg.chi.is_some()),
        ("M", cfg.m.is_some()),
        ("input", cfg.input.is_some()),
    ]
    .into_iter()
    .collect();
    for k in mode.required() {
        if !have[k] {
            return Err(CliError::Usage(format!("mode '{mode}' needs --{k}")));
        }
    }
    if cfg.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(cfg)
}
