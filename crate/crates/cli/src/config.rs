use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use shiftorbit::approx::{Mode, Precision};
use shiftorbit::rational::parse_rational;
use shiftorbit::Rational;

/// Flags shared by every subcommand. A JSON file passed with `--config` uses
/// the same keys; any flag given on the command line takes precedence.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Markov chain specification (JSON with "P" and optional "pi", "m").
    #[arg(long, value_name = "FILE")]
    pub markov: Option<PathBuf>,

    /// Use the uniform (Bernoulli) measure on m symbols.
    #[arg(long)]
    #[serde(default)]
    pub uniform: bool,

    /// Trajectory in [0,1]: one value per line, or a CSV column with --column.
    #[arg(long, value_name = "FILE")]
    pub trajectory: Option<PathBuf>,

    /// CSV column (header name or 0-based index) holding the trajectory.
    #[arg(long)]
    pub column: Option<String>,

    /// Count trajectory windows cyclically, which makes the measure shift-balanced.
    #[arg(long)]
    #[serde(default)]
    pub repair: bool,

    /// Partition resolution.
    #[arg(long)]
    pub m: Option<usize>,

    /// Word length.
    #[arg(long)]
    pub n: Option<usize>,

    /// Common denominator of the rationalized measure.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub big_n: Option<u64>,

    /// Target deviation; N is chosen automatically.
    #[arg(long)]
    pub delta: Option<String>,

    /// Construction of the periodic point: paper or cyclic.
    #[arg(long)]
    pub mode: Option<Mode>,

    /// Comma-separated N for each splice level.
    #[arg(long)]
    pub levels: Option<String>,

    /// Comma-separated word length for each splice level.
    #[arg(long)]
    pub depths: Option<String>,

    /// Observable spec, repeatable: symbol:J, word:0,1, constant:V or table:D:v0,v1,...
    #[arg(long = "observable", value_name = "SPEC")]
    #[serde(default, rename = "observable")]
    pub observables: Vec<String>,

    /// Point file written by approximate (beta.json) or splice (point.json).
    #[arg(long, value_name = "FILE")]
    pub point: Option<PathBuf>,

    /// Tolerance, as a fraction or decimal.
    #[arg(long)]
    pub epsilon: Option<String>,

    /// Number of Birkhoff terms to scan.
    #[arg(long)]
    pub horizon: Option<usize>,

    /// Judge averages from this n on instead of the certified horizon.
    #[arg(long)]
    pub burn_in: Option<usize>,

    /// Size of the cyclic system.
    #[arg(long)]
    pub k: Option<usize>,

    /// Also write the stopping times T(x) as CSV.
    #[arg(long)]
    #[serde(default)]
    pub stopping_csv: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Fills every unset flag from the `--config` file, if one was given.
    pub fn resolve(self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = |p: Option<PathBuf>| p.map(|p| relative_to(&path, p));
        Ok(RunConfig {
            config: self.config,
            markov: self.markov.or(base(file.markov)),
            uniform: self.uniform || file.uniform,
            trajectory: self.trajectory.or(base(file.trajectory)),
            column: self.column.or(file.column),
            repair: self.repair || file.repair,
            m: self.m.or(file.m),
            n: self.n.or(file.n),
            big_n: self.big_n.or(file.big_n),
            delta: self.delta.or(file.delta),
            mode: self.mode.or(file.mode),
            levels: self.levels.or(file.levels),
            depths: self.depths.or(file.depths),
            observables: if self.observables.is_empty() {
                file.observables
            } else {
                self.observables
            },
            point: self.point.or(base(file.point)),
            epsilon: self.epsilon.or(file.epsilon),
            horizon: self.horizon.or(file.horizon),
            burn_in: self.burn_in.or(file.burn_in),
            k: self.k.or(file.k),
            stopping_csv: self.stopping_csv || file.stopping_csv,
            out: self.out.or(base(file.out)),
            seed: self.seed.or(file.seed),
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Paper)
    }

    pub fn precision(&self) -> Result<Precision> {
        match (self.big_n, &self.delta) {
            (Some(_), Some(_)) => bail!("--N and --delta are mutually exclusive"),
            (Some(n), None) => Ok(Precision::Denominator(n)),
            (None, Some(d)) => Ok(Precision::Delta(rational_arg("--delta", d)?)),
            (None, None) => bail!("one of --N or --delta is required"),
        }
    }

    pub fn epsilon(&self) -> Result<Rational> {
        let text = self.epsilon.as_deref().context("--epsilon is required")?;
        rational_arg("--epsilon", text)
    }
}

fn relative_to(config: &Path, p: PathBuf) -> PathBuf {
    match config.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

pub fn rational_arg(flag: &str, text: &str) -> Result<Rational> {
    parse_rational(text).with_context(|| format!("{flag}: cannot parse {text:?} as a rational"))
}

pub fn list_arg<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("{flag}: cannot parse {s:?}"))
        })
        .collect()
}
