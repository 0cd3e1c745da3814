use std::path::Path;

use anyhow::{bail, Context, Result};

use shiftorbit::measure::{
    classify_samples, ingest_trajectory, markov_word_measure, MarkovSpec, MarkovSpecFile,
    Observable, WordMeasure,
};
use shiftorbit::symbolic::{empirical_measure, PeriodicPoint, Word};

use crate::config::{list_arg, RunConfig};

/// Where the target measure comes from. Exactly one is allowed per run.
pub enum Source {
    Markov(MarkovSpec),
    Uniform(usize),
    Trajectory {
        samples: Vec<f64>,
        m: usize,
        repair: bool,
    },
}

impl Source {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let given = [cfg.markov.is_some(), cfg.uniform, cfg.trajectory.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            bail!("give exactly one of --markov, --uniform or --trajectory");
        }
        if let Some(path) = &cfg.markov {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let file: MarkovSpecFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let mut spec = file.into_spec()?;
            if let Some(m) = cfg.m {
                spec = spec.with_resolution(m)?;
            }
            return Ok(Source::Markov(spec));
        }
        if cfg.uniform {
            return Ok(Source::Uniform(cfg.m.context("--uniform needs --m")?));
        }
        let path = cfg.trajectory.as_ref().expect("counted above");
        Ok(Source::Trajectory {
            samples: read_trajectory(path, cfg.column.as_deref())?,
            m: cfg.m.context("--trajectory needs --m")?,
            repair: cfg.repair,
        })
    }

    pub fn m(&self) -> usize {
        match self {
            Source::Markov(spec) => spec.m(),
            Source::Uniform(m) => *m,
            Source::Trajectory { m, .. } => *m,
        }
    }

    pub fn measure(&self, n: usize) -> Result<WordMeasure> {
        Ok(match self {
            Source::Markov(spec) => markov_word_measure(spec, n)?,
            Source::Uniform(m) => WordMeasure::uniform(*m, n)?,
            Source::Trajectory {
                samples,
                m,
                repair: false,
            } => ingest_trajectory(samples, *m, n)?,
            Source::Trajectory {
                samples,
                m,
                repair: true,
            } => {
                let symbols = classify_samples(samples, *m)?;
                empirical_measure(&PeriodicPoint::new(*m, symbols)?, n)?
            }
        })
    }
}

/// Plain text with one value per line, or a CSV column picked by name or index.
pub fn read_trajectory(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(column) = column else {
        return text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>()
                    .with_context(|| format!("{}: sample {i}: {l:?}", path.display()))
            })
            .collect();
    };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let idx = match headers.iter().position(|h| h == column) {
        Some(i) => i,
        None => column
            .parse::<usize>()
            .ok()
            .filter(|&i| i < headers.len())
            .with_context(|| format!("no column {column:?} in {}", path.display()))?,
    };
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = rec.get(idx).unwrap_or("").trim();
            field
                .parse::<f64>()
                .with_context(|| format!("{}: row {i}: {field:?}", path.display()))
        })
        .collect()
}

/// `symbol:J`, `word:0,1,1`, `constant:V` or `table:D:v0,v1,...`.
pub fn parse_observable(spec: &str, m: usize) -> Result<Observable> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let f = match kind {
        "symbol" => Observable::symbol_indicator(m, rest.trim().parse()?)?,
        "word" => Observable::word_indicator(&Word::new(m, list_arg("word", rest)?)?)?,
        "constant" => Observable::constant(m, rest.trim().parse()?)?,
        "table" => {
            let (depth, values) = rest.split_once(':').context("table:D:v0,v1,...")?;
            Observable::cellwise_tight(m, depth.trim().parse()?, list_arg("table", values)?)?
        }
        _ => bail!("unknown observable {spec:?}"),
    };
    Ok(f.with_label(spec))
}

pub fn observables(cfg: &RunConfig, m: usize) -> Result<Vec<Observable>> {
    if cfg.observables.is_empty() {
        return Ok(vec![parse_observable("symbol:0", m)?]);
    }
    cfg.observables
        .iter()
        .map(|s| parse_observable(s, m))
        .collect()
}
