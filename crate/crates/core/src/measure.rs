//! Word measures, observables and the ways a target measure enters the
//! pipeline: Markov specifications and ingested trajectories.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::birkhoff::CompensatedSum;
use crate::error::{Error, Result};
use crate::rational::{int, to_f64, RatPair, Rational};
use crate::symbolic::{cell_count, classify_f64, midpoint, word_indices, word_rank, Word};

/// A probability vector on the words of length `n` over `m` symbols.
///
/// Weights are stored densely by word rank (first symbol most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordMeasure {
    m: usize,
    n: usize,
    weights: Vec<Rational>,
}

impl WordMeasure {
    pub fn new(m: usize, n: usize, weights: Vec<Rational>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyWord);
        }
        let cells = cell_count(m, n)?;
        if weights.len() != cells {
            return Err(Error::InvalidMeasure(format!(
                "expected {cells} weights, found {}",
                weights.len()
            )));
        }
        if let Some(pos) = weights.iter().position(|w| w.is_negative()) {
            return Err(Error::InvalidMeasure(format!(
                "negative weight {} on word {}",
                weights[pos],
                Word::from_rank(pos, m, n)
            )));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "total mass is {total}, not 1"
            )));
        }
        Ok(WordMeasure { m, n, weights })
    }

    /// Normalized counts; the counts must not all vanish.
    pub fn from_counts(m: usize, n: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidMeasure("all counts are zero".into()));
        }
        let total = int(total);
        let weights = counts.iter().map(|&c| int(c) / &total).collect();
        WordMeasure::new(m, n, weights)
    }

    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        let cells = cell_count(m, n)?;
        let w = Rational::new(1.into(), cells.into());
        WordMeasure::new(m, n, vec![w; cells])
    }

    /// Builds a measure from explicit `(word, weight)` entries; unlisted words get 0.
    pub fn from_entries(m: usize, n: usize, entries: &[(Word, Rational)]) -> Result<Self> {
        let mut weights = vec![Rational::zero(); cell_count(m, n)?];
        for (word, weight) in entries {
            if word.m() != m {
                return Err(Error::ResolutionMismatch {
                    expected: m,
                    found: word.m(),
                });
            }
            if word.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: word.len(),
                });
            }
            weights[word.rank()] += weight;
        }
        WordMeasure::new(m, n, weights)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, word: &Word) -> &Rational {
        &self.weights[word.rank()]
    }

    pub fn word(&self, rank: usize) -> Word {
        Word::from_rank(rank, self.m, self.n)
    }

    /// Ranks of words with positive weight, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_positive())
            .map(|(r, _)| r)
    }

    /// Marginal on the first `depth` coordinates.
    pub fn marginal(&self, depth: usize) -> Result<WordMeasure> {
        if depth == 0 {
            return Err(Error::EmptyWord);
        }
        if depth > self.n {
            return Err(Error::InsufficientDepth { depth, n: self.n });
        }
        if depth == self.n {
            return Ok(self.clone());
        }
        let tail = cell_count(self.m, self.n - depth)?;
        let mut weights = vec![Rational::zero(); cell_count(self.m, depth)?];
        for (rank, w) in self.weights.iter().enumerate() {
            if !w.is_zero() {
                weights[rank / tail] += w;
            }
        }
        Ok(WordMeasure {
            m: self.m,
            n: depth,
            weights,
        })
    }

    /// Mass of words starting with each `(n-1)`-word.
    pub fn prefix_marginal(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.weights.len() / self.m];
        for (rank, w) in self.weights.iter().enumerate() {
            out[rank / self.m] += w;
        }
        out
    }

    /// Mass of words ending with each `(n-1)`-word.
    pub fn suffix_marginal(&self) -> Vec<Rational> {
        let vertices = self.weights.len() / self.m;
        let mut out = vec![Rational::zero(); vertices];
        for (rank, w) in self.weights.iter().enumerate() {
            out[rank % vertices] += w;
        }
        out
    }

    /// `max_w |self(w) - other(w)|`.
    pub fn max_deviation(&self, other: &WordMeasure) -> Result<Rational> {
        self.check_compatible(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero))
    }

    pub(crate) fn check_compatible(&self, other: &WordMeasure) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ResolutionMismatch {
                expected: self.m,
                found: other.m,
            });
        }
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    word: Vec<usize>,
    num: i64,
    den: i64,
}

#[derive(Serialize, Deserialize)]
struct WordMeasureRepr {
    m: usize,
    n: usize,
    weights: Vec<WeightEntry>,
}

impl Serialize for WordMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use num_traits::ToPrimitive;
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(rank, w)| {
                let num = w.numer().to_i64();
                let den = w.denom().to_i64();
                match (num, den) {
                    (Some(num), Some(den)) => Ok(WeightEntry {
                        word: word_indices(rank, self.m, self.n),
                        num,
                        den,
                    }),
                    _ => Err(serde::ser::Error::custom("weight exceeds 64-bit range")),
                }
            })
            .collect::<std::result::Result<Vec<_>, S::Error>>()?;
        WordMeasureRepr {
            m: self.m,
            n: self.n,
            weights,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WordMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = WordMeasureRepr::deserialize(deserializer)?;
        let entries = repr
            .weights
            .into_iter()
            .map(|e| {
                if e.den == 0 {
                    return Err(D::Error::custom("zero denominator"));
                }
                let word = Word::new(repr.m, e.word).map_err(D::Error::custom)?;
                Ok((word, crate::rational::rat(e.num, e.den)))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        WordMeasure::from_entries(repr.m, repr.n, &entries).map_err(D::Error::custom)
    }
}

/// Outcome of the prefix/suffix balance check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftBalance {
    pub balanced: bool,
    pub max_imbalance: Rational,
}

/// Compares, for every `(n-1)`-word `w`, the mass of words ending in `w`
/// with the mass of words starting with `w`.
pub fn check_shift_balance(kappa: &WordMeasure) -> ShiftBalance {
    let prefix = kappa.prefix_marginal();
    let suffix = kappa.suffix_marginal();
    let max_imbalance = prefix
        .iter()
        .zip(&suffix)
        .map(|(p, s)| (p - s).abs())
        .max()
        .unwrap_or_else(Rational::zero);
    ShiftBalance {
        balanced: max_imbalance.is_zero(),
        max_imbalance,
    }
}

type Callback = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ObservableKind {
    /// One value per cell of `C_{m,depth}`, indexed by word rank.
    Cellwise(Vec<f64>),
    /// Evaluated on the midpoint coordinates of the first `depth` symbols.
    Callback {
        func: Callback,
        oscillation: Option<Vec<f64>>,
    },
}

/// A bounded function of the first `depth` coordinates.
#[derive(Clone)]
pub struct Observable {
    label: String,
    m: usize,
    depth: usize,
    bound: f64,
    kind: ObservableKind,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ObservableKind::Cellwise(table) => format!("cellwise({} cells)", table.len()),
            ObservableKind::Callback { oscillation, .. } => {
                format!("callback(oscillation declared: {})", oscillation.is_some())
            }
        };
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("m", &self.m)
            .field("depth", &self.depth)
            .field("bound", &self.bound)
            .field("kind", &kind)
            .finish()
    }
}

impl Observable {
    /// Cellwise-constant observable; `bound` must dominate every table entry.
    pub fn cellwise(m: usize, depth: usize, table: Vec<f64>, bound: f64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidObservable("depth must be at least 1".into()));
        }
        let cells = cell_count(m, depth)?;
        if table.len() != cells {
            return Err(Error::InvalidObservable(format!(
                "expected {cells} table entries, found {}",
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObservable(
                "table has non-finite values".into(),
            ));
        }
        let max_abs = table.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if bound.is_nan() || bound < max_abs {
            return Err(Error::InvalidBound(format!(
                "declared bound {bound} is below the table maximum {max_abs}"
            )));
        }
        Ok(Observable {
            label: format!("cellwise(m={m},d={depth})"),
            m,
            depth,
            bound,
            kind: ObservableKind::Cellwise(table),
        })
    }

    /// Cellwise observable whose bound is the table's maximum absolute value.
    pub fn cellwise_tight(m: usize, depth: usize, table: Vec<f64>) -> Result<Self> {
        let bound = table.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Observable::cellwise(m, depth, table, bound)
    }

    pub fn constant(m: usize, value: f64) -> Result<Self> {
        let f = Observable::cellwise_tight(m, 1, vec![value; m])?;
        Ok(f.with_label(format!("const({value})")))
    }

    /// Indicator of the first coordinate lying in cell `j`.
    pub fn symbol_indicator(m: usize, j: usize) -> Result<Self> {
        if j >= m {
            return Err(Error::SymbolOutOfRange { index: j, m });
        }
        let mut table = vec![0.0; m];
        table[j] = 1.0;
        Ok(Observable::cellwise(m, 1, table, 1.0)?.with_label(format!("symbol:{j}")))
    }

    /// Indicator of the cylinder cell of `word`.
    pub fn word_indicator(word: &Word) -> Result<Self> {
        let mut table = vec![0.0; cell_count(word.m(), word.len())?];
        table[word.rank()] = 1.0;
        Ok(Observable::cellwise(word.m(), word.len(), table, 1.0)?
            .with_label(format!("word:{word}")))
    }

    /// Observable evaluated on midpoint coordinates by a user function.
    ///
    /// `oscillation`, when given, is the per-level sequence `Q_n` used by the
    /// splice bounds; without it those bounds cannot be formed.
    pub fn callback<F>(
        m: usize,
        depth: usize,
        bound: f64,
        func: F,
        oscillation: Option<Vec<f64>>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        if depth == 0 {
            return Err(Error::InvalidObservable("depth must be at least 1".into()));
        }
        if !bound.is_finite() || bound < 0.0 {
            return Err(Error::InvalidBound(format!(
                "bound {bound} is not a finite nonnegative number"
            )));
        }
        Ok(Observable {
            label: format!("callback(m={m},d={depth})"),
            m,
            depth,
            bound,
            kind: ObservableKind::Callback {
                func: Arc::new(func),
                oscillation,
            },
        })
    }

    /// `a*f + b*g` for cellwise observables of equal resolution and depth.
    pub fn linear_combination(a: f64, f: &Observable, b: f64, g: &Observable) -> Result<Self> {
        let (ObservableKind::Cellwise(tf), ObservableKind::Cellwise(tg)) = (&f.kind, &g.kind)
        else {
            return Err(Error::InvalidObservable(
                "linear combinations need cellwise observables".into(),
            ));
        };
        if f.m != g.m || f.depth != g.depth {
            return Err(Error::InvalidObservable(
                "linear combinations need equal resolution and depth".into(),
            ));
        }
        let table = tf.iter().zip(tg).map(|(x, y)| a * x + b * y).collect();
        Observable::cellwise(f.m, f.depth, table, a.abs() * f.bound + b.abs() * g.bound)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Declared `M` with `|f| <= M`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_cellwise(&self) -> bool {
        matches!(self.kind, ObservableKind::Cellwise(_))
    }

    pub fn table(&self) -> Option<&[f64]> {
        match &self.kind {
            ObservableKind::Cellwise(table) => Some(table),
            ObservableKind::Callback { .. } => None,
        }
    }

    /// The declared per-level oscillation sequence of a callback observable.
    pub fn oscillation(&self) -> Option<&[f64]> {
        match &self.kind {
            ObservableKind::Cellwise(_) => None,
            ObservableKind::Callback { oscillation, .. } => oscillation.as_deref(),
        }
    }

    /// True for a cellwise observable that vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.table().is_some_and(|t| t.iter().all(|&v| v == 0.0))
    }

    /// Value on the cell with the given `depth`-word rank.
    pub fn eval_rank(&self, rank: usize) -> f64 {
        match &self.kind {
            ObservableKind::Cellwise(table) => table[rank],
            ObservableKind::Callback { func, .. } => {
                let coords: Vec<f64> = word_indices(rank, self.m, self.depth)
                    .into_iter()
                    .map(|j| midpoint(j, self.m))
                    .collect();
                func(&coords)
            }
        }
    }

    /// Value on a window of at least `depth` symbols; extra symbols are ignored.
    pub fn eval(&self, symbols: &[usize]) -> f64 {
        let head = &symbols[..self.depth];
        match &self.kind {
            ObservableKind::Cellwise(table) => table[word_rank(head, self.m)],
            ObservableKind::Callback { func, .. } => {
                let coords: Vec<f64> = head.iter().map(|&j| midpoint(j, self.m)).collect();
                func(&coords)
            }
        }
    }
}

/// `∫ f dκ` computed cell by cell on the depth-`d` marginal of `κ`.
///
/// Exact up to floating rounding for cellwise observables; callback
/// observables are evaluated at the cell midpoints.
pub fn integral(f: &Observable, kappa: &WordMeasure) -> Result<f64> {
    if f.m != kappa.m {
        return Err(Error::ResolutionMismatch {
            expected: kappa.m,
            found: f.m,
        });
    }
    let marginal = kappa.marginal(f.depth)?;
    let mut sum = CompensatedSum::default();
    for (rank, w) in marginal.weights.iter().enumerate() {
        if !w.is_zero() {
            sum.add(f.eval_rank(rank) * to_f64(w));
        }
    }
    Ok(sum.value())
}

/// A finite-state stationary Markov chain used as a source of shift-invariant
/// word measures. States beyond `s` (when `m > s`) carry no mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovSpec {
    m: usize,
    transition: Vec<Vec<Rational>>,
    stationary: Vec<Rational>,
}

impl MarkovSpec {
    pub fn new(transition: Vec<Vec<Rational>>, stationary: Vec<Rational>) -> Result<Self> {
        let s = transition.len();
        validate_transition(&transition)?;
        if stationary.len() != s {
            return Err(Error::InvalidMarkov(format!(
                "stationary vector has {} entries for {s} states",
                stationary.len()
            )));
        }
        if stationary.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidMarkov(
                "stationary vector has a negative entry".into(),
            ));
        }
        if !stationary.iter().sum::<Rational>().is_one() {
            return Err(Error::InvalidMarkov(
                "stationary vector does not sum to 1".into(),
            ));
        }
        for j in 0..s {
            let pushed: Rational = (0..s).map(|i| &stationary[i] * &transition[i][j]).sum();
            if pushed != stationary[j] {
                return Err(Error::NotStationary { state: j });
            }
        }
        Ok(MarkovSpec {
            m: s,
            transition,
            stationary,
        })
    }

    /// Computes the stationary vector exactly; the chain must have a unique one.
    pub fn from_transition(transition: Vec<Vec<Rational>>) -> Result<Self> {
        validate_transition(&transition)?;
        let stationary = stationary_distribution(&transition)?;
        MarkovSpec::new(transition, stationary)
    }

    /// Embeds the chain in an alphabet of `m >= s` symbols.
    pub fn with_resolution(mut self, m: usize) -> Result<Self> {
        if m < self.states() {
            return Err(Error::InvalidMarkov(format!(
                "resolution {m} is below the state count {}",
                self.states()
            )));
        }
        self.m = m;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<Rational>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[Rational] {
        &self.stationary
    }
}

fn validate_transition(transition: &[Vec<Rational>]) -> Result<()> {
    let s = transition.len();
    if s == 0 {
        return Err(Error::InvalidMarkov("no states".into()));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != s {
            return Err(Error::InvalidMarkov(format!(
                "row {i} has {} entries",
                row.len()
            )));
        }
        if row.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidMarkov(format!(
                "row {i} has a negative entry"
            )));
        }
        if !row.iter().sum::<Rational>().is_one() {
            return Err(Error::InvalidMarkov(format!("row {i} does not sum to 1")));
        }
    }
    Ok(())
}

/// Solves `πP = π`, `Σπ = 1` by exact Gaussian elimination.
pub fn stationary_distribution(transition: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    let s = transition.len();
    // Row j: sum_i π_i (P_ij - [i==j]) = 0; the last row is replaced by Σπ = 1.
    let mut a: Vec<Vec<Rational>> = (0..s)
        .map(|j| {
            let mut row: Vec<Rational> = (0..s)
                .map(|i| {
                    let mut v = transition[i][j].clone();
                    if i == j {
                        v -= Rational::one();
                    }
                    v
                })
                .collect();
            row.push(Rational::zero());
            row
        })
        .collect();
    a[s - 1] = vec![Rational::one(); s + 1];

    for col in 0..s {
        let pivot = (col..s)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidMarkov("stationary distribution is not unique".into()))?;
        a.swap(col, pivot);
        let lead = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &lead;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= &factor * p;
                }
            }
        }
    }
    let pi: Vec<Rational> = a.into_iter().map(|row| row[s].clone()).collect();
    if pi.iter().any(|p| p.is_negative()) {
        return Err(Error::InvalidMarkov(
            "stationary solution has negative entries".into(),
        ));
    }
    Ok(pi)
}

/// Cylinder masses `π(w_0) P(w_0,w_1) ... P(w_{n-2},w_{n-1})` of the
/// stationary chain on words of length `n`.
pub fn markov_word_measure(spec: &MarkovSpec, n: usize) -> Result<WordMeasure> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let m = spec.m;
    let s = spec.states();
    cell_count(m, n)?;
    let mut layer: Vec<Rational> = (0..m)
        .map(|j| {
            spec.stationary
                .get(j)
                .cloned()
                .unwrap_or_else(Rational::zero)
        })
        .collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(layer.len() * m);
        for (rank, w) in layer.iter().enumerate() {
            let last = rank % m;
            for a in 0..m {
                if w.is_zero() || last >= s || a >= s {
                    next.push(Rational::zero());
                } else {
                    next.push(w * &spec.transition[last][a]);
                }
            }
        }
        layer = next;
    }
    WordMeasure::new(m, n, layer)
}

/// Sliding-window word frequencies of a trajectory in `[0,1]`.
///
/// Windows are not wrapped, so the result need not be shift-balanced: for
/// each `(n-1)`-word the prefix and suffix masses differ by at most
/// `1/(len-n+1)`, well inside `(n-1)/(len-n+1)`.
pub fn ingest_trajectory(samples: &[f64], m: usize, n: usize) -> Result<WordMeasure> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let symbols = classify_samples(samples, m)?;
    if symbols.len() < n {
        return Err(Error::TrajectoryTooShort {
            len: symbols.len(),
            n,
        });
    }
    let cells = cell_count(m, n)?;
    let mut counts = vec![0u64; cells];
    let mut rank = word_rank(&symbols[..n], m);
    counts[rank] += 1;
    for &s in &symbols[n..] {
        rank = (rank * m + s) % cells;
        counts[rank] += 1;
    }
    WordMeasure::from_counts(m, n, &counts)
}

/// Cell indices of trajectory samples, rejecting anything outside `[0,1]`.
pub fn classify_samples(samples: &[f64], m: usize) -> Result<Vec<usize>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            classify_f64(value, m).map_err(|e| match e {
                Error::OutOfRange { .. } => Error::SampleOutOfRange { index, value },
                other => other,
            })
        })
        .collect()
}

/// The balance bound `(n-1)/(len-n+1)` quoted for sliding-window ingestion.
pub fn ingestion_balance_bound(len: usize, n: usize) -> Rational {
    if len < n {
        return Rational::zero();
    }
    Rational::new((n as i64 - 1).into(), ((len - n + 1) as i64).into())
}

/// JSON form of a [`MarkovSpec`]: `{"P": [[[num,den],...],...], "pi": [[num,den],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovSpecFile {
    #[serde(rename = "P")]
    pub transition: Vec<Vec<RatPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<RatPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl MarkovSpecFile {
    pub fn into_spec(self) -> Result<MarkovSpec> {
        let transition: Vec<Vec<Rational>> = self
            .transition
            .into_iter()
            .map(|row| row.into_iter().map(|p| p.0).collect())
            .collect();
        let spec = match self.pi {
            Some(pi) => MarkovSpec::new(transition, pi.into_iter().map(|p| p.0).collect())?,
            None => MarkovSpec::from_transition(transition)?,
        };
        match self.m {
            Some(m) => spec.with_resolution(m),
            None => Ok(spec),
        }
    }
}

impl From<&MarkovSpec> for MarkovSpecFile {
    fn from(spec: &MarkovSpec) -> Self {
        MarkovSpecFile {
            transition: spec
                .transition
                .iter()
                .map(|row| row.iter().cloned().map(RatPair).collect())
                .collect(),
            pi: Some(spec.stationary.iter().cloned().map(RatPair).collect()),
            m: Some(spec.m),
        }
    }
}
