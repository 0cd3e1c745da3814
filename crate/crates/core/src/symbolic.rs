//! Alphabets, words, cylinder cells and periodic points.
//!
//! The unit interval is cut into `m` cells `[j/m, (j+1)/m)`, the last one
//! closed at 1. A point of the sequence space is represented symbolically by
//! the cell index of each coordinate; the alphabet symbol of cell `j` is its
//! midpoint `(2j+1)/(2m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WordMeasure;
use crate::rational::{rat, Rational};

/// Upper limit on `m^n` for dense per-word tables.
pub const MAX_CELLS: usize = 1 << 24;

/// Number of words of length `n` over `m` symbols, guarded against blow-up.
pub fn cell_count(m: usize, n: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    let mut count: usize = 1;
    for _ in 0..n {
        count = count
            .checked_mul(m)
            .filter(|&c| c <= MAX_CELLS)
            .ok_or(Error::TooManyCells { m, n })?;
    }
    Ok(count)
}

/// Base-`m` rank of a word, first symbol most significant.
pub fn word_rank(indices: &[usize], m: usize) -> usize {
    indices.iter().fold(0, |acc, &s| acc * m + s)
}

/// Inverse of [`word_rank`].
pub fn word_indices(mut rank: usize, m: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = rank % m;
        rank /= m;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    m: usize,
    symbols: Vec<Rational>,
}

impl Alphabet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn symbols(&self) -> &[Rational] {
        &self.symbols
    }

    pub fn symbol(&self, j: usize) -> Option<&Rational> {
        self.symbols.get(j)
    }

    /// Midpoint coordinates of a word, as doubles.
    pub fn embed(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&j| midpoint(j, self.m)).collect()
    }
}

/// The `m` cell midpoints `1/(2m), 3/(2m), ..., (2m-1)/(2m)`.
pub fn make_alphabet(m: usize) -> Result<Alphabet> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    let den = 2 * m as i64;
    let symbols = (0..m as i64).map(|j| rat(2 * j + 1, den)).collect();
    Ok(Alphabet { m, symbols })
}

pub(crate) fn midpoint(j: usize, m: usize) -> f64 {
    (2 * j + 1) as f64 / (2 * m) as f64
}

/// Cell index `j` with `value` in `[j/m, (j+1)/m)`; the value 1 belongs to
/// the closed last cell.
pub fn classify(value: &Rational, m: usize) -> Result<usize> {
    use num_traits::{One, ToPrimitive, Zero};
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    if value < &Rational::zero() || value > &Rational::one() {
        return Err(Error::OutOfRange {
            value: value.to_string(),
        });
    }
    let scaled = (value * Rational::from_integer(m.into())).floor();
    let j = scaled.to_integer().to_usize().unwrap_or(m);
    Ok(j.min(m - 1))
}

/// Floating-point variant of [`classify`] used for trajectory samples.
pub fn classify_f64(value: f64, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            value: value.to_string(),
        });
    }
    let j = (value * m as f64).floor() as usize;
    Ok(j.min(m - 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "IndexRepr", into = "IndexRepr")]
pub struct Word {
    m: usize,
    indices: Vec<usize>,
}

impl Word {
    pub fn new(m: usize, indices: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        if indices.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= m) {
            return Err(Error::SymbolOutOfRange { index: bad, m });
        }
        Ok(Word { m, indices })
    }

    pub(crate) fn from_rank(rank: usize, m: usize, n: usize) -> Self {
        Word {
            m,
            indices: word_indices(rank, m, n),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rank(&self) -> usize {
        word_rank(&self.indices, self.m)
    }

    pub fn last(&self) -> usize {
        self.indices[self.indices.len() - 1]
    }

    /// True when the last `n-1` symbols of `self` are the first `n-1` of `next`.
    pub fn overlaps(&self, next: &Word) -> bool {
        self.len() == next.len() && self.indices[1..] == next.indices[..next.len() - 1]
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sep = if self.m > 10 { "," } else { "" };
        let parts: Vec<String> = self.indices.iter().map(|j| j.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

#[derive(Serialize, Deserialize)]
struct IndexRepr {
    m: usize,
    indices: Vec<usize>,
}

impl TryFrom<IndexRepr> for Word {
    type Error = Error;
    fn try_from(repr: IndexRepr) -> Result<Self> {
        Word::new(repr.m, repr.indices)
    }
}

impl From<Word> for IndexRepr {
    fn from(word: Word) -> Self {
        IndexRepr {
            m: word.m,
            indices: word.indices,
        }
    }
}

/// One coordinate's interval inside a cylinder cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellBound {
    pub lower: Rational,
    pub upper: Rational,
    pub upper_closed: bool,
}

impl CellBound {
    pub fn contains(&self, value: &Rational) -> bool {
        value >= &self.lower && (value < &self.upper || (self.upper_closed && value == &self.upper))
    }
}

/// Cylinder cell fixing the first `n` coordinates to cells `j_0, ..., j_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderCell {
    word: Word,
}

impl CylinderCell {
    pub fn new(word: Word) -> Self {
        CylinderCell { word }
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn m(&self) -> usize {
        self.word.m
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn bounds(&self) -> Vec<CellBound> {
        let m = self.m() as i64;
        self.word
            .indices
            .iter()
            .map(|&j| {
                let j = j as i64;
                CellBound {
                    lower: rat(j, m),
                    upper: rat(j + 1, m),
                    upper_closed: j == m - 1,
                }
            })
            .collect()
    }

    /// Whether a point of `[0,1]^n` (its first `n` coordinates) lies in the cell.
    pub fn contains(&self, coords: &[Rational]) -> bool {
        coords.len() >= self.n()
            && self
                .bounds()
                .iter()
                .zip(coords)
                .all(|(bound, value)| bound.contains(value))
    }

    /// The cell of `C_{m,n}` containing the given coordinates.
    pub fn locate(coords: &[Rational], m: usize) -> Result<Self> {
        let indices = coords
            .iter()
            .map(|c| classify(c, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(CylinderCell::new(Word::new(m, indices)?))
    }
}

/// Anything that assigns a symbol index to every nonnegative position.
pub trait SymbolSequence {
    fn resolution(&self) -> usize;

    fn symbol(&self, position: usize) -> usize;

    /// Length-`n` word read from `start`.
    fn window(&self, start: usize, n: usize) -> Word {
        let indices = (start..start + n).map(|p| self.symbol(p)).collect();
        Word {
            m: self.resolution(),
            indices,
        }
    }
}

impl<S: SymbolSequence + ?Sized> SymbolSequence for &S {
    fn resolution(&self) -> usize {
        (**self).resolution()
    }
    fn symbol(&self, position: usize) -> usize {
        (**self).symbol(position)
    }
}

/// The sequence read from `offset` onwards, i.e. `σ^offset` of the inner one.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<S> {
    pub inner: S,
    pub offset: usize,
}

impl<S: SymbolSequence> SymbolSequence for Shifted<S> {
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }
    fn symbol(&self, position: usize) -> usize {
        self.inner.symbol(position + self.offset)
    }
}

/// A periodic point given by one period of symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexRepr", into = "IndexRepr")]
pub struct PeriodicPoint {
    m: usize,
    period: Vec<usize>,
}

impl PeriodicPoint {
    pub fn new(m: usize, period: Vec<usize>) -> Result<Self> {
        let word = Word::new(m, period)?;
        Ok(PeriodicPoint {
            m,
            period: word.indices,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The period length `c`.
    pub fn period(&self) -> usize {
        self.period.len()
    }

    pub fn period_word(&self) -> &[usize] {
        &self.period
    }
}

impl SymbolSequence for PeriodicPoint {
    fn resolution(&self) -> usize {
        self.m
    }

    fn symbol(&self, position: usize) -> usize {
        self.period[position % self.period.len()]
    }
}

impl TryFrom<IndexRepr> for PeriodicPoint {
    type Error = Error;
    fn try_from(repr: IndexRepr) -> Result<Self> {
        PeriodicPoint::new(repr.m, repr.indices)
    }
}

impl From<PeriodicPoint> for IndexRepr {
    fn from(point: PeriodicPoint) -> Self {
        IndexRepr {
            m: point.m,
            indices: point.period,
        }
    }
}

/// Length-`n` word of `point` starting at `start`, reading the period cyclically.
pub fn window(point: &PeriodicPoint, start: usize, n: usize) -> Result<Word> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    Ok(point.window(start, n))
}

/// Per-word frequencies of the `c` cyclic windows of length `n`.
pub fn window_counts(point: &PeriodicPoint, n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let m = point.m;
    let cells = cell_count(m, n)?;
    let mut counts = vec![0u64; cells];
    let mut rank = word_rank(&point.window(0, n).indices, m);
    let c = point.period();
    for i in 0..c {
        counts[rank] += 1;
        rank = (rank * m + point.symbol(i + n)) % cells;
    }
    Ok(counts)
}

/// The empirical measure of one period of `point` on words of length `n`.
pub fn empirical_measure(point: &PeriodicPoint, n: usize) -> Result<WordMeasure> {
    let counts = window_counts(point, n)?;
    WordMeasure::from_counts(point.m, n, &counts)
}
