//! Rationalization of shift-balanced word measures, de Bruijn multigraphs,
//! Eulerian circuits and the periodic points built from them.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{check_shift_balance, Observable, WordMeasure};
use crate::rational::{from_f64, int, rat, to_f64, Rational};
use crate::symbolic::{empirical_measure, PeriodicPoint, Word};

/// A word measure whose weights are multiples of `1/N`, together with the
/// measure it approximates.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalizedMeasure {
    kappa: WordMeasure,
    denominator: u64,
    counts: Vec<u64>,
    source: WordMeasure,
    deviation: Rational,
}

impl RationalizedMeasure {
    /// Uses integer word counts directly; they must be shift-balanced.
    pub fn from_counts(m: usize, n: usize, counts: Vec<u64>) -> Result<Self> {
        let kappa = WordMeasure::from_counts(m, n, &counts)?;
        let balance = check_shift_balance(&kappa);
        if !balance.balanced {
            return Err(Error::Unbalanced {
                imbalance: balance.max_imbalance.to_string(),
            });
        }
        Ok(RationalizedMeasure {
            denominator: counts.iter().sum(),
            counts,
            source: kappa.clone(),
            kappa,
            deviation: Rational::zero(),
        })
    }

    /// `κ′`.
    pub fn kappa(&self) -> &WordMeasure {
        &self.kappa
    }

    /// `N`.
    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// `N·κ′(w)` by word rank.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn source(&self) -> &WordMeasure {
        &self.source
    }

    /// `max_w |κ′(w) − κ(w)|`.
    pub fn deviation(&self) -> &Rational {
        &self.deviation
    }

    pub fn m(&self) -> usize {
        self.kappa.m()
    }

    pub fn n(&self) -> usize {
        self.kappa.n()
    }
}

/// A simple cycle of the de Bruijn graph carrying `weight` units of flow.
#[derive(Debug, Clone, PartialEq)]
struct Cycle {
    edges: Vec<usize>,
    weight: Rational,
}

/// Splits a balanced flow on the de Bruijn graph into simple cycles.
///
/// Deterministic: each round starts at the lowest vertex with flow left,
/// follows the lowest positive out-edge until a vertex repeats, and removes
/// the bottleneck of the loop it closed.
fn decompose(m: usize, flow: &[Rational]) -> Vec<Cycle> {
    let vertices = flow.len() / m;
    let mut left = flow.to_vec();
    let mut cycles = Vec::new();
    let mut seen = vec![usize::MAX; vertices];
    let mut start = 0;
    loop {
        while start < vertices && (0..m).all(|a| !left[start * m + a].is_positive()) {
            start += 1;
        }
        if start == vertices {
            return cycles;
        }
        let mut edges = Vec::new();
        let mut u = start;
        let loop_from = loop {
            seen[u] = edges.len();
            // A balanced flow never strands the walk at a vertex it entered.
            let a = (0..m)
                .find(|&a| left[u * m + a].is_positive())
                .expect("flow is balanced");
            let e = u * m + a;
            edges.push(e);
            u = e % vertices;
            if seen[u] != usize::MAX {
                break seen[u];
            }
        };
        let cycle: Vec<usize> = edges.split_off(loop_from);
        for &e in &edges {
            seen[e / m] = usize::MAX;
        }
        for &e in &cycle {
            seen[e / m] = usize::MAX;
        }
        let weight = cycle
            .iter()
            .map(|&e| left[e].clone())
            .min()
            .expect("cycle is nonempty");
        for &e in &cycle {
            left[e] -= &weight;
        }
        cycles.push(Cycle {
            edges: cycle,
            weight,
        });
    }
}

fn gcd_of_lengths(cycles: &[Cycle]) -> u64 {
    cycles
        .iter()
        .fold(0u64, |g, c| g.gcd(&(c.edges.len() as u64)))
}

fn denominator_error(n: u64, delta: &Rational, reason: impl Into<String>) -> Error {
    Error::DenominatorTooSmall {
        denominator: n,
        delta: delta.to_string(),
        reason: reason.into(),
    }
}

/// Rounds `N·κ` to an integral, shift-balanced word count vector with total
/// `N`, deviating from `κ` by less than `δ` on every word and never putting
/// mass on a word that `κ` leaves empty.
///
/// The flow `N·κ` is split into simple cycles whose weights are rounded to
/// integers; the total is then corrected by adding or removing whole cycles.
/// All postconditions are verified and a failure is reported instead of a
/// violating result.
pub fn rationalize(
    kappa: &WordMeasure,
    delta: &Rational,
    n_den: u64,
) -> Result<RationalizedMeasure> {
    check_inputs(kappa, delta)?;
    if n_den == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let cycles = decompose(kappa.m(), kappa.weights());
    rationalize_with(kappa, delta, n_den, &cycles)
}

/// Picks `N` automatically: starts at `⌈mⁿ/δ⌉` rounded up to a multiple of
/// the cycle-length gcd and doubles until [`rationalize`] succeeds.
pub fn rationalize_auto(kappa: &WordMeasure, delta: &Rational) -> Result<RationalizedMeasure> {
    check_inputs(kappa, delta)?;
    let cycles = decompose(kappa.m(), kappa.weights());
    let g = gcd_of_lengths(&cycles).max(1);
    let cells = int(kappa.weights().len() as u64);
    let start = (cells / delta)
        .ceil()
        .to_integer()
        .to_u64()
        .ok_or_else(|| denominator_error(u64::MAX, delta, "initial N exceeds 64 bits"))?;
    let mut n_den = start.max(1).div_ceil(g) * g;
    let mut last_err = None;
    for _ in 0..48 {
        match rationalize_with(kappa, delta, n_den, &cycles) {
            Ok(r) => return Ok(r),
            Err(e @ Error::DenominatorTooSmall { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        n_den = match n_den.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    Err(last_err.unwrap_or_else(|| denominator_error(n_den, delta, "no admissible N found")))
}

fn check_inputs(kappa: &WordMeasure, delta: &Rational) -> Result<()> {
    if !delta.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let balance = check_shift_balance(kappa);
    if !balance.balanced {
        return Err(Error::Unbalanced {
            imbalance: balance.max_imbalance.to_string(),
        });
    }
    Ok(())
}

fn rationalize_with(
    kappa: &WordMeasure,
    delta: &Rational,
    n_den: u64,
    cycles: &[Cycle],
) -> Result<RationalizedMeasure> {
    let big_n = int(n_den);
    let target: Vec<Rational> = kappa.weights().iter().map(|w| w * &big_n).collect();

    let counts = if target.iter().all(|x| x.is_integer()) {
        target
            .iter()
            .map(|x| {
                x.to_integer()
                    .to_u64()
                    .expect("count fits since total is N")
            })
            .collect()
    } else {
        round_cycles(kappa, cycles, &big_n, n_den)
            .map_err(|reason| denominator_error(n_den, delta, reason))?
    };

    verify(kappa, delta, n_den, counts)
}

fn round_cycles(
    kappa: &WordMeasure,
    cycles: &[Cycle],
    big_n: &Rational,
    n_den: u64,
) -> std::result::Result<Vec<u64>, String> {
    let lambda: Vec<Rational> = cycles.iter().map(|c| &c.weight * big_n).collect();
    let half = rat(1, 2);
    let mut mu: Vec<i128> = lambda
        .iter()
        .map(|l| {
            (l + &half)
                .floor()
                .to_integer()
                .to_i128()
                .unwrap_or(i128::MAX)
        })
        .collect();
    let lengths: Vec<i128> = cycles.iter().map(|c| c.edges.len() as i128).collect();
    let mass: i128 = mu.iter().zip(&lengths).map(|(u, l)| u * l).sum();
    let deficit = n_den as i128 - mass;

    if deficit != 0 {
        let steps = mass_correction(&lengths, &mu, deficit).ok_or_else(|| {
            "total mass cannot be matched with whole cycles at this N".to_string()
        })?;
        for step in steps {
            let len = step.abs();
            let candidates = (0..cycles.len()).filter(|&k| lengths[k] == len);
            // Slack λ_k − μ_k: add where rounding lost most, remove where it gained most.
            let slack = |k: usize| &lambda[k] - Rational::from_integer(BigInt::from(mu[k]));
            let chosen = if step > 0 {
                candidates.max_by(|&a, &b| slack(a).cmp(&slack(b)).then(b.cmp(&a)))
            } else {
                candidates
                    .filter(|&k| mu[k] > 0)
                    .min_by(|&a, &b| slack(a).cmp(&slack(b)).then(a.cmp(&b)))
            };
            let k =
                chosen.ok_or_else(|| "no cycle available for the mass correction".to_string())?;
            mu[k] += step.signum();
        }
    }

    let mut counts = vec![0i128; kappa.weights().len()];
    for (cycle, &u) in cycles.iter().zip(&mu) {
        for &e in &cycle.edges {
            counts[e] += u;
        }
    }
    counts
        .into_iter()
        .map(|c| u64::try_from(c).map_err(|_| "rounded count out of range".to_string()))
        .collect()
}

/// Sequence of `±L` steps (over available cycle lengths `L`) summing to
/// `deficit`, never removing more cycles of a length than were rounded in.
fn mass_correction(lengths: &[i128], mu: &[i128], deficit: i128) -> Option<Vec<i128>> {
    let mut removable: BTreeMap<i128, i128> = BTreeMap::new();
    for (&len, &u) in lengths.iter().zip(mu) {
        *removable.entry(len).or_default() += u.max(0);
    }
    let feasible = |steps: &[i128]| {
        removable
            .iter()
            .all(|(&len, &avail)| steps.iter().filter(|&&s| s == -len).count() as i128 <= avail)
    };
    match shortest_steps(&removable, deficit) {
        Some(steps) if feasible(&steps) => Some(steps),
        _ => bounded_steps(&removable, deficit),
    }
}

/// Breadth-first search over partial sums, ignoring availability.
fn shortest_steps(removable: &BTreeMap<i128, i128>, deficit: i128) -> Option<Vec<i128>> {
    let max_len = *removable.keys().max()?;
    let bound = deficit.abs() + 2 * max_len;
    let offset = bound;
    let size = (2 * bound + 1) as usize;
    let mut parent: Vec<Option<(usize, i128)>> = vec![None; size];
    let origin = offset as usize;
    let goal = (deficit + offset) as usize;
    let mut visited = vec![false; size];
    visited[origin] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(at) = queue.pop_front() {
        if at == goal {
            let mut steps = Vec::new();
            let mut cur = at;
            while let Some((prev, step)) = parent[cur] {
                steps.push(step);
                cur = prev;
            }
            steps.reverse();
            return Some(steps);
        }
        for &len in removable.keys() {
            for step in [len, -len] {
                let next = at as i128 + step;
                if (0..size as i128).contains(&next) && !visited[next as usize] {
                    visited[next as usize] = true;
                    parent[next as usize] = Some((at, step));
                    queue.push_back(next as usize);
                }
            }
        }
    }
    None
}

/// Fewest steps with at most `removable[L]` removals per length, by dynamic
/// programming over lengths with a net change per length.
fn bounded_steps(removable: &BTreeMap<i128, i128>, deficit: i128) -> Option<Vec<i128>> {
    const MAX_WORK: i128 = 50_000_000;
    let max_len = *removable.keys().max()?;
    let bound = deficit.abs() + 2 * max_len * removable.len() as i128;
    let size = (2 * bound + 1) as usize;
    let work: i128 = removable
        .keys()
        .map(|&l| (2 * bound + 1) * (2 * bound / l + 2))
        .sum();
    if work > MAX_WORK {
        return None;
    }
    let mut best: Vec<Option<i128>> = vec![None; size];
    best[bound as usize] = Some(0);
    let mut choices: Vec<Vec<Option<(usize, i128)>>> = Vec::new();
    for (&len, &avail) in removable {
        let reach = bound / len + 1;
        let mut next: Vec<Option<i128>> = vec![None; size];
        let mut choice: Vec<Option<(usize, i128)>> = vec![None; size];
        for (at, cost) in best.iter().enumerate() {
            let Some(cost) = cost else { continue };
            for x in -avail.min(reach)..=reach {
                let to = at as i128 + x * len;
                if !(0..size as i128).contains(&to) {
                    continue;
                }
                let c = cost + x.abs();
                let slot = &mut next[to as usize];
                if slot.is_none_or(|old| c < old) {
                    *slot = Some(c);
                    choice[to as usize] = Some((at, x));
                }
            }
        }
        best = next;
        choices.push(choice);
    }
    let mut at = (deficit + bound) as usize;
    best[at]?;
    let mut steps = Vec::new();
    for (choice, &len) in choices.iter().zip(removable.keys()).rev() {
        let (prev, x) = choice[at].expect("reachable state has a predecessor");
        steps.extend(std::iter::repeat_n(
            len * x.signum(),
            x.unsigned_abs() as usize,
        ));
        at = prev;
    }
    Some(steps)
}

fn verify(
    kappa: &WordMeasure,
    delta: &Rational,
    n_den: u64,
    counts: Vec<u64>,
) -> Result<RationalizedMeasure> {
    let fail = |reason: &str| denominator_error(n_den, delta, reason);
    if counts.iter().sum::<u64>() != n_den {
        return Err(fail("rounded counts do not sum to N"));
    }
    if counts
        .iter()
        .zip(kappa.weights())
        .any(|(&c, w)| c > 0 && w.is_zero())
    {
        return Err(fail("rounding put mass on a word of zero weight"));
    }
    let rationalized = WordMeasure::from_counts(kappa.m(), kappa.n(), &counts)?;
    if !check_shift_balance(&rationalized).balanced {
        return Err(fail("rounded counts are not shift-balanced"));
    }
    let deviation = rationalized.max_deviation(kappa)?;
    if &deviation >= delta {
        return Err(fail(&format!("deviation {deviation} is not below delta")));
    }
    Ok(RationalizedMeasure {
        kappa: rationalized,
        denominator: n_den,
        counts,
        source: kappa.clone(),
        deviation,
    })
}

/// The de Bruijn multigraph on `(n−1)`-words: word `ξ` is an edge from its
/// prefix to its suffix with multiplicity `N·κ′(ξ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeBruijnGraph {
    m: usize,
    n: usize,
    multiplicity: Vec<u64>,
}

impl DeBruijnGraph {
    pub fn new(r: &RationalizedMeasure) -> Self {
        DeBruijnGraph {
            m: r.m(),
            n: r.n(),
            multiplicity: r.counts().to_vec(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.multiplicity.len() / self.m
    }

    pub fn multiplicity(&self) -> &[u64] {
        &self.multiplicity
    }

    pub fn total(&self) -> u64 {
        self.multiplicity.iter().sum()
    }

    /// Source vertex of the edge with word rank `e`.
    pub fn tail(&self, e: usize) -> usize {
        e / self.m
    }

    /// Target vertex of the edge with word rank `e`.
    pub fn head(&self, e: usize) -> usize {
        e % self.vertex_count()
    }

    pub fn out_degree(&self, v: usize) -> u64 {
        (0..self.m).map(|a| self.multiplicity[v * self.m + a]).sum()
    }

    pub fn in_degree(&self, v: usize) -> u64 {
        let vertices = self.vertex_count();
        (0..self.m)
            .map(|a| self.multiplicity[a * vertices + v])
            .sum()
    }

    pub fn check_balanced(&self) -> Result<()> {
        match (0..self.vertex_count()).find(|&v| self.in_degree(v) != self.out_degree(v)) {
            Some(vertex) => Err(Error::GraphUnbalanced { vertex }),
            None => Ok(()),
        }
    }

    /// Weakly connected components of the positive-multiplicity edges,
    /// each listed as its edge words in rank order.
    pub fn components(&self) -> Vec<Vec<Word>> {
        let vertices = self.vertex_count();
        let mut parent: Vec<usize> = (0..vertices).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (e, &mult) in self.multiplicity.iter().enumerate() {
            if mult > 0 {
                let (a, b) = (
                    find(&mut parent, self.tail(e)),
                    find(&mut parent, self.head(e)),
                );
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: Vec<(usize, Vec<Word>)> = Vec::new();
        for (e, &mult) in self.multiplicity.iter().enumerate() {
            if mult > 0 {
                let root = find(&mut parent, self.tail(e));
                let word = Word::from_rank(e, self.m, self.n);
                match groups.iter_mut().find(|(r, _)| *r == root) {
                    Some((_, words)) => words.push(word),
                    None => groups.push((root, vec![word])),
                }
            }
        }
        groups.into_iter().map(|(_, words)| words).collect()
    }

    /// Eulerian circuit by iterative Hierholzer, always taking the
    /// lowest-ranked edge with multiplicity left.
    pub fn eulerian_circuit(&self) -> Result<Vec<Word>> {
        self.check_balanced()?;
        let components = self.components();
        if components.is_empty() {
            return Err(Error::EmptySequence);
        }
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        let m = self.m;
        let mut left = self.multiplicity.clone();
        let mut next_symbol = vec![0usize; self.vertex_count()];
        let first = left.iter().position(|&c| c > 0).expect("graph has an edge");
        let mut stack: Vec<(usize, Option<usize>)> = vec![(self.tail(first), None)];
        let mut circuit = Vec::with_capacity(self.total() as usize);
        while let Some(&(v, via)) = stack.last() {
            while next_symbol[v] < m && left[v * m + next_symbol[v]] == 0 {
                next_symbol[v] += 1;
            }
            if next_symbol[v] < m {
                let e = v * m + next_symbol[v];
                left[e] -= 1;
                stack.push((self.head(e), Some(e)));
            } else {
                stack.pop();
                if let Some(e) = via {
                    circuit.push(e);
                }
            }
        }
        circuit.reverse();
        Ok(circuit
            .into_iter()
            .map(|e| Word::from_rank(e, self.m, self.n))
            .collect())
    }
}

/// The cyclic sequence of words using every word `ξ` exactly `N·κ′(ξ)`
/// times with consecutive words overlapping in `n−1` symbols.
pub fn longest_allowed_sequence(r: &RationalizedMeasure) -> Result<Vec<Word>> {
    DeBruijnGraph::new(r).eulerian_circuit()
}

fn check_overlaps(seq: &[Word], n: usize) -> Result<()> {
    let first = seq.first().ok_or(Error::EmptySequence)?;
    let m = first.m();
    for word in seq {
        if word.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: word.len(),
            });
        }
        if word.m() != m {
            return Err(Error::ResolutionMismatch {
                expected: m,
                found: word.m(),
            });
        }
    }
    match seq.windows(2).position(|w| !w[0].overlaps(&w[1])) {
        Some(position) => Err(Error::MalformedSequence { position }),
        None => Ok(()),
    }
}

/// `β` with period `n + r − 1`: the first word followed by the last symbol
/// of each later word.
pub fn periodic_point_paper(seq: &[Word], n: usize) -> Result<PeriodicPoint> {
    check_overlaps(seq, n)?;
    let mut period = seq[0].indices().to_vec();
    period.extend(seq[1..].iter().map(Word::last));
    PeriodicPoint::new(seq[0].m(), period)
}

/// `β` with period `r`, built from the last symbol of each word of a closed
/// sequence; its depth-`n` empirical measure equals `κ′` exactly.
pub fn periodic_point_cyclic(seq: &[Word], n: usize) -> Result<PeriodicPoint> {
    check_overlaps(seq, n)?;
    if !seq[seq.len() - 1].overlaps(&seq[0]) {
        return Err(Error::NotClosed);
    }
    PeriodicPoint::new(seq[0].m(), seq.iter().map(Word::last).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproximationError {
    /// `max_w |ρ_β(w) − κ′(w)|`.
    pub max_error: Rational,
    /// `n/(N+n)`.
    pub bound: Rational,
}

impl ApproximationError {
    pub fn within_bound(&self) -> bool {
        self.max_error <= self.bound
    }
}

pub fn approximation_error(
    beta: &PeriodicPoint,
    kappa: &WordMeasure,
    n_den: u64,
) -> Result<ApproximationError> {
    if beta.m() != kappa.m() {
        return Err(Error::ResolutionMismatch {
            expected: kappa.m(),
            found: beta.m(),
        });
    }
    let n = kappa.n() as u64;
    let empirical = empirical_measure(beta, kappa.n())?;
    Ok(ApproximationError {
        max_error: empirical.max_deviation(kappa)?,
        bound: Rational::new(n.into(), (n_den + n).into()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Paper,
    Cyclic,
}

impl Mode {
    pub fn build(self, seq: &[Word], n: usize) -> Result<PeriodicPoint> {
        match self {
            Mode::Paper => periodic_point_paper(seq, n),
            Mode::Cyclic => periodic_point_cyclic(seq, n),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Mode::Paper),
            "cyclic" => Ok(Mode::Cyclic),
            other => Err(Error::InvalidArgument(format!(
                "mode must be paper or cyclic, got {other:?}"
            ))),
        }
    }
}

/// How the common denominator is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Precision {
    Denominator(u64),
    Delta(Rational),
}

/// Everything produced by one run of the approximation pipeline.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub rationalized: RationalizedMeasure,
    pub sequence: Vec<Word>,
    pub paper: PeriodicPoint,
    pub cyclic: PeriodicPoint,
    pub paper_error: ApproximationError,
    pub cyclic_error: ApproximationError,
}

impl Approximation {
    pub fn point(&self, mode: Mode) -> &PeriodicPoint {
        match mode {
            Mode::Paper => &self.paper,
            Mode::Cyclic => &self.cyclic,
        }
    }

    pub fn error(&self, mode: Mode) -> &ApproximationError {
        match mode {
            Mode::Paper => &self.paper_error,
            Mode::Cyclic => &self.cyclic_error,
        }
    }
}

/// Rationalize, extract the circuit, and build both periodic points.
///
/// With a fixed denominator and no tolerance, `δ` defaults to 1 so only the
/// structural conditions constrain the rounding.
pub fn approximate(kappa: &WordMeasure, precision: &Precision) -> Result<Approximation> {
    let rationalized = match precision {
        Precision::Denominator(n_den) => rationalize(kappa, &Rational::one(), *n_den)?,
        Precision::Delta(delta) => rationalize_auto(kappa, delta)?,
    };
    let n = kappa.n();
    let sequence = longest_allowed_sequence(&rationalized)?;
    let paper = periodic_point_paper(&sequence, n)?;
    let cyclic = periodic_point_cyclic(&sequence, n)?;
    let n_den = rationalized.denominator();
    let paper_error = approximation_error(&paper, rationalized.kappa(), n_den)?;
    let cyclic_error = approximation_error(&cyclic, rationalized.kappa(), n_den)?;
    Ok(Approximation {
        rationalized,
        sequence,
        paper,
        cyclic,
        paper_error,
        cyclic_error,
    })
}

/// Cell resolution and per-cell tolerance `δ = ε / (2(γ+M)mⁿ)`, `γ = 0`,
/// for a cellwise observable: any measure within `δ` of the target on every
/// cell integrates `f` to within `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTolerance {
    pub m: usize,
    pub n: usize,
    pub delta: Rational,
}

pub fn partition_tolerance(f: &Observable, epsilon: &Rational) -> Result<PartitionTolerance> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !f.is_cellwise() {
        return Err(Error::InvalidObservable(
            "partition tolerances need a cellwise observable".into(),
        ));
    }
    let bound = if f.bound() > 0.0 {
        f.bound()
    } else if f.is_zero() {
        f64::EPSILON
    } else {
        return Err(Error::InvalidBound(format!(
            "bound {} is not positive for a nonzero observable",
            f.bound()
        )));
    };
    let bound = from_f64(bound).ok_or_else(|| Error::InvalidBound("bound is not finite".into()))?;
    let cells = int(f.table().map_or(0, |t| t.len()) as u64);
    Ok(PartitionTolerance {
        m: f.m(),
        n: f.depth(),
        delta: epsilon / (int(2) * bound * cells),
    })
}

/// `|∫f dρ′ − ∫f dρ|` for two measures on the same cells; used to check
/// [`partition_tolerance`].
pub fn integral_gap(f: &Observable, a: &WordMeasure, b: &WordMeasure) -> Result<f64> {
    Ok((crate::measure::integral(f, a)? - crate::measure::integral(f, b)?).abs())
}

/// `f64` rendering of an approximation error pair, for reports.
pub fn error_as_f64(e: &ApproximationError) -> (f64, f64) {
    (to_f64(&e.max_error), to_f64(&e.bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{markov_word_measure, MarkovSpec};
    use crate::symbolic::window_counts;
    use proptest::prelude::*;

    fn markov() -> WordMeasure {
        WordMeasure::new(2, 2, vec![rat(1, 2), rat(1, 4), rat(1, 4), rat(0, 1)]).unwrap()
    }

    fn words(m: usize, list: &[&[usize]]) -> Vec<Word> {
        list.iter()
            .map(|w| Word::new(m, w.to_vec()).unwrap())
            .collect()
    }

    fn counts(seq: &[Word], cells: usize) -> Vec<u64> {
        let mut c = vec![0; cells];
        for w in seq {
            c[w.rank()] += 1;
        }
        c
    }

    #[test]
    fn rationalize_examples() {
        let uniform = WordMeasure::uniform(2, 2).unwrap();
        let r = rationalize(&uniform, &rat(1, 100), 4).unwrap();
        assert_eq!(r.kappa(), &uniform);
        assert!(r.deviation().is_zero());

        let r = rationalize(&markov(), &rat(1, 100), 4).unwrap();
        assert_eq!(r.counts(), &[2, 1, 1, 0]);
        assert_eq!(r.kappa(), &markov());

        let thirds = WordMeasure::new(2, 1, vec![rat(1, 3), rat(2, 3)]).unwrap();
        let r = rationalize(&thirds, &rat(1, 10), 3).unwrap();
        assert_eq!(r.kappa(), &thirds);
    }

    #[test]
    fn rationalize_rounds_non_integral_flows() {
        let r = rationalize(&markov(), &rat(1, 10), 7).unwrap();
        assert_eq!(r.denominator(), 7);
        assert!(r.deviation() < &rat(1, 10));
        assert_eq!(r.counts()[3], 0);
        assert!(check_shift_balance(r.kappa()).balanced);

        // The two cycles of this measure have lengths 1 and 2.
        let r = rationalize_auto(&markov(), &rat(1, 1000)).unwrap();
        assert!(r.deviation() < &rat(1, 1000));
        assert!(r.denominator() >= 4000);
    }

    #[test]
    fn mass_correction_uses_only_present_cycles() {
        // Cycles 0→1→0 and 0→1→2→0 both round to one copy at N = 4; the
        // shortest fix (+2, −3) would drop a 3-cycle that is not there.
        let spec = MarkovSpec::from_transition(vec![
            vec![rat(0, 1), rat(1, 1), rat(0, 1)],
            vec![rat(3, 5), rat(0, 1), rat(2, 5)],
            vec![rat(5, 6), rat(0, 1), rat(1, 6)],
        ])
        .unwrap();
        let kappa = markov_word_measure(&spec, 2).unwrap();
        let r = rationalize(&kappa, &rat(1, 1), 4).unwrap();
        assert_eq!(r.counts().iter().sum::<u64>(), 4);
        assert!(check_shift_balance(r.kappa()).balanced);

        assert_eq!(mass_correction(&[2, 3], &[1, 1], -1), Some(vec![2, -3]));
        let mut steps = mass_correction(&[2, 3], &[2, 0], -1).unwrap();
        steps.sort();
        assert_eq!(steps, vec![-2, -2, 3]);
        assert_eq!(mass_correction(&[2, 3], &[1, 0], -1), None);
        assert_eq!(mass_correction(&[2], &[0], -2), None);
    }

    #[test]
    fn rationalize_reports_small_denominators() {
        let tiny = WordMeasure::new(2, 1, vec![rat(1, 1000), rat(999, 1000)]).unwrap();
        assert!(matches!(
            rationalize(&tiny, &rat(1, 10_000), 10),
            Err(Error::DenominatorTooSmall {
                denominator: 10,
                ..
            })
        ));
        let unbalanced =
            WordMeasure::new(2, 2, vec![rat(0, 1), rat(1, 1), rat(0, 1), rat(0, 1)]).unwrap();
        assert!(matches!(
            rationalize(&unbalanced, &rat(1, 10), 4),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn circuit_examples() {
        let r = RationalizedMeasure::from_counts(2, 2, vec![2, 1, 1, 0]).unwrap();
        let seq = longest_allowed_sequence(&r).unwrap();
        assert_eq!(seq, words(2, &[&[0, 0], &[0, 0], &[0, 1], &[1, 0]]));

        let r = RationalizedMeasure::from_counts(2, 2, vec![1, 0, 0, 0]).unwrap();
        assert_eq!(longest_allowed_sequence(&r).unwrap(), words(2, &[&[0, 0]]));

        let r = RationalizedMeasure::from_counts(2, 2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(
            longest_allowed_sequence(&r).unwrap(),
            words(2, &[&[0, 1], &[1, 0]])
        );
    }

    #[test]
    fn disconnected_support_is_reported() {
        let r = RationalizedMeasure::from_counts(2, 2, vec![1, 0, 0, 1]).unwrap();
        match longest_allowed_sequence(&r) {
            Err(Error::Disconnected { components }) => {
                assert_eq!(components, vec![words(2, &[&[0, 0]]), words(2, &[&[1, 1]])]);
            }
            other => panic!("expected a connectivity error, got {other:?}"),
        }
    }

    #[test]
    fn periodic_point_examples() {
        let seq = words(2, &[&[0, 0], &[0, 0], &[0, 1], &[1, 0]]);
        assert_eq!(
            periodic_point_paper(&seq, 2).unwrap().period_word(),
            &[0, 0, 0, 1, 0]
        );
        assert_eq!(
            periodic_point_cyclic(&seq, 2).unwrap().period_word(),
            &[0, 0, 1, 0]
        );
        assert_eq!(
            empirical_measure(&periodic_point_cyclic(&seq, 2).unwrap(), 2).unwrap(),
            markov()
        );

        let single = words(2, &[&[0, 0]]);
        assert_eq!(
            periodic_point_paper(&single, 2).unwrap().period_word(),
            &[0, 0]
        );
        assert_eq!(
            periodic_point_cyclic(&single, 2).unwrap().period_word(),
            &[0]
        );

        let pair = words(2, &[&[0, 1], &[1, 0]]);
        assert_eq!(
            periodic_point_paper(&pair, 2).unwrap().period_word(),
            &[0, 1, 0]
        );
        assert_eq!(
            periodic_point_cyclic(&pair, 2).unwrap().period_word(),
            &[1, 0]
        );
    }

    #[test]
    fn malformed_sequences() {
        let bad = words(2, &[&[0, 0], &[1, 0]]);
        assert_eq!(
            periodic_point_paper(&bad, 2),
            Err(Error::MalformedSequence { position: 0 })
        );
        let open = words(2, &[&[0, 0], &[0, 1]]);
        assert_eq!(periodic_point_cyclic(&open, 2), Err(Error::NotClosed));
        assert!(periodic_point_paper(&open, 2).is_ok());
        assert_eq!(periodic_point_paper(&[], 2), Err(Error::EmptySequence));
    }

    #[test]
    fn approximation_error_examples() {
        let paper = PeriodicPoint::new(2, vec![0, 0, 0, 1, 0]).unwrap();
        let e = approximation_error(&paper, &markov(), 4).unwrap();
        assert_eq!(e.max_error, rat(1, 10));
        assert_eq!(e.bound, rat(2, 6));
        assert!(e.within_bound());

        let cyclic = PeriodicPoint::new(2, vec![0, 0, 1, 0]).unwrap();
        assert!(approximation_error(&cyclic, &markov(), 4)
            .unwrap()
            .max_error
            .is_zero());

        let zero = PeriodicPoint::new(2, vec![0]).unwrap();
        let delta =
            WordMeasure::new(2, 2, vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]).unwrap();
        assert!(approximation_error(&zero, &delta, 1)
            .unwrap()
            .max_error
            .is_zero());
    }

    #[test]
    fn partition_tolerance_examples() {
        let ind = Observable::word_indicator(&Word::new(2, vec![0, 1]).unwrap()).unwrap();
        let t = partition_tolerance(&ind, &rat(1, 10)).unwrap();
        assert_eq!((t.m, t.n, t.delta), (2, 2, rat(1, 80)));

        let two = Observable::cellwise(2, 1, vec![2.0, -1.0], 2.0).unwrap();
        assert_eq!(
            partition_tolerance(&two, &rat(1, 1)).unwrap().delta,
            rat(1, 8)
        );

        let zero = Observable::cellwise(2, 1, vec![0.0, 0.0], 0.0).unwrap();
        let t = partition_tolerance(&zero, &rat(1, 1)).unwrap();
        assert_eq!(t.delta, rat(1, 4) / from_f64(f64::EPSILON).unwrap());
    }

    #[test]
    fn pipeline_on_markov_example() {
        let a = approximate(&markov(), &Precision::Denominator(4)).unwrap();
        assert_eq!(a.paper.period(), 5);
        assert_eq!(a.paper_error.max_error, rat(1, 10));
        assert!(a.cyclic_error.max_error.is_zero());
    }

    /// Word count vectors achievable by cyclic words of length `len` over two symbols.
    fn achievable_counts(len: usize) -> Vec<Vec<u64>> {
        (0..1u32 << len)
            .map(|bits| {
                let p: Vec<usize> = (0..len).map(|i| ((bits >> i) & 1) as usize).collect();
                window_counts(&PeriodicPoint::new(2, p).unwrap(), 2).unwrap()
            })
            .collect()
    }

    #[test]
    fn brute_force_oracle_small_n() {
        for big_n in 1..=6usize {
            let achievable = achievable_counts(big_n);
            for target in &achievable {
                let balanced = RationalizedMeasure::from_counts(2, 2, target.clone()).unwrap();
                let Ok(seq) = longest_allowed_sequence(&balanced) else {
                    continue;
                };
                assert_eq!(counts(&seq, 4), *target);
                let beta = periodic_point_cyclic(&seq, 2).unwrap();
                assert_eq!(&window_counts(&beta, 2).unwrap(), target);
            }
        }
    }

    fn random_chain() -> impl Strategy<Value = MarkovSpec> {
        (2usize..4)
            .prop_flat_map(|s| prop::collection::vec(prop::collection::vec(0i64..6, s), s))
            .prop_map(|mut rows| {
                // A positive cycle 0 -> 1 -> ... -> 0 keeps the chain irreducible.
                let s = rows.len();
                for (i, row) in rows.iter_mut().enumerate() {
                    row[(i + 1) % s] += 1;
                }
                let p: Vec<Vec<Rational>> = rows
                    .iter()
                    .map(|row| {
                        let total: i64 = row.iter().sum();
                        row.iter().map(|&x| rat(x, total)).collect()
                    })
                    .collect();
                MarkovSpec::from_transition(p).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn paper_error_within_bound(spec in random_chain(), n in 1usize..4, k in 2u32..10) {
            let kappa = markov_word_measure(&spec, n).unwrap();
            let big_n = 1u64 << k;
            // Small N can round a thin edge away and split the support.
            let a = match approximate(&kappa, &Precision::Denominator(big_n)) {
                Err(Error::Disconnected { .. }) => return Ok(()),
                other => other.unwrap(),
            };
            prop_assert!(a.paper_error.within_bound());
            prop_assert!(a.cyclic_error.max_error.is_zero());
            prop_assert_eq!(a.paper.period() as u64, big_n + n as u64 - 1);
            prop_assert_eq!(&counts(&a.sequence, kappa.weights().len()), a.rationalized.counts());
        }

        #[test]
        fn rationalize_keeps_zeros_and_balance(spec in random_chain(), n in 1usize..4, den in 1i64..200) {
            let kappa = markov_word_measure(&spec, n).unwrap();
            let delta = rat(1, den);
            let r = rationalize_auto(&kappa, &delta).unwrap();
            prop_assert!(r.deviation() < &delta);
            prop_assert!(check_shift_balance(r.kappa()).balanced);
            for (w, c) in kappa.weights().iter().zip(r.counts()) {
                prop_assert!(!(w.is_zero() && *c > 0));
            }
            let graph = DeBruijnGraph::new(&r);
            prop_assert!(graph.check_balanced().is_ok());
            prop_assert_eq!(graph.total(), r.denominator());
        }
    }
}
