//! Birkhoff and segment averages along symbolic points, and typicality reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::Observable;
use crate::symbolic::{cell_count, SymbolSequence};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Streams `f(σ^i x)` for `i = start, start+1, ...`.
///
/// Cellwise observables keep a rolling window rank, so each step reads one
/// new symbol.
pub struct ObservableScan<'a, S: SymbolSequence> {
    point: &'a S,
    f: &'a Observable,
    next: usize,
    rank: usize,
    cells: usize,
    buffer: Vec<usize>,
}

impl<'a, S: SymbolSequence> ObservableScan<'a, S> {
    pub fn new(point: &'a S, f: &'a Observable, start: usize) -> Result<Self> {
        if point.resolution() != f.m() {
            return Err(Error::ResolutionMismatch {
                expected: point.resolution(),
                found: f.m(),
            });
        }
        let d = f.depth();
        let cells = cell_count(f.m(), d)?;
        let mut scan = ObservableScan {
            point,
            f,
            next: start,
            rank: 0,
            cells,
            buffer: Vec::with_capacity(d),
        };
        if f.is_cellwise() {
            // Rank of the window at start-1 shifted in; the first `next()` adds one symbol.
            let m = f.m();
            scan.rank = (0..d.saturating_sub(1)).fold(0, |r, k| r * m + point.symbol(start + k));
        }
        Ok(scan)
    }

    /// Position whose value the next call returns.
    pub fn position(&self) -> usize {
        self.next
    }
}

impl<S: SymbolSequence> Iterator for ObservableScan<'_, S> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let i = self.next;
        self.next += 1;
        let d = self.f.depth();
        if self.f.is_cellwise() {
            let m = self.f.m();
            self.rank = (self.rank * m + self.point.symbol(i + d - 1)) % self.cells;
            Some(self.f.eval_rank(self.rank))
        } else {
            self.buffer.clear();
            self.buffer.extend((i..i + d).map(|p| self.point.symbol(p)));
            Some(self.f.eval(&self.buffer))
        }
    }
}

/// `Σ_{i=start}^{end-1} f(σ^i x)` with compensated summation.
pub fn birkhoff_sum<S: SymbolSequence>(
    point: &S,
    f: &Observable,
    start: usize,
    end: usize,
) -> Result<CompensatedSum> {
    Ok(ObservableScan::new(point, f, start)?
        .take(end.saturating_sub(start))
        .collect())
}

/// `A_n = (1/n) Σ_{i<n} f(σ^i x)`.
pub fn average<S: SymbolSequence>(point: &S, f: &Observable, n: usize) -> Result<f64> {
    segment_average(point, f, 0, n)
}

/// `A_{m,n} = (1/(n-m)) Σ_{i=m}^{n-1} f(σ^i x)`.
pub fn segment_average<S: SymbolSequence>(
    point: &S,
    f: &Observable,
    start: usize,
    end: usize,
) -> Result<f64> {
    if start >= end {
        return Err(Error::EmptySegment { start, end });
    }
    Ok(birkhoff_sum(point, f, start, end)?.value() / (end - start) as f64)
}

/// Running averages `A_1, ..., A_n` (index `i` holds `A_{i+1}`).
pub fn running_averages<S: SymbolSequence>(
    point: &S,
    f: &Observable,
    n: usize,
) -> Result<Vec<f64>> {
    let mut sum = CompensatedSum::default();
    Ok(ObservableScan::new(point, f, 0)?
        .take(n)
        .enumerate()
        .map(|(i, v)| {
            sum.add(v);
            sum.value() / (i + 1) as f64
        })
        .collect())
}

/// Largest `|A_v - target|` over `from <= v <= to` (`v >= 1`), by direct scan.
pub fn direct_scan<S: SymbolSequence>(
    point: &S,
    f: &Observable,
    target: f64,
    from: usize,
    to: usize,
) -> Result<f64> {
    let from = from.max(1);
    if from > to {
        return Err(Error::EmptySegment {
            start: from,
            end: to,
        });
    }
    let mut sum = CompensatedSum::default();
    let mut worst = 0.0f64;
    for (i, v) in ObservableScan::new(point, f, 0)?.take(to).enumerate() {
        sum.add(v);
        let n = i + 1;
        if n >= from {
            worst = worst.max((sum.value() / n as f64 - target).abs());
        }
    }
    Ok(worst)
}

/// Report grid: every `⌈1.2^k⌉` up to `horizon`, the extra marks, and `horizon`.
pub fn log_grid(horizon: usize, marks: &[usize]) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut x = 1.0f64;
    while (x.ceil() as usize) <= horizon {
        grid.push(x.ceil() as usize);
        x *= 1.2;
    }
    grid.extend(marks.iter().copied().filter(|&n| n >= 1 && n <= horizon));
    if horizon >= 1 {
        grid.push(horizon);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub average: f64,
    pub abs_err: f64,
    pub bound: Option<f64>,
    /// `None` for rows before the burn-in, which are reported but not judged.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub observable: String,
    pub target: f64,
    pub epsilon: f64,
    pub burn_in: Option<usize>,
    pub horizon: usize,
    /// Largest `|A_v - t|` over every `v` in `[burn_in, horizon]`, not just grid rows.
    pub max_err_after_burn_in: Option<f64>,
    pub status: Status,
    pub rows: Vec<ConvergenceRow>,
}

/// Settings for [`typicality_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityCheck {
    pub epsilon: f64,
    pub horizon: usize,
    /// First `n` from which `|A_n - t| < ε` is demanded; `None` when no
    /// certified horizon is known, which makes the verdict inconclusive.
    pub burn_in: Option<usize>,
    /// Extra grid positions, such as the block ends of a splice.
    pub marks: Vec<usize>,
}

/// Birkhoff averages of each observable against its target.
///
/// Every `n` in `[burn_in, horizon]` is checked; rows are emitted only on the
/// logarithmic grid. A burn-in beyond the horizon gives an inconclusive status.
pub fn typicality_report<S: SymbolSequence + Sync>(
    point: &S,
    family: &[Observable],
    targets: &[f64],
    check: &TypicalityCheck,
) -> Result<Vec<ConvergenceReport>> {
    if family.len() != targets.len() {
        return Err(Error::Arity {
            expected: family.len(),
            found: targets.len(),
        });
    }
    if check.epsilon.is_nan() || check.epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if check.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let grid = log_grid(check.horizon, &check.marks);
    family
        .iter()
        .zip(targets)
        .map(|(f, &target)| report_one(point, f, target, check, &grid))
        .collect()
}

fn report_one<S: SymbolSequence>(
    point: &S,
    f: &Observable,
    target: f64,
    check: &TypicalityCheck,
    grid: &[usize],
) -> Result<ConvergenceReport> {
    let burn_in = check.burn_in.map(|b| b.max(1));
    let judged = |n: usize| burn_in.is_some_and(|b| n >= b);
    let mut rows = Vec::with_capacity(grid.len());
    let mut next_row = grid.iter().peekable();
    let mut sum = CompensatedSum::default();
    let mut worst: Option<f64> = None;
    for (i, v) in ObservableScan::new(point, f, 0)?
        .take(check.horizon)
        .enumerate()
    {
        sum.add(v);
        let n = i + 1;
        let avg = sum.value() / n as f64;
        let err = (avg - target).abs();
        if judged(n) {
            worst = Some(worst.map_or(err, |w: f64| w.max(err)));
        }
        if next_row.peek() == Some(&&n) {
            next_row.next();
            rows.push(ConvergenceRow {
                n,
                average: avg,
                abs_err: err,
                bound: None,
                pass: judged(n).then_some(err < check.epsilon),
            });
        }
    }
    let status = match worst {
        None => Status::Inconclusive,
        Some(w) if w < check.epsilon => Status::Pass,
        Some(_) => Status::Fail,
    };
    Ok(ConvergenceReport {
        observable: f.label().to_string(),
        target,
        epsilon: check.epsilon,
        burn_in: check.burn_in,
        horizon: check.horizon,
        max_err_after_burn_in: worst,
        status,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::integral;
    use crate::rational::to_f64;
    use crate::symbolic::{empirical_measure, PeriodicPoint, Shifted, Word};
    use proptest::prelude::*;

    fn pt(m: usize, indices: &[usize]) -> PeriodicPoint {
        PeriodicPoint::new(m, indices.to_vec()).unwrap()
    }

    #[test]
    fn average_examples() {
        let p = pt(2, &[0, 1, 1, 0, 1]);
        let c = Observable::constant(2, 0.25).unwrap();
        for n in 1..20 {
            assert_eq!(average(&p, &c, n).unwrap(), 0.25);
        }

        let alt = pt(2, &[0, 1]);
        let first_zero = Observable::symbol_indicator(2, 0).unwrap();
        assert_eq!(average(&alt, &first_zero, 10).unwrap(), 0.5);

        let beta = pt(2, &[0, 0, 0, 1, 0]);
        let w00 = Observable::word_indicator(&Word::new(2, vec![0, 0]).unwrap()).unwrap();
        assert!((average(&beta, &w00, 5).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn segment_examples() {
        let p = pt(3, &[2, 0, 1, 1]);
        let f = Observable::cellwise_tight(3, 2, (0..9).map(|r| r as f64 / 7.0).collect()).unwrap();
        assert_eq!(
            segment_average(&p, &f, 0, 13).unwrap(),
            average(&p, &f, 13).unwrap()
        );
        assert_eq!(
            segment_average(&p, &f, 4, 4),
            Err(Error::EmptySegment { start: 4, end: 4 })
        );
        let c = Observable::constant(3, -1.5).unwrap();
        assert_eq!(segment_average(&p, &c, 3, 11).unwrap(), -1.5);
    }

    #[test]
    fn period_multiples_match_integral() {
        let p = pt(2, &[0, 1, 1, 0, 1, 1, 1]);
        let f = Observable::cellwise_tight(2, 3, vec![0.5, -1.0, 2.0, 0.0, 0.25, 1.0, -0.75, 3.0])
            .unwrap();
        let exact = integral(&f, &empirical_measure(&p, 3).unwrap()).unwrap();
        for j in 1..6 {
            let a = average(&p, &f, j * p.period()).unwrap();
            assert!((a - exact).abs() < 1e-12, "j={j}: {a} vs {exact}");
        }
    }

    #[test]
    fn callback_and_cellwise_scans_agree() {
        let p = pt(2, &[0, 1, 1, 0, 0, 1]);
        let table: Vec<f64> = (0..4)
            .map(|r| {
                let x = [
                    (2 * (r / 2) + 1) as f64 / 4.0,
                    (2 * (r % 2) + 1) as f64 / 4.0,
                ];
                x[0] - x[1] * x[1]
            })
            .collect();
        let cell = Observable::cellwise_tight(2, 2, table).unwrap();
        let cb = Observable::callback(2, 2, 1.0, |x| x[0] - x[1] * x[1], None).unwrap();
        let a: Vec<f64> = ObservableScan::new(&p, &cell, 3)
            .unwrap()
            .take(20)
            .collect();
        let b: Vec<f64> = ObservableScan::new(&p, &cb, 3).unwrap().take(20).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_contains_marks_and_horizon() {
        let grid = log_grid(100, &[37, 0, 500]);
        assert_eq!(&grid[..4], &[1, 2, 3, 4]);
        assert!(grid.contains(&37));
        assert_eq!(*grid.last().unwrap(), 100);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn typicality_statuses() {
        let uniform_target = 0.5;
        let f = Observable::symbol_indicator(2, 0).unwrap();

        let beta = pt(2, &[0, 0, 1, 0]);
        let own = to_f64(&empirical_measure(&beta, 1).unwrap().weights()[0]);
        let report = typicality_report(
            &beta,
            std::slice::from_ref(&f),
            &[own],
            &TypicalityCheck {
                epsilon: 1e-12,
                horizon: 4,
                burn_in: Some(4),
                marks: vec![],
            },
        )
        .unwrap();
        assert_eq!(report[0].status, Status::Pass);
        assert_eq!(report[0].max_err_after_burn_in, Some(0.0));

        let zero = pt(2, &[0]);
        let check = TypicalityCheck {
            epsilon: 0.01,
            horizon: 50,
            burn_in: Some(1),
            marks: vec![],
        };
        let report =
            typicality_report(&zero, std::slice::from_ref(&f), &[uniform_target], &check).unwrap();
        assert_eq!(report[0].status, Status::Fail);
        assert_eq!(report[0].max_err_after_burn_in, Some(0.5));

        let late = TypicalityCheck {
            burn_in: Some(51),
            ..check.clone()
        };
        let report =
            typicality_report(&zero, std::slice::from_ref(&f), &[uniform_target], &late).unwrap();
        assert_eq!(report[0].status, Status::Inconclusive);
        assert!(report[0].rows.iter().all(|r| r.pass.is_none()));

        assert!(matches!(
            typicality_report(&zero, &[f], &[], &check),
            Err(Error::Arity { .. })
        ));
    }

    fn point_strategy() -> impl Strategy<Value = PeriodicPoint> {
        (1usize..4).prop_flat_map(|m| {
            prop::collection::vec(0..m, 1..12).prop_map(move |p| PeriodicPoint::new(m, p).unwrap())
        })
    }

    proptest! {
        #[test]
        fn weighted_average_identity(p in point_strategy(), a in 1usize..40, b in 1usize..40, seed in 0u64..1000) {
            let (lo, hi) = (a.min(b), a.max(b) + 1);
            let m = p.m();
            let table: Vec<f64> = (0..m * m).map(|r| ((r as u64 * 7919 + seed) % 101) as f64 / 10.0 - 5.0).collect();
            let f = Observable::cellwise_tight(m, 2, table).unwrap();
            let an = average(&p, &f, hi).unwrap();
            let am = average(&p, &f, lo).unwrap();
            let amn = segment_average(&p, &f, lo, hi).unwrap();
            let lhs = an * hi as f64;
            let rhs = am * lo as f64 + amn * (hi - lo) as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn shift_footnote_identity(p in point_strategy(), n in 1usize..60) {
            let m = p.m();
            let table: Vec<f64> = (0..m).map(|j| j as f64 * 0.75 - 0.3).collect();
            let f = Observable::cellwise_tight(m, 1, table).unwrap();
            let shifted = Shifted { inner: &p, offset: 1 };
            let b = average(&shifted, &f, n).unwrap();
            let first = f.eval(&[p.period_word()[0]]);
            let a = average(&p, &f, n + 1).unwrap();
            prop_assert!(((n as f64 * b + first) / (n + 1) as f64 - a).abs() < 1e-12);
        }

        #[test]
        fn running_matches_direct(p in point_strategy(), n in 1usize..80) {
            let f = Observable::symbol_indicator(p.m(), 0).unwrap();
            let run = running_averages(&p, &f, n).unwrap();
            prop_assert!((run[n - 1] - average(&p, &f, n).unwrap()).abs() < 1e-15);
        }
    }
}
