//! Block schedules, spliced points and the bound series that certify their
//! Birkhoff averages.

use serde::Serialize;

use crate::birkhoff::{average, CompensatedSum, ObservableScan};
use crate::error::{Error, Result};
use crate::measure::Observable;
use crate::symbolic::{PeriodicPoint, SymbolSequence};

/// Moduli `g_i` (multiples of the periods `c_i`) and oscillations `Q_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moduli {
    pub g: Vec<u64>,
    pub q: Vec<f64>,
}

/// `g_i = c_i·⌈max(d, i+1)/c_i⌉` for levels `i = 0, 1, ...`.
///
/// Cellwise observables have `Q_i = 0` since `g_i ≥ d`; callback observables
/// must declare their oscillation for every level.
pub fn modulus_sequence(f: &Observable, periods: &[u64]) -> Result<Moduli> {
    let d = f.depth() as u64;
    let g = periods
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c == 0 {
                return Err(Error::InvalidSchedule("periods must be positive".into()));
            }
            let need = d.max(i as u64 + 1);
            need.div_ceil(c)
                .checked_mul(c)
                .ok_or(Error::ScheduleOverflow { level: i })
        })
        .collect::<Result<Vec<u64>>>()?;
    let q = if f.is_cellwise() {
        vec![0.0; periods.len()]
    } else {
        let declared = f.oscillation().ok_or(Error::MissingModulus)?;
        if declared.len() < periods.len() {
            return Err(Error::Arity {
                expected: periods.len(),
                found: declared.len(),
            });
        }
        declared[..periods.len()].to_vec()
    };
    Ok(Moduli { g, q })
}

/// Block ends `T_0 = 0 < T_1 < ... < T_L` for levels with periods `c_i` and
/// moduli `g_i`; level `i` occupies `[T_i, T_{i+1})` in `C_i` blocks of `g_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpliceSchedule {
    c: Vec<u64>,
    g: Vec<u64>,
    t: Vec<u64>,
    blocks: Vec<u64>,
}

/// Serialized splice plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct SplicePlan {
    pub levels: usize,
    pub c: Vec<u64>,
    pub g: Vec<u64>,
    #[serde(rename = "T")]
    pub t: Vec<u64>,
    #[serde(rename = "C")]
    pub blocks: Vec<u64>,
}

fn pow2_mul(i: usize, x: u64, level: usize) -> Result<u64> {
    u32::try_from(i)
        .ok()
        .and_then(|i| 1u64.checked_shl(i))
        .filter(|_| i < 64)
        .and_then(|p| p.checked_mul(x))
        .ok_or(Error::ScheduleOverflow { level })
}

/// The greedy schedule: each `T_{i+1}` is the least admissible value.
///
/// `T_{i+1} = T_i + g_i·k` with `k` the least integer such that
/// `k > C_{i-1}`, `T_{i+1} ≥ 2^i·T_i`, and `T_{i+1} ≥ 2^{i+1}·c_{i+1}` when
/// level `i+1` exists.
pub fn build_schedule(c: &[u64], g: &[u64]) -> Result<SpliceSchedule> {
    if c.len() != g.len() {
        return Err(Error::Arity {
            expected: c.len(),
            found: g.len(),
        });
    }
    if c.is_empty() {
        return Err(Error::InvalidSchedule(
            "at least one level is required".into(),
        ));
    }
    check_divisibility(c, g)?;
    let levels = c.len();
    let mut t = vec![0u64];
    let mut blocks: Vec<u64> = Vec::with_capacity(levels);
    for i in 0..levels {
        let ti = t[i];
        let mut lower = pow2_mul(i, ti, i)?;
        if i + 1 < levels {
            lower = lower.max(pow2_mul(i + 1, c[i + 1], i)?);
        }
        let min_blocks = blocks.last().map_or(1, |&prev| prev + 1);
        let k = min_blocks.max(lower.saturating_sub(ti).div_ceil(g[i]));
        let next = g[i]
            .checked_mul(k)
            .and_then(|len| ti.checked_add(len))
            .ok_or(Error::ScheduleOverflow { level: i })?;
        blocks.push(k);
        t.push(next);
    }
    let schedule = SpliceSchedule {
        c: c.to_vec(),
        g: g.to_vec(),
        t,
        blocks,
    };
    schedule.verify()?;
    Ok(schedule)
}

fn check_divisibility(c: &[u64], g: &[u64]) -> Result<()> {
    for (i, (&ci, &gi)) in c.iter().zip(g).enumerate() {
        if ci == 0 || gi == 0 || gi % ci != 0 {
            return Err(Error::InvalidSchedule(format!(
                "level {i}: period {ci} does not divide modulus {gi}"
            )));
        }
    }
    Ok(())
}

impl SpliceSchedule {
    /// Accepts any schedule; call [`SpliceSchedule::verify`] to check it.
    pub fn from_parts(c: Vec<u64>, g: Vec<u64>, t: Vec<u64>) -> Result<Self> {
        if c.len() != g.len() || t.len() != c.len() + 1 {
            return Err(Error::Arity {
                expected: c.len() + 1,
                found: t.len(),
            });
        }
        let blocks = t
            .windows(2)
            .zip(&g)
            .map(|(w, &gi)| w[1].saturating_sub(w[0]).checked_div(gi).unwrap_or(0))
            .collect();
        Ok(SpliceSchedule { c, g, t, blocks })
    }

    pub fn from_plan(plan: &SplicePlan) -> Result<Self> {
        let s = SpliceSchedule::from_parts(plan.c.clone(), plan.g.clone(), plan.t.clone())?;
        if s.blocks != plan.blocks || plan.levels != plan.c.len() {
            return Err(Error::InvalidSchedule(
                "plan block counts are inconsistent".into(),
            ));
        }
        Ok(s)
    }

    /// Checks `T_0 = 0`, `T_{i+1} ≥ 2^i·T_i`, `g_i | T_{i+1} − T_i`,
    /// strictly increasing `C_i`, and `T_i ≥ 2^i·c_i` for `i ≥ 1`.
    pub fn verify(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        check_divisibility(&self.c, &self.g)?;
        if self.t[0] != 0 {
            return bad("T_0 must be 0".into());
        }
        for i in 0..self.levels() {
            let (ti, next) = (self.t[i], self.t[i + 1]);
            if next <= ti {
                return bad(format!("T_{} is not above T_{i}", i + 1));
            }
            if next < pow2_mul(i, ti, i)? {
                return bad(format!("T_{} < 2^{i} T_{i}", i + 1));
            }
            if (next - ti) % self.g[i] != 0 {
                return bad(format!("g_{i} does not divide T_{} - T_{i}", i + 1));
            }
            if i > 0 && self.blocks[i] <= self.blocks[i - 1] {
                return bad(format!("C_{i} does not exceed C_{}", i - 1));
            }
            if i > 0 && ti < pow2_mul(i, self.c[i], i)? {
                return bad(format!("T_{i} < 2^{i} c_{i}"));
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.c.len()
    }

    pub fn periods(&self) -> &[u64] {
        &self.c
    }

    pub fn moduli(&self) -> &[u64] {
        &self.g
    }

    /// `T_0, ..., T_L`.
    pub fn ends(&self) -> &[u64] {
        &self.t
    }

    /// `C_0, ..., C_{L-1}`.
    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn plan(&self) -> SplicePlan {
        SplicePlan {
            levels: self.levels(),
            c: self.c.clone(),
            g: self.g.clone(),
            t: self.t.clone(),
            blocks: self.blocks.clone(),
        }
    }

    /// Level whose block contains `position`; positions past `T_L` belong to
    /// the last level.
    pub fn level_of(&self, position: u64) -> usize {
        let after = self.t.partition_point(|&t| t <= position);
        (after - 1).min(self.levels() - 1)
    }
}

/// `α(p) = α_n(p − T_n)` for `T_n ≤ p < T_{n+1}`; the last level continues
/// past `T_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplicedPoint {
    points: Vec<PeriodicPoint>,
    schedule: SpliceSchedule,
}

pub fn splice(points: Vec<PeriodicPoint>, schedule: SpliceSchedule) -> Result<SplicedPoint> {
    if points.len() != schedule.levels() {
        return Err(Error::Arity {
            expected: schedule.levels(),
            found: points.len(),
        });
    }
    let m = points[0].m();
    for (i, p) in points.iter().enumerate() {
        if p.m() != m {
            return Err(Error::ResolutionMismatch {
                expected: m,
                found: p.m(),
            });
        }
        if p.period() as u64 != schedule.periods()[i] {
            return Err(Error::InvalidSchedule(format!(
                "level {i} has period {} but the schedule expects {}",
                p.period(),
                schedule.periods()[i]
            )));
        }
    }
    Ok(SplicedPoint { points, schedule })
}

impl SplicedPoint {
    pub fn points(&self) -> &[PeriodicPoint] {
        &self.points
    }

    pub fn schedule(&self) -> &SpliceSchedule {
        &self.schedule
    }
}

impl SymbolSequence for SplicedPoint {
    fn resolution(&self) -> usize {
        self.points[0].m()
    }

    fn symbol(&self, position: usize) -> usize {
        let level = self.schedule.level_of(position as u64);
        let offset = position as u64 - self.schedule.t[level];
        self.points[level].symbol(offset as usize)
    }
}

/// One entry of the bound series, for level `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub q_prev: f64,
    pub c_prev: u64,
    /// `M/2^{n−2} + 2M/2^{n−2} + Q_{n−1} + 2M/C_{n−1}`.
    pub b: f64,
    /// `M/2^{n−2} + Q_{n−1} + 4M/C_{n−1}`, the value the step-by-step
    /// estimates produce when combined directly.
    pub b_derived: f64,
    /// Bounds are only asserted from level 3 on.
    pub checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSeries {
    pub m_bound: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundSeries {
    /// `b_n` for `1 ≤ n ≤ L`.
    pub fn b(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.rows.get(i)).map(|r| r.b)
    }

    pub fn levels(&self) -> usize {
        self.rows.len()
    }
}

/// `b_1, ..., b_L` from `M`, `Q_0..Q_{L−1}` and `C_0..C_{L−1}`.
pub fn predicted_bounds(m_bound: f64, q: &[f64], blocks: &[u64]) -> Result<BoundSeries> {
    if !m_bound.is_finite() || m_bound < 0.0 {
        return Err(Error::InvalidBound(format!("M = {m_bound}")));
    }
    if q.len() != blocks.len() {
        return Err(Error::Arity {
            expected: blocks.len(),
            found: q.len(),
        });
    }
    let rows = q
        .iter()
        .zip(blocks)
        .enumerate()
        .map(|(i, (&q_prev, &c_prev))| {
            let n = i + 1;
            let scale = 2f64.powi(n as i32 - 2);
            let m = m_bound;
            BoundRow {
                n,
                q_prev,
                c_prev,
                b: m / scale + 2.0 * m / scale + q_prev + 2.0 * m / c_prev as f64,
                b_derived: m / scale + q_prev + 4.0 * m / c_prev as f64,
                checked: n >= 3,
            }
        })
        .collect();
    Ok(BoundSeries { m_bound, rows })
}

/// Level indices from the three cases and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub n4: usize,
}

/// Inputs of [`horizon`]: `b_1..b_L` via the bound series, `Q_0..Q_{L−1}`,
/// `C_0..C_{L−1}`, the level averages `t_1..t_L` and their limit `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonInputs<'a> {
    pub bounds: &'a BoundSeries,
    pub q: &'a [f64],
    pub t_levels: &'a [f64],
    pub t: f64,
}

impl HorizonInputs<'_> {
    fn levels(&self) -> usize {
        self.bounds.levels()
    }

    fn m(&self) -> f64 {
        self.bounds.m_bound
    }

    fn t_close(&self, n: usize, eps: f64) -> bool {
        (self.t_levels[n - 1] - self.t).abs() < eps / 2.0
            && (self.t_levels[n] - self.t).abs() < eps / 2.0
    }

    fn b(&self, n: usize) -> f64 {
        self.bounds.rows[n - 1].b
    }

    fn c(&self, n: usize) -> u64 {
        // b_{n+1} stores C_n.
        self.bounds.rows[n].c_prev
    }

    /// Least `n` in `[1, L−1]` from which `ok` holds through `L−1`.
    fn first_stable(&self, ok: impl Fn(usize) -> bool) -> Option<usize> {
        let top = self.levels().checked_sub(1)?;
        let mut first = None;
        for n in (1..=top).rev() {
            if ok(n) {
                first = Some(n);
            } else {
                break;
            }
        }
        first
    }

    fn n1(&self, eps: f64) -> Option<usize> {
        self.first_stable(|n| self.b(n).max(self.q[n]) < eps / 2.0 && self.t_close(n, eps))
    }

    fn n2(&self, eps: f64) -> Option<usize> {
        let base = self.n1(eps / 2.0)?;
        let m = self.m();
        let log_term = if m > 0.0 {
            let v = ((2.0 * m / eps).log2() + 2.0).ceil();
            if v > 0.0 {
                v as usize
            } else {
                0
            }
        } else {
            0
        };
        let n = base.max(log_term);
        (n < self.levels()).then_some(n)
    }

    fn n3(&self, eps: f64) -> Option<usize> {
        let m = self.m();
        self.first_stable(|n| {
            let next = 2.0 * m / self.c(n) as f64 + self.b(n + 1);
            self.b(n).max(next) < eps / 2.0 && self.t_close(n, eps)
        })
    }

    fn all(&self, eps: f64) -> Option<Horizon> {
        let (n1, n2, n3) = (self.n1(eps)?, self.n2(eps)?, self.n3(eps)?);
        Some(Horizon {
            n1,
            n2,
            n3,
            n4: n1.max(n2).max(n3),
        })
    }
}

/// `N_4(ε) = max(N_1(ε), N_2(ε), N_3(ε))`, with
///
/// * `N_1(ε)`: from this level on, `max(b_n, Q_n) < ε/2` and `t_n`, `t_{n+1}`
///   lie within `ε/2` of `t`;
/// * `N_2(ε) = max(N_1(ε/2), ⌈log₂(2M/ε) + 2⌉)`;
/// * `N_3(ε)`: from this level on, `max(b_n, 2M/C_n + b_{n+1}) < ε/2` with
///   the same closeness of `t_n`.
///
/// Levels run over `[1, L−1]`. When the series is too short the error
/// carries the smallest `ε` that the series does certify.
pub fn horizon(epsilon: f64, inputs: &HorizonInputs<'_>) -> Result<Horizon> {
    let levels = inputs.levels();
    if inputs.q.len() != levels || inputs.t_levels.len() != levels {
        return Err(Error::Arity {
            expected: levels,
            found: inputs.q.len().min(inputs.t_levels.len()),
        });
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    inputs
        .all(epsilon)
        .ok_or_else(|| Error::InsufficientLevels {
            best_epsilon: best_epsilon(inputs),
        })
}

fn best_epsilon(inputs: &HorizonInputs<'_>) -> f64 {
    let mut hi = 1.0;
    while inputs.all(hi).is_none() {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inputs.all(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Period averages `t_n` of `f` along `α_{n−1}`, for `n = 1..L`.
pub fn level_targets(points: &[PeriodicPoint], f: &Observable) -> Result<Vec<f64>> {
    points.iter().map(|p| average(p, f, p.period())).collect()
}

/// One row of the per-level check `|A_{T_n} − t_n| ≤ b_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub t_end: u64,
    pub a_t: f64,
    pub t_n: f64,
    pub abs_err: f64,
    pub b_n: f64,
    pub b_derived: f64,
    /// `None` for levels below 3, whose bounds are degenerate and unchecked.
    pub pass: Option<bool>,
}

/// Evaluates `A_{T_n}` for every level in one pass and compares it with `b_n`.
pub fn verify_levels(
    alpha: &SplicedPoint,
    f: &Observable,
    bounds: &BoundSeries,
) -> Result<Vec<LevelCheck>> {
    let t_levels = level_targets(alpha.points(), f)?;
    let ends = alpha.schedule().ends();
    let horizon = *ends.last().expect("schedule has levels") as usize;
    let mut sum = CompensatedSum::default();
    let mut a_at = Vec::with_capacity(ends.len() - 1);
    let mut next = 1;
    for (i, v) in ObservableScan::new(alpha, f, 0)?.take(horizon).enumerate() {
        sum.add(v);
        while next < ends.len() && (i + 1) as u64 == ends[next] {
            a_at.push(sum.value() / (i + 1) as f64);
            next += 1;
        }
    }
    Ok(bounds
        .rows
        .iter()
        .map(|row| {
            let n = row.n;
            let abs_err = (a_at[n - 1] - t_levels[n - 1]).abs();
            LevelCheck {
                level: n,
                t_end: ends[n],
                a_t: a_at[n - 1],
                t_n: t_levels[n - 1],
                abs_err,
                b_n: row.b,
                b_derived: row.b_derived,
                pass: row.checked.then_some(abs_err <= row.b),
            }
        })
        .collect())
}
