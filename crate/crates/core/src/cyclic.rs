//! A finite cycle `{0, ..., k−1}` with the rotation `x ↦ x+1 mod k`, its
//! counting measure, the orbit-coding map into sequence space, and the
//! stopping-time covering used to compare orbit sums of two functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::birkhoff::{CompensatedSum, ObservableScan};
use crate::error::{Error, Result};
use crate::measure::{integral, Observable, WordMeasure};
use crate::rational::Rational;
use crate::symbolic::{SymbolSequence, Word};

fn check_position(x: usize, k: usize) -> Result<()> {
    if x >= k {
        Err(Error::PositionOutOfRange { x, k })
    } else {
        Ok(())
    }
}

/// `φ(x) = x + 1` for `x < k − 1`, and `φ(k − 1) = 0`.
pub fn rotate(x: usize, k: usize) -> Result<usize> {
    check_position(x, k)?;
    Ok(if x + 1 == k { 0 } else { x + 1 })
}

/// `ν(A) = |A|/k`; repeated positions count once.
pub fn counting_measure(set: &[usize], k: usize) -> Result<Rational> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let mut distinct = set.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if let Some(&x) = distinct.iter().find(|&&x| x >= k) {
        return Err(Error::PositionOutOfRange { x, k });
    }
    Ok(Rational::new(distinct.len().into(), k.into()))
}

/// `φ⁻¹(A)`.
pub fn preimage(set: &[usize], k: usize) -> Result<Vec<usize>> {
    set.iter()
        .map(|&a| {
            check_position(a, k)?;
            Ok(if a == 0 { k - 1 } else { a - 1 })
        })
        .collect()
}

/// The cycle together with a tabulated state function `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSystem {
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl CyclicSystem {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = CompensatedSum::default();
        prefix.push(0.0);
        for &v in &values {
            acc.add(v);
            prefix.push(acc.value());
        }
        Ok(CyclicSystem { values, prefix })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_{i<n} g(φ^i x)` from prefix sums.
    pub fn orbit_sum(&self, x: usize, n: usize) -> Result<f64> {
        let k = self.k();
        check_position(x, k)?;
        let laps = (n / k) as f64;
        let rest = n % k;
        let total = self.prefix[k];
        let tail = if x + rest <= k {
            self.prefix[x + rest] - self.prefix[x]
        } else {
            (self.prefix[k] - self.prefix[x]) + self.prefix[x + rest - k]
        };
        Ok(laps * total + tail)
    }

    /// The same sum by walking the orbit one rotation at a time.
    pub fn orbit_sum_walk(&self, x: usize, n: usize) -> Result<f64> {
        let k = self.k();
        check_position(x, k)?;
        let mut acc = CompensatedSum::default();
        let mut y = x;
        for _ in 0..n {
            acc.add(self.values[y]);
            y = rotate(y, k)?;
        }
        Ok(acc.value())
    }

    /// `(1/k) Σ_{i<k} g(φ^i x)`.
    pub fn full_cycle_average(&self, x: usize) -> Result<f64> {
        Ok(self.orbit_sum(x, self.k())? / self.k() as f64)
    }

    /// `(1/k) Σ_x g(x)`.
    pub fn mean(&self) -> f64 {
        self.prefix[self.k()] / self.k() as f64
    }
}

/// `Γ(x)`: the first `depth` symbols of `σ^x α`.
pub fn factor_map<S: SymbolSequence>(alpha: &S, x: usize, depth: usize, k: usize) -> Result<Word> {
    check_position(x, k)?;
    if depth == 0 {
        return Err(Error::EmptyWord);
    }
    Ok(alpha.window(x, depth))
}

/// Positions `x < k` where `Γ(φx) ≠ σ(Γx)` at the given depth.
///
/// Away from `x = k − 1` the rotation is `x ↦ x + 1`, so only that
/// position can appear, and only when `α` does not repeat with period `k`.
pub fn intertwining_failures<S: SymbolSequence + Sync>(
    alpha: &S,
    k: usize,
    depth: usize,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if depth == 0 {
        return Err(Error::EmptyWord);
    }
    // Symbols up to position k + depth cover every window involved.
    let symbols: Vec<usize> = (0..k + depth).map(|p| alpha.symbol(p)).collect();
    Ok((0..k)
        .into_par_iter()
        .filter(|&x| {
            let next = if x + 1 == k { 0 } else { x + 1 };
            symbols[next..next + depth] != symbols[x + 1..x + 1 + depth]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub k: usize,
    /// `(1/k) Σ_{x<k} f(σ^x α)`.
    pub orbit_average: f64,
    /// `∫ f dκ`.
    pub target: f64,
    pub difference: f64,
    pub epsilon: f64,
    pub within: bool,
}

/// Compares the orbit average over the cycle with the target integral.
pub fn ergodic_transfer_check<S: SymbolSequence>(
    alpha: &S,
    f: &Observable,
    kappa: &WordMeasure,
    k: usize,
    epsilon: f64,
) -> Result<TransferReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let sum: CompensatedSum = ObservableScan::new(alpha, f, 0)?.take(k).collect();
    let orbit_average = sum.value() / k as f64;
    let target = integral(f, kappa)?;
    let difference = (orbit_average - target).abs();
    Ok(TransferReport {
        k,
        orbit_average,
        target,
        difference,
        epsilon,
        within: difference < epsilon,
    })
}

/// Stopping times `T(x)`, their maximum `r`, and the breakpoints
/// `T_0 = 0`, `T_{j+1} = T_j + T(T_j)` up to the first `T_J ≥ k − r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringDecomposition {
    pub k: usize,
    pub epsilon: f64,
    pub stopping: Vec<usize>,
    pub r: usize,
    pub breakpoints: Vec<usize>,
}

impl CoveringDecomposition {
    /// `J`.
    pub fn j(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `T_J`.
    pub fn t_j(&self) -> usize {
        *self.breakpoints.last().expect("T_0 is always present")
    }

    /// `ν([T_J, k))`.
    pub fn leftover(&self) -> Rational {
        Rational::new((self.k - self.t_j()).into(), self.k.into())
    }

    /// Checks the breakpoint recursion, `k − r ≤ T_J < k`, that `J` is the
    /// first such index, the block telescoping, and `ν([T_J, k)) ≤ r/k`.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("covering: {msg}")));
        let (k, r) = (self.k, self.r);
        if self.breakpoints.first() != Some(&0) {
            return bad("T_0 must be 0");
        }
        for w in self.breakpoints.windows(2) {
            if w[1] - w[0] != self.stopping[w[0]] {
                return bad("breakpoints do not follow the stopping times");
            }
        }
        let lower = k.saturating_sub(r);
        let t_j = self.t_j();
        if !(lower <= t_j && t_j < k) {
            return bad("T_J is outside [k - r, k)");
        }
        if self.breakpoints[..self.j()].iter().any(|&t| t >= lower) {
            return bad("J is not the first admissible index");
        }
        let telescoped: usize = self.breakpoints[..self.j()]
            .iter()
            .map(|&t| self.stopping[t])
            .sum();
        if telescoped != t_j {
            return bad("block lengths do not sum to T_J");
        }
        if self.leftover() > Rational::new(r.into(), k.into()) {
            return bad("leftover interval exceeds r/k");
        }
        Ok(())
    }
}

/// Least `n` in `[1, k)` with `Σ_{i<n} G(φ^i x) ≤ Σ_{i<n} F(φ^i x) + nε`.
fn stopping_time(f: &[f64], g: &[f64], epsilon: f64, x: usize) -> Option<usize> {
    let k = f.len();
    let (mut sf, mut sg) = (0.0f64, 0.0f64);
    let mut y = x;
    for n in 1..k {
        sf += f[y];
        sg += g[y];
        if sg <= sf + n as f64 * epsilon {
            return Some(n);
        }
        y = if y + 1 == k { 0 } else { y + 1 };
    }
    None
}

/// Computes `T(x)` for every position (in parallel) and chains the blocks.
pub fn stopping_times(f: &[f64], g: &[f64], epsilon: f64) -> Result<CoveringDecomposition> {
    let k = f.len();
    if g.len() != k {
        return Err(Error::Arity {
            expected: k,
            found: g.len(),
        });
    }
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let times: Vec<Option<usize>> = (0..k)
        .into_par_iter()
        .map(|x| stopping_time(f, g, epsilon, x))
        .collect();
    let stopping = times
        .iter()
        .enumerate()
        .map(|(position, t)| t.ok_or(Error::NoCover { position }))
        .collect::<Result<Vec<usize>>>()?;
    let r = *stopping.iter().max().expect("k is positive");
    let lower = k.saturating_sub(r);
    let mut breakpoints = vec![0usize];
    let mut t = 0;
    // Every step is at most r, so the chain lands in [k − r, k).
    while t < lower {
        t += stopping[t];
        breakpoints.push(t);
    }
    Ok(CoveringDecomposition {
        k,
        epsilon,
        stopping,
        r,
        breakpoints,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringCheck {
    /// `(1/k) Σ_{x<T_J} G(x)`.
    pub lhs: f64,
    /// `(1/k) Σ_{x<T_J} F(x) + ε`.
    pub rhs: f64,
    /// `(1/k)(Σ_{x<T_J} F(x) + T_J·ε)`, the middle term of the chain.
    pub middle: f64,
    /// Every block satisfies its own stopping inequality.
    pub blocks_ok: bool,
    pub pass: bool,
}

/// Sums `G` and `F` block by block over `[0, T_J)` and checks
/// `Σ G ≤ Σ F + T_J·ε < Σ F + kε`.
pub fn covering_inequality(
    dec: &CoveringDecomposition,
    f: &[f64],
    g: &[f64],
) -> Result<CoveringCheck> {
    let k = dec.k;
    if f.len() != k || g.len() != k {
        return Err(Error::Arity {
            expected: k,
            found: f.len().min(g.len()),
        });
    }
    let eps = dec.epsilon;
    let mut total_f = CompensatedSum::default();
    let mut total_g = CompensatedSum::default();
    let mut blocks_ok = true;
    for w in dec.breakpoints.windows(2) {
        let (mut sf, mut sg) = (0.0f64, 0.0f64);
        for x in w[0]..w[1] {
            sf += f[x];
            sg += g[x];
        }
        blocks_ok &= sg <= sf + (w[1] - w[0]) as f64 * eps;
        total_f.add(sf);
        total_g.add(sg);
    }
    let kf = k as f64;
    let lhs = total_g.value() / kf;
    let middle = (total_f.value() + dec.t_j() as f64 * eps) / kf;
    let rhs = total_f.value() / kf + eps;
    Ok(CoveringCheck {
        lhs,
        rhs,
        middle,
        blocks_ok,
        pass: blocks_ok && lhs <= middle && middle < rhs && dec.t_j() < k,
    })
}

/// A random `(F, G, ε)` triple whose stopping times are all below `p`.
///
/// Values are multiples of `1/1024`, so orbit sums are exact in `f64`. `G`
/// stays below `min(F, cap)` except for positive bumps at multiples of `p`,
/// each smaller than `(p − 1)ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseInstance {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub epsilon: f64,
    pub period: usize,
}

pub const NOISE_GRID: f64 = 1.0 / 1024.0;

pub fn noise_instance(k: usize, seed: u64) -> Result<NoiseInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = rng.gen_range(2..=16usize).min(k.max(2));
    let eps_units = rng.gen_range(1..=64u32);
    noise_instance_with(k, eps_units as f64 * NOISE_GRID, period, &mut rng)
}

pub fn noise_instance_with(
    k: usize,
    epsilon: f64,
    period: usize,
    rng: &mut impl Rng,
) -> Result<NoiseInstance> {
    if k < period || period < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= period <= k, got period {period} and k {k}"
        )));
    }
    let units = |v: f64| (v / NOISE_GRID).round() as i64;
    let eps_units = units(epsilon);
    if eps_units < 1 || (eps_units as f64 * NOISE_GRID) != epsilon {
        return Err(Error::InvalidArgument(
            "epsilon must be a positive multiple of 1/1024".into(),
        ));
    }
    let cap = rng.gen_range(512..=1024i64);
    let max_bump = (period as i64 - 1) * eps_units - 1;
    let mut f = Vec::with_capacity(k);
    let mut g = Vec::with_capacity(k);
    for x in 0..k {
        let fx = rng.gen_range(0..=1024i64);
        let dip = rng.gen_range(0..=64i64);
        let mut gx = fx.min(cap) - dip;
        if x % period == 0 && x + period <= k && max_bump > 0 {
            gx += rng.gen_range(1..=max_bump);
        }
        f.push(fx as f64 * NOISE_GRID);
        g.push(gx as f64 * NOISE_GRID);
    }
    Ok(NoiseInstance {
        f,
        g,
        epsilon,
        period,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: usize,
    pub r: usize,
    pub t_j: usize,
    pub j: usize,
    pub leftover: f64,
    pub r_over_k: f64,
    pub pass: bool,
}

/// Runs the covering at `k, 2k, 4k, ...` on instances drawn from one seed,
/// showing the leftover measure shrinking like `r/k`.
pub fn scaling_study(k: usize, doublings: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    (0..=doublings)
        .map(|i| {
            let size = k << i;
            let inst = noise_instance(size, seed)?;
            let dec = stopping_times(&inst.f, &inst.g, inst.epsilon)?;
            let check = covering_inequality(&dec, &inst.f, &inst.g)?;
            Ok(ScalingRow {
                k: size,
                r: dec.r,
                t_j: dec.t_j(),
                j: dec.j(),
                leftover: crate::rational::to_f64(&dec.leftover()),
                r_over_k: dec.r as f64 / size as f64,
                pass: check.pass && dec.check().is_ok(),
            })
        })
        .collect()
}

/// Whether `φ⁻¹(A) = A`.
pub fn is_invariant(set: &[usize], k: usize) -> Result<bool> {
    let mut a = set.to_vec();
    a.sort_unstable();
    a.dedup();
    let mut b = preimage(&a, k)?;
    b.sort_unstable();
    Ok(a == b)
}
