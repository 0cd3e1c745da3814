use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use shiftorbit::approx::{approximate, Precision};
use shiftorbit::birkhoff::{typicality_report, ConvergenceReport, Status, TypicalityCheck};
use shiftorbit::cyclic::{
    covering_inequality, noise_instance, noise_instance_with, stopping_times,
};
use shiftorbit::measure::{check_shift_balance, ingestion_balance_bound, integral, Observable};
use shiftorbit::rational::{from_f64, to_f64};
use shiftorbit::splice::{
    build_schedule, horizon, level_targets, modulus_sequence, predicted_bounds, splice,
    verify_levels, HorizonInputs, LevelCheck, SplicePlan, SpliceSchedule,
};
use shiftorbit::symbolic::{PeriodicPoint, SymbolSequence};
use shiftorbit::Error;

use crate::config::{list_arg, RunConfig};
use crate::output::{float, opt_bool, opt_float, pair, sig17, write_csv, write_json};
use crate::source::{observables, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

fn print(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

pub fn cmd_approximate(cfg: &RunConfig) -> Result<Outcome> {
    let source = Source::from_config(cfg)?;
    let n = cfg.n.context("--n is required")?;
    let kappa = source.measure(n)?;
    let run = approximate(&kappa, &cfg.precision()?)?;
    let mode = cfg.mode();
    let beta = run.point(mode);
    let err = run.error(mode);
    let report = json!({
        "N": run.rationalized.denominator(),
        "r": run.sequence.len(),
        "period": beta.period(),
        "mode": mode,
        "max_error": pair(&err.max_error),
        "bound": pair(&err.bound),
        "deviation": pair(run.rationalized.deviation()),
        "paper_within_bound": run.paper_error.within_bound(),
        "beta": beta,
    });
    let out = cfg.out_dir();
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("beta.json"), &serde_json::to_value(beta)?)?;
    print(&report)?;
    Ok(if run.paper_error.within_bound() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointFile {
    Spliced {
        plan: SplicePlan,
        points: Vec<PeriodicPoint>,
    },
    Periodic(PeriodicPoint),
}

/// The deepest observable fixes the moduli of a splice plan.
fn deepest(family: &[Observable]) -> &Observable {
    family
        .iter()
        .max_by_key(|f| f.depth())
        .expect("at least one observable")
}

pub fn cmd_splice(cfg: &RunConfig) -> Result<Outcome> {
    let source = Source::from_config(cfg)?;
    let levels: Vec<u64> = list_arg(
        "--levels",
        cfg.levels.as_deref().context("--levels is required")?,
    )?;
    let depths: Vec<usize> = match &cfg.depths {
        Some(d) => list_arg("--depths", d)?,
        None => vec![cfg.n.context("--n or --depths is required")?; levels.len()],
    };
    if depths.len() != levels.len() {
        return Err(Error::Arity {
            expected: levels.len(),
            found: depths.len(),
        }
        .into());
    }
    let mode = cfg.mode();
    let points = levels
        .par_iter()
        .zip(&depths)
        .map(|(&big_n, &n)| {
            let kappa = source.measure(n)?;
            let run = approximate(&kappa, &Precision::Denominator(big_n))?;
            Ok(run.point(mode).clone())
        })
        .collect::<Result<Vec<PeriodicPoint>>>()?;

    let family = observables(cfg, source.m())?;
    let f = deepest(&family);
    let c: Vec<u64> = points.iter().map(|p| p.period() as u64).collect();
    let moduli = modulus_sequence(f, &c)?;
    let schedule = build_schedule(&c, &moduli.g)?;
    let bounds = predicted_bounds(f.bound(), &moduli.q, schedule.blocks())?;
    let plan = schedule.plan();

    let out = cfg.out_dir();
    let plan_json = serde_json::to_value(&plan)?;
    write_json(&out.join("plan.json"), &plan_json)?;
    write_json(
        &out.join("point.json"),
        &serde_json::to_value(PointFile::Spliced { plan, points })?,
    )?;
    let rows: Vec<Vec<String>> = bounds
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                sig17(r.q_prev),
                r.c_prev.to_string(),
                sig17(r.b),
                sig17(r.b_derived),
                r.checked.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("bounds.csv"),
        &["n", "q_prev", "c_prev", "b_n", "b_derived", "checked"],
        &rows,
    )?;
    print(&plan_json)?;
    Ok(Outcome::Pass)
}

struct LevelResult {
    label: String,
    checks: Vec<LevelCheck>,
    n4: Option<usize>,
    best_epsilon: Option<f64>,
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let path = cfg.point.as_ref().context("--point is required")?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let point: PointFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let source = Source::from_config(cfg)?;
    let m = match &point {
        PointFile::Spliced { points, .. } => points.first().context("no levels")?.m(),
        PointFile::Periodic(p) => p.m(),
    };
    if source.m() != m {
        bail!(
            "point has m = {m} but the target measure has m = {}",
            source.m()
        );
    }
    let family = observables(cfg, m)?;
    let n = cfg.n.unwrap_or(deepest(&family).depth());
    let kappa = source.measure(n)?;
    let targets = family
        .iter()
        .map(|f| integral(f, &kappa))
        .collect::<shiftorbit::Result<Vec<f64>>>()?;
    let eps = to_f64(&cfg.epsilon()?);

    let (reports, levels, ends) = match point {
        PointFile::Periodic(p) => {
            let horizon = cfg.horizon.unwrap_or(p.period());
            let burn_in = Some(cfg.burn_in.unwrap_or(horizon));
            let reports = run_typicality(&p, &family, &targets, eps, horizon, burn_in, vec![])?;
            (reports, Vec::new(), Vec::new())
        }
        PointFile::Spliced { plan, points } => {
            let schedule = SpliceSchedule::from_plan(&plan)?;
            let ends = schedule.ends().to_vec();
            let alpha = splice(points, schedule)?;
            let levels = family
                .iter()
                .zip(&targets)
                .map(|(f, &t)| check_levels(&alpha, f, t, eps))
                .collect::<Result<Vec<_>>>()?;
            let horizon = cfg.horizon.unwrap_or(*ends.last().unwrap() as usize);
            let certified = levels
                .iter()
                .map(|l| l.n4.map(|n4| ends[n4] as usize))
                .collect::<Option<Vec<usize>>>()
                .map(|b| b.into_iter().max().unwrap_or(0));
            let burn_in = cfg.burn_in.or(certified);
            let marks = ends.iter().map(|&t| t as usize).collect();
            let reports = run_typicality(&alpha, &family, &targets, eps, horizon, burn_in, marks)?;
            (reports, levels, ends)
        }
    };

    let level_fail = levels
        .iter()
        .flat_map(|l| &l.checks)
        .any(|c| c.pass == Some(false));
    let outcome = if level_fail || reports.iter().any(|r| r.status == Status::Fail) {
        Outcome::Fail
    } else if reports.iter().any(|r| r.status == Status::Inconclusive) {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };

    let out = cfg.out_dir();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.rows.iter().map(move |row| {
                vec![
                    r.observable.clone(),
                    row.n.to_string(),
                    sig17(row.average),
                    sig17(r.target),
                    sig17(row.abs_err),
                    row.bound.map(sig17).unwrap_or_default(),
                    opt_bool(row.pass),
                ]
            })
        })
        .collect();
    write_csv(
        &out.join("report.csv"),
        &[
            "observable",
            "n",
            "A_n",
            "target",
            "abs_err",
            "bound",
            "pass",
        ],
        &rows,
    )?;
    if !levels.is_empty() {
        let rows: Vec<Vec<String>> = levels
            .iter()
            .flat_map(|l| {
                l.checks.iter().map(move |c| {
                    vec![
                        l.label.clone(),
                        c.level.to_string(),
                        c.t_end.to_string(),
                        sig17(c.a_t),
                        sig17(c.t_n),
                        sig17(c.abs_err),
                        sig17(c.b_n),
                        opt_bool(c.pass),
                    ]
                })
            })
            .collect();
        write_csv(
            &out.join("levels.csv"),
            &[
                "observable",
                "level",
                "T_n",
                "A_Tn",
                "t_n",
                "abs_err",
                "b_n",
                "pass",
            ],
            &rows,
        )?;
    }
    let status = match outcome {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Inconclusive => "inconclusive",
    };
    let summary = json!({
        "status": status,
        "epsilon": float(eps),
        "T": ends,
        "observables": reports.iter().enumerate().map(|(i, r)| {
            let level = levels.get(i);
            json!({
                "label": r.observable,
                "target": float(r.target),
                "horizon": r.horizon,
                "burn_in": r.burn_in,
                "certified_level": level.and_then(|l| l.n4),
                "best_epsilon": opt_float(level.and_then(|l| l.best_epsilon)),
                "max_err_after_burn_in": opt_float(r.max_err_after_burn_in),
                "status": r.status,
            })
        }).collect::<Vec<_>>(),
    });
    write_json(&out.join("summary.json"), &summary)?;
    print(&summary)?;
    Ok(outcome)
}

fn run_typicality<S: SymbolSequence + Sync>(
    point: &S,
    family: &[Observable],
    targets: &[f64],
    epsilon: f64,
    horizon: usize,
    burn_in: Option<usize>,
    marks: Vec<usize>,
) -> Result<Vec<ConvergenceReport>> {
    let check = TypicalityCheck {
        epsilon,
        horizon,
        burn_in,
        marks,
    };
    Ok(typicality_report(point, family, targets, &check)?)
}

fn check_levels(
    alpha: &shiftorbit::splice::SplicedPoint,
    f: &Observable,
    target: f64,
    eps: f64,
) -> Result<LevelResult> {
    let schedule = alpha.schedule();
    if let Some(i) = schedule
        .moduli()
        .iter()
        .position(|&g| (g as usize) < f.depth())
    {
        bail!(
            "plan modulus g_{i} = {} is below the depth {} of {}",
            schedule.moduli()[i],
            f.depth(),
            f.label()
        );
    }
    let moduli = modulus_sequence(f, schedule.periods())?;
    let bounds = predicted_bounds(f.bound(), &moduli.q, schedule.blocks())?;
    let checks = verify_levels(alpha, f, &bounds)?;
    let t_levels = level_targets(alpha.points(), f)?;
    let inputs = HorizonInputs {
        bounds: &bounds,
        q: &moduli.q,
        t_levels: &t_levels,
        t: target,
    };
    let (n4, best_epsilon) = match horizon(eps, &inputs) {
        Ok(h) => (Some(h.n4), None),
        Err(Error::InsufficientLevels { best_epsilon }) => (None, Some(best_epsilon)),
        Err(e) => return Err(e.into()),
    };
    Ok(LevelResult {
        label: f.label().to_string(),
        checks,
        n4,
        best_epsilon,
    })
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.trajectory.is_none() {
        bail!("ingest needs --trajectory");
    }
    let source = Source::from_config(cfg)?;
    let n = cfg.n.context("--n is required")?;
    let kappa = source.measure(n)?;
    let len = match &source {
        Source::Trajectory { samples, .. } => samples.len(),
        _ => unreachable!("checked above"),
    };
    let balance = check_shift_balance(&kappa);
    let bound = if cfg.repair {
        shiftorbit::Rational::from_integer(0.into())
    } else {
        ingestion_balance_bound(len, n)
    };
    let report = json!({
        "samples": len,
        "windows": if cfg.repair { len } else { len + 1 - n },
        "repaired": cfg.repair,
        "balanced": balance.balanced,
        "max_imbalance": pair(&balance.max_imbalance),
        "bound": pair(&bound),
    });
    let out = cfg.out_dir();
    write_json(&out.join("measure.json"), &serde_json::to_value(&kappa)?)?;
    write_json(&out.join("balance.json"), &report)?;
    print(&report)?;
    Ok(Outcome::Pass)
}

pub fn cmd_cyclic_demo(cfg: &RunConfig) -> Result<Outcome> {
    let k = cfg.k.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(0);
    let inst = match &cfg.epsilon {
        None => noise_instance(k, seed)?,
        Some(_) => {
            let eps = to_f64(&cfg.epsilon()?);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let period = rng.gen_range(2..=16usize).min(k);
            noise_instance_with(k, eps, period, &mut rng)?
        }
    };
    let dec = stopping_times(&inst.f, &inst.g, inst.epsilon)?;
    dec.check()?;
    let cover = covering_inequality(&dec, &inst.f, &inst.g)?;
    let epsilon = from_f64(inst.epsilon).context("epsilon is not finite")?;
    let report = json!({
        "k": k,
        "seed": seed,
        "epsilon": pair(&epsilon),
        "period": inst.period,
        "r": dec.r,
        "T_J": dec.t_j(),
        "J": dec.j(),
        "leftover": pair(&dec.leftover()),
        "lhs": float(cover.lhs),
        "middle": float(cover.middle),
        "rhs": float(cover.rhs),
        "pass": cover.pass,
    });
    let out = cfg.out_dir();
    write_json(&out.join("cyclic.json"), &report)?;
    if cfg.stopping_csv {
        let rows: Vec<Vec<String>> = dec
            .stopping
            .iter()
            .enumerate()
            .map(|(x, t)| vec![x.to_string(), t.to_string()])
            .collect();
        write_csv(&out.join("stopping.csv"), &["x", "T"], &rows)?;
    }
    print(&report)?;
    Ok(if cover.pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
