//! Cross-product parameter sweeps.
//!
//! Grid JSON:
//! `{"axes": {"epsilon": [..], "lambda": [..]}, "fixed": {"zeta": 0.25}, "seed": 7, "replicates": 1}`.
//! Axes iterate in the fixed order epsilon, lambda, m, beta, energy, n, k, d
//! (first axis slowest, replicates fastest), so row order never depends on
//! the order of keys in the file or on the number of workers.

use std::collections::BTreeMap;

use clap::{Args, ValueEnum};
use entroq::channels::{depolarizing, LocalStochasticNoise};
use entroq::functionals::{self, eq2_closed_form, zeta, FreeEnergyParams};
use entroq::spatial::{self, build_family, eq3_bound, min_block_size, thm2_check, ClusterLayout};
use serde::Deserialize;

use crate::commands::{crash_row, read_json_arg, render, thm1_state, thm2_state, usage, CliResult, Outcome};
use crate::output::{Cell, Table};
use crate::{Format, GlobalOpts};

pub const AXES: [&str; 8] = ["epsilon", "lambda", "m", "beta", "energy", "n", "k", "d"];
const INTEGER_AXES: [&str; 4] = ["m", "n", "k", "d"];
pub const MAX_WORK: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    /// Linearized and closed-form crash times (epsilon, lambda, beta, energy; fixed zeta).
    CrashTime,
    /// Qubit-count bound (beta, energy, k, d; fixed kappa).
    SpatialBound,
    /// Overlap bound and minimal block size (n, k, d, lambda).
    Eq3,
    /// Exact entropy gain against the closed-form bound (n qubits, epsilon, lambda, m).
    Temporal,
    /// Mixture-entropy bound on block families (n, k, d, lambda).
    Thm2,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Grid JSON, inline or @file.
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum)]
    pub analysis: Analysis,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub axes: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub replicates: u64,
}

fn one() -> u64 {
    1
}

/// One grid cell: axis values merged over the fixed values.
#[derive(Debug, Clone)]
struct GridPoint {
    values: BTreeMap<&'static str, f64>,
    fixed: BTreeMap<String, f64>,
}

impl GridPoint {
    fn get(&self, key: &str) -> CliResult<f64> {
        self.values
            .get(key)
            .or_else(|| self.fixed.get(key))
            .copied()
            .ok_or_else(|| usage(format!("parameter {key:?} is neither an axis nor fixed")))
    }

    fn int(&self, key: &str) -> CliResult<usize> {
        let v = self.get(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(usage(format!("{key} = {v} must be a nonnegative integer")));
        }
        Ok(v as usize)
    }
}

impl SweepGrid {
    fn validate(&self) -> CliResult<Vec<&'static str>> {
        for name in self.axes.keys() {
            if !AXES.contains(&name.as_str()) {
                return Err(usage(format!("unknown axis {name:?}; expected one of {}", AXES.join(", "))));
            }
        }
        let axes: Vec<&'static str> = AXES.iter().copied().filter(|a| self.axes.contains_key(*a)).collect();
        for a in &axes {
            let values = &self.axes[*a];
            if values.is_empty() {
                return Err(usage(format!("axis {a} is empty")));
            }
            if INTEGER_AXES.contains(a) && values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                return Err(usage(format!("axis {a} takes nonnegative integers")));
            }
        }
        if self.replicates == 0 {
            return Err(usage("replicates must be positive"));
        }
        let cells = axes
            .iter()
            .try_fold(1u64, |acc, a| acc.checked_mul(self.axes[*a].len() as u64))
            .and_then(|c| c.checked_mul(self.replicates));
        match cells {
            Some(work) if work <= MAX_WORK => Ok(axes),
            _ => Err(usage(format!("grid exceeds {MAX_WORK} cells x replicates"))),
        }
    }

    fn cells(&self, axes: &[&'static str]) -> Vec<GridPoint> {
        let mut cells = vec![BTreeMap::new()];
        for a in axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    self.axes[*a].iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(*a, *v);
                        c
                    })
                })
                .collect();
        }
        cells.into_iter().map(|values| GridPoint { values, fixed: self.fixed.clone() }).collect()
    }
}

struct Job {
    cell: GridPoint,
    replicate: u64,
}

fn columns(analysis: Analysis) -> &'static [&'static str] {
    match analysis {
        Analysis::CrashTime => &["beta", "energy", "epsilon", "c", "zeta", "m_linearized", "m_exact"],
        Analysis::SpatialBound => &["beta", "energy", "kappa", "k", "d", "n_crash", "N_crash"],
        Analysis::Eq3 => &["n", "k", "d", "lambda", "eq3_bound", "min_block_size"],
        Analysis::Temporal => &["n", "epsilon", "lambda", "m", "seed", "gain", "eq2_bound", "slack"],
        Analysis::Thm2 => &["n", "k", "d", "lambda", "seed", "lhs", "rhs", "slack", "kappa"],
    }
}

/// Returns the row and, for verification analyses, its slack.
fn evaluate(analysis: Analysis, job: &Job, base_seed: u64) -> CliResult<(Vec<Cell>, Option<f64>)> {
    let cell = &job.cell;
    let seed = base_seed.wrapping_add(job.replicate);
    match analysis {
        Analysis::CrashTime => {
            let params = FreeEnergyParams::new(cell.get("beta")?, cell.get("energy")?).map_err(usage)?;
            let (eps, lambda, z) = (cell.get("epsilon")?, cell.get("lambda")?, cell.get("zeta")?);
            let c = depolarizing(lambda, 2).map(|_| 1.0 - lambda).map_err(usage)?;
            let r = functionals::crash_time(&params, z, eps, c).map_err(usage)?;
            Ok((crash_row(&params, eps, c, z, r.linearized, r.exact_bound), None))
        }
        Analysis::SpatialBound => {
            let (beta, energy, kappa) = (cell.get("beta")?, cell.get("energy")?, cell.get("kappa")?);
            let (k, d) = (cell.int("k")? as u64, cell.int("d")? as u64);
            let r = spatial::max_qubit_count_for(beta * energy, kappa).map_err(usage)?;
            let qubits = r.qubits(k, d).ok_or_else(|| usage("qubit count overflows"))?;
            Ok((
                vec![beta.into(), energy.into(), kappa.into(), k.into(), d.into(), r.n_crash.into(), qubits.into()],
                None,
            ))
        }
        Analysis::Eq3 => {
            let (n, k, d, lambda) = (cell.int("n")?, cell.int("k")?, cell.int("d")?, cell.get("lambda")?);
            ClusterLayout::new(n, k, d).map_err(usage)?;
            let kmin = match min_block_size(n, d, lambda) {
                Ok(k) => Cell::from(k),
                Err(entroq::Error::Unreachable(_)) => Cell::from("Unreachable"),
                Err(e) => return Err(usage(e)),
            };
            Ok((vec![n.into(), k.into(), d.into(), lambda.into(), eq3_bound(n, k, d, lambda).into(), kmin], None))
        }
        Analysis::Temporal => {
            let (n, m) = (cell.int("n")?, cell.int("m")?);
            let (eps, lambda) = (cell.get("epsilon")?, cell.get("lambda")?);
            if n == 0 || n > crate::commands::MAX_THM1_QUBITS {
                return Err(usage(format!("n = {n} qubits outside 1..={}", crate::commands::MAX_THM1_QUBITS)));
            }
            let ch = depolarizing(lambda, 2).map_err(usage)?;
            let noise = LocalStochasticNoise::new(eps, ch, n).map_err(usage)?;
            let (seed, rho) = thm1_state(n, base_seed, job.replicate);
            let z = zeta(&rho, n).map_err(usage)?;
            let gain = functionals::entropy_gain(&rho, &noise, m).map_err(usage)?;
            let bound = eq2_closed_form(z, eps, 1.0 - lambda, m as u64);
            let slack = gain - bound;
            Ok((
                vec![
                    n.into(),
                    eps.into(),
                    lambda.into(),
                    m.into(),
                    seed.into(),
                    gain.into(),
                    bound.into(),
                    slack.into(),
                ],
                Some(slack),
            ))
        }
        Analysis::Thm2 => {
            let (n, k, d, lambda) = (cell.int("n")?, cell.int("k")?, cell.int("d")?, cell.get("lambda")?);
            let layout = ClusterLayout::new(n, k, d).map_err(usage)?;
            let (_, state) = thm2_state(layout, base_seed, job.replicate, false);
            let family = build_family(&state, lambda).map_err(usage)?;
            let r = thm2_check(&family).map_err(usage)?;
            Ok((
                vec![
                    n.into(),
                    k.into(),
                    d.into(),
                    lambda.into(),
                    seed.into(),
                    r.lhs.into(),
                    r.rhs.into(),
                    r.slack.into(),
                    r.kappa.into(),
                ],
                Some(r.slack),
            ))
        }
    }
}

fn evaluate_all(
    analysis: Analysis,
    jobs: &[Job],
    seed: u64,
    workers: usize,
) -> CliResult<Vec<(Vec<Cell>, Option<f64>)>> {
    if workers <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(|j| evaluate(analysis, j, seed)).collect();
    }
    let chunk = jobs.len().div_ceil(workers);
    let parts: Vec<CliResult<Vec<_>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|j| evaluate(analysis, j, seed)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(jobs.len());
    for part in parts {
        rows.extend(part?);
    }
    Ok(rows)
}

pub fn run(args: &SweepArgs, global: &GlobalOpts) -> CliResult<Outcome> {
    let grid: SweepGrid = serde_json::from_str(&read_json_arg(&args.grid)?).map_err(|e| usage(format!("grid: {e}")))?;
    let axes = grid.validate()?;
    let seed = grid.seed.unwrap_or(global.seed);
    let jobs: Vec<Job> = grid
        .cells(&axes)
        .into_iter()
        .flat_map(|cell| (0..grid.replicates).map(move |replicate| Job { cell: cell.clone(), replicate }))
        .collect();
    let results = evaluate_all(args.analysis, &jobs, seed, global.parallel)?;

    let mut table = Table::new(columns(args.analysis));
    table
        .param("command", "sweep")
        .param("analysis", args.analysis.to_possible_value().expect("named variant").get_name())
        .param("axes", axes.iter().map(|a| format!("{a}={:?}", grid.axes[*a])).collect::<Vec<_>>().join(" "))
        .param("fixed", grid.fixed.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
        .param("seed", seed)
        .param("replicates", grid.replicates);
    let mut min_slack: Option<f64> = None;
    for (row, slack) in results {
        if let Some(s) = slack {
            min_slack = Some(min_slack.map_or(s, |m: f64| m.min(s)));
        }
        table.push(row);
    }
    let text = render(&table, global, Format::Csv);
    Ok(match min_slack {
        Some(s) if s < -global.tolerance => {
            Outcome { text, passed: false, summary: format!("min slack {s:e} below -{:e}", global.tolerance) }
        }
        _ => Outcome::ok(text),
    })
}
