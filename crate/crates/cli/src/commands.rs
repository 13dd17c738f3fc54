use std::fmt;
use std::path::PathBuf;

use clap::Args;
use entroq::channels::{apply_product_channel, contraction_rate, depolarizing, is_bistochastic};
use entroq::formats::{matrix_to_json, ChannelJson, CircuitJson, FormatError, LayoutJson, NoiseJson};
use entroq::functionals::{self, thm1_lower_bound, zeta, CrashTime, FreeEnergyParams};
use entroq::linalg::{random_density, von_neumann_entropy, DensityMatrix};
use entroq::simulator::{self, RunLedger, RunOptions};
use entroq::spatial::{self, build_family, thm2_check, ClusterLayout, ProductState};
use serde_json::json;

use crate::output::{Cell, Table};
use crate::{Format, GlobalOpts};

pub const MAX_THM1_QUBITS: usize = 8;
pub const MAX_THM1_POWER: usize = 64;
pub const CONTRACTION_RESOLUTION: usize = 200;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or unparsable input.
    Usage(String),
    /// Well-formed input that violates a model invariant.
    Validation(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Parse(_) => CliError::Usage(e.to_string()),
            FormatError::Invalid { .. } => CliError::Validation(e.to_string()),
        }
    }
}

pub fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

pub type CliResult<T> = Result<T, CliError>;

/// Rendered output plus whether every checked inequality held.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    pub fn ok(text: String) -> Self {
        Self { text, passed: true, summary: String::new() }
    }
}

pub fn emit(outcome: &Outcome, global: &GlobalOpts) -> CliResult<()> {
    match &global.out {
        Some(path) => {
            std::fs::write(path, &outcome.text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{}", outcome.text);
            Ok(())
        }
    }
}

pub fn render(table: &Table, global: &GlobalOpts, default: Format) -> String {
    match global.format.unwrap_or(default) {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

/// Inline JSON, or `@path` to read a file.
pub fn read_json_arg(arg: &str) -> CliResult<String> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}"))),
        None => Ok(arg.to_string()),
    }
}

fn slack_outcome(table: &Table, global: &GlobalOpts, min_slack: f64, cases: usize) -> Outcome {
    let passed = min_slack >= -global.tolerance;
    Outcome {
        text: render(table, global, Format::Csv),
        passed,
        summary: format!("min slack {min_slack:e} over {cases} cases (tolerance {:e})", global.tolerance),
    }
}

#[derive(Debug, Args)]
pub struct Thm1Args {
    /// Register sizes N.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub qubits: Vec<usize>,
    /// Depolarizing strengths; the contraction rate used is 1 - lambda.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.6")]
    pub lambdas: Vec<f64>,
    /// Largest power m (rows cover m = 0..=max-m).
    #[arg(long, default_value_t = 5)]
    pub max_m: usize,
    /// Random states per (N, lambda) cell.
    #[arg(long, default_value_t = 100)]
    pub samples: u64,
}

/// Random state used for sample `s` of an `n`-qubit cell.
pub fn thm1_state(n: usize, base_seed: u64, s: u64) -> (u64, DensityMatrix) {
    let dim = 1usize << n;
    let seed = base_seed.wrapping_add(s);
    let rank = 1 + (s as usize % dim);
    (seed, random_density(dim, rank, seed).expect("rank within dimension"))
}

pub fn verify_thm1(args: &Thm1Args, global: &GlobalOpts) -> CliResult<Outcome> {
    if let Some(&n) = args.qubits.iter().find(|&&n| n == 0 || n > MAX_THM1_QUBITS) {
        return Err(usage(format!("--qubits {n} outside 1..={MAX_THM1_QUBITS}")));
    }
    if args.max_m > MAX_THM1_POWER {
        return Err(usage(format!("--max-m {} exceeds {MAX_THM1_POWER}", args.max_m)));
    }
    let channels = args
        .lambdas
        .iter()
        .map(|&l| depolarizing(l, 2).map(|ch| (l, ch)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;

    let mut table = Table::new(&["N", "lambda", "m", "seed", "gain", "bound", "slack"]);
    table
        .param("command", "verify-thm1")
        .param("qubits", join(&args.qubits))
        .param("lambdas", join(&args.lambdas))
        .param("max_m", args.max_m)
        .param("samples", args.samples)
        .param("seed", global.seed)
        .param("contraction_rate", "1-lambda");
    let mut min_slack = f64::INFINITY;
    for &n in &args.qubits {
        for (lambda, ch) in &channels {
            let c = 1.0 - lambda;
            for s in 0..args.samples {
                let (seed, rho) = thm1_state(n, global.seed, s);
                let z = zeta(&rho, n).map_err(usage)?;
                let s0 = von_neumann_entropy(&rho);
                let mut state = rho;
                for m in 0..=args.max_m {
                    if m > 0 {
                        state = apply_product_channel(ch, n, &state).map_err(usage)?;
                    }
                    let gain = von_neumann_entropy(&state) - s0;
                    let bound = thm1_lower_bound(z, c, m as u32);
                    let slack = gain - bound;
                    min_slack = min_slack.min(slack);
                    table.push(vec![
                        n.into(),
                        (*lambda).into(),
                        m.into(),
                        seed.into(),
                        gain.into(),
                        bound.into(),
                        slack.into(),
                    ]);
                }
            }
        }
    }
    let cases = table.rows.len();
    Ok(slack_outcome(&table, global, min_slack, cases))
}

#[derive(Debug, Args)]
pub struct Thm2Args {
    /// Layouts as n,k,d; repeat the flag for several.
    #[arg(long = "layout", value_parser = parse_layout)]
    pub layouts: Vec<ClusterLayout>,
    /// Layout JSON ({"n","k","d","lambda","seed"}), inline or @file; overrides
    /// --layout, --lambdas and the base seed.
    #[arg(long)]
    pub layout_json: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1.0")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub samples: u64,
    /// Use full-rank random cluster states instead of pure ones.
    #[arg(long)]
    pub mixed: bool,
}

fn parse_layout(text: &str) -> Result<ClusterLayout, String> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [n, k, d] => ClusterLayout::new(*n, *k, *d).map_err(|e| e.to_string()),
        _ => Err(format!("expected n,k,d, got {text:?}")),
    }
}

pub fn default_thm2_layouts() -> Vec<ClusterLayout> {
    [(2, 1, 1), (3, 2, 1), (3, 1, 2), (4, 2, 1)]
        .into_iter()
        .map(|(n, k, d)| ClusterLayout::new(n, k, d).expect("valid layout"))
        .collect()
}

/// Random product state for sample `s` of a layout cell.
pub fn thm2_state(layout: ClusterLayout, base_seed: u64, s: u64, mixed: bool) -> (u64, ProductState) {
    let seed = base_seed.wrapping_add(s);
    let state = if mixed { ProductState::random_mixed(layout, seed) } else { ProductState::random_pure(layout, seed) };
    (seed, state)
}

pub fn verify_thm2(args: &Thm2Args, global: &GlobalOpts) -> CliResult<Outcome> {
    let (layouts, lambdas, base_seed, samples) = match &args.layout_json {
        Some(arg) => {
            let spec = LayoutJson::parse(&read_json_arg(arg)?)?;
            (vec![spec.layout().map_err(usage)?], vec![spec.lambda], spec.seed, 1)
        }
        None if args.layouts.is_empty() => (default_thm2_layouts(), args.lambdas.clone(), global.seed, args.samples),
        None => (args.layouts.clone(), args.lambdas.clone(), global.seed, args.samples),
    };
    for l in &layouts {
        if l.qubits() > spatial::MAX_GLOBAL_QUBITS {
            return Err(usage(format!(
                "layout ({},{},{}) has {} qubits; at most {} are supported",
                l.n,
                l.k,
                l.d,
                l.qubits(),
                spatial::MAX_GLOBAL_QUBITS
            )));
        }
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(usage(format!("lambda {l} outside [0, 1]")));
    }

    let mut table = Table::new(&["n", "k", "d", "lambda", "seed", "lhs", "rhs", "slack", "kappa"]);
    table
        .param("command", "verify-thm2")
        .param("lambdas", join(&lambdas))
        .param("samples", samples)
        .param("seed", base_seed)
        .param("states", if args.mixed { "mixed" } else { "pure" });
    let mut min_slack = f64::INFINITY;
    for layout in &layouts {
        for &lambda in &lambdas {
            for s in 0..samples {
                let (seed, state) = thm2_state(*layout, base_seed, s, args.mixed);
                let family = build_family(&state, lambda).map_err(|e| CliError::Validation(e.to_string()))?;
                let r = thm2_check(&family).map_err(|e| CliError::Validation(e.to_string()))?;
                min_slack = min_slack.min(r.slack);
                table.push(vec![
                    layout.n.into(),
                    layout.k.into(),
                    layout.d.into(),
                    lambda.into(),
                    seed.into(),
                    r.lhs.into(),
                    r.rhs.into(),
                    r.slack.into(),
                    r.kappa.into(),
                ]);
            }
        }
    }
    let cases = table.rows.len();
    Ok(slack_outcome(&table, global, min_slack, cases))
}

#[derive(Debug, Args)]
pub struct ContractionArgs {
    /// Channel JSON, inline or @file.
    #[arg(long)]
    pub channel: String,
    /// Bloch-sphere grid points per angle.
    #[arg(long, default_value_t = CONTRACTION_RESOLUTION)]
    pub resolution: usize,
}

pub fn contraction(args: &ContractionArgs, global: &GlobalOpts) -> CliResult<Outcome> {
    let channel = ChannelJson::parse(&read_json_arg(&args.channel)?)?.to_channel()?;
    if args.resolution == 0 {
        return Err(usage("--resolution must be positive"));
    }
    let est = contraction_rate(&channel, args.resolution).map_err(usage)?;
    let bistochastic = is_bistochastic(&channel, 1e-10);
    match global.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = json!({
                "rate": est.rate,
                "witness": {
                    "rho": matrix_to_json(est.witness.0.matrix()),
                    "sigma": matrix_to_json(est.witness.1.matrix()),
                    "theta": est.witness_angles.0,
                    "phi": est.witness_angles.1,
                },
                "grid_resolution": est.grid_resolution,
                "refined": est.refined,
                "bistochastic": bistochastic,
                "strictly_contractive": est.is_strictly_contractive(),
            });
            Ok(Outcome::ok(pretty(&doc)))
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "rate",
                "theta",
                "phi",
                "grid_resolution",
                "refined",
                "bistochastic",
                "strictly_contractive",
            ]);
            t.param("command", "contraction")
                .param("channel", serde_json::to_string(&ChannelJson::from_channel(&channel)).unwrap());
            t.push(vec![
                est.rate.into(),
                est.witness_angles.0.into(),
                est.witness_angles.1.into(),
                est.grid_resolution.into(),
                est.refined.into(),
                bistochastic.into(),
                est.is_strictly_contractive().into(),
            ]);
            Ok(Outcome::ok(t.to_csv()))
        }
    }
}

#[derive(Debug, Args)]
pub struct CrashArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// Energy budget E.
    #[arg(long)]
    pub energy: f64,
    /// Noise probability per step.
    #[arg(long)]
    pub epsilon: f64,
    /// zeta of the initial state; alternatively give --qubits for a random state.
    #[arg(long, conflicts_with = "qubits")]
    pub zeta: Option<f64>,
    /// Register size of a random initial state (seeded by --seed).
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Rank of the random initial state (default 1, a pure state).
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Contraction rate of the local channel.
    #[arg(long, conflicts_with = "lambda")]
    pub c: Option<f64>,
    /// Depolarizing strength; sets C = 1 - lambda.
    #[arg(long)]
    pub lambda: Option<f64>,
}

pub fn crash_value(t: CrashTime) -> serde_json::Value {
    match t {
        CrashTime::At(m) => json!(m),
        CrashTime::BoundSaturates => json!("BoundSaturates"),
        CrashTime::Never => json!("Never"),
    }
}

fn crash_cell(t: CrashTime) -> Cell {
    match t {
        CrashTime::At(m) => Cell::from(m),
        CrashTime::BoundSaturates => Cell::from("BoundSaturates"),
        CrashTime::Never => Cell::from("Never"),
    }
}

pub fn crash_time(args: &CrashArgs, global: &GlobalOpts) -> CliResult<Outcome> {
    let params = FreeEnergyParams::new(args.beta, args.energy).map_err(usage)?;
    let z = match (args.zeta, args.qubits) {
        (Some(z), _) => z,
        (None, Some(n)) if (1..=MAX_THM1_QUBITS).contains(&n) => {
            let rho = random_density(1 << n, args.rank, global.seed).map_err(usage)?;
            zeta(&rho, n).map_err(usage)?
        }
        (None, Some(n)) => return Err(usage(format!("--qubits {n} outside 1..={MAX_THM1_QUBITS}"))),
        (None, None) => return Err(usage("one of --zeta or --qubits is required")),
    };
    let c = match (args.c, args.lambda) {
        (Some(c), _) => c,
        (None, Some(l)) => depolarizing(l, 2).map(|_| 1.0 - l).map_err(usage)?,
        (None, None) => return Err(usage("one of --c or --lambda is required")),
    };
    let r = functionals::crash_time(&params, z, args.epsilon, c).map_err(usage)?;
    match global.format.unwrap_or(Format::Json) {
        Format::Json => Ok(Outcome::ok(pretty(&json!({
            "m_linearized": crash_value(r.linearized),
            "m_exact_or_saturates": crash_value(r.exact_bound),
            "beta_E": r.beta_e,
            "zeta": r.zeta,
            "epsilon": args.epsilon,
            "c": c,
        })))),
        Format::Csv => {
            let mut t = Table::new(&["beta", "energy", "epsilon", "c", "zeta", "m_linearized", "m_exact"]);
            t.param("command", "crash-time");
            t.push(crash_row(&params, args.epsilon, c, z, r.linearized, r.exact_bound));
            Ok(Outcome::ok(t.to_csv()))
        }
    }
}

pub fn crash_row(p: &FreeEnergyParams, eps: f64, c: f64, z: f64, lin: CrashTime, exact: CrashTime) -> Vec<Cell> {
    vec![p.beta.into(), p.energy_budget.into(), eps.into(), c.into(), z.into(), crash_cell(lin), crash_cell(exact)]
}

#[derive(Debug, Args)]
pub struct SpatialArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// Energy budget E.
    #[arg(long)]
    pub energy: f64,
    /// Overlap budget.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Clusters per block.
    #[arg(long, default_value_t = 1)]
    pub k: u64,
    /// Qubits per cluster.
    #[arg(long, default_value_t = 1)]
    pub d: u64,
}

pub fn spatial_bound(args: &SpatialArgs, global: &GlobalOpts) -> CliResult<Outcome> {
    if args.beta.is_nan() || args.energy.is_nan() || args.beta < 0.0 || args.energy < 0.0 {
        return Err(usage("--beta and --energy must be nonnegative"));
    }
    if args.k == 0 || args.d == 0 {
        return Err(usage("--k and --d must be positive"));
    }
    let r = spatial::max_qubit_count_for(args.beta * args.energy, args.kappa).map_err(usage)?;
    let qubits = r.qubits(args.k, args.d).ok_or_else(|| usage("qubit count overflows"))?;
    match global.format.unwrap_or(Format::Json) {
        Format::Json => Ok(Outcome::ok(pretty(&json!({
            "n_crash": r.n_crash,
            "N_crash": qubits,
            "beta_E": r.beta_e,
            "kappa": r.kappa,
            "k": args.k,
            "d": args.d,
            "estimator": "conservative",
        })))),
        Format::Csv => {
            let mut t = Table::new(&["beta", "energy", "kappa", "k", "d", "n_crash", "N_crash"]);
            t.param("command", "spatial-bound").param("estimator", "conservative");
            t.push(vec![
                args.beta.into(),
                args.energy.into(),
                args.kappa.into(),
                args.k.into(),
                args.d.into(),
                r.n_crash.into(),
                qubits.into(),
            ]);
            Ok(Outcome::ok(t.to_csv()))
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Circuit JSON file.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Noise JSON ({"epsilon":..,"channel":{..}}), inline or @file.
    #[arg(long)]
    pub noise: String,
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// Energy budget E.
    #[arg(long)]
    pub energy: f64,
    /// Contraction rate for the bound column (default: estimated from the channel).
    #[arg(long)]
    pub c: Option<f64>,
    /// Rank of a random initial state seeded by --seed; |0...0> when absent.
    #[arg(long)]
    pub random_rank: Option<usize>,
}

pub fn simulate(args: &SimulateArgs, global: &GlobalOpts) -> CliResult<Outcome> {
    let circuit_text = std::fs::read_to_string(&args.circuit)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.circuit.display())))?;
    let circuit = CircuitJson::parse(&circuit_text)?.to_circuit()?;
    let noise_json = NoiseJson::parse(&read_json_arg(&args.noise)?)?;
    let n = circuit.num_qubits();
    let noise = noise_json.to_noise(n)?;
    let params = FreeEnergyParams::new(args.beta, args.energy).map_err(usage)?;
    let c_used = match args.c {
        Some(c) => c,
        None => noise
            .local_channel()
            .contraction_rate_or_estimate(CONTRACTION_RESOLUTION)
            .map_err(|e| CliError::Validation(e.to_string()))?,
    };
    let (rho0, state_desc) = match args.random_rank {
        Some(rank) => (
            random_density(1 << n, rank, global.seed).map_err(usage)?,
            format!("random(rank={rank},seed={})", global.seed),
        ),
        None => (DensityMatrix::basis(1 << n, 0), "basis(0)".to_string()),
    };
    let options = RunOptions { stop_on_crash: global.stop_on_crash };
    let ledger = simulator::run(&circuit, &noise, &rho0, &params, c_used, options)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let table = ledger_table(&ledger, &noise_json, &state_desc, options);
    Ok(Outcome::ok(render(&table, global, Format::Csv)))
}

pub fn ledger_table(ledger: &RunLedger, noise: &NoiseJson, initial_state: &str, options: RunOptions) -> Table {
    let h = &ledger.header;
    let mut t = Table::new(&["step", "entropy_after_gates", "entropy", "delta_s", "eq2_bound", "delta_f", "crashed"]);
    t.param("command", "simulate")
        .param("num_qubits", h.num_qubits)
        .param("layers", h.layers)
        .param("noise", serde_json::to_string(noise).expect("serializable"))
        .param("epsilon", crate::output::fmt_float(h.epsilon))
        .param("c_used", crate::output::fmt_float(h.c_used))
        .param("beta", crate::output::fmt_float(h.beta))
        .param("energy", crate::output::fmt_float(h.energy_budget))
        .param("zeta0", crate::output::fmt_float(h.zeta0))
        .param("initial_state", initial_state)
        .param("stop_on_crash", options.stop_on_crash);
    for r in &ledger.rows {
        t.push(vec![
            r.step.into(),
            r.entropy_after_gates.into(),
            r.entropy.into(),
            r.delta_s.into(),
            r.eq2_bound.into(),
            r.delta_f.into(),
            r.crashed.into(),
        ]);
    }
    t
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}
