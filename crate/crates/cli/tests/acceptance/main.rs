//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p entroq-cli --test acceptance`.

mod oracle;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use entroq::channels::{
    apply_channel, apply_product_channel, bloch_state, contraction_rate, depolarizing, LocalStochasticNoise,
};
use entroq::formats::{CircuitJson, NoiseJson};
use entroq::functionals::{
    crash_time, entropy_gain, eq1_binomial_bound, eq2_closed_form, thm1_lower_bound, zeta, CrashTime, FreeEnergyParams,
};
use entroq::linalg::{commutator, random_density, von_neumann_entropy, DensityMatrix};
use entroq::simulator::{run, RunOptions};
use entroq::spatial::{
    build_family, eq3_bound, max_qubit_count_for, min_block_size, overlap_sum, random_codiagonal_family, thm2_check,
    ClusterLayout, CommutingFamily, ProductState,
};

const TOL: f64 = 1e-9;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 1: entropy gain of `R^{(x)N}` iterated `m` times against
/// `(1 - C^{2m}) zeta`.
fn temporal_single_channel() -> Verdict {
    let mut cases = 0;
    let mut min_slack = f64::INFINITY;
    let mut route_gap = 0.0f64;
    for n in 1..=3usize {
        let dim = 1 << n;
        for lambda in [0.1, 0.3, 0.6] {
            let r = depolarizing(lambda, 2).map_err(|e| e.to_string())?;
            let c = 1.0 - lambda;
            for s in 0..100u64 {
                let seed = 1000 * n as u64 + s;
                let rho = random_density(dim, 1 + s as usize % dim, seed).map_err(|e| e.to_string())?;
                let s0 = oracle::entropy(rho.matrix());
                let z = oracle::zeta(rho.matrix());
                let mut lib = rho.clone();
                for m in 1..=5u32 {
                    lib = apply_product_channel(&r, n, &lib).map_err(|e| e.to_string())?;
                    let reference = oracle::product_depolarizing_power(rho.matrix(), n, lambda, m);
                    let gain = oracle::entropy(&reference) - s0;
                    let lib_gain = von_neumann_entropy(&lib) - von_neumann_entropy(&rho);
                    route_gap = route_gap.max((gain - lib_gain).abs());
                    let bound = (1.0 - c.powi(2 * m as i32)) * z;
                    route_gap = route_gap.max((bound - thm1_lower_bound(zeta(&rho, n).unwrap(), c, m)).abs());
                    min_slack = min_slack.min(gain - bound).min(lib_gain - bound);
                    cases += 1;
                }
            }
        }
    }
    check(
        min_slack >= -TOL && route_gap <= TOL,
        format!("{cases} cases, min slack {min_slack:.3e}, library vs oracle gap {route_gap:.1e}"),
    )
}

/// Criterion 2: recovered contraction rate of depolarizing channels, and an
/// exhaustive mixed-pair search that never beats the estimate.
fn contraction_recovery() -> Verdict {
    const ORACLE_RES: usize = 50;
    let mut points = Vec::with_capacity(2 * ORACLE_RES * ORACLE_RES);
    for i in 0..ORACLE_RES {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / ORACLE_RES as f64;
        for j in 0..ORACLE_RES {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / ORACLE_RES as f64;
            for radius in [0.5, 1.0] {
                points.push([radius * theta.sin() * phi.cos(), radius * theta.sin() * phi.sin(), radius * theta.cos()]);
            }
        }
    }
    let mut worst_rate_err = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    for step in 1..=19 {
        let lambda = 0.05 * step as f64;
        let r = depolarizing(lambda, 2).map_err(|e| e.to_string())?;
        let estimate = contraction_rate(&r, 200).map_err(|e| e.to_string())?.rate;
        worst_rate_err = worst_rate_err.max((estimate - (1.0 - lambda)).abs());

        let images: Vec<[f64; 3]> = points
            .iter()
            .map(|&p| oracle::bloch_vector(apply_channel(&r, &bloch_state(p)).unwrap().matrix()))
            .collect();
        let mut best = 0.0f64;
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                let din = oracle::dist(points[a], points[b]);
                if din > 1e-12 {
                    best = best.max(oracle::dist(images[a], images[b]) / din);
                }
            }
        }
        worst_excess = worst_excess.max(best - estimate);
    }
    check(
        worst_rate_err <= 1e-3 && worst_excess <= 1e-6,
        format!("max |rate - (1-lambda)| {worst_rate_err:.1e}, max oracle excess {worst_excess:.1e}"),
    )
}

/// Criterion 3: binomial sum equals the closed form.
fn binomial_closed_form_identity() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for z in [0.25, 0.4375] {
        for eps in [0.0, 0.1, 0.5, 1.0] {
            for c in [0.0, 0.5, 0.9, 1.0] {
                for m in 0..=64u32 {
                    let sum = eq1_binomial_bound(z, eps, c, m).map_err(|e| e.to_string())?;
                    worst = worst.max((sum - eq2_closed_form(z, eps, c, m as u64)).abs());
                    cases += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, format!("{cases} cases, max difference {worst:.1e}"))
}

/// Criterion 4: exact entropy gain of local stochastic noise against the
/// closed form.
fn temporal_chain() -> Verdict {
    let mut min_slack = f64::INFINITY;
    let mut route_gap = 0.0f64;
    for s in 0..200u64 {
        let n = 1 + (s % 3) as usize;
        let eps = [0.1, 0.5, 1.0][(s / 3 % 3) as usize];
        let lambda = [0.1, 0.3, 0.6][(s / 9 % 3) as usize];
        let dim = 1 << n;
        let rho = random_density(dim, 1 + (s / 27) as usize % dim, 7000 + s).map_err(|e| e.to_string())?;
        let noise = LocalStochasticNoise::new(eps, depolarizing(lambda, 2).unwrap(), n).map_err(|e| e.to_string())?;
        let z = oracle::zeta(rho.matrix());
        let s0 = oracle::entropy(rho.matrix());
        for m in 1..=6u32 {
            let gain = entropy_gain(&rho, &noise, m as usize).map_err(|e| e.to_string())?;
            let reference = oracle::entropy(&oracle::noisy_power(rho.matrix(), n, eps, lambda, m)) - s0;
            route_gap = route_gap.max((gain - reference).abs());
            let bound = eq2_closed_form(z, eps, 1.0 - lambda, m as u64);
            min_slack = min_slack.min(gain - bound).min(reference - bound);
        }
    }
    check(
        min_slack >= -TOL && route_gap <= TOL,
        format!("1200 cases, min slack {min_slack:.3e}, library vs oracle gap {route_gap:.1e}"),
    )
}

/// Smallest `m` with `value(m) > threshold`, by plain counting from `start`.
fn first_exceedance(start: u64, threshold: f64, value: impl Fn(u64) -> f64) -> u64 {
    let mut m = start;
    while value(m) <= threshold {
        m += 1;
    }
    m
}

/// Criterion 5: crash-time spot values.
fn crash_time_spots() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;

    let (be, z, eps, c): (f64, f64, f64, f64) = (1.0, 0.25, 1e-3, 0.9);
    let x = eps * (1.0 - c * c);
    let m_lin = first_exceedance((be / (z * x)).floor() as u64, be, |m| z * m as f64 * x);
    let params = FreeEnergyParams::new(1.0, be).unwrap();
    let r = crash_time(&params, z, eps, c).map_err(|e| e.to_string())?;
    ok &= m_lin == 21053 && r.linearized == CrashTime::At(m_lin) && r.exact_bound == CrashTime::BoundSaturates;
    notes.push(format!("m_lin {:?} (oracle {m_lin}), exact {:?}", r.linearized, r.exact_bound));

    let (be, z, eps, c) = (0.1, 0.25, 0.5, 0.0);
    let x: f64 = eps * (1.0 - c * c);
    let m_exact = first_exceedance(1, be, |m| z * (1.0 - (1.0 - x).powi(m as i32)));
    let params = FreeEnergyParams::new(1.0, be).unwrap();
    let r = crash_time(&params, z, eps, c).map_err(|e| e.to_string())?;
    ok &= m_exact == 1 && r.exact_bound == CrashTime::At(m_exact);
    notes.push(format!("exact {:?} (oracle {m_exact})", r.exact_bound));
    check(ok, notes.join("; "))
}

const LAYOUTS: [(usize, usize, usize); 4] = [(2, 1, 1), (3, 2, 1), (3, 1, 2), (4, 2, 1)];
const BLOCK_LAMBDAS: [f64; 3] = [0.25, 0.5, 1.0];

struct BlockFamily {
    pure: bool,
    state: ProductState,
    lambda: f64,
    family: CommutingFamily,
}

/// Even seeds draw pure cluster states, odd seeds mixed ones.
fn block_families() -> Result<Vec<BlockFamily>, String> {
    let mut out = Vec::new();
    for (n, k, d) in LAYOUTS {
        let layout = ClusterLayout::new(n, k, d).map_err(|e| e.to_string())?;
        for lambda in BLOCK_LAMBDAS {
            for s in 0..100u64 {
                let seed = 90_000 + 1000 * (n * 100 + k * 10 + d) as u64 + s;
                let state = if s % 2 == 0 {
                    ProductState::random_pure(layout, seed)
                } else {
                    ProductState::random_mixed(layout, seed)
                };
                let family = build_family(&state, lambda).map_err(|e| e.to_string())?;
                out.push(BlockFamily { pure: s % 2 == 0, state, lambda, family });
            }
        }
    }
    Ok(out)
}

/// Cluster states of `T_i(rho)`: clusters in block `i` depolarized.
fn member_clusters(f: &BlockFamily, i: usize) -> Vec<entroq::linalg::ComplexMatrix> {
    let layout = f.state.layout();
    let dim = layout.cluster_dim();
    f.state
        .cluster_states()
        .iter()
        .enumerate()
        .map(|(l, s)| {
            if layout.block_of(l) == i {
                s.matrix() * entroq::linalg::c(1.0 - f.lambda, 0.0)
                    + entroq::linalg::identity(dim) * entroq::linalg::c(f.lambda / dim as f64, 0.0)
            } else {
                s.matrix().clone()
            }
        })
        .collect()
}

/// `tr(rho_j rho_i)` as a product of cluster overlaps.
fn product_overlap(f: &BlockFamily, i: usize, j: usize) -> f64 {
    member_clusters(f, i).iter().zip(member_clusters(f, j).iter()).map(|(a, b)| oracle::trace_product(a, b)).product()
}

/// Criterion 6: overlap sums of block-depolarized product states.
fn overlap_bound(families: &[BlockFamily]) -> Verdict {
    let mut min_margin = f64::INFINITY;
    let mut route_gap = 0.0f64;
    let mut worst_commutator = 0.0f64;
    for f in families {
        let layout = f.state.layout();
        let bound = eq3_bound(layout.n, layout.k, layout.d, f.lambda);
        let members = f.family.members();
        for i in 0..layout.n {
            let lib = overlap_sum(&f.family, i).map_err(|e| e.to_string())?;
            let reference: f64 = (0..layout.n).filter(|&j| j != i).map(|j| product_overlap(f, i, j)).sum();
            route_gap = route_gap.max((lib - reference).abs());
            min_margin = min_margin.min(bound + TOL - lib.max(reference));
            for j in i + 1..layout.n {
                worst_commutator =
                    worst_commutator.max(oracle::hs(&commutator(members[i].matrix(), members[j].matrix())));
            }
        }
    }
    check(
        min_margin >= 0.0 && worst_commutator <= TOL && route_gap <= TOL,
        format!(
            "{} families, min margin {min_margin:.3e}, max commutator {worst_commutator:.1e}, route gap {route_gap:.1e}",
            families.len()
        ),
    )
}

/// Slack of the mixture-entropy bound from first principles: member
/// entropies from the cluster spectra, `kappa` from cluster overlaps.
fn block_family_slack(f: &BlockFamily) -> f64 {
    let n = f.family.len();
    let mean_entropy =
        (0..n).map(|i| member_clusters(f, i).iter().map(oracle::entropy).sum::<f64>()).sum::<f64>() / n as f64;
    let kappa =
        (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| product_overlap(f, i, j)).sum::<f64>()).fold(0.0, f64::max);
    let avg = f.family.members().iter().fold(
        entroq::linalg::ComplexMatrix::zeros(f.family.members()[0].dim(), f.family.members()[0].dim()),
        |acc, m| acc + m.matrix() * entroq::linalg::c(1.0 / n as f64, 0.0),
    );
    oracle::entropy(&avg) - (mean_entropy + (n as f64).ln() - 2.0 * kappa.sqrt())
}

fn generic_family_slack(members: &[DensityMatrix]) -> f64 {
    let n = members.len();
    let kappa = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| oracle::trace_product(members[j].matrix(), members[i].matrix()))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let mean_entropy = members.iter().map(|m| oracle::entropy(m.matrix())).sum::<f64>() / n as f64;
    let dim = members[0].dim();
    let avg = members.iter().fold(entroq::linalg::ComplexMatrix::zeros(dim, dim), |acc, m| {
        acc + m.matrix() * entroq::linalg::c(1.0 / n as f64, 0.0)
    });
    oracle::entropy(&avg) - (mean_entropy + (n as f64).ln() - 2.0 * kappa.sqrt())
}

/// Criterion 7: mixture-entropy bound on synthetic co-diagonal families and
/// on the block families of criterion 6.
fn mixture_bound(families: &[BlockFamily]) -> Verdict {
    let mut route_gap = 0.0f64;
    let mut synthetic_fail = 0;
    let mut synthetic_min = f64::INFINITY;
    for s in 0..500u64 {
        let n = 1 + (s % 6) as usize;
        let dim = 1usize << (1 + (s / 6) % 6);
        let family = random_codiagonal_family(n, dim, 50_000 + s).map_err(|e| e.to_string())?;
        let lib = thm2_check(&family).map_err(|e| e.to_string())?.slack;
        let reference = generic_family_slack(family.members());
        route_gap = route_gap.max((lib - reference).abs());
        let slack = lib.min(reference);
        synthetic_min = synthetic_min.min(slack);
        if slack < -TOL {
            synthetic_fail += 1;
        }
    }
    let mut block_fail = [0, 0];
    let mut block_min = [f64::INFINITY; 2];
    for f in families {
        let lib = thm2_check(&f.family).map_err(|e| e.to_string())?.slack;
        let reference = block_family_slack(f);
        route_gap = route_gap.max((lib - reference).abs());
        let slack = lib.min(reference);
        let kind = usize::from(!f.pure);
        block_min[kind] = block_min[kind].min(slack);
        if slack < -TOL {
            block_fail[kind] += 1;
        }
    }
    check(
        synthetic_fail == 0 && block_fail == [0, 0] && route_gap <= TOL,
        format!(
            "synthetic: {synthetic_fail}/500 violate, min slack {synthetic_min:.3e}; \
             block families (pure): {}/{} violate, min slack {:.3e}; \
             block families (mixed): {}/{} violate, min slack {:.3e}; route gap {route_gap:.1e}",
            block_fail[0],
            families.iter().filter(|f| f.pure).count(),
            block_min[0],
            block_fail[1],
            families.iter().filter(|f| !f.pure).count(),
            block_min[1],
        ),
    )
}

/// Criterion 8: returned block size satisfies the overlap bound and is minimal.
fn block_size_minimality() -> Verdict {
    let bound = |n: usize, k: usize, d: usize, lambda: f64| {
        (n as f64 - 1.0) * (1.0 - lambda + lambda / 2f64.powi(d as i32)).powi(2 * k as i32)
    };
    let mut bad = Vec::new();
    for n in 3..=8 {
        for d in [1, 2] {
            for lambda in BLOCK_LAMBDAS {
                let k = min_block_size(n, d, lambda).map_err(|e| e.to_string())?;
                let tight = bound(n, k, d, lambda) <= 1.0 && (k == 1 || bound(n, k - 1, d, lambda) > 1.0);
                let agrees = (eq3_bound(n, k, d, lambda) - bound(n, k, d, lambda)).abs() <= 1e-12;
                if !(tight && agrees) {
                    bad.push(format!("(n={n}, d={d}, lambda={lambda}) -> {k}"));
                }
            }
        }
    }
    let worked = min_block_size(5, 1, 0.5).map_err(|e| e.to_string())?;
    let expected = (1..).find(|&k| bound(5, k, 1, 0.5) <= 1.0).unwrap();
    check(
        bad.is_empty() && worked == expected && expected == 3,
        format!("36 cases, {} not minimal; (5,1,0.5) -> {worked} (oracle {expected})", bad.len()),
    )
}

/// Criterion 9: qubit-count crash points.
fn spatial_spots() -> Verdict {
    let oracle_n = |be: f64, kappa: f64| (be + 2.0 * f64::sqrt(kappa)).exp().floor() as u64 + 1;
    let a = max_qubit_count_for(10f64.ln(), 0.0).map_err(|e| e.to_string())?.n_crash;
    let b = max_qubit_count_for(1.0, 1.0).map_err(|e| e.to_string())?.n_crash;
    let (oa, ob) = (oracle_n(10f64.ln(), 0.0), oracle_n(1.0, 1.0));
    check(
        a == oa && b == ob && oa == 11 && ob == 21,
        format!("(ln 10, 0) -> {a} (oracle {oa}); (1, 1) -> {b} (oracle {ob})"),
    )
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Criterion 10: the shipped 4-qubit, 20-layer circuit end to end.
fn simulator_end_to_end() -> Verdict {
    let text = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()));
    let circuit_json = CircuitJson::parse(&text(fixture("demo_circuit.json"))?).map_err(|e| e.to_string())?;
    let circuit = circuit_json.to_circuit().map_err(|e| e.to_string())?;
    let noise_json = NoiseJson::parse(&text(fixture("demo_noise.json"))?).map_err(|e| e.to_string())?;
    let noise = noise_json.to_noise(4).map_err(|e| e.to_string())?;
    if circuit.num_qubits() != 4 || circuit.layers().len() != 20 || noise.epsilon() != 0.05 {
        return Err("fixture is not the 4-qubit, 20-layer, eps = 0.05 circuit".into());
    }
    let lambda = 0.2;

    let start = Instant::now();
    let rho0 = DensityMatrix::basis(16, 0);
    let params = FreeEnergyParams::new(1.0, 1.0).unwrap();
    let ledger =
        run(&circuit, &noise, &rho0, &params, 1.0 - lambda, RunOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut reference = rho0.matrix().clone();
    let mut max_noise_drop = 0.0f64;
    let mut max_gate_change = 0.0f64;
    let mut min_bound_slack = f64::INFINITY;
    let mut route_gap = 0.0f64;
    for (layer, pair) in circuit.layers().iter().zip(ledger.rows.windows(2)) {
        let (prev, row) = (&pair[0], &pair[1]);
        for g in &layer.gates {
            let u = oracle::embed(g.matrix(), g.targets(), 4);
            reference = &u * &reference * u.adjoint();
        }
        route_gap = route_gap.max((oracle::entropy(&reference) - row.entropy_after_gates).abs());
        reference = oracle::noisy_power(&reference, 4, noise.epsilon(), lambda, 1);
        route_gap = route_gap.max((oracle::entropy(&reference) - row.entropy).abs());

        max_noise_drop = max_noise_drop.max(row.entropy_after_gates - row.entropy).max(prev.entropy - row.entropy);
        max_gate_change = max_gate_change.max((row.entropy_after_gates - prev.entropy).abs());
        min_bound_slack = min_bound_slack.min(row.delta_s - row.eq2_bound);
    }

    let circuit_path = fixture("demo_circuit.json");
    let args = [
        "simulate",
        "--circuit",
        circuit_path.to_str().unwrap(),
        "--noise",
        &format!("@{}", fixture("demo_noise.json").display()),
        "--beta",
        "1",
        "--energy",
        "1",
    ];
    let cli = || Command::new(env!("CARGO_BIN_EXE_entroq")).args(args).env_remove("ENTROQ_SEED").output();
    let (first, second) = (cli().map_err(|e| e.to_string())?, cli().map_err(|e| e.to_string())?);
    let identical = first.status.success() && !first.stdout.is_empty() && first.stdout == second.stdout;

    check(
        ledger.rows.len() == 21
            && elapsed < 10.0
            && max_noise_drop <= TOL
            && max_gate_change <= TOL
            && min_bound_slack >= -TOL
            && route_gap <= TOL
            && identical,
        format!(
            "{} rows in {elapsed:.2}s, max entropy drop {max_noise_drop:.1e}, max gate change {max_gate_change:.1e}, \
             min (dS - bound) {min_bound_slack:.3e}, oracle gap {route_gap:.1e}, rerun identical: {identical}",
            ledger.rows.len()
        ),
    )
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let mut failures = 0;
    let mut report = |id: usize, name: &str, verdict: Verdict, secs: f64| {
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name} [{secs:.1}s]: {detail}");
    };
    let timed = |f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let v = f();
        (v, t.elapsed().as_secs_f64())
    };

    let (v, t) = timed(&temporal_single_channel);
    report(1, "iterated product channel entropy bound", v, t);
    let (v, t) = timed(&contraction_recovery);
    report(2, "contraction rate recovery", v, t);
    let (v, t) = timed(&binomial_closed_form_identity);
    report(3, "binomial sum vs closed form", v, t);
    let (v, t) = timed(&temporal_chain);
    report(4, "local stochastic noise entropy bound", v, t);
    let (v, t) = timed(&crash_time_spots);
    report(5, "crash-time spot values", v, t);

    let t = Instant::now();
    let families = block_families();
    let build = t.elapsed().as_secs_f64();
    match &families {
        Ok(families) => {
            let (v, t) = timed(&|| overlap_bound(families));
            report(6, "block overlap bound", v, t + build);
            let (v, t) = timed(&|| mixture_bound(families));
            report(7, "mixture entropy bound", v, t);
        }
        Err(e) => {
            report(6, "block overlap bound", Err(e.clone()), build);
            report(7, "mixture entropy bound", Err(e.clone()), 0.0);
        }
    }

    let (v, t) = timed(&block_size_minimality);
    report(8, "minimal block size", v, t);
    let (v, t) = timed(&spatial_spots);
    report(9, "qubit-count crash points", v, t);
    let (v, t) = timed(&simulator_end_to_end);
    report(10, "simulator end to end", v, t);

    println!("acceptance: {}/10 passed in {:.1}s", 10 - failures, suite_start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
