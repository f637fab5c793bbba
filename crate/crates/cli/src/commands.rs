use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use paulient::factorize::{check_pauli_product_preserving, factorize, verify_factorization};
use paulient::io::read_matrix_file;
use paulient::mpu::{examples, pauli_power_mpu, MpuMode, MpuTensor};
use paulient::operator::haar_random_qubits;
use paulient::power::{
    haar_monte_carlo, haar_typical_value, local_pauli_magic_bound, pauli_entangling_power_exact,
    pauli_entangling_power_sampled, SampleStop,
};
use paulient::spin_chain::{run_sweep_point, EvalMode, FixedCouplings, ModelFamily, StopRule};
use paulient::{selftest, Bipartition, DenseOperator};

use crate::config::*;
use crate::output::{self, num, Table};
use crate::CliError;

const DEFAULT_CHECK_TOL: f64 = 1e-10;
const DEFAULT_HAAR_SAMPLES: usize = 200;

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let table = match &cfg.params {
        Params::PeExact(p) => pe_exact(cfg, p)?,
        Params::PeSample(p) => pe_sample(cfg, p)?,
        Params::PeTypical(p) => pe_typical(p)?,
        Params::PeBounds(p) => pe_bounds(cfg, p)?,
        Params::HaarMc(p) => haar_mc(cfg, p)?,
        Params::Thm1Check(p) => thm1_check(cfg, p)?,
        Params::Thm1Factorize(p) => thm1_factorize(cfg, p)?,
        Params::MpuPe(p) => mpu_pe(p)?,
        Params::SpinchainRun(p) => spinchain(cfg, p)?,
        Params::Selftest(_) => return run_selftest(cfg),
    };
    if let Some(path) = &cfg.out {
        output::write(cfg, &table, path)?;
    }
    Ok(())
}

/// The unitary from `unitary` or, with `haar`, drawn from `rng`.
fn load_unitary(
    unitary: &Option<std::path::PathBuf>,
    haar: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<DenseOperator, CliError> {
    match (unitary, haar) {
        (Some(_), Some(_)) => Err(CliError::config("give either unitary or haar, not both")),
        (None, None) => Err(CliError::config("missing input: set unitary (a matrix file) or haar (qubit count)")),
        (Some(path), None) => read_matrix_file(path)
            .map_err(|e| CliError::config(format!("cannot load unitary {}: {e}", path.display()))),
        (None, Some(n)) => {
            if n == 0 || n > paulient::power::EXACT_LIMIT {
                return Err(CliError::config(format!(
                    "haar needs 1..={} qubits, got {n}",
                    paulient::power::EXACT_LIMIT
                )));
            }
            haar_random_qubits(n, rng).map_err(CliError::compute)
        }
    }
}

fn bipartition(n: usize, n_a: Option<usize>) -> Result<Bipartition, CliError> {
    let n_a = n_a.unwrap_or(n / 2);
    if n_a == 0 || n_a >= n {
        return Err(CliError::config(format!("n_a must lie in 1..{n} for {n} qubits, got {n_a}")));
    }
    Bipartition::new(n_a, n - n_a).map_err(|e| CliError::config(e.to_string()))
}

fn seeded(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn pe_exact(cfg: &RunConfig, p: &PeExactParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let u = load_unitary(&p.unitary, p.haar, &mut seeded(cfg))?;
    let bp = bipartition(u.n_qubits(), p.n_a)?;
    let pe = pauli_entangling_power_exact(&u, &bp).map_err(CliError::compute)?.value;
    println!("P_E = {pe:.12}  (N = {}, N_A = {})", bp.n(), bp.n_a());
    let mut t = Table::new(&["n", "n_a", "pe"]);
    t.push(vec![bp.n().to_string(), bp.n_a().to_string(), num(pe)], start.elapsed().as_secs_f64());
    Ok(t)
}

fn pe_sample(cfg: &RunConfig, p: &PeSampleParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let mut rng = seeded(cfg);
    let u = load_unitary(&p.unitary, p.haar, &mut rng)?;
    let bp = bipartition(u.n_qubits(), p.n_a)?;
    let stop = sample_stop(p.samples, p.sem_target, p.max_samples)?;
    let est = pauli_entangling_power_sampled(&u, &bp, &mut rng, &stop).map_err(CliError::compute)?;
    println!(
        "P_E ~ {:.12} +/- {:.3e}  ({} Pauli strings, N = {}, N_A = {})",
        est.value,
        est.sem,
        est.n_samples,
        bp.n(),
        bp.n_a()
    );
    let mut t = Table::new(&["n", "n_a", "pe", "sem", "n_samples"]);
    t.push(
        vec![
            bp.n().to_string(),
            bp.n_a().to_string(),
            num(est.value),
            num(est.sem),
            est.n_samples.to_string(),
        ],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn sample_stop(samples: Option<usize>, target: Option<f64>, max: Option<usize>) -> Result<SampleStop, CliError> {
    if let Some(n) = samples {
        if n < 2 {
            return Err(CliError::config("samples must be at least 2"));
        }
        return Ok(SampleStop::Count(n));
    }
    let SampleStop::Sem {
        target: default_target,
        z,
        min_samples,
        max_samples,
    } = SampleStop::default()
    else {
        unreachable!("default rule is SEM based")
    };
    let target = target.unwrap_or(default_target);
    if !(target > 0.0) {
        return Err(CliError::config("sem_target must be positive"));
    }
    let max_samples = max.unwrap_or(max_samples);
    if max_samples < min_samples {
        return Err(CliError::config(format!("max_samples must be at least {min_samples}")));
    }
    Ok(SampleStop::Sem {
        target,
        z,
        min_samples,
        max_samples,
    })
}

fn pe_typical(p: &PeTypicalParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let (Some(d), Some(d_a)) = (p.d, p.d_a) else {
        return Err(CliError::config("pe-typical needs d and d_a"));
    };
    let tv = haar_typical_value(d, d_a).map_err(|e| CliError::config(e.to_string()))?;
    println!("typical P_E (d = {d}, d_A = {d_a}) = {:.12}", tv.exact);
    println!("large-d expansion              = {:.12}", tv.expansion);
    let mut t = Table::new(&["d", "d_a", "typical_pe", "expansion"]);
    t.push(
        vec![d.to_string(), d_a.to_string(), num(tv.exact), num(tv.expansion)],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn pe_bounds(cfg: &RunConfig, p: &PeBoundsParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let u = load_unitary(&p.unitary, p.haar, &mut seeded(cfg))?;
    let bp = bipartition(u.n_qubits(), p.n_a)?;
    let pe = pauli_entangling_power_exact(&u, &bp).map_err(CliError::compute)?.value;
    let (ba, bb) = local_pauli_magic_bound(&u, &bp).map_err(CliError::compute)?;
    println!("P_E     = {pe:.12}");
    println!("bound_A = {ba:.12}");
    println!("bound_B = {bb:.12}");
    let mut t = Table::new(&["n", "n_a", "pe", "bound_a", "bound_b"]);
    t.push(
        vec![bp.n().to_string(), bp.n_a().to_string(), num(pe), num(ba), num(bb)],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn haar_mc(cfg: &RunConfig, p: &HaarMcParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let n = p.n.ok_or_else(|| CliError::config("haar-mc needs n"))?;
    if n < 2 || n > paulient::power::EXACT_LIMIT {
        return Err(CliError::config(format!("n must lie in 2..={}", paulient::power::EXACT_LIMIT)));
    }
    let bp = bipartition(n, p.n_a)?;
    let samples = p.samples.unwrap_or(DEFAULT_HAAR_SAMPLES);
    if samples < 2 {
        return Err(CliError::config("samples must be at least 2"));
    }
    let (mean, sem) = haar_monte_carlo(&bp, samples, cfg.seed).map_err(CliError::compute)?;
    let typical = haar_typical_value(bp.d(), bp.d_a()).map_err(CliError::compute)?.exact;
    let label = format!("mean P_E over {samples} Haar unitaries");
    println!("{label} = {mean:.12} +/- {sem:.3e}");
    println!("{:<width$} = {typical:.12}", "closed form", width = label.len());
    let mut t = Table::new(&["n", "n_a", "samples", "mean_pe", "sem", "typical_pe"]);
    t.push(
        vec![
            n.to_string(),
            bp.n_a().to_string(),
            samples.to_string(),
            num(mean),
            num(sem),
            num(typical),
        ],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn check_tol(tol: Option<f64>) -> Result<f64, CliError> {
    let tol = tol.unwrap_or(DEFAULT_CHECK_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::config("tol must lie in (0, 1)"));
    }
    Ok(tol)
}

fn thm1_check(cfg: &RunConfig, p: &Thm1CheckParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let u = load_unitary(&p.unitary, p.haar, &mut seeded(cfg))?;
    let bp = bipartition(u.n_qubits(), p.n_a)?;
    let tol = check_tol(p.tol)?;
    let check = check_pauli_product_preserving(&u, &bp, tol).map_err(CliError::compute)?;
    println!("product-preserving: {}", check.preserving);
    println!("strings checked: {}", check.checked);
    let (witness, lambda2) = match &check.witness {
        Some((w, l)) => {
            println!("witness: {w} (second Schmidt coefficient {l:.6e})");
            (w.to_string(), num(*l))
        }
        None => (String::new(), String::new()),
    };
    let mut t = Table::new(&["n", "n_a", "product_preserving", "checked", "witness", "lambda2"]);
    t.push(
        vec![
            bp.n().to_string(),
            bp.n_a().to_string(),
            check.preserving.to_string(),
            check.checked.to_string(),
            witness,
            lambda2,
        ],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn thm1_factorize(cfg: &RunConfig, p: &Thm1FactorizeParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let u = load_unitary(&p.unitary, p.haar, &mut seeded(cfg))?;
    let bp = bipartition(u.n_qubits(), p.n_a)?;
    let tol = check_tol(p.tol)?;
    let f = factorize(&u, &bp, tol).map_err(CliError::compute)?;
    let report = verify_factorization(&u, &f).map_err(CliError::compute)?;
    println!("reconstruction residual: {:.3e}", report.residual);
    if let Some(m) = report.max_local_magic {
        println!("largest operator magic after removing V, W: {m:.3e}");
    }
    if let Some(path) = &p.factors {
        write_factors(cfg, path, &f.to_text())?;
        println!("factors written to {}", path.display());
    }
    let mut t = Table::new(&["n", "n_a", "residual", "max_local_magic"]);
    t.push(
        vec![
            bp.n().to_string(),
            bp.n_a().to_string(),
            num(report.residual),
            report.max_local_magic.map(num).unwrap_or_default(),
        ],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn write_factors(cfg: &RunConfig, path: &Path, body: &str) -> Result<(), CliError> {
    let text = format!(
        "# command={}\n# seed={}\n# config_digest={}\n{body}",
        cfg.params.command(),
        cfg.seed,
        cfg.digest()
    );
    std::fs::write(path, text).map_err(|e| CliError::compute(format!("cannot write {}: {e}", path.display())))
}

fn mpu_pe(p: &MpuPeParams) -> Result<Table, CliError> {
    let start = Instant::now();
    let (tensor, label) = match (&p.tensor, p.example) {
        (Some(_), Some(_)) => return Err(CliError::config("give either tensor or example, not both")),
        (None, None) => return Err(CliError::config("missing input: set tensor (a file) or example")),
        (Some(path), None) => (
            MpuTensor::read_file(path)
                .map_err(|e| CliError::config(format!("cannot load tensor {}: {e}", path.display())))?,
            path.display().to_string(),
        ),
        (None, Some(ex)) => match ex {
            MpuExample::Shift => (examples::shift(), "shift".to_string()),
            MpuExample::Clifford => (examples::clifford_automaton(), "clifford".to_string()),
            MpuExample::TLayer => (examples::t_layer_automaton(), "t-layer".to_string()),
        },
    };
    let mode = match p.mode.unwrap_or(MpuModeArg::Finite) {
        MpuModeArg::Finite => MpuMode::Finite,
        MpuModeArg::Thermodynamic => MpuMode::Thermodynamic,
    };
    let (n_a, n_b) = match mode {
        MpuMode::Finite => match (p.n_a, p.n_b) {
            (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
            _ => return Err(CliError::config("finite mode needs n_a >= 1 and n_b >= 1")),
        },
        MpuMode::Thermodynamic => (0, 0),
    };
    let pe = pauli_power_mpu(&tensor, n_a, n_b, mode).map_err(CliError::compute)?;
    let mode_name = match mode {
        MpuMode::Finite => "finite",
        MpuMode::Thermodynamic => "thermodynamic",
    };
    match mode {
        MpuMode::Finite => println!("P_E = {pe:.12}  ({label}, N_A = {n_a}, N_B = {n_b})"),
        MpuMode::Thermodynamic => println!("P_E = {pe:.12}  ({label}, thermodynamic limit)"),
    }
    let mut t = Table::new(&["tensor", "chi", "mode", "n_a", "n_b", "pe"]);
    t.push(
        vec![
            label,
            tensor.chi().to_string(),
            mode_name.to_string(),
            n_a.to_string(),
            n_b.to_string(),
            num(pe),
        ],
        start.elapsed().as_secs_f64(),
    );
    Ok(t)
}

fn spinchain(cfg: &RunConfig, p: &SpinchainParams) -> Result<Table, CliError> {
    let family = match p.model.ok_or_else(|| CliError::config("spinchain-run needs model (xyz or tfim)"))? {
        Model::Xyz => ModelFamily::Xyz,
        Model::Tfim => ModelFamily::Tfim,
    };
    let sweep = p.sweep.as_deref().ok_or_else(|| CliError::config("spinchain-run needs sweep"))?;
    let values = parse_sweep(sweep, family.sweep_name()).map_err(CliError::config)?;
    let n = p.n.ok_or_else(|| CliError::config("spinchain-run needs n"))?;
    let d = FixedCouplings::default();
    let fixed = FixedCouplings {
        jx: p.jx.unwrap_or(d.jx),
        jy: p.jy.unwrap_or(d.jy),
        h: p.h.unwrap_or(d.h),
        j: p.j.unwrap_or(d.j),
        g: p.g.unwrap_or(d.g),
    };
    let r = StopRule::default();
    let rule = StopRule {
        dt: p.dt.unwrap_or(r.dt),
        sem_threshold: p.sem_threshold.unwrap_or(r.sem_threshold),
        n_min: p.n_min.unwrap_or(r.n_min),
        max_steps: p.max_steps.unwrap_or(r.max_steps),
    };
    if !(rule.dt > 0.0) || !(rule.sem_threshold > 0.0) || rule.n_min < 2 || rule.max_steps < rule.n_min {
        return Err(CliError::config("need dt > 0, sem_threshold > 0, n_min >= 2 and max_steps >= n_min"));
    }
    let mode_arg = p.mode.unwrap_or(SweepMode::Exact);
    let max_n = match mode_arg {
        SweepMode::Exact => paulient::power::EXACT_LIMIT,
        SweepMode::Sampled => paulient::linalg::DENSE_LIMIT,
    };
    if !(2..=max_n).contains(&n) {
        return Err(CliError::config(format!("n must lie in 2..={max_n} in this mode")));
    }
    let mode = match mode_arg {
        SweepMode::Exact => EvalMode::Exact,
        SweepMode::Sampled => EvalMode::Sampled {
            seed: cfg.seed,
            stop: sample_stop(p.samples, p.sem_target, p.max_samples)?,
        },
    };
    let rows: Vec<_> = values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let start = Instant::now();
            run_sweep_point(family, &fixed, v, n, &mode, &rule, k as u64)
                .map(|(row, _)| (row, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, _>>()
        .map_err(CliError::compute)?;
    let name = family.sweep_name();
    println!("{name:>8} {:>14} {:>14} {:>7} {:>9}", "mean P_E", "mean E_lin", "steps", "converged");
    let mut t = Table::new(&[
        "sweep_value",
        "n_sites",
        "mean_pe",
        "mean_e",
        "n_steps",
        "total_samples",
        "converged",
    ]);
    for (row, wall) in rows {
        println!(
            "{:>8} {:>14.10} {:>14.10} {:>7} {:>9}",
            row.sweep_value, row.mean_pe, row.mean_e, row.n_steps, row.converged
        );
        t.push(
            vec![
                row.sweep_value.to_string(),
                row.n_sites.to_string(),
                num(row.mean_pe),
                num(row.mean_e),
                row.n_steps.to_string(),
                row.total_samples.to_string(),
                row.converged.to_string(),
            ],
            wall,
        );
    }
    Ok(t)
}

fn run_selftest(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let checks = selftest::run(cfg.seed);
    let wall = start.elapsed().as_secs_f64();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut t = Table::new(&["check", "passed", "detail"]);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<width$}  {}", c.name, c.detail);
        t.push(vec![c.name.to_string(), c.passed.to_string(), c.detail.clone()], wall);
    }
    if let Some(path) = &cfg.out {
        output::write(cfg, &t, path)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::compute(format!("{failed} of {} self checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
