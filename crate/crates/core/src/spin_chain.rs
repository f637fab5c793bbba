//! Periodic XYZ and transverse-field Ising chains: exact time evolution,
//! long-time averages of Pauli-entangling power and operator entanglement,
//! and parameter sweeps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_dense_limit, hermitian_eigen, matmul_adj_right, Bipartition, DenseOperator, C64, DENSE_LIMIT};
use crate::operator::linear_operator_entanglement;
use crate::power::{mean_and_sem, pauli_entangling_power_exact, pauli_entangling_power_sampled, SampleStop};

pub const DEFAULT_DT: f64 = 0.2;
pub const DEFAULT_SEM_THRESHOLD: f64 = 2e-2;
pub const DEFAULT_N_MIN: usize = 25;
pub const DEFAULT_MAX_STEPS: usize = 5000;
/// Confidence factor in the stopping rule `z σ / sqrt(N_t) < threshold`.
pub const STOP_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `Σ_i (J_x X_i X_{i+1} + J_y Y_i Y_{i+1} + J_z Z_i Z_{i+1} + h Z_i)`.
    Xyz { jx: f64, jy: f64, jz: f64, h: f64 },
    /// `-Σ_i (J Z_i Z_{i+1} + h Z_i + g X_i)`.
    Tfim { j: f64, h: f64, g: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChainModel {
    pub kind: ModelKind,
    pub n_sites: usize,
}

impl SpinChainModel {
    pub fn new(kind: ModelKind, n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidArgument("a periodic chain needs at least two sites".into()));
        }
        check_dense_limit("spin chain", n_sites, DENSE_LIMIT)?;
        Ok(SpinChainModel { kind, n_sites })
    }
}

/// Real symmetric Hamiltonian; all terms of both models are real in the
/// computational basis.
pub fn build_hamiltonian_real(m: &SpinChainModel) -> DMatrix<f64> {
    let n = m.n_sites;
    let d = 1usize << n;
    let bit = |s: usize, k: usize| (s >> (n - 1 - k)) & 1;
    let zsign = |s: usize, k: usize| if bit(s, k) == 0 { 1.0 } else { -1.0 };
    let flip = |k: usize| 1usize << (n - 1 - k);
    let mut h = DMatrix::<f64>::zeros(d, d);
    // For n = 2 the wrap bond (2,1) repeats bond (1,2); both are kept, as the
    // periodic sum over i = 1..N prescribes.
    let bonds: Vec<(usize, usize)> = (0..n).map(|k| (k, (k + 1) % n)).collect();
    for s in 0..d {
        match m.kind {
            ModelKind::Xyz { jx, jy, jz, h: field } => {
                for &(a, b) in &bonds {
                    let t = s ^ flip(a) ^ flip(b);
                    // Y|s> = i (-1)^s |1-s>, so <t|Y_a Y_b|s> = -z_a(s) z_b(s).
                    h[(t, s)] += jx - jy * zsign(s, a) * zsign(s, b);
                    h[(s, s)] += jz * zsign(s, a) * zsign(s, b);
                }
                for k in 0..n {
                    h[(s, s)] += field * zsign(s, k);
                }
            }
            ModelKind::Tfim { j, h: field, g } => {
                for &(a, b) in &bonds {
                    h[(s, s)] -= j * zsign(s, a) * zsign(s, b);
                }
                for k in 0..n {
                    h[(s, s)] -= field * zsign(s, k);
                    h[(s ^ flip(k), s)] -= g;
                }
            }
        }
    }
    h
}

pub fn build_hamiltonian(m: &SpinChainModel) -> Result<DenseOperator> {
    DenseOperator::new(m.n_sites, build_hamiltonian_real(m).map(|v| C64::new(v, 0.0)))
}

/// Diagonalized Hamiltonian, reused for every evolution time.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_qubits: usize,
    energies: DVector<f64>,
    real_vectors: Option<DMatrix<f64>>,
    complex_vectors: Option<DMatrix<C64>>,
}

impl Propagator {
    pub fn from_real(n_qubits: usize, h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != 1 << n_qubits || !h.is_square() {
            return Err(Error::DimensionMismatch("Hamiltonian dimension".into()));
        }
        let eig = SymmetricEigen::new(h);
        Ok(Propagator {
            n_qubits,
            energies: eig.eigenvalues,
            real_vectors: Some(eig.eigenvectors),
            complex_vectors: None,
        })
    }

    pub fn from_hermitian(h: &DenseOperator) -> Result<Self> {
        h.ensure_hermitian(1e-10)?;
        let (energies, v) = hermitian_eigen(h.matrix());
        Ok(Propagator {
            n_qubits: h.n_qubits(),
            energies,
            real_vectors: None,
            complex_vectors: Some(v),
        })
    }

    pub fn for_model(m: &SpinChainModel) -> Result<Self> {
        Self::from_real(m.n_sites, build_hamiltonian_real(m))
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> Result<DenseOperator> {
        let m = match (&self.real_vectors, &self.complex_vectors) {
            (Some(v), _) => {
                // V cos(Et) V^T - i V sin(Et) V^T with real products.
                let mut vc = v.clone();
                let mut vs = v.clone();
                for (j, e) in self.energies.iter().enumerate() {
                    let (s, c) = (e * t).sin_cos();
                    vc.column_mut(j).scale_mut(c);
                    vs.column_mut(j).scale_mut(s);
                }
                let re = &vc * v.transpose();
                let im = &vs * v.transpose();
                DMatrix::from_fn(re.nrows(), re.ncols(), |r, c| C64::new(re[(r, c)], -im[(r, c)]))
            }
            (None, Some(v)) => {
                let mut scaled = v.clone();
                for (j, e) in self.energies.iter().enumerate() {
                    let ph = C64::from_polar(1.0, -e * t);
                    scaled.column_mut(j).iter_mut().for_each(|x| *x *= ph);
                }
                matmul_adj_right(&scaled, v)
            }
            (None, None) => unreachable!("one basis is always stored"),
        };
        DenseOperator::new(self.n_qubits, m)
    }
}

/// `exp(-i H t)` for a single time.
pub fn evolve_unitary(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    Propagator::from_hermitian(h)?.unitary(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
    /// Sampling error of this value; zero for exact evaluations.
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<SeriesPoint>,
    pub n_steps: usize,
    /// `σ / sqrt(N_t)` of the time series at the last step.
    pub running_sem: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub dt: f64,
    pub sem_threshold: f64,
    pub n_min: usize,
    pub max_steps: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            dt: DEFAULT_DT,
            sem_threshold: DEFAULT_SEM_THRESHOLD,
            n_min: DEFAULT_N_MIN,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTimeAverage {
    pub means: Vec<f64>,
    pub series: Vec<TimeSeries>,
    /// False when `max_steps` was reached first; the means are then partial.
    pub converged: bool,
}

/// Running time average of several observables sampled at `t_k = k dt`,
/// `k = 0, 1, ...`. Stops at the first `N_t >= n_min` where
/// `1.96 σ / sqrt(N_t) < threshold` holds for every observable, treating the
/// series as independent samples.
pub fn long_time_average<F>(rule: &StopRule, mut generator: F) -> Result<LongTimeAverage>
where
    F: FnMut(f64) -> Result<Vec<(f64, f64)>>,
{
    if !(rule.dt > 0.0) || !(rule.sem_threshold > 0.0) || rule.max_steps == 0 {
        return Err(Error::InvalidArgument("dt, threshold and max_steps must be positive".into()));
    }
    let mut series: Vec<TimeSeries> = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for k in 0..rule.max_steps {
        let t = k as f64 * rule.dt;
        let obs = generator(t)?;
        if series.is_empty() {
            series = (0..obs.len())
                .map(|_| TimeSeries {
                    dt: rule.dt,
                    values: Vec::new(),
                    n_steps: 0,
                    running_sem: f64::INFINITY,
                })
                .collect();
            raw = vec![Vec::new(); obs.len()];
        } else if obs.len() != series.len() {
            return Err(Error::InvalidArgument("generator changed the number of observables".into()));
        }
        let mut all_below = true;
        for (j, (value, sem)) in obs.into_iter().enumerate() {
            raw[j].push(value);
            let (_, run) = mean_and_sem(&raw[j]);
            let s = &mut series[j];
            s.values.push(SeriesPoint { t, value, sem });
            s.n_steps = k + 1;
            s.running_sem = run;
            all_below &= STOP_Z * run < rule.sem_threshold;
        }
        if k + 1 >= rule.n_min && all_below {
            return Ok(finish(series, raw, true));
        }
    }
    Ok(finish(series, raw, false))
}

fn finish(series: Vec<TimeSeries>, raw: Vec<Vec<f64>>, converged: bool) -> LongTimeAverage {
    LongTimeAverage {
        means: raw.iter().map(|r| mean_and_sem(r).0).collect(),
        series,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    /// XYZ with fixed `J_x, J_y, h`; the sweep varies `J_z`.
    Xyz,
    /// TFIM with fixed `J, g`; the sweep varies `h`.
    Tfim,
}

/// Couplings held fixed during a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedCouplings {
    pub jx: f64,
    pub jy: f64,
    pub h: f64,
    pub j: f64,
    pub g: f64,
}

impl Default for FixedCouplings {
    fn default() -> Self {
        FixedCouplings {
            jx: 0.75,
            jy: 0.25,
            h: 0.5,
            j: 1.0,
            g: 1.0,
        }
    }
}

impl ModelFamily {
    pub fn model(self, fixed: &FixedCouplings, value: f64) -> ModelKind {
        match self {
            ModelFamily::Xyz => ModelKind::Xyz {
                jx: fixed.jx,
                jy: fixed.jy,
                jz: value,
                h: fixed.h,
            },
            ModelFamily::Tfim => ModelKind::Tfim {
                j: fixed.j,
                h: value,
                g: fixed.g,
            },
        }
    }

    pub fn sweep_name(self) -> &'static str {
        match self {
            ModelFamily::Xyz => "Jz",
            ModelFamily::Tfim => "h",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    Exact,
    /// Pauli strings drawn per time step until the given rule stops.
    Sampled { seed: u64, stop: SampleStop },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub n_sites: usize,
    pub mean_pe: f64,
    pub mean_e: f64,
    pub n_steps: usize,
    /// Pauli strings drawn over the whole series; zero in exact mode.
    pub total_samples: usize,
    pub converged: bool,
}

/// `P_E(U_t)` and `E_lin(U_t)` (with their sampling errors) at one time.
pub fn observables_at(
    prop: &Propagator,
    bp: &Bipartition,
    t: f64,
    mode: &EvalMode,
    step_seed: u64,
) -> Result<((f64, f64), (f64, f64), usize)> {
    let u = prop.unitary(t)?;
    let e = linear_operator_entanglement(&u, bp)?;
    match mode {
        EvalMode::Exact => Ok(((pauli_entangling_power_exact(&u, bp)?.value, 0.0), (e, 0.0), 0)),
        EvalMode::Sampled { stop, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(step_seed);
            let est = pauli_entangling_power_sampled(&u, bp, &mut rng, stop)?;
            Ok(((est.value, est.sem), (e, 0.0), est.n_samples))
        }
    }
}

/// Long-time averages for one sweep value. The subsystem `A` is the first
/// `⌊N/2⌋` sites.
pub fn run_sweep_point(
    family: ModelFamily,
    fixed: &FixedCouplings,
    value: f64,
    n_sites: usize,
    mode: &EvalMode,
    rule: &StopRule,
    point_index: u64,
) -> Result<(SweepRow, LongTimeAverage)> {
    let model = SpinChainModel::new(family.model(fixed, value), n_sites)?;
    let bp = Bipartition::new(n_sites / 2, n_sites - n_sites / 2)?;
    let prop = Propagator::for_model(&model)?;
    let mut samples = 0usize;
    let mut step = 0u64;
    let base_seed = match mode {
        EvalMode::Sampled { seed, .. } => *seed,
        EvalMode::Exact => 0,
    };
    let avg = long_time_average(rule, |t| {
        // One independent stream per (sweep point, time step).
        let step_seed = base_seed ^ (point_index << 40) ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        step += 1;
        let (pe, e, n) = observables_at(&prop, &bp, t, mode, step_seed)?;
        samples += n;
        Ok(vec![pe, e])
    })?;
    let row = SweepRow {
        sweep_value: value,
        n_sites,
        mean_pe: avg.means[0],
        mean_e: avg.means[1],
        n_steps: avg.series[0].n_steps,
        total_samples: samples,
        converged: avg.converged,
    };
    Ok((row, avg))
}

/// Sweep values run in parallel; rows come back in input order.
pub fn run_sweep_experiment(
    family: ModelFamily,
    fixed: &FixedCouplings,
    sweep_values: &[f64],
    n_sites: usize,
    mode: &EvalMode,
    rule: &StopRule,
) -> Result<Vec<SweepRow>> {
    sweep_values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| run_sweep_point(family, fixed, v, n_sites, mode, rule, k as u64).map(|(row, _)| row))
        .collect()
}

pub const CSV_HEADER: &str = "sweep_value,n_sites,mean_PE,mean_E,n_steps,total_samples,converged";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.12},{:.12},{},{},{}",
            self.sweep_value, self.n_sites, self.mean_pe, self.mean_e, self.n_steps, self.total_samples, self.converged
        )
    }
}
