//! Pauli-entangling power: the average linear operator entanglement of
//! `U† P U` over all Pauli strings `P`.
//!
//! The exact evaluator never forms `U^{⊗4}`. Summing over Pauli strings turns
//! the average into
//!
//! ```text
//! P_E = 1 - d^{-4} sum_P ( Tr[ (Tr_B U† P U)^2 ] )^2
//! ```
//!
//! and `Tr_B(U† P U)[i, i'] = Tr(P U_{i'} U_i†)`, where `U_i` is the `d x d_B`
//! block of columns with `A` index `i`. One Pauli decomposition per pair
//! `(i, i')` then yields every `P` at once. The per-Pauli term of this sum is
//! not `E_lin(U† P U)`; only the total agrees, which is what
//! [`pauli_entangling_power_per_pauli`] checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    check_dense_limit, compensated_sum, matmul, matmul_adj_left, matmul_adj_right,
    pauli_coefficients, Bipartition, DenseOperator, C64, ZERO,
};
use crate::magic::linear_magic_unchecked;
use crate::operator::{haar_random_qubits, linear_entropy_of_matrix, UNITARY_TOL};
use crate::pauli::{enumerate_all, sample_uniform, PauliString};

/// Default qubit budget for the exact average.
pub const EXACT_LIMIT: usize = 10;
/// Largest register for quadrupled-space constructions.
pub const QUADRUPLED_LIMIT: usize = 3;
/// Largest register for [`pauli_power_via_q`].
pub const VIA_Q_LIMIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliPowerEstimate {
    pub value: f64,
    pub mode: EstimateMode,
    pub n_samples: usize,
    /// Sample standard deviation over `sqrt(n_samples)`; zero when exact.
    pub sem: f64,
}

/// When to stop drawing Pauli strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleStop {
    /// Stop once `z * sem < target`, after at least `min_samples` and at most
    /// `max_samples` draws.
    Sem {
        target: f64,
        z: f64,
        min_samples: usize,
        max_samples: usize,
    },
    Count(usize),
}

impl Default for SampleStop {
    /// `1.96 sigma / sqrt(n) < 0.02`.
    fn default() -> Self {
        SampleStop::Sem {
            target: 2e-2,
            z: 1.96,
            min_samples: 32,
            max_samples: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    Exact,
    Sampled { seed: u64, stop: SampleStop },
}

fn check_input(u: &DenseOperator, bp: &Bipartition) -> Result<()> {
    if u.n_qubits() != bp.n() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} qubits, bipartition {bp}",
            u.n_qubits()
        )));
    }
    u.ensure_unitary(UNITARY_TOL)
}

pub fn pauli_entangling_power(
    u: &DenseOperator,
    bp: &Bipartition,
    mode: &PowerMode,
) -> Result<PauliPowerEstimate> {
    match mode {
        PowerMode::Exact => pauli_entangling_power_exact(u, bp),
        PowerMode::Sampled { seed, stop } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            pauli_entangling_power_sampled(u, bp, &mut rng, stop)
        }
    }
}

/// Column blocks `U_i` for each index `i` of the kept subsystem.
fn kept_blocks(m: &DMatrix<C64>, bp: &Bipartition, keep_a: bool) -> Vec<DMatrix<C64>> {
    let (d, d_a, d_b) = (bp.d(), bp.d_a(), bp.d_b());
    if keep_a {
        (0..d_a).map(|i| m.columns(i * d_b, d_b).into_owned()).collect()
    } else {
        (0..d_b)
            .map(|j| DMatrix::from_fn(d, d_a, |r, a| m[(r, a * d_b + j)]))
            .collect()
    }
}

pub fn pauli_entangling_power_exact(
    u: &DenseOperator,
    bp: &Bipartition,
) -> Result<PauliPowerEstimate> {
    pauli_entangling_power_exact_with_limit(u, bp, EXACT_LIMIT)
}

pub fn pauli_entangling_power_exact_with_limit(
    u: &DenseOperator,
    bp: &Bipartition,
    limit: usize,
) -> Result<PauliPowerEstimate> {
    check_input(u, bp)?;
    check_dense_limit("exact Pauli-entangling power", bp.n(), limit)?;
    let d = bp.d();
    // Trace out the larger side so the kept dimension is the smaller one.
    let keep_a = bp.n_a() <= bp.n_b();
    let blocks = kept_blocks(u.matrix(), bp, keep_a);
    let k = blocks.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();

    // f[P] = Tr[(Tr_B U†PU)^2] = sum_{i,i'} |Tr(P K_{i',i})|^2, accumulated in
    // fixed chunks so the result does not depend on the thread count.
    const CHUNK: usize = 8;
    let partials: Vec<Vec<f64>> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut f = vec![0.0; d * d];
            for &(i, j) in chunk {
                let kmat = matmul_adj_right(&blocks[j], &blocks[i]);
                let w = if i == j { 1.0 } else { 2.0 };
                for (slot, c) in f.iter_mut().zip(pauli_coefficients(&kmat)) {
                    *slot += w * c.norm_sqr();
                }
            }
            f
        })
        .collect();
    let mut f = vec![0.0; d * d];
    for part in &partials {
        for (a, b) in f.iter_mut().zip(part) {
            *a += b;
        }
    }
    let d4 = (d as f64).powi(4);
    let sum = compensated_sum(f.iter().map(|x| x * x / d4));
    Ok(PauliPowerEstimate {
        value: 1.0 - sum,
        mode: EstimateMode::Exact,
        n_samples: d * d,
        sem: 0.0,
    })
}

/// `E_lin(U† P U)` for one Pauli string; unitarity is the caller's job.
pub(crate) fn evolved_linear_entanglement(u: &DMatrix<C64>, p: &PauliString, bp: &Bipartition) -> f64 {
    let x = matmul_adj_left(u, &p.left_multiply(u));
    linear_entropy_of_matrix(&x, bp.d_a(), bp.d_b())
}

/// Exact average computed one Pauli string at a time.
pub fn pauli_entangling_power_per_pauli(
    u: &DenseOperator,
    bp: &Bipartition,
) -> Result<PauliPowerEstimate> {
    check_input(u, bp)?;
    check_dense_limit("per-Pauli entangling power", bp.n(), 8)?;
    let paulis: Vec<PauliString> = enumerate_all(bp.n())?.collect();
    let values: Vec<f64> = paulis
        .par_iter()
        .map(|p| evolved_linear_entanglement(u.matrix(), p, bp))
        .collect();
    let n = values.len();
    Ok(PauliPowerEstimate {
        value: compensated_sum(values) / n as f64,
        mode: EstimateMode::Exact,
        n_samples: n,
        sem: 0.0,
    })
}

/// Monte-Carlo estimate of the average over all Pauli strings.
///
/// The identity term is known exactly (it stays a product, contributing 0
/// with weight `1/d^2`), so draws are uniform over the non-identity strings and
/// the mean and SEM are scaled by `1 - 1/d^2`. Sampling the identity instead
/// leaves a rare outlier that the SEM rule usually never sees.
///
/// Strings are drawn sequentially from `rng` in batches and evaluated in
/// parallel, so the estimate depends only on the RNG state.
pub fn pauli_entangling_power_sampled<R: Rng + ?Sized>(
    u: &DenseOperator,
    bp: &Bipartition,
    rng: &mut R,
    stop: &SampleStop,
) -> Result<PauliPowerEstimate> {
    check_input(u, bp)?;
    const BATCH: usize = 16;
    let (limit, min_samples) = match *stop {
        SampleStop::Count(n) => (n, n),
        SampleStop::Sem {
            min_samples,
            max_samples,
            target,
            z,
        } => {
            if !(target > 0.0) || !(z > 0.0) {
                return Err(Error::InvalidArgument("SEM target and z must be positive".into()));
            }
            (max_samples.max(2), min_samples.max(2))
        }
    };
    if limit == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let weight = 1.0 - 1.0 / (bp.d() as f64).powi(2);
    let mut values: Vec<f64> = Vec::new();
    loop {
        let take = BATCH.min(limit - values.len());
        let batch: Vec<PauliString> = (0..take)
            .map(|_| loop {
                let p = sample_uniform(bp.n(), rng);
                if !p.is_identity() {
                    break p;
                }
            })
            .collect();
        let evals: Vec<f64> = batch
            .par_iter()
            .map(|p| evolved_linear_entanglement(u.matrix(), p, bp))
            .collect();
        values.extend(evals);
        let sem = weight * mean_and_sem(&values).1;
        if values.len() >= limit {
            break;
        }
        if let SampleStop::Sem { target, z, .. } = *stop {
            if values.len() >= min_samples && z * sem < target {
                break;
            }
        }
    }
    let (mean, sem) = mean_and_sem(&values);
    Ok(PauliPowerEstimate {
        value: weight * mean,
        mode: EstimateMode::Sampled,
        n_samples: values.len(),
        sem: weight * sem,
    })
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Maps each basis index of `H^{⊗4}` to its image under a permutation of
/// copies acting only on the leading factor of `H = C^{d/d_b} ⊗ C^{d_b}`.
/// Output copy `k` takes the leading data of input copy `perm[k]`; `d_b = 1`
/// permutes whole copies.
fn copy_permutation_map(d: usize, d_b: usize, perm: [usize; 4]) -> Vec<usize> {
    (0..d.pow(4))
        .map(|idx| {
            let c = [idx / d.pow(3), (idx / d.pow(2)) % d, (idx / d) % d, idx % d];
            let mut out = 0;
            for k in 0..4 {
                out = out * d + (c[perm[k]] / d_b) * d_b + c[k] % d_b;
            }
            out
        })
        .collect()
}

/// `Q = d^{-2} sum_P P^{⊗4}` on `H^{⊗4}`, copies ordered most significant first.
pub fn q_projector_build(n: usize) -> Result<DenseOperator> {
    check_dense_limit("Q projector", n, QUADRUPLED_LIMIT)?;
    let d = 1usize << n;
    let d4 = d.pow(4);
    let mut q = DMatrix::from_element(d4, d4, ZERO);
    let scale = 1.0 / (d * d) as f64;
    for p in enumerate_all(n)? {
        for col in 0..d4 {
            let c = [col / d.pow(3), (col / d.pow(2)) % d, (col / d) % d, col % d];
            let mut row = 0;
            let mut v = C64::new(scale, 0.0);
            for ck in c {
                let (r, ph) = p.column_entry(ck);
                row = row * d + r;
                v *= ph;
            }
            q[(row, col)] += v;
        }
    }
    DenseOperator::new(4 * n, q)
}

/// `Lambda = sum_sigma sigma^{⊗4}` on one site, a 16 x 16 matrix.
pub fn lambda_single_site() -> DMatrix<C64> {
    let mut l = DMatrix::from_element(16, 16, ZERO);
    for p in enumerate_all(1).expect("one qubit") {
        let m = p.to_dense().expect("small").into_matrix();
        l += m.kronecker(&m).kronecker(&m).kronecker(&m);
    }
    l
}

/// Reorders an operator on `N` sites x 4 copies from site-major to copy-major
/// basis order.
pub(crate) fn site_major_to_copy_major(big: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    // Site-major index: site k contributes 4 bits (copy 1..4), site 1 first.
    // Copy-major index: copy c contributes n bits (site 1..n), copy 1 first.
    let to_copy_major = |idx: usize| {
        let mut out = 0usize;
        for c in 0..4 {
            for k in 0..n {
                let bit = (idx >> (4 * (n - 1 - k) + (3 - c))) & 1;
                out = (out << 1) | bit;
            }
        }
        out
    };
    let dim = big.nrows();
    let perm: Vec<usize> = (0..dim).map(to_copy_major).collect();
    let mut q = DMatrix::from_element(dim, dim, ZERO);
    for c in 0..dim {
        for r in 0..dim {
            let v = big[(r, c)];
            if v != ZERO {
                q[(perm[r], perm[c])] = v;
            }
        }
    }
    q
}

/// `d^{-2} Lambda^{⊗N}` with the tensor factors reordered from site-major to
/// copy-major.
pub fn q_projector_from_lambda(n: usize) -> Result<DenseOperator> {
    check_dense_limit("Q projector", n, QUADRUPLED_LIMIT)?;
    let lam = lambda_single_site();
    let mut big = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for _ in 0..n {
        big = big.kronecker(&lam);
    }
    let d = 1usize << n;
    let q = site_major_to_copy_major(&big, n) * C64::new(1.0 / (d * d) as f64, 0.0);
    DenseOperator::new(4 * n, q)
}

/// `(Z^z ⊗ X^x)|phi+>` squared into `H^{⊗4}`, with `|phi+>` maximally
/// entangled between copies 1 and 2. The `d^2` such vectors span the range of `Q`.
pub fn q_basis_state(n: usize, x: u64, z: u64) -> Result<nalgebra::DVector<C64>> {
    check_dense_limit("Q basis", n, QUADRUPLED_LIMIT)?;
    let d = 1usize << n;
    let zs = PauliString::from_bits(n, 0, z, 0)?;
    let xs = PauliString::from_bits(n, x, 0, 0)?;
    let mut psi = nalgebra::DVector::from_element(d * d, ZERO);
    let amp = 1.0 / (d as f64).sqrt();
    for c in 0..d {
        let (r1, p1) = zs.column_entry(c);
        let (r2, p2) = xs.column_entry(c);
        psi[r1 * d + r2] += p1 * p2 * amp;
    }
    Ok(psi.kronecker(&psi))
}

/// The same quantity in the quadrupled space:
/// `1 - d^{-2} Tr(T^A_{(12)(34)} U†^{⊗4} Q U^{⊗4})`.
pub fn pauli_power_via_q(u: &DenseOperator, bp: &Bipartition) -> Result<f64> {
    check_input(u, bp)?;
    check_dense_limit("quadrupled-space Pauli-entangling power", bp.n(), VIA_Q_LIMIT)?;
    let q = q_projector_build(bp.n())?;
    let m = u.matrix();
    let u4 = m.kronecker(m).kronecker(m).kronecker(m);
    let conj = matmul_adj_left(&u4, &matmul(q.matrix(), &u4));
    let map = copy_permutation_map(bp.d(), bp.d_b(), [1, 0, 3, 2]);
    let tr = compensated_sum(map.iter().enumerate().map(|(i, &j)| conj[(j, i)].re));
    let d = bp.d() as f64;
    Ok(1.0 - tr / (d * d))
}

/// Averages of `M_lin(U (P_A ⊗ 1) U†)` over `P_A`, and likewise for `B`.
pub fn local_pauli_magic_bound(u: &DenseOperator, bp: &Bipartition) -> Result<(f64, f64)> {
    check_input(u, bp)?;
    check_dense_limit("local Pauli magic bound", bp.n(), EXACT_LIMIT)?;
    let n = bp.n();
    let side = |n_side: usize, leading: bool| -> Result<f64> {
        let others = PauliString::identity(n - n_side)?;
        let paulis: Vec<PauliString> = enumerate_all(n_side)?
            .map(|p| {
                if leading {
                    PauliString::tensor(&p, &others)
                } else {
                    PauliString::tensor(&others, &p)
                }
            })
            .collect::<Result<_>>()?;
        let vals: Vec<f64> = paulis
            .par_iter()
            .map(|p| {
                let x = matmul_adj_right(&p.right_multiply(u.matrix()), u.matrix());
                linear_magic_unchecked(&x)
            })
            .collect();
        let count = vals.len() as f64;
        Ok(compensated_sum(vals) / count)
    };
    Ok((side(bp.n_a(), true)?, side(bp.n_b(), false)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalValue {
    pub exact: f64,
    /// `1 - (1 - 1/d^2)/d_A^2 - (1 - 1/d^2)/d_B^2`.
    pub expansion: f64,
}

/// Haar average of the Pauli-entangling power.
pub fn haar_typical_value(d: usize, d_a: usize) -> Result<TypicalValue> {
    if d < 4 || d_a < 2 || !d.is_power_of_two() || !d_a.is_power_of_two() || d % d_a != 0 || d_a >= d {
        return Err(Error::InvalidDimensions(format!(
            "need powers of two with 2 <= d_A < d, got d = {d}, d_A = {d_a}"
        )));
    }
    let (d2, da2) = ((d * d) as f64, (d_a * d_a) as f64);
    let db2 = d2 / da2;
    let exact = (d2 - da2) * (d2 - 10.0) * (da2 - 1.0) / (d2 * da2 * (d2 - 9.0));
    let expansion = 1.0 - (1.0 - 1.0 / d2) / da2 - (1.0 - 1.0 / d2) / db2;
    Ok(TypicalValue { exact, expansion })
}

/// Mean and SEM of the exact Pauli-entangling power over Haar unitaries.
pub fn haar_monte_carlo(bp: &Bipartition, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_random_qubits(bp.n(), &mut rng)?;
        values.push(pauli_entangling_power_exact(&u, bp)?.value);
    }
    Ok(mean_and_sem(&values))
}

/// Conjugacy classes of `S_4`, each with a fixed representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PermutationClass {
    /// `e`
    Identity,
    /// `(34)`
    Transposition,
    /// `(12)(34)`
    DoubleTransposition,
    /// `(123)`
    ThreeCycle,
    /// `(1234)`
    FourCycle,
}

impl PermutationClass {
    pub const ALL: [PermutationClass; 5] = [
        PermutationClass::Identity,
        PermutationClass::Transposition,
        PermutationClass::DoubleTransposition,
        PermutationClass::ThreeCycle,
        PermutationClass::FourCycle,
    ];

    /// Output copy `k` takes input copy `perm[k]`.
    fn representative(self) -> [usize; 4] {
        match self {
            PermutationClass::Identity => [0, 1, 2, 3],
            PermutationClass::Transposition => [0, 1, 3, 2],
            PermutationClass::DoubleTransposition => [1, 0, 3, 2],
            PermutationClass::ThreeCycle => [2, 0, 1, 3],
            PermutationClass::FourCycle => [3, 0, 1, 2],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PermutationClass::Identity => "e",
            PermutationClass::Transposition => "(34)",
            PermutationClass::DoubleTransposition => "(12)(34)",
            PermutationClass::ThreeCycle => "(123)",
            PermutationClass::FourCycle => "(1234)",
        }
    }
}

/// `Tr(Q T_sigma)` for one representative of each class, evaluated numerically.
pub fn q_permutation_traces(n: usize) -> Result<Vec<(PermutationClass, f64)>> {
    check_dense_limit("Q permutation traces", n, 2)?;
    let q = q_projector_build(n)?;
    let d = 1usize << n;
    Ok(PermutationClass::ALL
        .iter()
        .map(|&cls| {
            let map = copy_permutation_map(d, 1, cls.representative());
            let tr = compensated_sum(map.iter().enumerate().map(|(i, &j)| q.matrix()[(j, i)].re));
            (cls, tr)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordTableau;
    use crate::linalg::expm_i_hermitian;
    use crate::operator::haar_random_qubits;

    fn bp(a: usize, b: usize) -> Bipartition {
        Bipartition::new(a, b).unwrap()
    }

    fn xx_rotation(theta: f64) -> DenseOperator {
        // exp(-i theta X⊗X)
        let xx: PauliString = "XX".parse().unwrap();
        let h = xx.to_dense().unwrap().into_matrix() * C64::new(-theta, 0.0);
        DenseOperator::new(2, expm_i_hermitian(&h)).unwrap()
    }

    #[test]
    fn exact_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=5 {
            let c = CliffordTableau::random(n, &mut rng).unwrap().to_dense().unwrap();
            let b = Bipartition::half(n).unwrap();
            assert!(pauli_entangling_power_exact(&c, &b).unwrap().value.abs() < 1e-12);
        }
        let u = xx_rotation(std::f64::consts::PI / 8.0);
        let b = bp(1, 1);
        assert!((pauli_entangling_power_exact(&u, &b).unwrap().value - 0.25).abs() < 1e-12);
        assert!((pauli_entangling_power_per_pauli(&u, &b).unwrap().value - 0.25).abs() < 1e-12);
        for theta in [0.1, 0.3, 0.7] {
            let v = pauli_entangling_power_exact(&xx_rotation(theta), &b).unwrap().value;
            assert!((v - (4.0 * theta).sin().powi(2) / 4.0).abs() < 1e-12);
        }
        let local = haar_random_qubits(2, &mut rng)
            .unwrap()
            .kron(&haar_random_qubits(1, &mut rng).unwrap());
        assert!(pauli_entangling_power_exact(&local, &bp(2, 1)).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn partial_trace_route_matches_per_pauli_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=5 {
            for n_a in 1..n {
                let b = bp(n_a, n - n_a);
                let u = haar_random_qubits(n, &mut rng).unwrap();
                let fast = pauli_entangling_power_exact(&u, &b).unwrap().value;
                let slow = pauli_entangling_power_per_pauli(&u, &b).unwrap().value;
                assert!((fast - slow).abs() < 1e-12, "{b}: {fast} vs {slow}");
                assert!((0.0..1.0).contains(&fast));
            }
        }
    }

    #[test]
    fn errors() {
        let u = DenseOperator::identity(2).scale(C64::new(2.0, 0.0));
        assert!(matches!(
            pauli_entangling_power_exact(&u, &bp(1, 1)),
            Err(Error::NotUnitary { .. })
        ));
        let big = DenseOperator::identity(11);
        assert!(matches!(
            pauli_entangling_power_exact(&big, &bp(5, 6)),
            Err(Error::SizeLimit { .. })
        ));
        assert!(haar_typical_value(8, 3).is_err());
        assert!(haar_typical_value(4, 4).is_err());
    }

    #[test]
    fn invariance_under_clifford_post_and_local_pre_processing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=3 {
            for n_a in 1..n {
                let b = bp(n_a, n - n_a);
                let u = haar_random_qubits(n, &mut rng).unwrap();
                let c = CliffordTableau::random(n, &mut rng).unwrap().to_dense().unwrap();
                let v = haar_random_qubits(n_a, &mut rng)
                    .unwrap()
                    .kron(&haar_random_qubits(n - n_a, &mut rng).unwrap());
                let moved = c.mul(&u).unwrap().mul(&v).unwrap();
                let a = pauli_entangling_power_exact(&u, &b).unwrap().value;
                let m = pauli_entangling_power_exact(&moved, &b).unwrap().value;
                assert!((a - m).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampled_estimator_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = bp(2, 2);
        for k in 0..20 {
            let u = haar_random_qubits(4, &mut rng).unwrap();
            let exact = pauli_entangling_power_exact(&u, &b).unwrap().value;
            let est = pauli_entangling_power(
                &u,
                &b,
                &PowerMode::Sampled {
                    seed: 100 + k,
                    stop: SampleStop::default(),
                },
            )
            .unwrap();
            assert_eq!(est.mode, EstimateMode::Sampled);
            assert!(1.96 * est.sem < 2e-2);
            assert!((est.value - exact).abs() < 3.0 * est.sem, "{} vs {exact}", est.value);
        }
        let u = haar_random_qubits(4, &mut rng).unwrap();
        let mode = PowerMode::Sampled {
            seed: 9,
            stop: SampleStop::Count(50),
        };
        let a = pauli_entangling_power(&u, &b, &mode).unwrap();
        let c = pauli_entangling_power(&u, &b, &mode).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.n_samples, 50);
    }

    #[test]
    fn q_projector_properties() {
        let q1 = q_projector_build(1).unwrap();
        let m = q1.matrix();
        assert!((m.trace().re - 4.0).abs() < 1e-12);
        assert!((matmul(m, m) - m).norm() < 1e-12);
        let basis: Vec<_> = (0..2u64)
            .flat_map(|x| (0..2u64).map(move |z| q_basis_state(1, x, z).unwrap()))
            .collect();
        for (i, v) in basis.iter().enumerate() {
            assert!((m * v - v).norm() < 1e-12);
            for (j, w) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v.dotc(w) - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        let q2 = q_projector_build(2).unwrap();
        let l2 = q_projector_from_lambda(2).unwrap();
        let diff = (q2.matrix() - l2.matrix()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!((q2.matrix().trace().re - 16.0).abs() < 1e-12);
    }

    #[test]
    fn quadrupled_space_formula_matches_exact() {
        let b = bp(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = CliffordTableau::random(2, &mut rng).unwrap().to_dense().unwrap();
        assert!(pauli_power_via_q(&c, &b).unwrap().abs() < 1e-10);
        let u = xx_rotation(std::f64::consts::PI / 8.0);
        assert!((pauli_power_via_q(&u, &b).unwrap() - 0.25).abs() < 1e-10);
        for _ in 0..5 {
            let u = haar_random_qubits(2, &mut rng).unwrap();
            let q = pauli_power_via_q(&u, &b).unwrap();
            let e = pauli_entangling_power_per_pauli(&u, &b).unwrap().value;
            assert!((q - e).abs() < 1e-10);
        }
        assert!(pauli_power_via_q(&DenseOperator::identity(3), &bp(1, 2)).is_err());
    }

    #[test]
    fn local_magic_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = CliffordTableau::random(3, &mut rng).unwrap().to_dense().unwrap();
        let (a, b) = local_pauli_magic_bound(&c, &bp(1, 2)).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        let u = xx_rotation(std::f64::consts::PI / 8.0);
        let (a, b) = local_pauli_magic_bound(&u, &bp(1, 1)).unwrap();
        assert!((a - 0.25).abs() < 1e-10 && (b - 0.25).abs() < 1e-10);
        for k in 0..50 {
            let n_a = 1 + k % 2;
            let b = bp(n_a, 3 - n_a);
            let u = haar_random_qubits(3, &mut rng).unwrap();
            let (ba, bb) = local_pauli_magic_bound(&u, &b).unwrap();
            let pe = pauli_entangling_power_exact(&u, &b).unwrap().value;
            assert!(ba.min(bb) >= pe - 1e-10);
        }
    }

    #[test]
    fn typical_value_examples() {
        let t = haar_typical_value(4, 2).unwrap();
        assert!((t.exact - 27.0 / 56.0).abs() < 1e-12);
        let t = haar_typical_value(16, 4).unwrap();
        assert!((t.exact - 885600.0 / 1011712.0).abs() < 1e-12);
        for n in [10, 14, 20] {
            let d = 1usize << n;
            let t = haar_typical_value(d, 1 << (n / 2)).unwrap();
            let lead = 1.0 - 2.0 / d as f64;
            assert!((t.exact - lead).abs() * (d as f64) < 0.05);
            assert!((t.expansion - t.exact).abs() * (d as f64) < 0.05);
        }
    }

    #[test]
    fn typical_value_small_monte_carlo() {
        let (mean, sem) = haar_monte_carlo(&bp(1, 1), 400, 7).unwrap();
        assert!((mean - 27.0 / 56.0).abs() < 3.0 * sem, "{mean} ± {sem}");
    }

    #[test]
    fn permutation_traces() {
        let expect = |d: f64, c: PermutationClass| match c {
            PermutationClass::Identity | PermutationClass::DoubleTransposition => d * d,
            PermutationClass::Transposition | PermutationClass::FourCycle => d,
            PermutationClass::ThreeCycle => 1.0,
        };
        for n in 1..=2 {
            let d = (1 << n) as f64;
            for (cls, v) in q_permutation_traces(n).unwrap() {
                assert!((v - expect(d, cls)).abs() < 1e-10, "{}: {v}", cls.label());
            }
        }
    }
}
