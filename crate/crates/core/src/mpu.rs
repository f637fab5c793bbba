//! Uniform matrix product unitaries on periodic qubit chains.
//!
//! A tensor `A[l, r, o, i]` (left bond, right bond, output, input) defines
//!
//! ```text
//! U[(o_1..o_N), (i_1..i_N)] = Tr( A^{o_1 i_1} A^{o_2 i_2} ... A^{o_N i_N} )
//! ```
//!
//! with `A^{oi}` the `χ x χ` bond matrix. The Pauli-entangling power of such a
//! `U` is a trace of products of two transfer matrices of size `χ^8`.
//!
//! Index contract (repeated indices summed):
//!
//! ```text
//! K_σ[(l l̄), (r r̄); i, o'] = A[l, r, m, i] σ[m', m] conj(A[l̄, r̄, m', o'])   local U†σU
//! F_σ = K_σ[.., i, i]                                                       local trace
//! G_σ = K_σ[.., i1, i2] ⊗ K_σ[.., i2, i1]                                   local Tr(O O)
//! E_A = Σ_σ G_σ ⊗ G_σ,   E_B = Σ_σ F_σ ⊗ F_σ ⊗ F_σ ⊗ F_σ
//! P_E = 1 - 16^{-N} Tr( E_A^{N_A} E_B^{N_B} )
//! ```
//!
//! This is `1 - d^{-4} Σ_P (Tr_A[(Tr_B U†PU)^2])^2` written site by site:
//! two copies of `U†PU` give `Tr_A[(Tr_B ·)^2]`, the other two copies square
//! it, and the sum over `P` factorizes into per-site sums over `σ`.
//! The `A` region is the leading block of sites, so the trace runs over
//! `N_A` copies of `E_A` followed by `N_B` copies of `E_B`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::{data_lines, parse_f64};
use crate::linalg::{check_dense_limit, matmul, max_abs_diff_identity, DenseOperator, C64, DENSE_LIMIT, ZERO};
use crate::operator::UNITARY_TOL;
use crate::pauli::{enumerate_all, PauliString};
use crate::power::site_major_to_copy_major;

/// Largest transfer-matrix dimension `χ^8` (χ ≤ 3).
pub const TRANSFER_DIM_LIMIT: usize = 6561;
/// Relative gap below which the leading eigenvalue counts as degenerate.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MpuTensor {
    chi: usize,
    /// Row-major over `(l, r, o, i)`.
    data: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpuMode {
    Finite,
    Thermodynamic,
}

#[derive(Debug, Clone)]
pub struct TransferMatrixPair {
    pub t_a: DMatrix<C64>,
    pub t_b: DMatrix<C64>,
}

impl MpuTensor {
    pub fn new(chi: usize, data: Vec<C64>) -> Result<Self> {
        if chi == 0 {
            return Err(Error::InvalidDimensions("bond dimension must be positive".into()));
        }
        if data.len() != chi * chi * 4 {
            return Err(Error::InvalidDimensions(format!(
                "bond dimension {chi} needs {} entries, got {}",
                chi * chi * 4,
                data.len()
            )));
        }
        Ok(MpuTensor { chi, data })
    }

    pub fn from_fn(chi: usize, f: impl Fn(usize, usize, usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(chi * chi * 4);
        for l in 0..chi {
            for r in 0..chi {
                for o in 0..2 {
                    for i in 0..2 {
                        data.push(f(l, r, o, i));
                    }
                }
            }
        }
        Self::new(chi, data)
    }

    /// Bond dimension one: the product `u^{⊗N}`.
    pub fn from_single_qubit(u: &DMatrix<C64>) -> Result<Self> {
        if u.shape() != (2, 2) {
            return Err(Error::InvalidDimensions("single-qubit gate must be 2 x 2".into()));
        }
        Self::from_fn(1, |_, _, o, i| u[(o, i)])
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn get(&self, l: usize, r: usize, o: usize, i: usize) -> C64 {
        self.data[((l * self.chi + r) * 2 + o) * 2 + i]
    }

    /// Bond matrix `A^{oi}`.
    fn bond_matrix(&self, o: usize, i: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.chi, self.chi, |l, r| self.get(l, r, o, i))
    }

    /// Applies a single-qubit gate `g` after the tensor on every site.
    pub fn then_local(&self, g: &DMatrix<C64>) -> Result<Self> {
        if g.shape() != (2, 2) {
            return Err(Error::InvalidDimensions("single-qubit gate must be 2 x 2".into()));
        }
        Self::from_fn(self.chi, |l, r, o, i| {
            g[(o, 0)] * self.get(l, r, 0, i) + g[(o, 1)] * self.get(l, r, 1, i)
        })
    }

    /// Text form: first data line `chi`, then the `4 χ^2` entries as `re im`
    /// pairs in row-major `(l, r, o, i)` order, any whitespace layout.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty tensor file".into()))?;
        let chi: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: expected bond dimension, found {header:?}")))?;
        let mut nums = Vec::new();
        for (ln, line) in lines {
            for tok in line.split_whitespace() {
                nums.push(parse_f64(tok, ln)?);
            }
        }
        if nums.len() != chi * chi * 8 {
            return Err(Error::Parse(format!(
                "bond dimension {chi} needs {} numbers, found {}",
                chi * chi * 8,
                nums.len()
            )));
        }
        Self::new(chi, nums.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.chi);
        for chunk in self.data.chunks(4) {
            let row: Vec<String> = chunk.iter().map(|v| format!("{:.17e} {:.17e}", v.re, v.im)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Periodic closure of `n_sites` copies, without any unitarity check.
pub fn closure_matrix(a: &MpuTensor, n_sites: usize) -> Result<DMatrix<C64>> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("closure needs at least one site".into()));
    }
    check_dense_limit("MPU closure", n_sites, DENSE_LIMIT)?;
    let blocks: Vec<DMatrix<C64>> = (0..4).map(|k| a.bond_matrix(k >> 1, k & 1)).collect();
    // partial[(o_prefix, i_prefix)] = product of bond matrices along the prefix.
    let mut partial: Vec<DMatrix<C64>> = blocks.clone();
    let mut len = 1;
    while len < n_sites {
        let side = 1usize << len;
        let mut next = Vec::with_capacity(partial.len() * 4);
        for o in 0..side * 2 {
            for i in 0..side * 2 {
                let prev = &partial[(o >> 1) * side + (i >> 1)];
                next.push(matmul(prev, &blocks[((o & 1) << 1) | (i & 1)]));
            }
        }
        partial = next;
        len += 1;
    }
    let d = 1usize << n_sites;
    Ok(DMatrix::from_fn(d, d, |o, i| partial[o * d + i].trace()))
}

/// Dense unitary on `n_sites` qubits, rejected unless unitary within `1e-8`.
pub fn mpu_to_dense(a: &MpuTensor, n_sites: usize) -> Result<DenseOperator> {
    let m = closure_matrix(a, n_sites)?;
    let deviation = max_abs_diff_identity(&matmul(&m.adjoint(), &m));
    if !(deviation <= UNITARY_TOL) {
        return Err(Error::NotUnitaryClosure { n_sites, deviation });
    }
    DenseOperator::new(n_sites, m)
}

/// Bond-dimension-4 tensor `Π[α, β, o, i] = δ_{αβ} σ_α[o, i]`. Chaining four of
/// them around a loop gives `Λ = Σ_σ σ^{⊗4}`.
pub fn build_lambda_site_tensor() -> MpuTensor {
    let paulis: Vec<DMatrix<C64>> = enumerate_all(1)
        .expect("one qubit")
        .map(|p| p.to_dense().expect("small").into_matrix())
        .collect();
    MpuTensor::from_fn(4, |a, b, o, i| if a == b { paulis[a][(o, i)] } else { ZERO }).expect("shape")
}

/// `Λ^{⊗N}` in copy-major order, from closures of the `Π` tensor; equals `d^2 Q`.
pub fn lambda_closure(n_sites: usize) -> Result<DMatrix<C64>> {
    check_dense_limit("Lambda closure", n_sites, 3)?;
    let lam = closure_matrix(&build_lambda_site_tensor(), 4)?;
    let mut big = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for _ in 0..n_sites {
        big = big.kronecker(&lam);
    }
    Ok(site_major_to_copy_major(&big, n_sites))
}

/// `K_σ[(i, o')]` as `χ^2 x χ^2` bond matrices, for each of the four `(i, o')`.
fn local_operator_blocks(a: &MpuTensor, sigma: &PauliString) -> Vec<DMatrix<C64>> {
    let chi = a.chi;
    let c2 = chi * chi;
    let mut out = Vec::with_capacity(4);
    for i in 0..2 {
        for op in 0..2 {
            let mut k = DMatrix::from_element(c2, c2, ZERO);
            for m in 0..2 {
                // Column m of σ has its single entry in row m'.
                let (mp, val) = sigma.column_entry(m);
                for l in 0..chi {
                    for r in 0..chi {
                        let x = a.get(l, r, m, i) * val;
                        if x == ZERO {
                            continue;
                        }
                        for lb in 0..chi {
                            for rb in 0..chi {
                                k[(l * chi + lb, r * chi + rb)] += x * a.get(lb, rb, mp, op).conj();
                            }
                        }
                    }
                }
            }
            out.push(k);
        }
    }
    out
}

/// The two transfer matrices of size `χ^8`.
pub fn transfer_matrices(a: &MpuTensor) -> Result<TransferMatrixPair> {
    let dim = a.chi.pow(8);
    if dim > TRANSFER_DIM_LIMIT {
        return Err(Error::SizeLimit {
            what: "transfer matrix dimension chi^8",
            n: dim,
            limit: TRANSFER_DIM_LIMIT,
        });
    }
    let mut t_a = DMatrix::from_element(dim, dim, ZERO);
    let mut t_b = DMatrix::from_element(dim, dim, ZERO);
    for sigma in enumerate_all(1)? {
        let k = local_operator_blocks(a, &sigma);
        let kk = |i: usize, op: usize| &k[i * 2 + op];
        let f = kk(0, 0) + kk(1, 1);
        let mut g = DMatrix::from_element(f.nrows().pow(2), f.ncols().pow(2), ZERO);
        for i1 in 0..2 {
            for i2 in 0..2 {
                g += kk(i1, i2).kronecker(kk(i2, i1));
            }
        }
        t_a += g.kronecker(&g);
        let ff = f.kronecker(&f);
        t_b += ff.kronecker(&ff);
    }
    Ok(TransferMatrixPair { t_a, t_b })
}

fn matrix_power_times(m: &DMatrix<C64>, k: usize, acc: DMatrix<C64>) -> DMatrix<C64> {
    (0..k).fold(acc, |acc, _| matmul(&acc, m))
}

/// Finite-size value `1 - 16^{-N} Tr(E_A^{N_A} E_B^{N_B})`.
pub fn pauli_power_mpu_finite(t: &TransferMatrixPair, n_a: usize, n_b: usize) -> Result<f64> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::InvalidArgument("both regions need at least one site".into()));
    }
    let dim = t.t_a.nrows();
    // Scale by 1/16 per factor to keep entries O(1).
    let ta = &t.t_a / C64::new(16.0, 0.0);
    let tb = &t.t_b / C64::new(16.0, 0.0);
    let pa = matrix_power_times(&ta, n_a - 1, ta.clone());
    let prod = matrix_power_times(&tb, n_b, pa);
    let tr = (0..dim).map(|i| prod[(i, i)]).sum::<C64>();
    Ok(1.0 - tr.re)
}

#[derive(Debug, Clone)]
struct Dominant {
    mu: C64,
    /// Largest modulus among the remaining eigenvalues.
    sub: f64,
    right: DVector<C64>,
    left: DVector<C64>,
}

/// Squarings used to isolate the leading eigenvalue: a relative gap `g`
/// suppresses the rest of the spectrum by `(1 - g)^{2^48}`, far below
/// rounding for any `g >= GAP_TOL`.
const SQUARINGS: usize = 48;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Leading eigenpair from the rank-one limit of `M^{2^k}`.
///
/// The normalized power converges to `r l^T / (l^T r)` up to a phase when the
/// eigenvalue of largest modulus is unique; otherwise it stays of higher rank
/// and the eigenvalue is reported as degenerate.
fn dominant(m: &DMatrix<C64>) -> Result<Dominant> {
    let dim = m.nrows();
    let mut p = m.clone();
    for _ in 0..SQUARINGS {
        let s = max_abs(&p);
        if s == 0.0 {
            break;
        }
        p /= C64::new(s, 0.0);
        p = matmul(&p, &p);
    }
    let s = max_abs(&p);
    if s == 0.0 {
        return Ok(Dominant {
            mu: ZERO,
            sub: 0.0,
            right: DVector::from_element(dim, ZERO),
            left: DVector::from_element(dim, ZERO),
        });
    }
    p /= C64::new(s, 0.0);
    let (mut pi, mut pj, mut best) = (0, 0, 0.0);
    for j in 0..dim {
        for i in 0..dim {
            if p[(i, j)].norm() > best {
                (pi, pj, best) = (i, j, p[(i, j)].norm());
            }
        }
    }
    let right = p.column(pj).into_owned();
    let left = p.row(pi).transpose();
    let rank_one = &right * left.transpose() / p[(pi, pj)];
    let rest = max_abs(&(&p - rank_one));
    let overlap = left.dot(&right);
    let mr = m * &right;
    let mu = left.dot(&mr) / overlap;
    if rest > 1e-6 || overlap.norm() < 1e-10 {
        // Several eigenvalues share the largest modulus (or a Jordan block).
        return Err(Error::DegenerateLeadingEigenvalue {
            mu1: mu.norm(),
            mu2: mu.norm(),
        });
    }
    let resid = (mr - &right * mu).norm() / right.norm();
    if resid > 1e-8 * mu.norm().max(1.0) {
        return Err(Error::DegenerateLeadingEigenvalue {
            mu1: mu.norm(),
            mu2: mu.norm(),
        });
    }
    let deflated = m - (&right * left.transpose()) * (mu / overlap);
    Ok(Dominant {
        mu,
        sub: spectral_radius(&deflated),
        right,
        left,
    })
}

/// `‖M^n‖^{1/n}` for `n = 2^20`, tracking the scale in logs.
fn spectral_radius(m: &DMatrix<C64>) -> f64 {
    const K: usize = 20;
    let mut p = m.clone();
    let mut log_scale = 0.0;
    for _ in 0..K {
        let s = max_abs(&p);
        if s == 0.0 {
            return 0.0;
        }
        p /= C64::new(s, 0.0);
        log_scale = 2.0 * (log_scale + s.ln());
        p = matmul(&p, &p);
    }
    let s = max_abs(&p);
    if s == 0.0 {
        return 0.0;
    }
    ((log_scale + s.ln()) / (1u64 << K) as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingEigenvalues {
    /// Leading eigenvalue of `E_A / 16`.
    pub mu_a: C64,
    /// Leading eigenvalue of `E_B / 16`.
    pub mu_b: C64,
    /// Largest modulus of the rest of the spectrum of `E_A / 16`.
    pub sub_a: f64,
    pub sub_b: f64,
}

pub fn leading_eigenvalues(t: &TransferMatrixPair) -> Result<LeadingEigenvalues> {
    let a = dominant(&(&t.t_a / C64::new(16.0, 0.0)))?;
    let b = dominant(&(&t.t_b / C64::new(16.0, 0.0)))?;
    Ok(LeadingEigenvalues {
        mu_a: a.mu,
        mu_b: b.mu,
        sub_a: a.sub,
        sub_b: b.sub,
    })
}

/// `N_A, N_B -> ∞` limit from the leading eigenpairs.
pub fn pauli_power_mpu_thermodynamic(t: &TransferMatrixPair) -> Result<f64> {
    let a = dominant(&(&t.t_a / C64::new(16.0, 0.0)))?;
    let b = dominant(&(&t.t_b / C64::new(16.0, 0.0)))?;
    let below = |mu: C64| mu.norm() < 1.0 - GAP_TOL;
    if below(a.mu) || below(b.mu) {
        return Ok(1.0);
    }
    for mu in [a.mu, b.mu] {
        if (mu - C64::new(1.0, 0.0)).norm() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "leading eigenvalue {mu} has unit modulus but is not 1; finite values oscillate"
            )));
        }
    }
    let num = a.left.dot(&b.right) * b.left.dot(&a.right);
    let den = a.left.dot(&a.right) * b.left.dot(&b.right);
    Ok(1.0 - (num / den).re)
}

pub fn pauli_power_mpu(a: &MpuTensor, n_a: usize, n_b: usize, mode: MpuMode) -> Result<f64> {
    let t = transfer_matrices(a)?;
    match mode {
        MpuMode::Finite => pauli_power_mpu_finite(&t, n_a, n_b),
        MpuMode::Thermodynamic => pauli_power_mpu_thermodynamic(&t),
    }
}

/// Test tensors.
pub mod examples {
    use super::*;

    fn h() -> DMatrix<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|v| C64::new(v, 0.0)))
    }

    /// Cyclic shift `|s_1 .. s_N> -> |s_2 .. s_N s_1>`.
    pub fn shift() -> MpuTensor {
        MpuTensor::from_fn(2, |l, r, o, i| if o == r && i == l { C64::new(1.0, 0.0) } else { ZERO })
            .expect("shape")
    }

    /// `H^{⊗N}` after a ring of controlled-Z gates: a Clifford cellular automaton.
    pub fn clifford_automaton() -> MpuTensor {
        // The bond carries the previous site's bit: phase (-1)^{l i}.
        let cz = MpuTensor::from_fn(2, |l, r, o, i| {
            if o == i && r == i {
                C64::new(if l & i == 1 { -1.0 } else { 1.0 }, 0.0)
            } else {
                ZERO
            }
        })
        .expect("shape");
        cz.then_local(&h()).expect("2 x 2")
    }

    /// The Clifford automaton followed by a `T` gate on every site.
    pub fn t_layer_automaton() -> MpuTensor {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
        ]));
        clifford_automaton().then_local(&t).expect("2 x 2")
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use crate::linalg::Bipartition;
    use crate::operator::haar_random_unitary;
    use crate::power::{pauli_entangling_power_exact, q_projector_build};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_pe(a: &MpuTensor, n_a: usize, n_b: usize) -> f64 {
        let u = mpu_to_dense(a, n_a + n_b).unwrap();
        pauli_entangling_power_exact(&u, &Bipartition::new(n_a, n_b).unwrap()).unwrap().value
    }

    #[test]
    fn single_site_tensor_gives_tensor_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_random_unitary(2, &mut rng).unwrap();
        let a = MpuTensor::from_single_qubit(u.matrix()).unwrap();
        let dense = mpu_to_dense(&a, 3).unwrap();
        let expected = u.kron(&u).kron(&u);
        assert!((dense.matrix() - expected.matrix()).norm() < 1e-12);
        for (n_a, n_b) in [(1, 1), (2, 3), (3, 3)] {
            assert!(pauli_power_mpu(&a, n_a, n_b, MpuMode::Finite).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn shift_closure_is_the_translation() {
        let u = mpu_to_dense(&shift(), 3).unwrap();
        for s in 0..8usize {
            let shifted = ((s << 1) & 7) | (s >> 2);
            assert_eq!(u.matrix()[(shifted, s)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn clifford_automata_are_unitary_and_powerless() {
        for a in [shift(), clifford_automaton()] {
            for n in 2..=6 {
                assert!(mpu_to_dense(&a, n).is_ok());
            }
            for (n_a, n_b) in [(2, 2), (2, 3), (3, 3)] {
                let v = pauli_power_mpu(&a, n_a, n_b, MpuMode::Finite).unwrap();
                assert!(v.abs() < 1e-10, "{v}");
                assert!(dense_pe(&a, n_a, n_b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn random_tensor_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = haar_random_unitary(8, &mut rng).unwrap();
        let a = MpuTensor::from_fn(2, |l, r, o, i| g.matrix()[(l * 4 + r * 2 + o, i)] * 0.9).unwrap();
        assert!(matches!(mpu_to_dense(&a, 3), Err(Error::NotUnitaryClosure { .. })));
    }

    #[test]
    fn transfer_contraction_matches_dense() {
        let a = t_layer_automaton();
        for (n_a, n_b) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 2), (3, 3), (1, 5)] {
            let mpu = pauli_power_mpu(&a, n_a, n_b, MpuMode::Finite).unwrap();
            let dense = dense_pe(&a, n_a, n_b);
            assert!((mpu - dense).abs() < 1e-8, "{n_a}|{n_b}: {mpu} vs {dense}");
        }
        assert!(dense_pe(&a, 2, 2) > 1e-3);
    }

    #[test]
    fn lambda_tensor_structure_and_closure() {
        let pi = build_lambda_site_tensor();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!((0..4).all(|k| pi.get(a, b, k >> 1, k & 1) == ZERO));
                }
            }
        }
        let lam = closure_matrix(&pi, 4).unwrap();
        assert!((lam.trace() - C64::new(16.0, 0.0)).norm() < 1e-12);
        assert!((&lam - crate::power::lambda_single_site()).norm() < 1e-12);
        for n in 1..=2 {
            let d2 = (1usize << (2 * n)) as f64;
            let q = q_projector_build(n).unwrap().into_matrix() * C64::new(d2, 0.0);
            let diff = (lambda_closure(n).unwrap() - q).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn thermodynamic_limit_is_approached() {
        let a = t_layer_automaton();
        let t = transfer_matrices(&a).unwrap();
        let limit = pauli_power_mpu_thermodynamic(&t).unwrap();
        let lead = leading_eigenvalues(&t).unwrap();
        let ratio = (lead.sub_a / lead.mu_a.norm()).max(lead.sub_b / lead.mu_b.norm());
        assert!(ratio < 1.0 - GAP_TOL);
        assert!((limit - 175.0 / 256.0).abs() < 1e-10, "{limit}");
        // At k = 1 the two-site ring wraps the light cone and the nilpotent
        // part of the transfer matrices still contributes.
        let mut prev = f64::INFINITY;
        for k in 2..=8 {
            let r = (pauli_power_mpu_finite(&t, k, k).unwrap() - limit).abs();
            assert!(r <= 10.0 * ratio.powi(k as i32) + 1e-12, "k={k}: {r}");
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn clifford_automata_have_no_isolated_leading_eigenvalue() {
        for a in [shift(), clifford_automaton()] {
            let t = transfer_matrices(&a).unwrap();
            assert!(matches!(
                pauli_power_mpu(&a, 1, 1, MpuMode::Thermodynamic),
                Err(Error::DegenerateLeadingEigenvalue { .. })
            ) || pauli_power_mpu_thermodynamic(&t).unwrap().abs() < 1e-8);
        }
        let id = MpuTensor::from_single_qubit(&DMatrix::identity(2, 2)).unwrap();
        assert!(pauli_power_mpu(&id, 1, 1, MpuMode::Thermodynamic).unwrap().abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let a = t_layer_automaton();
        let back = MpuTensor::parse(&format!("# tensor\n{}", a.to_text())).unwrap();
        assert_eq!(back, a);
        assert!(matches!(MpuTensor::parse("1\n1 0 0 0\n"), Err(Error::Parse(_))));
    }
}
