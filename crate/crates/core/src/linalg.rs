//! Dense complex operators on qubit registers.
//!
//! Basis states are indexed with site 1 as the most significant bit, so for a
//! bipartition into a leading block `A` and trailing block `B` the index of
//! `|a>|b>` is `a * d_B + b`.

use std::fmt;

use matrixmultiply::CGemmOption;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default upper bound on the number of qubits for dense matrices.
pub const DENSE_LIMIT: usize = 12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// `i^k` for `k` taken mod 4.
pub(crate) fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Split of an `N`-qubit register into the leading `n_a` and trailing `n_b` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bipartition {
    n_a: usize,
    n_b: usize,
}

impl Bipartition {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::InvalidDimensions(format!(
                "bipartition needs both sides non-empty, got ({n_a}, {n_b})"
            )));
        }
        if n_a + n_b > 62 {
            return Err(Error::SizeLimit {
                what: "bipartition",
                n: n_a + n_b,
                limit: 62,
            });
        }
        Ok(Self { n_a, n_b })
    }

    /// Leading `floor(n/2)` qubits as `A`, the rest as `B`.
    pub fn half(n: usize) -> Result<Self> {
        Self::new(n / 2, n - n / 2)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn d(&self) -> usize {
        1 << self.n()
    }

    pub fn d_a(&self) -> usize {
        1 << self.n_a
    }

    pub fn d_b(&self) -> usize {
        1 << self.n_b
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.n_a, self.n_b)
    }
}

/// A `2^N x 2^N` complex matrix acting on `N` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let d = 1usize
            .checked_shl(n_qubits as u32)
            .filter(|_| n_qubits < 31)
            .ok_or(Error::SizeLimit {
                what: "dense operator",
                n: n_qubits,
                limit: 30,
            })?;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} for {n_qubits} qubits, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Wraps a square matrix whose dimension must be a power of two.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "dimension {d} is not a power of two"
            )));
        }
        Self::new(d.trailing_zeros() as usize, matrix)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * s,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: matmul(&self.matrix, &other.matrix),
        })
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `|O†O - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let g = matmul_adj_left(&self.matrix, &self.matrix);
        max_abs_diff_identity(&g)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let m = &self.matrix;
        let d = m.nrows();
        let mut dev: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > tol {
            Err(Error::NotUnitary { deviation })
        } else {
            Ok(())
        }
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > tol {
            Err(Error::NotHermitian { deviation })
        } else {
            Ok(())
        }
    }

    /// Frobenius distance to `other` divided by `sqrt(d)`.
    pub fn normalized_distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm() / (self.dim() as f64).sqrt()
    }

    /// `Tr(P O)` for every phase-0 Pauli string `P`, indexed by
    /// [`crate::pauli::PauliString::index`].
    pub fn pauli_coefficients(&self) -> Vec<C64> {
        pauli_coefficients(&self.matrix)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }
}

pub(crate) fn check_qubits(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(Error::QubitMismatch { left, right })
    } else {
        Ok(())
    }
}

pub(crate) fn check_dense_limit(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::SizeLimit { what, n, limit })
    } else {
        Ok(())
    }
}

pub(crate) fn max_abs_diff_identity(g: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((g[(i, j)] - target).norm());
        }
    }
    dev
}

fn gemm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    // nalgebra storage is column-major: element (i, j) lives at i + j * nrows.
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(k, b.nrows(), "inner dimensions differ");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; the strides
    // address exactly the storage of `a`, `b` and the freshly allocated `c`.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// `A B`.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(a, b)
}

/// `A† B`.
pub fn matmul_adj_left(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(&a.adjoint(), b)
}

/// `A B†`.
pub fn matmul_adj_right(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(a, &b.adjoint())
}

/// In-place Walsh-Hadamard transform: `out[z] = sum_c (-1)^{z.c} in[c]`.
pub(crate) fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let s = *a + *b;
                let t = *a - *b;
                *a = s;
                *b = t;
            }
        }
        h *= 2;
    }
}

/// `Tr(P M)` for all `4^N` phase-0 Pauli strings `P = i^{|x&z|} X^x Z^z`,
/// at index `x | (z << N)`.
///
/// `Tr(X^x Z^z M) = sum_c (-1)^{z.c} M[c, c^x]`, so each `x` costs one
/// Walsh-Hadamard transform of length `d`.
pub fn pauli_coefficients(m: &DMatrix<C64>) -> Vec<C64> {
    let d = m.nrows();
    let n = d.trailing_zeros();
    let mut out = vec![ZERO; d * d];
    let mut buf = vec![ZERO; d];
    for x in 0..d {
        for (c, slot) in buf.iter_mut().enumerate() {
            *slot = m[(c, c ^ x)];
        }
        walsh_hadamard(&mut buf);
        for (z, val) in buf.iter().enumerate() {
            let ph = i_pow((x & z).count_ones());
            out[x | (z << n)] = *val * ph;
        }
    }
    out
}

/// Eigendecomposition `H = V diag(w) V†` of a Hermitian matrix.
pub(crate) fn hermitian_eigen(h: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

/// `exp(i H)` for Hermitian `H`.
pub(crate) fn expm_i_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let (w, v) = hermitian_eigen(h);
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, w[j]);
    }
    matmul_adj_right(&scaled, &v)
}

/// Neumaier-compensated sum; the result depends only on the input order.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
