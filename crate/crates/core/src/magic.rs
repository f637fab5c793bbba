//! Stabilizer Rényi entropies of states and operators, and their local minima.

use nalgebra::{DMatrix, DVector};

use crate::clifford::CliffordTableau;
use crate::error::{Error, Result};
use crate::linalg::{
    check_dense_limit, i_pow, matmul, pauli_coefficients, walsh_hadamard, Bipartition,
    DenseOperator, C64, ZERO,
};
use crate::operator::UNITARY_TOL;
use crate::optimize::{minimize_over_unitaries, LocalUnitarySearchReport, SearchConfig};
use crate::pauli::enumerate_all;

/// Largest register for exhaustive Pauli sums over a state or operator.
pub const MAGIC_LIMIT: usize = 10;
/// Largest register for the nonlocal state search.
pub const NONLOCAL_LIMIT: usize = 6;
/// Largest register for the four-unitary operator search.
pub const LOCAL_MIN_LIMIT: usize = 4;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized { norm });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn normalized(n_qubits: usize, amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 {
            return Err(Error::Unnormalized { norm });
        }
        Self::new(n_qubits, amps / C64::new(norm, 0.0))
    }

    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = DVector::from_element(1 << n_qubits, ZERO);
        amps[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// `C|0...0>` for a Clifford tableau `C`.
    pub fn stabilizer(c: &CliffordTableau) -> Result<Self> {
        Self::new(c.n_qubits(), c.stabilizer_state()?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn apply(&self, u: &DenseOperator) -> Result<Self> {
        if u.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: u.n_qubits(),
                right: self.n_qubits,
            });
        }
        Self::normalized(self.n_qubits, u.apply(&self.amps))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

/// `<psi|P|psi>` for every phase-0 Pauli string, indexed like
/// [`crate::pauli::PauliString::index`].
pub fn pauli_expectations(psi: &StateVector) -> Result<Vec<f64>> {
    check_dense_limit("state Pauli spectrum", psi.n_qubits, MAGIC_LIMIT)?;
    let d = psi.amps.len();
    let n = psi.n_qubits;
    let mut out = vec![0.0; d * d];
    let mut buf = vec![ZERO; d];
    for x in 0..d {
        for (c, slot) in buf.iter_mut().enumerate() {
            *slot = psi.amps[c ^ x].conj() * psi.amps[c];
        }
        walsh_hadamard(&mut buf);
        for (z, v) in buf.iter().enumerate() {
            out[x | (z << n)] = (*v * i_pow((x & z).count_ones())).re;
        }
    }
    Ok(out)
}

fn renyi_of_distribution(xi: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha.is_infinite() {
        return Err(Error::InvalidArgument(format!("Rényi order {alpha}")));
    }
    if (alpha - 1.0).abs() < 1e-12 {
        Ok(-xi
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>())
    } else {
        let s: f64 = xi.iter().map(|p| p.max(0.0).powf(alpha)).sum();
        Ok(s.log2() / (1.0 - alpha))
    }
}

/// `Xi_P = <P>^2 / d`; sums to one for a pure state.
pub fn state_pauli_distribution(psi: &StateVector) -> Result<Vec<f64>> {
    let d = psi.amps.len() as f64;
    Ok(pauli_expectations(psi)?.into_iter().map(|e| e * e / d).collect())
}

/// Stabilizer Rényi entropy `m_alpha` in bits; `alpha == 1` is the Shannon limit.
pub fn stabilizer_renyi_entropy(psi: &StateVector, alpha: f64) -> Result<f64> {
    let xi = state_pauli_distribution(psi)?;
    Ok(renyi_of_distribution(&xi, alpha)? - psi.n_qubits as f64)
}

/// `(U_A ⊗ U_B)|psi>` via the `d_A x d_B` reshaping `U_A Psi U_B^T`.
fn apply_local(psi: &DMatrix<C64>, ua: &DMatrix<C64>, ub: &DMatrix<C64>) -> DVector<C64> {
    let m = matmul(&matmul(ua, psi), &ub.transpose());
    let (da, db) = (m.nrows(), m.ncols());
    DVector::from_fn(da * db, |k, _| m[(k / db, k % db)])
}

/// Upper bound on the nonlocal stabilizer entropy: the smallest `m_alpha`
/// found over `U_A ⊗ U_B |psi>`.
///
/// Each warm start is a pair `[U_A, U_B]`; the identity is always tried first,
/// so the result never exceeds `m_alpha(psi)`.
pub fn nonlocal_stabilizer_entropy(
    psi: &StateVector,
    bp: &Bipartition,
    alpha: f64,
    config: &SearchConfig,
    warm_starts: &[Vec<DMatrix<C64>>],
) -> Result<(f64, LocalUnitarySearchReport)> {
    if psi.n_qubits != bp.n() {
        return Err(Error::QubitMismatch {
            left: psi.n_qubits,
            right: bp.n(),
        });
    }
    check_dense_limit("nonlocal stabilizer entropy", bp.n(), NONLOCAL_LIMIT)?;
    stabilizer_renyi_entropy(psi, alpha)?;
    let (da, db) = (bp.d_a(), bp.d_b());
    let reshaped = DMatrix::from_fn(da, db, |a, b| psi.amps[a * db + b]);
    let n = bp.n();
    let objective = |us: &[DMatrix<C64>]| {
        let v = apply_local(&reshaped, &us[0], &us[1]);
        let st = StateVector { n_qubits: n, amps: v };
        stabilizer_renyi_entropy(&st, alpha).expect("validated order")
    };
    let report = minimize_over_unitaries(&[da, db], objective, config, warm_starts)?;
    Ok((report.best_value, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorMagicMeasure {
    Linear,
    Renyi(f64),
}

fn operator_distribution_unchecked(m: &DMatrix<C64>) -> Vec<f64> {
    let d2 = (m.nrows() * m.nrows()) as f64;
    pauli_coefficients(m)
        .into_iter()
        .map(|c| c.norm_sqr() / d2)
        .collect()
}

pub(crate) fn linear_magic_unchecked(m: &DMatrix<C64>) -> f64 {
    1.0 - operator_distribution_unchecked(m)
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
}

/// `Xi_P = |Tr(O P)|^2 / d^2` over all phase-0 Pauli strings.
pub fn operator_pauli_distribution(o: &DenseOperator) -> Result<Vec<f64>> {
    check_dense_limit("operator Pauli spectrum", o.n_qubits(), MAGIC_LIMIT)?;
    o.ensure_unitary(UNITARY_TOL)?;
    Ok(operator_distribution_unchecked(o.matrix()))
}

/// `M_lin = 1 - sum Xi^2` or `M_alpha = log2(sum Xi^alpha) / (1 - alpha)`.
pub fn operator_stabilizer_entropy(o: &DenseOperator, measure: OperatorMagicMeasure) -> Result<f64> {
    let xi = operator_pauli_distribution(o)?;
    match measure {
        OperatorMagicMeasure::Linear => Ok(1.0 - xi.iter().map(|x| x * x).sum::<f64>()),
        OperatorMagicMeasure::Renyi(alpha) => renyi_of_distribution(&xi, alpha),
    }
}

pub fn linear_operator_magic(o: &DenseOperator) -> Result<f64> {
    operator_stabilizer_entropy(o, OperatorMagicMeasure::Linear)
}

/// 2-coherence of `U / sqrt(d)` in the normalized Pauli basis, evaluated one
/// basis element at a time.
pub fn operator_coherence_2(u: &DenseOperator) -> Result<f64> {
    check_dense_limit("operator coherence", u.n_qubits(), MAGIC_LIMIT)?;
    u.ensure_unitary(UNITARY_TOL)?;
    let m = u.matrix();
    let d = u.dim();
    let mut total = 0.0;
    for p in enumerate_all(u.n_qubits())? {
        let mut tr = ZERO;
        for c in 0..d {
            let (r, v) = p.column_entry(c);
            tr += m[(c, r)] * v;
        }
        total += (tr / d as f64).norm_sqr().powi(2);
    }
    Ok(1.0 - total)
}

/// Smallest `M_lin((V_A⊗V_B) U (W_A⊗W_B))` found; warm starts are
/// `[V_A, V_B, W_A, W_B]`.
pub fn local_min_operator_magic(
    u: &DenseOperator,
    bp: &Bipartition,
    config: &SearchConfig,
    warm_starts: &[Vec<DMatrix<C64>>],
) -> Result<(f64, LocalUnitarySearchReport)> {
    if u.n_qubits() != bp.n() {
        return Err(Error::QubitMismatch {
            left: u.n_qubits(),
            right: bp.n(),
        });
    }
    check_dense_limit("local operator magic search", bp.n(), LOCAL_MIN_LIMIT)?;
    u.ensure_unitary(UNITARY_TOL)?;
    let m = u.matrix();
    let objective = |us: &[DMatrix<C64>]| {
        let left = us[0].kronecker(&us[1]);
        let right = us[2].kronecker(&us[3]);
        linear_magic_unchecked(&matmul(&matmul(&left, m), &right))
    };
    let (da, db) = (bp.d_a(), bp.d_b());
    let report = minimize_over_unitaries(&[da, db, da, db], objective, config, warm_starts)?;
    Ok((report.best_value, report))
}
