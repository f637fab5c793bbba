//! Operator-Schmidt decomposition across a bipartition and Haar sampling.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{matmul_adj_left, matmul_adj_right, Bipartition, DenseOperator, C64};

/// Unitarity tolerance for entropy measures.
pub const UNITARY_TOL: f64 = 1e-8;

/// Default relative tolerance for counting Schmidt coefficients.
pub const SCHMIDT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntanglementMeasure {
    Linear,
    Renyi(f64),
    /// Number of coefficients above `tol * lambda_max`.
    SchmidtRank(f64),
}

impl SchmidtSpectrum {
    /// Sorts descending and clamps round-off negatives to zero.
    pub fn new(mut lambdas: Vec<f64>) -> Self {
        for l in lambdas.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn total(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Second largest coefficient, zero for rank one.
    pub fn lambda2(&self) -> f64 {
        self.lambdas.get(1).copied().unwrap_or(0.0)
    }

    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.lambdas.iter().map(|l| l * l).sum::<f64>()
    }

    /// Rényi entropy in bits; `alpha == 1` is the von Neumann limit.
    pub fn renyi(&self, alpha: f64) -> f64 {
        if (alpha - 1.0).abs() < 1e-12 {
            -self
                .lambdas
                .iter()
                .filter(|l| **l > 0.0)
                .map(|l| l * l.log2())
                .sum::<f64>()
        } else {
            let s: f64 = self
                .lambdas
                .iter()
                .filter(|l| **l > 0.0)
                .map(|l| l.powf(alpha))
                .sum();
            s.log2() / (1.0 - alpha)
        }
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.lambdas.first().copied().unwrap_or(0.0);
        self.lambdas.iter().filter(|l| **l > rel_tol * max).count()
    }
}

fn check_bp(o: &DenseOperator, bp: &Bipartition) -> Result<()> {
    if o.n_qubits() != bp.n() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} qubits, bipartition {bp} covers {}",
            o.n_qubits(),
            bp.n()
        )));
    }
    Ok(())
}

/// `R[(a,a'),(b,b')] = O[(a,b),(a',b')] / sqrt(d)`, of shape `d_A^2 x d_B^2`.
pub fn realign(o: &DenseOperator, bp: &Bipartition) -> Result<DMatrix<C64>> {
    check_bp(o, bp)?;
    Ok(realign_matrix(o.matrix(), bp.d_a(), bp.d_b()))
}

pub(crate) fn realign_matrix(m: &DMatrix<C64>, d_a: usize, d_b: usize) -> DMatrix<C64> {
    let s = 1.0 / ((d_a * d_b) as f64).sqrt();
    let mut r = DMatrix::<C64>::zeros(d_a * d_a, d_b * d_b);
    for ap in 0..d_a {
        for bp in 0..d_b {
            let col = ap * d_b + bp;
            for a in 0..d_a {
                let row_r = a * d_a + ap;
                for b in 0..d_b {
                    r[(row_r, b * d_b + bp)] = m[(a * d_b + b, col)] * s;
                }
            }
        }
    }
    r
}

/// Gram matrix of the realignment on its smaller side.
fn small_gram(r: &DMatrix<C64>) -> DMatrix<C64> {
    if r.nrows() <= r.ncols() {
        matmul_adj_right(r, r)
    } else {
        matmul_adj_left(r, r)
    }
}

pub(crate) fn spectrum_of_matrix(m: &DMatrix<C64>, d_a: usize, d_b: usize) -> SchmidtSpectrum {
    let g = small_gram(&realign_matrix(m, d_a, d_b));
    let eig = nalgebra::SymmetricEigen::new(g);
    SchmidtSpectrum::new(eig.eigenvalues.iter().copied().collect())
}

/// `1 - sum lambda^2` without an eigendecomposition; the caller vouches for unitarity.
pub(crate) fn linear_entropy_of_matrix(m: &DMatrix<C64>, d_a: usize, d_b: usize) -> f64 {
    let g = small_gram(&realign_matrix(m, d_a, d_b));
    1.0 - g.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

pub fn operator_schmidt_spectrum(o: &DenseOperator, bp: &Bipartition) -> Result<SchmidtSpectrum> {
    check_bp(o, bp)?;
    Ok(spectrum_of_matrix(o.matrix(), bp.d_a(), bp.d_b()))
}

pub fn operator_entanglement(
    o: &DenseOperator,
    bp: &Bipartition,
    measure: EntanglementMeasure,
) -> Result<f64> {
    check_bp(o, bp)?;
    match measure {
        EntanglementMeasure::SchmidtRank(tol) => {
            Ok(operator_schmidt_spectrum(o, bp)?.rank(tol) as f64)
        }
        EntanglementMeasure::Linear => {
            o.ensure_unitary(UNITARY_TOL)?;
            Ok(linear_entropy_of_matrix(o.matrix(), bp.d_a(), bp.d_b()))
        }
        EntanglementMeasure::Renyi(alpha) => {
            if !(alpha >= 0.0) || alpha.is_infinite() {
                return Err(Error::InvalidArgument(format!("Rényi order {alpha}")));
            }
            o.ensure_unitary(UNITARY_TOL)?;
            Ok(operator_schmidt_spectrum(o, bp)?.renyi(alpha))
        }
    }
}

/// Linear operator entanglement `E_lin`.
pub fn linear_operator_entanglement(o: &DenseOperator, bp: &Bipartition) -> Result<f64> {
    operator_entanglement(o, bp, EntanglementMeasure::Linear)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DenseOperator> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    DenseOperator::from_matrix(q)
}

/// Haar unitary on `n` qubits.
pub fn haar_random_qubits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DenseOperator> {
    haar_random_unitary(1 << n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, ONE, ZERO};
    use crate::pauli::PauliString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bp(a: usize, b: usize) -> Bipartition {
        Bipartition::new(a, b).unwrap()
    }

    fn swap() -> DenseOperator {
        let mut m = DMatrix::from_element(4, 4, ZERO);
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(r, c)] = ONE;
        }
        DenseOperator::new(2, m).unwrap()
    }

    fn cnot() -> DenseOperator {
        let mut m = DMatrix::from_element(4, 4, ZERO);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, c)] = ONE;
        }
        DenseOperator::new(2, m).unwrap()
    }

    /// Singular values from nalgebra's SVD, independent of the Gram route.
    fn singular_values(o: &DenseOperator, b: &Bipartition) -> Vec<f64> {
        let mut s: Vec<f64> = realign(o, b).unwrap().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    #[test]
    fn realignment_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = haar_random_qubits(1, &mut rng).unwrap();
        let w = haar_random_qubits(1, &mut rng).unwrap();
        let s = singular_values(&v.kron(&w), &bp(1, 1));
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1] < 1e-12);

        let s = singular_values(&swap(), &bp(1, 1));
        assert!(s.iter().all(|x| (x - 0.5).abs() < 1e-12));

        let s = singular_values(&cnot(), &bp(1, 1));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - h).abs() < 1e-12 && (s[1] - h).abs() < 1e-12 && s[2] < 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let p: PauliString = "XZ".parse().unwrap();
        let sp = operator_schmidt_spectrum(&p.to_dense().unwrap(), &bp(1, 1)).unwrap();
        assert!((sp.lambdas()[0] - 1.0).abs() < 1e-12);
        assert!(sp.lambdas()[1..].iter().all(|l| *l < 1e-12));
        assert_eq!(sp.rank(SCHMIDT_RANK_TOL), 1);

        let sp = operator_schmidt_spectrum(&swap(), &bp(1, 1)).unwrap();
        assert!(sp.lambdas().iter().all(|l| (l - 0.25).abs() < 1e-12));

        let sp = operator_schmidt_spectrum(&cnot(), &bp(1, 1)).unwrap();
        assert!((sp.lambdas()[0] - 0.5).abs() < 1e-12 && (sp.lambdas()[1] - 0.5).abs() < 1e-12);
        assert_eq!(sp.rank(SCHMIDT_RANK_TOL), 2);
    }

    #[test]
    fn entanglement_examples() {
        let b = bp(1, 1);
        let p: PauliString = "XZ".parse().unwrap();
        assert!(linear_operator_entanglement(&p.to_dense().unwrap(), &b).unwrap().abs() < 1e-12);
        assert!((linear_operator_entanglement(&swap(), &b).unwrap() - 0.75).abs() < 1e-12);
        let e2 = operator_entanglement(&swap(), &b, EntanglementMeasure::Renyi(2.0)).unwrap();
        assert!((e2 - 2.0).abs() < 1e-12);
        assert!((linear_operator_entanglement(&cnot(), &b).unwrap() - 0.5).abs() < 1e-12);
        let vn = operator_entanglement(&cnot(), &b, EntanglementMeasure::Renyi(1.0)).unwrap();
        assert!((vn - 1.0).abs() < 1e-12);
        let rank = operator_entanglement(&swap(), &b, EntanglementMeasure::SchmidtRank(1e-10));
        assert_eq!(rank.unwrap(), 4.0);
    }

    #[test]
    fn errors() {
        let b = bp(1, 1);
        let twice = swap().scale(C64::new(2.0, 0.0));
        assert!(matches!(
            linear_operator_entanglement(&twice, &b),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            realign(&swap(), &bp(1, 2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn haar_draws_are_unitary_and_seeded() {
        let a = haar_random_unitary(8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = haar_random_unitary(8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn haar_second_moment_of_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| haar_random_unitary(8, &mut rng).unwrap().trace().norm_sqr())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sem = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 5.0 * sem, "mean {mean} sem {sem}");
    }

    #[test]
    fn local_unitary_invariance_of_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=4 {
            for n_a in 1..n {
                let b = bp(n_a, n - n_a);
                let u = haar_random_qubits(n, &mut rng).unwrap();
                let l = haar_random_qubits(n_a, &mut rng)
                    .unwrap()
                    .kron(&haar_random_qubits(n - n_a, &mut rng).unwrap());
                let r = haar_random_qubits(n_a, &mut rng)
                    .unwrap()
                    .kron(&haar_random_qubits(n - n_a, &mut rng).unwrap());
                let moved = DenseOperator::new(n, matmul(&matmul(l.matrix(), u.matrix()), r.matrix()))
                    .unwrap();
                let s1 = operator_schmidt_spectrum(&u, &b).unwrap();
                let s2 = operator_schmidt_spectrum(&moved, &b).unwrap();
                for (x, y) in s1.lambdas().iter().zip(s2.lambdas()) {
                    assert!((x - y).abs() < 1e-10);
                }
                for m in [
                    EntanglementMeasure::Linear,
                    EntanglementMeasure::Renyi(0.5),
                    EntanglementMeasure::Renyi(1.0),
                    EntanglementMeasure::Renyi(2.0),
                    EntanglementMeasure::SchmidtRank(1e-10),
                ] {
                    let a = operator_entanglement(&u, &b, m).unwrap();
                    let c = operator_entanglement(&moved, &b, m).unwrap();
                    assert!((a - c).abs() < 1e-9, "{m:?}: {a} vs {c}");
                }
            }
        }
    }

    #[test]
    fn normalization_range_and_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..100 {
            let n = 2 + k % 3;
            let b = Bipartition::half(n).unwrap();
            let u = haar_random_qubits(n, &mut rng).unwrap();
            let sp = operator_schmidt_spectrum(&u, &b).unwrap();
            assert!((sp.total() - 1.0).abs() < 1e-10);
            assert!(sp.lambdas().len() <= (b.d_a() * b.d_a()).min(b.d_b() * b.d_b()));
            let lin = linear_operator_entanglement(&u, &b).unwrap();
            let m = (b.d_a() * b.d_a()).min(b.d_b() * b.d_b()) as f64;
            assert!(lin >= -1e-12 && lin <= 1.0 - 1.0 / m + 1e-12);
            assert!((lin - sp.linear_entropy()).abs() < 1e-12);
            let e2 = sp.renyi(2.0);
            assert!((e2 + (1.0 - lin).log2()).abs() < 1e-10);
            for alpha in [0.5, 1.0, 1.5] {
                let ea = sp.renyi(alpha);
                if alpha < 2.0 {
                    assert!(ea >= e2 - 1e-10, "alpha {alpha}: {ea} < {e2}");
                }
            }
        }
    }
}
