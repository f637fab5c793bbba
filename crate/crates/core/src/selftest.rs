//! Fast sweep over the invariants of every module, for a build sanity check.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clifford::CliffordTableau;
use crate::factorize::{check_pauli_product_preserving, factorize, verify_factorization, PRODUCT_TOL};
use crate::linalg::{Bipartition, DenseOperator, C64};
use crate::magic::{linear_operator_magic, operator_coherence_2, stabilizer_renyi_entropy, StateVector};
use crate::mpu::{examples, lambda_closure, mpu_to_dense, pauli_power_mpu, MpuMode};
use crate::operator::{haar_random_qubits, linear_operator_entanglement};
use crate::pauli::{enumerate_all, PauliString};
use crate::power::{
    haar_typical_value, local_pauli_magic_bound, pauli_entangling_power_exact, pauli_entangling_power_per_pauli,
    pauli_power_via_q, q_permutation_traces, q_projector_build,
};
use crate::spin_chain::{ModelKind, Propagator, SpinChainModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn record(name: &'static str, worst: f64, tol: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: worst <= tol,
        detail: format!("max deviation {worst:.2e} (tolerance {tol:.0e})"),
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn pauli_products(_: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    let all: Vec<PauliString> = enumerate_all(2).expect("small").collect();
    for a in &all {
        for b in &all {
            let (c, phase) = a.multiply(b).expect("same size");
            let lhs = a.to_dense().expect("small").mul(&b.to_dense().expect("small")).expect("same size");
            let rhs = c.to_dense().expect("small").into_matrix() * phase;
            worst = worst.max(max_abs(&(lhs.matrix() - rhs)));
        }
    }
    worst
}

fn clifford_conjugation(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let c = CliffordTableau::random(3, rng).expect("small");
        let u = c.to_dense().expect("small");
        for p in enumerate_all(3).expect("small").take(20) {
            let (img, sign) = c.conjugate(&p).expect("same size");
            let lhs = u.mul(&p.to_dense().expect("small")).expect("same").mul(&u.adjoint()).expect("same");
            let rhs = img.to_dense().expect("small").into_matrix() * C64::new(sign.value(), 0.0);
            worst = worst.max(max_abs(&(lhs.matrix() - rhs)));
        }
    }
    worst
}

fn entanglement_local_invariance(rng: &mut ChaCha8Rng) -> f64 {
    let bp = Bipartition::new(1, 2).expect("valid");
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = haar_random_qubits(3, rng).expect("small");
        let l = haar_random_qubits(1, rng).expect("small").kron(&haar_random_qubits(2, rng).expect("small"));
        let e0 = linear_operator_entanglement(&u, &bp).expect("valid");
        let e1 = linear_operator_entanglement(&l.mul(&u).expect("same"), &bp).expect("valid");
        worst = worst.max((e0 - e1).abs());
    }
    worst
}

fn magic_identities(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let u = haar_random_qubits(n, rng).expect("small");
        worst = worst.max((linear_operator_magic(&u).expect("small") - operator_coherence_2(&u).expect("small")).abs());
        let s = StateVector::stabilizer(&CliffordTableau::random(n, rng).expect("small")).expect("valid");
        worst = worst.max(stabilizer_renyi_entropy(&s, 2.0).expect("valid").abs());
    }
    worst
}

fn power_routes(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    let bp = Bipartition::new(1, 1).expect("valid");
    for _ in 0..3 {
        let u = haar_random_qubits(2, rng).expect("small");
        let a = pauli_entangling_power_exact(&u, &bp).expect("valid").value;
        let b = pauli_entangling_power_per_pauli(&u, &bp).expect("valid").value;
        let c = pauli_power_via_q(&u, &bp).expect("valid");
        worst = worst.max((a - b).abs()).max((a - c).abs());
    }
    let bp = Bipartition::new(1, 2).expect("valid");
    for _ in 0..3 {
        let u = haar_random_qubits(3, rng).expect("small");
        let a = pauli_entangling_power_exact(&u, &bp).expect("valid").value;
        let b = pauli_entangling_power_per_pauli(&u, &bp).expect("valid").value;
        let (ba, bb) = local_pauli_magic_bound(&u, &bp).expect("valid");
        worst = worst.max((a - b).abs()).max((a - ba.min(bb)).max(0.0));
    }
    let t = haar_typical_value(4, 2).expect("valid").exact;
    worst.max((t - 27.0 / 56.0).abs())
}

fn q_projector(_: &mut ChaCha8Rng) -> f64 {
    let q = q_projector_build(1).expect("small").into_matrix();
    let mut worst = max_abs(&(&q * &q - &q));
    let table = [4.0, 2.0, 4.0, 1.0, 2.0];
    for ((_, got), want) in q_permutation_traces(1).expect("small").into_iter().zip(table) {
        worst = worst.max((got - want).abs());
    }
    let lam = lambda_closure(1).expect("small") - q * C64::new(4.0, 0.0);
    worst.max(max_abs(&lam))
}

fn factorization(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for (n_a, n_b) in [(1, 1), (1, 2), (2, 2)] {
        let bp = Bipartition::new(n_a, n_b).expect("valid");
        let v = haar_random_qubits(n_a, rng).expect("small");
        let w = haar_random_qubits(n_b, rng).expect("small");
        let c = CliffordTableau::random(n_a + n_b, rng).expect("small").to_dense().expect("small");
        let u = c.adjoint().mul(&v.kron(&w)).expect("same");
        let ok = check_pauli_product_preserving(&u, &bp, PRODUCT_TOL).map(|r| r.preserving).unwrap_or(false);
        let res = factorize(&u, &bp, PRODUCT_TOL)
            .and_then(|f| verify_factorization(&u, &f))
            .map(|r| r.residual)
            .unwrap_or(f64::INFINITY);
        worst = worst.max(if ok { res } else { f64::INFINITY });
        let h = haar_random_qubits(n_a + n_b, rng).expect("small");
        if check_pauli_product_preserving(&h, &bp, PRODUCT_TOL).map(|r| r.preserving).unwrap_or(true) {
            worst = f64::INFINITY;
        }
    }
    worst
}

fn mpu_agreement(_: &mut ChaCha8Rng) -> f64 {
    let a = examples::t_layer_automaton();
    let mut worst: f64 = 0.0;
    for n in [4, 5] {
        let n_a = n / 2;
        let u = mpu_to_dense(&a, n).expect("valid tensor");
        let dense = pauli_entangling_power_exact(&u, &Bipartition::new(n_a, n - n_a).expect("valid"))
            .expect("valid")
            .value;
        let mpu = pauli_power_mpu(&a, n_a, n - n_a, MpuMode::Finite).expect("valid");
        worst = worst.max((dense - mpu).abs());
    }
    worst
}

fn spin_chain_dynamics(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let m = SpinChainModel::new(ModelKind::Xyz { jx: 0.75, jy: 0.25, jz: 1.0, h: 0.5 }, 4).expect("valid");
    let p = Propagator::for_model(&m).expect("valid");
    let h = DenseOperator::new(4, crate::spin_chain::build_hamiltonian_real(&m).map(|v| C64::new(v, 0.0)))
        .expect("valid");
    let mut worst = max_abs(&(p.unitary(0.0).expect("valid").into_matrix() - DMatrix::identity(16, 16)));
    for _ in 0..3 {
        let t = rng.gen_range(0.0..10.0);
        let u = p.unitary(t).expect("valid");
        let back = u.adjoint().mul(&h).expect("same").mul(&u).expect("same");
        worst = worst.max(max_abs(&(back.matrix() - h.matrix())));
    }
    worst
}

/// Runs every check; the seed only changes the random instances.
pub fn run(seed: u64) -> Vec<SelfCheck> {
    let checks: [(&'static str, fn(&mut ChaCha8Rng) -> f64, f64); 9] = [
        ("pauli product vs dense", pauli_products, 1e-12),
        ("clifford conjugation vs dense", clifford_conjugation, 1e-10),
        ("operator entanglement local invariance", entanglement_local_invariance, 1e-10),
        ("operator magic = coherence; stabilizer m2 = 0", magic_identities, 1e-10),
        ("pauli power: three routes, local bound, typical value", power_routes, 1e-10),
        ("Q projector and permutation traces", q_projector, 1e-10),
        ("product-preserving check and factorization", factorization, 1e-8),
        ("MPU transfer matrices vs dense", mpu_agreement, 1e-8),
        ("spin chain propagator", spin_chain_dynamics, 1e-9),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    checks
        .iter()
        .map(|(name, f, tol)| {
            let worst = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut rng))).unwrap_or(f64::NAN);
            if worst.is_nan() {
                SelfCheck {
                    name,
                    passed: false,
                    detail: "panicked".into(),
                }
            } else {
                record(name, worst, *tol)
            }
        })
        .collect()
}
