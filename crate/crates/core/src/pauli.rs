//! Pauli strings on up to 64 qubits, stored as symplectic bit vectors.
//!
//! A string with bits `(x, z)` and phase exponent `p` stands for
//! `i^p * ⊗_k i^{x_k z_k} X^{x_k} Z^{z_k}`, so every phase-0 string is Hermitian
//! and `Y` is the phase-0 string with `x = z = 1`.
//!
//! Site `k` (0-based, site 0 leftmost) lives at bit `n - 1 - k`, which makes the
//! bit masks line up with dense basis indices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{check_dense_limit, i_pow, DenseOperator, C64, DENSE_LIMIT, ZERO};

/// Largest register for which exhaustive enumeration is allowed.
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

/// Single-site Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > 64 {
        Err(Error::InvalidArgument(format!(
            "Pauli strings need 1..=64 qubits, got {n}"
        )))
    } else {
        Ok(())
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            x: 0,
            z: 0,
            phase: 0,
        })
    }

    /// Builds a string from raw masks; bits beyond `n` must be clear.
    pub fn from_bits(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        check_n(n)?;
        if (x | z) & !mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit masks exceed {n} qubits"
            )));
        }
        Ok(Self {
            n,
            x,
            z,
            phase: phase % 4,
        })
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Result<Self> {
        let n = paulis.len();
        check_n(n)?;
        let mut s = Self::identity(n)?;
        for (k, p) in paulis.iter().enumerate() {
            s.set(k, *p);
        }
        Ok(s)
    }

    /// `P` on `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, p: Pauli) -> Result<Self> {
        let mut s = Self::identity(n)?;
        if site >= n {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range for {n} qubits"
            )));
        }
        s.set(site, p);
        Ok(s)
    }

    /// Phase-0 string at position `index` of the enumeration order:
    /// `x = index mod 2^n`, `z = index >> n`.
    pub fn from_index(n: usize, index: u128) -> Self {
        let m = mask(n) as u128;
        Self {
            n,
            x: (index & m) as u64,
            z: ((index >> n) & m) as u64,
            phase: 0,
        }
    }

    pub fn index(&self) -> u128 {
        (self.x as u128) | ((self.z as u128) << self.n)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Same string with phase exponent 0.
    pub fn unsigned(&self) -> Self {
        Self { phase: 0, ..*self }
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self {
            phase: phase % 4,
            ..*self
        }
    }

    fn bit(&self, site: usize) -> u64 {
        1u64 << (self.n - 1 - site)
    }

    pub fn get(&self, site: usize) -> Pauli {
        let b = self.bit(site);
        Pauli::from_bits(self.x & b != 0, self.z & b != 0)
    }

    fn set(&mut self, site: usize, p: Pauli) {
        let b = self.bit(site);
        let (x, z) = p.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Product keeping the full phase: `dense(self) dense(other) = dense(result)`.
    pub fn mul_phased(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let e = self.phase as i64
            + other.phase as i64
            + (self.x & self.z).count_ones() as i64
            + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        Ok(Self {
            n: self.n,
            x,
            z,
            phase: e.rem_euclid(4) as u8,
        })
    }

    /// Canonical phase-0 product and the fourth root of unity `c` with
    /// `dense(self) dense(other) = c dense(product)`.
    pub fn multiply(&self, other: &Self) -> Result<(Self, C64)> {
        let full = self.mul_phased(other)?;
        Ok((full.unsigned(), i_pow(full.phase as u32)))
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        Ok(s % 2 == 0)
    }

    /// Matrix element `P[c ^ x, c]`; all other entries of column `c` vanish.
    pub(crate) fn column_entry(&self, c: usize) -> (usize, C64) {
        let ph = self.phase as u32
            + (self.x & self.z).count_ones()
            + 2 * (self.z & c as u64).count_ones();
        (c ^ self.x as usize, i_pow(ph))
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        self.to_dense_with_limit(DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DenseOperator> {
        check_dense_limit("Pauli dense lift", self.n, limit)?;
        let d = 1usize << self.n;
        let mut m = DMatrix::from_element(d, d, ZERO);
        for c in 0..d {
            let (r, v) = self.column_entry(c);
            m[(r, c)] = v;
        }
        DenseOperator::new(self.n, m)
    }

    /// `P |v>` without building the matrix.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::from_element(v.len(), ZERO);
        for c in 0..v.len() {
            let (r, ph) = self.column_entry(c);
            out[r] = ph * v[c];
        }
        out
    }

    /// `P M` without building `P`.
    pub fn left_multiply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
        for c in 0..m.nrows() {
            let (r, ph) = self.column_entry(c);
            for j in 0..m.ncols() {
                out[(r, j)] = ph * m[(c, j)];
            }
        }
        out
    }

    /// `M P` without building `P`.
    pub fn right_multiply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
        for c in 0..m.ncols() {
            let (r, ph) = self.column_entry(c);
            let mut col = out.column_mut(c);
            col.axpy(ph, &m.column(r), C64::new(0.0, 0.0));
        }
        out
    }

    /// Splits into the leading `n_a` qubits and the rest.
    pub fn split(&self, n_a: usize) -> Result<(Self, Self)> {
        if n_a == 0 || n_a >= self.n {
            return Err(Error::InvalidArgument(format!(
                "cannot split {} qubits at {n_a}",
                self.n
            )));
        }
        let n_b = self.n - n_a;
        let mb = mask(n_b);
        let a = Self {
            n: n_a,
            x: self.x >> n_b,
            z: self.z >> n_b,
            phase: 0,
        };
        let b = Self {
            n: n_b,
            x: self.x & mb,
            z: self.z & mb,
            phase: 0,
        };
        Ok((a, b))
    }

    /// `a ⊗ b`; phases add.
    pub fn tensor(a: &Self, b: &Self) -> Result<Self> {
        let n = a.n + b.n;
        check_n(n)?;
        Ok(Self {
            n,
            x: (a.x << b.n) | b.x,
            z: (a.z << b.n) | b.z,
            phase: (a.phase + b.phase) % 4,
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for k in 0..self.n {
            write!(f, "{}", self.get(k).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let paulis = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("bad Pauli symbol {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_paulis(&paulis)?.with_phase(phase))
    }
}

/// All `4^n` phase-0 strings, identity first.
pub fn enumerate_all(n: usize) -> Result<impl Iterator<Item = PauliString>> {
    check_n(n)?;
    check_dense_limit("Pauli enumeration", n, ENUMERATION_LIMIT)?;
    let total = 1u128 << (2 * n);
    Ok((0..total).map(move |k| PauliString::from_index(n, k)))
}

/// One uniform draw from the phase-0 strings, identity included.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliString {
    let m = mask(n);
    PauliString {
        n,
        x: rng.gen::<u64>() & m,
        z: rng.gen::<u64>() & m,
        phase: 0,
    }
}

/// `count` independent uniform draws.
pub fn sample_many<'a, R: Rng + ?Sized>(
    n: usize,
    rng: &'a mut R,
    count: usize,
) -> impl Iterator<Item = PauliString> + 'a {
    (0..count).map(move |_| sample_uniform(n, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// Independent dense construction from 2x2 matrices and Kronecker products.
    fn kron_oracle(s: &PauliString) -> DMatrix<C64> {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let o = C64::new(0.0, 0.0);
        let mut m = DMatrix::from_element(1, 1, i_pow(s.phase_exp() as u32));
        for k in 0..s.n_qubits() {
            let site = match s.get(k) {
                Pauli::I => DMatrix::from_row_slice(2, 2, &[one, o, o, one]),
                Pauli::X => DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
                Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
                Pauli::Z => DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
            };
            m = m.kronecker(&site);
        }
        m
    }

    fn dense(s: &PauliString) -> DMatrix<C64> {
        s.to_dense().unwrap().into_matrix()
    }

    #[test]
    fn product_examples() {
        assert_eq!(p("X").multiply(&p("Y")).unwrap(), (p("Z"), C64::new(0.0, 1.0)));
        assert_eq!(p("X").multiply(&p("X")).unwrap(), (p("I"), C64::new(1.0, 0.0)));
        let (r, c) = p("XZ").multiply(&p("YZ")).unwrap();
        assert_eq!(r, p("ZI"));
        assert_eq!(c, C64::new(0.0, 1.0));
        let lhs = kron_oracle(&p("XZ")) * kron_oracle(&p("YZ"));
        assert!((lhs - kron_oracle(&p("ZI")) * c).norm() < 1e-14);
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        let a = kron_oracle(&p("XZI"));
        let b = kron_oracle(&p("YYX"));
        let dense_commutes = (&a * &b - &b * &a).norm() < 1e-12;
        assert_eq!(p("XZI").commutes(&p("YYX")).unwrap(), dense_commutes);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        assert!(matches!(
            p("X").multiply(&p("XX")),
            Err(Error::QubitMismatch { .. })
        ));
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn dense_examples() {
        assert_eq!(dense(&p("I")), DMatrix::identity(2, 2));
        let y = dense(&p("Y"));
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let xz = dense(&p("XZ"));
        assert_eq!(xz, kron_oracle(&p("XZ")));
        for r in 0..4 {
            for c in 0..4 {
                let v = xz[(r, c)];
                if (r < 2) == (c < 2) {
                    assert_eq!(v, C64::new(0.0, 0.0));
                } else if v.norm() > 0.0 {
                    assert!((v.norm() - 1.0).abs() < 1e-15 && v.im == 0.0);
                }
            }
        }
        let big = PauliString::identity(13).unwrap();
        assert!(matches!(big.to_dense(), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn enumeration_order() {
        let all: Vec<_> = enumerate_all(1).unwrap().collect();
        assert_eq!(all, vec![p("I"), p("X"), p("Z"), p("Y")]);
        let n8: std::collections::HashSet<_> = enumerate_all(8).unwrap().collect();
        assert_eq!(n8.len(), 65536);
        assert!(enumerate_all(13).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_uniform() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_many(3, &mut rng, 100_000)
                .map(|s| s.index() as usize)
                .collect::<Vec<_>>()
        };
        let a = draw(11);
        assert_eq!(a, draw(11));
        let mut counts = [0usize; 64];
        for k in &a {
            counts[*k] += 1;
        }
        let expected = a.len() as f64 / 64.0;
        let sigma = (expected * (1.0 - 1.0 / 64.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "count {c}");
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 63 degrees of freedom; 0.999 quantile is about 103.4.
        assert!(chi2 < 103.4, "chi2 = {chi2}");
    }

    #[test]
    fn text_round_trip() {
        for s in ["+XIZY", "-ZZ", "+iY", "-iXI"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn split_and_tensor() {
        let s = p("XYZI");
        let (a, b) = s.split(1).unwrap();
        assert_eq!((a, b), (p("X"), p("YZI")));
        assert_eq!(PauliString::tensor(&a, &b).unwrap(), s);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (0u64..(1 << n), 0u64..(1 << n), 0u8..4)
            .prop_map(move |(x, z, ph)| PauliString::from_bits(n, x, z, ph).unwrap())
    }

    proptest! {
        #[test]
        fn dense_lift_matches_kronecker(s in (1usize..=4).prop_flat_map(arb_pauli)) {
            prop_assert!((dense(&s) - kron_oracle(&s)).norm() < 1e-14);
            let d = s.to_dense().unwrap();
            prop_assert!(d.unitarity_deviation() < 1e-14);
            if s.is_hermitian() {
                prop_assert!(d.hermiticity_deviation() < 1e-14);
            }
        }

        #[test]
        fn product_matches_dense(
            (a, b) in (1usize..=3).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))
        ) {
            let (r, c) = a.multiply(&b).unwrap();
            prop_assert_eq!(r.phase_exp(), 0);
            let lhs = kron_oracle(&a) * kron_oracle(&b);
            prop_assert!((lhs - kron_oracle(&r) * c).norm() < 1e-13);
            let (r2, c2) = b.multiply(&a).unwrap();
            prop_assert_eq!(r, r2);
            if a.phase_exp() == 0 && b.phase_exp() == 0 {
                prop_assert_eq!(c, c2.conj());
            }
        }

        #[test]
        fn associativity(
            (a, b, c) in (1usize..=3).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n), arb_pauli(n)))
        ) {
            let left = a.mul_phased(&b).unwrap().mul_phased(&c).unwrap();
            let right = a.mul_phased(&b.mul_phased(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn commutation_consistent(
            (a, b) in (1usize..=3).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))
        ) {
            let da = kron_oracle(&a);
            let db = kron_oracle(&b);
            let dense_commutes = (&da * &db - &db * &da).norm() < 1e-12;
            let (_, c1) = a.multiply(&b).unwrap();
            let (_, c2) = b.multiply(&a).unwrap();
            let cocycles_equal = (c1 - c2).norm() < 1e-15;
            prop_assert_eq!(a.commutes(&b).unwrap(), dense_commutes);
            prop_assert_eq!(cocycles_equal, dense_commutes);
        }
    }

    #[test]
    fn phase_zero_cocycle_antisymmetry_exhaustive_n2() {
        for a in enumerate_all(2).unwrap() {
            for b in enumerate_all(2).unwrap() {
                let (_, c1) = a.multiply(&b).unwrap();
                let (_, c2) = b.multiply(&a).unwrap();
                assert_eq!(c1, c2.conj());
                let da = kron_oracle(&a);
                let db = kron_oracle(&b);
                let dense_commutes = (&da * &db - &db * &da).norm() < 1e-12;
                assert_eq!(a.commutes(&b).unwrap(), dense_commutes);
            }
        }
    }
}
