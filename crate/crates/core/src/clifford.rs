//! Clifford unitaries up to global phase, stored by their action on generators.
//!
//! Text format:
//!
//! ```text
//! TABLEAU n
//! <x bits> <z bits> <sign>     # image of X_1
//! ...                          # X_2 .. X_n, then Z_1 .. Z_n
//! END
//! ```
//!
//! Bits are written site 1 first, e.g. `10 01 -` is `-X⊗Z` on two qubits.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{check_dense_limit, DenseOperator, C64, DENSE_LIMIT, ONE, ZERO};
use crate::pauli::{sample_uniform, Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn phase(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 2,
        }
    }

    fn from_phase(p: u8) -> Self {
        if p % 4 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Images of `X_1..X_n, Z_1..Z_n` under conjugation `P -> C P C†`.
/// Each image is Hermitian, so its phase exponent is 0 or 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Result<Self> {
        let mut images = Vec::with_capacity(2 * n);
        for p in [Pauli::X, Pauli::Z] {
            for k in 0..n {
                images.push(PauliString::single(n, k, p)?);
            }
        }
        Ok(Self { n, images })
    }

    /// Validates and stores prescribed generator images.
    pub fn from_generator_images(images: &[(PauliString, Sign)]) -> Result<Self> {
        if images.is_empty() || images.len() % 2 != 0 {
            return Err(Error::InvalidGeneratorImages(format!(
                "expected 2n images, got {}",
                images.len()
            )));
        }
        let n = images.len() / 2;
        let mut stored = Vec::with_capacity(2 * n);
        for (k, (p, s)) in images.iter().enumerate() {
            if p.n_qubits() != n {
                return Err(Error::InvalidGeneratorImages(format!(
                    "image {k} acts on {} qubits, expected {n}",
                    p.n_qubits()
                )));
            }
            if !p.is_hermitian() {
                return Err(Error::InvalidGeneratorImages(format!(
                    "image {k} ({p}) is not Hermitian"
                )));
            }
            stored.push(p.with_phase(p.phase_exp() + s.phase()));
        }
        for j in 0..2 * n {
            if stored[j].is_identity() {
                return Err(Error::InvalidGeneratorImages(format!(
                    "image {j} is proportional to the identity"
                )));
            }
            for k in j + 1..2 * n {
                let should_anticommute = k == j + n;
                let commutes = stored[j].commutes(&stored[k])?;
                if commutes == should_anticommute {
                    return Err(Error::InvalidGeneratorImages(format!(
                        "images {} and {} break the commutation pattern",
                        stored[j], stored[k]
                    )));
                }
            }
        }
        Ok(Self { n, images: stored })
    }

    pub fn hadamard(n: usize, site: usize) -> Result<Self> {
        let mut t = Self::identity(n)?;
        t.images[site] = PauliString::single(n, site, Pauli::Z)?;
        t.images[n + site] = PauliString::single(n, site, Pauli::X)?;
        Ok(t)
    }

    pub fn phase_s(n: usize, site: usize) -> Result<Self> {
        let mut t = Self::identity(n)?;
        t.images[site] = PauliString::single(n, site, Pauli::Y)?;
        Ok(t)
    }

    pub fn cnot(n: usize, control: usize, target: usize) -> Result<Self> {
        if control == target {
            return Err(Error::InvalidArgument("CNOT needs distinct sites".into()));
        }
        let mut t = Self::identity(n)?;
        t.images[control] = t.images[control].mul_phased(&t.images[target])?;
        t.images[n + target] = t.images[n + control].mul_phased(&t.images[n + target])?;
        Ok(t)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Images of `X_1..X_n, Z_1..Z_n` with signs folded into the phase.
    pub fn images(&self) -> &[PauliString] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> (PauliString, Sign) {
        let p = self.images[generator];
        (p.unsigned(), Sign::from_phase(p.phase_exp()))
    }

    /// Binary `2n x 2n` matrix; row `j` holds the x bits then z bits of image `j`.
    pub fn symplectic(&self) -> Vec<Vec<u8>> {
        self.images
            .iter()
            .map(|p| {
                let mut row = Vec::with_capacity(2 * self.n);
                for k in 0..self.n {
                    let b = 1u64 << (self.n - 1 - k);
                    row.push((p.x_bits() & b != 0) as u8);
                }
                for k in 0..self.n {
                    let b = 1u64 << (self.n - 1 - k);
                    row.push((p.z_bits() & b != 0) as u8);
                }
                row
            })
            .collect()
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.images
            .iter()
            .map(|p| Sign::from_phase(p.phase_exp()))
            .collect()
    }

    /// `C P C†` for Hermitian `P`, returned as a phase-0 string and a sign.
    pub fn conjugate(&self, p: &PauliString) -> Result<(PauliString, Sign)> {
        if p.n_qubits() != self.n {
            return Err(Error::QubitMismatch {
                left: self.n,
                right: p.n_qubits(),
            });
        }
        if !p.is_hermitian() {
            return Err(Error::InvalidArgument(format!("{p} is not Hermitian")));
        }
        // P = i^{p + |x&z|} prod_k X_k^{x_k} prod_k Z_k^{z_k}
        let lead = (p.phase_exp() as u32 + (p.x_bits() & p.z_bits()).count_ones()) % 4;
        let mut acc = PauliString::identity(self.n)?.with_phase(lead as u8);
        for k in 0..self.n {
            let b = 1u64 << (self.n - 1 - k);
            if p.x_bits() & b != 0 {
                acc = acc.mul_phased(&self.images[k])?;
            }
        }
        for k in 0..self.n {
            let b = 1u64 << (self.n - 1 - k);
            if p.z_bits() & b != 0 {
                acc = acc.mul_phased(&self.images[self.n + k])?;
            }
        }
        debug_assert!(acc.is_hermitian());
        Ok((acc.unsigned(), Sign::from_phase(acc.phase_exp())))
    }

    /// Uniform draw over Clifford unitaries modulo phase.
    ///
    /// Symplectic pairs are drawn one at a time: a uniform vector is projected
    /// onto the symplectic complement of the pairs chosen so far, which keeps it
    /// uniform there; zero vectors and partners with the wrong pairing are
    /// rejected. Signs are then independent fair coins.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidArgument(format!("bad qubit count {n}")));
        }
        let mut es: Vec<PauliString> = Vec::with_capacity(n);
        let mut fs: Vec<PauliString> = Vec::with_capacity(n);
        let project = |v: PauliString, es: &[PauliString], fs: &[PauliString]| {
            let mut v = v;
            for (e, f) in es.iter().zip(fs) {
                let we = !v.commutes(e).unwrap();
                let wf = !v.commutes(f).unwrap();
                if wf {
                    v = v.mul_phased(e).unwrap().unsigned();
                }
                if we {
                    v = v.mul_phased(f).unwrap().unsigned();
                }
            }
            v
        };
        for _ in 0..n {
            let e = loop {
                let v = project(sample_uniform(n, rng), &es, &fs);
                if !v.is_identity() {
                    break v;
                }
            };
            let f = loop {
                let w = project(sample_uniform(n, rng), &es, &fs);
                if !w.commutes(&e).unwrap() {
                    break w;
                }
            };
            es.push(e);
            fs.push(f);
        }
        let mut images: Vec<PauliString> = es.into_iter().chain(fs).collect();
        for im in images.iter_mut() {
            if rng.gen::<bool>() {
                *im = im.with_phase(2);
            }
        }
        Ok(Self { n, images })
    }

    /// Joint +1 eigenvector of the images of the `Z_k`.
    pub fn stabilizer_state(&self) -> Result<DVector<C64>> {
        check_dense_limit("Clifford dense lift", self.n, DENSE_LIMIT)?;
        let d = 1usize << self.n;
        let stabilizers = &self.images[self.n..];
        let threshold = 0.5 / d as f64;
        for y in 0..d {
            let mut v = DVector::from_element(d, ZERO);
            v[y] = ONE;
            for s in stabilizers {
                v = (&v + s.apply(&v)) * C64::new(0.5, 0.0);
                if v.norm_squared() <= threshold {
                    break;
                }
            }
            let nrm = v.norm();
            if nrm * nrm > threshold {
                return Ok(v / C64::new(nrm, 0.0));
            }
        }
        Err(Error::Canonicalization(
            "no basis state overlaps the stabilizer state".into(),
        ))
    }

    /// A unitary implementing the tableau, with the first nonzero entry of the
    /// first column made real and positive.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let n = self.n;
        let d = 1usize << n;
        let psi0 = self.stabilizer_state()?;
        let mut m = DMatrix::from_element(d, d, ZERO);
        m.set_column(0, &psi0);
        for c in 1..d {
            let low = c & c.wrapping_neg();
            let site = n - 1 - low.trailing_zeros() as usize;
            let prev = m.column(c ^ low).into_owned();
            m.set_column(c, &self.images[site].apply(&prev));
        }
        let first = m
            .column(0)
            .iter()
            .copied()
            .find(|v| v.norm() > 1e-12)
            .expect("normalized column");
        let fix = first.conj() / first.norm();
        m *= fix;
        DenseOperator::new(n, m)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("TABLEAU {}\n", self.n);
        for row in self.symplectic().iter().zip(self.signs()) {
            let (bits, sign) = row;
            let xs: String = bits[..self.n].iter().map(|b| char::from(b'0' + b)).collect();
            let zs: String = bits[self.n..].iter().map(|b| char::from(b'0' + b)).collect();
            s.push_str(&format!("{xs} {zs} {sign}\n"));
        }
        s.push_str("END\n");
        s
    }
}

impl fmt::Display for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for CliffordTableau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tableau".into()))?;
        let n: usize = header
            .strip_prefix("TABLEAU")
            .ok_or_else(|| Error::Parse(format!("expected TABLEAU header, got {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad qubit count: {e}")))?;
        let parse_bits = |t: &str| -> Result<u64> {
            if t.len() != n || !t.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Parse(format!("bad bit field {t:?}")));
            }
            Ok(u64::from_str_radix(t, 2).expect("validated"))
        };
        let mut images = Vec::with_capacity(2 * n);
        for _ in 0..2 * n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated tableau".into()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("bad tableau row {line:?}")));
            }
            let sign = match fields[2] {
                "+" => Sign::Plus,
                "-" => Sign::Minus,
                other => return Err(Error::Parse(format!("bad sign {other:?}"))),
            };
            let p = PauliString::from_bits(n, parse_bits(fields[0])?, parse_bits(fields[1])?, 0)?;
            images.push((p, sign));
        }
        match lines.next() {
            Some("END") => {}
            other => return Err(Error::Parse(format!("expected END, got {other:?}"))),
        }
        Self::from_generator_images(&images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul;
    use crate::pauli::enumerate_all;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// `U P U†` computed densely, then matched against `sign * dense(image)`.
    fn dense_conjugation_matches(u: &DenseOperator, t: &CliffordTableau, q: &PauliString) -> bool {
        let pd = q.to_dense().unwrap().into_matrix();
        let lhs = matmul(&matmul(u.matrix(), &pd), &u.matrix().adjoint());
        let (img, s) = t.conjugate(q).unwrap();
        let rhs = img.to_dense().unwrap().into_matrix() * C64::new(s.value(), 0.0);
        (lhs - rhs).norm() < 1e-10
    }

    fn h_matrix() -> DMatrix<C64> {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        DMatrix::from_row_slice(2, 2, &[r, r, r, -r])
    }

    #[test]
    fn gate_examples_against_dense_matrices() {
        let h = CliffordTableau::hadamard(1, 0).unwrap();
        assert_eq!(h.conjugate(&p("X")).unwrap(), (p("Z"), Sign::Plus));
        let hd = DenseOperator::new(1, h_matrix()).unwrap();
        assert!(dense_conjugation_matches(&hd, &h, &p("X")));
        assert!(dense_conjugation_matches(&hd, &h, &p("Y")));

        let cx = CliffordTableau::cnot(2, 0, 1).unwrap();
        assert_eq!(cx.conjugate(&p("XI")).unwrap(), (p("XX"), Sign::Plus));
        let (o, l) = (ZERO, ONE);
        let cxd = DenseOperator::new(
            2,
            DMatrix::from_row_slice(4, 4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o]),
        )
        .unwrap();
        for q in enumerate_all(2).unwrap() {
            assert!(dense_conjugation_matches(&cxd, &cx, &q));
        }

        let s = CliffordTableau::phase_s(1, 0).unwrap();
        assert_eq!(s.conjugate(&p("X")).unwrap(), (p("Y"), Sign::Plus));
        let sd = DenseOperator::new(
            1,
            DMatrix::from_row_slice(2, 2, &[l, o, o, C64::new(0.0, 1.0)]),
        )
        .unwrap();
        for q in enumerate_all(1).unwrap() {
            assert!(dense_conjugation_matches(&sd, &s, &q));
        }
    }

    #[test]
    fn generator_image_construction() {
        let id = CliffordTableau::from_generator_images(&[
            (p("X"), Sign::Plus),
            (p("Z"), Sign::Plus),
        ])
        .unwrap();
        assert_eq!(id, CliffordTableau::identity(1).unwrap());
        let h = CliffordTableau::from_generator_images(&[
            (p("Z"), Sign::Plus),
            (p("X"), Sign::Plus),
        ])
        .unwrap();
        assert_eq!(h, CliffordTableau::hadamard(1, 0).unwrap());

        let t = CliffordTableau::from_generator_images(&[
            (p("Y"), Sign::Minus),
            (p("Z"), Sign::Plus),
        ])
        .unwrap();
        let u = t.to_dense().unwrap();
        let lhs = matmul(
            &matmul(u.matrix(), p("X").to_dense().unwrap().matrix()),
            &u.matrix().adjoint(),
        );
        let minus_y = p("-Y").to_dense().unwrap().into_matrix();
        assert!((lhs - minus_y).norm() < 1e-12);

        let bad = CliffordTableau::from_generator_images(&[
            (p("X"), Sign::Plus),
            (p("X"), Sign::Plus),
        ]);
        assert!(matches!(bad, Err(Error::InvalidGeneratorImages(_))));
        let non_herm = CliffordTableau::from_generator_images(&[
            (p("+iX"), Sign::Plus),
            (p("Z"), Sign::Plus),
        ]);
        assert!(non_herm.is_err());
    }

    #[test]
    fn dense_lift_examples() {
        let id = CliffordTableau::identity(3).unwrap().to_dense().unwrap();
        assert!((id.into_matrix() - DMatrix::identity(8, 8)).norm() < 1e-12);
        let h = CliffordTableau::hadamard(1, 0).unwrap().to_dense().unwrap();
        assert!((h.into_matrix() - h_matrix()).norm() < 1e-12);
    }

    #[test]
    fn random_dense_lift_matches_conjugation_exhaustively() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let t = CliffordTableau::random(3, &mut rng).unwrap();
            let u = t.to_dense().unwrap();
            assert!(u.unitarity_deviation() < 1e-12);
            for q in enumerate_all(3).unwrap() {
                assert!(dense_conjugation_matches(&u, &t, &q));
            }
        }
    }

    #[test]
    fn random_conjugation_matches_dense_n_up_to_4() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..100 {
            let n = 1 + k % 4;
            let t = CliffordTableau::random(n, &mut rng).unwrap();
            let u = t.to_dense().unwrap();
            let q = sample_uniform(n, &mut rng);
            assert!(dense_conjugation_matches(&u, &t, &q));
        }
    }

    #[test]
    fn random_single_qubit_cliffords_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 48_000;
        let mut counts: HashMap<CliffordTableau, usize> = HashMap::new();
        for _ in 0..draws {
            *counts
                .entry(CliffordTableau::random(1, &mut rng).unwrap())
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let sigma = (expected * (1.0 - 1.0 / 24.0)).sqrt();
        for c in counts.values() {
            assert!((*c as f64 - expected).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn random_is_seeded_and_valid() {
        let a = CliffordTableau::random(5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = CliffordTableau::random(5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let images: Vec<_> = (0..10).map(|g| a.image(g)).collect();
        let rebuilt = CliffordTableau::from_generator_images(&images).unwrap();
        assert_eq!(rebuilt, a);
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = CliffordTableau::random(3, &mut rng).unwrap();
        let back: CliffordTableau = t.to_text().parse().unwrap();
        assert_eq!(back, t);
        assert!("TABLEAU 1\n1 0 +\nEND\n".parse::<CliffordTableau>().is_err());
    }
}
