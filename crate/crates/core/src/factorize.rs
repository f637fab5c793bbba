//! Unitaries that keep every Heisenberg-evolved Pauli string a product across
//! a cut, and their decomposition `U† = phase (V ⊗ W) C` with `C` Clifford.
//!
//! The construction works on the `2N` generators `X_1..X_N, Z_1..Z_N`:
//!
//! 1. each `U† g U` is split into Hermitian unitaries `X_g ⊗ Y_g`;
//! 2. commutation of the factors defines two binary forms `Ω_A`, `Ω_B` whose
//!    kernels are the strings acting trivially on `B` (resp. `A`);
//! 3. a symplectic basis of each kernel gives a Pauli frame on `A` (resp. `B`),
//!    realized by a unitary `V` (resp. `W`);
//! 4. in that frame every evolved generator is a signed Pauli string, which
//!    fixes the tableau of `C`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::clifford::{CliffordTableau, Sign};
use crate::error::{Error, Result};
use crate::linalg::{
    check_dense_limit, matmul, matmul_adj_left, pauli_coefficients, Bipartition, DenseOperator,
    C64, DENSE_LIMIT, ONE, ZERO,
};
use crate::magic::linear_magic_unchecked;
use crate::operator::{realign_matrix, spectrum_of_matrix, UNITARY_TOL};
use crate::pauli::{enumerate_all, Pauli, PauliString};

/// Threshold on the second Schmidt coefficient for "product".
pub const PRODUCT_TOL: f64 = 1e-10;
/// Tolerance for `X^2 = 1`, `X = X†` on extracted factors.
pub const FACTOR_TOL: f64 = 1e-10;
/// Reconstruction tolerance for a factorization.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Largest register for the exhaustive part of the product check.
pub const CHECK_LIMIT: usize = 6;
/// Largest register for the Pauli sweep inside verification.
pub const VERIFY_SWEEP_LIMIT: usize = 4;

const SIGNIFICANT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LocalCliffordFactorization {
    pub v: DenseOperator,
    pub w: DenseOperator,
    pub c: CliffordTableau,
    pub global_phase: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductCheck {
    pub preserving: bool,
    /// First string whose evolution is not a product, with its second
    /// Schmidt coefficient.
    pub witness: Option<(PauliString, f64)>,
    /// Strings examined before deciding.
    pub checked: usize,
}

/// Generators `X_1..X_N, Z_1..Z_N`.
fn generators(n: usize) -> Result<Vec<PauliString>> {
    let mut g = Vec::with_capacity(2 * n);
    for p in [Pauli::X, Pauli::Z] {
        for k in 0..n {
            g.push(PauliString::single(n, k, p)?);
        }
    }
    Ok(g)
}

fn evolve(u: &DMatrix<C64>, p: &PauliString) -> DMatrix<C64> {
    matmul_adj_left(u, &p.left_multiply(u))
}

fn check_shape(u: &DenseOperator, bp: &Bipartition) -> Result<()> {
    if u.n_qubits() != bp.n() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} qubits, bipartition {bp}",
            u.n_qubits()
        )));
    }
    Ok(())
}

/// Whether `U† P U` has operator-Schmidt rank one for every `P`, up to `tol`
/// on the second coefficient.
///
/// Generators are tested first. Products of generators evolve into products
/// of their evolutions, so a failure always shows up there; the exhaustive
/// sweep over the remaining strings (for `N <= 6`) guards against tolerance
/// accumulation.
pub fn check_pauli_product_preserving(
    u: &DenseOperator,
    bp: &Bipartition,
    tol: f64,
) -> Result<ProductCheck> {
    check_shape(u, bp)?;
    check_dense_limit("product-preservation check", bp.n(), DENSE_LIMIT)?;
    u.ensure_unitary(UNITARY_TOL)?;
    let m = u.matrix();
    let lambda2 = |p: &PauliString| spectrum_of_matrix(&evolve(m, p), bp.d_a(), bp.d_b()).lambda2();
    let gens = generators(bp.n())?;
    for (k, g) in gens.iter().enumerate() {
        let l2 = lambda2(g);
        if l2 > tol {
            return Ok(ProductCheck {
                preserving: false,
                witness: Some((*g, l2)),
                checked: k + 1,
            });
        }
    }
    if bp.n() > CHECK_LIMIT {
        return Ok(ProductCheck {
            preserving: true,
            witness: None,
            checked: gens.len(),
        });
    }
    let rest: Vec<PauliString> = enumerate_all(bp.n())?
        .filter(|p| !p.is_identity() && !gens.contains(p))
        .collect();
    let failure = rest
        .par_iter()
        .enumerate()
        .map(|(k, p)| (k, *p, lambda2(p)))
        .find_first(|(_, _, l2)| *l2 > tol);
    Ok(match failure {
        Some((k, p, l2)) => ProductCheck {
            preserving: false,
            witness: Some((p, l2)),
            checked: gens.len() + k + 1,
        },
        None => ProductCheck {
            preserving: true,
            witness: None,
            checked: gens.len() + rest.len(),
        },
    })
}

fn herm_dev(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn involution_dev(m: &DMatrix<C64>) -> f64 {
    let sq = matmul(m, m);
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let t = if i == j { ONE } else { ZERO };
            dev = dev.max((sq[(i, j)] - t).norm());
        }
    }
    dev
}

/// First clearly nonzero entry, scanning the diagonal and then the upper
/// triangle row by row.
fn leading_entry(x: &DMatrix<C64>) -> Option<C64> {
    let n = x.nrows();
    (0..n)
        .map(|i| x[(i, i)])
        .chain((0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| x[(i, j)]))
        .find(|v| v.norm() > SIGNIFICANT)
}

/// Rescales raw factors of a Hermitian unitary `x ⊗ y` so that both become
/// Hermitian unitaries, then fixes the pair sign so the leading entry of `x`
/// has positive real part (or positive imaginary part if the real part vanishes).
pub fn normalize_product_factors(
    x_raw: &DMatrix<C64>,
    y_raw: &DMatrix<C64>,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let d_b = y_raw.nrows() as f64;
    let norm_y = y_raw.iter().map(|v| v.norm_sqr()).sum::<f64>();
    if norm_y == 0.0 {
        return Err(Error::InvalidArgument("zero factor".into()));
    }
    let s = (norm_y / d_b).sqrt();
    let mut x = x_raw * C64::new(s, 0.0);
    let mut y = y_raw / C64::new(s, 0.0);
    // Y† = c Y with |c| = 1 and Tr(Y^2) = conj(c) d_B; rotating by
    // exp(-i theta / 2), theta = arg Tr(Y^2), makes Y Hermitian.
    let tr_y2: C64 = (0..y.nrows())
        .map(|i| (0..y.ncols()).map(|k| y[(i, k)] * y[(k, i)]).sum::<C64>())
        .sum();
    let half = C64::from_polar(1.0, -tr_y2.arg() / 2.0);
    y *= half;
    x *= half.conj();
    if let Some(lead) = leading_entry(&x) {
        let flip = if lead.re.abs() > SIGNIFICANT {
            lead.re < 0.0
        } else {
            lead.im < 0.0
        };
        if flip {
            x = -x;
            y = -y;
        }
    }
    for (name, m) in [("A", &x), ("B", &y)] {
        let hd = herm_dev(m);
        let id = involution_dev(m);
        if hd > FACTOR_TOL || id > FACTOR_TOL {
            return Err(Error::Canonicalization(format!(
                "{name} factor is not a Hermitian unitary (hermiticity {hd:.2e}, involution {id:.2e})"
            )));
        }
    }
    Ok((x, y))
}

/// Splits a Hermitian unitary of operator-Schmidt rank one into Hermitian
/// unitary factors `x ⊗ y`.
pub fn extract_hermitian_unitary_factors(
    o: &DenseOperator,
    bp: &Bipartition,
    tol: f64,
) -> Result<(DenseOperator, DenseOperator)> {
    check_shape(o, bp)?;
    o.ensure_unitary(UNITARY_TOL)?;
    o.ensure_hermitian(FACTOR_TOL)?;
    let (x, y) = factors_of_matrix(o.matrix(), bp, tol)?;
    Ok((
        DenseOperator::new(bp.n_a(), x)?,
        DenseOperator::new(bp.n_b(), y)?,
    ))
}

fn factors_of_matrix(
    m: &DMatrix<C64>,
    bp: &Bipartition,
    tol: f64,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let (d_a, d_b) = (bp.d_a(), bp.d_b());
    let lambda2 = spectrum_of_matrix(m, d_a, d_b).lambda2();
    if lambda2 > tol {
        return Err(Error::NotProduct { lambda2 });
    }
    // R[(a,a'),(b,b')] = x[a,a'] y[b,b'] / sqrt(d) is rank one, so the row
    // and column through its largest entry carry both factors.
    let r = realign_matrix(m, d_a, d_b);
    let (mut pi, mut pj, mut best) = (0, 0, 0.0);
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            let v = r[(i, j)].norm_sqr();
            if v > best {
                (pi, pj, best) = (i, j, v);
            }
        }
    }
    let pivot = r[(pi, pj)];
    let x_raw = DMatrix::from_fn(d_a, d_a, |a, ap| r[(a * d_a + ap, pj)] / pivot);
    let sqrt_d = ((d_a * d_b) as f64).sqrt();
    let y_raw = DMatrix::from_fn(d_b, d_b, |b, bq| r[(pi, b * d_b + bq)] * sqrt_d);
    normalize_product_factors(&x_raw, &y_raw)
}

/// Pairwise commutation pattern: entry `(j, k)` is 1 when the operators anticommute.
fn commutation_matrix(ops: &[DMatrix<C64>], side: &str) -> Result<Vec<u64>> {
    let n = ops.len();
    let mut rows = vec![0u64; n];
    for j in 0..n {
        for k in j + 1..n {
            let ab = matmul(&ops[j], &ops[k]);
            let ba = matmul(&ops[k], &ops[j]);
            let comm = (&ab - &ba).norm();
            let anti = (&ab + &ba).norm();
            let scale = (ops[j].nrows() as f64).sqrt();
            if comm.min(anti) > 1e-8 * scale {
                return Err(Error::Canonicalization(format!(
                    "{side} factors {j} and {k} neither commute nor anticommute \
                     (|[,]| = {comm:.2e}, |{{,}}| = {anti:.2e})"
                )));
            }
            if anti < comm {
                rows[j] |= 1 << k;
                rows[k] |= 1 << j;
            }
        }
    }
    Ok(rows)
}

fn form(rows: &[u64], a: u64, b: u64) -> bool {
    let mut acc = 0u32;
    let mut bits = a;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        acc += (rows[j] & b).count_ones();
        bits &= bits - 1;
    }
    acc % 2 == 1
}

/// Null space of a symmetric binary matrix given by rows of bits.
fn gf2_kernel(rows: &[u64], n: usize) -> Vec<u64> {
    let mut pivots: Vec<(usize, u64)> = Vec::new();
    let mut reduced: Vec<u64> = rows.to_vec();
    let mut pivot_rows: Vec<u64> = Vec::new();
    for col in 0..n {
        let bit = 1u64 << col;
        let Some(pos) = reduced.iter().position(|r| r & bit != 0) else {
            continue;
        };
        let pr = reduced.swap_remove(pos);
        for r in reduced.iter_mut() {
            if *r & bit != 0 {
                *r ^= pr;
            }
        }
        for r in pivot_rows.iter_mut() {
            if *r & bit != 0 {
                *r ^= pr;
            }
        }
        pivot_rows.push(pr);
        pivots.push((col, pr));
    }
    let pivot_cols: u64 = pivots.iter().map(|(c, _)| 1u64 << c).sum();
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_cols & (1 << free) != 0 {
            continue;
        }
        let mut v = 1u64 << free;
        for (i, (col, _)) in pivots.iter().enumerate() {
            if pivot_rows[i] & (1 << free) != 0 {
                v |= 1 << col;
            }
        }
        basis.push(v);
    }
    basis
}

/// Symplectic pairs `(e_i, f_i)` with `form(e_i, f_i) = 1`, orthogonal otherwise.
fn symplectic_basis(rows: &[u64], span: Vec<u64>) -> Result<Vec<(u64, u64)>> {
    let mut pool = span;
    let mut pairs = Vec::new();
    while let Some(e) = pool.first().copied() {
        pool.remove(0);
        let Some(pos) = pool.iter().position(|&f| form(rows, e, f)) else {
            return Err(Error::Canonicalization(
                "commutation form is degenerate on the local subgroup".into(),
            ));
        };
        let f = pool.remove(pos);
        for v in pool.iter_mut() {
            let mut w = *v;
            if form(rows, *v, f) {
                w ^= e;
            }
            if form(rows, *v, e) {
                w ^= f;
            }
            *v = w;
        }
        pool.retain(|v| *v != 0);
        pairs.push((e, f));
    }
    Ok(pairs)
}

/// Product of the factors selected by `v`, rescaled by a phase to be Hermitian.
fn hermitian_product(ops: &[DMatrix<C64>], v: u64) -> Result<DMatrix<C64>> {
    let dim = ops[0].nrows();
    let mut m = DMatrix::<C64>::identity(dim, dim);
    for (j, op) in ops.iter().enumerate() {
        if v & (1 << j) != 0 {
            m = matmul(&m, op);
        }
    }
    if herm_dev(&m) < 1e-8 {
        Ok(m)
    } else {
        let im = m * C64::new(0.0, 1.0);
        if herm_dev(&im) < 1e-8 {
            Ok(im)
        } else {
            Err(Error::Canonicalization("factor product is not Hermitian up to a phase".into()))
        }
    }
}

/// Unitary `V` with `V X_i V† = xs[i]` and `V Z_i V† = zs[i]`.
fn frame_unitary(xs: &[DMatrix<C64>], zs: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let n = xs.len();
    let dim = 1usize << n;
    let threshold = 0.5 / dim as f64;
    let mut psi0 = None;
    for y in 0..dim {
        let mut v = DVector::from_element(dim, ZERO);
        v[y] = ONE;
        for z in zs {
            v = (&v + z * &v) * C64::new(0.5, 0.0);
        }
        let nrm = v.norm();
        if nrm * nrm > threshold {
            psi0 = Some(v / C64::new(nrm, 0.0));
            break;
        }
    }
    let psi0 = psi0.ok_or_else(|| {
        Error::Canonicalization("local Z frame has no common +1 eigenvector".into())
    })?;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    m.set_column(0, &psi0);
    for c in 1..dim {
        let low = c & c.wrapping_neg();
        let site = n - 1 - low.trailing_zeros() as usize;
        let prev = m.column(c ^ low).into_owned();
        m.set_column(c, &(&xs[site] * prev));
    }
    Ok(m)
}

/// Signed Pauli string equal to `m`, if there is one.
fn as_signed_pauli(m: &DMatrix<C64>) -> Option<(PauliString, Sign)> {
    let dim = m.nrows();
    let n = dim.trailing_zeros() as usize;
    let coeffs = pauli_coefficients(m);
    let (k, c) = coeffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let c = c / dim as f64;
    if (c.norm() - 1.0).abs() > 1e-8 || c.im.abs() > 1e-8 {
        return None;
    }
    let sign = if c.re > 0.0 { Sign::Plus } else { Sign::Minus };
    Some((PauliString::from_index(n, k as u128), sign))
}

/// Recovers `U† = phase (V ⊗ W) C`.
pub fn factorize(u: &DenseOperator, bp: &Bipartition, tol: f64) -> Result<LocalCliffordFactorization> {
    check_shape(u, bp)?;
    check_dense_limit("factorization", bp.n(), DENSE_LIMIT)?;
    u.ensure_unitary(UNITARY_TOL)?;
    let n = bp.n();
    let m = u.matrix();
    let gens = generators(n)?;

    let mut xs = Vec::with_capacity(2 * n);
    let mut ys = Vec::with_capacity(2 * n);
    for g in &gens {
        let evolved = evolve(m, g);
        let (x, y) = factors_of_matrix(&evolved, bp, tol).map_err(|e| match e {
            Error::NotProduct { lambda2 } => Error::NotProductPreserving {
                witness: g.to_string(),
                lambda2,
            },
            other => other,
        })?;
        xs.push(x);
        ys.push(y);
    }

    let omega_a = commutation_matrix(&xs, "A")?;
    let omega_b = commutation_matrix(&ys, "B")?;
    for j in 0..2 * n {
        for k in 0..2 * n {
            let expected = (j + n == k) || (k + n == j);
            let got = ((omega_a[j] ^ omega_b[j]) >> k) & 1 == 1;
            if expected != got {
                return Err(Error::Canonicalization(format!(
                    "factor commutation of generators {j}, {k} disagrees with the Pauli algebra"
                )));
            }
        }
    }

    // Strings whose B factor is trivial are the kernel of Ω_B; they carry the
    // A-side Pauli algebra with form Ω_A (and symmetrically for B).
    let v = local_frame(&xs, &omega_a, &omega_b, "A")?;
    let w = local_frame(&ys, &omega_b, &omega_a, "B")?;

    let mut images = Vec::with_capacity(2 * n);
    for (j, g) in gens.iter().enumerate() {
        let a = matmul_adj_left(&v, &matmul(&xs[j], &v));
        let b = matmul_adj_left(&w, &matmul(&ys[j], &w));
        let (pa, sa) = as_signed_pauli(&a).ok_or_else(|| {
            Error::Canonicalization(format!("A factor of evolved {g} is not a Pauli string in the frame"))
        })?;
        let (pb, sb) = as_signed_pauli(&b).ok_or_else(|| {
            Error::Canonicalization(format!("B factor of evolved {g} is not a Pauli string in the frame"))
        })?;
        let sign = if sa == sb { Sign::Plus } else { Sign::Minus };
        images.push((PauliString::tensor(&pa, &pb)?, sign));
    }
    let c = CliffordTableau::from_generator_images(&images)?;

    let vw = v.kronecker(&w);
    let full = matmul(&vw, c.to_dense()?.matrix());
    // Tr(M† U†) = sum_ij conj(M[j,i]) conj(U[i,j]).
    let mut overlap = ZERO;
    for i in 0..full.nrows() {
        for j in 0..full.ncols() {
            overlap += (full[(j, i)] * m[(i, j)]).conj();
        }
    }
    if overlap.norm() < 1e-12 {
        return Err(Error::Canonicalization("reconstruction has no overlap with U†".into()));
    }
    let global_phase = overlap / overlap.norm();
    let f = LocalCliffordFactorization {
        v: DenseOperator::new(bp.n_a(), v)?,
        w: DenseOperator::new(bp.n_b(), w)?,
        c,
        global_phase,
    };
    let residual = reconstruction_residual(u, &f)?;
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::Canonicalization(format!(
            "reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_TOL:.0e}"
        )));
    }
    Ok(f)
}

/// Pauli frame for one side: identity when the factors already are signed
/// Pauli strings, otherwise built from a symplectic basis of the local subgroup.
fn local_frame(
    ops: &[DMatrix<C64>],
    own_form: &[u64],
    other_form: &[u64],
    side: &str,
) -> Result<DMatrix<C64>> {
    let dim = ops[0].nrows();
    if ops.iter().all(|o| as_signed_pauli(o).is_some()) {
        return Ok(DMatrix::identity(dim, dim));
    }
    let n_local = dim.trailing_zeros() as usize;
    let kernel = gf2_kernel(other_form, ops.len());
    if kernel.len() != 2 * n_local {
        return Err(Error::Canonicalization(format!(
            "local subgroup on {side} has dimension {}, expected {}",
            kernel.len(),
            2 * n_local
        )));
    }
    let pairs = symplectic_basis(own_form, kernel)?;
    let mut xs = Vec::with_capacity(n_local);
    let mut zs = Vec::with_capacity(n_local);
    for (e, f) in pairs {
        zs.push(hermitian_product(ops, e)?);
        xs.push(hermitian_product(ops, f)?);
    }
    frame_unitary(&xs, &zs)
}

fn reconstruction_residual(u: &DenseOperator, f: &LocalCliffordFactorization) -> Result<f64> {
    if f.v.n_qubits() + f.w.n_qubits() != u.n_qubits() || f.c.n_qubits() != u.n_qubits() {
        return Err(Error::DimensionMismatch("factorization does not match operator".into()));
    }
    let full = matmul(&f.v.matrix().kronecker(f.w.matrix()), f.c.to_dense()?.matrix()) * f.global_phase;
    let diff = full - u.matrix().adjoint();
    Ok(diff.norm() / (u.dim() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    /// `‖phase (V ⊗ W) C - U†‖_F / sqrt(d)`.
    pub residual: f64,
    /// Largest `M_lin((V†⊗W†) U† P U (V⊗W))` over all `P`, when `N <= 4`.
    pub max_local_magic: Option<f64>,
}

/// Reconstruction residual and, for small registers, the largest operator
/// magic left after undoing the local unitaries.
pub fn verify_factorization(u: &DenseOperator, f: &LocalCliffordFactorization) -> Result<FactorizationReport> {
    let residual = reconstruction_residual(u, f)?;
    let max_local_magic = if u.n_qubits() <= VERIFY_SWEEP_LIMIT {
        let vw = f.v.matrix().kronecker(f.w.matrix());
        let m = u.matrix();
        let mut worst: f64 = 0.0;
        for p in enumerate_all(u.n_qubits())? {
            let x = matmul_adj_left(&vw, &matmul(&evolve(m, &p), &vw));
            worst = worst.max(linear_magic_unchecked(&x).abs());
        }
        Some(worst)
    } else {
        None
    };
    Ok(FactorizationReport {
        residual,
        max_local_magic,
    })
}

impl LocalCliffordFactorization {
    /// Plain-text report: phase, `V` and `W` as matrix blocks, `C` as a tableau.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "GLOBAL_PHASE {:.17e} {:.17e}\n",
            self.global_phase.re, self.global_phase.im
        ));
        s.push_str("V\n");
        s.push_str(&crate::io::matrix_to_text(&self.v));
        s.push_str("W\n");
        s.push_str(&crate::io::matrix_to_text(&self.w));
        s.push_str(&self.c.to_text());
        s
    }
}
