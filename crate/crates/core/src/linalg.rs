//! Dense complex linear algebra shared by every module.
//!
//! All vectorization uses column stacking: entry `(r, c)` of a `d × d`
//! matrix lands at index `c * d + r` of its superket. With that convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)` and `⟪A|B⟫ = Tr(A† B) = vec(A)† vec(B)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Absolute tolerance used for all invariant checks unless overridden.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalues below this are treated as rounding noise when taking roots.
pub(crate) const EIG_FLOOR: f64 = 1e-13;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Build a matrix from row-major real entries.
pub fn real_mat(d: usize, rows: &[f64]) -> CMat {
    CMat::from_row_iterator(d, d, rows.iter().map(|&x| c(x, 0.0)))
}

pub fn pauli_x() -> CMat {
    real_mat(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMat {
    real_mat(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    real_mat(2, &[h, h, h, -h])
}

/// Single-qubit Pauli by index 0..4 = I, X, Y, Z.
pub fn pauli1(k: usize) -> CMat {
    match k {
        0 => identity(2),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// n-qubit Pauli from base-4 digits, qubit 0 most significant.
pub fn pauli_from_index(n: usize, mut idx: usize) -> CMat {
    let mut digits = vec![0; n];
    for q in (0..n).rev() {
        digits[q] = idx % 4;
        idx /= 4;
    }
    digits
        .iter()
        .fold(identity(1), |acc, &k| acc.kronecker(&pauli1(k)))
}

pub fn kron_all<'a>(mats: impl IntoIterator<Item = &'a CMat>) -> CMat {
    mats.into_iter()
        .fold(identity(1), |acc, m| acc.kronecker(m))
}

pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "superket length does not match d²");
    CMat::from_column_slice(d, d, v.as_slice())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

/// Rebuild `V diag(f(λ)) V†` from an eigen-decomposition.
pub fn from_eig(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let d = vecs.nrows();
    let mut out = CMat::zeros(d, d);
    for (k, &lam) in vals.iter().enumerate() {
        let w = f(lam);
        if w == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        out += (v * v.adjoint()) * c(w, 0.0);
    }
    out
}

/// Square root of a PSD matrix; negative and noise-level eigenvalues clip to 0.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = eigh(m);
    from_eig(&vals, &vecs, |l| if l > EIG_FLOOR { l.sqrt() } else { 0.0 })
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Matrix rank by SVD with relative threshold.
pub fn rank(m: &CMat) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * 1e-12;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Moore–Penrose pseudoinverse.
pub fn pinv(m: &CMat) -> CMat {
    let sv_max = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let eps = sv_max * (m.nrows().max(m.ncols()) as f64) * 1e-12;
    m.clone()
        .pseudo_inverse(eps.max(f64::MIN_POSITIVE))
        .expect("pseudo-inverse with non-negative eps")
}

/// Largest over smallest nonzero singular value.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * 1e-12;
    let smin = sv
        .iter()
        .copied()
        .filter(|&s| s > tol)
        .fold(f64::INFINITY, f64::min);
    smax / smin
}

/// Trace over the first factor of a `(da·db) × (da·db)` operator.
pub fn partial_trace_first(m: &CMat, da: usize, db: usize) -> CMat {
    let mut out = CMat::zeros(db, db);
    for a in 0..da {
        for i in 0..db {
            for j in 0..db {
                out[(i, j)] += m[(a * db + i, a * db + j)];
            }
        }
    }
    out
}

/// Trace over the second factor of a `(da·db) × (da·db)` operator.
pub fn partial_trace_second(m: &CMat, da: usize, db: usize) -> CMat {
    let mut out = CMat::zeros(da, da);
    for a in 0..da {
        for b in 0..da {
            for k in 0..db {
                out[(a, b)] += m[(a * db + k, b * db + k)];
            }
        }
    }
    out
}

pub fn is_power_of_two(d: usize) -> bool {
    d >= 1 && d.is_power_of_two()
}

pub fn qubits_of(d: usize) -> usize {
    d.trailing_zeros() as usize
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// R's diagonal folded back into Q.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let rk = r[(k, k)];
        let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { ONE };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Uniformly random unit vector (normalized complex Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(d, |_, _| complex_gaussian(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Apply a gate on qubits `a` and `b` (in that order) of an n-qubit register,
/// returning the full `2^n × 2^n` operator. Qubit 0 is the most significant bit.
pub fn embed_two_qubit(u: &CMat, a: usize, b: usize, n: usize) -> CMat {
    assert!(a != b && a < n && b < n);
    let d = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let mut out = CMat::zeros(d, d);
    for col in 0..d {
        let sub_in = (bit(col, a) << 1) | bit(col, b);
        let rest = col & !(1 << (n - 1 - a)) & !(1 << (n - 1 - b));
        for sub_out in 0..4 {
            let amp = u[(sub_out, sub_in)];
            if amp == ZERO {
                continue;
            }
            let row = rest | ((sub_out >> 1) << (n - 1 - a)) | ((sub_out & 1) << (n - 1 - b));
            out[(row, col)] = amp;
        }
    }
    out
}

/// Apply a single-qubit operator on qubit `q` of an n-qubit register.
pub fn embed_one_qubit(u: &CMat, q: usize, n: usize) -> CMat {
    let mut out = identity(1);
    for k in 0..n {
        out = if k == q {
            out.kronecker(u)
        } else {
            out.kronecker(&identity(2))
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vec_convention_matches_kron_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CMat::from_fn(3, 3, |_, _| complex_gaussian(&mut rng));
        let x = CMat::from_fn(3, 3, |_, _| complex_gaussian(&mut rng));
        let b = CMat::from_fn(3, 3, |_, _| complex_gaussian(&mut rng));
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = b.transpose().kronecker(&a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-12);
        assert_eq!(unvec(&vec_of(&x), 3), x);
        // entry (r, c) sits at c*d + r
        assert_eq!(vec_of(&x)[2 * 3 + 1], x[(1, 2)]);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [2, 4, 8] {
            let u = haar_unitary(d, &mut rng);
            assert!(max_abs_diff(&(u.adjoint() * &u), &identity(d)) < 1e-12);
        }
    }

    #[test]
    fn embedding_agrees_with_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(4, &mut rng);
        assert!(max_abs_diff(&embed_two_qubit(&u, 0, 1, 2), &u) < 1e-15);
        let full = embed_two_qubit(&u, 0, 1, 3);
        assert!(max_abs_diff(&full, &u.kronecker(&identity(2))) < 1e-15);
        // swapped qubit order equals SWAP·U·SWAP
        let swap = real_mat(
            4,
            &[
                1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.,
            ],
        );
        let swapped = embed_two_qubit(&u, 1, 0, 2);
        assert!(max_abs_diff(&swapped, &(&swap * &u * &swap)) < 1e-15);
        let x1 = embed_one_qubit(&pauli_x(), 1, 2);
        assert!(max_abs_diff(&x1, &identity(2).kronecker(&pauli_x())) < 1e-15);
    }

    #[test]
    fn eigh_reconstructs_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CMat::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
        let h = hermitian_part(&g);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(max_abs_diff(&from_eig(&vals, &vecs, |l| l), &h) < 1e-12);
    }

    #[test]
    fn partial_traces() {
        let a = real_mat(2, &[0.7, 0.1, 0.1, 0.3]);
        let b = hermitian_part(&CMat::from_row_slice(
            3,
            3,
            &[
                c(0.5, 0.),
                c(0., 0.1),
                ZERO,
                ZERO,
                c(0.3, 0.),
                ZERO,
                ZERO,
                ZERO,
                c(0.2, 0.),
            ],
        ));
        let ab = a.kronecker(&b);
        assert!(max_abs_diff(&partial_trace_first(&ab, 2, 3), &b) < 1e-15);
        assert!(max_abs_diff(&partial_trace_second(&ab, 2, 3), &a) < 1e-15);
    }

    #[test]
    fn pauli_indexing() {
        let xz = pauli_from_index(2, 4 + 3);
        assert!(max_abs_diff(&xz, &pauli_x().kronecker(&pauli_z())) < 1e-15);
        assert_eq!(rank(&pauli_from_index(2, 0)), 4);
    }
}
