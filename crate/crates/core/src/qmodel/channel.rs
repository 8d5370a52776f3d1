use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat, DEFAULT_TOL};
use crate::qmodel::DensityMatrix;

/// Completely positive, trace-preserving map on d×d matrices.
///
/// The Kraus list is the primary representation. The column-stacking
/// superoperator is materialized on first use and cached; the Choi matrix and
/// Pauli transfer matrix are derived views.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim: usize,
    kraus: Vec<CMat>,
    superop: OnceLock<CMat>,
}

impl PartialEq for QuantumChannel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && linalg::max_abs_diff(self.superop(), other.superop()) <= DEFAULT_TOL
    }
}

/// `S = Σ_k conj(K_k) ⊗ K_k`, so that `S·vec(ρ) = vec(Σ_k K_k ρ K_k†)`.
pub fn kraus_to_superop(kraus: &[CMat]) -> Result<CMat> {
    let d = check_kraus_shapes(kraus)?;
    let mut s = CMat::zeros(d * d, d * d);
    for k in kraus {
        s += k.conjugate().kronecker(k);
    }
    Ok(s)
}

fn check_kraus_shapes(kraus: &[CMat]) -> Result<usize> {
    let first = kraus
        .first()
        .ok_or_else(|| QcvvError::validation("empty Kraus operator list"))?;
    let d = first.nrows();
    if d == 0 {
        return Err(QcvvError::validation("zero-dimensional Kraus operator"));
    }
    for (i, k) in kraus.iter().enumerate() {
        if k.nrows() != d || k.ncols() != d {
            return Err(QcvvError::validation(format!(
                "Kraus operator {i} has shape {}×{}, expected {d}×{d}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    Ok(d)
}

/// Unnormalized Choi matrix `J = Σ_ij G(|i⟩⟨j|) ⊗ |i⟩⟨j|` (output ⊗ input).
pub(crate) fn choi_from_superop(s: &CMat, d: usize) -> CMat {
    let mut j = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for i in 0..d {
            for b in 0..d {
                for jj in 0..d {
                    j[(a * d + i, b * d + jj)] = s[(b * d + a, jj * d + i)];
                }
            }
        }
    }
    j
}

pub(crate) fn superop_from_choi(j: &CMat, d: usize) -> CMat {
    let mut s = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for i in 0..d {
            for b in 0..d {
                for jj in 0..d {
                    s[(b * d + a, jj * d + i)] = j[(a * d + i, b * d + jj)];
                }
            }
        }
    }
    s
}

fn kraus_from_choi(j: &CMat, d: usize) -> Vec<CMat> {
    let (vals, vecs) = linalg::eigh(j);
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut kraus = Vec::new();
    for (k, &lam) in vals.iter().enumerate().rev() {
        if lam <= 1e-14 * scale {
            continue;
        }
        let v = vecs.column(k);
        let amp = c(lam.sqrt(), 0.0);
        kraus.push(CMat::from_fn(d, d, |a, i| v[a * d + i] * amp));
    }
    if kraus.is_empty() {
        kraus.push(CMat::zeros(d, d));
    }
    kraus
}

impl QuantumChannel {
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        Self::from_kraus_with_tolerance(kraus, DEFAULT_TOL)
    }

    pub fn from_kraus_with_tolerance(kraus: Vec<CMat>, tol: f64) -> Result<Self> {
        let d = check_kraus_shapes(&kraus)?;
        let mut sum = CMat::zeros(d, d);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(d));
        if dev > tol {
            return Err(QcvvError::validation(format!(
                "channel is not trace preserving: max |Σ K†K − I| = {dev:e}"
            )));
        }
        Ok(Self::new_unchecked(kraus))
    }

    pub(crate) fn new_unchecked(kraus: Vec<CMat>) -> Self {
        let dim = kraus[0].nrows();
        let mut ch = Self {
            dim,
            kraus,
            superop: OnceLock::new(),
        };
        if ch.kraus.len() > dim * dim {
            ch.kraus = kraus_from_choi(&ch.choi_unnormalized(), dim);
        }
        ch
    }

    /// Channel `ρ ↦ UρU†`.
    pub fn unitary(u: CMat) -> Result<Self> {
        if !u.is_square() || u.nrows() == 0 {
            return Err(QcvvError::validation("unitary must be square and nonempty"));
        }
        let d = u.nrows();
        let dev = linalg::max_abs_diff(&(u.adjoint() * &u), &linalg::identity(d));
        if dev > DEFAULT_TOL {
            return Err(QcvvError::validation(format!(
                "matrix is not unitary: max |U†U − I| = {dev:e}"
            )));
        }
        Ok(Self::new_unchecked(vec![u]))
    }

    pub fn identity(d: usize) -> Self {
        Self::new_unchecked(vec![linalg::identity(d)])
    }

    /// Build from a superoperator, recovering Kraus operators through the Choi matrix.
    pub fn from_superop(s: CMat) -> Result<Self> {
        Self::from_superop_with_tolerance(s, DEFAULT_TOL)
    }

    pub fn from_superop_with_tolerance(s: CMat, tol: f64) -> Result<Self> {
        let d2 = s.nrows();
        let d = (d2 as f64).sqrt().round() as usize;
        if !s.is_square() || d * d != d2 || d == 0 {
            return Err(QcvvError::validation(format!(
                "superoperator must be d²×d², got {}×{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let j = choi_from_superop(&s, d);
        Self::from_choi_checked(j, d, tol, Some(s))
    }

    /// Build from a unit-trace Choi matrix `(G ⊗ id)[|Ψ⟩⟨Ψ|]`.
    pub fn from_choi(choi: CMat) -> Result<Self> {
        let d2 = choi.nrows();
        let d = (d2 as f64).sqrt().round() as usize;
        if !choi.is_square() || d * d != d2 || d == 0 {
            return Err(QcvvError::validation("Choi matrix must be d²×d²"));
        }
        Self::from_choi_checked(choi * c(d as f64, 0.0), d, DEFAULT_TOL, None)
    }

    fn from_choi_checked(j: CMat, d: usize, tol: f64, superop: Option<CMat>) -> Result<Self> {
        let herm = linalg::max_abs_diff(&j, &j.adjoint());
        if herm > tol {
            return Err(QcvvError::validation(format!(
                "Choi matrix is not Hermitian (deviation {herm:e}); map is not Hermiticity preserving"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&j) / d as f64;
        if min_eig < -tol {
            return Err(QcvvError::validation(format!(
                "map is not completely positive: Choi min eigenvalue {min_eig:e}"
            )));
        }
        let tp = linalg::partial_trace_first(&j, d, d);
        let dev = linalg::max_abs_diff(&tp, &linalg::identity(d));
        if dev > tol {
            return Err(QcvvError::validation(format!(
                "map is not trace preserving: deviation {dev:e}"
            )));
        }
        let kraus = kraus_from_choi(&j, d);
        let superop = superop.unwrap_or_else(|| superop_from_choi(&j, d));
        Ok(Self {
            dim: d,
            kraus,
            superop: OnceLock::from(superop),
        })
    }

    /// `ρ ↦ (1 − q)ρ + q·I/d` on an n-qubit register.
    pub fn depolarizing(n_qubits: usize, q: f64) -> Result<Self> {
        check_unit_interval("depolarizing q", q)?;
        let d = 1usize << n_qubits;
        let d2 = (d * d) as f64;
        let mut kraus = Vec::with_capacity(d * d);
        kraus.push(linalg::identity(d) * c((1.0 - q * (d2 - 1.0) / d2).max(0.0).sqrt(), 0.0));
        if q > 0.0 {
            let w = c((q / d2).sqrt(), 0.0);
            for idx in 1..d * d {
                kraus.push(linalg::pauli_from_index(n_qubits, idx) * w);
            }
        }
        Ok(Self::new_unchecked(kraus))
    }

    /// Single-qubit amplitude damping with decay probability γ.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval("amplitude damping γ", gamma)?;
        let k0 = linalg::real_mat(2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]);
        let k1 = linalg::real_mat(2, &[0.0, gamma.sqrt(), 0.0, 0.0]);
        Ok(Self::new_unchecked(vec![k0, k1]))
    }

    /// Single-qubit classical bit flip with probability p.
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_unit_interval("bit flip probability", p)?;
        Ok(Self::new_unchecked(vec![
            linalg::identity(2) * c((1.0 - p).sqrt(), 0.0),
            linalg::pauli_x() * c(p.sqrt(), 0.0),
        ]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn superop(&self) -> &CMat {
        self.superop.get_or_init(|| {
            kraus_to_superop(&self.kraus).expect("Kraus shapes validated at construction")
        })
    }

    pub(crate) fn has_superop(&self) -> bool {
        self.superop.get().is_some()
    }

    fn choi_unnormalized(&self) -> CMat {
        let d = self.dim;
        let mut j = CMat::zeros(d * d, d * d);
        for k in &self.kraus {
            let w = linalg::CVec::from_fn(d * d, |idx, _| k[(idx / d, idx % d)]);
            j += &w * w.adjoint();
        }
        j
    }

    /// Unit-trace Choi state `(G ⊗ id)[|Ψ⟩⟨Ψ|]`, output factor first.
    pub fn choi(&self) -> CMat {
        self.choi_unnormalized() * c(1.0 / self.dim as f64, 0.0)
    }

    /// Choi matrix derived from the superoperator rather than the Kraus list.
    pub fn choi_via_superop(&self) -> CMat {
        choi_from_superop(self.superop(), self.dim) * c(1.0 / self.dim as f64, 0.0)
    }

    /// Real Pauli transfer matrix in the normalized Pauli basis.
    pub fn ptm(&self) -> DMatrix<f64> {
        let d = self.dim;
        let n = linalg::qubits_of(d);
        assert!(linalg::is_power_of_two(d), "PTM needs a qubit register");
        let basis = CMat::from_columns(
            &(0..d * d)
                .map(|i| linalg::vec_of(&linalg::pauli_from_index(n, i)))
                .collect::<Vec<_>>(),
        );
        let r = basis.adjoint() * self.superop() * &basis * c(1.0 / d as f64, 0.0);
        r.map(|z| z.re)
    }

    /// Apply to an arbitrary operator via the Kraus sum.
    pub fn apply_operator(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Apply to an arbitrary operator via the superoperator.
    pub fn apply_operator_superop(&self, x: &CMat) -> CMat {
        linalg::unvec(&(self.superop() * linalg::vec_of(x)), self.dim)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dims("state", self.dim, rho.dim())?;
        let out = self.apply_operator(rho.matrix());
        Ok(DensityMatrix::new_unchecked(linalg::hermitian_part(&out)))
    }

    /// `self ∘ before`: apply `before` first.
    pub fn after(&self, before: &QuantumChannel) -> Result<QuantumChannel> {
        compose_channels(self, before)
    }

    pub fn tensor(&self, other: &QuantumChannel) -> QuantumChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kronecker(b));
            }
        }
        Self::new_unchecked(kraus)
    }

    /// Same channel acting on `self.dim × ancilla` with identity on the ancilla.
    pub fn extend_with_ancilla(&self, ancilla_dim: usize) -> QuantumChannel {
        self.tensor(&QuantumChannel::identity(ancilla_dim))
    }
}

fn check_unit_interval(what: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(QcvvError::validation(format!(
            "{what} = {x} outside [0, 1]"
        )));
    }
    Ok(())
}

fn check_dims(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QcvvError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// `ρ ↦ ρ` after `G1`, then `G2`.
pub fn compose_channels(g2: &QuantumChannel, g1: &QuantumChannel) -> Result<QuantumChannel> {
    check_dims("channel", g2.dim, g1.dim)?;
    let mut kraus = Vec::with_capacity(g2.kraus.len() * g1.kraus.len());
    for k2 in &g2.kraus {
        for k1 in &g1.kraus {
            kraus.push(k2 * k1);
        }
    }
    let out = QuantumChannel::new_unchecked(kraus);
    if g2.has_superop() && g1.has_superop() {
        let _ = out.superop.set(g2.superop() * g1.superop());
    }
    Ok(out)
}

pub fn unitary_channel(u: CMat) -> Result<QuantumChannel> {
    QuantumChannel::unitary(u)
}

pub fn apply_channel(g: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    g.apply(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, real_mat};
    use crate::qmodel::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_unitary_gives_identity_superop() {
        let ch = QuantumChannel::unitary(linalg::identity(2)).unwrap();
        assert!(max_abs_diff(ch.superop(), &linalg::identity(4)) < 1e-15);
    }

    #[test]
    fn pauli_x_flips_zero() {
        let ch = QuantumChannel::unitary(linalg::pauli_x()).unwrap();
        let out = ch.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::basis(2, 1).matrix()) < 1e-15);
    }

    #[test]
    fn hadamard_makes_plus() {
        let ch = QuantumChannel::unitary(linalg::hadamard()).unwrap();
        let out = ch.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(max_abs_diff(out.matrix(), &real_mat(2, &[0.5, 0.5, 0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn non_unitary_rejected_with_deviation() {
        let err = QuantumChannel::unitary(real_mat(2, &[1.0, 0.1, 0.0, 1.0])).unwrap_err();
        assert!(err.to_string().contains("not unitary"));
    }

    #[test]
    fn kraus_shape_mismatch_rejected() {
        assert!(kraus_to_superop(&[linalg::identity(2), linalg::identity(3)]).is_err());
        assert!(kraus_to_superop(&[]).is_err());
    }

    #[test]
    fn depolarizing_superop_has_diagonal_ptm() {
        // oracle: explicit Kraus set, superop by hand-expanded kron, Pauli basis change
        let q: f64 = 0.2;
        let w0 = (1.0 - 3.0 * q / 4.0).sqrt();
        let w = (q / 4.0).sqrt();
        let kraus = vec![
            linalg::identity(2) * c(w0, 0.0),
            linalg::pauli_x() * c(w, 0.0),
            linalg::pauli_y() * c(w, 0.0),
            linalg::pauli_z() * c(w, 0.0),
        ];
        let s = kraus_to_superop(&kraus).unwrap();
        let ch = QuantumChannel::from_superop(s).unwrap();
        let r = ch.ptm();
        let expect = [1.0, 0.8, 0.8, 0.8];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!(
                    (r[(i, j)] - e).abs() < 1e-12,
                    "PTM[{i},{j}] = {}",
                    r[(i, j)]
                );
            }
        }
        let built = QuantumChannel::depolarizing(1, 0.2).unwrap();
        assert!(max_abs_diff(built.superop(), ch.superop()) < 1e-12);
    }

    #[test]
    fn full_amplitude_damping_resets() {
        let ch = QuantumChannel::amplitude_damping(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let rho = random::random_density(2, &mut rng);
            let out = ch.apply(&rho).unwrap();
            assert!(max_abs_diff(out.matrix(), DensityMatrix::basis(2, 0).matrix()) < 1e-12);
        }
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random::random_density(2, &mut rng);
        let id = QuantumChannel::identity(2);
        assert!(max_abs_diff(id.apply(&rho).unwrap().matrix(), rho.matrix()) < 1e-15);

        let dep = QuantumChannel::depolarizing(1, 1.0).unwrap();
        let out = dep.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);

        // hand Kraus sum: K0|1⟩⟨1|K0† = 0.5|1⟩⟨1|, K1|1⟩⟨1|K1† = 0.5|0⟩⟨0|
        let ad = QuantumChannel::amplitude_damping(0.5).unwrap();
        let out = ad.apply(&DensityMatrix::basis(2, 1)).unwrap();
        assert!(max_abs_diff(out.matrix(), &real_mat(2, &[0.5, 0.0, 0.0, 0.5])) < 1e-12);
    }

    #[test]
    fn apply_dim_mismatch_names_dims() {
        let err = QuantumChannel::identity(2)
            .apply(&DensityMatrix::basis(4, 0))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('2') && msg.contains('4'), "{msg}");
    }

    #[test]
    fn composition_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random::random_channel(2, &mut rng);
        let gi = compose_channels(&g, &QuantumChannel::identity(2)).unwrap();
        assert!(max_abs_diff(gi.superop(), g.superop()) < 1e-12);

        let x = QuantumChannel::unitary(linalg::pauli_x()).unwrap();
        let xx = compose_channels(&x, &x).unwrap();
        assert!(max_abs_diff(xx.superop(), &linalg::identity(4)) < 1e-15);

        // PTM oracle: diag(1, a, a, a)·diag(1, b, b, b)
        let (q1, q2) = (0.1, 0.25);
        let composed = compose_channels(
            &QuantumChannel::depolarizing(1, q1).unwrap(),
            &QuantumChannel::depolarizing(1, q2).unwrap(),
        )
        .unwrap();
        let expect = QuantumChannel::depolarizing(1, 1.0 - (1.0 - q1) * (1.0 - q2)).unwrap();
        assert!(max_abs_diff(composed.superop(), expect.superop()) < 1e-12);
    }

    #[test]
    fn representations_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in [2, 4] {
            for _ in 0..20 {
                let g = random::random_channel(d, &mut rng);
                assert!(max_abs_diff(&g.choi(), &g.choi_via_superop()) < 1e-12);
                let via_s = QuantumChannel::from_superop(g.superop().clone()).unwrap();
                let via_j = QuantumChannel::from_choi(g.choi()).unwrap();
                let s_from_kraus = kraus_to_superop(via_j.kraus()).unwrap();
                assert!(max_abs_diff(via_j.superop(), g.superop()) < 1e-9);
                assert!(
                    max_abs_diff(
                        &superop_from_choi(&choi_from_superop(g.superop(), d), d),
                        g.superop()
                    ) < 1e-15
                );
                assert!(max_abs_diff(&s_from_kraus, g.superop()) < 1e-9);
                assert!(
                    max_abs_diff(&kraus_to_superop(via_s.kraus()).unwrap(), g.superop()) < 1e-9
                );
                let rho = random::random_density(d, &mut rng);
                let a = g.apply_operator(rho.matrix());
                let b = g.apply_operator_superop(rho.matrix());
                assert!(max_abs_diff(&a, &b) < 1e-12);
            }
        }
    }

    #[test]
    fn non_cp_superop_rejected() {
        // transpose map is positive but not completely positive
        let mut s = CMat::zeros(4, 4);
        for r in 0..2 {
            for cc in 0..2 {
                s[(r * 2 + cc, cc * 2 + r)] = linalg::ONE;
            }
        }
        let err = QuantumChannel::from_superop(s).unwrap_err();
        assert!(err.to_string().contains("completely positive"));
    }

    #[test]
    fn kraus_count_is_compressed() {
        let dep = QuantumChannel::depolarizing(1, 0.3).unwrap();
        let mut acc = dep.clone();
        for _ in 0..4 {
            acc = compose_channels(&dep, &acc).unwrap();
        }
        assert!(acc.kraus().len() <= 4);
        let expect = QuantumChannel::depolarizing(1, 1.0 - 0.7f64.powi(5)).unwrap();
        assert!(max_abs_diff(acc.superop(), expect.superop()) < 1e-12);
    }
}
