use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat, CVec, DEFAULT_TOL};

/// Normalized state vector of a d-dimensional register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vec: CVec,
}

impl PureState {
    pub fn new(vec: CVec) -> Result<Self> {
        let norm = vec.norm();
        let deficit = (norm - 1.0).abs();
        if deficit > DEFAULT_TOL {
            return Err(QcvvError::validation(format!(
                "state vector is not normalized: norm {norm}, deficit {deficit:e}"
            )));
        }
        if vec.is_empty() {
            return Err(QcvvError::validation("empty state vector"));
        }
        Ok(Self { vec })
    }

    /// Computational basis state `|k⟩` in dimension d.
    pub fn basis(d: usize, k: usize) -> Self {
        assert!(k < d);
        let mut v = CVec::zeros(d);
        v[k] = linalg::ONE;
        Self { vec: v }
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on n qubits.
    pub fn ghz(n: usize) -> Self {
        let d = 1 << n;
        let mut v = CVec::zeros(d);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v[0] = c(h, 0.0);
        v[d - 1] = c(h, 0.0);
        Self { vec: v }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn vec(&self) -> &CVec {
        &self.vec
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: &self.vec * self.vec.adjoint(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace register state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tolerance(mat, DEFAULT_TOL)
    }

    /// Validate against a caller-chosen tolerance, e.g. for noisy imported models.
    pub fn with_tolerance(mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(QcvvError::validation(format!(
                "density matrix must be square and nonempty, got {}×{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = linalg::max_abs_diff(&mat, &mat.adjoint());
        if herm > tol {
            return Err(QcvvError::validation(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - linalg::ONE).norm() > tol {
            return Err(QcvvError::validation(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&mat);
        if min_eig < -tol {
            return Err(QcvvError::validation(format!(
                "density matrix not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { mat })
    }

    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn basis(d: usize, k: usize) -> Self {
        PureState::basis(d, k).density()
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: linalg::identity(d) * c(1.0 / d as f64, 0.0),
        }
    }

    /// `½(I + r·σ)` for a Bloch vector with |r| ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = (linalg::identity(2)
            + linalg::pauli_x() * c(r[0], 0.0)
            + linalg::pauli_y() * c(r[1], 0.0)
            + linalg::pauli_z() * c(r[2], 0.0))
            * c(0.5, 0.0);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn superket(&self) -> CVec {
        linalg::vec_of(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Single-qubit Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)`; panics for d ≠ 2.
    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.dim(), 2, "Bloch vector only defined for one qubit");
        let e = |p: CMat| (p * &self.mat).trace().re;
        [
            e(linalg::pauli_x()),
            e(linalg::pauli_y()),
            e(linalg::pauli_z()),
        ]
    }
}

/// `|ψ⟩⟨ψ|` with explicit normalization check on the incoming vector.
pub fn pure_density(vec: CVec) -> Result<DensityMatrix> {
    Ok(PureState::new(vec)?.density())
}
