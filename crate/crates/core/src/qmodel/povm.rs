use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat, DEFAULT_TOL};
use crate::qmodel::DensityMatrix;

/// Positive operator-valued measure: ordered PSD effects summing to identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMat>,
}

impl Povm {
    pub fn new(effects: Vec<CMat>) -> Result<Self> {
        Self::with_tolerance(effects, DEFAULT_TOL)
    }

    pub fn with_tolerance(effects: Vec<CMat>, tol: f64) -> Result<Self> {
        let d = effects
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| QcvvError::validation("POVM has no effects"))?;
        let mut sum = CMat::zeros(d, d);
        for (k, e) in effects.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(QcvvError::validation(format!(
                    "effect {k} has shape {}×{}, expected {d}×{d}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            check_effect(e, tol)
                .map_err(|err| QcvvError::validation(format!("effect {k}: {err}")))?;
            sum += e;
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(d));
        if dev > tol {
            return Err(QcvvError::validation(format!(
                "POVM effects do not sum to identity (deviation {dev:e})"
            )));
        }
        Ok(Self { effects })
    }

    /// Projective measurement in the computational basis of n qubits.
    pub fn computational(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            effects: (0..d)
                .map(|k| DensityMatrix::basis(d, k).into_matrix())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.effects
            .iter()
            .map(|e| born_probability(e, rho))
            .collect()
    }
}

fn check_effect(e: &CMat, tol: f64) -> std::result::Result<(), String> {
    let herm = linalg::max_abs_diff(e, &e.adjoint());
    if herm > tol {
        return Err(format!("not Hermitian (deviation {herm:e})"));
    }
    let vals = linalg::eigvalsh(e);
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    if lo < -tol {
        return Err(format!("not positive semidefinite (min eigenvalue {lo:e})"));
    }
    if hi > 1.0 + tol {
        return Err(format!("eigenvalue {hi} exceeds 1"));
    }
    Ok(())
}

/// `Tr(E ρ) = ⟪E|ρ⟫`, clamped to [0, 1] when within tolerance of the boundary.
pub fn born_probability(effect: &CMat, rho: &DensityMatrix) -> Result<f64> {
    if effect.nrows() != rho.dim() || effect.ncols() != rho.dim() {
        return Err(QcvvError::DimensionMismatch {
            what: "effect",
            expected: rho.dim(),
            found: effect.nrows(),
        });
    }
    check_effect(effect, DEFAULT_TOL)
        .map_err(|e| QcvvError::validation(format!("invalid effect: {e}")))?;
    Ok(clamp_probability(born_unchecked(effect, rho.matrix())))
}

pub(crate) fn born_unchecked(effect: &CMat, rho: &CMat) -> f64 {
    // Tr(Eρ) = Σ_ab E_ab ρ_ba
    let d = rho.nrows();
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            acc += (effect[(a, b)] * rho[(b, a)]).re;
        }
    }
    acc
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if p < 0.0 && p > -DEFAULT_TOL {
        0.0
    } else if p > 1.0 && p < 1.0 + DEFAULT_TOL {
        1.0
    } else {
        p
    }
}
