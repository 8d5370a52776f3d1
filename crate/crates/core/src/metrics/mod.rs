//! Fidelities and statistical distances between states and between channels.

mod diamond;

pub use diamond::{diamond_distance_bounds, diamond_lower_bound, DiamondBounds};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat};
use crate::qmodel::{DensityMatrix, QuantumChannel};

fn check_same_dim(what: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(QcvvError::DimensionMismatch {
            what,
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// `(Tr√(√ρ σ √ρ))²`, evaluated as the squared nuclear norm of `√ρ √σ`.
pub(crate) fn fidelity_of_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let f = linalg::nuclear_norm(&(linalg::psd_sqrt(rho) * linalg::psd_sqrt(sigma)));
    (f * f).clamp(0.0, 1.0)
}

pub(crate) fn trace_distance_of_matrices(a: &CMat, b: &CMat) -> f64 {
    let diff = a - b;
    0.5 * linalg::eigvalsh(&diff).iter().map(|l| l.abs()).sum::<f64>()
}

/// Squared (Uhlmann) fidelity between two states.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim("state", rho.dim(), sigma.dim())?;
    Ok(fidelity_of_matrices(rho.matrix(), sigma.matrix()))
}

/// `⟨ψ|ρ|ψ⟩` for a pure reference state.
pub fn pure_state_fidelity(psi: &crate::qmodel::PureState, rho: &DensityMatrix) -> Result<f64> {
    check_same_dim("state", psi.dim(), rho.dim())?;
    let v = psi.vec();
    Ok((v.adjoint() * rho.matrix() * v)[(0, 0)].re.clamp(0.0, 1.0))
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim("state", rho.dim(), sigma.dim())?;
    Ok(trace_distance_of_matrices(rho.matrix(), sigma.matrix()).clamp(0.0, 1.0))
}

/// Total variation distance between two probability vectors.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(QcvvError::DimensionMismatch {
            what: "distribution",
            expected: p.len(),
            found: q.len(),
        });
    }
    for (name, v) in [("p", p), ("q", q)] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-6 || v.iter().any(|&x| x < 0.0 || x.is_nan()) {
            return Err(QcvvError::validation(format!(
                "{name} is not a probability vector (sum {s})"
            )));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Fidelity between the Choi states of two channels.
pub fn process_fidelity(g: &QuantumChannel, gp: &QuantumChannel) -> Result<f64> {
    check_same_dim("channel", g.dim(), gp.dim())?;
    Ok(fidelity_of_matrices(&g.choi(), &gp.choi()))
}

/// `(d·F_process + 1)/(d + 1)`.
pub fn avg_gate_fidelity(f_process: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_process) {
        return Err(QcvvError::validation(format!(
            "process fidelity {f_process} outside [0, 1]"
        )));
    }
    if d < 2 {
        return Err(QcvvError::validation(format!("dimension {d} < 2")));
    }
    let d = d as f64;
    Ok((d * f_process + 1.0) / (d + 1.0))
}
