//! Random states and channels with full support, for tests and benchmarks.

use rand::Rng;

use crate::linalg::{self, CMat};
use crate::qmodel::{DensityMatrix, PureState, QuantumChannel};

/// Pure state from a normalized complex-Gaussian vector.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    PureState::new(linalg::random_unit_vector(d, rng)).expect("normalized by construction")
}

/// Mixed state: partial trace of a random pure state on `d × d`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let psi = linalg::random_unit_vector(d * d, rng);
    let full = &psi * psi.adjoint();
    DensityMatrix::new_unchecked(linalg::hermitian_part(&linalg::partial_trace_second(
        &full, d, d,
    )))
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    linalg::haar_unitary(d, rng)
}

/// Channel from a Stinespring dilation: a Haar unitary on system ⊗ environment
/// (environment dimension d²) with the environment starting in `|0⟩`.
pub fn random_channel<R: Rng + ?Sized>(d: usize, rng: &mut R) -> QuantumChannel {
    let e = d * d;
    let u = linalg::haar_unitary(d * e, rng);
    let kraus = (0..e)
        .map(|k| CMat::from_fn(d, d, |a, b| u[(a * e + k, b * e)]))
        .collect();
    QuantumChannel::from_kraus(kraus).expect("isometry yields a TP Kraus set")
}
