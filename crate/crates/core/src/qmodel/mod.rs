//! States, channels and measurements of a noisy qubit register.

mod channel;
mod gateset;
mod povm;
pub mod random;
mod state;

pub use channel::{
    apply_channel, compose_channels, kraus_to_superop, unitary_channel, QuantumChannel,
};
pub(crate) use channel::{choi_from_superop, superop_from_choi};
pub use gateset::GateSet;
pub use povm::{born_probability, Povm};
pub(crate) use povm::{born_unchecked, clamp_probability};
pub use state::{pure_density, DensityMatrix, PureState};

#[cfg(test)]
mod properties {
    use super::*;
    use crate::linalg::{max_abs_diff, min_eigenvalue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn apply_preserves_trace_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for d in [2usize, 4] {
            for _ in 0..500 {
                let g = random::random_channel(d, &mut rng);
                let rho = random::random_density(d, &mut rng);
                let out = g.apply(&rho).unwrap();
                assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
                assert!(min_eigenvalue(out.matrix()) > -1e-9);
                assert!(DensityMatrix::new(out.matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for d in [2usize, 4] {
            for _ in 0..20 {
                let (a, b, c) = (
                    random::random_channel(d, &mut rng),
                    random::random_channel(d, &mut rng),
                    random::random_channel(d, &mut rng),
                );
                let left = compose_channels(&compose_channels(&a, &b).unwrap(), &c).unwrap();
                let right = compose_channels(&a, &compose_channels(&b, &c).unwrap()).unwrap();
                assert!(max_abs_diff(left.superop(), right.superop()) < 1e-9);
                // composed channels stay valid
                assert!(QuantumChannel::from_kraus(left.kraus().to_vec()).is_ok());
                assert!(QuantumChannel::from_choi(left.choi()).is_ok());
            }
        }
    }
}
