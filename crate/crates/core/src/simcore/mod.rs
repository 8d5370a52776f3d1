//! Density-matrix simulation of circuits on a noisy register.

mod circuit;
pub mod gates;
pub mod noise;

pub use circuit::{Circuit, CountData};
pub use gates::{builtin_unitary, ideal_gateset, resolve_unitary};
pub use noise::{apply_noise, build_noisy_gateset, Axis, NoiseSpec};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat};
use crate::qmodel::{born_unchecked, clamp_probability, GateSet};
use crate::seeding::{derive_seed, rng_from_seed};

/// Final register state of a circuit as a raw matrix.
pub fn final_state(gs: &GateSet, circuit: &Circuit) -> Result<CMat> {
    if circuit.n_qubits != gs.n_qubits() {
        return Err(QcvvError::DimensionMismatch {
            what: "circuit register",
            expected: gs.n_qubits(),
            found: circuit.n_qubits,
        });
    }
    let mut rho = gs.prep().matrix().clone();
    for label in &circuit.layers {
        let gate = gs.gate(label).ok_or_else(|| QcvvError::UnknownLabel {
            label: label.clone(),
            circuit_id: circuit.id.clone(),
        })?;
        rho = if gate.has_superop() {
            gate.apply_operator_superop(&rho)
        } else {
            gate.apply_operator(&rho)
        };
    }
    Ok(linalg::hermitian_part(&rho))
}

/// `p_k = Tr(E_k G_L ⋯ G_1 ρ)` for every readout effect.
pub fn circuit_probabilities(gs: &GateSet, circuit: &Circuit) -> Result<Vec<f64>> {
    let rho = final_state(gs, circuit)?;
    Ok(gs
        .meas()
        .effects()
        .iter()
        .map(|e| clamp_probability(born_unchecked(e, &rho)).clamp(0.0, 1.0))
        .collect())
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if probs.is_empty()
        || probs.iter().any(|&p| !(-1e-9..=1.0 + 1e-9).contains(&p))
        || (total - 1.0).abs() > 1e-9
    {
        return Err(QcvvError::validation(format!(
            "not a probability distribution (sum {total})"
        )));
    }
    Ok(())
}

/// Multinomial draw by sequential conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(
    probs: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_distribution(probs)?;
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let ratio = if mass > 0.0 {
            (p.max(0.0) / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(left, ratio)
            .map_err(|e| QcvvError::validation(format!("binomial sampling: {e}")))?
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= p.max(0.0);
    }
    Ok(counts)
}

/// Seeded finite-shot counts for one probability vector.
pub fn sample_counts(circuit_id: &str, probs: &[f64], shots: u64, seed: u64) -> Result<CountData> {
    let mut rng = rng_from_seed(seed);
    let counts = sample_multinomial(probs, shots, &mut rng)?;
    Ok(CountData::from_counts(circuit_id, &counts))
}

fn in_circuit(index: usize) -> impl Fn(QcvvError) -> QcvvError {
    move |e| QcvvError::InCircuit {
        index,
        source: Box::new(e),
    }
}

/// Counts for every circuit; circuit i draws from `derive_seed(seed, i)`.
pub fn run_design(
    gs: &GateSet,
    circuits: &[Circuit],
    shots: u64,
    seed: u64,
) -> Result<Vec<CountData>> {
    circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let probs = circuit_probabilities(gs, c).map_err(in_circuit(i))?;
            sample_counts(&c.id, &probs, shots, derive_seed(seed, i as u64)).map_err(in_circuit(i))
        })
        .collect()
}

/// Exact-probability records for every circuit.
pub fn exact_design(gs: &GateSet, circuits: &[Circuit]) -> Result<Vec<CountData>> {
    circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let probs = circuit_probabilities(gs, c).map_err(in_circuit(i))?;
            Ok(CountData::exact(c.id.clone(), probs))
        })
        .collect()
}

/// Measures a signed Pauli observable on a fixed state by rotating each
/// qubit into the observable's eigenbasis and reading out with `gs.meas()`.
pub struct PauliSampler<'a> {
    gs: &'a GateSet,
    rho: CMat,
}

impl<'a> PauliSampler<'a> {
    /// `rho` is the state produced on the register described by `gs`.
    pub fn new(gs: &'a GateSet, rho: CMat) -> Result<Self> {
        if rho.nrows() != gs.dim() {
            return Err(QcvvError::DimensionMismatch {
                what: "state",
                expected: gs.dim(),
                found: rho.nrows(),
            });
        }
        Ok(Self { gs, rho })
    }

    /// Parity distribution `(P(+1), P(-1))` of the unsigned Pauli `(x, z)`.
    fn parity_probs(&self, x: u32, z: u32) -> Vec<f64> {
        let n = self.gs.n_qubits();
        let mut v = linalg::identity(self.gs.dim());
        let sdg = CMat::from_diagonal(&linalg::CVec::from_vec(vec![linalg::ONE, -linalg::I]));
        for q in 0..n {
            let (xb, zb) = ((x >> q) & 1, (z >> q) & 1);
            let r = match (xb, zb) {
                (1, 0) => linalg::hadamard(),
                (1, 1) => linalg::hadamard() * &sdg,
                _ => continue,
            };
            v = linalg::embed_one_qubit(&r, q, n) * v;
        }
        let rotated = &v * &self.rho * v.adjoint();
        let support = x | z;
        let mut out = [0.0; 2];
        for (k, e) in self.gs.meas().effects().iter().enumerate() {
            // outcome bit for qubit q sits at position n-1-q
            let mut parity = 0;
            for q in 0..n {
                if (support >> q) & 1 == 1 {
                    parity ^= (k >> (n - 1 - q)) & 1;
                }
            }
            out[parity] += born_unchecked(e, &rotated);
        }
        out.iter().map(|p| p.clamp(0.0, 1.0)).collect()
    }

    /// Exact `Tr(P ρ)` under the gate set's readout.
    pub fn exact(&self, x: u32, z: u32, negative: bool) -> f64 {
        let p = self.parity_probs(x, z);
        let e = p[0] - p[1];
        if negative {
            -e
        } else {
            e
        }
    }

    /// Empirical expectation from `shots` seeded readouts.
    pub fn sampled(&self, x: u32, z: u32, negative: bool, shots: u64, seed: u64) -> Result<f64> {
        if shots == 0 {
            return Err(QcvvError::InsufficientData("zero shots per setting".into()));
        }
        let mut p = self.parity_probs(x, z);
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let counts = sample_multinomial(&p, shots, &mut rng_from_seed(seed))?;
        let e = (counts[0] as f64 - counts[1] as f64) / shots as f64;
        Ok(if negative { -e } else { e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tvd;
    use crate::qmodel::{DensityMatrix, Povm, QuantumChannel};
    use std::collections::BTreeMap;

    fn gs1(labels: &[&str]) -> GateSet {
        ideal_gateset(1, labels.iter().copied(), &BTreeMap::new()).unwrap()
    }

    #[test]
    fn probability_examples() {
        let gs = gs1(&["X:0", "I"]);
        let empty = Circuit::empty("e", 1);
        assert_eq!(circuit_probabilities(&gs, &empty).unwrap(), vec![1.0, 0.0]);
        let x = Circuit::new("x", 1, vec!["X:0".into()]);
        let p = circuit_probabilities(&gs, &x).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-15 && p[0].abs() < 1e-15);

        let noisy = build_noisy_gateset(&gs, &NoiseSpec::Depolarizing { q: 0.2 }).unwrap();
        let p = circuit_probabilities(&noisy, &Circuit::new("i", 1, vec!["I".into()])).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_label_names_label_and_circuit() {
        let gs = gs1(&["X:0"]);
        let c = Circuit::new("abc", 1, vec!["Q".into()]);
        let err = circuit_probabilities(&gs, &c).unwrap_err().to_string();
        assert!(err.contains("`Q`") && err.contains("`abc`"), "{err}");
        let err = run_design(&gs, &[Circuit::empty("ok", 1), c], 10, 1).unwrap_err();
        assert!(matches!(err, QcvvError::InCircuit { index: 1, .. }));
    }

    #[test]
    fn permutation_covariance() {
        let gs = gs1(&["H:0", "S:0"]);
        let gs = build_noisy_gateset(&gs, &NoiseSpec::AmplitudeDamping { gamma: 0.3 }).unwrap();
        let c = Circuit::new("c", 1, vec!["H:0".into(), "S:0".into(), "H:0".into()]);
        let p = circuit_probabilities(&gs, &c).unwrap();
        let mut effects = gs.meas().effects().to_vec();
        effects.reverse();
        let swapped = gs.clone().with_meas(Povm::new(effects).unwrap()).unwrap();
        let q = circuit_probabilities(&swapped, &c).unwrap();
        assert!((p[0] - q[1]).abs() < 1e-15 && (p[1] - q[0]).abs() < 1e-15);
    }

    #[test]
    fn motion_reversal_under_depolarizing_noise() {
        let q = 0.05;
        let gs =
            build_noisy_gateset(&gs1(&["H:0", "X:0"]), &NoiseSpec::Depolarizing { q }).unwrap();
        for m in [1usize, 2, 5, 10] {
            let layers = (0..m).map(|i| if i % 2 == 0 { "H:0" } else { "X:0" }.to_string());
            let mut layers: Vec<String> = layers.collect();
            // undo in reverse; both gates are self-inverse
            let undo: Vec<String> = layers.iter().rev().cloned().collect();
            layers.extend(undo);
            let total = layers.len() as i32;
            let p = circuit_probabilities(&gs, &Circuit::new("m", 1, layers)).unwrap();
            let expect = 0.5 + 0.5 * (1.0 - q).powi(total);
            assert!((p[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_count_examples() {
        let c = sample_counts("a", &[0.3, 0.7], 0, 1).unwrap();
        assert_eq!((c.count(0), c.count(1), c.shots), (0, 0, 0));
        let c = sample_counts("a", &[1.0, 0.0], 100, 1).unwrap();
        assert_eq!((c.count(0), c.count(1)), (100, 0));
        for seed in 0..5 {
            let c = sample_counts("a", &[0.5, 0.5], 1_000_000, seed).unwrap();
            assert!((c.count(0) as i64 - 500_000).abs() <= 2500);
        }
        assert!(sample_counts("a", &[0.6, 0.6], 10, 1).is_err());
        assert_eq!(
            sample_counts("a", &[0.2, 0.3, 0.5], 1000, 9).unwrap(),
            sample_counts("a", &[0.2, 0.3, 0.5], 1000, 9).unwrap()
        );
    }

    #[test]
    fn frequencies_converge() {
        let mut rng = rng_from_seed(8);
        for d in [2usize, 4] {
            let rho = crate::qmodel::random::random_density(d, &mut rng);
            let probs = Povm::computational(linalg::qubits_of(d))
                .probabilities(&rho)
                .unwrap();
            let c = sample_counts("f", &probs, 1_000_000, 3).unwrap();
            let f = c.frequencies(d).unwrap();
            assert!(tvd(&f, &probs).unwrap() < 5e-3);
        }
    }

    #[test]
    fn run_design_matches_sample_counts_and_is_deterministic() {
        let gs = build_noisy_gateset(&gs1(&["H:0"]), &NoiseSpec::Depolarizing { q: 0.1 }).unwrap();
        assert!(run_design(&gs, &[], 100, 1).unwrap().is_empty());
        let circuits: Vec<Circuit> = (0..8)
            .map(|i| Circuit::new(format!("c{i}"), 1, vec!["H:0".to_string(); i]))
            .collect();
        let a = run_design(&gs, &circuits, 500, 42).unwrap();
        let b = run_design(&gs, &circuits, 500, 42).unwrap();
        assert_eq!(a, b);
        let probs = circuit_probabilities(&gs, &circuits[3]).unwrap();
        assert_eq!(
            a[3],
            sample_counts("c3", &probs, 500, derive_seed(42, 3)).unwrap()
        );
    }

    #[test]
    fn pauli_sampler_expectations() {
        let gs = GateSet::standard(2, BTreeMap::new()).unwrap();
        let bell = crate::qmodel::PureState::ghz(2).density().into_matrix();
        let s = PauliSampler::new(&gs, bell).unwrap();
        assert!((s.exact(0b11, 0, false) - 1.0).abs() < 1e-12);
        assert!((s.exact(0b11, 0b11, true) - 1.0).abs() < 1e-12);
        assert!((s.exact(0, 0b11, false) - 1.0).abs() < 1e-12);
        assert!(s.exact(0b01, 0, false).abs() < 1e-12);
        let e = s.sampled(0b11, 0, false, 100, 3).unwrap();
        assert_eq!(e, 1.0);

        let dep = QuantumChannel::depolarizing(1, 0.2).unwrap();
        let rho = dep
            .apply(&DensityMatrix::basis(2, 0))
            .unwrap()
            .into_matrix();
        let gs1 = GateSet::standard(1, BTreeMap::new()).unwrap();
        let s = PauliSampler::new(&gs1, rho).unwrap();
        assert!((s.exact(0, 1, false) - 0.8).abs() < 1e-12);
    }
}
