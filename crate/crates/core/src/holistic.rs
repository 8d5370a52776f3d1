//! Quantum volume and linear cross-entropy benchmarking.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::qmodel::GateSet;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::simcore::{self, apply_noise, ideal_gateset, Circuit, CountData, NoiseSpec};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 5;
pub const HOP_THRESHOLD: f64 = 2.0 / 3.0;
/// One-sided 97.5% normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct QvBlock {
    pub qubits: (usize, usize),
    pub unitary: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QvLayer {
    pub permutation: Vec<usize>,
    pub blocks: Vec<QvBlock>,
}

/// Square model circuit: n layers, each a qubit permutation followed by
/// Haar-random two-qubit blocks on consecutive pairs of the permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct QvCircuit {
    pub id: String,
    pub n_qubits: usize,
    pub seed: u64,
    pub layers: Vec<QvLayer>,
}

fn check_range(n: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(QcvvError::validation(format!(
            "quantum volume supports {MIN_QUBITS}..={MAX_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

impl QvCircuit {
    pub fn generate(id: impl Into<String>, n_qubits: usize, seed: u64) -> Result<Self> {
        check_range(n_qubits)?;
        let mut rng = rng_from_seed(seed);
        let layers = (0..n_qubits)
            .map(|_| {
                let mut permutation: Vec<usize> = (0..n_qubits).collect();
                permutation.shuffle(&mut rng);
                let blocks = permutation
                    .chunks_exact(2)
                    .map(|pair| QvBlock {
                        qubits: (pair[0], pair[1]),
                        unitary: linalg::haar_unitary(4, &mut rng),
                    })
                    .collect();
                QvLayer {
                    permutation,
                    blocks,
                }
            })
            .collect();
        Ok(Self {
            id: id.into(),
            n_qubits,
            seed,
            layers,
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        check_range(self.n_qubits)?;
        if self.depth() != self.n_qubits {
            return Err(QcvvError::validation(format!(
                "circuit `{}` has depth {}, expected {}",
                self.id,
                self.depth(),
                self.n_qubits
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut perm = layer.permutation.clone();
            perm.sort_unstable();
            if perm != (0..self.n_qubits).collect::<Vec<_>>() {
                return Err(QcvvError::validation(format!(
                    "circuit `{}` layer {l}: not a permutation of the register",
                    self.id
                )));
            }
            if layer.blocks.len() != self.n_qubits / 2 {
                return Err(QcvvError::validation(format!(
                    "circuit `{}` layer {l}: expected {} blocks",
                    self.id,
                    self.n_qubits / 2
                )));
            }
            for (k, block) in layer.blocks.iter().enumerate() {
                let (a, b) = block.qubits;
                if (a, b) != (layer.permutation[2 * k], layer.permutation[2 * k + 1]) {
                    return Err(QcvvError::validation(format!(
                        "circuit `{}` layer {l} block {k}: qubits do not follow the permutation",
                        self.id
                    )));
                }
                let u = &block.unitary;
                if u.shape() != (4, 4)
                    || linalg::max_abs_diff(&(u.adjoint() * u), &linalg::identity(4)) > 1e-9
                {
                    return Err(QcvvError::validation(format!(
                        "circuit `{}` layer {l} block {k}: not a 4×4 unitary",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn block_label(layer: usize, block: usize) -> String {
        format!("qv:L{layer}B{block}")
    }

    /// Register-wide unitaries keyed by block label.
    pub fn gate_unitaries(&self) -> BTreeMap<String, CMat> {
        let mut out = BTreeMap::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (k, block) in layer.blocks.iter().enumerate() {
                let (a, b) = block.qubits;
                out.insert(
                    Self::block_label(l, k),
                    linalg::embed_two_qubit(&block.unitary, a, b, self.n_qubits),
                );
            }
        }
        out
    }

    /// Label circuit over the block labels.
    pub fn to_circuit(&self) -> Circuit {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| (0..layer.blocks.len()).map(move |k| Self::block_label(l, k)))
            .collect();
        Circuit::new(self.id.clone(), self.n_qubits, layers)
    }

    /// Noiseless output distribution from `|0…0⟩` by state-vector simulation.
    pub fn ideal_probabilities(&self) -> Vec<f64> {
        let mut psi = CVec::zeros(self.dim());
        psi[0] = linalg::ONE;
        for layer in &self.layers {
            for block in &layer.blocks {
                let (a, b) = block.qubits;
                psi = linalg::embed_two_qubit(&block.unitary, a, b, self.n_qubits) * psi;
            }
        }
        psi.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `n_circuits` model circuits with ids `qv:n{n}:c{i}`.
pub fn generate_qv_circuits(n: usize, n_circuits: usize, seed: u64) -> Result<Vec<QvCircuit>> {
    check_range(n)?;
    if n_circuits == 0 {
        return Err(QcvvError::validation("need at least one circuit"));
    }
    (0..n_circuits)
        .into_par_iter()
        .map(|i| QvCircuit::generate(format!("qv:n{n}:c{i}"), n, derive_seed(seed, i as u64)))
        .collect()
}

fn median(probs: &[f64]) -> f64 {
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Outcomes whose ideal probability is strictly above the median.
pub fn heavy_outputs(ideal_probs: &[f64]) -> Vec<usize> {
    if ideal_probs.is_empty() {
        return Vec::new();
    }
    let med = median(ideal_probs);
    (0..ideal_probs.len())
        .filter(|&k| ideal_probs[k] > med)
        .collect()
}

pub fn heavy_mass(probs: &[f64], heavy: &[usize]) -> f64 {
    heavy.iter().map(|&k| probs[k]).sum()
}

/// Observed heavy-output fraction of one circuit.
pub fn heavy_output_probability(circuit: &QvCircuit, data: &CountData) -> Result<f64> {
    let d = circuit.dim();
    data.validate(d)?;
    let heavy = heavy_outputs(&circuit.ideal_probabilities());
    Ok(heavy_mass(&data.frequencies(d)?, &heavy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvLevel {
    pub n_qubits: usize,
    pub n_circuits: usize,
    pub mean_hop: f64,
    pub lower_bound: f64,
    pub pass: bool,
    /// Per-circuit heavy-output probabilities.
    pub hops: Vec<f64>,
}

impl QvLevel {
    pub fn from_hops(n_qubits: usize, hops: Vec<f64>) -> Result<Self> {
        if hops.is_empty() {
            return Err(QcvvError::InsufficientData(
                "no circuits at this width".into(),
            ));
        }
        let k = hops.len() as f64;
        let mean = hops.iter().sum::<f64>() / k;
        let var = if hops.len() > 1 {
            hops.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let lower_bound = mean - Z_975 * (var / k).sqrt();
        Ok(Self {
            n_qubits,
            n_circuits: hops.len(),
            mean_hop: mean,
            lower_bound,
            pass: lower_bound > HOP_THRESHOLD,
            hops,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvResult {
    pub levels: Vec<QvLevel>,
    pub qv: u64,
}

impl QvResult {
    /// `qv = 2^n` for the largest passing width, 1 if none pass.
    pub fn from_levels(levels: Vec<QvLevel>) -> Self {
        let qv = levels
            .iter()
            .filter(|l| l.pass)
            .map(|l| 1u64 << l.n_qubits)
            .max()
            .unwrap_or(1);
        Self { levels, qv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QvConfig {
    pub n_max: usize,
    pub n_circuits: usize,
    /// `None` uses exact output probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
}

/// Ideal block channels with `noise` appended to each.
pub fn noisy_qv_gateset(circuit: &QvCircuit, noise: &[NoiseSpec]) -> Result<GateSet> {
    let custom = circuit.gate_unitaries();
    let ideal = ideal_gateset(circuit.n_qubits, custom.keys().map(String::as_str), &custom)?;
    apply_noise(&ideal, noise)
}

pub fn simulate_qv_circuit(
    gs: &GateSet,
    circuit: &QvCircuit,
    shots: Option<u64>,
    seed: u64,
) -> Result<CountData> {
    let probs = simcore::circuit_probabilities(gs, &circuit.to_circuit())?;
    match shots {
        Some(s) => simcore::sample_counts(&circuit.id, &probs, s, seed),
        None => Ok(CountData::exact(circuit.id.clone(), probs)),
    }
}

/// Run widths 2..=n_max; `device` builds the gate set executing a circuit.
pub fn run_quantum_volume<F>(device: F, config: QvConfig) -> Result<QvResult>
where
    F: Fn(&QvCircuit) -> Result<GateSet> + Sync,
{
    check_range(config.n_max)?;
    if config.shots == Some(0) {
        return Err(QcvvError::validation("shots must be ≥ 1"));
    }
    let mut levels = Vec::new();
    for n in MIN_QUBITS..=config.n_max {
        let gen_seed = derive_seed(config.seed, n as u64);
        let shot_seed = derive_seed(config.seed, (1 << 32) + n as u64);
        let circuits = generate_qv_circuits(n, config.n_circuits, gen_seed)?;
        let hops = circuits
            .par_iter()
            .enumerate()
            .map(|(i, qc)| {
                let gs = device(qc)?;
                let data =
                    simulate_qv_circuit(&gs, qc, config.shots, derive_seed(shot_seed, i as u64))?;
                heavy_output_probability(qc, &data)
            })
            .collect::<Result<Vec<f64>>>()?;
        levels.push(QvLevel::from_hops(n, hops)?);
    }
    Ok(QvResult::from_levels(levels))
}

/// `d · mean(p_ideal(x)) − 1` over observed outcomes.
pub fn linear_xeb(samples: &[usize], ideal_probs: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(QcvvError::InsufficientData(
            "linear XEB needs at least one sample".into(),
        ));
    }
    let d = ideal_probs.len();
    let mut acc = 0.0;
    for &x in samples {
        acc += *ideal_probs
            .get(x)
            .ok_or_else(|| QcvvError::validation(format!("outcome {x} outside 0..{d}")))?;
    }
    Ok(d as f64 * acc / samples.len() as f64 - 1.0)
}

/// Linear XEB from aggregated counts or exact probabilities.
pub fn linear_xeb_counts(data: &CountData, ideal_probs: &[f64]) -> Result<f64> {
    let d = ideal_probs.len();
    data.validate(d)?;
    let freqs = data.frequencies(d)?;
    Ok(d as f64
        * freqs
            .iter()
            .zip(ideal_probs)
            .map(|(f, p)| f * p)
            .sum::<f64>()
        - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_and_determinism() {
        let cs = generate_qv_circuits(2, 5, 3).unwrap();
        for c in &cs {
            assert_eq!(c.depth(), 2);
            assert!(c.layers.iter().all(|l| l.blocks.len() == 1));
            c.validate().unwrap();
        }
        assert_eq!(cs, generate_qv_circuits(2, 5, 3).unwrap());
        let c5 = QvCircuit::generate("x", 5, 1).unwrap();
        assert_eq!(c5.depth(), 5);
        assert!(c5.layers.iter().all(|l| l.blocks.len() == 2));
        c5.validate().unwrap();
        assert!(generate_qv_circuits(1, 5, 3).is_err());
        assert!(generate_qv_circuits(6, 5, 3).is_err());
        assert!(generate_qv_circuits(3, 0, 3).is_err());
    }

    #[test]
    fn heavy_output_examples() {
        assert!(heavy_outputs(&[0.25; 4]).is_empty());
        assert_eq!(heavy_outputs(&[0.7, 0.2, 0.06, 0.04]), vec![0, 1]);
        assert_eq!(heavy_outputs(&[0.04, 0.06, 0.2, 0.7]), vec![2, 3]);
        assert_eq!(heavy_outputs(&[0.5, 0.3, 0.2]), vec![0]);
    }

    #[test]
    fn xeb_examples() {
        let p = [0.5, 0.25, 0.125, 0.125];
        assert!((linear_xeb(&[0, 0, 0], &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((linear_xeb(&[2], &p).unwrap() + 0.5).abs() < 1e-15);
        assert!(linear_xeb(&[], &p).is_err());
        assert!(linear_xeb(&[4], &p).is_err());
        let exact = CountData::exact("c", p.to_vec());
        let second_moment: f64 = p.iter().map(|x| x * x).sum();
        assert!(
            (linear_xeb_counts(&exact, &p).unwrap() - (4.0 * second_moment - 1.0)).abs() < 1e-15
        );
    }

    #[test]
    fn level_statistics() {
        let lvl = QvLevel::from_hops(2, vec![0.8, 0.8, 0.8]).unwrap();
        assert!(lvl.pass && (lvl.lower_bound - lvl.mean_hop).abs() < 1e-12);
        let lvl = QvLevel::from_hops(3, vec![0.5, 0.9]).unwrap();
        assert!((lvl.mean_hop - 0.7).abs() < 1e-15);
        assert!(!lvl.pass);
        let r = QvResult::from_levels(vec![QvLevel::from_hops(2, vec![0.9; 4]).unwrap(), lvl]);
        assert_eq!(r.qv, 4);
        assert_eq!(QvResult::from_levels(vec![]).qv, 1);
    }

    #[test]
    fn noiseless_exact_hop_is_heavy_mass() {
        for qc in generate_qv_circuits(3, 4, 8).unwrap() {
            let gs = noisy_qv_gateset(&qc, &[]).unwrap();
            let data = simulate_qv_circuit(&gs, &qc, None, 0).unwrap();
            let ideal = qc.ideal_probabilities();
            let hop = heavy_output_probability(&qc, &data).unwrap();
            assert!((hop - heavy_mass(&ideal, &heavy_outputs(&ideal))).abs() < 1e-12);
        }
    }
}
