//! Direct fidelity estimation against stabilizer states.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat};
use crate::qmodel::DensityMatrix;
use crate::rb::PauliWord;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::simcore::PauliSampler;

/// Pure stabilizer state given by n independent commuting signed Paulis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTarget {
    n_qubits: usize,
    generators: Vec<PauliWord>,
    group: Vec<PauliWord>,
}

impl StabilizerTarget {
    pub fn from_generators<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut n = None;
        let mut generators = Vec::with_capacity(labels.len());
        for l in labels {
            let (len, w) = PauliWord::parse(l.as_ref())?;
            if *n.get_or_insert(len) != len {
                return Err(QcvvError::validation(
                    "generators act on different qubit counts",
                ));
            }
            generators.push(w);
        }
        let n = n.ok_or_else(|| QcvvError::validation("no stabilizer generators"))?;
        Self::new(n, generators)
    }

    pub fn new(n_qubits: usize, generators: Vec<PauliWord>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 10 {
            return Err(QcvvError::validation(format!(
                "unsupported qubit count {n_qubits}"
            )));
        }
        if generators.len() != n_qubits {
            return Err(QcvvError::validation(format!(
                "need {n_qubits} generators, got {}",
                generators.len()
            )));
        }
        let mask = (1u64 << n_qubits) - 1;
        for (i, g) in generators.iter().enumerate() {
            if !g.is_hermitian() || (g.x as u64 | g.z as u64) & !mask != 0 {
                return Err(QcvvError::validation(format!(
                    "generator {i} is not a Hermitian {n_qubits}-qubit Pauli"
                )));
            }
            for (j, h) in generators.iter().enumerate().skip(i + 1) {
                if g.anticommutes(h) {
                    return Err(QcvvError::validation(format!(
                        "generators {i} and {j} anticommute"
                    )));
                }
            }
        }
        if gf2_rank(&generators, n_qubits) < n_qubits {
            return Err(QcvvError::validation(
                "stabilizer generators are not independent",
            ));
        }
        let group = (0..1usize << n_qubits)
            .map(|mask| {
                generators
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (mask >> k) & 1 == 1)
                    .fold(PauliWord::identity(), |acc, (_, g)| acc.mul(g))
            })
            .collect();
        Ok(Self {
            n_qubits,
            generators,
            group,
        })
    }

    /// `|0…0⟩`, stabilized by every `Z_q`.
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(PauliWord::z).collect())
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        Self::from_generators(&["XX", "ZZ"]).expect("valid generators")
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(QcvvError::validation("GHZ needs at least 2 qubits"));
        }
        let all = ((1u64 << n) - 1) as u32;
        let mut gens = vec![PauliWord::signed(all, 0, false)];
        gens.extend((0..n - 1).map(|q| PauliWord::signed(0, (1 << q) | (1 << (q + 1)), false)));
        Self::new(n, gens)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.generators
    }

    /// All 2^n signed group elements; index 0 is the identity.
    pub fn group(&self) -> &[PauliWord] {
        &self.group
    }

    /// Nonzero characteristic values keyed by unsigned Pauli label.
    pub fn characteristic(&self) -> BTreeMap<String, i8> {
        self.group
            .iter()
            .map(|w| {
                let label = w.label(self.n_qubits);
                let sign = if w.is_negative() { -1 } else { 1 };
                (label[1..].to_string(), sign)
            })
            .collect()
    }

    /// `|ψ⟩⟨ψ| = 2^{-n} Σ_{s ∈ S} s`.
    pub fn density(&self) -> DensityMatrix {
        let d = 1usize << self.n_qubits;
        let mut m = CMat::zeros(d, d);
        for w in &self.group {
            m += w.matrix(self.n_qubits);
        }
        DensityMatrix::new(linalg::hermitian_part(&(m * c(1.0 / d as f64, 0.0))))
            .expect("stabilizer projector is a valid state")
    }
}

fn gf2_rank(words: &[PauliWord], n: usize) -> usize {
    let mut rows: Vec<u64> = words
        .iter()
        .map(|w| (w.x as u64) | ((w.z as u64) << n))
        .collect();
    let mut rank = 0;
    for bit in 0..2 * n {
        let Some(p) = (rank..rows.len()).find(|&r| (rows[r] >> bit) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && (rows[r] >> bit) & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfeEstimate {
    pub f_hat: f64,
    /// `f_hat` clamped to [0, 1].
    pub f_clamped: f64,
    pub stderr: f64,
    pub n_settings: usize,
    /// 0 for exact expectations.
    pub shots_per_setting: u64,
}

impl DfeEstimate {
    fn new(f_hat: f64, stderr: f64, n_settings: usize, shots: Option<u64>) -> Self {
        Self {
            f_hat,
            f_clamped: f_hat.clamp(0.0, 1.0),
            stderr,
            n_settings,
            shots_per_setting: shots.unwrap_or(0),
        }
    }
}

/// Measures the unsigned Pauli `word` on the unknown state; `shots = None`
/// requests the exact expectation.
pub trait PauliMeasurement: Sync {
    fn expectation(&self, word: &PauliWord, shots: Option<u64>, seed: u64) -> Result<f64>;
}

impl<F> PauliMeasurement for F
where
    F: Fn(&PauliWord, Option<u64>, u64) -> Result<f64> + Sync,
{
    fn expectation(&self, word: &PauliWord, shots: Option<u64>, seed: u64) -> Result<f64> {
        self(word, shots, seed)
    }
}

impl PauliMeasurement for PauliSampler<'_> {
    fn expectation(&self, word: &PauliWord, shots: Option<u64>, seed: u64) -> Result<f64> {
        match shots {
            None => Ok(self.exact(word.x, word.z, false)),
            Some(s) => self.sampled(word.x, word.z, false, s, seed),
        }
    }
}

fn check_shots(shots: Option<u64>) -> Result<()> {
    if shots == Some(0) {
        return Err(QcvvError::validation("shots per setting must be ≥ 1"));
    }
    Ok(())
}

fn sign_of(w: &PauliWord) -> f64 {
    if w.is_negative() {
        -1.0
    } else {
        1.0
    }
}

/// Unsigned copy of a Hermitian word.
fn unsigned(w: &PauliWord) -> PauliWord {
    PauliWord::signed(w.x, w.z, false)
}

/// Uniformly sampled stabilizer settings; stderr from the spread across
/// settings.
pub fn dfe_stabilizer(
    target: &StabilizerTarget,
    sampler: &impl PauliMeasurement,
    n_settings: usize,
    shots: Option<u64>,
    seed: u64,
) -> Result<DfeEstimate> {
    if n_settings == 0 {
        return Err(QcvvError::validation("need at least one setting"));
    }
    check_shots(shots)?;
    let group = target.group();
    let values = (0..n_settings)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, 2 * i as u64));
            let w = &group[rng.random_range(0..group.len())];
            let e =
                sampler.expectation(&unsigned(w), shots, derive_seed(seed, 2 * i as u64 + 1))?;
            Ok(sign_of(w) * e)
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = n_settings as f64;
    let mean = values.iter().sum::<f64>() / k;
    let stderr = if n_settings > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(DfeEstimate::new(mean, stderr, n_settings, shots))
}

/// Every group element measured once; stderr is the propagated shot noise.
pub fn dfe_exhaustive(
    target: &StabilizerTarget,
    sampler: &impl PauliMeasurement,
    shots: Option<u64>,
    seed: u64,
) -> Result<DfeEstimate> {
    check_shots(shots)?;
    let group = target.group();
    let values = group
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            Ok(sign_of(w)
                * sampler.expectation(&unsigned(w), shots, derive_seed(seed, i as u64))?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = group.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let stderr = match shots {
        None => 0.0,
        Some(s) => {
            (values.iter().map(|v| (1.0 - v * v).max(0.0)).sum::<f64>() / s as f64).sqrt() / k
        }
    };
    Ok(DfeEstimate::new(mean, stderr, group.len(), shots))
}
