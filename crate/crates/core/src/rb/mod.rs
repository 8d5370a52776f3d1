//! Standard Clifford randomized benchmarking.

pub mod clifford;
mod fit;

pub use clifford::{clifford_group, CliffordElement, CliffordGroup, PauliWord, Tableau};
pub use fit::{fit_decay, fit_decay_weighted, rb_number, DecayFit};

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg;
use crate::qmodel::GateSet;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::simcore::{self, apply_noise, ideal_gateset, Circuit, CountData, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbDesign {
    pub n_qubits: usize,
    pub lengths: Vec<usize>,
    pub k_sequences: usize,
    pub seed: u64,
}

impl RbDesign {
    pub fn new(
        n_qubits: usize,
        lengths: Vec<usize>,
        k_sequences: usize,
        seed: u64,
    ) -> Result<Self> {
        let design = Self {
            n_qubits,
            lengths,
            k_sequences,
            seed,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.n_qubits) {
            return Err(QcvvError::validation(format!(
                "RB supports 1 or 2 qubits, got {}",
                self.n_qubits
            )));
        }
        if self.lengths.is_empty() || self.lengths[0] < 1 {
            return Err(QcvvError::validation("sequence lengths must be ≥ 1"));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QcvvError::validation(
                "sequence lengths must be strictly increasing",
            ));
        }
        if self.k_sequences < 2 {
            return Err(QcvvError::validation(
                "need at least 2 sequences per length",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
}

/// Sequence length encoded in an RB circuit id (`rb:m{m}:s{r}`).
pub fn sequence_length(circuit_id: &str) -> Option<usize> {
    circuit_id
        .strip_prefix("rb:m")?
        .split(':')
        .next()?
        .parse()
        .ok()
}

/// One circuit per (length, repetition): m uniform Cliffords followed by
/// the exact inverse of their product.
pub fn sample_rb_sequences(design: &RbDesign, group: &CliffordGroup) -> Result<Vec<Circuit>> {
    design.validate()?;
    if group.n_qubits() != design.n_qubits {
        return Err(QcvvError::validation(
            "Clifford group size does not match the design",
        ));
    }
    let n = design.n_qubits;
    let mut out = Vec::with_capacity(design.lengths.len() * design.k_sequences);
    for (li, &m) in design.lengths.iter().enumerate() {
        for r in 0..design.k_sequences {
            let mut rng = rng_from_seed(derive_seed(
                design.seed,
                (li * design.k_sequences + r) as u64,
            ));
            let mut total = group.identity_index();
            let mut layers = Vec::with_capacity(m + 1);
            for _ in 0..m {
                let g = group.sample(&mut rng);
                total = group.compose(total, g);
                layers.push(group.label(g));
            }
            layers.push(group.label(group.inverse(total)));
            out.push(Circuit::new(format!("rb:m{m}:s{r}"), n, layers));
        }
    }
    Ok(out)
}

/// Gate set holding every label used by `circuits`, each followed by `noise`.
pub fn rb_gateset(n_qubits: usize, circuits: &[Circuit], noise: &[NoiseSpec]) -> Result<GateSet> {
    let labels = circuits
        .iter()
        .flat_map(|c| c.layers.iter().map(String::as_str));
    let ideal = ideal_gateset(n_qubits, labels, &Default::default())?;
    apply_noise(&ideal, noise)
}

/// Survival fractions per sequence and averaged per length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbData {
    /// `(m, F)` for every sequence.
    pub per_sequence: Vec<(usize, f64)>,
    /// `(m, mean F)` over the sequences of each length.
    pub per_length: Vec<(usize, f64)>,
}

impl RbData {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.per_sequence
            .iter()
            .map(|&(m, f)| (m as f64, f))
            .collect()
    }
}

/// Outcome whose ideal Born probability is largest for `|0…0⟩` under the
/// identity circuit.
pub fn survival_outcome(gs: &GateSet) -> usize {
    let ideal = crate::qmodel::DensityMatrix::basis(gs.dim(), 0);
    let probs = gs.meas().probabilities(&ideal).unwrap_or_default();
    probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(k, _)| k)
}

/// Aggregate survival fractions from RB counts.
pub fn survival_from_counts(
    circuits: &[Circuit],
    data: &[CountData],
    outcome: usize,
) -> Result<RbData> {
    let by_id: std::collections::HashMap<&str, &CountData> =
        data.iter().map(|c| (c.circuit_id.as_str(), c)).collect();
    let mut per_sequence = Vec::with_capacity(circuits.len());
    for c in circuits {
        let m = sequence_length(&c.id)
            .ok_or_else(|| QcvvError::validation(format!("`{}` is not an RB circuit id", c.id)))?;
        let cd = by_id.get(c.id.as_str()).ok_or_else(|| {
            QcvvError::InsufficientData(format!("no counts for circuit `{}`", c.id))
        })?;
        let d = 1usize << c.n_qubits;
        cd.validate(d)?;
        per_sequence.push((m, cd.frequencies(d)?[outcome]));
    }
    let mut lengths: Vec<usize> = per_sequence.iter().map(|p| p.0).collect();
    lengths.sort_unstable();
    lengths.dedup();
    let per_length = lengths
        .into_iter()
        .map(|m| {
            let vals: Vec<f64> = per_sequence
                .iter()
                .filter(|p| p.0 == m)
                .map(|p| p.1)
                .collect();
            (m, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    Ok(RbData {
        per_sequence,
        per_length,
    })
}

/// Simulate every sequence (`shots = None` for exact probabilities) and
/// collect survival fractions.
pub fn run_rb(gs: &GateSet, circuits: &[Circuit], shots: Option<u64>, seed: u64) -> Result<RbData> {
    let data = match shots {
        Some(s) => simcore::run_design(gs, circuits, s, seed)?,
        None => simcore::exact_design(gs, circuits)?,
    };
    survival_from_counts(circuits, &data, survival_outcome(gs))
}

/// Product of the tableaux along a circuit of Clifford labels.
pub fn composed_tableau(circuit: &Circuit, group: &CliffordGroup) -> Result<Tableau> {
    let mut total = group.identity_index();
    for label in &circuit.layers {
        let (n, idx) = clifford::parse_clifford_label(label)
            .filter(|&(n, idx)| n == group.n_qubits() && idx < group.order())
            .ok_or_else(|| QcvvError::validation(format!("`{label}` is not a Clifford label")))?;
        debug_assert_eq!(n, group.n_qubits());
        total = group.compose(total, idx);
    }
    Ok(group.tableau(total).clone())
}

/// Unitary of a Clifford-label circuit (up to global phase).
pub fn composed_unitary(circuit: &Circuit, group: &CliffordGroup) -> Result<linalg::CMat> {
    let mut u = linalg::identity(1 << group.n_qubits());
    for label in &circuit.layers {
        let (_, idx) = clifford::parse_clifford_label(label)
            .ok_or_else(|| QcvvError::validation(format!("`{label}` is not a Clifford label")))?;
        u = group.unitary(idx) * u;
    }
    Ok(u)
}
