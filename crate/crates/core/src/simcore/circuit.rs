use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};

/// Ordered list of gate labels applied after the native preparation and
/// before the native readout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub id: String,
    pub n_qubits: usize,
    pub layers: Vec<String>,
}

impl Circuit {
    pub fn new(id: impl Into<String>, n_qubits: usize, layers: Vec<String>) -> Self {
        Self {
            id: id.into(),
            n_qubits,
            layers,
        }
    }

    pub fn empty(id: impl Into<String>, n_qubits: usize) -> Self {
        Self::new(id, n_qubits, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

/// Outcome record of one circuit: sampled counts, or exact probabilities
/// when the data come from exact-probability mode (then `shots == 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountData {
    pub circuit_id: String,
    pub shots: u64,
    pub counts: BTreeMap<usize, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
}

impl CountData {
    pub fn from_counts(circuit_id: impl Into<String>, counts: &[u64]) -> Self {
        Self {
            circuit_id: circuit_id.into(),
            shots: counts.iter().sum(),
            counts: counts.iter().copied().enumerate().collect(),
            probabilities: None,
        }
    }

    pub fn exact(circuit_id: impl Into<String>, probabilities: Vec<f64>) -> Self {
        Self {
            circuit_id: circuit_id.into(),
            shots: 0,
            counts: BTreeMap::new(),
            probabilities: Some(probabilities),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.probabilities.is_some()
    }

    pub fn count(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    /// Observed outcome weights: counts, or exact probabilities.
    pub fn weights(&self, n_outcomes: usize) -> Vec<f64> {
        match &self.probabilities {
            Some(p) => (0..n_outcomes)
                .map(|k| p.get(k).copied().unwrap_or(0.0))
                .collect(),
            None => (0..n_outcomes).map(|k| self.count(k) as f64).collect(),
        }
    }

    /// Empirical frequencies `n_k / N` (or the exact probabilities).
    pub fn frequencies(&self, n_outcomes: usize) -> Result<Vec<f64>> {
        if self.probabilities.is_some() {
            return Ok(self.weights(n_outcomes));
        }
        if self.shots == 0 {
            return Err(QcvvError::InsufficientData(format!(
                "circuit `{}` has zero shots",
                self.circuit_id
            )));
        }
        let n = self.shots as f64;
        Ok((0..n_outcomes).map(|k| self.count(k) as f64 / n).collect())
    }

    pub fn validate(&self, n_outcomes: usize) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(QcvvError::validation(format!(
                "circuit `{}`: counts sum to {total}, shots = {}",
                self.circuit_id, self.shots
            )));
        }
        if let Some(&k) = self.counts.keys().find(|&&k| k >= n_outcomes) {
            return Err(QcvvError::validation(format!(
                "circuit `{}`: outcome index {k} ≥ {n_outcomes} outcomes",
                self.circuit_id
            )));
        }
        if let Some(p) = &self.probabilities {
            if p.len() != n_outcomes || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(QcvvError::validation(format!(
                    "circuit `{}`: invalid exact probability vector",
                    self.circuit_id
                )));
            }
        }
        Ok(())
    }
}
