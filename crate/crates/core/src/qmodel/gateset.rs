use std::collections::BTreeMap;

use crate::error::{QcvvError, Result};
use crate::qmodel::{DensityMatrix, Povm, QuantumChannel};

/// Native preparation, labelled gates and native readout of one register.
#[derive(Debug, Clone)]
pub struct GateSet {
    prep: DensityMatrix,
    gates: BTreeMap<String, QuantumChannel>,
    meas: Povm,
}

impl GateSet {
    pub fn new(
        prep: DensityMatrix,
        gates: BTreeMap<String, QuantumChannel>,
        meas: Povm,
    ) -> Result<Self> {
        let d = prep.dim();
        if meas.dim() != d {
            return Err(QcvvError::DimensionMismatch {
                what: "measurement",
                expected: d,
                found: meas.dim(),
            });
        }
        for (label, g) in &gates {
            if g.dim() != d {
                return Err(QcvvError::validation(format!(
                    "gate `{label}` has dimension {}, gate set dimension is {d}",
                    g.dim()
                )));
            }
        }
        Ok(Self { prep, gates, meas })
    }

    /// `|0…0⟩` preparation and computational readout with the given gates.
    pub fn standard(n_qubits: usize, gates: BTreeMap<String, QuantumChannel>) -> Result<Self> {
        let d = 1 << n_qubits;
        Self::new(
            DensityMatrix::basis(d, 0),
            gates,
            Povm::computational(n_qubits),
        )
    }

    pub fn dim(&self) -> usize {
        self.prep.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn prep(&self) -> &DensityMatrix {
        &self.prep
    }

    pub fn meas(&self) -> &Povm {
        &self.meas
    }

    pub fn gates(&self) -> &BTreeMap<String, QuantumChannel> {
        &self.gates
    }

    pub fn gate(&self, label: &str) -> Option<&QuantumChannel> {
        self.gates.get(label)
    }

    pub fn with_prep(mut self, prep: DensityMatrix) -> Result<Self> {
        if prep.dim() != self.dim() {
            return Err(QcvvError::DimensionMismatch {
                what: "preparation",
                expected: self.dim(),
                found: prep.dim(),
            });
        }
        self.prep = prep;
        Ok(self)
    }

    pub fn with_meas(mut self, meas: Povm) -> Result<Self> {
        if meas.dim() != self.dim() {
            return Err(QcvvError::DimensionMismatch {
                what: "measurement",
                expected: self.dim(),
                found: meas.dim(),
            });
        }
        self.meas = meas;
        Ok(self)
    }

    pub fn insert_gate(&mut self, label: impl Into<String>, gate: QuantumChannel) -> Result<()> {
        let label = label.into();
        if gate.dim() != self.dim() {
            return Err(QcvvError::validation(format!(
                "gate `{label}` has dimension {}, gate set dimension is {}",
                gate.dim(),
                self.dim()
            )));
        }
        self.gates.insert(label, gate);
        Ok(())
    }

    pub fn map_gates(
        mut self,
        mut f: impl FnMut(&str, QuantumChannel) -> Result<QuantumChannel>,
    ) -> Result<Self> {
        let gates = std::mem::take(&mut self.gates);
        for (label, g) in gates {
            let mapped = f(&label, g)?;
            self.gates.insert(label, mapped);
        }
        Ok(self)
    }
}
