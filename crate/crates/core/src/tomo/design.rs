use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat};
use crate::simcore::{resolve_unitary, Circuit, CountData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomographyKind {
    State,
    Process,
    Measurement,
}

/// Preparation fiducials per qubit: |0⟩, |1⟩, |+⟩, |+i⟩.
pub const PREP_FIDUCIALS: [(char, &[&str]); 4] =
    [('0', &[]), ('1', &["X"]), ('+', &["H"]), ('i', &["H", "S"])];

/// Measurement settings per qubit: rotations mapping the X, Y, Z eigenbases
/// onto the computational basis.
pub const MEAS_SETTINGS: [(char, &[&str]); 3] = [('X', &["H"]), ('Y', &["Sdg", "H"]), ('Z', &[])];

/// Tensor product of per-qubit fiducials, qubit 0 varying slowest.
fn tensor_fiducials(n: usize, prefix: &str, table: &[(char, &[&str])]) -> Vec<Circuit> {
    let m = table.len();
    (0..m.pow(n as u32))
        .map(|mut idx| {
            let mut choice = vec![0; n];
            for q in (0..n).rev() {
                choice[q] = idx % m;
                idx /= m;
            }
            let name: String = choice.iter().map(|&i| table[i].0).collect();
            let layers = choice
                .iter()
                .enumerate()
                .flat_map(|(q, &i)| table[i].1.iter().map(move |g| format!("{g}:{q}")))
                .collect();
            Circuit::new(format!("{prefix}:{name}"), n, layers)
        })
        .collect()
}

fn circuit_unitary(c: &Circuit) -> Result<CMat> {
    let empty = BTreeMap::new();
    let mut u = linalg::identity(1 << c.n_qubits);
    for label in &c.layers {
        u = resolve_unitary(label, c.n_qubits, &empty)? * u;
    }
    Ok(u)
}

/// Circuits and the linear model linking an unknown to outcome probabilities.
#[derive(Debug, Clone)]
pub struct TomographyDesign {
    pub kind: TomographyKind,
    pub n_qubits: usize,
    /// Label of the gate under test (process kind only).
    pub target: Option<String>,
    pub prep_fiducials: Vec<Circuit>,
    pub meas_fiducials: Vec<Circuit>,
    prep_states: Vec<CMat>,
    effects: Vec<CMat>,
    effect_matrix: CMat,
    effect_pinv: CMat,
    prep_matrix: CMat,
    prep_pinv: CMat,
}

fn check_range(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(QcvvError::validation(format!(
            "tomography supports 1..={max} qubits, got {n}"
        )));
    }
    Ok(())
}

fn check_rank(what: &'static str, m: &CMat, required: usize) -> Result<()> {
    let rank = linalg::rank(m);
    if rank < required {
        return Err(QcvvError::RankDeficient {
            what,
            rank,
            required,
        });
    }
    Ok(())
}

impl TomographyDesign {
    /// Overcomplete Pauli-basis state design: 3^n settings, 6^n effects.
    pub fn standard_state(n_qubits: usize) -> Result<Self> {
        check_range(n_qubits, 3)?;
        Self::build(
            TomographyKind::State,
            n_qubits,
            None,
            Vec::new(),
            tensor_fiducials(n_qubits, "meas", &MEAS_SETTINGS),
        )
    }

    /// 4^n input states × 3^n measurement settings around `target`.
    pub fn standard_process(n_qubits: usize, target: &str) -> Result<Self> {
        check_range(n_qubits, 2)?;
        Self::build(
            TomographyKind::Process,
            n_qubits,
            Some(target.to_string()),
            tensor_fiducials(n_qubits, "prep", &PREP_FIDUCIALS),
            tensor_fiducials(n_qubits, "meas", &MEAS_SETTINGS),
        )
    }

    /// 4^n input states read out directly by the unknown measurement.
    pub fn standard_measurement(n_qubits: usize) -> Result<Self> {
        check_range(n_qubits, 2)?;
        Self::build(
            TomographyKind::Measurement,
            n_qubits,
            None,
            tensor_fiducials(n_qubits, "prep", &PREP_FIDUCIALS),
            Vec::new(),
        )
    }

    /// Custom fiducial sets; rejects designs that fail to span matrix space.
    pub fn build(
        kind: TomographyKind,
        n_qubits: usize,
        target: Option<String>,
        prep_fiducials: Vec<Circuit>,
        meas_fiducials: Vec<Circuit>,
    ) -> Result<Self> {
        let d = 1usize << n_qubits;
        if kind == TomographyKind::Process && target.is_none() {
            return Err(QcvvError::validation(
                "process design needs a target gate label",
            ));
        }
        let zero = linalg::identity(d).column(0).into_owned();
        let prep_states = prep_fiducials
            .iter()
            .map(|c| {
                let psi = circuit_unitary(c)? * &zero;
                Ok(&psi * psi.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut effects = Vec::with_capacity(meas_fiducials.len() * d);
        for c in &meas_fiducials {
            let v = circuit_unitary(c)?;
            for k in 0..d {
                let row = v.row(k).into_owned();
                effects.push(row.adjoint() * row);
            }
        }
        let effect_matrix = if effects.is_empty() {
            CMat::zeros(0, d * d)
        } else {
            CMat::from_rows(
                &effects
                    .iter()
                    .map(|e| linalg::vec_of(e).adjoint())
                    .collect::<Vec<_>>(),
            )
        };
        let prep_matrix = if prep_states.is_empty() {
            CMat::zeros(d * d, 0)
        } else {
            CMat::from_columns(&prep_states.iter().map(linalg::vec_of).collect::<Vec<_>>())
        };
        if kind != TomographyKind::Measurement {
            check_rank("measurement design", &effect_matrix, d * d)?;
        }
        if kind != TomographyKind::State {
            check_rank("preparation design", &prep_matrix, d * d)?;
        }
        let effect_pinv = if effects.is_empty() {
            CMat::zeros(d * d, 0)
        } else {
            linalg::pinv(&effect_matrix)
        };
        let prep_pinv = if prep_states.is_empty() {
            CMat::zeros(0, d * d)
        } else {
            linalg::pinv(&prep_matrix)
        };
        Ok(Self {
            kind,
            n_qubits,
            target,
            prep_fiducials,
            meas_fiducials,
            prep_states,
            effects,
            effect_matrix,
            effect_pinv,
            prep_matrix,
            prep_pinv,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Stacked `⟪E_k|` rows over column-stacked operator space.
    pub fn effect_matrix(&self) -> &CMat {
        &self.effect_matrix
    }

    pub(crate) fn effect_pinv(&self) -> &CMat {
        &self.effect_pinv
    }

    /// Columns `|ρ_j⟫` of the ideal input states.
    pub fn prep_matrix(&self) -> &CMat {
        &self.prep_matrix
    }

    pub(crate) fn prep_pinv(&self) -> &CMat {
        &self.prep_pinv
    }

    /// Effects in row order: measurement setting major, outcome minor.
    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn prep_states(&self) -> &[CMat] {
        &self.prep_states
    }

    /// Every circuit of the experiment. Process circuits are
    /// preparation, target, measurement rotation; index = prep · n_meas + meas.
    pub fn circuits(&self) -> Vec<Circuit> {
        let n = self.n_qubits;
        match self.kind {
            TomographyKind::State => self.meas_fiducials.clone(),
            TomographyKind::Measurement => self.prep_fiducials.clone(),
            TomographyKind::Process => {
                let target = self.target.clone().unwrap_or_default();
                let mut out = Vec::new();
                for p in &self.prep_fiducials {
                    for m in &self.meas_fiducials {
                        let mut layers = p.layers.clone();
                        layers.push(target.clone());
                        layers.extend(m.layers.iter().cloned());
                        out.push(Circuit::new(format!("{}|{}", p.id, m.id), n, layers));
                    }
                }
                out
            }
        }
    }

    /// Per-circuit outcome weights (counts, or probabilities in exact mode),
    /// in `circuits()` order.
    pub fn align(&self, data: &[CountData]) -> Result<Vec<AlignedRow>> {
        let d = self.dim();
        let by_id: HashMap<&str, &CountData> =
            data.iter().map(|c| (c.circuit_id.as_str(), c)).collect();
        self.circuits()
            .iter()
            .map(|c| {
                let cd = by_id.get(c.id.as_str()).ok_or_else(|| {
                    QcvvError::InsufficientData(format!("no counts for circuit `{}`", c.id))
                })?;
                cd.validate(d)?;
                Ok(AlignedRow {
                    frequencies: cd.frequencies(d)?,
                    weights: cd.weights(d),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AlignedRow {
    pub frequencies: Vec<f64>,
    pub weights: Vec<f64>,
}
