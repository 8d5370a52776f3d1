//! Versioned JSON artifacts: gate sets, designs, counts and reports.
//!
//! Every file is `{"format_version": "1", "kind": ..., "payload": ...}` with
//! keys sorted and floats in shortest round-trip form, so writing the same
//! document twice yields identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qcvv::holistic::{QvBlock, QvCircuit, QvLayer};
use qcvv::linalg::{c, CMat};
use qcvv::qmodel::{DensityMatrix, GateSet, Povm, QuantumChannel};
use qcvv::simcore::{Circuit, CountData, NoiseSpec};

use crate::args::Protocol;
use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Gateset,
    Design,
    Counts,
    Report,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Gateset => "gateset",
            Kind::Design => "design",
            Kind::Counts => "counts",
            Kind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactFile<T> {
    pub format_version: String,
    pub kind: Kind,
    pub payload: T,
}

#[derive(Deserialize)]
struct Header {
    format_version: String,
    kind: Kind,
}

/// Complex matrix as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonMatrix(pub Vec<Vec<[f64; 2]>>);

impl JsonMatrix {
    pub fn from_cmat(m: &CMat) -> Self {
        JsonMatrix(
            (0..m.nrows())
                .map(|r| {
                    (0..m.ncols())
                        .map(|col| [m[(r, col)].re, m[(r, col)].im])
                        .collect()
                })
                .collect(),
        )
    }

    pub fn to_cmat(&self, what: &str) -> CliResult<CMat> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.0.iter().any(|r| r.len() != cols) {
            return Err(CliError::validation(format!(
                "{what}: matrix must be nonempty and rectangular"
            )));
        }
        if self.0.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(CliError::validation(format!(
                "{what}: matrix entries must be finite"
            )));
        }
        Ok(CMat::from_fn(rows, cols, |r, col| {
            let [re, im] = self.0[r][col];
            c(re, im)
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub kraus: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesetDoc {
    pub n_qubits: usize,
    pub prep: JsonMatrix,
    pub povm: Vec<JsonMatrix>,
    pub gates: BTreeMap<String, ChannelDoc>,
}

impl GatesetDoc {
    pub fn from_gateset(gs: &GateSet) -> Self {
        Self {
            n_qubits: gs.n_qubits(),
            prep: JsonMatrix::from_cmat(gs.prep().matrix()),
            povm: gs
                .meas()
                .effects()
                .iter()
                .map(JsonMatrix::from_cmat)
                .collect(),
            gates: gs
                .gates()
                .iter()
                .map(|(label, g)| {
                    let kraus = g.kraus().iter().map(JsonMatrix::from_cmat).collect();
                    (label.clone(), ChannelDoc { kraus })
                })
                .collect(),
        }
    }

    pub fn to_gateset(&self) -> CliResult<GateSet> {
        let prep = DensityMatrix::new(self.prep.to_cmat("prep")?)?;
        if prep.dim() != 1 << self.n_qubits {
            return Err(CliError::validation(format!(
                "prep has dimension {}, expected {} for {} qubits",
                prep.dim(),
                1usize << self.n_qubits,
                self.n_qubits
            )));
        }
        let effects = self
            .povm
            .iter()
            .enumerate()
            .map(|(k, e)| e.to_cmat(&format!("povm[{k}]")))
            .collect::<CliResult<Vec<_>>>()?;
        let meas = Povm::new(effects)?;
        let mut gates = BTreeMap::new();
        for (label, doc) in &self.gates {
            let kraus = doc
                .kraus
                .iter()
                .enumerate()
                .map(|(k, m)| m.to_cmat(&format!("gates.{label}.kraus[{k}]")))
                .collect::<CliResult<Vec<_>>>()?;
            let ch = QuantumChannel::from_kraus(kraus)
                .map_err(|e| CliError::validation(format!("gate `{label}`: {e}")))?;
            gates.insert(label.clone(), ch);
        }
        Ok(GateSet::new(prep, gates, meas)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prep: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sequences: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_circuits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvBlockDoc {
    pub qubits: [usize; 2],
    pub unitary: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvLayerDoc {
    pub permutation: Vec<usize>,
    pub blocks: Vec<QvBlockDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvCircuitDoc {
    pub id: String,
    pub n_qubits: usize,
    pub seed: u64,
    pub layers: Vec<QvLayerDoc>,
}

impl QvCircuitDoc {
    pub fn from_circuit(qc: &QvCircuit) -> Self {
        Self {
            id: qc.id.clone(),
            n_qubits: qc.n_qubits,
            seed: qc.seed,
            layers: qc
                .layers
                .iter()
                .map(|l| QvLayerDoc {
                    permutation: l.permutation.clone(),
                    blocks: l
                        .blocks
                        .iter()
                        .map(|b| QvBlockDoc {
                            qubits: [b.qubits.0, b.qubits.1],
                            unitary: JsonMatrix::from_cmat(&b.unitary),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_circuit(&self) -> CliResult<QvCircuit> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let blocks = layer
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        Ok(QvBlock {
                            qubits: (b.qubits[0], b.qubits[1]),
                            unitary: b
                                .unitary
                                .to_cmat(&format!("circuit `{}` layer {l} block {k}", self.id))?,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(QvLayer {
                    permutation: layer.permutation.clone(),
                    blocks,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let qc = QvCircuit {
            id: self.id.clone(),
            n_qubits: self.n_qubits,
            seed: self.seed,
            layers,
        };
        qc.validate()?;
        Ok(qc)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDoc {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub params: DesignParams,
    pub circuits: Vec<Circuit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qv_circuits: Option<Vec<QvCircuitDoc>>,
}

impl DesignDoc {
    pub fn validate(&self) -> CliResult<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.circuits {
            if c.n_qubits != self.n_qubits {
                return Err(CliError::validation(format!(
                    "circuit `{}` acts on {} qubits, design has {}",
                    c.id, c.n_qubits, self.n_qubits
                )));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(CliError::validation(format!(
                    "duplicate circuit_id `{}`",
                    c.id
                )));
            }
        }
        if let Some(qv) = &self.qv_circuits {
            if qv.len() != self.circuits.len()
                || qv.iter().zip(&self.circuits).any(|(q, c)| q.id != c.id)
            {
                return Err(CliError::validation("qv_circuits do not match circuits"));
            }
        } else if self.protocol == Protocol::Qv && !self.circuits.is_empty() {
            return Err(CliError::validation("qv design is missing qv_circuits"));
        }
        Ok(())
    }
}

/// Invocation that produced a counts file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRecord {
    pub design: String,
    pub gateset: Option<String>,
    pub noise: Vec<NoiseSpec>,
    pub shots: u64,
    pub seed: u64,
    pub exact: bool,
}

/// Per-circuit record as written; signed integers so that bad files are
/// reported against their circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRecord {
    pub circuit_id: String,
    pub shots: i64,
    pub counts: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
}

impl CountRecord {
    pub fn from_data(cd: &CountData) -> Self {
        Self {
            circuit_id: cd.circuit_id.clone(),
            shots: cd.shots as i64,
            counts: cd
                .counts
                .iter()
                .map(|(k, v)| (k.to_string(), *v as i64))
                .collect(),
            probabilities: cd.probabilities.clone(),
        }
    }

    pub fn to_data(&self, n_outcomes: usize) -> CliResult<CountData> {
        let bad =
            |msg: String| CliError::validation(format!("circuit `{}`: {msg}", self.circuit_id));
        if self.shots < 0 {
            return Err(bad(format!("negative shots {}", self.shots)));
        }
        let mut counts = BTreeMap::new();
        for (key, &v) in &self.counts {
            let k: usize = key
                .parse()
                .map_err(|_| bad(format!("outcome key `{key}` is not an index")))?;
            if v < 0 {
                return Err(bad(format!("negative count {v} for outcome {k}")));
            }
            counts.insert(k, v as u64);
        }
        let cd = CountData {
            circuit_id: self.circuit_id.clone(),
            shots: self.shots as u64,
            counts,
            probabilities: self.probabilities.clone(),
        };
        cd.validate(n_outcomes)?;
        if let Some(p) = &cd.probabilities {
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(bad(format!("exact probabilities sum to {total}")));
            }
        }
        Ok(cd)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsDoc {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub simulation: SimulationRecord,
    pub records: Vec<CountRecord>,
}

impl CountsDoc {
    pub fn data(&self) -> CliResult<Vec<CountData>> {
        let d = 1usize << self.n_qubits;
        self.records.iter().map(|r| r.to_data(d)).collect()
    }
}

/// Serialized form of an artifact, byte-stable for equal inputs.
pub fn to_canonical_string<T: Serialize>(kind: Kind, payload: &T) -> CliResult<String> {
    let file = ArtifactFile {
        format_version: FORMAT_VERSION.to_string(),
        kind,
        payload,
    };
    let value = serde_json::to_value(&file)
        .map_err(|e| CliError::validation(format!("serialization: {e}")))?;
    let mut s = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::validation(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Re-serialize any artifact text in canonical form.
pub fn canonicalize(text: &str) -> CliResult<String> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::validation(format!("invalid JSON: {e}")))?;
    let mut s =
        serde_json::to_string_pretty(&value).map_err(|e| CliError::validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Kind of an artifact without decoding its payload.
pub fn peek_kind(text: &str, source: &str) -> CliResult<Kind> {
    let header: Header =
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("{source}: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(CliError::validation(format!(
            "{source}: unsupported format_version `{}` (expected `{FORMAT_VERSION}`)",
            header.format_version
        )));
    }
    Ok(header.kind)
}

pub fn parse_artifact<T: DeserializeOwned>(
    text: &str,
    expected: Kind,
    source: &str,
) -> CliResult<T> {
    let kind = peek_kind(text, source)?;
    if kind != expected {
        return Err(CliError::validation(format!(
            "{source}: expected a {} artifact, found {}",
            expected.name(),
            kind.name()
        )));
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ArtifactFile<T> = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::validation(format!("{source}: field `{}`: {}", e.path(), e.inner()))
    })?;
    Ok(file.payload)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn read_artifact<T: DeserializeOwned>(path: &Path, expected: Kind) -> CliResult<T> {
    parse_artifact(&read_text(path)?, expected, &path.display().to_string())
}

/// Write atomically (temporary file in the target directory, then rename),
/// or to stdout when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    let Some(path) = path else {
        print!("{text}");
        return Ok(());
    };
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_artifact<T: Serialize>(path: Option<&Path>, kind: Kind, payload: &T) -> CliResult<()> {
    write_text(path, &to_canonical_string(kind, payload)?)
}
