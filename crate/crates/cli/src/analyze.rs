use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qcvv::dfe::StabilizerTarget;
use qcvv::holistic::{heavy_output_probability, linear_xeb_counts, QvLevel, QvResult};
use qcvv::linalg::{self, CMat};
use qcvv::metrics;
use qcvv::qmodel::{DensityMatrix, QuantumChannel};
use qcvv::rb::{fit_decay, survival_from_counts, DecayFit};
use qcvv::simcore::{builtin_unitary, CountData};
use qcvv::tomo::{self, Method, ProcessEstimate, StateEstimate, TomographyDesign};

use crate::args::{AnalyzeArgs, MethodArg, Protocol};
use crate::artifact::{read_artifact, write_artifact, CountsDoc, DesignDoc, JsonMatrix, Kind};
use crate::error::{CliError, CliResult};

/// Payload of every report artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
    /// Flags of the invocation that wrote the report.
    pub invocation: Value,
    /// Provenance carried over from the input files.
    pub inputs: Value,
    pub result: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetFidelity {
    pub generators: Vec<String>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateResult {
    pub method: Method,
    pub rho_hat: JsonMatrix,
    pub physical: bool,
    pub min_eigenvalue: f64,
    pub loglikelihood: Option<f64>,
    pub fidelity_to_ideal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetFidelity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessResult {
    pub method: Method,
    pub gate: String,
    pub superop_hat: JsonMatrix,
    pub choi: JsonMatrix,
    pub ptm: Option<Vec<Vec<f64>>>,
    pub physical: bool,
    pub tp_deviation: f64,
    pub loglikelihood: Option<f64>,
    pub process_fidelity_to_ideal: Option<f64>,
    pub avg_gate_fidelity_to_ideal: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbResult {
    pub dim: usize,
    pub survival_outcome: usize,
    pub fit: DecayFit,
    pub per_length: Vec<(usize, f64)>,
    pub per_sequence: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QvReport {
    #[serde(flatten)]
    pub result: QvResult,
    pub linear_xeb: Vec<f64>,
    pub mean_linear_xeb: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn prepared_state(labels: &[String], n: usize) -> CliResult<DensityMatrix> {
    let mut u = linalg::identity(1 << n);
    for l in labels {
        let g = builtin_unitary(l, n)?
            .ok_or_else(|| CliError::validation(format!("unknown gate label `{l}`")))?;
        u = g * u;
    }
    let psi = u.column(0).into_owned();
    Ok(qcvv::qmodel::pure_density(psi)?)
}

fn state_analysis(
    design: &DesignDoc,
    data: &[CountData],
    args: &AnalyzeArgs,
) -> CliResult<StateResult> {
    let n = design.n_qubits;
    let td = TomographyDesign::standard_state(n)?;
    let est: StateEstimate = match args.method {
        MethodArg::Linear => tomo::linear_inversion_state(&td, data)?,
        MethodArg::Mle => tomo::mle_state(&td, data, args.tol)?,
    };
    let loglikelihood = match est.loglikelihood {
        Some(l) => finite(l),
        None => tomo::state_loglikelihood(&td, data, &est.rho_hat)
            .ok()
            .and_then(finite),
    };
    let rho = est.to_density().ok();
    let ideal = prepared_state(&design.params.prep, n)?;
    let fid = |sigma: &DensityMatrix| -> CliResult<Option<f64>> {
        rho.as_ref()
            .map(|r| metrics::state_fidelity(r, sigma).map(|f| f.clamp(0.0, 1.0)))
            .transpose()
            .map_err(CliError::from)
    };
    let target = match &args.target {
        Some(spec) => {
            let generators: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).collect();
            let t = StabilizerTarget::from_generators(&generators)?;
            if t.n_qubits() != n {
                return Err(CliError::validation(format!(
                    "target acts on {} qubits, design on {n}",
                    t.n_qubits()
                )));
            }
            Some(TargetFidelity {
                fidelity: fid(&t.density())?,
                generators,
            })
        }
        None => None,
    };
    Ok(StateResult {
        method: est.method,
        rho_hat: JsonMatrix::from_cmat(&est.rho_hat),
        physical: est.physical,
        min_eigenvalue: est.min_eigenvalue(),
        loglikelihood,
        fidelity_to_ideal: fid(&ideal)?,
        target,
    })
}

fn process_analysis(
    design: &DesignDoc,
    data: &[CountData],
    args: &AnalyzeArgs,
) -> CliResult<ProcessResult> {
    let n = design.n_qubits;
    let gate = design
        .params
        .gate
        .clone()
        .ok_or_else(|| CliError::validation("process_tomo design has no gate"))?;
    let td = TomographyDesign::standard_process(n, &gate)?;
    let est: ProcessEstimate = match args.method {
        MethodArg::Linear => tomo::linear_inversion_process(&td, data)?,
        MethodArg::Mle => tomo::mle_process(&td, data, args.tol)?,
    };
    let loglikelihood = match est.loglikelihood {
        Some(l) => finite(l),
        None => tomo::process_loglikelihood(&td, data, &est.superop_hat)
            .ok()
            .and_then(finite),
    };
    let channel = est.to_channel().ok();
    let ideal = QuantumChannel::unitary(
        builtin_unitary(&gate, n)?
            .ok_or_else(|| CliError::validation(format!("unknown gate label `{gate}`")))?,
    )?;
    let pf = channel
        .as_ref()
        .map(|ch| metrics::process_fidelity(ch, &ideal).map(|f| f.clamp(0.0, 1.0)))
        .transpose()?;
    let agf = pf
        .map(|f| metrics::avg_gate_fidelity(f, 1 << n))
        .transpose()?;
    let ptm = channel.as_ref().map(|ch| {
        let m = ch.ptm();
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    });
    Ok(ProcessResult {
        method: est.method,
        gate,
        superop_hat: JsonMatrix::from_cmat(&est.superop_hat),
        choi: JsonMatrix::from_cmat(&est.choi()),
        ptm,
        physical: est.physical,
        tp_deviation: est.tp_deviation(),
        loglikelihood,
        process_fidelity_to_ideal: pf,
        avg_gate_fidelity_to_ideal: agf,
    })
}

fn rb_analysis(design: &DesignDoc, data: &[CountData]) -> CliResult<RbResult> {
    let d = 1usize << design.n_qubits;
    // ideal preparation is |0…0⟩ and readout is computational
    let outcome = 0;
    let rb = survival_from_counts(&design.circuits, data, outcome)?;
    let fit = fit_decay(&rb.points(), d)?;
    Ok(RbResult {
        dim: d,
        survival_outcome: outcome,
        fit,
        per_length: rb.per_length,
        per_sequence: rb.per_sequence,
    })
}

fn qv_analysis(design: &DesignDoc, data: &[CountData]) -> CliResult<QvReport> {
    let by_id: HashMap<&str, &CountData> =
        data.iter().map(|c| (c.circuit_id.as_str(), c)).collect();
    let docs = design.qv_circuits.as_deref().unwrap_or_default();
    let mut hops = Vec::with_capacity(docs.len());
    let mut xeb = Vec::with_capacity(docs.len());
    for doc in docs {
        let qc = doc.to_circuit()?;
        let cd = by_id
            .get(qc.id.as_str())
            .ok_or_else(|| CliError::validation(format!("no counts for circuit `{}`", qc.id)))?;
        hops.push(heavy_output_probability(&qc, cd)?);
        xeb.push(linear_xeb_counts(cd, &qc.ideal_probabilities())?);
    }
    let level = QvLevel::from_hops(design.n_qubits, hops)?;
    let mean_linear_xeb = xeb.iter().sum::<f64>() / xeb.len() as f64;
    Ok(QvReport {
        result: QvResult::from_levels(vec![level]),
        linear_xeb: xeb,
        mean_linear_xeb,
    })
}

pub(crate) fn to_value<T: Serialize + ?Sized>(x: &T) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::validation(format!("serialization: {e}")))
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<ReportDoc> {
    let design: DesignDoc = read_artifact(&args.design, Kind::Design)?;
    design.validate()?;
    let counts: CountsDoc = read_artifact(&args.counts, Kind::Counts)?;
    if let Some(p) = args.protocol {
        if p != design.protocol {
            return Err(CliError::validation(format!(
                "--protocol {} does not match the design ({})",
                p.name(),
                design.protocol.name()
            )));
        }
    }
    if counts.protocol != design.protocol || counts.n_qubits != design.n_qubits {
        return Err(CliError::validation(
            "counts file was not produced from this kind of design",
        ));
    }
    if args.target.is_some() && design.protocol != Protocol::StateTomo {
        return Err(CliError::validation("--target applies to state_tomo only"));
    }
    let data = counts.data()?;
    let design_ids: std::collections::HashSet<&str> =
        design.circuits.iter().map(|c| c.id.as_str()).collect();
    if let Some(extra) = data
        .iter()
        .find(|c| !design_ids.contains(c.circuit_id.as_str()))
    {
        return Err(CliError::validation(format!(
            "counts for circuit `{}` which is not in the design",
            extra.circuit_id
        )));
    }
    if data.len() != design.circuits.len() {
        let have: std::collections::HashSet<&str> =
            data.iter().map(|c| c.circuit_id.as_str()).collect();
        let missing = design
            .circuits
            .iter()
            .find(|c| !have.contains(c.id.as_str()));
        return Err(CliError::validation(match missing {
            Some(c) => format!("no counts for circuit `{}`", c.id),
            None => "duplicate circuit_id in counts".to_string(),
        }));
    }

    let result = match design.protocol {
        Protocol::StateTomo => to_value(&state_analysis(&design, &data, args)?)?,
        Protocol::ProcessTomo => to_value(&process_analysis(&design, &data, args)?)?,
        Protocol::Rb => to_value(&rb_analysis(&design, &data)?)?,
        Protocol::Qv => to_value(&qv_analysis(&design, &data)?)?,
    };
    let mut inputs = BTreeMap::new();
    inputs.insert("design_params", to_value(&design.params)?);
    inputs.insert("n_qubits", to_value(&design.n_qubits)?);
    inputs.insert("simulation", to_value(&counts.simulation)?);
    Ok(ReportDoc {
        command: "analyze".into(),
        protocol: Some(design.protocol),
        invocation: to_value(args)?,
        inputs: to_value(&inputs)?,
        result,
    })
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let report = analyze(args)?;
    write_artifact(args.out.as_deref(), Kind::Report, &report)
}

/// Estimated state of a state-tomography report.
pub(crate) fn report_state(report: &ReportDoc) -> CliResult<Option<CMat>> {
    report_matrix(report, Protocol::StateTomo, "rho_hat")
}

/// Estimated superoperator and gate label of a process-tomography report.
pub(crate) fn report_process(report: &ReportDoc) -> CliResult<Option<(String, CMat)>> {
    let Some(s) = report_matrix(report, Protocol::ProcessTomo, "superop_hat")? else {
        return Ok(None);
    };
    let gate = report
        .result
        .get("gate")
        .and_then(Value::as_str)
        .unwrap_or("G")
        .to_string();
    Ok(Some((gate, s)))
}

fn report_matrix(report: &ReportDoc, protocol: Protocol, field: &str) -> CliResult<Option<CMat>> {
    if report.protocol != Some(protocol) {
        return Ok(None);
    }
    let raw = report
        .result
        .get(field)
        .ok_or_else(|| CliError::validation(format!("report has no `result.{field}`")))?;
    let m: JsonMatrix = serde_json::from_value(raw.clone())
        .map_err(|e| CliError::validation(format!("report field `result.{field}`: {e}")))?;
    Ok(Some(m.to_cmat(field)?))
}
