use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qcvv::metrics::{self, DiamondBounds};
use qcvv::qmodel::{DensityMatrix, QuantumChannel};
use qcvv::tomo::PHYSICAL_TOL;

use crate::analyze::{report_process, report_state, to_value, ReportDoc};
use crate::args::{Metric, MetricsArgs};
use crate::artifact::{parse_artifact, peek_kind, read_text, write_artifact, GatesetDoc, Kind};
use crate::error::{CliError, CliResult};

/// A state and/or labelled channels read from a gate set or tomography report.
pub struct Model {
    pub source: String,
    pub state: Option<DensityMatrix>,
    pub channels: BTreeMap<String, QuantumChannel>,
}

pub fn load_model(path: &Path) -> CliResult<Model> {
    let source = path.display().to_string();
    let text = read_text(path)?;
    match peek_kind(&text, &source)? {
        Kind::Gateset => {
            let gs = parse_artifact::<GatesetDoc>(&text, Kind::Gateset, &source)?.to_gateset()?;
            Ok(Model {
                source,
                state: Some(gs.prep().clone()),
                channels: gs.gates().clone(),
            })
        }
        Kind::Report => {
            let report: ReportDoc = parse_artifact(&text, Kind::Report, &source)?;
            let mut model = Model {
                source: source.clone(),
                state: None,
                channels: BTreeMap::new(),
            };
            if let Some(rho) = report_state(&report)? {
                model.state = Some(DensityMatrix::with_tolerance(rho, PHYSICAL_TOL).map_err(
                    |e| CliError::validation(format!("{source}: estimate is not a state: {e}")),
                )?);
            } else if let Some((gate, s)) = report_process(&report)? {
                let ch =
                    QuantumChannel::from_superop_with_tolerance(s, PHYSICAL_TOL).map_err(|e| {
                        CliError::validation(format!("{source}: estimate is not a channel: {e}"))
                    })?;
                model.channels.insert(gate, ch);
            } else {
                return Err(CliError::validation(format!(
                    "{source}: report holds no state or channel estimate"
                )));
            }
            Ok(model)
        }
        other => Err(CliError::validation(format!(
            "{source}: a {other:?} artifact is not a model (expected gateset or tomography report)"
        ))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_gate_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diamond_bounds: Option<DiamondBounds>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub gates: BTreeMap<String, GateMetrics>,
}

pub fn compare(
    a: &Model,
    b: &Model,
    which: &[Metric],
    restarts: usize,
    seed: u64,
) -> CliResult<MetricsResult> {
    let mut which = which.to_vec();
    if which.is_empty() {
        if a.state.is_some() && b.state.is_some() {
            which.extend([Metric::StateFidelity, Metric::TraceDistance]);
        }
        if !a.channels.is_empty() && !b.channels.is_empty() {
            which.extend([
                Metric::ProcessFidelity,
                Metric::AvgGateFidelity,
                Metric::DiamondBounds,
            ]);
        }
        if which.is_empty() {
            return Err(CliError::validation(format!(
                "{} and {} share no comparable content",
                a.source, b.source
            )));
        }
    }
    which.sort();
    which.dedup();

    let mut out = MetricsResult::default();
    let needs_channels = which.iter().any(|m| !m.is_state_metric());
    if which.iter().any(|m| m.is_state_metric()) {
        let (Some(ra), Some(rb)) = (&a.state, &b.state) else {
            let culprit = if a.state.is_none() {
                &a.source
            } else {
                &b.source
            };
            return Err(CliError::validation(format!(
                "kind mismatch: state metrics requested but {culprit} holds no state"
            )));
        };
        if which.contains(&Metric::StateFidelity) {
            out.state_fidelity = Some(metrics::state_fidelity(ra, rb)?.clamp(0.0, 1.0));
        }
        if which.contains(&Metric::TraceDistance) {
            out.trace_distance = Some(metrics::trace_distance(ra, rb)?);
        }
    }
    if needs_channels {
        if a.channels.is_empty() || b.channels.is_empty() {
            let culprit = if a.channels.is_empty() {
                &a.source
            } else {
                &b.source
            };
            return Err(CliError::validation(format!(
                "kind mismatch: channel metrics requested but {culprit} holds no channels"
            )));
        }
        let common: Vec<&String> = a
            .channels
            .keys()
            .filter(|k| b.channels.contains_key(*k))
            .collect();
        if common.is_empty() {
            return Err(CliError::validation(format!(
                "{} and {} have no gate labels in common",
                a.source, b.source
            )));
        }
        for label in common {
            let (ga, gb) = (&a.channels[label], &b.channels[label]);
            let mut gm = GateMetrics::default();
            if which.contains(&Metric::ProcessFidelity) || which.contains(&Metric::AvgGateFidelity)
            {
                let f = metrics::process_fidelity(ga, gb)?.clamp(0.0, 1.0);
                if which.contains(&Metric::ProcessFidelity) {
                    gm.process_fidelity = Some(f);
                }
                if which.contains(&Metric::AvgGateFidelity) {
                    gm.avg_gate_fidelity = Some(metrics::avg_gate_fidelity(f, ga.dim())?);
                }
            }
            if which.contains(&Metric::DiamondBounds) {
                gm.diamond_bounds = Some(metrics::diamond_distance_bounds(ga, gb, restarts, seed)?);
            }
            out.gates.insert(label.clone(), gm);
        }
    }
    Ok(out)
}

pub fn run(args: &MetricsArgs) -> CliResult<()> {
    let a = load_model(&args.model_a)?;
    let b = load_model(&args.model_b)?;
    let result = compare(&a, &b, &args.which, args.restarts, args.seed)?;
    let report = ReportDoc {
        command: "metrics".into(),
        protocol: None,
        invocation: to_value(args)?,
        inputs: serde_json::Value::Null,
        result: to_value(&result)?,
    };
    write_artifact(args.out.as_deref(), Kind::Report, &report)
}
