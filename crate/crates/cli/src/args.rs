use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qcvv::simcore::NoiseSpec;

#[derive(Parser, Debug)]
#[command(
    name = "qcvv",
    version,
    about = "Characterize a simulated noisy quantum register"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the circuits of an experiment.
    Design(DesignArgs),
    /// Execute a design on a simulated device.
    Simulate(SimulateArgs),
    /// Estimate models or benchmark figures from counts.
    Analyze(AnalyzeArgs),
    /// Compare two model files.
    Metrics(MetricsArgs),
    /// Write a gate set file from built-in labels and noise.
    Gateset(GatesetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[value(name = "state_tomo")]
    StateTomo,
    #[value(name = "process_tomo")]
    ProcessTomo,
    #[value(name = "rb")]
    Rb,
    #[value(name = "qv")]
    Qv,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::StateTomo => "state_tomo",
            Protocol::ProcessTomo => "process_tomo",
            Protocol::Rb => "rb",
            Protocol::Qv => "qv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Linear,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[value(name = "state_fidelity")]
    StateFidelity,
    #[value(name = "trace_distance")]
    TraceDistance,
    #[value(name = "process_fidelity")]
    ProcessFidelity,
    #[value(name = "avg_gate_fidelity")]
    AvgGateFidelity,
    #[value(name = "diamond_bounds")]
    DiamondBounds,
}

impl Metric {
    pub fn is_state_metric(self) -> bool {
        matches!(self, Metric::StateFidelity | Metric::TraceDistance)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DesignArgs {
    #[arg(long)]
    pub protocol: Protocol,
    #[arg(long, default_value_t = 1)]
    pub qubits: usize,
    /// RB sequence lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    /// RB sequences per length.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Number of QV model circuits.
    #[arg(long, default_value_t = 100)]
    pub circuits: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gate preparing the state under state tomography, repeatable and applied in order.
    #[arg(long)]
    pub prep: Vec<String>,
    /// Gate under process tomography.
    #[arg(long)]
    pub gate: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Device gate set file; noise flags are applied on top of it.
    #[arg(long)]
    pub gateset: Option<PathBuf>,
    /// `kind:param[,param]`, repeatable.
    #[arg(long)]
    pub noise: Vec<NoiseSpec>,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit exact outcome probabilities instead of sampled counts.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub counts: PathBuf,
    /// Must match the design when given.
    #[arg(long)]
    pub protocol: Option<Protocol>,
    #[arg(long, value_enum, default_value_t = MethodArg::Mle)]
    pub method: MethodArg,
    /// Stabilizer generators of a target state, e.g. `X` or `XX,ZZ`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = qcvv::tomo::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MetricsArgs {
    pub model_a: PathBuf,
    pub model_b: PathBuf,
    /// Metrics to compute, comma separated; all applicable when omitted.
    #[arg(long, value_delimiter = ',')]
    pub which: Vec<Metric>,
    /// Random restarts of the diamond lower-bound search.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GatesetArgs {
    #[arg(long, default_value_t = 1)]
    pub qubits: usize,
    /// `LABEL` or `NAME=LABEL`, repeatable.
    #[arg(long)]
    pub gate: Vec<String>,
    #[arg(long)]
    pub noise: Vec<NoiseSpec>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}
