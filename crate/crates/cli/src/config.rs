use std::path::PathBuf;

use curvewave::flow::{Branch, VelocityModel};
use curvewave::sparsity::{TruncationMode, VectorBasis, DEFAULT_THRESHOLD};
use curvewave::{CurveletIndex, FrameParams, OperatorSpec};
use serde::{Deserialize, Serialize};

/// One experiment manifest. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frame: FrameParams,
    pub operator: OperatorSpec,
    /// Times for `propagate` and `matrix`; empty means the operator's own time.
    pub times: Vec<f64>,
    pub columns: ColumnSample,
    pub basis: VectorBasis,
    pub threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub input: InputSpec,
    pub frame_check: FrameCheck,
    pub flow: FlowSpec,
    pub sparsity: SparsitySpec,
    /// Dynamic range of PGM quick-looks in decades.
    pub pgm_decades: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            frame: FrameParams::default(),
            operator: OperatorSpec::Identity,
            times: Vec::new(),
            columns: ColumnSample::default(),
            basis: VectorBasis::default(),
            threshold: DEFAULT_THRESHOLD,
            seed: 1,
            out: PathBuf::from("out"),
            input: InputSpec::default(),
            frame_check: FrameCheck::default(),
            flow: FlowSpec::default(),
            sparsity: SparsitySpec::default(),
            pgm_decades: 4.0,
        }
    }
}

impl ExperimentConfig {
    pub fn times(&self) -> Vec<f64> {
        if self.times.is_empty() {
            vec![self.operator.time()]
        } else {
            self.times.clone()
        }
    }
}

/// Which matrix columns to compute.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSample {
    pub count: usize,
    /// Half-open range of directional scales; the finest two when absent.
    pub scales: Option<[usize; 2]>,
    /// Explicit columns, used instead of the random sample when nonempty.
    pub indices: Vec<CurveletIndex>,
}

impl Default for ColumnSample {
    fn default() -> Self {
        ColumnSample {
            count: 10,
            scales: None,
            indices: Vec::new(),
        }
    }
}

/// Initial field for `transform` and `propagate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    /// A field file in the binary field format.
    File { path: PathBuf },
    /// A single normalized curvelet; for three-component operators either the
    /// component `component` or, with `polarization`, the hyper-curvelet.
    Curvelet {
        index: CurveletIndex,
        #[serde(default)]
        component: usize,
        #[serde(default)]
        polarization: Option<Branch>,
    },
    Gaussian { center: [f64; 2], width: f64 },
    /// Complex Gaussian noise drawn from the experiment seed.
    Random,
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::Gaussian {
            center: [0.5, 0.5],
            width: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameCheck {
    pub fields: usize,
    pub tolerance: f64,
}

impl Default for FrameCheck {
    fn default() -> Self {
        FrameCheck {
            fields: 50,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub model: VelocityModel,
    pub branch: Branch,
    pub t: f64,
    pub dt: f64,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            x: [0.5, 0.5],
            xi: [16.0, 0.0],
            model: VelocityModel::constant(1.0),
            branch: Branch::Plus,
            t: 1.0,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsitySpec {
    /// Matrix CSV to analyze; the positional argument takes precedence.
    pub matrix: Option<PathBuf>,
    /// Time the matrix was computed at; the operator's own time when absent.
    pub time: Option<f64>,
    /// Kept entries per column for truncation estimates; budgets above the
    /// smallest column support are skipped.
    pub budgets: Vec<usize>,
    pub mode: TruncationMode,
}

impl Default for SparsitySpec {
    fn default() -> Self {
        SparsitySpec {
            matrix: None,
            time: None,
            budgets: vec![25, 50, 100, 200],
            mode: TruncationMode::Largest,
        }
    }
}
