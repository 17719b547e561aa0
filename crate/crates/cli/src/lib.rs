//! Command implementations behind the `nwidth` binary. Every command returns
//! a serializable value; the binary prints it as JSON.

pub mod sweep;

use std::path::Path;

use neumann_widths::cvd::{
    cvd_witness, det_d, known_witnesses, DetReport, NeumannKernel, NodeVectors, Witness, WitnessConfig,
};
use neumann_widths::kernel::NeumannParams;
use neumann_widths::oracles::{circular_distance, supnorm_phi, OracleConfig};
use neumann_widths::spline::{verify_cy2n, Cy2nReport, DerivativePath, ShiftPoint};
use neumann_widths::thresholds::{beta_is_integer, compute_nq, compute_nq_beta, evaluate, ThresholdVerdict};
use neumann_widths::widths::{exact_width, WidthReport};
use serde::Serialize;
use serde_json::json;

/// Largest number of per-index verdicts included in a threshold trace.
pub const TRACE_LIMIT: u64 = 10_000;

#[derive(Debug)]
pub enum CliError {
    Core(neumann_widths::Error),
    Config(String),
    Io(String),
}

impl From<neumann_widths::Error> for CliError {
    fn from(e: neumann_widths::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(_) => "ConfigError",
            CliError::Io(_) => "IoError",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(m) | CliError::Io(m) => m.clone(),
        }
    }

    /// 2 for invalid input, 3 when a search came up empty, 4 for numerical or I/O failure.
    pub fn exit_code(&self) -> i32 {
        use neumann_widths::Error as E;
        match self {
            CliError::Core(E::InvalidParams(_) | E::Domain(_)) | CliError::Config(_) => 2,
            CliError::Core(E::NotFound { .. }) => 3,
            CliError::Core(_) | CliError::Io(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "message": self.message() } })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthCheck {
    pub oracle_width: f64,
    pub oracle_argmax: f64,
    /// `|width - oracle_width|`.
    pub delta: f64,
    /// Distance of the oracle's maximiser from `y0`, modulo `pi / n`.
    pub argmax_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthOutput {
    #[serde(flatten)]
    pub report: WidthReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<WidthCheck>,
}

pub fn oracle_check(report: &WidthReport, cfg: &OracleConfig) -> CliResult<WidthCheck> {
    let params = NeumannParams::new(report.q, report.beta)?;
    let s = supnorm_phi(params, report.n, cfg)?;
    Ok(WidthCheck {
        oracle_width: s.value,
        oracle_argmax: s.argmax,
        delta: (report.width - s.value).abs(),
        argmax_delta: circular_distance(s.argmax, report.y0, std::f64::consts::PI / report.n as f64),
    })
}

fn check_n(n: u32) -> CliResult<()> {
    if n == 0 {
        return Err(neumann_widths::Error::InvalidParams("n must be a positive integer".into()).into());
    }
    Ok(())
}

pub fn cmd_width(q: f64, beta: f64, n: u32, verify: bool) -> CliResult<WidthOutput> {
    check_n(n)?;
    let params = NeumannParams::new(q, beta)?;
    let report = exact_width(params, n)?;
    let verify = if verify {
        Some(oracle_check(&report, &OracleConfig::default())?)
    } else {
        None
    };
    Ok(WidthOutput { report, verify })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdOutput {
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub n: u64,
    /// `1` came from the small-`q` case rather than a scan.
    pub small_q: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub later_failure: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<ThresholdVerdict>>,
}

pub fn cmd_threshold(q: f64, beta: Option<f64>, cap: u64, trace: bool) -> CliResult<ThresholdOutput> {
    let (n, small_q, later_failure) = match beta {
        Some(b) => {
            let n = compute_nq_beta(q, b, cap)?;
            if n == 1 {
                (1, true, None)
            } else {
                let r = compute_nq(q, cap)?;
                (r.n, false, r.later_failure)
            }
        }
        None => {
            let r = compute_nq(q, cap)?;
            (r.n, false, r.later_failure)
        }
    };
    let trace = if trace && !small_q {
        let last = n.min(TRACE_LIMIT + 1);
        Some((2..=last).map(|k| evaluate(q, k)).collect::<Result<Vec<_>, _>>()?)
    } else if trace {
        Some(Vec::new())
    } else {
        None
    };
    Ok(ThresholdOutput {
        q,
        beta,
        n,
        small_q,
        later_failure,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cy2nOutput {
    pub q: f64,
    pub beta: f64,
    pub n: u32,
    pub y: f64,
    pub beta_integer: bool,
    #[serde(flatten)]
    pub report: Cy2nReport,
}

pub fn cmd_verify_cy2n(q: f64, beta: f64, n: u32, y: Option<f64>, path: DerivativePath) -> CliResult<Cy2nOutput> {
    check_n(n)?;
    let params = NeumannParams::new(q, beta)?;
    let shift = match y {
        Some(y) => ShiftPoint::new(params, n, y),
        None => ShiftPoint::extremal(params, n)?,
    };
    let report = verify_cy2n(params, n, &shift, path)?;
    Ok(Cy2nOutput {
        q,
        beta,
        n,
        y: shift.y,
        beta_integer: beta_is_integer(beta),
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantEntry {
    pub label: String,
    pub nodes: NodeVectors,
    pub epsilon: i8,
    #[serde(flatten)]
    pub report: DetReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvdOutput {
    pub q: f64,
    pub beta: f64,
    pub determinants: Vec<DeterminantEntry>,
    /// Some configuration gives each sign for both choices of epsilon.
    pub sign_change: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Default)]
pub struct CvdOptions {
    pub reference_vectors: bool,
    pub vectors_file: Option<std::path::PathBuf>,
    pub witness: bool,
    pub l: usize,
    pub budget: u64,
    pub seed: u64,
}

pub fn read_vectors(path: &Path) -> CliResult<Vec<NodeVectors>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw: Vec<NodeVectors> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    raw.into_iter()
        .map(|v| NodeVectors::new(v.x, v.y).map_err(CliError::from))
        .collect()
}

pub fn cmd_cvd(q: f64, beta: f64, opts: &CvdOptions) -> CliResult<CvdOutput> {
    let kernel = NeumannKernel::new(NeumannParams::new(q, beta)?)?;
    let mut sets: Vec<(String, NodeVectors)> = Vec::new();
    if opts.reference_vectors {
        let (neg, pos) = known_witnesses();
        sets.push(("reference-1".into(), neg));
        sets.push(("reference-2".into(), pos));
    }
    if let Some(path) = &opts.vectors_file {
        for (i, v) in read_vectors(path)?.into_iter().enumerate() {
            sets.push((format!("file-{}", i + 1), v));
        }
    }
    if sets.is_empty() && !opts.witness {
        return Err(CliError::Config(
            "nothing to do: pass --reference-vectors, --vectors or --witness".into(),
        ));
    }
    let mut determinants = Vec::new();
    for (label, nodes) in &sets {
        for epsilon in [1i8, -1] {
            determinants.push(DeterminantEntry {
                label: label.clone(),
                nodes: nodes.clone(),
                epsilon,
                report: det_d(&kernel, nodes, epsilon),
            });
        }
    }
    let signs = |eps: i8| {
        let s: Vec<i8> = determinants
            .iter()
            .filter(|d| d.epsilon == eps)
            .filter_map(|d| d.report.certified_sign)
            .collect();
        s.contains(&1) && s.contains(&-1)
    };
    let mut sign_change = signs(1) && signs(-1);
    let witness = if opts.witness {
        let cfg = WitnessConfig {
            budget: opts.budget,
            seed: opts.seed,
            seeds: sets.iter().map(|(_, v)| v.clone()).filter(|v| v.dim() == 2 * opts.l + 1).collect(),
            ..Default::default()
        };
        let w = cvd_witness(&kernel, opts.l, &cfg)?;
        sign_change = true;
        Some(w)
    } else {
        None
    };
    Ok(CvdOutput {
        q,
        beta,
        determinants,
        sign_change,
        witness,
    })
}
