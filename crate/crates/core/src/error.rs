use thiserror::Error;

/// Errors raised by the simulator and the optimizers.
///
/// Device indices carried by variants are 1-based (WD 1..K), matching the
/// external file and CLI conventions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph is disconnected: device {device} is unreachable from the destination")]
    Disconnected { device: usize },

    #[error("no connected topology after {attempts} draws (k={k}, radius={radius})")]
    GenerationFailed { k: usize, radius: f64, attempts: usize },

    #[error("infeasible effective power budget at devices {devices:?}")]
    Infeasible { devices: Vec<usize> },

    #[error("degenerate IVA: subtree sum of device {device} is zero")]
    DegenerateIva { device: usize },

    #[error("degenerate channel at device {device}: |h| below 1e-12")]
    DegenerateChannel { device: usize },

    #[error("invalid file partition: {0}")]
    Partition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transmit coefficients are misaligned: Re(eta^T a * 1^T a) = {0} <= 0")]
    Orientation(f64),

    #[error("Dinkelbach did not converge in {iterations} iterations (xi trace {xi_trace:?})")]
    Convergence { iterations: usize, xi_trace: Vec<f64> },

    #[error(
        "SDP solver stopped after {iterations} iterations \
         (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    Solver {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
