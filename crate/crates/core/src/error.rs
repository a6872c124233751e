use thiserror::Error;

/// Where in the input text a parse problem was detected (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{at}: syntax error: {message}")]
    Syntax { at: Position, message: String },
    #[error("{at}: undeclared name `{name}`")]
    Undeclared { at: Position, name: String },
    #[error("{at}: non-polynomial construct: {what}")]
    NonPolynomial { at: Position, what: String },
    #[error("{at}: {message}")]
    Declaration { at: Position, message: String },
    #[error("missing equation for variable `{0}`")]
    MissingEquation(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("poly: dimension mismatch ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sysdsl: {0}")]
    Parse(#[from] ParseError),
    #[error("sysdsl: not an equilibrium, per-component residuals {residuals:?}")]
    NotEquilibrium { residuals: Vec<f64> },

    #[error("spectral: shift equilibrium first, constant terms {constants:?}")]
    NonzeroConstant { constants: Vec<f64> },
    #[error("spectral: unsupported spectrum, eigenvalue {re}{im:+}i has positive real part")]
    UnsupportedSpectrum { re: f64, im: f64 },
    #[error("spectral: defective or near-resonant linear part (eigenvector condition number {condition:e})")]
    Defective { condition: f64 },
    #[error("spectral: inconsistent split, leftover low-degree term of size {size:e}")]
    InconsistentSplit { size: f64 },
    #[error("spectral: invalid basis: {0}")]
    InvalidBasis(String),
    #[error("spectral: eigenvalue iteration did not converge")]
    EigenConvergence,

    #[error("manifold: resonance at degree {degree} (condition number {condition:e})")]
    Resonance { degree: u32, condition: f64 },
    #[error("manifold: order {0} out of range, expected 2..=4")]
    OrderOutOfRange(u32),

    #[error("stability: centre dimension {found}, operation requires {expected}")]
    CentreDimension { expected: usize, found: usize },
    #[error("stability: radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("stability: need at least 8 ray samples, got {0}")]
    RaySampling(usize),

    #[error("sim: divergence at t = {time} (state norm {norm:e})")]
    Divergence { time: f64, norm: f64 },
    #[error("sim: invalid step: {0}")]
    InvalidStep(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
