//! Failure conditions shared across the crate.
//!
//! Every fallible operation reports one of the variants below. The variant
//! names are stable identifiers: the CLI prints [`Error::name`] verbatim when
//! it exits with a module failure, and tests match on them.

use num::complex::Complex64;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Any failure reported by this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation outside the domain of definition, e.g. a Laurent
    /// polynomial with negative exponents evaluated at zero.
    #[error("DomainError: {0}")]
    Domain(String),

    /// An elimination or construction was handed input it cannot work with,
    /// e.g. a resultant in a variable that does not occur.
    #[error("DegenerateInput: {0}")]
    DegenerateInput(String),

    /// An iteration failed to reach its tolerance. Carries the best iterate
    /// found so the caller can inspect how close it came.
    #[error("ConvergenceError: {context}: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
        /// Best iterate at abort (roots, parameters, ... depending on context).
        best: Vec<Complex64>,
    },

    /// Adaptive quadrature hit its node cap before reaching the tolerance.
    #[error("QuadratureError: {achieved:.3e} achieved with {nodes} nodes, {requested:.3e} requested")]
    Quadrature {
        achieved: f64,
        requested: f64,
        nodes: usize,
    },

    /// Slope outside the Newton polygon, where the surface tension is not
    /// defined.
    #[error("OutOfPolygon: slope ({0}, {1}) outside the Newton polygon")]
    OutOfPolygon(f64, f64),

    /// A point solve landed too close to a phase boundary to classify.
    #[error("PhaseBoundary: {0}")]
    PhaseBoundary(String),

    /// Two inequivalent solution branches satisfy all selection rules.
    #[error("AmbiguousBranch: {0}")]
    AmbiguousBranch(String),

    /// The characteristic system has no finite solutions at the queried
    /// point, and the phase cannot be inferred from the polygon alone.
    #[error("NoRoot: {0}")]
    NoRoot(String),

    /// A piecewise-linear surface with the requested boundary data does not
    /// exist (lower envelope exceeds upper envelope somewhere).
    #[error("Infeasible: {0}")]
    Infeasible(String),

    /// Tropical data fails a genericity requirement.
    #[error("NonGeneric: {0}")]
    NonGeneric(String),

    /// Parameter continuation could not complete a step.
    #[error("HomotopyStuck: at c={c}: {msg}")]
    HomotopyStuck { c: f64, msg: String },

    /// The winding-number certificate failed during continuation.
    #[error("WindingLost: at c={c}: {msg}")]
    WindingLost { c: f64, msg: String },

    /// Two near-nodes of the inscribed curve collided.
    #[error("TacnodeApproach: at c={c}: near-node separation {separation:.3e}")]
    TacnodeApproach { c: f64, separation: f64 },

    /// Discriminant elimination produced an identically-zero or otherwise
    /// unusable result.
    #[error("DegenerateElimination: {0}")]
    DegenerateElimination(String),

    /// Curve tracing lost the component before closing it.
    #[error("TraceIncomplete: {0}")]
    TraceIncomplete(String),

    /// A tangency parameter fell on the real locus, so the queried point is
    /// on the frozen boundary itself.
    #[error("OnBoundary: {0}")]
    OnBoundary(String),

    /// Height reconstruction accumulated a loop residual above tolerance.
    #[error("LoopClosureFailure: residual {residual:.3e} exceeds {tolerance:.3e}")]
    LoopClosure { residual: f64, tolerance: f64 },

    /// A boundary-exponent fit was requested too close to a cusp.
    #[error("CuspTooClose: distance {distance:.3e} < {required:.3e}")]
    CuspTooClose { distance: f64, required: f64 },

    /// Two independent computations of the same period disagree.
    #[error("PeriodMismatch: {0}")]
    PeriodMismatch(String),

    /// An integration path on the spectral curve hit a real oval.
    #[error("PathCrossesOval: {0}")]
    PathCrossesOval(String),

    /// Facet areas of a Minkowski summand do not match the composite;
    /// the decomposition is metastable rather than stable.
    #[error("FacetMismatch: {0}")]
    FacetMismatch(String),

    /// Exact enumeration was asked for a state space above its cap.
    #[error("TooLarge: {count} states exceeds cap {cap}")]
    TooLarge { count: u128, cap: u128 },

    /// The requested region admits no tiling with the given boundary.
    #[error("NotTileable: {0}")]
    NotTileable(String),

    /// Empirical and limit data are on incompatible scales.
    #[error("ScaleMismatch: {0}")]
    ScaleMismatch(String),

    /// Configuration text failed to parse.
    #[error("ParseError: line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// Configuration parsed but violates a documented invariant.
    #[error("ValidationError: {invariant}: {msg}")]
    Validation { invariant: String, msg: String },
}

impl Error {
    /// Stable identifier for diagnostics, matching the documented failure
    /// condition names.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::Convergence { .. } => "ConvergenceError",
            Error::Quadrature { .. } => "QuadratureError",
            Error::OutOfPolygon(..) => "OutOfPolygon",
            Error::PhaseBoundary(_) => "PhaseBoundary",
            Error::AmbiguousBranch(_) => "AmbiguousBranch",
            Error::NoRoot(_) => "NoRoot",
            Error::Infeasible(_) => "Infeasible",
            Error::NonGeneric(_) => "NonGeneric",
            Error::HomotopyStuck { .. } => "HomotopyStuck",
            Error::WindingLost { .. } => "WindingLost",
            Error::TacnodeApproach { .. } => "TacnodeApproach",
            Error::DegenerateElimination(_) => "DegenerateElimination",
            Error::TraceIncomplete(_) => "TraceIncomplete",
            Error::OnBoundary(_) => "OnBoundary",
            Error::LoopClosure { .. } => "LoopClosureFailure",
            Error::CuspTooClose { .. } => "CuspTooClose",
            Error::PeriodMismatch(_) => "PeriodMismatch",
            Error::PathCrossesOval(_) => "PathCrossesOval",
            Error::FacetMismatch(_) => "FacetMismatch",
            Error::TooLarge { .. } => "TooLarge",
            Error::NotTileable(_) => "NotTileable",
            Error::ScaleMismatch(_) => "ScaleMismatch",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
        }
    }
}
