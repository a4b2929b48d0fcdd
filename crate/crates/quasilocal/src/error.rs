/// Errors raised by the library.
///
/// Domain errors carry the numeric evidence that triggered them (residuals,
/// violations, condition numbers) so callers can report diagnostics without
/// re-deriving them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operand dimensions are inconsistent.
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    /// A matrix or vector entry is NaN or infinite.
    #[error("non-finite entry in {context}")]
    NonFiniteEntry { context: String },

    /// A square matrix could not be inverted reliably.
    #[error("singular matrix (reciprocal condition number {rcond:e})")]
    SingularMatrix { rcond: f64 },

    /// The target lies outside the affine hull (or cone) spanned by the basis.
    /// Carries the least-squares residual of the best approximation.
    #[error("affine system infeasible (least-squares residual {residual:e})")]
    Infeasible { residual: f64 },

    /// The linear program is unbounded below.
    #[error("linear program unbounded")]
    Unbounded,

    /// The operation requires a polyhedral cone description.
    #[error("unsupported cone: {context}")]
    UnsupportedCone { context: String },

    /// The cone does not span its ambient space.
    #[error("degenerate cone: rank {rank} in ambient dimension {ambient_dim}")]
    DegenerateCone { rank: usize, ambient_dim: usize },

    /// A candidate measurement's effects do not sum to the discard effect.
    #[error("effects do not sum to discard (deviation {deviation:e})")]
    EffectsDontSumToDiscard { deviation: f64 },

    /// A vector is not a normalized state of the system.
    #[error("not a normalized state: {context}")]
    NotAState { context: String },

    /// A vector is not in the effect cone of the system.
    #[error("not an effect: {context}")]
    NotAnEffect { context: String },

    /// The fiducial frame's hopping metric is numerically singular.
    #[error("singular fiducial frame (reciprocal condition number {rcond:e})")]
    SingularFrame { rcond: f64 },

    /// A fiducial frame failed validation.
    #[error("invalid fiducial frame: {context}")]
    InvalidFrame { context: String },

    /// The map does not preserve the discard effect.
    #[error("map is not discard-preserving (deviation {deviation:e})")]
    NotDiscardPreserving { deviation: f64 },

    /// The channel signals between parties.
    #[error("channel is signalling (worst marginal violation {violation:e})")]
    NotNonSignalling { violation: f64 },

    /// A party or wire index is out of range.
    #[error("index out of range: {context}")]
    IndexOutOfRange { context: String },

    /// Enumerating deterministic strategies would exceed the cap.
    #[error("strategy enumeration cap exceeded: {requested} > {cap}")]
    CapExceeded { requested: u128, cap: u64 },

    /// A mixture with no terms was supplied.
    #[error("mixture has no terms")]
    EmptyMixture,

    /// Weights that should sum to one do not.
    #[error("weights sum to {total}, not 1")]
    WeightsNotAffine { total: f64 },

    /// A classical label set does not fit into the target theory.
    #[error("label overflow: {context}")]
    LabelOverflow { context: String },

    /// Two code paths that must agree disagreed; indicates a bug.
    #[error("internal inconsistency: {context}")]
    Internal { context: String },
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::Infeasible { .. } => "Infeasible",
            Error::Unbounded => "Unbounded",
            Error::UnsupportedCone { .. } => "UnsupportedCone",
            Error::DegenerateCone { .. } => "DegenerateCone",
            Error::EffectsDontSumToDiscard { .. } => "EffectsDontSumToDiscard",
            Error::NotAState { .. } => "NotAState",
            Error::NotAnEffect { .. } => "NotAnEffect",
            Error::SingularFrame { .. } => "SingularFrame",
            Error::InvalidFrame { .. } => "InvalidFrame",
            Error::NotDiscardPreserving { .. } => "NotDiscardPreserving",
            Error::NotNonSignalling { .. } => "NotNonSignalling",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::EmptyMixture => "EmptyMixture",
            Error::WeightsNotAffine { .. } => "WeightsNotAffine",
            Error::LabelOverflow { .. } => "LabelOverflow",
            Error::Internal { .. } => "Internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
