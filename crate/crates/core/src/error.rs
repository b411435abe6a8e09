use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The state has penetrated an obstacle's minimum-distance shell, where
    /// the Khatib repulsive potential is undefined.
    #[error("state is inside an obstacle's minimum-distance shell (rho = {rho})")]
    InsideObstacle { rho: f64 },

    #[error("direction undefined: state coincides with the obstacle point")]
    DegenerateDirection,

    /// `L_g h(x) = 0` while the drift alone violates the barrier condition.
    #[error("barrier constraint infeasible: L_g h = 0 and L_f h + alpha(h) = {slack} < 0")]
    InfeasibleConstraint { slack: f64 },

    #[error("repulsive potential must be non-negative, got {0}")]
    NegativePotential(f64),

    #[error("barrier reached zero outside every region of influence; delta is too large")]
    DeltaTooLarge,

    #[error("scene has no obstacles")]
    EmptyScene,

    #[error("no obstacle in view of the scan")]
    NoObstacleInView,

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: String, reason: String },
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
