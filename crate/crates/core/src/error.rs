use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// β ≤ r + γ: the endemic equilibrium does not exist.
    #[error("subcritical patch (R0 = {r0:.6} <= 1): no endemic equilibrium")]
    SubcriticalPatch { r0: f64 },

    #[error("patch {patch}: {source}")]
    InPatch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid connectivity matrix: {0}")]
    InvalidConnectivity(String),

    #[error("all strains extinct in patch {patch}; frequencies undefined")]
    ExtinctPatch { patch: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StiffnessFailure { t: f64, h: f64 },

    #[error("non-finite right-hand side at t = {t}")]
    NumericalBlowup { t: f64 },
}

impl Error {
    pub(crate) fn in_patch(self, patch: usize) -> Self {
        Error::InPatch {
            patch,
            source: Box::new(self),
        }
    }

    /// Strips `InPatch` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InPatch { source, .. } => source.root(),
            other => other,
        }
    }
}
