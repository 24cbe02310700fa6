use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {0} has zero norm")]
    ZeroNormRow(usize),

    #[error("{}", singular_message(.0))]
    SingularDistance(Option<(usize, usize)>),

    #[error("kernel Gram matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("antipodal augmentation is not applicable to {0}")]
    IncompatibleObjective(String),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn singular_message(pair: &Option<(usize, usize)>) -> String {
    match pair {
        Some((i, j)) => format!("points {i} and {j} are closer than the distance floor"),
        None => "distance is below the distance floor".to_string(),
    }
}

impl Error {
    /// True for failures raised by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularDistance(_)
            | Error::NotPositiveDefinite
            | Error::IncompatibleObjective(_) => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_iteration(self, iter: usize) -> Self {
        Error::AtIteration {
            iter,
            source: Box::new(self),
        }
    }
}
