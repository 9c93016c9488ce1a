use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate denominator |D| = {modulus:.3e} at omega = {omega} meV")]
    Degenerate { omega: f64, modulus: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("coincident poles (separation {0:.3e} meV)")]
    CoincidentPoles(f64),

    #[error("contour encloses more than one singularity (radius check differs by {0:.3e})")]
    Enclosure(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("quadrature budget exhausted (estimated error {error:.3e}, target {target:.3e})")]
    Quadrature { error: f64, target: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Infeasible(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
