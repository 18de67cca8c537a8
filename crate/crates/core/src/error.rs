use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Fock basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The working space is too small to represent a displacement of the given size.
    #[error(
        "truncation too small: |alpha| = {alpha_abs} needs more than {size} Fock levels \
         (|alpha|^2 + 3|alpha|sqrt(size) = {required:.3})"
    )]
    TruncationTooSmall {
        alpha_abs: f64,
        size: usize,
        required: f64,
    },

    #[error("eigensolver did not converge for eigenvalue {index} after {sweeps} sweeps")]
    NonConvergence { index: usize, sweeps: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Omega = 0: the ansatz coefficient c_(m+1) is undefined without coupling")]
    OmegaZero,

    #[error("parameters are not at a root of the compatibility determinant (|det|/scale = {ratio:.3e})")]
    NotAtRoot { ratio: f64 },

    #[error("no kernel vector found (recursion residual {residual:.3e})")]
    KernelNotFound { residual: f64 },

    #[error("empty search range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },
}
