use thiserror::Error;

use crate::families::FamilyId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series `{what}` did not converge (last term {last:.3e} relative to sum)")]
    NonConvergence { what: &'static str, last: f64 },

    #[error("no sign change of h(1,z) on (0.01, 0.99) for {0}")]
    NoRoot(FamilyId),

    #[error("argument principle inconclusive: increment {0:.4} exceeds pi/2")]
    Inconclusive(f64),

    #[error("{0} has no known perimeter generating function")]
    UnsupportedFamily(FamilyId),

    #[error("columns {k} -> {j} cannot be glued in {family}")]
    InvalidPair { family: FamilyId, k: u32, j: u32 },

    #[error("{what} = {value} exceeds the cap {cap}")]
    ResourceCap { what: &'static str, value: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown family `{0}` (expected one of dcc, cc, dc, st, es, wa)")]
    UnknownFamily(String),

    #[error("POLYOSTAT_PRECISION must be `extended` or `double`, got `{0}`")]
    BadPrecision(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
