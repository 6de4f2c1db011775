use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("variable must be x or y, found `{0}`")]
    BadVariable(String),

    #[error("free variable `{0}` unassigned at evaluation point")]
    FreeVariable(String),

    #[error("formula is not in normal form: {0}")]
    NotNormalForm(String),

    #[error("budget exceeded: {what} ({used} > {limit})")]
    Budget { what: String, used: u64, limit: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn budget(what: impl Into<String>, used: u64, limit: u64) -> Self {
        Error::Budget { what: what.into(), used, limit }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Tunable limits. The construction is inherently exponential in places; the
/// tool fails loudly instead of hanging.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Cap on enumerated types (free bits branch up to 2^k).
    pub max_types: u64,
    /// Cap on streamed consistent functions.
    pub max_consistent_fns: u64,
    /// Cap on type/profile variables inside the spectrum compilation.
    pub max_spectrum_vars: u64,
    /// Cap on vertices of constructed witness graphs.
    pub max_graph_vertices: u64,
    /// Cap on exhaustive-search universe sizes used for lazy table predicates.
    pub max_table_search: u64,
    /// Cap on rows when materializing lazy tables for formula emission.
    pub max_table_rows: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_types: 64,
            max_consistent_fns: 1_000_000,
            max_spectrum_vars: 200_000,
            max_graph_vertices: 100_000,
            max_table_search: 40,
            max_table_rows: 200_000,
        }
    }
}
