//! Update-stream tooling around `batchcore`: workload generators, a text
//! stream format, and run/verify/bench/app drivers emitting JSON lines.

pub mod gen;
pub mod report;
pub mod run;
pub mod stream;

pub use gen::{generate, GenKind, GenParams};
pub use run::{AppKind, OracleMode, RunConfig, Summary};
pub use stream::UpdateStream;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] batchcore::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl HarnessError {
    /// 1 for a failed check, 2 for bad input or parameters.
    pub fn exit_code(&self) -> i32 {
        use batchcore::Error as E;
        match self {
            HarnessError::Verification(_) => 1,
            HarnessError::Core(E::Parameter(_) | E::SizeLimit { .. } | E::VertexOutOfRange { .. }) => 2,
            HarnessError::Core(_) => 1,
            HarnessError::Parse { .. } | HarnessError::Io(_) | HarnessError::Usage(_) => 2,
        }
    }
}
