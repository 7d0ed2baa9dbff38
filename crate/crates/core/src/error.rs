use alloc::string::String;

use crate::env::EnvError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("zero-norm vector cannot be normalized")]
    ZeroNorm,
    #[error("run has no checkpoints")]
    EmptyRun,
}
