use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed number `{0}`")]
    Number(String),
    #[error("malformed element `{0}`")]
    Element(String),
    #[error("malformed cell size `{0}`")]
    Size(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("p must be prime (got {0})")]
    NotPrime(u64),
    #[error("p = {0} is outside the supported range 2..=97")]
    PrimeOutOfRange(u64),
    #[error("instance `{0}` requires --p")]
    MissingPrime(String),
    #[error("unknown budget rule `{0}`")]
    UnknownBudget(String),
    #[error("budget `{rule}` fails its certificate: {reason}")]
    BudgetRejected { rule: String, reason: String },
    #[error("steps = {0} exceeds the cap of {1}")]
    TooManySteps(u64, u64),
    #[error("instance `{instance}` is {actual}, expected {expected}")]
    WrongCase {
        instance: String,
        actual: &'static str,
        expected: &'static str,
    },
}

/// Failures of the geometry and group operations that are caller errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("points must be distinct")]
    EqualPoints,
    #[error("the identity is never a target")]
    IdentityTarget,
    #[error("point {0} lies in the set it must avoid")]
    PointInAvoidSet(String),
    #[error("instance `{0}` carries no Haar measure")]
    NoHaarMeasure(String),
    #[error("cell size `{size}` does not belong to instance `{instance}`")]
    ForeignSize { size: String, instance: String },
    #[error("instance `{0}` is precompact and has no escape witness")]
    NoEscapeWitness(String),
}

/// An invariant of the construction failed at run time.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant violated at stage {stage}: {detail}")]
pub struct InvariantViolation {
    pub stage: u64,
    pub detail: String,
}

/// Anything that stops a construction run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
}
