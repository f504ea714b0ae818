use thiserror::Error;

use crate::cantor::BitString;
use crate::semimeasure::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bit string {0:?}: only 0 and 1 are allowed")]
    ParseBitString(String),
    #[error("invalid dyadic {0:?}: expected n/2^k")]
    ParseDyadic(String),
    #[error("invalid rational {0:?}: expected n/2^k or p/q")]
    ParseRational(String),
    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("not a semimeasure: {0}")]
    NotSemimeasure(Violation),
    #[error("not a distribution: {0}")]
    NotDistribution(Violation),
    #[error("empty family")]
    EmptyFamily,
    #[error("fixture kind is {found}, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("not dominated on finite support: reference is zero at {0:?}")]
    NotDominated(BitString),
    #[error("norm undefined at zero")]
    NormAtZero,
    #[error("complexity undefined, cannot set grid: m({x:?}) = 0 at stage {stage}")]
    ComplexityUndefined { x: BitString, stage: usize },

    #[error("invalid level bound: {0}")]
    InvalidLevelBound(String),
    #[error("value {value} of {x:?} at stage {stage} is not on the 2^-{t_level} grid")]
    BitLength {
        x: BitString,
        stage: usize,
        value: String,
        t_level: u32,
    },
    #[error("{0:?} is outside the allocation domain")]
    NotInDomain(BitString),

    #[error("not a test: total mass {mass} exceeds 1 at stage {stage}")]
    NotATest { stage: usize, mass: String },
    #[error("depth {depth} is below the exactness depth {required}")]
    DepthTooShallow { depth: usize, required: usize },

    #[error("depth {depth} exceeds the cap {cap} set by KFORGE_MAX_DEPTH")]
    DepthCap { depth: usize, cap: usize },

    #[error("empty support")]
    EmptySupport,
    #[error("target not in supported cone: {0:?}")]
    TargetOutsideCone(BitString),
    #[error("dominance invariant violated at {0:?}")]
    DominanceInvariant(BitString),
    #[error("stage {stage} exceeds S_max = {s_max}")]
    StageOutOfRange { stage: usize, s_max: usize },
    #[error("inconsistent instance: {0}")]
    Instance(String),
}

impl Error {
    /// Parse and I/O failures, as opposed to violations of a mathematical
    /// precondition or invariant.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::ParseBitString(_)
                | Error::ParseDyadic(_)
                | Error::ParseRational(_)
                | Error::Parse { .. }
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
