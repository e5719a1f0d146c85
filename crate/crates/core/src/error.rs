use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::C64;
use crate::mode::{ModeId, Party};

/// A matrix entry that connects two subset configurations of different charge.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Column (input) configuration over the operator targets.
    pub from: Vec<u8>,
    /// Row (output) configuration over the operator targets.
    pub to: Vec<u8>,
    pub entry: C64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} (|entry| = {})",
            ket(&self.from),
            ket(&self.to),
            self.entry.norm()
        )
    }
}

/// Renders an occupation vector as `|a,b,c⟩`.
pub fn ket(config: &[u8]) -> String {
    let mut s = String::from("|");
    for (i, q) in config.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&alloc::format!("{q}"));
    }
    s.push('⟩');
    s
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate mode id `{0}`")]
    DuplicateMode(ModeId),
    #[error("invalid mode `{id}`: {reason}")]
    InvalidMode { id: ModeId, reason: &'static str },
    #[error("unknown mode id `{0}`")]
    UnknownMode(ModeId),
    #[error("configuration has {got} entries but the register has {expected} modes")]
    ConfigArity { expected: usize, got: usize },
    #[error("occupation {value} of mode `{id}` exceeds its cap {cap}")]
    CapViolation { id: ModeId, value: u8, cap: u8 },
    #[error("states are defined on different registers")]
    RegisterMismatch,
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("operator dimension {got} does not match its targets (expected {expected})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("operator too large to materialize densely (dimension {0})")]
    TooLarge(usize),
    #[error("target list is empty")]
    EmptyTargets,
    #[error("mode `{0}` appears more than once in the target list")]
    DuplicateTarget(ModeId),
    #[error("operator violates charge conservation: {0}")]
    Legality(Witness),
    #[error("sector weights drifted by {0:e} under an allowed operator")]
    ConservationDrift(f64),
    #[error("configuration {config} has charge {charge}, expected {expected}")]
    ChargeViolation {
        config: String,
        charge: u32,
        expected: u32,
    },
    #[error("invalid catalysis plan: {0}")]
    InvalidPlan(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mode `{mode}` is not owned by {party}")]
    NotOwned { mode: ModeId, party: Party },
    #[error("mode `{0}` is not a free mode and cannot be measured")]
    NotFree(ModeId),
    #[error("ancilla limit of {0} modes reached")]
    AncillaLimit(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
