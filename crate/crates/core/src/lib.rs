//! Simulation of multi-mode quantum protocols under a charge superselection
//! rule.
//!
//! States live in the occupation-number basis of a register of modes. A
//! subset `M_R` of the modes carries the conserved charge `Q_R`; allowed
//! operations are block diagonal in `Q_R`. On top of that the crate builds
//! the catalytic swap of a restricted qubit with a free one, the lifted
//! general single-qubit unitary, and Alice's sector-wise cheating unitary
//! against fixed-charge bit commitment.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod mode;
pub mod operator;
pub mod state;
pub mod superselection;
pub mod density;
pub mod measure;
pub mod catalysis;
pub mod commitment;
pub mod protocol;

pub use error::{Error, Result, Witness};
pub use linalg::{CMatrix, C64};
pub use mode::{ModeId, ModeSpec, Party, Register, Statistics};
pub use operator::{Action, Condition, LocalOperator};
pub use state::{superpose, BasisConfig, SparseState};
pub use superselection::{charge_of, is_allowed, sector_decompose, Charge, Legality};
pub use density::{partial_trace, DensityMatrix};
