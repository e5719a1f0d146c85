//! Two-party protocol execution under the model's rules.
//!
//! A party may only act on modes it owns, with operators that respect the
//! superselection rule, and may only measure its free modes. Sending a mode
//! to the other party changes its owner; restricted and free flags never
//! change.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::measure::measure_occupation;
use crate::mode::{ModeId, ModeSpec, Party, Register};
use crate::operator::LocalOperator;
use crate::state::SparseState;
use crate::superselection::{apply_allowed, is_allowed, Legality};

/// Default cap on modes added by [`Session::allocate_ancilla`].
pub const DEFAULT_ANCILLA_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolStep {
    Apply {
        party: Party,
        operator: LocalOperator,
        targets: Vec<ModeId>,
    },
    Transfer {
        mode: ModeId,
        from: Party,
        to: Party,
    },
    Measure {
        party: Party,
        targets: Vec<ModeId>,
        seed: u64,
    },
}

/// What one party holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OwnershipView {
    pub owned: Vec<ModeId>,
    pub free: Vec<ModeId>,
    pub restricted: Vec<ModeId>,
}

pub fn ownership_view(register: &Register, party: Party) -> OwnershipView {
    OwnershipView {
        owned: register.ids_where(|m| m.owner == party),
        free: register.ids_where(|m| m.owner == party && m.free),
        restricted: register.ids_where(|m| m.owner == party && m.restricted),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Applied { legality: Legality },
    Transferred,
    Measured { outcome: Vec<u8>, probability: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub index: usize,
    pub outcome: StepOutcome,
    /// Owner of every mode after the step, in register order.
    pub owners: Vec<Party>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub records: Vec<StepRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunErrorKind {
    Ownership,
    Legality,
    Measurement,
    Invalid,
}

/// A failed step and why it failed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunError {
    pub step: usize,
    pub error: Error,
}

impl RunError {
    pub fn kind(&self) -> RunErrorKind {
        match self.error {
            Error::NotOwned { .. } => RunErrorKind::Ownership,
            Error::Legality(_) => RunErrorKind::Legality,
            Error::NotFree(_) => RunErrorKind::Measurement,
            _ => RunErrorKind::Invalid,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.error)
    }
}

/// Runs `steps` in order from `initial`.
pub fn run_protocol(initial: &SparseState, steps: &[ProtocolStep]) -> core::result::Result<(SparseState, Transcript), RunError> {
    let mut session = Session::new(initial.clone());
    for step in steps {
        session.step(step)?;
    }
    Ok(session.finish())
}

/// Incremental execution with lazily allocated ancillas.
#[derive(Clone, Debug)]
pub struct Session {
    state: SparseState,
    transcript: Transcript,
    ancilla_limit: usize,
    ancillas: usize,
}

impl Session {
    pub fn new(initial: SparseState) -> Self {
        Self {
            state: initial,
            transcript: Transcript::default(),
            ancilla_limit: DEFAULT_ANCILLA_LIMIT,
            ancillas: 0,
        }
    }

    pub fn with_ancilla_limit(mut self, limit: usize) -> Self {
        self.ancilla_limit = limit;
        self
    }

    pub fn state(&self) -> &SparseState {
        &self.state
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn finish(self) -> (SparseState, Transcript) {
        (self.state, self.transcript)
    }

    /// Appends an empty mode shaped like `template`; its id is used as a
    /// prefix for a fresh one.
    pub fn allocate_ancilla(&mut self, template: ModeSpec) -> Result<ModeId> {
        if self.ancillas >= self.ancilla_limit {
            return Err(Error::AncillaLimit(self.ancilla_limit));
        }
        let id = self.state.register().fresh_id(template.id.as_str());
        let spec = ModeSpec { id: id.clone(), ..template };
        self.state = self.state.extended(alloc::vec![spec], &[0])?;
        self.ancillas += 1;
        Ok(id)
    }

    /// Executes one step; on error the session is left unchanged.
    pub fn step(&mut self, step: &ProtocolStep) -> core::result::Result<&StepRecord, RunError> {
        let index = self.transcript.records.len();
        let (state, outcome) = self.execute(step).map_err(|error| RunError { step: index, error })?;
        self.state = state;
        let owners = self.state.register().modes().iter().map(|m| m.owner).collect();
        self.transcript.records.push(StepRecord { index, outcome, owners });
        Ok(self.transcript.records.last().expect("just pushed"))
    }

    fn check_owned(&self, party: Party, targets: &[ModeId]) -> Result<()> {
        let register = self.state.register();
        register.positions(targets)?;
        match targets.iter().find(|id| register.spec(id).map(|m| m.owner) != Ok(party)) {
            Some(id) => Err(Error::NotOwned {
                mode: id.clone(),
                party,
            }),
            None => Ok(()),
        }
    }

    fn execute(&self, step: &ProtocolStep) -> Result<(SparseState, StepOutcome)> {
        match step {
            ProtocolStep::Apply {
                party,
                operator,
                targets,
            } => {
                self.check_owned(*party, targets)?;
                let legality = is_allowed(operator, targets, self.state.register())?;
                if let Legality::Blocked(w) = legality {
                    return Err(Error::Legality(w));
                }
                let state = apply_allowed(&self.state, operator, targets)?;
                Ok((state, StepOutcome::Applied { legality }))
            }
            ProtocolStep::Transfer { mode, from, to } => {
                self.check_owned(*from, core::slice::from_ref(mode))?;
                if from == to {
                    return Err(Error::InvalidArgument(alloc::format!("{mode} is already owned by {to}")));
                }
                let register = Arc::new(self.state.register().with_owner(mode, *to)?);
                Ok((self.state.with_register(register)?, StepOutcome::Transferred))
            }
            ProtocolStep::Measure { party, targets, seed } => {
                if targets.is_empty() {
                    return Err(Error::EmptyTargets);
                }
                self.check_owned(*party, targets)?;
                let register = self.state.register();
                if let Some(id) = targets.iter().find(|id| !register.spec(id).map(|m| m.free).unwrap_or(false)) {
                    return Err(Error::NotFree(id.clone()));
                }
                let m = measure_occupation(&self.state, targets, *seed)?;
                Ok((
                    m.post_state,
                    StepOutcome::Measured {
                        outcome: m.outcome,
                        probability: m.probability,
                    },
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli_x, swap};
    use alloc::vec;

    fn setup() -> SparseState {
        let reg = Register::new(vec![
            ModeSpec::fermion("x", Party::Alice).restricted(),
            ModeSpec::boson("z", 1, Party::Alice).free(),
            ModeSpec::boson("w", 1, Party::Bob).free(),
        ])
        .unwrap();
        SparseState::vacuum(Arc::new(reg))
    }

    #[test]
    fn empty_script() {
        let s = setup();
        let (out, t) = run_protocol(&s, &[]).unwrap();
        assert_eq!(out, s);
        assert!(t.records.is_empty());
    }

    #[test]
    fn ownership_is_enforced() {
        let step = ProtocolStep::Apply {
            party: Party::Alice,
            operator: pauli_x(),
            targets: vec!["w".into()],
        };
        let err = run_protocol(&setup(), &[step]).unwrap_err();
        assert_eq!(err.step, 0);
        assert_eq!(err.kind(), RunErrorKind::Ownership);
    }

    #[test]
    fn legality_error_reports_first_bad_step() {
        let steps = [
            ProtocolStep::Apply {
                party: Party::Alice,
                operator: pauli_x(),
                targets: vec!["z".into()],
            },
            ProtocolStep::Apply {
                party: Party::Alice,
                operator: swap(2),
                targets: vec!["x".into(), "z".into()],
            },
        ];
        let err = run_protocol(&setup(), &steps).unwrap_err();
        assert_eq!((err.step, err.kind()), (1, RunErrorKind::Legality));
    }

    #[test]
    fn transfer_and_measure() {
        let steps = [
            ProtocolStep::Apply {
                party: Party::Alice,
                operator: pauli_x(),
                targets: vec!["z".into()],
            },
            ProtocolStep::Transfer {
                mode: "z".into(),
                from: Party::Alice,
                to: Party::Bob,
            },
            ProtocolStep::Measure {
                party: Party::Bob,
                targets: vec!["z".into(), "w".into()],
                seed: 3,
            },
        ];
        let (out, t) = run_protocol(&setup(), &steps).unwrap();
        assert_eq!(out.amplitude(&[0, 1, 0]).re, 1.0);
        assert_eq!(
            t.records[2].outcome,
            StepOutcome::Measured {
                outcome: vec![1, 0],
                probability: 1.0
            }
        );
        assert_eq!(t.records[1].owners, vec![Party::Alice, Party::Bob, Party::Bob]);
        let view = ownership_view(out.register(), Party::Bob);
        assert_eq!(view.owned, vec![ModeId::from("z"), ModeId::from("w")]);
        assert!(view.restricted.is_empty());
        assert!(out.register().same_layout(setup().register()));
    }

    #[test]
    fn measuring_restricted_mode_fails() {
        let step = ProtocolStep::Measure {
            party: Party::Alice,
            targets: vec!["x".into()],
            seed: 0,
        };
        let err = run_protocol(&setup(), &[step]).unwrap_err();
        assert_eq!(err.kind(), RunErrorKind::Measurement);
    }

    #[test]
    fn ancilla_limit() {
        let mut session = Session::new(setup()).with_ancilla_limit(1);
        let id = session.allocate_ancilla(ModeSpec::fermion("anc", Party::Bob).restricted()).unwrap();
        assert_eq!(id, ModeId::from("anc0"));
        assert_eq!(session.state().register().len(), 4);
        assert!(matches!(
            session.allocate_ancilla(ModeSpec::fermion("anc", Party::Bob)),
            Err(Error::AncillaLimit(1))
        ));
    }
}
