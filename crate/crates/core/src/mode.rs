//! Modes and registers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Identifier of a single mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(String);

impl ModeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModeId {
    fn from(s: &str) -> Self {
        Self(s.into())
    }
}

impl From<String> for ModeId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistics {
    Fermion,
    Boson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
        })
    }
}

/// One mode of the register: its statistics, occupancy cap, owner, and
/// membership in the restricted set `M_R` and the free set `M_F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSpec {
    pub id: ModeId,
    pub statistics: Statistics,
    pub q_max: u8,
    pub owner: Party,
    pub restricted: bool,
    pub free: bool,
}

impl ModeSpec {
    pub fn fermion(id: impl Into<ModeId>, owner: Party) -> Self {
        Self {
            id: id.into(),
            statistics: Statistics::Fermion,
            q_max: 1,
            owner,
            restricted: false,
            free: false,
        }
    }

    pub fn boson(id: impl Into<ModeId>, q_max: u8, owner: Party) -> Self {
        Self {
            id: id.into(),
            statistics: Statistics::Boson,
            q_max,
            owner,
            restricted: false,
            free: false,
        }
    }

    /// Marks the mode as a member of `M_R`.
    pub fn restricted(mut self) -> Self {
        self.restricted = true;
        self
    }

    /// Marks the mode as a member of `M_F`.
    pub fn free(mut self) -> Self {
        self.free = true;
        self
    }

    /// Local Hilbert-space dimension, `q_max + 1`.
    pub fn dim(&self) -> usize {
        self.q_max as usize + 1
    }

    fn validate(&self) -> Result<()> {
        let reason = match self.statistics {
            Statistics::Fermion if self.q_max != 1 => Some("fermion modes must have q_max = 1"),
            Statistics::Boson if self.q_max == 0 => Some("boson modes need q_max >= 1"),
            _ if self.restricted && self.free => Some("a mode cannot be both restricted and free"),
            _ => None,
        };
        match reason {
            Some(reason) => Err(Error::InvalidMode {
                id: self.id.clone(),
                reason,
            }),
            None => Ok(()),
        }
    }
}

/// Ordered mode universe. Order is fixed at construction and defines the
/// layout of every [`BasisConfig`](crate::state::BasisConfig) on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    modes: Vec<ModeSpec>,
    index: BTreeMap<ModeId, usize>,
    caps: Vec<u8>,
}

impl Register {
    pub fn new(specs: Vec<ModeSpec>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (pos, spec) in specs.iter().enumerate() {
            spec.validate()?;
            if index.insert(spec.id.clone(), pos).is_some() {
                return Err(Error::DuplicateMode(spec.id.clone()));
            }
        }
        let caps = specs.iter().map(|m| m.q_max).collect();
        Ok(Self {
            modes: specs,
            index,
            caps,
        })
    }

    pub fn empty() -> Self {
        Self {
            modes: Vec::new(),
            index: BTreeMap::new(),
            caps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    /// `q_max` per position.
    pub fn caps(&self) -> &[u8] {
        &self.caps
    }

    pub fn mode(&self, pos: usize) -> &ModeSpec {
        &self.modes[pos]
    }

    pub fn contains(&self, id: &ModeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn position(&self, id: &ModeId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownMode(id.clone()))
    }

    pub fn spec(&self, id: &ModeId) -> Result<&ModeSpec> {
        Ok(&self.modes[self.position(id)?])
    }

    /// Positions of `ids`, in the given order. Rejects unknown and repeated ids.
    pub fn positions(&self, ids: &[ModeId]) -> Result<Vec<usize>> {
        let mut seen = alloc::vec![false; self.modes.len()];
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let pos = self.position(id)?;
            if core::mem::replace(&mut seen[pos], true) {
                return Err(Error::DuplicateTarget(id.clone()));
            }
            out.push(pos);
        }
        Ok(out)
    }

    pub fn ids(&self) -> impl Iterator<Item = &ModeId> {
        self.modes.iter().map(|m| &m.id)
    }

    pub fn ids_where(&self, mut pred: impl FnMut(&ModeSpec) -> bool) -> Vec<ModeId> {
        self.modes
            .iter()
            .filter(|m| pred(m))
            .map(|m| m.id.clone())
            .collect()
    }

    pub fn owned_by(&self, party: Party) -> Vec<ModeId> {
        self.ids_where(|m| m.owner == party)
    }

    /// Copy with ownership of `id` moved to `party`. Flags are untouched.
    pub fn with_owner(&self, id: &ModeId, party: Party) -> Result<Self> {
        let pos = self.position(id)?;
        let mut out = self.clone();
        out.modes[pos].owner = party;
        Ok(out)
    }

    /// Copy with `specs` appended after the existing modes.
    pub fn extended(&self, specs: impl IntoIterator<Item = ModeSpec>) -> Result<Self> {
        let mut modes = self.modes.clone();
        modes.extend(specs);
        Self::new(modes)
    }

    /// Concatenation `self ++ other`; ids must be disjoint.
    pub fn concat(&self, other: &Register) -> Result<Self> {
        self.extended(other.modes.iter().cloned())
    }

    /// Same mode ids, caps, statistics and flags; owners may differ.
    pub fn same_layout(&self, other: &Register) -> bool {
        self.modes.len() == other.modes.len()
            && self.modes.iter().zip(&other.modes).all(|(a, b)| {
                a.id == b.id
                    && a.statistics == b.statistics
                    && a.q_max == b.q_max
                    && a.restricted == b.restricted
                    && a.free == b.free
            })
    }

    /// An id not yet present, of the form `{prefix}{k}`.
    pub fn fresh_id(&self, prefix: &str) -> ModeId {
        (0usize..)
            .map(|k| ModeId::new(alloc::format!("{prefix}{k}")))
            .find(|id| !self.contains(id))
            .expect("unbounded id space")
    }

    /// `count` distinct ids not yet present, of the form `{prefix}{k}`.
    pub fn fresh_ids(&self, prefix: &str, count: usize) -> Vec<ModeId> {
        (0usize..)
            .map(|k| ModeId::new(alloc::format!("{prefix}{k}")))
            .filter(|id| !self.contains(id))
            .take(count)
            .collect()
    }
}
