//! The charge `Q_R`, charge sectors, and operator legality.
//!
//! An operator is allowed when it is block diagonal in the charge carried
//! by the restricted modes among its targets. Targets outside `M_R` do not
//! contribute, so operators that touch no restricted mode are always
//! allowed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result, Witness};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::mode::{ModeId, Register};
use crate::operator::{subset_config, subset_dimension, LocalOperator, OperatorKind, MAX_DENSE_DIM};
use crate::state::{validate_config, Positions, Amplitudes, SparseState, UNITARY_TOLERANCE};

/// Value of the conserved charge.
pub type Charge = u32;

/// Matrix entries at or below this magnitude count as structural zeros.
pub const LEGALITY_TOLERANCE: f64 = 1e-12;
/// Allowed drift of sector weights under an allowed operator.
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;

pub(crate) fn charge_at(occupations: &[u8], positions: &[usize]) -> Charge {
    Positions::new(positions).charge(occupations)
}

/// `Q_R` of a configuration: occupations summed over restricted modes only.
pub fn charge_of(occupations: &[u8], register: &Register) -> Result<Charge> {
    validate_config(register, occupations)?;
    Ok(register
        .modes()
        .iter()
        .zip(occupations)
        .filter(|(m, _)| m.restricted)
        .map(|(_, &q)| q as Charge)
        .sum())
}

pub fn restricted_positions(register: &Register) -> Vec<usize> {
    (0..register.len())
        .filter(|&p| register.mode(p).restricted)
        .collect()
}

/// Restricted positions among `ids`.
pub fn restricted_positions_of(register: &Register, ids: &[ModeId]) -> Result<Vec<usize>> {
    Ok(register
        .positions(ids)?
        .into_iter()
        .filter(|&p| register.mode(p).restricted)
        .collect())
}

/// One charge sector of a state: `coefficient · component` is the state's
/// projection onto the sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    /// `p_k`, the squared norm of the projection.
    pub weight: f64,
    /// Unit-modulus phase stripped from the component.
    pub phase: C64,
    /// Normalized component; its lexicographically smallest configuration
    /// has a real positive amplitude.
    pub component: SparseState,
}

impl Sector {
    /// `√p_k · phase`.
    pub fn coefficient(&self) -> C64 {
        self.phase * libm::sqrt(self.weight)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorDecomposition {
    sectors: BTreeMap<Charge, Sector>,
}

impl SectorDecomposition {
    pub fn get(&self, k: Charge) -> Option<&Sector> {
        self.sectors.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Charge, &Sector)> {
        self.sectors.iter().map(|(k, s)| (*k, s))
    }

    pub fn charges(&self) -> impl Iterator<Item = Charge> + '_ {
        self.sectors.keys().copied()
    }

    pub fn weight(&self, k: Charge) -> f64 {
        self.sectors.get(&k).map_or(0.0, |s| s.weight)
    }

    pub fn weights(&self) -> BTreeMap<Charge, f64> {
        self.sectors.iter().map(|(k, s)| (*k, s.weight)).collect()
    }

    /// `Σ_k √p_k · phase_k · component_k`.
    pub fn reassemble(&self) -> Result<SparseState> {
        let mut iter = self.sectors.values();
        let first = iter.next().ok_or(Error::ZeroNorm)?;
        let register = first.component.register().clone();
        let mut amps = Amplitudes::new();
        for s in self.sectors.values() {
            let c = s.coefficient();
            for (cfg, a) in s.component.amplitudes() {
                *amps.entry(cfg.clone()).or_insert(ZERO) += c * a;
            }
        }
        SparseState::normalized(register, amps).map(|(s, _)| s)
    }
}

/// Sector expansion over the full restricted set `M_R`.
pub fn sector_decompose(state: &SparseState) -> SectorDecomposition {
    let positions = restricted_positions(state.register());
    decompose_at(state, &positions)
}

/// Sector expansion by the charge of the restricted modes among `ids`
/// (for instance one party's share `Q^A_R`).
pub fn sector_decompose_over(state: &SparseState, ids: &[ModeId]) -> Result<SectorDecomposition> {
    let positions = restricted_positions_of(state.register(), ids)?;
    Ok(decompose_at(state, &positions))
}

fn decompose_at(state: &SparseState, positions: &[usize]) -> SectorDecomposition {
    let selected = Positions::new(positions);
    let mut buckets: BTreeMap<Charge, Amplitudes> = BTreeMap::new();
    for (cfg, a) in state.amplitudes() {
        buckets
            .entry(selected.charge(cfg))
            .or_default()
            .insert(cfg.clone(), *a);
    }
    let sectors = buckets
        .into_iter()
        .map(|(k, amps)| {
            let weight: f64 = amps.values().map(|a| a.norm_sqr()).sum();
            let lead = *amps.values().next().expect("sector buckets are nonempty");
            let phase = lead / lead.norm();
            let scale = phase.conj() / libm::sqrt(weight);
            let component_amps = amps.into_iter().map(|(c, a)| (c, a * scale)).collect();
            let component = SparseState::from_trusted(state.register().clone(), component_amps)
                .expect("sector component has unit norm");
            (
                k,
                Sector {
                    weight,
                    phase,
                    component,
                },
            )
        })
        .collect();
    SectorDecomposition { sectors }
}

/// Sector weights `p_k` over `M_R`, without building components.
pub fn sector_weights(state: &SparseState) -> BTreeMap<Charge, f64> {
    let positions = restricted_positions(state.register());
    let selected = Positions::new(&positions);
    let mut out = BTreeMap::new();
    for (cfg, a) in state.amplitudes() {
        *out.entry(selected.charge(cfg)).or_insert(0.0) += a.norm_sqr();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Legality {
    Allowed,
    /// First offending entry found (columns scanned in basis order).
    Blocked(Witness),
}

impl Legality {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Legality::Allowed)
    }
}

/// Decides whether `op` on `target_ids` is block diagonal in the charge of
/// the restricted targets.
pub fn is_allowed(op: &LocalOperator, target_ids: &[ModeId], register: &Register) -> Result<Legality> {
    let positions = crate::state::target_positions(register, op, target_ids)?;
    let restricted: Vec<usize> = (0..positions.len())
        .filter(|&i| register.mode(positions[i]).restricted)
        .collect();
    Ok(match find_violation(op, &restricted) {
        Some(w) => Legality::Blocked(w),
        None => Legality::Allowed,
    })
}

/// `restricted` lists the operator-local positions of restricted targets.
fn find_violation(op: &LocalOperator, restricted: &[usize]) -> Option<Witness> {
    if restricted.is_empty() {
        return None;
    }
    let selected = Positions::new(restricted);
    let sub_charge = |sub: &[u8]| selected.charge(sub);
    match op.kind() {
        OperatorKind::Dense(m) => {
            let dims = op.dims();
            let charges: Vec<Charge> = (0..m.rows())
                .map(|i| sub_charge(&subset_config(dims, i)))
                .collect();
            for col in 0..m.cols() {
                for row in 0..m.rows() {
                    let entry = m[(row, col)];
                    if charges[row] != charges[col] && entry.norm() > LEGALITY_TOLERANCE {
                        return Some(Witness {
                            from: subset_config(dims, col),
                            to: subset_config(dims, row),
                            entry,
                        });
                    }
                }
            }
            None
        }
        OperatorKind::Sparse(cols) => cols.iter().find_map(|(col, rows)| {
            let q = sub_charge(col);
            rows.iter()
                .find(|(row, v)| v.norm() > LEGALITY_TOLERANCE && sub_charge(row) != q)
                .map(|(row, v)| Witness {
                    from: col.clone(),
                    to: row.clone(),
                    entry: *v,
                })
        }),
        OperatorKind::Controlled(c) => {
            let inner_restricted: Vec<usize> = (0..c.inner_positions.len())
                .filter(|&i| restricted.binary_search(&c.inner_positions[i]).is_ok())
                .collect();
            let inner = find_violation(&c.inner, &inner_restricted)?;
            // The condition never reads inner positions, so any assignment
            // satisfying it can host the inner violation.
            let base = c.condition.satisfying(op.dims())?;
            let embed = |inner_sub: &[u8]| {
                let mut full = base.clone();
                for (&p, &v) in c.inner_positions.iter().zip(inner_sub) {
                    full[p] = v;
                }
                full
            };
            Some(Witness {
                from: embed(&inner.from),
                to: embed(&inner.to),
                entry: inner.entry,
            })
        }
    }
}

/// Subset configurations of `target_ids` grouped by the charge of their
/// restricted targets, each group in lexicographic order.
pub fn sector_slices(target_ids: &[ModeId], register: &Register) -> Result<BTreeMap<Charge, Vec<Vec<u8>>>> {
    let positions = register.positions(target_ids)?;
    let dims: Vec<usize> = positions.iter().map(|&p| register.mode(p).dim()).collect();
    let restricted: Vec<usize> = (0..positions.len())
        .filter(|&i| register.mode(positions[i]).restricted)
        .collect();
    let d = subset_dimension(&dims)
        .filter(|&d| d <= MAX_DENSE_DIM)
        .ok_or(Error::TooLarge(subset_dimension(&dims).unwrap_or(usize::MAX)))?;
    let mut out: BTreeMap<Charge, Vec<Vec<u8>>> = BTreeMap::new();
    for i in 0..d {
        let sub = subset_config(&dims, i);
        out.entry(charge_at(&sub, &restricted)).or_default().push(sub);
    }
    Ok(out)
}

/// Assembles the block-diagonal operator acting as `blocks[k]` on the
/// charge-`k` slice of `target_ids` and as the identity on unlisted sectors.
pub fn sector_conditioned(
    blocks: &BTreeMap<Charge, CMatrix>,
    target_ids: &[ModeId],
    register: &Register,
) -> Result<LocalOperator> {
    if target_ids.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let positions = register.positions(target_ids)?;
    let dims: Vec<usize> = positions.iter().map(|&p| register.mode(p).dim()).collect();
    let slices = sector_slices(target_ids, register)?;
    let d = subset_dimension(&dims).expect("bounded by sector_slices");
    let mut m = CMatrix::identity(d);
    for (k, block) in blocks {
        let slice = slices.get(k).map_or(&[][..], Vec::as_slice);
        if !block.is_square() || block.rows() != slice.len() {
            return Err(Error::DimensionMismatch {
                expected: slice.len(),
                got: block.rows().max(block.cols()),
            });
        }
        let dev = block.unitarity_deviation();
        if dev > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(dev));
        }
        let idx: Vec<usize> = slice
            .iter()
            .map(|s| crate::operator::subset_index(&dims, s))
            .collect();
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                m[(r, c)] = block[(i, j)];
            }
        }
    }
    Ok(LocalOperator::dense(dims, m)?.with_sector_blocks(blocks.clone()))
}

/// [`SparseState::apply_local`] restricted to allowed operators; also
/// re-checks that the sector weights over `M_R` did not move.
pub fn apply_allowed(state: &SparseState, op: &LocalOperator, target_ids: &[ModeId]) -> Result<SparseState> {
    if let Legality::Blocked(w) = is_allowed(op, target_ids, state.register())? {
        return Err(Error::Legality(w));
    }
    let before = sector_weights(state);
    let out = state.apply_local(op, target_ids)?;
    let after = sector_weights(&out);
    let drift = before
        .keys()
        .chain(after.keys())
        .map(|k| (before.get(k).unwrap_or(&0.0) - after.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max);
    if drift > CONSERVATION_TOLERANCE {
        return Err(Error::ConservationDrift(drift));
    }
    Ok(out)
}
