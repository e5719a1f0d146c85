//! Unitaries on an ordered subset of modes.
//!
//! The subset basis is the lexicographic order of occupation vectors in
//! target order: the first target is the most significant digit. Dense
//! matrices are indexed that way. Operators on many modes (the catalyst
//! swap touches every ancilla) use the sparse or controlled forms, which act
//! on configurations directly and never materialize the full basis.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::state::{occupation_sum, span, Positions};

/// Largest subset dimension that will be materialized as a dense matrix.
pub const MAX_DENSE_DIM: usize = 4096;

/// Result of applying an operator to one subset basis configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    /// The configuration is mapped to itself with coefficient 1.
    Identity,
    /// `U|c⟩ = Σ coeff |row⟩`.
    Map(Vec<(Vec<u8>, C64)>),
}

/// Explicit columns; every configuration not listed is left unchanged.
pub type SparseColumns = BTreeMap<Vec<u8>, Vec<(Vec<u8>, C64)>>;

/// Charge of the configuration at `positions` must lie in `allowed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeCondition {
    positions: Vec<usize>,
    allowed: BTreeSet<u32>,
}

impl ChargeCondition {
    /// Positions summed, sorted and without repeats.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn allowed(&self) -> &BTreeSet<u32> {
        &self.allowed
    }

    fn charge(&self, sub: &[u8]) -> u32 {
        match (self.positions.first(), self.positions.last()) {
            // Sorted and distinct, so the endpoints decide contiguity.
            (Some(&a), Some(&b)) if b - a + 1 == self.positions.len() => occupation_sum(&sub[a..=b]),
            _ => self.positions.iter().map(|&p| sub[p] as u32).sum(),
        }
    }
}

/// Conjunction of occupation tests and at most one charge test, over
/// positions within the operator's target list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Condition {
    pub occupations: Vec<(usize, u8)>,
    pub charge: Option<ChargeCondition>,
}

impl Condition {
    pub fn occupation(position: usize, value: u8) -> Self {
        Self {
            occupations: vec![(position, value)],
            charge: None,
        }
    }

    pub fn and_occupation(mut self, position: usize, value: u8) -> Self {
        self.occupations.push((position, value));
        self
    }

    /// Adds the clause "charge summed over `positions` lies in `allowed`".
    pub fn and_charge_in(mut self, mut positions: Vec<usize>, allowed: impl IntoIterator<Item = u32>) -> Self {
        positions.sort_unstable();
        positions.dedup();
        self.charge = Some(ChargeCondition {
            positions,
            allowed: allowed.into_iter().collect(),
        });
        self
    }

    pub fn holds(&self, sub: &[u8]) -> bool {
        self.occupations.iter().all(|&(p, v)| sub[p] == v)
            && self.charge.as_ref().is_none_or(|c| {
                c.allowed.contains(&c.charge(sub))
            })
    }

    fn positions(&self) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self.occupations.iter().map(|&(p, _)| p).collect();
        if let Some(c) = &self.charge {
            out.extend(c.positions.iter().copied());
        }
        out
    }

    /// Some configuration over `dims` satisfying the condition, zero on
    /// every position the condition does not constrain. `None` if the
    /// condition can never hold.
    pub fn satisfying(&self, dims: &[usize]) -> Option<Vec<u8>> {
        let mut sub = vec![0u8; dims.len()];
        let mut fixed = BTreeSet::new();
        for &(p, v) in &self.occupations {
            if v as usize >= dims[p] || (fixed.contains(&p) && sub[p] != v) {
                return None;
            }
            sub[p] = v;
            fixed.insert(p);
        }
        if let Some(c) = &self.charge {
            let base: u32 = c.positions.iter().map(|&p| sub[p] as u32).sum();
            let open: Vec<usize> = c
                .positions
                .iter()
                .copied()
                .filter(|p| !fixed.contains(p))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let room: u32 = open.iter().map(|&p| dims[p] as u32 - 1).sum();
            let target = c.allowed.range(base..=base + room).next().copied()?;
            let mut need = target - base;
            for p in open {
                let take = need.min(dims[p] as u32 - 1);
                sub[p] = take as u8;
                need -= take;
            }
        }
        Some(sub)
    }
}

/// An inner operator applied to `inner_positions` whenever the condition
/// holds on the remaining positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Controlled {
    pub condition: Condition,
    pub inner_positions: Vec<usize>,
    pub inner: Box<LocalOperator>,
    inner_span: Option<core::ops::Range<usize>>,
}

impl Controlled {
    fn inner_selection(&self) -> Positions<'_> {
        match &self.inner_span {
            Some(r) => Positions::Span(r.clone()),
            None => Positions::List(&self.inner_positions),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Dense(CMatrix),
    Sparse(SparseColumns),
    Controlled(Controlled),
}

/// Unitary on an ordered list of target modes with local dimensions `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    dims: Vec<usize>,
    kind: OperatorKind,
    sector_blocks: Option<BTreeMap<u32, CMatrix>>,
}

/// Index of `sub` in the lexicographic subset basis over `dims`.
pub fn subset_index(dims: &[usize], sub: &[u8]) -> usize {
    sub.iter()
        .zip(dims)
        .fold(0, |acc, (&q, &d)| acc * d + q as usize)
}

/// Inverse of [`subset_index`].
pub fn subset_config(dims: &[usize], mut index: usize) -> Vec<u8> {
    let mut sub = vec![0u8; dims.len()];
    for (slot, &d) in sub.iter_mut().zip(dims).rev() {
        *slot = (index % d) as u8;
        index /= d;
    }
    sub
}

/// Total subset dimension, or `None` on overflow.
pub fn subset_dimension(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

fn check_config(dims: &[usize], sub: &[u8]) -> Result<()> {
    if sub.len() != dims.len() {
        return Err(Error::ConfigArity {
            expected: dims.len(),
            got: sub.len(),
        });
    }
    if sub.iter().zip(dims).fold(false, |bad, (&q, &d)| bad | (q as usize >= d)) {
        return Err(Error::InvalidArgument(alloc::format!(
            "configuration {} outside operator dimensions",
            crate::error::ket(sub)
        )));
    }
    Ok(())
}

impl LocalOperator {
    /// Dense matrix over the subset basis of `dims`.
    pub fn dense(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let d = subset_dimension(&dims).ok_or(Error::TooLarge(usize::MAX))?;
        if !matrix.is_square() || matrix.rows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.rows().max(matrix.cols()),
            });
        }
        Ok(Self {
            dims,
            kind: OperatorKind::Dense(matrix),
            sector_blocks: None,
        })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        Self {
            dims,
            kind: OperatorKind::Sparse(SparseColumns::new()),
            sector_blocks: None,
        }
    }

    /// Sparse operator: listed columns map as given, everything else is fixed.
    pub fn sparse(dims: Vec<usize>, columns: SparseColumns) -> Result<Self> {
        for (col, rows) in &columns {
            check_config(&dims, col)?;
            for (row, _) in rows {
                check_config(&dims, row)?;
            }
        }
        Ok(Self {
            dims,
            kind: OperatorKind::Sparse(columns),
            sector_blocks: None,
        })
    }

    /// Permutation of basis configurations given as disjoint transpositions.
    pub fn transpositions(dims: Vec<usize>, pairs: &[(Vec<u8>, Vec<u8>)]) -> Result<Self> {
        let mut columns = SparseColumns::new();
        for (a, b) in pairs {
            if columns.contains_key(a) || columns.contains_key(b) || a == b {
                return Err(Error::InvalidArgument("transpositions must be disjoint".into()));
            }
            columns.insert(a.clone(), vec![(b.clone(), ONE)]);
            columns.insert(b.clone(), vec![(a.clone(), ONE)]);
        }
        Self::sparse(dims, columns)
    }

    /// `inner` on `inner_positions`, applied only where `condition` holds.
    /// Condition positions and inner positions must be disjoint.
    pub fn controlled(
        dims: Vec<usize>,
        condition: Condition,
        inner_positions: Vec<usize>,
        inner: LocalOperator,
    ) -> Result<Self> {
        let cond_positions = condition.positions();
        let mut seen = BTreeSet::new();
        for &p in &inner_positions {
            if p >= dims.len() || !seen.insert(p) || cond_positions.contains(&p) {
                return Err(Error::InvalidArgument(
                    "inner positions must be distinct, in range, and disjoint from the condition".into(),
                ));
            }
        }
        if cond_positions.iter().any(|&p| p >= dims.len()) {
            return Err(Error::InvalidArgument("condition position out of range".into()));
        }
        let inner_dims: Vec<usize> = inner_positions.iter().map(|&p| dims[p]).collect();
        if inner_dims != inner.dims {
            return Err(Error::DimensionMismatch {
                expected: inner_dims.iter().product(),
                got: inner.dims.iter().product(),
            });
        }
        Ok(Self {
            dims,
            kind: OperatorKind::Controlled(Controlled {
                condition,
                inner_span: span(&inner_positions),
                inner_positions,
                inner: Box::new(inner),
            }),
            sector_blocks: None,
        })
    }

    pub(crate) fn with_sector_blocks(mut self, blocks: BTreeMap<u32, CMatrix>) -> Self {
        self.sector_blocks = Some(blocks);
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dimension(&self) -> Option<usize> {
        subset_dimension(&self.dims)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Per-sector blocks, when the operator was assembled from them.
    pub fn sector_blocks(&self) -> Option<&BTreeMap<u32, CMatrix>> {
        self.sector_blocks.as_ref()
    }

    /// `U|sub⟩` expanded in the subset basis.
    pub fn act(&self, sub: &[u8]) -> Action {
        match &self.kind {
            OperatorKind::Dense(m) => {
                let col = subset_index(&self.dims, sub);
                let terms = (0..m.rows())
                    .filter(|&r| m[(r, col)] != ZERO)
                    .map(|r| (subset_config(&self.dims, r), m[(r, col)]))
                    .collect();
                Action::Map(terms)
            }
            OperatorKind::Sparse(cols) => match cols.get(sub) {
                Some(rows) => Action::Map(rows.clone()),
                None => Action::Identity,
            },
            OperatorKind::Controlled(c) => {
                if !c.condition.holds(sub) {
                    return Action::Identity;
                }
                let selected = c.inner_selection();
                let inner_sub = selected.gather(sub);
                match c.inner.act(&inner_sub) {
                    Action::Identity => Action::Identity,
                    Action::Map(terms) => Action::Map(
                        terms
                            .into_iter()
                            .map(|(row, coeff)| {
                                let mut full = sub.to_vec();
                                selected.scatter(&mut full, &row);
                                (full, coeff)
                            })
                            .collect(),
                    ),
                }
            }
        }
    }

    /// `max |(U†U − I)_ij|`, computed without materializing sparse forms.
    pub fn unitarity_deviation(&self) -> f64 {
        match &self.kind {
            OperatorKind::Dense(m) => m.unitarity_deviation(),
            OperatorKind::Sparse(cols) => sparse_unitarity_deviation(cols),
            OperatorKind::Controlled(c) => c.inner.unitarity_deviation(),
        }
    }

    /// Dense matrix over the subset basis.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let d = self
            .dimension()
            .filter(|&d| d <= MAX_DENSE_DIM)
            .ok_or(Error::TooLarge(self.dimension().unwrap_or(usize::MAX)))?;
        if let OperatorKind::Dense(m) = &self.kind {
            return Ok(m.clone());
        }
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let sub = subset_config(&self.dims, col);
            match self.act(&sub) {
                Action::Identity => m[(col, col)] = ONE,
                Action::Map(terms) => {
                    for (row, coeff) in terms {
                        m[(subset_index(&self.dims, &row), col)] += coeff;
                    }
                }
            }
        }
        Ok(m)
    }

    /// `self · other` (apply `other` first), as a dense operator.
    pub fn compose(&self, other: &LocalOperator) -> Result<LocalOperator> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dimension().unwrap_or(0),
                got: other.dimension().unwrap_or(0),
            });
        }
        LocalOperator::dense(self.dims.clone(), self.to_dense()?.mul(&other.to_dense()?))
    }

    pub fn adjoint(&self) -> Result<LocalOperator> {
        LocalOperator::dense(self.dims.clone(), self.to_dense()?.adjoint())
    }
}

fn sparse_unitarity_deviation(cols: &SparseColumns) -> f64 {
    // Rows must stay inside the listed set, otherwise they collide with the
    // implicit identity on unlisted configurations.
    let mut by_row: BTreeMap<&Vec<u8>, Vec<(&Vec<u8>, C64)>> = BTreeMap::new();
    for (col, rows) in cols {
        for (row, v) in rows {
            if !cols.contains_key(row) {
                return f64::INFINITY;
            }
            by_row.entry(row).or_default().push((col, *v));
        }
    }
    let mut gram: BTreeMap<(&Vec<u8>, &Vec<u8>), C64> = BTreeMap::new();
    for entries in by_row.values() {
        for (a, va) in entries {
            for (b, vb) in entries {
                *gram.entry((*a, *b)).or_insert(ZERO) += va.conj() * vb;
            }
        }
    }
    let mut dev: f64 = 0.0;
    for col in cols.keys() {
        let diag = gram.get(&(col, col)).copied().unwrap_or(ZERO);
        dev = dev.max((diag - ONE).norm());
    }
    for ((a, b), v) in &gram {
        if a != b {
            dev = dev.max(v.norm());
        }
    }
    dev
}

/// Pauli X on one two-level mode.
pub fn pauli_x() -> LocalOperator {
    let m = CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).expect("2x2");
    LocalOperator::dense(vec![2], m).expect("2x2 on one qubit")
}

/// CNOT on two two-level modes, first target is the control.
pub fn cnot() -> LocalOperator {
    LocalOperator::controlled(vec![2, 2], Condition::occupation(0, 1), vec![1], pauli_x())
        .expect("valid control layout")
}

/// Exchange of two equal-dimension modes.
pub fn swap(dim: usize) -> LocalOperator {
    let m = CMatrix::from_fn(dim * dim, dim * dim, |r, c| {
        let (a, b) = (c / dim, c % dim);
        if r == b * dim + a {
            ONE
        } else {
            ZERO
        }
    });
    LocalOperator::dense(vec![dim, dim], m).expect("square swap")
}
