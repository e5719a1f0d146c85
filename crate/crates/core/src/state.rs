//! Occupation-basis configurations and sparse state vectors.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::mode::{ModeId, ModeSpec, Register};
use crate::operator::{Action, LocalOperator};

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_FLOOR: f64 = 1e-15;
/// Norm drift tolerated before a state is renormalized.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Unitarity tolerance for operators handed to [`SparseState::apply_local`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Occupation numbers `(q_x)`, one per register position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisConfig(Box<[u8]>);

impl BasisConfig {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self(occupations.into_boxed_slice())
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(alloc::vec![0; len])
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    /// Occupations at `positions`, in that order.
    pub fn restrict(&self, positions: &[usize]) -> Vec<u8> {
        Positions::new(positions).gather(&self.0)
    }

    /// Copy with `values[i]` written at `positions[i]`.
    pub fn with_replaced(&self, positions: &[usize], values: &[u8]) -> Self {
        let mut occ = self.0.clone();
        Positions::new(positions).scatter(&mut occ, values);
        Self(occ)
    }

    /// Copy with `tail` appended.
    pub fn extended(&self, tail: &[u8]) -> Self {
        let mut occ = self.0.to_vec();
        occ.extend_from_slice(tail);
        Self::new(occ)
    }
}

impl Deref for BasisConfig {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl Borrow<[u8]> for BasisConfig {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for BasisConfig {
    fn from(v: Vec<u8>) -> Self {
        Self::new(v)
    }
}

/// Checks arity and occupancy caps of `occupations` against `register`.
/// `positions` as a range when they are ascending and consecutive.
pub(crate) fn span(positions: &[usize]) -> Option<core::ops::Range<usize>> {
    let first = *positions.first()?;
    positions
        .iter()
        .enumerate()
        .all(|(i, &p)| p == first + i)
        .then(|| first..first + positions.len())
}

/// Sum of a run of occupations. Chunks of 256 bytes cannot overflow a
/// `u16`, which lets the inner loop vectorize.
pub(crate) fn occupation_sum(occ: &[u8]) -> u32 {
    occ.chunks(256)
        .map(|chunk| chunk.iter().fold(0u16, |acc, &q| acc.wrapping_add(q as u16)) as u32)
        .sum()
}

/// A list of positions, classified once so that per-configuration gathers,
/// scatters and charge sums over consecutive runs become slice operations.
#[derive(Clone, Debug)]
pub(crate) enum Positions<'a> {
    Span(core::ops::Range<usize>),
    List(&'a [usize]),
}

impl<'a> Positions<'a> {
    pub(crate) fn new(positions: &'a [usize]) -> Self {
        match span(positions) {
            Some(r) => Positions::Span(r),
            None => Positions::List(positions),
        }
    }

    pub(crate) fn gather(&self, occ: &[u8]) -> Vec<u8> {
        match self {
            Positions::Span(r) => occ[r.clone()].to_vec(),
            Positions::List(ps) => ps.iter().map(|&p| occ[p]).collect(),
        }
    }

    pub(crate) fn scatter(&self, occ: &mut [u8], values: &[u8]) {
        match self {
            Positions::Span(r) => occ[r.clone()].copy_from_slice(values),
            Positions::List(ps) => {
                for (&p, &v) in ps.iter().zip(values) {
                    occ[p] = v;
                }
            }
        }
    }

    /// Sum of occupations at these positions.
    pub(crate) fn charge(&self, occ: &[u8]) -> u32 {
        match self {
            Positions::Span(r) => occupation_sum(&occ[r.clone()]),
            Positions::List(ps) => ps.iter().map(|&p| occ[p] as u32).sum(),
        }
    }
}

pub fn validate_config(register: &Register, occupations: &[u8]) -> Result<()> {
    if occupations.len() != register.len() {
        return Err(Error::ConfigArity {
            expected: register.len(),
            got: occupations.len(),
        });
    }
    let caps = register.caps();
    let over = occupations.iter().zip(caps).fold(false, |bad, (&q, &c)| bad | (q > c));
    if !over {
        return Ok(());
    }
    for (spec, &q) in register.modes().iter().zip(occupations) {
        if q > spec.q_max {
            return Err(Error::CapViolation {
                id: spec.id.clone(),
                value: q,
                cap: spec.q_max,
            });
        }
    }
    Ok(())
}

pub type Amplitudes = BTreeMap<BasisConfig, C64>;

fn accumulate(map: &mut Amplitudes, key: BasisConfig, value: C64) {
    *map.entry(key).or_insert(ZERO) += value;
}

fn prune(map: &mut Amplitudes, floor: f64) {
    map.retain(|_, a| a.norm() >= floor);
}

fn norm_sqr(map: &Amplitudes) -> f64 {
    map.values().map(|a| a.norm_sqr()).sum()
}

/// Linear action of `op ⊗ I` on raw amplitudes; `positions` are the
/// register positions of the operator's targets. No normalization.
pub fn apply_to_amplitudes(
    amplitudes: &Amplitudes,
    op: &LocalOperator,
    positions: &[usize],
    floor: f64,
) -> Amplitudes {
    let selected = Positions::new(positions);
    let mut out = Amplitudes::new();
    for (config, &amp) in amplitudes {
        let sub = selected.gather(config);
        match op.act(&sub) {
            Action::Identity => accumulate(&mut out, config.clone(), amp),
            Action::Map(terms) => {
                for (row, coeff) in terms {
                    let mut occ = config.0.clone();
                    selected.scatter(&mut occ, &row);
                    accumulate(&mut out, BasisConfig(occ), amp * coeff);
                }
            }
        }
    }
    prune(&mut out, floor);
    out
}

/// Normalized pure state stored as a sparse map from basis configurations
/// to amplitudes. Zero amplitudes are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    register: Arc<Register>,
    amplitudes: Amplitudes,
}

impl SparseState {
    /// The basis state `|config⟩`.
    pub fn basis(register: Arc<Register>, occupations: Vec<u8>) -> Result<Self> {
        validate_config(&register, &occupations)?;
        let mut amplitudes = Amplitudes::new();
        amplitudes.insert(BasisConfig::new(occupations), ONE);
        Ok(Self {
            register,
            amplitudes,
        })
    }

    /// All modes empty.
    pub fn vacuum(register: Arc<Register>) -> Self {
        let n = register.len();
        Self::basis(register, alloc::vec![0; n]).expect("vacuum respects every cap")
    }

    /// Builds a state from (config, amplitude) pairs, summing repeated
    /// configs, pruning, and normalizing.
    pub fn from_amplitudes(
        register: Arc<Register>,
        terms: impl IntoIterator<Item = (Vec<u8>, C64)>,
    ) -> Result<Self> {
        let mut amplitudes = Amplitudes::new();
        for (occ, amp) in terms {
            validate_config(&register, &occ)?;
            accumulate(&mut amplitudes, BasisConfig::new(occ), amp);
        }
        Self::normalized(register, amplitudes).map(|(s, _)| s)
    }

    /// Prunes and rescales to unit norm; returns the scale factor applied.
    pub(crate) fn normalized(register: Arc<Register>, mut amplitudes: Amplitudes) -> Result<(Self, f64)> {
        prune(&mut amplitudes, PRUNE_FLOOR);
        let n2 = norm_sqr(&amplitudes);
        if n2 <= 1e-24 {
            return Err(Error::ZeroNorm);
        }
        let factor = 1.0 / libm::sqrt(n2);
        for a in amplitudes.values_mut() {
            *a *= factor;
        }
        Ok((
            Self {
                register,
                amplitudes,
            },
            factor,
        ))
    }

    /// Wraps amplitudes known to be (nearly) normalized; rescales only if
    /// the norm drifted by more than [`NORM_TOLERANCE`].
    pub(crate) fn from_trusted(register: Arc<Register>, amplitudes: Amplitudes) -> Result<Self> {
        let n2 = norm_sqr(&amplitudes);
        if (libm::sqrt(n2) - 1.0).abs() > NORM_TOLERANCE {
            return Self::normalized(register, amplitudes).map(|(s, _)| s);
        }
        Ok(Self {
            register,
            amplitudes,
        })
    }

    pub fn register(&self) -> &Arc<Register> {
        &self.register
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[u8]) -> C64 {
        self.amplitudes
            .get(occupations)
            .copied()
            .unwrap_or(ZERO)
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    fn same_register(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.register, &other.register) || self.register == other.register
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        if !self.same_register(other) {
            return Err(Error::RegisterMismatch);
        }
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = ZERO;
        for (config, a) in &small.amplitudes {
            if let Some(b) = large.amplitudes.get(config) {
                acc += a.conj() * b;
            }
        }
        Ok(if flip { acc.conj() } else { acc })
    }

    /// Squared overlap `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        self.inner_product(other).map(|z| z.norm_sqr())
    }

    /// Product state on the concatenated register `self ++ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let register = Arc::new(self.register.concat(&other.register)?);
        let mut amplitudes = Amplitudes::new();
        for (a_cfg, a) in &self.amplitudes {
            for (b_cfg, b) in &other.amplitudes {
                accumulate(&mut amplitudes, a_cfg.extended(b_cfg), a * b);
            }
        }
        Self::from_trusted(register, amplitudes)
    }

    /// Same amplitudes on a register with identical layout (owners may differ).
    pub fn with_register(&self, register: Arc<Register>) -> Result<Self> {
        if !self.register.same_layout(&register) {
            return Err(Error::RegisterMismatch);
        }
        Ok(Self {
            register,
            amplitudes: self.amplitudes.clone(),
        })
    }

    /// Appends modes in the fixed occupations `tail`.
    pub fn extended(&self, specs: Vec<ModeSpec>, tail: &[u8]) -> Result<Self> {
        if specs.len() != tail.len() {
            return Err(Error::ConfigArity {
                expected: specs.len(),
                got: tail.len(),
            });
        }
        let register = Arc::new(self.register.extended(specs)?);
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(c, a)| (c.extended(tail), *a))
            .collect::<Amplitudes>();
        if let Some(c) = amplitudes.keys().next() {
            validate_config(&register, c)?;
        }
        Ok(Self {
            register,
            amplitudes,
        })
    }

    /// Unnormalized projection onto configs satisfying `keep`.
    pub(crate) fn filtered(&self, mut keep: impl FnMut(&BasisConfig) -> bool) -> Amplitudes {
        self.amplitudes
            .iter()
            .filter(|(c, _)| keep(c))
            .map(|(c, a)| (c.clone(), *a))
            .collect()
    }

    /// Applies `op ⊗ I` with `op` acting on `target_ids` (in that order).
    pub fn apply_local(&self, op: &LocalOperator, target_ids: &[ModeId]) -> Result<Self> {
        self.apply_local_with_floor(op, target_ids, PRUNE_FLOOR)
    }

    /// [`apply_local`](Self::apply_local) with a custom pruning floor.
    pub fn apply_local_with_floor(
        &self,
        op: &LocalOperator,
        target_ids: &[ModeId],
        floor: f64,
    ) -> Result<Self> {
        let positions = self.target_positions(op, target_ids)?;
        let dev = op.unitarity_deviation();
        if dev > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(dev));
        }
        let out = apply_to_amplitudes(&self.amplitudes, op, &positions, floor);
        Self::from_trusted(self.register.clone(), out)
    }

    /// Register positions of `target_ids`, after checking the operator's
    /// per-target dimensions against the modes' caps.
    pub(crate) fn target_positions(&self, op: &LocalOperator, target_ids: &[ModeId]) -> Result<Vec<usize>> {
        target_positions(&self.register, op, target_ids)
    }
}

pub(crate) fn target_positions(
    register: &Register,
    op: &LocalOperator,
    target_ids: &[ModeId],
) -> Result<Vec<usize>> {
    if target_ids.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let positions = register.positions(target_ids)?;
    let expected: Vec<usize> = positions.iter().map(|&p| register.mode(p).dim()).collect();
    if expected.as_slice() != op.dims() {
        return Err(Error::DimensionMismatch {
            expected: expected.iter().product(),
            got: op.dims().iter().product(),
        });
    }
    Ok(positions)
}

/// Linear combination `Σ c_i |ψ_i⟩`, renormalized. Returns the state and
/// the factor `1/‖Σ c_i ψ_i‖` that was applied.
pub fn superpose(terms: &[(C64, &SparseState)]) -> Result<(SparseState, f64)> {
    let first = terms.first().ok_or(Error::ZeroNorm)?;
    let register = first.1.register.clone();
    let mut amplitudes = Amplitudes::new();
    for (c, state) in terms {
        if !first.1.same_register(state) {
            return Err(Error::RegisterMismatch);
        }
        for (config, a) in &state.amplitudes {
            accumulate(&mut amplitudes, config.clone(), c * a);
        }
    }
    SparseState::normalized(register, amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::mode::Party;
    use alloc::vec;

    fn reg() -> Arc<Register> {
        Arc::new(
            Register::new(vec![
                ModeSpec::fermion("x", Party::Alice).restricted(),
                ModeSpec::boson("z", 1, Party::Alice).free(),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn basis_states_and_caps() {
        let s = SparseState::basis(reg(), vec![1, 0]).unwrap();
        assert_eq!(s.amplitude(&[1, 0]), ONE);
        assert_eq!(s.len(), 1);
        assert_eq!(
            SparseState::basis(reg(), vec![2, 0]),
            Err(Error::CapViolation {
                id: "x".into(),
                value: 2,
                cap: 1
            })
        );
        assert!(matches!(
            SparseState::basis(reg(), vec![0]),
            Err(Error::ConfigArity { .. })
        ));
    }

    #[test]
    fn superpose_reports_renormalization() {
        let r = reg();
        let a = SparseState::basis(r.clone(), vec![0, 0]).unwrap();
        let b = SparseState::basis(r, vec![0, 1]).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (s, f) = superpose(&[(C64::new(h, 0.0), &a), (C64::new(h, 0.0), &b)]).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
        let (t, g) = superpose(&[(ONE, &a), (ONE, &b)]).unwrap();
        assert!((g - h).abs() < 1e-15);
        assert!(s.amplitudes().iter().zip(t.amplitudes()).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).norm() < 1e-15));
        assert_eq!(superpose(&[(ONE, &a), (-ONE, &a)]), Err(Error::ZeroNorm));
    }

    #[test]
    fn superpose_rejects_mixed_registers() {
        let a = SparseState::basis(reg(), vec![0, 0]).unwrap();
        let other = Arc::new(Register::new(vec![ModeSpec::fermion("q", Party::Bob)]).unwrap());
        let b = SparseState::basis(other, vec![0]).unwrap();
        assert_eq!(superpose(&[(ONE, &a), (ONE, &b)]), Err(Error::RegisterMismatch));
        assert_eq!(a.inner_product(&b), Err(Error::RegisterMismatch));
    }

    #[test]
    fn inner_products() {
        let r = reg();
        let a = SparseState::basis(r.clone(), vec![0, 0]).unwrap();
        let b = SparseState::basis(r, vec![1, 0]).unwrap();
        assert_eq!(a.inner_product(&a).unwrap(), ONE);
        assert_eq!(a.inner_product(&b).unwrap(), ZERO);
    }

    #[test]
    fn pauli_x_on_free_mode() {
        let s = SparseState::basis(reg(), vec![1, 0]).unwrap();
        let x = CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let op = LocalOperator::dense(vec![2], x).unwrap();
        let out = s.apply_local(&op, &["z".into()]).unwrap();
        assert_eq!(out.amplitude(&[1, 1]), ONE);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn apply_rejects_bad_operators() {
        let s = SparseState::vacuum(reg());
        let big = LocalOperator::identity(vec![2, 2]);
        assert!(matches!(
            s.apply_local(&big, &["z".into()]),
            Err(Error::DimensionMismatch { .. })
        ));
        let skew = CMatrix::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]).unwrap();
        let op = LocalOperator::dense(vec![2], skew).unwrap();
        assert!(matches!(s.apply_local(&op, &["z".into()]), Err(Error::NotUnitary(_))));
        assert_eq!(
            s.apply_local(&LocalOperator::identity(vec![2]), &[]),
            Err(Error::EmptyTargets)
        );
    }

    #[test]
    fn tensor_concatenates_registers() {
        let a = SparseState::basis(reg(), vec![1, 0]).unwrap();
        let r2 = Arc::new(Register::new(vec![ModeSpec::fermion("e", Party::Bob)]).unwrap());
        let b = SparseState::basis(r2, vec![1]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.register().len(), 3);
        assert_eq!(ab.amplitude(&[1, 0, 1]), ONE);
        assert!(matches!(a.tensor(&a), Err(Error::DuplicateMode(_))));
    }
}
