//! Alice's cheating strategy against fixed-charge quantum bit commitment.
//!
//! Both commitments `Ψ(0)`, `Ψ(1)` carry the same total restricted charge
//! `Q_R`. Split by Alice's share `k = Q^A_R`, each is a superposition
//! `Σ_k √p_k(w) ψ_k(w)`. If the protocol conceals the bit then `p_k(0) = p_k(1)`
//! and Bob's reduced states agree sector by sector, so Alice can map every
//! `ψ_k(0)` onto `ψ_k(1)` with a unitary that acts inside one charge sector
//! of her modes, and fix the relative phases between sectors for free.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::density::partial_trace;
use crate::error::{ket, Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE};
use crate::mode::{ModeId, ModeSpec, Party, Register};
use crate::operator::LocalOperator;
use crate::state::{Amplitudes, SparseState};
use crate::superselection::{
    apply_allowed, charge_at, restricted_positions, restricted_positions_of, sector_conditioned, sector_decompose_over,
    sector_slices, Charge,
};

/// Tolerance for the concealing checks.
pub const CONCEALING_TOLERANCE: f64 = 1e-10;
/// Sector weights at or below this count as absent.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CommitmentInstance {
    total_charge: Charge,
    psi: [SparseState; 2],
}

impl CommitmentInstance {
    /// Checks that both commitments live on the same register, that both
    /// parties own modes, and that every configuration carries charge
    /// `total_charge`.
    pub fn new(total_charge: Charge, psi0: SparseState, psi1: SparseState) -> Result<Self> {
        if **psi0.register() != **psi1.register() {
            return Err(Error::RegisterMismatch);
        }
        let register = psi0.register();
        for party in [Party::Alice, Party::Bob] {
            if register.owned_by(party).is_empty() {
                return Err(Error::InvalidArgument(format!("{party} owns no modes")));
            }
        }
        let restricted = restricted_positions(register);
        for psi in [&psi0, &psi1] {
            for cfg in psi.amplitudes().keys() {
                let charge = charge_at(cfg, &restricted);
                if charge != total_charge {
                    return Err(Error::ChargeViolation {
                        config: ket(cfg),
                        charge,
                        expected: total_charge,
                    });
                }
            }
        }
        Ok(Self {
            total_charge,
            psi: [psi0, psi1],
        })
    }

    pub fn register(&self) -> &Arc<Register> {
        self.psi[0].register()
    }

    pub fn total_charge(&self) -> Charge {
        self.total_charge
    }

    /// `Ψ(w)`; `w` must be 0 or 1.
    pub fn psi(&self, w: usize) -> &SparseState {
        &self.psi[w]
    }

    pub fn alice_ids(&self) -> Vec<ModeId> {
        self.register().owned_by(Party::Alice)
    }

    pub fn bob_ids(&self) -> Vec<ModeId> {
        self.register().owned_by(Party::Bob)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorRecord {
    /// Alice's share of the charge.
    pub k: Charge,
    pub p0: f64,
    pub p1: f64,
    /// Trace distance of Bob's conditional states; `None` when only one
    /// commitment has weight in this sector.
    pub tdist: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcealingReport {
    pub sectors: Vec<SectorRecord>,
    pub weight_match: bool,
    pub state_match: bool,
}

impl ConcealingReport {
    pub fn concealing(&self) -> bool {
        self.weight_match && self.state_match
    }
}

/// Compares sector weights and Bob's conditional states of the two
/// commitments.
pub fn concealing_report(instance: &CommitmentInstance) -> Result<ConcealingReport> {
    let alice = instance.alice_ids();
    let bob = instance.bob_ids();
    let d0 = sector_decompose_over(instance.psi(0), &alice)?;
    let d1 = sector_decompose_over(instance.psi(1), &alice)?;
    let charges: alloc::collections::BTreeSet<Charge> = d0.charges().chain(d1.charges()).collect();
    let mut sectors = Vec::new();
    let (mut weight_match, mut state_match) = (true, true);
    for k in charges {
        let (p0, p1) = (d0.weight(k), d1.weight(k));
        weight_match &= (p0 - p1).abs() <= CONCEALING_TOLERANCE;
        let tdist = match (d0.get(k), d1.get(k)) {
            (Some(s0), Some(s1)) if p0 > WEIGHT_FLOOR && p1 > WEIGHT_FLOOR => {
                let rho0 = partial_trace(&s0.component, &bob)?;
                let rho1 = partial_trace(&s1.component, &bob)?;
                let t = rho0.trace_distance(&rho1)?;
                state_match &= t <= CONCEALING_TOLERANCE;
                Some(t)
            }
            _ => None,
        };
        sectors.push(SectorRecord { k, p0, p1, tdist });
    }
    Ok(ConcealingReport {
        sectors,
        weight_match,
        state_match,
    })
}

/// Fidelity-optimal unitary on one charge slice of Alice's modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorUnitary {
    /// Acts on the slice configurations returned by
    /// [`sector_slices`] for this charge, in that order.
    pub matrix: CMatrix,
    /// `⟨ψ_k(1)| U ψ_k(0)⟩`.
    pub overlap: C64,
    /// `|overlap|²`; equals the Uhlmann fidelity of Bob's conditional states.
    pub fidelity: f64,
    /// Whether `U ψ_k(0) = ψ_k(1)` holds within 1e−10.
    pub exact: bool,
}

/// Amplitude matrix of `psi` with rows indexed by `slice` (Alice configs)
/// and columns by `bob_basis`.
fn coefficient_matrix(
    psi: &SparseState,
    alice: &[usize],
    bob: &[usize],
    slice: &[Vec<u8>],
    bob_basis: &[Vec<u8>],
) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(slice.len(), bob_basis.len());
    for (cfg, a) in psi.amplitudes() {
        let row = slice
            .binary_search(&cfg.restrict(alice))
            .map_err(|_| Error::InvalidArgument(format!("configuration {} lies outside the sector", ket(cfg))))?;
        let col = bob_basis
            .binary_search(&cfg.restrict(bob))
            .expect("Bob basis collects every configuration");
        m[(row, col)] = *a;
    }
    Ok(m)
}

/// Unitary on Alice's charge-`k` slice maximizing `|⟨ψ1|(U ⊗ I)ψ0⟩|`.
///
/// With `M_w` the amplitude matrices (Alice slice × Bob configurations) the
/// overlap is `tr(U M0 M1†)`, maximized by the polar factor of `M0 M1†`.
pub fn sector_attack_unitary(psi0: &SparseState, psi1: &SparseState, alice_ids: &[ModeId], k: Charge) -> Result<SectorUnitary> {
    let register = psi0.register();
    if **register != **psi1.register() {
        return Err(Error::RegisterMismatch);
    }
    let alice = register.positions(alice_ids)?;
    let bob: Vec<usize> = (0..register.len()).filter(|p| !alice.contains(p)).collect();
    let slices = sector_slices(alice_ids, register)?;
    let slice = slices.get(&k).ok_or_else(|| Error::InvalidArgument(format!("no Alice configuration has charge {k}")))?;
    let bob_basis: Vec<Vec<u8>> = psi0
        .amplitudes()
        .keys()
        .chain(psi1.amplitudes().keys())
        .map(|c| c.restrict(&bob))
        .collect::<alloc::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let m0 = coefficient_matrix(psi0, &alice, &bob, slice, &bob_basis)?;
    let m1 = coefficient_matrix(psi1, &alice, &bob, slice, &bob_basis)?;
    let u = linalg::maximizing_unitary(&m0.mul(&m1.adjoint()));
    let mapped = u.mul(&m0);
    let overlap = (0..m1.rows())
        .flat_map(|r| (0..m1.cols()).map(move |c| (r, c)))
        .map(|(r, c)| m1[(r, c)].conj() * mapped[(r, c)])
        .sum::<C64>();
    Ok(SectorUnitary {
        exact: mapped.max_abs_diff(&m1) <= CONCEALING_TOLERANCE,
        fidelity: overlap.norm_sqr().min(1.0),
        overlap,
        matrix: u,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorAttack {
    pub k: Charge,
    pub fidelity: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackReport {
    /// Block-diagonal operator on [`alice_ids`](Self::alice_ids).
    pub operator: LocalOperator,
    pub alice_ids: Vec<ModeId>,
    /// `|⟨Ψ(1)|(U^A ⊗ I)Ψ(0)⟩|²`.
    pub overall_fidelity: f64,
    pub sectors: Vec<SectorAttack>,
    /// `(U^A ⊗ I)Ψ(0)`.
    pub attacked: SparseState,
}

fn unit_phase(z: C64) -> C64 {
    if z.norm() > 0.0 {
        z / z.norm()
    } else {
        ONE
    }
}

/// Builds Alice's sector-wise unitary, aligns the sector phases, applies it
/// to `Ψ(0)`, and reports how close the result is to `Ψ(1)`.
pub fn assemble_attack(instance: &CommitmentInstance) -> Result<AttackReport> {
    let alice = instance.alice_ids();
    let register = instance.register();
    let d0 = sector_decompose_over(instance.psi(0), &alice)?;
    let d1 = sector_decompose_over(instance.psi(1), &alice)?;
    let charges: alloc::collections::BTreeSet<Charge> = d0.charges().chain(d1.charges()).collect();
    let slices = sector_slices(&alice, register)?;
    let mut blocks = BTreeMap::new();
    let mut sectors = Vec::new();
    for k in charges {
        match (d0.get(k), d1.get(k)) {
            (Some(s0), Some(s1)) if s0.weight > WEIGHT_FLOOR && s1.weight > WEIGHT_FLOOR => {
                let su = sector_attack_unitary(&s0.component, &s1.component, &alice, k)?;
                // Rotate so that the attacked sector coefficient has the
                // phase of Ψ(1)'s coefficient.
                let align = unit_phase(s1.phase) * unit_phase(s0.phase).conj() * unit_phase(su.overlap).conj();
                blocks.insert(k, su.matrix.scale(align));
                sectors.push(SectorAttack {
                    k,
                    fidelity: su.fidelity,
                    exact: su.exact,
                });
            }
            _ => {
                blocks.insert(k, CMatrix::identity(slices[&k].len()));
                sectors.push(SectorAttack {
                    k,
                    fidelity: 0.0,
                    exact: false,
                });
            }
        }
    }
    let operator = sector_conditioned(&blocks, &alice, register)?;
    let attacked = apply_allowed(instance.psi(0), &operator, &alice)?;
    let overall_fidelity = instance.psi(1).fidelity(&attacked)?.min(1.0);
    Ok(AttackReport {
        operator,
        alice_ids: alice,
        overall_fidelity,
        sectors,
        attacked,
    })
}

/// Distribution of `k = Q^A_R` as Bob infers it from his reduced state:
/// his own charge `j` means `k = Q_R − j`.
pub fn bob_sector_weights(instance: &CommitmentInstance, w: usize) -> Result<BTreeMap<Charge, f64>> {
    let bob = instance.bob_ids();
    let rho = partial_trace(instance.psi(w), &bob)?;
    let register = instance.register();
    let restricted: Vec<usize> = restricted_positions_of(register, &bob)?
        .into_iter()
        .map(|p| bob.iter().position(|id| *id == register.mode(p).id).expect("subset of bob"))
        .collect();
    let mut out = BTreeMap::new();
    for (i, cfg) in rho.basis().iter().enumerate() {
        let j = charge_at(cfg, &restricted);
        *out.entry(instance.total_charge() - j).or_insert(0.0) += rho.matrix()[(i, i)].re;
    }
    Ok(out)
}

/// Coherent purification of a mixture of fixed-`Q^{party}_R` branches.
///
/// Branch `k` (probability `p_k`, state with `party`'s restricted charge
/// exactly `k`) is tensored with `k_max − k` occupied fermionic ancillas out
/// of `k_max − k_min` fresh restricted ones owned by `party`; the branches
/// are summed with amplitudes `√p_k`. Every configuration of the result has
/// `party`'s charge `k_max`.
pub fn purify_to_fixed_charge(party: Party, branches: &BTreeMap<Charge, (f64, SparseState)>) -> Result<SparseState> {
    let (&k_min, (_, first)) = branches
        .first_key_value()
        .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
    let k_max = *branches.keys().next_back().expect("nonempty");
    let register = first.register().clone();
    let total: f64 = branches.values().map(|(p, _)| *p).sum();
    if branches.values().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > CONCEALING_TOLERANCE {
        return Err(Error::InvalidArgument(format!("branch probabilities sum to {total}")));
    }
    let owned = register.owned_by(party);
    let party_restricted = restricted_positions_of(&register, &owned)?;
    for (&k, (_, state)) in branches {
        if **state.register() != *register {
            return Err(Error::RegisterMismatch);
        }
        for cfg in state.amplitudes().keys() {
            let charge = charge_at(cfg, &party_restricted);
            if charge != k {
                return Err(Error::ChargeViolation {
                    config: ket(cfg),
                    charge,
                    expected: k,
                });
            }
        }
    }
    let count = (k_max - k_min) as usize;
    let ids = register.fresh_ids("purifier", count);
    let extended = Arc::new(register.extended(ids.iter().map(|id| ModeSpec::fermion(id.clone(), party).restricted()))?);
    let mut amps = Amplitudes::new();
    for (&k, (p, state)) in branches {
        let tail = crate::catalysis::staircase_config((k_max - k) as usize, count)?;
        let scale = libm::sqrt(*p);
        for (cfg, a) in state.amplitudes() {
            amps.insert(cfg.extended(&tail), a * scale);
        }
    }
    SparseState::normalized(extended, amps).map(|(s, _)| s)
}

/// Checks [`AttackReport::operator`] leaves every sector weight of `Ψ(0)`
/// in place; returns the largest drift.
pub fn sector_weight_drift(instance: &CommitmentInstance, report: &AttackReport) -> Result<f64> {
    let d_before = sector_decompose_over(instance.psi(0), &report.alice_ids)?.weights();
    let d_after = sector_decompose_over(&report.attacked, &report.alice_ids)?.weights();
    Ok(d_before
        .keys()
        .chain(d_after.keys())
        .map(|k| (d_before.get(k).unwrap_or(&0.0) - d_after.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max))
}
