//! Catalytic swap of a restricted qubit with a free one.
//!
//! The catalyst lives on `n − 1` restricted ancillas `y⃗` in the uniform
//! superposition of staircase configurations `|j⟩ = |1…1 0…0⟩` (`j` ones).
//! Inside charge sectors `1 ≤ Q_R ≤ n − 1` of `(x, y⃗)` the procedure runs a
//! CNOT from `x` onto the free mode `z`, then, conditioned on `z`, the
//! exchange `S: |0, j⟩ ↔ |1, j − 1⟩`. Sectors `0` and `n` are untouched, which
//! is the only error source: the output has fidelity `(n − 1)/n` with the
//! ideal swapped state.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::density::partial_trace;
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::mode::{ModeId, ModeSpec, Party, Register};
use crate::operator::{pauli_x, Condition, LocalOperator};
use crate::state::{Amplitudes, BasisConfig, SparseState};
use crate::superselection::{apply_allowed, sector_weights, Charge};

/// Modes taking part in one catalytic swap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalysisPlan {
    pub n: usize,
    /// Restricted data mode.
    pub x: ModeId,
    /// Restricted catalyst ancillas, `n − 1` of them.
    pub ys: Vec<ModeId>,
    /// Free target mode.
    pub z: ModeId,
}

impl CatalysisPlan {
    /// Targets of the swap operators: `x`, then `y⃗`, then `z`.
    pub fn targets(&self) -> Vec<ModeId> {
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(self.x.clone());
        out.extend(self.ys.iter().cloned());
        out.push(self.z.clone());
        out
    }

    pub fn validate(&self, register: &Register) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        if self.n < 2 {
            return bad(format!("n = {} is below 2", self.n));
        }
        if self.ys.len() != self.n - 1 {
            return bad(format!("n = {} needs {} ancillas, got {}", self.n, self.n - 1, self.ys.len()));
        }
        // Also rejects unknown and repeated ids.
        register.positions(&self.targets())?;
        for id in core::iter::once(&self.x).chain(&self.ys) {
            if !register.spec(id)?.restricted {
                return bad(format!("mode {id} must be restricted"));
            }
        }
        if !register.spec(&self.z)?.free {
            return Err(Error::NotFree(self.z.clone()));
        }
        for id in self.targets() {
            if register.spec(&id)?.q_max != 1 {
                return bad(format!("mode {id} is not a qubit"));
            }
        }
        Ok(())
    }
}

/// Occupations of `count` ancillas holding the staircase `|j⟩`.
pub fn staircase_config(j: usize, count: usize) -> Result<Vec<u8>> {
    if j > count {
        return Err(Error::InvalidArgument(format!("staircase {j} exceeds {count} ancillas")));
    }
    let mut out = vec![0u8; count];
    out[..j].fill(1);
    Ok(out)
}

fn is_staircase(occ: &[u8]) -> bool {
    let ones = occ.iter().take_while(|&&q| q == 1).count();
    occ[ones..].iter().all(|&q| q == 0)
}

/// `(1/√n) Σ_{j=0}^{n−1} |j⟩` on `y_ids`, all other modes empty.
pub fn catalyst_state(n: usize, y_ids: &[ModeId], register: Arc<Register>) -> Result<SparseState> {
    if n < 2 || y_ids.len() != n - 1 {
        return Err(Error::ConfigArity {
            expected: n.saturating_sub(1),
            got: y_ids.len(),
        });
    }
    let positions = register.positions(y_ids)?;
    let zeros = BasisConfig::zeros(register.len());
    let amp = C64::new(1.0 / libm::sqrt(n as f64), 0.0);
    let terms = (0..n).map(|j| {
        let stair = staircase_config(j, n - 1).expect("j < n");
        (zeros.with_replaced(&positions, &stair).occupations().to_vec(), amp)
    });
    SparseState::from_amplitudes(register, terms)
}

/// `S` on `(x, y⃗)`: exchanges `|0, j⟩ ↔ |1, j − 1⟩` for `j = 1..n−1`.
pub fn conditional_swap_s(n: usize) -> Result<LocalOperator> {
    if n < 2 {
        return Err(Error::InvalidPlan(format!("n = {n} is below 2")));
    }
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = (1..n)
        .map(|j| {
            let mut a = vec![0u8];
            a.extend(staircase_config(j, n - 1).expect("j < n"));
            let mut b = vec![1u8];
            b.extend(staircase_config(j - 1, n - 1).expect("j < n"));
            (a, b)
        })
        .collect();
    LocalOperator::transpositions(vec![2; n], &pairs)
}

fn inner_sectors(n: usize) -> core::ops::Range<u32> {
    1..n as u32
}

/// CNOT from `x` onto `z` on `(x, y⃗, z)`, active only when the charge of
/// `(x, y⃗)` lies in `1..n−1`.
pub fn sector_cnot(n: usize) -> Result<LocalOperator> {
    let condition = Condition::occupation(0, 1).and_charge_in((0..n).collect(), inner_sectors(n));
    LocalOperator::controlled(vec![2; n + 1], condition, vec![n], pauli_x())
}

/// `S` on `(x, y⃗)` conditioned on `z = 1`, as an operator on `(x, y⃗, z)`.
pub fn z_conditioned_s(n: usize) -> Result<LocalOperator> {
    // S already fixes sectors 0 and n of (x, y⃗), so only z is read.
    LocalOperator::controlled(vec![2; n + 1], Condition::occupation(n, 1), (0..n).collect(), conditional_swap_s(n)?)
}

/// The two gates of the forward swap, both acting on [`CatalysisPlan::targets`].
pub fn swap_gates(n: usize) -> Result<[LocalOperator; 2]> {
    Ok([sector_cnot(n)?, z_conditioned_s(n)?])
}

/// Output of [`catalytic_swap`] with bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapRun {
    pub state: SparseState,
    /// Largest number of stored amplitudes seen along the way.
    pub peak_amplitudes: usize,
}

fn check_swap_input(state: &SparseState, plan: &CatalysisPlan) -> Result<()> {
    let register = state.register();
    plan.validate(register)?;
    let z = register.position(&plan.z)?;
    let ys = register.positions(&plan.ys)?;
    for cfg in state.amplitudes().keys() {
        if cfg[z] != 0 {
            return Err(Error::InvalidArgument(format!("mode {} must start empty", plan.z)));
        }
        if !is_staircase(&cfg.restrict(&ys)) {
            return Err(Error::InvalidArgument("ancillas are not in a staircase configuration".into()));
        }
    }
    Ok(())
}

/// Moves the qubit on `x` onto `z` using the catalyst on `y⃗`.
pub fn catalytic_swap(state: &SparseState, plan: &CatalysisPlan) -> Result<SwapRun> {
    check_swap_input(state, plan)?;
    let targets = plan.targets();
    let mut peak = state.len();
    let mut current = state.clone();
    for gate in swap_gates(plan.n)? {
        current = apply_allowed(&current, &gate, &targets)?;
        peak = peak.max(current.len());
    }
    Ok(SwapRun {
        state: current,
        peak_amplitudes: peak,
    })
}

/// Exact inverse of [`catalytic_swap`]: `S` conditioned on `z`, then the CNOT.
pub fn inverse_catalytic_swap(state: &SparseState, plan: &CatalysisPlan) -> Result<SparseState> {
    plan.validate(state.register())?;
    let targets = plan.targets();
    let [cnot, s] = swap_gates(plan.n)?;
    let mid = apply_allowed(state, &s, &targets)?;
    apply_allowed(&mid, &cnot, &targets)
}

/// Register `x, y1..y_{n−1}, z`, all owned by `owner`.
pub fn swap_register(n: usize, owner: Party) -> Result<(Register, CatalysisPlan)> {
    if n < 2 {
        return Err(Error::InvalidPlan(format!("n = {n} is below 2")));
    }
    let ys: Vec<ModeId> = (1..n).map(|i| ModeId::new(format!("y{i}"))).collect();
    let mut specs = vec![ModeSpec::fermion("x", owner).restricted()];
    specs.extend(ys.iter().map(|id| ModeSpec::fermion(id.clone(), owner).restricted()));
    specs.push(ModeSpec::boson("z", 1, owner).free());
    let plan = CatalysisPlan {
        n,
        x: "x".into(),
        ys,
        z: "z".into(),
    };
    Ok((Register::new(specs)?, plan))
}

/// `state ⊗ catalyst ⊗ |0⟩_z` on fresh ancillas and a fresh free qubit,
/// owned by the owner of `x`.
pub fn attach_catalyst(state: &SparseState, x: &ModeId, n: usize) -> Result<(SparseState, CatalysisPlan)> {
    if n < 2 {
        return Err(Error::InvalidPlan(format!("n = {n} is below 2")));
    }
    let base = state.register();
    let owner = base.spec(x)?.owner;
    let ys = base.fresh_ids("y", n - 1);
    let z = base.fresh_id("z");
    let mut specs: Vec<ModeSpec> = ys.iter().map(|id| ModeSpec::fermion(id.clone(), owner).restricted()).collect();
    specs.push(ModeSpec::boson(z.clone(), 1, owner).free());
    let register = Arc::new(base.extended(specs)?);
    let plan = CatalysisPlan {
        n,
        x: x.clone(),
        ys,
        z,
    };
    plan.validate(&register)?;

    let amp = 1.0 / libm::sqrt(n as f64);
    let mut amps = Amplitudes::new();
    for (cfg, a) in state.amplitudes() {
        for j in 0..n {
            let mut tail = staircase_config(j, n - 1)?;
            tail.push(0);
            amps.insert(cfg.extended(&tail), a * amp);
        }
    }
    Ok((SparseState::from_trusted(register, amps)?, plan))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapAnalysis {
    pub n: usize,
    /// `|⟨ideal|actual⟩|²`.
    pub fidelity: f64,
    /// `|⟨ideal|actual⟩|`.
    pub overlap: f64,
    pub qr_distribution: BTreeMap<Charge, f64>,
    pub ideal_distribution: BTreeMap<Charge, f64>,
    /// Total-variation distance between the two distributions.
    pub tv_distance: f64,
    pub peak_amplitudes: usize,
}

impl SwapAnalysis {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }

    /// Smallest and largest charge-sector probability of the actual output.
    pub fn probability_range(&self) -> (f64, f64) {
        self.qr_distribution
            .values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }
}

fn check_qubit(alpha: C64, beta: C64) -> Result<()> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(n2));
    }
    Ok(())
}

/// Swap input `(α|0⟩ + β|1⟩)_x ⊗ catalyst ⊗ |0⟩_z` on [`swap_register`].
pub fn swap_input(n: usize, alpha: C64, beta: C64) -> Result<(SparseState, CatalysisPlan)> {
    check_qubit(alpha, beta)?;
    let (register, plan) = swap_register(n, Party::Alice)?;
    let register = Arc::new(register);
    let c = 1.0 / libm::sqrt(n as f64);
    let mut amps = Amplitudes::new();
    for j in 0..n {
        for (x, amp) in [(0u8, alpha), (1u8, beta)] {
            if amp == ZERO {
                continue;
            }
            let mut cfg = vec![x];
            cfg.extend(staircase_config(j, n - 1)?);
            cfg.push(0);
            amps.insert(BasisConfig::new(cfg), amp * c);
        }
    }
    Ok((SparseState::from_trusted(register, amps)?, plan))
}

/// The target of the swap: `(1/√(n−1)) |0⟩_x ⊗ Σ_{j≥1} |j⟩ ⊗ (α|0⟩ + β|1⟩)_z`.
pub fn ideal_swapped_state(register: Arc<Register>, plan: &CatalysisPlan, alpha: C64, beta: C64) -> Result<SparseState> {
    check_qubit(alpha, beta)?;
    plan.validate(&register)?;
    let n = plan.n;
    let positions = register.positions(&plan.targets())?;
    let zeros = BasisConfig::zeros(register.len());
    let c = 1.0 / libm::sqrt((n - 1) as f64);
    let mut terms = Vec::new();
    for j in 1..n {
        for (z, amp) in [(0u8, alpha), (1u8, beta)] {
            let mut sub = vec![0u8];
            sub.extend(staircase_config(j, n - 1)?);
            sub.push(z);
            terms.push((zeros.with_replaced(&positions, &sub).occupations().to_vec(), amp * c));
        }
    }
    SparseState::from_amplitudes(register, terms)
}

/// Runs the swap on `(α, β)` and compares it with the ideal swapped state.
pub fn analyze_swap(n: usize, alpha: C64, beta: C64) -> Result<SwapAnalysis> {
    let (input, plan) = swap_input(n, alpha, beta)?;
    let run = catalytic_swap(&input, &plan)?;
    let ideal = ideal_swapped_state(run.state.register().clone(), &plan, alpha, beta)?;
    let overlap = ideal.inner_product(&run.state)?.norm();
    let qr_distribution = sector_weights(&run.state);
    let p = 1.0 / (n - 1) as f64;
    let ideal_distribution: BTreeMap<Charge, f64> = (1..n as Charge).map(|k| (k, p)).collect();
    let tv_distance = 0.5
        * qr_distribution
            .keys()
            .chain(ideal_distribution.keys())
            .collect::<alloc::collections::BTreeSet<_>>()
            .into_iter()
            .map(|k| (qr_distribution.get(k).unwrap_or(&0.0) - ideal_distribution.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>();
    Ok(SwapAnalysis {
        n,
        fidelity: overlap * overlap,
        overlap,
        qr_distribution,
        ideal_distribution,
        tv_distance,
        peak_amplitudes: run.peak_amplitudes,
    })
}

/// Applies `u` on `(x, E)` by swapping `x` onto `z`, running `u` on
/// `(z, E)`, and swapping back with the same catalyst.
pub fn lift_general_unitary(
    state: &SparseState,
    u: &LocalOperator,
    plan: &CatalysisPlan,
    e_ids: &[ModeId],
) -> Result<SparseState> {
    let plan_modes = plan.targets();
    if let Some(id) = e_ids.iter().find(|id| plan_modes.contains(id)) {
        return Err(Error::InvalidPlan(format!("mode {id} is both in E and in the swap")));
    }
    let mut u_targets = vec![plan.z.clone()];
    u_targets.extend(e_ids.iter().cloned());
    crate::state::target_positions(state.register(), u, &u_targets)?;
    let swapped = catalytic_swap(state, plan)?.state;
    let rotated = apply_allowed(&swapped, u, &u_targets)?;
    inverse_catalytic_swap(&rotated, plan)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftAnalysis {
    pub n: usize,
    /// Uhlmann fidelity on every mode outside the catalyst and `z`.
    pub system_fidelity: f64,
    /// `|⟨direct|lifted⟩|²` on the whole register.
    pub global_fidelity: f64,
}

impl LiftAnalysis {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.system_fidelity
    }
}

/// Compares [`lift_general_unitary`] on a fresh catalyst of size `n` with
/// applying `u` to `(x, E)` directly.
pub fn analyze_lift(
    state: &SparseState,
    u: &LocalOperator,
    x: &ModeId,
    e_ids: &[ModeId],
    n: usize,
) -> Result<LiftAnalysis> {
    let (input, plan) = attach_catalyst(state, x, n)?;
    let lifted = lift_general_unitary(&input, u, &plan, e_ids)?;
    let mut direct_targets = vec![x.clone()];
    direct_targets.extend(e_ids.iter().cloned());
    // The reference ignores superselection on purpose: it is the operation
    // the lift emulates.
    let direct = input.apply_local(u, &direct_targets)?;
    let catalyst_modes = plan.targets();
    let system: Vec<ModeId> = input
        .register()
        .ids()
        .filter(|id| *id == &plan.x || !catalyst_modes.contains(id))
        .cloned()
        .collect();
    let system_fidelity = partial_trace(&direct, &system)?.fidelity(&partial_trace(&lifted, &system)?)?;
    let global_fidelity = direct.fidelity(&lifted)?;
    Ok(LiftAnalysis {
        n,
        system_fidelity,
        global_fidelity,
    })
}

/// Largest `n` for which the post-selection state is built explicitly
/// (`2^{n−1}` amplitudes).
pub const MAX_POSTSELECT_N: usize = 21;

/// Catalyst preparation by projecting `⊗ (|0⟩ + |1⟩)/√2` over `n − 1`
/// ancillas onto the span of staircase configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalystPostselection {
    pub n: usize,
    /// Squared norm of the projection.
    pub success_probability: f64,
    /// Normalized post-selected state.
    pub catalyst: SparseState,
}

impl CatalystPostselection {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPlan(format!("n = {n} is below 2")));
        }
        if n > MAX_POSTSELECT_N {
            return Err(Error::TooLarge(1usize << (n - 1)));
        }
        let anc = Arc::new(Register::new(
            (1..n)
                .map(|i| ModeSpec::fermion(format!("y{i}"), Party::Alice).restricted())
                .collect(),
        )?);
        let m = n - 1;
        let amp = C64::new(libm::pow(0.5, m as f64 / 2.0), 0.0);
        let product: Amplitudes = (0..1usize << m)
            .map(|bits| {
                let occ: Vec<u8> = (0..m).map(|i| ((bits >> (m - 1 - i)) & 1) as u8).collect();
                (BasisConfig::new(occ), amp)
            })
            .collect();
        let product = SparseState::from_trusted(anc.clone(), product)?;
        let projected = product.filtered(|c| is_staircase(c));
        // Every configuration carries probability 2^{−m} exactly.
        let success_probability = projected.len() as f64 * libm::pow(0.5, m as f64);
        let (catalyst, _) = SparseState::normalized(anc, projected)?;
        Ok(Self {
            n,
            success_probability,
            catalyst,
        })
    }

    /// One run of the binary projective test.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.success_probability
    }

    /// One preparation attempt; the catalyst on success.
    pub fn prepare<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&SparseState> {
        self.sample(rng).then_some(&self.catalyst)
    }
}

/// Single seeded preparation attempt for `n`.
pub fn prepare_catalyst_postselect(n: usize, seed: u64) -> Result<Option<SparseState>> {
    let p = CatalystPostselection::new(n)?;
    Ok(p.prepare(&mut crate::measure::seeded(seed)).cloned())
}

/// Reduced state of the catalyst ancillas, used to check reusability.
pub fn catalyst_marginal(state: &SparseState, plan: &CatalysisPlan) -> Result<crate::density::DensityMatrix> {
    partial_trace(state, &plan.ys)
}
