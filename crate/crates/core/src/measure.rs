//! Projective occupation measurements and seeded randomness.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mode::ModeId;
use crate::state::SparseState;

/// Generator used for every random choice in the crate.
pub type Prng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Independent stream `counter` derived from `seed`; used to give every
/// trial of an experiment its own reproducible generator.
pub fn trial_rng(seed: u64, counter: u64) -> Prng {
    let mut rng = Prng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    /// Occupations of the measured modes, in target order.
    pub outcome: Vec<u8>,
    pub probability: f64,
    pub post_state: SparseState,
}

/// Outcome probabilities of measuring occupations of `targets`.
pub fn occupation_distribution(state: &SparseState, targets: &[ModeId]) -> Result<BTreeMap<Vec<u8>, f64>> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let positions = state.register().positions(targets)?;
    let mut out = BTreeMap::new();
    for (cfg, a) in state.amplitudes() {
        *out.entry(cfg.restrict(&positions)).or_insert(0.0) += a.norm_sqr();
    }
    Ok(out)
}

pub fn measure_occupation(state: &SparseState, targets: &[ModeId], seed: u64) -> Result<Measurement> {
    measure_occupation_with(state, targets, &mut seeded(seed))
}

/// Samples an outcome by the Born rule and collapses onto it.
pub fn measure_occupation_with<R: Rng + ?Sized>(
    state: &SparseState,
    targets: &[ModeId],
    rng: &mut R,
) -> Result<Measurement> {
    let dist = occupation_distribution(state, targets)?;
    let total: f64 = dist.values().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (outcome, p) in &dist {
        acc += p;
        chosen = Some((outcome, *p));
        if u < acc {
            break;
        }
    }
    let (outcome, probability) = chosen.ok_or(Error::ZeroNorm)?;
    let post_state = project(state, targets, outcome)?;
    Ok(Measurement {
        outcome: outcome.clone(),
        probability,
        post_state,
    })
}

/// Normalized projection onto `targets` having occupations `outcome`.
pub fn project(state: &SparseState, targets: &[ModeId], outcome: &[u8]) -> Result<SparseState> {
    let positions = state.register().positions(targets)?;
    if positions.len() != outcome.len() {
        return Err(Error::ConfigArity {
            expected: positions.len(),
            got: outcome.len(),
        });
    }
    let amps = state.filtered(|c| positions.iter().zip(outcome).all(|(&p, &v)| c[p] == v));
    SparseState::normalized(state.register().clone(), amps).map(|(s, _)| s)
}
