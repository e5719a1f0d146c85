mod oracle;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use ssrlab_core::measure::{seeded, Prng};
use ssrlab_core::superselection::{apply_allowed, sector_conditioned, sector_slices};
use ssrlab_core::{
    is_allowed, sector_decompose, superpose, CMatrix, Charge, Legality, LocalOperator, ModeId, ModeSpec, Party, Register, SparseState,
    C64,
};

use oracle::*;

fn rng(seed: u64) -> Prng {
    seeded(seed)
}

fn mixed_register() -> Arc<Register> {
    Arc::new(
        Register::new(vec![
            ModeSpec::fermion("f0", Party::Alice).restricted(),
            ModeSpec::boson("b0", 2, Party::Alice).restricted(),
            ModeSpec::boson("g0", 1, Party::Alice).free(),
            ModeSpec::fermion("f1", Party::Bob).restricted(),
        ])
        .unwrap(),
    )
}

fn random_state(register: &Arc<Register>, seed: u64) -> SparseState {
    let mut r = rng(seed);
    let dims = full_dims(register);
    let d: usize = dims.iter().product();
    let v = random_vector(d, &mut r);
    SparseState::from_amplitudes(register.clone(), (0..d).map(|i| (digits(&dims, i), v[i]))).unwrap()
}

/// Random sector-blocked operator on `targets` built through the public
/// constructor.
fn random_blocked(register: &Register, targets: &[ModeId], seed: u64) -> LocalOperator {
    let mut r = rng(seed);
    let blocks: BTreeMap<Charge, CMatrix> = sector_slices(targets, register)
        .unwrap()
        .into_iter()
        .map(|(k, slice)| (k, random_unitary(slice.len(), &mut r)))
        .collect();
    sector_conditioned(&blocks, targets, register).unwrap()
}

fn targets(names: &[&str]) -> Vec<ModeId> {
    names.iter().map(|&s| ModeId::from(s)).collect()
}

#[test]
fn legality_matches_projector_commutation() {
    let mut r = rng(11);
    let (mut allowed, mut blocked) = (0, 0);
    for _ in 0..1000 {
        let case = random_legality_case(&mut r);
        let op = LocalOperator::dense(case.dims.clone(), case.matrix.clone()).unwrap();
        let verdict = is_allowed(&op, &case.ids, &case.register).unwrap();
        let expected = commutes_with_charge(&case.matrix, &case.dims, &case.restricted, 1e-12);
        assert_eq!(verdict.is_allowed(), expected, "{:?}", case.register);
        if expected {
            allowed += 1;
        } else {
            blocked += 1;
        }
    }
    assert!(allowed > 200 && blocked > 200, "{allowed} allowed, {blocked} blocked");
}

#[test]
fn witness_points_at_a_nonzero_cross_sector_entry() {
    let mut r = rng(12);
    for _ in 0..200 {
        let case = random_legality_case(&mut r);
        let op = LocalOperator::dense(case.dims.clone(), case.matrix.clone()).unwrap();
        if let Legality::Blocked(w) = is_allowed(&op, &case.ids, &case.register).unwrap() {
            let row = index_of(&case.dims, &w.to);
            let col = index_of(&case.dims, &w.from);
            assert_eq!(case.matrix[(row, col)], w.entry);
            assert!(w.entry.norm() > 1e-12);
            let q = |occ: &[u8]| -> u32 { occ.iter().zip(&case.restricted).filter(|(_, r)| **r).map(|(q, _)| *q as u32).sum() };
            assert_ne!(q(&w.from), q(&w.to));
        }
    }
}

#[test]
fn plain_fermion_photon_swap_is_blocked() {
    let register = Register::new(vec![
        ModeSpec::fermion("e", Party::Alice).restricted(),
        ModeSpec::boson("p", 1, Party::Alice).free(),
    ])
    .unwrap();
    let op = ssrlab_core::operator::swap(2);
    match is_allowed(&op, &targets(&["e", "p"]), &register).unwrap() {
        Legality::Blocked(w) => {
            assert_eq!((w.from, w.to), (vec![0, 1], vec![1, 0]));
            assert_eq!(w.entry, C64::new(1.0, 0.0));
        }
        Legality::Allowed => panic!("swap must be blocked"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allowed_operators_preserve_norm_and_weights(state_seed in any::<u64>(), op_seed in any::<u64>(), which in 0usize..4) {
        let register = mixed_register();
        let names: [&[&str]; 4] = [&["f0"], &["f0", "b0"], &["b0", "g0", "f1"], &["g0"]];
        let t = targets(names[which]);
        let psi = random_state(&register, state_seed);
        let op = random_blocked(&register, &t, op_seed);
        let out = apply_allowed(&psi, &op, &t).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let before = sector_decompose(&psi).weights();
        let after = sector_decompose(&out).weights();
        for (k, p) in &before {
            prop_assert!((p - after.get(k).unwrap_or(&0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn application_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), op_seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let register = mixed_register();
        let t = targets(&["f0", "b0"]);
        let (psi, phi) = (random_state(&register, s1), random_state(&register, s2));
        let op = random_blocked(&register, &t, op_seed);
        let a = C64::new(re, im);
        let one = C64::new(1.0, 0.0);
        let (sum, _) = superpose(&[(a, &psi), (one, &phi)]).unwrap();
        let lhs = sum.apply_local(&op, &t).unwrap();
        let (rhs, _) = superpose(&[(a, &psi.apply_local(&op, &t).unwrap()), (one, &phi.apply_local(&op, &t).unwrap())]).unwrap();
        prop_assert!((lhs.fidelity(&rhs).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!((lhs.inner_product(&rhs).unwrap() - one).norm() < 1e-10);
    }

    #[test]
    fn sparse_application_matches_dense(state_seed in any::<u64>(), op_seed in any::<u64>()) {
        let register = mixed_register();
        let t = targets(&["g0", "f0"]);
        let psi = random_state(&register, state_seed);
        let op = random_blocked(&register, &t, op_seed);
        let dims = full_dims(&register);
        let expected = dense_apply(&to_dense(&psi), &dims, &op.to_dense().unwrap(), &register.positions(&t).unwrap());
        let got = to_dense(&psi.apply_local(&op, &t).unwrap());
        for (a, b) in expected.iter().zip(&got) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn allowed_operators_compose(s1 in any::<u64>(), s2 in any::<u64>()) {
        let register = mixed_register();
        let t = targets(&["f0", "b0", "g0"]);
        let a = random_blocked(&register, &t, s1);
        let b = random_blocked(&register, &t, s2);
        prop_assert!(is_allowed(&a, &t, &register).unwrap().is_allowed());
        let ab = a.compose(&b).unwrap();
        prop_assert!(is_allowed(&ab, &t, &register).unwrap().is_allowed());
        prop_assert!(ab.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn sector_decomposition_round_trips(seed in any::<u64>()) {
        let register = mixed_register();
        let psi = random_state(&register, seed);
        let dec = sector_decompose(&psi);
        let total: f64 = dec.weights().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let back = dec.reassemble().unwrap();
        for (cfg, a) in psi.amplitudes() {
            prop_assert!((back.amplitude(cfg) - a).norm() < 1e-12);
        }
        prop_assert_eq!(back.len(), psi.len());
    }
}
