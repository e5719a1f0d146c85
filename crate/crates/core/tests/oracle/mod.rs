//! Brute-force reference implementations for the tests. Everything here is
//! written against dense vectors and matrices with plain index arithmetic,
//! independently of the sparse machinery under test.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use ssrlab_core::commitment::CommitmentInstance;
use ssrlab_core::{CMatrix, ModeSpec, Party, Register, SparseState, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn gaussian<R: Rng>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// Random qubit amplitudes `(α, β)` with `|α|² + |β|² = 1`.
pub fn random_qubit<R: Rng>(rng: &mut R) -> (C64, C64) {
    let v = random_vector(2, rng);
    (v[0], v[1])
}

/// Haar-random unitary by Gram–Schmidt on complex Gaussian columns.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        for q in &cols {
            let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    CMatrix::from_fn(d, d, |r, k| cols[k][r])
}

pub fn identity(d: usize) -> Vec<Vec<C64>> {
    (0..d)
        .map(|r| (0..d).map(|k| if r == k { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
    (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect()).collect()
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].norm().partial_cmp(&m[y][col].norm()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    let (mc, ic) = (m[col][j], inv[col][j]);
                    m[r][j] -= f * mc;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    inv
}

// ---------------------------------------------------------------------------
// Catalytic swap on a dense 2^(n+1) vector. Bit layout: x is the most
// significant bit, then y1..y_{n-1}, then z as the least significant bit.

fn stair_bits(j: usize, count: usize) -> usize {
    // y1..yj occupied; y1 is the most significant ancilla bit.
    ((1usize << j) - 1) << (count - j)
}

fn stair_index(ybits: usize, count: usize) -> Option<usize> {
    (0..=count).find(|&j| stair_bits(j, count) == ybits)
}

pub struct DenseSwap {
    pub fidelity: f64,
    pub distribution: BTreeMap<u32, f64>,
    pub output: Vec<C64>,
}

pub fn dense_catalytic_swap(n: usize, alpha: C64, beta: C64) -> DenseSwap {
    let m = n - 1;
    let dim = 1usize << (n + 1);
    let split = |b: usize| (b >> n, (b >> 1) & ((1 << m) - 1), b & 1);
    let join = |x: usize, y: usize, z: usize| (x << n) | (y << 1) | z;
    let amp = 1.0 / (n as f64).sqrt();

    let mut psi = vec![c(0.0, 0.0); dim];
    for j in 0..n {
        psi[join(0, stair_bits(j, m), 0)] += alpha * amp;
        psi[join(1, stair_bits(j, m), 0)] += beta * amp;
    }

    // CNOT x -> z inside charge sectors 1..n-1.
    let mut after_cnot = vec![c(0.0, 0.0); dim];
    for (b, a) in psi.iter().enumerate() {
        let (x, y, z) = split(b);
        let q = x + y.count_ones() as usize;
        let target = if x == 1 && (1..n).contains(&q) { join(x, y, z ^ 1) } else { b };
        after_cnot[target] += *a;
    }

    // S conditioned on z: |0, j> <-> |1, j-1>.
    let mut out = vec![c(0.0, 0.0); dim];
    for (b, a) in after_cnot.iter().enumerate() {
        let (x, y, z) = split(b);
        let mut target = b;
        if z == 1 {
            if let Some(j) = stair_index(y, m) {
                if x == 0 && j >= 1 {
                    target = join(1, stair_bits(j - 1, m), 1);
                } else if x == 1 && j < m {
                    target = join(0, stair_bits(j + 1, m), 1);
                }
            }
        }
        out[target] += *a;
    }

    let ideal_amp = 1.0 / (m as f64).sqrt();
    let mut ideal = vec![c(0.0, 0.0); dim];
    for j in 1..n {
        ideal[join(0, stair_bits(j, m), 0)] += alpha * ideal_amp;
        ideal[join(0, stair_bits(j, m), 1)] += beta * ideal_amp;
    }
    let overlap: C64 = ideal.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();

    let mut distribution = BTreeMap::new();
    for (b, a) in out.iter().enumerate() {
        if a.norm_sqr() > 0.0 {
            let (x, y, _) = split(b);
            *distribution.entry((x + y.count_ones() as usize) as u32).or_insert(0.0) += a.norm_sqr();
        }
    }
    DenseSwap {
        fidelity: overlap.norm_sqr(),
        distribution,
        output: out,
    }
}

// ---------------------------------------------------------------------------
// Legality by commutation with charge projectors.

/// Occupations of subset index `i` over `dims`, first target most significant.
pub fn digits(dims: &[usize], mut i: usize) -> Vec<u8> {
    let mut out = vec![0u8; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = (i % dims[k]) as u8;
        i /= dims[k];
    }
    out
}

/// `[U, P_q] = 0` for every charge projector `P_q`, entrywise within `tol`.
pub fn commutes_with_charge(u: &CMatrix, dims: &[usize], restricted: &[bool], tol: f64) -> bool {
    let d = u.rows();
    let charge: Vec<u32> = (0..d)
        .map(|i| {
            digits(dims, i)
                .iter()
                .zip(restricted)
                .filter(|(_, r)| **r)
                .map(|(q, _)| *q as u32)
                .sum()
        })
        .collect();
    let mut values: Vec<u32> = charge.clone();
    values.sort();
    values.dedup();
    values.into_iter().all(|q| {
        let p: Vec<f64> = charge.iter().map(|&k| if k == q { 1.0 } else { 0.0 }).collect();
        (0..d).all(|r| (0..d).all(|k| (u[(r, k)] * p[k] - u[(r, k)] * p[r]).norm() <= tol))
    })
}

// ---------------------------------------------------------------------------
// Dense full-register states.

pub fn full_dims(register: &Register) -> Vec<usize> {
    register.modes().iter().map(|m| m.dim()).collect()
}

pub fn index_of(dims: &[usize], occ: &[u8]) -> usize {
    occ.iter().zip(dims).fold(0, |acc, (&q, &d)| acc * d + q as usize)
}

pub fn to_dense(state: &SparseState) -> Vec<C64> {
    let dims = full_dims(state.register());
    let mut v = vec![c(0.0, 0.0); dims.iter().product()];
    for (cfg, a) in state.amplitudes() {
        v[index_of(&dims, cfg)] = *a;
    }
    v
}

/// `(U ⊗ I) v` with `U` on register positions `targets`.
pub fn dense_apply(v: &[C64], dims: &[usize], u: &CMatrix, targets: &[usize]) -> Vec<C64> {
    let tdims: Vec<usize> = targets.iter().map(|&p| dims[p]).collect();
    let mut out = vec![c(0.0, 0.0); v.len()];
    for (i, a) in v.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let occ = digits(dims, i);
        let sub: Vec<u8> = targets.iter().map(|&p| occ[p]).collect();
        let col = index_of(&tdims, &sub);
        for row in 0..u.rows() {
            let e = u[(row, col)];
            if e.norm_sqr() == 0.0 {
                continue;
            }
            let mut o = occ.clone();
            for (k, &p) in targets.iter().enumerate() {
                o[p] = digits(&tdims, row)[k];
            }
            out[index_of(dims, &o)] += e * a;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Attack fidelity by direct maximization over Alice's unitaries.

/// `max_U |⟨ψ1|(U ⊗ I)ψ0⟩|²` over all unitaries on Alice's positions, by
/// gradient ascent on `Re tr(U A)` along Cayley retractions.
pub fn attack_fidelity_bruteforce<R: Rng>(psi0: &SparseState, psi1: &SparseState, alice: &[usize], rng: &mut R) -> f64 {
    let dims = full_dims(psi0.register());
    let bob: Vec<usize> = (0..dims.len()).filter(|p| !alice.contains(p)).collect();
    let adims: Vec<usize> = alice.iter().map(|&p| dims[p]).collect();
    let bdims: Vec<usize> = bob.iter().map(|&p| dims[p]).collect();
    let (da, db) = (adims.iter().product::<usize>(), bdims.iter().product::<usize>());
    let matrix = |s: &SparseState| {
        let mut m = vec![vec![c(0.0, 0.0); db]; da];
        for (cfg, a) in s.amplitudes() {
            let ai: Vec<u8> = alice.iter().map(|&p| cfg[p]).collect();
            let bi: Vec<u8> = bob.iter().map(|&p| cfg[p]).collect();
            m[index_of(&adims, &ai)][index_of(&bdims, &bi)] = *a;
        }
        m
    };
    let a = matmul(&matrix(psi0), &dagger(&matrix(psi1)));
    let objective = |u: &[Vec<C64>]| -> f64 { (0..da).map(|i| (0..da).map(|k| u[i][k] * a[k][i]).sum::<C64>()).sum::<C64>().re };

    let mut u = random_unitary(da, rng).to_rows();
    let mut value = objective(&u);
    let mut step = 1.0;
    for _ in 0..20_000 {
        let m = matmul(&u, &a);
        // X = (M† − M)/2 is anti-Hermitian and increases Re tr(e^{tX} M).
        let md = dagger(&m);
        let x: Vec<Vec<C64>> = (0..da).map(|i| (0..da).map(|k| (md[i][k] - m[i][k]) * 0.5).collect()).collect();
        let gnorm: f64 = x.iter().flatten().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        loop {
            let half: Vec<Vec<C64>> = x.iter().map(|r| r.iter().map(|e| e * (step / 2.0)).collect()).collect();
            let id = identity(da);
            let plus: Vec<Vec<C64>> = (0..da).map(|i| (0..da).map(|k| id[i][k] + half[i][k]).collect()).collect();
            let minus: Vec<Vec<C64>> = (0..da).map(|i| (0..da).map(|k| id[i][k] - half[i][k]).collect()).collect();
            let cayley = matmul(&inverse(&minus), &plus);
            let candidate = matmul(&cayley, &u);
            let v = objective(&candidate);
            if v > value {
                u = candidate;
                value = v;
                step = (step * 1.5).min(10.0);
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if step < 1e-12 {
            break;
        }
    }
    value * value
}

// ---------------------------------------------------------------------------
// Random commitment instances.

pub struct InstanceShape {
    pub register: Arc<Register>,
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

/// Up to three modes per party: restricted fermions plus, sometimes, a
/// free qubit.
pub fn random_shape<R: Rng>(rng: &mut R) -> InstanceShape {
    let mut specs = Vec::new();
    for (party, tag) in [(Party::Alice, "a"), (Party::Bob, "b")] {
        let count = rng.random_range(1..=3);
        let free = count > 1 && rng.random_bool(0.4);
        for i in 0..count {
            let id = format!("{tag}{i}");
            specs.push(if free && i == count - 1 {
                ModeSpec::boson(id, 1, party).free()
            } else {
                ModeSpec::fermion(id, party).restricted()
            });
        }
    }
    let register = Register::new(specs).unwrap();
    let alice = (0..register.len()).filter(|&p| register.mode(p).owner == Party::Alice).collect();
    let bob = (0..register.len()).filter(|&p| register.mode(p).owner == Party::Bob).collect();
    InstanceShape {
        register: Arc::new(register),
        alice,
        bob,
    }
}

fn configs(register: &Register, positions: &[usize]) -> Vec<Vec<u8>> {
    let dims: Vec<usize> = positions.iter().map(|&p| register.mode(p).dim()).collect();
    (0..dims.iter().product()).map(|i| digits(&dims, i)).collect()
}

fn restricted_charge(register: &Register, positions: &[usize], occ: &[u8]) -> u32 {
    positions
        .iter()
        .zip(occ)
        .filter(|(p, _)| register.mode(**p).restricted)
        .map(|(_, q)| *q as u32)
        .sum()
}

/// Feasible Alice charges `k` (with Bob holding `total − k`).
pub fn feasible_sectors(shape: &InstanceShape, total: u32) -> Vec<u32> {
    let reg = &shape.register;
    let ka: std::collections::BTreeSet<u32> = configs(reg, &shape.alice).iter().map(|o| restricted_charge(reg, &shape.alice, o)).collect();
    let kb: std::collections::BTreeSet<u32> = configs(reg, &shape.bob).iter().map(|o| restricted_charge(reg, &shape.bob, o)).collect();
    ka.into_iter().filter(|k| *k <= total && kb.contains(&(total - k))).collect()
}

/// Alice configs, Bob configs, and the amplitude table between them.
type SectorTerms = (Vec<Vec<u8>>, Vec<Vec<u8>>, Vec<Vec<C64>>);

/// Random state supported in sector `k`, as full-register terms, plus the
/// Alice slice it lives on.
fn sector_terms<R: Rng>(shape: &InstanceShape, total: u32, k: u32, rng: &mut R) -> SectorTerms {
    let reg = &shape.register;
    let aslice: Vec<Vec<u8>> = configs(reg, &shape.alice).into_iter().filter(|o| restricted_charge(reg, &shape.alice, o) == k).collect();
    let bslice: Vec<Vec<u8>> = configs(reg, &shape.bob).into_iter().filter(|o| restricted_charge(reg, &shape.bob, o) == total - k).collect();
    let v = random_vector(aslice.len() * bslice.len(), rng);
    let m: Vec<Vec<C64>> = (0..aslice.len()).map(|i| (0..bslice.len()).map(|j| v[i * bslice.len() + j]).collect()).collect();
    (aslice, bslice, m)
}

fn assemble(shape: &InstanceShape, a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut occ = vec![0u8; shape.register.len()];
    for (&p, &q) in shape.alice.iter().zip(a) {
        occ[p] = q;
    }
    for (&p, &q) in shape.bob.iter().zip(b) {
        occ[p] = q;
    }
    occ
}

fn random_weights<R: Rng>(count: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn pick_total<R: Rng>(shape: &InstanceShape, min_sectors: usize, rng: &mut R) -> Option<u32> {
    let max = shape.register.modes().iter().filter(|m| m.restricted).count() as u32;
    let totals: Vec<u32> = (0..=max).filter(|&t| feasible_sectors(shape, t).len() >= min_sectors).collect();
    if totals.is_empty() {
        None
    } else {
        Some(totals[rng.random_range(0..totals.len())])
    }
}

/// Perfectly concealing instance: `Ψ(1)` is `Ψ(0)` with an independent
/// random unitary and phase applied inside every Alice charge sector.
pub fn random_concealing_instance<R: Rng>(rng: &mut R) -> (CommitmentInstance, InstanceShape) {
    loop {
        let shape = random_shape(rng);
        let Some(total) = pick_total(&shape, 1, rng) else { continue };
        let sectors = feasible_sectors(&shape, total);
        let weights = random_weights(sectors.len(), rng);
        let (mut t0, mut t1) = (Vec::new(), Vec::new());
        for (&k, &p) in sectors.iter().zip(&weights) {
            let (aslice, bslice, m0) = sector_terms(&shape, total, k, rng);
            let v = random_unitary(aslice.len(), rng).to_rows();
            let m1 = matmul(&v, &m0);
            let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            for (i, a) in aslice.iter().enumerate() {
                for (j, b) in bslice.iter().enumerate() {
                    let occ = assemble(&shape, a, b);
                    t0.push((occ.clone(), m0[i][j] * p.sqrt()));
                    t1.push((occ, m1[i][j] * p.sqrt() * phase));
                }
            }
        }
        let psi0 = SparseState::from_amplitudes(shape.register.clone(), t0).unwrap();
        let psi1 = SparseState::from_amplitudes(shape.register.clone(), t1).unwrap();
        return (CommitmentInstance::new(total, psi0, psi1).unwrap(), shape);
    }
}

/// Revealing instance: two sectors with weights (0.9, 0.1) for bit 0 and
/// (0.1, 0.9) for bit 1, and independent random sector states.
pub fn random_revealing_instance<R: Rng>(rng: &mut R) -> (CommitmentInstance, InstanceShape) {
    loop {
        let shape = random_shape(rng);
        let Some(total) = pick_total(&shape, 2, rng) else { continue };
        let sectors = feasible_sectors(&shape, total);
        let (ka, kb) = (sectors[0], sectors[sectors.len() - 1]);
        let mut build = |weights: [(u32, f64); 2]| {
            let mut terms = Vec::new();
            for (k, p) in weights {
                let (aslice, bslice, m) = sector_terms(&shape, total, k, rng);
                for (i, a) in aslice.iter().enumerate() {
                    for (j, b) in bslice.iter().enumerate() {
                        terms.push((assemble(&shape, a, b), m[i][j] * p.sqrt()));
                    }
                }
            }
            SparseState::from_amplitudes(shape.register.clone(), terms).unwrap()
        };
        let psi0 = build([(ka, 0.9), (kb, 0.1)]);
        let psi1 = build([(ka, 0.1), (kb, 0.9)]);
        return (CommitmentInstance::new(total, psi0, psi1).unwrap(), shape);
    }
}

// ---------------------------------------------------------------------------
// Random operators for legality checks.

pub struct LegalityCase {
    pub register: Register,
    pub ids: Vec<ssrlab_core::ModeId>,
    pub dims: Vec<usize>,
    pub restricted: Vec<bool>,
    pub matrix: CMatrix,
}

/// One to three modes of mixed kind, and an operator that is sector
/// blocked, blocked then rotated between two basis states, or generic.
pub fn random_legality_case<R: Rng>(rng: &mut R) -> LegalityCase {
    let count = rng.random_range(1..=3);
    let specs: Vec<ModeSpec> = (0..count)
        .map(|i| {
            let base = if rng.random_bool(0.5) {
                ModeSpec::fermion(format!("m{i}"), Party::Alice)
            } else {
                ModeSpec::boson(format!("m{i}"), rng.random_range(1..=2), Party::Alice)
            };
            match rng.random_range(0..3) {
                0 => base.free(),
                1 => base,
                _ => base.restricted(),
            }
        })
        .collect();
    let register = Register::new(specs).unwrap();
    let dims = full_dims(&register);
    let restricted: Vec<bool> = register.modes().iter().map(|m| m.restricted).collect();
    let ids: Vec<_> = register.ids().cloned().collect();
    let d: usize = dims.iter().product();
    let charge = |i: usize| -> u32 {
        digits(&dims, i).iter().zip(&restricted).filter(|(_, r)| **r).map(|(q, _)| *q as u32).sum()
    };

    let mut m = CMatrix::zeros(d, d);
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in 0..d {
        groups.entry(charge(i)).or_default().push(i);
    }
    for idx in groups.values() {
        let u = random_unitary(idx.len(), rng);
        for (a, &r) in idx.iter().enumerate() {
            for (b, &k) in idx.iter().enumerate() {
                m[(r, k)] = u[(a, b)];
            }
        }
    }
    match rng.random_range(0..4) {
        0 => {}
        1 | 2 if d > 1 => {
            // Mix two basis states; legal only if they share a charge.
            let i = rng.random_range(0..d);
            let j = (i + rng.random_range(1..d)) % d;
            let theta = 10f64.powf(rng.random_range(-6.0..0.0));
            let g = CMatrix::from_fn(d, d, |r, k| match (r, k) {
                _ if r == i && k == i => c(theta.cos(), 0.0),
                _ if r == j && k == j => c(theta.cos(), 0.0),
                _ if r == i && k == j => c(-theta.sin(), 0.0),
                _ if r == j && k == i => c(theta.sin(), 0.0),
                _ if r == k => c(1.0, 0.0),
                _ => c(0.0, 0.0),
            });
            m = m.mul(&g);
        }
        _ => m = random_unitary(d, rng),
    }
    LegalityCase {
        register,
        ids,
        dims,
        restricted,
        matrix: m,
    }
}
