//! Reduced density matrices on a subset of modes.
//!
//! Matrices are stored on the support only: the basis is the sorted list of
//! subset configurations that occur in the state, so a reduced state of a
//! few modes out of thousands stays small.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::mode::ModeId;
use crate::operator::MAX_DENSE_DIM;
use crate::state::SparseState;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    modes: Vec<ModeId>,
    basis: Vec<Vec<u8>>,
    matrix: CMatrix,
}

/// `Tr_{rest}|ψ⟩⟨ψ|`, keeping `keep` in the given order.
pub fn partial_trace(state: &SparseState, keep: &[ModeId]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let register = state.register();
    let kept = register.positions(keep)?;
    let traced: Vec<usize> = (0..register.len()).filter(|p| !kept.contains(p)).collect();

    let mut groups: BTreeMap<Vec<u8>, Vec<(Vec<u8>, C64)>> = BTreeMap::new();
    let mut support = BTreeSet::new();
    for (cfg, a) in state.amplitudes() {
        let sub = cfg.restrict(&kept);
        support.insert(sub.clone());
        groups.entry(cfg.restrict(&traced)).or_default().push((sub, *a));
    }
    if support.len() > MAX_DENSE_DIM {
        return Err(Error::TooLarge(support.len()));
    }
    let basis: Vec<Vec<u8>> = support.into_iter().collect();
    let index: BTreeMap<&[u8], usize> = basis.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
    let d = basis.len();
    let mut matrix = CMatrix::zeros(d, d);
    for terms in groups.values() {
        for (ri, a) in terms {
            let r = index[ri.as_slice()];
            for (ci, b) in terms {
                let c = index[ci.as_slice()];
                matrix[(r, c)] += a * b.conj();
            }
        }
    }
    Ok(DensityMatrix {
        modes: keep.to_vec(),
        basis,
        matrix,
    })
}

impl DensityMatrix {
    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    /// Subset configurations indexing rows and columns.
    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `⟨config|ρ|config⟩`, zero off the support.
    pub fn population(&self, config: &[u8]) -> f64 {
        self.basis
            .binary_search_by(|b| b.as_slice().cmp(config))
            .map_or(0.0, |i| self.matrix[(i, i)].re)
    }

    /// `⟨φ|ρ|φ⟩` for a vector given on configurations of the kept modes.
    pub fn expectation(&self, phi: &BTreeMap<Vec<u8>, C64>) -> f64 {
        let v: Vec<C64> = self.basis.iter().map(|b| phi.get(b).copied().unwrap_or(ZERO)).collect();
        linalg::inner(&v, &self.matrix.mul_vec(&v)).re
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.mul(&self.matrix).trace().re
    }

    /// Both matrices expressed on the union of their supports.
    fn aligned(&self, other: &Self) -> Result<(CMatrix, CMatrix)> {
        if self.modes != other.modes {
            return Err(Error::InvalidArgument(alloc::format!(
                "density matrices over different modes: {:?} vs {:?}",
                self.modes, other.modes
            )));
        }
        let union: Vec<&Vec<u8>> = self
            .basis
            .iter()
            .chain(&other.basis)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let embed = |m: &Self| {
            let map: Vec<usize> = m
                .basis
                .iter()
                .map(|b| union.binary_search(&b).expect("union covers both supports"))
                .collect();
            let mut out = CMatrix::zeros(union.len(), union.len());
            for (i, &r) in map.iter().enumerate() {
                for (j, &c) in map.iter().enumerate() {
                    out[(r, c)] = m.matrix[(i, j)];
                }
            }
            out
        };
        Ok((embed(self), embed(other)))
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.aligned(other)?;
        let (eig, _) = linalg::hermitian_eigen(&a.sub(&b));
        Ok(0.5 * eig.iter().map(|e| e.abs()).sum::<f64>())
    }

    /// Uhlmann fidelity `(Tr|√ρ √σ|)²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.aligned(other)?;
        let product = linalg::psd_sqrt(&a).mul(&linalg::psd_sqrt(&b));
        let s: f64 = linalg::svd(&product).sigma.iter().sum();
        Ok(s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::mode::{ModeSpec, Party, Register};
    use alloc::sync::Arc;
    use alloc::vec;

    fn two_qubits() -> Arc<Register> {
        Arc::new(
            Register::new(vec![
                ModeSpec::fermion("a", Party::Alice).restricted(),
                ModeSpec::fermion("b", Party::Bob).restricted(),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn bell_pair_marginal_is_maximally_mixed() {
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = SparseState::from_amplitudes(two_qubits(), [(vec![0, 1], h), (vec![1, 0], h)]).unwrap();
        let rho = partial_trace(&s, &["b".into()]).unwrap();
        assert_eq!(rho.basis(), &[vec![0], vec![1]]);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn distances_between_disjoint_supports() {
        let r = two_qubits();
        let s0 = SparseState::basis(r.clone(), vec![0, 0]).unwrap();
        let s1 = SparseState::basis(r, vec![0, 1]).unwrap();
        let a = partial_trace(&s0, &["b".into()]).unwrap();
        let b = partial_trace(&s1, &["b".into()]).unwrap();
        assert_eq!(a.dim(), 1);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
        assert!(a.fidelity(&b).unwrap() < 1e-14);
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let r = two_qubits();
        let s0 = SparseState::basis(r.clone(), vec![0, 0]).unwrap();
        let s1 = SparseState::from_amplitudes(r, [(vec![0, 0], ONE), (vec![0, 1], C64::new(0.0, 1.0))]).unwrap();
        let a = partial_trace(&s0, &["b".into()]).unwrap();
        let b = partial_trace(&s1, &["b".into()]).unwrap();
        assert!((a.fidelity(&b).unwrap() - 0.5).abs() < 1e-12);
        assert!((a.trace_distance(&b).unwrap() - libm::sqrt(0.5)).abs() < 1e-12);
        assert!(a.trace_distance(&partial_trace(&s0, &["a".into()]).unwrap()).is_err());
    }
}
