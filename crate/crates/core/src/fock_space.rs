//! Bosonic Fock bases over `M` modes, photon-number states and density
//! matrices, and the lift of single-particle transfer matrices to the
//! `N`-photon sector.
//!
//! A linear mode map sends `a†_j → Σ_i A_ij a†_i`. On occupation states its
//! matrix elements are permanents:
//!
//! ```text
//! ⟨m|Λ(A)|n⟩ = per(A[m, n]) / sqrt(Π m_i! · Π n_j!)
//! ```
//!
//! where `A[m, n]` repeats row `i` `m_i` times and column `j` `n_j` times.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

pub const DEFAULT_BASIS_CAP: usize = 1_000_000;
pub const DEFAULT_PERMANENT_CAP: usize = 20;

/// Occupation-number basis. Either a single photon-number sector or the
/// stack of sectors `min..=max` in ascending photon number. Within a sector
/// states are in reverse-lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    modes: usize,
    min_photons: usize,
    max_photons: usize,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn sector_size(modes: usize, photons: usize) -> u128 {
    binomial((photons + modes - 1) as u128, photons as u128)
}

fn push_sector(modes: usize, photons: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == modes {
        prefix.push(photons);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=photons).rev() {
        prefix.push(k);
        push_sector(modes, photons - k, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    fn build(modes: usize, min_photons: usize, max_photons: usize, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidNetwork("a Fock basis needs at least one mode".into()));
        }
        let size: u128 = (min_photons..=max_photons).map(|n| sector_size(modes, n)).sum();
        if size > cap as u128 {
            return Err(Error::BasisTooLarge { size, cap });
        }
        let mut states = Vec::with_capacity(size as usize);
        for n in min_photons..=max_photons {
            push_sector(modes, n, &mut Vec::with_capacity(modes), &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis { modes, min_photons, max_photons, states, index })
    }

    pub fn sector(modes: usize, photons: usize) -> Result<Self> {
        Self::build(modes, photons, photons, DEFAULT_BASIS_CAP)
    }

    pub fn sector_capped(modes: usize, photons: usize, cap: usize) -> Result<Self> {
        Self::build(modes, photons, photons, cap)
    }

    /// Sectors `0..=max_photons` stacked.
    pub fn stacked(modes: usize, max_photons: usize) -> Result<Self> {
        Self::build(modes, 0, max_photons, DEFAULT_BASIS_CAP)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_sector(&self) -> bool {
        self.min_photons == self.max_photons
    }

    pub fn max_photons(&self) -> usize {
        self.max_photons
    }

    pub fn min_photons(&self) -> usize {
        self.min_photons
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[usize] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Same modes and sectors.
    pub fn same_as(&self, other: &FockBasis) -> bool {
        self.modes == other.modes
            && self.min_photons == other.min_photons
            && self.max_photons == other.max_photons
    }

    /// Matrix of `a_mode` on this basis; components leaving the basis are
    /// dropped.
    pub fn annihilation(&self, mode: usize) -> CMatrix {
        let d = self.len();
        let mut a = CMatrix::zeros(d, d);
        for (j, s) in self.states.iter().enumerate() {
            if s[mode] == 0 {
                continue;
            }
            let mut lowered = s.clone();
            lowered[mode] -= 1;
            if let Some(i) = self.index_of(&lowered) {
                a[(i, j)] = C64::new((s[mode] as f64).sqrt(), 0.0);
            }
        }
        a
    }
}

/// `N`-photon sector over `M` modes.
pub fn enumerate_basis(modes: usize, photons: usize) -> Result<FockBasis> {
    FockBasis::sector(modes, photons)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn occupation_weight(s: &[usize]) -> f64 {
    s.iter().map(|&n| factorial(n)).product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub basis: Arc<FockBasis>,
    pub amplitudes: CVector,
}

impl PureState {
    pub fn new(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{} amplitudes for a basis of {} states",
                amplitudes.len(),
                basis.len()
            )));
        }
        Ok(PureState { basis, amplitudes })
    }

    /// The occupation state `|n₁, …, n_M⟩` in its own photon-number sector.
    pub fn occupation(occupation: &[usize]) -> Result<Self> {
        let basis = Arc::new(FockBasis::sector(occupation.len(), occupation.iter().sum())?);
        let mut amplitudes = CVector::zeros(basis.len());
        amplitudes[basis.index_of(occupation).expect("occupation is in its own sector")] = C64::new(1.0, 0.0);
        Ok(PureState { basis, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if !self.basis.same_as(&other.basis) {
            return Err(Error::BasisMismatch("states live in different bases".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            basis: self.basis.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// `(Σ_α c_α a†_α)^N |0⟩ / sqrt(N!)` for unit-norm `coeffs`.
pub fn mode_power_state(coeffs: &CVector, photons: usize) -> Result<PureState> {
    let norm = coeffs.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let basis = Arc::new(FockBasis::sector(coeffs.len(), photons)?);
    let nf = factorial(photons);
    let amplitudes = CVector::from_iterator(
        basis.len(),
        basis.states().iter().map(|s| {
            let prod: C64 = s.iter().zip(coeffs.iter()).map(|(&n, c)| c.powu(n as u32)).product();
            prod * (nf / occupation_weight(s)).sqrt()
        }),
    );
    Ok(PureState { basis, amplitudes })
}

pub fn permanent(m: &CMatrix) -> Result<C64> {
    permanent_capped(m, DEFAULT_PERMANENT_CAP)
}

/// Ryser's formula, visiting column subsets in Gray-code order so each step
/// updates the row sums by a single column.
pub fn permanent_capped(m: &CMatrix, cap: usize) -> Result<C64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::BasisMismatch("permanent of a non-square matrix".into()));
    }
    if n > cap {
        return Err(Error::PermanentTooLarge { size: n, cap });
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        if gray & (1 << j) != 0 {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r += m[(i, j)];
            }
        } else {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r -= m[(i, j)];
            }
        }
        let prod: C64 = row_sums.iter().product();
        if gray.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    Ok(if n % 2 == 1 { -total } else { total })
}

fn repeated_indices(s: &[usize]) -> Vec<usize> {
    s.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(i, n)).collect()
}

/// Matrix of the mode map `A` on `basis`. Different photon-number sectors
/// of a stacked basis are not connected.
pub fn lift_matrix(a: &CMatrix, basis: &FockBasis) -> Result<CMatrix> {
    lift_matrix_capped(a, basis, DEFAULT_PERMANENT_CAP)
}

pub fn lift_matrix_capped(a: &CMatrix, basis: &FockBasis, cap: usize) -> Result<CMatrix> {
    let m = basis.modes();
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::BasisMismatch(format!(
            "{}x{} mode matrix for {m} modes",
            a.nrows(),
            a.ncols()
        )));
    }
    if basis.max_photons() > cap {
        return Err(Error::PermanentTooLarge { size: basis.max_photons(), cap });
    }
    let d = basis.len();
    let states = basis.states();
    let rows: Vec<Vec<usize>> = states.iter().map(|s| repeated_indices(s)).collect();
    let weights: Vec<f64> = states.iter().map(|s| occupation_weight(s).sqrt()).collect();
    let mut out = CMatrix::zeros(d, d);
    let mut sub = CMatrix::zeros(0, 0);
    for i in 0..d {
        for j in 0..d {
            let (ri, cj) = (&rows[i], &rows[j]);
            if ri.len() != cj.len() {
                continue;
            }
            let k = ri.len();
            if sub.nrows() != k {
                sub = CMatrix::zeros(k, k);
            }
            for (p, &r) in ri.iter().enumerate() {
                for (q, &c) in cj.iter().enumerate() {
                    sub[(p, q)] = a[(r, c)];
                }
            }
            out[(i, j)] = permanent_capped(&sub, cap)? / (weights[i] * weights[j]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub basis: Arc<FockBasis>,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{}x{} matrix for a basis of {} states",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        Ok(DensityMatrix { basis, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest entry of `ρ − ρ†`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn hermitize(&mut self) {
        self.matrix = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
    }

    /// Sub-block on the states of `target`, which must be a subset of this
    /// basis (typically one sector of a stacked basis).
    pub fn restrict_to(&self, target: Arc<FockBasis>) -> Result<DensityMatrix> {
        let idx = target
            .states()
            .iter()
            .map(|s| self.basis.index_of(s))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::BasisMismatch("target states are not in this basis".into()))?;
        let matrix = CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        Ok(DensityMatrix { basis: target, matrix })
    }

    /// Zero-padded embedding into a larger basis containing every state of
    /// this one.
    pub fn embed_into(&self, target: Arc<FockBasis>) -> Result<DensityMatrix> {
        let idx = self
            .basis
            .states()
            .iter()
            .map(|s| target.index_of(s))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::BasisMismatch("states are missing from the target basis".into()))?;
        let mut matrix = CMatrix::zeros(target.len(), target.len());
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                matrix[(a, b)] = self.matrix[(i, j)];
            }
        }
        Ok(DensityMatrix { basis: target, matrix })
    }
}

/// `Σ p_ν |ψ_ν⟩⟨ψ_ν|`.
pub fn mix(states: &[(f64, PureState)]) -> Result<DensityMatrix> {
    let first = states
        .first()
        .ok_or(Error::InvalidWeights(0.0))?;
    let basis = first.1.basis.clone();
    let sum: f64 = states.iter().map(|(w, _)| w).sum();
    if states.iter().any(|(w, _)| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(sum));
    }
    let mut matrix = CMatrix::zeros(basis.len(), basis.len());
    for (w, psi) in states {
        if !psi.basis.same_as(&basis) {
            return Err(Error::BasisMismatch("mixture components live in different bases".into()));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        matrix += &psi.amplitudes * psi.amplitudes.adjoint() * C64::new(*w, 0.0);
    }
    Ok(DensityMatrix { basis, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Sum over all permutations.
    fn naive_permanent(m: &CMatrix) -> C64 {
        fn rec(m: &CMatrix, row: usize, used: &mut Vec<bool>) -> C64 {
            if row == m.nrows() {
                return c(1.0, 0.0);
            }
            let mut acc = c(0.0, 0.0);
            for j in 0..m.ncols() {
                if !used[j] {
                    used[j] = true;
                    acc += m[(row, j)] * rec(m, row + 1, used);
                    used[j] = false;
                }
            }
            acc
        }
        rec(m, 0, &mut vec![false; m.ncols()])
    }

    fn cmatrix(n: usize, v: &[(f64, f64)]) -> CMatrix {
        CMatrix::from_iterator(n, n, v.iter().map(|&(a, b)| c(a, b)))
    }

    #[test]
    fn basis_orders() {
        let b = enumerate_basis(2, 2).unwrap();
        assert_eq!(b.states(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_basis(3, 1).unwrap().len(), 3);
        let b = enumerate_basis(3, 2).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.state(0), &[2, 0, 0]);
        assert_eq!(b.state(5), &[0, 0, 2]);
        assert_eq!(enumerate_basis(4, 0).unwrap().states(), &[vec![0, 0, 0, 0]]);
        let s = FockBasis::stacked(2, 2).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.state(0), &[0, 0]);
        assert_eq!(s.index_of(&[1, 1]), Some(4));
    }

    #[test]
    fn basis_cap() {
        assert!(matches!(
            FockBasis::sector_capped(10, 10, 1000),
            Err(Error::BasisTooLarge { size: 92378, cap: 1000 })
        ));
        assert!(enumerate_basis(0, 2).is_err());
    }

    #[test]
    fn dimer_dark_state_amplitudes() {
        let v = CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]);
        let psi = mode_power_state(&v, 2).unwrap();
        let want = [0.5, -FRAC_1_SQRT_2, 0.5];
        for (g, w) in psi.amplitudes.iter().zip(want) {
            assert!((g - c(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn trimer_single_photon_amplitudes() {
        let v = CVector::from_vec(vec![c(0.5, 0.0), c(-SQRT_2 / 2.0, 0.0), c(0.5, 0.0)]);
        let psi = mode_power_state(&v, 1).unwrap();
        assert_eq!(psi.amplitudes, v);
    }

    #[test]
    fn first_mode_power_is_occupation() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        for n in 0..4 {
            let psi = mode_power_state(&v, n).unwrap();
            assert_eq!(psi, PureState::occupation(&[n, 0, 0]).unwrap());
        }
        let bad = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(mode_power_state(&bad, 1), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn small_permanents() {
        assert_eq!(permanent(&cmatrix(1, &[(1.0, 0.0)])).unwrap(), c(1.0, 0.0));
        assert_eq!(permanent(&CMatrix::zeros(0, 0)).unwrap(), c(1.0, 0.0));
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(2.0, -1.0), c(0.7, 0.1));
        let m = CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        assert!((permanent(&m).unwrap() - (a * d + b * cc)).norm() < 1e-14);
        let ones = CMatrix::from_element(3, 3, c(1.0, 0.0));
        assert!((permanent(&ones).unwrap() - c(6.0, 0.0)).norm() < 1e-14);
        assert!(matches!(
            permanent_capped(&CMatrix::zeros(5, 5), 4),
            Err(Error::PermanentTooLarge { size: 5, cap: 4 })
        ));
    }

    #[test]
    fn lift_two_photons_by_hand() {
        let (a, b, cc, d) = (c(0.3, 0.1), c(-0.2, 0.9), c(1.1, -0.4), c(0.5, 0.5));
        let m = CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        let basis = enumerate_basis(2, 2).unwrap();
        let l = lift_matrix(&m, &basis).unwrap();
        // (a a1† + c a2†)^2/√2 |0⟩ projected on |1,1⟩
        assert!((l[(1, 0)] - a * cc * SQRT_2).norm() < 1e-14);
        assert!((l[(1, 1)] - (a * d + b * cc)).norm() < 1e-14);
        assert!((l[(0, 0)] - a * a).norm() < 1e-14);

        let one = enumerate_basis(2, 1).unwrap();
        assert!((lift_matrix(&m, &one).unwrap() - &m).camax() < 1e-15);
        let id = lift_matrix(&CMatrix::identity(3, 3), &enumerate_basis(3, 3).unwrap()).unwrap();
        assert!((id - CMatrix::identity(10, 10)).camax() < 1e-15);
    }

    #[test]
    fn mixture_purity() {
        let v = CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]);
        let dark = mode_power_state(&v, 2).unwrap();
        let bright = PureState::occupation(&[2, 0]).unwrap();
        let rho = mix(&[(0.6, bright.clone()), (0.4, dark.clone())]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let purity = (&rho.matrix * &rho.matrix).trace().re;
        // p² + (1-p)² + 2p(1-p)|⟨ψ₁|ψ_d⟩|² with overlap 1/2
        let overlap = bright.overlap(&dark).unwrap().norm_sqr();
        assert!((overlap - 0.25).abs() < 1e-15);
        assert!((purity - (0.36 + 0.16 + 2.0 * 0.24 * 0.25)).abs() < 1e-15);
        assert!((purity - 0.64).abs() < 1e-12);

        assert!(matches!(mix(&[(0.5, bright.clone())]), Err(Error::InvalidWeights(_))));
        let other = PureState::occupation(&[1, 0]).unwrap();
        assert!(matches!(mix(&[(0.5, bright), (0.5, other)]), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn restrict_and_embed() {
        let psi = PureState::occupation(&[1, 1]).unwrap();
        let rho = psi.to_density();
        let stacked = Arc::new(FockBasis::stacked(2, 2).unwrap());
        let big = rho.embed_into(stacked).unwrap();
        assert_eq!(big.matrix[(4, 4)], c(1.0, 0.0));
        let back = big.restrict_to(psi.basis.clone()).unwrap();
        assert_eq!(back, rho);
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| cmatrix(n, &v))
    }

    fn unitary_from(m: &CMatrix) -> CMatrix {
        // Cayley transform of the anti-Hermitian part
        let n = m.nrows();
        let k = (m - m.adjoint()) * c(0.5, 0.0);
        let id = CMatrix::identity(n, n);
        (&id - &k).try_inverse().unwrap() * (&id + &k)
    }

    proptest! {
        #[test]
        fn ryser_matches_permutation_sum(n in 1usize..=4, seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let m = cmatrix(n, &seed[..n * n]);
            prop_assert!((permanent(&m).unwrap() - naive_permanent(&m)).norm() < 1e-12);
        }

        #[test]
        fn lift_is_homomorphism(a in arb_matrix(3), b in arb_matrix(3), n in 1usize..=3) {
            let basis = enumerate_basis(3, n).unwrap();
            let lhs = lift_matrix(&(&a * &b), &basis).unwrap();
            let rhs = lift_matrix(&a, &basis).unwrap() * lift_matrix(&b, &basis).unwrap();
            prop_assert!((lhs - rhs).camax() < 1e-9);
        }

        #[test]
        fn lift_preserves_unitarity(a in arb_matrix(3), n in 1usize..=3) {
            let u = unitary_from(&a);
            let basis = enumerate_basis(3, n).unwrap();
            let l = lift_matrix(&u, &basis).unwrap();
            let d = basis.len();
            prop_assert!((&l * l.adjoint() - CMatrix::identity(d, d)).camax() < 1e-9);
        }

        #[test]
        fn dressed_mode_matches_lifted_unitary(a in arb_matrix(3), n in 1usize..=3) {
            // any unitary whose first column is c sends |N,0,0⟩ to the dressed state
            let u = unitary_from(&a);
            let col: CVector = u.column(0).into_owned();
            let psi = mode_power_state(&col, n).unwrap();
            let basis = enumerate_basis(3, n).unwrap();
            let l = lift_matrix(&u, &basis).unwrap();
            let mut e0 = CVector::zeros(basis.len());
            e0[0] = c(1.0, 0.0);
            prop_assert!((l * e0 - psi.amplitudes).camax() < 1e-9);
        }
    }
}
