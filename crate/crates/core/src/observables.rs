//! Scalar diagnostics of the evolving conditional state.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::EngineKind;
use crate::fock_space::{DensityMatrix, PureState};
use crate::C64;

/// Sampled observables of a sweep along the propagation length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionResult {
    pub z_values: Vec<f64>,
    pub purity: Vec<f64>,
    /// `Tr|ρ − ρ_target|` without the conventional factor 1/2.
    pub trace_distance: Vec<f64>,
    pub success_probability: Vec<f64>,
    pub engine: EngineKind,
    pub target_label: String,
}

impl EvolutionResult {
    pub fn empty(engine: EngineKind, target_label: impl Into<String>) -> Self {
        EvolutionResult {
            z_values: Vec::new(),
            purity: Vec::new(),
            trace_distance: Vec::new(),
            success_probability: Vec::new(),
            engine,
            target_label: target_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    /// The conventional `½·Tr|ρ − σ|`.
    pub fn trace_distance_half(&self) -> Vec<f64> {
        self.trace_distance.iter().map(|d| 0.5 * d).collect()
    }
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let p: C64 = rho.matrix.component_mul(&rho.matrix.transpose()).sum();
    debug_assert!(p.im.abs() < 1e-12, "purity has imaginary residue {}", p.im);
    p.re
}

/// `Tr sqrt((ρ − σ)²)`, the sum of absolute eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if !rho.basis.same_as(&sigma.basis) {
        return Err(Error::BasisMismatch("trace distance between different bases".into()));
    }
    let diff = &rho.matrix - &sigma.matrix;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if !rho.basis.same_as(&psi.basis) {
        return Err(Error::BasisMismatch("fidelity between different bases".into()));
    }
    let v = &psi.amplitudes;
    let f = v.dotc(&(&rho.matrix * v)).re;
    Ok(f.clamp(0.0, 1.0))
}

/// Smallest sampled `z` from which the trace distance stays within
/// `epsilon` for the rest of the sweep.
pub fn convergence_length(result: &EvolutionResult, epsilon: f64) -> Option<f64> {
    let d = &result.trace_distance;
    let first_after_last_miss = match d.iter().rposition(|&x| x > epsilon) {
        Some(i) => i + 1,
        None => 0,
    };
    result.z_values.get(first_after_last_miss).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_space::{enumerate_basis, mix, mode_power_state};
    use crate::{CMatrix, CVector};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dimer_states() -> (PureState, PureState) {
        let v = CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]);
        (PureState::occupation(&[2, 0]).unwrap(), mode_power_state(&v, 2).unwrap())
    }

    #[test]
    fn purity_limits() {
        let (bright, dark) = dimer_states();
        assert!((purity(&dark.to_density()) - 1.0).abs() < 1e-14);
        let basis = Arc::new(enumerate_basis(3, 2).unwrap());
        let mixed = DensityMatrix::new(basis, CMatrix::identity(6, 6) / c(6.0, 0.0)).unwrap();
        assert!((purity(&mixed) - 1.0 / 6.0).abs() < 1e-15);
        let rho = mix(&[(0.6, bright), (0.4, dark)]).unwrap();
        assert!((purity(&rho) - 0.64).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_values() {
        let (bright, dark) = dimer_states();
        let rd = dark.to_density();
        assert!(trace_distance(&rd, &rd).unwrap().abs() < 1e-14);
        let a = PureState::occupation(&[2, 0]).unwrap().to_density();
        let b = PureState::occupation(&[0, 2]).unwrap().to_density();
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-14);

        // 0.6(|ψ₁⟩⟨ψ₁| − |ψ_d⟩⟨ψ_d|) has eigenvalues ±0.6·sqrt(1 − 1/4)
        let rho = mix(&[(0.6, bright), (0.4, dark)]).unwrap();
        let want = 0.6 * 3f64.sqrt();
        assert!((trace_distance(&rho, &rd).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.0392304845413263).abs() < 1e-15);

        let other = PureState::occupation(&[1, 0]).unwrap().to_density();
        assert!(trace_distance(&a, &other).is_err());
    }

    #[test]
    fn fidelity_values() {
        let (bright, dark) = dimer_states();
        assert!((fidelity_to_pure(&dark.to_density(), &dark).unwrap() - 1.0).abs() < 1e-14);
        let orth = PureState::occupation(&[0, 2]).unwrap();
        assert!(fidelity_to_pure(&PureState::occupation(&[2, 0]).unwrap().to_density(), &orth).unwrap() < 1e-15);
        let rho = mix(&[(0.6, bright), (0.4, dark.clone())]).unwrap();
        assert!((fidelity_to_pure(&rho, &dark).unwrap() - 0.55).abs() < 1e-12);
    }

    fn result_with(d: Vec<f64>) -> EvolutionResult {
        let n = d.len();
        EvolutionResult {
            z_values: (0..n).map(|i| i as f64 * 0.5).collect(),
            purity: vec![1.0; n],
            trace_distance: d,
            success_probability: vec![1.0; n],
            engine: EngineKind::MarkovNoJump,
            target_label: "dark(1)".into(),
        }
    }

    #[test]
    fn convergence() {
        assert_eq!(convergence_length(&result_with(vec![0.0; 5]), 0.05), Some(0.0));
        assert_eq!(convergence_length(&result_with(vec![1.0; 5]), 0.05), None);
        assert_eq!(convergence_length(&result_with(vec![1.0, 0.01, 0.2, 0.04, 0.01]), 0.05), Some(1.5));
        assert_eq!(convergence_length(&result_with(vec![]), 0.05), None);
    }

    fn arb_density() -> impl Strategy<Value = DensityMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9).prop_map(|v| {
            let g = CMatrix::from_iterator(3, 3, v.into_iter().map(|(a, b)| c(a, b)));
            let mut m = &g * g.adjoint();
            let t = m.trace();
            m /= t;
            DensityMatrix::new(Arc::new(enumerate_basis(3, 1).unwrap()), m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn trace_distance_is_a_metric(a in arb_density(), b in arb_density(), c in arb_density()) {
            let ab = trace_distance(&a, &b).unwrap();
            let ba = trace_distance(&b, &a).unwrap();
            let ac = trace_distance(&a, &c).unwrap();
            let cb = trace_distance(&c, &b).unwrap();
            prop_assert!((-1e-12..=2.0 + 1e-12).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn unit_purity_iff_pure(a in arb_density()) {
            let top = SymmetricEigen::new(a.matrix.clone()).eigenvalues.max();
            let p = purity(&a);
            prop_assert!(p <= 1.0 + 1e-12);
            prop_assert_eq!((p - 1.0).abs() < 1e-9, (top - 1.0).abs() < 1e-9);
        }
    }
}
