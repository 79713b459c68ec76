//! Born–Markov effective models: the non-Hermitian Hamiltonian
//! `H_eff = J − iγ/2` seen by the system waveguides once the bath is traced
//! out, its spectrum, and the dark states it supports.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Schur};
use crate::error::{Error, Result};
use crate::lattice_network::{NetworkSpec, Topology};
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    /// `coherent − i·dissipative/2`.
    pub matrix: CMatrix,
    pub coherent: DMatrix<f64>,
    pub dissipative: DMatrix<f64>,
    /// Bloch wavenumber of the bath modes resonant with the bias.
    pub k0: f64,
    /// `1/sqrt(4J² − Ω²)`.
    pub spectral_factor: f64,
}

impl EffectiveHamiltonian {
    fn assemble(coherent: DMatrix<f64>, dissipative: DMatrix<f64>, k0: f64, spectral_factor: f64) -> Self {
        let matrix = CMatrix::from_fn(coherent.nrows(), coherent.ncols(), |i, j| {
            C64::new(coherent[(i, j)], -0.5 * dissipative[(i, j)])
        });
        EffectiveHamiltonian { matrix, coherent, dissipative, k0, spectral_factor }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry modulus, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        matrix_scale(&self.matrix)
    }

    /// Default dark-eigenvalue threshold: `1e-8` of the largest entry.
    pub fn default_dark_tolerance(&self) -> f64 {
        1e-8 * self.scale()
    }
}

fn matrix_scale(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn band_parameters(bath_coupling: f64, bias: f64) -> (f64, f64) {
    let s = (4.0 * bath_coupling * bath_coupling - bias * bias).sqrt();
    let k0 = -FRAC_PI_2 + (bias / s).atan();
    (k0, 1.0 / s)
}

/// Two waveguides at the end of a semi-infinite lattice. Each loses photons
/// at `γ = 2κ²/J` and the common bath couples them dissipatively.
pub fn effective_dimer(spec: &NetworkSpec) -> Result<EffectiveHamiltonian> {
    if spec.topology != Topology::DimerEdgeCoupled {
        return Err(Error::WrongTopology { expected: "dimer_edge_coupled" });
    }
    spec.validate()?;
    let j = spec.bath_coupling;
    let k = &spec.kappas;
    let coherent = DMatrix::from_row_slice(2, 2, &[spec.omegas[0], spec.delta, spec.delta, spec.omegas[1]]);
    // end-site Green's function of the lattice at band center is -i/J
    let dissipative = DMatrix::from_fn(2, 2, |a, b| 2.0 * k[a] * k[b] / j);
    let (k0, sf) = band_parameters(j, 0.0);
    Ok(EffectiveHamiltonian::assemble(coherent, dissipative, k0, sf))
}

/// Side-coupled waveguides: couplings mediated by the bath mode of
/// wavenumber `k0`, with `2J cos k0 = Ω`.
pub fn effective_network(spec: &NetworkSpec) -> Result<EffectiveHamiltonian> {
    if spec.topology != Topology::SideCoupledChain {
        return Err(Error::WrongTopology { expected: "side_coupled_chain" });
    }
    spec.validate()?;
    let j = spec.bath_coupling;
    if !(spec.bias.abs() < 2.0 * j) {
        return Err(Error::OutOfBand { what: "bias", value: spec.bias, limit: 2.0 * j });
    }
    let (k0, sf) = band_parameters(j, spec.bias);
    let m = spec.system_count();
    let (k, n) = (&spec.kappas, &spec.attach_sites);
    let phase = |a: usize, b: usize| k0 * n[a].abs_diff(n[b]) as f64;
    let coherent = DMatrix::from_fn(m, m, |a, b| {
        let diag = if a == b { spec.omegas[a] } else { 0.0 };
        diag + sf * k[a] * k[b] * phase(a, b).sin()
    });
    let dissipative = DMatrix::from_fn(m, m, |a, b| 2.0 * sf * k[a] * k[b] * phase(a, b).cos());
    Ok(EffectiveHamiltonian::assemble(coherent, dissipative, k0, sf))
}

/// Builds whichever effective model matches the topology.
pub fn effective_model(spec: &NetworkSpec) -> Result<EffectiveHamiltonian> {
    match spec.topology {
        Topology::DimerEdgeCoupled => effective_dimer(spec),
        Topology::SideCoupledChain => effective_network(spec),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateCertificate {
    /// Unit-norm mode coefficients of the dark creation operator.
    pub vector: CVector,
    pub eigenvalue: C64,
    pub residual_im: f64,
    pub condition_met: bool,
    /// Set when the eigenvalue's algebraic multiplicity exceeds its
    /// geometric multiplicity.
    pub defective: bool,
}

impl DarkStateCertificate {
    fn new(vector: CVector, eigenvalue: C64, condition_met: bool, defective: bool) -> Self {
        DarkStateCertificate {
            vector,
            eigenvalue,
            residual_im: eigenvalue.im.abs(),
            condition_met,
            defective,
        }
    }
}

fn adjacent_trimer(spec: &NetworkSpec) -> Result<()> {
    let n = &spec.attach_sites;
    if spec.topology != Topology::SideCoupledChain
        || spec.system_count() != 3
        || n.len() != 3
        || n[1] != n[0] + 1
        || n[2] != n[1] + 1
    {
        return Err(Error::WrongTopology { expected: "side-coupled trimer with adjacent attachments" });
    }
    Ok(())
}

/// `ω₃ = ω₁` and `ω₂ = ω₁ − κ₂²/ω₁`, each within `1e-9·|ω₁|`.
pub fn dark_condition_trimer(spec: &NetworkSpec) -> Result<bool> {
    adjacent_trimer(spec)?;
    spec.validate()?;
    let w = &spec.omegas;
    if w[0] == 0.0 {
        return Err(Error::Degenerate("ω₁ = 0 in the trimer dark condition".into()));
    }
    let tol = 1e-9 * w[0].abs();
    let k2 = spec.kappas[1];
    Ok((w[2] - w[0]).abs() <= tol && (w[1] - (w[0] - k2 * k2 / w[0])).abs() <= tol)
}

/// Dressed dark mode `∝ (1, −κ₁ω₁/(Jκ₂), κ₁/κ₃)` of the adjacent trimer,
/// certified against the Markov effective Hamiltonian.
pub fn dark_vector_trimer(spec: &NetworkSpec) -> Result<DarkStateCertificate> {
    if !dark_condition_trimer(spec)? {
        return Err(Error::DarkConditionNotMet("ω₃ = ω₁ and ω₂ = ω₁ − κ₂²/ω₁ required".into()));
    }
    let (k, w1, j) = (&spec.kappas, spec.omegas[0], spec.bath_coupling);
    if k[1] == 0.0 || k[2] == 0.0 {
        return Err(Error::Degenerate("κ₂ and κ₃ must be non-zero".into()));
    }
    let raw = CVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(-k[0] * w1 / (j * k[1]), 0.0),
        C64::new(k[0] / k[2], 0.0),
    ]);
    let vector = raw.normalize();
    let h = effective_network(spec)?;
    let eigenvalue = (vector.adjoint() * &h.matrix * &vector)[(0, 0)];
    let residual = (&h.matrix * &vector - &vector * eigenvalue).norm();
    if residual > 1e-10 * h.scale().max(1.0) {
        return Err(Error::DarkConditionNotMet(format!(
            "dressed mode is not an eigenvector of H_eff (residual {residual:e}); is the bias equal to ω₁?"
        )));
    }
    Ok(DarkStateCertificate::new(vector, eigenvalue, true, false))
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn spectrum(matrix: &CMatrix) -> Result<Vec<C64>> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

/// True when the spectrum is invariant under `λ ↔ −λ*` within `tol`.
pub fn apt_symmetry_check(matrix: &CMatrix, tol: f64) -> Result<bool> {
    let values = spectrum(matrix)?;
    let mut mirrored: Vec<Option<C64>> = values.iter().map(|l| Some(-l.conj())).collect();
    for l in &values {
        let hit = mirrored
            .iter_mut()
            .find(|m| m.is_some_and(|m| (m - l).norm() <= tol));
        match hit {
            Some(slot) => *slot = None,
            None => return Ok(false),
        }
    }
    Ok(true)
}

/// Fixes the global phase so the first non-negligible entry is real and
/// positive.
pub(crate) fn fix_phase(v: &CVector) -> CVector {
    let lead = v.iter().find(|c| c.norm() > 1e-9).copied();
    match lead {
        Some(c) => v * (c.conj() / c.norm()),
        None => v.clone(),
    }
}

/// All eigenpairs of `matrix` with `|Im λ| < tol`. Each distinct eigenvalue
/// contributes one certificate per independent eigenvector.
pub fn dark_search(matrix: &CMatrix, tol: f64) -> Result<Vec<DarkStateCertificate>> {
    let n = matrix.nrows();
    let values = spectrum(matrix)?;
    let scale = matrix_scale(matrix).max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-6 * scale;
    let null_tol = 1e-6 * scale;

    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for l in values {
        match clusters.iter_mut().find(|c| (c[0] - l).norm() <= cluster_tol) {
            Some(c) => c.push(l),
            None => clusters.push(vec![l]),
        }
    }

    let mut out = Vec::new();
    for cluster in clusters {
        let lambda = cluster.iter().sum::<C64>() / cluster.len() as f64;
        if lambda.im.abs() >= tol {
            continue;
        }
        let shifted = matrix - CMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
        let sv = &svd.singular_values;
        let mut null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= null_tol).collect();
        if null.is_empty() {
            let imin = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
            null.push(imin);
        }
        let defective = cluster.len() > null.len();
        for i in null {
            let v: CVector = v_t.row(i).adjoint();
            let v = fix_phase(&v.normalize());
            let eigenvalue = (v.adjoint() * matrix * &v)[(0, 0)];
            out.push(DarkStateCertificate::new(v, eigenvalue, eigenvalue.im.abs() < tol, defective));
        }
    }
    Ok(out)
}

/// Unit dark-mode coefficients for `spec`: the closed-form modes for the
/// dimer and the conditioned trimer, otherwise the unique dark eigenvector
/// of the effective Hamiltonian.
pub fn dark_mode(spec: &NetworkSpec, tol: Option<f64>) -> Result<CVector> {
    if spec.topology == Topology::DimerEdgeCoupled
        && spec.kappas[0] == spec.kappas[1]
        && spec.omegas[0] == spec.omegas[1]
    {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        return Ok(CVector::from_vec(vec![C64::new(s, 0.0), C64::new(-s, 0.0)]));
    }
    if adjacent_trimer(spec).is_ok() && spec.omegas[0] != 0.0 && dark_condition_trimer(spec)? {
        if let Ok(cert) = dark_vector_trimer(spec) {
            return Ok(cert.vector);
        }
    }
    let h = effective_model(spec)?;
    let certs = dark_search(&h.matrix, tol.unwrap_or_else(|| h.default_dark_tolerance()))?;
    match certs.as_slice() {
        [one] => Ok(one.vector.clone()),
        [] => Err(Error::DarkConditionNotMet("effective Hamiltonian has no real eigenvalue".into())),
        _ => Err(Error::DarkConditionNotMet(format!(
            "{} dark modes found; the target is ambiguous",
            certs.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn fig2_spec() -> NetworkSpec {
        let w1 = SQRT_2 * 10.0;
        NetworkSpec::side_coupled(10.0, vec![2.0; 3], vec![w1, w1 - 4.0 / w1, w1], w1, vec![1, 2, 3], 100)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimer_matrix() {
        let h = effective_dimer(&NetworkSpec::dimer(5.4, 2.0, 1.0, 50)).unwrap();
        let g = 8.0 / 5.4;
        assert!((g - 1.4814814814814814_f64).abs() < 1e-15);
        let want = [c(0.0, -g / 2.0), c(1.0, -g / 2.0), c(1.0, -g / 2.0), c(0.0, -g / 2.0)];
        for (got, w) in h.matrix.transpose().iter().zip(want) {
            assert!((got - w).norm() < 1e-15);
        }
        assert!((h.matrix[(0, 0)].im + 0.7407407407407407).abs() < 1e-15);
    }

    #[test]
    fn dimer_rejects_network_topology() {
        assert!(matches!(effective_dimer(&fig2_spec()), Err(Error::WrongTopology { .. })));
        assert!(matches!(
            effective_network(&NetworkSpec::dimer(5.4, 2.0, 1.0, 50)),
            Err(Error::WrongTopology { .. })
        ));
    }

    #[test]
    fn trimer_bloch_wavenumber() {
        let h = effective_network(&fig2_spec()).unwrap();
        assert!((h.k0 + FRAC_PI_4).abs() < 1e-15);
        assert!((2.0 * 10.0 * h.k0.cos() - SQRT_2 * 10.0).abs() < 1e-12);
        assert_eq!(h.coherent, h.coherent.transpose());
        assert_eq!(h.dissipative, h.dissipative.transpose());
    }

    #[test]
    fn out_of_band_bias_rejected() {
        let mut s = fig2_spec();
        s.bias = 20.0;
        assert!(matches!(effective_network(&s), Err(Error::OutOfBand { .. })));
    }

    #[test]
    fn uncoupled_network_is_diagonal() {
        let mut s = fig2_spec();
        s.kappas = vec![0.0; 3];
        let h = effective_network(&s).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { s.omegas[a] } else { 0.0 };
                assert_eq!(h.matrix[(a, b)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn trimer_condition() {
        assert!(dark_condition_trimer(&fig2_spec()).unwrap());
        let mut s = fig2_spec();
        s.omegas[2] += 0.1;
        assert!(!dark_condition_trimer(&s).unwrap());
        let mut s = fig2_spec();
        s.omegas[1] = s.omegas[0];
        assert!(!dark_condition_trimer(&s).unwrap());
        s.kappas[1] = 0.0;
        assert!(dark_condition_trimer(&s).unwrap());
        let mut s = fig2_spec();
        s.attach_sites = vec![1, 2, 4];
        assert!(dark_condition_trimer(&s).is_err());
    }

    #[test]
    fn trimer_vector_closed_form() {
        let cert = dark_vector_trimer(&fig2_spec()).unwrap();
        let want = [0.5, -SQRT_2 / 2.0, 0.5];
        for (g, w) in cert.vector.iter().zip(want) {
            assert!((g - c(w, 0.0)).norm() < 1e-14);
        }
        assert!(cert.residual_im < 1e-10);
        assert!((cert.eigenvalue.re - SQRT_2 * 10.0).abs() < 1e-10);
    }

    #[test]
    fn trimer_vector_unequal_kappas() {
        let w1 = SQRT_2 * 10.0;
        let s = NetworkSpec::side_coupled(
            10.0,
            vec![1.0, 2.0, 1.0],
            vec![w1, w1 - 4.0 / w1, w1],
            w1,
            vec![5, 6, 7],
            100,
        );
        let cert = dark_vector_trimer(&s).unwrap();
        let mid = -w1 / 20.0;
        let norm = (2.0 + mid * mid).sqrt();
        assert!((mid + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((norm - 1.5811388300841898).abs() < 1e-15);
        for (g, w) in cert.vector.iter().zip([1.0 / norm, mid / norm, 1.0 / norm]) {
            assert!((g - c(w, 0.0)).norm() < 1e-14);
        }
        assert!(cert.residual_im < 1e-10);
    }

    #[test]
    fn trimer_vector_requires_condition() {
        let mut s = fig2_spec();
        s.omegas[1] = s.omegas[0];
        assert!(matches!(dark_vector_trimer(&s), Err(Error::DarkConditionNotMet(_))));
        let mut s = fig2_spec();
        s.omegas = vec![0.0, 0.0, 0.0];
        s.bias = 0.0;
        assert!(matches!(dark_vector_trimer(&s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hermitian_spectrum_is_real() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 0.0), c(0.5, 0.2), c(0.0, 0.0), c(0.5, -0.2), c(-1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.3, 0.0), c(2.0, 0.0)],
        );
        let s = spectrum(&m).unwrap();
        assert!(s.iter().all(|l| l.im.abs() < 1e-12));
        assert!(s.windows(2).all(|w| w[0].re <= w[1].re));
    }

    #[test]
    fn apt_dimer() {
        let h0 = effective_dimer(&NetworkSpec::dimer(5.4, 2.0, 0.0, 50)).unwrap();
        assert!(apt_symmetry_check(&h0.matrix, 1e-9).unwrap());
        let h1 = effective_dimer(&NetworkSpec::dimer(5.4, 2.0, 1.0, 50)).unwrap();
        assert!(!apt_symmetry_check(&h1.matrix, 1e-9).unwrap());
    }

    #[test]
    fn dark_search_dimer_and_lossy() {
        let h = effective_dimer(&NetworkSpec::dimer(5.4, 2.0, 1.0, 50)).unwrap();
        let certs = dark_search(&h.matrix, 1e-8).unwrap();
        assert_eq!(certs.len(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((certs[0].vector[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((certs[0].vector[1] - c(-s, 0.0)).norm() < 1e-12);
        assert!((certs[0].eigenvalue - c(-1.0, 0.0)).norm() < 1e-12);

        let lossy = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, -1.0), c(0.0, -2.0)]));
        assert!(dark_search(&lossy, 1e-8).unwrap().is_empty());
    }

    #[test]
    fn dark_search_degenerate_and_defective() {
        let two = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)]));
        let certs = dark_search(&two, 1e-8).unwrap();
        assert_eq!(certs.len(), 2);
        assert!(certs.iter().all(|c| !c.defective));

        let jordan = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let certs = dark_search(&jordan, 1e-6).unwrap();
        assert_eq!(certs.len(), 1);
        assert!(certs[0].defective);
        assert!((certs[0].vector[0].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dark_mode_resolution() {
        let d = dark_mode(&NetworkSpec::dimer(5.4, 2.0, 1.0, 50), None).unwrap();
        assert!((d[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let t = dark_mode(&fig2_spec(), None).unwrap();
        assert!((t[1].re + SQRT_2 / 2.0).abs() < 1e-14);
    }
}
