//! Single-particle description of the full waveguide network: system
//! waveguides plus a truncated tight-binding bath.
//!
//! Mode amplitudes obey `i da/dz = H a`, so the propagator is
//! `U(z) = exp(-iHz)`. With this sign the antisymmetric dimer mode
//! `(1, -1)/sqrt(2)` has eigenvalue `-Δ` and picks up the phase `e^{+iΔz}`.
//!
//! Indices `0..M` of `H` are the system waveguides, `M..M+L` the bath sites.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Extra sites kept beyond the light cone when sizing the bath.
const BATH_PADDING: usize = 20;
/// Minimum clearance, in sites, beyond `J·z` between an attached bath site
/// and a truncated lattice edge.
const LIGHT_CONE_SLACK: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Two coupled waveguides both attached to the end site of a
    /// semi-infinite lattice.
    DimerEdgeCoupled,
    /// `M` waveguides side-coupled to an infinite lattice at sites `n_α`.
    /// The lattice is truncated to `L` sites centered on the attachment span.
    SideCoupledChain,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::DimerEdgeCoupled => "dimer_edge_coupled",
            Topology::SideCoupledChain => "side_coupled_chain",
        }
    }
}

/// Geometry and couplings of a system + bath network. All couplings are in
/// inverse length units (cm⁻¹ in the presets).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub topology: Topology,
    /// Nearest-neighbor coupling of the bath lattice.
    #[serde(rename = "J")]
    pub bath_coupling: f64,
    pub kappas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Uniform detuning bias used by the Markov couplings.
    pub bias: f64,
    /// 1-based lattice coordinates of the attachment sites.
    pub attach_sites: Vec<usize>,
    /// Direct coupling between the two dimer waveguides.
    pub delta: f64,
    pub bath_sites: usize,
}

impl NetworkSpec {
    pub fn dimer(bath_coupling: f64, kappa: f64, delta: f64, bath_sites: usize) -> Self {
        NetworkSpec {
            topology: Topology::DimerEdgeCoupled,
            bath_coupling,
            kappas: vec![kappa, kappa],
            omegas: vec![0.0, 0.0],
            bias: 0.0,
            attach_sites: vec![1, 1],
            delta,
            bath_sites,
        }
    }

    pub fn side_coupled(
        bath_coupling: f64,
        kappas: Vec<f64>,
        omegas: Vec<f64>,
        bias: f64,
        attach_sites: Vec<usize>,
        bath_sites: usize,
    ) -> Self {
        NetworkSpec {
            topology: Topology::SideCoupledChain,
            bath_coupling,
            kappas,
            omegas,
            bias,
            attach_sites,
            delta: 0.0,
            bath_sites,
        }
    }

    pub fn system_count(&self) -> usize {
        self.kappas.len()
    }

    /// Every violated invariant, in a fixed order.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let m = self.system_count();
        let j = self.bath_coupling;
        if !(j.is_finite() && j > 0.0) {
            out.push(Error::InvalidNetwork(format!("J must be positive, got {j}")));
        }
        if m == 0 {
            out.push(Error::InvalidNetwork("at least one system waveguide is required".into()));
        }
        if self.bath_sites == 0 {
            out.push(Error::InvalidNetwork("bath_sites must be at least 1".into()));
        }
        for (a, &k) in self.kappas.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                out.push(Error::InvalidNetwork(format!("kappas[{a}] must be non-negative, got {k}")));
            }
        }
        if self.omegas.len() != m {
            out.push(Error::LengthMismatch { list: "omegas", expected: m, found: self.omegas.len() });
        }
        if j > 0.0 {
            for &w in &self.omegas {
                if !(w.abs() < 2.0 * j) {
                    out.push(Error::OutOfBand { what: "omega", value: w, limit: 2.0 * j });
                }
            }
        }
        if !self.bias.is_finite() || !self.delta.is_finite() {
            out.push(Error::InvalidNetwork("bias and delta must be finite".into()));
        }
        match self.topology {
            Topology::DimerEdgeCoupled => {
                if m != 2 {
                    out.push(Error::LengthMismatch { list: "kappas", expected: 2, found: m });
                }
                if !self.attach_sites.is_empty() && self.attach_sites != [1, 1] {
                    out.push(Error::InvalidNetwork(
                        "dimer waveguides both attach to bath site 1".into(),
                    ));
                }
            }
            Topology::SideCoupledChain => {
                if self.attach_sites.len() != m {
                    out.push(Error::LengthMismatch {
                        list: "attach_sites",
                        expected: m,
                        found: self.attach_sites.len(),
                    });
                } else if m > 0 {
                    if self.attach_sites.windows(2).any(|w| w[1] <= w[0]) {
                        out.push(Error::InvalidNetwork(
                            "attach sites must be strictly increasing".into(),
                        ));
                    }
                    if let Some(&first) = self.attach_sites.first() {
                        if first == 0 {
                            out.push(Error::AttachSiteOutOfRange { site: 0, bath_sites: self.bath_sites });
                        }
                    }
                    let last = *self.attach_sites.last().unwrap();
                    if last > self.bath_sites || self.span() > self.bath_sites {
                        out.push(Error::AttachSiteOutOfRange { site: last, bath_sites: self.bath_sites });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn span(&self) -> usize {
        match (self.attach_sites.first(), self.attach_sites.last()) {
            (Some(&a), Some(&b)) if b >= a => b - a + 1,
            _ => 0,
        }
    }

    /// Bath index (0-based, within the bath block) of each attachment.
    fn bath_positions(&self) -> Vec<usize> {
        match self.topology {
            Topology::DimerEdgeCoupled => vec![0; self.system_count()],
            Topology::SideCoupledChain => {
                let first = self.attach_sites[0];
                let offset = (self.bath_sites - self.span()) / 2;
                self.attach_sites.iter().map(|&n| n - first + offset).collect()
            }
        }
    }

    /// Distance in sites from the attachments to the nearest truncated edge.
    pub fn edge_clearance(&self) -> usize {
        let pos = self.bath_positions();
        let last = self.bath_sites - 1;
        match self.topology {
            Topology::DimerEdgeCoupled => last,
            Topology::SideCoupledChain => {
                let lo = *pos.iter().min().unwrap_or(&0);
                let hi = *pos.iter().max().unwrap_or(&0);
                lo.min(last - hi)
            }
        }
    }

    /// Checks that no reflection from a truncated bath edge can return to
    /// the system before `z`.
    pub fn check_light_cone(&self, z: f64) -> Result<()> {
        let required = (self.bath_coupling * z).ceil() as usize + LIGHT_CONE_SLACK;
        let available = self.edge_clearance();
        if available < required {
            return Err(Error::LightCone { bath_sites: self.bath_sites, z, required, available });
        }
        Ok(())
    }
}

/// Bath length that keeps edge reflections outside the light cone up to
/// `z_max`: the maximum group velocity is `2J`.
pub fn default_bath_sites(bath_coupling: f64, z_max: f64) -> usize {
    (2.0 * bath_coupling * z_max * 1.5).ceil() as usize + BATH_PADDING
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    /// Real symmetric coupling matrix, `(M+L)×(M+L)`.
    pub matrix: DMatrix<f64>,
    pub system_indices: Vec<usize>,
    /// Full-matrix index of the bath site each system waveguide couples to.
    pub attach_indices: Vec<usize>,
    pub topology: Topology,
}

impl SingleParticleHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn system_count(&self) -> usize {
        self.system_indices.len()
    }

    pub fn complex(&self) -> CMatrix {
        self.matrix.map(|x| C64::new(x, 0.0))
    }
}

pub fn build_hamiltonian(spec: &NetworkSpec) -> Result<SingleParticleHamiltonian> {
    spec.validate()?;
    let m = spec.system_count();
    let l = spec.bath_sites;
    let n = m + l;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (a, &w) in spec.omegas.iter().enumerate() {
        h[(a, a)] = w;
    }
    for s in 0..l.saturating_sub(1) {
        h[(m + s, m + s + 1)] = spec.bath_coupling;
        h[(m + s + 1, m + s)] = spec.bath_coupling;
    }
    let attach_indices: Vec<usize> = spec.bath_positions().into_iter().map(|p| m + p).collect();
    for (a, (&k, &b)) in spec.kappas.iter().zip(&attach_indices).enumerate() {
        h[(a, b)] = k;
        h[(b, a)] = k;
    }
    if spec.topology == Topology::DimerEdgeCoupled {
        h[(0, 1)] = spec.delta;
        h[(1, 0)] = spec.delta;
    }
    Ok(SingleParticleHamiltonian {
        matrix: h,
        system_indices: (0..m).collect(),
        attach_indices,
        topology: spec.topology,
    })
}

/// `exp(-iHz)` for many `z` from a single eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    system_indices: Vec<usize>,
}

impl Propagator {
    pub fn new(h: &SingleParticleHamiltonian) -> Self {
        let eig = SymmetricEigen::new(h.matrix.clone());
        Propagator {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            system_indices: h.system_indices.clone(),
        }
    }

    fn phases(&self, z: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * z)).collect()
    }

    /// Rows and columns `rows`, `cols` of `U(z) = V e^{-iΛz} Vᵀ`.
    fn block(&self, z: f64, rows: &[usize], cols: &[usize]) -> CMatrix {
        let phases = self.phases(z);
        let v = &self.eigenvectors;
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (r, c) = (rows[i], cols[j]);
            phases
                .iter()
                .enumerate()
                .map(|(k, p)| p * (v[(r, k)] * v[(c, k)]))
                .sum()
        })
    }

    pub fn at(&self, z: f64) -> CMatrix {
        let all: Vec<usize> = (0..self.eigenvalues.len()).collect();
        self.block(z, &all, &all)
    }

    /// System block `A(z)` without forming the full propagator.
    pub fn system_block_at(&self, z: f64) -> CMatrix {
        self.block(z, &self.system_indices, &self.system_indices)
    }
}

pub fn propagator(h: &SingleParticleHamiltonian, z: f64) -> CMatrix {
    Propagator::new(h).at(z)
}

/// Restriction of the propagator to the system waveguides: the amplitude
/// map for photons that never reach the bath at the output plane.
pub fn system_block(u: &CMatrix, system_indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(system_indices.len(), system_indices.len(), |i, j| {
        u[(system_indices[i], system_indices[j])]
    })
}

/// Bath amplitudes attached to a system vector before testing it as an
/// eigenvector of the full network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStateTail {
    /// No bath amplitude.
    Empty,
    /// Adjacent side-coupled trimer: amplitude `-κ₁c₁/J` on the middle
    /// attachment site, zero elsewhere. This is the only bath amplitude
    /// compatible with the eigenvalue equations at the outer attachments.
    TrimerForced,
}

/// `‖Hṽ − Eṽ‖₂` for the normalized embedding `ṽ` of `v_sys` plus `tail`.
pub fn bound_state_residual(
    h: &SingleParticleHamiltonian,
    v_sys: &CVector,
    energy: f64,
    tail: BoundStateTail,
) -> Result<f64> {
    let m = h.system_count();
    if v_sys.len() != m {
        return Err(Error::LengthMismatch { list: "v_sys", expected: m, found: v_sys.len() });
    }
    let mut full = CVector::zeros(h.dim());
    for (a, &idx) in h.system_indices.iter().enumerate() {
        full[idx] = v_sys[a];
    }
    if tail == BoundStateTail::TrimerForced {
        let adjacent = h.attach_indices.len() == 3
            && h.attach_indices[1] == h.attach_indices[0] + 1
            && h.attach_indices[2] == h.attach_indices[1] + 1;
        if h.topology != Topology::SideCoupledChain || !adjacent {
            return Err(Error::WrongTopology { expected: "adjacent side-coupled trimer" });
        }
        let (n1, n2) = (h.attach_indices[0], h.attach_indices[1]);
        let kappa1 = h.matrix[(h.system_indices[0], n1)];
        let j = h.matrix[(n1, n2)];
        full[n2] = -v_sys[0] * (kappa1 / j);
    }
    let norm = full.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero vector".into()));
    }
    full /= C64::new(norm, 0.0);
    let hc = h.complex();
    let r = &hc * &full - &full * C64::new(energy, 0.0);
    Ok(r.norm())
}
