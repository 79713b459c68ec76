//! Post-selected evolution of `N`-photon states.
//!
//! Post-selection on "no photon reached the bath" is applied exactly: the
//! surviving (unnormalized) state is `K ρ₀ K†` for a sector operator `K`,
//! and its trace is the success probability.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_space::{lift_matrix, DensityMatrix, FockBasis, PureState};
use crate::lattice_network::{build_hamiltonian, NetworkSpec, Propagator};
use crate::observables::{purity, trace_distance, EvolutionResult};
use crate::{effective_model, CMatrix, C64};

/// Conditional traces below this leave the post-selected state undefined.
pub const FILTER_FAILURE_THRESHOLD: f64 = 1e-14;
/// Allowed trace drift of the Lindblad integrator.
pub const LINDBLAD_TRACE_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    #[serde(rename = "exact")]
    ExactNetwork,
    #[serde(rename = "markov")]
    MarkovNoJump,
    #[serde(rename = "lindblad")]
    LindbladFull,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::ExactNetwork => "exact",
            EngineKind::MarkovNoJump => "markov",
            EngineKind::LindbladFull => "lindblad",
        }
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(EngineKind::ExactNetwork),
            "markov" => Ok(EngineKind::MarkovNoJump),
            "lindblad" => Ok(EngineKind::LindbladFull),
            other => Err(format!("unknown engine {other:?} (expected exact, markov or lindblad)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub rho: DensityMatrix,
    pub success_probability: f64,
}

fn require_normalized(rho: &DensityMatrix) -> Result<()> {
    let t = rho.trace();
    if (t - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(t));
    }
    Ok(())
}

fn normalize_conditional(mut rho: DensityMatrix, trace: f64) -> Result<ConditionalState> {
    if !(trace >= FILTER_FAILURE_THRESHOLD) {
        return Err(Error::FilteringFailure { trace, threshold: FILTER_FAILURE_THRESHOLD });
    }
    rho.matrix /= C64::new(trace, 0.0);
    rho.hermitize();
    Ok(ConditionalState { rho, success_probability: trace })
}

/// `K ρ₀ K† / Tr(K ρ₀ K†)`.
fn condition(k: &CMatrix, rho0: &DensityMatrix) -> Result<ConditionalState> {
    let unnormalized = k * &rho0.matrix * k.adjoint();
    let trace = unnormalized.trace().re;
    normalize_conditional(DensityMatrix { basis: rho0.basis.clone(), matrix: unnormalized }, trace)
}

fn require_sector(rho: &DensityMatrix) -> Result<()> {
    if !rho.basis.is_sector() {
        return Err(Error::BasisMismatch("input must live in a single photon-number sector".into()));
    }
    Ok(())
}

/// Coherent propagation through the full network, post-selected on every
/// photon remaining in the system waveguides.
pub fn evolve_exact(spec: &NetworkSpec, rho0: &DensityMatrix, z: f64) -> Result<ConditionalState> {
    ExactEngine::new(spec)?.evolve(rho0, z)
}

/// Reusable exact engine: one eigendecomposition of the network serves
/// every `z`.
#[derive(Debug, Clone)]
pub struct ExactEngine {
    spec: NetworkSpec,
    propagator: Propagator,
}

impl ExactEngine {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let h = build_hamiltonian(spec)?;
        Ok(ExactEngine { spec: spec.clone(), propagator: Propagator::new(&h) })
    }

    pub fn sector_operator(&self, basis: &FockBasis, z: f64) -> Result<CMatrix> {
        if basis.modes() != self.spec.system_count() {
            return Err(Error::BasisMismatch("basis modes differ from system waveguides".into()));
        }
        self.spec.check_light_cone(z)?;
        lift_matrix(&self.propagator.system_block_at(z), basis)
    }

    pub fn evolve(&self, rho0: &DensityMatrix, z: f64) -> Result<ConditionalState> {
        require_normalized(rho0)?;
        require_sector(rho0)?;
        condition(&self.sector_operator(&rho0.basis, z)?, rho0)
    }
}

/// `exp(-i H_eff z)` lifted to the sector of `basis`.
pub fn no_jump_operator(h_eff: &CMatrix, basis: &FockBasis, z: f64) -> Result<CMatrix> {
    let single = (h_eff * C64::new(0.0, -z)).exp();
    lift_matrix(&single, basis)
}

/// Jump-free conditional evolution under the effective Hamiltonian.
pub fn evolve_markov(h_eff: &CMatrix, rho0: &DensityMatrix, z: f64) -> Result<ConditionalState> {
    require_normalized(rho0)?;
    require_sector(rho0)?;
    if h_eff.nrows() != rho0.basis.modes() {
        return Err(Error::BasisMismatch("H_eff size differs from the number of modes".into()));
    }
    condition(&no_jump_operator(h_eff, &rho0.basis, z)?, rho0)
}

/// Lindblad generator
/// `ℒρ = −i(Hρ − ρH†) + Σ_{αβ} γ_{αβ} a_α ρ a_β†` on stacked sectors.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    basis: Arc<FockBasis>,
    hamiltonian: CMatrix,
    hamiltonian_adj: CMatrix,
    lowering: Vec<CMatrix>,
    lowering_adj: Vec<CMatrix>,
    gamma: DMatrix<f64>,
}

impl LindbladGenerator {
    pub fn new(h_eff: &CMatrix, gamma: &DMatrix<f64>, max_photons: usize) -> Result<Self> {
        let m = h_eff.nrows();
        if h_eff.ncols() != m || gamma.nrows() != m || gamma.ncols() != m {
            return Err(Error::BasisMismatch("H_eff and γ must both be M×M".into()));
        }
        let basis = Arc::new(FockBasis::stacked(m, max_photons)?);
        let lowering: Vec<CMatrix> = (0..m).map(|a| basis.annihilation(a)).collect();
        let lowering_adj: Vec<CMatrix> = lowering.iter().map(|a| a.adjoint()).collect();
        let d = basis.len();
        let mut hamiltonian = CMatrix::zeros(d, d);
        for a in 0..m {
            for b in 0..m {
                let h = h_eff[(a, b)];
                if h != C64::new(0.0, 0.0) {
                    hamiltonian += &lowering_adj[a] * &lowering[b] * h;
                }
            }
        }
        let hamiltonian_adj = hamiltonian.adjoint();
        Ok(LindbladGenerator { basis, hamiltonian, hamiltonian_adj, lowering, lowering_adj, gamma: gamma.clone() })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let minus_i = C64::new(0.0, -1.0);
        let mut out = (&self.hamiltonian * rho - rho * &self.hamiltonian_adj) * minus_i;
        let lowered: Vec<CMatrix> = self.lowering.iter().map(|a| a * rho).collect();
        let m = self.lowering.len();
        for b in 0..m {
            let mut acc = CMatrix::zeros(rho.nrows(), rho.ncols());
            for (a, la) in lowered.iter().enumerate() {
                let g = self.gamma[(a, b)];
                if g != 0.0 {
                    acc += la * C64::new(g, 0.0);
                }
            }
            out += acc * &self.lowering_adj[b];
        }
        out
    }

    fn rk4_step(&self, rho: &CMatrix, h: f64) -> CMatrix {
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1 * half));
        let k3 = self.apply(&(rho + &k2 * half));
        let k4 = self.apply(&(rho + &k3 * hc));
        rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (hc / 6.0)
    }

    /// Integrates over `[0, z]` with steps no longer than `dz`.
    pub fn integrate(&self, rho: &CMatrix, z: f64, dz: f64) -> CMatrix {
        if z <= 0.0 {
            return rho.clone();
        }
        let steps = (z / dz).ceil().max(1.0) as usize;
        let h = z / steps as f64;
        let mut cur = rho.clone();
        for _ in 0..steps {
            cur = self.rk4_step(&cur, h);
        }
        cur
    }

    /// `0.001 · min(1/γ_scale, 1/J_scale)`.
    pub fn default_step(h_eff: &CMatrix, gamma: &DMatrix<f64>) -> f64 {
        let g = gamma.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let j = h_eff.iter().fold(0.0f64, |m, x| m.max(x.re.abs()));
        let inv = |s: f64| if s > 0.0 { 1.0 / s } else { f64::INFINITY };
        let base = inv(g).min(inv(j));
        if base.is_finite() {
            1e-3 * base
        } else {
            1e-3
        }
    }
}

fn check_drift(before: f64, after: f64) -> Result<()> {
    let drift = (after - before).abs();
    if drift > LINDBLAD_TRACE_DRIFT {
        return Err(Error::StepSize { drift });
    }
    Ok(())
}

/// Unconditional master-equation evolution on sectors `0..=N`. A sector
/// input is embedded in the stacked space first.
pub fn evolve_lindblad(
    h_eff: &CMatrix,
    gamma: &DMatrix<f64>,
    rho0: &DensityMatrix,
    z: f64,
    dz: f64,
) -> Result<DensityMatrix> {
    if !(dz > 0.0) {
        return Err(Error::Numerical(format!("step size must be positive, got {dz}")));
    }
    require_normalized(rho0)?;
    let generator = LindbladGenerator::new(h_eff, gamma, rho0.basis.max_photons())?;
    let start = rho0.embed_into(generator.basis().clone())?;
    let end = generator.integrate(&start.matrix, z, dz);
    let out = DensityMatrix { basis: generator.basis().clone(), matrix: end };
    check_drift(1.0, out.trace())?;
    Ok(out)
}

/// Post-selects a stacked state on its top sector.
pub fn condition_on_sector(rho: &DensityMatrix, sector: Arc<FockBasis>) -> Result<ConditionalState> {
    let block = rho.restrict_to(sector)?;
    let trace = block.trace();
    normalize_conditional(block, trace)
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Lindblad step; defaults to [`LindbladGenerator::default_step`].
    pub lindblad_dz: Option<f64>,
    /// Worker threads for the `z` fan-out; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepOptions {
    /// Reads the thread cap from `DARKFILTER_THREADS`.
    pub fn from_env() -> Self {
        let threads = std::env::var("DARKFILTER_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        SweepOptions { lindblad_dz: None, threads }
    }
}

fn check_grid(z_grid: &[f64]) -> Result<()> {
    if let Some(&first) = z_grid.first() {
        if first != 0.0 {
            return Err(Error::Numerical(format!("z grid must start at 0, starts at {first}")));
        }
    }
    if z_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Numerical("z grid must be strictly ascending".into()));
    }
    Ok(())
}

fn fan_out<F>(z_grid: &[f64], threads: Option<usize>, f: F) -> Result<Vec<ConditionalState>>
where
    F: Fn(f64) -> Result<ConditionalState> + Sync,
{
    let run = || z_grid.par_iter().map(|&z| f(z)).collect::<Result<Vec<_>>>();
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numerical(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Post-selected state at every point of `z_grid`.
pub fn conditional_sweep(
    spec: &NetworkSpec,
    rho0: &DensityMatrix,
    z_grid: &[f64],
    engine: EngineKind,
    opts: &SweepOptions,
) -> Result<Vec<ConditionalState>> {
    check_grid(z_grid)?;
    require_normalized(rho0)?;
    require_sector(rho0)?;
    if z_grid.is_empty() {
        return Ok(Vec::new());
    }
    match engine {
        EngineKind::ExactNetwork => {
            let engine = ExactEngine::new(spec)?;
            fan_out(z_grid, opts.threads, |z| engine.evolve(rho0, z))
        }
        EngineKind::MarkovNoJump => {
            let h = effective_model::effective_model(spec)?;
            fan_out(z_grid, opts.threads, |z| evolve_markov(&h.matrix, rho0, z))
        }
        EngineKind::LindbladFull => {
            let h = effective_model::effective_model(spec)?;
            lindblad_sweep(&h.matrix, &h.dissipative, rho0, z_grid, opts.lindblad_dz)
        }
    }
}

/// Sequential master-equation sweep conditioned on the input sector.
pub fn lindblad_sweep(
    h_eff: &CMatrix,
    gamma: &DMatrix<f64>,
    rho0: &DensityMatrix,
    z_grid: &[f64],
    dz: Option<f64>,
) -> Result<Vec<ConditionalState>> {
    check_grid(z_grid)?;
    let dz = dz.unwrap_or_else(|| LindbladGenerator::default_step(h_eff, gamma));
    if !(dz > 0.0) {
        return Err(Error::Numerical(format!("step size must be positive, got {dz}")));
    }
    let generator = LindbladGenerator::new(h_eff, gamma, rho0.basis.max_photons())?;
    let mut cur = rho0.embed_into(generator.basis().clone())?.matrix;
    let mut last_z = 0.0;
    let mut out = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        cur = generator.integrate(&cur, z - last_z, dz);
        last_z = z;
        check_drift(1.0, cur.trace().re)?;
        let full = DensityMatrix { basis: generator.basis().clone(), matrix: cur.clone() };
        out.push(condition_on_sector(&full, rho0.basis.clone())?);
    }
    Ok(out)
}

/// Purity, distance to `target` and success probability along `z_grid`.
pub fn run_sweep(
    spec: &NetworkSpec,
    rho0: &DensityMatrix,
    z_grid: &[f64],
    engine: EngineKind,
    target: &PureState,
    target_label: &str,
    opts: &SweepOptions,
) -> Result<EvolutionResult> {
    let states = conditional_sweep(spec, rho0, z_grid, engine, opts)?;
    summarize(z_grid, &states, engine, target, target_label)
}

pub fn summarize(
    z_grid: &[f64],
    states: &[ConditionalState],
    engine: EngineKind,
    target: &PureState,
    target_label: &str,
) -> Result<EvolutionResult> {
    let target_rho = target.to_density();
    let mut result = EvolutionResult::empty(engine, target_label);
    for (&z, s) in z_grid.iter().zip(states) {
        result.z_values.push(z);
        result.purity.push(purity(&s.rho));
        result.trace_distance.push(trace_distance(&s.rho, &target_rho)?);
        result.success_probability.push(s.success_probability);
    }
    Ok(result)
}
