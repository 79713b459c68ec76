//! Experiment orchestration: resolves a configuration into states, runs the
//! sweep and renders the CSV, run summary and analysis report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, StateDescriptor};
use crate::effective_model::{
    apt_symmetry_check, dark_mode, dark_search, effective_model, spectrum, DarkStateCertificate,
    EffectiveHamiltonian,
};
use crate::error::{Error, Result};
use crate::evolution::{run_sweep, SweepOptions};
use crate::fock_space::{mix, mode_power_state, PureState};
use crate::observables::{convergence_length, EvolutionResult};
use crate::{CMatrix, CVector, C64};

pub const CSV_HEADER: &str = "z,purity,trace_distance_eq6,trace_distance_half,success_probability";

/// Resolves a descriptor to a normalized state of the network's modes.
pub fn resolve_state(config: &ExperimentConfig, descriptor: &StateDescriptor) -> Result<PureState> {
    match descriptor {
        StateDescriptor::Occupation(v) => PureState::occupation(v),
        StateDescriptor::Dark(n) => {
            let coeffs = dark_mode(&config.network, config.tolerances.dark_eigenvalue)?;
            mode_power_state(&coeffs, *n)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub effective: EffectiveHamiltonian,
    pub spectrum: Vec<C64>,
    pub apt_symmetric: bool,
    pub certificates: Vec<DarkStateCertificate>,
}

pub fn analyze(config: &ExperimentConfig) -> Result<Analysis> {
    let effective = effective_model(&config.network)?;
    let dark_tol = config.tolerances.dark_eigenvalue.unwrap_or_else(|| effective.default_dark_tolerance());
    let apt_tol = config.tolerances.apt.unwrap_or(1e-9 * effective.scale());
    Ok(Analysis {
        spectrum: spectrum(&effective.matrix)?,
        apt_symmetric: apt_symmetry_check(&effective.matrix, apt_tol)?,
        certificates: dark_search(&effective.matrix, dark_tol)?,
        effective,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: EvolutionResult,
    pub summary: Value,
    pub csv: String,
}

/// Runs the configured sweep without touching the filesystem.
pub fn execute(config: &ExperimentConfig, opts: &SweepOptions) -> Result<RunOutput> {
    config.validate()?;
    let terms = config
        .input_state
        .iter()
        .map(|t| Ok((t.weight, resolve_state(config, &t.state)?)))
        .collect::<Result<Vec<_>>>()?;
    let rho0 = mix(&terms)?;
    let target = resolve_state(config, &config.target)?;
    let mut opts = opts.clone();
    if opts.lindblad_dz.is_none() {
        opts.lindblad_dz = config.tolerances.lindblad_dz;
    }
    let label = config.target.to_string();
    let result = run_sweep(&config.network, &rho0, &config.z_grid(), config.engine, &target, &label, &opts)?;
    let analysis = analyze(config)?;
    let summary = summary_json(config, &result, &analysis);
    let csv = csv_string(&result);
    Ok(RunOutput { result, summary, csv })
}

/// Runs the sweep and writes the CSV and `<stem>.summary.json` (plus
/// `<stem>.plot.py` when `plot` is set) next to `out`.
pub fn run(config: &ExperimentConfig, opts: &SweepOptions, out: &Path, plot: bool) -> Result<RunOutput> {
    let output = execute(config, opts)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, &output.csv)?;
    let mut summary = serde_json::to_string_pretty(&output.summary)?;
    summary.push('\n');
    std::fs::write(sibling(out, "summary.json"), summary)?;
    if plot {
        std::fs::write(sibling(out, "plot.py"), plot_script(out))?;
    }
    Ok(output)
}

pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fixed-format CSV: 17 significant digits, LF line endings.
pub fn csv_string(result: &EvolutionResult) -> String {
    let mut s = String::with_capacity(96 * (result.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    let half = result.trace_distance_half();
    for (i, &h) in half.iter().enumerate() {
        let row = [
            result.z_values[i],
            result.purity[i],
            result.trace_distance[i],
            h,
            result.success_probability[i],
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_float(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn complex_json(c: C64) -> Value {
    json!([c.re, c.im])
}

fn vector_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(|&c| complex_json(c)).collect())
}

fn certificate_json(c: &DarkStateCertificate) -> Value {
    json!({
        "eigenvalue": complex_json(c.eigenvalue),
        "vector": vector_json(&c.vector),
        "residual_im": c.residual_im,
        "condition_met": c.condition_met,
        "defective": c.defective,
    })
}

fn finite_or_null(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => json!(v),
        _ => Value::Null,
    }
}

pub fn summary_json(config: &ExperimentConfig, result: &EvolutionResult, analysis: &Analysis) -> Value {
    let eps = config.tolerances.convergence_epsilon;
    json!({
        "engine": result.engine.as_str(),
        "target": result.target_label,
        "photons": config.photons(),
        "bath_sites": config.network.bath_sites,
        "z_max": config.z_max,
        "z_steps": config.z_steps,
        "spectrum": analysis.spectrum.iter().map(|&c| complex_json(c)).collect::<Vec<_>>(),
        "apt_symmetric": analysis.apt_symmetric,
        "dark_certificates": analysis.certificates.iter().map(certificate_json).collect::<Vec<_>>(),
        "initial_purity": finite_or_null(result.purity.first().copied()),
        "final_purity": finite_or_null(result.purity.last().copied()),
        "initial_trace_distance": finite_or_null(result.trace_distance.first().copied()),
        "final_trace_distance": finite_or_null(result.trace_distance.last().copied()),
        "final_success_probability": finite_or_null(result.success_probability.last().copied()),
        "convergence_epsilon": eps,
        "convergence_length": finite_or_null(convergence_length(result, eps)),
    })
}

/// Matplotlib script that plots purity and trace distance from the CSV.
pub fn plot_script(csv: &Path) -> String {
    let name = csv.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!(
        r#"import csv
import os

import matplotlib.pyplot as plt

path = os.path.join(os.path.dirname(os.path.abspath(__file__)), {name:?})
with open(path) as f:
    rows = list(csv.DictReader(f))
z = [float(r["z"]) for r in rows]
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
ax1.plot(z, [float(r["purity"]) for r in rows])
ax1.set_xlabel("z (cm)")
ax1.set_ylabel("purity")
ax2.plot(z, [float(r["trace_distance_eq6"]) for r in rows], label="Tr|rho - rho_d|")
ax2.plot(z, [float(r["trace_distance_half"]) for r in rows], "--", label="half")
ax2.set_xlabel("z (cm)")
ax2.set_ylabel("trace distance")
ax2.legend()
fig.tight_layout()
fig.savefig(os.path.splitext(path)[0] + ".png", dpi=150)
"#
    )
}

fn fmt_complex(c: C64) -> String {
    let sign = if c.im < 0.0 { '-' } else { '+' };
    format!("{:>12.6} {sign} {:>10.6}i", c.re, c.im.abs())
}

fn fmt_matrix(out: &mut String, m: &CMatrix) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_complex(m[(i, j)])).collect();
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
}

/// Human-readable report of the effective model.
pub fn render_analysis(config: &ExperimentConfig, a: &Analysis) -> String {
    let mut s = String::new();
    let net = &config.network;
    let _ = writeln!(s, "topology: {}  (M = {}, J = {})", net.topology.as_str(), net.system_count(), net.bath_coupling);
    let _ = writeln!(s, "k0 = {:.12}  spectral factor = {:.12}", a.effective.k0, a.effective.spectral_factor);
    let _ = writeln!(s, "H_eff:");
    fmt_matrix(&mut s, &a.effective.matrix);
    let _ = writeln!(s, "spectrum:");
    for l in &a.spectrum {
        let _ = writeln!(s, "  {}", fmt_complex(*l));
    }
    let _ = writeln!(s, "APT symmetric: {}", if a.apt_symmetric { "yes" } else { "no" });
    let _ = writeln!(s, "dark states: {}", a.certificates.len());
    for c in &a.certificates {
        let v: Vec<String> = c.vector.iter().map(|&x| fmt_complex(x).trim().to_string()).collect();
        let _ = writeln!(
            s,
            "  eigenvalue {}  |Im| = {:.3e}{}",
            fmt_complex(c.eigenvalue).trim(),
            c.residual_im,
            if c.defective { "  (defective)" } else { "" }
        );
        let _ = writeln!(s, "  vector [{}]", v.join(", "));
    }
    s
}

/// Maps errors onto process exit codes: 2 for filtering failure, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::FilteringFailure { .. } => 2,
        _ => 1,
    }
}
