//! Experiment configuration: a versioned JSON document.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "network": {
//!     "topology": "dimer_edge_coupled" | "side_coupled_chain",
//!     "J": 5.4, "kappas": [..], "omegas": [..],
//!     "bias": 0.0, "delta": 1.0, "attach_sites": [..], "bath_sites": 118
//!   },
//!   "input_state": [{"weight": 0.6, "state": "|2,0>"}, {"weight": 0.4, "state": "dark(2)"}],
//!   "engine": "exact" | "markov" | "lindblad",
//!   "z_max": 6.0, "z_steps": 121,
//!   "target": "dark(2)",
//!   "tolerances": {"dark_eigenvalue": 1e-8, "apt": 1e-9, "convergence_epsilon": 0.05, "lindblad_dz": 1e-4},
//!   "output_path": "fig1.csv"
//! }
//! ```
//!
//! `bias`, `delta`, `attach_sites` (dimer only), `bath_sites`, `tolerances`
//! and `output_path` are optional. Without `bath_sites` the bath length
//! follows `z_max`.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evolution::EngineKind;
use crate::lattice_network::{default_bath_sites, NetworkSpec, Topology};

pub const SCHEMA_VERSION: u64 = 1;

const FIG1: &str = include_str!("../presets/fig1.json");
const FIG2: &str = include_str!("../presets/fig2.json");

/// A basis state `|n₁,…,n_M>` or the dark state of an `N`-photon sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateDescriptor {
    Occupation(Vec<usize>),
    Dark(usize),
}

impl StateDescriptor {
    pub fn photons(&self) -> usize {
        match self {
            StateDescriptor::Occupation(v) => v.iter().sum(),
            StateDescriptor::Dark(n) => *n,
        }
    }
}

impl fmt::Display for StateDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateDescriptor::Occupation(v) => {
                let parts: Vec<String> = v.iter().map(|n| n.to_string()).collect();
                write!(f, "|{}>", parts.join(","))
            }
            StateDescriptor::Dark(n) => write!(f, "dark({n})"),
        }
    }
}

impl FromStr for StateDescriptor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("dark(").and_then(|r| r.strip_suffix(')')) {
            return inner
                .trim()
                .parse()
                .map(StateDescriptor::Dark)
                .map_err(|_| format!("bad photon number in {s:?}"));
        }
        if let Some(inner) = s.strip_prefix('|').and_then(|r| r.strip_suffix('>').or_else(|| r.strip_suffix('⟩'))) {
            let occ = inner
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| format!("bad occupation literal {s:?}"))?;
            if occ.is_empty() {
                return Err(format!("empty occupation literal {s:?}"));
            }
            return Ok(StateDescriptor::Occupation(occ));
        }
        Err(format!("expected \"|n1,...,nM>\" or \"dark(N)\", got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    pub weight: f64,
    pub state: StateDescriptor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Absolute `|Im λ|` threshold; defaults to `1e-8` of the largest
    /// `H_eff` entry.
    pub dark_eigenvalue: Option<f64>,
    /// Spectrum matching tolerance; defaults to `1e-9` of the largest entry.
    pub apt: Option<f64>,
    pub convergence_epsilon: f64,
    pub lindblad_dz: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { dark_eigenvalue: None, apt: None, convergence_epsilon: 0.05, lindblad_dz: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    /// `bath_sites` was derived from `z_max` rather than given.
    pub auto_bath_sites: bool,
    pub input_state: Vec<MixtureTerm>,
    pub engine: EngineKind,
    pub z_max: f64,
    pub z_steps: usize,
    pub target: StateDescriptor,
    pub tolerances: Tolerances,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    /// `z_steps` equally spaced points on `[0, z_max]`.
    pub fn z_grid(&self) -> Vec<f64> {
        let n = self.z_steps;
        if n < 2 {
            return vec![0.0];
        }
        (0..n).map(|i| self.z_max * i as f64 / (n - 1) as f64).collect()
    }

    pub fn photons(&self) -> usize {
        self.target.photons()
    }

    pub fn set_z_max(&mut self, z_max: f64) {
        self.z_max = z_max;
        if self.auto_bath_sites && z_max.is_finite() && z_max > 0.0 {
            self.network.bath_sites = default_bath_sites(self.network.bath_coupling, z_max);
        }
    }

    pub fn set_bath_sites(&mut self, sites: usize) {
        self.network.bath_sites = sites;
        self.auto_bath_sites = false;
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.z_max.is_finite() && self.z_max > 0.0) {
            out.push(format!("z_max: must be positive, got {}", self.z_max));
        }
        if self.z_steps < 2 {
            out.push(format!("z_steps: must be at least 2, got {}", self.z_steps));
        }
        for e in self.network.violations() {
            out.push(format!("network: {e}"));
        }
        let m = self.network.system_count();
        let n = self.target.photons();
        let mut check_state = |path: String, s: &StateDescriptor| {
            if let StateDescriptor::Occupation(v) = s {
                if v.len() != m {
                    out.push(format!("{path}: {s} has {} modes, network has {m}", v.len()));
                }
            }
            if s.photons() != n {
                out.push(format!("{path}: {s} has {} photons, target has {n}", s.photons()));
            }
        };
        check_state("target".into(), &self.target);
        for (i, t) in self.input_state.iter().enumerate() {
            check_state(format!("input_state[{i}].state"), &t.state);
        }
        if self.input_state.is_empty() {
            out.push("input_state: at least one component is required".into());
        }
        for (i, t) in self.input_state.iter().enumerate() {
            if !(t.weight >= 0.0) {
                out.push(format!("input_state[{i}].weight: must be non-negative, got {}", t.weight));
            }
        }
        let sum: f64 = self.input_state.iter().map(|t| t.weight).sum();
        if !self.input_state.is_empty() && (sum - 1.0).abs() > 1e-12 {
            out.push(format!("input_state: weights sum to {sum}, expected 1"));
        }
        let tol = &self.tolerances;
        for (name, v) in [("dark_eigenvalue", tol.dark_eigenvalue), ("apt", tol.apt), ("lindblad_dz", tol.lindblad_dz)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    out.push(format!("tolerances.{name}: must be positive, got {v}"));
                }
            }
        }
        if !(tol.convergence_epsilon > 0.0) {
            out.push(format!("tolerances.convergence_epsilon: must be positive, got {}", tol.convergence_epsilon));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn to_value(&self) -> Value {
        let net = &self.network;
        let mut network = Map::new();
        network.insert("topology".into(), json!(net.topology.as_str()));
        network.insert("J".into(), json!(net.bath_coupling));
        network.insert("kappas".into(), json!(net.kappas));
        network.insert("omegas".into(), json!(net.omegas));
        network.insert("bias".into(), json!(net.bias));
        network.insert("delta".into(), json!(net.delta));
        network.insert("attach_sites".into(), json!(net.attach_sites));
        if !self.auto_bath_sites {
            network.insert("bath_sites".into(), json!(net.bath_sites));
        }
        let mut tolerances = Map::new();
        let tol = &self.tolerances;
        if let Some(v) = tol.dark_eigenvalue {
            tolerances.insert("dark_eigenvalue".into(), json!(v));
        }
        if let Some(v) = tol.apt {
            tolerances.insert("apt".into(), json!(v));
        }
        tolerances.insert("convergence_epsilon".into(), json!(tol.convergence_epsilon));
        if let Some(v) = tol.lindblad_dz {
            tolerances.insert("lindblad_dz".into(), json!(v));
        }
        let mut root = Map::new();
        root.insert("schema".into(), json!(SCHEMA_VERSION));
        root.insert("network".into(), Value::Object(network));
        root.insert(
            "input_state".into(),
            Value::Array(
                self.input_state
                    .iter()
                    .map(|t| json!({"weight": t.weight, "state": t.state.to_string()}))
                    .collect(),
            ),
        );
        root.insert("engine".into(), json!(self.engine.as_str()));
        root.insert("z_max".into(), json!(self.z_max));
        root.insert("z_steps".into(), json!(self.z_steps));
        root.insert("target".into(), json!(self.target.to_string()));
        root.insert("tolerances".into(), Value::Object(tolerances));
        if let Some(p) = &self.output_path {
            root.insert("output_path".into(), json!(p));
        }
        Value::Object(root)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("config values are finite")
    }
}

/// Accumulates every violation instead of stopping at the first.
struct Reader {
    errors: RefCell<Vec<String>>,
}

impl Reader {
    fn object<'a>(&self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(obj) => {
                for k in obj.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.errors.borrow_mut().push(format!("{}: unknown key", join(path, k)));
                    }
                }
                Some(obj)
            }
            None => {
                self.errors.borrow_mut().push(format!("{}: expected an object", display(path)));
                None
            }
        }
    }

    fn required<'a>(&self, obj: &'a Map<String, Value>, path: &str, key: &str) -> Option<&'a Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.errors.borrow_mut().push(format!("{}: missing required key", join(path, key)));
        }
        v
    }

    fn number(&self, v: Option<&Value>, path: String) -> Option<f64> {
        let v = v?;
        match v.as_f64() {
            Some(x) => Some(x),
            None => {
                self.errors.borrow_mut().push(format!("{path}: expected a number"));
                None
            }
        }
    }

    fn integer(&self, v: Option<&Value>, path: String) -> Option<usize> {
        let v = v?;
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.errors.borrow_mut().push(format!("{path}: expected a non-negative integer"));
                None
            }
        }
    }

    fn numbers(&self, v: Option<&Value>, path: String) -> Option<Vec<f64>> {
        let arr = match v?.as_array() {
            Some(a) => a,
            None => {
                self.errors.borrow_mut().push(format!("{path}: expected an array of numbers"));
                return None;
            }
        };
        let vals: Vec<Option<f64>> = arr
            .iter()
            .enumerate()
            .map(|(i, x)| self.number(Some(x), format!("{path}[{i}]")))
            .collect();
        vals.into_iter().collect()
    }

    fn integers(&self, v: Option<&Value>, path: String) -> Option<Vec<usize>> {
        let arr = match v?.as_array() {
            Some(a) => a,
            None => {
                self.errors.borrow_mut().push(format!("{path}: expected an array of integers"));
                return None;
            }
        };
        let vals: Vec<Option<usize>> = arr
            .iter()
            .enumerate()
            .map(|(i, x)| self.integer(Some(x), format!("{path}[{i}]")))
            .collect();
        vals.into_iter().collect()
    }

    fn parsed<T: FromStr<Err = String>>(&self, v: Option<&Value>, path: String) -> Option<T> {
        let v = v?;
        match v.as_str() {
            Some(s) => match s.parse() {
                Ok(x) => Some(x),
                Err(e) => {
                    self.errors.borrow_mut().push(format!("{path}: {e}"));
                    None
                }
            },
            None => {
                self.errors.borrow_mut().push(format!("{path}: expected a string"));
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn display(path: &str) -> &str {
    if path.is_empty() {
        "<root>"
    } else {
        path
    }
}

fn parse_topology(s: &str) -> std::result::Result<Topology, String> {
    match s {
        "dimer_edge_coupled" => Ok(Topology::DimerEdgeCoupled),
        "side_coupled_chain" => Ok(Topology::SideCoupledChain),
        other => Err(format!("unknown topology {other:?}")),
    }
}

struct TopologyName(Topology);

impl FromStr for TopologyName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_topology(s).map(TopologyName)
    }
}

const ROOT_KEYS: &[&str] = &[
    "schema",
    "network",
    "input_state",
    "engine",
    "z_max",
    "z_steps",
    "target",
    "tolerances",
    "output_path",
];
const NETWORK_KEYS: &[&str] = &["topology", "J", "kappas", "omegas", "bias", "attach_sites", "delta", "bath_sites"];
const TOLERANCE_KEYS: &[&str] = &["dark_eigenvalue", "apt", "convergence_epsilon", "lindblad_dz"];

/// Parses and validates a configuration, reporting all violations at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed JSON: {e}")]))?;
    let r = Reader { errors: RefCell::new(Vec::new()) };
    let obj = r.object(&root, "", ROOT_KEYS).ok_or_else(|| Error::Config(r.errors.borrow().clone()))?;

    match r.integer(r_required(&r, obj, "schema"), "schema".into()) {
        Some(v) if v as u64 != SCHEMA_VERSION => {
            r.errors.borrow_mut().push(format!("schema: unsupported version {v}, expected {SCHEMA_VERSION}"))
        }
        _ => {}
    }

    let network = r_required(&r, obj, "network").and_then(|v| parse_network(&r, v));
    let input_state = r_required(&r, obj, "input_state").and_then(|v| parse_mixture(&r, v));
    let engine = r.parsed::<EngineKind>(r_required(&r, obj, "engine"), "engine".into());
    let z_max = r.number(r_required(&r, obj, "z_max"), "z_max".into());
    let z_steps = r.integer(r_required(&r, obj, "z_steps"), "z_steps".into());
    let target = r.parsed::<StateDescriptor>(r_required(&r, obj, "target"), "target".into());
    let tolerances = match obj.get("tolerances") {
        Some(v) => parse_tolerances(&r, v),
        None => Some(Tolerances::default()),
    };
    let output_path = match obj.get("output_path") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            r.errors.borrow_mut().push("output_path: expected a string".into());
            None
        }
        None => None,
    };

    let (Some((mut network, explicit_bath)), Some(input_state), Some(engine), Some(z_max), Some(z_steps), Some(target), Some(tolerances)) =
        (network, input_state, engine, z_max, z_steps, target, tolerances)
    else {
        // range checks that would otherwise wait for a complete config
        let mut errors = r.errors.into_inner();
        if let Some(z) = z_max.filter(|z| !(z.is_finite() && *z > 0.0)) {
            errors.push(format!("z_max: must be positive, got {z}"));
        }
        if let Some(n) = z_steps.filter(|&n| n < 2) {
            errors.push(format!("z_steps: must be at least 2, got {n}"));
        }
        return Err(Error::Config(errors));
    };
    if !r.errors.borrow().is_empty() {
        return Err(Error::Config(r.errors.into_inner()));
    }
    let auto_bath_sites = explicit_bath.is_none();
    network.bath_sites = match explicit_bath {
        Some(l) => l,
        None if z_max.is_finite() && z_max > 0.0 => default_bath_sites(network.bath_coupling, z_max),
        None => 1,
    };
    let config = ExperimentConfig {
        network,
        auto_bath_sites,
        input_state,
        engine,
        z_max,
        z_steps,
        target,
        tolerances,
        output_path,
    };
    config.validate()?;
    Ok(config)
}

fn r_required<'a>(r: &Reader, obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    r.required(obj, "", key)
}

fn parse_network(r: &Reader, v: &Value) -> Option<(NetworkSpec, Option<usize>)> {
    let p = "network";
    let obj = r.object(v, p, NETWORK_KEYS)?;
    let topology = r.parsed::<TopologyName>(r.required(obj, p, "topology"), join(p, "topology")).map(|t| t.0);
    let j = r.number(r.required(obj, p, "J"), join(p, "J"));
    let kappas = r.numbers(r.required(obj, p, "kappas"), join(p, "kappas"));
    let omegas = r.numbers(r.required(obj, p, "omegas"), join(p, "omegas"));
    let bias = match obj.get("bias") {
        Some(v) => r.number(Some(v), join(p, "bias")),
        None => Some(0.0),
    };
    let delta = match obj.get("delta") {
        Some(v) => r.number(Some(v), join(p, "delta")),
        None => Some(0.0),
    };
    let attach_sites = match (topology, obj.get("attach_sites")) {
        (_, Some(v)) => r.integers(Some(v), join(p, "attach_sites")),
        (Some(Topology::SideCoupledChain), None) => {
            r.errors.borrow_mut().push(format!("{}: missing required key", join(p, "attach_sites")));
            None
        }
        (_, None) => Some(vec![1, 1]),
    };
    let bath_sites = match obj.get("bath_sites") {
        Some(v) => Some(Some(r.integer(Some(v), join(p, "bath_sites"))?)),
        None => Some(None),
    };
    Some((
        NetworkSpec {
            topology: topology?,
            bath_coupling: j?,
            kappas: kappas?,
            omegas: omegas?,
            bias: bias?,
            attach_sites: attach_sites?,
            delta: delta?,
            bath_sites: 0,
        },
        bath_sites?,
    ))
}

fn parse_mixture(r: &Reader, v: &Value) -> Option<Vec<MixtureTerm>> {
    let arr = match v.as_array() {
        Some(a) => a,
        None => {
            r.errors.borrow_mut().push("input_state: expected an array".into());
            return None;
        }
    };
    let terms: Vec<Option<MixtureTerm>> = arr
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let p = format!("input_state[{i}]");
            let obj = r.object(item, &p, &["weight", "state"])?;
            let weight = r.number(r.required(obj, &p, "weight"), join(&p, "weight"));
            let state = r.parsed::<StateDescriptor>(r.required(obj, &p, "state"), join(&p, "state"));
            Some(MixtureTerm { weight: weight?, state: state? })
        })
        .collect();
    terms.into_iter().collect()
}

fn parse_tolerances(r: &Reader, v: &Value) -> Option<Tolerances> {
    let p = "tolerances";
    let obj = r.object(v, p, TOLERANCE_KEYS)?;
    let mut t = Tolerances::default();
    let mut ok = true;
    let mut opt = |r: &Reader, key: &str| -> Option<f64> {
        let v = obj.get(key)?;
        let x = r.number(Some(v), join(p, key));
        ok &= x.is_some();
        x
    };
    t.dark_eigenvalue = opt(r, "dark_eigenvalue");
    t.apt = opt(r, "apt");
    if let Some(e) = opt(r, "convergence_epsilon") {
        t.convergence_epsilon = e;
    }
    t.lindblad_dz = opt(r, "lindblad_dz");
    ok.then_some(t)
}

/// Built-in experiment presets: `fig1` (dimer) and `fig2` (trimer).
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "fig1" => parse_config(FIG1),
        "fig2" => parse_config(FIG2),
        other => Err(Error::Config(vec![format!("unknown preset {other:?} (expected fig1 or fig2)")])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fig1_preset() {
        let c = preset("fig1").unwrap();
        assert_eq!(c.network.topology, Topology::DimerEdgeCoupled);
        assert_eq!(c.network.bath_coupling, 5.4);
        assert_eq!(c.network.kappas, vec![2.0, 2.0]);
        assert_eq!(c.network.delta, 1.0);
        assert_eq!(c.input_state[0].weight, 0.6);
        assert_eq!(c.input_state[0].state, StateDescriptor::Occupation(vec![2, 0]));
        assert_eq!(c.target, StateDescriptor::Dark(2));
        assert!(c.auto_bath_sites);
        assert_eq!(c.network.bath_sites, 118);
        let z = c.z_grid();
        assert_eq!(z.len(), 121);
        assert_eq!(z[0], 0.0);
        assert_eq!(*z.last().unwrap(), 6.0);
    }

    #[test]
    fn fig2_preset() {
        let c = preset("fig2").unwrap();
        let w1 = 2f64.sqrt() * 10.0;
        assert_eq!(c.network.bath_coupling, 10.0);
        assert_eq!(c.network.kappas, vec![2.0; 3]);
        assert_eq!(c.network.omegas, vec![w1, w1 - 4.0 / w1, w1]);
        assert_eq!(c.network.bias, w1);
        assert_eq!(c.input_state[0].weight, 0.6);
        assert_eq!(c.network.bath_sites, 470);
    }

    #[test]
    fn z_steps_one_rejected() {
        let text = FIG1.replace("\"z_steps\": 121", "\"z_steps\": 1");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(&err, Error::Config(v) if v.iter().any(|m| m.starts_with("z_steps"))));
    }

    #[test]
    fn reports_all_violations() {
        let text = r#"{
            "schema": 1,
            "network": {"topology": "dimer_edge_coupled", "kappas": [2, 2], "omegas": [0, 0], "colour": 3},
            "input_state": [{"weight": 1.0, "state": "|2,0"}],
            "engine": "rk4",
            "z_steps": 10,
            "target": "dark(2)",
            "extra": true
        }"#;
        let Error::Config(v) = parse_config(text).unwrap_err() else { panic!() };
        let has = |s: &str| v.iter().any(|m| m.contains(s));
        assert!(has("extra: unknown key"), "{v:?}");
        assert!(has("network.colour: unknown key"));
        assert!(has("network.J: missing required key"));
        assert!(has("z_max: missing required key"));
        assert!(has("input_state[0].state"));
        assert!(has("engine: unknown engine"));
        assert!(v.len() >= 6);
    }

    #[test]
    fn semantic_violations() {
        let mut c = preset("fig1").unwrap();
        c.set_z_max(0.0);
        c.input_state[0].weight = 0.7;
        c.target = StateDescriptor::Dark(3);
        let v = c.violations();
        assert!(v.iter().any(|m| m.starts_with("z_max")));
        assert!(v.iter().any(|m| m.contains("weights sum")));
        assert!(v.iter().any(|m| m.contains("photons")));
    }

    #[test]
    fn descriptors() {
        assert_eq!("|2,0>".parse::<StateDescriptor>().unwrap(), StateDescriptor::Occupation(vec![2, 0]));
        assert_eq!("|1, 0, 0⟩".parse::<StateDescriptor>().unwrap(), StateDescriptor::Occupation(vec![1, 0, 0]));
        assert_eq!("dark(2)".parse::<StateDescriptor>().unwrap(), StateDescriptor::Dark(2));
        assert!("bright(2)".parse::<StateDescriptor>().is_err());
        assert!("|a,b>".parse::<StateDescriptor>().is_err());
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("fig3"), Err(Error::Config(_))));
    }

    #[test]
    fn z_override_resizes_auto_bath() {
        let mut c = preset("fig2").unwrap();
        c.set_z_max(5.0);
        assert_eq!(c.network.bath_sites, 170);
        c.set_bath_sites(900);
        c.set_z_max(15.0);
        assert_eq!(c.network.bath_sites, 900);
    }

    proptest! {
        #[test]
        fn emitted_config_round_trips(
            preset_name in prop::sample::select(vec!["fig1", "fig2"]),
            z_max in 0.1f64..50.0,
            steps in 2usize..500,
            bath in prop::option::of(400usize..2000),
            eps in prop::option::of(1e-6f64..0.5),
            engine in prop::sample::select(vec![EngineKind::ExactNetwork, EngineKind::MarkovNoJump, EngineKind::LindbladFull]),
        ) {
            let mut c = preset(preset_name).unwrap();
            c.set_z_max(z_max);
            c.z_steps = steps;
            c.engine = engine;
            if let Some(l) = bath {
                c.set_bath_sites(l);
            }
            if let Some(e) = eps {
                c.tolerances.convergence_epsilon = e;
                c.tolerances.lindblad_dz = Some(e / 10.0);
            }
            let back = parse_config(&c.to_json()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
