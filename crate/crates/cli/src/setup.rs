//! Resolution of model, target, group and pulse names into core objects.

use std::path::Path;
use std::sync::Arc;

use eusim_core::dynamics::OpenSystemModel;
use eusim_core::models::{
    dipolar_target, group_preset, heisenberg_chain, honeycomb_hamiltonians, open_chain_model,
    xyz_target, CouplingAxis, HoneycombLattice, DEFAULT_BATH_SEED,
};
use eusim_core::{ControlSystem, GroupClosure, OperatorSum, PulseShape, ShapeKind};

use crate::CliError;

/// Coupling strength `‖B_α‖` of the open chain models.
pub const BATH_STRENGTH: f64 = 0.1;

pub const MODEL_PRESETS: &[&str] = &["heisenberg<N>", "honeycomb", "open<N>[:axes[:seed]]"];
pub const TARGET_PRESETS: &[&str] = &["dipolar", "kitaev", "xyz:<jx>,<jy>,<jz>", "heisenberg<N>", "honeycomb"];

pub enum Model {
    Closed(OperatorSum),
    Open(OpenSystemModel),
}

impl Model {
    /// Hamiltonian the control group acts on.
    pub fn system(&self) -> &OperatorSum {
        match self {
            Model::Closed(h) => h,
            Model::Open(m) => m.system(),
        }
    }

    pub fn errors(&self) -> Vec<OperatorSum> {
        match self {
            Model::Closed(_) => Vec::new(),
            Model::Open(m) => m.error_operators(),
        }
    }
}

pub struct ResolvedModel {
    pub model: Model,
    /// Canonical spec, written into schedule files.
    pub spec: String,
    pub default_group: Option<&'static str>,
}

fn chain_length(rest: &str, spec: &str) -> Result<usize, CliError> {
    rest.parse::<usize>()
        .map_err(|_| CliError::Config(format!("`{spec}`: expected a chain length")))
}

/// `heisenberg<N>`, `honeycomb`, `open<N>[:axes[:seed]]` or an operator
/// JSON file.
pub fn resolve_model(spec: &str, seed: Option<u64>) -> Result<ResolvedModel, CliError> {
    if let Some(rest) = spec.strip_prefix("heisenberg") {
        let n = chain_length(rest, spec)?;
        return Ok(ResolvedModel {
            model: Model::Closed(heisenberg_chain(n, 1.0)?),
            spec: spec.to_string(),
            default_group: Some(if n == 2 { "g1" } else { "g_odd" }),
        });
    }
    if spec == "honeycomb" {
        let (ising, _) = honeycomb_hamiltonians(&HoneycombLattice::single_plaquette(), 1.0)?;
        return Ok(ResolvedModel {
            model: Model::Closed(ising),
            spec: spec.to_string(),
            default_group: Some("honeycomb"),
        });
    }
    if let Some(rest) = spec.strip_prefix("open") {
        let mut parts = rest.split(':');
        let n = chain_length(parts.next().unwrap_or(""), spec)?;
        let axes_text = parts.next().unwrap_or("xyz").to_string();
        let seed = match parts.next() {
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("`{spec}`: bad seed `{s}`")))?,
            None => seed.unwrap_or(DEFAULT_BATH_SEED),
        };
        if parts.next().is_some() {
            return Err(CliError::Config(format!("`{spec}`: too many fields")));
        }
        let axes = CouplingAxis::parse_list(&axes_text)?;
        let m = open_chain_model(n, &axes, seed, BATH_STRENGTH)?;
        return Ok(ResolvedModel {
            model: Model::Open(m),
            spec: format!("open{n}:{axes_text}:{seed}"),
            default_group: Some(if n == 2 { "pauli2" } else { "g_odd" }),
        });
    }
    Ok(ResolvedModel {
        model: Model::Closed(read_operator(spec)?),
        spec: spec.to_string(),
        default_group: None,
    })
}

pub fn resolve_target(spec: &str) -> Result<OperatorSum, CliError> {
    match spec {
        "dipolar" => return Ok(dipolar_target(1.0)),
        "kitaev" => return Ok(honeycomb_hamiltonians(&HoneycombLattice::single_plaquette(), 1.0)?.1),
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("xyz:") {
        let j: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("`{spec}`: expected three couplings")))?;
        if j.len() != 3 {
            return Err(CliError::Config(format!("`{spec}`: expected three couplings")));
        }
        return Ok(xyz_target(j[0], j[1], j[2]));
    }
    if spec.starts_with("heisenberg") || spec == "honeycomb" {
        return Ok(resolve_model(spec, None)?.model.system().clone());
    }
    read_operator(spec)
}

fn read_operator(path: &str) -> Result<OperatorSum, CliError> {
    if !Path::new(path).exists() {
        return Err(CliError::Config(format!("`{path}` is neither a preset nor a file")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(OperatorSum::from_json(&text)?)
}

pub fn resolve_group(name: &str, n: usize) -> Result<GroupClosure, CliError> {
    Ok(group_preset(name, n)?.0)
}

/// Built-in shape name or a `t,f` CSV file.
pub fn resolve_shape(spec: &str, delta: f64) -> Result<PulseShape, CliError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::Config(format!("ramp duration must be positive, got {delta}")));
    }
    match ShapeKind::parse(spec) {
        Ok(ShapeKind::Tabulated) => Err(CliError::Config(
            "tabulated shapes are read from a CSV file; pass its path".into(),
        )),
        Ok(kind) => Ok(PulseShape::of_kind(kind, delta, 1.0)?),
        Err(_) => {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| CliError::Config(format!("shape `{spec}`: {e}")))?;
            Ok(PulseShape::from_csv(&text)?.with_duration(delta)?)
        }
    }
}

pub fn controls(group: GroupClosure, shape: &PulseShape) -> Result<Arc<ControlSystem>, CliError> {
    Ok(Arc::new(ControlSystem::new(group, shape)?))
}
