use std::collections::BTreeMap;
use std::sync::Arc;

use eusim_core::averaging::{avg_hamiltonian_first_dense, avg_hamiltonian_second, AverageReport, SECOND_ORDER_MAX_QUBITS};
use eusim_core::dynamics::{
    cycle_powers, cycle_propagator, effective_error_decomposition, fit_unchecked, phase_aligned_error,
    phase_invariant_infidelity, reduced_state_infidelity, scaling_order_fit, OpenSystemModel, ScalingFit,
};
use eusim_core::group::{build_cayley_graph, eulerian_cycle};
use eusim_core::models::{group_preset, HoneycombLattice, PRESETS};
use eusim_core::reachability::{solve_weights, solve_weights_open, weighted_conjugation, WeightsRecord};
use eusim_core::schedule::{
    build_bb_schedule, build_eulerian_schedule, build_symmetric_schedule, closure_defect, ScheduleRecord,
};
use eusim_core::{
    ControlSystem, EulerCycle, GroupClosure, OperatorSum, Schedule, ScheduleMode, WeightAssignment, FORMAT_VERSION,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::setup::{self, Model, ResolvedModel, MODEL_PRESETS, TARGET_PRESETS};
use crate::{CliError, Setup, SimulateArgs, SweepArgs, SweepParam, VerifyArgs};

/// Ramp duration as a fraction of `T̃` when `--delta` is absent.
const DEFAULT_DELTA_FRACTION: f64 = 0.1;
/// `T̃‖H‖` when `--tsim` is absent.
const DEFAULT_TSIM_NORM: f64 = 0.1;
pub const DEFAULT_SYNTH_TOL: f64 = 1e-9;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;
pub const DEFAULT_SIMULATE_TOL: f64 = 1e-3;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(text: &str, out: Option<&std::path::Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => {
            stdout(&format!("{text}\n"));
            Ok(())
        }
    }
}

/// Broken pipes (e.g. `| head`) are not errors for a report writer.
fn stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

struct Plan {
    model: ResolvedModel,
    target: OperatorSum,
    group: GroupClosure,
    weights: WeightAssignment,
    cycle: Option<EulerCycle>,
    mode: ScheduleMode,
    sim_interval: f64,
    delta: f64,
}

impl Plan {
    fn new(s: &Setup) -> Result<Self, CliError> {
        let model = setup::resolve_model(s.model(), s.seed)?;
        let target = setup::resolve_target(s.target())?;
        let h = model.model.system();
        let group_name = s
            .group
            .as_deref()
            .or(model.default_group)
            .ok_or_else(|| CliError::Config("no default group for this model; pass --group".into()))?;
        let group = setup::resolve_group(group_name, h.n_qubits())?;
        let mode = ScheduleMode::parse(&s.mode)?;
        let weights = match &model.model {
            Model::Closed(h) => solve_weights(h, &target, &group)?,
            Model::Open(m) => solve_weights_open(m.system(), &m.error_operators(), &target, &group)?,
        };
        let sim_interval = match s.tsim {
            Some(t) => t,
            None => DEFAULT_TSIM_NORM / h.to_dense()?.operator_norm().max(f64::MIN_POSITIVE),
        };
        check_positive("--tsim", sim_interval)?;
        let delta = s.delta.unwrap_or(DEFAULT_DELTA_FRACTION * sim_interval);
        check_positive("--delta", delta)?;
        let cycle = match mode {
            ScheduleMode::Bb => None,
            _ => Some(eulerian_cycle(&build_cayley_graph(&group))?),
        };
        Ok(Self {
            model,
            target,
            group,
            weights,
            cycle,
            mode,
            sim_interval,
            delta,
        })
    }

    fn controls(&self, shape: &str, delta: f64) -> Result<Arc<ControlSystem>, CliError> {
        setup::controls(self.group.clone(), &setup::resolve_shape(shape, delta)?)
    }

    fn schedule(&self, controls: &Arc<ControlSystem>, sim_interval: f64) -> Result<Schedule, CliError> {
        Ok(match (&self.mode, &self.cycle) {
            (ScheduleMode::Bb, _) => build_bb_schedule(&self.weights, controls, sim_interval)?,
            (ScheduleMode::Eulerian, Some(c)) => build_eulerian_schedule(c, &self.weights, controls, sim_interval)?,
            (ScheduleMode::Symmetric, Some(c)) => build_symmetric_schedule(c, &self.weights, controls, sim_interval)?,
            _ => unreachable!("Eulerian modes always carry a cycle"),
        })
    }

    fn n_ramps_per_cycle(&self) -> usize {
        match (&self.mode, &self.cycle) {
            (ScheduleMode::Eulerian, Some(c)) => c.len(),
            (ScheduleMode::Symmetric, Some(c)) => 2 * c.len(),
            _ => 0,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn error_names(errors: &[OperatorSum]) -> Vec<(String, OperatorSum)> {
    errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let name = match e.terms() {
                [(_, w)] => w.to_string(),
                _ => format!("S{i}"),
            };
            (name, e.clone())
        })
        .collect()
}

#[derive(Serialize)]
struct SynthReport {
    model: String,
    target: String,
    mode: ScheduleMode,
    #[serde(flatten)]
    weights: WeightsRecord,
    /// Ramps per cycle.
    #[serde(rename = "N")]
    n_ramps: usize,
    cycle_time: f64,
    sim_interval: f64,
    delta: f64,
    shape: String,
    synthesis_residual: f64,
    error_residuals: BTreeMap<String, f64>,
    tolerance: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleRecord>,
}

pub fn synth(s: &Setup, tol: Option<f64>, out: Option<&std::path::Path>) -> Result<bool, CliError> {
    let tol = tol.unwrap_or(DEFAULT_SYNTH_TOL);
    let plan = Plan::new(s)?;
    let controls = plan.controls(&s.shape, plan.delta)?;
    let schedule = plan.schedule(&controls, plan.sim_interval)?;

    let h = plan.model.model.system().to_dense()?;
    let mapped = weighted_conjugation(&h, &plan.weights, &plan.group)?;
    let synthesis_residual = (&mapped - &plan.target.to_dense()?).frobenius_norm();
    let mut error_residuals = BTreeMap::new();
    for (name, e) in error_names(&plan.model.model.errors()) {
        let r = weighted_conjugation(&e.to_dense()?, &plan.weights, &plan.group)?.frobenius_norm();
        error_residuals.insert(name, r);
    }
    let pass = synthesis_residual <= tol && error_residuals.values().all(|&r| r <= tol);

    let mut record = schedule.to_record();
    record.model = Some(plan.model.spec.clone());
    record.target = Some(s.target().to_string());
    if let Some(path) = out {
        std::fs::write(path, format!("{}\n", to_json(&record)))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    let report = SynthReport {
        model: plan.model.spec.clone(),
        target: s.target().to_string(),
        mode: plan.mode,
        weights: plan.weights.to_record(&plan.group),
        n_ramps: plan.n_ramps_per_cycle(),
        cycle_time: schedule.cycle_time(),
        sim_interval: schedule.sim_interval(),
        delta: schedule.delta(),
        shape: record.shape.clone(),
        synthesis_residual,
        error_residuals,
        tolerance: tol,
        pass,
        schedule_file: out.map(|p| p.display().to_string()),
        schedule: if out.is_none() { Some(record) } else { None },
    };
    stdout(&format!("{}\n", to_json(&report)));
    eprintln!(
        "synth: group {} |G|={} W={:.6} N={} T_c={:.6e} residual={:.2e} ({})",
        plan.group.label(),
        plan.group.order(),
        plan.weights.total(),
        report.n_ramps,
        report.cycle_time,
        synthesis_residual,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

#[derive(Serialize)]
struct OpenParts {
    coupling_part: f64,
    coupling_reference: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    model: String,
    target: String,
    group: String,
    mode: ScheduleMode,
    closure_defect: f64,
    #[serde(flatten)]
    average: eusim_core::averaging::AverageRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    second_order_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    open: Option<OpenParts>,
    errors_pass: bool,
}

fn load_schedule(path: &std::path::Path, shape_override: Option<&str>) -> Result<(ScheduleRecord, Schedule), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rec: ScheduleRecord = serde_json::from_str(&text)?;
    let group = setup::resolve_group(&rec.group, rec.n_qubits)?;
    let delta = if rec.mode == ScheduleMode::Bb { 1.0 } else { rec.delta };
    let shape = match shape_override {
        Some(s) => s.to_string(),
        None if rec.shape == "tabulated" => {
            return Err(CliError::Config("schedule uses a tabulated shape; pass its CSV with --shape".into()))
        }
        None => rec.shape.clone(),
    };
    let controls = setup::controls(group, &setup::resolve_shape(&shape, delta)?)?;
    let schedule = Schedule::from_record(&rec, controls)?;
    Ok((rec, schedule))
}

fn open_parts(m: &OpenSystemModel, s: &Schedule) -> Result<OpenParts, CliError> {
    let total = m.total()?.to_dense()?;
    let h_bar = avg_hamiltonian_first_dense(s, &total)?;
    let coupling_part = effective_error_decomposition(&h_bar, m.n_system(), m.n_bath())?.norms().coupling;
    let coupling_reference = m.coupling_norm()?;
    Ok(OpenParts {
        coupling_part,
        coupling_reference,
        ratio: coupling_part / coupling_reference.max(f64::MIN_POSITIVE),
    })
}

pub fn verify(a: &VerifyArgs) -> Result<bool, CliError> {
    let tol = a.tol.unwrap_or(DEFAULT_VERIFY_TOL);
    let (rec, schedule) = load_schedule(&a.schedule, a.shape.as_deref())?;
    let model_spec = a
        .model
        .clone()
        .or(rec.model.clone())
        .ok_or_else(|| CliError::Config("schedule names no model; pass --model".into()))?;
    let target_spec = a
        .target
        .clone()
        .or(rec.target.clone())
        .ok_or_else(|| CliError::Config("schedule names no target; pass --target".into()))?;
    let model = setup::resolve_model(&model_spec, None)?;
    let target = setup::resolve_target(&target_spec)?;
    let h = model.model.system();
    let errors = error_names(&model.model.errors());
    let report = AverageReport::compute(&schedule, h, &target, &errors)?;
    let average = report.to_record(tol)?;
    let errors_pass = errors
        .iter()
        .all(|(name, _)| average.decoupling_residuals.get(name).is_some_and(|&r| r <= tol));
    let second_order_norm = if h.n_qubits() <= SECOND_ORDER_MAX_QUBITS {
        Some(avg_hamiltonian_second(&schedule, &h.to_dense()?)?.frobenius_norm())
    } else {
        None
    };
    let open = match &model.model {
        Model::Open(m) => Some(open_parts(m, &schedule)?),
        Model::Closed(_) => None,
    };
    let pass = average.pass && errors_pass;
    let out = VerifyReport {
        model: model_spec,
        target: target_spec,
        group: rec.group.clone(),
        mode: rec.mode,
        closure_defect: closure_defect(&schedule)?,
        average,
        second_order_norm,
        open,
        errors_pass,
    };
    stdout(&format!("{}\n", to_json(&out)));
    eprintln!(
        "verify: {} schedule, T_c={:.6e}, |H0 - (T~/T_c)H~|={:.2e} tol={tol:.1e} ({})",
        a.schedule.display(),
        schedule.cycle_time(),
        report.residual_norm(),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

#[derive(Serialize)]
struct SimulateReport {
    format_version: u32,
    model: String,
    target: String,
    mode: ScheduleMode,
    cycles: usize,
    cycle_time: f64,
    sim_interval: f64,
    metric: String,
    value: f64,
    per_cycle: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncontrolled: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state_seed: Option<u64>,
    unitarity_deviation: f64,
    tolerance: f64,
    pass: bool,
}

fn random_state(n: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(1 << n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let len = v.norm();
    v.unscale(len)
}

pub fn simulate(a: &SimulateArgs) -> Result<bool, CliError> {
    if a.cycles == 0 {
        return Err(CliError::Config("--cycles must be at least 1".into()));
    }
    let tol = a.tol.unwrap_or(DEFAULT_SIMULATE_TOL);
    let (model_spec, target_spec, schedule) = match &a.schedule {
        Some(path) => {
            let (rec, s) = load_schedule(path, a.shape_file.as_deref())?;
            let model = a.setup.model_override().or(rec.model).ok_or_else(|| {
                CliError::Config("schedule names no model; pass --model".into())
            })?;
            let target = a.setup.target_override().or(rec.target).ok_or_else(|| {
                CliError::Config("schedule names no target; pass --target".into())
            })?;
            (model, target, s)
        }
        None => {
            let plan = Plan::new(&a.setup)?;
            let controls = plan.controls(&a.setup.shape, plan.delta)?;
            let s = plan.schedule(&controls, plan.sim_interval)?;
            (plan.model.spec.clone(), a.setup.target().to_string(), s)
        }
    };
    let model = setup::resolve_model(&model_spec, a.setup.seed)?;
    let target = setup::resolve_target(&target_spec)?;
    let seed = a.setup.seed.unwrap_or(eusim_core::models::DEFAULT_BATH_SEED);

    let (metric, per_cycle, uncontrolled, state_seed, deviation) = match &model.model {
        Model::Closed(h) => {
            let u = cycle_propagator(&schedule, &h.to_dense()?)?;
            let powers = cycle_powers(&u, a.cycles)?;
            let spec = eusim_core::pauli::Spectral::new(&target.to_dense()?)?;
            let mut values = Vec::with_capacity(a.cycles);
            for (k, p) in powers.iter().enumerate() {
                let v = spec.exp((k + 1) as f64 * schedule.sim_interval());
                values.push(match a.metric.as_str() {
                    "infidelity" => phase_invariant_infidelity(p, &v)?,
                    "error" => phase_aligned_error(p, &v)?,
                    other => return Err(CliError::Config(format!("unknown metric `{other}`"))),
                });
            }
            let deviation = powers.last().expect("cycles ≥ 1").unitarity_deviation();
            (a.metric.clone(), values, None, None, deviation)
        }
        Model::Open(m) => {
            if a.metric != "infidelity" {
                return Err(CliError::Config("open models support only --metric infidelity".into()));
            }
            let (ns, nb) = (m.n_system(), m.n_bath());
            let total = m.total()?.to_dense()?;
            let closed = m.uncoupled()?.to_dense()?;
            let open_powers = cycle_powers(&cycle_propagator(&schedule, &total)?, a.cycles)?;
            let closed_powers = cycle_powers(&cycle_propagator(&schedule, &closed)?, a.cycles)?;
            let psi = random_state(ns, seed);
            let values = open_powers
                .iter()
                .zip(&closed_powers)
                .map(|(o, c)| reduced_state_infidelity(o, c, &psi, ns, nb))
                .collect::<eusim_core::Result<Vec<_>>>()?;
            let t = a.cycles as f64 * schedule.cycle_time();
            let free = reduced_state_infidelity(&total.matrix_exp(t)?, &closed.matrix_exp(t)?, &psi, ns, nb)?;
            let deviation = open_powers.last().expect("cycles ≥ 1").unitarity_deviation();
            ("reduced_infidelity".to_string(), values, Some(free), Some(seed), deviation)
        }
    };
    let value = *per_cycle.last().expect("cycles ≥ 1");
    let pass = value <= tol;
    let report = SimulateReport {
        format_version: FORMAT_VERSION,
        model: model_spec,
        target: target_spec,
        mode: schedule.mode(),
        cycles: a.cycles,
        cycle_time: schedule.cycle_time(),
        sim_interval: schedule.sim_interval(),
        metric,
        value,
        per_cycle,
        uncontrolled,
        state_seed,
        unitarity_deviation: deviation,
        tolerance: tol,
        pass,
    };
    emit(&to_json(&report), a.out.as_deref())?;
    eprintln!(
        "simulate: {} after {} cycle(s) = {:.3e} tol={tol:.1e} ({})",
        report.metric,
        a.cycles,
        value,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

fn geometric(min: f64, max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| min * (max / min).powf(k as f64 / (points - 1) as f64))
        .collect()
}

pub fn sweep(a: &SweepArgs) -> Result<bool, CliError> {
    if a.points < 4 {
        return Err(CliError::Config(format!("a sweep needs at least 4 points, got {}", a.points)));
    }
    check_positive("--min", a.min)?;
    check_positive("--max", a.max)?;
    if a.max <= a.min {
        return Err(CliError::Config("--max must exceed --min".into()));
    }
    let plan = Plan::new(&a.setup)?;
    let h = match &plan.model.model {
        Model::Closed(h) => h.to_dense()?,
        Model::Open(_) => return Err(CliError::Config("sweeps run on closed models".into())),
    };
    let target = eusim_core::pauli::Spectral::new(&plan.target.to_dense()?)?;
    let fixed_delta = a.setup.delta;
    let n_ramps = plan.n_ramps_per_cycle() as f64;
    let w = plan.weights.total();

    // (Δ, T̃) for each swept value
    let times = |x: f64| -> Result<(f64, f64), CliError> {
        Ok(match a.param {
            SweepParam::Delta => (x, plan.sim_interval),
            SweepParam::Tsim => (fixed_delta.unwrap_or(DEFAULT_DELTA_FRACTION * x), x),
            SweepParam::Cycle => match fixed_delta {
                Some(d) => {
                    let t = (x - n_ramps * d) / w;
                    check_positive("sim interval implied by the cycle time", t)?;
                    (d, t)
                }
                None => {
                    let t = x / (n_ramps * DEFAULT_DELTA_FRACTION + w);
                    (DEFAULT_DELTA_FRACTION * t, t)
                }
            },
        })
    };
    let xs = geometric(a.min, a.max, a.points);
    let errors = xs
        .par_iter()
        .map(|&x| -> Result<f64, CliError> {
            let (delta, t_sim) = times(x)?;
            let controls = plan.controls(&a.setup.shape, delta)?;
            let s = plan.schedule(&controls, t_sim)?;
            let u = cycle_powers(&cycle_propagator(&s, &h)?, a.cycles)?;
            let v = target.exp(a.cycles as f64 * t_sim);
            Ok(phase_aligned_error(u.last().expect("cycles ≥ 1"), &v)?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let points: Vec<(f64, f64)> = xs.iter().copied().zip(errors).collect();
    let mut csv = String::from("param,error,slope_so_far\n");
    for k in 0..points.len() {
        let slope = if k == 0 {
            String::new()
        } else {
            format!("{:.6}", fit_unchecked(&points[..=k]).slope)
        };
        csv.push_str(&format!("{:.12e},{:.12e},{slope}\n", points[k].0, points[k].1));
    }
    let fit: Result<ScalingFit, _> = scaling_order_fit(&points);
    let outcome = match &fit {
        Ok(f) => {
            csv.push_str(&format!("# fit slope={:.6} intercept={:.6} r2={:.6}\n", f.slope, f.intercept, f.r2));
            Ok(true)
        }
        Err(e) => {
            csv.push_str(&format!("# fit unavailable: {e}\n"));
            Err(CliError::Config(e.to_string()))
        }
    };
    match &a.out {
        Some(p) => std::fs::write(p, &csv).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => stdout(&csv),
    }
    if let Ok(f) = &fit {
        eprintln!("sweep: {} points, slope {:.3} (r2 {:.4})", points.len(), f.slope, f.r2);
    }
    outcome
}

#[derive(Serialize)]
struct GroupExport {
    format_version: u32,
    name: String,
    n_qubits: usize,
    elements: usize,
    element_labels: Vec<String>,
    generator_labels: Vec<String>,
    euler_cycle: Vec<String>,
}

#[derive(Serialize)]
struct Catalogue {
    format_version: u32,
    models: &'static [&'static str],
    targets: &'static [&'static str],
    groups: &'static [&'static str],
}

pub fn models(name: Option<&str>, n: Option<usize>, out: Option<&std::path::Path>) -> Result<bool, CliError> {
    let text = match name {
        None => to_json(&Catalogue {
            format_version: FORMAT_VERSION,
            models: MODEL_PRESETS,
            targets: TARGET_PRESETS,
            groups: PRESETS,
        }),
        Some("lattice") => HoneycombLattice::single_plaquette().to_json(),
        Some(g) => {
            let n = n.unwrap_or(if g == "honeycomb" { 6 } else { 2 });
            let (group, _) = group_preset(g, n)?;
            let cycle = eulerian_cycle(&build_cayley_graph(&group))?;
            to_json(&GroupExport {
                format_version: FORMAT_VERSION,
                name: g.to_string(),
                n_qubits: n,
                elements: group.order(),
                element_labels: group.element_labels().to_vec(),
                generator_labels: group.generator_labels(),
                euler_cycle: cycle.labels().into_iter().map(String::from).collect(),
            })
        }
    };
    emit(&text, out)?;
    Ok(true)
}
