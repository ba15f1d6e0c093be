//! Exact (numerically integrated) evolution under `H + H_c(t)`, error
//! metrics against the target evolution, open-system models and
//! scaling-order fits.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{DenseOperator, OperatorSum, PauliWord, Spectral, UNITARY_TOL};
use crate::pulses::GeneratorPulse;
use crate::schedule::{Schedule, ScheduleMode, SegmentKind};

/// Ramp substeps are doubled until the propagator changes by less than this.
pub const SUBSTEP_TOL: f64 = 1e-10;
pub const MAX_DOUBLINGS: usize = 16;
const INITIAL_SUBSTEPS: usize = 4;

/// `H_S ⊗ I + I ⊗ H_B + Σ_α S_α ⊗ B_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystemModel {
    system: OperatorSum,
    bath: OperatorSum,
    couplings: Vec<(OperatorSum, OperatorSum)>,
}

/// `a ⊗ b` for Pauli sums on disjoint registers (`a` first).
pub fn tensor(a: &OperatorSum, b: &OperatorSum) -> Result<OperatorSum> {
    let (na, nb) = (a.n_qubits(), b.n_qubits());
    let mut terms = Vec::with_capacity(a.len() * b.len());
    for (ca, wa) in a.terms() {
        for (cb, wb) in b.terms() {
            let letters = wa
                .letters()
                .iter()
                .map(|(&q, &p)| (q, p))
                .chain(wb.letters().iter().map(|(&q, &p)| (q + na, p)));
            terms.push((ca * cb, PauliWord::new(na + nb, letters)?));
        }
    }
    OperatorSum::new(na + nb, terms)
}

fn identity_sum(n: usize) -> OperatorSum {
    OperatorSum::term(1.0, PauliWord::identity(n))
}

impl OpenSystemModel {
    pub fn new(
        system: OperatorSum,
        bath: OperatorSum,
        couplings: Vec<(OperatorSum, OperatorSum)>,
    ) -> Result<Self> {
        for (s, b) in &couplings {
            if s.n_qubits() != system.n_qubits() || b.n_qubits() != bath.n_qubits() {
                return Err(Error::DimensionMismatch(
                    "coupling operators must live on the system and bath registers".into(),
                ));
            }
        }
        let total = system.n_qubits() + bath.n_qubits();
        if total > crate::pauli::DEFAULT_DENSE_LIMIT {
            return Err(Error::DimensionLimit {
                n_qubits: total,
                limit: crate::pauli::DEFAULT_DENSE_LIMIT,
            });
        }
        Ok(Self {
            system,
            bath,
            couplings,
        })
    }

    pub fn system(&self) -> &OperatorSum {
        &self.system
    }

    pub fn bath(&self) -> &OperatorSum {
        &self.bath
    }

    pub fn couplings(&self) -> &[(OperatorSum, OperatorSum)] {
        &self.couplings
    }

    pub fn n_system(&self) -> usize {
        self.system.n_qubits()
    }

    pub fn n_bath(&self) -> usize {
        self.bath.n_qubits()
    }

    /// `Σ_α S_α ⊗ B_α`.
    pub fn coupling_operator(&self) -> Result<OperatorSum> {
        let mut acc = OperatorSum::zero(self.n_system() + self.n_bath());
        for (s, b) in &self.couplings {
            acc = acc + tensor(s, b)?;
        }
        Ok(acc)
    }

    /// `H_S ⊗ I + I ⊗ H_B`.
    pub fn uncoupled(&self) -> Result<OperatorSum> {
        Ok(tensor(&self.system, &identity_sum(self.n_bath()))?
            + tensor(&identity_sum(self.n_system()), &self.bath)?)
    }

    pub fn total(&self) -> Result<OperatorSum> {
        Ok(self.uncoupled()? + self.coupling_operator()?)
    }

    /// Error generators `S_α` (deduplicated, in order).
    pub fn error_operators(&self) -> Vec<OperatorSum> {
        let mut out: Vec<OperatorSum> = Vec::new();
        for (s, _) in &self.couplings {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn coupling_norm(&self) -> Result<f64> {
        Ok(self.coupling_operator()?.to_dense()?.frobenius_norm())
    }
}

/// `1 − |tr(u†v)|/d`, clamped to `[0, 1]`.
pub fn phase_invariant_infidelity(u: &DenseOperator, v: &DenseOperator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", u.dim(), v.dim())));
    }
    u.ensure_unitary(1e-8)?;
    v.ensure_unitary(1e-8)?;
    let overlap = (u.adjoint().matrix() * v.matrix()).trace().norm() / u.dim() as f64;
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// `‖u − e^{iφ}v‖_F` with the phase `e^{iφ} = tr(v†u)/|tr(v†u)|`.
pub fn phase_aligned_error(u: &DenseOperator, v: &DenseOperator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", u.dim(), v.dim())));
    }
    let tr = (v.adjoint().matrix() * u.matrix()).trace();
    let phase = if tr.norm() > 0.0 {
        tr / tr.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok((u.matrix() - v.matrix() * phase).norm())
}

const C1: f64 = 0.5 - 0.288_675_134_594_812_9; // 1/2 − √3/6
const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
const B1: f64 = 0.25 + 0.288_675_134_594_812_9; // 1/4 + √3/6
const B2: f64 = 0.25 - 0.288_675_134_594_812_9;

/// Lab-frame propagator of one ramp under `h + c(t)·X_γ`, with
/// `c(t) = f(t)` forward and `c(t) = −f(Δ−t)` reversed, by the fourth-order
/// commutator-free scheme on `m` equal substeps.
pub fn ramp_propagator_fixed(
    h: &DenseOperator,
    pulse: &GeneratorPulse,
    reversed: bool,
    m: usize,
) -> Result<DenseOperator> {
    let delta = pulse.duration();
    let shape = pulse.shape();
    let x = pulse.axis_dense();
    let coeff = |t: f64| if reversed { -shape.value(delta - t) } else { shape.value(t) };
    let step = delta / m as f64;
    let mut u = DenseOperator::identity(h.n_qubits());
    for i in 0..m {
        let t0 = i as f64 * step;
        let a1 = h + &x.scale(coeff(t0 + C1 * step));
        let a2 = h + &x.scale(coeff(t0 + C2 * step));
        let first = Spectral::new(&(&a1.scale(B1) + &a2.scale(B2)))?.exp(step);
        let second = Spectral::new(&(&a1.scale(B2) + &a2.scale(B1)))?.exp(step);
        u = &(&second * &first) * &u;
    }
    Ok(u)
}

/// As [`ramp_propagator_fixed`], doubling the substeps until converged.
pub fn ramp_propagator(h: &DenseOperator, pulse: &GeneratorPulse, reversed: bool) -> Result<DenseOperator> {
    let mut m = INITIAL_SUBSTEPS;
    let mut prev = ramp_propagator_fixed(h, pulse, reversed, m)?;
    for _ in 0..MAX_DOUBLINGS {
        m *= 2;
        let next = ramp_propagator_fixed(h, pulse, reversed, m)?;
        if (&next - &prev).frobenius_norm() < SUBSTEP_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergent(MAX_DOUBLINGS))
}

/// Lab-frame propagator `U(T_c)` of one cycle. Controls act as `U_c ⊗ I` on
/// extra trailing qubits of `h`.
pub fn cycle_propagator(s: &Schedule, h: &DenseOperator) -> Result<DenseOperator> {
    let n = h.n_qubits();
    if n < s.controls().n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {n} qubits, controls on {}",
            s.controls().n_qubits()
        )));
    }
    let spectral = Spectral::new(h)?;
    let pulses: Vec<GeneratorPulse> = s
        .controls()
        .pulses()
        .iter()
        .map(|p| p.lift(n))
        .collect::<Result<_>>()?;
    let mut ramps: HashMap<(usize, bool), DenseOperator> = HashMap::new();
    let mut u = DenseOperator::identity(n);
    for seg in s.segments() {
        let step = match seg.kind {
            SegmentKind::Coast if seg.duration == 0.0 => continue,
            SegmentKind::Coast if s.mode() == ScheduleMode::Bb => {
                // frame switched in, held, switched back out
                let frame = s.anchor(seg).lift(n)?;
                &(&frame * &spectral.exp(seg.duration)) * &frame.adjoint()
            }
            SegmentKind::Coast => spectral.exp(seg.duration),
            SegmentKind::Ramp => {
                let k = seg.generator.expect("ramps carry a generator");
                match ramps.get(&(k, seg.reversed)) {
                    Some(r) => r.clone(),
                    None => {
                        let r = ramp_propagator(h, &pulses[k], seg.reversed)?;
                        ramps.insert((k, seg.reversed), r.clone());
                        r
                    }
                }
            }
        };
        u = &step * &u;
    }
    Ok(u)
}

/// `U(M·T_c) = U(T_c)^M`.
pub fn evolve_schedule(s: &Schedule, h: &DenseOperator, cycles: usize) -> Result<DenseOperator> {
    Ok(cycle_powers(&cycle_propagator(s, h)?, cycles)?
        .pop()
        .expect("at least one cycle"))
}

/// `[U, U², …, U^M]`.
pub fn cycle_powers(u: &DenseOperator, cycles: usize) -> Result<Vec<DenseOperator>> {
    if cycles == 0 {
        return Err(Error::Invalid("at least one cycle is required".into()));
    }
    let mut out = Vec::with_capacity(cycles);
    out.push(u.clone());
    for _ in 1..cycles {
        let next = u * out.last().expect("non-empty");
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub final_propagator: DenseOperator,
    pub target_propagator: DenseOperator,
    pub infidelity: f64,
    /// Phase-aligned `‖U(kT_c) − Ũ(kT̃)‖_F` after each cycle `k`.
    pub per_cycle_error: Vec<f64>,
    pub scaling_fit: Option<ScalingFit>,
}

impl SimulationReport {
    /// Evolves `cycles` cycles of `s` under `h` and compares with
    /// `exp(−iH̃·kT̃)`.
    pub fn compute(s: &Schedule, h: &OperatorSum, target: &OperatorSum, cycles: usize) -> Result<Self> {
        let hd = h.to_dense()?;
        let u = cycle_propagator(s, &hd)?;
        let powers = cycle_powers(&u, cycles)?;
        let target_spec = Spectral::new(&target.to_dense()?)?;
        let per_cycle_error = powers
            .iter()
            .enumerate()
            .map(|(k, p)| phase_aligned_error(p, &target_spec.exp((k + 1) as f64 * s.sim_interval())))
            .collect::<Result<Vec<_>>>()?;
        let final_propagator = powers.last().expect("non-empty").clone();
        let target_propagator = target_spec.exp(cycles as f64 * s.sim_interval());
        let deviation = final_propagator.unitarity_deviation();
        if deviation > 1e-9 * cycles as f64 {
            return Err(Error::NotUnitary(deviation));
        }
        let infidelity = phase_invariant_infidelity(&final_propagator, &target_propagator)?;
        Ok(Self {
            final_propagator,
            target_propagator,
            infidelity,
            per_cycle_error,
            scaling_fit: None,
        })
    }

    pub fn to_record(&self) -> SimulationRecord {
        SimulationRecord {
            format_version: crate::FORMAT_VERSION,
            infidelity: self.infidelity,
            per_cycle_error: self.per_cycle_error.clone(),
            unitarity_deviation: self.final_propagator.unitarity_deviation(),
            scaling_fit: self.scaling_fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub format_version: u32,
    pub infidelity: f64,
    pub per_cycle_error: Vec<f64>,
    pub unitarity_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_fit: Option<ScalingFit>,
}

/// `tr_B(a)` for `a` on `n_s + n_b` qubits (system first).
pub fn partial_trace_bath(a: &DenseOperator, n_s: usize, n_b: usize) -> Result<DenseOperator> {
    check_split(a, n_s, n_b)?;
    let (ds, db) = (1usize << n_s, 1usize << n_b);
    let m = a.matrix();
    DenseOperator::from_matrix(DMatrix::from_fn(ds, ds, |i, j| {
        (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()
    }))
}

/// `tr_S(a)` for `a` on `n_s + n_b` qubits (system first).
pub fn partial_trace_system(a: &DenseOperator, n_s: usize, n_b: usize) -> Result<DenseOperator> {
    check_split(a, n_s, n_b)?;
    let (ds, db) = (1usize << n_s, 1usize << n_b);
    let m = a.matrix();
    DenseOperator::from_matrix(DMatrix::from_fn(db, db, |i, j| {
        (0..ds).map(|s| m[(s * db + i, s * db + j)]).sum()
    }))
}

fn check_split(a: &DenseOperator, n_s: usize, n_b: usize) -> Result<()> {
    if a.n_qubits() != n_s + n_b || n_s == 0 || n_b == 0 {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} qubits cannot split as {n_s} + {n_b}",
            a.n_qubits()
        )));
    }
    Ok(())
}

/// Orthogonal split `h = system ⊗ I + I ⊗ bath + coupling`, with the
/// identity component assigned to the bath part.
#[derive(Debug, Clone)]
pub struct ErrorParts {
    pub system: DenseOperator,
    pub bath: DenseOperator,
    pub coupling: DenseOperator,
}

impl ErrorParts {
    pub fn norms(&self) -> ErrorNorms {
        ErrorNorms {
            system: self.system.frobenius_norm(),
            bath: self.bath.frobenius_norm(),
            coupling: self.coupling.frobenius_norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub system: f64,
    pub bath: f64,
    pub coupling: f64,
}

/// Parts are returned on the full register.
pub fn effective_error_decomposition(h_bar: &DenseOperator, n_s: usize, n_b: usize) -> Result<ErrorParts> {
    let (ds, db) = ((1usize << n_s) as f64, (1usize << n_b) as f64);
    let bath = DenseOperator::identity(n_s).kron(&partial_trace_system(h_bar, n_s, n_b)?.scale(1.0 / ds));
    let shared = h_bar.trace() / (ds * db);
    let system = &partial_trace_bath(h_bar, n_s, n_b)?
        .scale(1.0 / db)
        .kron(&DenseOperator::identity(n_b))
        - &DenseOperator::identity(n_s + n_b).scale_complex(shared);
    let coupling = &(h_bar - &bath) - &system;
    Ok(ErrorParts {
        system,
        bath,
        coupling,
    })
}

/// `1 − tr(ρ_S^closed ρ_S^open)` for the system state `ψ`, with the bath
/// starting maximally mixed. The closed evolution must leave the system
/// pure (no couplings), so the overlap is the fidelity.
pub fn reduced_state_infidelity(
    u_open: &DenseOperator,
    u_closed: &DenseOperator,
    psi: &DVector<Complex64>,
    n_s: usize,
    n_b: usize,
) -> Result<f64> {
    if psi.len() != 1 << n_s {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} on {n_s} qubits",
            psi.len()
        )));
    }
    let rho_s = psi * psi.adjoint();
    let rho0 = DenseOperator::from_matrix(rho_s)?.kron(&DenseOperator::identity(n_b).scale(1.0 / (1u64 << n_b) as f64));
    let evolve = |u: &DenseOperator| -> Result<DenseOperator> {
        let rho = DenseOperator::from_matrix(u.matrix() * rho0.matrix() * u.adjoint().matrix())?;
        partial_trace_bath(&rho, n_s, n_b)
    };
    let open = evolve(u_open)?;
    let closed = evolve(u_closed)?;
    let overlap = (closed.matrix() * open.matrix()).trace().re;
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// Least-squares fit of `log(error)` against `log(T_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Errors at or below this are treated as numerical noise.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Needs at least four points spanning a decade, all above the floor.
pub fn scaling_order_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0) || !(p.1 > ERROR_FLOOR)) {
        return Err(Error::Fit(format!(
            "point ({}, {}) is nonpositive or at the numerical floor",
            p.0, p.1
        )));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::Fit(format!("span {:.3} is less than one decade", hi / lo)));
    }
    Ok(fit_unchecked(points))
}

/// Fit without the span/count checks (for running estimates).
pub fn fit_unchecked(points: &[(f64, f64)]) -> ScalingFit {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    ScalingFit { slope, intercept, r2 }
}

/// Checks a propagator against the unitarity tolerance scaled by `cycles`.
pub fn check_unitary(u: &DenseOperator, cycles: usize) -> Result<()> {
    u.ensure_unitary(UNITARY_TOL.max(1e-9 * cycles as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_cayley_graph, eulerian_cycle, phase_distance};
    use crate::models::{dipolar_target, group_preset, heisenberg_chain, open_chain_model, CouplingAxis};
    use crate::pauli::Pauli;
    use crate::pulses::PulseShape;
    use crate::reachability::{solve_weights, WeightAssignment};
    use crate::schedule::{build_bb_schedule, build_eulerian_schedule, build_symmetric_schedule, ControlSystem};
    use std::sync::Arc;

    fn dipolar_controls(delta: f64) -> Arc<ControlSystem> {
        let (g, _) = group_preset("g1", 2).unwrap();
        Arc::new(ControlSystem::new(g, &PulseShape::sine_squared(delta, 1.0).unwrap()).unwrap())
    }

    fn single(n: usize, q: usize, p: Pauli) -> OperatorSum {
        OperatorSum::term(1.0, PauliWord::single(n, q, p))
    }

    #[test]
    fn infidelity_examples() {
        let x = single(1, 0, Pauli::X).to_dense().unwrap();
        let i = DenseOperator::identity(1);
        assert_eq!(phase_invariant_infidelity(&i, &i).unwrap(), 0.0);
        let u = x.matrix_exp(0.3).unwrap();
        let phased = u.scale_complex(Complex64::from_polar(1.0, 0.7));
        assert!(phase_invariant_infidelity(&u, &phased).unwrap() < 1e-15);
        assert!((phase_invariant_infidelity(&i, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(phase_invariant_infidelity(&i, &x.scale(2.0)).is_err());
        assert!(phase_aligned_error(&u, &phased).unwrap() < 1e-15);
    }

    #[test]
    fn identity_weight_bb_is_free_evolution() {
        let c = dipolar_controls(0.1);
        let s = build_bb_schedule(&WeightAssignment::identity(c.group()), &c, 0.7).unwrap();
        let h = heisenberg_chain(2, 1.0).unwrap().to_dense().unwrap();
        let u = evolve_schedule(&s, &h, 1).unwrap();
        assert!((&u - &h.matrix_exp(0.7).unwrap()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn cf4_is_fourth_order() {
        let c = dipolar_controls(0.2);
        let h = heisenberg_chain(2, 1.0).unwrap().to_dense().unwrap();
        let p = &c.pulses()[0];
        let reference = ramp_propagator_fixed(&h, p, false, 4096).unwrap();
        let e1 = (&ramp_propagator_fixed(&h, p, false, 8).unwrap() - &reference).frobenius_norm();
        let e2 = (&ramp_propagator_fixed(&h, p, false, 16).unwrap() - &reference).frobenius_norm();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "observed order {order}");
    }

    #[test]
    fn ramp_propagator_matches_richardson_reference() {
        let c = dipolar_controls(0.2);
        let h = heisenberg_chain(2, 1.0).unwrap().to_dense().unwrap();
        let p = &c.pulses()[1];
        let got = ramp_propagator(&h, p, true).unwrap();
        let a = ramp_propagator_fixed(&h, p, true, 512).unwrap();
        let b = ramp_propagator_fixed(&h, p, true, 1024).unwrap();
        let extrapolated = &b + &(&b - &a).scale(1.0 / 15.0);
        assert!((&got - &extrapolated).frobenius_norm() < 1e-9);
    }

    #[test]
    fn control_only_ramp_matches_pulse() {
        let c = dipolar_controls(0.2);
        let zero = DenseOperator::zeros(2);
        for p in c.pulses() {
            let u = ramp_propagator(&zero, p, false).unwrap();
            assert!((&u - &p.propagator(p.duration()).unwrap()).frobenius_norm() < 1e-10);
            let r = ramp_propagator(&zero, p, true).unwrap();
            assert!((&r - &p.propagator(p.duration()).unwrap().adjoint()).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn evolution_unitary_and_composes() {
        let c = dipolar_controls(0.02);
        let g = c.group();
        let h = heisenberg_chain(2, 1.0).unwrap();
        let w = solve_weights(&h, &dipolar_target(1.0), g).unwrap();
        let cycle = eulerian_cycle(&build_cayley_graph(g)).unwrap();
        let s = build_eulerian_schedule(&cycle, &w, &c, 0.05).unwrap();
        let hd = h.to_dense().unwrap();
        let u1 = evolve_schedule(&s, &hd, 1).unwrap();
        let u2 = evolve_schedule(&s, &hd, 2).unwrap();
        assert!((&u2 - &(&u1 * &u1)).frobenius_norm() < 1e-10);
        assert!(u2.unitarity_deviation() < 2e-9);
        assert!(evolve_schedule(&s, &hd, 0).is_err());
    }

    #[test]
    fn eulerian_error_is_second_order() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        let mut errs = Vec::new();
        for t_sim in [0.02, 0.01] {
            let c = dipolar_controls(t_sim / 10.0);
            let g = c.group();
            let w = solve_weights(&h, &dipolar_target(1.0), g).unwrap();
            let cycle = eulerian_cycle(&build_cayley_graph(g)).unwrap();
            let s = build_eulerian_schedule(&cycle, &w, &c, t_sim).unwrap();
            let r = SimulationReport::compute(&s, &h, &dipolar_target(1.0), 1).unwrap();
            errs.push(r.per_cycle_error[0]);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn symmetric_error_is_third_order() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        let mut errs = Vec::new();
        for t_sim in [0.02, 0.01] {
            let c = dipolar_controls(t_sim / 10.0);
            let g = c.group();
            let w = solve_weights(&h, &dipolar_target(1.0), g).unwrap();
            let cycle = eulerian_cycle(&build_cayley_graph(g)).unwrap();
            let s = build_symmetric_schedule(&cycle, &w, &c, t_sim).unwrap();
            let r = SimulationReport::compute(&s, &h, &dipolar_target(1.0), 1).unwrap();
            errs.push(r.per_cycle_error[0]);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 3.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn decomposition_examples() {
        let a = heisenberg_chain(2, 1.0).unwrap();
        let ai = tensor(&a, &identity_sum(1)).unwrap().to_dense().unwrap();
        let parts = effective_error_decomposition(&ai, 2, 1).unwrap();
        assert!(parts.coupling.frobenius_norm() < 1e-14);
        assert!(parts.bath.frobenius_norm() < 1e-14);
        assert!((&parts.system - &ai).frobenius_norm() < 1e-14);

        let m = open_chain_model(2, &CouplingAxis::parse_list("xyz").unwrap(), 3, 0.1).unwrap();
        let total = m.total().unwrap().to_dense().unwrap();
        let parts = effective_error_decomposition(&total, 2, 1).unwrap();
        assert!((parts.coupling.frobenius_norm() - m.coupling_norm().unwrap()).abs() < 1e-12);
        let sum = &(&parts.system + &parts.bath) + &parts.coupling;
        assert!((&sum - &total).frobenius_norm() < 1e-13);
        for (x, y) in [(&parts.system, &parts.bath), (&parts.system, &parts.coupling), (&parts.bath, &parts.coupling)] {
            assert!((x.adjoint().matrix() * y.matrix()).trace().norm() < 1e-12);
        }
        assert!(effective_error_decomposition(&total, 1, 1).is_err());
    }

    #[test]
    fn uncoupled_evolution_factorizes() {
        let m = open_chain_model(2, &[], 5, 0.1).unwrap();
        let t = 0.37;
        let u = m.total().unwrap().to_dense().unwrap().matrix_exp(t).unwrap();
        let us = m.system().to_dense().unwrap().matrix_exp(t).unwrap();
        let ub = m.bath().to_dense().unwrap().matrix_exp(t).unwrap();
        assert!(phase_invariant_infidelity(&u, &us.kron(&ub)).unwrap() < 1e-9);
    }

    #[test]
    fn reduced_infidelity_zero_without_coupling() {
        let m = open_chain_model(2, &[], 5, 0.1).unwrap();
        let u = m.total().unwrap().to_dense().unwrap().matrix_exp(0.4).unwrap();
        let mut psi = DVector::<Complex64>::zeros(4);
        psi[1] = Complex64::new(1.0, 0.0);
        assert!(reduced_state_infidelity(&u, &u, &psi, 2, 1).unwrap() < 1e-14);
        let coupled = open_chain_model(2, &[CouplingAxis::X], 5, 0.1).unwrap();
        let v = coupled.total().unwrap().to_dense().unwrap().matrix_exp(0.4).unwrap();
        assert!(reduced_state_infidelity(&v, &u, &psi, 2, 1).unwrap() > 0.0);
    }

    #[test]
    fn lifted_cycle_keeps_bath_free() {
        let c = dipolar_controls(0.02);
        let g = c.group();
        let s = build_eulerian_schedule(
            &eulerian_cycle(&build_cayley_graph(g)).unwrap(),
            &WeightAssignment::uniform(g),
            &c,
            0.1,
        )
        .unwrap();
        let hb = single(3, 2, Pauli::Y).to_dense().unwrap();
        let u = cycle_propagator(&s, &hb).unwrap();
        let expect = hb.matrix_exp(s.cycle_time()).unwrap();
        assert!(phase_distance(&u, &expect) < 1e-12);
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| {
            let t = 0.01 * 10f64.powf(k as f64 / 5.0);
            (t, t * t)
        })
        .collect();
        let fit = scaling_order_fit(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(scaling_order_fit(&pts[..3]).is_err());
        let narrow: Vec<(f64, f64)> = (0..5).map(|k| (1.0 + k as f64, 1.0)).collect();
        assert!(scaling_order_fit(&narrow).is_err());
        let mut floored = pts.clone();
        floored[0].1 = 1e-13;
        assert!(scaling_order_fit(&floored).is_err());
    }
}
