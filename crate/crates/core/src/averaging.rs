//! First- and second-order average Hamiltonians of a control cycle, the
//! generator average `F_Γ`, decoupling residuals and Magnus estimates.
//!
//! Ramp integrals are evaluated in the eigenbasis of the (fixed) pulse axis,
//! where `u(δ)†Hu(δ)` has entries `H'_{jk}·e^{iF(δ)(λ_j−λ_k)}` and only the
//! scalar phase integrals need quadrature.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{group_average, GroupClosure};
use crate::pauli::{DenseOperator, OperatorRecord, OperatorSum};
use crate::pulses::GeneratorPulse;
use crate::quadrature::gauss_legendre_on;
use crate::schedule::{Schedule, SegmentKind};

/// Starting Gauss–Legendre order per smooth piece of a ramp.
pub const QUAD_NODES: usize = 64;
/// Successive quadrature results must agree to this (relative to `Δ`).
pub const QUAD_TOL: f64 = 1e-11;
const MAX_NODES: usize = 4096;
/// Largest register for which the second-order term is computed.
pub const SECOND_ORDER_MAX_QUBITS: usize = 3;

fn composite_nodes(breaks: &[f64], upto: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1].min(upto));
        if b > a {
            out.extend(gauss_legendre_on(n, a, b));
        }
        if w[1] >= upto {
            break;
        }
    }
    out
}

fn phases(pulse: &GeneratorPulse, t: f64) -> Vec<Complex64> {
    let f = pulse.shape().integral(t);
    pulse
        .spectral()
        .eigenvalues()
        .iter()
        .map(|&l| Complex64::from_polar(1.0, f * l))
        .collect()
}

/// `Φ_{jk} = ∫₀^upto e^{iF(s)(λ_j−λ_k)} ds` with a fixed node count.
fn phase_integrals_fixed(pulse: &GeneratorPulse, upto: f64, n: usize) -> DMatrix<Complex64> {
    let d = pulse.spectral().eigenvalues().len();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for (t, w) in composite_nodes(&pulse.shape().breakpoints(), upto, n) {
        let p = phases(pulse, t);
        for k in 0..d {
            let pk = p[k].conj() * w;
            for j in 0..d {
                acc[(j, k)] += p[j] * pk;
            }
        }
    }
    acc
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Doubles the node count until two successive evaluations agree.
fn converge<F>(scale: f64, mut eval: F) -> Result<DMatrix<Complex64>>
where
    F: FnMut(usize) -> DMatrix<Complex64>,
{
    let mut n = QUAD_NODES;
    let mut prev = eval(n);
    let mut doublings = 0;
    while n < MAX_NODES {
        n *= 2;
        doublings += 1;
        let next = eval(n);
        if max_abs_diff(&next, &prev) < QUAD_TOL * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergent(doublings))
}

fn eigenbasis(pulse: &GeneratorPulse, h: &DenseOperator) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if h.n_qubits() != pulse.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} qubits, pulse on {}",
            h.n_qubits(),
            pulse.n_qubits()
        )));
    }
    let v = pulse.spectral().eigenvectors().clone();
    let hp = v.adjoint() * h.matrix() * &v;
    Ok((v, hp))
}

fn from_eigenbasis(v: &DMatrix<Complex64>, m: &DMatrix<Complex64>, n_qubits: usize) -> DenseOperator {
    let out = v * m * v.adjoint();
    DenseOperator::from_matrix(out)
        .map(|d| {
            debug_assert_eq!(d.n_qubits(), n_qubits);
            d
        })
        .expect("square power-of-two matrix")
}

/// `∫₀^Δ u(δ)† H u(δ) dδ` for one ramp; the reversed ramp has the same integral.
pub fn ramp_integral(pulse: &GeneratorPulse, h: &DenseOperator) -> Result<DenseOperator> {
    let (v, hp) = eigenbasis(pulse, h)?;
    let delta = pulse.duration();
    let phi = converge(delta, |n| phase_integrals_fixed(pulse, delta, n))?;
    Ok(from_eigenbasis(&v, &hp.component_mul(&phi), h.n_qubits()))
}

/// `∫₀^Δ dt ∫₀^t ds [u(t)†Hu(t), u(s)†Hu(s)]` for one forward ramp.
pub fn ramp_nested_commutator(pulse: &GeneratorPulse, h: &DenseOperator) -> Result<DenseOperator> {
    let (v, hp) = eigenbasis(pulse, h)?;
    let delta = pulse.duration();
    let breaks = pulse.shape().breakpoints();
    let scale = delta * delta * hp.iter().fold(0.0f64, |m, x| m.max(x.norm())).max(1e-300);
    let w = converge(scale, |n| {
        let mut acc = DMatrix::<Complex64>::zeros(hp.nrows(), hp.ncols());
        for (t, wt) in composite_nodes(&breaks, delta, n / 2) {
            let p = phases(pulse, t);
            let k_t = DMatrix::from_fn(hp.nrows(), hp.ncols(), |j, k| hp[(j, k)] * p[j] * p[k].conj());
            let j_t = hp.component_mul(&phase_integrals_fixed(pulse, t, n / 2));
            acc += (&k_t * &j_t - &j_t * &k_t) * Complex64::new(wt, 0.0);
        }
        acc
    })?;
    Ok(from_eigenbasis(&v, &w, h.n_qubits()))
}

fn lift_pulses(pulses: &[GeneratorPulse], n: usize) -> Result<Vec<GeneratorPulse>> {
    pulses.iter().map(|p| p.lift(n)).collect()
}

/// `F_Γ(h) = (1/|Γ|) Σ_γ (1/Δ) ∫₀^Δ u_γ(τ)† h u_γ(τ) dτ`. Pulses act as
/// identity on any extra trailing qubits of `h`.
pub fn f_gamma(h: &DenseOperator, pulses: &[GeneratorPulse]) -> Result<DenseOperator> {
    if pulses.is_empty() {
        return Err(Error::Invalid("F_Γ needs at least one generator".into()));
    }
    let lifted = lift_pulses(pulses, h.n_qubits())?;
    let parts = lifted
        .par_iter()
        .map(|p| ramp_integral(p, h).map(|m| m.scale(1.0 / p.duration())))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = DenseOperator::zeros(h.n_qubits());
    for m in &parts {
        acc = &acc + m;
    }
    Ok(acc.scale(1.0 / pulses.len() as f64))
}

/// `‖Π_G[F_Γ(h)]‖_F`.
pub fn decoupling_residual(h: &DenseOperator, g: &GroupClosure, pulses: &[GeneratorPulse]) -> Result<f64> {
    Ok(group_average(&f_gamma(h, pulses)?, g)?.frobenius_norm())
}

/// Per-segment integrals `∫_seg U_c†HU_c`, in segment order.
fn segment_integrals(s: &Schedule, h: &DenseOperator) -> Result<Vec<DenseOperator>> {
    let n = h.n_qubits();
    if n < s.controls().n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "operator on {n} qubits, controls on {}",
            s.controls().n_qubits()
        )));
    }
    let pulses = lift_pulses(s.controls().pulses(), n)?;
    let ramps = if s.n_ramps() > 0 {
        pulses
            .par_iter()
            .map(|p| ramp_integral(p, h))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    s.segments()
        .par_iter()
        .map(|seg| {
            let anchor = s.anchor(seg).lift(n)?;
            Ok(match seg.kind {
                SegmentKind::Coast => h.conjugate_unchecked(&anchor).scale(seg.duration),
                SegmentKind::Ramp => {
                    ramps[seg.generator.expect("ramps carry a generator")].conjugate_unchecked(&anchor)
                }
            })
        })
        .collect()
}

/// `H̄⁽⁰⁾ = (1/T_c) ∫₀^{T_c} U_c† H U_c dt`; controls act as `U_c ⊗ I` on
/// extra trailing qubits of `h`.
pub fn avg_hamiltonian_first_dense(s: &Schedule, h: &DenseOperator) -> Result<DenseOperator> {
    let parts = segment_integrals(s, h)?;
    let mut acc = DenseOperator::zeros(h.n_qubits());
    for p in &parts {
        acc = &acc + p;
    }
    Ok(acc.scale(1.0 / s.cycle_time()))
}

pub fn avg_hamiltonian_first(s: &Schedule, h: &OperatorSum) -> Result<DenseOperator> {
    avg_hamiltonian_first_dense(s, &h.to_dense()?)
}

/// `H̄⁽¹⁾ = (−i/2T_c) ∫₀^{T_c} dt ∫₀^t ds [H'(t), H'(s)]`, assembled from
/// cross terms between segments plus nested quadrature inside each ramp.
/// Only for registers of at most three qubits.
pub fn avg_hamiltonian_second(s: &Schedule, h: &DenseOperator) -> Result<DenseOperator> {
    let n = h.n_qubits();
    if n > SECOND_ORDER_MAX_QUBITS {
        return Err(Error::DimensionLimit {
            n_qubits: n,
            limit: SECOND_ORDER_MAX_QUBITS,
        });
    }
    let integrals = segment_integrals(s, h)?;
    let pulses = lift_pulses(s.controls().pulses(), n)?;
    let nested = if s.n_ramps() > 0 {
        pulses
            .par_iter()
            .map(|p| ramp_nested_commutator(p, h))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let mut total = DenseOperator::zeros(n);
    let mut before = DenseOperator::zeros(n);
    for (seg, part) in s.segments().iter().zip(&integrals) {
        total = &total + &part.commutator(&before);
        if seg.kind == SegmentKind::Ramp {
            let anchor = s.anchor(seg).lift(n)?;
            let inner = nested[seg.generator.expect("ramps carry a generator")].conjugate_unchecked(&anchor);
            total = if seg.reversed { &total - &inner } else { &total + &inner };
        }
        before = &before + part;
    }
    Ok(total.scale_complex(Complex64::new(0.0, -0.5 / s.cycle_time())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnusEstimate {
    /// `(t‖H‖)^{κ+1}` with the unknown constant set to one.
    pub estimate: f64,
    pub t_norm: f64,
    pub kappa: u32,
    /// `t‖H‖ < π`.
    pub converges: bool,
    /// The prefactor `c_κ` is only known to be of order one.
    pub constant_unknown: bool,
}

/// Scaling estimate `(t‖H‖)^{κ+1}` of the Magnus remainder beyond order `κ`.
pub fn magnus_error_estimate(h: &OperatorSum, t: f64, kappa: u32) -> Result<MagnusEstimate> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("time must be nonnegative, got {t}")));
    }
    let t_norm = t * h.to_dense()?.operator_norm();
    Ok(MagnusEstimate {
        estimate: t_norm.powi(kappa as i32 + 1),
        t_norm,
        kappa,
        converges: t_norm < std::f64::consts::PI,
        constant_unknown: true,
    })
}

/// First-order verification of a schedule against a target.
#[derive(Debug, Clone)]
pub struct AverageReport {
    pub h_bar_0: DenseOperator,
    /// `(T̃/T_c)·H̃`.
    pub target_scaled: DenseOperator,
    pub decoupling_residuals: BTreeMap<String, f64>,
    pub magnus: MagnusEstimate,
    pub cycle_time: f64,
    pub sim_interval: f64,
}

impl AverageReport {
    /// Compares `H̄⁽⁰⁾` of `s` for input `h` with the scaled target, and
    /// records `‖Π_G[F_Γ(·)]‖` for `h` and each named error operator.
    pub fn compute(
        s: &Schedule,
        h: &OperatorSum,
        target: &OperatorSum,
        errors: &[(String, OperatorSum)],
    ) -> Result<Self> {
        let h_dense = h.to_dense()?;
        let h_bar_0 = avg_hamiltonian_first_dense(s, &h_dense)?;
        let target_scaled = target.to_dense()?.scale(s.sim_interval() / s.cycle_time());
        let g = s.group();
        let pulses = s.controls().pulses();
        let mut decoupling_residuals = BTreeMap::new();
        decoupling_residuals.insert("input".to_string(), decoupling_residual(&h_dense, g, pulses)?);
        for (name, e) in errors {
            decoupling_residuals.insert(name.clone(), decoupling_residual(&e.to_dense()?, g, pulses)?);
        }
        Ok(Self {
            h_bar_0,
            target_scaled,
            decoupling_residuals,
            magnus: magnus_error_estimate(h, s.cycle_time(), 1)?,
            cycle_time: s.cycle_time(),
            sim_interval: s.sim_interval(),
        })
    }

    /// `‖H̄⁽⁰⁾ − (T̃/T_c)H̃‖_F`.
    pub fn residual_norm(&self) -> f64 {
        (&self.h_bar_0 - &self.target_scaled).frobenius_norm()
    }

    pub fn to_record(&self, tolerance: f64) -> Result<AverageRecord> {
        let residual_norm = self.residual_norm();
        Ok(AverageRecord {
            format_version: crate::FORMAT_VERSION,
            cycle_time: self.cycle_time,
            sim_interval: self.sim_interval,
            residual_norm,
            tolerance,
            pass: residual_norm <= tolerance,
            decoupling_residuals: self.decoupling_residuals.clone(),
            magnus: self.magnus,
            h_bar_0: self.h_bar_0.pauli_coefficients()?.to_record(),
            target_scaled: self.target_scaled.pauli_coefficients()?.to_record(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRecord {
    pub format_version: u32,
    pub cycle_time: f64,
    pub sim_interval: f64,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub decoupling_residuals: BTreeMap<String, f64>,
    pub magnus: MagnusEstimate,
    pub h_bar_0: OperatorRecord,
    pub target_scaled: OperatorRecord,
}
