//! Bounded-strength ramp pulses `h_γ(t) = f(t)·X_γ` on a fixed axis.
//!
//! Because the axis is fixed, the ramp propagator needs no time ordering:
//! `u_γ(δ) = exp(−i·F(δ)·X_γ)` with `F(δ) = ∫₀^δ f`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{phase_distance, GeneratorSpec};
use crate::pauli::{DenseOperator, OperatorSum, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    SineSquared,
    Triangle,
    Constant,
    Tabulated,
}

impl ShapeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sine2" | "sine_squared" => Ok(ShapeKind::SineSquared),
            "triangle" => Ok(ShapeKind::Triangle),
            "constant" => Ok(ShapeKind::Constant),
            "tabulated" => Ok(ShapeKind::Tabulated),
            other => Err(Error::Invalid(format!("unknown pulse shape `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::SineSquared => "sine2",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Constant => "constant",
            ShapeKind::Tabulated => "tabulated",
        }
    }
}

/// Envelope `f(t)` on `[0, Δ]` with prescribed area `∫₀^Δ f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseShape {
    kind: ShapeKind,
    duration: f64,
    area: f64,
    /// Piecewise-linear samples `(t, f)` with cumulative integrals (tabulated only).
    samples: Vec<(f64, f64, f64)>,
}

impl PulseShape {
    fn analytic(kind: ShapeKind, duration: f64, area: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Invalid(format!("pulse duration must be positive, got {duration}")));
        }
        Ok(Self {
            kind,
            duration,
            area,
            samples: Vec::new(),
        })
    }

    /// `f(t) = (2A/Δ) sin²(πt/Δ)`.
    pub fn sine_squared(duration: f64, area: f64) -> Result<Self> {
        Self::analytic(ShapeKind::SineSquared, duration, area)
    }

    /// Symmetric triangle peaking at `Δ/2` with height `2A/Δ`.
    pub fn triangle(duration: f64, area: f64) -> Result<Self> {
        Self::analytic(ShapeKind::Triangle, duration, area)
    }

    /// Flat `f = A/Δ`; violates the continuity condition.
    pub fn constant(duration: f64, area: f64) -> Result<Self> {
        Self::analytic(ShapeKind::Constant, duration, area)
    }

    pub fn of_kind(kind: ShapeKind, duration: f64, area: f64) -> Result<Self> {
        match kind {
            ShapeKind::Tabulated => Err(Error::Invalid(
                "tabulated shapes are built from samples".into(),
            )),
            k => Self::analytic(k, duration, area),
        }
    }

    /// Piecewise-linear envelope through `(t, f)` samples starting at `t = 0`.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Invalid("tabulated pulse needs at least two samples".into()));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::Invalid("tabulated pulse must start at t = 0".into()));
        }
        let mut table = Vec::with_capacity(samples.len());
        let mut acc = 0.0;
        for (i, &(t, f)) in samples.iter().enumerate() {
            if !t.is_finite() || !f.is_finite() {
                return Err(Error::Invalid("non-finite pulse sample".into()));
            }
            if i > 0 {
                let (t0, f0) = samples[i - 1];
                if t <= t0 {
                    return Err(Error::Invalid("sample times must increase".into()));
                }
                acc += 0.5 * (t - t0) * (f + f0);
            }
            table.push((t, f, acc));
        }
        Ok(Self {
            kind: ShapeKind::Tabulated,
            duration: samples[samples.len() - 1].0,
            area: acc,
            samples: table,
        })
    }

    /// Reads `t,f` rows; a non-numeric first line is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
                return Err(Error::Invalid(format!("line {}: expected `t,f`", i + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(t), Ok(f)) => samples.push((t, f)),
                _ if samples.is_empty() && i == 0 => continue,
                _ => return Err(Error::Invalid(format!("line {}: bad number", i + 1))),
            }
        }
        Self::tabulated(&samples)
    }

    /// Same envelope rescaled to the given area.
    pub fn with_area(&self, area: f64) -> Self {
        let mut out = self.clone();
        if self.kind == ShapeKind::Tabulated {
            let s = if self.area == 0.0 { 0.0 } else { area / self.area };
            for (_, f, c) in out.samples.iter_mut() {
                *f *= s;
                *c *= s;
            }
        }
        out.area = area;
        out
    }

    /// Same envelope stretched to a new duration, keeping the area.
    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::Invalid(format!("pulse duration must be positive, got {duration}")));
        }
        let mut out = self.clone();
        if self.kind == ShapeKind::Tabulated {
            let s = duration / self.duration;
            for (t, f, _) in out.samples.iter_mut() {
                *t *= s;
                *f /= s;
            }
        }
        out.duration = duration;
        Ok(out)
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// `f(t)`, zero outside `[0, Δ]`.
    pub fn value(&self, t: f64) -> f64 {
        let d = self.duration;
        if !(0.0..=d).contains(&t) {
            return 0.0;
        }
        let a = self.area;
        match self.kind {
            ShapeKind::SineSquared => 2.0 * a / d * (PI * t / d).sin().powi(2),
            ShapeKind::Triangle => {
                let peak = 2.0 * a / d;
                if t <= 0.5 * d {
                    peak * t / (0.5 * d)
                } else {
                    peak * (d - t) / (0.5 * d)
                }
            }
            ShapeKind::Constant => a / d,
            ShapeKind::Tabulated => {
                let i = self.segment_index(t);
                let (t0, f0, _) = self.samples[i];
                let (t1, f1, _) = self.samples[i + 1];
                f0 + (f1 - f0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `F(t) = ∫₀^t f`, clamped to `[0, Δ]`.
    pub fn integral(&self, t: f64) -> f64 {
        let d = self.duration;
        let t = t.clamp(0.0, d);
        let a = self.area;
        match self.kind {
            ShapeKind::SineSquared => a * (t / d - (2.0 * PI * t / d).sin() / (2.0 * PI)),
            ShapeKind::Triangle => {
                if t <= 0.5 * d {
                    2.0 * a * t * t / (d * d)
                } else {
                    a - 2.0 * a * (d - t) * (d - t) / (d * d)
                }
            }
            ShapeKind::Constant => a * t / d,
            ShapeKind::Tabulated => {
                let i = self.segment_index(t);
                let (t0, f0, c0) = self.samples[i];
                let ft = self.value(t);
                c0 + 0.5 * (t - t0) * (f0 + ft)
            }
        }
    }

    fn segment_index(&self, t: f64) -> usize {
        let n = self.samples.len();
        match self
            .samples
            .binary_search_by(|s| s.0.partial_cmp(&t).expect("finite sample times"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// `sup |f|`.
    pub fn amplitude_max(&self) -> f64 {
        let d = self.duration;
        let a = self.area.abs();
        match self.kind {
            ShapeKind::SineSquared | ShapeKind::Triangle => 2.0 * a / d,
            ShapeKind::Constant => a / d,
            ShapeKind::Tabulated => self.samples.iter().fold(0.0, |m, s| m.max(s.1.abs())),
        }
    }

    /// Points in `[0, Δ]` where `f` may fail to be smooth, endpoints included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let d = self.duration;
        match self.kind {
            ShapeKind::Triangle => vec![0.0, 0.5 * d, d],
            ShapeKind::Tabulated => self.samples.iter().map(|s| s.0).collect(),
            _ => vec![0.0, d],
        }
    }

    /// Whether `f(0) = f(Δ) = 0`.
    pub fn is_continuous(&self) -> bool {
        let tol = 1e-12 * self.amplitude_max();
        self.value(0.0).abs() <= tol && self.value(self.duration).abs() <= tol
    }
}

/// `u(δ) = exp(−i·F(δ)·axis)` for `δ ∈ [0, Δ]`.
pub fn segment_propagator(shape: &PulseShape, axis: &OperatorSum, delta: f64) -> Result<DenseOperator> {
    check_delta(shape, delta)?;
    axis.to_dense()?.matrix_exp(shape.integral(delta))
}

fn check_delta(shape: &PulseShape, delta: f64) -> Result<()> {
    let slack = 1e-12 * shape.duration;
    if delta < -slack || delta > shape.duration + slack || delta.is_nan() {
        Err(Error::OutOfRange {
            t: delta,
            end: shape.duration,
        })
    } else {
        Ok(())
    }
}

/// A generator's ramp: label, fixed axis and envelope, with the axis
/// spectrum cached for repeated propagator evaluation.
#[derive(Debug, Clone)]
pub struct GeneratorPulse {
    label: String,
    axis: OperatorSum,
    axis_dense: DenseOperator,
    shape: PulseShape,
    spectral: Spectral,
}

impl GeneratorPulse {
    pub fn new(label: impl Into<String>, axis: OperatorSum, shape: PulseShape) -> Result<Self> {
        let axis_dense = axis.to_dense()?;
        let spectral = Spectral::new(&axis_dense)?;
        Ok(Self {
            label: label.into(),
            axis,
            axis_dense,
            shape,
            spectral,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn axis(&self) -> &OperatorSum {
        &self.axis
    }

    pub fn axis_dense(&self) -> &DenseOperator {
        &self.axis_dense
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn n_qubits(&self) -> usize {
        self.axis.n_qubits()
    }

    pub fn duration(&self) -> f64 {
        self.shape.duration()
    }

    pub fn propagator(&self, delta: f64) -> Result<DenseOperator> {
        check_delta(&self.shape, delta)?;
        Ok(self.spectral.exp(self.shape.integral(delta)))
    }

    /// `u(Δ − δ)`, the time-reversed ramp.
    pub fn reversed_propagator(&self, delta: f64) -> Result<DenseOperator> {
        check_delta(&self.shape, delta)?;
        self.propagator(self.shape.duration() - delta)
    }

    /// `‖X_γ‖` times the peak amplitude: bound on the control strength.
    pub fn strength_bound(&self) -> f64 {
        self.shape.amplitude_max() * self.axis_dense.operator_norm()
    }

    /// Same pulse acting as identity on extra trailing qubits.
    pub fn lift(&self, n_total: usize) -> Result<Self> {
        if n_total == self.n_qubits() {
            return Ok(self.clone());
        }
        Self::new(self.label.clone(), self.axis.embed(n_total)?, self.shape.clone())
    }

    pub fn with_shape(&self, shape: PulseShape) -> Result<Self> {
        Self::new(self.label.clone(), self.axis.clone(), shape)
    }
}

/// Ramp of the given kind and duration whose end propagator realizes the
/// generator unitary up to phase.
pub fn pulse_axes_for_generator(
    gen: &GeneratorSpec,
    kind: ShapeKind,
    duration: f64,
) -> Result<GeneratorPulse> {
    let shape = PulseShape::of_kind(kind, duration, gen.target_angle)?;
    pulse_for_generator_with_shape(gen, &shape)
}

/// As [`pulse_axes_for_generator`] with an explicit envelope, rescaled to the
/// generator's angle.
pub fn pulse_for_generator_with_shape(gen: &GeneratorSpec, shape: &PulseShape) -> Result<GeneratorPulse> {
    let pulse = GeneratorPulse::new(
        gen.label.clone(),
        gen.control_axis.clone(),
        shape.with_area(gen.target_angle),
    )?;
    let end = pulse.propagator(pulse.duration())?;
    let mismatch = phase_distance(&end, &gen.unitary);
    if mismatch > 1e-9 {
        return Err(Error::GeneratorMismatch {
            label: gen.label.clone(),
            mismatch,
        });
    }
    Ok(pulse)
}
