//! Control-cycle timelines: bang-bang, Eulerian, and time-symmetrized Eulerian.
//!
//! Every segment records an *anchor*, the control propagator accumulated
//! before it, so that `U_c(t)` is `u_γ(δ)·anchor` during a ramp,
//! `u_γ(Δ−δ)·anchor` during a reversed ramp, and `anchor` while coasting.
//! Anchors carry the true phases of the pulse products, which keeps `U_c(t)`
//! continuous across segment boundaries.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{phase_distance, EulerCycle, GroupClosure};
use crate::pauli::DenseOperator;
use crate::pulses::{pulse_for_generator_with_shape, GeneratorPulse, PulseShape};
use crate::reachability::WeightAssignment;

/// A control group together with the ramp that realizes each generator.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    group: GroupClosure,
    pulses: Vec<GeneratorPulse>,
}

impl ControlSystem {
    /// One ramp per generator, all sharing `shape`'s envelope and duration.
    pub fn new(group: GroupClosure, shape: &PulseShape) -> Result<Self> {
        let pulses = group
            .generators()
            .iter()
            .map(|g| pulse_for_generator_with_shape(g, shape))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { group, pulses })
    }

    pub fn group(&self) -> &GroupClosure {
        &self.group
    }

    pub fn pulses(&self) -> &[GeneratorPulse] {
        &self.pulses
    }

    pub fn pulse(&self, k: usize) -> &GeneratorPulse {
        &self.pulses[k]
    }

    pub fn delta(&self) -> f64 {
        self.pulses[0].duration()
    }

    pub fn n_qubits(&self) -> usize {
        self.group.n_qubits()
    }

    /// Same ramps with a different shape or duration.
    pub fn with_shape(&self, shape: &PulseShape) -> Result<Self> {
        Self::new(self.group.clone(), shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Bb,
    Eulerian,
    Symmetric,
}

impl ScheduleMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bb" => Ok(Self::Bb),
            "eulerian" => Ok(Self::Eulerian),
            "symmetric" => Ok(Self::Symmetric),
            other => Err(Error::Invalid(format!("unknown schedule mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Ramp,
    Coast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub duration: f64,
    /// Generator index (ramps only).
    pub generator: Option<usize>,
    /// Group element in force at the end of the segment.
    pub frame: usize,
    /// Index into the schedule's anchor propagators.
    pub anchor: usize,
    pub reversed: bool,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone)]
pub struct Schedule {
    mode: ScheduleMode,
    segments: Vec<Segment>,
    anchors: Vec<DenseOperator>,
    cycle_time: f64,
    sim_interval: f64,
    controls: Arc<ControlSystem>,
}

impl Schedule {
    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn anchor(&self, seg: &Segment) -> &DenseOperator {
        &self.anchors[seg.anchor]
    }

    /// `T_c`.
    pub fn cycle_time(&self) -> f64 {
        self.cycle_time
    }

    /// `T̃`.
    pub fn sim_interval(&self) -> f64 {
        self.sim_interval
    }

    /// Ramp duration `Δ`; zero for bang-bang schedules.
    pub fn delta(&self) -> f64 {
        match self.mode {
            ScheduleMode::Bb => 0.0,
            _ => self.controls.delta(),
        }
    }

    pub fn controls(&self) -> &Arc<ControlSystem> {
        &self.controls
    }

    pub fn group(&self) -> &GroupClosure {
        self.controls.group()
    }

    pub fn n_ramps(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Ramp)
            .count()
    }

    /// Same segment pattern with every coast scaled so that `T̃ → t_sim`.
    pub fn with_sim_interval(&self, t_sim: f64) -> Result<Schedule> {
        check_positive("sim interval", t_sim)?;
        let ratio = t_sim / self.sim_interval;
        let mut segments = self.segments.clone();
        for s in segments.iter_mut() {
            if s.kind == SegmentKind::Coast {
                s.duration *= ratio;
            }
        }
        restart(&mut segments);
        let cycle_time = segments.last().map(Segment::end).unwrap_or(0.0);
        durations_from_starts(&mut segments, cycle_time);
        Ok(Schedule {
            mode: self.mode,
            segments,
            anchors: self.anchors.clone(),
            cycle_time,
            sim_interval: t_sim,
            controls: self.controls.clone(),
        })
    }

    /// `U_c(t)` for `t ∈ [0, T_c]`.
    pub fn control_propagator_at(&self, t: f64) -> Result<DenseOperator> {
        let end = self.cycle_time;
        let slack = 1e-12 * end.max(1.0);
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, end });
        }
        if t >= end {
            return Ok(match self.mode {
                // the last bang-bang switch returns the frame to the identity
                ScheduleMode::Bb => DenseOperator::identity(self.controls.n_qubits()),
                _ => self.propagator_in(self.segments.last().expect("non-empty"), end),
            });
        }
        let idx = self
            .segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1);
        // skip zero-length markers that share the start time
        let mut i = idx;
        while self.segments[i].duration == 0.0 && i + 1 < self.segments.len() && self.segments[i + 1].start <= t {
            i += 1;
        }
        Ok(self.propagator_in(&self.segments[i], t))
    }

    fn propagator_in(&self, seg: &Segment, t: f64) -> DenseOperator {
        let anchor = &self.anchors[seg.anchor];
        match seg.kind {
            SegmentKind::Coast => anchor.clone(),
            SegmentKind::Ramp => {
                let pulse = self.controls.pulse(seg.generator.expect("ramps carry a generator"));
                let delta = (t - seg.start).clamp(0.0, pulse.duration());
                let u = if seg.reversed {
                    pulse.reversed_propagator(delta)
                } else {
                    pulse.propagator(delta)
                }
                .expect("offset clamped into the ramp");
                &u * anchor
            }
        }
    }

    pub fn to_record(&self) -> ScheduleRecord {
        let group = self.group();
        ScheduleRecord {
            format_version: crate::FORMAT_VERSION,
            mode: self.mode,
            group: group.label().to_string(),
            n_qubits: group.n_qubits(),
            cycle_time: self.cycle_time,
            sim_interval: self.sim_interval,
            delta: self.delta(),
            shape: self.controls.pulse(0).shape().kind().name().to_string(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    kind: s.kind,
                    start: s.start,
                    duration: s.duration,
                    generator: s.generator.map(|k| group.generators()[k].label.clone()),
                    frame: group.element_labels()[s.frame].clone(),
                    reversed: s.reversed,
                })
                .collect(),
            model: None,
            target: None,
        }
    }

    /// Rebuild from a record; durations are re-derived from start-time
    /// differences and must agree with the stored values.
    pub fn from_record(rec: &ScheduleRecord, controls: Arc<ControlSystem>) -> Result<Schedule> {
        crate::check_format_version(rec.format_version)?;
        let group = controls.group();
        if rec.group != group.label() {
            return Err(Error::Invalid(format!(
                "schedule is for group `{}`, controls are for `{}`",
                rec.group,
                group.label()
            )));
        }
        if rec.mode != ScheduleMode::Bb && (rec.delta - controls.delta()).abs() > 1e-12 * rec.delta.max(1.0) {
            return Err(Error::Invalid(format!(
                "schedule ramp duration {} differs from the pulse duration {}",
                rec.delta,
                controls.delta()
            )));
        }
        if rec.segments.is_empty() {
            return Err(Error::Invalid("schedule has no segments".into()));
        }
        let mut segments = Vec::with_capacity(rec.segments.len());
        for (i, s) in rec.segments.iter().enumerate() {
            let next_start = rec
                .segments
                .get(i + 1)
                .map(|n| n.start)
                .unwrap_or(rec.cycle_time);
            let derived = next_start - s.start;
            if derived < -1e-12 || (derived - s.duration).abs() > 1e-9 * rec.cycle_time.max(1.0) {
                return Err(Error::Invalid(format!(
                    "segment {i}: duration {} inconsistent with start times ({derived})",
                    s.duration
                )));
            }
            let frame = group
                .find_label(&s.frame)
                .ok_or_else(|| Error::ElementNotFound(s.frame.clone()))?;
            let generator = match (&s.kind, &s.generator) {
                (SegmentKind::Ramp, Some(l)) => Some(
                    group
                        .generator_index(l)
                        .ok_or_else(|| Error::Invalid(format!("unknown generator `{l}`")))?,
                ),
                (SegmentKind::Ramp, None) => {
                    return Err(Error::Invalid(format!("ramp segment {i} has no generator")))
                }
                (SegmentKind::Coast, _) => None,
            };
            segments.push(Segment {
                kind: s.kind,
                start: s.start,
                duration: derived.max(0.0),
                generator,
                frame,
                anchor: 0,
                reversed: s.reversed,
            });
        }
        let anchors = attach_anchors(&mut segments, &controls, rec.mode)?;
        Ok(Schedule {
            mode: rec.mode,
            segments,
            anchors,
            cycle_time: rec.cycle_time,
            sim_interval: rec.sim_interval,
            controls,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("schedule records serialize")
    }
}

/// Schedule file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub format_version: u32,
    pub mode: ScheduleMode,
    pub group: String,
    pub n_qubits: usize,
    pub cycle_time: f64,
    pub sim_interval: f64,
    pub delta: f64,
    pub shape: String,
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub kind: SegmentKind,
    pub start: f64,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub frame: String,
    #[serde(default)]
    pub reversed: bool,
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{what} must be positive, got {v}")))
    }
}

/// Sets each duration to the difference of consecutive start times, so that
/// re-deriving durations on import reproduces them exactly.
fn durations_from_starts(segments: &mut [Segment], cycle_time: f64) {
    for i in 0..segments.len() {
        let next = segments.get(i + 1).map(|s| s.start).unwrap_or(cycle_time);
        segments[i].duration = (next - segments[i].start).max(0.0);
    }
}

fn restart(segments: &mut [Segment]) {
    // start times from a running sum of durations
    let mut t = 0.0;
    for s in segments.iter_mut() {
        s.start = t;
        t += s.duration;
    }
}

/// Walks the segments, accumulating the true (phase-carrying) propagator,
/// and validates that every ramp lands on the recorded frame.
fn attach_anchors(
    segments: &mut [Segment],
    controls: &ControlSystem,
    mode: ScheduleMode,
) -> Result<Vec<DenseOperator>> {
    let group = controls.group();
    let n = group.n_qubits();
    if mode == ScheduleMode::Bb {
        let anchors: Vec<DenseOperator> = group.elements().to_vec();
        for s in segments.iter_mut() {
            if s.kind != SegmentKind::Coast {
                return Err(Error::Invalid("bang-bang schedules contain coasts only".into()));
            }
            s.anchor = s.frame;
        }
        return Ok(anchors);
    }
    let mut anchors = Vec::new();
    let mut current = DenseOperator::identity(n);
    let mut frame = group.identity_index();
    for (i, s) in segments.iter_mut().enumerate() {
        match s.kind {
            SegmentKind::Coast => {
                if s.frame != frame {
                    return Err(Error::Invalid(format!("coast {i} is not in the current frame")));
                }
            }
            SegmentKind::Ramp => {
                let k = s.generator.expect("ramps carry a generator");
                let end = controls.pulse(k).propagator(controls.delta())?;
                if s.reversed {
                    current = &end.adjoint() * &current;
                    frame = group.multiply(group.inverse(group.generator_perm(k)[0]), frame);
                } else {
                    anchors.push(current.clone());
                    s.anchor = anchors.len() - 1;
                    current = &end * &current;
                    frame = group.generator_perm(k)[frame];
                    if s.frame != frame {
                        return Err(Error::Invalid(format!("ramp {i} lands on the wrong frame")));
                    }
                    continue;
                }
                if s.frame != frame {
                    return Err(Error::Invalid(format!("reversed ramp {i} lands on the wrong frame")));
                }
            }
        }
        anchors.push(current.clone());
        s.anchor = anchors.len() - 1;
    }
    if frame != group.identity_index() {
        return Err(Error::Invalid("schedule does not return to the identity".into()));
    }
    Ok(anchors)
}

/// One coast per nonzero weight, in element order, `T_c = W·T̃`.
pub fn build_bb_schedule(
    w: &WeightAssignment,
    controls: &Arc<ControlSystem>,
    t_sim: f64,
) -> Result<Schedule> {
    check_positive("sim interval", t_sim)?;
    w.check_group(controls.group())?;
    if w.total() <= 0.0 {
        return Err(Error::Invalid("all weights are zero".into()));
    }
    let mut segments: Vec<Segment> = w
        .nonzero()
        .map(|(g, wg)| Segment {
            kind: SegmentKind::Coast,
            start: 0.0,
            duration: wg * t_sim,
            generator: None,
            frame: g,
            anchor: g,
            reversed: false,
        })
        .collect();
    restart(&mut segments);
    let cycle_time = w.total() * t_sim;
    durations_from_starts(&mut segments, cycle_time);
    let anchors = attach_anchors(&mut segments, controls, ScheduleMode::Bb)?;
    Ok(Schedule {
        mode: ScheduleMode::Bb,
        segments,
        anchors,
        cycle_time,
        sim_interval: t_sim,
        controls: controls.clone(),
    })
}

fn check_cycle(cycle: &EulerCycle, controls: &ControlSystem) -> Result<()> {
    let g = controls.group();
    if cycle.n_vertices != g.order() || cycle.generator_labels != g.generator_labels() {
        return Err(Error::Invalid(format!(
            "Euler cycle does not belong to group `{}`",
            g.label()
        )));
    }
    Ok(())
}

fn eulerian_half(
    cycle: &EulerCycle,
    w: &WeightAssignment,
    controls: &ControlSystem,
    t_sim: f64,
    coast_scale: f64,
) -> Vec<Segment> {
    let delta = controls.delta();
    let n_gen = controls.group().n_generators() as f64;
    let mut segments = Vec::with_capacity(2 * cycle.len());
    for step in &cycle.steps {
        segments.push(Segment {
            kind: SegmentKind::Ramp,
            start: 0.0,
            duration: delta,
            generator: Some(step.generator),
            frame: step.to,
            anchor: 0,
            reversed: false,
        });
        segments.push(Segment {
            kind: SegmentKind::Coast,
            start: 0.0,
            duration: coast_scale * w.weight(step.to) * t_sim / n_gen,
            generator: None,
            frame: step.to,
            anchor: 0,
            reversed: false,
        });
    }
    segments
}

/// Absolute start times `t_{j−1} = (j−1)Δ + (T̃/|Γ|)·Σ_{k<j} w_{g_k}` (scaled),
/// computed from counts and weight prefix sums rather than by chaining.
fn assign_starts(segments: &mut [Segment], delta: f64) {
    let mut ramps = 0usize;
    let mut coast_sum = 0.0;
    for s in segments.iter_mut() {
        s.start = ramps as f64 * delta + coast_sum;
        match s.kind {
            SegmentKind::Ramp => ramps += 1,
            SegmentKind::Coast => coast_sum += s.duration,
        }
    }
}

/// Ramp `γ_j` for `Δ`, then coast `Θ_j = w_{g_j}·T̃/|Γ|`, for every step of
/// the cycle; `T_c = NΔ + W·T̃`.
pub fn build_eulerian_schedule(
    cycle: &EulerCycle,
    w: &WeightAssignment,
    controls: &Arc<ControlSystem>,
    t_sim: f64,
) -> Result<Schedule> {
    check_positive("sim interval", t_sim)?;
    check_cycle(cycle, controls)?;
    w.check_group(controls.group())?;
    let mut segments = eulerian_half(cycle, w, controls, t_sim, 1.0);
    assign_starts(&mut segments, controls.delta());
    let cycle_time = cycle.len() as f64 * controls.delta() + w.total() * t_sim;
    durations_from_starts(&mut segments, cycle_time);
    let anchors = attach_anchors(&mut segments, controls, ScheduleMode::Eulerian)?;
    Ok(Schedule {
        mode: ScheduleMode::Eulerian,
        segments,
        anchors,
        cycle_time,
        sim_interval: t_sim,
        controls: controls.clone(),
    })
}

/// Eulerian half with `Θ_j/2`, followed by its mirror image with reversed
/// ramps, so that `U_c(t) = U_c(T_c − t)`; `T_c = 2NΔ + W·T̃`.
pub fn build_symmetric_schedule(
    cycle: &EulerCycle,
    w: &WeightAssignment,
    controls: &Arc<ControlSystem>,
    t_sim: f64,
) -> Result<Schedule> {
    check_positive("sim interval", t_sim)?;
    check_cycle(cycle, controls)?;
    w.check_group(controls.group())?;
    let delta = controls.delta();
    let first = eulerian_half(cycle, w, controls, t_sim, 0.5);
    let cycle_time = 2.0 * cycle.len() as f64 * delta + w.total() * t_sim;

    let mut segments = first.clone();
    for (j, step) in cycle.steps.iter().enumerate().rev() {
        let coast = &first[2 * j + 1];
        segments.push(Segment {
            kind: SegmentKind::Coast,
            start: 0.0,
            duration: coast.duration,
            generator: None,
            frame: step.to,
            anchor: 0,
            reversed: false,
        });
        segments.push(Segment {
            kind: SegmentKind::Ramp,
            start: 0.0,
            duration: delta,
            generator: Some(step.generator),
            frame: step.from,
            anchor: 0,
            reversed: true,
        });
    }
    assign_starts(&mut segments, delta);
    // mirror the second half's start times exactly: start' = T_c − end
    let half = first.len();
    for i in 0..half {
        let mirrored = segments.len() - 1 - i;
        segments[mirrored].start = cycle_time - (segments[i].start + segments[i].duration);
    }
    durations_from_starts(&mut segments, cycle_time);
    let anchors = attach_anchors(&mut segments, controls, ScheduleMode::Symmetric)?;
    Ok(Schedule {
        mode: ScheduleMode::Symmetric,
        segments,
        anchors,
        cycle_time,
        sim_interval: t_sim,
        controls: controls.clone(),
    })
}

/// Phase-invariant check that the cycle closes: `1 − |tr U_c(T_c)|/d`.
pub fn closure_defect(s: &Schedule) -> Result<f64> {
    let u = s.control_propagator_at(s.cycle_time())?;
    Ok(phase_distance(&u, &DenseOperator::identity(u.n_qubits())))
}
