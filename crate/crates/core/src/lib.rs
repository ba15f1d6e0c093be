//! Synthesis and numerical verification of Eulerian bounded-strength
//! control schedules for Hamiltonian simulation.
//!
//! The pipeline runs: close a control group from generator unitaries,
//! walk an Eulerian cycle of its Cayley graph, solve for nonnegative
//! conjugation weights that map the input Hamiltonian onto the target,
//! lay the result out as ramp/coast segments, and check the first-order
//! average Hamiltonian and the exact propagator against the target.

pub mod averaging;
pub mod dynamics;
pub mod error;
pub mod group;
pub mod lp;
pub mod models;
pub mod pauli;
pub mod pulses;
pub mod quadrature;
pub mod reachability;
pub mod schedule;

pub use error::{Error, Result};
pub use group::{CayleyGraph, EulerCycle, GeneratorSpec, GroupClosure};
pub use pauli::{DenseOperator, OperatorSum, Pauli, PauliWord};
pub use pulses::{GeneratorPulse, PulseShape, ShapeKind};
pub use reachability::WeightAssignment;
pub use schedule::{ControlSystem, Schedule, ScheduleMode, Segment, SegmentKind};

/// Version tag written into every file this crate emits.
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn check_format_version(v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Invalid(format!("unsupported format_version {v}")))
    }
}
