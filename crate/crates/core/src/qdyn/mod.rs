//! Ion-cavity dynamics: Hamiltonian, Lindblad generator and propagators.
//!
//! Basis order is fixed as `[|s,0⟩, |d,1⟩, |p,0⟩, |d,0⟩]`.

pub mod conditional;
pub mod hamiltonian;
pub mod master;
pub mod params;
pub mod schedule;

pub use conditional::{
    effective_generator, propagate_conditional, ConditionalTrajectory, ConditionalVector, NoJumpPropagator,
};
pub use hamiltonian::{build_hamiltonian, build_jump_operators, decay_operator, hamiltonian_for_level};
pub use master::{liouvillian, propagate_master, AtomCavityState, IntervalOps, MasterPropagator, MasterTrajectory};
pub use params::{effective_coupling, SourceParams, StarkShift};
pub use schedule::{DriveSchedule, Segment, StepTable, TimeGrid, DRIVE_OFF, DRIVE_ON};

pub const S0: usize = 0;
pub const D1: usize = 1;
pub const P0: usize = 2;
pub const D0: usize = 3;
pub const DIM: usize = 4;
/// Size of the manifold reachable without a jump.
pub const NOJUMP_DIM: usize = 3;
