//! Discrete harmonic maps from meshed compact domains into round targets.

pub mod flow;
pub mod mesh;
pub mod target;

pub use flow::{
    dirichlet_energy, discrete_tension, flow_step, max_tension, oscillation, retract_into_region, run_flow,
    BarrierEvent, FlowConfig, FlowMode, FlowState, FlowStatus, FlowSummary, FlowTrace, StepOutcome, TraceRow,
};
pub use mesh::{build_domain, icosphere, torus_grid, DomainMesh, MeshSpec};
pub use target::{DiscreteMap, TargetManifold};
