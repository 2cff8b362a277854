//! Geometry of spheres and oriented Grassmannians, barrier regions built from
//! sweepouts by convex balls, and discrete harmonic-map flows.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exterior;
pub mod gauss;
pub mod graph;
pub mod grassmann;
pub mod harmonic;
pub mod quadric;
pub mod sampling;
pub mod sphere;

pub use error::{GeomError, Result};
pub use exterior::{Frame, PVector};
pub use grassmann::{GrassmannPoint, GrassmannTangent, MainRegion};
pub use harmonic::{DiscreteMap, DomainMesh, FlowConfig, FlowTrace, TargetManifold};
pub use quadric::{ChartPoint, ProjectivePoint, QuadricPoint};
pub use sphere::{GreatCircle, SpherePoint, SphereTubeRegion, SubsphereFlag};
