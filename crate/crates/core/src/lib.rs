//! Automated robotic assembly from design documents.
//!
//! The pipeline runs from a neutral design document through liaison-graph
//! sequencing, geometric feasibility filtering, tooling and cell matching,
//! and PL code generation, to execution in a kinematic digital twin that
//! reports success or structured failure feedback.

pub mod cell_match;
pub mod codegen;
pub mod design;
pub mod feasibility;
pub mod fixtures;
pub mod geom;
pub mod liaison;
pub mod par;
pub mod pipeline;
pub mod pl;
pub mod sequencer;
pub mod tooling;
pub mod twin;
