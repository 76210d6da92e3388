//! Interaction graphs for multi-character motion.
//!
//! The crate builds per-frame Interaction Graphs over body and object markers,
//! scores an evaluated motion against a reference with an interaction-preserving
//! reward, and retargets interactions onto differently proportioned characters
//! by per-frame pose optimization.
//!
//! Conventions: y-up, meters, seconds. Quaternions are unit and stored
//! `(w, x, y, z)` in files.

pub mod cli;
pub mod error;
pub mod graph;
pub mod model;
pub mod motion;
pub mod presets;
pub mod retarget;
pub mod reward;
pub mod synthetic;

pub use error::{Error, Result};

pub use graph::{
    build_graph, place_markers, reference_connectivity, tetrahedralize, Connectivity, Edge,
    EdgeClass, EntityRef, InteractionGraph, Marker, MarkerConfig, Node,
};
pub use model::{
    apply_action, apply_scale, compute_facing_frame, forward_kinematics, FacingFrame, Joint,
    Kinematics, Pose, ScaleSpec, Skeleton,
};
pub use motion::{
    compute_velocities, load_scene, save_scene, validate_tpose, Character, GraspWindow,
    MarkerTrack, RigidObject, Scene, TposeTable,
};
pub use retarget::{
    build_observation, optimize_clip, optimize_frame, Observation, ObservationSpec,
    OptimizerConfig, TrajectoryResult,
};
pub use reward::{RewardBreakdown, RewardModel, RewardParams, WeightingMode};

/// Version of the engine, mirrored by the Python bindings.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;
