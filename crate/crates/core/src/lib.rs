pub mod action;
pub mod escape;
pub mod eval;
pub mod goal;
pub mod harness;
pub mod ids;
pub mod knowledge;
pub mod par;
pub mod rng;
pub mod scene;
pub mod task;

pub use ids::NodeId;
