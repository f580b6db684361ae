//! The structured boundary with external language models: task specs, the
//! edit protocol, and interpretation checks.

pub mod check;
pub mod edit;
pub mod mutate;
pub mod spec;

pub use mutate::random_edits;
pub use check::{apply_and_check, interpretation_check, CheckError};
pub use edit::{apply_edit, apply_edits, diff, CheckReport, DiffError, Edit, EditFailure, EditList, EditStatus, EditVerdict, FailureCode, Mismatch, Source, ViewNote};
pub use spec::{
    instantiate, parse_task_spec, required_objects, validate_task_spec, Constraint, CycleError, InstantiationError, ObjRef,
    ObjectRequirement, Assignment, Placement, PlacementHint, Role, SubGoal, SubGoalKind, TaskError, TaskSpec, SCHEMA_VERSION,
};
