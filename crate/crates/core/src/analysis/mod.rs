//! Logical-context inference and the backward derivation engine that
//! produces linear constraints over template coefficients.

pub mod context;
mod derive;
pub mod live;
pub mod locs;

pub use context::{infer_contexts, ContextMap, Domain, LinIneq, LogicalContext};
pub use derive::{
    analyze_program, analyze_with_contexts, expr_poly, AnalysisConfig, AnalysisError, Derivation, Mode, SpecInstance,
    TemplateInfo, TemplateKind,
};
pub use locs::{Loc, Locations};
