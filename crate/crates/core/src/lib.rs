//! Static inference of interval bounds on the raw and central moments of
//! cost accumulators in imperative probabilistic programs.
//!
//! The pipeline is `parse → validate → infer_contexts → analyze_program →
//! solve → soundness checks → central/tail post-processing`. A Monte-Carlo
//! interpreter of the same language is included as an independent oracle.

pub mod analysis;
pub mod bench;
pub mod interp;
pub mod lang;
pub mod lp;
pub mod num;
pub mod pipeline;
pub mod poly;
pub mod postproc;
pub mod report;
pub mod semiring;
pub mod soundness;
