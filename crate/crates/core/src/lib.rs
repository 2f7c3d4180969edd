//! Certified lower bounds for the Waldschmidt constant `α̂(s)` of `s` very
//! general lines in projective 3-space.
//!
//! - [`exactnum`]: exact rationals and linear forms in `t`.
//! - [`planesys`]: reduction of plane systems by Cremona moves and merges.
//! - [`spacesys`]: iterated quadric degeneration and the δ-scan built on it.
//! - [`bounds`]: closed-form bounds, `e_s`, and per-`s` reports.

pub mod bounds;
pub mod error;
pub mod exactnum;
pub mod planesys;
mod scaled;
pub mod spacesys;

pub use bounds::{
    alpha_max, bound_report, chudnovsky_bound, chudnovsky_verify, expected_value, largest_root,
    small_alphahat, thm1_bound, thm2_bound, thm3_bound, thm4_holds, BoundReport, ChudViolation,
    CubicBound, ReportConfig, RootApprox, Thm4Method, Thm4Outcome,
};
pub use error::{Error, Result};
pub use exactnum::{LinForm, Rational};
pub use planesys::{run_t, PlaneSystem, TInput, TOutcome, TTrace};
pub use spacesys::{
    best_bound, default_scan_cap, l_answer, run_l, run_l_with, Answer, LConfig, LResult,
    SpaceSystem, SubtractRule,
};
