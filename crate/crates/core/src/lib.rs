//! Nonadaptive pooled PCR testing over the min-plus semiring.
//!
//! A pooling schedule for `n` people across `t` tests is a t×n matrix of
//! delays; the readout of a test is the minimum of (Ct value + delay)
//! over the people pooled into it. This crate provides:
//!
//! * [`tropical`] — exact min-plus arithmetic, vectors/matrices, and
//!   bounded sparse-vector enumeration;
//! * [`design`] — block designs (projective-plane, residue-class,
//!   Reed-Solomon, vertex doubling) and exhaustive disjunctness
//!   certificates;
//! * [`prob`] — random designs from weight-symmetric row distributions,
//!   exact rational feasibility, and test-count planning;
//! * [`codec`] — power-of-two delay schedules, encoding, and a
//!   residuation decoder;
//! * [`eval`] — exhaustive confusion counting, Monte Carlo failure
//!   rates, and the three-route comparison table.

pub mod codec;
pub mod design;
pub mod eval;
mod gf;
pub mod prob;
pub mod tropical;

pub use codec::{zero_error_certificate, DecodeResult, ScheduleMatrix};
pub use design::{
    check_disjunct, design_sha256, fano_plane, graham_sloane, kautz_singleton, BlockDesign,
    DisjunctLevel, DisjunctnessReport,
};
pub use eval::{compare_methods, design_failure_rate, exhaustive_confusion, ErrorEstimate};
pub use prob::{
    argmax_f, entropy_bound_ratio, f_ratio, feasible, generate_design, plan, sample_row,
    solve_weights, ConstructionParams, PlanReport, WeightDistribution,
};
pub use tropical::{SparsityClass, TropicalMatrix, TropicalValue, TropicalVector};
