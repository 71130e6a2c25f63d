//! Rational loop-group dressing of flat Lagrangian immersions in `C^n`,
//! flat Egoroff metrics and Egoroff nets.
//!
//! A dressed frame is a vacuum seed plus an ordered dressing history and is
//! evaluated in closed form at any `(u, λ)`. The [`geometry`] checks and the
//! [`oracle`] integrators verify the results independently.

// `!(x < tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod algebra;
pub mod dressing;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod loopfactors;
pub mod oracle;
pub mod report;

pub use algebra::{project_onto_span, solve_linear, star_reduce, CMatrix, CVector, HermitianProjection, RVector, C64};
pub use dressing::{
    dress_extended, dress_frame_e, dress_permuted, dress_real, dress_spherical, dress_spherical_family,
    dress_translation, dress_two_pole, DressingRecord, EtaConvention,
};
pub use error::{Error, Result};
pub use frames::{
    frame_dlambda_at_zero, frame_eval, metric_from_frame, vacuum_e, vacuum_x, Axis, ExtendedFrame, Grid, Profile,
    SeedProfile,
};
pub use geometry::{EgoroffMetric, ImmersionSample};
pub use loopfactors::{
    check_reality, eval_factor, invert_factor, permute_factors, LoopFactor, RealOnePoleFactor, TranslationFactor,
    TwoPointFactor, TwoPoleFactor,
};
pub use oracle::{estimate_order, integrate_bf, integrate_frame, PathSpec};
pub use report::{CheckRecord, CheckStatus, VerificationReport};
