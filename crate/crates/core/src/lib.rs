//! Fundamental bounds on quantum Fisher information for Markovian sensing
//! models, with exact time-scaling classification.
//!
//! The crate takes a model `(H, Hdot, {L_k}, {Ldot_k})` describing a GKSL
//! master equation whose generator depends on the estimated parameter, and
//! computes the four scaling constants `(a_minus, b_minus, a_plus, b_plus)`
//! that govern the optimal-control QFI upper bound, the scaling class they
//! imply, the trade-off curve between the two constants, and a rigorous
//! pointwise bound `F(t)` obtained by integrating the curve.

pub mod algebra;
pub mod bound;
pub mod mat;
pub mod model;
pub mod scaling;
pub mod sdp;
pub mod svg;

pub use mat::{CMat, CVec};
pub use model::{builtin_model, BuiltinModelId, MarkovianModel};
pub use scaling::{ScalingClass, ScalingConstants};

