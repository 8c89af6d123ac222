//! Spatio-temporal steering of open quantum networks.
//!
//! Builds measurement-conditioned assemblages from Lindblad dynamics and
//! quantifies their steerability with two semidefinite programs (steering
//! weight and steering robustness), solved by a self-contained interior-point
//! method.

pub mod assemblage;
pub mod dynamics;
pub mod quantum;
pub mod sdp;
pub mod steering;
