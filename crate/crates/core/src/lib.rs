//! Sibling regression for canonical-link generalized linear models.
//!
//! The crate fits canonical GLMs over a handful of exponential families,
//! computes residuals (including the inverse-Fisher-information scaled
//! residual used for noise estimation), and removes a shared latent noise
//! term from a target series by borrowing information from sibling series
//! that are driven by the same noise.

pub mod benchmark;
pub mod csvpanel;
pub mod error;
pub mod expfam;
pub mod glm;
pub mod inference;
pub mod linalg;
mod par;
pub mod residuals;
pub mod rng;
pub mod sibling;
pub mod simulate;

pub use error::{Result, SglmError};
pub use expfam::{Family, FamilyKind, NaturalParam};
pub use glm::{fit_glm, Design, FitOptions, GlmFit};
pub use residuals::{ResidualKind, ResidualVector};
pub use sibling::{Panel, SglmOptions, SglmResult};
