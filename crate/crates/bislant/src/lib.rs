//! Numerical geometry of pointwise bi-slant warped-product submanifolds in
//! conformal Kähler spaces.
//!
//! The ambient model is `R^{2n}` with the canonical complex structure `J`
//! and a metric `g = e^sigma g0` conformal to the flat Kähler metric `g0`.
//! A submanifold is supplied as a parametric chart with closed-form
//! components; the library then computes frames, the tangential/normal
//! split of `J`, the second fundamental form, pointwise slant angles, and
//! verifies the structure equations, the warped-product identities, the
//! characterization conditions, and the inequality for the squared norm of
//! the second fundamental form - all as pointwise residuals against a
//! single tolerance profile.
//!
//! Conventions baked into the model (see the README for details):
//!
//! * the Lee form is `omega = d sigma`, its metric dual is `B`;
//! * the anti-Lee form is `Theta = omega ∘ J` with metric dual `A = -J B`;
//! * the mean curvature `H` is the unnormalized trace of `h`.
//!
//! Start with the runnable examples (`cargo run --example ...`) or the
//! `bislant` binary, which loads JSON scenarios and emits residual reports.

pub mod ambient;
pub mod dual;
pub mod error;
pub mod expr;
pub mod immersion;
pub mod numerics;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod slant;
pub mod warped;

pub use ambient::AmbientSpace;
pub use error::{Error, Result};
pub use expr::{Bindings, Expression};
pub use immersion::{Chart, PointState, Stencil};
pub use runner::{Command, Overrides};
pub use scenario::Scenario;
pub use slant::{DistributionSplit, SlantRecord};
pub use warped::{ChenRecord, EqualityDiagnosis, WarpDeclaration};

pub use numerics::{InnerProduct, Matrix, ToleranceProfile, Vector};
pub use report::{CheckReport, Format};
