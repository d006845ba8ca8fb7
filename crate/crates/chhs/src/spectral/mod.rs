//! Cosine-basis transforms, differential operators, and the Helmholtz-Leray
//! projection on Neumann boxes.

mod domain;
mod field;
pub mod ops;
pub mod transform;

pub use domain::Domain;
pub use field::{velocity_parity, Parity, ScalarField, SpectralField, VectorField, COSINE};
pub use ops::{
    divergence, gradient, helmholtz_leray_project, inner, laplacian, poincare_constant,
    sobolev_norm,
};
pub use transform::{forward_transform, inverse_transform};
