//! Ratios of elliptic integrals computed from polygons interscribed between
//! the unit circle and an inner curve.
//!
//! The inner curve is a circle ([`circle`]), an ellipse ([`ellipse`]) or the
//! boundary generated by a 3×3 upper-triangular matrix ([`nr`]). For two
//! circles, the side counts of almost-closed polygons are the continued
//! fraction denominators of the rotation number θ; [`pipeline`] finds them with
//! baby steps on the vertex recurrence and giant steps on the associated
//! elliptic curve ([`curve`]) and then refines θ. [`oracle`] provides
//! independent reference values (AGM and tanh-sinh quadrature).

pub mod cf;
pub mod circle;
pub mod complex;
pub mod curve;
pub mod ellipse;
pub mod error;
pub mod nr;
pub mod oracle;
pub mod pipeline;
pub mod precision;
pub mod report;
mod roots;

pub use complex::BigComplex;
pub use error::{Error, Result};
pub use precision::Precision;
