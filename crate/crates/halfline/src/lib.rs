//! Riemann–Hilbert workbench for the focusing NLS equation on the half-line
//! with plane-wave (zero-zone) boundary behaviour.

pub mod asymptotics;
pub mod contour;
pub mod error;
pub mod exact;
pub mod mat2;
pub mod ode;
pub mod linalg;
pub mod quad;
pub mod rhsolve;
pub mod surface;
pub mod tdata;
pub mod xscatter;

pub use error::{Error, Result};
pub use mat2::Mat2;
pub use num_complex::Complex64 as C64;
