//! Discrete fractional-order operators: the Grünwald-Letnikov runtime
//! realization and the Oustaloup rational approximation used to
//! cross-validate it.

pub mod gl;
pub mod oustaloup;

pub use gl::{gl_coefficients, FracOrder, GlDifferintegrator, DEFAULT_MEMORY_LEN};
pub use oustaloup::OustaloupApprox;
