//! Numerical kernels: ODE integration, quadrature, root finding, small
//! nonlinear least squares. All pure f64, deterministic, allocation only
//! for solution storage.

pub mod fit;
pub mod ode;
pub mod quad;
pub mod roots;
