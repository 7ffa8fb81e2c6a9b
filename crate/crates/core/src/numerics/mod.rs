pub mod ode;
pub mod periodic;
pub mod quad;
