pub mod bessel;
pub mod commutators;
pub mod fd;
pub mod kernels;
pub mod modes;
pub mod radial;
pub mod state;
pub mod table;
