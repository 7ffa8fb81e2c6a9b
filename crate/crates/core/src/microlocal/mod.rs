pub mod fbi;
pub mod multiplier;
pub mod scan;
pub mod smoothing;
pub mod sobolev;
