//! Spectral-domain circuit model of periodically fed connected wire arrays:
//! Bessel and Hankel functions, adaptive quadrature, the discrete impedance
//! kernel of the line array, near-field coupling to small receivers, the
//! multiport noise model and LMMSE link rates.

pub mod specfun;
pub mod quadrature;
pub mod linearray;
pub mod fields;
pub mod multiport;
pub mod linkrate;
pub mod cli;
