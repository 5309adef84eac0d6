//! Periodic lattice grids, fields, the lattice Fourier transform, Fourier
//! multipliers and the `h`-weighted norms.
//!
//! The infinite lattice `hZ^d` is truncated to the torus of period `L = M h`.
//! Every operator here is a Fourier multiplier, so the truncation is exact for
//! the operators themselves; only data with non-negligible mass near the
//! torus boundary sees a difference.

pub mod fft;
mod field;
mod grid;
mod norms;
pub mod snapshot;

pub use field::{
    apply_multiplier, dft, discrete_laplacian, idft, symbol_sigma, symbol_xi_squared,
    ComplexField, SpectrumField,
};
pub use grid::LatticeGrid;
pub use norms::{gns_ratio, gns_theta, lp_norm, sobolev_norm, sobolev_weights, SobolevKind};
