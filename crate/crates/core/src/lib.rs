//! Numerical laboratory for the discrete fourth-order Schrodinger equation
//! `i u_t + Delta_h^2 u = lambda |u|^{p-1} u` on the lattice `hZ^2`.
//!
//! * [`lattice`]: grids, lattice Fourier transform, multipliers, norms.
//! * [`littlewood_paley`]: smooth dyadic cutoffs and the projections `P_N`.
//! * [`oscillatory`]: the kernels `G`, `K_{N,h}`, `I_N` and decay sweeps.
//! * [`solvers`]: exact linear propagators and Strang splitting.
//! * [`continuum`]: cell averages, affine interpolation, continuum-limit runs.
//! * [`strichartz`]: admissible pairs, mixed space-time norms, `h`-sweeps.
//! * [`cli`]: the config-driven experiment runner behind the `latdisp` binary.

pub mod cli;
pub mod continuum;
pub mod error;
pub mod lattice;
pub mod littlewood_paley;
pub mod oscillatory;
pub mod rng;
pub mod solvers;
pub mod strichartz;

pub use error::{Error, Result};
