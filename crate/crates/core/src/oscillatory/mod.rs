//! Oscillatory kernels of the linear flow and their decay sweeps.
//!
//! Everything is evaluated on the unit lattice: the kernel on `hZ^2` at time
//! `t` is `h^{-2}` times the unit-lattice kernel at rescaled time `t / h^4`.

mod fit;
mod kernels;
pub mod panel;
mod quadrature;

pub use fit::{fit_loglog_slope, log_spaced, LogLogFit};
pub use kernels::{
    decay_sweep, dispersive_sweep, eval_g_unit, eval_i, eval_i_grid, eval_k_unit, k_extent,
    max_k_time_within_budget, write_decay_csv, DecayRecord, I_OUTPUT_STEP,
};
pub use quadrature::{EvenKernel, QuadratureSpec, ANNULUS_FRACTION, ANNULUS_RATIO};
