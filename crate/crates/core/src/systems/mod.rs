//! Full-order Hamiltonian PDEs and snapshot generation.
//!
//! All discrete Hamiltonians include the quadrature weight `Δx` and are
//! integrated as `ż = J∇H` literally, so a system time `t` corresponds to the
//! physical PDE time `Δx · t`.

mod dataset;
mod dxx;
mod hamiltonian;
mod initial;
mod integrator;
mod spec;
mod spline;

pub use dataset::{generate_dataset, sample_params, SnapshotDataset, FORMAT_VERSION};
pub use dxx::{Boundary, DxxOperator};
pub use hamiltonian::{HamiltonianSystem, HarmonicOscillator, PdeSystem};
pub use initial::{
    exact_wave_solution, initial_state, nls_initial_state, param_wave_initial_state,
    wave_initial_state,
};
pub use integrator::{integrate, stormer_verlet_step, NewtonSettings, StepStats};
pub use spec::{kappa, Sampling, SystemSpec};
pub use spline::spline_h;
