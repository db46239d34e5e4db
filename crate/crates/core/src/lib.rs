//! Structure-preserving reduced-order modeling for Hamiltonian systems.
//!
//! The crate is organized bottom-up:
//!
//! - [`numcore`]: dense matrices, the scalar potential MLP and its
//!   second-order pullbacks, Adam, a reproducible RNG stream and a
//!   central-difference Jacobian oracle.
//! - [`symplectic`]: Hénon maps, layers and nets, G-reflectors, the canonical
//!   inclusion/truncation pair and the composite embedding `σ = H ∘ G ∘ ι`,
//!   all with analytic inverses, reverse-mode pullbacks and Jacobians.
//! - [`systems`]: the full-order linear wave, parametric wave and nonlinear
//!   Schrödinger discretizations, Störmer–Verlet (explicit and Newton
//!   implicit) and snapshot dataset generation.
//! - [`rom`]: the symplectic autoencoder with latent HénonNet flow, the
//!   multi-step reconstruction/prediction/Hamiltonian losses, training, the
//!   cotangent-lift baseline and evaluation metrics.

pub mod error;
pub mod numcore;
pub mod rom;
pub mod symplectic;
pub mod systems;

pub use error::{Error, Result};
