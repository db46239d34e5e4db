//! Symplectic maps with analytic inverses and reverse-mode pullbacks.
//!
//! Every map exposes a traced forward evaluation and a pullback that turns an
//! output cotangent into an input cotangent while accumulating parameter
//! gradients into a caller-owned slice laid out like `params()`.

mod defect;
mod embedding;
mod henon;
mod reflector;

pub use defect::{anti_symplecticity_defect, symplecticity_defect, DefectMode};
pub use embedding::{CompositeEmbedding, EmbedTrace, Inclusion, InverseEmbedTrace};
pub use henon::{HenonLayer, HenonMap, HenonNet, LayerTrace, NetTrace};
pub use reflector::{GReflector, GReflectorStack};

use crate::error::Result;
use crate::numcore::Matrix;

/// Read/write access to a flat parameter vector.
pub trait Parameterized {
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
}

/// A differentiable map `R^dim_in -> R^dim_out` with trainable parameters.
pub trait DiffMap {
    type Trace: Send + Sync;

    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn grad_len(&self) -> usize;

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Self::Trace)>;

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_traced(z)?.0)
    }

    /// Returns `Dᵀ cot` and adds the parameter gradient of `cot · map(z)` into `grad`.
    fn pullback(&self, trace: &Self::Trace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>>;

    /// Analytic Jacobian, `dim_out x dim_in`.
    fn jacobian(&self, z: &[f64]) -> Result<Matrix>;
}

/// Maps with an analytic (left) inverse `R^dim_out -> R^dim_in`.
pub trait InvertibleMap: DiffMap {
    type InverseTrace: Send + Sync;

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Self::InverseTrace)>;

    fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.inverse_traced(z)?.0)
    }

    fn inverse_pullback(
        &self,
        trace: &Self::InverseTrace,
        cot: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>>;

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix>;
}

/// View of an invertible map's inverse as a map in its own right.
#[derive(Debug, Clone, Copy)]
pub struct Inverse<'a, M>(pub &'a M);

impl<M: InvertibleMap> DiffMap for Inverse<'_, M> {
    type Trace = M::InverseTrace;

    fn dim_in(&self) -> usize {
        self.0.dim_out()
    }

    fn dim_out(&self) -> usize {
        self.0.dim_in()
    }

    fn grad_len(&self) -> usize {
        self.0.grad_len()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Self::Trace)> {
        self.0.inverse_traced(z)
    }

    fn pullback(&self, trace: &Self::Trace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.0.inverse_pullback(trace, cot, grad)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        self.0.inverse_jacobian(z)
    }
}

/// `J z` for `z = (q, p)`, i.e. `(p, -q)`.
pub fn apply_j(z: &[f64]) -> Vec<f64> {
    let n = z.len() / 2;
    let mut out = Vec::with_capacity(z.len());
    out.extend_from_slice(&z[n..]);
    out.extend(z[..n].iter().map(|v| -v));
    out
}

/// `Jᵀ z = (-p, q)`.
pub fn apply_jt(z: &[f64]) -> Vec<f64> {
    let n = z.len() / 2;
    let mut out = Vec::with_capacity(z.len());
    out.extend(z[n..].iter().map(|v| -v));
    out.extend_from_slice(&z[..n]);
    out
}
