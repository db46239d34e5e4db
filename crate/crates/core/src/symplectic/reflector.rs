//! G-reflectors `z -> z + β u (uᵀ J z)` and stacks of them.

use super::{apply_j, apply_jt, DiffMap, InvertibleMap, Parameterized};
use crate::error::{check_dim, Result};
use crate::numcore::{axpy, dot, Matrix, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct GReflector {
    pub u: Vec<f64>,
    pub beta: f64,
}

impl GReflector {
    pub fn new(u: Vec<f64>, beta: f64) -> Result<Self> {
        if u.len() % 2 != 0 {
            return Err(crate::Error::InvalidArgument(format!(
                "reflector vector must have even length, got {}",
                u.len()
            )));
        }
        Ok(Self { u, beta })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `sign = 1` applies the reflector, `sign = -1` its inverse.
    fn apply_signed(&self, z: &[f64], sign: f64) -> Result<Vec<f64>> {
        check_dim("GReflector::apply", self.dim(), z.len())?;
        let s = dot(&self.u, &apply_j(z));
        let mut out = z.to_vec();
        axpy(sign * self.beta * s, &self.u, &mut out);
        Ok(out)
    }

    fn pullback_signed(
        &self,
        z: &[f64],
        cot: &[f64],
        sign: f64,
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        let dim = self.dim();
        let beta = sign * self.beta;
        check_dim("GReflector::pullback cot", dim, cot.len())?;
        check_dim("GReflector::pullback grad", dim + 1, grad.len())?;
        let jz = apply_j(z);
        let s = dot(&self.u, &jz);
        let uc = dot(&self.u, cot);
        let mut zb = cot.to_vec();
        axpy(beta * uc, &apply_jt(&self.u), &mut zb);
        let (gu, gbeta) = grad.split_at_mut(dim);
        axpy(beta * s, cot, gu);
        axpy(beta * uc, &jz, gu);
        gbeta[0] += sign * s * uc;
        Ok(zb)
    }

    fn jacobian_signed(&self, sign: f64) -> Matrix {
        let dim = self.dim();
        let beta = sign * self.beta;
        let ujt = apply_jt(&self.u); // row vector uᵀJ equals (Jᵀu)ᵀ
        let mut d = Matrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                d[(i, j)] += beta * self.u[i] * ujt[j];
            }
        }
        d
    }

    /// Dense matrix `I + β u uᵀ J`.
    pub fn matrix(&self) -> Matrix {
        self.jacobian_signed(1.0)
    }
}

impl Parameterized for GReflector {
    fn param_count(&self) -> usize {
        self.dim() + 1
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.u.clone();
        p.push(self.beta);
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("GReflector::set_params", self.param_count(), params.len())?;
        let dim = self.dim();
        self.u.copy_from_slice(&params[..dim]);
        self.beta = params[dim];
        Ok(())
    }
}

impl DiffMap for GReflector {
    type Trace = Vec<f64>;

    fn dim_in(&self) -> usize {
        self.dim()
    }

    fn dim_out(&self) -> usize {
        self.dim()
    }

    fn grad_len(&self) -> usize {
        self.param_count()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.apply_signed(z, 1.0)?, z.to_vec()))
    }

    fn pullback(&self, trace: &Vec<f64>, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.pullback_signed(trace, cot, 1.0, grad)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("GReflector::jacobian", self.dim(), z.len())?;
        Ok(self.jacobian_signed(1.0))
    }
}

impl InvertibleMap for GReflector {
    type InverseTrace = Vec<f64>;

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.apply_signed(z, -1.0)?, z.to_vec()))
    }

    fn inverse_pullback(&self, trace: &Vec<f64>, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.pullback_signed(trace, cot, -1.0, grad)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("GReflector::inverse_jacobian", self.dim(), z.len())?;
        Ok(self.jacobian_signed(-1.0))
    }
}

/// Ordered composition of G-reflectors on a common `R^{2m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GReflectorStack {
    dim: usize,
    reflectors: Vec<GReflector>,
}

impl GReflectorStack {
    pub fn new(dim: usize, reflectors: Vec<GReflector>) -> Result<Self> {
        for r in &reflectors {
            check_dim("GReflectorStack::new", dim, r.dim())?;
        }
        if dim % 2 != 0 {
            return Err(crate::Error::InvalidArgument(format!(
                "reflector dimension must be even, got {dim}"
            )));
        }
        Ok(Self { dim, reflectors })
    }

    /// Training initialization: uniform `u` scaled by `1/sqrt(2m)`, β = 0.
    pub fn init(dim: usize, count: usize, rng: &mut RngStream) -> Result<Self> {
        Self::sampled(dim, count, rng, 0.0)
    }

    /// Random `u` as in `init` and β uniform in `[-beta_range, beta_range]`.
    pub fn random(dim: usize, count: usize, rng: &mut RngStream, beta_range: f64) -> Result<Self> {
        Self::sampled(dim, count, rng, beta_range)
    }

    fn sampled(dim: usize, count: usize, rng: &mut RngStream, beta_range: f64) -> Result<Self> {
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        let reflectors = (0..count)
            .map(|_| {
                let u = (0..dim).map(|_| rng.uniform(-bound, bound)).collect();
                let beta = if beta_range > 0.0 {
                    rng.uniform(-beta_range, beta_range)
                } else {
                    0.0
                };
                GReflector::new(u, beta)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, reflectors)
    }

    pub fn reflectors(&self) -> &[GReflector] {
        &self.reflectors
    }

    pub fn len(&self) -> usize {
        self.reflectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reflectors.is_empty()
    }

    /// Dense product matrix.
    pub fn matrix(&self) -> Matrix {
        let mut d = Matrix::identity(self.dim);
        for r in &self.reflectors {
            d = r.matrix().matmul(&d).expect("shapes checked at construction");
        }
        d
    }

    fn chunks<'g>(&self, grad: &'g mut [f64]) -> Result<std::slice::ChunksExactMut<'g, f64>> {
        check_dim("GReflectorStack grad", self.param_count(), grad.len())?;
        Ok(grad.chunks_exact_mut(self.dim + 1))
    }
}

impl Parameterized for GReflectorStack {
    fn param_count(&self) -> usize {
        self.reflectors.len() * (self.dim + 1)
    }

    fn params(&self) -> Vec<f64> {
        self.reflectors.iter().flat_map(|r| r.params()).collect()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("GReflectorStack::set_params", self.param_count(), params.len())?;
        for (r, p) in self.reflectors.iter_mut().zip(params.chunks_exact(self.dim + 1)) {
            r.set_params(p)?;
        }
        Ok(())
    }
}

impl DiffMap for GReflectorStack {
    type Trace = Vec<Vec<f64>>;

    fn dim_in(&self) -> usize {
        self.dim
    }

    fn dim_out(&self) -> usize {
        self.dim
    }

    fn grad_len(&self) -> usize {
        self.param_count()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        check_dim("GReflectorStack::apply", self.dim, z.len())?;
        let mut cur = z.to_vec();
        let mut trace = Vec::with_capacity(self.reflectors.len());
        for r in &self.reflectors {
            let next = r.apply_signed(&cur, 1.0)?;
            trace.push(std::mem::replace(&mut cur, next));
        }
        Ok((cur, trace))
    }

    fn pullback(&self, trace: &Vec<Vec<f64>>, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let mut c = cot.to_vec();
        let chunks = self.chunks(grad)?;
        for ((r, z), g) in self.reflectors.iter().zip(trace).zip(chunks).rev() {
            c = r.pullback_signed(z, &c, 1.0, g)?;
        }
        Ok(c)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("GReflectorStack::jacobian", self.dim, z.len())?;
        Ok(self.matrix())
    }
}

impl InvertibleMap for GReflectorStack {
    type InverseTrace = Vec<Vec<f64>>;

    /// Reflectors are undone last to first; the trace follows that order.
    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        check_dim("GReflectorStack::inverse", self.dim, z.len())?;
        let mut cur = z.to_vec();
        let mut trace = Vec::with_capacity(self.reflectors.len());
        for r in self.reflectors.iter().rev() {
            let next = r.apply_signed(&cur, -1.0)?;
            trace.push(std::mem::replace(&mut cur, next));
        }
        Ok((cur, trace))
    }

    fn inverse_pullback(
        &self,
        trace: &Vec<Vec<f64>>,
        cot: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        let mut c = cot.to_vec();
        let chunks = self.chunks(grad)?;
        for ((r, z), g) in self.reflectors.iter().zip(trace.iter().rev()).zip(chunks) {
            c = r.pullback_signed(z, &c, -1.0, g)?;
        }
        Ok(c)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("GReflectorStack::inverse_jacobian", self.dim, z.len())?;
        let mut d = Matrix::identity(self.dim);
        for r in self.reflectors.iter().rev() {
            d = r.jacobian_signed(-1.0).matmul(&d)?;
        }
        Ok(d)
    }
}
