//! Canonical inclusion/truncation and the composite embedding `σ = H ∘ G ∘ ι`.

use super::{DiffMap, GReflectorStack, HenonNet, InvertibleMap, NetTrace, Parameterized};
use crate::error::{check_dim, Error, Result};
use crate::numcore::Matrix;

/// Canonical inclusion `ι: R^{2k} -> R^{2n}` and its left inverse, the
/// truncation `τ = ι⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inclusion {
    pub n: usize,
    pub k: usize,
}

impl Inclusion {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k > n || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "latent half-dimension {k} must be in 1..={n}"
            )));
        }
        Ok(Self { n, k })
    }

    pub fn include(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("Inclusion::include", 2 * self.k, y.len())?;
        let mut z = vec![0.0; 2 * self.n];
        z[..self.k].copy_from_slice(&y[..self.k]);
        z[self.n..self.n + self.k].copy_from_slice(&y[self.k..]);
        Ok(z)
    }

    pub fn truncate(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("Inclusion::truncate", 2 * self.n, z.len())?;
        let mut y = Vec::with_capacity(2 * self.k);
        y.extend_from_slice(&z[..self.k]);
        y.extend_from_slice(&z[self.n..self.n + self.k]);
        Ok(y)
    }

    /// The `2n x 2k` matrix of `ι`.
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(2 * self.n, 2 * self.k);
        for i in 0..self.k {
            m[(i, i)] = 1.0;
            m[(self.n + i, self.k + i)] = 1.0;
        }
        m
    }
}

impl Parameterized for Inclusion {
    fn param_count(&self) -> usize {
        0
    }

    fn params(&self) -> Vec<f64> {
        Vec::new()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("Inclusion::set_params", 0, params.len())
    }
}

impl DiffMap for Inclusion {
    type Trace = ();

    fn dim_in(&self) -> usize {
        2 * self.k
    }

    fn dim_out(&self) -> usize {
        2 * self.n
    }

    fn grad_len(&self) -> usize {
        0
    }

    fn apply_traced(&self, y: &[f64]) -> Result<(Vec<f64>, ())> {
        Ok((self.include(y)?, ()))
    }

    fn pullback(&self, _: &(), cot: &[f64], _grad: &mut [f64]) -> Result<Vec<f64>> {
        self.truncate(cot)
    }

    fn jacobian(&self, y: &[f64]) -> Result<Matrix> {
        check_dim("Inclusion::jacobian", 2 * self.k, y.len())?;
        Ok(self.matrix())
    }
}

impl InvertibleMap for Inclusion {
    type InverseTrace = ();

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, ())> {
        Ok((self.truncate(z)?, ()))
    }

    fn inverse_pullback(&self, _: &(), cot: &[f64], _grad: &mut [f64]) -> Result<Vec<f64>> {
        self.include(cot)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("Inclusion::inverse_jacobian", 2 * self.n, z.len())?;
        Ok(self.matrix().transpose())
    }
}

/// `σ(y) = H(G(ι y))` with both `G` and `H` optional.
///
/// Parameters are laid out as `[reflectors, henon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeEmbedding {
    pub inclusion: Inclusion,
    pub reflectors: Option<GReflectorStack>,
    pub henon: Option<HenonNet>,
}

#[derive(Debug, Clone)]
pub struct EmbedTrace {
    reflectors: Option<Vec<Vec<f64>>>,
    henon: Option<NetTrace>,
}

#[derive(Debug, Clone)]
pub struct InverseEmbedTrace {
    henon: Option<NetTrace>,
    reflectors: Option<Vec<Vec<f64>>>,
}

impl CompositeEmbedding {
    pub fn new(
        inclusion: Inclusion,
        reflectors: Option<GReflectorStack>,
        henon: Option<HenonNet>,
    ) -> Result<Self> {
        let dim = 2 * inclusion.n;
        if let Some(g) = &reflectors {
            check_dim("CompositeEmbedding reflectors", dim, g.dim_in())?;
        }
        if let Some(h) = &henon {
            check_dim("CompositeEmbedding henon", dim, h.dim_in())?;
        }
        Ok(Self {
            inclusion,
            reflectors,
            henon,
        })
    }

    pub fn n(&self) -> usize {
        self.inclusion.n
    }

    pub fn k(&self) -> usize {
        self.inclusion.k
    }

    fn reflector_len(&self) -> usize {
        self.reflectors.as_ref().map_or(0, |g| g.param_count())
    }

    pub fn embed(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.apply(y)
    }

    /// `σ⁻¹(z) = τ(G⁻¹(H⁻¹ z))`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.inverse(z)
    }
}

impl Parameterized for CompositeEmbedding {
    fn param_count(&self) -> usize {
        self.reflector_len() + self.henon.as_ref().map_or(0, |h| h.param_count())
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.reflectors.as_ref().map_or_else(Vec::new, |g| g.params());
        if let Some(h) = &self.henon {
            p.extend(h.params());
        }
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("CompositeEmbedding::set_params", self.param_count(), params.len())?;
        let (pg, ph) = params.split_at(self.reflector_len());
        if let Some(g) = &mut self.reflectors {
            g.set_params(pg)?;
        }
        if let Some(h) = &mut self.henon {
            h.set_params(ph)?;
        }
        Ok(())
    }
}

impl DiffMap for CompositeEmbedding {
    type Trace = EmbedTrace;

    fn dim_in(&self) -> usize {
        2 * self.k()
    }

    fn dim_out(&self) -> usize {
        2 * self.n()
    }

    fn grad_len(&self) -> usize {
        self.param_count()
    }

    fn apply_traced(&self, y: &[f64]) -> Result<(Vec<f64>, EmbedTrace)> {
        let mut z = self.inclusion.include(y)?;
        let mut trace = EmbedTrace {
            reflectors: None,
            henon: None,
        };
        if let Some(g) = &self.reflectors {
            let (out, t) = g.apply_traced(&z)?;
            trace.reflectors = Some(t);
            z = out;
        }
        if let Some(h) = &self.henon {
            let (out, t) = h.apply_traced(&z)?;
            trace.henon = Some(t);
            z = out;
        }
        Ok((z, trace))
    }

    fn pullback(&self, trace: &EmbedTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        check_dim("CompositeEmbedding::pullback grad", self.param_count(), grad.len())?;
        check_dim("CompositeEmbedding::pullback cot", self.dim_out(), cot.len())?;
        let (gg, gh) = grad.split_at_mut(self.reflector_len());
        let mut c = cot.to_vec();
        if let (Some(h), Some(t)) = (&self.henon, &trace.henon) {
            c = h.pullback(t, &c, gh)?;
        }
        if let (Some(g), Some(t)) = (&self.reflectors, &trace.reflectors) {
            c = g.pullback(t, &c, gg)?;
        }
        self.inclusion.truncate(&c)
    }

    fn jacobian(&self, y: &[f64]) -> Result<Matrix> {
        let mut z = self.inclusion.include(y)?;
        let mut d = self.inclusion.matrix();
        if let Some(g) = &self.reflectors {
            d = g.jacobian(&z)?.matmul(&d)?;
            z = g.apply(&z)?;
        }
        if let Some(h) = &self.henon {
            d = h.jacobian(&z)?.matmul(&d)?;
        }
        Ok(d)
    }
}

impl InvertibleMap for CompositeEmbedding {
    type InverseTrace = InverseEmbedTrace;

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, InverseEmbedTrace)> {
        check_dim("CompositeEmbedding::inverse", self.dim_out(), z.len())?;
        let mut cur = z.to_vec();
        let mut trace = InverseEmbedTrace {
            henon: None,
            reflectors: None,
        };
        if let Some(h) = &self.henon {
            let (out, t) = h.inverse_traced(&cur)?;
            trace.henon = Some(t);
            cur = out;
        }
        if let Some(g) = &self.reflectors {
            let (out, t) = g.inverse_traced(&cur)?;
            trace.reflectors = Some(t);
            cur = out;
        }
        Ok((self.inclusion.truncate(&cur)?, trace))
    }

    fn inverse_pullback(
        &self,
        trace: &InverseEmbedTrace,
        cot: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        check_dim("CompositeEmbedding::inverse_pullback grad", self.param_count(), grad.len())?;
        let (gg, gh) = grad.split_at_mut(self.reflector_len());
        let mut c = self.inclusion.include(cot)?;
        if let (Some(g), Some(t)) = (&self.reflectors, &trace.reflectors) {
            c = g.inverse_pullback(t, &c, gg)?;
        }
        if let (Some(h), Some(t)) = (&self.henon, &trace.henon) {
            c = h.inverse_pullback(t, &c, gh)?;
        }
        Ok(c)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("CompositeEmbedding::inverse_jacobian", self.dim_out(), z.len())?;
        let mut cur = z.to_vec();
        let mut d = Matrix::identity(self.dim_out());
        if let Some(h) = &self.henon {
            d = h.inverse_jacobian(&cur)?.matmul(&d)?;
            cur = h.inverse(&cur)?;
        }
        if let Some(g) = &self.reflectors {
            d = g.inverse_jacobian(&cur)?.matmul(&d)?;
        }
        self.inclusion.matrix().transpose().matmul(&d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    #[test]
    fn test_inclusion_examples() {
        let inc = Inclusion::new(2, 1).unwrap();
        assert_eq!(inc.include(&[3.0, 4.0]).unwrap(), vec![3.0, 0.0, 4.0, 0.0]);
        assert_eq!(inc.truncate(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 3.0]);
        let same = Inclusion::new(3, 3).unwrap();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(same.include(&y).unwrap(), y.to_vec());
        assert!(Inclusion::new(2, 3).is_err());
    }

    #[test]
    fn test_identity_initialized_embedding_is_inclusion() {
        let mut rng = RngStream::new(1);
        let inc = Inclusion::new(3, 2).unwrap();
        let emb = CompositeEmbedding::new(
            inc,
            Some(GReflectorStack::init(6, 4, &mut rng).unwrap()),
            Some(HenonNet::init(3, 2, &[5], &mut rng).unwrap()),
        )
        .unwrap();
        let y = [0.5, -1.0, 2.0, 0.25];
        assert_eq!(emb.embed(&y).unwrap(), inc.include(&y).unwrap());
        assert_eq!(emb.project(&emb.embed(&y).unwrap()).unwrap(), y.to_vec());
    }

    #[test]
    fn test_mismatched_components_rejected() {
        let mut rng = RngStream::new(1);
        let inc = Inclusion::new(3, 1).unwrap();
        let g = GReflectorStack::init(4, 1, &mut rng).unwrap();
        assert!(CompositeEmbedding::new(inc, Some(g), None).is_err());
    }
}
