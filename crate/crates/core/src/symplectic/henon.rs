//! Hénon maps, layers (fourth powers) and nets (compositions of layers).

use super::{DiffMap, InvertibleMap, Parameterized};
use crate::error::{check_dim, Error, Result};
use crate::numcore::{Matrix, Potential, PotentialNet, RngStream};

/// `(x, y) -> (y + η, x + ∇V(y))` on `R^{2m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HenonMap<P = PotentialNet> {
    pub potential: P,
    pub eta: Vec<f64>,
}

impl<P: Potential> HenonMap<P> {
    pub fn new(potential: P, eta: Vec<f64>) -> Result<Self> {
        check_dim("HenonMap::new", potential.dim(), eta.len())?;
        Ok(Self { potential, eta })
    }

    pub fn half_dim(&self) -> usize {
        self.eta.len()
    }

    pub fn apply_xy(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.half_dim();
        check_dim("HenonMap::apply x", m, x.len())?;
        check_dim("HenonMap::apply y", m, y.len())?;
        let g = self.potential.gradient(y)?;
        let u = y.iter().zip(&self.eta).map(|(a, b)| a + b).collect();
        let v = x.iter().zip(&g).map(|(a, b)| a + b).collect();
        Ok((u, v))
    }

    pub fn inverse_uv(&self, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.half_dim();
        check_dim("HenonMap::inverse u", m, u.len())?;
        check_dim("HenonMap::inverse v", m, v.len())?;
        let w: Vec<f64> = u.iter().zip(&self.eta).map(|(a, b)| a - b).collect();
        let g = self.potential.gradient(&w)?;
        let x = v.iter().zip(&g).map(|(a, b)| a - b).collect();
        Ok((x, w))
    }

    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("HenonMap::apply", 2 * self.half_dim(), z.len())?;
        let m = self.half_dim();
        let (u, v) = self.apply_xy(&z[..m], &z[m..])?;
        Ok([u, v].concat())
    }

    fn backward(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("HenonMap::inverse", 2 * self.half_dim(), z.len())?;
        let m = self.half_dim();
        let (x, y) = self.inverse_uv(&z[..m], &z[m..])?;
        Ok([x, y].concat())
    }

    /// Pullback at input `z`; `grad` is `[potential params, η]`.
    fn forward_pullback(&self, z: &[f64], cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let m = self.half_dim();
        check_dim("HenonMap::pullback cot", 2 * m, cot.len())?;
        check_dim("HenonMap::pullback grad", self.grad_len(), grad.len())?;
        let (gp, geta) = grad.split_at_mut(self.potential.param_count());
        let (xb, yb) = cot.split_at(m);
        let hvp = self.potential.pullback(&z[m..], yb, gp)?;
        for (g, v) in geta.iter_mut().zip(xb) {
            *g += v;
        }
        let mut out = Vec::with_capacity(2 * m);
        out.extend_from_slice(yb);
        out.extend(xb.iter().zip(&hvp).map(|(a, b)| a + b));
        Ok(out)
    }

    /// Pullback of the inverse at its input `z = (u, v)`.
    fn backward_pullback(&self, z: &[f64], cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let m = self.half_dim();
        check_dim("HenonMap::inverse_pullback cot", 2 * m, cot.len())?;
        check_dim("HenonMap::inverse_pullback grad", self.grad_len(), grad.len())?;
        let (gp, geta) = grad.split_at_mut(self.potential.param_count());
        let (xb, yb) = cot.split_at(m);
        let w: Vec<f64> = z[..m].iter().zip(&self.eta).map(|(a, b)| a - b).collect();
        let neg_xb: Vec<f64> = xb.iter().map(|v| -v).collect();
        let hvp = self.potential.pullback(&w, &neg_xb, gp)?;
        let wb: Vec<f64> = yb.iter().zip(&hvp).map(|(a, b)| a + b).collect();
        for (g, v) in geta.iter_mut().zip(&wb) {
            *g -= v;
        }
        Ok([wb, xb.to_vec()].concat())
    }

    fn forward_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let m = self.half_dim();
        check_dim("HenonMap::jacobian", 2 * m, z.len())?;
        let h = self.potential.hessian(&z[m..])?;
        let mut d = Matrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            d[(i, m + i)] = 1.0;
            d[(m + i, i)] = 1.0;
            for j in 0..m {
                d[(m + i, m + j)] = h[(i, j)];
            }
        }
        Ok(d)
    }

    fn backward_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let m = self.half_dim();
        check_dim("HenonMap::inverse_jacobian", 2 * m, z.len())?;
        let w: Vec<f64> = z[..m].iter().zip(&self.eta).map(|(a, b)| a - b).collect();
        let h = self.potential.hessian(&w)?;
        let mut d = Matrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            d[(i, m + i)] = 1.0;
            d[(m + i, i)] = 1.0;
            for j in 0..m {
                d[(i, j)] = -h[(i, j)];
            }
        }
        Ok(d)
    }
}

impl<P: Potential> Parameterized for HenonMap<P> {
    fn param_count(&self) -> usize {
        self.potential.param_count() + self.eta.len()
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.potential.params();
        p.extend_from_slice(&self.eta);
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("HenonMap::set_params", self.param_count(), params.len())?;
        let (pp, eta) = params.split_at(self.potential.param_count());
        self.potential.set_params(pp)?;
        self.eta.copy_from_slice(eta);
        Ok(())
    }
}

impl<P: Potential> DiffMap for HenonMap<P> {
    type Trace = Vec<f64>;

    fn dim_in(&self) -> usize {
        2 * self.half_dim()
    }

    fn dim_out(&self) -> usize {
        2 * self.half_dim()
    }

    fn grad_len(&self) -> usize {
        self.param_count()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.forward(z)?, z.to_vec()))
    }

    fn pullback(&self, trace: &Vec<f64>, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.forward_pullback(trace, cot, grad)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        self.forward_jacobian(z)
    }
}

impl<P: Potential> InvertibleMap for HenonMap<P> {
    type InverseTrace = Vec<f64>;

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.backward(z)?, z.to_vec()))
    }

    fn inverse_pullback(&self, trace: &Vec<f64>, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.backward_pullback(trace, cot, grad)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        self.backward_jacobian(z)
    }
}

/// A Hénon map composed with itself four times.
#[derive(Debug, Clone, PartialEq)]
pub struct HenonLayer<P = PotentialNet> {
    pub map: HenonMap<P>,
}

/// Inputs of the four elementary map applications of one layer.
pub type LayerTrace = [Vec<f64>; 4];

impl<P: Potential> Parameterized for HenonLayer<P> {
    fn param_count(&self) -> usize {
        self.map.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.map.params()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.map.set_params(params)
    }
}

impl<P: Potential> DiffMap for HenonLayer<P> {
    type Trace = LayerTrace;

    fn dim_in(&self) -> usize {
        self.map.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.map.dim_out()
    }

    fn grad_len(&self) -> usize {
        self.map.param_count()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, LayerTrace)> {
        let z1 = self.map.forward(z)?;
        let z2 = self.map.forward(&z1)?;
        let z3 = self.map.forward(&z2)?;
        let out = self.map.forward(&z3)?;
        Ok((out, [z.to_vec(), z1, z2, z3]))
    }

    fn pullback(&self, trace: &LayerTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let mut c = cot.to_vec();
        for z in trace.iter().rev() {
            c = self.map.forward_pullback(z, &c, grad)?;
        }
        Ok(c)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let (_, trace) = self.apply_traced(z)?;
        let mut d = Matrix::identity(self.dim_in());
        for zi in &trace {
            d = self.map.forward_jacobian(zi)?.matmul(&d)?;
        }
        Ok(d)
    }
}

impl<P: Potential> InvertibleMap for HenonLayer<P> {
    type InverseTrace = LayerTrace;

    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, LayerTrace)> {
        let z1 = self.map.backward(z)?;
        let z2 = self.map.backward(&z1)?;
        let z3 = self.map.backward(&z2)?;
        let out = self.map.backward(&z3)?;
        Ok((out, [z.to_vec(), z1, z2, z3]))
    }

    fn inverse_pullback(&self, trace: &LayerTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let mut c = cot.to_vec();
        for z in trace.iter().rev() {
            c = self.map.backward_pullback(z, &c, grad)?;
        }
        Ok(c)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        let (_, trace) = self.inverse_traced(z)?;
        let mut d = Matrix::identity(self.dim_in());
        for zi in &trace {
            d = self.map.backward_jacobian(zi)?.matmul(&d)?;
        }
        Ok(d)
    }
}

/// Sequential composition of Hénon layers on a common `R^{2m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HenonNet<P = PotentialNet> {
    layers: Vec<HenonLayer<P>>,
}

pub type NetTrace = Vec<LayerTrace>;

impl<P: Potential> HenonNet<P> {
    pub fn new(layers: Vec<HenonLayer<P>>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidArgument("a Hénon net needs at least one layer".into()));
        };
        let m = first.map.half_dim();
        for l in &layers {
            check_dim("HenonNet::new", m, l.map.half_dim())?;
        }
        Ok(Self { layers })
    }

    pub fn from_maps(maps: Vec<HenonMap<P>>) -> Result<Self> {
        Self::new(maps.into_iter().map(|map| HenonLayer { map }).collect())
    }

    pub fn layers(&self) -> &[HenonLayer<P>] {
        &self.layers
    }

    pub fn half_dim(&self) -> usize {
        self.layers[0].map.half_dim()
    }
}

impl HenonNet<PotentialNet> {
    /// Widths of each layer's potential: `[m, hidden..., 1]`.
    fn potential_widths(m: usize, hidden: &[usize]) -> Vec<usize> {
        let mut w = vec![m];
        w.extend_from_slice(hidden);
        w.push(1);
        w
    }

    /// Training initialization: η = 0 and a zero output layer in every
    /// potential, so the net is exactly the identity; hidden weights uniform.
    pub fn init(m: usize, n_layers: usize, hidden: &[usize], rng: &mut RngStream) -> Result<Self> {
        let widths = Self::potential_widths(m, hidden);
        let maps = (0..n_layers)
            .map(|_| HenonMap::new(PotentialNet::random(&widths, rng, true)?, vec![0.0; m]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_maps(maps)
    }

    /// Fully random parameters, including η and output layers.
    pub fn random(m: usize, n_layers: usize, hidden: &[usize], rng: &mut RngStream) -> Result<Self> {
        let widths = Self::potential_widths(m, hidden);
        let bound = 1.0 / (m as f64).sqrt();
        let maps = (0..n_layers)
            .map(|_| {
                let pot = PotentialNet::random(&widths, rng, false)?;
                let eta = (0..m).map(|_| rng.uniform(-bound, bound)).collect();
                HenonMap::new(pot, eta)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_maps(maps)
    }
}

impl<P: Potential> Parameterized for HenonNet<P> {
    fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("HenonNet::set_params", self.param_count(), params.len())?;
        let mut off = 0;
        for l in &mut self.layers {
            let c = l.param_count();
            l.set_params(&params[off..off + c])?;
            off += c;
        }
        Ok(())
    }
}

impl<P: Potential> HenonNet<P> {
    fn layer_grads<'g>(&self, grad: &'g mut [f64]) -> Result<Vec<&'g mut [f64]>> {
        check_dim("HenonNet grad", self.param_count(), grad.len())?;
        let mut rest = grad;
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (head, tail) = rest.split_at_mut(l.param_count());
            out.push(head);
            rest = tail;
        }
        Ok(out)
    }
}

impl<P: Potential> DiffMap for HenonNet<P> {
    type Trace = NetTrace;

    fn dim_in(&self) -> usize {
        2 * self.half_dim()
    }

    fn dim_out(&self) -> usize {
        2 * self.half_dim()
    }

    fn grad_len(&self) -> usize {
        self.param_count()
    }

    fn apply_traced(&self, z: &[f64]) -> Result<(Vec<f64>, NetTrace)> {
        check_dim("HenonNet::apply", self.dim_in(), z.len())?;
        let mut cur = z.to_vec();
        let mut trace = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (next, t) = l.apply_traced(&cur)?;
            trace.push(t);
            cur = next;
        }
        Ok((cur, trace))
    }

    fn pullback(&self, trace: &NetTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let grads = self.layer_grads(grad)?;
        let mut c = cot.to_vec();
        for ((l, t), g) in self.layers.iter().zip(trace).zip(grads).rev() {
            c = l.pullback(t, &c, g)?;
        }
        Ok(c)
    }

    fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("HenonNet::jacobian", self.dim_in(), z.len())?;
        let mut cur = z.to_vec();
        let mut d = Matrix::identity(self.dim_in());
        for l in &self.layers {
            d = l.jacobian(&cur)?.matmul(&d)?;
            cur = l.apply(&cur)?;
        }
        Ok(d)
    }
}

impl<P: Potential> InvertibleMap for HenonNet<P> {
    type InverseTrace = NetTrace;

    /// Layers are inverted in reverse order; the trace is stored in that
    /// application order.
    fn inverse_traced(&self, z: &[f64]) -> Result<(Vec<f64>, NetTrace)> {
        check_dim("HenonNet::inverse", self.dim_in(), z.len())?;
        let mut cur = z.to_vec();
        let mut trace = Vec::with_capacity(self.layers.len());
        for l in self.layers.iter().rev() {
            let (next, t) = l.inverse_traced(&cur)?;
            trace.push(t);
            cur = next;
        }
        Ok((cur, trace))
    }

    fn inverse_pullback(&self, trace: &NetTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let grads = self.layer_grads(grad)?;
        let mut c = cot.to_vec();
        // trace[i] belongs to layer len-1-i, so walk layers forwards.
        for ((l, t), g) in self.layers.iter().zip(trace.iter().rev()).zip(grads) {
            c = l.inverse_pullback(t, &c, g)?;
        }
        Ok(c)
    }

    fn inverse_jacobian(&self, z: &[f64]) -> Result<Matrix> {
        check_dim("HenonNet::inverse_jacobian", self.dim_in(), z.len())?;
        let mut cur = z.to_vec();
        let mut d = Matrix::identity(self.dim_in());
        for l in self.layers.iter().rev() {
            d = l.inverse_jacobian(&cur)?.matmul(&d)?;
            cur = l.inverse(&cur)?;
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::QuadraticPotential;

    fn quad_map() -> HenonMap<QuadraticPotential> {
        HenonMap::new(QuadraticPotential::new(1), vec![0.0]).unwrap()
    }

    #[test]
    fn test_zero_potential_is_swap() {
        let map = HenonMap::new(PotentialNet::zeros(&[1, 3, 1]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(map.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn test_quadratic_potential_hand_values() {
        let map = quad_map();
        assert_eq!(map.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(map.apply(&[0.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        let layer = HenonLayer { map: map.clone() };
        assert_eq!(layer.apply(&[1.0, 0.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(map.inverse(&[2.0, 3.0]).unwrap(), vec![1.0, 2.0]);
        let net = HenonNet::from_maps(vec![map]).unwrap();
        assert_eq!(net.apply(&[1.0, 0.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(net.inverse(&[2.0, 3.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn test_shifted_zero_potential_inverse() {
        let map = HenonMap::new(PotentialNet::zeros(&[2, 1]).unwrap(), vec![0.5, -1.0]).unwrap();
        let out = map.inverse(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out, vec![3.0, 4.0, 0.5, 3.0]);
    }

    #[test]
    fn test_init_is_identity() {
        let mut rng = RngStream::new(5);
        let net = HenonNet::init(3, 2, &[8], &mut rng).unwrap();
        let z = [0.1, -0.2, 0.3, 0.4, 0.5, -0.6];
        assert_eq!(net.apply(&z).unwrap(), z.to_vec());
    }

    #[test]
    fn test_dimension_mismatch() {
        let mut rng = RngStream::new(5);
        let net = HenonNet::random(2, 1, &[4], &mut rng).unwrap();
        assert!(net.apply(&[1.0, 2.0]).is_err());
        assert!(net.inverse(&[1.0; 5]).is_err());
        assert!(HenonNet::<PotentialNet>::new(Vec::new()).is_err());
    }
}
