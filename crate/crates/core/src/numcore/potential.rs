//! Scalar potentials `V: R^m -> R` with the derivatives Hénon maps need.

use serde::{Deserialize, Serialize};

use super::RngStream;
use crate::error::{check_dim, Error, Result};

/// ELU with `alpha = 1`.
#[inline]
pub fn elu(a: f64) -> f64 {
    if a > 0.0 {
        a
    } else {
        a.exp_m1()
    }
}

#[inline]
pub fn elu_prime(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a.exp()
    }
}

/// One-sided second derivative: `e^a` for `a < 0`, zero otherwise.
#[inline]
pub fn elu_second(a: f64) -> f64 {
    if a < 0.0 {
        a.exp()
    } else {
        0.0
    }
}

/// The differentiation contract used by Hénon maps.
///
/// `pullback(y, w, grad)` returns the Hessian-vector product `H_V(y) w` and
/// adds `(d grad V(y) / d theta)^T w` into `grad`, which must have length
/// `param_count()`.
pub trait Potential: Clone + Send + Sync {
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    fn value(&self, y: &[f64]) -> Result<f64>;
    fn gradient(&self, y: &[f64]) -> Result<Vec<f64>>;
    fn pullback(&self, y: &[f64], w: &[f64], grad: &mut [f64]) -> Result<Vec<f64>>;

    /// Dense Hessian, assembled column by column from `pullback`.
    fn hessian(&self, y: &[f64]) -> Result<super::Matrix> {
        let m = self.dim();
        let mut scratch = vec![0.0; self.param_count()];
        let mut h = super::Matrix::zeros(m, m);
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = self.pullback(y, &e, &mut scratch)?;
            for (i, v) in col.iter().enumerate() {
                h[(i, j)] = *v;
            }
            e[j] = 0.0;
        }
        Ok(h)
    }
}

/// Fixed test potential `V(y) = ½‖y‖²`; it has no trainable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticPotential {
    pub dim: usize,
}

impl QuadraticPotential {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Potential for QuadraticPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        0
    }

    fn params(&self) -> Vec<f64> {
        Vec::new()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("QuadraticPotential::set_params", 0, params.len())
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        check_dim("QuadraticPotential::value", self.dim, y.len())?;
        Ok(0.5 * super::dot(y, y))
    }

    fn gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("QuadraticPotential::gradient", self.dim, y.len())?;
        Ok(y.to_vec())
    }

    fn pullback(&self, y: &[f64], w: &[f64], _grad: &mut [f64]) -> Result<Vec<f64>> {
        check_dim("QuadraticPotential::pullback y", self.dim, y.len())?;
        check_dim("QuadraticPotential::pullback w", self.dim, w.len())?;
        Ok(w.to_vec())
    }
}

/// MLP potential: ELU hidden layers, identity scalar output.
///
/// Parameters are stored flat, layer by layer, as `[W_1, b_1, ..., W_L, b_L]`
/// with each `W_l` row-major of shape `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialNet {
    widths: Vec<usize>,
    params: Vec<f64>,
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct LayerShape {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
}

/// Activations kept from a forward pass.
struct Forward {
    /// Pre-activations of hidden layers, `a[l-1]` for layer `l`.
    pre: Vec<Vec<f64>>,
    /// Post-activations, `h[0] = y`.
    post: Vec<Vec<f64>>,
}

impl PotentialNet {
    /// All-zero network with the given widths `[m, hidden..., 1]`.
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument(
                "potential needs at least input and output widths".into(),
            ));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::InvalidArgument(format!(
                "potential output width must be 1, got {}",
                widths.last().unwrap()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument("potential widths must be positive".into()));
        }
        let count = widths.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        Ok(Self {
            widths: widths.to_vec(),
            params: vec![0.0; count],
        })
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        net.set_params(&params)?;
        Ok(net)
    }

    /// Uniform `±1/sqrt(fan_in)` weights and biases; when `zero_output` is set
    /// the output layer starts at zero so `V ≡ 0`.
    pub fn random(widths: &[usize], rng: &mut RngStream, zero_output: bool) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let shapes = net.shapes();
        let last = shapes.len() - 1;
        for (l, s) in shapes.iter().enumerate() {
            if zero_output && l == last {
                continue;
            }
            let bound = 1.0 / (s.n_in as f64).sqrt();
            for v in &mut net.params[s.w..s.b + s.n_out] {
                *v = rng.uniform(-bound, bound);
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    fn shapes(&self) -> Vec<LayerShape> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|p| {
                let s = LayerShape {
                    n_in: p[0],
                    n_out: p[1],
                    w: off,
                    b: off + p[0] * p[1],
                };
                off = s.b + s.n_out;
                s
            })
            .collect()
    }

    fn affine(&self, s: &LayerShape, x: &[f64]) -> Vec<f64> {
        let mut out = self.weight_mul(s, x);
        for (o, b) in out.iter_mut().zip(&self.params[s.b..s.b + s.n_out]) {
            *o += b;
        }
        out
    }

    /// `W x` without the bias.
    fn weight_mul(&self, s: &LayerShape, x: &[f64]) -> Vec<f64> {
        let w = &self.params[s.w..s.b];
        (0..s.n_out)
            .map(|i| super::dot(&w[i * s.n_in..(i + 1) * s.n_in], x))
            .collect()
    }

    /// `out += W^T v`
    fn affine_transpose(&self, s: &LayerShape, v: &[f64], out: &mut [f64]) {
        let w = &self.params[s.w..s.b];
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                super::axpy(*vi, &w[i * s.n_in..(i + 1) * s.n_in], out);
            }
        }
    }

    fn forward_hidden(&self, shapes: &[LayerShape], y: &[f64]) -> Forward {
        let hidden = shapes.len() - 1;
        let mut pre = Vec::with_capacity(hidden);
        let mut post = Vec::with_capacity(hidden + 1);
        post.push(y.to_vec());
        for s in &shapes[..hidden] {
            let a = self.affine(s, post.last().unwrap());
            post.push(a.iter().map(|&x| elu(x)).collect());
            pre.push(a);
        }
        Forward { pre, post }
    }

    /// Backward pass for `grad V`; returns `s[0..L)` where `s[l]` is the
    /// cotangent on `h_l` and `s[0]` is the gradient, plus the `d_l` vectors.
    fn backward(&self, shapes: &[LayerShape], fw: &Forward) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let hidden = shapes.len() - 1;
        let out = &shapes[hidden];
        let mut s = vec![Vec::new(); hidden + 1];
        let mut d = vec![Vec::new(); hidden + 1];
        s[hidden] = self.params[out.w..out.b].to_vec();
        for l in (1..=hidden).rev() {
            let dl: Vec<f64> = fw.pre[l - 1]
                .iter()
                .zip(&s[l])
                .map(|(a, sl)| elu_prime(*a) * sl)
                .collect();
            let mut prev = vec![0.0; shapes[l - 1].n_in];
            self.affine_transpose(&shapes[l - 1], &dl, &mut prev);
            s[l - 1] = prev;
            d[l] = dl;
        }
        (s, d)
    }
}

impl Potential for PotentialNet {
    fn dim(&self) -> usize {
        self.widths[0]
    }

    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> Vec<f64> {
        self.params.clone()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("PotentialNet::set_params", self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        check_dim("PotentialNet::value", self.dim(), y.len())?;
        let shapes = self.shapes();
        let fw = self.forward_hidden(&shapes, y);
        Ok(self.affine(shapes.last().unwrap(), fw.post.last().unwrap())[0])
    }

    fn gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("PotentialNet::gradient", self.dim(), y.len())?;
        let shapes = self.shapes();
        let fw = self.forward_hidden(&shapes, y);
        let (mut s, _) = self.backward(&shapes, &fw);
        Ok(std::mem::take(&mut s[0]))
    }

    fn pullback(&self, y: &[f64], w: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        check_dim("PotentialNet::pullback y", self.dim(), y.len())?;
        check_dim("PotentialNet::pullback w", self.dim(), w.len())?;
        check_dim("PotentialNet::pullback grad", self.params.len(), grad.len())?;
        let shapes = self.shapes();
        let hidden = shapes.len() - 1;
        let fw = self.forward_hidden(&shapes, y);
        let (s, d) = self.backward(&shapes, &fw);

        // Adjoint of the backward pass, walking it in forward order.
        let mut s_bar = w.to_vec();
        let mut a_bar: Vec<Vec<f64>> = vec![Vec::new(); hidden + 1];
        for l in 1..=hidden {
            let sh = &shapes[l - 1];
            let d_bar = self.weight_mul(sh, &s_bar);
            let gw = &mut grad[sh.w..sh.b];
            for (i, di) in d[l].iter().enumerate() {
                if *di != 0.0 {
                    super::axpy(*di, &s_bar, &mut gw[i * sh.n_in..(i + 1) * sh.n_in]);
                }
            }
            let a = &fw.pre[l - 1];
            a_bar[l] = (0..sh.n_out)
                .map(|i| elu_second(a[i]) * s[l][i] * d_bar[i])
                .collect();
            s_bar = (0..sh.n_out).map(|i| elu_prime(a[i]) * d_bar[i]).collect();
        }
        let out = &shapes[hidden];
        for (g, sb) in grad[out.w..out.b].iter_mut().zip(&s_bar) {
            *g += sb;
        }

        // Adjoint of the forward pass.
        let mut h_bar = vec![0.0; shapes[hidden].n_in];
        for l in (1..=hidden).rev() {
            let sh = &shapes[l - 1];
            let a = &fw.pre[l - 1];
            let ab: Vec<f64> = (0..sh.n_out)
                .map(|i| a_bar[l][i] + elu_prime(a[i]) * h_bar[i])
                .collect();
            let h_prev = &fw.post[l - 1];
            let gw = &mut grad[sh.w..sh.b];
            for (i, ai) in ab.iter().enumerate() {
                if *ai != 0.0 {
                    super::axpy(*ai, h_prev, &mut gw[i * sh.n_in..(i + 1) * sh.n_in]);
                }
            }
            for (g, ai) in grad[sh.b..sh.b + sh.n_out].iter_mut().zip(&ab) {
                *g += ai;
            }
            let mut next = vec![0.0; sh.n_in];
            self.affine_transpose(sh, &ab, &mut next);
            h_bar = next;
        }
        if hidden == 0 {
            h_bar = vec![0.0; self.dim()];
        }
        Ok(h_bar)
    }
}
