//! Symplectic autoencoder plus latent flow map.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numcore::{all_finite, RngStream};
use crate::symplectic::{
    CompositeEmbedding, DiffMap, GReflectorStack, HenonNet, Inclusion, InvertibleMap, NetTrace,
    Parameterized,
};

/// Architecture of a reduced model; the full dimension `n` comes from data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Latent half-dimension `k`.
    pub latent_dim: usize,
    /// Hénon layers of the full-space net; 0 disables it.
    pub henon_layers: usize,
    /// Hidden widths of each full-space potential.
    pub henon_hidden: Vec<usize>,
    /// Number of G-reflectors; 0 disables them.
    pub reflectors: usize,
    pub flow_layers: usize,
    pub flow_hidden: Vec<usize>,
}

impl ModelConfig {
    pub fn variant(&self) -> &'static str {
        match (self.henon_layers > 0, self.reflectors > 0) {
            (true, true) => "henon+greflector",
            (true, false) => "henon-only",
            (false, true) => "greflector-only",
            (false, false) => "inclusion-only",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.latent_dim == 0 || self.latent_dim > n {
            return bad(format!("latent_dim must be in 1..={n}, got {}", self.latent_dim));
        }
        if self.flow_layers == 0 {
            return bad("flow_layers must be at least 1".into());
        }
        if self.henon_hidden.contains(&0) || self.flow_hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }
}

/// `f_enc = τ ∘ G ∘ H`, `f_dec = H⁻¹ ∘ G⁻¹ ∘ ι`, latent flow a Hénon net.
///
/// Parameters are laid out `[reflectors, henon, flow]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RomModel {
    pub embedding: CompositeEmbedding,
    pub flow: HenonNet,
}

/// Rollout recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Iterate the flow in latent space and decode each state.
    Latent,
    /// Decode and re-encode every step, as during training.
    Full,
}

#[derive(Debug, Clone)]
pub struct EncodeTrace {
    henon: Option<NetTrace>,
    reflectors: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct DecodeTrace {
    reflectors: Option<Vec<Vec<f64>>>,
    henon: Option<NetTrace>,
}

impl RomModel {
    pub fn new(embedding: CompositeEmbedding, flow: HenonNet) -> Result<Self> {
        check_dim("RomModel flow", embedding.k(), flow.half_dim())?;
        Ok(Self { embedding, flow })
    }

    /// Identity-initialized model: `f_enc = τ`, `f_dec = ι`, flow = id.
    pub fn init(n: usize, config: &ModelConfig, rng: &mut RngStream) -> Result<Self> {
        config.validate(n)?;
        let k = config.latent_dim;
        let reflectors = (config.reflectors > 0)
            .then(|| GReflectorStack::init(2 * n, config.reflectors, rng))
            .transpose()?;
        let henon = (config.henon_layers > 0)
            .then(|| HenonNet::init(n, config.henon_layers, &config.henon_hidden, rng))
            .transpose()?;
        let flow = HenonNet::init(k, config.flow_layers, &config.flow_hidden, rng)?;
        let embedding = CompositeEmbedding::new(Inclusion::new(n, k)?, reflectors, henon)?;
        Self::new(embedding, flow)
    }

    /// Model with every parameter drawn at random, used by structural tests.
    pub fn random(n: usize, config: &ModelConfig, rng: &mut RngStream) -> Result<Self> {
        config.validate(n)?;
        let k = config.latent_dim;
        let reflectors = (config.reflectors > 0)
            .then(|| GReflectorStack::random(2 * n, config.reflectors, rng, 1.0))
            .transpose()?;
        let henon = (config.henon_layers > 0)
            .then(|| HenonNet::random(n, config.henon_layers, &config.henon_hidden, rng))
            .transpose()?;
        let flow = HenonNet::random(k, config.flow_layers, &config.flow_hidden, rng)?;
        let embedding = CompositeEmbedding::new(Inclusion::new(n, k)?, reflectors, henon)?;
        Self::new(embedding, flow)
    }

    pub fn n(&self) -> usize {
        self.embedding.n()
    }

    pub fn k(&self) -> usize {
        self.embedding.k()
    }

    fn embedding_len(&self) -> usize {
        self.embedding.param_count()
    }

    fn reflector_len(&self) -> usize {
        self.embedding.reflectors.as_ref().map_or(0, |g| g.param_count())
    }

    /// Splits a gradient buffer into `(reflectors, henon, flow)`.
    fn split_grad<'g>(&self, grad: &'g mut [f64]) -> Result<(&'g mut [f64], &'g mut [f64], &'g mut [f64])> {
        check_dim("RomModel grad", self.param_count(), grad.len())?;
        let (emb, flow) = grad.split_at_mut(self.embedding_len());
        let (g, h) = emb.split_at_mut(self.reflector_len());
        Ok((g, h, flow))
    }

    pub fn encode_traced(&self, x: &[f64]) -> Result<(Vec<f64>, EncodeTrace)> {
        check_dim("encode", 2 * self.n(), x.len())?;
        let mut z = x.to_vec();
        let mut trace = EncodeTrace {
            henon: None,
            reflectors: None,
        };
        if let Some(h) = &self.embedding.henon {
            let (out, t) = h.apply_traced(&z)?;
            trace.henon = Some(t);
            z = out;
        }
        if let Some(g) = &self.embedding.reflectors {
            let (out, t) = g.apply_traced(&z)?;
            trace.reflectors = Some(t);
            z = out;
        }
        Ok((self.embedding.inclusion.truncate(&z)?, trace))
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode_traced(x)?.0)
    }

    pub fn decode_traced(&self, y: &[f64]) -> Result<(Vec<f64>, DecodeTrace)> {
        let mut z = self.embedding.inclusion.include(y)?;
        let mut trace = DecodeTrace {
            reflectors: None,
            henon: None,
        };
        if let Some(g) = &self.embedding.reflectors {
            let (out, t) = g.inverse_traced(&z)?;
            trace.reflectors = Some(t);
            z = out;
        }
        if let Some(h) = &self.embedding.henon {
            let (out, t) = h.inverse_traced(&z)?;
            trace.henon = Some(t);
            z = out;
        }
        Ok((z, trace))
    }

    pub fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decode_traced(y)?.0)
    }

    pub fn flow_step(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.flow.apply(y)
    }

    pub fn flow_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.flow.inverse(y)
    }

    /// `x ↦ f_dec(f_enc(x))`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?)
    }

    /// Pullback of `f_enc`; returns the cotangent on `x`.
    pub fn encode_pullback(&self, trace: &EncodeTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let (gg, gh, _) = self.split_grad(grad)?;
        let mut c = self.embedding.inclusion.include(cot)?;
        if let (Some(g), Some(t)) = (&self.embedding.reflectors, &trace.reflectors) {
            c = g.pullback(t, &c, gg)?;
        }
        if let (Some(h), Some(t)) = (&self.embedding.henon, &trace.henon) {
            c = h.pullback(t, &c, gh)?;
        }
        Ok(c)
    }

    /// Pullback of `f_dec`; returns the cotangent on `y`.
    pub fn decode_pullback(&self, trace: &DecodeTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let (gg, gh, _) = self.split_grad(grad)?;
        let mut c = cot.to_vec();
        if let (Some(h), Some(t)) = (&self.embedding.henon, &trace.henon) {
            c = h.inverse_pullback(t, &c, gh)?;
        }
        if let (Some(g), Some(t)) = (&self.embedding.reflectors, &trace.reflectors) {
            c = g.inverse_pullback(t, &c, gg)?;
        }
        self.embedding.inclusion.truncate(&c)
    }

    pub fn flow_traced(&self, y: &[f64]) -> Result<(Vec<f64>, NetTrace)> {
        self.flow.apply_traced(y)
    }

    pub fn flow_pullback(&self, trace: &NetTrace, cot: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        let (_, _, gf) = self.split_grad(grad)?;
        self.flow.pullback(trace, cot, gf)
    }

    /// `steps + 1` full states starting with `x0` itself.
    pub fn rollout(&self, x0: &[f64], steps: usize, space: Space) -> Result<Vec<Vec<f64>>> {
        if steps == 0 {
            return Err(Error::InvalidArgument("rollout needs at least one step".into()));
        }
        let mut out = Vec::with_capacity(steps + 1);
        out.push(x0.to_vec());
        match space {
            Space::Latent => {
                let mut y = self.encode(x0)?;
                for s in 1..=steps {
                    y = self.flow_step(&y)?;
                    let x = self.decode(&y)?;
                    if !all_finite(&x) {
                        return Err(Error::NonFinite(format!("rollout state at step {s}")));
                    }
                    out.push(x);
                }
            }
            Space::Full => {
                let mut x = x0.to_vec();
                for s in 1..=steps {
                    x = self.decode(&self.flow_step(&self.encode(&x)?)?)?;
                    if !all_finite(&x) {
                        return Err(Error::NonFinite(format!("rollout state at step {s}")));
                    }
                    out.push(x.clone());
                }
            }
        }
        Ok(out)
    }
}

impl Parameterized for RomModel {
    fn param_count(&self) -> usize {
        self.embedding.param_count() + self.flow.param_count()
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.embedding.params();
        p.extend(self.flow.params());
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("RomModel::set_params", self.param_count(), params.len())?;
        let (e, f) = params.split_at(self.embedding_len());
        self.embedding.set_params(e)?;
        self.flow.set_params(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: usize) -> ModelConfig {
        ModelConfig {
            latent_dim: k,
            henon_layers: 1,
            henon_hidden: vec![4],
            reflectors: 2,
            flow_layers: 1,
            flow_hidden: vec![4],
        }
    }

    #[test]
    fn test_identity_model_truncates() {
        let mut rng = RngStream::new(0);
        let m = RomModel::init(2, &config(1), &mut rng).unwrap();
        assert_eq!(m.encode(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 3.0]);
        assert_eq!(m.decode(&[1.0, 3.0]).unwrap(), vec![1.0, 0.0, 3.0, 0.0]);
        assert_eq!(m.flow_step(&[0.5, -0.5]).unwrap(), vec![0.5, -0.5]);
        let full = RomModel::init(2, &config(2), &mut rng).unwrap();
        assert_eq!(full.encode(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn test_rollout_rejects_zero_steps() {
        let mut rng = RngStream::new(0);
        let m = RomModel::init(2, &config(1), &mut rng).unwrap();
        assert!(m.rollout(&[0.0; 4], 0, Space::Latent).is_err());
        let r = m.rollout(&[1.0, 0.0, 2.0, 0.0], 3, Space::Full).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|x| x == &vec![1.0, 0.0, 2.0, 0.0]));
    }

    #[test]
    fn test_variants() {
        let mut c = config(1);
        assert_eq!(c.variant(), "henon+greflector");
        c.reflectors = 0;
        assert_eq!(c.variant(), "henon-only");
        c.henon_layers = 0;
        c.reflectors = 3;
        assert_eq!(c.variant(), "greflector-only");
        assert!(ModelConfig { latent_dim: 5, ..config(1) }.validate(2).is_err());
    }
}
