use serde::{Deserialize, Serialize};

use super::{attend, attention_backward, scaled_dot_attention, AttentionMap, AttentionMask, AttentionRecord};
use crate::error::{Error, Result};
use crate::numerics::{linear_backward, linear_forward, Parameters, Rng, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsaConfig {
    pub d_model: usize,
    pub n_heads: usize,
}

impl MsaConfig {
    pub fn new(d_model: usize, n_heads: usize) -> Result<Self> {
        let cfg = Self { d_model, n_heads };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_heads == 0 || self.d_model == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Validation(format!(
                "d_model ({}) must be a positive multiple of n_heads ({})",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    /// Per-head key width.
    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Projections for one head: `d_model × d_k` matrices and `d_k` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights<T: Scalar = f32> {
    pub wq: Tensor<T>,
    pub bq: Tensor<T>,
    pub wk: Tensor<T>,
    pub bk: Tensor<T>,
    pub wv: Tensor<T>,
    pub bv: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsaWeights<T: Scalar = f32> {
    pub heads: Vec<HeadWeights<T>>,
    /// Output projection over the concatenated heads, `d_model × d_model`.
    pub wo: Tensor<T>,
    pub bo: Tensor<T>,
}

/// Gradients share the weight layout.
pub type MsaGrads<T> = MsaWeights<T>;

impl<T: Scalar> MsaWeights<T> {
    pub fn zeros(cfg: &MsaConfig) -> Self {
        let (d, dk) = (cfg.d_model, cfg.d_k());
        let head = HeadWeights {
            wq: Tensor::zeros(&[d, dk]),
            bq: Tensor::zeros(&[dk]),
            wk: Tensor::zeros(&[d, dk]),
            bk: Tensor::zeros(&[dk]),
            wv: Tensor::zeros(&[d, dk]),
            bv: Tensor::zeros(&[dk]),
        };
        Self {
            heads: vec![head; cfg.n_heads],
            wo: Tensor::zeros(&[d, d]),
            bo: Tensor::zeros(&[d]),
        }
    }

    /// Uniform in `±1/√fan_in`, zero biases.
    pub fn init(cfg: &MsaConfig, rng: &mut Rng) -> Self {
        let mut w = Self::zeros(cfg);
        let bound = 1.0 / (cfg.d_model as f64).sqrt();
        for h in &mut w.heads {
            h.wq = rng.uniform_tensor(h.wq.shape(), -bound, bound);
            h.wk = rng.uniform_tensor(h.wk.shape(), -bound, bound);
            h.wv = rng.uniform_tensor(h.wv.shape(), -bound, bound);
        }
        w.wo = rng.uniform_tensor(w.wo.shape(), -bound, bound);
        w
    }

    pub fn check(&self, cfg: &MsaConfig) -> Result<()> {
        let (d, dk) = (cfg.d_model, cfg.d_k());
        if self.heads.len() != cfg.n_heads || self.wo.shape() != [d, d] || self.bo.shape() != [d] {
            return Err(Error::Validation("MSA weights do not match config".into()));
        }
        for h in &self.heads {
            for (m, b) in [(&h.wq, &h.bq), (&h.wk, &h.bk), (&h.wv, &h.bv)] {
                if m.shape() != [d, dk] || b.shape() != [dk] {
                    return Err(Error::dim("MSA head weights", m.shape(), &[d, dk]));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Parameters<T> for MsaWeights<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = Vec::with_capacity(self.heads.len() * 6 + 2);
        for h in &self.heads {
            v.extend([&h.wq, &h.bq, &h.wk, &h.bk, &h.wv, &h.bv]);
        }
        v.extend([&self.wo, &self.bo]);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = Vec::with_capacity(self.heads.len() * 6 + 2);
        for h in &mut self.heads {
            v.extend([&mut h.wq, &mut h.bq, &mut h.wk, &mut h.bk, &mut h.wv, &mut h.bv]);
        }
        v.extend([&mut self.wo, &mut self.bo]);
        v
    }
}

/// Forward state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MsaCache<T: Scalar> {
    x: Tensor<T>,
    q: Vec<Tensor<T>>,
    k: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    alpha: Vec<AttentionMap<T>>,
    concat: Tensor<T>,
}

impl<T: Scalar> MsaCache<T> {
    pub fn alphas(&self) -> &[AttentionMap<T>] {
        &self.alpha
    }

    pub fn record(&self, block_id: usize) -> Result<AttentionRecord<T>> {
        AttentionRecord::new(block_id, self.alpha.clone())
    }

    pub fn into_record(self, block_id: usize) -> Result<AttentionRecord<T>> {
        AttentionRecord::new(block_id, self.alpha)
    }
}

pub fn msa_forward<T: Scalar>(
    x: &Tensor<T>,
    cfg: &MsaConfig,
    w: &MsaWeights<T>,
    mask: &AttentionMask,
    block_id: usize,
) -> Result<(Tensor<T>, AttentionRecord<T>)> {
    let (y, cache) = msa_forward_cached(x, cfg, w, mask)?;
    Ok((y, cache.into_record(block_id)?))
}

pub fn msa_forward_cached<T: Scalar>(
    x: &Tensor<T>,
    cfg: &MsaConfig,
    w: &MsaWeights<T>,
    mask: &AttentionMask,
) -> Result<(Tensor<T>, MsaCache<T>)> {
    cfg.validate()?;
    w.check(cfg)?;
    if x.shape().len() != 2 || x.cols() != cfg.d_model {
        return Err(Error::dim("msa_forward", x.shape(), &[mask.len, cfg.d_model]));
    }
    let (len, dk) = (x.rows(), cfg.d_k());
    let mut concat = Tensor::zeros(&[len, cfg.d_model]);
    let mut cache = MsaCache {
        x: x.clone(),
        q: Vec::with_capacity(cfg.n_heads),
        k: Vec::with_capacity(cfg.n_heads),
        v: Vec::with_capacity(cfg.n_heads),
        alpha: Vec::with_capacity(cfg.n_heads),
        concat: Tensor::zeros(&[0, 0]),
    };
    for (i, h) in w.heads.iter().enumerate() {
        let q = linear_forward(x, &h.wq, &h.bq)?;
        let k = linear_forward(x, &h.wk, &h.bk)?;
        let v = linear_forward(x, &h.wv, &h.bv)?;
        let alpha = scaled_dot_attention(&q, &k, mask)?;
        let head = attend(&alpha, &v)?;
        for r in 0..len {
            concat.row_mut(r)[i * dk..(i + 1) * dk].copy_from_slice(head.row(r));
        }
        cache.q.push(q);
        cache.k.push(k);
        cache.v.push(v);
        cache.alpha.push(alpha);
    }
    let y = linear_forward(&concat, &w.wo, &w.bo)?;
    cache.concat = concat;
    Ok((y, cache))
}

/// Exact gradients of `msa_forward` for upstream `dy`. Returns `(dX, dW)`.
pub fn msa_backward<T: Scalar>(
    dy: &Tensor<T>,
    cache: &MsaCache<T>,
    cfg: &MsaConfig,
    w: &MsaWeights<T>,
) -> Result<(Tensor<T>, MsaGrads<T>)> {
    if dy.shape() != cache.x.shape() || cache.q.len() != cfg.n_heads {
        return Err(Error::Validation(format!(
            "msa_backward: upstream {:?} does not match cached forward {:?}",
            dy.shape(),
            cache.x.shape()
        )));
    }
    let (len, dk) = (dy.rows(), cfg.d_k());
    let mut grads = MsaWeights::zeros(cfg);
    let out = linear_backward(&cache.concat, &w.wo, dy)?;
    grads.wo = out.dw;
    grads.bo = out.dbias;
    let dconcat = out.dx;
    let mut dx = Tensor::zeros(cache.x.shape());
    for (i, h) in w.heads.iter().enumerate() {
        let mut dhead = Tensor::zeros(&[len, dk]);
        for r in 0..len {
            dhead.row_mut(r).copy_from_slice(&dconcat.row(r)[i * dk..(i + 1) * dk]);
        }
        let ag = attention_backward(&cache.q[i], &cache.k[i], &cache.v[i], &cache.alpha[i], &dhead)?;
        let g = &mut grads.heads[i];
        for (dproj, wm, dw, db) in [
            (&ag.dq, &h.wq, &mut g.wq, &mut g.bq),
            (&ag.dk, &h.wk, &mut g.wk, &mut g.bk),
            (&ag.dv, &h.wv, &mut g.wv, &mut g.bv),
        ] {
            let lg = linear_backward(&cache.x, wm, dproj)?;
            *dw = lg.dw;
            *db = lg.dbias;
            dx.add_assign(&lg.dx)?;
        }
    }
    Ok((dx, grads))
}

/// Straight-line evaluation of the head equations on dense matrices, used
/// as an oracle for the production path.
#[cfg(test)]
pub(crate) fn reference_msa(x: &Tensor<f64>, w: &MsaWeights<f64>, allowed: &dyn Fn(usize, usize) -> bool) -> Tensor<f64> {
    use crate::numerics::matmul;

    let len = x.rows();
    let mut heads = Vec::new();
    for h in &w.heads {
        let proj = |m: &Tensor<f64>, b: &Tensor<f64>| {
            let mut p = matmul(x, m).unwrap();
            for r in 0..len {
                for c in 0..p.cols() {
                    *p.at_mut(r, c) += b.data()[c];
                }
            }
            p
        };
        let (q, k, v) = (proj(&h.wq, &h.bq), proj(&h.wk, &h.bk), proj(&h.wv, &h.bv));
        let dk = q.cols() as f64;
        let scores = matmul(&q, &k.transpose()).unwrap();
        let mut alpha = Tensor::zeros(&[len, len]);
        for r in 0..len {
            let mut z = 0.0;
            for c in 0..len {
                if allowed(r, c) {
                    z += (scores.at(r, c) / dk.sqrt()).exp();
                }
            }
            for c in 0..len {
                if allowed(r, c) {
                    *alpha.at_mut(r, c) = (scores.at(r, c) / dk.sqrt()).exp() / z;
                }
            }
        }
        heads.push(matmul(&alpha, &v).unwrap());
    }
    let d = w.wo.rows();
    let mut cat = Tensor::zeros(&[len, d]);
    let mut col = 0;
    for h in &heads {
        for r in 0..len {
            for c in 0..h.cols() {
                *cat.at_mut(r, col + c) = h.at(r, c);
            }
        }
        col += h.cols();
    }
    let mut y = matmul(&cat, &w.wo).unwrap();
    for r in 0..len {
        for c in 0..d {
            *y.at_mut(r, c) += w.bo.data()[c];
        }
    }
    y
}
