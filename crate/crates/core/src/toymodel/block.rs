use super::layers::{FeedForwardCache, LayerNormCache};
use super::{FeedForward, LayerNorm};
use crate::attention::{msa_backward, msa_forward_cached, AttentionMask, MsaCache, MsaConfig, MsaWeights};
use crate::error::Result;
use crate::numerics::{Parameters, Rng, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBlock<T: Scalar = f32> {
    pub ln_attn: LayerNorm<T>,
    pub attn: MsaWeights<T>,
    pub ln_ff: LayerNorm<T>,
    pub ff: FeedForward<T>,
}

pub struct BlockCache<T: Scalar> {
    ln_attn: LayerNormCache<T>,
    pub(crate) msa: MsaCache<T>,
    ln_ff: LayerNormCache<T>,
    ff: FeedForwardCache<T>,
}

impl<T: Scalar> EncoderBlock<T> {
    pub fn zeros(cfg: &MsaConfig, d_ff: usize) -> Self {
        Self {
            ln_attn: LayerNorm::zeros(cfg.d_model),
            attn: MsaWeights::zeros(cfg),
            ln_ff: LayerNorm::zeros(cfg.d_model),
            ff: FeedForward::zeros(cfg.d_model, d_ff),
        }
    }

    pub fn init(cfg: &MsaConfig, d_ff: usize, rng: &mut Rng) -> Self {
        Self {
            ln_attn: LayerNorm::new(cfg.d_model),
            attn: MsaWeights::init(cfg, rng),
            ln_ff: LayerNorm::new(cfg.d_model),
            ff: FeedForward::init(cfg.d_model, d_ff, rng),
        }
    }

    pub fn forward(&self, x: &Tensor<T>, cfg: &MsaConfig, mask: &AttentionMask) -> Result<(Tensor<T>, BlockCache<T>)> {
        let (a, ln_attn) = self.ln_attn.forward(x);
        let (m, msa) = msa_forward_cached(&a, cfg, &self.attn, mask)?;
        let h = x.add(&m)?;
        let (c, ln_ff) = self.ln_ff.forward(&h);
        let (f, ff) = self.ff.forward(&c)?;
        let y = h.add(&f)?;
        Ok((y, BlockCache { ln_attn, msa, ln_ff, ff }))
    }

    /// Returns `dx`, accumulating parameter gradients into `grad`.
    pub fn backward(&self, cache: &BlockCache<T>, dy: &Tensor<T>, cfg: &MsaConfig, grad: &mut Self) -> Result<Tensor<T>> {
        let dc = self.ff.backward(&cache.ff, dy, &mut grad.ff)?;
        let mut dh = self.ln_ff.backward(&cache.ln_ff, &dc, &mut grad.ln_ff);
        dh.add_assign(dy)?;
        let (da, g) = msa_backward(&dh, &cache.msa, cfg, &self.attn)?;
        for (acc, part) in grad.attn.params_mut().into_iter().zip(g.params()) {
            acc.add_assign(part)?;
        }
        let mut dx = self.ln_attn.backward(&cache.ln_attn, &da, &mut grad.ln_attn);
        dx.add_assign(&dh)?;
        Ok(dx)
    }
}

impl<T: Scalar> Parameters<T> for EncoderBlock<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = self.ln_attn.params();
        v.extend(self.attn.params());
        v.extend(self.ln_ff.params());
        v.extend(self.ff.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.ln_attn.params_mut();
        v.extend(self.attn.params_mut());
        v.extend(self.ln_ff.params_mut());
        v.extend(self.ff.params_mut());
        v
    }
}
