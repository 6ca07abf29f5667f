use super::block::BlockCache;
use super::layers::LayerNormCache;
use super::masking::reconstruction_loss;
use super::{EncoderBlock, EncoderConfig, LayerNorm, Linear};
use crate::attention::{AttentionMask, AttentionRecord};
use crate::error::{Error, Result};
use crate::numerics::{Parameters, Rng, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<T: Scalar = f32> {
    pub cfg: EncoderConfig,
    /// Substituted for masked input frames.
    pub mask_embedding: Tensor<T>,
    pub blocks: Vec<EncoderBlock<T>>,
    pub ln_out: LayerNorm<T>,
    pub head: Linear<T>,
}

pub struct EncoderCache<T: Scalar> {
    masked: Vec<usize>,
    blocks: Vec<BlockCache<T>>,
    ln_out: LayerNormCache<T>,
    z: Tensor<T>,
}

impl<T: Scalar> EncoderCache<T> {
    /// Attention records of the cached forward pass, in block order.
    pub fn records(&self) -> Result<Vec<AttentionRecord<T>>> {
        self.blocks.iter().enumerate().map(|(i, b)| b.msa.record(i + 1)).collect()
    }
}

/// Seeded construction: linear weights uniform in `±1/√fan_in`, zero
/// biases, unit layer-norm gains, mask embedding uniform in `±1/√d_model`.
pub fn build_encoder<T: Scalar>(cfg: &EncoderConfig, rng: &mut Rng) -> Result<Encoder<T>> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if cfg.masks.is_empty() {
        cfg.masks = vec![crate::attention::MaskKind::Global; cfg.n_blocks];
    }
    let msa = cfg.msa();
    let bound = 1.0 / (cfg.d_model as f64).sqrt();
    let mask_embedding = rng.uniform_tensor(&[cfg.d_model], -bound, bound);
    let blocks = (0..cfg.n_blocks).map(|_| EncoderBlock::init(&msa, cfg.d_ff, rng)).collect();
    let head = Linear::init(cfg.d_model, cfg.d_model, rng);
    Ok(Encoder {
        mask_embedding,
        blocks,
        ln_out: LayerNorm::new(cfg.d_model),
        head,
        cfg,
    })
}

/// Fixed sinusoidal positions: `sin(p/10000^(2i/d))`, `cos(…)` interleaved.
pub(crate) fn positional_encoding<T: Scalar>(len: usize, d: usize) -> Tensor<T> {
    let mut pe = Tensor::zeros(&[len, d]);
    for p in 0..len {
        for c in 0..d {
            let i = (c / 2) as f64;
            let angle = p as f64 / 10000f64.powf(2.0 * i / d as f64);
            *pe.at_mut(p, c) = T::lit(if c % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    pe
}

impl<T: Scalar> Encoder<T> {
    /// Gradient container with this model's layout.
    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        g.zero_grad();
        g
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.shape().len() != 2 || x.cols() != self.cfg.d_model {
            return Err(Error::dim("encoder input", x.shape(), &[self.cfg.max_len, self.cfg.d_model]));
        }
        if x.rows() == 0 {
            return Err(Error::EmptySequence);
        }
        if x.rows() > self.cfg.max_len {
            return Err(Error::Validation(format!(
                "sequence length {} exceeds max_len {}",
                x.rows(),
                self.cfg.max_len
            )));
        }
        Ok(())
    }

    /// Forward pass with the frames in `masked` replaced by the mask embedding.
    pub fn forward(&self, x: &Tensor<T>, masked: &[usize]) -> Result<(Tensor<T>, EncoderCache<T>)> {
        self.check_input(x)?;
        let len = x.rows();
        let mut h = x.clone();
        for &i in masked {
            if i >= len {
                return Err(Error::Validation(format!("masked index {i} outside sequence of length {len}")));
            }
            h.row_mut(i).copy_from_slice(self.mask_embedding.data());
        }
        h.add_assign(&positional_encoding(len, self.cfg.d_model))?;
        let msa = self.cfg.msa();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for (b, block) in self.blocks.iter().enumerate() {
            let mask = AttentionMask::new(self.cfg.mask(b), len)?;
            let (y, c) = block.forward(&h, &msa, &mask)?;
            caches.push(c);
            h = y;
        }
        let (z, ln_out) = self.ln_out.forward(&h);
        let pred = self.head.forward(&z)?;
        Ok((
            pred,
            EncoderCache {
                masked: masked.to_vec(),
                blocks: caches,
                ln_out,
                z,
            },
        ))
    }

    /// Parameter gradients for upstream `dpred`.
    pub fn backward(&self, cache: &EncoderCache<T>, dpred: &Tensor<T>) -> Result<Self> {
        let mut grad = self.zeros_like();
        let dz = self.head.backward(&cache.z, dpred, &mut grad.head)?;
        let mut dh = self.ln_out.backward(&cache.ln_out, &dz, &mut grad.ln_out);
        let msa = self.cfg.msa();
        for (b, block) in self.blocks.iter().enumerate().rev() {
            dh = block.backward(&cache.blocks[b], &dh, &msa, &mut grad.blocks[b])?;
        }
        // positional encoding is constant; unmasked inputs are not parameters
        for &i in &cache.masked {
            for (g, &d) in grad.mask_embedding.data_mut().iter_mut().zip(dh.row(i)) {
                *g += d;
            }
        }
        Ok(grad)
    }

    /// Masked-reconstruction loss on `x` and its parameter gradient.
    pub fn loss_and_grad(&self, x: &Tensor<T>, masked: &[usize]) -> Result<(T, Self)> {
        let (pred, cache) = self.forward(x, masked)?;
        let (loss, dpred) = reconstruction_loss(&pred, x, masked)?;
        let grad = self.backward(&cache, &dpred)?;
        Ok((loss, grad))
    }

    pub fn loss(&self, x: &Tensor<T>, masked: &[usize]) -> Result<T> {
        let (pred, _) = self.forward(x, masked)?;
        Ok(reconstruction_loss(&pred, x, masked)?.0)
    }
}

impl<T: Scalar> Parameters<T> for Encoder<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = vec![&self.mask_embedding];
        for b in &self.blocks {
            v.extend(b.params());
        }
        v.extend(self.ln_out.params());
        v.extend(self.head.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = vec![&mut self.mask_embedding];
        for b in &mut self.blocks {
            v.extend(b.params_mut());
        }
        v.extend(self.ln_out.params_mut());
        v.extend(self.head.params_mut());
        v
    }
}

/// Per-block attention (blocks 1..N) from an unmasked forward pass over `x`.
pub fn extract_attention<T: Scalar>(model: &Encoder<T>, x: &Tensor<T>) -> Result<Vec<AttentionRecord<T>>> {
    let (_, cache) = model.forward(x, &[])?;
    cache.records()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::MaskKind;
    use crate::numerics::{finite_diff_grad, relative_error};

    #[test]
    fn output_shape() {
        let cfg = EncoderConfig::new(4, 32, 4, 64, 128);
        let model: Encoder<f32> = build_encoder(&cfg, &mut Rng::seed_from(1)).unwrap();
        let x = Rng::seed_from(2).uniform_tensor(&[64, 32], -1.0, 1.0);
        let (y, _) = model.forward(&x, &[]).unwrap();
        assert_eq!(y.shape(), &[64, 32]);
        assert_eq!(extract_attention(&model, &x).unwrap().len(), 4);
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let cfg = EncoderConfig::new(2, 8, 2, 16, 16);
        let a: Encoder<f32> = build_encoder(&cfg, &mut Rng::seed_from(5)).unwrap();
        let b: Encoder<f32> = build_encoder(&cfg, &mut Rng::seed_from(5)).unwrap();
        for (p, q) in a.params().iter().zip(b.params()) {
            let pb: Vec<u32> = p.data().iter().map(|v| v.to_bits()).collect();
            let qb: Vec<u32> = q.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(pb, qb);
        }
    }

    #[test]
    fn diagonal_only_attention_keeps_rows_independent() {
        let cfg = EncoderConfig::new(3, 8, 2, 16, 32).with_masks(vec![MaskKind::Band(0); 3]);
        let model: Encoder<f64> = build_encoder(&cfg, &mut Rng::seed_from(3)).unwrap();
        let mut rng = Rng::seed_from(4);
        let x: Tensor<f64> = rng.uniform_tensor(&[10, 8], -1.0, 1.0);
        let (base, _) = model.forward(&x, &[]).unwrap();
        for j in [0, 4, 9] {
            let mut xp = x.clone();
            xp.row_mut(j).iter_mut().for_each(|v| *v += 0.5);
            let (y, _) = model.forward(&xp, &[]).unwrap();
            for q in 0..10 {
                let changed = y.row(q).iter().zip(base.row(q)).any(|(a, b)| a != b);
                assert_eq!(changed, q == j, "perturbed {j}, row {q}");
            }
        }
    }

    #[test]
    fn overlength_input_rejected() {
        let cfg = EncoderConfig::new(1, 8, 2, 16, 8);
        let model: Encoder<f32> = build_encoder(&cfg, &mut Rng::seed_from(1)).unwrap();
        assert!(extract_attention(&model, &Tensor::zeros(&[9, 8])).is_err());
    }

    #[test]
    fn end_to_end_gradient() {
        let cfg = EncoderConfig::new(2, 8, 2, 12, 16).with_masks(vec![MaskKind::Global, MaskKind::Band(2)]);
        let model: Encoder<f64> = build_encoder(&cfg, &mut Rng::seed_from(13)).unwrap();
        let x: Tensor<f64> = Rng::seed_from(14).uniform_tensor(&[8, 8], -1.0, 1.0);
        let masked = [2, 3, 6];
        let (_, grad) = model.loss_and_grad(&x, &masked).unwrap();
        for i in 0..model.params().len() {
            let p = model.params()[i].clone();
            let num = finite_diff_grad(
                |t| {
                    let mut m = model.clone();
                    *m.params_mut()[i] = t.clone();
                    m.loss(&x, &masked)
                },
                &p,
                1e-5,
            )
            .unwrap();
            let err = relative_error(grad.params()[i], &num);
            assert!(err <= 1e-6, "param tensor {i}: {err}");
        }
    }
}
