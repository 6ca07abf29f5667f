use super::masking::span_indices;
use super::{Encoder, SyntheticCorpus, TrainConfig};
use crate::error::{Error, Result};
use crate::numerics::{Parameters, Rng, Scalar};

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    pub model: Encoder<T>,
    /// Mean batch loss per step.
    pub losses: Vec<f64>,
}

/// Plain minibatch SGD with a fixed learning rate. Batches and span masks
/// are drawn from streams of `cfg.seed`, so identical inputs reproduce the
/// loss curve bit for bit. A sequence that draws no span start gets one at
/// a uniformly random position.
pub fn train<T: Scalar>(mut model: Encoder<T>, corpus: &SyntheticCorpus<T>, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptySequence);
    }
    if corpus.width() != model.cfg.d_model {
        return Err(Error::Validation(format!(
            "corpus width {} does not match d_model {}",
            corpus.width(),
            model.cfg.d_model
        )));
    }
    let root = Rng::seed_from(cfg.seed);
    let mut batch_rng = root.split(1);
    let mut mask_rng = root.split(2);
    let lr = T::lit(cfg.learning_rate);
    let inv_batch = T::one() / T::lit(cfg.batch_size as f64);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut grad = model.zeros_like();
        let mut total = 0.0;
        for _ in 0..cfg.batch_size {
            let x = corpus.get(batch_rng.below(corpus.len()));
            let mut masked = span_indices(x.rows(), cfg.mask_prob, cfg.span_len, &mut mask_rng);
            if masked.is_empty() {
                masked.push(mask_rng.below(x.rows()));
            }
            let (loss, g) = model.loss_and_grad(x, &masked)?;
            total += loss.as_f64();
            for (acc, p) in grad.params_mut().into_iter().zip(g.params()) {
                acc.add_assign(p)?;
            }
        }
        let loss = total / cfg.batch_size as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        for (p, g) in model.params_mut().into_iter().zip(grad.params()) {
            p.axpy(-lr * inv_batch, g)?;
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, loss: f64::NAN });
        }
        losses.push(loss);
    }
    Ok(TrainOutcome { model, losses })
}

/// Window of the smoothed loss used to judge a run.
pub const SMOOTH_WINDOW: usize = 25;

/// First and last full-window averages of a loss curve, or `None` when the
/// curve is shorter than one window.
pub fn smoothed_endpoints(losses: &[f64], window: usize) -> Option<(f64, f64)> {
    let window = window.max(1);
    if losses.len() < window {
        return None;
    }
    let s = smoothed(losses, window);
    Some((s[window - 1], s[s.len() - 1]))
}

/// Trailing moving average over `window` steps (shorter at the start).
pub fn smoothed(losses: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(losses.len());
    let mut acc = 0.0;
    for (i, &l) in losses.iter().enumerate() {
        acc += l;
        if i >= window {
            acc -= losses[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}
