//! Desk-scale masked-reconstruction encoder.
//!
//! Pre-norm blocks (`x + MSA(LN(x))`, then `h + FFN(LN(h))`) with a GELU
//! feed-forward, fixed sinusoidal positions, a learned mask embedding and a
//! linear reconstruction head. Training is plain SGD on the mean squared
//! error over masked frames.

mod block;
mod config;
mod corpus;
mod encoder;
mod layers;
mod masking;
mod train;

pub use block::{BlockCache, EncoderBlock};
pub use config::{CorpusConfig, EncoderConfig, TrainConfig};
pub use corpus::SyntheticCorpus;
pub use encoder::{build_encoder, extract_attention, Encoder, EncoderCache};
pub use layers::{gelu, gelu_grad, FeedForward, LayerNorm, Linear};
pub use masking::{mask_spans, reconstruction_loss};
pub use train::{smoothed, smoothed_endpoints, train, TrainOutcome, SMOOTH_WINDOW};
