//! Variable-resolution latent GAN.
//!
//! The generator takes a latent vector plus a requested output size and
//! reaches that size through five runtime-sized bilinear resize stages.
//! The discriminator ends in global average pooling, so it accepts any
//! input size. Around the two networks sit an aspect-preserving data
//! pipeline (capping, resolution grouping, round-robin batching), resize
//! distortion metrics (MSE, PSNR, SSIM, diff maps) and the inception score.
//!
//! All layers carry explicit forward/backward passes; there is no
//! computation graph.

pub mod data;
pub mod error;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod resize;
pub mod schedule;
pub mod tensor;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use resize::{ResizeMode, ResizeSpec};
pub use schedule::SizeSchedule;
pub use tensor::{Scalar, Tensor};
