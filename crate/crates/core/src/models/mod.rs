//! The variable-size generator, the GAP discriminator and a small GAP
//! classifier used as a probability source for the inception score.

mod classifier;
mod discriminator;
mod generator;
mod resblock;

pub use classifier::{Classifier, ClassifierCache};
pub use discriminator::{Discriminator, DiscriminatorCache, DiscriminatorConfig};
pub use generator::{Generator, GeneratorCache, GeneratorConfig, TRAINING_MAX_SIZE};
pub use resblock::{ResBlock, ResBlockCache};
