//! A self-contained CPU deep-learning engine for denoising MNIST digits.
//!
//! Two autoencoder architectures are provided — a fully-connected one and a
//! convolutional one — with hand-written forward and backward passes, an Adam
//! optimizer, Gaussian-noise corruption of the inputs, and a training loop.
//! Everything is deterministic given a seed.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod pgm;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Scalar, Tensor};
