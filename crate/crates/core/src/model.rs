//! The two autoencoder architectures as ordered layer sequences, plus
//! whole-model forward/backward and parameter accounting.

use crate::error::{Error, Result};
use crate::layers::{ActKind, Activation, Conv2D, Dense, Flatten, Layer, MaxPool2D, ParamSlot, Reshape, TConv2D};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_SHAPE: [usize; 3] = [IMAGE_SIDE, IMAGE_SIDE, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Dense,
    Conv,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Dense => "dense",
            Arch::Conv => "conv",
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Arch::Dense),
            "conv" => Ok(Arch::Conv),
            other => Err(Error::Argument(format!(
                "unknown model {other:?}, expected \"dense\" or \"conv\""
            ))),
        }
    }
}

/// An ordered layer sequence with a fixed per-sample input shape.
///
/// The encoder/decoder boundary is recorded so the latent code can be
/// inspected separately.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    layers: Vec<Layer<T>>,
    input_shape: Vec<usize>,
    arch: Option<Arch>,
    latent_layer: Option<usize>,
}

/// Flatten → Dense(784→64) → ReLU → Dense(64→784) → Sigmoid → Reshape.
pub fn build_dense_autoencoder<T: Scalar>(rng: &mut Rng) -> Model<T> {
    let pixels = IMAGE_SIDE * IMAGE_SIDE;
    let layers = vec![
        Layer::Flatten(Flatten::new()),
        Layer::Dense(Dense::new(pixels, 64, rng)),
        Layer::Activation(Activation::new(ActKind::Relu)),
        Layer::Dense(Dense::new(64, pixels, rng)),
        Layer::Activation(Activation::new(ActKind::Sigmoid)),
        Layer::Reshape(Reshape::new(&IMAGE_SHAPE)),
    ];
    Model {
        layers,
        input_shape: IMAGE_SHAPE.to_vec(),
        arch: Some(Arch::Dense),
        latent_layer: Some(2),
    }
}

/// Two conv+pool stages down to a 7×7×32 latent, two stride-2 transposed
/// convolutions back up, and a sigmoid-activated 1-channel projection.
pub fn build_conv_autoencoder<T: Scalar>(rng: &mut Rng) -> Model<T> {
    let layers = vec![
        Layer::Conv2D(Conv2D::new(1, 32, 3, 1, rng)),
        Layer::Activation(Activation::new(ActKind::Relu)),
        Layer::MaxPool2D(MaxPool2D::new()),
        Layer::Conv2D(Conv2D::new(32, 32, 3, 1, rng)),
        Layer::Activation(Activation::new(ActKind::Relu)),
        Layer::MaxPool2D(MaxPool2D::new()),
        Layer::TConv2D(TConv2D::new(32, 32, 3, 2, rng)),
        Layer::Activation(Activation::new(ActKind::Relu)),
        Layer::TConv2D(TConv2D::new(32, 32, 3, 2, rng)),
        Layer::Activation(Activation::new(ActKind::Relu)),
        Layer::Conv2D(Conv2D::new(32, 1, 3, 1, rng)),
        Layer::Activation(Activation::new(ActKind::Sigmoid)),
    ];
    Model {
        layers,
        input_shape: IMAGE_SHAPE.to_vec(),
        arch: Some(Arch::Conv),
        latent_layer: Some(5),
    }
}

pub fn build<T: Scalar>(arch: Arch, rng: &mut Rng) -> Model<T> {
    match arch {
        Arch::Dense => build_dense_autoencoder(rng),
        Arch::Conv => build_conv_autoencoder(rng),
    }
}

/// Row describing one layer in a model summary.
#[derive(Debug, Clone)]
pub struct LayerSummary {
    pub index: usize,
    pub describe: String,
    pub output_shape: Vec<usize>,
    pub param_count: usize,
}

impl<T: Scalar> Model<T> {
    /// Assembles an ad-hoc layer stack, validating that adjacent shapes are
    /// compatible for the given per-sample input shape.
    pub fn from_layers(layers: Vec<Layer<T>>, input_shape: &[usize]) -> Result<Self> {
        let model = Model {
            layers,
            input_shape: input_shape.to_vec(),
            arch: None,
            latent_layer: None,
        };
        model.summary()?; // threads shapes through every layer
        Ok(model)
    }

    pub fn arch(&self) -> Option<Arch> {
        self.arch
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn latent_layer(&self) -> Option<usize> {
        self.latent_layer
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All (value, grad) parameter pairs in a stable order: layer by layer,
    /// weights before biases.
    pub fn param_slots(&mut self) -> Vec<ParamSlot<'_, T>> {
        self.layers.iter_mut().flat_map(Layer::param_slots).collect()
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers
            .iter_mut()
            .flat_map(Layer::param_tensors_mut)
            .collect()
    }

    /// Per-layer descriptions with statically computed output shapes.
    pub fn summary(&self) -> Result<Vec<LayerSummary>> {
        let mut shape = self.input_shape.clone();
        let mut rows = Vec::with_capacity(self.layers.len());
        for (index, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|e| Error::at_layer(index, layer.kind_name(), e))?;
            rows.push(LayerSummary {
                index,
                describe: layer.describe(),
                output_shape: shape.clone(),
                param_count: layer.param_count(),
            });
        }
        Ok(rows)
    }

    /// Shape of the latent code produced by the encoder half.
    pub fn latent_shape(&self) -> Result<Vec<usize>> {
        let boundary = self
            .latent_layer
            .ok_or_else(|| Error::State("model has no recorded latent boundary".into()))?;
        Ok(self.summary()?[boundary].output_shape.clone())
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.shape().len() != self.input_shape.len() + 1
            || x.shape()[1..] != self.input_shape[..]
        {
            return Err(Error::shape("model forward", x.shape(), &self.input_shape));
        }
        Ok(())
    }

    /// Threads a batch through every layer in order.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut current = x.clone();
        for (index, layer) in self.layers.iter_mut().enumerate() {
            current = layer
                .forward(&current)
                .map_err(|e| Error::at_layer(index, layer.kind_name(), e))?;
        }
        Ok(current)
    }

    /// Threads the loss gradient backwards, populating every layer's
    /// parameter gradients; returns the gradient with respect to the input.
    pub fn backward(&mut self, loss_grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut current = loss_grad.clone();
        for (index, layer) in self.layers.iter_mut().enumerate().rev() {
            current = layer
                .backward(&current)
                .map_err(|e| Error::at_layer(index, layer.kind_name(), e))?;
        }
        Ok(current)
    }

    /// Runs only the encoder half, returning the latent code.
    pub fn encode(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let boundary = self
            .latent_layer
            .ok_or_else(|| Error::State("model has no recorded latent boundary".into()))?;
        self.check_input(x)?;
        let mut current = x.clone();
        for (index, layer) in self.layers.iter_mut().enumerate().take(boundary + 1) {
            current = layer
                .forward(&current)
                .map_err(|e| Error::at_layer(index, layer.kind_name(), e))?;
        }
        Ok(current)
    }
}
