use crate::rng::Rng;
use crate::tensor::Tensor;

/// Stride-1, "same"-padded 2-D convolution (cross-correlation, no kernel flip).
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `[Cout, Cin, k, k]`
    pub weight: Tensor,
    /// `[Cout]`
    pub bias: Tensor,
}

impl Conv2d {
    /// Glorot-uniform weights from `rng`, zero bias. `kernel` must be odd.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut Rng) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel, got {kernel}");
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        let weight = glorot(&[out_channels, in_channels, kernel, kernel], fan_in, fan_out, rng);
        Self {
            weight,
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Self {
        Self { weight, bias }
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }
}

/// Fully connected layer. Inputs `[N, ...]` are flattened to `[N, in_features]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out_features, in_features]`
    pub weight: Tensor,
    /// `[out_features]`
    pub bias: Tensor,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, rng: &mut Rng) -> Self {
        Self {
            weight: glorot(&[out_features, in_features], in_features, out_features, rng),
            bias: Tensor::zeros(&[out_features]),
        }
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Self {
        Self { weight, bias }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    Relu,
    Dense(Dense),
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::Relu => "relu",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn params(&self) -> Option<(&Tensor, &Tensor)> {
        match self {
            Layer::Conv2d(c) => Some((&c.weight, &c.bias)),
            Layer::Dense(d) => Some((&d.weight, &d.bias)),
            Layer::Relu => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Tensor, &mut Tensor)> {
        match self {
            Layer::Conv2d(c) => Some((&mut c.weight, &mut c.bias)),
            Layer::Dense(d) => Some((&mut d.weight, &mut d.bias)),
            Layer::Relu => None,
        }
    }
}

fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.uniform_range(-limit, limit))
}
