use super::layer::{Conv2d, Dense, Layer};
use super::ops::{self, ParamGrads};
use super::NnError;
use crate::rng::Rng;
use crate::tensor::{ShapeError, Tensor};

/// Skip connection: the output of `layers[from]` is added element-wise to the
/// input of `layers[to]`. Positions are 0-based and `from < to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Skip {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    skips: Vec<Skip>,
}

/// Activations retained by [`Network::forward_train`] for the backward pass.
#[derive(Debug)]
pub struct ForwardCache {
    /// Input seen by each layer, after skip additions.
    inputs: Vec<Tensor>,
    output_shape: Vec<usize>,
}

/// Per-layer parameter gradients; `None` for parameter-free layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<ParamGrads>>,
}

/// Multiply+add counts per layer. Skip additions are charged to the target layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlopLedger {
    pub per_layer: Vec<u64>,
}

impl FlopLedger {
    pub fn total(&self) -> u64 {
        self.per_layer.iter().sum()
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>, mut skips: Vec<Skip>) -> Result<Self, NnError> {
        for s in &skips {
            if s.from >= s.to || s.to >= layers.len() {
                return Err(NnError::BadArchitecture(format!(
                    "skip {}->{} invalid for {} layers",
                    s.from,
                    s.to,
                    layers.len()
                )));
            }
        }
        skips.sort();
        skips.dedup();
        Ok(Self { layers, skips })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn skips(&self) -> &[Skip] {
        &self.skips
    }

    /// Copy of this network without the given skip.
    pub fn without_skip(&self, skip: Skip) -> Self {
        Self {
            layers: self.layers.clone(),
            skips: self.skips.iter().copied().filter(|s| *s != skip).collect(),
        }
    }

    /// Skips expressed as 1-based convolution ordinals `(i, j)`: the block
    /// ending at conv `i` feeds the input of conv `j`.
    pub fn conv_skip_pairs(&self) -> Vec<(usize, usize)> {
        let ordinal = |pos: usize| {
            self.layers[..=pos]
                .iter()
                .filter(|l| matches!(l, Layer::Conv2d(_)))
                .count()
        };
        self.skips.iter().map(|s| (ordinal(s.from), ordinal(s.to))).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    fn skip_sources(&self) -> Vec<bool> {
        let mut keep = vec![false; self.layers.len()];
        for s in &self.skips {
            keep[s.from] = true;
        }
        keep
    }

    fn run(&self, x: &Tensor, mut cache: Option<&mut Vec<Tensor>>) -> Result<Tensor, NnError> {
        let keep = self.skip_sources();
        let mut saved: Vec<Option<Tensor>> = vec![None; self.layers.len()];
        let mut current = x.clone();
        for (pos, layer) in self.layers.iter().enumerate() {
            for s in self.skips.iter().filter(|s| s.to == pos) {
                let src = saved[s.from].as_ref().expect("skip source precedes target");
                current.add_assign(src).map_err(|e| skip_shape_error(*s, e))?;
            }
            let out = apply(layer, &current)?;
            if let Some(c) = cache.as_deref_mut() {
                c.push(std::mem::replace(&mut current, out));
            } else {
                current = out;
            }
            if keep[pos] {
                saved[pos] = Some(current.clone());
            }
        }
        Ok(current)
    }

    /// Inference pass over a batch `[N, ...]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NnError> {
        self.run(x, None)
    }

    /// Forward pass that also credits `ledger` with this batch's multiply+add count.
    pub fn forward_counted(&self, x: &Tensor, ledger: &mut FlopLedger) -> Result<Tensor, NnError> {
        let per_example = self.flop_ledger(&x.shape()[1..])?;
        let n = x.shape()[0] as u64;
        ledger.per_layer.resize(self.layers.len(), 0);
        for (acc, f) in ledger.per_layer.iter_mut().zip(&per_example.per_layer) {
            *acc += f * n;
        }
        self.forward(x)
    }

    pub fn forward_train(&self, x: &Tensor) -> Result<(Tensor, ForwardCache), NnError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let out = self.run(x, Some(&mut inputs))?;
        let output_shape = out.shape().to_vec();
        Ok((
            out,
            ForwardCache {
                inputs,
                output_shape,
            },
        ))
    }

    /// Back-propagates `grad_out` through the cached pass. Returns parameter
    /// gradients and the gradient with respect to the network input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &Tensor,
    ) -> Result<(Gradients, Tensor), NnError> {
        if grad_out.shape() != cache.output_shape.as_slice() {
            return Err(ShapeError::new(
                "network grad_out",
                format!("{:?}", cache.output_shape),
                format!("{:?}", grad_out.shape()),
            )
            .into());
        }
        let n = self.layers.len();
        // Extra gradient arriving at a layer's output through skips.
        let mut skip_grad: Vec<Option<Tensor>> = vec![None; n];
        let mut grads: Vec<Option<ParamGrads>> = vec![None; n];
        let mut g = grad_out.clone();
        for pos in (0..n).rev() {
            if let Some(extra) = skip_grad[pos].take() {
                g.add_assign(&extra)?;
            }
            let input = &cache.inputs[pos];
            let (gin, pg) = match &self.layers[pos] {
                Layer::Conv2d(c) => {
                    let (gx, pg) = ops::conv2d_backward(input, c, &g)?;
                    (gx, Some(pg))
                }
                Layer::Dense(d) => {
                    let (gx, pg) = ops::dense_backward(input, d, &g)?;
                    (gx, Some(pg))
                }
                Layer::Relu => (ops::relu_backward(input, &g)?, None),
            };
            grads[pos] = pg;
            // The layer input is (previous output + skip sources), so its
            // gradient flows unchanged to each summand.
            for s in self.skips.iter().filter(|s| s.to == pos) {
                match &mut skip_grad[s.from] {
                    Some(acc) => acc.add_assign(&gin)?,
                    slot @ None => *slot = Some(gin.clone()),
                }
            }
            g = gin;
        }
        Ok((Gradients { layers: grads }, g))
    }

    /// Static multiply+add count for one example of shape `input_shape` (no batch axis).
    pub fn flop_ledger(&self, input_shape: &[usize]) -> Result<FlopLedger, NnError> {
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(self.layers.len());
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut shape = input_shape.to_vec();
        for (pos, layer) in self.layers.iter().enumerate() {
            let mut flops = 0u64;
            for s in self.skips.iter().filter(|s| s.to == pos) {
                if shapes[s.from] != shape {
                    return Err(skip_shape_error(
                        *s,
                        ShapeError::new(
                            "skip operand",
                            format!("{:?}", shape),
                            format!("{:?}", shapes[s.from]),
                        ),
                    ));
                }
                flops += shape.iter().product::<usize>() as u64;
            }
            let (out_shape, layer_flops) = layer_flops(layer, &shape)?;
            per_layer.push(flops + layer_flops);
            shapes.push(out_shape.clone());
            shape = out_shape;
        }
        Ok(FlopLedger { per_layer })
    }
}

/// Total multiply+add count for one example of shape `input_shape`.
pub fn count_flops(net: &Network, input_shape: &[usize]) -> Result<u64, NnError> {
    Ok(net.flop_ledger(input_shape)?.total())
}

/// Closed-form count for a conv layer over an `h x w` map, one example.
pub fn conv2d_flops(conv: &Conv2d, h: usize, w: usize) -> u64 {
    let k = conv.kernel() as u64;
    2 * k * k * conv.in_channels() as u64 * conv.out_channels() as u64 * (h * w) as u64
}

pub fn dense_flops(dense: &Dense) -> u64 {
    2 * dense.in_features() as u64 * dense.out_features() as u64
}

fn layer_flops(layer: &Layer, shape: &[usize]) -> Result<(Vec<usize>, u64), NnError> {
    match layer {
        Layer::Conv2d(c) => {
            if shape.len() != 3 {
                return Err(ShapeError::new("conv2d example rank", 3, shape.len()).into());
            }
            if shape[0] != c.in_channels() {
                return Err(ShapeError::new("conv2d input channels", c.in_channels(), shape[0]).into());
            }
            Ok((
                vec![c.out_channels(), shape[1], shape[2]],
                conv2d_flops(c, shape[1], shape[2]),
            ))
        }
        Layer::Dense(d) => {
            let features: usize = shape.iter().product();
            if features != d.in_features() {
                return Err(ShapeError::new("dense in_features", d.in_features(), features).into());
            }
            Ok((vec![d.out_features()], dense_flops(d)))
        }
        Layer::Relu => Ok((shape.to_vec(), 0)),
    }
}

fn apply(layer: &Layer, x: &Tensor) -> Result<Tensor, NnError> {
    Ok(match layer {
        Layer::Conv2d(c) => ops::conv2d_forward(x, c)?,
        Layer::Dense(d) => ops::dense_forward(x, d)?,
        Layer::Relu => ops::relu_forward(x),
    })
}

fn skip_shape_error(s: Skip, e: ShapeError) -> NnError {
    NnError::Shape(ShapeError {
        dim: format!("skip {}->{}: {}", s.from, s.to, e.dim),
        ..e
    })
}

/// Symmetric encoder/decoder of `depth` same-padded 3x3 convolutions with
/// ReLU after all but the last. Conv `i` (1-based, odd, `i <= depth/2`)
/// feeds the input of conv `depth + 1 - i`.
pub fn build_skip_autoencoder(
    depth: usize,
    channels: usize,
    image_channels: usize,
    rng: &mut Rng,
) -> Result<Network, NnError> {
    if depth < 2 || !depth.is_multiple_of(2) {
        return Err(NnError::OddDepth(depth));
    }
    const KERNEL: usize = 3;
    let mut layers = Vec::with_capacity(2 * depth - 1);
    for i in 1..=depth {
        let cin = if i == 1 { image_channels } else { channels };
        let cout = if i == depth { image_channels } else { channels };
        layers.push(Layer::Conv2d(Conv2d::new(cin, cout, KERNEL, rng)));
        if i < depth {
            layers.push(Layer::Relu);
        }
    }
    // conv i sits at 2(i-1); its ReLU at 2i-1.
    let skips = (1..=depth / 2)
        .filter(|i| i % 2 == 1)
        .map(|i| Skip {
            from: 2 * i - 1,
            to: 2 * (depth - i),
        })
        .collect();
    Network::new(layers, skips)
}

/// Architecture of the classification pipeline: two conv+ReLU blocks,
/// flatten, then dense layers with ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierArch {
    /// `[C, H, W]` of one input image.
    pub input_shape: [usize; 3],
    pub num_classes: usize,
    pub conv_channels: usize,
    pub kernel: usize,
    pub fc_sizes: Vec<usize>,
}

impl Default for ClassifierArch {
    /// 64-channel convolutions and 384/192/10 dense layers on 3x32x32 images.
    fn default() -> Self {
        Self {
            input_shape: [3, 32, 32],
            num_classes: 10,
            conv_channels: 64,
            kernel: 5,
            fc_sizes: vec![384, 192, 10],
        }
    }
}

pub fn build_target_classifier(arch: &ClassifierArch, rng: &mut Rng) -> Result<Network, NnError> {
    let bad = |msg: String| Err(NnError::BadArchitecture(msg));
    match arch.fc_sizes.last() {
        None => return bad("fc_sizes is empty".into()),
        Some(&last) if last != arch.num_classes => {
            return bad(format!(
                "last fc size {last} != num_classes {}",
                arch.num_classes
            ))
        }
        _ => {}
    }
    if arch.num_classes < 2 || arch.conv_channels == 0 || arch.kernel.is_multiple_of(2) {
        return bad(format!("{arch:?}"));
    }
    let [c, h, w] = arch.input_shape;
    let mut layers = vec![
        Layer::Conv2d(Conv2d::new(c, arch.conv_channels, arch.kernel, rng)),
        Layer::Relu,
        Layer::Conv2d(Conv2d::new(arch.conv_channels, arch.conv_channels, arch.kernel, rng)),
        Layer::Relu,
    ];
    let mut features = arch.conv_channels * h * w;
    for (i, &size) in arch.fc_sizes.iter().enumerate() {
        if size == 0 {
            return bad("zero-width dense layer".into());
        }
        layers.push(Layer::Dense(Dense::new(features, size, rng)));
        if i + 1 < arch.fc_sizes.len() {
            layers.push(Layer::Relu);
        }
        features = size;
    }
    Network::new(layers, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autoencoder_skip_rule() {
        let mut rng = Rng::new(0);
        let net4 = build_skip_autoencoder(4, 4, 1, &mut rng).unwrap();
        assert_eq!(net4.conv_skip_pairs(), vec![(1, 4)]);
        let net10 = build_skip_autoencoder(10, 4, 1, &mut rng).unwrap();
        assert_eq!(net10.conv_skip_pairs(), vec![(1, 10), (3, 8), (5, 6)]);
        assert!(matches!(
            build_skip_autoencoder(5, 4, 1, &mut rng),
            Err(NnError::OddDepth(5))
        ));
    }

    #[test]
    fn autoencoder_preserves_shape() {
        let mut rng = Rng::new(1);
        for depth in [2, 4, 6, 10] {
            let net = build_skip_autoencoder(depth, 3, 1, &mut rng).unwrap();
            let x = Tensor::from_fn(&[1, 1, 16, 16], |_| rng.uniform());
            assert_eq!(net.forward(&x).unwrap().shape(), &[1, 1, 16, 16]);
        }
    }

    #[test]
    fn classifier_shapes() {
        let mut rng = Rng::new(2);
        let arch = ClassifierArch {
            input_shape: [1, 8, 8],
            num_classes: 2,
            conv_channels: 4,
            kernel: 3,
            fc_sizes: vec![8, 2],
        };
        let net = build_target_classifier(&arch, &mut rng).unwrap();
        let out = net.forward(&Tensor::zeros(&[3, 1, 8, 8])).unwrap();
        assert_eq!(out.shape(), &[3, 2]);

        let bad = ClassifierArch {
            fc_sizes: vec![8, 3],
            ..arch
        };
        assert!(matches!(
            build_target_classifier(&bad, &mut rng),
            Err(NnError::BadArchitecture(_))
        ));
    }

    #[test]
    fn flop_closed_forms() {
        let mut rng = Rng::new(3);
        let conv = Conv2d::new(1, 8, 3, &mut rng);
        assert_eq!(conv2d_flops(&conv, 16, 16), 36864);
        assert_eq!(dense_flops(&Dense::new(384, 192, &mut rng)), 147456);
    }

    #[test]
    fn counted_forward_matches_static_ledger() {
        let mut rng = Rng::new(4);
        let net = build_skip_autoencoder(4, 2, 1, &mut rng).unwrap();
        let mut ledger = FlopLedger::default();
        net.forward_counted(&Tensor::zeros(&[3, 1, 5, 5]), &mut ledger).unwrap();
        assert_eq!(ledger.total(), 3 * count_flops(&net, &[1, 5, 5]).unwrap());
    }

    #[test]
    fn bad_skip_rejected() {
        let err = Network::new(vec![Layer::Relu, Layer::Relu], vec![Skip { from: 1, to: 1 }]);
        assert!(err.is_err());
    }
}
