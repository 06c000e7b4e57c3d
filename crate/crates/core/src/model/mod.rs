//! Scale-free convolutional heuristic `h(s) >= 0`.
//!
//! Architecture: a stack of stride-1, same-padded convolutions with ReLU,
//! global pooling over the spatial dimensions, one ReLU dense layer and a
//! scalar softplus head. Global pooling makes the parameter count
//! independent of the grid size, so one model evaluates 15×15 and 60×60
//! inputs alike.
//!
//! Two options let the network localize single-cell objects such as the
//! agent: `coord_planes` appends the planes `x / (W - 1)` and `y / (H - 1)`
//! to the input, and [`Pooling::AverageMax`] concatenates global max pooling
//! to the average, so a feature firing at one cell is not diluted by the
//! grid area.

mod adam;
mod checkpoint;
mod network;

pub use adam::AdamState;
pub use network::ForwardCache;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputActivation {
    #[default]
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    Average,
    /// Average and max pooling, concatenated.
    #[default]
    AverageMax,
}

impl Pooling {
    pub fn name(self) -> &'static str {
        match self {
            Pooling::Average => "avg",
            Pooling::AverageMax => "avgmax",
        }
    }

    fn parse(text: &str) -> Option<Pooling> {
        match text {
            "avg" => Some(Pooling::Average),
            "avgmax" => Some(Pooling::AverageMax),
            _ => None,
        }
    }

    /// Pooled features per channel of the last convolution.
    pub fn width(self) -> usize {
        match self {
            Pooling::Average => 1,
            Pooling::AverageMax => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Planes produced by the domain encoding.
    pub input_channels: usize,
    pub coord_planes: bool,
    pub conv_layers: Vec<ConvSpec>,
    pub pooling: Pooling,
    pub hidden_width: usize,
    /// `h = output_scale · softplus(head)`, so outputs reach the size of
    /// typical path costs without huge weights.
    pub output_scale: u32,
    pub seed: u64,
    pub output_activation: OutputActivation,
}

impl Default for ModelConfig {
    /// Three 8-channel 3×3 convolutions over the four domain planes plus
    /// coordinates, average+max pooling, a 32-wide hidden layer and output
    /// scale 10.
    fn default() -> Self {
        ModelConfig {
            input_channels: 4,
            coord_planes: true,
            conv_layers: vec![ConvSpec { out_channels: 8, kernel_size: 3 }; 3],
            pooling: Pooling::AverageMax,
            hidden_width: 32,
            output_scale: 10,
            seed: 0,
            output_activation: OutputActivation::Softplus,
        }
    }
}

impl ModelConfig {
    /// Input channels of the first convolution.
    pub fn conv_input_channels(&self) -> usize {
        self.input_channels + if self.coord_planes { 2 } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_layers.is_empty() {
            return Err(Error::InvalidArgument("at least one convolution layer is required".into()));
        }
        if let Some(bad) = self.conv_layers.iter().find(|c| c.kernel_size % 2 == 0 || c.out_channels == 0) {
            return Err(Error::InvalidArgument(format!("invalid convolution {bad:?}: kernel must be odd")));
        }
        if self.input_channels == 0 || self.hidden_width == 0 || self.output_scale == 0 {
            return Err(Error::InvalidArgument(
                "channel and hidden widths and the output scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One named parameter tensor inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Where each tensor lives in the flat parameter vector.
///
/// Order: per convolution `conv{i}.weight [out, in, k, k]` then
/// `conv{i}.bias [out]`; `dense.weight [hidden, pooled]`
/// (`pooled` is the last channel count times the pooling width),
/// `dense.bias [hidden]`, `head.weight [hidden]`, `head.bias [1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub blocks: Vec<ParamBlock>,
}

impl ParamLayout {
    pub fn for_config(config: &ModelConfig) -> ParamLayout {
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let block = ParamBlock { name, shape, offset };
            offset += block.len();
            blocks.push(block);
        };
        let mut channels = config.conv_input_channels();
        for (i, conv) in config.conv_layers.iter().enumerate() {
            let k = conv.kernel_size;
            push(format!("conv{i}.weight"), vec![conv.out_channels, channels, k, k]);
            push(format!("conv{i}.bias"), vec![conv.out_channels]);
            channels = conv.out_channels;
        }
        push("dense.weight".into(), vec![config.hidden_width, channels * config.pooling.width()]);
        push("dense.bias".into(), vec![config.hidden_width]);
        push("head.weight".into(), vec![config.hidden_width]);
        push("head.bias".into(), vec![1]);
        ParamLayout { blocks }
    }

    pub fn param_count(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len())
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Parameters `θ` of the heuristic network plus their layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicModel<S> {
    config: ModelConfig,
    layout: ParamLayout,
    params: Vec<S>,
}

impl<S: Scalar> HeuristicModel<S> {
    /// He-style initialization: weights drawn from `N(0, 2 / fan_in)`,
    /// biases zero. Deterministic per `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::for_config(&config);
        let mut params = vec![S::zero(); layout.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for block in &layout.blocks {
            if !block.name.ends_with(".weight") {
                continue;
            }
            let fan_in: usize = if block.shape.len() == 1 { block.shape[0] } else { block.shape[1..].iter().product() };
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            for p in &mut params[block.range()] {
                *p = S::from_f64_lossy(normal.sample(&mut rng));
            }
        }
        Ok(HeuristicModel { config, layout, params })
    }

    pub fn from_parts(config: ModelConfig, params: Vec<S>) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::for_config(&config);
        if params.len() != layout.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "config needs {} parameters, got {}",
                layout.param_count(),
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {i} is not finite")));
        }
        Ok(HeuristicModel { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Converts every parameter to another scalar width.
    pub fn cast<T: Scalar>(&self) -> HeuristicModel<T> {
        HeuristicModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| T::from_f64_lossy(p.to_f64_lossy())).collect(),
        }
    }

    /// Applies one Adam update with the given gradient.
    pub fn adam_step(&mut self, grads: &[S], state: &mut AdamState<S>) -> Result<()> {
        state.step(&mut self.params, grads)
    }
}

#[cfg(test)]
mod tests;
