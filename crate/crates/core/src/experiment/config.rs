use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domains::DomainKind;
use crate::losses::MonotoneDirection;
use crate::model::{ConvSpec, ModelConfig, Pooling};
use crate::search::{SearchOptions, TieBreak};
use crate::{Error, Result};

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "HEURLAB_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L2,
    #[default]
    Lstar,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::L2 => "l2",
            LossKind::Lstar => "lstar",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(LossKind::L2),
            "lstar" => Ok(LossKind::Lstar),
            other => Err(Error::InvalidArgument(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub conv_layers: usize,
    pub conv_channels: usize,
    pub kernel_size: usize,
    pub hidden_width: usize,
    pub coord_planes: bool,
    pub pooling: Pooling,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        ModelSection {
            conv_layers: d.conv_layers.len(),
            conv_channels: d.conv_layers[0].out_channels,
            kernel_size: d.conv_layers[0].kernel_size,
            hidden_width: d.hidden_width,
            coord_planes: d.coord_planes,
            pooling: d.pooling,
        }
    }
}

/// Every knob of an experiment. Loaded from a TOML file whose keys mirror
/// the field names; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    /// Rooms per side; the grid is `2n - 1` cells wide.
    pub maze_size: usize,
    pub wall_break_rate: f64,
    pub teleport_pairs: usize,
    /// Sokoban grid side, including the border wall.
    pub sokoban_size: usize,
    pub boxes: usize,
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    /// Expansion budget per search.
    pub budget: usize,
    /// State cap for exact cost-to-go labelling and optimal-cost lookups.
    pub labeling_budget: usize,
    pub tie_break: TieBreak,
    pub loss: LossKind,
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub monotone_direction: MonotoneDirection,
    /// Remove proven dead ends from the off-path states.
    pub drop_dead_ends: bool,
    /// L2 target for dead ends, as a multiple of the largest finite label.
    pub dead_end_multiplier: f64,
    /// Let L2 training ignore unlabelled states instead of failing.
    pub skip_unlabeled: bool,
    pub model: ModelSection,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainKind::Maze,
            maze_size: 10,
            wall_break_rate: 0.1,
            teleport_pairs: 4,
            sokoban_size: 8,
            boxes: 2,
            seed: 0,
            train_count: 200,
            test_count: 100,
            budget: SearchOptions::DEFAULT_BUDGET,
            labeling_budget: 1_000_000,
            tie_break: TieBreak::HighG,
            loss: LossKind::Lstar,
            margin: 0.0,
            lr: 0.001,
            epochs: 10,
            monotone_direction: MonotoneDirection::NonIncreasing,
            drop_dead_ends: false,
            dead_end_multiplier: 2.0,
            skip_unlabeled: false,
            model: ModelSection::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file (or the defaults when `path` is `None`) and applies
    /// the output directory override from the environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut config = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            config.output_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("maze_size", self.maze_size),
            ("sokoban_size", self.sokoban_size),
            ("boxes", self.boxes),
            ("budget", self.budget),
            ("labeling_budget", self.labeling_budget),
            ("model.conv_layers", self.model.conv_layers),
            ("model.conv_channels", self.model.conv_channels),
            ("model.hidden_width", self.model.hidden_width),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.maze_size < 2 || self.sokoban_size < 4 {
            return Err(Error::Config("maze_size must be at least 2 and sokoban_size at least 4".into()));
        }
        if !(0.0..=1.0).contains(&self.wall_break_rate) {
            return Err(Error::Config("wall_break_rate must lie in [0, 1]".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::Config("margin must be non-negative".into()));
        }
        if !(self.dead_end_multiplier > 0.0 && self.dead_end_multiplier.is_finite()) {
            return Err(Error::Config("dead_end_multiplier must be positive".into()));
        }
        self.model_config(4).validate()
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions { tie_break: self.tie_break, budget: self.budget, reopen: true }
    }

    pub fn model_config(&self, input_channels: usize) -> ModelConfig {
        ModelConfig {
            input_channels,
            coord_planes: self.model.coord_planes,
            conv_layers: vec![
                ConvSpec { out_channels: self.model.conv_channels, kernel_size: self.model.kernel_size };
                self.model.conv_layers
            ],
            pooling: self.model.pooling,
            hidden_width: self.model.hidden_width,
            seed: self.seed,
            ..ModelConfig::default()
        }
    }
}
