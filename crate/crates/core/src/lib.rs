//! Heuristic-search laboratory: an A* engine, maze and Sokoban domains, a
//! small scale-free convolutional heuristic model, ranking and regression
//! losses for training it, dataset construction, and experiment drivers.

pub mod dataset;
pub mod domains;
mod error;
pub mod experiment;
pub mod losses;
pub mod model;
mod scalar;
pub mod search;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations used by the experiment drivers.
pub type Real = f64;
pub type Model = model::HeuristicModel<Real>;
pub type MazeSample = losses::TrainingSample<domains::MazeState, Real>;
pub type SokobanSample = losses::TrainingSample<domains::SokobanState, Real>;
