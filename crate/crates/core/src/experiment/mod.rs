//! Experiment drivers: instance sets, training, evaluation, the curriculum
//! and bootstrap protocols, and the small hand-built counterexamples.
//!
//! Every driver is deterministic for a fixed config and seed. Searches over
//! different instances run in parallel but results are always collected in
//! instance order, and training visits samples in a seeded order.

pub mod commands;
mod config;
pub mod counterexample;
mod eval;
mod instances;
mod protocols;
mod train;

pub use config::{ExperimentConfig, LossKind, ModelSection, OUTPUT_DIR_ENV};
pub use eval::{
    eval_row, evaluate_model, optimal_cost, optimal_costs, report_from_outcomes, run_model, EvalReport, EvalRow,
};
pub use instances::{
    generate_set, instance_seed, list_instance_files, load_set, write_set, Generate, NamedInstance, Split,
};
pub use protocols::{bootstrap, curriculum_round, train_model, write_bootstrap_csv, BootstrapRow, CurriculumResult};
pub use train::{
    check_channels, model_heuristic, solve_with_base, solve_with_model, write_train_log, EpochStats, SampleStats,
    TrainItem, TrainSettings, Trainer,
};

use rayon::prelude::*;

use crate::dataset::{build_sample, drop_dead_ends, label_cost_to_go};
use crate::domains::{SearchDomain, StateOf};
use crate::losses::TrainingSample;
use crate::search::SearchOutcome;
use crate::Result;

/// A training sample with the index of its instance in some instance list.
pub type IndexedSample<D> = (usize, TrainingSample<StateOf<D>, f64>);

/// Turns a solved search into a training sample, labelled when `label` is set.
pub fn sample_from_outcome<D: SearchDomain>(
    name: &str,
    instance: &D,
    outcome: &SearchOutcome<StateOf<D>, f64>,
    config: &ExperimentConfig,
    label: bool,
) -> Result<TrainingSample<StateOf<D>, f64>> {
    let mut sample = build_sample(name, outcome)?;
    if label {
        label_cost_to_go(&mut sample, instance, config.labeling_budget)?;
        if config.drop_dead_ends {
            drop_dead_ends(&mut sample);
        }
    }
    Ok(sample)
}

/// Solves every instance with the base heuristic and returns
/// `(instance index, sample)` for the solved ones, in instance order.
pub fn base_training_samples<D: SearchDomain>(
    instances: &[NamedInstance<D>],
    config: &ExperimentConfig,
    label: bool,
) -> Result<Vec<IndexedSample<D>>> {
    let options = config.search_options();
    let results: Vec<Result<Option<IndexedSample<D>>>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, n)| {
            let outcome = solve_with_base(&n.instance, options);
            if !outcome.solved() {
                return Ok(None);
            }
            sample_from_outcome(&n.name, &n.instance, &outcome, config, label).map(|s| Some((i, s)))
        })
        .collect();
    results.into_iter().filter_map(Result::transpose).collect()
}

/// Largest finite label over the samples, times the configured multiplier.
pub fn dead_end_value<'a, St: 'a>(
    samples: impl IntoIterator<Item = &'a TrainingSample<St, f64>>,
    multiplier: f64,
) -> f64 {
    let max = samples
        .into_iter()
        .flat_map(|s| s.states())
        .filter_map(|s| match s.cost_to_go {
            crate::losses::CostToGo::Cost(c) => Some(c),
            _ => None,
        })
        .fold(1.0f64, f64::max);
    multiplier * max
}
