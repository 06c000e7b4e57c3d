use indexmap::IndexMap;

use super::eval::{report_from_outcomes, run_model};
use super::train::{check_channels, EpochStats, TrainItem, TrainSettings, Trainer};
use super::{
    dead_end_value, sample_from_outcome, EvalReport, ExperimentConfig, IndexedSample, LossKind, NamedInstance,
};
use crate::domains::{SearchDomain, StateOf};
use crate::losses::TrainingSample;
use crate::model::HeuristicModel;
use crate::{Error, Result, Scalar};

/// Trains a fresh or given model for `config.epochs` epochs on samples
/// paired with their instances.
pub fn train_model<D: SearchDomain, S: Scalar>(
    model: HeuristicModel<S>,
    items: &[TrainItem<'_, D>],
    config: &ExperimentConfig,
) -> Result<(HeuristicModel<S>, Vec<EpochStats>)> {
    check_channels::<D, S>(&model)?;
    if config.loss == LossKind::L2 && !config.skip_unlabeled {
        if let Some(item) = items.iter().find(|i| !i.sample.is_fully_labeled()) {
            let index = item.sample.states().position(|s| matches!(s.cost_to_go, crate::losses::CostToGo::Unknown));
            return Err(Error::UnlabeledState { sample: item.sample.instance_ref.clone(), index: index.unwrap_or(0) });
        }
    }
    let dead = dead_end_value(items.iter().map(|i| i.sample), config.dead_end_multiplier);
    let mut trainer = Trainer::new(model, config.lr, TrainSettings::from_config(config, dead));
    let mut log = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        log.push(trainer.epoch(items)?);
    }
    Ok((trainer.model, log))
}

#[derive(Debug, Clone)]
pub struct CurriculumResult<D: SearchDomain, S> {
    pub model: HeuristicModel<S>,
    /// Samples of the extended training set, each with the index of its
    /// instance in the combined instance list (training instances first).
    pub samples: Vec<IndexedSample<D>>,
    pub before: EvalReport,
    pub after: EvalReport,
    /// Test instances whose solutions were added.
    pub added: usize,
    pub log: Vec<EpochStats>,
}

/// One curriculum round: evaluate on `test`, turn the solved test instances
/// into samples, add them to the training set and fine-tune.
///
/// `train` and `test` are concatenated into one instance list; sample
/// indices refer to it. If nothing is solved the model is returned unchanged
/// and a warning is logged.
pub fn curriculum_round<D: SearchDomain, S: Scalar>(
    model: HeuristicModel<S>,
    train_samples: Vec<IndexedSample<D>>,
    train: &[NamedInstance<D>],
    test: &[NamedInstance<D>],
    optimal: &[Option<f64>],
    config: &ExperimentConfig,
) -> Result<CurriculumResult<D, S>> {
    check_channels::<D, S>(&model)?;
    let options = config.search_options();
    let outcomes = run_model(&model, test, options);
    let before = report_from_outcomes(test, &outcomes, optimal);
    let label = config.loss == LossKind::L2;
    let mut samples: IndexMap<String, IndexedSample<D>> =
        train_samples.into_iter().map(|(i, s)| (s.instance_ref.clone(), (i, s))).collect();
    let mut added = 0;
    for (j, (inst, outcome)) in test.iter().zip(&outcomes).enumerate() {
        if outcome.solved() {
            let sample = sample_from_outcome(&inst.name, &inst.instance, outcome, config, label)?;
            samples.insert(inst.name.clone(), (train.len() + j, sample));
            added += 1;
        }
    }
    if added == 0 {
        log::warn!("curriculum: the model solved no test instance; nothing to add");
        let after = before.clone();
        return Ok(CurriculumResult {
            model,
            samples: samples.into_values().collect(),
            before,
            after,
            added,
            log: Vec::new(),
        });
    }
    let samples: Vec<IndexedSample<D>> = samples.into_values().collect();
    let all: Vec<&NamedInstance<D>> = train.iter().chain(test).collect();
    let items: Vec<TrainItem<'_, D>> =
        samples.iter().map(|(i, s)| TrainItem { instance: &all[*i].instance, sample: s }).collect();
    let (model, log) = train_model(model, &items, config)?;
    let after = report_from_outcomes(test, &run_model(&model, test, options), optimal);
    Ok(CurriculumResult { model, samples, before, after, added, log })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapRow {
    pub epoch: usize,
    pub solved: usize,
    pub coverage: f64,
    pub mean_expanded: f64,
    /// Samples trained on after this row's evaluation.
    pub train_samples: usize,
}

/// Alternates solving and training, starting from `model` (usually
/// untrained). Row `e` is the coverage after `e` training epochs; each epoch
/// is one pass over every instance solved so far, using the sample from its
/// most recent solve.
pub fn bootstrap<D: SearchDomain, S: Scalar>(
    model: HeuristicModel<S>,
    instances: &[NamedInstance<D>],
    config: &ExperimentConfig,
) -> Result<(HeuristicModel<S>, Vec<BootstrapRow>)> {
    check_channels::<D, S>(&model)?;
    let options = config.search_options();
    let label = config.loss == LossKind::L2;
    let mut trainer = Trainer::new(model, config.lr, TrainSettings::from_config(config, 1.0));
    let mut solved: IndexMap<usize, TrainingSample<StateOf<D>, f64>> = IndexMap::new();
    let mut rows = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let outcomes = run_model(&trainer.model, instances, options);
        let n_solved = outcomes.iter().filter(|o| o.solved()).count();
        let mean_expanded = if instances.is_empty() {
            0.0
        } else {
            outcomes.iter().map(|o| o.expanded_count as f64).sum::<f64>() / instances.len() as f64
        };
        for (i, outcome) in outcomes.iter().enumerate() {
            if outcome.solved() {
                let n = &instances[i];
                solved.insert(i, sample_from_outcome(&n.name, &n.instance, outcome, config, label)?);
            }
        }
        solved.sort_keys();
        let train_samples = if epoch < config.epochs { solved.len() } else { 0 };
        rows.push(BootstrapRow {
            epoch,
            solved: n_solved,
            coverage: if instances.is_empty() { 0.0 } else { n_solved as f64 / instances.len() as f64 },
            mean_expanded,
            train_samples,
        });
        log::info!("bootstrap epoch {epoch}: solved {n_solved}/{}", instances.len());
        if epoch == config.epochs || solved.is_empty() {
            continue;
        }
        trainer.settings.dead_end_value = dead_end_value(solved.values(), config.dead_end_multiplier);
        let items: Vec<TrainItem<'_, D>> =
            solved.iter().map(|(&i, s)| TrainItem { instance: &instances[i].instance, sample: s }).collect();
        trainer.epoch(&items)?;
    }
    Ok((trainer.model, rows))
}

pub fn write_bootstrap_csv(rows: &[BootstrapRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "solved", "coverage", "mean_expanded", "train_samples"])?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            r.solved.to_string(),
            r.coverage.to_string(),
            r.mean_expanded.to_string(),
            r.train_samples.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
